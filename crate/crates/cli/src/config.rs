//! Run configuration.
//!
//! A config is a TOML file. Every key is optional; anything missing takes the
//! documented default, and command-line flags override the file.
//!
//! ```toml
//! k = 0.5                    # quorum share, (0, 1]
//! n = 100                    # population
//! n_list = [100, 1000, 10000]
//! t1 = 0.1                   # reversible: first S vote time (> 0); default t_hat / 2
//! replicates = 10000         # per state, at least 1000
//! seed = 1                   # u64; a decimal string is accepted for values above i64::MAX
//! tol = 1e-10                # relative solver tolerance, (0, 1e-3]
//! cutoff = "finite"          # simulate: "finite" (solved t_hat) or "limit"
//! svg = false                # sweep: also render fig1.svg / fig2.svg
//! out = "out"                # output directory
//! workers = 0                # worker threads, 0 = all cores
//!
//! [params]                   # defaults are the canonical set
//! q0 = 0.6
//! rho_h = 0.8
//! rho_l = 0.2
//! lambda = 1.0
//! r = 0.1
//! s = 1.0
//! z = 2.0
//!
//! [grid]                     # sweep k-grid, uniform and inclusive
//! k_min = 0.0025
//! k_max = 1.0
//! points = 400
//! ```

use std::path::{Path, PathBuf};

use collexp::equilibrium::{DEFAULT_TOL, MAX_TOL};
use collexp::model::RawParams;
use collexp::simulator::MIN_REPLICATES;
use serde::{Deserialize, Serialize};

pub const DEFAULT_K: f64 = 0.5;
pub const DEFAULT_N: u64 = 100;
pub const DEFAULT_N_LIST: [u64; 3] = [100, 1000, 10_000];
pub const DEFAULT_REPLICATES: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_GRID: KGrid = KGrid {
    k_min: 0.0025,
    k_max: 1.0,
    points: 400,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffSource {
    /// The solved finite-population cut-off.
    Finite,
    /// The large-population limit cut-off.
    Limit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub points: usize,
}

impl KGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.k_min];
        }
        let span = self.k_max - self.k_min;
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.k_max } else { self.k_min + span * i as f64 / last })
            .collect()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsTable {
    q0: Option<f64>,
    rho_h: Option<f64>,
    rho_l: Option<f64>,
    lambda: Option<f64>,
    r: Option<f64>,
    s: Option<f64>,
    z: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridTable {
    k_min: Option<f64>,
    k_max: Option<f64>,
    points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SeedValue {
    Int(u64),
    Text(String),
}

/// The file as written, before defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    params: Option<ParamsTable>,
    k: Option<f64>,
    n: Option<u64>,
    n_list: Option<Vec<u64>>,
    t1: Option<f64>,
    replicates: Option<u64>,
    seed: Option<SeedValue>,
    tol: Option<f64>,
    cutoff: Option<CutoffSource>,
    svg: Option<bool>,
    out: Option<PathBuf>,
    workers: Option<usize>,
    grid: Option<GridTable>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k: Option<f64>,
    pub n: Option<u64>,
    pub t1: Option<f64>,
    pub replicates: Option<u64>,
    pub tol: Option<f64>,
    pub svg: bool,
    pub workers: Option<usize>,
}

/// Everything that determines a command's results. Serialized into the manifest and hashed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: RawParams,
    pub k: f64,
    pub n: u64,
    pub n_list: Vec<u64>,
    pub t1: Option<f64>,
    pub replicates: u64,
    pub seed: u64,
    pub tol: f64,
    pub cutoff: CutoffSource,
    pub svg: bool,
    pub grid: KGrid,
}

/// A resolved run: the config plus settings that cannot change results.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub config: RunConfig,
    pub out: PathBuf,
    pub workers: usize,
    /// Keys that fell back to their default.
    pub defaulted: Vec<String>,
}

pub fn resolve(file: ConfigFile, flags: Overrides) -> Result<Resolved, String> {
    let mut defaulted = Vec::new();
    let mut pick = |name: &str, from_flag: Option<f64>, from_file: Option<f64>, default: f64| {
        from_flag.or(from_file).unwrap_or_else(|| {
            defaulted.push(name.to_string());
            default
        })
    };

    let p = file.params.unwrap_or_default();
    let c = RawParams::CANONICAL;
    let params = RawParams {
        q0: pick("params.q0", None, p.q0, c.q0),
        rho_h: pick("params.rho_h", None, p.rho_h, c.rho_h),
        rho_l: pick("params.rho_l", None, p.rho_l, c.rho_l),
        lambda: pick("params.lambda", None, p.lambda, c.lambda),
        r: pick("params.r", None, p.r, c.r),
        s: pick("params.s", None, p.s, c.s),
        z: pick("params.z", None, p.z, c.z),
    };
    let k = pick("k", flags.k, file.k, DEFAULT_K);
    let tol = pick("tol", flags.tol, file.tol, DEFAULT_TOL);
    let gt = file.grid.unwrap_or_default();
    let k_min = pick("grid.k_min", None, gt.k_min, DEFAULT_GRID.k_min);
    let k_max = pick("grid.k_max", None, gt.k_max, DEFAULT_GRID.k_max);

    let mut note = |name: &str, present: bool| {
        if !present {
            defaulted.push(name.to_string());
        }
    };
    note("n", flags.n.or(file.n).is_some());
    note("n_list", file.n_list.is_some());
    note("t1", flags.t1.or(file.t1).is_some());
    note("replicates", flags.replicates.or(file.replicates).is_some());
    note("seed", flags.seed.is_some() || file.seed.is_some());
    note("cutoff", file.cutoff.is_some());
    note("grid.points", gt.points.is_some());

    let seed = match (flags.seed, file.seed) {
        (Some(s), _) => s,
        (None, Some(SeedValue::Int(s))) => s,
        (None, Some(SeedValue::Text(t))) => t
            .trim()
            .parse()
            .map_err(|_| format!("seed `{t}` is not an unsigned 64-bit integer"))?,
        (None, None) => DEFAULT_SEED,
    };

    let config = RunConfig {
        params,
        k,
        n: flags.n.or(file.n).unwrap_or(DEFAULT_N),
        n_list: file.n_list.unwrap_or_else(|| DEFAULT_N_LIST.to_vec()),
        t1: flags.t1.or(file.t1),
        replicates: flags.replicates.or(file.replicates).unwrap_or(DEFAULT_REPLICATES),
        seed,
        tol,
        cutoff: file.cutoff.unwrap_or(CutoffSource::Finite),
        svg: flags.svg || file.svg.unwrap_or(false),
        grid: KGrid {
            k_min,
            k_max,
            points: gt.points.unwrap_or(DEFAULT_GRID.points),
        },
    };
    check(&config)?;
    Ok(Resolved {
        config,
        out: flags.out.or(file.out).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        workers: flags.workers.or(file.workers).unwrap_or(0),
        defaulted,
    })
}

/// Range checks on run settings. Model parameters are checked separately so
/// that their violations get their own exit status.
fn check(c: &RunConfig) -> Result<(), String> {
    if !(c.k > 0.0 && c.k <= 1.0) {
        return Err(format!("k = {} must lie in (0, 1]", c.k));
    }
    if c.n == 0 {
        return Err("n must be at least 1".into());
    }
    if c.n_list.is_empty() || c.n_list[0] == 0 || c.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("n_list {:?} must be non-empty, positive and strictly increasing", c.n_list));
    }
    if let Some(t1) = c.t1 {
        if !(t1 > 0.0 && t1.is_finite()) {
            return Err(format!("t1 = {t1} must be positive and finite"));
        }
    }
    if c.replicates < MIN_REPLICATES {
        return Err(format!("replicates = {} is below the minimum of {MIN_REPLICATES}", c.replicates));
    }
    if !(c.tol > 0.0 && c.tol <= MAX_TOL) {
        return Err(format!("tol = {} must lie in (0, {MAX_TOL}]", c.tol));
    }
    let g = c.grid;
    if !(g.k_min > 0.0 && g.k_min <= g.k_max && g.k_max <= 1.0) || g.points == 0 || (g.points == 1 && g.k_min != g.k_max) {
        return Err(format!("grid {g:?} must satisfy 0 < k_min <= k_max <= 1 with at least one point"));
    }
    Ok(())
}
