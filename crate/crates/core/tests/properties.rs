use collexp::asymptotics::{
    aggregation_threshold, interior_arrival_fraction, k_bar, k_hat, limit_cutoff, prob_no_winner,
    winner_fraction_limit,
};
use collexp::equilibrium::{indifference_rhs, DEFAULT_TOL};
use collexp::model::{
    belief_point, p_good_given_state, p_good_given_winners, p_state_h, ModelParams, RawParams, State,
};
use collexp::{solve_cutoff, QuorumRule};
use proptest::prelude::*;

/// Valid parameter sets, built so that both standing assumptions hold with some margin.
fn valid_params() -> impl Strategy<Value = ModelParams> {
    (0.3f64..0.95, 0.05f64..0.95, 0.3f64..3.0, 0.5f64..5.0, 0.05f64..0.95, 0.05f64..0.95, 0.02f64..1.0).prop_filter_map(
        "assumptions",
        |(rho_h, l_frac, lambda, z, s_frac, q_frac, r)| {
            let rho_l = 0.01 + l_frac * (rho_h - 0.05);
            let g = lambda * z;
            let s = rho_l * g + s_frac * (rho_h - rho_l) * g;
            let q_min = (s - rho_l * g) / ((rho_h - rho_l) * g);
            let q0 = q_min + q_frac * (1.0 - q_min);
            RawParams { q0, rho_h, rho_l, lambda, r, s, z }.validate().ok()
        },
    )
}

/// Posterior odds of `H` as a plain product of likelihood ratios.
fn direct_odds(p: &ModelParams, n: u64, k: u64, t: f64) -> f64 {
    let x = 1.0 - (-p.lambda() * t).exp();
    let (h, l) = (p.rho_h(), p.rho_l());
    let mut odds = p.q0() / (1.0 - p.q0());
    for _ in 0..k {
        odds *= h / l;
    }
    for _ in 0..n - k {
        odds *= (1.0 - h * x) / (1.0 - l * x);
    }
    odds
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn log_space_matches_direct_ratio(p in valid_params(), n in 1u64..=50, k_frac in 0.0f64..=1.0, t in 0.01f64..10.0) {
        let k = ((n as f64 * k_frac) as u64).min(n);
        let odds = direct_odds(&p, n, k, t);
        prop_assume!(odds.is_normal() && odds < 1e300);
        let direct = odds / (1.0 + odds);
        let logspace = p_state_h(&p, n, k, t).unwrap();
        prop_assert!(((logspace - direct) / direct).abs() <= 1e-10, "{logspace} vs {direct}");
    }

    #[test]
    fn beliefs_monotone_in_winners_and_time(p in valid_params(), n in 2u64..200, t in 0.05f64..5.0) {
        let dt = 1e-3;
        for k in 0..n {
            let here = p_good_given_winners(&p, n, k, t).unwrap();
            let more = p_good_given_winners(&p, n, k + 1, t).unwrap();
            let later = p_good_given_winners(&p, n, k, t + dt).unwrap();
            let ph = p_state_h(&p, n, k, t).unwrap();
            // with Pr(H) within 1e-9 of 0 or 1 the step in K is below double resolution
            if (1e-9..=1.0 - 1e-9).contains(&ph) {
                prop_assert!(more > here, "k={k}: {more} <= {here}");
            } else {
                prop_assert!(more >= here - 4.0 * f64::EPSILON * here);
            }
            prop_assert!(later < here);
            prop_assert!(p_state_h(&p, n, k + 1, t).unwrap() >= ph);
            prop_assert!(p_state_h(&p, n, k, t + dt).unwrap() <= ph);
        }
    }

    #[test]
    fn type_belief_decreases_in_time(p in valid_params()) {
        let horizon = 20.0 / p.lambda();
        for state in State::BOTH {
            let mut prev = p_good_given_state(&p, state, 0.0);
            for i in 1..=400 {
                let cur = p_good_given_state(&p, state, horizon * i as f64 / 400.0);
                prop_assert!(cur < prev || prev < 1e-12);
                prev = cur;
            }
        }
    }

    #[test]
    fn decomposition_is_exact(p in valid_params(), n in 1u64..300, k_frac in 0.0f64..=1.0, t in 0.01f64..10.0) {
        let k = ((n as f64 * k_frac) as u64).min(n);
        let b = belief_point(&p, n, k, t).unwrap();
        prop_assert_eq!(b.p_good, b.p_h * b.p_good_h + (1.0 - b.p_h) * b.p_good_l);
    }

    #[test]
    fn solver_residual_and_single_crossing(p in valid_params(), k in 0.02f64..=1.0, n in 1u64..=500) {
        let rule = QuorumRule::new(k, n).unwrap();
        let sol = solve_cutoff(&p, &rule, DEFAULT_TOL).unwrap();
        prop_assert!(sol.residual.abs() <= DEFAULT_TOL * p.s());
        let excess = |t: f64| indifference_rhs(&p, &rule, t).unwrap() - p.s();
        let (lo, hi) = (1e-6 / p.lambda(), 3.0 * sol.t_hat + 10.0 / p.lambda());
        let mut prev_t = lo;
        let mut prev = excess(lo);
        let mut changes = 0;
        for i in 1..=1000 {
            let t = lo + (hi - lo) * i as f64 / 1000.0;
            let cur = excess(t);
            if (prev > 0.0) != (cur > 0.0) {
                changes += 1;
            }
            if prev + p.s() > 0.0 && cur + p.s() > 0.0 && t > prev_t {
                prop_assert!(cur <= prev, "f increases between {prev_t} and {t}");
            }
            prev = cur;
            prev_t = t;
        }
        prop_assert_eq!(changes, 1);
    }

    #[test]
    fn limit_cutoff_shape(p in valid_params()) {
        let kb = k_bar(&p);
        let mut prev = limit_cutoff(&p, 1e-3).unwrap();
        for i in 2..=1000 {
            let k = i as f64 * 1e-3;
            let cur = limit_cutoff(&p, k).unwrap();
            prop_assert!(cur >= prev - 1e-12);
            if k < kb {
                prop_assert!(cur > prev);
            }
            prev = cur;
        }
    }

    #[test]
    fn fractions_against_diagonal(p in valid_params()) {
        let k_star = aggregation_threshold(&p);
        for i in 1..=200 {
            let k = i as f64 / 200.0;
            let h = winner_fraction_limit(&p, State::H, k).unwrap();
            let l = winner_fraction_limit(&p, State::L, k).unwrap();
            if k < k_star - 1e-9 {
                prop_assert!(h > k && k > l, "k={k}: {h} {l}");
            } else if k > k_star + 1e-9 {
                prop_assert!(h < k, "k={k}: {h}");
            }
        }
    }

    #[test]
    fn interior_fraction_solves_defining_equation(p in valid_params()) {
        let kh = k_hat(&p);
        let mut k = 0.01;
        while k < kh - 0.01 {
            let x = interior_arrival_fraction(&p, k).unwrap();
            let (h, l) = (p.rho_h(), p.rho_l());
            let residual = k * (h / l).ln() + (1.0 - k) * ((-h * x).ln_1p() - (-l * x).ln_1p());
            prop_assert!(residual.abs() < 1e-12, "k={k}: {residual}");
            k += 0.01;
        }
    }
}

#[test]
fn canonical_limit_cutoff_grid_shape() {
    let p = ModelParams::canonical();
    let kb = k_bar(&p);
    let t_bar = 4f64.ln();
    let mut prev = limit_cutoff(&p, 1e-3).unwrap();
    for i in 2..=1000 {
        let k = i as f64 * 1e-3;
        let cur = limit_cutoff(&p, k).unwrap();
        assert!(cur >= prev);
        if k < kb {
            assert!(cur > prev);
        } else {
            assert!((cur - t_bar).abs() < 1e-9);
        }
        prev = cur;
    }
}

#[test]
fn unanimity_cannot_separate_states() {
    // 1 - P_H <= (rho_H / rho_L) * (-ln P_L): whenever no-winner odds in L tend to one, so do those in H.
    let p = ModelParams::canonical();
    let ratio = p.rho_h() / p.rho_l();
    for n in [10u64, 100, 1_000, 10_000, 100_000, 1_000_000] {
        for i in 0..=2000 {
            let t = 10f64.powf(-8.0 + 9.0 * i as f64 / 2000.0);
            let ph = prob_no_winner(&p, State::H, t, n);
            let pl = prob_no_winner(&p, State::L, t, n);
            assert!(1.0 - ph <= ratio * -pl.ln() + 1e-12, "N={n} t={t}: {ph} {pl}");
            assert!(!(ph < 0.01 && pl > 0.99), "N={n} t={t}: {ph} {pl}");
        }
    }
}
