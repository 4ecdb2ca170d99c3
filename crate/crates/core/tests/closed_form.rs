mod common;

use common::{rel_err, Coeffs};
use privmkt::closed_form::{
    profits_from_c_tilde, stage1_dominated_factors, stage1_foc_residuals, stage1_reduced_profits, stage2_best_responses,
    stage2_qos,
};
use privmkt::{check_feasibility, derived_constants, market_shares, solve_duopoly, sp_profit, Distribution, Params, Profile};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn params_with(t: f64, eps_bar: f64, p1: f64, p2: f64) -> Params {
    Params::new(0.5, 0.75, 0.7, t, eps_bar, vec![p1, p2]).unwrap()
}

/// Feasible points over a grid of t, eps_bar and revenue gaps.
fn feasible_grid() -> Vec<Params> {
    let mut out = Vec::new();
    for ti in 0..5 {
        for ei in 0..5 {
            for gi in 0..4 {
                let t = 0.6 + 0.06 * ti as f64;
                let eb = 3.0 + 0.5 * ei as f64;
                let dp = 0.25 + 0.1 * gi as f64;
                let p = params_with(t, eb, 0.4, 0.4 + dp);
                if check_feasibility(&p).unwrap().all_feasible {
                    out.push(p);
                }
            }
        }
    }
    out
}

#[test]
fn baseline_matches_reference_oracle() {
    let sol = solve_duopoly(&Params::baseline(0.7, 5.0).unwrap()).unwrap();
    let want = Coeffs::table(0.7, 5.0).equilibrium().fields();
    let got = [sol.eps1, sol.eps2, sol.v1, sol.v2, sol.x_tau, sol.pi1, sol.pi2];
    for (g, w) in got.iter().zip(want) {
        assert!(rel_err(*g, w) < 1e-7, "{g} vs {w}");
    }
    let approx = [0.9345, 4.6845, 0.6282, 2.7991, 0.2968, 0.1156, 0.6490];
    for (g, a) in got.iter().zip(approx) {
        assert!((g - a).abs() < 1e-4, "{g} vs {a}");
    }
}

#[test]
fn reference_oracle_agrees_off_baseline() {
    for (t, eb) in [(0.59, 3.0), (0.85, 4.0), (0.7, 3.5)] {
        let sol = solve_duopoly(&Params::baseline(t, eb).unwrap()).unwrap();
        let want = Coeffs::table(t, eb).equilibrium().fields();
        let got = [sol.eps1, sol.eps2, sol.v1, sol.v2, sol.x_tau, sol.pi1, sol.pi2];
        for (g, w) in got.iter().zip(want) {
            assert!(rel_err(*g, w) < 1e-7, "t={t} eb={eb}: {g} vs {w}");
        }
    }
}

#[test]
fn constants_and_feasibility_examples() {
    let p = Params::baseline(0.7, 5.0).unwrap();
    let (alpha, ct) = derived_constants(&p);
    assert!((alpha - 0.65).abs() < 1e-12);
    assert!((ct - 1.75).abs() < 1e-12);
    let f = check_feasibility(&p).unwrap();
    assert!(f.all_feasible);
    assert!((f.cond_eps.value - 0.406_349_206_349_206_3).abs() < 1e-9);
    assert!((f.cond_eps.lower - 5.0 / 21.0).abs() < 1e-9);
    assert!((f.cond_eps.upper - 19.0 / 21.0).abs() < 1e-9);
    assert!((f.cond_coverage.lhs - 295.9875).abs() < 1e-6);
    assert!((f.cond_coverage.rhs - 40.96).abs() < 1e-9);

    let f = check_feasibility(&Params::baseline(0.5, 5.0).unwrap()).unwrap();
    assert!(!f.all_feasible && f.cond_share.ok && f.cond_coverage.ok && !f.cond_eps.ok);
    assert!((f.cond_eps.value - 0.568_888_888_888_889).abs() < 1e-9);
    assert!((f.cond_eps.lower - 0.733_333_333_333_333_3).abs() < 1e-9);

    let sym = params_with(0.7, 5.0, 0.6, 0.6);
    assert_eq!(check_feasibility(&sym).unwrap().cond_share.value, 0.0);
    let (alpha, _) = derived_constants(&Params::new(0.5, 1.4, 0.7, 0.7, 5.0, vec![0.4, 0.8]).unwrap());
    assert_eq!(alpha, 0.0);
}

#[test]
fn symmetric_revenues_split_evenly() {
    for t in [0.7, 0.9] {
        let p = params_with(t, 5.0, 0.6, 0.6);
        let sol = solve_duopoly(&p).unwrap();
        let even = 4.0 * 0.5 / (27.0 * t * 5.0) * (9.0 * t * 5.0 / 8.0_f64).powi(2);
        assert!((sol.x_tau - 0.5).abs() < 1e-12);
        assert!((sol.pi1 - even).abs() < 1e-12 && (sol.pi2 - even).abs() < 1e-12);
    }
    // Equal revenues satisfy the risk band only once 3t >= 4 alpha.
    let p = params_with(0.9, 5.0, 0.6, 0.6);
    let sol = solve_duopoly(&p).unwrap();
    assert!(sol.feasibility.all_feasible);
    let d = Distribution::uniform(5.0).unwrap();
    let split = market_shares(&p, &d, &sol.profile()).unwrap();
    assert!((split.shares[0] - 0.5).abs() < 1e-9);
    assert!((split.shares[1] - 0.5).abs() < 1e-9);
}

#[test]
fn identities_hold_on_feasible_grid() {
    let grid = feasible_grid();
    assert!(grid.len() >= 40, "only {} feasible points", grid.len());
    for p in &grid {
        let sol = solve_duopoly(p).unwrap();
        let (c, t, eb) = (p.c, p.t, p.eps_bar);
        let dp = p.p[1] - p.p[0];
        let d = Distribution::uniform(eb).unwrap();
        let profile = sol.profile();

        assert!((sol.eps2 - sol.eps1 - 0.75 * eb).abs() <= 1e-9);

        let split = market_shares(p, &d, &profile).unwrap();
        let x_tau = 0.5 - 8.0 * dp / (9.0 * c * t * eb);
        assert!((split.shares[0] - x_tau).abs() <= 1e-9);

        let (pi1, pi2) = profits_from_c_tilde(sol.c_tilde, dp);
        assert!((pi1 - sol.pi1).abs() <= 1e-9 && (pi2 - sol.pi2).abs() <= 1e-9);
        assert!((sp_profit(p, &d, &profile, 0).unwrap() - sol.pi1).abs() <= 1e-9);
        assert!((sp_profit(p, &d, &profile, 1).unwrap() - sol.pi2).abs() <= 1e-9);

        assert!(sol.v1 - t * (sol.eps1 / eb) * sol.eps1 >= -1e-9);

        let (v1, v2) = stage2_qos(p, sol.eps1, sol.eps2).unwrap();
        assert!((v1 - sol.v1).abs() <= 1e-9 && (v2 - sol.v2).abs() <= 1e-9);
        let (b1, b2) = stage2_best_responses(p, sol.eps1, sol.eps2, v1, v2).unwrap();
        assert!((b1 - v1).abs() <= 1e-9 && (b2 - v2).abs() <= 1e-9);

        let (r1, r2) = stage1_reduced_profits(p, sol.eps1, sol.eps2).unwrap();
        assert!((r1 - sol.pi1).abs() <= 1e-9 && (r2 - sol.pi2).abs() <= 1e-9);
        let (f1, f2) = stage1_foc_residuals(p, sol.eps1, sol.eps2).unwrap();
        assert!(f1.abs() <= 1e-9 && f2.abs() <= 1e-9);
    }
}

#[test]
fn residual_moves_off_the_root() {
    let p = Params::baseline(0.7, 5.0).unwrap();
    let sol = solve_duopoly(&p).unwrap();
    let (f1, _) = stage1_foc_residuals(&p, sol.eps1 + 0.1, sol.eps2).unwrap();
    assert!(f1.abs() > 1e-3);
}

#[test]
fn stage2_pair_is_qos_stationary() {
    let p = Params::baseline(0.7, 5.0).unwrap();
    let d = Distribution::uniform(5.0).unwrap();
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..50 {
        let e1 = rng.gen_range(0.0..2.0);
        let e2 = rng.gen_range(3.0..5.0);
        let (v1, v2) = stage2_qos(&p, e1, e2).unwrap();
        let h = 1e-5;
        for i in 0..2 {
            let profit = |dv: f64| {
                let mut v = [v1, v2];
                v[i] += dv;
                sp_profit(&p, &d, &Profile::from_parts(&[e1, e2], &v), i).unwrap()
            };
            let slope = (profit(h) - profit(-h)) / (2.0 * h);
            let split = market_shares(&p, &d, &Profile::from_parts(&[e1, e2], &[v1, v2])).unwrap();
            if split.corner {
                continue;
            }
            assert!(slope.abs() <= 1e-6, "e=({e1},{e2}) sp {i}: {slope}");
        }
    }
}

#[test]
fn reduced_profits_match_full_pipeline() {
    let p = Params::baseline(0.7, 5.0).unwrap();
    let d = Distribution::uniform(5.0).unwrap();
    let mut rng = StdRng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 100 {
        let e1 = rng.gen_range(0.0..5.0);
        let e2 = rng.gen_range(0.0..5.0);
        if e2 - e1 < 0.5 {
            continue;
        }
        let (v1, v2) = stage2_qos(&p, e1, e2).unwrap();
        let profile = Profile::from_parts(&[e1, e2], &[v1, v2]);
        let split = market_shares(&p, &d, &profile).unwrap();
        if split.corner {
            continue;
        }
        let (r1, r2) = stage1_reduced_profits(&p, e1, e2).unwrap();
        assert!((r1 - sp_profit(&p, &d, &profile, 0).unwrap()).abs() <= 1e-9);
        assert!((r2 - sp_profit(&p, &d, &profile, 1).unwrap()).abs() <= 1e-9);
        checked += 1;
    }
}

#[test]
fn residual_signs_match_profit_slopes() {
    let p = Params::baseline(0.7, 5.0).unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 100 {
        let e1 = rng.gen_range(0.0..5.0);
        let e2 = rng.gen_range(0.0..5.0);
        if e2 - e1 < 0.5 {
            continue;
        }
        let (b1, b2) = stage1_dominated_factors(&p, e1, e2).unwrap();
        if b1 <= 1e-3 || b2 <= 1e-3 {
            continue;
        }
        let (f1, f2) = stage1_foc_residuals(&p, e1, e2).unwrap();
        let h = 1e-6;
        let d1 = (stage1_reduced_profits(&p, e1 + h, e2).unwrap().0 - stage1_reduced_profits(&p, e1 - h, e2).unwrap().0)
            / (2.0 * h);
        let d2 = (stage1_reduced_profits(&p, e1, e2 + h).unwrap().1 - stage1_reduced_profits(&p, e1, e2 - h).unwrap().1)
            / (2.0 * h);
        let gap = e2 - e1;
        let scale = |b: f64| p.c * b / (9.0 * p.t * gap * gap);
        assert!((d1 - scale(b1) * f1).abs() <= 1e-6 * (1.0 + d1.abs()), "{d1} vs {}", scale(b1) * f1);
        assert!((d2 - scale(b2) * f2).abs() <= 1e-6 * (1.0 + d2.abs()), "{d2} vs {}", scale(b2) * f2);
        if f1.abs() > 1e-6 {
            assert_eq!(d1 > 0.0, f1 > 0.0);
        }
        if f2.abs() > 1e-6 {
            assert_eq!(d2 > 0.0, f2 > 0.0);
        }
        checked += 1;
    }
}

#[test]
fn dominated_roots_zero_the_profit() {
    // b1 = 0 along eps1 for fixed eps2; solve the linear-in-eps1 quadratic by bisection.
    let p = Params::baseline(0.7, 5.0).unwrap();
    let e2 = 4.5;
    let b1 = |e1: f64| stage1_dominated_factors(&p, e1, e2).unwrap().0;
    let (mut lo, mut hi) = (0.0, 4.0);
    assert!(b1(lo).signum() != b1(hi).signum());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if b1(mid).signum() == b1(lo).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let pi1 = stage1_reduced_profits(&p, 0.5 * (lo + hi), e2).unwrap().0;
    assert!(pi1.abs() < 1e-12);
}

#[test]
fn profits_rise_with_c_tilde() {
    for dp in [0.2, 0.4] {
        let mut prev: Option<(f64, f64, f64)> = None;
        for k in 0..40 {
            let t = 0.58 + 0.007 * k as f64;
            let p = params_with(t, 5.0, 0.4, 0.4 + dp);
            if !check_feasibility(&p).unwrap().all_feasible {
                continue;
            }
            let sol = solve_duopoly(&p).unwrap();
            if let Some((ct, pi1, pi2)) = prev {
                assert!(sol.c_tilde > ct);
                assert!(sol.pi1 >= pi1 && sol.pi2 >= pi2, "dp={dp} t={t}");
            }
            prev = Some((sol.c_tilde, sol.pi1, sol.pi2));
        }
        assert!(prev.is_some());
    }
}

#[test]
fn infeasible_parameters_still_solve() {
    let sol = solve_duopoly(&Params::baseline(0.5, 5.0).unwrap()).unwrap();
    assert!(!sol.feasibility.all_feasible);
    assert!((sol.eps2 - sol.eps1 - 3.75).abs() < 1e-12);
}

#[test]
fn generic_over_f32() {
    let p = privmkt::MarketParams::<f32>::baseline(0.7, 5.0).unwrap();
    let sol = solve_duopoly(&p).unwrap();
    assert!((sol.eps2 - 4.684_524).abs() < 1e-4);
    assert!((sol.x_tau - 0.296_825_4).abs() < 1e-4);
    assert!((sol.pi2 - 0.648_971_6).abs() < 1e-4);
}
