use std::f64::consts::PI;

use polsqueeze::fitting::{
    fit_gain_curve, fit_nrf_curve, gain_model, synthetic_gain_points, synthetic_nrf_points, FitPoint, FitProblem,
};
use polsqueeze::spectral::{QuartzPlatePair, PUMP_WAVELENGTH_NM};
use polsqueeze::{Result, StokesIndex};
use proptest::prelude::*;

const KAPPA: f64 = 0.31;
const MODES: f64 = 120.0;
const P_MAX: f64 = 120.0;

fn plates() -> impl Fn(f64) -> Result<f64> {
    let p = QuartzPlatePair::default();
    move |a| p.phase_from_tilt(a, PUMP_WAVELENGTH_NM)
}

fn tilts(n: usize) -> Vec<f64> {
    (0..n).map(|i| 30.0 * i as f64 / (n - 1) as f64).collect()
}

fn wrapped_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

#[test]
fn jacobian_matches_analytic_derivative_of_gain_law() {
    let points: Vec<FitPoint> = [3.0, 20.0, 75.0, 120.0].iter().map(|&p| FitPoint::new(p, 0.0)).collect();
    let problem = FitProblem {
        name: "gain".into(),
        points: points.clone(),
        model: Box::new(gain_model),
        bounds: vec![(0.0, 10.0), (0.0, 1e6)],
        initial_guess: vec![KAPPA, MODES],
    };
    let jac = problem.jacobian(&[KAPPA, MODES]);
    for (i, pt) in points.iter().enumerate() {
        let g = KAPPA * pt.x.sqrt();
        let d_kappa = MODES * (2.0 * g).sinh() * pt.x.sqrt();
        let d_m = g.sinh().powi(2);
        assert!((jac[(i, 0)] - d_kappa).abs() < 1e-5 * d_kappa.abs());
        assert!((jac[(i, 1)] - d_m).abs() < 1e-5 * d_m.abs());
    }
}

#[test]
fn noiseless_gain_curve_recovered_exactly() {
    let fit = fit_gain_curve(&synthetic_gain_points(KAPPA, MODES, P_MAX, 12, 0.0, 1)).unwrap();
    assert!((fit.kappa - KAPPA).abs() < 1e-8 * KAPPA, "{}", fit.kappa);
    assert!((fit.modes - MODES).abs() < 1e-8 * MODES, "{}", fit.modes);
}

fn relative_weights(mut pts: Vec<FitPoint>, noise: f64) -> Vec<FitPoint> {
    for p in &mut pts {
        p.weight = 1.0 / (noise * p.y).powi(2);
    }
    pts
}

#[test]
fn tight_focus_gain_recovered_within_ten_percent() {
    // kappa is pinned by the curvature; m trades off against it through
    // m exp(2 kappa sqrt(P)), so single replications can stray past 10%
    let mut m_hits = 0;
    for seed in 0..100 {
        let pts = relative_weights(synthetic_gain_points(KAPPA, MODES, P_MAX, 12, 0.05, seed), 0.05);
        let fit = fit_gain_curve(&pts).unwrap();
        assert!((fit.kappa / KAPPA - 1.0).abs() < 0.1, "seed {seed}: kappa {}", fit.kappa);
        assert!((fit.gamma_max / (KAPPA * P_MAX.sqrt()) - 1.0).abs() < 0.1);
        if (fit.modes / MODES - 1.0).abs() < 0.1 {
            m_hits += 1;
        }
    }
    assert!(m_hits >= 85, "m within 10% in {m_hits}/100 replications");
}

#[test]
fn unit_weights_still_pin_kappa_on_average() {
    let n = 50;
    let mean = (0..n)
        .map(|seed| fit_gain_curve(&synthetic_gain_points(KAPPA, MODES, P_MAX, 12, 0.05, seed)).unwrap().kappa)
        .sum::<f64>()
        / n as f64;
    assert!((mean / KAPPA - 1.0).abs() < 0.02, "{mean}");
}

#[test]
fn soft_focus_gain_is_nearly_degenerate() {
    let kappa = 0.8 / P_MAX.sqrt();
    let modes = 1500.0 / 0.8f64.sinh().powi(2);
    let fit = fit_gain_curve(&synthetic_gain_points(kappa, modes, P_MAX, 12, 0.05, 3)).unwrap();
    assert!(fit.correlation.abs() > 0.99, "{}", fit.correlation);
}

#[test]
fn rescaling_power_units_rescales_kappa() {
    let mw = synthetic_gain_points(KAPPA, MODES, P_MAX, 12, 0.05, 9);
    let w: Vec<FitPoint> = mw.iter().map(|p| FitPoint { x: p.x / 1000.0, ..*p }).collect();
    let (a, b) = (fit_gain_curve(&mw).unwrap(), fit_gain_curve(&w).unwrap());
    assert!((b.kappa / (a.kappa * 1000f64.sqrt()) - 1.0).abs() < 1e-6);
    assert!((b.modes / a.modes - 1.0).abs() < 1e-6);
    assert!((b.result.residual_norm / a.result.residual_norm - 1.0).abs() < 1e-6);
}

#[test]
fn too_few_gain_points_rejected() {
    let pts = synthetic_gain_points(KAPPA, MODES, P_MAX, 3, 0.0, 0);
    assert!(fit_gain_curve(&pts).is_err());
}

#[test]
fn nrf_sweep_recovers_efficiency() {
    let map = plates();
    for seed in 0..20 {
        for index in [StokesIndex::S2, StokesIndex::S3] {
            let pts = synthetic_nrf_points(0.45, 0.3, index, &tilts(31), &map, 0.02, seed).unwrap();
            let fit = fit_nrf_curve(&pts, &map, index).unwrap();
            assert!((fit.efficiency - 0.45).abs() < 0.03, "{index:?} seed {seed}: {}", fit.efficiency);
            assert!(wrapped_gap(fit.phase_offset, 0.3) < 0.2);
        }
    }
}

#[test]
fn flat_nrf_has_no_phase() {
    let map = plates();
    let pts: Vec<FitPoint> = tilts(15).into_iter().map(|a| FitPoint::new(a, 1.0)).collect();
    let fit = fit_nrf_curve(&pts, &map, StokesIndex::S2).unwrap();
    assert!(fit.efficiency.abs() < 1e-12);
    assert_eq!(fit.result.unidentifiable, vec![1]);
    assert!(fit.result.covariance[(1, 1)].is_infinite());
}

#[test]
fn complementary_curves_agree() {
    let map = plates();
    let s2 = synthetic_nrf_points(0.45, 0.3, StokesIndex::S2, &tilts(31), &map, 0.02, 5).unwrap();
    let s3 = synthetic_nrf_points(0.45, 0.3, StokesIndex::S3, &tilts(31), &map, 0.02, 5).unwrap();
    let (a, b) = (
        fit_nrf_curve(&s2, &map, StokesIndex::S2).unwrap(),
        fit_nrf_curve(&s3, &map, StokesIndex::S3).unwrap(),
    );
    let joint = (a.result.std_errors()[0].powi(2) + b.result.std_errors()[0].powi(2)).sqrt();
    assert!((a.efficiency - b.efficiency).abs() < 3.0 * joint);
    // the sign flip between the models is the pi offset of the curves
    assert!(wrapped_gap(a.phase_offset, b.phase_offset) < 0.2);
    let (x, y) = (map(12.0).unwrap() + a.phase_offset, map(12.0).unwrap() + b.phase_offset);
    assert!((a.efficiency * x.cos() + b.efficiency * (y + PI).cos()).abs() < 0.1);
}

#[test]
fn uncertainty_shrinks_with_more_points() {
    let map = plates();
    let mean_se = |n: usize| {
        (0..10)
            .map(|seed| {
                let pts = synthetic_nrf_points(0.45, 0.3, StokesIndex::S2, &tilts(n), &map, 0.02, seed).unwrap();
                fit_nrf_curve(&pts, &map, StokesIndex::S2).unwrap().result.std_errors()[0]
            })
            .sum::<f64>()
            / 10.0
    };
    let ratio = mean_se(20) / mean_se(80);
    assert!((ratio - 2.0).abs() < 0.4, "{ratio}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn accepted_costs_are_monotone_and_covariance_is_psd(seed in 0u64..1000, kappa in 0.1f64..0.35, modes in 10.0f64..1000.0) {
        let fit = fit_gain_curve(&synthetic_gain_points(kappa, modes, P_MAX, 12, 0.05, seed)).unwrap();
        let h = &fit.result.cost_history;
        prop_assert!(h.windows(2).all(|w| w[1] <= w[0]));
        let c = &fit.result.covariance;
        prop_assert!((c[(0, 1)] - c[(1, 0)]).abs() <= 1e-12 * (c[(0, 0)] * c[(1, 1)]).sqrt());
        prop_assert!(c[(0, 0)] >= 0.0 && c[(1, 1)] >= 0.0);
        prop_assert!(c[(0, 0)] * c[(1, 1)] - c[(0, 1)].powi(2) >= -1e-9 * c[(0, 0)] * c[(1, 1)]);
    }
}
