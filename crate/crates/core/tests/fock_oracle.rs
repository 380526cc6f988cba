use std::f64::consts::PI;

use polsqueeze::fock::{self, ModeEnsemble, SamplingStrategy};
use polsqueeze::stokes::{nrf_exact, stokes_variances};
use polsqueeze::{Efficiency, StokesIndex};

fn eff(x: f64) -> Efficiency {
    Efficiency::new(x).unwrap()
}

#[test]
fn fock_engine_matches_closed_form_on_grid() {
    for gain in [0.1, 0.2, 0.5, 1.0] {
        for phi in [0.0, PI / 4.0, PI / 2.0, PI] {
            for eta in [1.0, 0.45] {
                for idx in StokesIndex::ALL {
                    let d = fock::stokes_measurement(gain, phi, idx, eff(eta)).unwrap();
                    let m = d.moments();
                    let tol = (10.0 * d.tail_bound()).max(1e-8);
                    let analytic = nrf_exact(idx, gain, phi, eff(eta)).unwrap();
                    let engine = m.nrf().unwrap();
                    assert!(
                        (engine - analytic).abs() <= tol,
                        "{idx:?} gain {gain} phi {phi} eta {eta}: {engine} vs {analytic}"
                    );
                    // the difference variance itself, not only the ratio
                    let var = stokes_variances(gain, phi, eff(eta), 1).unwrap().variance(idx);
                    assert!((m.var_diff - var).abs() <= tol * var.max(1.0));
                }
            }
        }
    }
}

#[test]
fn stokes_means_vanish_in_every_basis() {
    for idx in StokesIndex::ALL {
        let m = fock::stokes_measurement(0.7, 1.1, idx, eff(0.8)).unwrap().moments();
        assert!((m.mean1 - m.mean2).abs() < 1e-10, "{idx:?}");
    }
}

#[test]
fn squeezed_configuration_hits_one_minus_eta() {
    let d = fock::stokes_measurement(0.3, PI, StokesIndex::S2, eff(0.45)).unwrap();
    assert!((d.moments().nrf().unwrap() - 0.55).abs() < 1e-10);
    let s3 = fock::stokes_measurement(0.3, 0.0, StokesIndex::S3, eff(0.45)).unwrap();
    assert!((s3.moments().nrf().unwrap() - 0.55).abs() < 1e-10);
}

#[test]
fn asymmetric_losses_break_the_floor() {
    let sym = fock::stokes_measurement(0.3, PI, StokesIndex::S2, eff(0.45)).unwrap();
    let asym = fock::stokes_measurement_asymmetric(0.3, PI, StokesIndex::S2, eff(0.45), eff(0.3)).unwrap();
    assert!(asym.moments().nrf().unwrap() > sym.moments().nrf().unwrap());
}

fn sampled_nrf(counts: &[fock::PhotonCounts]) -> f64 {
    let n = counts.len() as f64;
    let diff: Vec<f64> = counts.iter().map(|c| c.n1 as f64 - c.n2 as f64).collect();
    let md = diff.iter().sum::<f64>() / n;
    let vd = diff.iter().map(|d| (d - md).powi(2)).sum::<f64>() / (n - 1.0);
    let ms = counts.iter().map(|c| (c.n1 + c.n2) as f64).sum::<f64>() / n;
    vd / ms
}

#[test]
fn monte_carlo_reproduces_squeezed_nrf() {
    let d = fock::stokes_measurement(0.3, PI, StokesIndex::S2, eff(0.45)).unwrap();
    let counts = fock::sample_pulses(&d, 1000, 30_000, 2024).unwrap();
    let nrf = sampled_nrf(&counts);
    assert!((nrf - 0.55).abs() < 0.03, "nrf {nrf}");
}

#[test]
fn exact_and_gaussian_sampling_agree_statistically() {
    let d = fock::stokes_measurement(0.3, 0.0, StokesIndex::S2, eff(0.45)).unwrap();
    let exact = ModeEnsemble::uniform(&d, 2000).unwrap().with_strategy(SamplingStrategy::Exact);
    let gauss = exact.clone().with_strategy(SamplingStrategy::Gaussian);
    let (a, b) = (sampled_nrf(&exact.sample(20_000, 3)), sampled_nrf(&gauss.sample(20_000, 3)));
    let expected = nrf_exact(StokesIndex::S2, 0.3, 0.0, eff(0.45)).unwrap();
    // each has a relative standard error near sqrt(2 / n), about 1%
    assert!((a - expected).abs() < 0.06 && (b - expected).abs() < 0.06, "{a} {b} {expected}");
}
