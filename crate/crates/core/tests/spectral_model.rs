use polsqueeze::spectral::{
    default_grid, pdc_spectrum, relative_phase, squeezed_fraction, Alignment, BboSellmeier, CascadeModel,
    PUMP_WAVELENGTH_NM,
};

const SETS: [BboSellmeier; 2] = [BboSellmeier::Eimerl1987, BboSellmeier::Kato1986];

fn model(alignment: Alignment, set: BboSellmeier) -> CascadeModel {
    CascadeModel::reference(alignment, set).unwrap()
}

#[test]
fn degenerate_beats_nondegenerate_for_every_table() {
    for set in SETS {
        let deg = model(Alignment::Degenerate, set).squeezed_fraction().unwrap();
        let non = model(Alignment::nondegenerate(), set).squeezed_fraction().unwrap();
        assert!(deg.fraction > non.fraction, "{set:?}: {} vs {}", deg.fraction, non.fraction);
        assert!(deg.fraction <= 1.0 && non.fraction >= 0.0);
    }
}

#[test]
fn grid_refinement_changes_fraction_below_1e_4() {
    for alignment in [Alignment::Degenerate, Alignment::nondegenerate()] {
        let coarse = model(alignment, BboSellmeier::Eimerl1987);
        let fine = CascadeModel {
            grid_points: 4001,
            ..coarse.clone()
        };
        let (a, b) = (coarse.squeezed_fraction().unwrap(), fine.squeezed_fraction().unwrap());
        assert!((a.fraction - b.fraction).abs() < 1e-4);
        assert!((a.at_reference_gauge - b.at_reference_gauge).abs() < 1e-4);
    }
}

#[test]
fn weights_integrate_to_one() {
    for alignment in [Alignment::Degenerate, Alignment::nondegenerate()] {
        let p = model(alignment, BboSellmeier::Eimerl1987).profile().unwrap();
        assert!((p.total_weight() - 1.0).abs() < 1e-9);
        assert!(p.weights().iter().all(|&w| w >= 0.0));
    }
}

#[test]
fn phase_grows_away_from_degeneracy() {
    let m = model(Alignment::Degenerate, BboSellmeier::Eimerl1987);
    let above: Vec<f64> = (0..=50).map(|k| 710.0 + k as f64).collect();
    let below: Vec<f64> = (0..=50).map(|k| 710.0 - k as f64).collect();
    for side in [above, below] {
        let ph = relative_phase(&side, &m.crystal, 1.0, 710.0).unwrap();
        for w in ph.windows(2) {
            assert!(w[1].abs() > w[0].abs());
        }
    }
}

#[test]
fn fraction_equals_best_pump_phase_projection() {
    // the fraction does not depend on where the phase gauge is fixed
    let m = model(Alignment::Degenerate, BboSellmeier::Eimerl1987);
    let p = m.profile().unwrap();
    let shifted = p.clone().with_phases(p.phases().iter().map(|x| x + 1.234).collect()).unwrap();
    let (a, b) = (squeezed_fraction(&p), squeezed_fraction(&shifted));
    assert!((a.fraction - b.fraction).abs() < 1e-12);
}

#[test]
fn constant_phase_iff_full_fraction() {
    let m = model(Alignment::Degenerate, BboSellmeier::Eimerl1987);
    let p = m.profile().unwrap();
    let flat = p.clone().with_phases(vec![0.8; p.phases().len()]).unwrap();
    assert!((squeezed_fraction(&flat).fraction - 1.0).abs() < 1e-12);
    assert!(squeezed_fraction(&p).fraction < 1.0 - 1e-3);
}

#[test]
fn degenerate_bandwidth_near_130_nm() {
    // measured band width, quoted with a 20% model tolerance
    for set in SETS {
        let m = model(Alignment::Degenerate, set);
        let grid = default_grid(PUMP_WAVELENGTH_NM, m.grid_min_nm, m.grid_points);
        let fwhm = pdc_spectrum(&m.crystal, &grid).unwrap().fwhm_nm();
        assert!((fwhm - 130.0).abs() <= 0.2 * 130.0, "{set:?}: FWHM {fwhm:.1} nm");
    }
}
