//! Trends of the bundled figure configurations on reduced grids.

use std::path::PathBuf;

use usc_relax::config::GridConfig;
use usc_relax::{run_compare, run_rates, Resolved, RunConfig};

fn config(name: &str, grid: Option<GridConfig>) -> Resolved {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    let mut cfg = RunConfig::from_json(&std::fs::read_to_string(path).unwrap()).unwrap();
    if grid.is_some() {
        cfg.omega_grid = grid;
    }
    cfg.resolve().unwrap()
}

#[test]
fn flat_rates_fall_with_coupling_and_labels_are_stable() {
    let grid = GridConfig { start: 0.25, stop: 1.0, count: 6 };
    let table = run_rates(&config("fig3_rates_flat.json", Some(grid)), 1).unwrap();
    let gs: Vec<f64> = table.rows.iter().map(|r| r.gamma_s_num.unwrap()).collect();
    let ga: Vec<f64> = table.rows.iter().map(|r| r.gamma_a_num.unwrap()).collect();
    assert!(gs.windows(2).all(|w| w[1] < w[0]), "{gs:?}");
    assert!(ga.windows(2).all(|w| w[1] < w[0]), "{ga:?}");

    for w in table.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        assert!(b.omega_s_meas.unwrap() >= a.omega_s_meas.unwrap());
        // measured ω_a follows the closed-form frequency without jumps
        let measured = b.omega_a_meas.unwrap() - a.omega_a_meas.unwrap();
        let expected = b.omega_a_analytic - a.omega_a_analytic;
        assert!((measured - expected).abs() < 2.0 * b.bin_width.unwrap(), "{measured} vs {expected}");
    }
}

#[test]
fn stronger_coupling_departs_further_from_the_damped_pair() {
    let weak = run_compare(&config("fig2a_compare.json", None)).unwrap();
    let strong = run_compare(&config("fig2c_compare.json", None)).unwrap();
    assert!(strong.rms_deviation > weak.rms_deviation, "{} vs {}", strong.rms_deviation, weak.rms_deviation);
}
