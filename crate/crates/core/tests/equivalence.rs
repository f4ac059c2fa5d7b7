//! Cross-checks between the independent propagation routes.

use proptest::prelude::*;
use usc_relax_core::dynamics::{propagate, propagate_oracle, propagate_states, Engine, TimeGrid};
use usc_relax_core::linalg::eigenvalues;
use usc_relax_core::model::{
    build_total_generator, ArrowSystem, CoordinateState, CoordinateSystem, DispersionLaw, PairParams,
    ReservoirParams, TotalState,
};
use usc_relax_core::C64;

fn small_system(n: usize, coupling: f64) -> (PairParams, ReservoirParams, ReservoirParams) {
    // band [1 − nδω/2, 1 + nδω/2] stays well above zero
    let dw = 0.4 / n as f64;
    let p = PairParams::with_default_diamagnetic(1.0, coupling).unwrap();
    let r1 = ReservoirParams::new(n, dw, DispersionLaw::calibrated(0.02, dw, 0.0)).unwrap();
    let r2 = ReservoirParams::new(n, dw, DispersionLaw::calibrated(0.01, dw, 0.0)).unwrap();
    (p, r1, r2)
}

fn initial(sys: &ArrowSystem) -> TotalState {
    let mut s = TotalState::default_initial(sys.layout());
    s.set_oscillator(1, C64::new(0.3, -0.2));
    s
}

#[test]
fn stepping_matches_spectral_oracle() {
    for n in [8, 16] {
        let (p, r1, r2) = small_system(n, 0.3);
        let g = build_total_generator(&p, &r1, &r2);
        let sys = ArrowSystem::new(&p, &r1, &r2);
        let s0 = initial(&sys);
        let t_r = r1.revival_time().unwrap();
        let grid = TimeGrid::new(t_r, 400).unwrap();
        let stepped = propagate_states(&g, s0.amplitudes(), &grid, Engine::Exponential).unwrap();
        let oracle = usc_relax_core::dynamics::SpectralPropagator::new(&g.to_dense()).unwrap();
        let coeffs = oracle.coefficients(s0.amplitudes());
        let mut worst: f64 = 0.0;
        for (i, x) in stepped.iter().enumerate() {
            let y = oracle.evaluate(&coeffs, grid.time(i));
            for (a, b) in x.iter().zip(&y) {
                worst = worst.max((a - b).norm());
            }
        }
        assert!(worst < 1e-8, "N = {n}: max deviation {worst:e}");

        let a = propagate(&g, &s0, &grid, Engine::DormandPrince).unwrap();
        let b = propagate_oracle(&g.to_dense(), &s0, &grid).unwrap();
        let dev = a.a1.iter().zip(&b.a1).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-8, "N = {n}: adaptive stepper deviates by {dev:e}");
    }
}

#[test]
fn coordinate_form_matches_amplitude_form() {
    let (p, r1, r2) = small_system(12, 0.6);
    let sys = ArrowSystem::new(&p, &r1, &r2);
    let coord = CoordinateSystem::new(&sys).unwrap();
    let g = build_total_generator(&p, &r1, &r2);
    let s0 = initial(&sys);
    let grid = TimeGrid::new(r1.revival_time().unwrap(), 300).unwrap();
    let states = propagate_states(&g, s0.amplitudes(), &grid, Engine::Exponential).unwrap();
    let c0 = CoordinateState::from_total(&s0, coord.frequencies()).unwrap();
    let path = coord.trajectory(&c0, &grid.times());
    let mut worst: f64 = 0.0;
    for (x, c) in states.iter().zip(&path) {
        let back = c.to_total(sys.layout(), coord.frequencies()).unwrap();
        for (a, b) in x.iter().zip(back.amplitudes()) {
            worst = worst.max((a - b).norm());
        }
    }
    assert!(worst < 1e-8, "max deviation {worst:e}");
}

#[test]
fn lossless_generator_has_imaginary_spectrum() {
    let (p, r1, r2) = small_system(10, 0.9);
    let g = build_total_generator(&p, &r1, &r2).to_dense();
    let ev = eigenvalues(&g).unwrap();
    let scale = ev.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for z in &ev {
        assert!(z.re.abs() < 1e-10 * scale, "eigenvalue {z} has a real part");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn conjugate_pairing_is_preserved(
        coupling in 0.0f64..1.5,
        re in prop::collection::vec(-1.0f64..1.0, 2),
        im in prop::collection::vec(-1.0f64..1.0, 2),
        t_end in 1.0f64..80.0,
    ) {
        let (p, r1, r2) = small_system(6, coupling);
        let sys = ArrowSystem::new(&p, &r1, &r2);
        let g = build_total_generator(&p, &r1, &r2);
        let mut s0 = TotalState::zeros(sys.layout());
        s0.set_oscillator(0, C64::new(re[0], im[0]));
        s0.set_oscillator(1, C64::new(re[1], im[1]));
        let grid = TimeGrid::new(t_end, 50).unwrap();
        let series = propagate(&g, &s0, &grid, Engine::Exponential).unwrap();
        prop_assert!(series.conjugacy_deviation < 1e-10);
    }
}
