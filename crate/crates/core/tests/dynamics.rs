use num_complex::Complex64 as C64;
use psq_core::dynamics::{
    evolve_phase_space, evolve_schrodinger, heisenberg_observable, heisenberg_trajectory,
    star_exponential, star_exponential_poly, EvolutionConfig, Method,
};
use psq_core::grid::{Axis, PhaseField, PhaseGrid};
use psq_core::oracles::{
    coherent_state, free_gaussian, free_wave_packet, ho_state, CoherentParams, FreeGaussianParams,
    OscillatorParams,
};
use psq_core::poly::{pstar, PolyH};
use psq_core::spectra::{companion_grid, expectation, spectrum_via_schrodinger};
use psq_core::star::{ObservableSpec, OrderingSpec};
use psq_core::wave::WaveFunction;
use psq_core::wigner::{twisted_tensor, QuasiDistribution};
use psq_core::Error;

fn oscillator() -> PolyH {
    PolyH::parse("p^2/2 + x^2/2").unwrap()
}

fn free() -> PolyH {
    PolyH::parse("p^2/2").unwrap()
}

fn gaussian_wave(axis: &Axis, x0: f64, p0: f64) -> WaveFunction {
    WaveFunction::from_fn(axis, |x| {
        C64::from_polar(
            std::f64::consts::PI.powf(-0.25) * (-(x - x0).powi(2) / 2.0).exp(),
            p0 * x,
        )
    })
}

fn osc_grid() -> PhaseGrid {
    PhaseGrid::symmetric(64, 8.0, 1.0).unwrap()
}

#[test]
fn free_packet_matches_closed_form() {
    let axis = Axis::new(256, -24.0, 24.0, 1.0).unwrap();
    let params = FreeGaussianParams::new(1.0, 0.5, 0.5).unwrap();
    let phi0 = free_wave_packet(&params, 0.0, &axis);
    let cfg = EvolutionConfig::new(1e-3, 1000, Method::SplitStep);
    let run = evolve_schrodinger(&phi0, &free().into(), &OrderingSpec::weyl(), &cfg).unwrap();
    let end = run.wavefunctions.last().unwrap();
    let want = free_wave_packet(&params, 1.0, &axis);
    assert!(end.sub(&want).unwrap().max_abs() < 1e-7);
    assert!((run.times.last().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn plane_wave_picks_up_kinetic_phase() {
    let axis = Axis::new(64, -8.0, 8.0, 1.0).unwrap();
    let p0 = axis.conj_point(37);
    let phi0 = WaveFunction::from_fn(&axis, |x| C64::from_polar(0.25, p0 * x));
    let cfg = EvolutionConfig::new(0.01, 50, Method::SplitStep);
    let run = evolve_schrodinger(&phi0, &free().into(), &OrderingSpec::weyl(), &cfg).unwrap();
    let want = phi0.scale(C64::from_polar(1.0, -0.5 * p0 * p0 * 0.5));
    assert!(run.wavefunctions[1].sub(&want).unwrap().max_abs() < 1e-12);
}

#[test]
fn eigenstate_phase_gives_energy() {
    let axis = Axis::new(128, -10.0, 10.0, 1.0).unwrap();
    let h: ObservableSpec = oscillator().into();
    let spec = OrderingSpec::weyl();
    let sp = spectrum_via_schrodinger(&h, &spec, 4, &axis).unwrap();
    let t = 0.5;
    for method in [Method::SplitStep, Method::MatrixExponential] {
        for (n, phi) in sp.wavefunctions.iter().enumerate() {
            let cfg = EvolutionConfig::new(1e-3, 500, method);
            let run = evolve_schrodinger(phi, &h, &spec, &cfg).unwrap();
            let end = run.wavefunctions.last().unwrap();
            let modulus = end
                .data()
                .iter()
                .zip(phi.data())
                .map(|(a, b)| (a.norm() - b.norm()).abs());
            assert!(modulus.fold(0.0, f64::max) < 1e-6);
            let e = -phi.inner(end).unwrap().arg() / t;
            assert!(
                (e - sp.energies[n]).abs() < 1e-6,
                "{method:?} n={n}: {e} vs {}",
                sp.energies[n]
            );
        }
    }
}

#[test]
fn split_step_needs_natural_hamiltonian() {
    let axis = Axis::new(64, -8.0, 8.0, 1.0).unwrap();
    let phi = gaussian_wave(&axis, 0.0, 0.0);
    let h: ObservableSpec = PolyH::parse("p^2/2 + x^2/2 + x*p/5").unwrap().into();
    let cfg = EvolutionConfig::new(0.01, 10, Method::SplitStep);
    assert!(matches!(
        evolve_schrodinger(&phi, &h, &OrderingSpec::weyl(), &cfg),
        Err(Error::Unsupported(_))
    ));
}

#[test]
fn phase_space_free_particle_matches_oracle() {
    let grid = PhaseGrid::new(128, 128, (-12.0, 12.0), (-6.0, 6.0), 1.0).unwrap();
    for sigma in [0.5, 0.3] {
        let params = FreeGaussianParams::new(1.0, 0.5, sigma).unwrap();
        let rho0 = free_gaussian(&params, 0.0, &grid).unwrap();
        let cfg = EvolutionConfig::new(0.008, 125, Method::PhaseSpaceRk4);
        let run = evolve_phase_space(&rho0, &free().into(), &rho0.spec, &cfg).unwrap();
        let want = free_gaussian(&params, 1.0, &grid).unwrap();
        let err = run
            .snapshots
            .last()
            .unwrap()
            .rel_distance(&want.field)
            .unwrap();
        assert!(err < 1e-5, "sigma {sigma}: {err}");
        assert!((run.norms[1] - run.norms[0]).abs() < 1e-8);
    }
}

#[test]
fn coherent_center_follows_classical_orbit() {
    let grid = osc_grid();
    let period = 2.0 * std::f64::consts::PI;
    for sigma in [0.5, 0.3] {
        let params = CoherentParams::new(1.0, 0.5, 1.0, sigma).unwrap();
        let rho0 = coherent_state(&params, &grid).unwrap();
        let cfg = EvolutionConfig::new(period / 1000.0, 1000, Method::PhaseSpaceRk4)
            .every(100)
            .observe("x", PolyH::x())
            .observe("p", PolyH::p());
        let run = evolve_phase_space(&rho0, &oscillator().into(), &rho0.spec, &cfg).unwrap();
        for (t, ex) in run.times.iter().zip(&run.expectations) {
            let (x, p) = params.orbit(*t);
            assert!(
                (ex["x"] - x).norm() < 1e-6,
                "sigma {sigma} t {t}: {} vs {x}",
                ex["x"]
            );
            assert!((ex["p"] - p).norm() < 1e-6);
        }
        let mass = run
            .norms
            .iter()
            .map(|m| (m - run.norms[0]).abs())
            .fold(0.0, f64::max);
        assert!(mass < 1e-8);
    }
}

#[test]
fn liouville_agrees_with_quantum_for_quadratic_hamiltonian() {
    let grid = osc_grid();
    let params = CoherentParams::new(1.0, -0.5, 1.0, 0.5).unwrap();
    let rho0 = coherent_state(&params, &grid).unwrap();
    let h: ObservableSpec = oscillator().into();
    let quantum = evolve_phase_space(
        &rho0,
        &h,
        &rho0.spec,
        &EvolutionConfig::new(0.01, 150, Method::PhaseSpaceRk4),
    )
    .unwrap();
    let classical = evolve_phase_space(
        &rho0,
        &h,
        &rho0.spec,
        &EvolutionConfig::new(0.01, 150, Method::LiouvilleRk4),
    )
    .unwrap();
    let d = quantum.snapshots[1]
        .sub(&classical.snapshots[1])
        .unwrap()
        .max_abs();
    assert!(d < 1e-6, "{d}");

    // A quartic term separates the two.
    let h4: ObservableSpec = PolyH::parse("p^2/2 + x^2/2 + x^4/10").unwrap().into();
    let grid = PhaseGrid::new(64, 32, (-6.0, 6.0), (-6.0, 6.0), 1.0).unwrap();
    let rho0 = coherent_state(&params, &grid).unwrap();
    let q = evolve_phase_space(
        &rho0,
        &h4,
        &rho0.spec,
        &EvolutionConfig::new(1e-3, 250, Method::PhaseSpaceRk4),
    )
    .unwrap();
    let c = evolve_phase_space(
        &rho0,
        &h4,
        &rho0.spec,
        &EvolutionConfig::new(1e-3, 250, Method::LiouvilleRk4),
    )
    .unwrap();
    assert!(q.snapshots[1].sub(&c.snapshots[1]).unwrap().max_abs() > 1e-4);
}

#[test]
fn stationary_states_do_not_move() {
    let grid = osc_grid();
    let period = 2.0 * std::f64::consts::PI;
    for params in [
        OscillatorParams::moyal(1.0).unwrap(),
        OscillatorParams::from_lambda(1.0, 0.8).unwrap(),
    ] {
        let rho = ho_state(2, 2, &params, &grid).unwrap();
        let cfg = EvolutionConfig::new(period / 600.0, 600, Method::PhaseSpaceRk4);
        let run = evolve_phase_space(&rho, &params.hamiltonian().into(), &rho.spec, &cfg).unwrap();
        let d = run.snapshots[1].rel_distance(&run.snapshots[0]).unwrap();
        assert!(d < 1e-6, "lambda {}: {d}", params.lambda());
    }
}

#[test]
fn schrodinger_and_phase_space_pictures_agree() {
    let grid = companion_grid(&Axis::new(64, -12.0, 12.0, 1.0).unwrap()).unwrap();
    let spec = OrderingSpec::weyl();
    for (h, p0) in [(free(), 0.7), (oscillator(), 0.0)] {
        let phi0 = gaussian_wave(&grid.x, 1.0, p0);
        let rho0 = twisted_tensor(&phi0, &phi0, &spec, &grid).unwrap();
        let cfg = EvolutionConfig::new(5e-3, 200, Method::SplitStep)
            .every(50)
            .on_grid(grid);
        let a = evolve_schrodinger(&phi0, &h.clone().into(), &spec, &cfg).unwrap();
        let cfg = EvolutionConfig::new(5e-3, 200, Method::PhaseSpaceRk4).every(50);
        let b = evolve_phase_space(&rho0, &h.clone().into(), &spec, &cfg).unwrap();
        assert_eq!(a.times.len(), 5);
        for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
            let d = x.rel_distance(y).unwrap();
            assert!(d < 1e-5, "{d}");
        }
    }
}

fn endpoint_error(
    method: Method,
    dt: f64,
    reference: &PhaseField,
    rho0: &QuasiDistribution,
) -> f64 {
    let steps = (1.0 / dt).round() as usize;
    let run = evolve_phase_space(
        rho0,
        &oscillator().into(),
        &rho0.spec,
        &EvolutionConfig::new(dt, steps, method),
    )
    .unwrap();
    run.snapshots
        .last()
        .unwrap()
        .sub(reference)
        .unwrap()
        .l2_norm()
}

#[test]
fn rk4_is_fourth_order_on_coherent_benchmark() {
    let grid = PhaseGrid::symmetric(32, 6.0, 1.0).unwrap();
    let params = CoherentParams::new(1.0, 0.5, 1.0, 0.5).unwrap();
    let rho0 = coherent_state(&params, &grid).unwrap();
    let reference = evolve_phase_space(
        &rho0,
        &oscillator().into(),
        &rho0.spec,
        &EvolutionConfig::new(1.0 / 800.0, 800, Method::PhaseSpaceRk4),
    )
    .unwrap()
    .snapshots
    .pop()
    .unwrap();
    let e1 = endpoint_error(Method::PhaseSpaceRk4, 0.025, &reference, &rho0);
    let e2 = endpoint_error(Method::PhaseSpaceRk4, 0.0125, &reference, &rho0);
    let ratio = e1 / e2;
    assert!((ratio / 16.0 - 1.0).abs() < 0.2, "{e1} {e2} {ratio}");
}

#[test]
fn split_step_is_second_order() {
    let axis = Axis::new(64, -8.0, 8.0, 1.0).unwrap();
    let phi0 = gaussian_wave(&axis, 1.0, 0.5);
    let h: ObservableSpec = PolyH::parse("p^2/2 + x^2/2 + x^4/20").unwrap().into();
    let spec = OrderingSpec::weyl();
    let exact = evolve_schrodinger(
        &phi0,
        &h,
        &spec,
        &EvolutionConfig::new(1.0, 1, Method::MatrixExponential),
    )
    .unwrap();
    let exact = exact.wavefunctions.last().unwrap();
    let err = |dt: f64| {
        let cfg = EvolutionConfig::new(dt, (1.0 / dt).round() as usize, Method::SplitStep);
        let run = evolve_schrodinger(&phi0, &h, &spec, &cfg).unwrap();
        run.wavefunctions.last().unwrap().sub(exact).unwrap().norm()
    };
    let ratio = err(0.02) / err(0.01);
    assert!((ratio / 4.0 - 1.0).abs() < 0.2, "{ratio}");
}

#[test]
fn star_exponential_is_unitary() {
    let grid = PhaseGrid::symmetric(32, 3.0, 1.0).unwrap();
    let h: ObservableSpec = oscillator().into();
    let spec = OrderingSpec::weyl();
    let u = star_exponential_poly(&oscillator(), 0.1, 12, &spec, 1.0).unwrap();
    let uu = pstar(&u, &u.conj(), 0.5).with_hbar(1.0).sub(&PolyH::one());
    let defect = uu.to_field(&grid).max_abs();
    assert!(defect < 1e-9, "{defect}");
    let field = star_exponential(&h, 0.1, 12, &spec, &grid).unwrap();
    assert!(field.sub(&u.to_field(&grid)).unwrap().max_abs() == 0.0);
}

#[test]
fn star_exponential_propagates_like_rk4() {
    let grid = osc_grid();
    for sigma in [0.5, 0.25] {
        let params = CoherentParams::new(1.0, 0.5, 1.0, sigma).unwrap();
        let rho0 = coherent_state(&params, &grid).unwrap();
        let h: ObservableSpec = oscillator().into();
        let series = evolve_phase_space(
            &rho0,
            &h,
            &rho0.spec,
            &EvolutionConfig::new(0.1, 1, Method::StarExponential(12)),
        )
        .unwrap();
        let rk4 = evolve_phase_space(
            &rho0,
            &h,
            &rho0.spec,
            &EvolutionConfig::new(0.005, 20, Method::PhaseSpaceRk4),
        )
        .unwrap();
        let d = series.snapshots[1].rel_distance(&rk4.snapshots[1]).unwrap();
        assert!(d < 1e-6, "sigma {sigma}: {d}");
    }
}

#[test]
fn trajectory_derivative_matches_bracket() {
    let grid = PhaseGrid::new(128, 64, (-12.0, 12.0), (-6.0, 6.0), 1.0).unwrap();
    let params = FreeGaussianParams::new(1.0, 0.5, 0.5).unwrap();
    let rho0 = free_gaussian(&params, 0.0, &grid).unwrap();
    let cfg = EvolutionConfig::new(0.01, 40, Method::PhaseSpaceRk4);
    let traj = heisenberg_trajectory(&PolyH::x(), &rho0, &free(), &rho0.spec, &cfg).unwrap();
    assert_eq!(traj.values.len(), 41);
    assert!(traj.max_residual() < 1e-6, "{}", traj.max_residual());
    // ⟨x⟩ moves with the packet momentum.
    assert!((traj.values[40] - 0.4).norm() < 1e-6);

    let grid = osc_grid();
    let coh = CoherentParams::new(1.0, 0.5, 1.0, 0.5).unwrap();
    let rho0 = coherent_state(&coh, &grid).unwrap();
    let traj =
        heisenberg_trajectory(&oscillator(), &rho0, &oscillator(), &rho0.spec, &cfg).unwrap();
    let e0 = traj.values[0];
    assert!(traj.values.iter().all(|e| (e - e0).norm() < 1e-8));
    assert!(traj.max_residual() < 1e-5);
}

#[test]
fn heisenberg_and_schrodinger_predictions_agree() {
    let grid = osc_grid();
    let t = 0.3;
    for sigma in [0.5, 0.2] {
        let coh = CoherentParams::new(1.0, 0.5, 1.0, sigma).unwrap();
        let rho0 = coherent_state(&coh, &grid).unwrap();
        let spec = rho0.spec.clone();
        let xt = heisenberg_observable(&PolyH::x(), &oscillator(), t, &spec, 1.0).unwrap();
        let moved = expectation(&xt.into(), &rho0).unwrap();
        let cfg = EvolutionConfig::new(0.005, 60, Method::PhaseSpaceRk4).observe("x", PolyH::x());
        let run = evolve_phase_space(&rho0, &oscillator().into(), &spec, &cfg).unwrap();
        assert!((run.expectations[1]["x"] - moved).norm() < 1e-6);
    }
}

#[test]
fn smoothed_oscillator_evolution_keeps_mass_and_energy() {
    let grid = osc_grid();
    let params = OscillatorParams::from_lambda(1.0, 0.7).unwrap();
    let rho0 = ho_state(0, 1, &params, &grid).unwrap();
    let h = params.hamiltonian();
    let cfg = EvolutionConfig::new(0.01, 100, Method::PhaseSpaceRk4)
        .every(25)
        .observe("h", h.clone());
    let run = evolve_phase_space(&rho0, &h.into(), &rho0.spec, &cfg).unwrap();
    for (m, ex) in run.norms.iter().zip(&run.expectations) {
        assert!((m - run.norms[0]).abs() < 1e-8);
        assert!((ex["h"] - run.expectations[0]["h"]).norm() < 1e-8);
    }
    // Off-diagonal states rotate at the level spacing.
    let phase = run.snapshots[4].l2_inner(&run.snapshots[0]).unwrap()
        / run.snapshots[0].l2_inner(&run.snapshots[0]).unwrap();
    assert!(
        (phase - C64::from_polar(1.0, -1.0)).norm() < 1e-6,
        "{phase}"
    );
}
