//! Scenario executors. Each builds its artifacts in memory from a validated config.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use psq_core::dynamics::{evolve_phase_space, evolve_schrodinger, EvolutionConfig, EvolutionResult, Method};
use psq_core::grid::{Axis, PhaseField, PhaseGrid};
use psq_core::io::{read_binary, read_csv};
use psq_core::oracles::{
    classical_limit_probe, coherent_state, free_gaussian, free_wave_packet, ground_state,
    hermite_function, ho_ladder, ho_state, plane_wave_state, CoherentParams, FreeGaussianParams,
    OscillatorParams,
};
use psq_core::poly::{pstar_s, sigma_s_order, PolyH};
use psq_core::spectra::{gauge_spectrum_check, spectrum_via_schrodinger};
use psq_core::star::{star_sigma_s, ObservableSpec, OrderingSpec, Smoother};
use psq_core::wave::WaveFunction;
use psq_core::wigner::twisted_tensor;
use psq_core::wigner::QuasiDistribution;
use serde_json::json;

use crate::config::*;
use crate::error::CliError;
use crate::output::{Artifacts, Cell, Table};

pub fn execute(cfg: &ScenarioConfig) -> Result<Artifacts, CliError> {
    let ctx = Context::new(cfg)?;
    let mut out = Artifacts::default();
    match cfg.scenario()? {
        Scenario::Starprod(p) => starprod(&ctx, &p, &mut out)?,
        Scenario::Wigner(p) => wigner(&ctx, &p, &mut out)?,
        Scenario::Spectrum(p) => spectrum(&ctx, &p, &mut out)?,
        Scenario::Evolve(p) => evolve(&ctx, &p, &mut out)?,
        Scenario::Oracle(p) => oracle(&ctx, &p, &mut out)?,
        Scenario::ClassicalLimit(p) => classical_limit(&ctx, &p, &mut out)?,
        Scenario::GaugeCheck(p) => gauge_check(&ctx, &p, &mut out)?,
    }
    Ok(out)
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    grid: PhaseGrid,
    axis: Axis,
    spec: OrderingSpec,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self, CliError> {
        let g = &cfg.grid;
        let grid = PhaseGrid::new(
            g.nx,
            g.np,
            (g.x_span[0], g.x_span[1]),
            (g.p_span[0], g.p_span[1]),
            g.hbar,
        )?;
        let o = &cfg.ordering;
        let spec = smoother_spec(o.sigma, o.smoother, o.alpha, o.beta)?;
        Ok(Self {
            cfg,
            axis: grid.x,
            grid,
            spec,
        })
    }

    fn formats(&self) -> &[Format] {
        &self.cfg.formats
    }
}

fn smoother_spec(sigma: f64, kind: SmootherKind, alpha: f64, beta: f64) -> Result<OrderingSpec, CliError> {
    Ok(match kind {
        SmootherKind::Identity => OrderingSpec::sigma(sigma)?,
        SmootherKind::Gaussian => OrderingSpec::gaussian(sigma, alpha, beta)?,
    })
}

fn parse_poly(src: &str) -> Result<PolyH, CliError> {
    PolyH::parse(src).map_err(|e| CliError::Schema(format!("expression {src:?}: {e}")))
}

fn re(z: C64) -> Cell {
    Cell::F(z.re)
}

fn normalization_json(q: &QuasiDistribution) -> serde_json::Value {
    let n = q.normalization();
    json!({ "re": n.re, "im": n.im })
}

fn operand_field(op: &Operand, grid: &PhaseGrid) -> Result<PhaseField, CliError> {
    Ok(match op {
        Operand::Poly(src) => parse_poly(src)?.to_field(grid),
        Operand::Gaussian { x0, p0, width } => {
            let (x0, p0, w) = (*x0, *p0, *width);
            PhaseField::from_real_fn(grid, |x, p| {
                (-((x - x0).powi(2) + (p - p0).powi(2)) / (2.0 * w * w)).exp() / (2.0 * PI * w * w)
            })
        }
        Operand::File(path) => read_field(path)?,
    })
}

fn read_field(path: &Path) -> Result<PhaseField, CliError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => Ok(read_binary(path)?),
        Some("csv") => Ok(read_csv(path)?),
        _ => Err(CliError::Schema(format!(
            "operand file {} must end in .bin or .csv",
            path.display()
        ))),
    }
}

fn starprod(ctx: &Context, p: &StarprodParams, out: &mut Artifacts) -> Result<(), CliError> {
    if p.symbolic {
        let (Operand::Poly(fs), Operand::Poly(gs)) = (&p.f, &p.g) else {
            return Err(CliError::Schema("symbolic products need two polynomial operands".into()));
        };
        let word = ctx.spec.smoother.word().ok_or_else(|| {
            CliError::Numerical("symbolic products need a differential smoother".into())
        })?;
        let (f, g) = (parse_poly(fs)?, parse_poly(gs)?);
        let prod = pstar_s(&f, &g, ctx.spec.sigma, &word);
        let text = format!(
            "f = {f}\ng = {g}\nf * g = {prod}\nordered(f * g) = {}\n",
            sigma_s_order(&prod, ctx.spec.sigma, &word)
        );
        out.add_text("product.txt", text);
        return Ok(());
    }
    // A field read from disk fixes the lattice for the other operand.
    let (f, g) = match (&p.f, &p.g) {
        (_, Operand::File(_)) => {
            let g = operand_field(&p.g, &ctx.grid)?;
            (operand_field(&p.f, g.grid())?, g)
        }
        _ => {
            let f = operand_field(&p.f, &ctx.grid)?;
            let g = operand_field(&p.g, f.grid())?;
            (f, g)
        }
    };
    let prod = star_sigma_s(&f, &g, &ctx.spec)?;
    out.add_field("product", &prod.field, None, ctx.formats())?;
    out.add_json(
        "summary.json",
        &json!({
            "tail": prod.tail,
            "tail_exceeded": prod.tail_exceeded(),
            "integral": { "re": prod.field.integrate().re, "im": prod.field.integrate().im },
        }),
    );
    Ok(())
}

fn wave(spec: &WaveSpec, axis: &Axis) -> WaveFunction {
    match *spec {
        WaveSpec::Hermite { n, omega } => hermite_function(n, omega, axis),
        WaveSpec::Gaussian { x0, p0, width } => gaussian_packet(x0, p0, width, axis),
    }
}

/// Normalised packet with position spread `width` and mean momentum `p0`.
fn gaussian_packet(x0: f64, p0: f64, width: f64, axis: &Axis) -> WaveFunction {
    let hbar = axis.hbar;
    let pre = (2.0 * PI * width * width).powf(-0.25);
    WaveFunction::from_fn(axis, |x| {
        pre * C64::new(-(x - x0).powi(2) / (4.0 * width * width), p0 * x / hbar).exp()
    })
}

fn wigner(ctx: &Context, p: &WignerParams, out: &mut Artifacts) -> Result<(), CliError> {
    let phi = wave(&p.phi, &ctx.axis);
    let psi = p.psi.as_ref().map_or_else(|| phi.clone(), |s| wave(s, &ctx.axis));
    let state = twisted_tensor(&phi, &psi, &ctx.spec, &ctx.grid)?;
    out.add_state("wigner", &state, ctx.formats())?;
    out.add_json(
        "summary.json",
        &json!({ "normalization": normalization_json(&state), "tail": state.field.tail_fraction() }),
    );
    Ok(())
}

fn spectrum(ctx: &Context, p: &SpectrumParams, out: &mut Artifacts) -> Result<(), CliError> {
    let h: ObservableSpec = parse_poly(&p.hamiltonian)?.into();
    let r = spectrum_via_schrodinger(&h, &ctx.spec, p.levels, &ctx.axis)?;
    let mut t = Table::new(&["n", "E_n", "residual_left", "residual_right"]);
    for (n, (e, (l, rr))) in r.energies.iter().zip(&r.residuals).enumerate() {
        t.row(vec![Cell::I(n), Cell::F(*e), Cell::F(*l), Cell::F(*rr)]);
    }
    out.add_text("spectrum.csv", t.finish());
    if p.eigenfields {
        for n in 0..r.energies.len() {
            out.add_state(&format!("eigenfield_{n:02}"), &r.eigenfield(n, n)?, ctx.formats())?;
        }
    }
    Ok(())
}

fn observable(name: &str, h: &PolyH) -> Result<PolyH, CliError> {
    Ok(match name {
        "x" => PolyH::x(),
        "p" => PolyH::p(),
        "x2" => PolyH::xp(1.0, 2, 0),
        "p2" => PolyH::xp(1.0, 0, 2),
        "H" => h.clone(),
        other => parse_poly(other)?,
    })
}

fn evolve(ctx: &Context, p: &EvolveParams, out: &mut Artifacts) -> Result<(), CliError> {
    let axis = ctx.axis;
    let hbar = axis.hbar;
    let free = FreeGaussianParams::new(p.p0, p.delta_p, ctx.spec.sigma)?;
    let (h, phi0) = match p.system {
        System::Free => (
            PolyH::xp(0.5, 0, 2),
            free_wave_packet(&free, 0.0, &axis).translated(p.x0),
        ),
        System::Oscillator => (
            PolyH::xp(0.5, 0, 2).add(&PolyH::xp(0.5 * p.omega * p.omega, 2, 0)),
            gaussian_packet(p.x0, p.p0, (hbar / (2.0 * p.omega)).sqrt(), &axis),
        ),
        System::Custom => (
            parse_poly(p.hamiltonian.as_deref().expect("validated"))?,
            gaussian_packet(p.x0, p.p0, p.width, &axis),
        ),
    };
    let method = match p.method {
        MethodName::SplitStep => Method::SplitStep,
        MethodName::MatrixExponential => Method::MatrixExponential,
        MethodName::PhaseSpaceRk4 => Method::PhaseSpaceRk4,
        MethodName::LiouvilleRk4 => Method::LiouvilleRk4,
        MethodName::StarExponential => Method::StarExponential(p.order),
    };
    let mut ecfg = EvolutionConfig::new(p.dt, p.steps, method)
        .every(p.snapshot_every)
        .on_grid(ctx.grid);
    for name in &p.observables {
        ecfg = ecfg.observe(name, observable(name, &h)?);
    }
    let hs: ObservableSpec = h.clone().into();
    let res: EvolutionResult = match method {
        Method::SplitStep | Method::MatrixExponential => {
            evolve_schrodinger(&phi0, &hs, &ctx.spec, &ecfg)?
        }
        _ => {
            let rho0 = twisted_tensor(&phi0, &phi0, &ctx.spec, &ctx.grid)?;
            evolve_phase_space(&rho0, &hs, &ctx.spec, &ecfg)?
        }
    };

    let has = |n: &str| p.observables.iter().any(|o| o == n);
    let spread_x = has("x") && has("x2");
    let spread_p = has("p") && has("p2");
    let mut header = vec!["t".to_string()];
    for name in &p.observables {
        header.push(format!("{name}_re"));
        header.push(format!("{name}_im"));
    }
    header.push("norm".into());
    if spread_x {
        header.push("delta_x".into());
        if p.system == System::Free {
            header.push("delta_x_exact".into());
        }
    }
    if spread_p {
        header.push("delta_p".into());
    }
    let mut t = Table::with_header(header);
    for (k, &time) in res.times.iter().enumerate() {
        let ex = &res.expectations[k];
        let mut row = vec![Cell::F(time)];
        for name in &p.observables {
            row.push(re(ex[name]));
            row.push(Cell::F(ex[name].im));
        }
        row.push(Cell::F(res.norms[k]));
        let spread = |a: &str, a2: &str| (ex[a2].re - ex[a].re.powi(2)).max(0.0).sqrt();
        if spread_x {
            row.push(Cell::F(spread("x", "x2")));
            if p.system == System::Free {
                row.push(Cell::F(free.delta_x_at(time, hbar)));
            }
        }
        if spread_p {
            row.push(Cell::F(spread("p", "p2")));
        }
        t.row(row);
    }
    out.add_text("trajectory.csv", t.finish());
    for (k, snap) in res.snapshots.iter().enumerate() {
        let state = QuasiDistribution::new(snap.clone(), ctx.spec.clone());
        out.add_state(&format!("snapshot_{k:04}"), &state, ctx.formats())?;
    }
    Ok(())
}

fn oracle(ctx: &Context, p: &OracleParams, out: &mut Artifacts) -> Result<(), CliError> {
    let o = &ctx.cfg.ordering;
    let (alpha, beta) = match o.smoother {
        SmootherKind::Identity => (0.0, 0.0),
        SmootherKind::Gaussian => (o.alpha, o.beta),
    };
    let osc = || OscillatorParams::new(p.omega, o.sigma, alpha, beta);
    let state = match p.state {
        OracleState::Ho => ho_state(p.m, p.n, &osc()?, &ctx.grid)?,
        OracleState::Ladder => ho_ladder(p.m, p.n, &osc()?, &ctx.grid)?,
        OracleState::Ground => ground_state(&osc()?, &ctx.grid),
        OracleState::FreeGaussian => free_gaussian(
            &FreeGaussianParams::new(p.p0, p.delta_p, o.sigma)?,
            p.t,
            &ctx.grid,
        )?,
        OracleState::Coherent => coherent_state(
            &CoherentParams::new(p.x_bar, p.p_bar, p.omega, o.sigma)?,
            &ctx.grid,
        )?,
        OracleState::PlaneWave => {
            let formal = plane_wave_state(p.p0, beta, &ctx.grid)?;
            out.add_field("state", &formal.field, None, ctx.formats())?;
            out.add_json("summary.json", &json!({ "proper": formal.proper }));
            return Ok(());
        }
    };
    out.add_state("state", &state, ctx.formats())?;
    out.add_json(
        "summary.json",
        &json!({ "proper": true, "normalization": normalization_json(&state) }),
    );
    Ok(())
}

fn classical_limit(ctx: &Context, p: &ClassicalLimitParams, out: &mut Artifacts) -> Result<(), CliError> {
    let [cx, cp] = p.test_center;
    let w = p.test_width;
    let test = move |x: f64, q: f64| (-((x - cx).powi(2) + (q - cp).powi(2)) / w).exp();
    let sigma = ctx.cfg.ordering.sigma;
    let grid_for = |h: f64| ctx.grid.with_hbar(h);
    let (pairing, target) = match p.family {
        Family::Free => {
            let vals = classical_limit_probe(
                |h| {
                    let params = FreeGaussianParams::new(p.p0, (h / 2.0).sqrt(), sigma)?;
                    free_gaussian(&params, p.t, &grid_for(h)?)
                },
                test,
                &p.hbars,
            )?;
            (vals, test(p.p0 * p.t, p.p0))
        }
        Family::Stationary => {
            let osc = OscillatorParams::moyal(1.0)?;
            let vals = classical_limit_probe(|h| ho_state(p.n, p.n, &osc, &grid_for(h)?), test, &p.hbars)?;
            (vals, test(0.0, 0.0))
        }
        Family::Coherent => {
            let coh = CoherentParams::new(p.x_bar, p.p_bar, 1.0, sigma)?;
            let vals = classical_limit_probe(|h| coherent_state(&coh, &grid_for(h)?), test, &p.hbars)?;
            (vals, test(p.x_bar, p.p_bar))
        }
    };
    let mut t = Table::new(&["hbar", "pairing", "target", "error"]);
    for (h, v) in p.hbars.iter().zip(&pairing) {
        t.row(vec![Cell::F(*h), Cell::F(*v), Cell::F(target), Cell::F((v - target).abs())]);
    }
    out.add_text("classical_limit.csv", t.finish());
    Ok(())
}

fn gauge_check(ctx: &Context, p: &GaugeCheckParams, out: &mut Artifacts) -> Result<(), CliError> {
    let h: ObservableSpec = parse_poly(&p.hamiltonian)?.into();
    let smoothers: Vec<Smoother> = p
        .smoothers
        .iter()
        .map(|s| match s.kind {
            SmootherKind::Identity => Smoother::Identity,
            SmootherKind::Gaussian => Smoother::GaussianAlphaBeta {
                alpha: s.alpha,
                beta: s.beta,
            },
        })
        .collect();
    let report = gauge_spectrum_check(&h, &p.sigmas, &smoothers, p.levels, &ctx.axis)?;
    let mut t = Table::new(&["sigma", "smoother", "alpha", "beta", "n", "E_n"]);
    // The report lists spectra smoother-major, matching the order of `smoothers`.
    let labels = p
        .smoothers
        .iter()
        .flat_map(|s| std::iter::repeat_n(s, p.sigmas.len()));
    for ((sigma, kind, energies), s) in report.spectra.iter().zip(labels) {
        for (n, e) in energies.iter().enumerate() {
            t.row(vec![
                Cell::F(*sigma),
                Cell::S(kind.to_string()),
                Cell::F(s.alpha),
                Cell::F(s.beta),
                Cell::I(n),
                Cell::F(*e),
            ]);
        }
    }
    out.add_text("gauge.csv", t.finish());
    out.add_json(
        "summary.json",
        &json!({ "max_deviation": report.max_deviation, "consistent": report.consistent }),
    );
    Ok(())
}
