//! Time evolution: split-step and dense Schrödinger propagation, method-of-lines
//! RK4 for the phase-space commutator equation, truncated star exponentials and
//! expectation trajectories.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{spectral_derivative, Direction, PhaseField, PhaseGrid};
use crate::poly::{pstar_s, PolyH};
use crate::spectra::{apply_ordered, companion_grid, operator_matrix, weyl_symbol};
use crate::star::{
    apply_smoother, bopp_apply, bopp_apply_pulled, pull_back_symbol, ObservableSpec,
    ObservableTerm, OrderingSpec, Side,
};
use crate::wave::{check_untouched, WaveFunction};
use crate::wigner::{twisted_tensor, QuasiDistribution};

pub const MAX_SERIES_ORDER: usize = 20;
/// Required ratio between the last kept term and the truncated series.
pub const SERIES_TAIL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Strang splitting of `T(p̂) + V(q̂)`.
    SplitStep,
    /// Exact propagator of the dense ordered operator.
    MatrixExponential,
    /// Classical RK4 on `∂Ψ/∂t = (H⋆Ψ - Ψ⋆H)/(i hbar)`.
    PhaseSpaceRk4,
    /// RK4 on the Liouville equation `∂ρ/∂t = {H, ρ}` (no hbar corrections).
    LiouvilleRk4,
    /// Truncated star exponential of order `K` applied once per step from both sides.
    StarExponential(usize),
}

#[derive(Clone, Debug)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub steps: usize,
    pub method: Method,
    /// Record every `snapshot_every` steps; 0 keeps only the endpoints.
    pub snapshot_every: usize,
    pub observables: Vec<(String, ObservableSpec)>,
    /// Grid for phase-space snapshots of configuration-space runs.
    pub snapshot_grid: Option<PhaseGrid>,
}

impl EvolutionConfig {
    pub fn new(dt: f64, steps: usize, method: Method) -> Self {
        Self {
            dt,
            steps,
            method,
            snapshot_every: 0,
            observables: Vec::new(),
            snapshot_grid: None,
        }
    }

    pub fn every(mut self, n: usize) -> Self {
        self.snapshot_every = n;
        self
    }

    pub fn observe(mut self, name: &str, a: impl Into<ObservableSpec>) -> Self {
        self.observables.push((name.to_string(), a.into()));
        self
    }

    pub fn on_grid(mut self, g: PhaseGrid) -> Self {
        self.snapshot_grid = Some(g);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.dt * self.steps as f64).is_finite() || self.steps == 0 {
            return Err(Error::Precondition(format!(
                "need dt > 0 and steps > 0, got dt = {}, steps = {}",
                self.dt, self.steps
            )));
        }
        if let Method::StarExponential(k) = self.method {
            if k == 0 || k > MAX_SERIES_ORDER {
                return Err(Error::Precondition(format!(
                    "series order {k} outside 1..={MAX_SERIES_ORDER}"
                )));
            }
        }
        Ok(())
    }

    fn records(&self, step: usize) -> bool {
        step == 0
            || step == self.steps
            || (self.snapshot_every > 0 && step % self.snapshot_every == 0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub snapshots: Vec<PhaseField>,
    /// Configuration-space states at the snapshot times (Schrödinger runs only).
    pub wavefunctions: Vec<WaveFunction>,
    pub expectations: Vec<BTreeMap<String, C64>>,
    /// `‖φ‖²` for Schrödinger runs, `∬ρ` for phase-space runs.
    pub norms: Vec<f64>,
}

type Scalar = Box<dyn Fn(f64) -> C64>;

#[derive(Default)]
struct NaturalParts {
    t: Vec<Scalar>,
    v: Vec<Scalar>,
}

impl NaturalParts {
    fn t(&self, p: f64) -> C64 {
        self.t.iter().map(|f| f(p)).sum()
    }
    fn v(&self, x: f64) -> C64 {
        self.v.iter().map(|f| f(x)).sum()
    }
}

/// Splits the ordered operator into `T(p̂) + V(q̂)`, if it has that form.
fn natural_parts(
    h: &ObservableSpec,
    spec: &OrderingSpec,
    hbar: f64,
) -> Result<Option<NaturalParts>> {
    let mut parts = NaturalParts::default();
    for term in &h.terms {
        match term {
            ObservableTerm::XOnly(v) => {
                check_untouched(&spec.smoother, true)?;
                let v = v.clone();
                parts.v.push(Box::new(move |x| v(x)));
            }
            ObservableTerm::POnly(t) => {
                check_untouched(&spec.smoother, false)?;
                let t = t.clone();
                parts.t.push(Box::new(move |p| t(p)));
            }
            ObservableTerm::Poly(p) => {
                let w = weyl_symbol(p, spec)?.with_hbar(hbar);
                let Some((t, v)) = w.split_natural() else {
                    return Ok(None);
                };
                parts.t.push(Box::new(move |p| t.eval(0.0, p, hbar)));
                parts.v.push(Box::new(move |x| v.eval(x, 0.0, hbar)));
            }
        }
    }
    Ok(Some(parts))
}

/// `iħ ∂φ/∂t = H_{σ,S}(q̂, p̂) φ`.
pub fn evolve_schrodinger(
    phi0: &WaveFunction,
    h: &ObservableSpec,
    spec: &OrderingSpec,
    cfg: &EvolutionConfig,
) -> Result<EvolutionResult> {
    cfg.validate()?;
    let axis = *phi0.axis();
    let hbar = axis.hbar;
    let dt = cfg.dt;
    let grid = match cfg.snapshot_grid {
        Some(g) => {
            if g.x != axis {
                return Err(Error::GridMismatch);
            }
            g
        }
        None => companion_grid(&axis)?,
    };

    enum Stepper {
        Split {
            half_v: Vec<C64>,
            parts: NaturalParts,
        },
        Dense(nalgebra::DMatrix<C64>),
    }
    let stepper = match cfg.method {
        Method::SplitStep => {
            let parts = natural_parts(h, spec, hbar)?.ok_or_else(|| {
                Error::Unsupported(
                    "split-step needs an ordered Hamiltonian of the form T(p) + V(x)".into(),
                )
            })?;
            let half_v = axis
                .points()
                .into_iter()
                .map(|x| (-C64::i() * parts.v(x) * (dt / (2.0 * hbar))).exp())
                .collect();
            Stepper::Split { half_v, parts }
        }
        Method::MatrixExponential => {
            let m = operator_matrix(h, spec, &axis)?;
            let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
            let eig = nalgebra::SymmetricEigen::new(m);
            let phases = DVector::from_iterator(
                axis.n,
                eig.eigenvalues
                    .iter()
                    .map(|&e| C64::from_polar(1.0, -e * dt / hbar)),
            );
            let v = &eig.eigenvectors;
            Stepper::Dense(v * nalgebra::DMatrix::from_diagonal(&phases) * v.adjoint())
        }
        other => {
            return Err(Error::Unsupported(format!(
                "{other:?} is a phase-space method"
            )));
        }
    };

    let mut out = EvolutionResult::default();
    let mut phi = phi0.clone();
    for step in 0..=cfg.steps {
        if step > 0 {
            phi = match &stepper {
                Stepper::Split { half_v, parts } => {
                    let mut data = phi.into_data();
                    data.iter_mut().zip(half_v).for_each(|(z, f)| *z *= f);
                    let tmp = WaveFunction::new(axis, data)?;
                    let k = tmp.map_spectrum(|xi| (-C64::i() * parts.t(xi) * (dt / hbar)).exp());
                    let mut data = k.into_data();
                    data.iter_mut().zip(half_v).for_each(|(z, f)| *z *= f);
                    WaveFunction::new(axis, data)?
                }
                Stepper::Dense(u) => {
                    let v = u * DVector::from_column_slice(phi.data());
                    WaveFunction::new(axis, v.iter().copied().collect())?
                }
            };
        }
        if cfg.records(step) {
            out.times.push(step as f64 * dt);
            out.norms.push(phi.norm().powi(2));
            let mut ex = BTreeMap::new();
            for (name, a) in &cfg.observables {
                ex.insert(name.clone(), phi.inner(&apply_ordered(a, spec, &phi)?)?);
            }
            out.expectations.push(ex);
            out.snapshots
                .push(twisted_tensor(&phi, &phi, spec, &grid)?.field);
            out.wavefunctions.push(phi.clone());
        }
    }
    Ok(out)
}

fn max_abs_on(grid: &PhaseGrid, f: impl Fn(f64, f64) -> f64) -> f64 {
    const S: usize = 33;
    let (x0, x1) = (grid.x.min, grid.x.max);
    let (p0, p1) = (grid.p.min, grid.p.max);
    let mut m: f64 = 0.0;
    for i in 0..S {
        for j in 0..S {
            let x = x0 + (x1 - x0) * i as f64 / (S - 1) as f64;
            let p = p0 + (p1 - p0) * j as f64 / (S - 1) as f64;
            m = m.max(f(x, p).abs());
        }
    }
    m
}

fn fd_derivative_max(f: &dyn Fn(f64) -> C64, lo: f64, hi: f64, order: u32) -> f64 {
    let h = 1e-3 * (hi - lo).max(1.0);
    (0..=64)
        .map(|i| {
            let u = lo + (hi - lo) * i as f64 / 64.0;
            match order {
                1 => ((f(u + h) - f(u - h)) / (2.0 * h)).norm(),
                _ => ((f(u + h) - 2.0 * f(u) + f(u - h)) / (h * h)).norm(),
            }
        })
        .fold(0.0, f64::max)
}

/// Largest stable RK4 step for the commutator generator of `h` on `grid`.
pub fn rk4_step_bound(
    h: &ObservableSpec,
    spec: &OrderingSpec,
    grid: &PhaseGrid,
    classical: bool,
) -> Result<f64> {
    let hbar = grid.hbar();
    let (sigma, sb) = (spec.sigma, 1.0 - spec.sigma);
    let (kx, kp) = (
        std::f64::consts::PI / grid.dx(),
        std::f64::consts::PI / grid.dp(),
    );
    let symbol = if classical {
        h.clone()
    } else {
        pull_back_symbol(h, spec)?
    };
    let (mut hx, mut hp, mut higher) = (0.0f64, 0.0f64, 0.0f64);
    for term in &symbol.terms {
        match term {
            ObservableTerm::XOnly(v) => {
                hx += fd_derivative_max(&|x| v(x), grid.x.min, grid.x.max, 1);
                if !classical {
                    let w = (sigma * sigma - sb * sb).abs();
                    higher += hbar / 2.0
                        * w
                        * fd_derivative_max(&|x| v(x), grid.x.min, grid.x.max, 2)
                        * kp
                        * kp;
                }
            }
            ObservableTerm::POnly(t) => {
                hp += fd_derivative_max(&|p| t(p), grid.p.min, grid.p.max, 1);
                if !classical {
                    let w = (sigma * sigma - sb * sb).abs();
                    higher += hbar / 2.0
                        * w
                        * fd_derivative_max(&|p| t(p), grid.p.min, grid.p.max, 2)
                        * kx
                        * kx;
                }
            }
            ObservableTerm::Poly(p) => {
                let p = p.with_hbar(hbar);
                let dx = p.deriv(1, 0);
                let dp = p.deriv(0, 1);
                hx += max_abs_on(grid, |x, q| dx.eval(x, q, hbar).norm());
                hp += max_abs_on(grid, |x, q| dp.eval(x, q, hbar).norm());
                if classical {
                    continue;
                }
                for k in 2..=p.degree() {
                    let mut fact = 1.0;
                    for i in 1..=k {
                        fact *= i as f64;
                    }
                    for a in 0..=k {
                        let b = k - a;
                        let w = (sigma.powi(a as i32) * (-sb).powi(b as i32)
                            - sigma.powi(b as i32) * (-sb).powi(a as i32))
                        .abs();
                        if w < 1e-15 {
                            continue;
                        }
                        let d = p.deriv(a, b);
                        let binom =
                            (0..a).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64);
                        higher += hbar.powi(k as i32 - 1) / fact
                            * binom
                            * w
                            * max_abs_on(grid, |x, q| d.eval(x, q, hbar).norm())
                            * kp.powi(a as i32)
                            * kx.powi(b as i32);
                    }
                }
            }
        }
    }
    let mut bound = f64::INFINITY;
    if hp > 0.0 {
        bound = bound.min(grid.dx() / hp);
    }
    if hx > 0.0 {
        bound = bound.min(grid.dp() / hx);
    }
    if higher > 0.0 {
        bound = bound.min(1.0 / higher);
    }
    Ok(0.5 * bound)
}

struct PhaseGenerator {
    symbol: ObservableSpec,
    sigma_spec: OrderingSpec,
    classical: Option<(PhaseField, PhaseField)>,
    hbar: f64,
}

impl PhaseGenerator {
    fn new(
        h: &ObservableSpec,
        spec: &OrderingSpec,
        grid: &PhaseGrid,
        classical: bool,
    ) -> Result<Self> {
        let hbar = grid.hbar();
        let classical = if classical {
            let eps = 1e-4;
            let eval = |x: f64, p: f64| {
                h.terms
                    .iter()
                    .map(|t| match t {
                        ObservableTerm::Poly(q) => q.with_hbar(0.0).eval(x, p, 1.0),
                        ObservableTerm::XOnly(v) => v(x),
                        ObservableTerm::POnly(f) => f(p),
                    })
                    .sum::<C64>()
            };
            // Fourth-order central differences of the symbol itself.
            let d = |x: f64, p: f64, ex: f64, ep: f64| {
                (-eval(x + 2.0 * ex, p + 2.0 * ep) + 8.0 * eval(x + ex, p + ep)
                    - 8.0 * eval(x - ex, p - ep)
                    + eval(x - 2.0 * ex, p - 2.0 * ep))
                    / (12.0 * eps)
            };
            Some((
                PhaseField::from_fn(grid, |x, p| d(x, p, eps, 0.0)),
                PhaseField::from_fn(grid, |x, p| d(x, p, 0.0, eps)),
            ))
        } else {
            None
        };
        Ok(Self {
            symbol: pull_back_symbol(h, spec)?,
            sigma_spec: OrderingSpec::sigma(spec.sigma)?,
            classical,
            hbar,
        })
    }

    fn apply(&self, f: &PhaseField) -> Result<PhaseField> {
        match &self.classical {
            Some((hx, hp)) => {
                // {H, ρ} = ∂xH ∂pρ - ∂pH ∂xρ
                let rx = spectral_derivative(f, 1, 0)?;
                let rp = spectral_derivative(f, 0, 1)?;
                hx.mul(&rp)?.sub(&hp.mul(&rx)?)
            }
            None => {
                let l = bopp_apply(&self.symbol, f, &self.sigma_spec, Side::Left)?;
                let r = bopp_apply(&self.symbol, f, &self.sigma_spec, Side::Right)?;
                Ok(l.sub(&r)?.scale(C64::new(0.0, -1.0 / self.hbar)))
            }
        }
    }

    fn rk4(&self, f: &PhaseField, dt: f64) -> Result<PhaseField> {
        let k1 = self.apply(f)?;
        let k2 = self.apply(&f.axpy(C64::new(dt / 2.0, 0.0), &k1)?)?;
        let k3 = self.apply(&f.axpy(C64::new(dt / 2.0, 0.0), &k2)?)?;
        let k4 = self.apply(&f.axpy(C64::new(dt, 0.0), &k3)?)?;
        let inc = k1
            .add(&k4)?
            .axpy(C64::new(2.0, 0.0), &k2)?
            .axpy(C64::new(2.0, 0.0), &k3)?;
        f.axpy(C64::new(dt / 6.0, 0.0), &inc)
    }
}

/// `iħ ∂Ψ/∂t = H ⋆ Ψ - Ψ ⋆ H` on the lattice of `rho0`.
///
/// Integration happens in the frame `S⁻¹Ψ`, where the product is the plain σ-product;
/// snapshots are pushed forward.
pub fn evolve_phase_space(
    rho0: &QuasiDistribution,
    h: &ObservableSpec,
    spec: &OrderingSpec,
    cfg: &EvolutionConfig,
) -> Result<EvolutionResult> {
    cfg.validate()?;
    let grid = *rho0.grid();
    let hbar = grid.hbar();
    let classical = cfg.method == Method::LiouvilleRk4;
    let mut series = None;
    match cfg.method {
        Method::PhaseSpaceRk4 | Method::LiouvilleRk4 => {
            let bound = rk4_step_bound(h, spec, &grid, classical)?;
            if cfg.dt > bound {
                return Err(Error::Precondition(format!(
                    "dt = {} exceeds the RK4 stability bound; use dt <= {bound:.3e}",
                    cfg.dt
                )));
            }
        }
        Method::StarExponential(k) => {
            let poly = h.as_poly().ok_or_else(|| {
                Error::Unsupported("star exponential needs a polynomial Hamiltonian".into())
            })?;
            let u = star_exponential_poly(&poly, cfg.dt, k, spec, hbar)?;
            let ud = star_exponential_poly(&poly, -cfg.dt, k, spec, hbar)?;
            series = Some((ObservableSpec::poly(u), ObservableSpec::poly(ud)));
        }
        other => {
            return Err(Error::Unsupported(format!(
                "{other:?} is a configuration-space method"
            )))
        }
    }
    let generator = PhaseGenerator::new(h, spec, &grid, classical)?;
    let frame = if classical {
        OrderingSpec::sigma(spec.sigma)?
    } else {
        spec.clone()
    };

    let mut out = EvolutionResult::default();
    let mut f = apply_smoother(&rho0.field, &frame, Direction::Inverse)?;
    for step in 0..=cfg.steps {
        if step > 0 {
            f = match &series {
                None => generator.rk4(&f, cfg.dt)?,
                Some((u, ud)) => {
                    let sigma_spec = OrderingSpec::sigma(spec.sigma)?;
                    let u = pull_back_symbol(u, spec)?;
                    let ud = pull_back_symbol(ud, spec)?;
                    let left = bopp_apply(&u, &f, &sigma_spec, Side::Left)?;
                    bopp_apply(&ud, &left, &sigma_spec, Side::Right)?
                }
            };
        }
        if cfg.records(step) {
            let pushed = apply_smoother(&f, &frame, Direction::Forward)?;
            let state = QuasiDistribution::new(pushed, frame.clone());
            let rho = state.rho();
            out.times.push(step as f64 * cfg.dt);
            out.norms.push(rho.integrate().re);
            let mut ex = BTreeMap::new();
            for (name, a) in &cfg.observables {
                ex.insert(
                    name.clone(),
                    bopp_apply_pulled(a, &rho, &frame, Side::Left)?.integrate(),
                );
            }
            out.expectations.push(ex);
            out.snapshots.push(state.field);
        }
    }
    Ok(out)
}

/// `Σ_{k≤K} (1/k!)(-it/hbar)^k H^{⋆k}` as an exact polynomial (hbar substituted).
pub fn star_exponential_poly(
    h: &PolyH,
    t: f64,
    order: usize,
    spec: &OrderingSpec,
    hbar: f64,
) -> Result<PolyH> {
    let word = spec.smoother.word().ok_or_else(|| {
        Error::Unsupported("star exponential under a Cohen multiplier smoother".into())
    })?;
    let hn = h.with_hbar(hbar);
    let mut power = PolyH::one();
    let mut sum = PolyH::one();
    let mut coeff = C64::new(1.0, 0.0);
    for k in 1..=order {
        power = pstar_s(&hn, &power, spec.sigma, &word).with_hbar(hbar);
        coeff *= C64::new(0.0, -t / hbar) / k as f64;
        sum = sum.add(&power.scale(coeff));
    }
    Ok(sum)
}

/// The truncated star exponential sampled on `grid`; fails when the last kept term
/// is not below `SERIES_TAIL_TOL` of the sum there.
pub fn star_exponential(
    h: &ObservableSpec,
    t: f64,
    order: usize,
    spec: &OrderingSpec,
    grid: &PhaseGrid,
) -> Result<PhaseField> {
    if order > MAX_SERIES_ORDER {
        return Err(Error::Precondition(format!(
            "series order {order} above {MAX_SERIES_ORDER}"
        )));
    }
    let poly = h.as_poly().ok_or_else(|| {
        Error::Unsupported("star exponential needs a polynomial Hamiltonian".into())
    })?;
    let hbar = grid.hbar();
    let sum = star_exponential_poly(&poly, t, order, spec, hbar)?.to_field(grid);
    if order == 0 || t == 0.0 {
        return Ok(sum);
    }
    let shorter = star_exponential_poly(&poly, t, order - 1, spec, hbar)?.to_field(grid);
    let ratio = sum.sub(&shorter)?.l2_norm() / sum.l2_norm();
    if ratio >= SERIES_TAIL_TOL {
        let mut achieved = 0;
        for k in 1..order {
            let a = star_exponential_poly(&poly, t, k, spec, hbar)?.to_field(grid);
            let b = star_exponential_poly(&poly, t, k - 1, spec, hbar)?.to_field(grid);
            if a.sub(&b)?.l2_norm() / a.l2_norm() < SERIES_TAIL_TOL {
                achieved = k;
                break;
            }
        }
        return Err(Error::Convergence(format!(
            "last term ratio {ratio:.2e} at order {order}; tail bound {}",
            if achieved > 0 {
                format!("first met at order {achieved}")
            } else {
                "not met below the requested order".to_string()
            }
        )));
    }
    Ok(sum)
}

/// `A(t) = U(-t) ⋆ A ⋆ U(t)` by the nested-commutator series, exact polynomial.
pub fn heisenberg_observable(
    a: &PolyH,
    h: &PolyH,
    t: f64,
    spec: &OrderingSpec,
    hbar: f64,
) -> Result<PolyH> {
    let word = spec.smoother.word().ok_or_else(|| {
        Error::Unsupported("Heisenberg series under a Cohen multiplier smoother".into())
    })?;
    let hn = h.with_hbar(hbar);
    let mut term = a.with_hbar(hbar);
    let mut sum = term.clone();
    for k in 1..=60 {
        let comm = pstar_s(&hn, &term, spec.sigma, &word)
            .sub(&pstar_s(&term, &hn, spec.sigma, &word))
            .with_hbar(hbar);
        term = comm.scale(C64::new(0.0, t / hbar) / k as f64);
        let size = term.terms().map(|(_, c)| c.norm()).fold(0.0, f64::max);
        if term.is_zero() || size < 1e-16 {
            return Ok(sum);
        }
        sum = sum.add(&term);
    }
    Err(Error::Convergence(
        "nested commutator series did not settle in 60 terms".into(),
    ))
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    /// `|d⟨A⟩/dt - ⟨⟦A, H⟧⟩|` at interior times (five-point derivative).
    pub residuals: Vec<f64>,
}

impl Trajectory {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// `⟨A⟩_{ρ(t)}` along a run, checked against `d⟨A⟩/dt = ⟨⟦A, H⟧⟩`.
pub fn heisenberg_trajectory(
    a: &PolyH,
    state0: &QuasiDistribution,
    h: &PolyH,
    spec: &OrderingSpec,
    cfg: &EvolutionConfig,
) -> Result<Trajectory> {
    let hbar = state0.grid().hbar();
    let word = spec
        .smoother
        .word()
        .ok_or_else(|| Error::Unsupported("bracket under a Cohen multiplier smoother".into()))?;
    let bracket = pstar_s(a, h, spec.sigma, &word)
        .sub(&pstar_s(h, a, spec.sigma, &word))
        .with_hbar(hbar)
        .scale(C64::new(0.0, -1.0 / hbar));
    let mut cfg = cfg.clone().every(1);
    cfg.observables = vec![
        ("a".into(), a.clone().into()),
        ("bracket".into(), bracket.into()),
    ];
    let run = evolve_phase_space(state0, &ObservableSpec::poly(h.clone()), spec, &cfg)?;
    let values: Vec<C64> = run.expectations.iter().map(|e| e["a"]).collect();
    let rates: Vec<C64> = run.expectations.iter().map(|e| e["bracket"]).collect();
    let dt = cfg.dt;
    let residuals = (2..values.len().saturating_sub(2))
        .map(|i| {
            let d = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2])
                / (12.0 * dt);
            (d - rates[i]).norm()
        })
        .collect();
    Ok(Trajectory {
        times: run.times,
        values,
        residuals,
    })
}
