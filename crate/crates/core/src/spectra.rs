//! Expectation values, uncertainties, star-genvalue residuals and the
//! configuration-space eigensolver for ordered Hamiltonians.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{fourier_full, Axis, AxisId, PhaseField, PhaseGrid};
use crate::poly::{sigma_s_order, DiffOpWord, PolyH};
use crate::star::{
    bopp_apply, bopp_apply_pulled, pull_back_symbol, ObservableSpec, ObservableTerm, OrderingSpec,
    Side, Smoother,
};
use crate::wave::{check_untouched, WaveFunction};
use crate::wigner::{twisted_tensor, MixedState, QuasiDistribution};

/// Largest admissible `‖M - M†‖_F / ‖M‖_F` for the assembled matrix.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Largest admissible weight of an eigenfunction near the lattice edges or the band limit.
pub const RESOLUTION_TOL: f64 = 1e-10;
/// Eigenvalues closer than this are treated as one degenerate level.
pub const DEGENERACY_WINDOW: f64 = 1e-9;
/// Pairwise spectral agreement required by [`gauge_spectrum_check`].
pub const GAUGE_TOL: f64 = 1e-7;

#[derive(Clone, Copy)]
pub enum StateRef<'a> {
    Pure(&'a QuasiDistribution),
    Mixed(&'a MixedState),
}

impl<'a> From<&'a QuasiDistribution> for StateRef<'a> {
    fn from(s: &'a QuasiDistribution) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a MixedState> for StateRef<'a> {
    fn from(s: &'a MixedState) -> Self {
        StateRef::Mixed(s)
    }
}

/// `⟨A⟩ = ∬ A ⋆ ρ`, integrated before the final smoothing, which preserves `∬`.
pub fn expectation<'a>(a: &ObservableSpec, state: impl Into<StateRef<'a>>) -> Result<C64> {
    match state.into() {
        StateRef::Pure(s) => {
            if !s.is_normalized() {
                return Err(Error::Precondition(format!(
                    "state not normalised: ∬ρ = {}",
                    s.normalization()
                )));
            }
            Ok(bopp_apply_pulled(a, &s.rho(), &s.spec, Side::Left)?.integrate())
        }
        StateRef::Mixed(m) => expectation(a, &m.combined()),
    }
}

/// `sqrt(⟨A²⟩ - ⟨A⟩²)` for `A = x` or `A = p`.
pub fn uncertainty<'a>(state: impl Into<StateRef<'a>>, which: AxisId) -> Result<f64> {
    let state = state.into();
    let (n, m) = match which {
        AxisId::X => (1, 0),
        AxisId::P => (0, 1),
    };
    let first = expectation(&PolyH::xp(1.0, n, m).into(), state)?.re;
    let second = expectation(&PolyH::xp(1.0, 2 * n, 2 * m).into(), state)?.re;
    let var = second - first * first;
    if var < -1e-10 {
        return Err(Error::Inconsistent(format!("negative variance {var}")));
    }
    Ok(var.max(0.0).sqrt())
}

/// `(‖H⋆Ψ - EΨ‖, ‖Ψ⋆H - EΨ‖)` relative to `‖Ψ‖`.
pub fn stargen_residual(h: &ObservableSpec, psi: &QuasiDistribution, e: f64) -> Result<(f64, f64)> {
    stargen_residual_pair(h, psi, e, e)
}

/// Left residual against `e_left`, right residual against `e_right`.
pub fn stargen_residual_pair(
    h: &ObservableSpec,
    psi: &QuasiDistribution,
    e_left: f64,
    e_right: f64,
) -> Result<(f64, f64)> {
    let f = &psi.field;
    let norm = f.l2_norm();
    let left = bopp_apply(h, f, &psi.spec, Side::Left)?;
    let right = bopp_apply(h, f, &psi.spec, Side::Right)?;
    Ok((
        left.axpy(C64::new(-e_left, 0.0), f)?.l2_norm() / norm,
        right.axpy(C64::new(-e_right, 0.0), f)?.l2_norm() / norm,
    ))
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub energies: Vec<f64>,
    pub wavefunctions: Vec<WaveFunction>,
    pub ordering: OrderingSpec,
    /// `(left, right)` star-genvalue residual of `φ_n* ⊗ φ_n`.
    pub residuals: Vec<(f64, f64)>,
    pub phase_grid: PhaseGrid,
}

impl SpectralResult {
    /// `φ_m* ⊗ φ_n`, a solution of `H⋆Ψ = E_n Ψ`, `Ψ⋆H = E_m Ψ`.
    pub fn eigenfield(&self, m: usize, n: usize) -> Result<QuasiDistribution> {
        let get = |k: usize| {
            self.wavefunctions
                .get(k)
                .ok_or_else(|| Error::Precondition(format!("level {k} was not computed")))
        };
        twisted_tensor(get(m)?, get(n)?, &self.ordering, &self.phase_grid)
    }
}

/// Phase grid over the band of `axis` whose `y` lattice has the `x` step and
/// twice the `x` span, enough for the kernel of any pair of states on `axis`.
pub fn companion_grid(axis: &Axis) -> Result<PhaseGrid> {
    let half = axis.n as f64 * PI * axis.hbar / (axis.max - axis.min);
    Ok(PhaseGrid {
        x: *axis,
        p: Axis::new(2 * axis.n, -half, half, axis.hbar)?,
    })
}

/// Weyl symbol of the `(σ, S)`-ordered operator of `a`.
pub fn weyl_symbol(a: &PolyH, spec: &OrderingSpec) -> Result<PolyH> {
    let word = spec.smoother.word().ok_or_else(|| {
        Error::Unsupported("operator ordering under a Cohen multiplier smoother".into())
    })?;
    Ok(DiffOpWord::gauge(0.5 - spec.sigma).apply(&word.apply(a, true), false))
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ c 2^{-n} Σ_k C(n,k) q̂^k p̂^m q̂^{n-k} ψ` for a Weyl symbol.
fn apply_weyl(b: &PolyH, psi: &WaveFunction) -> WaveFunction {
    let hbar = psi.axis().hbar;
    let b = b.with_hbar(hbar);
    let mut out = WaveFunction::zeros(psi.axis());
    for (t, c) in b.terms() {
        let w = 0.5f64.powi(t.n as i32);
        for k in 0..=t.n {
            let inner = psi.multiply_by(|x| C64::new(x.powi((t.n - k) as i32), 0.0));
            let moved = inner.momentum_power(t.m);
            let s = c * w * binomial(t.n, k);
            let term = moved.multiply_by(|x| s * x.powi(k as i32));
            out = out.add(&term).unwrap();
        }
    }
    out
}

/// `A_{σ,S}(q̂, p̂) ψ` through the Weyl-symmetric realisation used by the eigensolver.
pub fn apply_ordered(
    h: &ObservableSpec,
    spec: &OrderingSpec,
    psi: &WaveFunction,
) -> Result<WaveFunction> {
    let mut out = WaveFunction::zeros(psi.axis());
    for term in &h.terms {
        let t = match term {
            ObservableTerm::XOnly(v) => {
                check_untouched(&spec.smoother, true)?;
                psi.multiply_by(|x| v(x))
            }
            ObservableTerm::POnly(t) => {
                check_untouched(&spec.smoother, false)?;
                psi.map_spectrum(|xi| t(xi))
            }
            ObservableTerm::Poly(p) => apply_weyl(&weyl_symbol(p, spec)?, psi),
        };
        out = out.add(&t)?;
    }
    Ok(out)
}

/// Columns of `f(p̂)` in the sample basis.
fn spectral_matrix(axis: &Axis, f: impl Fn(f64) -> C64 + Sync) -> DMatrix<C64> {
    let n = axis.n;
    let cols: Vec<Vec<C64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut e = WaveFunction::zeros(axis);
            e.data_mut()[j] = C64::new(1.0, 0.0);
            e.map_spectrum(&f).into_data()
        })
        .collect();
    DMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Dense matrix of `A_{σ,S}(q̂, p̂)` in the sample basis.
pub fn operator_matrix(
    h: &ObservableSpec,
    spec: &OrderingSpec,
    axis: &Axis,
) -> Result<DMatrix<C64>> {
    let n = axis.n;
    let xs = axis.points();
    let hbar = axis.hbar;
    let mut out = DMatrix::<C64>::zeros(n, n);
    let mut powers: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
    for term in &h.terms {
        match term {
            ObservableTerm::XOnly(v) => {
                check_untouched(&spec.smoother, true)?;
                for (i, &x) in xs.iter().enumerate() {
                    out[(i, i)] += v(x);
                }
            }
            ObservableTerm::POnly(t) => {
                check_untouched(&spec.smoother, false)?;
                out += spectral_matrix(axis, |xi| t(xi));
            }
            ObservableTerm::Poly(p) => {
                let b = weyl_symbol(p, spec)?.with_hbar(hbar);
                for (t, c) in b.terms() {
                    let pm = powers.entry(t.m).or_insert_with(|| {
                        spectral_matrix(axis, |xi| C64::new(xi.powi(t.m as i32), 0.0))
                    });
                    let w = 0.5f64.powi(t.n as i32);
                    for k in 0..=t.n {
                        let s = c * w * binomial(t.n, k);
                        let left: Vec<f64> = xs.iter().map(|x| x.powi(k as i32)).collect();
                        let right: Vec<f64> = xs.iter().map(|x| x.powi((t.n - k) as i32)).collect();
                        for j in 0..n {
                            let sr = s * right[j];
                            for i in 0..n {
                                out[(i, j)] += sr * left[i] * pm[(i, j)];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    let scale = m.norm().max(1.0);
    (m - m.adjoint()).norm() / scale
}

fn offending_term(h: &ObservableSpec, spec: &OrderingSpec, axis: &Axis) -> String {
    for term in &h.terms {
        match term {
            ObservableTerm::Poly(p) => {
                if let Some(word) = spec.smoother.word() {
                    let op = sigma_s_order(p, spec.sigma, &word);
                    if let Some(t) = op.hermiticity_defect(Some(axis.hbar), 1e-12) {
                        return t;
                    }
                }
            }
            other => {
                let single = ObservableSpec {
                    terms: vec![other.clone()],
                };
                if let Ok(m) = operator_matrix(&single, spec, axis) {
                    if hermiticity_defect(&m) > HERMITICITY_TOL {
                        return match other {
                            ObservableTerm::XOnly(_) => "V(x)".into(),
                            _ => "T(p)".into(),
                        };
                    }
                }
            }
        }
    }
    "combined operator".into()
}

fn edge_and_band_weight(v: &WaveFunction) -> (f64, f64) {
    let n = v.data().len();
    let total: f64 = v.data().iter().map(|z| z.norm_sqr()).sum();
    let edge = n / 16;
    let near_edge: f64 = v.data()[..edge]
        .iter()
        .chain(&v.data()[n - edge..])
        .map(|z| z.norm_sqr())
        .sum();
    let spec = v.momentum_amplitude();
    let stotal: f64 = spec.iter().map(|z| z.norm_sqr()).sum();
    let band = n / 8;
    let near_band: f64 = spec[..band]
        .iter()
        .chain(&spec[n - band..])
        .map(|z| z.norm_sqr())
        .sum();
    (near_edge / total, near_band / stotal)
}

fn orthonormalize_degenerate(energies: &[f64], vecs: &mut [Vec<C64>]) {
    let mut start = 0;
    while start < energies.len() {
        let mut end = start + 1;
        while end < energies.len() && (energies[end] - energies[start]).abs() < DEGENERACY_WINDOW {
            end += 1;
        }
        for i in start..end {
            for j in start..i {
                let (a, b) = vecs.split_at_mut(i);
                let proj: C64 = a[j].iter().zip(&b[0]).map(|(u, v)| u.conj() * v).sum();
                for (v, u) in b[0].iter_mut().zip(&a[j]) {
                    *v -= proj * u;
                }
            }
            let nrm = vecs[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            vecs[i].iter_mut().for_each(|z| *z /= nrm);
        }
        start = end;
    }
}

/// `‖S f‖`, evaluated on the spectrum so that no inverse transform is needed.
fn smoothed_norm(f: &PhaseField, spec: &OrderingSpec) -> Result<f64> {
    if spec.smoother.is_identity() {
        return Ok(f.l2_norm());
    }
    let s = fourier_full(f)?;
    let hbar = f.grid().hbar();
    let np = s.grid().np();
    let mut acc = 0.0;
    for (idx, v) in s.data().iter().enumerate() {
        let (xi, eta) = s.coords(idx / np, idx % np);
        let m = spec
            .smoother
            .multiplier(xi, eta, hbar)
            .ok_or_else(|| Error::Unsupported("smoother without a Fourier multiplier".into()))?;
        acc += m.norm_sqr() * v.norm_sqr();
    }
    Ok(acc.sqrt())
}

/// Star-genvalue residuals of `φ* ⊗ φ`, computed in the unsmoothed frame where
/// `H ⋆ Ψ = S(S⁻¹H ⋆_σ S⁻¹Ψ)`.
fn eigen_residuals(
    h: &ObservableSpec,
    wf: &WaveFunction,
    e: f64,
    spec: &OrderingSpec,
    grid: &PhaseGrid,
) -> Result<(f64, f64)> {
    if spec.smoother.is_identity() {
        return stargen_residual(h, &twisted_tensor(wf, wf, spec, grid)?, e);
    }
    let plain_spec = OrderingSpec::sigma(spec.sigma)?;
    let plain = twisted_tensor(wf, wf, &plain_spec, grid)?.field;
    let symbol = pull_back_symbol(h, spec)?;
    let shift = C64::new(-e, 0.0);
    let left = bopp_apply(&symbol, &plain, &plain_spec, Side::Left)?.axpy(shift, &plain)?;
    let right = bopp_apply(&symbol, &plain, &plain_spec, Side::Right)?.axpy(shift, &plain)?;
    let norm = smoothed_norm(&plain, spec)?;
    Ok((
        smoothed_norm(&left, spec)? / norm,
        smoothed_norm(&right, spec)? / norm,
    ))
}

/// Lowest `n_levels` eigenpairs of `H_{σ,S}(q̂, p̂)` on `axis`.
pub fn spectrum_via_schrodinger(
    h: &ObservableSpec,
    spec: &OrderingSpec,
    n_levels: usize,
    axis: &Axis,
) -> Result<SpectralResult> {
    let n = axis.n;
    if n > 1024 {
        return Err(Error::Precondition(format!(
            "dense solver limited to 1024 samples, got {n}"
        )));
    }
    if n_levels == 0 || n_levels > n {
        return Err(Error::Precondition(format!(
            "cannot return {n_levels} levels from {n} samples"
        )));
    }
    if let Smoother::Cohen(_) = spec.smoother {
        return Err(Error::Unsupported(
            "eigensolver under a Cohen multiplier smoother".into(),
        ));
    }
    for term in &h.terms {
        if let ObservableTerm::Poly(p) = term {
            if let Some(t) = sigma_s_order(p, spec.sigma, &spec.smoother.word().unwrap())
                .hermiticity_defect(Some(axis.hbar), 1e-12)
            {
                return Err(Error::NonHermitian(t));
            }
        }
    }
    let m = operator_matrix(h, spec, axis)?;
    if hermiticity_defect(&m) > HERMITICITY_TOL {
        return Err(Error::NonHermitian(offending_term(h, spec, axis)));
    }
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);

    let real = m.iter().all(|z| z.im.abs() <= 1e-14 * (1.0 + z.re.abs()));
    let (values, vectors): (Vec<f64>, Vec<Vec<C64>>) = if real {
        let eig = SymmetricEigen::new(m.map(|z| z.re));
        let vs = (0..n)
            .map(|j| {
                eig.eigenvectors
                    .column(j)
                    .iter()
                    .map(|&v| C64::new(v, 0.0))
                    .collect()
            })
            .collect();
        (eig.eigenvalues.iter().copied().collect(), vs)
    } else {
        let eig = SymmetricEigen::new(m);
        let vs = (0..n)
            .map(|j| eig.eigenvectors.column(j).iter().copied().collect())
            .collect();
        (eig.eigenvalues.iter().copied().collect(), vs)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let energies: Vec<f64> = order[..n_levels].iter().map(|&k| values[k]).collect();
    let mut vecs: Vec<Vec<C64>> = order[..n_levels]
        .iter()
        .map(|&k| vectors[k].clone())
        .collect();
    orthonormalize_degenerate(&energies, &mut vecs);

    let s = 1.0 / axis.step().sqrt();
    let mut wavefunctions = Vec::with_capacity(n_levels);
    for (level, v) in vecs.into_iter().enumerate() {
        let wf = WaveFunction::new(*axis, v.into_iter().map(|z| z * s).collect())?.fix_phase();
        let (edge, band) = edge_and_band_weight(&wf);
        if edge > RESOLUTION_TOL || band > RESOLUTION_TOL {
            return Err(Error::Resolution(format!(
                "level {level} leaks to the lattice edge ({edge:.1e}) or band limit ({band:.1e}); \
                 at most {level} levels are reliable on this axis"
            )));
        }
        wavefunctions.push(wf);
    }

    let phase_grid = companion_grid(axis)?;
    let residuals = wavefunctions
        .iter()
        .zip(&energies)
        .map(|(wf, &e)| eigen_residuals(h, wf, e, spec, &phase_grid))
        .collect::<Result<_>>()?;
    Ok(SpectralResult {
        energies,
        wavefunctions,
        ordering: spec.clone(),
        residuals,
        phase_grid,
    })
}

#[derive(Clone, Debug)]
pub struct GaugeReport {
    /// `(σ, smoother kind, energies)` per ordering.
    pub spectra: Vec<(f64, &'static str, Vec<f64>)>,
    pub max_deviation: f64,
    pub consistent: bool,
}

fn is_natural(h: &ObservableSpec) -> bool {
    h.terms.iter().all(|t| match t {
        ObservableTerm::Poly(p) => p.split_natural().is_some(),
        _ => true,
    })
}

/// Spectra of `h` across every `(σ, S)` combination and their largest pairwise gap.
pub fn gauge_spectrum_check(
    h: &ObservableSpec,
    sigmas: &[f64],
    smoothers: &[Smoother],
    n_levels: usize,
    axis: &Axis,
) -> Result<GaugeReport> {
    if !is_natural(h) {
        return Err(Error::Precondition(
            "gauge check needs a Hamiltonian of the form T(p) + V(x)".into(),
        ));
    }
    let mut spectra = Vec::new();
    for s in smoothers {
        for &sigma in sigmas {
            let spec = OrderingSpec::new(sigma, s.clone())?;
            let r = spectrum_via_schrodinger(h, &spec, n_levels, axis)?;
            spectra.push((sigma, s.kind(), r.energies));
        }
    }
    let mut max_deviation: f64 = 0.0;
    for a in &spectra {
        for b in &spectra {
            for (x, y) in a.2.iter().zip(&b.2) {
                max_deviation = max_deviation.max((x - y).abs());
            }
        }
    }
    Ok(GaugeReport {
        spectra,
        max_deviation,
        consistent: max_deviation <= GAUGE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::sigma_order;

    #[test]
    fn weyl_symbol_reproduces_ordered_operator() {
        let a = PolyH::parse("x*p^2 + x^2*p + p^3 + x").unwrap();
        for &(s, al, be) in &[(0.0, 0.0, 0.0), (0.3, 0.1, 0.2), (1.0, 0.0, 0.4)] {
            let spec = OrderingSpec::gaussian(s, al, be).unwrap();
            let b = weyl_symbol(&a, &spec).unwrap();
            let want = sigma_s_order(&a, s, &spec.smoother.word().unwrap());
            assert!(sigma_order(&b, 0.5).approx_eq(&want, 1e-14));
        }
    }

    #[test]
    fn weyl_route_matches_standard_route_on_smooth_states() {
        let axis = Axis::new(128, -10.0, 10.0, 0.9).unwrap();
        let psi = WaveFunction::from_fn(&axis, |x| C64::new(-x * x / 2.0, 0.3 * x).exp());
        let a: ObservableSpec = PolyH::parse("x*p^2 + p^2/2 + x^4").unwrap().into();
        for s in [0.0, 0.25, 1.0] {
            let spec = OrderingSpec::gaussian(s, 0.1, 0.05).unwrap();
            let w = apply_ordered(&a, &spec, &psi).unwrap();
            let nf = psi.apply_observable(&a, &spec).unwrap();
            assert!(w.rel_distance(&nf).unwrap() < 1e-9, "{s}");
        }
    }

    #[test]
    fn non_hermitian_symbol_is_named() {
        let axis = Axis::new(64, -8.0, 8.0, 1.0).unwrap();
        let h: ObservableSpec = PolyH::parse("p^2/2 + x^2/2 + i*x*p").unwrap().into();
        match spectrum_via_schrodinger(&h, &OrderingSpec::weyl(), 3, &axis) {
            Err(Error::NonHermitian(t)) => assert!(t.contains('q') && t.contains('p'), "{t}"),
            other => panic!("{other:?}"),
        }
        let v = ObservableSpec::poly(PolyH::parse("p^2/2").unwrap())
            .plus(ObservableSpec::x_only(|x| C64::new(x * x, 0.1 * x)));
        match spectrum_via_schrodinger(&v, &OrderingSpec::weyl(), 3, &axis) {
            Err(Error::NonHermitian(t)) => assert_eq!(t, "V(x)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resolution_bound_is_reported() {
        let axis = Axis::new(32, -4.0, 4.0, 1.0).unwrap();
        let h: ObservableSpec = PolyH::parse("p^2/2 + x^2/2").unwrap().into();
        match spectrum_via_schrodinger(&h, &OrderingSpec::weyl(), 20, &axis) {
            Err(Error::Resolution(msg)) => assert!(msg.contains("at most")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn oscillator_levels_and_residuals() {
        let axis = Axis::new(128, -10.0, 10.0, 1.0).unwrap();
        let h: ObservableSpec = PolyH::parse("p^2/2 + x^2/2").unwrap().into();
        let r = spectrum_via_schrodinger(&h, &OrderingSpec::weyl(), 5, &axis).unwrap();
        for (n, e) in r.energies.iter().enumerate() {
            assert!((e - (n as f64 + 0.5)).abs() < 1e-10);
            let (l, rr) = r.residuals[n];
            assert!(l < 1e-8 && rr < 1e-8, "{n} {l} {rr}");
        }
        for i in 0..5 {
            for j in 0..5 {
                let ip = r.wavefunctions[i].inner(&r.wavefunctions[j]).unwrap();
                assert!((ip - if i == j { 1.0 } else { 0.0 }).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn degenerate_levels_are_orthonormal() {
        let e = [1.0, 1.0 + 1e-12, 2.0];
        let mut v = vec![
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        ];
        orthonormalize_degenerate(&e, &mut v);
        let ip: C64 = v[0].iter().zip(&v[1]).map(|(a, b)| a.conj() * b).sum();
        assert!(ip.norm() < 1e-15);
        assert!((v[1][1].norm() - 1.0).abs() < 1e-15);
    }
}
