//! Numerical σ-star products on the lattice, Bopp-operator actions, smoothers,
//! gauge maps and the involution.
//!
//! The star product is the twisted convolution of the spectra.  The `xi` sum is
//! carried out directly; for each pair of `xi` columns the `eta` sum is a plain
//! convolution, done as a pointwise product of two spectrally shifted rows in `p`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{
    fourier_full, fourier_inverse, fourier_partial, AxisId, Direction, PhaseField, Repr,
};
use crate::poly::{sigma_order, DiffOpWord, PolyH};
use crate::wave::check_untouched;

/// Spectral amplification above which a smoother inverse is cut off.
pub const AMPLIFICATION_CAP: f64 = 1e6;
/// Relative spectral content beyond the cutoff that makes deconvolution ill-posed.
pub const DECONVOLUTION_TOL: f64 = 1e-12;
/// Relative norm allowed in the outer band before a product is flagged.
pub const TAIL_TOL: f64 = 1e-10;

pub type ScalarFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;
pub type MultiplierFn = Arc<dyn Fn(f64, f64) -> C64 + Send + Sync>;

/// Cohen-type multiplier `F(xi, eta)`; the smoother inverse multiplies the spectrum by `F`.
#[derive(Clone)]
pub struct CohenMultiplier {
    f: MultiplierFn,
}

impl CohenMultiplier {
    /// Checks `F(0,0) = 1` and a vanishing gradient at the origin.
    pub fn new(f: MultiplierFn) -> Result<Self> {
        let f0 = f(0.0, 0.0);
        if (f0 - 1.0).norm() > 1e-12 {
            return Err(Error::Inadmissible(format!("F(0,0) = {f0}, expected 1")));
        }
        let h = 1e-5;
        let gx = (f(h, 0.0) - f(-h, 0.0)) / (2.0 * h);
        let gy = (f(0.0, h) - f(0.0, -h)) / (2.0 * h);
        if gx.norm() > 1e-6 || gy.norm() > 1e-6 {
            return Err(Error::Inadmissible(format!(
                "gradient of F at the origin is ({gx}, {gy})"
            )));
        }
        Ok(Self { f })
    }

    pub fn eval(&self, xi: f64, eta: f64) -> C64 {
        (self.f)(xi, eta)
    }

    fn conj(&self) -> Self {
        let f = self.f.clone();
        Self {
            f: Arc::new(move |xi, eta| f(-xi, -eta).conj()),
        }
    }
}

impl fmt::Debug for CohenMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CohenMultiplier")
    }
}

#[derive(Clone, Debug)]
pub enum Smoother {
    Identity,
    /// `exp(hbar alpha/2 ∂x² + hbar beta/2 ∂p²)`.
    GaussianAlphaBeta {
        alpha: f64,
        beta: f64,
    },
    Cohen(CohenMultiplier),
    Word(DiffOpWord),
}

impl Smoother {
    pub fn is_identity(&self) -> bool {
        match self {
            Smoother::Identity => true,
            Smoother::GaussianAlphaBeta { alpha, beta } => *alpha == 0.0 && *beta == 0.0,
            Smoother::Word(w) => w.is_identity(),
            Smoother::Cohen(_) => false,
        }
    }

    /// Spectral multiplier of `S` itself, when `S` is one.
    pub fn multiplier(&self, xi: f64, eta: f64, hbar: f64) -> Option<C64> {
        match self {
            Smoother::Identity => Some(C64::new(1.0, 0.0)),
            Smoother::GaussianAlphaBeta { alpha, beta } => Some(C64::new(
                (-(alpha * xi * xi + beta * eta * eta) / (2.0 * hbar)).exp(),
                0.0,
            )),
            Smoother::Cohen(c) => Some(1.0 / c.eval(xi, eta)),
            Smoother::Word(w) => w.multiplier_exponent(xi, eta, hbar).map(|e| e.exp()),
        }
    }

    pub fn is_multiplier(&self) -> bool {
        match self {
            Smoother::Word(w) => w.is_multiplier(),
            _ => true,
        }
    }

    /// Symbolic form acting on polynomial symbols.
    pub fn word(&self) -> Option<DiffOpWord> {
        match self {
            Smoother::Identity => Some(DiffOpWord::identity()),
            Smoother::GaussianAlphaBeta { alpha, beta } => {
                Some(DiffOpWord::gaussian(*alpha, *beta))
            }
            Smoother::Word(w) => Some(w.clone()),
            Smoother::Cohen(_) => None,
        }
    }

    /// `S̄` with `S̄ f = (S f*)*`.
    pub fn conj(&self) -> Smoother {
        match self {
            Smoother::Cohen(c) => Smoother::Cohen(c.conj()),
            Smoother::Word(w) => Smoother::Word(w.conj()),
            other => other.clone(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Smoother::Identity => "identity",
            Smoother::GaussianAlphaBeta { .. } => "gaussian",
            Smoother::Cohen(_) => "cohen",
            Smoother::Word(_) => "word",
        }
    }
}

/// The pair `(σ, S)` fixing a star product.
#[derive(Clone, Debug)]
pub struct OrderingSpec {
    pub sigma: f64,
    pub smoother: Smoother,
}

impl OrderingSpec {
    pub fn new(sigma: f64, smoother: Smoother) -> Result<Self> {
        if !(0.0..=1.0).contains(&sigma) {
            return Err(Error::Precondition(format!(
                "sigma = {sigma} outside [0, 1]"
            )));
        }
        if let Smoother::GaussianAlphaBeta { alpha, beta } = smoother {
            if !alpha.is_finite() || !beta.is_finite() {
                return Err(Error::Precondition("non-finite smoother width".into()));
            }
        }
        Ok(Self { sigma, smoother })
    }

    pub fn sigma(sigma: f64) -> Result<Self> {
        Self::new(sigma, Smoother::Identity)
    }

    pub fn weyl() -> Self {
        Self {
            sigma: 0.5,
            smoother: Smoother::Identity,
        }
    }

    pub fn gaussian(sigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(sigma, Smoother::GaussianAlphaBeta { alpha, beta })
    }

    pub fn sigma_bar(&self) -> f64 {
        1.0 - self.sigma
    }

    /// `(σ̄, S̄)`, the spec whose products conjugate into this one.
    pub fn conj(&self) -> OrderingSpec {
        OrderingSpec {
            sigma: 1.0 - self.sigma,
            smoother: self.smoother.conj(),
        }
    }
}

#[derive(Clone)]
pub enum ObservableTerm {
    XOnly(ScalarFn),
    POnly(ScalarFn),
    Poly(PolyH),
}

impl fmt::Debug for ObservableTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableTerm::XOnly(_) => f.write_str("V(x)"),
            ObservableTerm::POnly(_) => f.write_str("T(p)"),
            ObservableTerm::Poly(p) => write!(f, "{p}"),
        }
    }
}

/// An observable as a sum of `V(x)`, `T(p)` and polynomial terms.
#[derive(Clone, Debug, Default)]
pub struct ObservableSpec {
    pub terms: Vec<ObservableTerm>,
}

impl ObservableSpec {
    pub fn poly(p: PolyH) -> Self {
        Self {
            terms: vec![ObservableTerm::Poly(p)],
        }
    }

    pub fn x_only(v: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Self {
            terms: vec![ObservableTerm::XOnly(Arc::new(v))],
        }
    }

    pub fn p_only(t: impl Fn(f64) -> C64 + Send + Sync + 'static) -> Self {
        Self {
            terms: vec![ObservableTerm::POnly(Arc::new(t))],
        }
    }

    pub fn plus(mut self, other: ObservableSpec) -> Self {
        self.terms.extend(other.terms);
        self
    }

    /// Sum of the terms when every one is polynomial.
    pub fn as_poly(&self) -> Option<PolyH> {
        self.terms.iter().try_fold(PolyH::zero(), |acc, t| match t {
            ObservableTerm::Poly(p) => Some(acc.add(p)),
            _ => None,
        })
    }

    pub fn conj(&self) -> ObservableSpec {
        let terms = self
            .terms
            .iter()
            .map(|t| match t {
                ObservableTerm::XOnly(f) => {
                    let f = f.clone();
                    ObservableTerm::XOnly(Arc::new(move |x| f(x).conj()))
                }
                ObservableTerm::POnly(f) => {
                    let f = f.clone();
                    ObservableTerm::POnly(Arc::new(move |p| f(p).conj()))
                }
                ObservableTerm::Poly(p) => ObservableTerm::Poly(p.conj()),
            })
            .collect();
        ObservableSpec { terms }
    }

    /// Pointwise value of the symbol.
    pub fn eval(&self, x: f64, p: f64, hbar: f64) -> C64 {
        self.terms
            .iter()
            .map(|t| match t {
                ObservableTerm::XOnly(f) => f(x),
                ObservableTerm::POnly(f) => f(p),
                ObservableTerm::Poly(q) => q.eval(x, p, hbar),
            })
            .sum()
    }
}

impl From<PolyH> for ObservableSpec {
    fn from(p: PolyH) -> Self {
        ObservableSpec::poly(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StarOptions {
    /// Embed both factors in a grid of twice the extent before multiplying.
    pub zero_pad: bool,
}

/// A star product together with its aliasing diagnostic.
#[derive(Clone, Debug)]
pub struct StarProduct {
    pub field: PhaseField,
    /// Largest outer-band norm fraction among inputs and their spectra.
    pub tail: f64,
}

impl StarProduct {
    pub fn tail_exceeded(&self) -> bool {
        self.tail > TAIL_TOL
    }
}

/// `f ⋆_σ g` on the lattice.
pub fn star_sigma(f: &PhaseField, g: &PhaseField, sigma: f64) -> Result<StarProduct> {
    star_sigma_with(f, g, sigma, StarOptions::default())
}

pub fn star_sigma_with(
    f: &PhaseField,
    g: &PhaseField,
    sigma: f64,
    opts: StarOptions,
) -> Result<StarProduct> {
    f.expect(Repr::PHASE, "phase representation")?;
    g.expect(Repr::PHASE, "phase representation")?;
    f.grid().check_same(g.grid())?;
    if opts.zero_pad {
        let out = star_sigma_with(
            &f.zero_padded()?,
            &g.zero_padded()?,
            sigma,
            StarOptions::default(),
        )?;
        return Ok(StarProduct {
            field: out.field.cropped_to(f.grid())?,
            tail: out.tail,
        });
    }
    let ff = fourier_full(f)?;
    let fg = fourier_full(g)?;
    let tail = [
        f.tail_fraction(),
        g.tail_fraction(),
        ff.tail_fraction(),
        fg.tail_fraction(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if tail > TAIL_TOL {
        log::warn!("star product inputs not contained in the lattice (tail {tail:.3e})");
    }
    let field = twisted_convolution(&ff, &fg, sigma)?;
    Ok(StarProduct { field, tail })
}

fn twisted_convolution(ff: &PhaseField, fg: &PhaseField, sigma: f64) -> Result<PhaseField> {
    let grid = *ff.grid();
    let (nx, np) = (grid.nx(), grid.np());
    let hbar = grid.hbar();
    let sb = 1.0 - sigma;
    let xi = grid.x.conj_points();
    let eta = grid.p.conj_points();
    let ptr = grid.p.transform();

    // f rows are read at p + σ̄ xi_c, g rows at p - σ xi_a.
    let shift_table = |scale: f64| -> Vec<C64> {
        let mut t = Vec::with_capacity(nx * np);
        for &x in &xi {
            for &e in &eta {
                t.push(C64::from_polar(1.0, -e * scale * x / hbar));
            }
        }
        t
    };
    let tf = shift_table(sb);
    let tg = shift_table(-sigma);

    let row_norm = |s: &PhaseField| -> Vec<f64> {
        s.data()
            .chunks(np)
            .map(|r| r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    };
    let nf = row_norm(ff);
    let ng = row_norm(fg);
    let cut =
        1e-18 * nf.iter().fold(0.0f64, |a, &b| a.max(b)) * ng.iter().fold(0.0f64, |a, &b| a.max(b));

    let pref = grid.dxi() / (2.0 * PI * hbar).sqrt();
    let half = nx / 2;
    let (a_data, b_data) = (ff.data(), fg.data());
    let mut out = vec![C64::new(0.0, 0.0); nx * np];
    out.par_chunks_mut(np).enumerate().for_each_init(
        || {
            (
                vec![C64::new(0.0, 0.0); np],
                vec![C64::new(0.0, 0.0); np],
                ptr.scratch(),
            )
        },
        |(ra, rb, scratch), (k, acc)| {
            // xi_c = xi_k - xi_a lies on the lattice for c = k - a + n/2.
            let lo = (k + half).saturating_sub(nx - 1);
            let hi = (k + half).min(nx - 1);
            for a in lo..=hi {
                let c = k + half - a;
                if nf[a] * ng[c] <= cut {
                    continue;
                }
                let (fa, sa) = (&a_data[a * np..(a + 1) * np], &tf[c * np..(c + 1) * np]);
                let (gc, sc) = (&b_data[c * np..(c + 1) * np], &tg[a * np..(a + 1) * np]);
                for l in 0..np {
                    ra[l] = fa[l] * sa[l];
                    rb[l] = gc[l] * sc[l];
                }
                ptr.from_conjugate(ra, -1.0, scratch);
                ptr.from_conjugate(rb, -1.0, scratch);
                for l in 0..np {
                    acc[l] += ra[l] * rb[l];
                }
            }
            for v in acc.iter_mut() {
                *v *= pref;
            }
        },
    );
    let mixed = PhaseField::from_vec(&grid, Repr::XI_P, out)?;
    fourier_partial(&mixed, AxisId::X, Direction::Inverse)
}

/// Multiply the spectrum by `m`, refusing fields whose content beyond the
/// amplification cap would matter.
pub fn apply_capped_multiplier(
    f: &PhaseField,
    m: impl Fn(f64, f64) -> C64 + Sync,
) -> Result<PhaseField> {
    let mut s = fourier_full(f)?;
    let np = s.grid().np();
    let mut total = 0.0;
    let mut beyond = 0.0;
    let mut mults = Vec::with_capacity(s.data().len());
    for (idx, v) in s.data().iter().enumerate() {
        let (xi, eta) = s.coords(idx / np, idx % np);
        let mv = m(xi, eta);
        let e = v.norm_sqr();
        total += e;
        if !(mv.norm() <= AMPLIFICATION_CAP) {
            beyond += e;
            mults.push(C64::new(0.0, 0.0));
        } else {
            mults.push(mv);
        }
    }
    if total > 0.0 && (beyond / total).sqrt() > DECONVOLUTION_TOL {
        return Err(Error::IllPosed);
    }
    for (v, mv) in s.data_mut().iter_mut().zip(&mults) {
        *v *= mv;
    }
    fourier_inverse(&s)
}

/// `S f` (`Direction::Forward`) or `S⁻¹ f` (`Direction::Inverse`).
pub fn apply_smoother(f: &PhaseField, spec: &OrderingSpec, dir: Direction) -> Result<PhaseField> {
    if spec.smoother.is_identity() {
        return Ok(f.clone());
    }
    if !spec.smoother.is_multiplier() {
        return Err(Error::Unsupported(
            "smoother word with x- or p-dependent generators on a sampled field".into(),
        ));
    }
    let hbar = f.grid().hbar();
    let sm = &spec.smoother;
    apply_capped_multiplier(f, |xi, eta| {
        let m = sm.multiplier(xi, eta, hbar).unwrap();
        match dir {
            Direction::Forward => m,
            Direction::Inverse => 1.0 / m,
        }
    })
}

/// `f ⋆_{σ,S} g = S(S⁻¹f ⋆_σ S⁻¹g)`.
pub fn star_sigma_s(f: &PhaseField, g: &PhaseField, spec: &OrderingSpec) -> Result<StarProduct> {
    if spec.smoother.is_identity() {
        return star_sigma(f, g, spec.sigma);
    }
    let a = apply_smoother(f, spec, Direction::Inverse)?;
    let b = apply_smoother(g, spec, Direction::Inverse)?;
    let prod = star_sigma(&a, &b, spec.sigma)?;
    Ok(StarProduct {
        field: apply_smoother(&prod.field, spec, Direction::Forward)?,
        tail: prod.tail,
    })
}

/// Carry a field from the σ-representation to the σ′-representation.
pub fn gauge_transform(f: &PhaseField, sigma: f64, sigma_prime: f64) -> Result<PhaseField> {
    let hbar = f.grid().hbar();
    let d = sigma_prime - sigma;
    let mut s = fourier_full(f)?;
    s.multiply_by(|xi, eta| C64::from_polar(1.0, d * xi * eta / hbar));
    fourier_inverse(&s)
}

pub fn star_commutator(f: &PhaseField, g: &PhaseField, spec: &OrderingSpec) -> Result<PhaseField> {
    star_sigma_s(f, g, spec)?
        .field
        .sub(&star_sigma_s(g, f, spec)?.field)
}

/// `(f ⋆ g - g ⋆ f) / (i hbar)`.
pub fn moyal_bracket(f: &PhaseField, g: &PhaseField, spec: &OrderingSpec) -> Result<PhaseField> {
    let hbar = f.grid().hbar();
    Ok(star_commutator(f, g, spec)?.scale(C64::new(0.0, -1.0 / hbar)))
}

/// `A† = S S_{σ-σ̄} S̄⁻¹ A*`.
pub fn involution_dagger(a: &PhaseField, spec: &OrderingSpec) -> Result<PhaseField> {
    let conj = a.conj();
    let d = spec.sigma - spec.sigma_bar();
    if spec.smoother.is_identity() && d == 0.0 {
        return Ok(conj);
    }
    if !spec.smoother.is_multiplier() {
        return Err(Error::Unsupported(
            "involution for a non-multiplier smoother word".into(),
        ));
    }
    let hbar = a.grid().hbar();
    let sm = &spec.smoother;
    let sb = sm.conj();
    apply_capped_multiplier(&conj, |xi, eta| {
        let ms = sm.multiplier(xi, eta, hbar).unwrap();
        let mb = sb.multiplier(xi, eta, hbar).unwrap();
        ms / mb * C64::from_polar(1.0, d * xi * eta / hbar)
    })
}

/// `A ⋆ Ψ` (left) or `Ψ ⋆ A` (right) through the Bopp operators.
pub fn bopp_apply(
    a: &ObservableSpec,
    psi: &PhaseField,
    spec: &OrderingSpec,
    side: Side,
) -> Result<PhaseField> {
    if spec.smoother.is_identity() {
        psi.expect(Repr::PHASE, "phase representation")?;
        return bopp_sigma(a, psi, spec.sigma, side);
    }
    apply_smoother(
        &bopp_apply_pulled(a, psi, spec, side)?,
        spec,
        Direction::Forward,
    )
}

/// `S⁻¹A`, defined term by term; `V(x)` and `T(p)` pass only when `S` leaves them fixed.
pub fn pull_back_symbol(a: &ObservableSpec, spec: &OrderingSpec) -> Result<ObservableSpec> {
    let word = spec.smoother.word().ok_or_else(|| {
        Error::Unsupported("Bopp action under a Cohen multiplier smoother".into())
    })?;
    let mut out = ObservableSpec::default();
    for term in &a.terms {
        out.terms.push(match term {
            ObservableTerm::Poly(p) => ObservableTerm::Poly(word.apply(p, true)),
            ObservableTerm::XOnly(_) => {
                check_untouched(&spec.smoother, true)?;
                term.clone()
            }
            ObservableTerm::POnly(_) => {
                check_untouched(&spec.smoother, false)?;
                term.clone()
            }
        });
    }
    Ok(out)
}

/// `S⁻¹(A ⋆ Ψ)` (or the right action), i.e. the Bopp action before the final
/// smoothing. Integrals agree with those of [`bopp_apply`].
pub fn bopp_apply_pulled(
    a: &ObservableSpec,
    psi: &PhaseField,
    spec: &OrderingSpec,
    side: Side,
) -> Result<PhaseField> {
    psi.expect(Repr::PHASE, "phase representation")?;
    if spec.smoother.is_identity() {
        return bopp_sigma(a, psi, spec.sigma, side);
    }
    let pulled_symbol = pull_back_symbol(a, spec)?;
    let pulled = apply_smoother(psi, spec, Direction::Inverse)?;
    bopp_sigma(&pulled_symbol, &pulled, spec.sigma, side)
}

fn bopp_sigma(a: &ObservableSpec, psi: &PhaseField, sigma: f64, side: Side) -> Result<PhaseField> {
    match side {
        Side::Left => bopp_left(a, psi, sigma),
        // Ψ ⋆_σ A = (A* ⋆_σ̄ Ψ*)*
        Side::Right => Ok(bopp_left(&a.conj(), &psi.conj(), 1.0 - sigma)?.conj()),
    }
}

fn bopp_left(a: &ObservableSpec, psi: &PhaseField, sigma: f64) -> Result<PhaseField> {
    let hbar = psi.grid().hbar();
    let sb = 1.0 - sigma;
    let mut xy_acc: Option<PhaseField> = None;
    let mut add_xy = |f: PhaseField| -> Result<()> {
        xy_acc = Some(match xy_acc.take() {
            None => f,
            Some(acc) => acc.add(&f)?,
        });
        Ok(())
    };
    let mut lazy_xy: Option<PhaseField> = None;
    let mut lazy_xip: Option<PhaseField> = None;
    for term in &a.terms {
        match term {
            ObservableTerm::XOnly(v) => {
                let base = match &lazy_xy {
                    Some(f) => f.clone(),
                    None => {
                        let f = fourier_partial(psi, AxisId::P, Direction::Inverse)?;
                        lazy_xy = Some(f.clone());
                        f
                    }
                };
                let mut f = base;
                f.multiply_by(|x, y| v(x + sigma * y));
                add_xy(f)?;
            }
            ObservableTerm::POnly(t) => {
                let mut f = match &lazy_xip {
                    Some(f) => f.clone(),
                    None => {
                        let f = fourier_partial(psi, AxisId::X, Direction::Forward)?;
                        lazy_xip = Some(f.clone());
                        f
                    }
                };
                f.multiply_by(|xi, p| t(p + sb * xi));
                let back = fourier_partial(&f, AxisId::X, Direction::Inverse)?;
                add_xy(fourier_partial(&back, AxisId::P, Direction::Inverse)?)?;
            }
            ObservableTerm::Poly(poly) => {
                let op = sigma_order(poly, sigma).with_hbar(hbar);
                let mut by_m: std::collections::BTreeMap<u32, Vec<(u32, C64)>> = Default::default();
                for (t, c) in op.terms() {
                    by_m.entry(t.m).or_default().push((t.n, *c));
                }
                for (m, qs) in by_m {
                    let moved = if m == 0 {
                        match &lazy_xy {
                            Some(f) => f.clone(),
                            None => {
                                let f = fourier_partial(psi, AxisId::P, Direction::Inverse)?;
                                lazy_xy = Some(f.clone());
                                f
                            }
                        }
                    } else {
                        let mut f = match &lazy_xip {
                            Some(f) => f.clone(),
                            None => {
                                let f = fourier_partial(psi, AxisId::X, Direction::Forward)?;
                                lazy_xip = Some(f.clone());
                                f
                            }
                        };
                        f.multiply_by(|xi, p| C64::new((p + sb * xi).powi(m as i32), 0.0));
                        let back = fourier_partial(&f, AxisId::X, Direction::Inverse)?;
                        fourier_partial(&back, AxisId::P, Direction::Inverse)?
                    };
                    let mut f = moved;
                    f.multiply_by(|x, y| {
                        let q = x + sigma * y;
                        qs.iter().map(|(n, c)| c * q.powi(*n as i32)).sum()
                    });
                    add_xy(f)?;
                }
            }
        }
    }
    match xy_acc {
        None => Ok(PhaseField::zeros(psi.grid())),
        Some(f) => fourier_partial(&f, AxisId::P, Direction::Forward),
    }
}
