//! Phase-space lattice, sampled fields and the Fourier conventions used throughout.
//!
//! Samples are stored x-major: index `i * np + j` holds `f(x_i, p_j)`, so a row of
//! constant `x` is contiguous.  Conjugate lattices are centred, `v_k = (k - n/2) dv`
//! with `dv = 2 pi hbar / (n du)`.
//!
//! Full transform:   `Ff(xi, eta) = (1 / 2 pi hbar) ∬ f(x, p) exp(-i (xi x - eta p) / hbar) dx dp`.
//! Partial on x:     `(x -> xi)` with kernel `exp(-i xi x / hbar) / sqrt(2 pi hbar)`.
//! Partial on p:     forward maps `y -> p` with `exp(-i y p / hbar)`, inverse maps `p -> y`.
//! The full transform is the x-forward composed with the p-inverse.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// One periodic lattice axis `u_i = min + i (max - min) / n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Axis {
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub hbar: f64,
}

impl Axis {
    pub fn new(n: usize, min: f64, max: f64, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0) || !hbar.is_finite() {
            return Err(Error::NonPositiveHbar);
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::EmptySpan(min, max));
        }
        Ok(Self { n, min, max, hbar })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.n as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    pub fn conj_step(&self) -> f64 {
        2.0 * PI * self.hbar / (self.n as f64 * self.step())
    }

    pub fn conj_point(&self, k: usize) -> f64 {
        (k as f64 - (self.n / 2) as f64) * self.conj_step()
    }

    pub fn conj_points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.conj_point(k)).collect()
    }

    /// Whether `u` lies in the half-open primary period.
    pub fn contains(&self, u: f64) -> bool {
        u >= self.min && u < self.max
    }

    pub(crate) fn transform(&self) -> AxisTransform {
        AxisTransform::new(self)
    }
}

/// Cached FFT plans and origin phases for one axis.
#[derive(Clone)]
pub(crate) struct AxisTransform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    // exp(-i v_k u_min / hbar)
    origin: Vec<C64>,
    to_scale: f64,
    from_scale: f64,
    scratch_len: usize,
}

impl AxisTransform {
    fn new(axis: &Axis) -> Self {
        thread_local! {
            static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
        }
        let (fwd, inv) = PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            (p.plan_fft_forward(axis.n), p.plan_fft_inverse(axis.n))
        });
        let origin = (0..axis.n)
            .map(|k| C64::from_polar(1.0, -axis.conj_point(k) * axis.min / axis.hbar))
            .collect();
        let norm = (2.0 * PI * axis.hbar).sqrt();
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Self {
            n: axis.n,
            fwd,
            inv,
            origin,
            to_scale: axis.step() / norm,
            from_scale: axis.conj_step() / norm,
            scratch_len,
        }
    }

    pub fn scratch(&self) -> Vec<C64> {
        vec![C64::new(0.0, 0.0); self.scratch_len]
    }

    fn run(&self, row: &mut [C64], sign: f64, scratch: &mut [C64]) {
        if sign < 0.0 {
            self.fwd.process_with_scratch(row, scratch);
        } else {
            self.inv.process_with_scratch(row, scratch);
        }
    }

    fn phase(&self, k: usize, sign: f64) -> C64 {
        if sign < 0.0 {
            self.origin[k]
        } else {
            self.origin[k].conj()
        }
    }

    /// Direct lattice to conjugate lattice with kernel `exp(i sign v u / hbar)`.
    pub fn to_conjugate(&self, row: &mut [C64], sign: f64, scratch: &mut [C64]) {
        debug_assert_eq!(row.len(), self.n);
        for v in row.iter_mut().skip(1).step_by(2) {
            *v = -*v;
        }
        self.run(row, sign, scratch);
        for (k, v) in row.iter_mut().enumerate() {
            *v *= self.phase(k, sign) * self.to_scale;
        }
    }

    /// Conjugate lattice to direct lattice with kernel `exp(i sign v u / hbar)`.
    pub fn from_conjugate(&self, row: &mut [C64], sign: f64, scratch: &mut [C64]) {
        debug_assert_eq!(row.len(), self.n);
        for (k, v) in row.iter_mut().enumerate() {
            *v *= self.phase(k, sign);
        }
        self.run(row, sign, scratch);
        for (i, v) in row.iter_mut().enumerate() {
            let s = if i % 2 == 1 {
                -self.from_scale
            } else {
                self.from_scale
            };
            *v *= s;
        }
    }
}

/// Rectangular periodic phase-space lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    pub x: Axis,
    pub p: Axis,
}

/// Convenience constructor mirroring the usual argument order.
pub fn make_grid(
    nx: usize,
    np: usize,
    x_min: f64,
    x_max: f64,
    p_min: f64,
    p_max: f64,
    hbar: f64,
) -> Result<PhaseGrid> {
    PhaseGrid::new(nx, np, (x_min, x_max), (p_min, p_max), hbar)
}

impl PhaseGrid {
    pub fn new(
        nx: usize,
        np: usize,
        x_span: (f64, f64),
        p_span: (f64, f64),
        hbar: f64,
    ) -> Result<Self> {
        Ok(Self {
            x: Axis::new(nx, x_span.0, x_span.1, hbar)?,
            p: Axis::new(np, p_span.0, p_span.1, hbar)?,
        })
    }

    /// Square grid `[-half, half)^2` with `n` points per axis.
    pub fn symmetric(n: usize, half: f64, hbar: f64) -> Result<Self> {
        Self::new(n, n, (-half, half), (-half, half), hbar)
    }

    pub fn nx(&self) -> usize {
        self.x.n
    }
    pub fn np(&self) -> usize {
        self.p.n
    }
    pub fn hbar(&self) -> f64 {
        self.x.hbar
    }
    pub fn dx(&self) -> f64 {
        self.x.step()
    }
    pub fn dp(&self) -> f64 {
        self.p.step()
    }
    pub fn dxi(&self) -> f64 {
        self.x.conj_step()
    }
    pub fn deta(&self) -> f64 {
        self.p.conj_step()
    }
    pub fn len(&self) -> usize {
        self.x.n * self.p.n
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check_same(&self, other: &PhaseGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Same centre and spacing, twice the extent on both axes.
    pub fn doubled(&self) -> PhaseGrid {
        let grow = |a: &Axis| {
            let half = 0.5 * (a.max - a.min);
            Axis {
                n: 2 * a.n,
                min: a.min - half,
                max: a.max + half,
                hbar: a.hbar,
            }
        };
        PhaseGrid {
            x: grow(&self.x),
            p: grow(&self.p),
        }
    }

    /// Same geometry with a different Planck constant.
    pub fn with_hbar(&self, hbar: f64) -> Result<PhaseGrid> {
        Self::new(
            self.x.n,
            self.p.n,
            (self.x.min, self.x.max),
            (self.p.min, self.p.max),
            hbar,
        )
    }
}

/// Which lattice an axis of a field is sampled on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Direct,
    Conjugate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Repr {
    pub x: Domain,
    pub p: Domain,
}

impl Repr {
    pub const PHASE: Repr = Repr {
        x: Domain::Direct,
        p: Domain::Direct,
    };
    pub const SPECTRAL: Repr = Repr {
        x: Domain::Conjugate,
        p: Domain::Conjugate,
    };
    /// `(xi, p)`: x transformed.
    pub const XI_P: Repr = Repr {
        x: Domain::Conjugate,
        p: Domain::Direct,
    };
    /// `(x, y)`: p transformed back to its conjugate `y`.
    pub const X_Y: Repr = Repr {
        x: Domain::Direct,
        p: Domain::Conjugate,
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisId {
    X,
    P,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Complex samples on a [`PhaseGrid`], in some mix of direct and conjugate lattices.
#[derive(Clone, Debug)]
pub struct PhaseField {
    grid: PhaseGrid,
    repr: Repr,
    data: Vec<C64>,
}

/// A field on the `(xi, eta)` lattice.
pub type SpectralField = PhaseField;

impl PhaseField {
    pub fn zeros(grid: &PhaseGrid) -> Self {
        Self {
            grid: *grid,
            repr: Repr::PHASE,
            data: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: &PhaseGrid, f: impl Fn(f64, f64) -> C64 + Sync) -> Self {
        let np = grid.np();
        let data = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(grid.x.point(idx / np), grid.p.point(idx % np)))
            .collect();
        Self {
            grid: *grid,
            repr: Repr::PHASE,
            data,
        }
    }

    pub fn from_real_fn(grid: &PhaseGrid, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        Self::from_fn(grid, |x, p| C64::new(f(x, p), 0.0))
    }

    pub fn constant(grid: &PhaseGrid, value: C64) -> Self {
        Self {
            grid: *grid,
            repr: Repr::PHASE,
            data: vec![value; grid.len()],
        }
    }

    pub fn from_vec(grid: &PhaseGrid, repr: Repr, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            grid: *grid,
            repr,
            data,
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }
    pub fn repr(&self) -> Repr {
        self.repr
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.grid.np() + j]
    }

    pub(crate) fn expect(&self, repr: Repr, what: &'static str) -> Result<()> {
        if self.repr == repr {
            Ok(())
        } else {
            Err(Error::Representation(what))
        }
    }

    fn cell(&self) -> f64 {
        let a = match self.repr.x {
            Domain::Direct => self.grid.dx(),
            Domain::Conjugate => self.grid.dxi(),
        };
        let b = match self.repr.p {
            Domain::Direct => self.grid.dp(),
            Domain::Conjugate => self.grid.deta(),
        };
        a * b
    }

    /// Coordinates of sample `(i, j)` in the field's current representation.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        let u = match self.repr.x {
            Domain::Direct => self.grid.x.point(i),
            Domain::Conjugate => self.grid.x.conj_point(i),
        };
        let v = match self.repr.p {
            Domain::Direct => self.grid.p.point(j),
            Domain::Conjugate => self.grid.p.conj_point(j),
        };
        (u, v)
    }

    fn check_compat(&self, other: &PhaseField) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.repr != other.repr {
            return Err(Error::Representation("matching representations"));
        }
        Ok(())
    }

    /// `∬ f dx dp` by the periodic trapezoid rule.
    pub fn integrate(&self) -> C64 {
        self.data.iter().sum::<C64>() * self.cell()
    }

    /// `<f|g>`, conjugate-linear in `f`.
    pub fn l2_inner(&self, other: &PhaseField) -> Result<C64> {
        self.check_compat(other)?;
        let s: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.cell())
    }

    pub fn l2_norm(&self) -> f64 {
        (self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn conj(&self) -> PhaseField {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = v.conj();
        }
        out
    }

    pub fn scale(&self, s: C64) -> PhaseField {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= s;
        }
        out
    }

    pub fn scale_real(&self, s: f64) -> PhaseField {
        self.scale(C64::new(s, 0.0))
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: C64, other: &PhaseField) -> Result<PhaseField> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
        Ok(out)
    }

    pub fn add(&self, other: &PhaseField) -> Result<PhaseField> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &PhaseField) -> Result<PhaseField> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &PhaseField) -> Result<PhaseField> {
        self.check_compat(other)?;
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a *= b;
        }
        Ok(out)
    }

    /// `‖self - other‖ / ‖other‖`, or the absolute norm when `other` vanishes.
    pub fn rel_distance(&self, other: &PhaseField) -> Result<f64> {
        let d = self.sub(other)?.l2_norm();
        let n = other.l2_norm();
        Ok(if n > 0.0 { d / n } else { d })
    }

    /// Multiply every sample by `m(u, v)` evaluated at its coordinates.
    pub fn multiply_by(&mut self, m: impl Fn(f64, f64) -> C64 + Sync) {
        let np = self.grid.np();
        let (grid, repr) = (self.grid, self.repr);
        let probe = PhaseField {
            grid,
            repr,
            data: Vec::new(),
        };
        self.data
            .par_chunks_mut(np)
            .enumerate()
            .for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate() {
                    let (u, w) = probe.coords(i, j);
                    *v *= m(u, w);
                }
            });
    }

    /// Embed into [`PhaseGrid::doubled`] with zeros outside the original box.
    pub fn zero_padded(&self) -> Result<PhaseField> {
        self.expect(Repr::PHASE, "phase representation")?;
        let big = self.grid.doubled();
        let (nx, np) = (self.grid.nx(), self.grid.np());
        let mut out = PhaseField::zeros(&big);
        for i in 0..nx {
            let dst = (i + nx / 2) * big.np() + np / 2;
            out.data[dst..dst + np].copy_from_slice(&self.data[i * np..(i + 1) * np]);
        }
        Ok(out)
    }

    /// Inverse of [`PhaseField::zero_padded`].
    pub fn cropped_to(&self, small: &PhaseGrid) -> Result<PhaseField> {
        self.grid.check_same(&small.doubled())?;
        let (nx, np) = (small.nx(), small.np());
        let mut out = PhaseField::zeros(small);
        for i in 0..nx {
            let src = (i + nx / 2) * self.grid.np() + np / 2;
            out.data[i * np..(i + 1) * np].copy_from_slice(&self.data[src..src + np]);
        }
        Ok(out)
    }

    /// Root of the fraction of `‖f‖²` carried by the outer band of each axis.
    pub fn tail_fraction(&self) -> f64 {
        let (nx, np) = (self.grid.nx(), self.grid.np());
        let bx = (nx / 16).max(1);
        let bp = (np / 16).max(1);
        let mut total = 0.0;
        let mut tail = 0.0;
        for i in 0..nx {
            let edge_i = i < bx || i >= nx - bx;
            for j in 0..np {
                let e = self.data[i * np + j].norm_sqr();
                total += e;
                if edge_i || j < bp || j >= np - bp {
                    tail += e;
                }
            }
        }
        if total > 0.0 {
            (tail / total).sqrt()
        } else {
            0.0
        }
    }
}

fn transform_rows(data: &mut [C64], np: usize, tr: &AxisTransform, to_conj: bool, sign: f64) {
    data.par_chunks_mut(np).for_each_init(
        || tr.scratch(),
        |scratch, row| {
            if to_conj {
                tr.to_conjugate(row, sign, scratch)
            } else {
                tr.from_conjugate(row, sign, scratch)
            }
        },
    );
}

fn transform_cols(
    data: &mut [C64],
    nx: usize,
    np: usize,
    tr: &AxisTransform,
    to_conj: bool,
    sign: f64,
) {
    let mut t = vec![C64::new(0.0, 0.0); data.len()];
    transpose_into(data, &mut t, nx, np);
    transform_rows(&mut t, nx, tr, to_conj, sign);
    transpose_into(&t, data, np, nx);
}

fn transpose_into(data: &[C64], out: &mut [C64], rows: usize, cols: usize) {
    const B: usize = 32;
    for r0 in (0..rows).step_by(B) {
        for c0 in (0..cols).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                for c in c0..(c0 + B).min(cols) {
                    out[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
}

/// One partial transform on one axis.
///
/// On `X`, forward maps `x -> xi` with `exp(-i xi x / hbar)`.  On `P`, forward maps the
/// conjugate `y` lattice onto `p` with `exp(-i y p / hbar)`; inverse goes back to `y`.
pub fn fourier_partial(f: &PhaseField, axis: AxisId, dir: Direction) -> Result<PhaseField> {
    let mut out = f.clone();
    let (nx, np) = (f.grid.nx(), f.grid.np());
    match (axis, dir) {
        (AxisId::X, Direction::Forward) => {
            if f.repr.x != Domain::Direct {
                return Err(Error::Representation("direct x axis"));
            }
            transform_cols(&mut out.data, nx, np, &f.grid.x.transform(), true, -1.0);
            out.repr.x = Domain::Conjugate;
        }
        (AxisId::X, Direction::Inverse) => {
            if f.repr.x != Domain::Conjugate {
                return Err(Error::Representation("conjugate x axis"));
            }
            transform_cols(&mut out.data, nx, np, &f.grid.x.transform(), false, 1.0);
            out.repr.x = Domain::Direct;
        }
        (AxisId::P, Direction::Forward) => {
            if f.repr.p != Domain::Conjugate {
                return Err(Error::Representation("conjugate p axis"));
            }
            transform_rows(&mut out.data, np, &f.grid.p.transform(), false, -1.0);
            out.repr.p = Domain::Direct;
        }
        (AxisId::P, Direction::Inverse) => {
            if f.repr.p != Domain::Direct {
                return Err(Error::Representation("direct p axis"));
            }
            transform_rows(&mut out.data, np, &f.grid.p.transform(), true, 1.0);
            out.repr.p = Domain::Conjugate;
        }
    }
    Ok(out)
}

pub fn fourier_full(f: &PhaseField) -> Result<SpectralField> {
    f.expect(Repr::PHASE, "phase representation")?;
    let g = fourier_partial(f, AxisId::P, Direction::Inverse)?;
    fourier_partial(&g, AxisId::X, Direction::Forward)
}

pub fn fourier_inverse(f: &SpectralField) -> Result<PhaseField> {
    f.expect(Repr::SPECTRAL, "spectral representation")?;
    let g = fourier_partial(f, AxisId::X, Direction::Inverse)?;
    fourier_partial(&g, AxisId::P, Direction::Forward)
}

/// Apply the Fourier multiplier `m(xi, eta)` to a phase-space field.
pub fn apply_multiplier(f: &PhaseField, m: impl Fn(f64, f64) -> C64 + Sync) -> Result<PhaseField> {
    let mut s = fourier_full(f)?;
    s.multiply_by(m);
    fourier_inverse(&s)
}

/// Spectral `∂x^nx ∂p^np f`.
pub fn spectral_derivative(f: &PhaseField, nx: u32, np: u32) -> Result<PhaseField> {
    let hbar = f.grid.hbar();
    apply_multiplier(f, |xi, eta| {
        C64::new(0.0, xi / hbar).powu(nx) * C64::new(0.0, -eta / hbar).powu(np)
    })
}
