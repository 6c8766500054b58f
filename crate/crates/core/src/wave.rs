//! Configuration-space wavefunctions on one lattice axis and the action of
//! ordered operators on them (`q̂ = x`, `p̂ = -i hbar ∂x` spectrally).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::poly::{sigma_order, OperatorNF};
use crate::star::{ObservableSpec, ObservableTerm, OrderingSpec, Smoother};

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    axis: Axis,
    data: Vec<C64>,
}

impl WaveFunction {
    pub fn new(axis: Axis, data: Vec<C64>) -> Result<Self> {
        if data.len() != axis.n {
            return Err(Error::Precondition(format!(
                "{} samples for an axis of {}",
                data.len(),
                axis.n
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Precondition("non-finite wavefunction sample".into()));
        }
        Ok(Self { axis, data })
    }

    pub fn zeros(axis: &Axis) -> Self {
        Self {
            axis: *axis,
            data: vec![C64::new(0.0, 0.0); axis.n],
        }
    }

    pub fn from_fn(axis: &Axis, f: impl Fn(f64) -> C64) -> Self {
        Self {
            axis: *axis,
            data: axis.points().into_iter().map(f).collect(),
        }
    }

    pub fn from_real_fn(axis: &Axis, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(axis, |x| C64::new(f(x), 0.0))
    }

    pub fn axis(&self) -> &Axis {
        &self.axis
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

    pub fn check_axis(&self, other: &WaveFunction) -> Result<()> {
        if self.axis != other.axis {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &WaveFunction) -> Result<C64> {
        self.check_axis(other)?;
        let s: C64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.axis.step())
    }

    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.axis.step()).sqrt()
    }

    pub fn normalized(&self) -> Result<WaveFunction> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::Precondition(
                "cannot normalise a zero wavefunction".into(),
            ));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn conj(&self) -> WaveFunction {
        self.map(|z| z.conj())
    }

    pub fn scale(&self, s: C64) -> WaveFunction {
        self.map(|z| z * s)
    }

    fn map(&self, f: impl Fn(C64) -> C64) -> WaveFunction {
        WaveFunction {
            axis: self.axis,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn axpy(&self, s: C64, other: &WaveFunction) -> Result<WaveFunction> {
        self.check_axis(other)?;
        Ok(WaveFunction {
            axis: self.axis,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + s * b)
                .collect(),
        })
    }

    pub fn add(&self, other: &WaveFunction) -> Result<WaveFunction> {
        self.axpy(C64::new(1.0, 0.0), other)
    }

    pub fn sub(&self, other: &WaveFunction) -> Result<WaveFunction> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// `‖self - other‖ / ‖other‖`.
    pub fn rel_distance(&self, other: &WaveFunction) -> Result<f64> {
        Ok(self.sub(other)?.norm() / other.norm())
    }

    /// Pointwise multiplication by `f(x)`.
    pub fn multiply_by(&self, f: impl Fn(f64) -> C64) -> WaveFunction {
        let pts = self.axis.points();
        WaveFunction {
            axis: self.axis,
            data: self.data.iter().zip(pts).map(|(z, x)| z * f(x)).collect(),
        }
    }

    /// Multiply the momentum-space amplitude by `m(xi)`.
    pub fn map_spectrum(&self, m: impl Fn(f64) -> C64) -> WaveFunction {
        let tr = self.axis.transform();
        let mut scratch = tr.scratch();
        let mut row = self.data.clone();
        tr.to_conjugate(&mut row, -1.0, &mut scratch);
        for (k, v) in row.iter_mut().enumerate() {
            *v *= m(self.axis.conj_point(k));
        }
        tr.from_conjugate(&mut row, 1.0, &mut scratch);
        WaveFunction {
            axis: self.axis,
            data: row,
        }
    }

    /// Momentum-space amplitude on the conjugate lattice.
    pub fn momentum_amplitude(&self) -> Vec<C64> {
        let tr = self.axis.transform();
        let mut scratch = tr.scratch();
        let mut row = self.data.clone();
        tr.to_conjugate(&mut row, -1.0, &mut scratch);
        row
    }

    /// `p̂^m ψ`.
    pub fn momentum_power(&self, m: u32) -> WaveFunction {
        if m == 0 {
            return self.clone();
        }
        self.map_spectrum(|xi| C64::new(xi.powi(m as i32), 0.0))
    }

    /// Band-limited samples of `ψ(x - s)` (periodic).
    pub fn translated(&self, s: f64) -> WaveFunction {
        let hbar = self.axis.hbar;
        self.map_spectrum(|xi| C64::from_polar(1.0, -xi * s / hbar))
    }

    /// `Σ c hbar^k q̂^n p̂^m ψ`.
    pub fn apply_nf(&self, op: &OperatorNF) -> WaveFunction {
        let hbar = self.axis.hbar;
        let mut by_m: std::collections::BTreeMap<u32, Vec<(u32, C64)>> = Default::default();
        for (t, c) in op.terms() {
            by_m.entry(t.m)
                .or_default()
                .push((t.n, c * hbar.powi(t.k as i32)));
        }
        let mut out = WaveFunction::zeros(&self.axis);
        for (m, qs) in by_m {
            let moved = self.momentum_power(m);
            let term = moved.multiply_by(|x| qs.iter().map(|(n, c)| c * x.powi(*n as i32)).sum());
            for (o, v) in out.data.iter_mut().zip(term.data) {
                *o += v;
            }
        }
        out
    }

    /// `A_{σ,S}(q̂, p̂) ψ` for an observable in the supported class.
    pub fn apply_observable(
        &self,
        a: &ObservableSpec,
        spec: &OrderingSpec,
    ) -> Result<WaveFunction> {
        let mut out = WaveFunction::zeros(&self.axis);
        for term in &a.terms {
            let t = match term {
                ObservableTerm::XOnly(v) => {
                    check_untouched(&spec.smoother, true)?;
                    self.multiply_by(|x| v(x))
                }
                ObservableTerm::POnly(t) => {
                    check_untouched(&spec.smoother, false)?;
                    self.map_spectrum(|xi| t(xi))
                }
                ObservableTerm::Poly(p) => self.apply_nf(&ordered_operator(p, spec)?),
            };
            out = out.add(&t)?;
        }
        Ok(out)
    }

    /// Global phase chosen so the largest-magnitude sample is real and positive.
    pub fn fix_phase(&self) -> WaveFunction {
        let big = self
            .data
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        if big.norm() == 0.0 {
            return self.clone();
        }
        self.scale(big.conj() / big.norm())
    }
}

/// `(S⁻¹A)_σ` in standard order.
pub fn ordered_operator(a: &crate::poly::PolyH, spec: &OrderingSpec) -> Result<OperatorNF> {
    let word = spec.smoother.word().ok_or_else(|| {
        Error::Unsupported("operator ordering under a Cohen multiplier smoother".into())
    })?;
    Ok(sigma_order(&word.apply(a, true), spec.sigma))
}

// V(x) is fixed by S⁻¹ only when S has no x-derivatives, T(p) only without p-derivatives.
pub(crate) fn check_untouched(s: &Smoother, x_only: bool) -> Result<()> {
    let ok = match s {
        Smoother::Identity => true,
        Smoother::GaussianAlphaBeta { alpha, beta } => {
            if x_only {
                *alpha == 0.0
            } else {
                *beta == 0.0
            }
        }
        Smoother::Word(w) => w.is_identity(),
        Smoother::Cohen(_) => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{} term under a smoother that changes it",
            if x_only { "V(x)" } else { "T(p)" }
        )))
    }
}
