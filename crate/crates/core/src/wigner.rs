//! Twisted tensor products of wavefunctions, quasi-distributions, marginals and
//! purity diagnostics.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::grid::{fourier_partial, AxisId, Direction, PhaseField, PhaseGrid, Repr};
use crate::star::{apply_smoother, involution_dagger, star_sigma_s, OrderingSpec, Smoother};
use crate::wave::WaveFunction;

/// A phase-space state `Ψ` together with the ordering it lives in.
#[derive(Clone, Debug)]
pub struct QuasiDistribution {
    pub field: PhaseField,
    pub spec: OrderingSpec,
    /// `(φ, ψ)` when built as `φ* ⊗ ψ`.
    pub provenance: Option<(WaveFunction, WaveFunction)>,
}

impl QuasiDistribution {
    pub fn new(field: PhaseField, spec: OrderingSpec) -> Self {
        Self {
            field,
            spec,
            provenance: None,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        self.field.grid()
    }

    /// `ρ = Ψ / sqrt(2 pi hbar)`.
    pub fn rho(&self) -> PhaseField {
        self.field
            .scale_real(1.0 / (2.0 * PI * self.grid().hbar()).sqrt())
    }

    /// `∬ρ`, equal to one for a normalised state.
    pub fn normalization(&self) -> C64 {
        self.rho().integrate()
    }

    pub fn is_normalized(&self) -> bool {
        (self.normalization() - 1.0).norm() < 1e-8
    }

    /// Scalar product pulled back through `S⁻¹`.
    pub fn h_inner(&self, other: &QuasiDistribution) -> Result<C64> {
        h_inner(&self.field, &other.field, &self.spec)
    }

    pub fn h_norm(&self) -> Result<f64> {
        Ok(self.h_inner(self)?.re.max(0.0).sqrt())
    }

    pub fn scaled(&self, c: C64) -> QuasiDistribution {
        QuasiDistribution {
            field: self.field.scale(c),
            spec: self.spec.clone(),
            provenance: None,
        }
    }

    pub fn sidecar(&self) -> serde_json::Value {
        let (alpha, beta) = match &self.spec.smoother {
            Smoother::GaussianAlphaBeta { alpha, beta } => (json!(alpha), json!(beta)),
            Smoother::Identity => (json!(0.0), json!(0.0)),
            _ => (serde_json::Value::Null, serde_json::Value::Null),
        };
        json!({
            "sigma": self.spec.sigma,
            "smoother": { "kind": self.spec.smoother.kind(), "alpha": alpha, "beta": beta },
            "normalized": self.is_normalized(),
        })
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        crate::io::write_binary(&stem.with_extension("bin"), &self.field)?;
        let text = serde_json::to_string_pretty(&self.sidecar())
            .map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(stem.with_extension("json"), text)?;
        Ok(())
    }
}

pub fn h_inner(a: &PhaseField, b: &PhaseField, spec: &OrderingSpec) -> Result<C64> {
    let a = apply_smoother(a, spec, Direction::Inverse)?;
    let b = apply_smoother(b, spec, Direction::Inverse)?;
    a.l2_inner(&b)
}

/// Convex combination of pure states sharing one grid and ordering.
#[derive(Clone, Debug)]
pub struct MixedState {
    components: Vec<(f64, QuasiDistribution)>,
}

impl MixedState {
    pub fn new(components: Vec<(f64, QuasiDistribution)>) -> Result<Self> {
        let first = components
            .first()
            .ok_or_else(|| Error::Precondition("empty mixture".into()))?;
        let total: f64 = components.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition(format!("weights sum to {total}")));
        }
        for (w, s) in &components {
            if !(0.0..=1.0).contains(w) {
                return Err(Error::Precondition(format!("weight {w} outside [0, 1]")));
            }
            s.grid().check_same(first.1.grid())?;
            if s.spec.sigma != first.1.spec.sigma
                || s.spec.smoother.kind() != first.1.spec.smoother.kind()
            {
                return Err(Error::Precondition(
                    "components use different orderings".into(),
                ));
            }
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[(f64, QuasiDistribution)] {
        &self.components
    }

    /// `Σ p_λ Ψ_λ` as a single distribution.
    pub fn combined(&self) -> QuasiDistribution {
        let first = &self.components[0].1;
        let mut field = PhaseField::zeros(first.grid());
        for (w, s) in &self.components {
            field = field.axpy(C64::new(*w, 0.0), &s.field).unwrap();
        }
        QuasiDistribution::new(field, first.spec.clone())
    }
}

/// `φ* ⊗_{σ,S} ψ` sampled on `grid`.
pub fn twisted_tensor(
    phi: &WaveFunction,
    psi: &WaveFunction,
    spec: &OrderingSpec,
    grid: &PhaseGrid,
) -> Result<QuasiDistribution> {
    phi.check_axis(psi)?;
    if *phi.axis() != grid.x {
        return Err(Error::GridMismatch);
    }
    let (nx, np) = (grid.nx(), grid.np());
    let sigma = spec.sigma;
    let sb = 1.0 - sigma;
    let xs = grid.x.points();
    let ys = grid.p.conj_points();
    let tr = grid.x.transform();
    let hbar = grid.hbar();
    let phi_hat = phi.momentum_amplitude();
    let psi_hat = psi.momentum_amplitude();
    let xi = grid.x.conj_points();

    // Column l holds φ*(x - σ̄ y_l) ψ(x + σ y_l) over x; outside the primary period
    // the factors are taken to vanish rather than wrap.
    let columns: Vec<Vec<C64>> = ys
        .par_iter()
        .map_init(
            || tr.scratch(),
            |scratch, &y| {
                let shift = |hat: &[C64], s: f64, scratch: &mut Vec<C64>| {
                    let mut row: Vec<C64> = hat
                        .iter()
                        .zip(&xi)
                        .map(|(v, k)| v * C64::from_polar(1.0, -k * s / hbar))
                        .collect();
                    tr.from_conjugate(&mut row, 1.0, scratch);
                    row
                };
                let a = shift(&phi_hat, sb * y, scratch);
                let b = shift(&psi_hat, -sigma * y, scratch);
                xs.iter()
                    .enumerate()
                    .map(|(i, &x)| {
                        if grid.x.contains(x - sb * y) && grid.x.contains(x + sigma * y) {
                            a[i].conj() * b[i]
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    })
                    .collect()
            },
        )
        .collect();
    let mut data = vec![C64::new(0.0, 0.0); nx * np];
    for (l, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            data[i * np + l] = *v;
        }
    }
    let k = PhaseField::from_vec(grid, Repr::X_Y, data)?;
    let plain = fourier_partial(&k, AxisId::P, Direction::Forward)?;
    let field = apply_smoother(&plain, spec, Direction::Forward)?;
    Ok(QuasiDistribution {
        field,
        spec: spec.clone(),
        provenance: Some((phi.clone(), psi.clone())),
    })
}

/// Position (`AxisId::X`) or momentum (`AxisId::P`) probability density of `S⁻¹ρ`.
pub fn marginal(state: &QuasiDistribution, axis: AxisId) -> Result<Vec<f64>> {
    let rho = apply_smoother(&state.rho(), &state.spec, Direction::Inverse)?;
    let g = *rho.grid();
    let (nx, np) = (g.nx(), g.np());
    let d = rho.data();
    Ok(match axis {
        AxisId::X => (0..nx)
            .map(|i| d[i * np..(i + 1) * np].iter().map(|v| v.re).sum::<f64>() * g.dp())
            .collect(),
        AxisId::P => (0..np)
            .map(|j| (0..nx).map(|i| d[i * np + j].re).sum::<f64>() * g.dx())
            .collect(),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct PurityReport {
    pub is_pure: bool,
    /// `‖Ψ - Ψ†‖ / ‖Ψ‖`.
    pub hermiticity: f64,
    /// `‖Ψ⋆Ψ - ‖Ψ‖_H Ψ / sqrt(2 pi hbar)‖ / ‖Ψ⋆Ψ‖`; scale-free so that only the
    /// normalisation residual sees an overall factor.
    pub idempotence: f64,
    /// `|‖Ψ‖_H - 1|`.
    pub normalization: f64,
}

pub const PURITY_TOL: f64 = 1e-5;

pub fn purity_check(state: &QuasiDistribution) -> Result<PurityReport> {
    let f = &state.field;
    let hbar = f.grid().hbar();
    let dag = involution_dagger(f, &state.spec)?;
    let hermiticity = dag.sub(f)?.l2_norm() / f.l2_norm();
    let sq = star_sigma_s(f, f, &state.spec)?.field;
    let h = state.h_norm()?;
    let target = f.scale_real(h / (2.0 * PI * hbar).sqrt());
    let idempotence = sq.sub(&target)?.l2_norm() / sq.l2_norm();
    let normalization = (h - 1.0).abs();
    Ok(PurityReport {
        is_pure: hermiticity < PURITY_TOL && idempotence < PURITY_TOL && normalization < PURITY_TOL,
        hermiticity,
        idempotence,
        normalization,
    })
}

/// Residual of `Ψ_ij ⋆ Ψ_kl = δ_il Ψ_kj / sqrt(2 pi hbar)` for basis functions
/// `Ψ_ij = φ_i* ⊗ φ_j`; relative when `i = l`, the product norm otherwise.
pub fn basis_idempotence_check(
    basis: &[WaveFunction],
    (i, j, k, l): (usize, usize, usize, usize),
    spec: &OrderingSpec,
    grid: &PhaseGrid,
) -> Result<f64> {
    let get = |n: usize| {
        basis
            .get(n)
            .ok_or_else(|| Error::Precondition(format!("basis index {n} out of range")))
    };
    let a = twisted_tensor(get(i)?, get(j)?, spec, grid)?;
    let b = twisted_tensor(get(k)?, get(l)?, spec, grid)?;
    let prod = star_sigma_s(&a.field, &b.field, spec)?.field;
    if i != l {
        return Ok(prod.l2_norm());
    }
    let want = twisted_tensor(get(k)?, get(j)?, spec, grid)?
        .field
        .scale_real(1.0 / (2.0 * PI * grid.hbar()).sqrt());
    prod.rel_distance(&want)
}

/// Recovers `ψ` (normalised, phase fixed) from a pure state `ψ* ⊗ ψ`.
///
/// The kernel `K(x, y) = ψ*(x - σ̄y) ψ(x + σy)` is evaluated off-lattice by exact
/// trigonometric sums along the line `x - σ̄y = u0`, with `u0` at the marginal peak.
pub fn reconstruct_pure(state: &QuasiDistribution) -> Result<WaveFunction> {
    let plain = apply_smoother(&state.field, &state.spec, Direction::Inverse)?;
    let g = *plain.grid();
    let (nx, np) = (g.nx(), g.np());
    let hbar = g.hbar();
    let sb = 1.0 - state.spec.sigma;
    let marg = marginal(state, AxisId::X)?;
    let i0 = (0..nx)
        .max_by(|&a, &b| marg[a].total_cmp(&marg[b]))
        .unwrap();
    let u0 = g.x.point(i0);
    let mixed = fourier_partial(&plain, AxisId::X, Direction::Forward)?;
    let md = mixed.data();
    let xi = g.x.conj_points();
    let ps = g.p.points();
    let norm = (2.0 * PI * hbar).sqrt();
    let ys = g.p.conj_points();
    let (y_lo, y_hi) = (ys[0], -ys[0]);
    let values: Vec<C64> =
        g.x.points()
            .par_iter()
            .map(|&v| {
                let y = v - u0;
                if y < y_lo || y >= y_hi {
                    return C64::new(0.0, 0.0);
                }
                let x = u0 + sb * y;
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..nx {
                    let ex = C64::from_polar(1.0, xi[k] * x / hbar);
                    let row = &md[k * np..(k + 1) * np];
                    let s: C64 = row
                        .iter()
                        .zip(&ps)
                        .map(|(val, p)| val * C64::from_polar(1.0, p * y / hbar))
                        .sum();
                    acc += ex * s;
                }
                acc * g.dxi() * g.dp() / (norm * norm) * norm
            })
            .collect();
    WaveFunction::new(g.x, values)?
        .normalized()
        .map(|w| w.fix_phase())
}
