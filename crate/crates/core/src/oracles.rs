//! Closed-form states: free Gaussian packets, oscillator eigenstates (Laguerre and
//! ladder constructions), coherent states and classical-limit pairings.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{Axis, PhaseField, PhaseGrid};
use crate::poly::PolyH;
use crate::star::{bopp_apply, ObservableSpec, OrderingSpec, Side};
use crate::wave::WaveFunction;
use crate::wigner::QuasiDistribution;

/// Oscillator `H = (p² + ω² x²)/2` under the `(σ, α, β)` ordering.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OscillatorParams {
    pub omega: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl OscillatorParams {
    pub fn new(omega: f64, sigma: f64, alpha: f64, beta: f64) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::Precondition(format!(
                "omega = {omega} must be positive"
            )));
        }
        OrderingSpec::gaussian(sigma, alpha, beta)?;
        Ok(Self {
            omega,
            sigma,
            alpha,
            beta,
        })
    }

    /// Weyl ordering without smoothing.
    pub fn moyal(omega: f64) -> Result<Self> {
        Self::new(omega, 0.5, 0.0, 0.0)
    }

    /// The `σ = 1/2`, `β = ω² α` line parametrised by `λ`.
    pub fn from_lambda(omega: f64, lambda: f64) -> Result<Self> {
        let alpha = (2.0 * lambda - 1.0) / (2.0 * omega);
        Self::new(omega, 0.5, alpha, omega * omega * alpha)
    }

    pub fn lambda(&self) -> f64 {
        0.5 * (1.0 + self.omega * self.alpha + self.beta / self.omega)
    }

    pub fn lambda_bar(&self) -> f64 {
        1.0 - self.lambda()
    }

    pub fn spec(&self) -> OrderingSpec {
        OrderingSpec::gaussian(self.sigma, self.alpha, self.beta).unwrap()
    }

    pub fn hamiltonian(&self) -> PolyH {
        PolyH::xp(0.5, 0, 2).add(&PolyH::xp(0.5 * self.omega * self.omega, 2, 0))
    }

    /// `a = (ωx + ip)/sqrt(2 hbar ω)`.
    pub fn annihilation(&self, hbar: f64) -> PolyH {
        let s = 1.0 / (2.0 * hbar * self.omega).sqrt();
        PolyH::xp(self.omega * s, 1, 0).add(&PolyH::monomial(C64::new(0.0, s), 0, 0, 1))
    }

    /// `ā = (ωx - ip)/sqrt(2 hbar ω)`.
    pub fn creation(&self, hbar: f64) -> PolyH {
        self.annihilation(hbar).conj()
    }

    /// `E_n = (n + λ̄) hbar ω`.
    pub fn energy(&self, n: usize, hbar: f64) -> f64 {
        (n as f64 + self.lambda_bar()) * hbar * self.omega
    }

    /// Domain of the Laguerre closed form: `σ = 1/2`, `β = ω² α`, `λ ∉ {0, 1}`.
    pub fn check_laguerre_domain(&self) -> Result<()> {
        if (self.sigma - 0.5).abs() > 1e-14 {
            return Err(Error::Precondition(format!(
                "closed-form excited states need sigma = 1/2, got {}",
                self.sigma
            )));
        }
        if (self.beta - self.omega * self.omega * self.alpha).abs() > 1e-12 {
            return Err(Error::Precondition(
                "closed-form excited states need beta = omega^2 alpha".into(),
            ));
        }
        let l = self.lambda();
        if l.abs() < 1e-12 || (l - 1.0).abs() < 1e-12 {
            return Err(Error::Precondition(format!(
                "lambda = {l} is a limiting case"
            )));
        }
        Ok(())
    }
}

/// Free particle Gaussian packet with mean momentum `p0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FreeGaussianParams {
    pub p0: f64,
    pub delta_p: f64,
    pub sigma: f64,
}

impl FreeGaussianParams {
    pub fn new(p0: f64, delta_p: f64, sigma: f64) -> Result<Self> {
        if !(delta_p > 0.0) {
            return Err(Error::Precondition("delta_p must be positive".into()));
        }
        OrderingSpec::sigma(sigma)?;
        Ok(Self { p0, delta_p, sigma })
    }

    /// `Δx = hbar / (2 Δp)`.
    pub fn delta_x(&self, hbar: f64) -> f64 {
        hbar / (2.0 * self.delta_p)
    }

    pub fn delta_x_at(&self, t: f64, hbar: f64) -> f64 {
        (self.delta_x(hbar).powi(2) + (self.delta_p * t).powi(2)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherentParams {
    pub x_bar: f64,
    pub p_bar: f64,
    pub omega: f64,
    pub sigma: f64,
}

impl CoherentParams {
    pub fn new(x_bar: f64, p_bar: f64, omega: f64, sigma: f64) -> Result<Self> {
        OscillatorParams::new(omega, sigma, 0.0, 0.0)?;
        Ok(Self {
            x_bar,
            p_bar,
            omega,
            sigma,
        })
    }

    pub fn oscillator(&self) -> OscillatorParams {
        OscillatorParams::new(self.omega, self.sigma, 0.0, 0.0).unwrap()
    }

    /// `z = (ω x̄ + i p̄)/sqrt(2 hbar ω)`.
    pub fn z(&self, hbar: f64) -> C64 {
        C64::new(self.omega * self.x_bar, self.p_bar) / (2.0 * hbar * self.omega).sqrt()
    }

    /// Classical orbit through `(x̄, p̄)` at time `t`.
    pub fn orbit(&self, t: f64) -> (f64, f64) {
        let (c, s) = ((self.omega * t).cos(), (self.omega * t).sin());
        (
            self.x_bar * c + self.p_bar / self.omega * s,
            -self.omega * self.x_bar * s + self.p_bar * c,
        )
    }
}

/// Oscillator eigenfunctions `φ_0 … φ_{count-1}` for frequency `omega`.
pub fn hermite_basis(count: usize, omega: f64, axis: &Axis) -> Vec<WaveFunction> {
    let hbar = axis.hbar;
    let scale = (omega / hbar).sqrt();
    let xs = axis.points();
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(count);
    for n in 0..count {
        let row: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let u = x * scale;
                match n {
                    0 => (omega / (PI * hbar)).powf(0.25) * (-u * u / 2.0).exp(),
                    _ => {
                        let prev = out[n - 1][i];
                        let prev2 = if n >= 2 { out[n - 2][i] } else { 0.0 };
                        (2.0 / n as f64).sqrt() * u * prev
                            - ((n - 1) as f64 / n as f64).sqrt() * prev2
                    }
                }
            })
            .collect();
        out.push(row);
    }
    out.into_iter()
        .map(|r| {
            WaveFunction::new(*axis, r.into_iter().map(|v| C64::new(v, 0.0)).collect()).unwrap()
        })
        .collect()
}

pub fn hermite_function(n: usize, omega: f64, axis: &Axis) -> WaveFunction {
    hermite_basis(n + 1, omega, axis).pop().unwrap()
}

/// Generalised Laguerre polynomial `L_n^a(x)` by the three-term recurrence.
pub fn laguerre(n: usize, a: f64, x: f64) -> f64 {
    let (mut l0, mut l1) = (1.0, 1.0 + a - x);
    if n == 0 {
        return l0;
    }
    for k in 1..n {
        let kf = k as f64;
        let l2 = ((2.0 * kf + 1.0 + a - x) * l1 - (kf + a) * l0) / (kf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Ground state of the oscillator for arbitrary `(σ, α, β)`.
pub fn ground_state(params: &OscillatorParams, grid: &PhaseGrid) -> QuasiDistribution {
    let (w, s, a, b) = (params.omega, params.sigma, params.alpha, params.beta);
    let hbar = grid.hbar();
    let sb = 1.0 - s;
    let den = sb * sb + s * s + 2.0 * a * b + w * a + b / w;
    let pref = ((1.0 - 2.0 * s).powi(2) + (1.0 + 2.0 * w * a) * (1.0 + 2.0 * b / w)).sqrt()
        / (den * (2.0 * PI * hbar).sqrt());
    let field = PhaseField::from_fn(grid, |x, p| {
        let re = -(1.0 + 2.0 * b / w) * w * w * x * x - (1.0 + 2.0 * w * a) * p * p;
        let im = -2.0 * (1.0 - 2.0 * s) * w * x * p;
        pref * (C64::new(re, im) / (2.0 * hbar * w * den)).exp()
    });
    QuasiDistribution::new(field, params.spec())
}

/// Closed-form `Ψ_mn` on the `σ = 1/2`, `β = ω² α` line.
pub fn ho_state(
    m: usize,
    n: usize,
    params: &OscillatorParams,
    grid: &PhaseGrid,
) -> Result<QuasiDistribution> {
    params.check_laguerre_domain()?;
    if m > 12 || n > 12 {
        return Err(Error::Precondition(
            "indices above 12 are outside the stable range".into(),
        ));
    }
    let hbar = grid.hbar();
    let w = params.omega;
    let (l, lb) = (params.lambda(), params.lambda_bar());
    let base = 1.0 / ((2.0 * PI * hbar).sqrt() * l)
        * if n % 2 == 0 { 1.0 } else { -1.0 }
        * (factorial(n) / factorial(m)).sqrt()
        * lb.powi(n as i32)
        / l.powi(m as i32);
    let unit = (2.0 * hbar * w).sqrt();
    let field = PhaseField::from_fn(grid, |x, p| {
        let z = C64::new(w * x, p);
        let r2 = z.norm_sqr();
        let arg = r2 / (2.0 * hbar * w * l * lb);
        let angular = if m >= n {
            (z.conj() / unit).powu((m - n) as u32) * laguerre(n, (m - n) as f64, arg)
        } else {
            // L_n^{-s}(u) = (-u)^s (n-s)!/n! L_{n-s}^s(u) absorbs the negative power of r.
            let s = (n - m) as u32;
            (-z / (unit * l * lb)).powu(s)
                * (factorial(m) / factorial(n))
                * laguerre(m, s as f64, arg)
        };
        base * angular * (-r2 / (2.0 * hbar * w * l)).exp()
    });
    Ok(QuasiDistribution::new(field, params.spec()))
}

/// `Ψ_mn = ā⋆…⋆ā ⋆ Ψ_00 ⋆ a⋆…⋆a / sqrt(m! n!)` through the Bopp operators.
pub fn ho_ladder(
    m: usize,
    n: usize,
    params: &OscillatorParams,
    grid: &PhaseGrid,
) -> Result<QuasiDistribution> {
    if m + n > 8 {
        return Err(Error::Precondition(
            "ladder construction limited to m + n <= 8".into(),
        ));
    }
    let hbar = grid.hbar();
    let spec = params.spec();
    let a: ObservableSpec = params.annihilation(hbar).into();
    let ab: ObservableSpec = params.creation(hbar).into();
    let mut field = ground_state(params, grid).field;
    for _ in 0..m {
        field = bopp_apply(&ab, &field, &spec, Side::Left)?;
    }
    for _ in 0..n {
        field = bopp_apply(&a, &field, &spec, Side::Right)?;
    }
    let field = field.scale_real(1.0 / (factorial(m) * factorial(n)).sqrt());
    Ok(QuasiDistribution::new(field, spec))
}

fn check_contains(grid: &PhaseGrid, x: f64, wx: f64, p: f64, wp: f64) -> Result<()> {
    let ok = x - 5.0 * wx >= grid.x.min
        && x + 5.0 * wx <= grid.x.max
        && p - 5.0 * wp >= grid.p.min
        && p + 5.0 * wp <= grid.p.max;
    if ok {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "grid does not span ten widths around ({x}, {p})"
        )))
    }
}

/// Free-particle packet in configuration space at time `t`.
pub fn free_wave_packet(params: &FreeGaussianParams, t: f64, axis: &Axis) -> WaveFunction {
    let hbar = axis.hbar;
    let (dx, dp, p0) = (params.delta_x(hbar), params.delta_p, params.p0);
    let c = C64::new(dx, dp * t);
    let pre = (2.0 * PI).powf(-0.25) / c.sqrt() * (-p0 * p0 / (4.0 * dp * dp)).exp();
    WaveFunction::from_fn(axis, |x| {
        let shifted = C64::new(x, -dx / dp * p0);
        pre * (-(shifted * shifted) / (4.0 * dx * c)).exp()
    })
}

/// Free-particle state `φ(t)* ⊗_σ φ(t)` in closed form.
pub fn free_gaussian(
    params: &FreeGaussianParams,
    t: f64,
    grid: &PhaseGrid,
) -> Result<QuasiDistribution> {
    let hbar = grid.hbar();
    let (dx, dp, p0) = (params.delta_x(hbar), params.delta_p, params.p0);
    check_contains(grid, p0 * t, params.delta_x_at(t, hbar), p0, dp)?;
    let s = params.sigma;
    let sb = 1.0 - s;
    let q = sb * sb + s * s;
    let skew = 1.0 - 2.0 * s;
    let pre = 1.0 / C64::new(2.0 * PI * q * dx * dp, 2.0 * PI * skew * dp * dp * t).sqrt();
    let den = C64::new(4.0 * q * dx * dx, 4.0 * skew * dx * dp * t);
    let field = PhaseField::from_fn(grid, |x, p| {
        let u = C64::new(x - p * t, skew * dx / dp * (p - p0));
        pre * (-(p - p0).powi(2) / (2.0 * dp * dp)).exp() * (-(u * u) / den).exp()
    });
    Ok(QuasiDistribution::new(field, OrderingSpec::sigma(s)?))
}

/// Coherent state centred on `(x̄, p̄)`; normalised so that `∬ρ = 1`.
pub fn coherent_state(params: &CoherentParams, grid: &PhaseGrid) -> Result<QuasiDistribution> {
    let hbar = grid.hbar();
    let (w, s) = (params.omega, params.sigma);
    let q = (1.0 - s).powi(2) + s * s;
    let width = (hbar * q / w).sqrt();
    check_contains(grid, params.x_bar, width, params.p_bar, width * w)?;
    let pre = 1.0 / (PI * hbar * q).sqrt();
    let d = 2.0 * hbar * w * q;
    let field = PhaseField::from_fn(grid, |x, p| {
        let (u, v) = (x - params.x_bar, p - params.p_bar);
        let re = -(w * w * u * u + v * v) / d;
        let im = 2.0 * (2.0 * s - 1.0) * w * u * v / d;
        pre * C64::new(re, im).exp()
    });
    Ok(QuasiDistribution::new(field, OrderingSpec::sigma(s)?))
}

/// Relative residuals of `a ⋆ Ψ = z Ψ` and `Ψ ⋆ ā = z* Ψ`.
pub fn coherent_residuals(
    state: &QuasiDistribution,
    params: &CoherentParams,
) -> Result<(f64, f64)> {
    let hbar = state.grid().hbar();
    let osc = params.oscillator();
    let z = params.z(hbar);
    let psi = &state.field;
    let left = bopp_apply(&osc.annihilation(hbar).into(), psi, &state.spec, Side::Left)?;
    let right = bopp_apply(&osc.creation(hbar).into(), psi, &state.spec, Side::Right)?;
    let n = psi.l2_norm();
    Ok((
        left.axpy(-z, psi)?.l2_norm() / n,
        right.axpy(-z.conj(), psi)?.l2_norm() / n,
    ))
}

/// A field that solves the state equations formally but is not normalisable.
#[derive(Clone, Debug)]
pub struct FormalState {
    pub field: PhaseField,
    pub proper: bool,
}

/// Momentum eigenstate smoothed in `p` by `β > 0`.
pub fn plane_wave_state(p0: f64, beta: f64, grid: &PhaseGrid) -> Result<FormalState> {
    if !(beta > 0.0) {
        return Err(Error::Precondition(
            "plane-wave state needs beta > 0".into(),
        ));
    }
    let hbar = grid.hbar();
    let pre = 1.0 / (2.0 * PI * hbar * beta.sqrt());
    Ok(FormalState {
        field: PhaseField::from_real_fn(grid, |_, p| {
            pre * (-(p - p0).powi(2) / (2.0 * hbar * beta)).exp()
        }),
        proper: false,
    })
}

/// `⟨ρ_hbar, φ⟩ = ∬ ρ φ` for each `hbar`.
pub fn classical_limit_probe(
    family: impl Fn(f64) -> Result<QuasiDistribution>,
    testfn: impl Fn(f64, f64) -> f64 + Sync,
    hbars: &[f64],
) -> Result<Vec<f64>> {
    hbars
        .iter()
        .map(|&h| {
            let state = family(h)?;
            let mut rho = state.rho();
            rho.multiply_by(|x, p| C64::new(testfn(x, p), 0.0));
            Ok(rho.integrate().re)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::spectral_derivative;
    use crate::wigner::twisted_tensor;

    fn binom(n: usize, k: usize) -> f64 {
        factorial(n) / (factorial(k) * factorial(n - k))
    }

    #[test]
    fn laguerre_matches_explicit_sum() {
        for n in 0..=12 {
            for s in 0..=4 {
                for &x in &[0.0f64, 0.3, 1.7, 5.2, 11.0] {
                    let want: f64 = (0..=n)
                        .map(|k| {
                            (-1f64).powi(k as i32) * factorial(n + s)
                                / (factorial(n - k) * factorial(s + k) * factorial(k))
                                * x.powi(k as i32)
                        })
                        .sum();
                    let got = laguerre(n, s as f64, x);
                    assert!(
                        (got - want).abs() <= 1e-10 * want.abs().max(1.0),
                        "{n} {s} {x}"
                    );
                }
            }
        }
    }

    #[test]
    fn hermite_functions_orthonormal_and_hermite_polynomial_shape() {
        let axis = Axis::new(256, -12.0, 12.0, 0.7).unwrap();
        let b = hermite_basis(10, 1.3, &axis);
        for i in 0..10 {
            for j in 0..10 {
                let v = b[i].inner(&b[j]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - want).norm() < 1e-10);
            }
        }
        // φ_2 ∝ (4u² - 2) e^{-u²/2}
        let u = |x: f64| x * (1.3f64 / 0.7).sqrt();
        let want = WaveFunction::from_real_fn(&axis, |x| {
            (4.0 * u(x).powi(2) - 2.0) * (-u(x).powi(2) / 2.0).exp()
        })
        .normalized()
        .unwrap();
        assert!(b[2].rel_distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn ground_state_is_normalised_for_any_ordering() {
        for &(s, a, b) in &[
            (0.5, 0.0, 0.0),
            (0.2, 0.1, 0.3),
            (1.0, 0.3, 0.0),
            (0.7, 0.05, 0.2),
        ] {
            let params = OscillatorParams::new(1.4, s, a, b).unwrap();
            let g = PhaseGrid::symmetric(128, 10.0, 0.6).unwrap();
            let st = ground_state(&params, &g);
            assert!((st.normalization() - 1.0).norm() < 1e-10, "{s} {a} {b}");
        }
    }

    #[test]
    fn ground_state_is_smoothed_gauged_wigner_function() {
        let g = PhaseGrid::symmetric(64, 8.0, 1.0).unwrap();
        let params = OscillatorParams::new(1.0, 0.3, 0.2, 0.1).unwrap();
        let b = hermite_basis(1, 1.0, &g.x);
        let built = twisted_tensor(&b[0], &b[0], &params.spec(), &g).unwrap();
        let closed = ground_state(&params, &g);
        assert!(built.field.rel_distance(&closed.field).unwrap() < 1e-9);
    }

    #[test]
    fn moyal_excited_states_are_classic_laguerre_forms() {
        let hbar: f64 = 0.8;
        let g = PhaseGrid::symmetric(64, 8.0 * hbar.sqrt(), hbar).unwrap();
        let params = OscillatorParams::moyal(1.0).unwrap();
        for n in 0..5 {
            let st = ho_state(n, n, &params, &g).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let want = PhaseField::from_real_fn(&g, |x, p| {
                let r2 = x * x + p * p;
                2.0 * sign / (2.0 * PI * hbar).sqrt()
                    * laguerre(n, 0.0, 2.0 * r2 / hbar)
                    * (-r2 / hbar).exp()
            });
            assert!(st.field.rel_distance(&want).unwrap() < 1e-13);
            assert!((st.normalization() - 1.0).norm() < 1e-8);
        }
    }

    #[test]
    fn holomorphic_sum_agrees_with_polar_laguerre() {
        // Ψ_mn = Σ_k (-1)^k k! C(m,k) C(n,k) λ̄^k λ^{-(m+n-k)} ā^{m-k} a^{n-k} Ψ_00 / sqrt(m! n!)
        let hbar = 0.9;
        let g = PhaseGrid::symmetric(32, 6.0, hbar).unwrap();
        let params = OscillatorParams::from_lambda(1.3, 0.7).unwrap();
        let (l, lb, w) = (params.lambda(), params.lambda_bar(), params.omega);
        for (m, n) in [(0, 0), (2, 1), (1, 3), (4, 0), (0, 2), (3, 3)] {
            let st = ho_state(m, n, &params, &g).unwrap();
            let want = PhaseField::from_fn(&g, |x, p| {
                let a = C64::new(w * x, p) / (2.0 * hbar * w).sqrt();
                let psi00 = 1.0 / ((2.0 * PI * hbar).sqrt() * l) * (-a.norm_sqr() / l).exp();
                let sum: C64 = (0..=m.min(n))
                    .map(|k| {
                        (-1f64).powi(k as i32)
                            * factorial(k)
                            * binom(m, k)
                            * binom(n, k)
                            * lb.powi(k as i32)
                            / l.powi((m + n - k) as i32)
                            * a.conj().powu((m - k) as u32)
                            * a.powu((n - k) as u32)
                    })
                    .sum();
                sum * psi00 / (factorial(m) * factorial(n)).sqrt()
            });
            assert!(st.field.rel_distance(&want).unwrap() < 1e-12, "{m} {n}");
        }
    }

    #[test]
    fn domain_checks() {
        let g = PhaseGrid::symmetric(32, 6.0, 1.0).unwrap();
        let off = OscillatorParams::new(1.0, 0.3, 0.0, 0.0).unwrap();
        assert!(ho_state(1, 1, &off, &g).is_err());
        let limit = OscillatorParams::from_lambda(1.0, 1.0).unwrap();
        assert!(ho_state(0, 0, &limit, &g).is_err());
        assert!(ho_ladder(5, 4, &OscillatorParams::moyal(1.0).unwrap(), &g).is_err());
        assert!(OscillatorParams::new(0.0, 0.5, 0.0, 0.0).is_err());
    }

    #[test]
    fn free_gaussian_weyl_form_and_wave_packet() {
        let hbar = 1.0;
        let g = PhaseGrid::symmetric(128, 11.0, hbar).unwrap();
        let params = FreeGaussianParams::new(0.5, 0.7, 0.5).unwrap();
        let (dx, dp) = (params.delta_x(hbar), params.delta_p);
        let t = 0.6;
        let st = free_gaussian(&params, t, &g).unwrap();
        let want = PhaseField::from_real_fn(&g, |x, p| {
            (-(p - 0.5).powi(2) / (2.0 * dp * dp)).exp()
                * (-(x - p * t).powi(2) / (2.0 * dx * dx)).exp()
                / (PI * dx * dp).sqrt()
        });
        assert!(st.field.rel_distance(&want).unwrap() < 1e-13);
        assert!((st.normalization() - 1.0).norm() < 1e-8);

        // Packet at t equals the exactly propagated packet at 0.
        let phi0 = free_wave_packet(&params, 0.0, &g.x);
        let want0 = WaveFunction::from_fn(&g.x, |x| {
            (2.0 * PI).powf(-0.25) / dx.sqrt()
                * C64::new(-x * x / (4.0 * dx * dx), 0.5 * x / hbar).exp()
        });
        assert!(phi0.rel_distance(&want0).unwrap() < 1e-12);
        let moved = phi0.map_spectrum(|xi| C64::from_polar(1.0, -xi * xi * t / (2.0 * hbar)));
        assert!(
            moved
                .rel_distance(&free_wave_packet(&params, t, &g.x))
                .unwrap()
                < 1e-10
        );
    }

    #[test]
    fn free_gaussian_matches_tensor_of_packet_for_any_sigma() {
        let hbar = 0.7;
        let g = PhaseGrid::symmetric(128, 10.0, hbar).unwrap();
        for sigma in [0.0, 0.3, 0.5, 1.0] {
            let params = FreeGaussianParams::new(-0.4, 0.6, sigma).unwrap();
            for t in [0.0, 0.8] {
                let phi = free_wave_packet(&params, t, &g.x);
                let built =
                    twisted_tensor(&phi, &phi, &OrderingSpec::sigma(sigma).unwrap(), &g).unwrap();
                let closed = free_gaussian(&params, t, &g).unwrap();
                let e = built.field.rel_distance(&closed.field).unwrap();
                assert!(e < 1e-9, "{sigma} {t} {e}");
            }
        }
    }

    #[test]
    fn coherent_state_normalisation_and_differential_system() {
        let hbar = 0.5;
        let g = PhaseGrid::symmetric(64, 6.0, hbar).unwrap();
        for &(w, sigma) in &[(1.0, 0.5), (1.7, 0.2), (0.8, 1.0)] {
            let params = CoherentParams::new(0.6, -0.4, w, sigma).unwrap();
            let st = coherent_state(&params, &g).unwrap();
            assert!((st.normalization() - 1.0).norm() < 1e-10);
            let psi = &st.field;
            let dx = spectral_derivative(psi, 1, 0).unwrap();
            let dp = spectral_derivative(psi, 0, 1).unwrap();
            let sb = 1.0 - sigma;
            let (x1, p1) = (params.x_bar, params.p_bar);
            let mut first = psi.clone();
            first.multiply_by(|x, p| C64::new(w * (x - x1), p - p1));
            let first = first
                .axpy(C64::new(hbar * sb, 0.0), &dx)
                .unwrap()
                .axpy(C64::new(0.0, hbar * sigma * w), &dp)
                .unwrap();
            let mut second = psi.clone();
            second.multiply_by(|x, p| C64::new(w * (x - x1), -(p - p1)));
            let second = second
                .axpy(C64::new(hbar * sigma, 0.0), &dx)
                .unwrap()
                .axpy(C64::new(0.0, -hbar * sb * w), &dp)
                .unwrap();
            assert!(first.l2_norm() / psi.l2_norm() < 1e-6);
            assert!(second.l2_norm() / psi.l2_norm() < 1e-6);
            let (l, r) = coherent_residuals(&st, &params).unwrap();
            assert!(l < 1e-6 && r < 1e-6, "{l} {r}");
        }
    }

    #[test]
    fn plane_wave_state_is_flagged() {
        let g = PhaseGrid::symmetric(32, 6.0, 1.0).unwrap();
        let s = plane_wave_state(0.3, 0.2, &g).unwrap();
        assert!(!s.proper);
        assert!(plane_wave_state(0.3, 0.0, &g).is_err());
    }
}
