use num_complex::Complex64 as C64;
use proptest::prelude::*;
use psq_core::grid::{spectral_derivative, PhaseField, PhaseGrid};
use psq_core::poly::PolyH;
use psq_core::star::*;

/// Shifted Gaussian `exp(-((x-x0)² + (p-p0)²)/(2w))` with a linear phase.
#[derive(Clone, Copy, Debug)]
struct Blob {
    x0: f64,
    p0: f64,
    w: f64,
    k: f64,
    l: f64,
    amp: C64,
}

impl Blob {
    fn eval(&self, x: f64, p: f64) -> C64 {
        let r2 = (x - self.x0).powi(2) + (p - self.p0).powi(2);
        self.amp * C64::new(-r2 / (2.0 * self.w), self.k * x + self.l * p).exp()
    }

    /// Amplitude `f̂(a, b)` in `f = ∬ f̂(a,b) e^{i(ax+bp)} da db`.
    fn plane_wave_amplitude(&self, a: f64, b: f64) -> C64 {
        let (a, b) = (a - self.k, b - self.l);
        let base = self.w / (2.0 * std::f64::consts::PI) * (-self.w * (a * a + b * b) / 2.0).exp();
        self.amp * C64::from_polar(base, -(a * self.x0 + b * self.p0))
    }

    fn field(&self, g: &PhaseGrid) -> PhaseField {
        PhaseField::from_fn(g, |x, p| self.eval(x, p))
    }
}

/// Left multiplication by a plane wave is a phase times a shift of the other factor:
/// `e^{i(ax+bp)} ⋆ g = e^{i(ax+bp)} g(x + hbar σ̄ b, p - hbar σ a)`.
/// Integrating over the plane-wave amplitudes of `f` gives `f ⋆ g` by brute force.
fn plane_wave_oracle(f: &Blob, g: &Blob, sigma: f64, hbar: f64, x: f64, p: f64) -> C64 {
    let half = 9.0 / f.w.sqrt();
    let n = 500;
    let h = 2.0 * half / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let a = f.k - half + (i as f64 + 0.5) * h;
        for j in 0..n {
            let b = f.l - half + (j as f64 + 0.5) * h;
            acc += f.plane_wave_amplitude(a, b)
                * C64::from_polar(1.0, a * x + b * p)
                * g.eval(x + hbar * (1.0 - sigma) * b, p - hbar * sigma * a);
        }
    }
    acc * h * h
}

/// Mirror form for a polynomial left factor against a Gaussian:
/// `f ⋆ e^{i(ax+bp)} = f(x - hbar σ b, p + hbar σ̄ a) e^{i(ax+bp)}`.
fn polynomial_oracle(f: &PolyH, g: &Blob, sigma: f64, hbar: f64, x: f64, p: f64) -> C64 {
    let half = 9.0 / g.w.sqrt();
    let n = 400;
    let h = 2.0 * half / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let a = g.k - half + (i as f64 + 0.5) * h;
        for j in 0..n {
            let b = g.l - half + (j as f64 + 0.5) * h;
            acc += g.plane_wave_amplitude(a, b)
                * C64::from_polar(1.0, a * x + b * p)
                * f.eval(x - hbar * sigma * b, p + hbar * (1.0 - sigma) * a, hbar);
        }
    }
    acc * h * h
}

#[test]
fn oracle_reproduces_its_own_inputs() {
    let b = Blob {
        x0: 0.3,
        p0: -0.2,
        w: 0.8,
        k: 0.4,
        l: -0.3,
        amp: C64::new(0.7, 0.2),
    };
    let one = Blob {
        x0: 0.0,
        p0: 0.0,
        w: 1e6,
        k: 0.0,
        l: 0.0,
        amp: C64::new(1.0, 0.0),
    };
    // f ⋆ (nearly constant) ≈ f
    let v = plane_wave_oracle(&b, &one, 0.4, 1.0, 0.5, 0.1);
    assert!((v - b.eval(0.5, 0.1)).norm() < 1e-5);
}

#[test]
fn lattice_star_matches_plane_wave_oracle() {
    let hbar = 0.8;
    let g = PhaseGrid::symmetric(64, 8.0, hbar).unwrap();
    let f = Blob {
        x0: 0.4,
        p0: -0.3,
        w: 0.9,
        k: 0.5,
        l: -0.2,
        amp: C64::new(1.0, 0.3),
    };
    let h = Blob {
        x0: -0.2,
        p0: 0.5,
        w: 1.2,
        k: -0.3,
        l: 0.4,
        amp: C64::new(0.6, -0.5),
    };
    let samples = [(20, 33), (31, 29), (36, 40), (28, 28), (33, 35)];
    for sigma in [0.0, 0.3, 0.5, 1.0] {
        let prod = star_sigma(&f.field(&g), &h.field(&g), sigma).unwrap();
        let scale = prod.field.max_abs();
        for &(i, j) in &samples {
            let (x, p) = prod.field.coords(i, j);
            let want = plane_wave_oracle(&f, &h, sigma, hbar, x, p);
            let got = prod.field.at(i, j);
            assert!(
                (got - want).norm() < 1e-7 * scale,
                "sigma {sigma} at ({x},{p}): {got} vs {want}"
            );
        }
    }
}

#[test]
fn bopp_polynomials_match_quadrature() {
    let hbar = 1.0;
    let g = PhaseGrid::symmetric(64, 8.0, hbar).unwrap();
    let psi = Blob {
        x0: 0.3,
        p0: 0.2,
        w: 1.0,
        k: 0.2,
        l: -0.1,
        amp: C64::new(1.0, 0.0),
    };
    let field = psi.field(&g);
    let polys = ["p^2", "x^2", "x*p^2", "p^2/2 + x^2/2"];
    for src in polys {
        let a = PolyH::parse(src).unwrap();
        for sigma in [0.0, 0.5, 0.75] {
            let spec = OrderingSpec::sigma(sigma).unwrap();
            let out = bopp_apply(&a.clone().into(), &field, &spec, Side::Left).unwrap();
            let scale = out.max_abs();
            for &(i, j) in &[(30, 34), (36, 28), (32, 32)] {
                let (x, p) = out.coords(i, j);
                let want = polynomial_oracle(&a, &psi, sigma, hbar, x, p);
                assert!(
                    (out.at(i, j) - want).norm() < 1e-7 * scale,
                    "{src} sigma {sigma}"
                );
            }
        }
    }
}

#[test]
fn moyal_ground_distribution_is_idempotent() {
    for hbar in [1.0, 0.5] {
        let g = PhaseGrid::symmetric(64, 8.0 * f64::sqrt(hbar), hbar).unwrap();
        let pi = std::f64::consts::PI;
        let rho =
            PhaseField::from_real_fn(&g, |x, p| (-(x * x + p * p) / hbar).exp() / (pi * hbar));
        let sq = star_sigma(&rho, &rho, 0.5).unwrap();
        let want = rho.scale_real(1.0 / (2.0 * pi * hbar));
        assert!(sq.field.sub(&want).unwrap().max_abs() < 1e-7);
    }
}

#[test]
fn smoother_fixes_coordinates_and_heat_kernel() {
    let hbar = 0.7;
    let g = PhaseGrid::symmetric(64, 10.0, hbar).unwrap();
    let spec = OrderingSpec::gaussian(0.5, 0.4, 0.0).unwrap();
    let a = 0.9;
    let f = PhaseField::from_real_fn(&g, |x, _| (-x * x / (2.0 * hbar * a)).exp());
    let s = apply_smoother(&f, &spec, psq_core::grid::Direction::Forward).unwrap();
    let want = PhaseField::from_real_fn(&g, |x, _| {
        (a / (a + 0.4)).sqrt() * (-x * x / (2.0 * hbar * (a + 0.4))).exp()
    });
    assert!(s.sub(&want).unwrap().max_abs() < 1e-8);
}

#[test]
fn bracket_of_equal_fields_vanishes_exactly() {
    let g = PhaseGrid::symmetric(32, 6.0, 1.0).unwrap();
    let f = Blob {
        x0: 0.1,
        p0: 0.2,
        w: 1.0,
        k: 0.0,
        l: 0.3,
        amp: C64::new(1.0, 0.0),
    }
    .field(&g);
    let b = moyal_bracket(&f, &f, &OrderingSpec::sigma(0.3).unwrap()).unwrap();
    assert_eq!(b.max_abs(), 0.0);
}

#[test]
fn bracket_deviation_from_poisson_is_second_order() {
    // Windowed cubics, fixed in (x, p); only hbar moves.
    let g0 = PhaseGrid::symmetric(64, 8.0, 1.0).unwrap();
    let hbars = [0.2, 0.1, 0.05, 0.025];
    let mut errs = Vec::new();
    for &hbar in &hbars {
        let g = g0.with_hbar(hbar).unwrap();
        let w = |x: f64, p: f64| (-(x * x + p * p) / 2.0).exp();
        let f = PhaseField::from_real_fn(&g, |x, p| (1.0 + x + x * p * p) * w(x, p));
        let h = PhaseField::from_real_fn(&g, |x, p| (p - x * x * p + x * x * x) * w(x, p));
        let spec = OrderingSpec::weyl();
        let mb = moyal_bracket(&f, &h, &spec).unwrap();
        let fx = spectral_derivative(&f, 1, 0).unwrap();
        let fp = spectral_derivative(&f, 0, 1).unwrap();
        let hx = spectral_derivative(&h, 1, 0).unwrap();
        let hp = spectral_derivative(&h, 0, 1).unwrap();
        let pb = fx.mul(&hp).unwrap().sub(&fp.mul(&hx).unwrap()).unwrap();
        errs.push(mb.sub(&pb).unwrap().l2_norm());
    }
    let lx: Vec<f64> = hbars.iter().map(|h| h.ln()).collect();
    let ly: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    let mx = lx.iter().sum::<f64>() / 4.0;
    let my = ly.iter().sum::<f64>() / 4.0;
    let slope = lx
        .iter()
        .zip(&ly)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.1, "slope {slope}, errors {errs:?}");
}

#[test]
fn identity_smoother_reduces_to_plain_product() {
    let g = PhaseGrid::symmetric(32, 6.0, 1.0).unwrap();
    let f = Blob {
        x0: 0.1,
        p0: 0.2,
        w: 1.0,
        k: 0.0,
        l: 0.3,
        amp: C64::new(1.0, 0.0),
    }
    .field(&g);
    let h = Blob {
        x0: -0.3,
        p0: 0.0,
        w: 0.8,
        k: 0.2,
        l: 0.0,
        amp: C64::new(0.0, 1.0),
    }
    .field(&g);
    let spec = OrderingSpec::sigma(0.3).unwrap();
    let a = star_sigma_s(&f, &h, &spec).unwrap().field;
    let b = star_sigma(&f, &h, 0.3).unwrap().field;
    assert_eq!(a.data(), b.data());
}

#[test]
fn zero_padding_agrees_for_contained_fields() {
    let g = PhaseGrid::symmetric(32, 6.0, 1.0).unwrap();
    let f = Blob {
        x0: 0.1,
        p0: 0.2,
        w: 0.7,
        k: 0.0,
        l: 0.3,
        amp: C64::new(1.0, 0.0),
    }
    .field(&g);
    let h = Blob {
        x0: -0.3,
        p0: 0.0,
        w: 0.8,
        k: 0.2,
        l: 0.0,
        amp: C64::new(0.0, 1.0),
    }
    .field(&g);
    let a = star_sigma(&f, &h, 0.3).unwrap().field;
    let b = star_sigma_with(&f, &h, 0.3, StarOptions { zero_pad: true })
        .unwrap()
        .field;
    assert!(a.rel_distance(&b).unwrap() < 1e-8);
}

fn blob_strategy() -> impl Strategy<Value = Blob> {
    (
        -1.0..1.0f64,
        -1.0..1.0f64,
        0.6..1.2f64,
        -0.8..0.8f64,
        -0.8..0.8f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
    )
        .prop_map(|(x0, p0, w, k, l, re, im)| Blob {
            x0,
            p0,
            w,
            k,
            l,
            amp: C64::new(re + 1.5, im),
        })
}

fn mixture() -> impl Strategy<Value = Vec<Blob>> {
    prop::collection::vec(blob_strategy(), 1..3)
}

fn mixture_field(g: &PhaseGrid, bs: &[Blob]) -> PhaseField {
    PhaseField::from_fn(g, |x, p| bs.iter().map(|b| b.eval(x, p)).sum())
}

fn spec_strategy() -> impl Strategy<Value = OrderingSpec> {
    (0.0..=1.0f64, 0usize..3, 0.0..0.15f64, 0.0..0.15f64).prop_map(|(s, kind, a, b)| match kind {
        0 => OrderingSpec::sigma(s).unwrap(),
        1 => OrderingSpec::weyl(),
        _ => OrderingSpec::gaussian(s, a, b).unwrap(),
    })
}

fn grid() -> PhaseGrid {
    PhaseGrid::symmetric(64, 8.0, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn associativity(a in mixture(), b in mixture(), c in mixture(), spec in spec_strategy()) {
        let g = grid();
        let (f, h, k) = (mixture_field(&g, &a), mixture_field(&g, &b), mixture_field(&g, &c));
        let left = star_sigma_s(&star_sigma_s(&f, &h, &spec).unwrap().field, &k, &spec).unwrap().field;
        let right = star_sigma_s(&f, &star_sigma_s(&h, &k, &spec).unwrap().field, &spec).unwrap().field;
        prop_assert!(left.rel_distance(&right).unwrap() < 1e-6);
    }

    #[test]
    fn trace_property(a in mixture(), b in mixture(), spec in spec_strategy()) {
        let g = grid();
        let (f, h) = (mixture_field(&g, &a), mixture_field(&g, &b));
        let fg = star_sigma_s(&f, &h, &spec).unwrap().field.integrate();
        let gf = star_sigma_s(&h, &f, &spec).unwrap().field.integrate();
        let bound = 1e-8 * f.l2_norm() * h.l2_norm();
        prop_assert!((fg - gf).norm() < bound);
        if spec.sigma == 0.5 && spec.smoother.is_identity() {
            let plain = f.mul(&h).unwrap().integrate();
            prop_assert!((fg - plain).norm() < bound);
        }
    }

    #[test]
    fn leibniz_rule(a in mixture(), b in mixture(), sigma in 0.0..=1.0f64) {
        let g = grid();
        let (f, h) = (mixture_field(&g, &a), mixture_field(&g, &b));
        let d = |u: &PhaseField| spectral_derivative(u, 1, 0).unwrap();
        let lhs = d(&star_sigma(&f, &h, sigma).unwrap().field);
        let rhs = star_sigma(&d(&f), &h, sigma).unwrap().field
            .add(&star_sigma(&f, &d(&h), sigma).unwrap().field).unwrap();
        prop_assert!(lhs.rel_distance(&rhs).unwrap() < 1e-7);
    }

    #[test]
    fn product_norm_bound(a in mixture(), b in mixture(), sigma in 0.0..=1.0f64) {
        let g = grid();
        let (f, h) = (mixture_field(&g, &a), mixture_field(&g, &b));
        let prod = star_sigma(&f, &h, sigma).unwrap().field;
        let bound = f.l2_norm() * h.l2_norm() / (2.0 * std::f64::consts::PI).sqrt();
        prop_assert!(prod.l2_norm() <= bound + 1e-9);
    }

    #[test]
    fn gauge_intertwines_products(a in mixture(), b in mixture(), s in 0.0..=1.0f64, t in 0.0..=1.0f64) {
        let g = grid();
        let (f, h) = (mixture_field(&g, &a), mixture_field(&g, &b));
        let lhs = gauge_transform(&star_sigma(&f, &h, s).unwrap().field, s, t).unwrap();
        let rhs = star_sigma(
            &gauge_transform(&f, s, t).unwrap(),
            &gauge_transform(&h, s, t).unwrap(),
            t,
        ).unwrap().field;
        prop_assert!(lhs.rel_distance(&rhs).unwrap() < 1e-7);
    }

    #[test]
    fn involution_laws(a in mixture(), b in mixture(), spec in spec_strategy()) {
        let g = grid();
        let (f, h) = (mixture_field(&g, &a), mixture_field(&g, &b));
        let twice = involution_dagger(&involution_dagger(&f, &spec).unwrap(), &spec).unwrap();
        prop_assert!(twice.rel_distance(&f).unwrap() < 1e-10);
        let lhs = involution_dagger(&star_sigma_s(&f, &h, &spec).unwrap().field, &spec).unwrap();
        let rhs = star_sigma_s(
            &involution_dagger(&h, &spec).unwrap(),
            &involution_dagger(&f, &spec).unwrap(),
            &spec,
        ).unwrap().field;
        prop_assert!(lhs.rel_distance(&rhs).unwrap() < 1e-7);
    }

    #[test]
    fn smoother_preserves_integral(a in mixture(), alpha in -0.1..0.5f64, beta in -0.1..0.5f64) {
        let g = grid();
        let f = mixture_field(&g, &a);
        let spec = OrderingSpec::gaussian(0.5, alpha, beta).unwrap();
        let s = apply_smoother(&f, &spec, psq_core::grid::Direction::Forward).unwrap();
        prop_assert!((s.integrate() - f.integrate()).norm() < 1e-9);
    }

    #[test]
    fn bopp_on_fields_matches_product_with_window(a in mixture(), sigma in 0.0..=1.0f64) {
        let g = grid();
        let psi = mixture_field(&g, &a);
        let v = |x: f64| C64::new(1.0 + 0.2 * x, 0.0) * (-x * x / 2.0).exp();
        let vf = PhaseField::from_fn(&g, |x, _| v(x));
        let spec = OrderingSpec::sigma(sigma).unwrap();
        let right = bopp_apply(&ObservableSpec::x_only(v), &psi, &spec, Side::Right).unwrap();
        let star = star_sigma(&psi, &vf, sigma).unwrap().field;
        prop_assert!(right.rel_distance(&star).unwrap() < 1e-9);
    }
}
