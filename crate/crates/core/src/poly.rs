//! Polynomial symbols in `x`, `p` with `hbar` kept as a formal grading variable,
//! their star products, and the operator normal forms they order into.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{PhaseField, PhaseGrid};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Exponents of `hbar^k x^n p^m`.  The derived order is lexicographic in `(k, n, m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mono {
    pub k: u32,
    pub n: u32,
    pub m: u32,
}

impl Mono {
    pub const fn new(k: u32, n: u32, m: u32) -> Self {
        Self { k, n, m }
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, j| acc * f64::from(n - j) / f64::from(j + 1))
}

/// `n (n-1) ... (n-r+1)`, the coefficient produced by `d^r x^n`.
fn falling(n: u32, r: u32) -> f64 {
    if r > n {
        0.0
    } else {
        (0..r).map(|j| f64::from(n - j)).product()
    }
}

fn insert(map: &mut BTreeMap<Mono, C64>, key: Mono, c: C64) {
    if c == ZERO {
        return;
    }
    let e = map.entry(key).or_insert(ZERO);
    *e += c;
    if *e == ZERO {
        map.remove(&key);
    }
}

fn fmt_coef(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.re == 0.0 {
        format!("{}*i", c.im)
    } else {
        format!("({}{:+}*i)", c.re, c.im)
    }
}

fn fmt_terms(
    f: &mut fmt::Formatter<'_>,
    terms: &BTreeMap<Mono, C64>,
    xs: &str,
    ps: &str,
) -> fmt::Result {
    if terms.is_empty() {
        return write!(f, "0");
    }
    for (idx, (mono, c)) in terms.iter().enumerate() {
        let mut c = *c;
        if idx > 0 {
            if c.im == 0.0 && c.re < 0.0 || c.re == 0.0 && c.im < 0.0 {
                write!(f, " - ")?;
                c = -c;
            } else {
                write!(f, " + ")?;
            }
        }
        let mut parts = Vec::new();
        for (sym, e) in [("hbar", mono.k), (xs, mono.n), (ps, mono.m)] {
            match e {
                0 => {}
                1 => parts.push(sym.to_string()),
                _ => parts.push(format!("{sym}^{e}")),
            }
        }
        if c != ONE || parts.is_empty() {
            parts.insert(0, fmt_coef(c));
        }
        write!(f, "{}", parts.join("*"))?;
    }
    Ok(())
}

/// Sparse polynomial symbol `sum c hbar^k x^n p^m`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyH {
    terms: BTreeMap<Mono, C64>,
}

impl PolyH {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: C64) -> Self {
        Self::monomial(c, 0, 0, 0)
    }

    pub fn one() -> Self {
        Self::constant(ONE)
    }

    pub fn monomial(c: C64, k: u32, n: u32, m: u32) -> Self {
        let mut terms = BTreeMap::new();
        insert(&mut terms, Mono::new(k, n, m), c);
        Self { terms }
    }

    /// Real-coefficient monomial `c x^n p^m`.
    pub fn xp(c: f64, n: u32, m: u32) -> Self {
        Self::monomial(C64::new(c, 0.0), 0, n, m)
    }

    pub fn x() -> Self {
        Self::xp(1.0, 1, 0)
    }

    pub fn p() -> Self {
        Self::xp(1.0, 0, 1)
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Mono, C64)>) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in it {
            insert(&mut terms, k, c);
        }
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: u32, n: u32, m: u32) -> C64 {
        self.terms.get(&Mono::new(k, n, m)).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `n + m` among the terms.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|t| t.n + t.m).max().unwrap_or(0)
    }

    pub fn add(&self, other: &PolyH) -> PolyH {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            insert(&mut out.terms, *k, *c);
        }
        out
    }

    pub fn sub(&self, other: &PolyH) -> PolyH {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: C64) -> PolyH {
        Self::from_terms(self.terms.iter().map(|(k, c)| (*k, c * s)))
    }

    pub fn scale_real(&self, s: f64) -> PolyH {
        self.scale(C64::new(s, 0.0))
    }

    /// Commutative pointwise product.
    pub fn mul(&self, other: &PolyH) -> PolyH {
        let mut terms = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                insert(
                    &mut terms,
                    Mono::new(a.k + b.k, a.n + b.n, a.m + b.m),
                    ca * cb,
                );
            }
        }
        Self { terms }
    }

    pub fn pow(&self, e: u32) -> PolyH {
        (0..e).fold(PolyH::one(), |acc, _| acc.mul(self))
    }

    /// Complex conjugate of the symbol (`x`, `p`, `hbar` are real).
    pub fn conj(&self) -> PolyH {
        Self::from_terms(self.terms.iter().map(|(k, c)| (*k, c.conj())))
    }

    /// `∂x^r ∂p^s`.
    pub fn deriv(&self, r: u32, s: u32) -> PolyH {
        Self::from_terms(self.terms.iter().filter_map(|(t, c)| {
            (t.n >= r && t.m >= s).then(|| {
                (
                    Mono::new(t.k, t.n - r, t.m - s),
                    c * falling(t.n, r) * falling(t.m, s),
                )
            })
        }))
    }

    /// Multiply by `c hbar^k x^a p^b`.
    fn shift(&self, c: C64, k: u32, a: u32, b: u32) -> PolyH {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(t, v)| (Mono::new(t.k + k, t.n + a, t.m + b), v * c)),
        )
    }

    /// Fold the formal `hbar` into the coefficients.
    pub fn with_hbar(&self, hbar: f64) -> PolyH {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(t, c)| (Mono::new(0, t.n, t.m), c * hbar.powi(t.k as i32))),
        )
    }

    pub fn eval(&self, x: f64, p: f64, hbar: f64) -> C64 {
        self.terms
            .iter()
            .map(|(t, c)| c * (hbar.powi(t.k as i32) * x.powi(t.n as i32) * p.powi(t.m as i32)))
            .sum()
    }

    /// Sample onto a grid, using the grid's `hbar`.
    pub fn to_field(&self, grid: &PhaseGrid) -> PhaseField {
        let h = self.with_hbar(grid.hbar());
        PhaseField::from_fn(grid, move |x, p| h.eval(x, p, 1.0))
    }

    /// Terms independent of `p` and of `x`, if the symbol splits as `T(p) + V(x)`.
    pub fn split_natural(&self) -> Option<(PolyH, PolyH)> {
        let mut v = PolyH::zero();
        let mut t = PolyH::zero();
        for (k, c) in &self.terms {
            match (k.n, k.m) {
                (_, 0) => insert(&mut v.terms, *k, *c),
                (0, _) => insert(&mut t.terms, *k, *c),
                _ => return None,
            }
        }
        Some((t, v))
    }

    /// Coefficient-level comparison with relative tolerance.
    pub fn approx_eq(&self, other: &PolyH, tol: f64) -> bool {
        let scale = self
            .terms
            .values()
            .chain(other.terms.values())
            .map(|c| c.norm())
            .fold(1.0, f64::max);
        let diff = self.sub(other);
        diff.terms.values().all(|c| c.norm() <= tol * scale)
    }

    /// Parse an expression such as `0.5*p^2 + 0.25*x^4 - i*hbar*x*p`.
    pub fn parse(src: &str) -> Result<PolyH> {
        let mut p = Parser {
            s: src.as_bytes(),
            pos: 0,
        };
        let out = p.expr()?;
        p.ws();
        if p.pos != p.s.len() {
            return Err(Error::Parse(format!(
                "unexpected input at offset {}: {}",
                p.pos,
                &src[p.pos..]
            )));
        }
        Ok(out)
    }
}

impl fmt::Display for PolyH {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.terms, "x", "p")
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn err(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at offset {}", self.pos))
    }

    fn expr(&mut self) -> Result<PolyH> {
        let mut acc = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let t = self.term()?;
            acc = if c == b'+' { acc.add(&t) } else { acc.sub(&t) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<PolyH> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.unary()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let d = self.unary()?;
                    if d.degree() != 0 || d.terms.keys().any(|t| t.k != 0) {
                        return Err(self.err("division by a non-constant"));
                    }
                    let c = d.coeff(0, 0, 0);
                    if c == ZERO {
                        return Err(self.err("division by zero"));
                    }
                    acc = acc.scale(ONE / c);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<PolyH> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(self.unary()?.scale(-ONE))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<PolyH> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.ws();
            let start = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let e: u32 = std::str::from_utf8(&self.s[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| self.err("expected a non-negative integer exponent"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<PolyH> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.s.len()
                    && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                if self.pos < self.s.len() && matches!(self.s[self.pos], b'e' | b'E') {
                    self.pos += 1;
                    if self.pos < self.s.len() && matches!(self.s[self.pos], b'+' | b'-') {
                        self.pos += 1;
                    }
                    while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                }
                let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
                let v: f64 = txt.parse().map_err(|_| self.err("bad number"))?;
                Ok(PolyH::constant(C64::new(v, 0.0)))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                match std::str::from_utf8(&self.s[start..self.pos]).unwrap() {
                    "x" | "q" => Ok(PolyH::x()),
                    "p" => Ok(PolyH::p()),
                    "hbar" => Ok(PolyH::monomial(ONE, 1, 0, 0)),
                    "i" => Ok(PolyH::constant(C64::new(0.0, 1.0))),
                    other => Err(Error::Parse(format!("unknown symbol '{other}'"))),
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

/// `f ⋆_σ g` as a finite bidifferential series.
pub fn pstar(f: &PolyH, g: &PolyH, sigma: f64) -> PolyH {
    let sb = 1.0 - sigma;
    let kmax = f.degree().min(g.degree());
    let mut out = PolyH::zero();
    for k in 0..=kmax {
        let pre = C64::new(0.0, 1.0).powu(k) / factorial(k);
        for m in 0..=k {
            let w = binom(k, m) * sigma.powi((k - m) as i32) * (-sb).powi(m as i32);
            if w == 0.0 {
                continue;
            }
            let a = f.deriv(k - m, m);
            if a.is_zero() {
                continue;
            }
            let b = g.deriv(m, k - m);
            if b.is_zero() {
                continue;
            }
            out = out.add(&a.mul(&b).shift(pre * w, k, 0, 0));
        }
    }
    out
}

/// `f ⋆_{σ,S} g = S(S⁻¹f ⋆_σ S⁻¹g)`.
pub fn pstar_s(f: &PolyH, g: &PolyH, sigma: f64, word: &DiffOpWord) -> PolyH {
    let a = word.apply(f, true);
    let b = word.apply(g, true);
    word.apply(&pstar(&a, &b, sigma), false)
}

/// Poisson bracket `∂x f ∂p g - ∂p f ∂x g`.
pub fn ppoisson(f: &PolyH, g: &PolyH) -> PolyH {
    f.deriv(1, 0)
        .mul(&g.deriv(0, 1))
        .sub(&f.deriv(0, 1).mul(&g.deriv(1, 0)))
}

/// `(f ⋆ g - g ⋆ f) / (i hbar)`, with the division by `hbar` done on the grading.
pub fn pbracket(f: &PolyH, g: &PolyH, sigma: f64) -> PolyH {
    let c = pstar(f, g, sigma).sub(&pstar(g, f, sigma));
    // Order-zero terms cancel up to rounding and are dropped.
    PolyH::from_terms(
        c.terms
            .iter()
            .filter(|(t, _)| t.k >= 1)
            .map(|(t, v)| (Mono::new(t.k - 1, t.n, t.m), v * C64::new(0.0, -1.0))),
    )
}

/// One generator `c hbar^k x^a p^b ∂x^r ∂p^s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Generator {
    pub c: C64,
    pub k: u32,
    pub a: u32,
    pub b: u32,
    pub r: u32,
    pub s: u32,
}

/// `exp(sum of generators)`, each strictly lowering the polynomial degree.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiffOpWord {
    gens: Vec<Generator>,
}

impl DiffOpWord {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn new(gens: Vec<Generator>) -> Result<Self> {
        for g in &gens {
            if g.a + g.b >= g.r + g.s {
                return Err(Error::Inadmissible(format!(
                    "generator x^{} p^{} d_x^{} d_p^{} does not lower the degree",
                    g.a, g.b, g.r, g.s
                )));
            }
        }
        Ok(Self {
            gens: gens.into_iter().filter(|g| g.c != ZERO).collect(),
        })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn is_identity(&self) -> bool {
        self.gens.is_empty()
    }

    /// `exp(hbar alpha/2 ∂x² + hbar beta/2 ∂p²)`.
    pub fn gaussian(alpha: f64, beta: f64) -> Self {
        let g = |c: f64, r, s| Generator {
            c: C64::new(c, 0.0),
            k: 1,
            a: 0,
            b: 0,
            r,
            s,
        };
        Self::new(vec![g(0.5 * alpha, 2, 0), g(0.5 * beta, 0, 2)]).unwrap()
    }

    /// `exp(i hbar delta ∂x ∂p)`, carrying the σ-product to the (σ+delta)-product.
    pub fn gauge(delta: f64) -> Self {
        Self::new(vec![Generator {
            c: C64::new(0.0, delta),
            k: 1,
            a: 0,
            b: 0,
            r: 1,
            s: 1,
        }])
        .unwrap()
    }

    /// `exp(-i hbar a ∂x∂p + i hbar b x ∂p² - hbar² c ∂p³)`.
    pub fn three_parameter(a: f64, b: f64, c: f64) -> Self {
        Self::new(vec![
            Generator {
                c: C64::new(0.0, -a),
                k: 1,
                a: 0,
                b: 0,
                r: 1,
                s: 1,
            },
            Generator {
                c: C64::new(0.0, b),
                k: 1,
                a: 1,
                b: 0,
                r: 0,
                s: 2,
            },
            Generator {
                c: C64::new(-c, 0.0),
                k: 2,
                a: 0,
                b: 0,
                r: 0,
                s: 3,
            },
        ])
        .unwrap()
    }

    /// The word `S̄` with `S̄ f = (S f*)*`.
    pub fn conj(&self) -> Self {
        Self {
            gens: self
                .gens
                .iter()
                .map(|g| Generator {
                    c: g.c.conj(),
                    ..*g
                })
                .collect(),
        }
    }

    fn exponent(&self, f: &PolyH) -> PolyH {
        self.gens.iter().fold(PolyH::zero(), |acc, g| {
            acc.add(&f.deriv(g.r, g.s).shift(g.c, g.k, g.a, g.b))
        })
    }

    /// `S f`, or `S⁻¹ f` when `inverse`.  Terminates since every generator lowers the degree.
    pub fn apply(&self, f: &PolyH, inverse: bool) -> PolyH {
        let sign = if inverse { -1.0 } else { 1.0 };
        let mut out = f.clone();
        let mut term = f.clone();
        let mut n = 1.0;
        loop {
            term = self.exponent(&term).scale_real(sign / n);
            if term.is_zero() {
                return out;
            }
            out = out.add(&term);
            n += 1.0;
        }
    }

    /// Fourier-multiplier exponent at `(xi, eta)` when no generator carries `x` or `p`.
    pub fn multiplier_exponent(&self, xi: f64, eta: f64, hbar: f64) -> Option<C64> {
        let mut e = ZERO;
        for g in &self.gens {
            if g.a != 0 || g.b != 0 {
                return None;
            }
            e += g.c
                * hbar.powi(g.k as i32)
                * C64::new(0.0, xi / hbar).powu(g.r)
                * C64::new(0.0, -eta / hbar).powu(g.s);
        }
        Some(e)
    }

    pub fn is_multiplier(&self) -> bool {
        self.gens.iter().all(|g| g.a == 0 && g.b == 0)
    }
}

/// Standard-ordered operator `sum c hbar^k q̂^n p̂^m` (all `q̂` to the left).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OperatorNF {
    terms: BTreeMap<Mono, C64>,
}

impl OperatorNF {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Mono, C64)>) -> Self {
        let mut terms = BTreeMap::new();
        for (k, c) in it {
            insert(&mut terms, k, c);
        }
        Self { terms }
    }

    /// Read the symbol `hbar^k x^n p^m` as `hbar^k q̂^n p̂^m`.
    pub fn standard(f: &PolyH) -> Self {
        Self {
            terms: f.terms.clone(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &C64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: u32, n: u32, m: u32) -> C64 {
        self.terms.get(&Mono::new(k, n, m)).copied().unwrap_or(ZERO)
    }

    pub fn add(&self, other: &OperatorNF) -> OperatorNF {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            insert(&mut out.terms, *k, *c);
        }
        out
    }

    pub fn sub(&self, other: &OperatorNF) -> OperatorNF {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, s: C64) -> OperatorNF {
        Self::from_terms(self.terms.iter().map(|(k, c)| (*k, c * s)))
    }

    /// `(c q̂^n p̂^m)(d q̂^r p̂^s)` reordered with `p̂^m q̂^r = sum_j C(m,j) C(r,j) j! (-i hbar)^j q̂^{r-j} p̂^{m-j}`.
    pub fn multiply(&self, other: &OperatorNF) -> OperatorNF {
        let mut terms = BTreeMap::new();
        for (a, ca) in &self.terms {
            for (b, cb) in &other.terms {
                for j in 0..=a.m.min(b.n) {
                    let w = binom(a.m, j) * binom(b.n, j) * factorial(j);
                    let c = ca * cb * C64::new(0.0, -1.0).powu(j) * w;
                    insert(
                        &mut terms,
                        Mono::new(a.k + b.k + j, a.n + b.n - j, a.m + b.m - j),
                        c,
                    );
                }
            }
        }
        Self { terms }
    }

    /// Hermitian adjoint: `(c q̂^n p̂^m)† = c* p̂^m q̂^n`, then reordered.
    pub fn adjoint(&self) -> OperatorNF {
        let mut out = OperatorNF::zero();
        for (t, c) in &self.terms {
            let pm = OperatorNF::from_terms([(Mono::new(t.k, 0, t.m), c.conj())]);
            let qn = OperatorNF::from_terms([(Mono::new(0, t.n, 0), ONE)]);
            out = out.add(&pm.multiply(&qn));
        }
        out
    }

    pub fn with_hbar(&self, hbar: f64) -> OperatorNF {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(t, c)| (Mono::new(0, t.n, t.m), c * hbar.powi(t.k as i32))),
        )
    }

    pub fn approx_eq(&self, other: &OperatorNF, tol: f64) -> bool {
        let scale = self
            .terms
            .values()
            .chain(other.terms.values())
            .map(|c| c.norm())
            .fold(1.0, f64::max);
        self.sub(other)
            .terms
            .values()
            .all(|c| c.norm() <= tol * scale)
    }

    /// Highest-degree term breaking `A = A†`, rendered for error messages. With `hbar` set the
    /// comparison is made after substituting its value.
    pub fn hermiticity_defect(&self, hbar: Option<f64>, tol: f64) -> Option<String> {
        let (me, d) = match hbar {
            Some(h) => (self.with_hbar(h), self.sub(&self.adjoint()).with_hbar(h)),
            None => (self.clone(), self.sub(&self.adjoint())),
        };
        let scale = me.terms.values().map(|c| c.norm()).fold(1.0, f64::max);
        d.terms
            .iter()
            .filter(|(_, c)| c.norm() > tol * scale)
            .max_by_key(|(t, _)| (t.n + t.m, t.n))
            .map(|(t, _)| {
                let single = OperatorNF::from_terms([(*t, me.coeff(t.k, t.n, t.m))]);
                let shown = single.to_string();
                if shown == "0" {
                    format!("hbar^{}*q^{}*p^{}", t.k, t.n, t.m)
                } else {
                    shown
                }
            })
    }
}

impl fmt::Display for OperatorNF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_terms(f, &self.terms, "q", "p")
    }
}

pub fn nf_multiply(a: &OperatorNF, b: &OperatorNF) -> OperatorNF {
    a.multiply(b)
}

pub fn nf_adjoint(a: &OperatorNF) -> OperatorNF {
    a.adjoint()
}

/// σ-ordered operator of a symbol: standard ordering after `exp(-i hbar σ ∂x∂p)`.
pub fn sigma_order(f: &PolyH, sigma: f64) -> OperatorNF {
    OperatorNF::standard(&DiffOpWord::gauge(-sigma).apply(f, false))
}

/// `(σ,S)`-ordered operator: σ-ordering of `S⁻¹ f`.
pub fn sigma_s_order(f: &PolyH, sigma: f64, word: &DiffOpWord) -> OperatorNF {
    sigma_order(&word.apply(f, true), sigma)
}

/// Apply the word forward (`S f`) or inverse (`S⁻¹ f`).
pub fn apply_word(word: &DiffOpWord, f: &PolyH, inverse: bool) -> PolyH {
    word.apply(f, inverse)
}
