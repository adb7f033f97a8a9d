//! Window catalog: pointwise values, derivatives and Fourier transforms.
//!
//! Fourier convention: `f̂(ξ) = ∫ f(x) e^{−2πixξ} dx`. Dilation is
//! `φ_γ(x) = √γ φ(γx)`, so `φ̂_γ(ξ) = φ̂(ξ/γ)/√γ`.
//!
//! Type-I and type-II windows are defined on the Fourier side only; they
//! have no time-domain evaluator.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

/// Complex value with finite components.
pub type ComplexValue = Complex64;

/// Fourier-side base `ψ` of a type-II window.
#[derive(Clone, Debug, PartialEq)]
pub enum TypeIIBase {
    /// `ψ(ξ) = e^{−|ξ|}`.
    Exp,
    /// `ψ(ξ) = 1/((1+2πiaξ)(1+2πibξ))`.
    TwoPole { a: f64, b: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum WindowKind {
    /// Centered B-spline `Q_m`, supported on `[−m/2, m/2]`.
    BSpline { m: u32 },
    /// `e^{−πx²}`.
    Gaussian,
    /// `e^{−|x|}`.
    TwoSidedExp,
    /// Window whose transform is `1/((1+2πiaξ)(1+2πibξ))`.
    TwoPoleRational { a: f64, b: f64 },
    /// L²-normalized Hermite function `h_n`.
    Hermite { n: u32 },
    /// `φ̂(ξ) = e^{−πξ²} Π_j (1+2πiv_jξ)^{−1} e^{−2πiv_jξ}`.
    TypeI { factors: Vec<f64> },
    /// As `TypeI` with the Gaussian replaced by `base`.
    TypeII { base: TypeIIBase, factors: Vec<f64> },
}

/// Window descriptor: a catalog kind and a dilation `γ > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    pub kind: WindowKind,
    pub gamma: f64,
}

/// `sin(πx)/(πx)`.
pub fn sinc(x: f64) -> f64 {
    let t = PI * x;
    if t.abs() < 1e-4 {
        let t2 = t * t;
        1.0 - t2 / 6.0 + t2 * t2 / 120.0
    } else {
        t.sin() / t
    }
}

/// Centered cardinal B-spline `Q_m(x)`.
///
/// `Q₁` takes the midpoint value ½ at `±½`, so it stays even and the
/// integer translates still sum to one.
pub fn bspline_eval(m: u32, x: f64) -> f64 {
    assert!(m >= 1, "B-spline order must be at least 1");
    let half = m as f64 / 2.0;
    if !(x.abs() <= half) {
        return 0.0;
    }
    if m == 1 {
        return if x.abs() < 0.5 { 1.0 } else { 0.5 };
    }
    // Triangular de Boor scheme on the knots 0..m for t = x + m/2.
    let t = x + half;
    let m = m as usize;
    let i = (t.floor() as usize).min(m - 1);
    let mut b = vec![0.0; m];
    b[i] = 1.0;
    for k in 2..=m {
        let lo = i.saturating_sub(k - 1);
        for j in lo..=(m - k).min(i) {
            let jf = j as f64;
            let right = if j + 1 < m { b[j + 1] } else { 0.0 };
            b[j] = ((t - jf) * b[j] + (jf + k as f64 - t) * right) / (k - 1) as f64;
        }
    }
    b[0]
}

/// `Q_m'(x) = Q_{m−1}(x+½) − Q_{m−1}(x−½)`.
///
/// For `m = 2` this is the a.e. derivative (`±1`, `0` outside), with the
/// midpoint convention at the kinks.
pub fn bspline_derivative(m: u32, x: f64) -> f64 {
    assert!(m >= 2, "B-spline derivative needs order at least 2");
    bspline_eval(m - 1, x + 0.5) - bspline_eval(m - 1, x - 0.5)
}

/// Polynomial factor `p_k(t)` of the orthonormal Hermite functions
/// `ψ_k(t) = p_k(t) e^{−t²/2}`, for `k = n−1, n, n+1`.
fn hermite_poly_triplet(n: u32, t: f64) -> (f64, f64, f64) {
    let p0 = PI.powf(-0.25);
    let mut prev = 0.0;
    let mut cur = p0;
    let mut out = (0.0, p0, 0.0);
    for k in 0..=n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * t * cur - (kf / (kf + 1.0)).sqrt() * prev;
        if k == n {
            out = (prev, cur, next);
        }
        prev = cur;
        cur = next;
    }
    out
}

/// Normalized Hermite function `h_n(x) = (−1)ⁿ (2π)^{1/4} ψ_n(√(2π) x)`.
///
/// The sign matches the Rodrigues form `a_n e^{πx²} dⁿ/dxⁿ e^{−2πx²}` with
/// `a_n > 0`. `B`, `M` and every Δ are invariant under rescaling, so the
/// normalization only matters for absolute frame bounds.
pub fn hermite_eval(n: u32, x: f64) -> f64 {
    let t = (2.0 * PI).sqrt() * x;
    let (_, p, _) = hermite_poly_triplet(n, t);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (2.0 * PI).powf(0.25) * p * (-0.5 * t * t).exp()
}

/// `h_n'(x)` from `ψ_n' = √(n/2) ψ_{n−1} − √((n+1)/2) ψ_{n+1}`.
pub fn hermite_derivative(n: u32, x: f64) -> f64 {
    let t = (2.0 * PI).sqrt() * x;
    let (pm, _, pp) = hermite_poly_triplet(n, t);
    let nf = n as f64;
    let dpsi = ((nf / 2.0).sqrt() * pm - ((nf + 1.0) / 2.0).sqrt() * pp) * (-0.5 * t * t).exp();
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (2.0 * PI).powf(0.25) * (2.0 * PI).sqrt() * dpsi
}

/// `ln |h_n(x)|²`, finite far beyond the range where `h_n` underflows.
pub fn hermite_ln_abs2(n: u32, x: f64) -> f64 {
    let t = (2.0 * PI).sqrt() * x;
    let (_, p, _) = hermite_poly_triplet(n, t);
    0.5 * (2.0 * PI).ln() + 2.0 * p.abs().ln() - t * t
}

/// Upper bound `S_n` with `|p_n(t)| ≤ S_n |t|ⁿ` for `|t| ≥ 1`.
pub(crate) fn hermite_coeff_abs_sum(n: u32) -> f64 {
    // recurrence on coefficient vectors, then sum of magnitudes
    let mut prev: Vec<f64> = vec![];
    let mut cur: Vec<f64> = vec![PI.powf(-0.25)];
    for k in 0..n {
        let kf = k as f64;
        let mut next = vec![0.0; cur.len() + 1];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += (2.0 / (kf + 1.0)).sqrt() * c;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= (kf / (kf + 1.0)).sqrt() * c;
        }
        prev = cur;
        cur = next;
    }
    cur.iter().map(|c| c.abs()).sum()
}

/// Time-domain two-pole window, the inverse transform of `1/((1+2πiaξ)(1+2πibξ))`.
pub fn two_pole_time(a: f64, b: f64, t: f64) -> f64 {
    match (a > 0.0, b > 0.0) {
        (true, true) => causal_pair(a, b, t),
        (false, false) => causal_pair(-a, -b, -t),
        _ => {
            let (p, n) = if a > 0.0 { (a, -b) } else { (b, -a) };
            if t >= 0.0 {
                (-t / p).exp() / (p + n)
            } else {
                (t / n).exp() / (p + n)
            }
        }
    }
}

/// Derivative of [`two_pole_time`], one-sided at the kink.
pub fn two_pole_time_derivative(a: f64, b: f64, t: f64) -> f64 {
    match (a > 0.0, b > 0.0) {
        (true, true) => causal_pair_derivative(a, b, t),
        (false, false) => -causal_pair_derivative(-a, -b, -t),
        _ => {
            let (p, n) = if a > 0.0 { (a, -b) } else { (b, -a) };
            if t > 0.0 {
                -(-t / p).exp() / (p * (p + n))
            } else if t < 0.0 {
                (t / n).exp() / (n * (p + n))
            } else {
                0.0
            }
        }
    }
}

/// `(e^{−t/a} − e^{−t/b})/(a−b)` for `t > 0`, zero otherwise; `a, b > 0`.
fn causal_pair(a: f64, b: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if a == b {
        return t * (-t / a).exp() / (a * a);
    }
    (-t / b).exp() * (t * (a - b) / (a * b)).exp_m1() / (a - b)
}

fn causal_pair_derivative(a: f64, b: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    (-t / b).exp() / (a * b) - causal_pair(a, b, t) / a
}

/// `(1+2πivξ)^{−1} e^{−2πivξ}`.
fn tp_factor(v: f64, xi: f64) -> Complex64 {
    let phase = Complex64::from_polar(1.0, -2.0 * PI * v * xi);
    phase / Complex64::new(1.0, 2.0 * PI * v * xi)
}

fn tp_factor_abs2(v: f64, xi: f64) -> f64 {
    let s = 2.0 * PI * v * xi;
    1.0 / (1.0 + s * s)
}

fn check_finite_nonzero(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v != 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and nonzero, got {v}")))
    }
}

fn check_factors(factors: &[f64]) -> Result<()> {
    match factors.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::InvalidInput(format!("factor {v} is not finite"))),
        None => Ok(()),
    }
}

impl WindowKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            WindowKind::BSpline { m } => {
                if !(1..=64).contains(m) {
                    return Err(Error::InvalidInput(format!("B-spline order {m} outside 1..=64")));
                }
            }
            WindowKind::TwoPoleRational { a, b }
            | WindowKind::TypeII { base: TypeIIBase::TwoPole { a, b }, .. } => {
                check_finite_nonzero("a", *a)?;
                check_finite_nonzero("b", *b)?;
            }
            WindowKind::Hermite { n }
                if *n > 64 => {
                    return Err(Error::InvalidInput(format!("Hermite index {n} above 64")));
                }
            _ => {}
        }
        match self {
            WindowKind::TypeI { factors } | WindowKind::TypeII { factors, .. } => {
                check_factors(factors)
            }
            _ => Ok(()),
        }
    }

    /// Undilated transform `φ̂(ξ)`.
    pub fn ft(&self, xi: f64) -> Complex64 {
        match self {
            WindowKind::BSpline { m } => Complex64::new(sinc(xi).powi(*m as i32), 0.0),
            WindowKind::Gaussian => Complex64::new((-PI * xi * xi).exp(), 0.0),
            WindowKind::TwoSidedExp => Complex64::new(2.0 / (1.0 + 4.0 * PI * PI * xi * xi), 0.0),
            WindowKind::TwoPoleRational { a, b } => two_pole_ft(*a, *b, xi),
            WindowKind::Hermite { n } => {
                let v = hermite_eval(*n, xi);
                // (−i)ⁿ
                match n % 4 {
                    0 => Complex64::new(v, 0.0),
                    1 => Complex64::new(0.0, -v),
                    2 => Complex64::new(-v, 0.0),
                    _ => Complex64::new(0.0, v),
                }
            }
            WindowKind::TypeI { factors } => factors
                .iter()
                .fold(Complex64::new((-PI * xi * xi).exp(), 0.0), |acc, &v| {
                    acc * tp_factor(v, xi)
                }),
            WindowKind::TypeII { base, factors } => {
                let psi = match base {
                    TypeIIBase::Exp => Complex64::new((-xi.abs()).exp(), 0.0),
                    TypeIIBase::TwoPole { a, b } => two_pole_ft(*a, *b, xi),
                };
                factors.iter().fold(psi, |acc, &v| acc * tp_factor(v, xi))
            }
        }
    }

    /// Undilated `|φ̂(ξ)|²`.
    pub fn ft_abs2(&self, xi: f64) -> f64 {
        let l = |c: f64| {
            let s = 2.0 * PI * c * xi;
            1.0 / (1.0 + s * s)
        };
        match self {
            WindowKind::BSpline { m } => sinc(xi).powi(2 * *m as i32),
            WindowKind::Gaussian => (-2.0 * PI * xi * xi).exp(),
            WindowKind::TwoSidedExp => {
                let v = 2.0 / (1.0 + 4.0 * PI * PI * xi * xi);
                v * v
            }
            WindowKind::TwoPoleRational { a, b } => l(*a) * l(*b),
            WindowKind::Hermite { n } => hermite_eval(*n, xi).powi(2),
            WindowKind::TypeI { factors } => factors
                .iter()
                .fold((-2.0 * PI * xi * xi).exp(), |acc, &v| acc * tp_factor_abs2(v, xi)),
            WindowKind::TypeII { base, factors } => {
                let psi2 = match base {
                    TypeIIBase::Exp => (-2.0 * xi.abs()).exp(),
                    TypeIIBase::TwoPole { a, b } => l(*a) * l(*b),
                };
                factors.iter().fold(psi2, |acc, &v| acc * tp_factor_abs2(v, xi))
            }
        }
    }

    /// Undilated `φ(x)`, when a closed form exists.
    pub fn eval(&self, x: f64) -> Result<f64> {
        match self {
            WindowKind::BSpline { m } => Ok(bspline_eval(*m, x)),
            WindowKind::Gaussian => Ok((-PI * x * x).exp()),
            WindowKind::TwoSidedExp => Ok((-x.abs()).exp()),
            WindowKind::TwoPoleRational { a, b } => Ok(two_pole_time(*a, *b, x)),
            WindowKind::Hermite { n } => Ok(hermite_eval(*n, x)),
            _ => Err(Error::NoTimeDomain(self.name().to_string())),
        }
    }

    /// Undilated `φ'(x)` (a.e.), when a closed form exists.
    pub fn derivative(&self, x: f64) -> Result<f64> {
        match self {
            WindowKind::BSpline { m: 1 } => Ok(0.0),
            WindowKind::BSpline { m } => Ok(bspline_derivative(*m, x)),
            WindowKind::Gaussian => Ok(-2.0 * PI * x * (-PI * x * x).exp()),
            WindowKind::TwoSidedExp => Ok(-x.signum() * (-x.abs()).exp() * (x != 0.0) as u8 as f64),
            WindowKind::TwoPoleRational { a, b } => Ok(two_pole_time_derivative(*a, *b, x)),
            WindowKind::Hermite { n } => Ok(hermite_derivative(*n, x)),
            _ => Err(Error::NoTimeDomain(self.name().to_string())),
        }
    }

    pub fn has_time_domain(&self) -> bool {
        !matches!(self, WindowKind::TypeI { .. } | WindowKind::TypeII { .. })
    }

    /// `σ` with support `[−σ, σ]`, for compactly supported kinds.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            WindowKind::BSpline { m } => Some(*m as f64 / 2.0),
            _ => None,
        }
    }

    /// Even and real-valued on both sides.
    pub fn is_even_real(&self) -> bool {
        match self {
            WindowKind::BSpline { .. } | WindowKind::Gaussian | WindowKind::TwoSidedExp => true,
            WindowKind::Hermite { n } => n % 2 == 0,
            _ => false,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WindowKind::BSpline { .. } => "bspline",
            WindowKind::Gaussian => "gaussian",
            WindowKind::TwoSidedExp => "two_sided_exp",
            WindowKind::TwoPoleRational { .. } => "two_pole",
            WindowKind::Hermite { .. } => "hermite",
            WindowKind::TypeI { .. } => "type1",
            WindowKind::TypeII { .. } => "type2",
        }
    }
}

fn two_pole_ft(a: f64, b: f64, xi: f64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    one / (Complex64::new(1.0, 2.0 * PI * a * xi) * Complex64::new(1.0, 2.0 * PI * b * xi))
}

impl Window {
    pub fn new(kind: WindowKind) -> Result<Self> {
        Self::with_gamma(kind, 1.0)
    }

    pub fn with_gamma(kind: WindowKind, gamma: f64) -> Result<Self> {
        kind.validate()?;
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidInput(format!("dilation must be positive, got {gamma}")));
        }
        Ok(Window { kind, gamma })
    }

    pub fn bspline(m: u32) -> Self {
        Self::new(WindowKind::BSpline { m }).expect("valid B-spline order")
    }

    pub fn gaussian() -> Self {
        Window { kind: WindowKind::Gaussian, gamma: 1.0 }
    }

    pub fn two_sided_exp() -> Self {
        Window { kind: WindowKind::TwoSidedExp, gamma: 1.0 }
    }

    pub fn hermite(n: u32) -> Self {
        Self::new(WindowKind::Hermite { n }).expect("valid Hermite index")
    }

    /// Composes dilations: `γ_new = γ_old·γ`.
    pub fn dilate(&self, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidInput(format!("dilation must be positive, got {gamma}")));
        }
        Ok(Window { kind: self.kind.clone(), gamma: self.gamma * gamma })
    }

    /// `φ̂_γ(ξ)`.
    pub fn ft(&self, xi: f64) -> ComplexValue {
        self.kind.ft(xi / self.gamma) / self.gamma.sqrt()
    }

    /// `|φ̂_γ(ξ)|²`.
    pub fn ft_abs2(&self, xi: f64) -> f64 {
        self.kind.ft_abs2(xi / self.gamma) / self.gamma
    }

    /// `φ_γ(x)`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(self.gamma.sqrt() * self.kind.eval(self.gamma * x)?)
    }

    /// `φ_γ'(x)` (a.e.).
    pub fn derivative(&self, x: f64) -> Result<f64> {
        Ok(self.gamma * self.gamma.sqrt() * self.kind.derivative(self.gamma * x)?)
    }

    /// Support radius of `φ_γ`, if compact.
    pub fn support_radius(&self) -> Option<f64> {
        self.kind.support_radius().map(|s| s / self.gamma)
    }

    /// Points where `φ_γ` or `φ_γ'` may jump; quadrature panels split there.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.kind {
            WindowKind::BSpline { m } => {
                let half = *m as f64 / 2.0;
                (0..=*m).map(|k| (k as f64 - half) / self.gamma).collect()
            }
            WindowKind::TwoSidedExp | WindowKind::TwoPoleRational { .. } => vec![0.0],
            _ => Vec::new(),
        }
    }

    /// Canonical inline spec, e.g. `two-pole:1,-3@0.5`.
    pub fn to_inline(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let body = match &self.kind {
            WindowKind::BSpline { m } => format!("bspline:{m}"),
            WindowKind::Gaussian => "gaussian".to_string(),
            WindowKind::TwoSidedExp => "two-sided-exp".to_string(),
            WindowKind::TwoPoleRational { a, b } => format!("two-pole:{a},{b}"),
            WindowKind::Hermite { n } => format!("hermite:{n}"),
            WindowKind::TypeI { factors } if factors.is_empty() => "type1".to_string(),
            WindowKind::TypeI { factors } => format!("type1:{}", list(factors)),
            WindowKind::TypeII { base: TypeIIBase::Exp, factors } if factors.is_empty() => {
                "type2-exp".to_string()
            }
            WindowKind::TypeII { base: TypeIIBase::Exp, factors } => {
                format!("type2-exp:{}", list(factors))
            }
            WindowKind::TypeII { base: TypeIIBase::TwoPole { a, b }, factors } => {
                if factors.is_empty() {
                    format!("type2-pole:{a},{b}")
                } else {
                    format!("type2-pole:{a},{b};{}", list(factors))
                }
            }
        };
        if self.gamma == 1.0 {
            body
        } else {
            format!("{body}@{}", self.gamma)
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_inline())
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("not a number: {s:?}")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(parse_f64).collect()
}

fn parse_pair(s: &str) -> Result<(f64, f64)> {
    match parse_list(s)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::InvalidInput(format!("expected two parameters a,b, got {s:?}"))),
    }
}

impl FromStr for Window {
    type Err = Error;

    /// Inline spec (`bspline:3`, `gaussian@0.5`, `type2-pole:1,2;0.3`) or a JSON object.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()));
        }
        let (body, gamma) = match s.rsplit_once('@') {
            Some((body, g)) => (body, parse_f64(g)?),
            None => (s, 1.0),
        };
        let (name, params) = body.split_once(':').unwrap_or((body, ""));
        let name = name.trim().to_ascii_lowercase().replace('_', "-");
        let kind = match name.as_str() {
            "bspline" | "b-spline" => WindowKind::BSpline {
                m: params
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad B-spline order {params:?}")))?,
            },
            "gaussian" => WindowKind::Gaussian,
            "two-sided-exp" | "exp" => WindowKind::TwoSidedExp,
            "two-pole" => {
                let (a, b) = parse_pair(params)?;
                WindowKind::TwoPoleRational { a, b }
            }
            "hermite" => WindowKind::Hermite {
                n: params
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad Hermite index {params:?}")))?,
            },
            "type1" => WindowKind::TypeI { factors: parse_list(params)? },
            "type2-exp" => WindowKind::TypeII { base: TypeIIBase::Exp, factors: parse_list(params)? },
            "type2-pole" => {
                let (pole, factors) = params.split_once(';').unwrap_or((params, ""));
                let (a, b) = parse_pair(pole)?;
                WindowKind::TypeII {
                    base: TypeIIBase::TwoPole { a, b },
                    factors: parse_list(factors)?,
                }
            }
            other => return Err(Error::InvalidInput(format!("unknown window kind {other:?}"))),
        };
        Window::with_gamma(kind, gamma)
    }
}

fn factors_value(v: &[f64]) -> Value {
    Value::from(v.to_vec())
}

impl Serialize for Window {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let params = match &self.kind {
            WindowKind::BSpline { m } => json!({ "m": m }),
            WindowKind::Gaussian | WindowKind::TwoSidedExp => json!({}),
            WindowKind::TwoPoleRational { a, b } => json!({ "a": a, "b": b }),
            WindowKind::Hermite { n } => json!({ "n": n }),
            WindowKind::TypeI { factors } => json!({ "factors": factors_value(factors) }),
            WindowKind::TypeII { base: TypeIIBase::Exp, factors } => {
                json!({ "base": "exp", "factors": factors_value(factors) })
            }
            WindowKind::TypeII { base: TypeIIBase::TwoPole { a, b }, factors } => {
                json!({ "base": "two_pole", "a": a, "b": b, "factors": factors_value(factors) })
            }
        };
        json!({ "kind": self.kind.name(), "params": params, "gamma": self.gamma }).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Window {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = Value::deserialize(d)?;
        window_from_value(&v).map_err(|e| D::Error::custom(e.to_string()))
    }
}

fn window_from_value(v: &Value) -> Result<Window> {
    let bad = |msg: &str| Error::InvalidInput(msg.to_string());
    let obj = v.as_object().ok_or_else(|| bad("window must be a JSON object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "kind" | "params" | "gamma") {
            return Err(bad(&format!("unknown window field {key:?}")));
        }
    }
    let kind = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| bad("window needs a string \"kind\""))?;
    let empty = Map::new();
    let params = match obj.get("params") {
        None => &empty,
        Some(p) => p.as_object().ok_or_else(|| bad("\"params\" must be an object"))?,
    };
    let gamma = match obj.get("gamma") {
        None => 1.0,
        Some(g) => g.as_f64().ok_or_else(|| bad("\"gamma\" must be a number"))?,
    };
    let num = |key: &str| -> Result<f64> {
        params
            .get(key)
            .and_then(Value::as_f64)
            .ok_or_else(|| bad(&format!("missing numeric parameter {key:?}")))
    };
    let int = |key: &str| -> Result<u32> {
        params
            .get(key)
            .and_then(Value::as_u64)
            .and_then(|x| u32::try_from(x).ok())
            .ok_or_else(|| bad(&format!("missing integer parameter {key:?}")))
    };
    let factors = || -> Result<Vec<f64>> {
        match params.get("factors") {
            None => Ok(Vec::new()),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| bad("factors must be numbers")))
                .collect(),
            Some(_) => Err(bad("factors must be an array")),
        }
    };
    let kind = match kind {
        "bspline" => WindowKind::BSpline { m: int("m")? },
        "gaussian" => WindowKind::Gaussian,
        "two_sided_exp" => WindowKind::TwoSidedExp,
        "two_pole" => WindowKind::TwoPoleRational { a: num("a")?, b: num("b")? },
        "hermite" => WindowKind::Hermite { n: int("n")? },
        "type1" => WindowKind::TypeI { factors: factors()? },
        "type2" => {
            let base = match params.get("base").and_then(Value::as_str) {
                Some("exp") => TypeIIBase::Exp,
                Some("two_pole") => TypeIIBase::TwoPole { a: num("a")?, b: num("b")? },
                _ => return Err(bad("type2 needs \"base\": \"exp\" or \"two_pole\"")),
            };
            WindowKind::TypeII { base, factors: factors()? }
        }
        other => return Err(bad(&format!("unknown window kind {other:?}"))),
    };
    Window::with_gamma(kind, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Truncated-power form `Σ (−1)^k C(m,k) (x + m/2 − k)₊^{m−1} / (m−1)!`.
    fn truncated_power(m: u32, x: f64) -> f64 {
        let mut acc = 0.0;
        let mut binom = 1.0;
        let mut fact = 1.0;
        for k in 1..m {
            fact *= k as f64;
        }
        for k in 0..=m {
            let t = x + m as f64 / 2.0 - k as f64;
            if t > 0.0 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * t.powi(m as i32 - 1);
            }
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        acc / fact
    }

    #[test]
    fn bspline_table_values() {
        assert_eq!(bspline_eval(2, 0.0), 1.0);
        assert_relative_eq!(bspline_eval(4, 0.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(bspline_eval(1, 0.6), 0.0);
        assert_relative_eq!(bspline_eval(3, 0.5), 0.5, epsilon = 1e-15);
        assert_eq!(bspline_eval(1, 0.5), 0.5);
        assert_eq!(bspline_eval(1, -0.5), 0.5);
    }

    #[test]
    fn bspline_matches_truncated_power() {
        for m in 2..=8 {
            for j in -100..=100 {
                let x = j as f64 * m as f64 / 200.0 + 0.0013;
                assert_relative_eq!(
                    bspline_eval(m, x),
                    truncated_power(m, x),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn bspline_q3_half_by_convolution() {
        // Q₃ = Q₂ * Q₁, midpoint rule on a fine grid
        let n = 200_000;
        let h = 1.0 / n as f64;
        let conv: f64 = (0..n)
            .map(|i| {
                let s = -0.5 + (i as f64 + 0.5) * h;
                bspline_eval(2, 0.5 - s)
            })
            .sum::<f64>()
            * h;
        assert!((conv - bspline_eval(3, 0.5)).abs() < 1e-9);
    }

    #[test]
    fn bspline_derivatives() {
        assert_eq!(bspline_derivative(4, 0.0), 0.0);
        assert_eq!(bspline_derivative(3, 0.0), 0.0);
        let fd = (bspline_eval(4, 1.0 + 1e-6) - bspline_eval(4, 1.0 - 1e-6)) / 2e-6;
        assert!((bspline_derivative(4, 1.0) - fd).abs() < 1e-6);
        assert_eq!(bspline_derivative(2, -0.5), 1.0);
        assert_eq!(bspline_derivative(2, 0.5), -1.0);
        assert_eq!(bspline_derivative(2, 1.5), 0.0);
    }

    #[test]
    fn hermite_values() {
        assert_relative_eq!(hermite_eval(0, 0.0), 2f64.powf(0.25), epsilon = 1e-15);
        assert_relative_eq!(
            hermite_eval(0, 0.7) / hermite_eval(0, 0.0),
            (-PI * 0.49).exp(),
            epsilon = 1e-14
        );
        assert_eq!(hermite_eval(1, 0.0), 0.0);
        // Rodrigues for n = 3: e^{πx²} d³/dx³ e^{−2πx²} = (−64π³x³ + 48π²x) e^{−πx²}
        let x: f64 = 0.7;
        let rod = (-64.0 * PI.powi(3) * x.powi(3) + 48.0 * PI * PI * x) * (-PI * x * x).exp();
        let ratio = hermite_eval(3, x) / rod;
        let ratio2 = hermite_eval(3, 0.31) / {
            let x: f64 = 0.31;
            (-64.0 * PI.powi(3) * x.powi(3) + 48.0 * PI * PI * x) * (-PI * x * x).exp()
        };
        assert!(ratio > 0.0);
        assert_relative_eq!(ratio, ratio2, epsilon = 1e-12);
    }

    #[test]
    fn hermite_normalized_by_quadrature() {
        for n in 0..=8 {
            let h = 1e-3;
            let norm: f64 = (-8000..=8000).map(|i| hermite_eval(n, i as f64 * h).powi(2)).sum::<f64>() * h;
            assert_relative_eq!(norm, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn hermite_derivative_matches_difference() {
        for n in 0..=6 {
            for &x in &[-0.9, -0.2, 0.0, 0.35, 1.1] {
                let fd = (hermite_eval(n, x + 1e-6) - hermite_eval(n, x - 1e-6)) / 2e-6;
                assert!((hermite_derivative(n, x) - fd).abs() < 1e-6, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn hermite_log_form_agrees() {
        for n in 0..=5 {
            for &x in &[0.13, 0.8, 2.5] {
                assert_relative_eq!(
                    hermite_ln_abs2(n, x),
                    hermite_eval(n, x).powi(2).ln(),
                    epsilon = 1e-10
                );
            }
            assert!(hermite_ln_abs2(n, 40.0).is_finite());
        }
    }

    #[test]
    fn ft_examples() {
        assert_eq!(Window::bspline(2).ft(0.0), Complex64::new(1.0, 0.0));
        let g = Window::gaussian().ft(1.0);
        assert_relative_eq!(g.re, (-PI).exp(), epsilon = 1e-15);
        assert_eq!(g.im, 0.0);
        let w = Window::new(WindowKind::TypeI { factors: vec![1.0] }).unwrap();
        let expect = Complex64::new((-PI / 4.0).exp(), 0.0) / Complex64::new(1.0, PI)
            * Complex64::from_polar(1.0, -PI);
        let got = w.ft(0.5);
        assert_relative_eq!(got.re, expect.re, epsilon = 1e-15);
        assert_relative_eq!(got.im, expect.im, epsilon = 1e-15);
        assert_relative_eq!(w.ft_abs2(0.5), got.norm_sqr(), epsilon = 1e-15);
    }

    #[test]
    fn ft_abs2_consistent_with_ft() {
        let kinds = [
            "bspline:3", "gaussian", "two-sided-exp", "two-pole:1,-3", "hermite:3",
            "type1:0.5,-0.2", "type2-exp:0.3", "type2-pole:1,2;0.4",
        ];
        for spec in kinds {
            let w: Window = format!("{spec}@0.7").parse().unwrap();
            for &xi in &[0.0, 0.31, -1.7, 2.2] {
                assert_relative_eq!(w.ft_abs2(xi), w.ft(xi).norm_sqr(), epsilon = 1e-14, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn time_domain_transform_by_quadrature() {
        // φ̂(ξ) = ∫ φ(x) e^{−2πixξ} dx for the kinds with both forms
        for spec in ["two-sided-exp", "two-pole:1,2", "two-pole:0.5,-1.5", "two-pole:-1,-1", "hermite:2", "bspline:3"] {
            let w: Window = spec.parse().unwrap();
            let h = 2e-3;
            for &xi in &[0.0, 0.2, 0.9] {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in -40_000..=40_000 {
                    let x = i as f64 * h;
                    acc += Complex64::from_polar(w.eval(x).unwrap(), -2.0 * PI * x * xi);
                }
                acc *= h;
                let exact = w.ft(xi);
                assert!((acc - exact).norm() < 5e-5, "{spec} at {xi}: {acc} vs {exact}");
            }
        }
    }

    #[test]
    fn two_pole_derivative_matches_difference() {
        for (a, b) in [(1.0, 2.0), (1.0, 1.0), (0.5, -1.5), (-1.0, -3.0)] {
            for &t in &[-1.3, -0.2, 0.4, 2.0] {
                let fd = (two_pole_time(a, b, t + 1e-6) - two_pole_time(a, b, t - 1e-6)) / 2e-6;
                assert!((two_pole_time_derivative(a, b, t) - fd).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn dilation_group() {
        let w = Window::gaussian();
        assert_eq!(w.dilate(2.0).unwrap().gamma, 2.0);
        assert_eq!(w.dilate(2.0).unwrap().dilate(0.5).unwrap(), w);
        assert!(w.dilate(0.0).is_err());
        assert!(w.dilate(-1.0).is_err());
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(Window::new(WindowKind::TwoPoleRational { a: 0.0, b: 1.0 }).is_err());
        assert!(Window::new(WindowKind::BSpline { m: 0 }).is_err());
        assert!(Window::new(WindowKind::TypeI { factors: vec![f64::NAN] }).is_err());
        assert!("bogus:1".parse::<Window>().is_err());
        assert!("gaussian@-1".parse::<Window>().is_err());
    }

    #[test]
    fn inline_and_json_round_trip() {
        for spec in [
            "bspline:2", "gaussian@0.05", "two-sided-exp", "two-pole:1,-3", "hermite:4",
            "type1", "type1:0.5,-0.25", "type2-exp:0.3", "type2-pole:1,2", "type2-pole:1,2;0.1,0.2",
        ] {
            let w: Window = spec.parse().unwrap();
            assert_eq!(w.to_inline(), spec);
            let js = serde_json::to_string(&w).unwrap();
            let back: Window = serde_json::from_str(&js).unwrap();
            assert_eq!(back, w);
            let via_str: Window = js.parse().unwrap();
            assert_eq!(via_str, w);
        }
        let w: Window = r#"{"kind":"bspline","params":{"m":3},"gamma":2}"#.parse().unwrap();
        assert_eq!(w, Window::bspline(3).dilate(2.0).unwrap());
        let j = serde_json::to_value(Window::bspline(2)).unwrap();
        assert_eq!(j, json!({"kind":"bspline","params":{"m":2},"gamma":1.0}));
    }
}
