//! Theta-function toolkit and ratio profiles `G = H/F` on `[0, 1]`.
//!
//! Three families, each 1-periodic and symmetric about `w = ½`:
//! - Gaussian: `F_ρ(w) = Σ e^{−2π(w+n)²/ρ²}`, cross-checked against
//!   `(ρ/√2)·Θ(w; ρ²/2)`.
//! - Two-sided exponential: `𝖥_ρ(w) = Σ e^{−2ρ|w+n|}` in closed geometric form.
//! - Two-pole rational: closed hyperbolic form with `c = ρ/a`, `d = ρ/b`.
//!
//! `H` is the same sum weighted by `(w+n)²`.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{m_value_side, LatticeOpts, Periodizer, Side};
use crate::window::{TypeIIBase, Window, WindowKind};

/// `Θ`, its `w`-derivative and `Q = −∂_wΘ / sin 2πw` with the two-branch bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEval {
    pub w: f64,
    pub t: f64,
    pub theta: f64,
    pub dtheta_dw: f64,
    pub q_ratio: f64,
    /// `A(t)`
    pub lower: f64,
    /// `B(t)`
    pub upper: f64,
    /// Bound on the omitted series tail, relative to the leading term.
    pub tail: f64,
}

/// Below this `|sin 2πw|` the ratio uses the second-derivative limit.
pub const SIN_BAND: f64 = 1e-8;

const SERIES_EPS: f64 = 1e-18;

/// `A(t)` of the two-branch bound on `Q(w; t)`.
pub fn theta_lower(t: f64) -> f64 {
    if t < 1.0 {
        t.powf(-1.5) * (-PI / (4.0 * t)).exp()
    } else {
        (1.0 - 1.0 / 3000.0) * 4.0 * PI * (-PI * t).exp()
    }
}

/// `B(t)` of the two-branch bound on `Q(w; t)`.
pub fn theta_upper(t: f64) -> f64 {
    if t < 1.0 {
        t.powf(-1.5)
    } else {
        (1.0 + 1.0 / 3000.0) * 4.0 * PI * (-PI * t).exp()
    }
}

/// Number of cosine-series terms with `e^{−πk²t}·k² < eps` beyond.
fn cosine_terms(t: f64) -> usize {
    let mut k = 1usize;
    while {
        let kf = k as f64;
        kf * kf * (-PI * kf * kf * t).exp() > SERIES_EPS || (-PI * t * (2.0 * kf + 1.0)).exp() > 0.5
    } {
        k += 1;
    }
    k
}

/// `Θ(w;t) = 1 + 2 Σ_{k≥1} e^{−πk²t} cos 2πkw`, any `t > 0`.
pub fn theta_series(w: f64, t: f64) -> f64 {
    let n = cosine_terms(t);
    1.0 + 2.0 * (1..=n)
        .map(|k| {
            let kf = k as f64;
            (-PI * kf * kf * t).exp() * (2.0 * PI * kf * w).cos()
        })
        .sum::<f64>()
}

/// `(Θ, ∂_wΘ, ∂²_wΘ)` from the dual form `t^{−½} Σ e^{−π(w+n)²/t}`.
fn theta_dual(w: f64, t: f64) -> (f64, f64, f64) {
    let r = w - w.round();
    let reach = (45.0 * t / PI).sqrt().ceil() as i64 + 1;
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for n in -reach..=reach {
        let x = r + n as f64;
        let e = (-PI * x * x / t).exp();
        let d = -2.0 * PI * x / t;
        s0 += e;
        s1 += d * e;
        s2 += (d * d - 2.0 * PI / t) * e;
    }
    let s = t.powf(-0.5);
    (s * s0, s * s1, s * s2)
}

/// `Θ(w; t)` with derivative, `Q(w; t)` and the bounds `A(t)`, `B(t)`.
pub fn theta_eval(w: f64, t: f64) -> Result<ThetaEval> {
    if !(t > 0.0 && t.is_finite() && w.is_finite()) {
        return Err(Error::InvalidInput(format!("theta needs finite w and t > 0, got w={w}, t={t}")));
    }
    let sin = (2.0 * PI * w).sin();
    let (theta, dtheta, q_ratio, tail) = if t >= 0.5 {
        // cosine series; Q = 4π Σ k e^{−πk²t} U_{k−1}(cos 2πw) has no cancellation at sin = 0
        let n = cosine_terms(t);
        let c = (2.0 * PI * w).cos();
        let (mut th, mut dth, mut q) = (1.0, 0.0, 0.0);
        let (mut u_prev, mut u) = (0.0, 1.0);
        for k in 1..=n {
            let kf = k as f64;
            let e = (-PI * kf * kf * t).exp();
            th += 2.0 * e * (2.0 * PI * kf * w).cos();
            dth -= 4.0 * PI * kf * e * (2.0 * PI * kf * w).sin();
            q += 4.0 * PI * kf * e * u;
            let next = 2.0 * c * u - u_prev;
            u_prev = u;
            u = next;
        }
        let nf = (n + 1) as f64;
        let tail = 2.0 * nf * nf * (-PI * nf * nf * t).exp() / (-PI * t).exp();
        (th, dth, q, tail)
    } else {
        let (th, d1, d2) = theta_dual(w, t);
        let q = if sin.abs() > SIN_BAND {
            -d1 / sin
        } else {
            -d2 / (2.0 * PI * (2.0 * PI * w).cos())
        };
        (th, d1, q, 1e-17)
    };
    Ok(ThetaEval {
        w,
        t,
        theta,
        dtheta_dw: dtheta,
        q_ratio,
        lower: theta_lower(t),
        upper: theta_upper(t),
        tail,
    })
}

/// `Σ_{l≥2} l² e^{−π(l²−1)}`, the constant compared against 1/3000.
pub fn theta_tail_constant() -> f64 {
    (2..40).map(|l| {
        let l = l as f64;
        l * l * (-PI * (l * l - 1.0)).exp()
    })
    .sum()
}

/// `ln(e^{−π/ρ²} h₁/h₂)` with `h₁ = Σ (2l−1)² e^{−π(2l−1)²/ρ²}`, `h₂ = Σ (2l)² e^{−π(2l)²/ρ²}`.
///
/// Positive exactly when the ratio exceeds 1; computed in log form since both
/// sums underflow for small ρ.
pub fn ln_theta_h_ratio(rho: f64) -> f64 {
    let a = PI / (rho * rho);
    // factor e^{−π/ρ²} from the numerator and e^{−4π/ρ²} from the denominator
    let num: f64 = (1..200)
        .map(|l| {
            let k = (2 * l - 1) as f64;
            k * k * (-a * (k * k - 1.0)).exp()
        })
        .sum();
    let den: f64 = (1..200)
        .map(|l| {
            let k = (2 * l) as f64;
            k * k * (-a * (k * k - 4.0)).exp()
        })
        .sum();
    // e^{−a}·h₁/h₂ = e^{−a}·e^{−a}·num / (e^{−4a}·den)
    2.0 * a + num.ln() - den.ln()
}

/// Profile family tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    GaussTheta,
    ExpSeries,
    TwoPoleClosed,
}

/// `F`, `H` and `G = H/F` sampled at `w_j = j/G`, `j = 0..=G`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioProfile {
    pub rho: f64,
    pub family: ProfileFamily,
    pub grid: Vec<f64>,
    pub f: Vec<f64>,
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    /// Largest relative gap between the two independent `F` computations.
    pub cross_check: f64,
    /// Whether ρ lies in the range where the maximum at ½ is proven.
    pub in_proven_range: bool,
}

impl RatioProfile {
    /// Grid argmax of `G`, ties to the smaller `w`.
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (j, v) in self.g.iter().enumerate() {
            if *v > self.g[best] {
                best = j;
            }
        }
        self.grid[best]
    }

    /// Largest decrease of `G` between neighbouring grid points on `[0, ½]`.
    pub fn max_decrease_on_half(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 1..self.grid.len() {
            if self.grid[j] > 0.5 + 1e-15 {
                break;
            }
            worst = worst.max(self.g[j - 1] - self.g[j]);
        }
        worst
    }

    /// CSV with header `w,F,H,G`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,F,H,G\n");
        for j in 0..self.grid.len() {
            out.push_str(&format!("{},{},{},{}\n", self.grid[j], self.f[j], self.h[j], self.g[j]));
        }
        out
    }

    /// JSON sidecar carrying the family and parameters.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "family": self.family,
            "rho": self.rho,
            "grid_size": self.grid.len() - 1,
            "cross_check": self.cross_check,
            "in_proven_range": self.in_proven_range,
        })
    }
}

fn unit_grid(grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(Error::InvalidInput("grid_size must be at least 2".into()));
    }
    Ok((0..=grid_size).map(|j| j as f64 / grid_size as f64).collect())
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("rho must be positive, got {rho}")))
    }
}

/// Direct Gaussian sums scaled by the largest term: `(ln scale, F', H')`.
fn gauss_direct(rho: f64, w: f64) -> (f64, f64, f64) {
    let c = 2.0 * PI / (rho * rho);
    let r = w - w.round();
    let reach = (45.0 / c).sqrt().ceil() as i64 + 2;
    let (mut f, mut h) = (0.0, 0.0);
    for n in -reach..=reach {
        let x = r + n as f64;
        let e = (-c * (x * x - r * r)).exp();
        f += e;
        h += x * x * e;
    }
    (-c * r * r, f, h)
}

/// Gaussian family; `F` by direct summation and by the theta identity.
pub fn gauss_profile(rho: f64, grid_size: usize) -> Result<RatioProfile> {
    check_rho(rho)?;
    let grid = unit_grid(grid_size)?;
    let rows: Vec<(f64, f64, f64, f64)> = grid
        .par_iter()
        .map(|&w| {
            let (ln_s, f, h) = gauss_direct(rho, w);
            let scale = ln_s.exp();
            let theta = rho / SQRT_2 * theta_series(w, rho * rho / 2.0);
            let fv = f * scale;
            let gap = if fv > 1e-250 { ((fv - theta) / fv).abs() } else { 0.0 };
            (fv, h * scale, h / f, gap)
        })
        .collect();
    Ok(RatioProfile {
        rho,
        family: ProfileFamily::GaussTheta,
        f: rows.iter().map(|r| r.0).collect(),
        h: rows.iter().map(|r| r.1).collect(),
        g: rows.iter().map(|r| r.2).collect(),
        cross_check: rows.iter().map(|r| r.3).fold(0.0, f64::max),
        grid,
        in_proven_range: rho < 2.0,
    })
}

/// Closed forms of `Σ e^{−2ρ|w+n|}` and `Σ (w+n)² e^{−2ρ|w+n|}` for `w ∈ [0, 1]`.
fn exp_closed(rho: f64, w: f64) -> (f64, f64) {
    let c = 2.0 * rho;
    let r = w.rem_euclid(1.0);
    let s = 1.0 - r;
    let q = (-c).exp();
    let omq = -(-c).exp_m1();
    let e1 = (-c * r).exp();
    let e2 = (-c * s).exp();
    let moment = |x: f64| x * x / omq + 2.0 * x * q / (omq * omq) + q * (1.0 + q) / omq.powi(3);
    ((e1 + e2) / omq, e1 * moment(r) + e2 * moment(s))
}

/// `f_ρ(w) = e^{4ρ(1−2w)} − (we^{−2ρ}+1−w)/(w−we^{−2ρ}+e^{−2ρ})`.
pub fn exp_f(rho: f64, w: f64) -> f64 {
    let e = (-2.0 * rho).exp();
    (4.0 * rho * (1.0 - 2.0 * w)).exp() - (w * e + 1.0 - w) / (w - w * e + e)
}

/// Closed form of the first double sum in the exponential-family derivative.
pub fn exp_i1(rho: f64, w: f64) -> f64 {
    let e = (-2.0 * rho).exp();
    let omq = -(-2.0 * rho).exp_m1();
    (-4.0 * rho * (1.0 - w)).exp() * (w - w * e + e) / omq.powi(3) * exp_f(rho, w)
}

/// Closed form of the second double sum in the exponential-family derivative.
pub fn exp_i2(rho: f64, w: f64) -> f64 {
    let e = (-2.0 * rho).exp();
    let omq = -(-2.0 * rho).exp_m1();
    e / omq.powi(3)
        * (2.0 * w * (1.0 - e - 2.0 * rho - 2.0 * rho * e) + 2.0 * rho * e + e + 2.0 * rho - 1.0)
}

/// Two-sided exponential family with the closed geometric forms.
pub fn exp_profile(rho: f64, grid_size: usize) -> Result<RatioProfile> {
    check_rho(rho)?;
    let grid = unit_grid(grid_size)?;
    let rows: Vec<(f64, f64, f64)> = grid
        .par_iter()
        .map(|&w| {
            let (f, h) = exp_closed(rho, w);
            // independent truncated series for the cross-check
            let reach = (40.0 / (2.0 * rho)).ceil() as i64 + 2;
            let direct: f64 = (-reach..=reach).map(|n| (-2.0 * rho * (w + n as f64).abs()).exp()).sum();
            (f, h, ((direct - f) / f).abs())
        })
        .collect();
    Ok(RatioProfile {
        rho,
        family: ProfileFamily::ExpSeries,
        f: rows.iter().map(|r| r.0).collect(),
        h: rows.iter().map(|r| r.1).collect(),
        g: rows.iter().map(|r| r.1 / r.0).collect(),
        cross_check: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        grid,
        in_proven_range: rho >= 0.74,
    })
}

/// Hyperbolic coefficients `(A, B, C, D)` divided by `cosh c·cosh d`.
pub fn twopole_coefficients(c: f64, d: f64) -> [f64; 4] {
    let (tc, td) = (c.tanh(), d.tanh());
    let (sc, sd) = (1.0 / c.cosh(), 1.0 / d.cosh());
    [
        d * td - c * tc,
        d * td * sc - c * tc * sd,
        d * tc - c * td,
        c * td * sc - d * tc * sd,
    ]
}

/// Two-pole closed forms `(F̃, H̃)` at `w`, with `|c| ≠ |d|` or the confluent limit.
fn twopole_closed(c: f64, d: f64, w: f64) -> (f64, f64) {
    let (c, d) = (c.abs(), d.abs());
    let cs = (2.0 * PI * w).cos();
    let p2 = 4.0 * PI * PI;
    if (c - d).abs() <= 1e-6 * c.max(d) {
        let m = (c * d).sqrt();
        let (t, s) = (m.tanh(), 1.0 / m.cosh());
        let (a, b) = (t + m * s * s, t * s + m * s);
        let (cc, dd) = (t - m * s * s, m * s - t * s);
        let den = (cs * s - 1.0).powi(2);
        let f = m / 4.0 * (cc + dd * cs) / den;
        let h = m.powi(3) / (4.0 * p2) * (a - b * cs) / den;
        return (f, h);
    }
    let [a, b, cc, dd] = twopole_coefficients(c, d);
    let den = (cs / d.cosh() - 1.0) * (cs / c.cosh() - 1.0);
    let diff = d * d - c * c;
    let f = c * d / (2.0 * diff) * (cc + dd * cs) / den;
    let h = c * c * d * d / (2.0 * p2 * diff) * (a - b * cs) / den;
    (f, h)
}

/// `Σ c²d²(w+n)^{2k} / ((c²+4π²(w+n)²)(d²+4π²(w+n)²))` for `k = 0, 1`, truncated.
pub fn twopole_direct(c: f64, d: f64, w: f64, terms: i64) -> (f64, f64) {
    let (mut f, mut h) = (0.0, 0.0);
    let p2 = 4.0 * PI * PI;
    for n in -terms..=terms {
        let x = w + n as f64;
        let v = c * c * d * d / ((c * c + p2 * x * x) * (d * d + p2 * x * x));
        f += v;
        h += x * x * v;
    }
    (f, h)
}

/// Two-pole family from the closed hyperbolic form.
pub fn twopole_profile(a: f64, b: f64, rho: f64, grid_size: usize) -> Result<RatioProfile> {
    check_rho(rho)?;
    if !(a.is_finite() && b.is_finite() && a != 0.0 && b != 0.0) {
        return Err(Error::InvalidInput("two-pole parameters must be finite and nonzero".into()));
    }
    let grid = unit_grid(grid_size)?;
    let (c, d) = (rho / a, rho / b);
    let rows: Vec<(f64, f64)> = grid.par_iter().map(|&w| twopole_closed(c, d, w)).collect();
    // spot cross-check against a long direct sum with a tail correction
    let mut gap = 0.0f64;
    for &w in &[0.1, 0.35, 0.5] {
        let (fd, _) = twopole_direct(c, d, w, 20_000);
        let (fc, _) = twopole_closed(c, d, w);
        gap = gap.max(((fd - fc) / fc).abs());
    }
    Ok(RatioProfile {
        rho,
        family: ProfileFamily::TwoPoleClosed,
        f: rows.iter().map(|r| r.0).collect(),
        h: rows.iter().map(|r| r.1).collect(),
        g: rows.iter().map(|r| r.1 / r.0).collect(),
        cross_check: gap,
        grid,
        in_proven_range: true,
    })
}

/// Outcome of the monotone chain `B̃_{μ+1} ≤ B̃_μ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub base: String,
    pub factors: Vec<f64>,
    pub h: f64,
    pub grid_size: usize,
    /// `max_w (B̃_{μ+1} − B̃_μ)` for each step.
    pub step_max_increase: Vec<f64>,
    pub max_violation: f64,
    pub tol: f64,
    pub monotone: bool,
    /// Set when the base is not Gaussian: the chain there is checked, not proven.
    pub unproven_extension: bool,
}

fn chain_window(base: &Window, factors: &[f64]) -> Result<Window> {
    let f = factors.to_vec();
    let kind = match &base.kind {
        WindowKind::Gaussian => WindowKind::TypeI { factors: f },
        WindowKind::TwoSidedExp => WindowKind::TypeII { base: TypeIIBase::Exp, factors: f },
        WindowKind::TwoPoleRational { a, b } => {
            WindowKind::TypeII { base: TypeIIBase::TwoPole { a: *a, b: *b }, factors: f }
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "monotone chains need a gaussian, two-sided-exp or two-pole base, got {}",
                other.name()
            )))
        }
    };
    Window::with_gamma(kind, base.gamma)
}

/// `B̃_μ(w) = h²·B_{ψ_μ,h}(w/h)` on `w_j = j/G`, where `ψ_μ` keeps the first μ factors.
pub fn chain_profile(base: &Window, factors: &[f64], h: f64, grid_size: usize) -> Result<Vec<f64>> {
    let w = chain_window(base, factors)?;
    let p = Periodizer::new(&w, Side::Primal, h, &LatticeOpts::with_grid(grid_size))?;
    p.grid().into_par_iter().map(|x| Ok(h * h * p.b(x)?)).collect()
}

/// Checks `B̃_{μ+1} ≤ B̃_μ + tol` pointwise for μ = 0…N−1.
pub fn tp_monotonicity_check(
    base: &Window,
    factors: &[f64],
    h: f64,
    grid_size: usize,
) -> Result<MonotonicityReport> {
    let tol = 1e-10;
    let mut prev = chain_profile(base, &[], h, grid_size)?;
    let mut steps = Vec::with_capacity(factors.len());
    for mu in 1..=factors.len() {
        let next = chain_profile(base, &factors[..mu], h, grid_size)?;
        let inc = next.iter().zip(&prev).map(|(n, p)| n - p).fold(f64::NEG_INFINITY, f64::max);
        steps.push(inc);
        prev = next;
    }
    let max_violation = steps.iter().copied().fold(0.0f64, f64::max);
    Ok(MonotonicityReport {
        base: base.to_inline(),
        factors: factors.to_vec(),
        h,
        grid_size,
        step_max_increase: steps,
        max_violation,
        tol,
        monotone: max_violation <= tol,
        unproven_extension: !matches!(base.kind, WindowKind::Gaussian),
    })
}

/// Which dilation limit is checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    /// `M_{φ_γ,1/β} → β²/4` as `γ → 0`.
    TypeIGammaToZero,
    /// `M_{φ̂_γ,1/α} → α²/4` as `γ → ∞`.
    TypeIIGammaToInf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub kind: LimitKind,
    pub window: String,
    pub param: f64,
    pub limit: f64,
    pub gammas: Vec<f64>,
    pub m_values: Vec<f64>,
    pub distances: Vec<f64>,
    /// Distances never increase along the sweep.
    pub monotone_approach: bool,
    /// Every `M` is at least the limit, up to rounding.
    pub above_limit: bool,
}

/// `M` at one dilation for the given limit kind.
pub fn limit_m_value(kind: LimitKind, window: &Window, param: f64, gamma: f64, opts: &LatticeOpts) -> Result<f64> {
    let h = 1.0 / param;
    match kind {
        LimitKind::TypeIGammaToZero => Ok(m_value_side(&window.dilate(gamma)?, Side::Primal, h, opts)?.m),
        LimitKind::TypeIIGammaToInf => {
            if window.kind.has_time_domain() {
                Ok(m_value_side(&window.dilate(gamma)?, Side::Dual, h, opts)?.m)
            } else {
                // |FT(φ̂_γ)|² is |φ̂|² dilated by γ; for Fourier-defined windows
                // that density is the primal one of φ dilated by 1/γ
                Ok(m_value_side(&window.dilate(1.0 / gamma)?, Side::Primal, h, opts)?.m)
            }
        }
    }
}

pub fn dilation_limit_check(
    kind: LimitKind,
    window: &Window,
    param: f64,
    gammas: &[f64],
    opts: &LatticeOpts,
) -> Result<LimitReport> {
    if !(param > 0.0) {
        return Err(Error::InvalidInput("the lattice parameter must be positive".into()));
    }
    let sorted = gammas.windows(2).all(|p| match kind {
        LimitKind::TypeIGammaToZero => p[1] <= p[0],
        LimitKind::TypeIIGammaToInf => p[1] >= p[0],
    });
    if !sorted {
        return Err(Error::InvalidInput("gammas must be sorted in the limit direction".into()));
    }
    let limit = param * param / 4.0;
    let m_values = gammas
        .iter()
        .map(|&g| limit_m_value(kind, window, param, g, opts))
        .collect::<Result<Vec<_>>>()?;
    let distances: Vec<f64> = m_values.iter().map(|m| (m - limit).abs()).collect();
    Ok(LimitReport {
        kind,
        window: window.to_inline(),
        param,
        limit,
        gammas: gammas.to_vec(),
        monotone_approach: distances.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-9) + 1e-15),
        above_limit: m_values.iter().all(|&m| m >= limit * (1.0 - 1e-12)),
        m_values,
        distances,
    })
}
