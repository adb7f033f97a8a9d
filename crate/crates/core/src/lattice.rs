//! Periodizations `Φ_h`, the ratio `B_{φ,h}` and its supremum `M_{φ,h}`.
//!
//! `Φ_h(w) = (1/h) Σ_n |φ̂(w+n/h)|²` and
//! `B_{φ,h}(w) = Σ_n (w+n/h)² |φ̂(w+n/h)|² / Σ_n |φ̂(w+n/h)|²`.
//!
//! The dual side replaces `|φ̂|²` by `|φ|²`, which is the spectral density of
//! the window `φ̂`; this gives `M_{φ̂,h}` for the Fourier-dual condition.
//!
//! Each window kind and side gets its own summation strategy:
//! - B-spline, two-sided exponential and two-pole transforms: Poisson
//!   summation, which turns the lattice sums into finite or geometric series.
//! - Gaussian-type, Hermite and type-I/II densities: direct sums in log scale
//!   with a rigorous envelope bound on the omitted tail.
//! - The Gaussian switches to its Poisson dual when the lattice is fine.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::window::{
    bspline_eval, hermite_coeff_abs_sum, hermite_ln_abs2, two_pole_time, TypeIIBase, Window,
    WindowKind,
};

/// Numerical options shared by the lattice routines.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeOpts {
    /// Grid intervals on `[0, 1/h]`; the grid has `grid_size + 1` points.
    pub grid_size: usize,
    /// Relative bound on the omitted tail of each series.
    pub tol: f64,
    /// Maximum number of lattice terms per side.
    pub term_cap: usize,
    /// `Φ_h` must exceed this on the grid for a stable verdict.
    pub stability_threshold: f64,
    /// Golden-section polish around the discrete argmax.
    pub refine: bool,
}

impl Default for LatticeOpts {
    fn default() -> Self {
        LatticeOpts {
            grid_size: 4096,
            tol: 1e-13,
            term_cap: 1 << 20,
            stability_threshold: 1e-12,
            refine: true,
        }
    }
}

impl LatticeOpts {
    pub fn with_grid(grid_size: usize) -> Self {
        LatticeOpts { grid_size, ..Self::default() }
    }
}

/// Which density is periodized: `|φ̂|²` (primal) or `|φ|²` (dual).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Primal,
    Dual,
}

/// Sampled `Φ_h`, weighted periodization and `B_{φ,h}` on `[0, 1/h]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodizationProfile {
    pub h: f64,
    pub grid: Vec<f64>,
    /// `Φ_h(w) = (1/h) Σ |φ̂(w+n/h)|²`.
    pub phi_vals: Vec<f64>,
    /// `Σ (w+n/h)² |φ̂(w+n/h)|²`.
    pub weighted_vals: Vec<f64>,
    /// `weighted / (h·phi)`.
    pub b_vals: Vec<f64>,
    /// Largest certified relative truncation error over the grid.
    pub tail_bound: f64,
}

impl PeriodizationProfile {
    /// CSV with header `w,phi,weighted,b`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("w,phi,weighted,b\n");
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.grid[i], self.phi_vals[i], self.weighted_vals[i], self.b_vals[i]
            ));
        }
        out
    }
}

/// Extremes of `Φ_h` on the grid and the stability verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub essinf_est: f64,
    pub esssup_est: f64,
    pub stable: bool,
    pub grid_size: usize,
}

/// Sums at one `w`: the true sums are `e^{ln_scale}·s0` and `e^{ln_scale}·s2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointSums {
    pub ln_scale: f64,
    pub s0: f64,
    pub s2: f64,
    /// Certified relative bound on the omitted tails.
    pub tail: f64,
}

impl PointSums {
    pub fn b(&self) -> f64 {
        self.s2 / self.s0
    }

    /// `Φ_h(w)`; may underflow to zero for extreme dilations.
    pub fn phi(&self, h: f64) -> f64 {
        self.ln_scale.exp() * self.s0 / h
    }

    pub fn weighted(&self) -> f64 {
        self.ln_scale.exp() * self.s2
    }
}

// ---------------------------------------------------------------------------
// Tail envelopes

#[derive(Clone, Copy, Debug)]
enum Decay {
    /// `e^{−cξ²}`
    Gauss(f64),
    /// `e^{−c|ξ|}`
    Exp(f64),
    /// no extra factor; `p` must be negative
    Power,
    /// zero beyond the radius
    Compact(f64),
}

/// `s(ξ) ≤ e^{ln_a} |ξ|^p · decay(ξ)` for `|ξ| ≥ x_min`.
#[derive(Clone, Copy, Debug)]
struct Envelope {
    ln_a: f64,
    p: f64,
    decay: Decay,
    x_min: f64,
}

impl Envelope {
    /// Log of a bound on `Σ_{j≥0} ξ_j^k s(ξ_j)` over `ξ_j = x + jδ`.
    fn ln_tail(&self, x: f64, delta: f64, k: i32) -> Option<f64> {
        if x < self.x_min || x <= 0.0 {
            return None;
        }
        let e = self.p + k as f64;
        let geometric = |ln_g: f64, ln_r: f64| -> Option<f64> {
            (ln_r < 0.0).then(|| ln_g - (-ln_r.exp_m1()).ln())
        };
        match self.decay {
            Decay::Gauss(c) => geometric(
                self.ln_a + e * x.ln() - c * x * x,
                e.max(0.0) * (delta / x).ln_1p() - c * (2.0 * x * delta + delta * delta),
            ),
            Decay::Exp(c) => geometric(
                self.ln_a + e * x.ln() - c * x,
                e.max(0.0) * (delta / x).ln_1p() - c * delta,
            ),
            Decay::Power => {
                let q = -e;
                (q > 1.0).then(|| {
                    self.ln_a + (x.powf(-q) + x.powf(1.0 - q) / (delta * (q - 1.0))).ln()
                })
            }
            Decay::Compact(r) => (x > r).then_some(f64::NEG_INFINITY),
        }
    }
}

// ---------------------------------------------------------------------------
// Densities summed directly

#[derive(Clone, Debug)]
enum Density {
    /// `κ e^{−2πκ²ξ²}`
    Gauss { kappa: f64 },
    /// `κ h_n(κξ)²`
    Hermite { n: u32, kappa: f64 },
    /// `κ |ψ(κξ)|² Π_j L_{v_j}(κξ)` with `L_v(x) = 1/(1+4π²v²x²)`.
    Product { kappa: f64, base: ProductBase, factors: Vec<f64> },
    /// `γ φ(γx)²` for the two-pole window.
    PoleTime { gamma: f64, a: f64, b: f64 },
    /// `γ Q_m(γx)²`
    SplineTime { m: u32, gamma: f64 },
}

#[derive(Clone, Copy, Debug)]
enum ProductBase {
    Gauss,
    Exp,
    Pole(f64, f64),
}

fn ln_lorentz(c: f64, x: f64) -> f64 {
    let s = 2.0 * PI * c * x;
    -(s * s).ln_1p()
}

impl Density {
    fn ln_s(&self, xi: f64) -> f64 {
        match self {
            Density::Gauss { kappa } => kappa.ln() - 2.0 * PI * kappa * kappa * xi * xi,
            Density::Hermite { n, kappa } => kappa.ln() + hermite_ln_abs2(*n, kappa * xi),
            Density::Product { kappa, base, factors } => {
                let x = kappa * xi;
                let base = match base {
                    ProductBase::Gauss => -2.0 * PI * x * x,
                    ProductBase::Exp => -2.0 * x.abs(),
                    ProductBase::Pole(a, b) => ln_lorentz(*a, x) + ln_lorentz(*b, x),
                };
                kappa.ln() + base + factors.iter().map(|&v| ln_lorentz(v, x)).sum::<f64>()
            }
            Density::PoleTime { gamma, a, b } => {
                gamma.ln() + 2.0 * two_pole_time(*a, *b, gamma * xi).abs().ln()
            }
            Density::SplineTime { m, gamma } => {
                gamma.ln() + 2.0 * bspline_eval(*m, gamma * xi).ln()
            }
        }
    }

    fn envelope(&self) -> Envelope {
        match self {
            Density::Gauss { kappa } => Envelope {
                ln_a: kappa.ln(),
                p: 0.0,
                decay: Decay::Gauss(2.0 * PI * kappa * kappa),
                x_min: 0.0,
            },
            Density::Hermite { n, kappa } => {
                // |p_n(t)| ≤ S_n |t|ⁿ for |t| ≥ 1, t = √(2π) κ ξ
                let s_n = hermite_coeff_abs_sum(*n);
                let nf = *n as f64;
                Envelope {
                    ln_a: kappa.ln()
                        + 0.5 * (2.0 * PI).ln()
                        + 2.0 * s_n.ln()
                        + nf * (2.0 * PI * kappa * kappa).ln(),
                    p: 2.0 * nf,
                    decay: Decay::Gauss(2.0 * PI * kappa * kappa),
                    x_min: 1.0 / ((2.0 * PI).sqrt() * kappa),
                }
            }
            Density::Product { kappa, base, factors } => match base {
                ProductBase::Gauss => Envelope {
                    ln_a: kappa.ln(),
                    p: 0.0,
                    decay: Decay::Gauss(2.0 * PI * kappa * kappa),
                    x_min: 0.0,
                },
                ProductBase::Exp => Envelope {
                    ln_a: kappa.ln(),
                    p: 0.0,
                    decay: Decay::Exp(2.0 * kappa),
                    x_min: 0.0,
                },
                ProductBase::Pole(a, b) => {
                    // each Lorentzian is ≤ 1/(4π²c²x²)
                    let cs: Vec<f64> = [*a, *b].into_iter().chain(factors.iter().copied()).collect();
                    let p = 2.0 * cs.len() as f64;
                    let ln_c: f64 = cs.iter().map(|c| -(4.0 * PI * PI * c * c).ln()).sum();
                    Envelope {
                        ln_a: kappa.ln() + ln_c - p * kappa.ln(),
                        p: -p,
                        decay: Decay::Power,
                        x_min: 0.0,
                    }
                }
            },
            Density::PoleTime { gamma, a, b } => {
                let big = a.abs().max(b.abs());
                let c = 2.0 * gamma / big;
                if (*a > 0.0) == (*b > 0.0) {
                    // |φ(t)| ≤ |t| e^{−|t|/max} / |ab|
                    Envelope {
                        ln_a: (gamma.powi(3) / (a * b).powi(2)).ln(),
                        p: 2.0,
                        decay: Decay::Exp(c),
                        x_min: 0.0,
                    }
                } else {
                    Envelope {
                        ln_a: (gamma / (a - b).powi(2)).ln(),
                        p: 0.0,
                        decay: Decay::Exp(c),
                        x_min: 0.0,
                    }
                }
            }
            Density::SplineTime { m, gamma } => Envelope {
                ln_a: 0.0,
                p: 0.0,
                decay: Decay::Compact(*m as f64 / (2.0 * gamma)),
                x_min: 0.0,
            },
        }
    }
}

struct LogAcc {
    max: f64,
    s0: f64,
    s2: f64,
}

impl LogAcc {
    fn new() -> Self {
        LogAcc { max: f64::NEG_INFINITY, s0: 0.0, s2: 0.0 }
    }

    fn push(&mut self, ln_v: f64, xi: f64) {
        if ln_v == f64::NEG_INFINITY {
            return;
        }
        if ln_v > self.max {
            let r = (self.max - ln_v).exp();
            self.s0 *= r;
            self.s2 *= r;
            self.max = ln_v;
        }
        let t = (ln_v - self.max).exp();
        self.s0 += t;
        self.s2 += xi * xi * t;
    }

    fn ln_s0(&self) -> f64 {
        self.max + self.s0.ln()
    }

    /// `ln max(S2, S0·δ²/4)`: since `M ≥ δ²/4`, a tail below `tol` times this
    /// moves `M` by at most `tol·M` even when `S2` itself is negligible.
    fn ln_ref2(&self, delta: f64) -> f64 {
        let floor = self.ln_s0() + 2.0 * (delta / 2.0).ln();
        if self.s2 > 0.0 {
            (self.max + self.s2.ln()).max(floor)
        } else {
            floor
        }
    }
}

fn direct_sums(
    density: &Density,
    env: &Envelope,
    w: f64,
    h: f64,
    opts: &LatticeOpts,
) -> Result<PointSums> {
    let delta = 1.0 / h;
    let start = (-w / delta).round() as i64;
    let mut acc = LogAcc::new();
    let ln_tol = opts.tol.ln() - std::f64::consts::LN_2;
    let mut tails = [0.0f64; 2];
    let mut ln_tails: Vec<(f64, f64)> = Vec::with_capacity(2);
    for dir in [1i64, -1] {
        let mut l = if dir == 1 { start } else { start - 1 };
        let mut count = 0usize;
        loop {
            let xi = w + l as f64 * delta;
            let beyond = xi * dir as f64;
            if beyond > 0.0 && acc.s0 > 0.0 {
                if let (Some(t0), Some(t2)) =
                    (env.ln_tail(beyond, delta, 0), env.ln_tail(beyond, delta, 2))
                {
                    let ok0 = t0 <= ln_tol + acc.ln_s0();
                    let ok2 = t2 <= ln_tol + acc.ln_ref2(delta);
                    if ok0 && ok2 {
                        ln_tails.push((t0, t2));
                        break;
                    }
                }
            }
            acc.push(density.ln_s(xi), xi);
            l += dir;
            count += 1;
            if count > opts.term_cap {
                return Err(Error::TailNotCertifiable(format!(
                    "more than {} lattice terms needed at w = {w}, h = {h}",
                    opts.term_cap
                )));
            }
        }
    }
    if acc.s0 <= 0.0 || !acc.max.is_finite() {
        return Err(Error::DegenerateDenominator { w });
    }
    for (t0, t2) in ln_tails {
        tails[0] += (t0 - acc.ln_s0()).exp();
        tails[1] += (t2 - acc.ln_ref2(delta)).exp();
    }
    Ok(PointSums { ln_scale: acc.max, s0: acc.s0, s2: acc.s2, tail: tails[0].max(tails[1]) })
}

// ---------------------------------------------------------------------------
// Hurwitz zeta for the integer-β B-spline factorization

const BERNOULLI_2J: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// `ζ(s, a) = Σ_{k≥0} (a+k)^{−s}` for integer `s ≥ 2`, `a > 0` (Euler–Maclaurin).
pub fn hurwitz_zeta(s: u32, a: f64) -> f64 {
    assert!(s >= 2 && a > 0.0);
    let sf = s as f64;
    let n = 12usize;
    let mut acc: f64 = (0..n).map(|k| (a + k as f64).powf(-sf)).sum();
    let x = a + n as f64;
    acc += x.powf(1.0 - sf) / (sf - 1.0) + 0.5 * x.powf(-sf);
    // Σ B_{2j}/(2j)! · s(s+1)…(s+2j−2) · x^{−s−2j+1}
    let mut rising = sf; // s(s+1)…(s+2j−2)
    let mut fact = 2.0; // (2j)!
    let mut pow = x.powf(-sf - 1.0);
    for (j, b) in BERNOULLI_2J.iter().enumerate() {
        acc += b / fact * rising * pow;
        let j2 = 2.0 * (j as f64 + 1.0);
        rising *= (sf + j2 - 1.0) * (sf + j2);
        fact *= (j2 + 1.0) * (j2 + 2.0);
        pow /= x * x;
    }
    acc
}

// ---------------------------------------------------------------------------
// Strategies

#[derive(Clone, Debug)]
enum Strategy {
    Direct { density: Density, env: Envelope },
    /// B-spline primal: normalized spacing `b = 1/(hγ)`, cosine coefficients
    /// `(Q_{2m}(n/b), −Q''_{2m}(n/b)/4π²)`.
    Spline { m: u32, gamma: f64, b: f64, coeffs: Vec<(f64, f64)>, integer_b: bool },
    /// Two-sided exponential primal, geometric series in `q = e^{−γh}`.
    ExpPoisson { gamma: f64 },
    /// Two-pole primal, Lorentzian partial fractions in the dilated poles.
    PolePoisson { gamma: f64, a: f64, b: f64 },
    /// Gaussian on a lattice finer than its width: Poisson dual series.
    GaussPoisson { kappa: f64 },
    /// `γ e^{−2γ|x|}`, the dual density of the two-sided exponential.
    ExpTime { gamma: f64 },
}

/// Evaluates the lattice sums of one window, side and `h`.
#[derive(Clone, Debug)]
pub struct Periodizer {
    h: f64,
    strategy: Strategy,
    opts: LatticeOpts,
}

fn nonzero(factors: &[f64]) -> Vec<f64> {
    factors.iter().copied().filter(|v| *v != 0.0).collect()
}

impl Periodizer {
    pub fn new(window: &Window, side: Side, h: f64, opts: &LatticeOpts) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
        }
        if !(opts.tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        let g = window.gamma;
        let direct = |density: Density| {
            let env = density.envelope();
            Strategy::Direct { density, env }
        };
        let gauss = |kappa: f64| {
            if h > SQRT_2 * kappa {
                Strategy::GaussPoisson { kappa }
            } else {
                direct(Density::Gauss { kappa })
            }
        };
        let strategy = match (side, &window.kind) {
            (Side::Primal, WindowKind::BSpline { m }) => {
                if *m == 1 {
                    return Err(Error::TailNotCertifiable(
                        "the weighted periodization of |sinc|^2 diverges".into(),
                    ));
                }
                let b = 1.0 / (h * g);
                let terms = (*m as f64 * b).floor();
                if terms > opts.term_cap as f64 {
                    return Err(Error::TailNotCertifiable(format!(
                        "{terms} cosine terms exceed the cap {}",
                        opts.term_cap
                    )));
                }
                let m2 = 2 * m;
                let coeffs = (0..=terms as usize)
                    .map(|n| {
                        let x = n as f64 / b;
                        let second = 2.0 * bspline_eval(m2 - 2, x)
                            - bspline_eval(m2 - 2, x + 1.0)
                            - bspline_eval(m2 - 2, x - 1.0);
                        (bspline_eval(m2, x), second / (4.0 * PI * PI))
                    })
                    .collect();
                let integer_b = b >= 1.5 && (b - b.round()).abs() <= 1e-12 * b;
                Strategy::Spline { m: *m, gamma: g, b, coeffs, integer_b }
            }
            (Side::Primal, WindowKind::Gaussian) => gauss(1.0 / g),
            (Side::Dual, WindowKind::Gaussian) => gauss(g),
            (Side::Primal, WindowKind::TwoSidedExp) => Strategy::ExpPoisson { gamma: g },
            (Side::Dual, WindowKind::TwoSidedExp) => Strategy::ExpTime { gamma: g },
            (Side::Primal, WindowKind::TwoPoleRational { a, b }) => {
                Strategy::PolePoisson { gamma: g, a: *a, b: *b }
            }
            (Side::Dual, WindowKind::TwoPoleRational { a, b }) => {
                direct(Density::PoleTime { gamma: g, a: *a, b: *b })
            }
            (Side::Primal, WindowKind::Hermite { n }) => direct(Density::Hermite { n: *n, kappa: 1.0 / g }),
            (Side::Dual, WindowKind::Hermite { n }) => direct(Density::Hermite { n: *n, kappa: g }),
            (Side::Dual, WindowKind::BSpline { m }) => direct(Density::SplineTime { m: *m, gamma: g }),
            (Side::Primal, WindowKind::TypeI { factors }) => {
                let factors = nonzero(factors);
                if factors.is_empty() {
                    gauss(1.0 / g)
                } else {
                    direct(Density::Product { kappa: 1.0 / g, base: ProductBase::Gauss, factors })
                }
            }
            (Side::Primal, WindowKind::TypeII { base, factors }) => {
                let factors = nonzero(factors);
                match base {
                    TypeIIBase::TwoPole { a, b } if factors.is_empty() => {
                        Strategy::PolePoisson { gamma: g, a: *a, b: *b }
                    }
                    TypeIIBase::TwoPole { a, b } => direct(Density::Product {
                        kappa: 1.0 / g,
                        base: ProductBase::Pole(*a, *b),
                        factors,
                    }),
                    TypeIIBase::Exp => direct(Density::Product {
                        kappa: 1.0 / g,
                        base: ProductBase::Exp,
                        factors,
                    }),
                }
            }
            (Side::Dual, WindowKind::TypeI { .. } | WindowKind::TypeII { .. }) => {
                return Err(Error::NoTimeDomain(window.kind.name().to_string()))
            }
        };
        Ok(Periodizer { h, strategy, opts: opts.clone() })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Lattice sums at `w`.
    pub fn sums(&self, w: f64) -> Result<PointSums> {
        let h = self.h;
        match &self.strategy {
            Strategy::Direct { density, env } => direct_sums(density, env, w, h, &self.opts),
            Strategy::Spline { m, gamma, b, coeffs, integer_b } => {
                spline_sums(*m, *gamma, *b, coeffs, *integer_b, w)
            }
            Strategy::ExpPoisson { gamma } => Ok(exp_poisson(*gamma, h, w)),
            Strategy::PolePoisson { gamma, a, b } => Ok(pole_poisson(*gamma, *a, *b, h, w)),
            Strategy::GaussPoisson { kappa } => Ok(gauss_poisson(*kappa, h, w, self.opts.tol)),
            Strategy::ExpTime { gamma } => Ok(exp_time(*gamma, h, w)),
        }
    }

    /// `B_{φ,h}(w)`.
    pub fn b(&self, w: f64) -> Result<f64> {
        let s = self.sums(w)?;
        if !(s.s0 > 0.0) {
            return Err(Error::DegenerateDenominator { w });
        }
        Ok(s.b())
    }

    /// Grid `w_j = j/(G·h)`, `j = 0..=G`.
    pub fn grid(&self) -> Vec<f64> {
        let g = self.opts.grid_size;
        (0..=g).map(|j| j as f64 / (g as f64 * self.h)).collect()
    }

    /// Sums at every grid point, in grid order.
    pub fn grid_sums(&self) -> Result<Vec<PointSums>> {
        self.grid().into_par_iter().map(|w| self.sums(w)).collect()
    }
}

fn spline_sums(m: u32, gamma: f64, b: f64, coeffs: &[(f64, f64)], integer_b: bool, w: f64) -> Result<PointSums> {
    let u = w / gamma;
    if integer_b {
        let bi = b.round();
        let r = u.rem_euclid(bi);
        let dist = r.min(bi - r);
        if dist > 0.25 {
            // sin²(π(u+lb)) = sin²(πu): factor it out of both sums
            let two_m = 2 * m;
            let z0 = hurwitz_zeta(two_m, r / bi) + hurwitz_zeta(two_m, 1.0 - r / bi);
            let z2 = hurwitz_zeta(two_m - 2, r / bi) + hurwitz_zeta(two_m - 2, 1.0 - r / bi);
            let sin = (PI * r).sin().abs();
            let ln_scale = two_m as f64 * (sin.ln() - PI.ln());
            return Ok(PointSums {
                ln_scale,
                s0: bi.powi(-(two_m as i32)) * z0 / gamma,
                s2: gamma * bi.powi(2 - two_m as i32) * z2,
                tail: 1e-15,
            });
        }
    }
    let mut s0 = coeffs[0].0;
    let mut s2 = coeffs[0].1;
    let (mut scale0, mut scale2) = (coeffs[0].0.abs(), coeffs[0].1.abs());
    for (n, &(c0, c2)) in coeffs.iter().enumerate().skip(1) {
        let cs = (2.0 * PI * n as f64 * u / b).cos();
        s0 += 2.0 * c0 * cs;
        s2 += 2.0 * c2 * cs;
        scale0 += 2.0 * c0.abs();
        scale2 += 2.0 * c2.abs();
    }
    // The finite series loses ~1e-16·scale to cancellation near zeros of Φ;
    // each sum that is that small is recomputed from its positive terms.
    let near0 = s0 < 1e-4 * scale0;
    let near2 = s2 < 1e-4 * scale2;
    if near0 || near2 {
        let err = |scale: f64| 64.0 * f64::EPSILON * scale / b;
        let d = spline_direct(m, b, u, near2, (s0 / b, err(scale0)), (s2 / b, err(scale2)))?;
        return Ok(PointSums { ln_scale: 0.0, s0: d.s0 / gamma, s2: d.s2 * gamma, tail: d.tail });
    }
    Ok(PointSums { ln_scale: 0.0, s0: s0 / (b * gamma), s2: s2 * gamma / b, tail: 0.0 })
}

/// `Σ_l sinc^{2m}(u + lb)` and, when `weighted`, `Σ_l x² sinc^{2m}(x)` over
/// `x = u + lb`, summed outward with Hurwitz-zeta bounds on the rest.
///
/// `series0`, `series2` are the cosine-series values with their absolute
/// errors. A series value is kept whenever the direct sum cannot beat it
/// within the term cap.
fn spline_direct(m: u32, b: f64, u: f64, weighted: bool, series0: (f64, f64), series2: (f64, f64)) -> Result<PointSums> {
    const REL: f64 = 1e-13;
    const CAP: i64 = 1 << 22;
    let two_m = 2 * m as i32;
    let term = |x: f64| if x == 0.0 { 1.0 } else { ((PI * x).sin() / (PI * x)).powi(two_m) };
    let l0 = (-u / b).round() as i64;
    let x0 = u + l0 as f64 * b;
    let (mut s0, mut s2) = (term(x0), x0 * x0 * term(x0));
    let mut k = 1i64;
    loop {
        for x in [u + (l0 + k) as f64 * b, u + (l0 - k) as f64 * b] {
            let t = term(x);
            s0 += t;
            s2 += x * x * t;
        }
        if k & (k - 1) == 0 || k == CAP {
            // remaining |x| ≥ (k + ½)b on both sides
            let a = k as f64 + 0.5;
            let r0 = 2.0 * (PI * b).powi(-two_m) * hurwitz_zeta(two_m as u32, a);
            let r2 = 2.0 * PI.powi(-two_m) * b.powi(2 - two_m) * hurwitz_zeta(two_m as u32 - 2, a);
            let (e0, v0) = if r0 <= series0.1 { (r0, s0) } else { (series0.1, series0.0) };
            let (e2, v2) = if !weighted || r2 > series2.1 { (series2.1, series2.0) } else { (r2, s2) };
            // M ≥ b²/4 in these units, so S₀·b²/4 floors the weighted reference
            let ref2 = v2.max(v0 * b * b / 4.0);
            let (rel0, rel2) = (e0 / v0, e2 / ref2);
            // the bounds decay like k^{1−2m} and k^{3−2m}; a sum is settled once
            // it meets REL or not even the cap could beat its series value
            let at_cap = |r: f64, p: i32| r * (a / (CAP as f64 + 0.5)).powi(p);
            let done0 = rel0 <= REL || at_cap(r0, two_m - 1) >= series0.1;
            let done2 = rel2 <= REL || !weighted || at_cap(r2, two_m - 3) >= series2.1;
            if (done0 && done2) || k == CAP {
                // a series value that was never near zero carries up to 64ε/1e-4
                if !(v0 > 0.0) || rel0.max(rel2) > 1e-9 {
                    return Err(Error::TailNotCertifiable(format!(
                        "periodization too close to zero at u = {u}, b = {b}"
                    )));
                }
                return Ok(PointSums { ln_scale: 0.0, s0: v0, s2: v2, tail: rel0.max(rel2) });
            }
        }
        k += 1;
    }
}

fn exp_poisson(gamma: f64, h: f64, w: f64) -> PointSums {
    let t = gamma * h;
    let z = Complex64::from_polar((-t).exp(), 2.0 * PI * h * w);
    let one = Complex64::new(1.0, 0.0);
    let g1 = (z / (one - z)).re;
    let g2 = (z / ((one - z) * (one - z))).re;
    let s0 = h * (1.0 + 2.0 * (g1 + t * g2));
    let s2 = h * gamma * gamma / (4.0 * PI * PI) * (1.0 + 2.0 * (g1 - t * g2));
    PointSums { ln_scale: 0.0, s0, s2, tail: 0.0 }
}

/// `Σ_n e^{−|n|/c·h} e^{inθ}` and `Σ_n |n| e^{−|n|h/c} e^{inθ}`.
fn lorentz_kernels(c: f64, h: f64, theta: f64) -> (f64, f64) {
    let x = h / c;
    let q = (-x).exp();
    let one_minus_q2 = -(-2.0 * x).exp_m1();
    let p = one_minus_q2 / (1.0 - 2.0 * q * theta.cos() + q * q);
    let z = Complex64::from_polar(q, theta);
    let one = Complex64::new(1.0, 0.0);
    let r = 2.0 * (z / ((one - z) * (one - z))).re;
    (p, r)
}

fn pole_poisson(gamma: f64, a: f64, b: f64, h: f64, w: f64) -> PointSums {
    let theta = 2.0 * PI * h * w;
    let (ca, cb) = (a.abs() / gamma, b.abs() / gamma);
    let pref = h / gamma;
    let gap = (ca - cb).abs() / ca.max(cb);
    if gap <= 1e-6 {
        let c = (ca * cb).sqrt();
        let (p, r) = lorentz_kernels(c, h, theta);
        return PointSums {
            ln_scale: 0.0,
            s0: pref * (c * p + h * r) / (4.0 * c * c),
            s2: pref * (c * p - h * r) / (16.0 * PI * PI * c.powi(4)),
            tail: 0.0,
        };
    }
    let (pa, _) = lorentz_kernels(ca, h, theta);
    let (pb, _) = lorentz_kernels(cb, h, theta);
    let d = ca * ca - cb * cb;
    PointSums {
        ln_scale: 0.0,
        s0: pref * (ca * pa - cb * pb) / (2.0 * d),
        s2: pref * (pb / (2.0 * cb) - pa / (2.0 * ca)) / (4.0 * PI * PI * d),
        tail: 0.0,
    }
}

fn gauss_poisson(kappa: f64, h: f64, w: f64, tol: f64) -> PointSums {
    let a = PI / (2.0 * kappa * kappa);
    let theta = 2.0 * PI * h * w;
    let mut s0 = 1.0;
    let mut s2 = 2.0 * a;
    let mut n = 1.0f64;
    let tail = loop {
        let x2 = n * n * h * h;
        let e = (-a * x2).exp();
        let cs = (n * theta).cos();
        s0 += 2.0 * e * cs;
        s2 += 2.0 * (2.0 * a - 4.0 * a * a * x2) * e * cs;
        // next term bounded by this one times e^{−a h²(2n+1)} ≤ ½
        let next = (-a * h * h * (2.0 * n + 1.0)).exp();
        let mag = 2.0 * e * (1.0 + 2.0 * a * x2.max(1.0)) * next;
        if next < 0.5 && mag <= tol * 1e-3 * s0.abs().min(s2.abs()) {
            break 2.0 * mag / s0.abs().min(s2.abs());
        }
        n += 1.0;
    };
    let k = h / SQRT_2;
    PointSums { ln_scale: 0.0, s0: k * s0, s2: k * s2 / (4.0 * PI * PI), tail }
}

fn exp_time(gamma: f64, h: f64, w: f64) -> PointSums {
    let delta = 1.0 / h;
    let c = 2.0 * gamma;
    let r = w.rem_euclid(delta);
    let s = delta - r;
    let q = (-c * delta).exp();
    let omq = -(-c * delta).exp_m1();
    let e1 = (-c * r).exp();
    let e2 = (-c * s).exp();
    let moment = |x: f64| {
        x * x / omq + 2.0 * x * delta * q / (omq * omq) + delta * delta * q * (1.0 + q) / omq.powi(3)
    };
    PointSums {
        ln_scale: 0.0,
        s0: gamma * (e1 + e2) / omq,
        s2: gamma * (e1 * moment(r) + e2 * moment(s)),
        tail: 0.0,
    }
}

// ---------------------------------------------------------------------------
// Public operations

/// Extended result of the supremum search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MValue {
    pub m: f64,
    pub argmax_w: f64,
    pub grid_max: f64,
    pub h: f64,
    pub side: Side,
}

fn profile_from_sums(h: f64, grid: Vec<f64>, sums: &[PointSums]) -> Result<PeriodizationProfile> {
    let mut phi_vals = Vec::with_capacity(sums.len());
    let mut weighted_vals = Vec::with_capacity(sums.len());
    let mut b_vals = Vec::with_capacity(sums.len());
    let mut tail_bound = 0.0f64;
    for (s, &w) in sums.iter().zip(&grid) {
        let phi = s.phi(h);
        if !(phi.is_normal() && phi > 0.0) {
            return Err(Error::DegenerateDenominator { w });
        }
        phi_vals.push(phi);
        weighted_vals.push(s.weighted());
        b_vals.push(s.b());
        tail_bound = tail_bound.max(s.tail);
    }
    Ok(PeriodizationProfile { h, grid, phi_vals, weighted_vals, b_vals, tail_bound })
}

/// Primal periodization profile on `grid_size + 1` points of `[0, 1/h]`.
pub fn periodize(window: &Window, h: f64, grid_size: usize, tol: f64) -> Result<PeriodizationProfile> {
    periodize_side(window, Side::Primal, h, &LatticeOpts { grid_size, tol, ..LatticeOpts::default() })
}

pub fn periodize_side(window: &Window, side: Side, h: f64, opts: &LatticeOpts) -> Result<PeriodizationProfile> {
    if opts.grid_size < 16 {
        return Err(Error::InvalidInput("grid_size must be at least 16".into()));
    }
    let p = Periodizer::new(window, side, h, opts)?;
    let grid = p.grid();
    let sums = p.grid_sums()?;
    profile_from_sums(h, grid, &sums)
}

/// `B_{φ,h}` on the grid, robust to underflow of `Φ_h` itself.
pub fn b_profile(window: &Window, side: Side, h: f64, opts: &LatticeOpts) -> Result<Vec<f64>> {
    let p = Periodizer::new(window, side, h, opts)?;
    p.grid()
        .into_par_iter()
        .map(|w| p.b(w))
        .collect()
}

/// `M_{φ,h}` on the primal side.
pub fn m_value(window: &Window, h: f64, opts: &LatticeOpts) -> Result<f64> {
    Ok(m_value_side(window, Side::Primal, h, opts)?.m)
}

/// Grid maximum of `B` (ties to the smaller `w`) followed by a golden-section polish.
pub fn m_value_side(window: &Window, side: Side, h: f64, opts: &LatticeOpts) -> Result<MValue> {
    if opts.grid_size < 2 || !opts.grid_size.is_multiple_of(2) {
        return Err(Error::InvalidInput("grid_size must be even and at least 2".into()));
    }
    let p = Periodizer::new(window, side, h, opts)?;
    let grid = p.grid();
    let vals: Vec<f64> = grid.par_iter().map(|&w| p.b(w)).collect::<Result<_>>()?;
    let mut best = 0usize;
    for (j, v) in vals.iter().enumerate() {
        if *v > vals[best] {
            best = j;
        }
    }
    let grid_max = vals[best];
    let mut m = grid_max;
    let mut argmax_w = grid[best];
    if opts.refine {
        let lo = grid[best.saturating_sub(1)];
        let hi = grid[(best + 1).min(grid.len() - 1)];
        let (w, v) = golden_max(|w| p.b(w), lo, hi)?;
        if v > m {
            m = v;
            argmax_w = w;
        }
    }
    Ok(MValue { m, argmax_w, grid_max, h, side })
}

/// Supremum of `B` and extremes of `Φ_h` from one pass over the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub m: MValue,
    pub stability: StabilityReport,
}

pub fn analyze(window: &Window, side: Side, h: f64, opts: &LatticeOpts) -> Result<Analysis> {
    if opts.grid_size < 2 || !opts.grid_size.is_multiple_of(2) {
        return Err(Error::InvalidInput("grid_size must be even and at least 2".into()));
    }
    let p = Periodizer::new(window, side, h, opts)?;
    let grid = p.grid();
    let sums = p.grid_sums()?;
    let mut best = 0usize;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for (j, s) in sums.iter().enumerate() {
        if !(s.s0 > 0.0) {
            return Err(Error::DegenerateDenominator { w: grid[j] });
        }
        if s.b() > sums[best].b() {
            best = j;
        }
        let phi = s.phi(h).max(0.0);
        lo = lo.min(phi);
        hi = hi.max(phi);
    }
    let grid_max = sums[best].b();
    let (mut m, mut argmax_w) = (grid_max, grid[best]);
    if opts.refine {
        let a = grid[best.saturating_sub(1)];
        let b = grid[(best + 1).min(grid.len() - 1)];
        let (w, v) = golden_max(|w| p.b(w), a, b)?;
        if v > m {
            m = v;
            argmax_w = w;
        }
    }
    Ok(Analysis {
        m: MValue { m, argmax_w, grid_max, h, side },
        stability: StabilityReport {
            essinf_est: lo,
            esssup_est: hi,
            stable: lo > opts.stability_threshold,
            grid_size: opts.grid_size,
        },
    })
}

fn golden_max(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    let width = (b - a).abs();
    for _ in 0..80 {
        if (b - a).abs() <= 1e-13 * width.max(1e-300) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
        for (x, fx) in [(c, fc), (d, fd)] {
            if fx > best.1 {
                best = (x, fx);
            }
        }
    }
    Ok(best)
}

/// Min and max of `Φ_h` on the grid; stable iff the min exceeds the threshold.
pub fn stability_check(window: &Window, h: f64, grid_size: usize) -> Result<StabilityReport> {
    stability_check_side(window, Side::Primal, h, &LatticeOpts::with_grid(grid_size))
}

pub fn stability_check_side(window: &Window, side: Side, h: f64, opts: &LatticeOpts) -> Result<StabilityReport> {
    let p = Periodizer::new(window, side, h, opts)?;
    let sums = p.grid_sums()?;
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for s in &sums {
        let phi = s.phi(h).max(0.0);
        lo = lo.min(phi);
        hi = hi.max(phi);
    }
    Ok(StabilityReport {
        essinf_est: lo,
        esssup_est: hi,
        stable: lo > opts.stability_threshold,
        grid_size: opts.grid_size,
    })
}

fn primal_envelope(window: &Window) -> Result<Envelope> {
    let g = window.gamma;
    let power = |ln_a: f64, p: f64| Envelope { ln_a, p: -p, decay: Decay::Power, x_min: 0.0 };
    Ok(match &window.kind {
        WindowKind::BSpline { m } => {
            // sinc^{2m}(ξ/γ)/γ ≤ γ^{2m−1} (π ξ)^{−2m}
            let p = 2.0 * *m as f64;
            power((p - 1.0) * g.ln() - p * PI.ln(), p)
        }
        WindowKind::TwoSidedExp => power((g.powi(3) / (4.0 * PI.powi(4))).ln(), 4.0),
        WindowKind::TwoPoleRational { a, b } => {
            power((g.powi(3) / (16.0 * PI.powi(4) * a * a * b * b)).ln(), 4.0)
        }
        _ => match Periodizer::new(window, Side::Primal, 1.0, &LatticeOpts::default())?.strategy {
            Strategy::Direct { env, .. } => env,
            Strategy::GaussPoisson { kappa } => Density::Gauss { kappa }.envelope(),
            Strategy::PolePoisson { a, b, .. } => {
                power((g.powi(3) / (16.0 * PI.powi(4) * a * a * b * b)).ln(), 4.0)
            }
            _ => unreachable!("remaining kinds use direct sums"),
        },
    })
}

/// Terms per side `N` such that the envelope bound on `Σ_{|l|≥N} |φ̂(l/h)|²`
/// is below `tol`; `tol = ∞` gives 1.
pub fn truncation_terms(window: &Window, h: f64, tol: f64) -> Result<u64> {
    truncation_terms_capped(window, h, tol, 1u64 << 50)
}

pub fn truncation_terms_capped(window: &Window, h: f64, tol: f64, cap: u64) -> Result<u64> {
    if !(tol > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidInput("tol and h must be positive".into()));
    }
    if tol == f64::INFINITY {
        return Ok(1);
    }
    let env = primal_envelope(window)?;
    let delta = 1.0 / h;
    let ok = |n: u64| -> bool {
        env.ln_tail(n as f64 * delta, delta, 0)
            .is_some_and(|t| t + std::f64::consts::LN_2 <= tol.ln())
    };
    let mut hi = 1u64;
    while !ok(hi) {
        if hi >= cap {
            return Err(Error::TailNotCertifiable(format!(
                "tail above {tol} after {cap} terms"
            )));
        }
        hi = (hi * 2).min(cap);
    }
    let mut lo = hi / 2;
    if lo == 0 || ok(lo) {
        return Ok(if lo == 0 { hi } else { lo.max(1) });
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
