//! Shift-invariant spaces `V_h(φ)`: random instances, norms, the Bernstein
//! ratio and weighted sampling sums.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{m_value_side, LatticeOpts, Side};
use crate::window::{Window, WindowKind};

/// `f(x) = Σ_i d_i φ(x − x₀ − h(k₀+i))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplineFunction {
    pub window: Window,
    pub h: f64,
    /// Index of the first coefficient.
    pub k0: i64,
    pub coeffs: Vec<f64>,
    /// Translation applied to the whole function.
    pub offset: f64,
}

/// 16-point Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gl16() -> &'static [(f64, f64); 16] {
    static NODES: OnceLock<[(f64, f64); 16]> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = 16usize;
        let mut out = [(0.0, 0.0); 16];
        for (i, slot) in out.iter_mut().enumerate() {
            // Newton from the Chebyshev-like initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            *slot = (x, 2.0 / ((1.0 - x * x) * dp * dp));
        }
        out
    })
}

fn gl_panel(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    half * gl16().iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Radius beyond which `|φ|` and `|φ'|` are below `e^{−digits}` times their scale.
fn decay_radius(window: &Window, digits: f64) -> Option<f64> {
    let g = window.gamma;
    let r = match &window.kind {
        WindowKind::BSpline { .. } => return None,
        WindowKind::Gaussian => (digits / PI).sqrt(),
        WindowKind::Hermite { n } => ((2.0 * *n as f64 + 1.0) / (2.0 * PI)).sqrt() + 1.5 * (digits / PI).sqrt(),
        WindowKind::TwoSidedExp => digits + 5.0,
        WindowKind::TwoPoleRational { a, b } => a.abs().max(b.abs()) * (digits + 10.0),
        WindowKind::TypeI { .. } | WindowKind::TypeII { .. } => return None,
    };
    Some(r / g)
}

impl SplineFunction {
    pub fn new(window: Window, h: f64, k0: i64, coeffs: Vec<f64>) -> Result<Self> {
        if !window.kind.has_time_domain() {
            return Err(Error::NoTimeDomain(window.kind.name().to_string()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("h must be positive, got {h}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("coefficients must be finite".into()));
        }
        Ok(SplineFunction { window, h, k0, coeffs, offset: 0.0 })
    }

    /// `c·f`.
    pub fn scaled(&self, c: f64) -> Self {
        SplineFunction { coeffs: self.coeffs.iter().map(|d| c * d).collect(), ..self.clone() }
    }

    /// `f(· − τ)`.
    pub fn shifted(&self, tau: f64) -> Self {
        SplineFunction { offset: self.offset + tau, ..self.clone() }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }

    fn center(&self, i: usize) -> f64 {
        self.offset + self.h * (self.k0 + i as i64) as f64
    }

    /// Indices whose translate can be nonzero at `x`.
    fn active(&self, x: f64) -> std::ops::Range<usize> {
        match self.window.support_radius() {
            Some(r) => {
                let n = self.coeffs.len() as i64;
                let t = (x - self.offset) / self.h - self.k0 as f64;
                let reach = r / self.h;
                let lo = ((t - reach).floor() as i64).clamp(0, n);
                let hi = ((t + reach).ceil() as i64 + 1).clamp(0, n);
                lo as usize..hi as usize
            }
            None => 0..self.coeffs.len(),
        }
    }

    // The constructor rejects windows without a time-domain form, so the
    // window evaluations below cannot fail.
    pub fn eval(&self, x: f64) -> f64 {
        self.active(x)
            .map(|i| self.coeffs[i] * self.window.eval(x - self.center(i)).unwrap_or(f64::NAN))
            .sum()
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.active(x)
            .map(|i| self.coeffs[i] * self.window.derivative(x - self.center(i)).unwrap_or(f64::NAN))
            .sum()
    }

    /// Interval outside which `f` vanishes (compact windows) or is below
    /// `e^{−digits}` relative to its scale.
    pub fn support(&self, digits: f64) -> (f64, f64) {
        let r = self.window.support_radius().or_else(|| decay_radius(&self.window, digits)).unwrap_or(0.0);
        let first = self.coeffs.iter().position(|c| *c != 0.0).unwrap_or(0);
        let last = self.coeffs.iter().rposition(|c| *c != 0.0).unwrap_or(0);
        (self.center(first) - r, self.center(last) + r)
    }

    /// Sorted panel breakpoints: knots of every translate inside the support.
    fn panel_breaks(&self, lo: f64, hi: f64, width: f64) -> Vec<f64> {
        let mut pts = vec![lo, hi];
        let local = self.window.breakpoints();
        for i in 0..self.coeffs.len() {
            if self.coeffs[i] == 0.0 && self.window.support_radius().is_some() {
                continue;
            }
            for k in &local {
                let x = self.center(i) + k;
                if x > lo && x < hi {
                    pts.push(x);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        // subdivide long panels
        let mut out = vec![pts[0]];
        for w in pts.windows(2) {
            let pieces = ((w[1] - w[0]) / width).ceil().max(1.0) as usize;
            for p in 1..=pieces {
                out.push(w[0] + (w[1] - w[0]) * p as f64 / pieces as f64);
            }
        }
        out
    }

    fn integrate(&self, g: impl Fn(f64) -> f64 + Sync) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        let (lo, hi) = self.support(50.0);
        if let WindowKind::BSpline { m } = self.window.kind {
            // piecewise polynomials of degree ≤ 2m−2 between knots; 16 nodes are
            // exact up to degree 31
            let width = self.h.min(1.0 / self.window.gamma) * 16.0 / m.max(16) as f64;
            let br = self.panel_breaks(lo, hi, width);
            return Ok(br.windows(2).map(|w| gl_panel(&g, w[0], w[1])).sum());
        }
        let mut width = 0.5 / self.window.gamma;
        let mut prev: Option<f64> = None;
        for _ in 0..8 {
            let br = self.panel_breaks(lo, hi, width);
            let v: f64 = br.windows(2).map(|w| gl_panel(&g, w[0], w[1])).sum();
            if let Some(p) = prev {
                if (v - p).abs() <= 1e-11 * v.abs().max(1e-300) {
                    return Ok(v);
                }
            }
            prev = Some(v);
            width /= 2.0;
        }
        Err(Error::QuadratureNotConverged { lo, hi })
    }

    /// `‖f‖₂`.
    pub fn l2_norm(&self) -> Result<f64> {
        Ok(self.integrate(|x| self.eval(x).powi(2))?.sqrt())
    }

    /// `‖f'‖₂`.
    pub fn deriv_norm(&self) -> Result<f64> {
        Ok(self.integrate(|x| self.deriv(x).powi(2))?.sqrt())
    }
}

/// Random instance: `count` coefficients uniform on `[−1, 1]`, centred at 0.
pub fn synth(window: &Window, h: f64, count: usize, seed: u64) -> Result<SplineFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-1.0, 1.0);
    let coeffs = (0..count).map(|_| dist.sample(&mut rng)).collect();
    SplineFunction::new(window.clone(), h, -(count as i64 / 2), coeffs)
}

/// `‖f'‖ / (2π‖f‖)`.
pub fn bernstein_ratio(f: &SplineFunction) -> Result<f64> {
    let n = f.l2_norm()?;
    if n == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(f.deriv_norm()? / (2.0 * PI * n))
}

/// Sorted sample points with gap `δ` and weights `w_n = (x_{n+1} − x_{n−1})/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingSet {
    pub points: Vec<f64>,
    pub delta: f64,
    pub weights: Vec<f64>,
}

impl SamplingSet {
    /// Endpoints take the one-sided half gap.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("a sampling set needs at least two points".into()));
        }
        if points.iter().any(|x| !x.is_finite()) || points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::InvalidInput("sampling points must be finite and strictly increasing".into()));
        }
        let n = points.len();
        let delta = points.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max);
        let weights = (0..n)
            .map(|i| {
                let left = if i == 0 { points[0] } else { points[i - 1] };
                let right = if i + 1 == n { points[n - 1] } else { points[i + 1] };
                (right - left) / 2.0
            })
            .collect();
        Ok(SamplingSet { points, delta, weights })
    }

    /// `x + αn` covering `[lo, hi]`.
    pub fn uniform(x: f64, alpha: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(alpha > 0.0) || !(hi > lo) {
            return Err(Error::InvalidInput("need alpha > 0 and lo < hi".into()));
        }
        let first = ((lo - x) / alpha).floor() as i64;
        let last = ((hi - x) / alpha).ceil() as i64;
        Self::new((first..=last).map(|n| x + alpha * n as f64).collect())
    }

    /// `lo + step·(n + u_n)` with `u_n` uniform on `[−jitter, jitter]`, `jitter < ½`.
    pub fn jittered(lo: f64, hi: f64, step: f64, jitter: f64, seed: u64) -> Result<Self> {
        if !(0.0..0.5).contains(&jitter) || !(step > 0.0) || !(hi > lo) {
            return Err(Error::InvalidInput("need step > 0, lo < hi and jitter in [0, 1/2)".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Uniform::new_inclusive(-jitter, jitter);
        let n = ((hi - lo) / step).ceil() as i64;
        let pts = (0..=n)
            .map(|k| lo + step * (k as f64 + if jitter > 0.0 { dist.sample(&mut rng) } else { 0.0 }))
            .collect();
        Self::new(pts)
    }

    /// Jittered set over the support of `f` plus three gap widths on each side.
    pub fn covering(f: &SplineFunction, step: f64, jitter: f64, seed: u64) -> Result<Self> {
        let (lo, hi) = f.support(30.0);
        let margin = 3.0 * step;
        Self::jittered(lo - margin, hi + margin, step, jitter, seed)
    }

    pub fn shifted(&self, tau: f64) -> Self {
        SamplingSet {
            points: self.points.iter().map(|x| x + tau).collect(),
            delta: self.delta,
            weights: self.weights.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingReport {
    pub norm_sq: f64,
    pub weighted_sum: f64,
    pub lower: f64,
    pub upper: f64,
    pub delta: f64,
    pub m: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Weighted sampling sum against `(1 ∓ 2δ√M)²‖f‖²`, with `M` computed here.
pub fn sampling_bounds_check(f: &SplineFunction, s: &SamplingSet) -> Result<SamplingReport> {
    let m = m_value_side(&f.window, Side::Primal, f.h, &LatticeOpts::default())?.m;
    sampling_bounds_check_with_m(f, s, m)
}

/// As [`sampling_bounds_check`] with a precomputed `M_{φ,h}`.
pub fn sampling_bounds_check_with_m(f: &SplineFunction, s: &SamplingSet, m: f64) -> Result<SamplingReport> {
    let limit = 1.0 / (2.0 * m.sqrt());
    if s.delta >= limit {
        return Err(Error::DensityTooLow { delta: s.delta, limit });
    }
    let (lo, hi) = f.support(30.0);
    if !f.is_zero() && (s.points[0] > lo || *s.points.last().unwrap() < hi) {
        return Err(Error::InvalidInput(format!(
            "sampling set [{}, {}] does not cover the support [{lo}, {hi}]",
            s.points[0],
            s.points.last().unwrap()
        )));
    }
    let norm_sq = f.l2_norm()?.powi(2);
    let weighted_sum: f64 = s.points.iter().zip(&s.weights).map(|(x, w)| w * f.eval(*x).powi(2)).sum();
    let k = 2.0 * s.delta * m.sqrt();
    let lower = (1.0 - k).powi(2) * norm_sq;
    let upper = (1.0 + k).powi(2) * norm_sq;
    let slack = 1e-9 * norm_sq;
    Ok(SamplingReport {
        norm_sq,
        weighted_sum,
        lower,
        upper,
        delta: s.delta,
        m,
        lower_ok: weighted_sum >= lower - slack,
        upper_ok: weighted_sum <= upper + slack,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub w_star: f64,
    pub ratio: f64,
    pub bound: f64,
    /// `ratio / bound`
    pub fraction: f64,
    pub count: usize,
}

/// Ratio for the modulated coefficients `d_k = cos(2π w* h k)` where `w*` maximizes `B`.
pub fn sharpness_probe(window: &Window, h: f64, count: usize) -> Result<SharpnessReport> {
    let mv = m_value_side(window, Side::Primal, h, &LatticeOpts::default())?;
    let k0 = -(count as i64 / 2);
    let coeffs = (0..count)
        .map(|i| (2.0 * PI * mv.argmax_w * h * (k0 + i as i64) as f64).cos())
        .collect();
    let f = SplineFunction::new(window.clone(), h, k0, coeffs)?;
    let ratio = bernstein_ratio(&f)?;
    let bound = mv.m.sqrt();
    Ok(SharpnessReport { w_star: mv.argmax_w, ratio, bound, fraction: ratio / bound, count })
}
