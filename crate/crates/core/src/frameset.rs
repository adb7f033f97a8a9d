//! Sufficient frame regions in the `(α, β)` plane.
//!
//! A cell is certified when `Δ = 2α√M_{φ,1/β} < 1` (primal) or
//! `Δ̂ = 2β√M_{φ̂,1/α} < 1` (Fourier dual). `M` depends only on `β` in the
//! primal case and only on `α` in the dual case, so it is computed once per
//! column and once per row.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{analyze, m_value_side, Analysis, LatticeOpts, Side};
use crate::window::{Window, WindowKind};

/// Tag of a cited region overlay.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CitedTag {
    /// Sign-change region for `Q_m`.
    SignRegionQm(u32),
    /// Region proven for `Q_2` by other means.
    OfsbQ2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    DensityTheorem,
    UnstableGenerator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    FramePrimal,
    FrameDual,
    Painless,
    Cited(CitedTag),
    Unknown,
    Excluded(ExclusionReason),
}

impl Verdict {
    /// Stable CSV token.
    pub fn as_token(&self) -> String {
        match self {
            Verdict::FramePrimal => "frame_primal".into(),
            Verdict::FrameDual => "frame_dual".into(),
            Verdict::Painless => "painless".into(),
            Verdict::Cited(CitedTag::OfsbQ2) => "cited:ofsb_q2".into(),
            Verdict::Cited(CitedTag::SignRegionQm(m)) => format!("cited:sign_region_q{m}"),
            Verdict::Unknown => "unknown".into(),
            Verdict::Excluded(ExclusionReason::DensityTheorem) => "excluded:density_theorem".into(),
            Verdict::Excluded(ExclusionReason::UnstableGenerator) => "excluded:unstable_generator".into(),
        }
    }

    pub fn is_frame(&self) -> bool {
        matches!(self, Verdict::FramePrimal | Verdict::FrameDual)
    }
}

/// `lo + (hi − lo)(i+1)/n` for `i = 0..n`: excludes `lo`, includes `hi`.
pub fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i + 1) as f64 / n as f64).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOpts {
    pub alpha_range: (f64, f64),
    pub beta_range: (f64, f64),
    pub n_alpha: usize,
    pub n_beta: usize,
    pub lattice: LatticeOpts,
}

impl Default for ScanOpts {
    fn default() -> Self {
        ScanOpts {
            alpha_range: (0.0, 2.0),
            beta_range: (0.0, 2.0),
            n_alpha: 200,
            n_beta: 200,
            lattice: LatticeOpts::default(),
        }
    }
}

impl ScanOpts {
    pub fn square(n: usize) -> Self {
        ScanOpts { n_alpha: n, n_beta: n, ..Self::default() }
    }
}

/// `M` and stability for one lattice spacing, or why they are missing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineStats {
    pub m: Option<f64>,
    pub stable: bool,
    pub error: Option<String>,
}

impl LineStats {
    fn from(res: Result<Analysis>) -> Self {
        match res {
            Ok(a) => LineStats { m: Some(a.m.m), stable: a.stability.stable, error: None },
            Err(e) => LineStats { m: None, stable: false, error: Some(e.to_string()) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub alpha: f64,
    pub beta: f64,
    pub delta_primal: Option<f64>,
    pub delta_dual: Option<f64>,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub window: Window,
    pub alpha_axis: Vec<f64>,
    pub beta_axis: Vec<f64>,
    /// Primal `M_{φ,1/β}` per β column.
    pub columns: Vec<LineStats>,
    /// Dual `M_{φ̂,1/α}` per α row.
    pub rows: Vec<LineStats>,
    /// α-major: `cells[i·n_beta + j]` is `(α_i, β_j)`.
    pub cells: Vec<Cell>,
    pub opts: ScanOpts,
}

/// Half-width of the support for windows that are positive exactly inside it.
fn painless_sigma(window: &Window) -> Option<f64> {
    match window.kind {
        WindowKind::BSpline { .. } => window.support_radius(),
        _ => None,
    }
}

fn cited_tags(window: &Window) -> Vec<CitedTag> {
    match window.kind {
        WindowKind::BSpline { m } if window.gamma == 1.0 => {
            let mut tags = vec![CitedTag::SignRegionQm(m)];
            if m == 2 {
                tags.insert(0, CitedTag::OfsbQ2);
            }
            tags
        }
        _ => Vec::new(),
    }
}

pub fn cell_verdict(window: &Window, alpha: f64, beta: f64, column: &LineStats, row: &LineStats) -> Cell {
    let delta_primal = column.m.map(|m| 2.0 * alpha * m.sqrt());
    let delta_dual = row.m.map(|m| 2.0 * beta * m.sqrt());
    let verdict = if alpha * beta >= 1.0 {
        Verdict::Excluded(ExclusionReason::DensityTheorem)
    } else if column.m.is_some() && !column.stable {
        Verdict::Excluded(ExclusionReason::UnstableGenerator)
    } else if delta_primal.is_some_and(|d| d < 1.0) {
        Verdict::FramePrimal
    } else if row.stable && delta_dual.is_some_and(|d| d < 1.0) {
        Verdict::FrameDual
    } else if painless_sigma(window).is_some_and(|s| painless_region(s, alpha, beta)) {
        Verdict::Painless
    } else if let Some(tag) = cited_tags(window).into_iter().find(|t| cited_overlay(*t, alpha, beta)) {
        Verdict::Cited(tag)
    } else {
        Verdict::Unknown
    };
    Cell { alpha, beta, delta_primal, delta_dual, verdict }
}

/// Scans the grid; per-line lattice failures leave the affected Δ empty.
pub fn scan(window: &Window, opts: &ScanOpts) -> Result<RegionGrid> {
    let (alo, ahi) = opts.alpha_range;
    let (blo, bhi) = opts.beta_range;
    if !(alo >= 0.0 && ahi > alo && blo >= 0.0 && bhi > blo) || opts.n_alpha == 0 || opts.n_beta == 0 {
        return Err(Error::InvalidInput("ranges must be nonnegative and nonempty".into()));
    }
    let alpha_axis = axis(alo, ahi, opts.n_alpha);
    let beta_axis = axis(blo, bhi, opts.n_beta);
    let columns: Vec<LineStats> = beta_axis
        .par_iter()
        .map(|&b| LineStats::from(analyze(window, Side::Primal, 1.0 / b, &opts.lattice)))
        .collect();
    let rows: Vec<LineStats> = alpha_axis
        .par_iter()
        .map(|&a| LineStats::from(analyze(window, Side::Dual, 1.0 / a, &opts.lattice)))
        .collect();
    let mut cells = Vec::with_capacity(alpha_axis.len() * beta_axis.len());
    for (i, &a) in alpha_axis.iter().enumerate() {
        for (j, &b) in beta_axis.iter().enumerate() {
            cells.push(cell_verdict(window, a, b, &columns[j], &rows[i]));
        }
    }
    Ok(RegionGrid { window: window.clone(), alpha_axis, beta_axis, columns, rows, cells, opts: opts.clone() })
}

fn opt_num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl RegionGrid {
    pub fn cell(&self, i: usize, j: usize) -> &Cell {
        &self.cells[i * self.beta_axis.len() + j]
    }

    /// CSV `alpha,beta,delta_primal,delta_dual,verdict`, α outer, β inner.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,delta_primal,delta_dual,verdict\n");
        for c in &self.cells {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                c.alpha,
                c.beta,
                opt_num(c.delta_primal),
                opt_num(c.delta_dual),
                c.verdict.as_token()
            ));
        }
        out
    }

    pub fn verdict_counts(&self) -> std::collections::BTreeMap<String, usize> {
        let mut counts = std::collections::BTreeMap::new();
        for c in &self.cells {
            *counts.entry(c.verdict.as_token()).or_insert(0) += 1;
        }
        counts
    }

    /// Metadata sidecar for the CSV.
    pub fn meta_json(&self) -> serde_json::Value {
        let line_errors: Vec<_> = self
            .columns
            .iter()
            .zip(&self.beta_axis)
            .filter_map(|(c, b)| c.error.as_ref().map(|e| serde_json::json!({"beta": b, "error": e})))
            .chain(
                self.rows
                    .iter()
                    .zip(&self.alpha_axis)
                    .filter_map(|(r, a)| r.error.as_ref().map(|e| serde_json::json!({"alpha": a, "error": e}))),
            )
            .collect();
        serde_json::json!({
            "window": self.window,
            "resolution": {"alpha": self.alpha_axis.len(), "beta": self.beta_axis.len()},
            "alpha_range": [self.opts.alpha_range.0, self.opts.alpha_range.1],
            "beta_range": [self.opts.beta_range.0, self.opts.beta_range.1],
            "tolerances": {
                "grid_size": self.opts.lattice.grid_size,
                "tail_tol": self.opts.lattice.tol,
                "stability_threshold": self.opts.lattice.stability_threshold,
            },
            "version": env!("CARGO_PKG_VERSION"),
            "verdict_counts": self.verdict_counts(),
            "line_errors": line_errors,
        })
    }
}

/// Frame bounds from the sufficient condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameBounds {
    /// `(1/α)(1−Δ)² esssup Σ_k |φ̂(ξ+βk)|²`, as printed.
    pub a: f64,
    /// `(1/α)(1+Δ)² essinf Σ_k |φ̂(ξ+βk)|²`, as printed.
    pub b: f64,
    /// Lower bound with essinf, the usual pairing.
    pub a_conventional: f64,
    /// Upper bound with esssup, the usual pairing.
    pub b_conventional: f64,
    pub delta: f64,
    pub m: f64,
    pub essinf_sum: f64,
    pub esssup_sum: f64,
}

pub const BOUNDS_PAIRING_NOTE: &str = "a/b pair (1-delta)^2 with esssup and (1+delta)^2 with essinf as printed; \
a_conventional/b_conventional use the usual lower-with-essinf, upper-with-esssup pairing";

pub fn frame_bounds(window: &Window, alpha: f64, beta: f64, opts: &LatticeOpts) -> Result<FrameBounds> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidInput("alpha and beta must be positive".into()));
    }
    let an = analyze(window, Side::Primal, 1.0 / beta, opts)?;
    let m = an.m.m;
    let delta = 2.0 * alpha * m.sqrt();
    if delta > 1.0 {
        return Err(Error::ConditionNotMet { delta });
    }
    // Φ_{1/β} = β Σ_k |φ̂(ξ+βk)|²
    let inf = an.stability.essinf_est / beta;
    let sup = an.stability.esssup_est / beta;
    let lo = (1.0 - delta).powi(2) / alpha;
    let hi = (1.0 + delta).powi(2) / alpha;
    Ok(FrameBounds {
        a: lo * sup,
        b: hi * inf,
        a_conventional: lo * inf,
        b_conventional: hi * sup,
        delta,
        m,
        essinf_sum: inf,
        esssup_sum: sup,
    })
}

/// `Δ_n(α, β) = 2α√M_{h_n,1/β}`; the pair is `(Δ_n(α,β), Δ_n(β,α))`.
pub fn hermite_delta(n: u32, alpha: f64, beta: f64, opts: &LatticeOpts) -> Result<(f64, f64)> {
    if n > 8 {
        return Err(Error::InvalidInput(format!("hermite index {n} above the cap 8")));
    }
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::InvalidInput("alpha and beta must be positive".into()));
    }
    let w = Window::hermite(n);
    let delta = |a: f64, b: f64| -> Result<f64> {
        Ok(2.0 * a * m_value_side(&w, Side::Primal, 1.0 / b, opts)?.m.sqrt())
    };
    Ok((delta(alpha, beta)?, delta(beta, alpha)?))
}

/// `α < 2σ` and `β < 1/(2σ)` for a window supported on `[−σ, σ]`.
pub fn painless_region(sigma: f64, alpha: f64, beta: f64) -> bool {
    alpha > 0.0 && beta > 0.0 && alpha < 2.0 * sigma && beta < 1.0 / (2.0 * sigma)
}

/// Membership in a cited region.
pub fn cited_overlay(tag: CitedTag, alpha: f64, beta: f64) -> bool {
    if !(alpha > 0.0 && beta > 0.0) {
        return false;
    }
    match tag {
        CitedTag::OfsbQ2 => {
            (2.0 / 9.0..=2.0 / 7.0).contains(&alpha)
                && beta >= 4.0 / (2.0 + 3.0 * alpha)
                && beta <= 2.0 / (1.0 + alpha)
                && beta > 1.0
        }
        CitedTag::SignRegionQm(m) => {
            let mf = m as f64;
            if !(1.0 / mf < beta && beta < 2.0 / mf) {
                return false;
            }
            let kmax = (1.0 / (alpha * beta)).ceil() as u64;
            (1..=kmax.max(1)).any(|k| {
                let ak = alpha * k as f64;
                mf / 2.0 <= ak && ak < 1.0 / beta
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToZero,
    ToInfinity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaStep {
    pub gamma: f64,
    pub delta_primal: Option<f64>,
    pub delta_dual: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaSearch {
    /// First dilation meeting a condition; `None` means not found within budget.
    pub gamma: Option<f64>,
    pub side: Option<Side>,
    /// Witnessing Δ, or the best Δ seen when not found.
    pub delta: f64,
    pub steps: Vec<GammaStep>,
}

/// `γ = γ₀·2^{∓k}`, `k = 0..=budget`, checking both conditions at each step.
pub fn gamma_search(
    window: &Window,
    alpha: f64,
    beta: f64,
    direction: Direction,
    budget: u32,
    opts: &LatticeOpts,
) -> Result<GammaSearch> {
    if !(alpha > 0.0 && beta > 0.0) || alpha * beta >= 1.0 {
        return Err(Error::InvalidInput(format!("need alpha, beta > 0 with alpha*beta < 1, got {alpha}, {beta}")));
    }
    let factor: f64 = match direction {
        Direction::ToZero => 0.5,
        Direction::ToInfinity => 2.0,
    };
    let mut steps = Vec::new();
    let mut best = f64::INFINITY;
    for k in 0..=budget {
        let gamma = factor.powi(k as i32);
        let w = window.dilate(gamma)?;
        let delta_primal = m_value_side(&w, Side::Primal, 1.0 / beta, opts).ok().map(|m| 2.0 * alpha * m.m.sqrt());
        let delta_dual = if window.kind.has_time_domain() {
            m_value_side(&w, Side::Dual, 1.0 / alpha, opts).ok().map(|m| 2.0 * beta * m.m.sqrt())
        } else {
            None
        };
        steps.push(GammaStep { gamma: w.gamma, delta_primal, delta_dual });
        for (d, side) in [(delta_primal, Side::Primal), (delta_dual, Side::Dual)] {
            if let Some(d) = d {
                if d < 1.0 {
                    return Ok(GammaSearch { gamma: Some(w.gamma), side: Some(side), delta: d, steps });
                }
                best = best.min(d);
            }
        }
    }
    Ok(GammaSearch { gamma: None, side: None, delta: best, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small() -> LatticeOpts {
        LatticeOpts::with_grid(512)
    }

    #[test]
    fn axis_includes_upper_end() {
        let a = axis(0.0, 2.0, 4);
        assert_eq!(a, vec![0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn painless_examples() {
        assert!(painless_region(1.0, 1.5, 0.4));
        assert!(!painless_region(1.0, 1.5, 0.6));
        assert!(!painless_region(1.0, 1.5, 0.5));
    }

    #[test]
    fn cited_examples() {
        assert!(cited_overlay(CitedTag::OfsbQ2, 0.25, 1.5));
        assert!(!cited_overlay(CitedTag::OfsbQ2, 0.3, 1.5));
        assert!(cited_overlay(CitedTag::SignRegionQm(2), 1.2, 0.7));
        assert!(!cited_overlay(CitedTag::SignRegionQm(2), 1.2, 0.4));
    }

    #[test]
    fn gaussian_cell() {
        let w = Window::gaussian();
        let col = LineStats::from(analyze(&w, Side::Primal, 2.0, &small()));
        let row = LineStats::from(analyze(&w, Side::Dual, 2.0, &small()));
        let c = cell_verdict(&w, 0.5, 0.5, &col, &row);
        assert_eq!(c.verdict, Verdict::FramePrimal);
        assert_eq!(c.delta_primal, c.delta_dual);
    }

    #[test]
    fn small_scan_respects_exclusions() {
        let g = scan(&Window::bspline(2), &ScanOpts { lattice: small(), ..ScanOpts::square(8) }).unwrap();
        for c in &g.cells {
            if c.alpha * c.beta >= 1.0 {
                assert_eq!(c.verdict, Verdict::Excluded(ExclusionReason::DensityTheorem));
            }
        }
        let j = g.beta_axis.iter().position(|b| *b == 2.0).unwrap();
        assert!(!g.columns[j].stable);
        let csv = g.to_csv();
        assert_eq!(csv.lines().count(), 65);
        assert!(csv.starts_with("alpha,beta,delta_primal,delta_dual,verdict\n0.25,0.25,"));
    }

    #[test]
    fn bounds_limits() {
        let w = Window::gaussian();
        let fb = frame_bounds(&w, 0.25, 1.0, &small()).unwrap();
        assert!(fb.a > 0.0 && fb.b > 0.0 && fb.a_conventional <= fb.b_conventional);
        let tiny = frame_bounds(&w, 1e-6, 1.0, &small()).unwrap();
        assert_relative_eq!(tiny.a * 1e-6, tiny.esssup_sum, max_relative = 1e-5);
        assert!(matches!(frame_bounds(&w, 1.5, 1.0, &small()), Err(Error::ConditionNotMet { .. })));
    }

    #[test]
    fn hermite_delta_symmetry() {
        let (d1, d2) = hermite_delta(1, 0.6, 0.9, &small()).unwrap();
        let (e1, e2) = hermite_delta(1, 0.9, 0.6, &small()).unwrap();
        assert_eq!(d1, e2);
        assert_eq!(d2, e1);
        let (g0, _) = hermite_delta(0, 0.6, 0.9, &small()).unwrap();
        let gm = m_value_side(&Window::gaussian(), Side::Primal, 1.0 / 0.9, &small()).unwrap().m;
        assert_relative_eq!(g0, 1.2 * gm.sqrt(), max_relative = 1e-12);
        assert!(hermite_delta(9, 0.5, 0.5, &small()).is_err());
    }

    #[test]
    fn gamma_search_gaussian() {
        let r = gamma_search(&Window::gaussian(), 0.9, 1.0, Direction::ToZero, 60, &small()).unwrap();
        assert!(r.gamma.is_some() && r.delta < 1.0, "{r:?}");
        assert!(gamma_search(&Window::gaussian(), 1.0, 1.0, Direction::ToZero, 5, &small()).is_err());
    }
}
