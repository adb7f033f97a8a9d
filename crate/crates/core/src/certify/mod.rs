//! Exact real-root certificates and the B-spline case analysis.
//!
//! Everything here runs in arbitrary-precision rational arithmetic; the only
//! floating-point entry point is [`mq2_closed_form`].
//!
//! - [`sign_changes`], [`budan_fourier`], [`sturm`]: root counting on intervals.
//! - [`trig_reduce`], [`trig_reduce_sin`]: cosine/sine series to polynomials in `u = cos y`.
//! - [`case_polys`]: the polynomials `P_β(u)` and `K_β(u)`.
//! - [`reproduce_tables`]: both sign tables with their Sturm resolutions.

pub mod poly;
mod tables;

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use poly::{parse_rational, q, qi, to_f64, RationalPoly, Q};
pub use tables::{reproduce_tables, SignClaim, TableRow};

/// Which counting rule produced a certificate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    BudanFourier,
    Sturm,
}

/// Sign-sequence record for a polynomial on an interval.
///
/// Budan–Fourier: the number of zeros in `(a, b]` is `zero_count_bound − 2k`.
/// Sturm: `zero_count_bound` is the exact number of distinct zeros in `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    #[serde(with = "rational_pair")]
    pub interval: (Q, Q),
    #[serde(with = "poly_coeffs")]
    pub poly: RationalPoly,
    /// Derivative sequence (Budan–Fourier) or Sturm chain, `f` first.
    #[serde(with = "poly_list")]
    pub sequence: Vec<RationalPoly>,
    #[serde(with = "rational_list")]
    pub left_seq: Vec<Q>,
    #[serde(with = "rational_list")]
    pub right_seq: Vec<Q>,
    pub v_left: usize,
    pub v_right: usize,
    pub zero_count_bound: i64,
}

impl Certificate {
    /// Textual layout of the appendix routines.
    pub fn to_layout(&self) -> String {
        let tag = match self.kind {
            CertificateKind::BudanFourier => ("VFB", "V_F"),
            CertificateKind::Sturm => ("VS", "V_S"),
        };
        let join = |v: &[Q]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        let _ = writeln!(out, "f(x) = {}", self.poly);
        let _ = writeln!(out, "interval: [{}, {}]", self.interval.0, self.interval.1);
        let _ = writeln!(out, "{}(a):[{}]", tag.0, join(&self.left_seq));
        let _ = writeln!(out, "{}(b):[{}]", tag.0, join(&self.right_seq));
        let _ = writeln!(out, "{}(a) = {}", tag.1, self.v_left);
        let _ = writeln!(out, "{}(b) = {}", tag.1, self.v_right);
        let _ = writeln!(out, "N = {}", self.zero_count_bound);
        out
    }
}

/// Sign changes of the sequence after dropping zeros.
pub fn sign_changes(seq: &[Q]) -> usize {
    let mut last = 0i8;
    let mut count = 0;
    for x in seq {
        let s = if x.is_positive() {
            1
        } else if x.is_negative() {
            -1
        } else {
            continue;
        };
        if last != 0 && s != last {
            count += 1;
        }
        last = s;
    }
    count
}

fn check_interval(a: &Q, b: &Q) -> Result<()> {
    if a < b {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("interval requires a < b, got [{a}, {b}]")))
    }
}

/// Budan–Fourier bound for the zeros of `f` in `(a, b]`.
pub fn budan_fourier(f: &RationalPoly, a: &Q, b: &Q) -> Result<Certificate> {
    check_interval(a, b)?;
    let sequence = f.derivatives();
    let left_seq: Vec<Q> = sequence.iter().map(|p| p.eval(a)).collect();
    let right_seq: Vec<Q> = sequence.iter().map(|p| p.eval(b)).collect();
    let v_left = sign_changes(&left_seq);
    let v_right = sign_changes(&right_seq);
    Ok(Certificate {
        kind: CertificateKind::BudanFourier,
        interval: (a.clone(), b.clone()),
        poly: f.clone(),
        sequence,
        left_seq,
        right_seq,
        v_left,
        v_right,
        zero_count_bound: v_left as i64 - v_right as i64,
    })
}

/// Sturm chain `f₀ = f`, `f₁ = f'`, `f_{j+1} = −rem(f_{j−1}, f_j)`.
///
/// Ends at a nonzero constant, or at the last nonzero member when a
/// remainder vanishes (then the last member is `gcd(f, f')`).
pub fn sturm_chain(f: &RationalPoly) -> Vec<RationalPoly> {
    let mut chain = vec![f.clone()];
    if f.degree().unwrap_or(0) == 0 {
        return chain;
    }
    chain.push(f.derivative());
    loop {
        let n = chain.len();
        if chain[n - 1].degree() == Some(0) {
            break;
        }
        let r = -&chain[n - 2].rem(&chain[n - 1]);
        if r.is_zero() {
            break;
        }
        chain.push(r);
    }
    chain
}

/// Exact count of distinct zeros of `f` in `[a, b]`.
pub fn sturm(f: &RationalPoly, a: &Q, b: &Q) -> Result<Certificate> {
    check_interval(a, b)?;
    if f.is_zero() {
        return Err(Error::EndpointZero);
    }
    if (f.eval(a) * f.eval(b)).is_zero() {
        return Err(Error::EndpointZero);
    }
    let sequence = sturm_chain(f);
    let left_seq: Vec<Q> = sequence.iter().map(|p| p.eval(a)).collect();
    let right_seq: Vec<Q> = sequence.iter().map(|p| p.eval(b)).collect();
    let v_left = sign_changes(&left_seq);
    let v_right = sign_changes(&right_seq);
    Ok(Certificate {
        kind: CertificateKind::Sturm,
        interval: (a.clone(), b.clone()),
        poly: f.clone(),
        sequence,
        left_seq,
        right_seq,
        v_left,
        v_right,
        zero_count_bound: v_left as i64 - v_right as i64,
    })
}

fn chebyshev(k: usize, first_kind: bool) -> Vec<BigInt> {
    // T: T₀ = 1, T₁ = u. U: U₀ = 1, U₁ = 2u. Both satisfy p_{k+1} = 2u p_k − p_{k−1}.
    let mut prev = vec![BigInt::one()];
    if k == 0 {
        return prev;
    }
    let mut cur = if first_kind {
        vec![BigInt::zero(), BigInt::one()]
    } else {
        vec![BigInt::zero(), BigInt::from(2)]
    };
    for _ in 1..k {
        let mut next = vec![BigInt::zero(); cur.len() + 1];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += c * 2;
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// Coefficients of `T_k(u)`, constant first.
pub fn chebyshev_t(k: usize) -> Vec<BigInt> {
    chebyshev(k, true)
}

/// Coefficients of `U_k(u)`, constant first.
pub fn chebyshev_u(k: usize) -> Vec<BigInt> {
    chebyshev(k, false)
}

/// `p` with `Σ_k c_k cos(k y) = p(cos y)`; `cos_series[k]` is `c_k`.
pub fn trig_reduce(cos_series: &[Q]) -> RationalPoly {
    let mut acc = RationalPoly::zero();
    for (k, c) in cos_series.iter().enumerate() {
        let t = RationalPoly::new(chebyshev_t(k).into_iter().map(Q::from_integer).collect());
        acc = &acc + &t.scale(c);
    }
    acc
}

/// `p` with `Σ_k c_k sin(k y) = p(cos y)·sin y`; `sin_series[k-1]` is `c_k`.
pub fn trig_reduce_sin(sin_series: &[Q]) -> RationalPoly {
    let mut acc = RationalPoly::zero();
    for (j, c) in sin_series.iter().enumerate() {
        let u = RationalPoly::new(chebyshev_u(j).into_iter().map(Q::from_integer).collect());
        acc = &acc + &u.scale(c);
    }
    acc
}

/// Parameter ranges of the piecewise analysis of `B_{Q₂,1/β}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// `1 ≤ β ≤ 3/2`, polynomial `P_β`.
    Case2,
    /// `3/2 ≤ β ≤ 2`, polynomial `K_β`.
    Case3,
}

fn beta_poly(c: &[i64]) -> RationalPoly {
    RationalPoly::from_ints(c)
}

/// `a₁, a₂, a₃` as polynomials in β.
pub fn case2_coefficients() -> [RationalPoly; 3] {
    [
        beta_poly(&[27, -102, 156, -114, 36]),
        beta_poly(&[0, -16, 48, -56, 24]),
        beta_poly(&[9, -35, 54, -40, 12]),
    ]
}

/// `b₁, …, b₅` as polynomials in β.
pub fn case3_coefficients() -> [RationalPoly; 5] {
    [
        beta_poly(&[-48, 83, 6, -74, 36]),
        beta_poly(&[144, -400, 456, -272, 72]),
        beta_poly(&[9, -116, 216, -166, 48]),
        beta_poly(&[72, -192, 204, -108, 24]),
        beta_poly(&[-15, 37, -30, 8]),
    ]
}

/// `P_β(u)` (Case2) or `K_β(u)` (Case3) at an exact β.
///
/// The closed intervals `[1, 3/2]` and `[3/2, 2]` are accepted so the
/// tabulated endpoints can be evaluated; anything else is rejected.
pub fn case_polys(case: Case, beta: &Q) -> Result<RationalPoly> {
    let (lo, hi, coeffs): (Q, Q, Vec<RationalPoly>) = match case {
        Case::Case2 => (qi(1), q(3, 2), case2_coefficients().to_vec()),
        Case::Case3 => (q(3, 2), qi(2), case3_coefficients().to_vec()),
    };
    if beta < &lo || beta > &hi {
        return Err(Error::InvalidInput(format!(
            "beta = {beta} outside [{lo}, {hi}] for {case:?}"
        )));
    }
    let series: Vec<Q> = coeffs.iter().map(|c| c.eval(beta)).collect();
    Ok(trig_reduce_sin(&series))
}

/// Centered B-spline `Q_m` at a rational point, by truncated powers.
fn bspline_exact(m: u32, x: &Q) -> Q {
    let half = q(m as i64, 2);
    let mut acc = Q::zero();
    let mut binom = BigInt::one();
    for k in 0..=m {
        let t = x + &half - qi(k as i64);
        if t.is_positive() {
            let term = Q::from_integer(binom.clone()) * num_traits::pow(t, (m - 1) as usize);
            if k % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        binom = binom * BigInt::from(m - k) / BigInt::from(k + 1);
    }
    let fact: BigInt = (1..m).map(BigInt::from).product();
    acc / Q::from_integer(fact)
}

/// Closed form of `M_{Q₂,1/β}` for `0 < β < 2`.
///
/// The ratio is evaluated exactly at the binary value of `β` and rounded
/// once; in floating point both numerator and denominator cancel as β → 2.
pub fn mq2_closed_form(beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta < 2.0) {
        return Err(Error::InvalidInput(format!("beta = {beta} outside (0, 2)")));
    }
    let b = Q::from_float(beta).expect("finite beta");
    let r = b.recip();
    let one = Q::one();
    let q2 = |x: Q| bspline_exact(2, &x);
    let q4 = |x: Q| bspline_exact(4, &x);
    let num = &one - qi(2) * q2(r.clone()) + q2(&one - &r) - q2(&one - qi(2) * &r) + q2(&one - qi(3) * &r);
    let den = q(1, 3) - q4(r.clone()) + q4(qi(2) * &r) - q4(qi(3) * &r);
    Ok(to_f64(&(num / den)) / (4.0 * std::f64::consts::PI * std::f64::consts::PI))
}

/// `π(2β−1)(6β²−4β+1)/(3β⁴)`, the sign-carrying factor for `1/2 < β ≤ 1`.
pub fn case1_factor(beta: f64) -> f64 {
    std::f64::consts::PI * (2.0 * beta - 1.0) * (6.0 * beta * beta - 4.0 * beta + 1.0)
        / (3.0 * beta.powi(4))
}

mod rational_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Q], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Q>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter()
            .map(|s| {
                parse_rational(s)
                    .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
            })
            .collect()
    }
}

mod rational_pair {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &(Q, Q), s: S) -> std::result::Result<S::Ok, S::Error> {
        rational_list::serialize(&[v.0.clone(), v.1.clone()], s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<(Q, Q), D::Error> {
        let v = rational_list::deserialize(d)?;
        match <[Q; 2]>::try_from(v) {
            Ok([a, b]) => Ok((a, b)),
            Err(_) => Err(serde::de::Error::custom("interval needs two endpoints")),
        }
    }
}

mod poly_coeffs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &RationalPoly, s: S) -> std::result::Result<S::Ok, S::Error> {
        rational_list::serialize(p.coeffs(), s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<RationalPoly, D::Error> {
        Ok(RationalPoly::new(rational_list::deserialize(d)?))
    }
}

mod poly_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[RationalPoly],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        let raw: Vec<Vec<String>> = v
            .iter()
            .map(|p| p.coeffs().iter().map(|c| c.to_string()).collect())
            .collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<RationalPoly>, D::Error> {
        let raw: Vec<Vec<String>> = Vec::deserialize(d)?;
        raw.iter()
            .map(|cs| {
                cs.iter()
                    .map(|s| {
                        parse_rational(s)
                            .ok_or_else(|| serde::de::Error::custom(format!("bad rational {s:?}")))
                    })
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map(RationalPoly::new)
            })
            .collect()
    }
}
