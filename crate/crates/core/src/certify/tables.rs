//! Sign tables for `P_β` and `K_β` at the endpoints `u = ±1`.
//!
//! Each row polynomial is derived here from the case coefficients: the
//! relevant `u`-derivative of `P_β`/`K_β` at `u = ±1` is formed as a
//! polynomial in β and divided exactly by the row's sign-known factor.

use serde::{Deserialize, Serialize};

use super::{
    budan_fourier, case2_coefficients, case3_coefficients, chebyshev_u, q, qi, sturm,
    Certificate, RationalPoly, Q,
};

/// Sign of a row polynomial on its half-open interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignClaim {
    Positive,
    Negative,
    /// Budan–Fourier leaves room for zeros; see the Sturm resolution.
    Undetermined,
}

/// One row block of a sign table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub table: u8,
    pub name: String,
    /// e.g. `K'(-1) = 8(2-beta)*p4(beta)`.
    pub relation: String,
    pub budan_fourier: Certificate,
    pub claim: SignClaim,
    /// Present for rows Budan–Fourier cannot decide.
    pub sturm: Option<Certificate>,
}

/// A polynomial in `u` whose coefficients are polynomials in β.
struct CasePoly(Vec<RationalPoly>);

impl CasePoly {
    /// `Σ_k c_k(β) U_{k-1}(u)`.
    fn from_sin_series(coeffs: &[RationalPoly]) -> Self {
        let mut out: Vec<RationalPoly> = Vec::new();
        for (j, c) in coeffs.iter().enumerate() {
            for (k, u) in chebyshev_u(j).into_iter().enumerate() {
                if out.len() <= k {
                    out.resize(k + 1, RationalPoly::zero());
                }
                out[k] = &out[k] + &c.scale(&Q::from_integer(u));
            }
        }
        CasePoly(out)
    }

    /// `∂ᵈ/∂uᵈ` at a fixed `u`, as a polynomial in β.
    fn derivative_at(&self, d: usize, u: &Q) -> RationalPoly {
        let mut acc = RationalPoly::zero();
        for (k, c) in self.0.iter().enumerate().skip(d) {
            // d-th derivative of u^k is k!/(k-d)! u^(k-d)
            let falling: i64 = ((k - d + 1)..=k).map(|x| x as i64).product();
            let mut pow = qi(1);
            for _ in 0..(k - d) {
                pow *= u;
            }
            acc = &acc + &c.scale(&(qi(falling) * pow));
        }
        acc
    }
}

struct RowSpec {
    name: &'static str,
    relation: &'static str,
    derivative: usize,
    at: i64,
    factor: RationalPoly,
}

fn lin(c0: i64, c1: i64) -> RationalPoly {
    RationalPoly::from_ints(&[c0, c1])
}

fn konst(c: i64) -> RationalPoly {
    RationalPoly::from_ints(&[c])
}

fn build_rows(
    table: u8,
    poly: &CasePoly,
    specs: Vec<RowSpec>,
    lo: &Q,
    hi: &Q,
) -> Vec<TableRow> {
    specs
        .into_iter()
        .map(|s| {
            let value = poly.derivative_at(s.derivative, &qi(s.at));
            let row = value
                .div_exact(&s.factor)
                .unwrap_or_else(|| panic!("row {} factor does not divide", s.name));
            let bf = budan_fourier(&row, lo, hi).expect("table interval is ordered");
            let (claim, resolution) = if bf.zero_count_bound == 0 {
                let sign = if row.eval(hi) > qi(0) {
                    SignClaim::Positive
                } else {
                    SignClaim::Negative
                };
                (sign, None)
            } else {
                (SignClaim::Undetermined, sturm(&row, lo, hi).ok())
            };
            TableRow {
                table,
                name: s.name.to_string(),
                relation: s.relation.to_string(),
                budan_fourier: bf,
                claim,
                sturm: resolution,
            }
        })
        .collect()
}

/// Both tables: Table 1 rows `q0..q4` on `(1, 3/2]`, Table 2 rows `p0..p5` on `(3/2, 2]`.
pub fn reproduce_tables() -> Vec<TableRow> {
    let p = CasePoly::from_sin_series(&case2_coefficients());
    let k = CasePoly::from_sin_series(&case3_coefficients());
    let table1 = vec![
        RowSpec { name: "q0", relation: "P(1) = q0(beta)", derivative: 0, at: 1, factor: konst(1) },
        RowSpec { name: "q1", relation: "P'(1) = 24(beta-1)*q1(beta)", derivative: 1, at: 1, factor: lin(-24, 24) },
        RowSpec { name: "q2", relation: "P''(1) = 8(beta-1)*q2(beta)", derivative: 2, at: 1, factor: lin(-8, 8) },
        RowSpec { name: "q3", relation: "P(-1) = (2-beta)*q3(beta)", derivative: 0, at: -1, factor: lin(2, -1) },
        RowSpec { name: "q4", relation: "P'(-1) = 8(beta-1)*q4(beta)", derivative: 1, at: -1, factor: lin(-8, 8) },
    ];
    let table2 = vec![
        RowSpec { name: "p0", relation: "K(1) = 4*p0(beta)", derivative: 0, at: 1, factor: konst(4) },
        RowSpec { name: "p1", relation: "K'(1) = 8*p1(beta)", derivative: 1, at: 1, factor: konst(8) },
        RowSpec { name: "p2", relation: "K''(1) = 8*p2(beta)", derivative: 2, at: 1, factor: konst(8) },
        RowSpec {
            name: "p3",
            relation: "K'''(1) = 192(beta-1)(2beta-3)*p3(beta)",
            derivative: 3,
            at: 1,
            factor: &lin(-192, 192) * &lin(-3, 2),
        },
        RowSpec { name: "p4", relation: "K'(-1) = 8(2-beta)*p4(beta)", derivative: 1, at: -1, factor: lin(16, -8) },
        RowSpec { name: "p5", relation: "K''(-1) = 8(2-beta)*p5(beta)", derivative: 2, at: -1, factor: lin(16, -8) },
    ];
    let mut rows = build_rows(1, &p, table1, &qi(1), &q(3, 2));
    rows.extend(build_rows(2, &k, table2, &q(3, 2), &qi(2)));
    rows
}
