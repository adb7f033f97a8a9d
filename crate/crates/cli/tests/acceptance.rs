//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Runs without the libtest harness so the lines are printed even on success.

use std::process::Command;
use std::time::{Duration, Instant};

use gabor_core::certify::{
    self, case_polys, mq2_closed_form, parse_rational, qi, reproduce_tables, Case, RationalPoly, SignClaim, Q,
};
use gabor_core::frameset::{self, Direction, ExclusionReason, ScanOpts, Verdict};
use gabor_core::lattice::m_value;
use gabor_core::sampling::{self, SamplingSet};
use gabor_core::special::{self, limit_m_value, LimitKind, SIN_BAND};
use gabor_core::{Error, LatticeOpts, Window};
use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    ensure(start.elapsed() < limit, || format!("took {:?}, limit {:?}", start.elapsed(), limit))
}

fn rat(s: &str) -> Q {
    parse_rational(s).unwrap_or_else(|| panic!("bad literal {s}"))
}

fn rats(v: &[&str]) -> Vec<Q> {
    v.iter().map(|s| rat(s)).collect()
}

fn c01_constant_regime() -> Check {
    let start = Instant::now();
    let target = 3.0 / (4.0 * std::f64::consts::PI.powi(2));
    let mut worst = 0.0f64;
    for beta in [0.1, 0.3, 0.5] {
        let m = m_value(&Window::bspline(2), 1.0 / beta, &LatticeOpts::default()).map_err(|e| e.to_string())?;
        worst = worst.max((m - target).abs() / target);
    }
    ensure(worst <= 1e-10, || format!("relative error {worst:e}"))?;
    within(Duration::from_secs(1), start)?;
    Ok(format!("max rel err {worst:.1e} in {:?}", start.elapsed()))
}

fn c02_closed_form() -> Check {
    let start = Instant::now();
    let opts = LatticeOpts::default();
    let mut worst = 0.0f64;
    let mut n = 0;
    // k/51 never lands within 1e-3 of 1/2, 1 or 3/2
    for k in 1..=50 {
        let beta = k as f64 * 2.0 / 51.0;
        if [0.5, 1.0, 1.5].iter().any(|b| (beta - b).abs() < 1e-3) {
            continue;
        }
        let cf = mq2_closed_form(beta).map_err(|e| e.to_string())?;
        let m = m_value(&Window::bspline(2), 1.0 / beta, &opts).map_err(|e| e.to_string())?;
        worst = worst.max((cf - m).abs());
        n += 1;
    }
    ensure(n == 50, || format!("only {n} betas"))?;
    ensure(worst <= 1e-8, || format!("max abs diff {worst:e}"))?;
    within(Duration::from_secs(30), start)?;
    Ok(format!("{n} betas, max abs diff {worst:.1e}"))
}

/// Printed sign-table values at both endpoints, lowest derivative first.
const TABLE: &[(&str, &[&str], &[&str], i64)] = &[
    ("q0", &["3", "31", "192", "804", "2880"], &["66.75", "287.5", "954", "2244", "2880"], 0),
    ("q1", &["1", "4", "12", "36"], &["5.25", "14.5", "30", "36"], 0),
    ("q2", &["1", "6", "16", "72"], &["7.5", "23", "52", "72"], 0),
    ("q3", &["3", "2", "4", "-144"], &["1.5", "-14", "-68", "-144"], 0),
    ("q4", &["1", "0", "4", "-36"], &["0.75", "-2.5", "-14", "-36"], 0),
    ("p0", &["16.6875", "134.75", "558", "1518", "2520"], &["192", "656", "1632", "2778", "2520"], 0),
    ("p1", &["7.875", "128", "606", "1752", "3024"], &["192", "713", "1860", "3264", "3024"], 0),
    ("p2", &["3.75", "170.5", "990", "3036", "4608"], &["288", "1141", "3084", "5340", "4608"], 0),
    ("p3", &["5.75", "11", "6"], &["12", "14", "6"], 0),
    ("p4", &["0.75", "-0.5", "34", "-180"], &["1", "-6", "-56", "-180"], 2),
    ("p5", &["7.5", "-4", "-52", "576"], &["11", "42", "236", "576"], 2),
];

fn c03_tables() -> Check {
    let rows = reproduce_tables();
    ensure(rows.len() == TABLE.len(), || format!("{} rows", rows.len()))?;
    let mut values = 0;
    for (name, left, right, n) in TABLE {
        let r = rows.iter().find(|r| r.name == *name).ok_or(format!("missing row {name}"))?;
        let bf = &r.budan_fourier;
        ensure(bf.left_seq == rats(left), || format!("{name} left {:?}", bf.left_seq))?;
        ensure(bf.right_seq == rats(right), || format!("{name} right {:?}", bf.right_seq))?;
        ensure(bf.zero_count_bound == *n, || format!("{name} N = {}", bf.zero_count_bound))?;
        let expected = if *n == 0 { SignClaim::Positive } else { SignClaim::Undetermined };
        ensure(r.claim == expected, || format!("{name} claim {:?}", r.claim))?;
        values += left.len() + right.len();
    }
    Ok(format!("{} rows, {values} exact values", rows.len()))
}

fn c04_sturm() -> Check {
    let rows = reproduce_tables();
    let beta = RationalPoly::x();
    let lin = |a: &str, b: &str| &beta.scale(&rat(a)) + &RationalPoly::constant(rat(b));
    let expect = [
        ("p4", lin("-244/135", "269/135"), "840645/29768", ["3/4", "-1/2", "-97/135"], ["1", "-6", "-73/45"]),
        ("p5", lin("457/108", "-2965/216"), "-163164888/208849", ["15/2", "-4", "-797/108"], ["11", "42", "-379/72"]),
    ];
    for (name, second, last, left, right) in expect {
        let r = rows.iter().find(|r| r.name == name).ok_or(format!("missing {name}"))?;
        let s = r.sturm.as_ref().ok_or(format!("{name} has no Sturm resolution"))?;
        ensure(s.sequence.len() == 4, || format!("{name} chain length {}", s.sequence.len()))?;
        ensure(s.sequence[2] == second, || format!("{name} third term {}", s.sequence[2]))?;
        ensure(s.sequence[3] == RationalPoly::constant(rat(last)), || format!("{name} last {}", s.sequence[3]))?;
        let mut l = rats(&left);
        l.push(rat(last));
        let mut rr = rats(&right);
        rr.push(rat(last));
        ensure(s.left_seq == l && s.right_seq == rr, || format!("{name} endpoint values differ"))?;
        ensure(s.zero_count_bound == 0, || format!("{name} N = {}", s.zero_count_bound))?;
    }
    Ok("N = 0 for both chains, all intermediate terms exact".into())
}

/// `count` reduced fractions `p/q` with `q ≤ 64` above `lo` and below (or at, if `closed`) `hi`,
/// evenly picked from the full sorted set.
fn dense_rationals(lo: &Q, hi: &Q, closed: bool, count: usize) -> Vec<Q> {
    let mut all = Vec::new();
    for d in 1..=64i64 {
        for n in 1..=(2 * d) {
            if n.gcd(&d) == 1 {
                let r = Q::new(n.into(), d.into());
                if &r > lo && (&r < hi || (closed && &r == hi)) {
                    all.push(r);
                }
            }
        }
    }
    all.sort();
    let step = all.len() as f64 / count as f64;
    let mut picked: Vec<Q> = (0..count).map(|i| all[((i as f64 + 0.5) * step) as usize].clone()).collect();
    if closed && !picked.contains(hi) {
        *picked.last_mut().unwrap() = hi.clone();
    }
    picked
}

fn c05_case_positivity() -> Check {
    let start = Instant::now();
    let (m1, p1) = (qi(-1), qi(1));
    let mut total = 0;
    for (case, lo, hi, closed, at) in [
        (Case::Case2, qi(1), certify::q(3, 2), true, qi(1)),
        (Case::Case3, certify::q(3, 2), qi(2), false, qi(-1)),
    ] {
        let betas = dense_rationals(&lo, &hi, closed, 512);
        ensure(betas.len() == 512, || "sample size".into())?;
        for b in &betas {
            let p = case_polys(case, b).map_err(|e| e.to_string())?;
            let s = certify::sturm(&p, &m1, &p1).map_err(|e| format!("beta = {b}: {e}"))?;
            ensure(s.zero_count_bound == 0, || format!("{case:?} beta = {b}: {} zeros", s.zero_count_bound))?;
            ensure(p.eval(&at) > qi(0), || format!("{case:?} beta = {b}: endpoint sign"))?;
            total += 1;
        }
    }
    within(Duration::from_secs(60), start)?;
    Ok(format!("{total} exact betas in {:?}", start.elapsed()))
}

fn c06_gaussian_limit() -> Check {
    let opts = LatticeOpts::default();
    let g = Window::gaussian();
    let mut worst = 0.0f64;
    for beta in [0.5, 1.0, 1.5] {
        let limit = beta * beta / 4.0;
        for gamma in [1.0, 0.5, 0.2, 0.1, 0.05] {
            let m = limit_m_value(LimitKind::TypeIGammaToZero, &g, beta, gamma, &opts).map_err(|e| e.to_string())?;
            ensure(m >= limit * (1.0 - 1e-12), || format!("beta {beta} gamma {gamma}: M = {m} below {limit}"))?;
            if gamma == 0.05 {
                worst = worst.max((m - limit).abs());
            }
        }
    }
    ensure(worst <= 1e-6, || format!("|M - beta^2/4| = {worst:e} at gamma 0.05"))?;
    Ok(format!("max |M - beta^2/4| = {worst:.1e} at gamma 0.05"))
}

fn c07_exp_limit() -> Check {
    let m = limit_m_value(LimitKind::TypeIIGammaToInf, &Window::two_sided_exp(), 1.0, 50.0, &LatticeOpts::default())
        .map_err(|e| e.to_string())?;
    let d = (m - 0.25).abs();
    ensure(d <= 1e-4, || format!("|M - 1/4| = {d:e}"))?;
    Ok(format!("|M - 1/4| = {d:.1e}"))
}

fn c08_profile_maxima() -> Check {
    let g = 4096;
    let step = 1.0 / g as f64;
    let mut profiles = Vec::new();
    for rho in [0.5, 1.0, 1.9] {
        profiles.push((format!("gauss rho {rho}"), special::gauss_profile(rho, g)));
    }
    for rho in [0.74, 1.0, 2.0] {
        profiles.push((format!("exp rho {rho}"), special::exp_profile(rho, g)));
    }
    for (a, b) in [(1.0, 2.0), (1.0, -3.0)] {
        for rho in [0.5, 2.0] {
            profiles.push((format!("two-pole ({a},{b}) rho {rho}"), special::twopole_profile(a, b, rho, g)));
        }
    }
    for (name, p) in &profiles {
        let p = p.as_ref().map_err(|e| format!("{name}: {e}"))?;
        let am = p.argmax();
        ensure((am - 0.5).abs() <= step, || format!("{name}: argmax {am}"))?;
    }
    Ok(format!("{} profiles peak at w = 1/2", profiles.len()))
}

fn c09_theta_bounds() -> Check {
    let mut checked = 0;
    for t in [0.1, 0.5, 1.0, 2.0, 5.0] {
        for i in 0..1000 {
            let w = i as f64 / 1000.0;
            if (2.0 * std::f64::consts::PI * w).sin().abs() <= SIN_BAND {
                continue;
            }
            let ev = special::theta_eval(w, t).map_err(|e| e.to_string())?;
            ensure(ev.lower <= ev.q_ratio && ev.q_ratio <= ev.upper, || {
                format!("t {t} w {w}: {} not in [{}, {}]", ev.q_ratio, ev.lower, ev.upper)
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} points inside [A(t), B(t)]"))
}

fn c10_monotone_chains() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = f64::NEG_INFINITY;
    let mut runs = 0;
    for base in [Window::gaussian(), Window::two_sided_exp()] {
        for _ in 0..10 {
            let len = rng.gen_range(1..=4);
            let factors: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let h = rng.gen_range(0.5..2.0);
            let rep = special::tp_monotonicity_check(&base, &factors, h, 512).map_err(|e| e.to_string())?;
            ensure(rep.monotone, || format!("{} {factors:?} h {h}: violation {}", base, rep.max_violation))?;
            worst = worst.max(rep.step_max_increase.iter().copied().fold(f64::NEG_INFINITY, f64::max));
            runs += 1;
        }
    }
    Ok(format!("{runs} chains, largest step increase {worst:.1e}"))
}

fn c11_bernstein() -> Check {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut n = 0;
    for m in [2, 3, 4] {
        let w = Window::bspline(m);
        for h in [0.5, 1.0] {
            let bound = m_value(&w, h, &LatticeOpts::default()).map_err(|e| e.to_string())?.sqrt();
            for seed in 0..200 {
                let f = sampling::synth(&w, h, 12, seed).map_err(|e| e.to_string())?;
                let r = sampling::bernstein_ratio(&f).map_err(|e| e.to_string())?;
                ensure(r <= bound * (1.0 + 1e-8), || format!("Q{m} h {h} seed {seed}: {r} > {bound}"))?;
                worst = worst.max(r / bound);
                n += 1;
            }
        }
    }
    within(Duration::from_secs(120), start)?;
    Ok(format!("{n} splines, max ratio/bound {worst:.4} in {:?}", start.elapsed()))
}

fn c12_sampling() -> Check {
    let mut n = 0;
    for seed in 0..100u64 {
        let m_order = 2 + (seed % 3) as u32;
        let w = Window::bspline(m_order);
        let f = sampling::synth(&w, 1.0, 8, seed).map_err(|e| e.to_string())?;
        let m = m_value(&w, 1.0, &LatticeOpts::default()).map_err(|e| e.to_string())?;
        let limit = 1.0 / (2.0 * m.sqrt());
        let jitter = 0.3;
        // gaps stay below step·(1 + 2·jitter)
        let step = (0.2 + 0.6 * (seed as f64 / 100.0)) * limit / (1.0 + 2.0 * jitter);
        let s = SamplingSet::covering(&f, step, jitter, seed).map_err(|e| e.to_string())?;
        ensure(s.delta < limit, || format!("seed {seed}: delta {} not below {limit}", s.delta))?;
        let rep = sampling::sampling_bounds_check_with_m(&f, &s, m).map_err(|e| e.to_string())?;
        ensure(rep.lower_ok && rep.upper_ok, || format!("seed {seed}: {rep:?}"))?;
        n += 1;
    }
    let w = Window::bspline(3);
    let f = sampling::synth(&w, 1.0, 8, 7).map_err(|e| e.to_string())?;
    let m = m_value(&w, 1.0, &LatticeOpts::default()).map_err(|e| e.to_string())?;
    let coarse = SamplingSet::covering(&f, 1.0 / (2.0 * m.sqrt()), 0.0, 7).map_err(|e| e.to_string())?;
    match sampling::sampling_bounds_check_with_m(&f, &coarse, m) {
        Err(Error::DensityTooLow { .. }) => {}
        other => return Err(format!("expected DensityTooLow, got {other:?}")),
    }
    Ok(format!("{n} pairs satisfy both sides; DensityTooLow raised at the threshold"))
}

fn c13_region() -> Check {
    let grid = frameset::scan(&Window::bspline(2), &ScanOpts::default()).map_err(|e| e.to_string())?;
    for c in &grid.cells {
        ensure(!(c.verdict.is_frame() && c.alpha * c.beta >= 1.0), || format!("frame verdict at {c:?}"))?;
    }
    let j = grid.beta_axis.iter().position(|b| *b == 2.0).ok_or("no beta = 2 column")?;
    ensure(!grid.columns[j].stable, || "beta = 2 column reported stable".into())?;
    let mut unstable = 0;
    for i in 0..grid.alpha_axis.len() {
        let v = grid.cell(i, j).verdict;
        ensure(matches!(v, Verdict::Excluded(_)), || format!("beta = 2 cell {i} is {v:?}"))?;
        unstable += (v == Verdict::Excluded(ExclusionReason::UnstableGenerator)) as usize;
    }
    ensure(unstable > 0, || "no unstable_generator cells".into())?;
    let mut painless = 0;
    let mut primal_only = 0;
    for c in &grid.cells {
        if frameset::painless_region(1.0, c.alpha, c.beta) && c.alpha * c.beta < 1.0 {
            painless += 1;
            ensure(c.verdict.is_frame(), || format!("painless cell not certified: {c:?}"))?;
            primal_only += (c.verdict == Verdict::FramePrimal) as usize;
        }
    }
    Ok(format!(
        "beta = 2 excluded ({unstable} unstable); {painless} painless cells certified ({primal_only} by the primal condition)"
    ))
}

fn c14_gamma_search() -> Check {
    let opts = LatticeOpts::default();
    let mut found = Vec::new();
    for (a, b) in [(0.9, 1.0), (0.5, 1.9), (1.5, 0.6)] {
        for (w, dir) in [(Window::gaussian(), Direction::ToZero), (Window::two_sided_exp(), Direction::ToInfinity)] {
            let r = frameset::gamma_search(&w, a, b, dir, 60, &opts).map_err(|e| e.to_string())?;
            let g = r.gamma.ok_or_else(|| format!("{w} ({a},{b}): not found, best {}", r.delta))?;
            found.push(format!("{}:{g}", w.kind.name()));
        }
    }
    Ok(format!("all found, gammas [{}]", found.join(" ")))
}

fn c15_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, threads: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let st = Command::new(env!("CARGO_BIN_EXE_gabor"))
            .args(["region", "--window", "bspline:3", "--res", "60", "--grid", "1024", "--out"])
            .arg(&out)
            .env("GABOR_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(st.status.success(), || String::from_utf8_lossy(&st.stderr).into_owned())?;
        std::fs::read(&out).map_err(|e| e.to_string())
    };
    let a = run("a.csv", "1")?;
    let b = run("b.csv", "4")?;
    let c = run("c.csv", "4")?;
    ensure(a == b && b == c, || "CSV bytes differ between runs".into())?;
    Ok(format!("3 runs, {} identical bytes", a.len()))
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: &[Criterion] = &[
        ("B-spline constant regime", c01_constant_regime),
        ("closed form vs grid", c02_closed_form),
        ("sign tables exact", c03_tables),
        ("Sturm resolutions", c04_sturm),
        ("case positivity", c05_case_positivity),
        ("Gaussian dilation limit", c06_gaussian_limit),
        ("two-sided exponential limit", c07_exp_limit),
        ("ratio profile maxima", c08_profile_maxima),
        ("theta bounds", c09_theta_bounds),
        ("monotone chains", c10_monotone_chains),
        ("Bernstein suite", c11_bernstein),
        ("sampling suite", c12_sampling),
        ("region scan sanity", c13_region),
        ("gamma search", c14_gamma_search),
        ("determinism", c15_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match res {
            Ok(detail) => println!("acceptance {:>2} PASS {name}: {detail} [{ms} ms]", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} FAIL {name}: {why} [{ms} ms]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
