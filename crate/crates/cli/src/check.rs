//! Invariant suites run by `check` on one filtration.
//!
//! Always run: superadditivity of the top values, adapted bases attaining
//! `Q_m`, other bases bounding it, strict monotonicity of `Ψ_m`, Jensen on
//! `ν_m`, the shift rule for `S̃`, and the `d₂` axioms. With a `"limit"`
//! measure the convergence table is checked too, and an `"expected"` block
//! pins values the job knows in advance.

use dhkit::convergence::convergence_report;
use dhkit::filtration::{
    d2_squared_level, empirical_dh, psi_m, q_m, q_of_basis, sqrt_triangle_holds, GradedFiltration,
};
use dhkit::functionals::{ek_from_minima_polynomial, s_tilde};
use dhkit::io::{self, number};
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::commands::superadditivity_warnings;
use crate::job::{degree_list, input_err, Job, Measure, Q};
use crate::output::Report;
use crate::Failure;

/// Levels above this dimension skip the basis and distance suites, whose
/// exact linear algebra grows quickly with the dimension.
const MAX_BASIS_DIM: usize = 48;
/// Mixed bases tried per level.
const MIXES: usize = 6;

struct Suite {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn suite(name: &'static str, passed: bool, detail: impl Into<String>) -> Suite {
    Suite {
        name,
        passed,
        detail: detail.into(),
    }
}

fn close(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * y.abs().max(1.0)
}

/// Unit upper-triangular integer mix `M·B` of the adapted basis, the
/// entries following a fixed pattern so runs are reproducible.
fn mixed_basis(basis: &[Vec<Q>], k: usize) -> Vec<Vec<Q>> {
    let n = basis.len();
    (0..n)
        .map(|i| {
            let mut row = basis[i].clone();
            for (j, bj) in basis.iter().enumerate().skip(i + 1) {
                let c = ((i * 7 + j * 3 + k * 5) % 5) as i64 - 2;
                if c != 0 {
                    let c = Q::from_integer(c.into());
                    for (x, b) in row.iter_mut().zip(bj) {
                        *x += c.clone() * b;
                    }
                }
            }
            row
        })
        .collect()
}

pub fn run(job: &Job) -> Result<Report, Failure> {
    let f = job.filtration("filtration")?;
    let degrees = job.degrees(&[&f])?;
    let n = job.usize_or("n", 1)?;
    let tol = job.tol_or(1e-10);
    let small: Vec<u32> = degrees
        .iter()
        .copied()
        .filter(|&m| f.level(m).is_ok_and(|l| l.dim() <= MAX_BASIS_DIM))
        .collect();

    let mut suites = vec![
        superadditivity(&f),
        bases(&f, &small, tol)?,
        psi_monotone(&f, &degrees)?,
        jensen_and_shift(&f, &degrees, n, tol)?,
        distance_axioms(&f, &small)?,
    ];
    if job.get("limit").is_some() {
        let lim = job.measure("limit")?;
        let w1c = match job.get("expected").and_then(|e| e.get("w1_constant")) {
            Some(v) => Some(io::real::<f64>(v, "$.expected.w1_constant")?),
            None => None,
        };
        suites.push(convergence(&f, &lim, &degrees, w1c)?);
    }
    if let Some(e) = job.get("expected") {
        suites.extend(expected(job, &f, e, n, tol)?);
    }

    let failed: Vec<&str> = suites.iter().filter(|s| !s.passed).map(|s| s.name).collect();
    let mut r = Report::new("check", tol);
    r.warnings = superadditivity_warnings(&f);
    r.set(
        "suites",
        Value::Array(
            suites
                .iter()
                .map(|s| json!({"name": s.name, "passed": s.passed, "detail": s.detail}))
                .collect(),
        ),
    );
    r.set("passed", json!(failed.is_empty()));
    r.set("degrees", json!(degrees));
    r.set("filtration", json!(f.label));
    let mut csv = String::from("suite,passed,detail\n");
    for s in &suites {
        csv.push_str(&format!("{},{},\"{}\"\n", s.name, s.passed, s.detail.replace('"', "\"\"")));
    }
    r.csv = csv;
    if !failed.is_empty() {
        r.failed = Some(format!("invariant suites failed: {}", failed.join(", ")));
    }
    Ok(r)
}

fn superadditivity(f: &GradedFiltration<Q>) -> Suite {
    let bad = f.superadditivity_violations();
    suite(
        "superadditivity",
        bad.is_empty(),
        format!("{} violating degree pairs among {} stored degrees", bad.len(), f.degrees().len()),
    )
}

fn bases(f: &GradedFiltration<Q>, degrees: &[u32], tol: f64) -> Result<Suite, Failure> {
    let mut ok = true;
    let mut worst = 0.0f64;
    for &m in degrees {
        let lv = f.level(m)?;
        let qm: f64 = q_m(f, m)?;
        let adapted: f64 = q_of_basis(f, m, &lv.basis().to_vec())?;
        ok &= close(adapted, qm, tol);
        worst = worst.max((adapted - qm).abs());
        for k in 0..MIXES {
            let q: f64 = q_of_basis(f, m, &mixed_basis(lv.basis(), k))?;
            ok &= q >= qm - tol;
        }
    }
    Ok(suite(
        "bases_and_q_m",
        ok,
        format!(
            "adapted bases attain Q_m (max gap {worst:.3e}) and {MIXES} mixed bases per level stay above it, {} levels",
            degrees.len()
        ),
    ))
}

fn psi_monotone(f: &GradedFiltration<Q>, degrees: &[u32]) -> Result<Suite, Failure> {
    // F(-1) ⊂ F ⊂ F(1), each strictly
    let lower = f.rescale_shift(&Q::one(), &-Q::one())?;
    let upper = f.rescale_shift(&Q::one(), &Q::one())?;
    let mut ok = true;
    for &m in degrees {
        let (a, b, c): (f64, f64, f64) = (psi_m(&lower, m)?, psi_m(f, m)?, psi_m(&upper, m)?);
        ok &= a < b && b < c;
        ok &= lower.level(m)?.is_strictly_contained_in(f.level(m)?);
    }
    Ok(suite("psi_monotone", ok, format!("Psi_m(F(-1)) < Psi_m(F) < Psi_m(F(1)) at {} degrees", degrees.len())))
}

fn jensen_and_shift(f: &GradedFiltration<Q>, degrees: &[u32], n: usize, tol: f64) -> Result<Suite, Failure> {
    let b = Q::new(1.into(), 2.into());
    let shifted = f.rescale_shift(&Q::one(), &b)?;
    let mut ok = true;
    for &m in degrees {
        let nu: Measure = empirical_dh(f, m, n)?;
        let nb: Measure = empirical_dh(&shifted, m, n)?;
        let (e, s) = (nu.moment(1)?, s_tilde(&nu));
        ok &= s <= e + tol;
        ok &= close(s_tilde(&nb), s + 0.5, tol);
        ok &= close(nb.moment(1)?, e + 0.5, tol);
    }
    Ok(suite(
        "jensen_and_shift",
        ok,
        format!("S~ <= E and S~(F(1/2)) = S~(F) + 1/2 on nu_m at {} degrees", degrees.len()),
    ))
}

fn distance_axioms(f: &GradedFiltration<Q>, degrees: &[u32]) -> Result<Suite, Failure> {
    let g = f.rescale_shift(&Q::one(), &Q::one())?;
    let h = f.rescale_shift(&Q::from_integer(2.into()), &Q::zero())?;
    let mut ok = true;
    for &m in degrees {
        let d = |x: &GradedFiltration<Q>, y: &GradedFiltration<Q>| d2_squared_level(x, y, m);
        ok &= d(f, f)?.is_zero();
        ok &= d(f, &g)? == d(&g, f)? && d(f, &h)? == d(&h, f)?;
        ok &= !d(f, &g)?.is_zero();
        let (fg, gh, fh) = (d(f, &g)?, d(&g, &h)?, d(f, &h)?);
        ok &= sqrt_triangle_holds(&fh, &fg, &gh) && sqrt_triangle_holds(&fg, &fh, &gh) && sqrt_triangle_holds(&gh, &fg, &fh);
    }
    Ok(suite(
        "d2_axioms",
        ok,
        format!("identity, symmetry and triangle for d2, exactly, on F, F(1), 2F at {} levels", degrees.len()),
    ))
}

fn convergence(f: &GradedFiltration<Q>, lim: &Measure, degrees: &[u32], w1c: Option<f64>) -> Result<Suite, Failure> {
    let rep = convergence_report(f, lim, degrees)?;
    let mut ok = rep.monotone;
    let mut detail = format!("|Q_m - Q| non-increasing over {} degrees: {}", degrees.len(), rep.monotone);
    if let Some(c) = w1c {
        let bad: Vec<u32> = rep
            .rows
            .iter()
            .filter(|r| r.wasserstein1 > c / r.m as f64)
            .map(|r| r.m)
            .collect();
        ok &= bad.is_empty();
        detail.push_str(&format!("; W1(nu_m, limit) <= {c}/m fails at {bad:?}"));
    }
    Ok(suite("convergence", ok, detail))
}

fn expected(job: &Job, f: &GradedFiltration<Q>, e: &Value, n: usize, tol: f64) -> Result<Vec<Suite>, Failure> {
    let mut out = Vec::new();
    let real = |key: &str| -> Result<Option<f64>, Failure> {
        e.get(key).map(|v| io::real::<f64>(v, &format!("$.expected.{key}")).map_err(Failure::from)).transpose()
    };
    let want_e = real("limit_mean")?;
    let want_s = real("limit_s_tilde")?;
    if want_e.is_some() || want_s.is_some() {
        if job.get("limit").is_none() {
            return Err(input_err("$.expected", "limit values need a \"limit\" measure"));
        }
        let lim = job.measure("limit")?.normalized();
        let (got_e, got_s) = (lim.moment(1)?, s_tilde(&lim));
        let ok = want_e.is_none_or(|w| close(got_e, w, tol)) && want_s.is_none_or(|w| close(got_s, w, tol));
        out.push(suite(
            "limit_functionals",
            ok,
            format!("E = {}, S~ = {}", number(got_e), number(got_s)),
        ));
    }
    if let Some(poly) = e.get("minima_sum_polynomial") {
        // Σ λ_i^(m) = Σ_k c_k m^k, exactly, at every listed degree
        let c = io::rational_vec(poly, "$.expected.minima_sum_polynomial")?;
        let ds = match e.get("polynomial_degrees") {
            Some(v) => degree_list(v, "$.expected.polynomial_degrees")?,
            None => f.degrees(),
        };
        let mut bad = Vec::new();
        for &m in &ds {
            let sum = f.level(m)?.successive_minima().iter().fold(Q::zero(), |s, x| s + x);
            let mq = Q::from_integer(m.into());
            let want = c.iter().rev().fold(Q::zero(), |acc, ck| acc * mq.clone() + ck);
            if sum != want {
                bad.push(m);
            }
        }
        out.push(suite(
            "minima_sums",
            bad.is_empty(),
            format!("exact sums of successive minima at {} degrees, mismatches at {bad:?}", ds.len()),
        ));
    }
    if let Some(lead) = e.get("minima_sum_leading") {
        let want = io::rational(lead, "$.expected.minima_sum_leading")?;
        let ds = match e.get("fit_degrees") {
            Some(v) => degree_list(v, "$.expected.fit_degrees")?,
            None => f.degrees(),
        };
        let fit = ek_from_minima_polynomial(f, &ds, 1, n, &Q::one())?;
        out.push(suite(
            "leading_coefficient",
            fit.leading == want,
            format!("fitted m^{} coefficient {}", n + 1, io::rational_to_string(&fit.leading)),
        ));
    }
    Ok(out)
}
