use std::fmt::Write as _;

use dhkit::convergence::convergence_report;
use dhkit::filtration::{
    d2_squared_level, d_p_sequence, empirical_dh, initial_term_degeneration, psi_m, q_m, relative_minima,
    weight_filtration, GradedFiltration,
};
use dhkit::functionals::{beta_g, fut, na_report, s_tilde, tilde_beta, LPolicy, TiltedBody};
use dhkit::io::{self, number, numbers, rational_to_string};
use dhkit::optimize::{
    cone_family, default_s_grid, rescale_derivative, rescale_objective, rescale_opt, rescale_second_derivative,
    soliton_vector, twist_opt, vol_g_tau_measure, NewtonConfig, OptResult,
};
use dhkit::{Error, FiltrationLevel};
use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::job::{input_err, monomial_model, Job, Measure, Q};
use crate::output::{cell, Report};
use crate::{check, Command, Failure};

/// Samples per measure in CDF tables.
const CDF_SAMPLES: usize = 101;

pub fn run(cmd: Command, job: &Job) -> Result<Report, Failure> {
    match cmd {
        Command::Dh => dh(job),
        Command::Report => report(job),
        Command::Soliton => soliton(job),
        Command::Rescale => rescale(job),
        Command::TwistOpt => twist(job),
        Command::Degenerate => degenerate(job),
        Command::Distance => distance(job),
        Command::Cone => cone(job),
        Command::Check => check::run(job),
    }
}

pub fn rationals(xs: &[Q]) -> Value {
    Value::Array(xs.iter().map(|x| Value::String(rational_to_string(x))).collect())
}

fn sorted(mut xs: Vec<Q>) -> Vec<Q> {
    xs.sort();
    xs
}

/// Warnings for pairs of degrees where the top value is not superadditive.
pub fn superadditivity_warnings(f: &GradedFiltration<Q>) -> Vec<String> {
    let bad = f.superadditivity_violations();
    if bad.is_empty() {
        return Vec::new();
    }
    let shown: Vec<String> = bad.iter().take(5).map(|(a, b)| format!("({a}, {b})")).collect();
    vec![format!(
        "filtration \"{}\" is not superadditive: lambda_max(m1 + m2) < lambda_max(m1) + lambda_max(m2) at {} degree pair(s), e.g. {}",
        f.label,
        bad.len(),
        shown.join(", ")
    )]
}

fn opt_json(res: &OptResult<f64>, certificates: Map<String, Value>) -> Map<String, Value> {
    let mut o = Map::new();
    o.insert("argmin".into(), numbers(&res.argmin));
    o.insert("value".into(), number(res.value));
    o.insert("grad_norm".into(), number(res.grad_norm));
    o.insert("iterations".into(), json!(res.iterations));
    o.insert("certificates".into(), Value::Object(certificates));
    o
}

fn newton(job: &Job) -> NewtonConfig<f64> {
    let d = NewtonConfig::<f64>::default();
    NewtonConfig { tol: job.tol_or(d.tol), ..d }
}

fn policy_json(l: &LPolicy<f64>) -> Value {
    match *l {
        LPolicy::Supplied { value } => json!({"policy": "supplied", "value": number(value)}),
        LPolicy::WeightTwist => json!({"policy": "weight_twist"}),
        LPolicy::SpecialValuation { a } => json!({"policy": "special_valuation", "a": number(a)}),
    }
}

fn measure_summary(mu: &Measure) -> Result<Value, Failure> {
    let s = mu.support();
    Ok(json!({
        "mass": number(mu.mass()),
        "mean": number(mu.moment(1)?),
        "s_tilde": number(s_tilde(mu)),
        "lambda_min": number(s.lambda_min),
        "lambda_max": number(s.lambda_max),
    }))
}

fn dh(job: &Job) -> Result<Report, Failure> {
    let f = job.filtration("filtration")?;
    let degrees = job.degrees(&[&f])?;
    let n = job.usize_or("n", 1)?;
    let mut r = Report::new("dh", job.tol_or(dhkit::functionals::REPORT_TOL));
    r.warnings = superadditivity_warnings(&f);
    let mut csv = String::from("m,dim,sum_minima,q_m,psi_m,mass,mean,s_tilde\n");
    let mut levels = Vec::new();
    for &m in &degrees {
        let lv = f.level(m)?;
        let minima = lv.successive_minima();
        let sum = minima.iter().fold(Q::zero(), |s, x| s + x);
        let nu: Measure = empirical_dh(&f, m, n)?;
        let (q, psi): (f64, f64) = (q_m(&f, m)?, psi_m(&f, m)?);
        let (mean, st) = (nu.moment(1)?, s_tilde(&nu));
        let _ = writeln!(
            csv,
            "{m},{},{},{},{},{},{},{}",
            lv.dim(),
            rational_to_string(&sum),
            cell(q),
            cell(psi),
            cell(nu.mass()),
            cell(mean),
            cell(st)
        );
        levels.push(json!({
            "m": m,
            "dim": lv.dim(),
            "successive_minima": rationals(&minima),
            "sum_minima": rational_to_string(&sum),
            "q_m": number(q),
            "psi_m": number(psi),
            "measure": measure_summary(&nu)?,
        }));
    }
    r.set("levels", Value::Array(levels));
    r.set("filtration", json!(f.label));
    r.set("n", json!(n));
    if job.get("limit").is_some() {
        let lim = job.measure("limit")?;
        let rep = convergence_report(&f, &lim, &degrees)?;
        r.set(
            "convergence",
            json!({
                "rows": rep.rows.iter().map(|row| json!({
                    "m": row.m,
                    "wasserstein1": number(row.wasserstein1),
                    "q_error": number(row.q_error),
                    "psi_error": number(row.psi_error),
                })).collect::<Vec<_>>(),
                "q_limit": number(rep.q_limit),
                "monotone": rep.monotone,
                "limit": measure_summary(&lim)?,
            }),
        );
        csv = rep.to_csv();
    }
    r.csv = csv;
    Ok(r)
}

fn report(job: &Job) -> Result<Report, Failure> {
    let a_list = job.a_list()?;
    let mut cands: Vec<(String, Measure, LPolicy<f64>)> = Vec::new();
    if let Some(list) = job.get("candidates") {
        let list = list
            .as_array()
            .ok_or_else(|| input_err("$.candidates", "expected a list of candidates"))?;
        if list.is_empty() {
            return Err(input_err("$.candidates", "no candidates listed"));
        }
        for (i, c) in list.iter().enumerate() {
            let p = format!("$.candidates[{i}]");
            let label = c.get("label").and_then(Value::as_str).map_or_else(|| format!("candidate {i}"), str::to_string);
            let mu = job.measure_at(
                c.get("measure").ok_or_else(|| input_err(&p, "missing field \"measure\""))?,
                &format!("{p}.measure"),
            )?;
            let l = crate::job::policy(
                c.get("l_policy").ok_or_else(|| input_err(&p, "missing field \"l_policy\""))?,
                &format!("{p}.l_policy"),
            )?;
            cands.push((label, mu, l));
        }
    } else {
        let l = job
            .policy("l_policy")?
            .ok_or_else(|| input_err("$", "missing field \"l_policy\""))?;
        let label = job.get("label").and_then(Value::as_str).unwrap_or("input").to_string();
        cands.push((label, job.measure("measure")?, l));
    }

    let mut r = Report::new("report", dhkit::functionals::REPORT_TOL);
    if let Some(fv) = job.get("filtration") {
        r.warnings = superadditivity_warnings(&crate::job::filtration(fv, "$.filtration")?);
    }
    let mut csv = String::from("label,x,cdf\n");
    let mut out = Vec::new();
    let mut best: Option<(f64, &str)> = None;
    for (label, mu, l) in &cands {
        let rep = na_report(mu, l, &a_list)?;
        r.tol = rep.tol;
        if !rep.s_tilde_le_e {
            r.warnings.push(format!("{label}: S~ exceeds E beyond the tolerance"));
        }
        let mut o = Map::new();
        o.insert("label".into(), json!(label));
        o.insert("l_policy".into(), policy_json(l));
        o.insert("v".into(), number(rep.v));
        o.insert("e".into(), number(rep.e));
        o.insert(
            "e_k".into(),
            Value::Array(rep.e_k.iter().map(|(k, x)| json!({"k": k, "value": number(*x)})).collect()),
        );
        o.insert("s_tilde".into(), number(rep.s_tilde));
        o.insert("l".into(), number(rep.l));
        o.insert("h".into(), number(rep.h));
        o.insert("d".into(), number(rep.d));
        o.insert(
            "q_a".into(),
            Value::Array(rep.q_a.iter().map(|(a, x)| json!({"a": number(*a), "value": number(*x)})).collect()),
        );
        o.insert("normalized".into(), json!(rep.normalized));
        o.insert("s_tilde_le_e".into(), json!(rep.s_tilde_le_e));
        if let LPolicy::SpecialValuation { a } = l {
            o.insert("beta_tilde".into(), number(tilde_beta(*a, mu)?));
        }
        out.push(Value::Object(o));
        if best.is_none_or(|(h, _)| rep.h < h) {
            best = Some((rep.h, label));
        }
        for (x, c) in mu.cdf_samples(CDF_SAMPLES)? {
            let _ = writeln!(csv, "{},{},{}", csv_text(label), cell(x), cell(c));
        }
    }
    let (h, label) = best.expect("at least one candidate");
    r.set("candidates", Value::Array(out));
    r.set(
        "h_upper_bound",
        json!({
            "value": number(h),
            "attained_by": label,
            "kind": "upper bound",
            "note": "smallest H over the supplied candidates only; the infimum over all filtrations may be lower",
        }),
    );
    r.set("a", numbers(&a_list));
    r.csv = csv;
    Ok(r)
}

fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn soliton(job: &Job) -> Result<Report, Failure> {
    let p = io::polytope(job.require("polytope")?, "$.polytope")?;
    let rank = job.usize_or("rank", p.dim())?;
    let cfg = newton(job);
    let res = soliton_vector(&p, rank, &cfg)?;
    let body = TiltedBody::new(&p, rank)?;
    let futaki = (0..rank)
        .map(|j| {
            let mut e = vec![0.0; rank];
            e[j] = 1.0;
            fut(&body, &res.argmin, &e)
        })
        .collect::<dhkit::Result<Vec<f64>>>()?;
    let mut c = Map::new();
    c.insert("converged".into(), json!(res.converged));
    c.insert("grad_norm_within_tol".into(), json!(res.grad_norm <= cfg.tol));
    c.insert("hessian_min_eig".into(), number(res.hessian_min_eig));
    c.insert("strictly_convex".into(), json!(res.hessian_min_eig > 0.0));
    c.insert("futaki_at_argmin".into(), numbers(&futaki));
    c.insert("rank".into(), json!(rank));
    let mut r = Report::new("soliton", cfg.tol);
    r.body = opt_json(&res, c);
    let mut csv = String::from("coordinate,argmin,futaki\n");
    for (j, (x, fj)) in res.argmin.iter().zip(&futaki).enumerate() {
        let _ = writeln!(csv, "{j},{},{}", cell(*x), cell(*fj));
    }
    r.csv = csv;
    Ok(r)
}

fn rescale(job: &Job) -> Result<Report, Failure> {
    let mu = job.measure("measure")?;
    let av = job.real("log_discrepancy")?;
    let tol = job.tol_or(1e-12);
    let res = rescale_opt(av, &mu, tol)?;
    let star = res.argmin[0];
    let mut c = Map::new();
    c.insert("converged".into(), json!(res.converged));
    c.insert("second_derivative".into(), number(res.hessian_min_eig));
    c.insert("beta".into(), number(av - mu.moment(1)?));
    c.insert("beta_tilde".into(), number(tilde_beta(av, &mu)?));
    c.insert("boundary_minimum".into(), json!(star == 0.0));
    let mut r = Report::new("rescale", tol);
    r.body = opt_json(&res, c);
    let probes = {
        let a = job.a_list()?;
        if a.is_empty() {
            let hi = (2.0 * star).max(1.0);
            (0..=20).map(|i| hi * i as f64 / 20.0).collect()
        } else {
            a
        }
    };
    let mut csv = String::from("a,f,df,d2f\n");
    let mut rows = Vec::new();
    for &a in &probes {
        if a < 0.0 {
            return Err(Failure::Input(format!("probe a = {a} must be nonnegative")));
        }
        let (f0, f1, f2) = (
            rescale_objective(av, &mu, a),
            rescale_derivative(av, &mu, a),
            rescale_second_derivative(&mu, a),
        );
        let _ = writeln!(csv, "{},{},{},{}", cell(a), cell(f0), cell(f1), cell(f2));
        rows.push(json!({"a": number(a), "f": number(f0), "df": number(f1), "d2f": number(f2)}));
    }
    r.set("probes", Value::Array(rows));
    r.set("log_discrepancy", number(av));
    r.csv = csv;
    Ok(r)
}

fn twist(job: &Job) -> Result<Report, Failure> {
    let f = job.filtration("filtration")?;
    let degrees = job.degrees(&[&f])?;
    let l = job.policy("l_policy")?.unwrap_or(LPolicy::WeightTwist);
    let rank = f
        .level(degrees[0])?
        .weight_rank()
        .ok_or_else(|| Error::MissingTorusWeights(format!("degree {} carries no torus weights", degrees[0])))?;
    let x0 = job.real_vec("x0")?.unwrap_or_else(|| vec![0.0; rank]);
    if x0.len() != rank {
        return Err(input_err("$.x0", format!("expected {rank} coordinates, found {}", x0.len())));
    }
    let cfg = newton(job);
    let res = twist_opt(&f, &degrees, &l, &x0, &cfg)?;
    let mut c = Map::new();
    c.insert("converged".into(), json!(res.converged));
    c.insert("grad_norm_within_tol".into(), json!(res.grad_norm <= cfg.tol));
    c.insert("hessian_min_eig".into(), number(res.hessian_min_eig));
    c.insert("degrees".into(), json!(degrees));
    c.insert("l_policy".into(), policy_json(&l));
    let mut r = Report::new("twist-opt", cfg.tol);
    r.warnings = superadditivity_warnings(&f);
    r.body = opt_json(&res, c);
    let mut csv = String::from("coordinate,argmin\n");
    for (j, x) in res.argmin.iter().enumerate() {
        let _ = writeln!(csv, "{j},{}", cell(*x));
    }
    r.csv = csv;
    Ok(r)
}

fn degenerate(job: &Job) -> Result<Report, Failure> {
    let (model, w) = monomial_model(job.require("model")?, "$.model")?;
    let f1 = job.filtration("filtration")?;
    let degrees = job.degrees(&[&f1])?;
    let f0 = weight_filtration(&model, &w, &degrees)?;
    let mut r = Report::new("degenerate", 0.0);
    r.warnings = superadditivity_warnings(&f1);
    let mut csv = String::from("m,dim,minima_preserved,relative_minima_preserved,d2_squared_before,d2_squared_after\n");
    let mut rows = Vec::new();
    let mut levels: Vec<FiltrationLevel<Q>> = Vec::new();
    let mut all = true;
    for &m in &degrees {
        let f1p = initial_term_degeneration(&model, &w, &f1, m)?;
        let (before, after) = (f1.level(m)?.successive_minima(), f1p.level(m)?.successive_minima());
        let (rb, ra) = (relative_minima(&f0, &f1, m)?, relative_minima(&f0, &f1p, m)?);
        let (db, da) = (d2_squared_level(&f0, &f1, m)?, d2_squared_level(&f0, &f1p, m)?);
        let minima_ok = before == after;
        let rel_ok = sorted(rb.clone()) == sorted(ra.clone());
        all &= minima_ok && rel_ok && db == da;
        let _ = writeln!(
            csv,
            "{m},{},{minima_ok},{rel_ok},{},{}",
            before.len(),
            rational_to_string(&db),
            rational_to_string(&da)
        );
        rows.push(json!({
            "m": m,
            "successive_minima": {"before": rationals(&before), "after": rationals(&after), "preserved": minima_ok},
            "relative_minima": {"before": rationals(&rb), "after": rationals(&ra), "preserved": rel_ok},
            "d2_squared": {"before": rational_to_string(&db), "after": rational_to_string(&da)},
        }));
        levels.push(f1p.level(m)?.clone());
    }
    if !all {
        r.warnings.push("the degeneration changed successive minima, relative minima or d2 at some degree".into());
    }
    let out = GradedFiltration::new(format!("{} (initial terms)", f1.label), levels)?;
    r.set("levels", Value::Array(rows));
    r.set("degenerated", io::filtration_to_json(&out));
    r.set("weight_filtration", io::filtration_to_json(&f0));
    r.set("preserved", json!(all));
    r.csv = csv;
    Ok(r)
}

fn distance(job: &Job) -> Result<Report, Failure> {
    let f0 = job.filtration("filtration")?;
    let f1 = job.filtration("other")?;
    let p = job.real_or("p", 2.0)?;
    if !(p >= 1.0 && p.is_finite()) {
        return Err(input_err("$.p", format!("p = {p} must be a finite number >= 1")));
    }
    let degrees = job.degrees(&[&f0, &f1])?;
    let seq = d_p_sequence(&f0, &f1, p, &degrees)?;
    let mut rows = Vec::new();
    let mut csv = String::from("m,d_p\n");
    for &(m, d) in &seq.per_degree {
        let _ = writeln!(csv, "{m},{}", cell(d));
        rows.push(json!({
            "m": m,
            "d_p": number(d),
            "d2_squared": rational_to_string(&d2_squared_level(&f0, &f1, m)?),
            "relative_minima": rationals(&relative_minima(&f0, &f1, m)?),
        }));
    }
    let mut r = Report::new("distance", 0.0);
    r.warnings = superadditivity_warnings(&f0);
    r.warnings.extend(superadditivity_warnings(&f1));
    r.set("p", number(p));
    r.set("levels", Value::Array(rows));
    r.set("extrapolated", number(seq.extrapolated));
    r.set("extrapolation", json!("least-squares fit d_p(m) = c0 + c1/m, reporting c0"));
    r.csv = csv;
    Ok(r)
}

fn cone(job: &Job) -> Result<Report, Failure> {
    let mu = job.measure("measure")?;
    let a = job.real("log_discrepancy")?;
    let n = job.usize_or("n", 1)?;
    let grid = job.real_vec("s_grid")?.unwrap_or_else(default_s_grid);
    let tol = job.tol_or(1e-10);
    let scan = cone_family(a, &mu, n, &grid)?;
    let convex = scan.is_midpoint_convex(tol);
    let mut r = Report::new("cone", tol);
    r.set("s", numbers(&scan.s));
    r.set("values", numbers(&scan.values));
    r.set("derivative_at_start", scan.derivative_at_start.map_or(Value::Null, number));
    r.set("second_derivative_at_start", scan.second_derivative_at_start.map_or(Value::Null, number));
    r.set("midpoint_convex", json!(convex));
    r.set("beta_g", number(beta_g(a, &mu)?));
    r.set("log_discrepancy", number(a));
    if let Some(taus) = job.real_vec("tau")? {
        let vols = taus
            .iter()
            .map(|&t| Ok(json!({"tau": number(t), "value": number(vol_g_tau_measure(&mu, t, n)?)})))
            .collect::<Result<Vec<_>, Failure>>()?;
        r.set("vol_g_tau", Value::Array(vols));
    }
    if !convex {
        r.warnings.push("the sampled family is not convex to within the tolerance".into());
    }
    let mut csv = String::from("s,value\n");
    for (s, v) in scan.s.iter().zip(&scan.values) {
        let _ = writeln!(csv, "{},{}", cell(*s), cell(*v));
    }
    r.csv = csv;
    Ok(r)
}
