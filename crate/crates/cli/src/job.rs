//! The job document and the pieces commands pull out of it.
//!
//! Paths in error messages follow the document structure, `$.measure.atoms[2].pos`.

use std::path::Path;
use std::str::FromStr;

use dhkit::expint::PlConcaveFunction;
use dhkit::filtration::{empirical_dh, weight_filtration, GradedFiltration, MonomialModel};
use dhkit::functionals::LPolicy;
use dhkit::io;
use dhkit::measure::DhMeasure;
use num_rational::BigRational;
use serde_json::Value;

use crate::{Command, Failure};

pub type Q = BigRational;
pub type Measure = DhMeasure<f64, Q>;

/// `m1..m2`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeRange {
    pub lo: u32,
    pub hi: u32,
}

impl FromStr for DegreeRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| format!("expected m1..m2, got {s:?}"))?;
        let b = b.strip_prefix('=').unwrap_or(b);
        let lo: u32 = a.trim().parse().map_err(|_| format!("bad lower degree {a:?}"))?;
        let hi: u32 = b.trim().parse().map_err(|_| format!("bad upper degree {b:?}"))?;
        if lo == 0 || lo > hi {
            return Err(format!("degree range {s:?} must satisfy 1 <= m1 <= m2"));
        }
        Ok(Self { lo, hi })
    }
}

pub fn input_err(path: &str, what: impl std::fmt::Display) -> Failure {
    Failure::Input(format!("at {path}: {what}"))
}

pub struct Job {
    doc: Value,
    a: Vec<f64>,
    degrees: Option<DegreeRange>,
    tol: Option<f64>,
}

impl Job {
    pub fn load(path: &Path, command: Command, a: Vec<f64>, degrees: Option<DegreeRange>, tol: Option<f64>) -> Result<Self, Failure> {
        let text = if path.as_os_str() == "-" {
            std::io::read_to_string(std::io::stdin()).map_err(|e| Failure::Input(format!("cannot read stdin: {e}")))?
        } else {
            std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?
        };
        let doc = io::parse_document(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
        Self::from_value(doc, command, a, degrees, tol)
    }

    pub fn from_value(doc: Value, command: Command, a: Vec<f64>, degrees: Option<DegreeRange>, tol: Option<f64>) -> Result<Self, Failure> {
        if !doc.is_object() {
            return Err(input_err("$", "the job document must be a JSON object"));
        }
        if let Some(c) = doc.get("command") {
            if c.as_str() != Some(command.name()) {
                return Err(input_err("$.command", format!("document is for {c}, not {:?}", command.name())));
            }
        }
        if let Some(t) = tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Failure::Input(format!("--tol must be positive and finite, got {t}")));
            }
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Failure::Input("--a values must be finite".into()));
        }
        Ok(Self { doc, a, degrees, tol })
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.doc.get(key)
    }

    pub fn require(&self, key: &str) -> Result<&Value, Failure> {
        self.get(key).ok_or_else(|| input_err("$", format!("missing field \"{key}\"")))
    }

    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.or_else(|| self.get("tol").and_then(Value::as_f64)).unwrap_or(default)
    }

    pub fn real(&self, key: &str) -> Result<f64, Failure> {
        Ok(io::real(self.require(key)?, &format!("$.{key}"))?)
    }

    pub fn real_or(&self, key: &str, default: f64) -> Result<f64, Failure> {
        match self.get(key) {
            Some(v) => Ok(io::real(v, &format!("$.{key}"))?),
            None => Ok(default),
        }
    }

    pub fn real_vec(&self, key: &str) -> Result<Option<Vec<f64>>, Failure> {
        self.get(key)
            .map(|v| io::real_vec(v, &format!("$.{key}")).map_err(Failure::from))
            .transpose()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| input_err(&format!("$.{key}"), "expected a nonnegative integer")),
        }
    }

    /// `--a` values, else the document's `"a"` list.
    pub fn a_list(&self) -> Result<Vec<f64>, Failure> {
        if !self.a.is_empty() {
            return Ok(self.a.clone());
        }
        Ok(self.real_vec("a")?.unwrap_or_default())
    }

    pub fn filtration(&self, key: &str) -> Result<GradedFiltration<Q>, Failure> {
        filtration(self.require(key)?, &format!("$.{key}"))
    }

    /// Degrees to work on: `--degrees`, else `"degrees"`, else every stored degree.
    /// Every returned degree is stored in each of `fs`.
    pub fn degrees(&self, fs: &[&GradedFiltration<Q>]) -> Result<Vec<u32>, Failure> {
        let stored = |m: u32| fs.iter().all(|f| f.level(m).is_ok());
        if let Some(r) = self.degrees {
            let ds: Vec<u32> = (r.lo..=r.hi).filter(|&m| stored(m)).collect();
            if ds.is_empty() {
                return Err(Failure::Input(format!("no stored degree lies in {}..{}", r.lo, r.hi)));
            }
            return Ok(ds);
        }
        if let Some(v) = self.get("degrees") {
            let ds = degree_list(v, "$.degrees")?;
            if let Some(m) = ds.iter().find(|&&m| !stored(m)) {
                return Err(input_err("$.degrees", format!("degree {m} is not stored in the filtration")));
            }
            return Ok(ds);
        }
        let first = fs.first().ok_or_else(|| Failure::Input("no filtration given".into()))?;
        let ds: Vec<u32> = first.degrees().into_iter().filter(|&m| stored(m)).collect();
        if ds.is_empty() {
            return Err(Failure::Input("the filtrations share no stored degree".into()));
        }
        Ok(ds)
    }

    pub fn policy(&self, key: &str) -> Result<Option<LPolicy<f64>>, Failure> {
        self.get(key).map(|v| policy(v, &format!("$.{key}"))).transpose()
    }

    pub fn measure(&self, key: &str) -> Result<Measure, Failure> {
        self.measure_at(self.require(key)?, &format!("$.{key}"))
    }

    /// `{"atoms": [...]}`, `{"pushforward": {"transform": ..., "xi": [...]}}` or
    /// `{"empirical": {"degree": m, "n": n}}` over the document's filtration,
    /// then optionally `"affine": {"scale": a, "shift": b}` and `"normalize": true`.
    pub fn measure_at(&self, v: &Value, path: &str) -> Result<Measure, Failure> {
        let base = if v.get("atoms").is_some() {
            io::atomic_measure::<f64>(v, path)?
        } else if let Some(p) = v.get("pushforward") {
            let pp = format!("{path}.pushforward");
            let g = transform(
                p.get("transform").ok_or_else(|| input_err(&pp, "missing field \"transform\""))?,
                &format!("{pp}.transform"),
            )?;
            let xi = match p.get("xi") {
                Some(x) => io::real_vec(x, &format!("{pp}.xi"))?,
                None => Vec::new(),
            };
            DhMeasure::pushforward(g, xi)?
        } else if let Some(e) = v.get("empirical") {
            let ep = format!("{path}.empirical");
            let m = e
                .get("degree")
                .and_then(Value::as_u64)
                .ok_or_else(|| input_err(&format!("{ep}.degree"), "expected a positive integer"))?;
            let n = e.get("n").and_then(Value::as_u64).unwrap_or(1) as usize;
            let f = self.filtration("filtration")?;
            empirical_dh(&f, m as u32, n)?
        } else {
            return Err(input_err(path, "a measure needs \"atoms\", \"pushforward\" or \"empirical\""));
        };
        let mut mu = base;
        if let Some(t) = v.get("affine") {
            let tp = format!("{path}.affine");
            let a = t.get("scale").map(|x| io::real(x, &format!("{tp}.scale"))).transpose()?.unwrap_or(1.0);
            let b = t.get("shift").map(|x| io::real(x, &format!("{tp}.shift"))).transpose()?.unwrap_or(0.0);
            mu = mu.affine_transform(a, b)?;
        }
        if v.get("normalize").and_then(Value::as_bool).unwrap_or(false) {
            mu = mu.normalized();
        }
        Ok(mu)
    }
}

/// A filtration given by its levels, or by a generator:
/// `{"generator": "projective_line", "degrees": "1..50"}` or
/// `{"generator": "weight", "vars": k, "weight": [...], "degrees": [...]}`.
pub fn filtration(v: &Value, path: &str) -> Result<GradedFiltration<Q>, Failure> {
    if v.get("levels").is_some() {
        return Ok(io::graded_filtration(v, path)?);
    }
    let gen = v
        .get("generator")
        .and_then(Value::as_str)
        .ok_or_else(|| input_err(path, "a filtration needs \"levels\" or a \"generator\""))?;
    let ds = degree_list(
        v.get("degrees").ok_or_else(|| input_err(path, "a generator needs \"degrees\""))?,
        &format!("{path}.degrees"),
    )?;
    match gen {
        "projective_line" => Ok(GradedFiltration::projective_line(&ds)?),
        "weight" => {
            let (model, w) = monomial_model(v, path)?;
            Ok(weight_filtration(&model, &w, &ds)?)
        }
        other => Err(input_err(
            &format!("{path}.generator"),
            format!("unknown generator {other:?} (expected \"projective_line\" or \"weight\")"),
        )),
    }
}

/// `{"vars": k, "weight": [w_1, …, w_k]}`.
pub fn monomial_model(v: &Value, path: &str) -> Result<(MonomialModel, Vec<Q>), Failure> {
    let k = v
        .get("vars")
        .and_then(Value::as_u64)
        .ok_or_else(|| input_err(&format!("{path}.vars"), "expected a positive integer"))?;
    let w = io::rational_vec(
        v.get("weight").ok_or_else(|| input_err(path, "missing field \"weight\""))?,
        &format!("{path}.weight"),
    )?;
    if w.len() != k as usize {
        return Err(input_err(&format!("{path}.weight"), format!("expected {k} entries, found {}", w.len())));
    }
    Ok((MonomialModel::new(k as usize)?, w))
}

/// A list of degrees or an inclusive range string `"m1..m2"`.
pub fn degree_list(v: &Value, path: &str) -> Result<Vec<u32>, Failure> {
    let ds: Vec<u32> = match v {
        Value::String(s) => {
            let r: DegreeRange = s.parse().map_err(|e: String| input_err(path, e))?;
            (r.lo..=r.hi).collect()
        }
        Value::Array(xs) => xs
            .iter()
            .enumerate()
            .map(|(i, x)| {
                x.as_u64()
                    .filter(|&m| m >= 1 && m <= u32::MAX as u64)
                    .map(|m| m as u32)
                    .ok_or_else(|| input_err(&format!("{path}[{i}]"), "expected a positive integer degree"))
            })
            .collect::<Result<_, _>>()?,
        _ => return Err(input_err(path, "expected a list of degrees or \"m1..m2\"")),
    };
    if ds.is_empty() {
        return Err(input_err(path, "no degrees listed"));
    }
    Ok(ds)
}

/// `{"policy": "supplied", "value": x}`, `{"policy": "weight_twist"}`,
/// `{"policy": "special_valuation", "a": A}`, or a bare number for a supplied value.
pub fn policy(v: &Value, path: &str) -> Result<LPolicy<f64>, Failure> {
    if v.is_number() {
        return Ok(LPolicy::Supplied { value: io::real(v, path)? });
    }
    let kind = v
        .get("policy")
        .and_then(Value::as_str)
        .ok_or_else(|| input_err(path, "expected {\"policy\": ...} or a number"))?;
    let num = |key: &str| -> Result<f64, Failure> {
        let p = format!("{path}.{key}");
        Ok(io::real(v.get(key).ok_or_else(|| input_err(path, format!("missing field \"{key}\"")))?, &p)?)
    };
    match kind {
        "supplied" => Ok(LPolicy::Supplied { value: num("value")? }),
        "weight_twist" => Ok(LPolicy::WeightTwist),
        "special_valuation" => Ok(LPolicy::SpecialValuation { a: num("a")? }),
        other => Err(input_err(
            &format!("{path}.policy"),
            format!("unknown policy {other:?} (expected supplied, weight_twist or special_valuation)"),
        )),
    }
}

/// A PL concave function given by cells, or as `{"domain": polytope, "pieces": [affine, ...]}`
/// meaning the minimum of the pieces over the domain.
fn transform(v: &Value, path: &str) -> Result<PlConcaveFunction<Q>, Failure> {
    if v.get("cells").is_some() {
        return Ok(io::pl_function(v, path)?);
    }
    let dom = io::polytope(
        v.get("domain").ok_or_else(|| input_err(path, "needs \"cells\" or \"domain\" with \"pieces\""))?,
        &format!("{path}.domain"),
    )?;
    let pieces = v
        .get("pieces")
        .and_then(Value::as_array)
        .ok_or_else(|| input_err(&format!("{path}.pieces"), "expected a list of affine forms"))?
        .iter()
        .enumerate()
        .map(|(i, p)| io::affine_form(p, &format!("{path}.pieces[{i}]")))
        .collect::<dhkit::Result<Vec<_>>>()?;
    match pieces.len() {
        0 => Err(input_err(&format!("{path}.pieces"), "no affine pieces")),
        1 => Ok(PlConcaveFunction::affine(dom, pieces.into_iter().next().expect("one piece"))?),
        _ => Ok(PlConcaveFunction::from_min_of_affine(dom, &pieces)?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn degree_ranges() {
        assert_eq!("3..7".parse::<DegreeRange>(), Ok(DegreeRange { lo: 3, hi: 7 }));
        assert_eq!("3..=7".parse::<DegreeRange>(), Ok(DegreeRange { lo: 3, hi: 7 }));
        assert!("0..4".parse::<DegreeRange>().is_err());
        assert!("5..4".parse::<DegreeRange>().is_err());
        assert!("5".parse::<DegreeRange>().is_err());
        assert_eq!(degree_list(&json!("2..4"), "$").unwrap(), vec![2, 3, 4]);
        assert_eq!(degree_list(&json!([5, 1]), "$").unwrap(), vec![5, 1]);
        assert!(degree_list(&json!([1, 0]), "$").is_err());
        assert!(degree_list(&json!([]), "$").is_err());
    }

    #[test]
    fn policies() {
        assert_eq!(policy(&json!(0.5), "$").unwrap(), LPolicy::Supplied { value: 0.5 });
        assert_eq!(policy(&json!({"policy": "weight_twist"}), "$").unwrap(), LPolicy::WeightTwist);
        assert_eq!(
            policy(&json!({"policy": "special_valuation", "a": 2}), "$").unwrap(),
            LPolicy::SpecialValuation { a: 2.0 }
        );
        match policy(&json!({"policy": "supplied"}), "$.l") {
            Err(Failure::Input(m)) => assert!(m.contains("value"), "{m}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(policy(&json!({"policy": "guess"}), "$"), Err(Failure::Input(_))));
    }

    #[test]
    fn degrees_follow_flag_then_document_then_storage() {
        let doc = json!({"filtration": {"generator": "projective_line", "degrees": "1..6"}, "degrees": [2, 4]});
        let job = Job::from_value(doc.clone(), Command::Dh, vec![], None, None).unwrap();
        let f = job.filtration("filtration").unwrap();
        assert_eq!(job.degrees(&[&f]).unwrap(), vec![2, 4]);
        let flagged = Job::from_value(doc, Command::Dh, vec![], Some(DegreeRange { lo: 5, hi: 9 }), None).unwrap();
        assert_eq!(flagged.degrees(&[&f]).unwrap(), vec![5, 6]);
        let bare = Job::from_value(json!({}), Command::Dh, vec![], None, None).unwrap();
        assert_eq!(bare.degrees(&[&f]).unwrap(), (1..=6).collect::<Vec<_>>());
        let missing = Job::from_value(json!({"degrees": [7]}), Command::Dh, vec![], None, None).unwrap();
        assert!(matches!(missing.degrees(&[&f]), Err(Failure::Input(_))));
    }

    #[test]
    fn measure_forms() {
        let job = Job::from_value(
            json!({
                "filtration": {"generator": "projective_line", "degrees": [4]},
                "a": {"atoms": [{"pos": 1, "mass": 2}], "affine": {"scale": 2, "shift": 1}},
                "b": {"empirical": {"degree": 4}, "normalize": true},
                "c": {"pushforward": {"transform": {"domain": {"dim": 1, "vertices": [[0], [2]]},
                      "pieces": [{"gradient": [1]}, {"gradient": [-1], "constant": 2}]}}}
            }),
            Command::Report,
            vec![],
            None,
            None,
        )
        .unwrap();
        let a = job.measure("a").unwrap();
        assert_eq!(a.moment(1).unwrap(), 3.0);
        let b = job.measure("b").unwrap();
        assert!((b.mass() - 1.0).abs() < 1e-15);
        assert!((b.moment(1).unwrap() + 0.5).abs() < 1e-15);
        // tent on [0, 2] with peak 1: mass 2, uniform pushforward on [0, 1]
        let c = job.measure("c").unwrap();
        assert!((c.mass() - 2.0).abs() < 1e-12);
        assert!((c.moment(1).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(job.measure("missing"), Err(Failure::Input(_))));
    }
}
