//! Suite reports and their JSON form (fixed field order, 17 significant digits).

use serde::Serialize;
use serde_json::value::RawValue;

use crate::context::C64;

pub const SCHEMA: u32 = 1;

/// How a case residual is judged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// Passes when the residual is below the tolerance.
    Below(f64),
    /// Passes when the residual exceeds the floor (negative controls, documented mismatches).
    Above(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Case {
    pub name: String,
    /// Relative residual; NaN when the check raised an error.
    pub residual: f64,
    /// Absolute residual for checks compared side by side.
    pub absolute: Option<f64>,
    pub bound: Bound,
}

impl Case {
    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::Below(tol) => self.residual < tol,
            Bound::Above(floor) => self.residual > floor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub n: usize,
    pub tau: C64,
    pub hbar: C64,
    pub c: C64,
    pub u: C64,
    pub v: C64,
    pub t: C64,
    pub trunc: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: String,
    pub params: Params,
    pub cases: Vec<Case>,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        !self.cases.is_empty() && self.cases.iter().all(Case::pass)
    }

    /// Largest residual among the tolerance-bounded cases.
    pub fn worst_residual(&self) -> f64 {
        self.cases
            .iter()
            .filter(|c| matches!(c.bound, Bound::Below(_)))
            .map(|c| if c.residual.is_nan() { f64::INFINITY } else { c.residual })
            .fold(0.0, f64::max)
    }
}

fn num(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() { format!("{x:.16e}") } else { "null".to_string() };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

#[derive(Serialize)]
struct JComplex {
    re: Box<RawValue>,
    im: Box<RawValue>,
}

fn cx(z: C64) -> JComplex {
    JComplex { re: num(z.re), im: num(z.im) }
}

#[derive(Serialize)]
struct JParams {
    n: usize,
    tau: JComplex,
    hbar: JComplex,
    c: JComplex,
    u: JComplex,
    v: JComplex,
    t: JComplex,
    trunc: usize,
    seed: u64,
}

#[derive(Serialize)]
struct JCase {
    name: String,
    residual: Box<RawValue>,
    absolute: Option<Box<RawValue>>,
    comparison: &'static str,
    tolerance: Box<RawValue>,
    pass: bool,
}

#[derive(Serialize)]
struct JReport {
    schema: u32,
    suite: String,
    params: JParams,
    cases: Vec<JCase>,
    notes: Vec<String>,
    pass: bool,
    wall_time_s: Box<RawValue>,
}

#[derive(Serialize)]
struct JSummaryLine {
    suite: String,
    n: usize,
    worst_residual: Box<RawValue>,
    pass: bool,
}

#[derive(Serialize)]
struct JSummary {
    pass: bool,
    suites: Vec<JSummaryLine>,
}

#[derive(Serialize)]
struct JDocument {
    schema: u32,
    reports: Vec<JReport>,
    summary: JSummary,
    wall_time_s: Box<RawValue>,
}

fn jreport(r: &SuiteReport) -> JReport {
    let p = &r.params;
    JReport {
        schema: SCHEMA,
        suite: r.suite.clone(),
        params: JParams {
            n: p.n,
            tau: cx(p.tau),
            hbar: cx(p.hbar),
            c: cx(p.c),
            u: cx(p.u),
            v: cx(p.v),
            t: cx(p.t),
            trunc: p.trunc,
            seed: p.seed,
        },
        cases: r
            .cases
            .iter()
            .map(|c| {
                let (comparison, tol) = match c.bound {
                    Bound::Below(t) => ("below", t),
                    Bound::Above(t) => ("above", t),
                };
                JCase {
                    name: c.name.clone(),
                    residual: num(c.residual),
                    absolute: c.absolute.map(num),
                    comparison,
                    tolerance: num(tol),
                    pass: c.pass(),
                }
            })
            .collect(),
        notes: r.notes.clone(),
        pass: r.pass(),
        wall_time_s: num(r.wall_time_s),
    }
}

/// The whole invocation as one JSON document.
pub fn to_json(reports: &[SuiteReport], wall_time_s: f64) -> String {
    let doc = JDocument {
        schema: SCHEMA,
        reports: reports.iter().map(jreport).collect(),
        summary: JSummary {
            pass: reports.iter().all(SuiteReport::pass),
            suites: reports
                .iter()
                .map(|r| JSummaryLine {
                    suite: r.suite.clone(),
                    n: r.params.n,
                    worst_residual: num(r.worst_residual()),
                    pass: r.pass(),
                })
                .collect(),
        },
        wall_time_s: num(wall_time_s),
    };
    serde_json::to_string_pretty(&doc).expect("report serializes")
}

/// Removes every `wall_time_s` field, for comparing runs.
pub fn strip_timing(json: &str) -> serde_json::Result<serde_json::Value> {
    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(m) => {
                m.remove("wall_time_s");
                m.values_mut().for_each(strip);
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    strip(&mut v);
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SuiteReport {
        let z = C64::new(0.1, -0.2);
        SuiteReport {
            suite: "qfay".into(),
            params: Params { n: 2, tau: z, hbar: z, c: z, u: z, v: z, t: z, trunc: 24, seed: 1 },
            cases: vec![
                Case { name: "a".into(), residual: 1.0 / 3.0, absolute: None, bound: Bound::Below(1.0) },
                Case { name: "b".into(), residual: f64::NAN, absolute: Some(0.5), bound: Bound::Above(0.1) },
            ],
            notes: vec![],
            wall_time_s: 0.25,
        }
    }

    #[test]
    fn seventeen_digits_and_null_for_nan() {
        let json = to_json(&[sample()], 1.0);
        assert!(json.contains("3.3333333333333331e-1"), "{json}");
        assert!(json.contains("\"residual\": null"));
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["summary"]["pass"], false);
    }

    #[test]
    fn field_order_is_fixed() {
        let json = to_json(&[sample()], 1.0);
        let keys = ["\"schema\"", "\"suite\"", "\"params\"", "\"cases\"", "\"notes\"", "\"pass\"", "\"wall_time_s\""];
        let report = &json[json.find("\"reports\"").unwrap()..json.find("\"summary\"").unwrap()];
        let mut at = 0;
        for k in keys {
            at += report[at..].find(k).unwrap_or_else(|| panic!("{k} missing after offset {at}"));
        }
        let suite = report.find("\"suite\"").unwrap();
        assert!(suite < report.find("\"params\"").unwrap() && report.find("\"params\"").unwrap() < report.find("\"cases\"").unwrap());
    }

    #[test]
    fn timing_is_stripped() {
        let mut slow = sample();
        slow.wall_time_s = 9.0;
        let a = strip_timing(&to_json(&[sample()], 1.0)).unwrap();
        let b = strip_timing(&to_json(&[slow], 2.0)).unwrap();
        assert_eq!(a, b);
    }
}
