//! Report rows and their CSV / JSON forms.
//!
//! CSV floats are written as `{:.16e}` (17 significant digits, which
//! round-trips every `f64`); infinities are the literal `inf`. JSON numbers
//! use serde_json's shortest round-trip form, with non-finite values as the
//! strings `"inf"`, `"-inf"` and `"nan"`.

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::scalar::BoundFamily;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub param_value: f64,
    pub family: BoundFamily,
    pub value: f64,
    pub true_gen: f64,
    /// `value / true_gen`.
    pub ratio: f64,
    pub mc_mean: Option<f64>,
    pub mc_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// Name of the swept parameter; first CSV column.
    pub param: String,
    pub rows: Vec<ReportRow>,
}

/// Bit-level equality, so that NaN ratios compare equal after a round trip.
pub fn same_f64(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

impl ReportRow {
    pub fn same_as(&self, other: &ReportRow) -> bool {
        let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (None, None) => true,
            (Some(x), Some(y)) => same_f64(x, y),
            _ => false,
        };
        self.family == other.family
            && same_f64(self.param_value, other.param_value)
            && same_f64(self.value, other.value)
            && same_f64(self.true_gen, other.true_gen)
            && same_f64(self.ratio, other.ratio)
            && opt(self.mc_mean, other.mc_mean)
            && opt(self.mc_se, other.mc_se)
    }
}

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

fn parse_float(s: &str, what: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::invalid(what, format!("`{s}` is not a number")))
}

fn json_float(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else {
        Value::String(fmt_float(x))
    }
}

fn from_json_float(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::invalid(what, "not an f64")),
        Value::String(s) => parse_float(s, what),
        _ => Err(Error::invalid(what, "expected a number or \"inf\"")),
    }
}

const COLUMNS: [&str; 6] = ["family", "value", "true_gen", "ratio", "mc_mean", "mc_se"];

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.param, COLUMNS.join(","));
        for r in &self.rows {
            let mc = |x: Option<f64>| x.map(fmt_float).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                fmt_float(r.param_value),
                r.family,
                fmt_float(r.value),
                fmt_float(r.true_gen),
                fmt_float(r.ratio),
                mc(r.mc_mean),
                mc(r.mc_se),
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Report> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::invalid("csv", "empty input"))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() != 7 || cols[1..] != COLUMNS {
            return Err(Error::invalid("csv", format!("unexpected header `{header}`")));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::invalid("csv", format!("line {} has {} fields", k + 2, f.len())));
            }
            let opt = |s: &str| -> Result<Option<f64>> {
                if s.is_empty() {
                    Ok(None)
                } else {
                    parse_float(s, "mc").map(Some)
                }
            };
            rows.push(ReportRow {
                param_value: parse_float(f[0], cols[0])?,
                family: f[1].parse()?,
                value: parse_float(f[2], "value")?,
                true_gen: parse_float(f[3], "true_gen")?,
                ratio: parse_float(f[4], "ratio")?,
                mc_mean: opt(f[5])?,
                mc_se: opt(f[6])?,
            });
        }
        Ok(Report {
            param: cols[0].to_string(),
            rows,
        })
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut m = Map::new();
                m.insert(self.param.clone(), json_float(r.param_value));
                m.insert("family".into(), Value::String(r.family.to_string()));
                m.insert("value".into(), json_float(r.value));
                m.insert("true_gen".into(), json_float(r.true_gen));
                m.insert("ratio".into(), json_float(r.ratio));
                m.insert("mc_mean".into(), r.mc_mean.map_or(Value::Null, json_float));
                m.insert("mc_se".into(), r.mc_se.map_or(Value::Null, json_float));
                Value::Object(m)
            })
            .collect();
        let mut top = Map::new();
        top.insert("param".into(), Value::String(self.param.clone()));
        top.insert("rows".into(), Value::Array(rows));
        let mut s = serde_json::to_string_pretty(&Value::Object(top)).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Report> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::invalid("json", e.to_string()))?;
        let param = v
            .get("param")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::invalid("json", "missing `param`"))?
            .to_string();
        let rows = v
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::invalid("json", "missing `rows`"))?;
        let field = |r: &Value, k: &str| -> Result<f64> {
            from_json_float(r.get(k).ok_or_else(|| Error::invalid("json", format!("missing `{k}`")))?, k)
        };
        let opt = |r: &Value, k: &str| -> Result<Option<f64>> {
            match r.get(k) {
                None | Some(Value::Null) => Ok(None),
                Some(x) => from_json_float(x, k).map(Some),
            }
        };
        let rows = rows
            .iter()
            .map(|r| {
                Ok(ReportRow {
                    param_value: field(r, &param)?,
                    family: r
                        .get("family")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::invalid("json", "missing `family`"))?
                        .parse()?,
                    value: field(r, "value")?,
                    true_gen: field(r, "true_gen")?,
                    ratio: field(r, "ratio")?,
                    mc_mean: opt(r, "mc_mean")?,
                    mc_se: opt(r, "mc_se")?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Report { param, rows })
    }
}
