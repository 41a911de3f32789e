//! JSON envelopes and CSV tables.
//!
//! Every JSON report is an object with `tool`, `version`, `config_digest`,
//! `config` and the fields of the payload (a `BesovEstimate` or a
//! `CheckReport`). Keys are sorted, so equal inputs give equal bytes.
//!
//! CSV schemas:
//!
//! * summary: `check,cases,max_ratio,cap,pass`; a check that could not be
//!   computed has an empty `max_ratio` and `pass = false`.
//! * quantities: `r,A,E,C,D,G,g,error`, one row per radius in input order,
//!   then a row with `r = sup` holding column maxima over the successful rows.
//!   Failed radii keep empty cells and the message in `error`. `D` is empty
//!   when the record has no pressure.

use std::io::Write;

use anyhow::{bail, Result};
use nsdiag_core::report::text_digest;
use nsdiag_core::{CheckReport, ScaledQuantities};
use serde::Serialize;
use serde_json::{Map, Value};

pub fn config_digest<C: Serialize>(config: &C) -> Result<String> {
    Ok(text_digest(&serde_json::to_string(config)?))
}

pub fn envelope<C: Serialize, B: Serialize>(config: &C, body: &B) -> Result<Value> {
    let mut map = Map::new();
    map.insert("tool".into(), Value::from(crate::TOOL));
    map.insert("version".into(), Value::from(crate::VERSION));
    map.insert("config_digest".into(), Value::from(config_digest(config)?));
    map.insert("config".into(), serde_json::to_value(config)?);
    match serde_json::to_value(body)? {
        Value::Object(fields) => {
            for (k, v) in fields {
                if map.contains_key(&k) {
                    bail!("report field '{k}' collides with the envelope");
                }
                map.insert(k, v);
            }
        }
        other => {
            map.insert("result".into(), other);
        }
    }
    Ok(Value::Object(map))
}

pub fn to_json_bytes(value: &Value) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// One summary row; `report` is `None` when the check failed to compute.
pub struct SummaryRow<'a> {
    pub check: &'a str,
    pub report: Option<&'a CheckReport>,
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["check", "cases", "max_ratio", "cap", "pass"])?;
    for row in rows {
        match row.report {
            Some(r) => out.write_record([
                row.check.to_string(),
                r.evaluated_cases().to_string(),
                opt(r.max_ratio),
                r.cap.to_string(),
                r.pass.to_string(),
            ])?,
            None => out.write_record([row.check, "0", "", "", "false"])?,
        }
    }
    out.flush()?;
    Ok(())
}

pub struct QuantityRow {
    pub r: f64,
    pub quantities: Option<ScaledQuantities>,
    pub error: Option<String>,
}

pub fn write_quantities<W: Write>(w: W, rows: &[QuantityRow], has_pressure: bool) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r", "A", "E", "C", "D", "G", "g", "error"])?;
    let d = |q: &ScaledQuantities| if has_pressure { q.d.to_string() } else { String::new() };
    let mut sup = [0.0f64; 6];
    for row in rows {
        match &row.quantities {
            Some(q) => {
                for (s, v) in sup.iter_mut().zip([q.a, q.e, q.c, q.d, q.g_max, q.g_min]) {
                    *s = s.max(v);
                }
                out.write_record([
                    row.r.to_string(),
                    q.a.to_string(),
                    q.e.to_string(),
                    q.c.to_string(),
                    d(q),
                    q.g_max.to_string(),
                    q.g_min.to_string(),
                    String::new(),
                ])?
            }
            None => {
                let mut rec = vec![row.r.to_string()];
                rec.extend(std::iter::repeat(String::new()).take(6));
                rec.push(row.error.clone().unwrap_or_default());
                out.write_record(rec)?
            }
        }
    }
    let any = rows.iter().any(|r| r.quantities.is_some());
    let cell = |v: f64| if any { v.to_string() } else { String::new() };
    out.write_record([
        "sup".to_string(),
        cell(sup[0]),
        cell(sup[1]),
        cell(sup[2]),
        if has_pressure { cell(sup[3]) } else { String::new() },
        cell(sup[4]),
        cell(sup[5]),
        String::new(),
    ])?;
    out.flush()?;
    Ok(())
}
