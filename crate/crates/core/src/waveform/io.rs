//! Waveform files.
//!
//! JSON is canonical: `{"units": "Omega_rf", "T": …, "n": …, "values": […], "meta": {…}}`.
//! Values are written in shortest round-trip form, so write-then-read is
//! bitwise lossless. CSV (`t,c`, one row per step) is an export for plotting.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::dynamics::{TimeUnit, Waveform};
use crate::error::{Error, Result};

pub type Meta = Map<String, Value>;

fn parse_error(source: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str, source: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| parse_error(source, format!("missing required field `{name}`")))
}

pub fn waveform_to_json(w: &Waveform, meta: &Meta) -> Value {
    let mut meta = meta.clone();
    if let Some(l) = w.slew_limit() {
        meta.insert("slew_limit".into(), Value::from(l));
    }
    let units = serde_json::to_value(w.unit()).expect("unit tag serializes");
    serde_json::json!({
        "units": units,
        "T": w.duration(),
        "n": w.n(),
        "values": w.values(),
        "meta": meta,
    })
}

/// Parses the canonical JSON form; `source` names the input in diagnostics.
pub fn waveform_from_json_str(text: &str, source: &str) -> Result<(Waveform, Meta)> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        parse_error(source, format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let obj = value
        .as_object()
        .ok_or_else(|| parse_error(source, "top level must be a JSON object"))?;

    let units: TimeUnit = serde_json::from_value(field(obj, "units", source)?.clone())
        .map_err(|_| parse_error(source, "field `units`: expected \"Omega_rf\" or \"s\""))?;
    let duration = field(obj, "T", source)?
        .as_f64()
        .ok_or_else(|| parse_error(source, "field `T`: expected a number"))?;
    let n = field(obj, "n", source)?
        .as_u64()
        .ok_or_else(|| parse_error(source, "field `n`: expected a non-negative integer"))?
        as usize;
    let raw = field(obj, "values", source)?
        .as_array()
        .ok_or_else(|| parse_error(source, "field `values`: expected an array"))?;
    let values = raw
        .iter()
        .enumerate()
        .map(|(k, v)| {
            v.as_f64()
                .ok_or_else(|| parse_error(source, format!("field `values[{k}]`: expected a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != n {
        return Err(parse_error(
            source,
            format!("field `n` is {n} but `values` has {} entries", values.len()),
        ));
    }
    let meta = match obj.get("meta") {
        None | Some(Value::Null) => Meta::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(parse_error(source, "field `meta`: expected an object")),
    };

    let mut w = Waveform::new(values, duration)
        .map_err(|e| parse_error(source, e.to_string()))?
        .with_unit(units);
    if let Some(l) = meta.get("slew_limit") {
        let l = l
            .as_f64()
            .ok_or_else(|| parse_error(source, "field `meta.slew_limit`: expected a number"))?;
        w = w.with_slew_limit(l).map_err(|e| parse_error(source, e.to_string()))?;
    }
    Ok((w, meta))
}

pub fn write_waveform_json(path: &Path, w: &Waveform, meta: &Meta) -> Result<()> {
    let text = serde_json::to_string_pretty(&waveform_to_json(w, meta))
        .expect("waveform JSON serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_waveform_json(path: &Path) -> Result<(Waveform, Meta)> {
    let text = fs::read_to_string(path)?;
    waveform_from_json_str(&text, &path.display().to_string())
}

/// `t,c` rows with `t_j` the start time of step `j`.
pub fn write_waveform_csv(path: &Path, w: &Waveform) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["t", "c"])?;
    for (t, c) in w.step_times().iter().zip(w.values()) {
        out.write_record([t.to_string(), c.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
