//! Text formats for instances and training data.
//!
//! Instance file:
//!
//! ```text
//! tardy-instance version=1 family=1 seed=42 n=2 prng=chacha8-seed_from_u64-stream_per_attempt
//! id,w,p,d,dd
//! 0,50.000000,12.500000,40.000000,60.000000
//! 1,31.250000,7.000000,20.000000,55.000000
//! ```
//!
//! Values are written with six decimals. `prng` is present for generated
//! instances only. Training data is CSV with the feature column names and a
//! final `label` column (1 = early).

use std::fs;
use std::path::Path;

use crate::error::{parse_err, Error, Result};
use crate::features::FeatureMode;
use crate::generator::GENERATOR_PRNG;
use crate::oracle::{Dataset, MlpModel};
use crate::problem::{Instance, InstanceMeta, Job};

pub const INSTANCE_MAGIC: &str = "tardy-instance";
pub const INSTANCE_VERSION: u32 = 1;
const JOB_COLUMNS: [&str; 5] = ["id", "w", "p", "d", "dd"];

pub fn write_instance(instance: &Instance) -> String {
    let meta = instance.meta();
    let mut out = format!(
        "{INSTANCE_MAGIC} version={INSTANCE_VERSION} family={} seed={} n={}",
        meta.family,
        meta.seed,
        instance.len()
    );
    if meta.family > 0 {
        out.push_str(&format!(" prng={GENERATOR_PRNG}"));
    }
    out.push('\n');
    out.push_str(&JOB_COLUMNS.join(","));
    out.push('\n');
    for j in instance.jobs() {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            j.id, j.weight, j.duration, j.due_date, j.deadline
        ));
    }
    out
}

fn parse_header(line: &str) -> Result<(InstanceMeta, usize)> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(INSTANCE_MAGIC) {
        return Err(parse_err(1, format!("expected {INSTANCE_MAGIC:?} header")));
    }
    let (mut version, mut family, mut seed, mut n) = (None, None, None, None);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| parse_err(1, format!("malformed header field {part:?}")))?;
        let bad = |e: &dyn std::fmt::Display| parse_err(1, format!("{key}: {e}"));
        match key {
            "version" => version = Some(value.parse::<u32>().map_err(|e| bad(&e))?),
            "family" => family = Some(value.parse::<u8>().map_err(|e| bad(&e))?),
            "seed" => seed = Some(value.parse::<u64>().map_err(|e| bad(&e))?),
            "n" => n = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
            "prng" => {
                if value != GENERATOR_PRNG {
                    return Err(parse_err(1, format!("instance drawn with unknown generator {value:?}")));
                }
            }
            _ => return Err(parse_err(1, format!("unknown header field {key:?}"))),
        }
    }
    match version {
        Some(INSTANCE_VERSION) => {}
        Some(v) => return Err(parse_err(1, format!("unsupported version {v}"))),
        None => return Err(parse_err(1, "missing version")),
    }
    let family = family.ok_or_else(|| parse_err(1, "missing family"))?;
    let seed = seed.ok_or_else(|| parse_err(1, "missing seed"))?;
    let n = n.ok_or_else(|| parse_err(1, "missing n"))?;
    Ok((InstanceMeta { family, seed }, n))
}

/// Parses an instance file; the jobs must satisfy every instance invariant.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let (first, body) = text.split_once('\n').unwrap_or((text, ""));
    let (meta, n) = parse_header(first.trim_end_matches('\r'))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(2, e.to_string()))?
        .clone();
    if headers.iter().ne(JOB_COLUMNS) {
        return Err(parse_err(2, format!("expected columns {}", JOB_COLUMNS.join(","))));
    }
    let mut jobs = Vec::with_capacity(n.min(1 << 16));
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize + 1);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize + 1);
        let field = |k: usize| -> Result<f64> {
            let v: f64 = record[k]
                .parse()
                .map_err(|e| parse_err(line, format!("{}: {e}", JOB_COLUMNS[k])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("{} is not finite", JOB_COLUMNS[k])))
            }
        };
        let id: usize = record[0]
            .parse()
            .map_err(|e| parse_err(line, format!("id: {e}")))?;
        if id != jobs.len() {
            return Err(parse_err(line, format!("expected id {}, found {id}", jobs.len())));
        }
        jobs.push(Job {
            id,
            weight: field(1)?,
            duration: field(2)?,
            due_date: field(3)?,
            deadline: field(4)?,
        });
    }
    if jobs.len() != n {
        return Err(Error::Validation(format!(
            "header declares {n} jobs, file has {}",
            jobs.len()
        )));
    }
    Instance::new(jobs, meta)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(&fs::read_to_string(path)?)
}

pub fn save_instance(path: &Path, instance: &Instance) -> Result<()> {
    fs::write(path, write_instance(instance))?;
    Ok(())
}

pub fn write_training_data(mode: FeatureMode, data: &Dataset) -> Result<String> {
    if data.width() != mode.width() && !data.is_empty() {
        return Err(Error::Validation(format!(
            "dataset width {} does not match {mode} features",
            data.width()
        )));
    }
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = mode.column_names();
    header.push("label".into());
    let map = |e: csv::Error| Error::Internal(e.to_string());
    writer.write_record(&header).map_err(map)?;
    for (row, label) in data.features().rows().into_iter().zip(data.labels()) {
        let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        fields.push(label.to_string());
        writer.write_record(&fields).map_err(map)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
}

/// Parses training data; the feature mode is recognised from the header.
pub fn parse_training_data(text: &str) -> Result<(FeatureMode, Dataset)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    let mode = [FeatureMode::Full, FeatureMode::Aggregated, FeatureMode::Minimal]
        .into_iter()
        .find(|m| {
            let cols = m.column_names();
            names.len() == cols.len() + 1
                && names[..cols.len()].iter().zip(&cols).all(|(a, b)| a == b)
                && names[cols.len()] == "label"
        })
        .ok_or_else(|| parse_err(1, "header does not name a known feature layout"))?;
    let width = mode.width();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for k in 0..width {
            let v: f64 = record[k]
                .parse()
                .map_err(|e| parse_err(line, format!("column {}: {e}", k + 1)))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("column {} is not finite", k + 1)));
            }
            rows.push(v);
        }
        let label = match &record[width] {
            "0" => 0,
            "1" => 1,
            other => return Err(parse_err(line, format!("label {other:?} is not 0 or 1"))),
        };
        labels.push(label);
    }
    Ok((mode, Dataset::from_rows(width, rows, labels)?))
}

pub fn read_training_data(path: &Path) -> Result<(FeatureMode, Dataset)> {
    parse_training_data(&fs::read_to_string(path)?)
}

pub fn read_model(path: &Path) -> Result<MlpModel> {
    MlpModel::from_json(&fs::read_to_string(path)?)
}

pub fn save_model(path: &Path, model: &MlpModel) -> Result<()> {
    fs::write(path, model.to_json()?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{generate, DatasetSpec};

    #[test]
    fn generated_instance_round_trips() {
        for family in 1..=15 {
            let inst = generate(&DatasetSpec::new(family, 30, 9).unwrap()).unwrap();
            let text = write_instance(&inst);
            let back = parse_instance(&text).unwrap();
            assert_eq!(back, inst);
        }
    }

    #[test]
    fn hand_built_instance_has_no_prng() {
        let inst = Instance::from_tuples(&[(1.0, 2.0, 3.0, 4.0)]).unwrap();
        let text = write_instance(&inst);
        assert!(text.starts_with("tardy-instance version=1 family=0 seed=0 n=1\n"));
        assert!(text.contains("0,1.000000,2.000000,3.000000,4.000000"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn invalid_instances_rejected() {
        let head = "tardy-instance version=1 family=0 seed=0 n=1\nid,w,p,d,dd\n";
        assert!(parse_instance(&format!("{head}0,1,2,3,4\n")).is_ok());
        // p > d
        assert!(matches!(
            parse_instance(&format!("{head}0,1,5,3,4\n")),
            Err(Error::Validation(_))
        ));
        assert!(parse_instance(&format!("{head}0,1,2,3\n")).is_err());
        assert!(parse_instance(&format!("{head}1,1,2,3,4\n")).is_err());
        assert!(parse_instance(&format!("{head}0,1,2,3,inf\n")).is_err());
        assert!(parse_instance(&format!("{head}0,1,2,3,4\n1,1,2,3,4\n")).is_err());
        assert!(parse_instance("tardy-instance version=2 family=0 seed=0 n=0\n").is_err());
        assert!(parse_instance("").is_err());
        let err = parse_instance(&format!("{head}0,1,x,3,4\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn training_data_round_trips() {
        let data = Dataset::from_rows(
            8,
            (0..16).map(|i| i as f64 / 3.0 - 1.0).collect(),
            vec![1, 0],
        )
        .unwrap();
        let text = write_training_data(FeatureMode::Minimal, &data).unwrap();
        assert!(text.starts_with("w,p,d,dd,"));
        let (mode, back) = parse_training_data(&text).unwrap();
        assert_eq!(mode, FeatureMode::Minimal);
        assert_eq!(back, data);
        assert!(parse_training_data("a,b\n1,2\n").is_err());
        let bad_label = text.replace(",1\n", ",2\n");
        assert!(parse_training_data(&bad_label).is_err());
    }
}
