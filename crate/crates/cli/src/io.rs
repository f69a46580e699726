//! CSV and sidecar metadata readers and writers.
//!
//! Floats are written in scientific notation with 17 significant digits so
//! every value round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use exdiff_core::{ChainRecord, Error, ObservationSet, Result};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Config(format!("{}: {e}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// `<path>.meta`
pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes `key = value` lines.
pub fn write_meta(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in pairs {
        let _ = writeln!(s, "{k} = {v}");
    }
    write_text(path, &s)
}

pub fn dataset_csv(obs: &ObservationSet) -> String {
    let mut s = String::from("time");
    for c in 0..obs.dim() {
        let _ = write!(s, ",v{}", c + 1);
    }
    s.push('\n');
    for (t, v) in obs.times.iter().zip(&obs.values) {
        s.push_str(&fmt_f64(*t));
        for x in v {
            s.push(',');
            s.push_str(&fmt_f64(*x));
        }
        s.push('\n');
    }
    s
}

fn parse_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{} is empty", path.display())))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = vec![];
    for (k, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("{} row {}: not a number", path.display(), k + 1)))?;
        if row.len() != header.len() {
            return Err(Error::Config(format!(
                "{} row {}: wrong column count",
                path.display(),
                k + 1
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn read_dataset(path: &Path) -> Result<ObservationSet> {
    let (header, rows) = parse_rows(path)?;
    if header.first().map(String::as_str) != Some("time") || header.len() < 2 {
        return Err(Error::Config(format!(
            "{}: header must be time,v1[,v2...]",
            path.display()
        )));
    }
    let times = rows.iter().map(|r| r[0]).collect();
    let values = rows.iter().map(|r| r[1..].to_vec()).collect();
    ObservationSet::new(times, values).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn chain_csv(rec: &ChainRecord) -> String {
    let mut s = String::from("iter");
    for n in &rec.param_names {
        s.push(',');
        s.push_str(n);
    }
    s.push_str(",log_post\n");
    for ((it, row), lp) in rec.iters.iter().zip(&rec.draws).zip(&rec.log_post) {
        s.push_str(&it.to_string());
        for x in row {
            s.push(',');
            s.push_str(&fmt_f64(*x));
        }
        s.push(',');
        s.push_str(&fmt_f64(*lp));
        s.push('\n');
    }
    s
}

/// Parameter columns of a chain file.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainTable {
    pub names: Vec<String>,
    pub draws: Vec<Vec<f64>>,
}

impl ChainTable {
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.draws.iter().map(|r| r[k]).collect()
    }
}

pub fn read_chain(path: &Path) -> Result<ChainTable> {
    let (header, rows) = parse_rows(path)?;
    if header.len() < 3 || header[0] != "iter" || header[header.len() - 1] != "log_post" {
        return Err(Error::Config(format!(
            "{}: header must be iter,<params>,log_post",
            path.display()
        )));
    }
    let p = header.len() - 2;
    Ok(ChainTable {
        names: header[1..=p].to_vec(),
        draws: rows.into_iter().map(|r| r[1..=p].to_vec()).collect(),
    })
}

/// Deterministic run facts for a chain's sidecar.
pub fn chain_meta(rec: &ChainRecord, config_text: &str) -> Vec<(String, String)> {
    let c = &rec.counters;
    let mut v: Vec<(String, String)> = vec![
        ("version".into(), env!("CARGO_PKG_VERSION").into()),
        ("seed".into(), rec.seed.to_string()),
        ("rows".into(), rec.draws.len().to_string()),
        ("theta_proposed".into(), c.theta_proposed.to_string()),
        ("theta_accepted".into(), c.theta_accepted.to_string()),
        ("centred_proposed".into(), c.centred_proposed.to_string()),
        ("centred_accepted".into(), c.centred_accepted.to_string()),
        ("nonfinite_rejections".into(), c.nonfinite_rejections.to_string()),
        ("path_proposed".into(), c.path_proposed.to_string()),
        ("path_accepted".into(), c.path_accepted.to_string()),
        ("endpoint_proposed".into(), c.endpoint_proposed.to_string()),
        ("endpoint_accepted".into(), c.endpoint_accepted.to_string()),
        ("ea_draws".into(), c.ea_draws.to_string()),
        ("ea_attempts".into(), c.ea_attempts.to_string()),
        ("skeleton_points".into(), c.skeleton_points.to_string()),
    ];
    for (k, val) in &rec.config {
        v.push((format!("run.{k}"), val.clone()));
    }
    for line in config_text.lines() {
        if let Some((k, val)) = line.split_once('=') {
            v.push((format!("config.{}", k.trim()), val.trim().to_string()));
        }
    }
    v
}
