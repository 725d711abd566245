//! Result files: `results.csv`, `result.json`, `resolved_config.toml`, `run.log`.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::AppError;

/// A pass/fail decision against a configured threshold.
#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub threshold: f64,
}

impl Verdict {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            pass: value <= threshold,
            value,
            threshold,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Self {
        Self {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            threshold: 1.0,
        }
    }
}

/// Rectangular data table; every cell is already formatted.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// Shortest round-trip form, with an exponent for very large or small values.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug)]
pub struct Timer {
    start: Instant,
    lap: Instant,
    pub laps: Vec<(String, f64)>,
}

impl Default for Timer {
    fn default() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            lap: now,
            laps: Vec::new(),
        }
    }
}

impl Timer {
    pub fn lap(&mut self, name: &str) {
        let now = Instant::now();
        self.laps.push((name.to_string(), (now - self.lap).as_secs_f64()));
        self.lap = now;
    }

    pub fn total(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

#[derive(Debug)]
pub struct RunOutput {
    pub experiment: String,
    pub table: Table,
    pub summary: Map<String, Value>,
    pub verdicts: Vec<Verdict>,
    pub timer: Timer,
    pub log: Vec<String>,
}

impl RunOutput {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            table: Table::default(),
            summary: Map::new(),
            verdicts: Vec::new(),
            timer: Timer::default(),
            log: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }
}

/// `results.csv` contents: the table plus a trailing `config_hash` column.
pub fn csv_bytes(table: &Table, hash: &str) -> Result<Vec<u8>, AppError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| AppError::Io(e.to_string());
    let mut header = table.header.clone();
    header.push("config_hash".into());
    w.write_record(&header).map_err(io)?;
    for row in &table.rows {
        let mut r = row.clone();
        r.push(hash.to_string());
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| AppError::Io(e.to_string()))
}

pub fn result_json(cfg: &Config, out: &RunOutput) -> Value {
    let hash = cfg.hash();
    let verdicts: Map<String, Value> = out
        .verdicts
        .iter()
        .map(|v| {
            (
                v.name.clone(),
                json!({ "pass": v.pass, "value": v.value, "threshold": v.threshold }),
            )
        })
        .collect();
    let mut timings = Map::new();
    for (name, secs) in &out.timer.laps {
        timings.insert(name.clone(), json!(secs));
    }
    timings.insert("total".into(), json!(out.timer.total()));
    json!({
        "experiment": out.experiment,
        "config_hash": hash,
        "seed": cfg.experiment.seed,
        "verdicts": verdicts,
        "summary": Value::Object(out.summary.clone()),
        "timings": timings,
    })
}

pub fn write_all(dir: &Path, cfg: &Config, out: &RunOutput, threads: usize) -> Result<(), AppError> {
    fs::create_dir_all(dir).map_err(|e| AppError::Io(format!("{}: {e}", dir.display())))?;
    let hash = cfg.hash();
    fs::write(dir.join("results.csv"), csv_bytes(&out.table, &hash)?)?;
    let json = serde_json::to_string_pretty(&result_json(cfg, out)).expect("json serializes");
    fs::write(dir.join("result.json"), json + "\n")?;
    fs::write(
        dir.join("resolved_config.toml"),
        format!("# config_hash = \"{hash}\"\n{}", cfg.resolved()),
    )?;
    let mut log = format!(
        "fracldp {}\nexperiment = {}\nconfig_hash = {hash}\nseed = {}\nthreads = {threads}\n{}\n",
        env!("CARGO_PKG_VERSION"),
        out.experiment,
        cfg.experiment.seed,
        crate::config::describe(cfg)
    );
    for line in &out.log {
        log.push_str(line);
        log.push('\n');
    }
    for (name, secs) in &out.timer.laps {
        log.push_str(&format!("timing {name} {secs:.3}s\n"));
    }
    log.push_str(&format!("timing total {:.3}s\n", out.timer.total()));
    for v in &out.verdicts {
        log.push_str(&format!(
            "verdict {} {} value={} threshold={}\n",
            v.name,
            if v.pass { "PASS" } else { "FAIL" },
            v.value,
            v.threshold
        ));
    }
    fs::write(dir.join("run.log"), log)?;
    Ok(())
}
