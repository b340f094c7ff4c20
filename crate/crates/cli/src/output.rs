//! Files written by `run`, `compare` and `export`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lmm_core::driver::{EntryOutcome, RunConfig, SolutionRecord};
use lmm_core::hilbert::{read_field, write_field_to, GridFunction, Mesh};

use crate::config::Resolved;

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().map_or(String::new(), |e| e.to_string_lossy().into_owned())
    ));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Flat per-iteration trace row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub k: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub sup_residual: f64,
    pub t: f64,
    pub perp_norm: f64,
    pub tau: f64,
    pub dist_to_l: f64,
    pub peak_residual: f64,
    pub dphi0: Option<f64>,
    pub alpha: Option<f64>,
    pub evals: usize,
    pub rule: Option<String>,
    pub fallback: bool,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub gd_over_g2: Option<f64>,
    pub restart_flag: Option<bool>,
    pub c1_est: Option<f64>,
    pub c2_est: Option<f64>,
    pub cone_ok: Option<bool>,
}

pub fn trace_rows(record: &SolutionRecord) -> Vec<TraceRow> {
    record
        .trace
        .iter()
        .map(|r| TraceRow {
            k: r.k,
            energy: r.energy,
            grad_norm: r.grad_norm,
            sup_residual: r.sup_residual,
            t: r.t,
            perp_norm: r.perp_norm,
            tau: r.tau,
            dist_to_l: r.dist_to_l,
            peak_residual: r.peak_residual,
            dphi0: r.dphi0,
            alpha: r.alpha,
            evals: r.evals,
            rule: r.rule.map(|x| x.to_string()),
            fallback: r.fallback,
            beta: r.direction.map(|d| d.beta),
            gamma: r.direction.map(|d| d.gamma),
            gd_over_g2: r.direction.map(|d| d.gd_over_g2),
            restart_flag: r.direction.map(|d| d.restart_flag),
            c1_est: r.direction.map(|d| d.c1_est),
            c2_est: r.direction.map(|d| d.c2_est),
            cone_ok: r.direction.map(|d| d.cone_ok),
        })
        .collect()
}

pub fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

/// Writes `<label>.field`, `<label>.json`, `<label>_trace.csv` and
/// `<label>_linesearch.csv`; returns the metadata path.
pub fn write_record(dir: &Path, mesh: &Mesh, record: &SolutionRecord) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let label = &record.label;
    let field_name = format!("{label}.field");
    let mut field = Vec::new();
    write_field_to(&mut field, mesh, record.field())?;
    write_atomic(&dir.join(&field_name), &field)?;

    let mut meta = serde_json::to_value(record)?;
    let obj = meta.as_object_mut().expect("record is an object");
    obj.insert("field_file".into(), field_name.into());
    obj.insert("config_hash".into(), config_hash(&record.config).into());
    obj.insert("zero_extended".into(), record.config.problem.zero_extended().into());
    let meta_path = dir.join(format!("{label}.json"));
    write_atomic(&meta_path, serde_json::to_string_pretty(&meta)?.as_bytes())?;

    write_atomic(&dir.join(format!("{label}_trace.csv")), &csv_bytes(&trace_rows(record))?)?;
    write_atomic(
        &dir.join(format!("{label}_linesearch.csv")),
        &csv_bytes(&record.line_trace)?,
    )?;
    Ok(meta_path)
}

/// Loads a record written by [`write_record`] together with its field.
pub fn read_record(meta_path: &Path) -> Result<(SolutionRecord, Mesh)> {
    let text = fs::read_to_string(meta_path).with_context(|| format!("reading {}", meta_path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let field_file = value
        .get("field_file")
        .and_then(|v| v.as_str())
        .map(str::to_owned)
        .with_context(|| format!("{} has no field_file", meta_path.display()))?;
    let mut record: SolutionRecord = serde_json::from_value(value)?;
    let mesh = record.config.domain.build_mesh(record.config.resolution)?;
    let dir = meta_path.parent().unwrap_or(Path::new("."));
    record.u = Some(read_field(dir.join(field_file), &mesh)?);
    Ok((record, mesh))
}

/// Status of one plan entry in `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntrySummary {
    pub label: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub support: Vec<String>,
    pub omega1: String,
    pub omega2: String,
    pub energy: Option<f64>,
    pub expected_energy: Option<f64>,
    pub rel_error: Option<f64>,
    pub within_tolerance: Option<bool>,
    pub iterations: Option<usize>,
    pub phi_evals: Option<usize>,
    pub linear_solves: Option<usize>,
    pub grad_norm: Option<f64>,
    pub sup_residual: Option<f64>,
    pub wall_time_s: f64,
}

pub fn summarize(resolved: &Resolved, outcomes: &[EntryOutcome]) -> Vec<EntrySummary> {
    outcomes
        .iter()
        .zip(&resolved.plan)
        .map(|(o, e)| {
            let expected = resolved.expected(&o.label);
            let mut s = EntrySummary {
                label: o.label.clone(),
                status: "ok".into(),
                error: None,
                support: e.support.clone(),
                omega1: e.omega1.to_string(),
                omega2: e.omega2.to_string(),
                energy: None,
                expected_energy: expected,
                rel_error: None,
                within_tolerance: None,
                iterations: None,
                phi_evals: None,
                linear_solves: None,
                grad_norm: None,
                sup_residual: None,
                wall_time_s: o.wall_time_s,
            };
            match &o.result {
                Ok(r) => {
                    s.energy = Some(r.energy);
                    s.rel_error = expected.map(|x| (r.energy - x).abs() / x.abs());
                    s.within_tolerance = s.rel_error.map(|e| e <= resolved.tolerance);
                    s.iterations = Some(r.iterations);
                    s.phi_evals = Some(r.phi_evals);
                    s.linear_solves = Some(r.linear_solves);
                    s.grad_norm = Some(r.grad_norm);
                    s.sup_residual = Some(r.sup_residual);
                }
                Err(err) => {
                    s.status = "failed".into();
                    s.error = Some(err.to_string());
                }
            }
            s
        })
        .collect()
}

/// `(x₁, x₂, u)` at every interior node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub x1: f64,
    pub x2: f64,
    pub u: f64,
}

pub fn surface_points(mesh: &Mesh, u: &GridFunction) -> Vec<SurfacePoint> {
    mesh.coords()
        .iter()
        .zip(u.values())
        .map(|(x, &v)| SurfacePoint { x1: x[0], x2: x[1], u: v })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub k: usize,
    pub energy: f64,
    pub grad_norm: f64,
    pub sup_residual: f64,
    pub alpha: Option<f64>,
    pub evals: usize,
}

/// Writes `<label>_surface.csv` and `<label>_history.csv`.
pub fn export_plotdata(record: &SolutionRecord, mesh: &Mesh, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let label = if record.label.is_empty() { "solution" } else { &record.label };
    let surface = dir.join(format!("{label}_surface.csv"));
    write_atomic(&surface, &csv_bytes(&surface_points(mesh, record.field()))?)?;
    let history: Vec<HistoryRow> = record
        .trace
        .iter()
        .map(|r| HistoryRow {
            k: r.k,
            energy: r.energy,
            grad_norm: r.grad_norm,
            sup_residual: r.sup_residual,
            alpha: r.alpha,
            evals: r.evals,
        })
        .collect();
    let hist = dir.join(format!("{label}_history.csv"));
    write_atomic(&hist, &csv_bytes(&history)?)?;
    Ok(vec![surface, hist])
}
