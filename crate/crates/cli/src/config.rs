//! TOML run configuration.
//!
//! ```toml
//! preset = "nlse-table1"      # optional; supplies problem, grid and plan
//!
//! [problem]
//! case = "nlse"
//! omega = 8.0
//!
//! [solver]
//! method = "cg-strong-wolfe"  # or sd-armijo, sd-strong-wolfe
//! resolution = 129
//! max_outer_iters = 2000
//!
//! [[field]]                   # solutions from earlier runs, usable in `support`
//! label = "s1"
//! path = "out/u1.field"
//!
//! [[entry]]
//! label = "u2"
//! support = ["s1"]
//! omega1 = "x1>0"
//! omega2 = "complement"
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use lmm_core::directions::DirectionKind;
use lmm_core::driver::{DomainChoice, PlanEntry, PreconditionerChoice, RunConfig};
use lmm_core::problem::ProblemSpec;
use lmm_core::stepsize::RuleParams;

use crate::presets::preset;

/// The three named method configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SdArmijo,
    SdStrongWolfe,
    CgStrongWolfe,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::SdArmijo, Method::SdStrongWolfe, Method::CgStrongWolfe];

    pub fn apply(self, cfg: RunConfig) -> RunConfig {
        match self {
            Method::SdArmijo => cfg.sd_armijo(),
            Method::SdStrongWolfe => cfg.sd_strong_wolfe(),
            Method::CgStrongWolfe => cfg.cg_strong_wolfe(),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SdArmijo => "SD-Armijo",
            Method::SdStrongWolfe => "SD-StrongWolfe",
            Method::CgStrongWolfe => "CG-StrongWolfe",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Applied first; `rule` and `direction` below override it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<RuleParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<DirectionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preconditioner: Option<PreconditionerChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grad_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_res_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub armijo_fallback: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSource {
    pub label: String,
    pub path: PathBuf,
}

/// The file as written.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, rename = "field", skip_serializing_if = "Vec::is_empty")]
    pub fields: Vec<FieldSource>,
    #[serde(default, rename = "entry", skip_serializing_if = "Vec::is_empty")]
    pub entries: Vec<PlanEntry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!("config: {e}"))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// A fully resolved configuration: base run settings plus the plan.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub name: String,
    pub base: RunConfig,
    pub plan: Vec<PlanEntry>,
    pub fields: Vec<FieldSource>,
    /// Reference energies by label, from the preset.
    pub expected: BTreeMap<String, f64>,
    /// Relative tolerance for reporting against `expected`.
    pub tolerance: f64,
}

impl Resolved {
    pub fn expected(&self, label: &str) -> Option<f64> {
        self.expected.get(label).copied()
    }
}

/// Reads and resolves a config file; relative paths are taken from its directory.
pub fn parse_config(path: &Path) -> Result<Resolved> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = ConfigFile::parse(&text).with_context(|| format!("in {}", path.display()))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path
        .file_stem()
        .map_or_else(|| "config".into(), |s| s.to_string_lossy().into_owned());
    resolve(file, dir, &name)
}

/// The resolved form of a named preset.
pub fn preset_config(name: &str) -> Result<Resolved> {
    let file = ConfigFile {
        preset: Some(name.into()),
        ..Default::default()
    };
    resolve(file, Path::new("."), name)
}

pub fn resolve(file: ConfigFile, base_dir: &Path, name: &str) -> Result<Resolved> {
    let mut problem = None;
    let mut domain = None;
    let mut resolution = None;
    let mut plan = Vec::new();
    let mut expected = BTreeMap::new();
    let mut tolerance = 0.02;
    if let Some(pname) = &file.preset {
        let p = preset(pname).ok_or_else(|| anyhow!("unknown preset `{pname}` (see `lmm presets list`)"))?;
        problem = Some(p.problem);
        domain = Some(p.domain.clone());
        resolution = Some(p.resolution);
        plan = p.plan();
        expected = p.rows.iter().map(|r| (r.label.to_string(), r.energy)).collect();
        tolerance = p.tolerance;
    }
    let problem = file.problem.or(problem).ok_or_else(|| anyhow!("missing problem"))?;
    let mut base = RunConfig::new(problem);
    let s = &file.solver;
    if let Some(m) = s.method {
        base = m.apply(base);
    }
    if let Some(d) = s.domain.clone().or(domain) {
        base.domain = match d {
            DomainChoice::Mask { path } if path.is_relative() => DomainChoice::Mask {
                path: base_dir.join(path),
            },
            d => d,
        };
    }
    if let Some(r) = s.resolution.or(resolution) {
        base.resolution = r;
    }
    if let Some(r) = s.rule {
        base.rule = r;
    }
    if let Some(d) = s.direction {
        base.direction = d;
    }
    if let Some(p) = s.preconditioner.clone() {
        base.preconditioner = p;
    }
    macro_rules! set {
        ($($f:ident),*) => {$(if let Some(v) = s.$f { base.$f = v; })*};
    }
    set!(grad_tol, sup_res_tol, max_outer_iters, t_min, inner_tol, armijo_fallback);
    base.validate().map_err(|e| anyhow!("[solver]: {e}"))?;

    if !file.entries.is_empty() {
        plan = file.entries;
    }
    if plan.is_empty() {
        plan.push(PlanEntry::new("u1", &[], "all", "empty")?);
    }
    for e in &plan {
        e.config(&base).validate().map_err(|err| anyhow!("entry `{}`: {err}", e.label))?;
    }
    let fields: Vec<FieldSource> = file
        .fields
        .into_iter()
        .map(|f| FieldSource {
            path: if f.path.is_relative() { base_dir.join(&f.path) } else { f.path },
            label: f.label,
        })
        .collect();
    let known: Vec<&str> = fields.iter().map(|f| f.label.as_str()).collect();
    lmm_core::driver::validate_plan_with(&plan, &known)?;
    if plan.iter().any(|e| known.contains(&e.label.as_str())) {
        bail!("entry labels must differ from [[field]] labels");
    }
    Ok(Resolved {
        name: name.to_string(),
        base,
        plan,
        fields,
        expected,
        tolerance,
    })
}
