//! Line-oriented `section.key = value` configuration files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thinbeam::strip::SolverConfig;
use thinbeam::{EnergyDensity, LoadProfile, Vec2};

use crate::LabError;

/// Every key the lab understands; anything else is rejected.
pub const KNOWN_KEYS: &[&str] = &[
    "strip.L",
    "strip.nx",
    "strip.ny",
    "strip.h",
    "energy.kind",
    "energy.mu",
    "energy.lambda",
    "energy.samples",
    "energy.fixture_non_objective",
    "load.kind",
    "load.gamma",
    "load.g1",
    "load.g2",
    "load.x",
    "solver.newton_tol",
    "solver.rel_tol",
    "solver.max_iters",
    "solver.load_steps",
    "solver.min_load_step",
    "elastica.n",
    "elastica.tol",
    "study.h",
    "study.nx",
    "study.ny",
    "truncation.h",
    "truncation.fields",
    "truncation.resolutions",
    "truncation.a",
    "truncation.A",
    "truncation.p",
    "truncation.widen",
    "truncation.field",
    "truncation.input",
    "run.seed",
    "output.dir",
];

/// Raw key/value pairs in key order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(LabError::Config(format!("line {}: expected `section.key = value`", lineno + 1)));
            };
            let key = key.trim();
            let value = value.trim();
            if !key.contains('.') || key.split('.').any(|s| s.is_empty()) {
                return Err(LabError::Config(format!("line {}: key `{key}` is not of the form section.key", lineno + 1)));
            }
            if !KNOWN_KEYS.contains(&key) {
                return Err(LabError::Config(format!("line {}: unknown key `{key}`", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(LabError::Config(format!("line {}: duplicate key `{key}`", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 over the sorted `key=value` lines; independent of order,
    /// comments and whitespace.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.entries {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn number<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, LabError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| LabError::Config(format!("`{key}` = `{v}` is not a valid number"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, LabError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse()
                        .map_err(|_| LabError::Config(format!("`{key}` entry `{}` is not a valid number", s.trim())))
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }
}

/// Smallest admissible `nx` for thickness `h`: `max(64, ⌈4L/h⌉)`.
pub fn min_nx(length: f64, h: f64) -> usize {
    64usize.max((4.0 * length / h - 1e-9).ceil() as usize)
}

/// Default `nx` for thickness `h`: `max(64, ⌈16L/h⌉)`, four times the
/// minimum so every slab spans at least sixteen element columns.
pub fn default_nx(length: f64, h: f64) -> usize {
    64usize.max((16.0 * length / h - 1e-9).ceil() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldKind {
    Rough,
    Smooth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationConfig {
    pub h: f64,
    pub fields: usize,
    pub resolutions: Vec<(usize, usize)>,
    pub a: f64,
    pub big_a: f64,
    pub p: f64,
    /// The widened window is `(a/widen, A·widen)`.
    pub widen: f64,
    pub field: FieldKind,
    pub input: Option<PathBuf>,
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub length: f64,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub energy: EnergyDensity,
    /// Strength of the non-objective term of the negative-control fixture.
    pub fixture_non_objective: f64,
    pub energy_samples: usize,
    pub load: LoadProfile,
    pub solver: SolverConfig,
    pub elastica_n: usize,
    pub elastica_tol: f64,
    /// Strictly decreasing.
    pub study_h: Vec<f64>,
    pub study_nx: Vec<usize>,
    pub study_ny: usize,
    pub truncation: TruncationConfig,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    pub hash: String,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, LabError> {
        let cfg_err = |m: String| LabError::Config(m);
        let length: f64 = raw.number("strip.L", 1.0)?;
        if !(length > 0.0 && length.is_finite()) {
            return Err(cfg_err(format!("`strip.L` must be positive, got {length}")));
        }
        let h: f64 = raw.number("strip.h", 0.1)?;
        if !(h > 0.0 && h <= 0.5) {
            return Err(cfg_err(format!("`strip.h` must lie in (0, 0.5], got {h}")));
        }
        let nx = raw.number("strip.nx", default_nx(length, h))?;
        let ny = raw.number("strip.ny", 8)?;

        let energy = match raw.get("energy.kind").unwrap_or("half-dist-squared") {
            "half-dist-squared" => {
                for key in ["energy.mu", "energy.lambda"] {
                    if raw.get(key).is_some() {
                        return Err(cfg_err(format!("`{key}` only applies to energy.kind = isotropic-quadratic")));
                    }
                }
                EnergyDensity::HalfDistSquared
            }
            "isotropic-quadratic" => {
                let mu = raw.number("energy.mu", 1.0)?;
                let lambda = raw.number("energy.lambda", 0.0)?;
                EnergyDensity::isotropic_quadratic(mu, lambda)
                    .map_err(|e| cfg_err(format!("`energy.mu`/`energy.lambda`: {e}")))?
            }
            other => {
                return Err(cfg_err(format!(
                    "`energy.kind` = `{other}`; expected half-dist-squared or isotropic-quadratic"
                )))
            }
        };
        let fixture_non_objective = raw.number("energy.fixture_non_objective", 0.0)?;
        let energy_samples = raw.number("energy.samples", 1000usize)?;
        if energy_samples == 0 {
            return Err(cfg_err("`energy.samples` must be positive".into()));
        }

        let load = parse_load(raw, length)?;

        let defaults = SolverConfig::default();
        let solver = SolverConfig {
            newton_tol: raw.number("solver.newton_tol", defaults.newton_tol)?,
            rel_tol: raw.number("solver.rel_tol", defaults.rel_tol)?,
            step_tol: defaults.step_tol,
            max_iters: raw.number("solver.max_iters", defaults.max_iters)?,
            load_steps: raw.number("solver.load_steps", defaults.load_steps)?,
            min_load_step: raw.number("solver.min_load_step", defaults.min_load_step)?,
        };
        solver.validate().map_err(|e| cfg_err(format!("`solver.*`: {e}")))?;

        let elastica_n = raw.number("elastica.n", 2560usize)?;
        let elastica_tol = raw.number("elastica.tol", 1e-12)?;
        if elastica_n < 32 || !(elastica_tol > 0.0) {
            return Err(cfg_err(format!(
                "`elastica.n` must be >= 32 and `elastica.tol` positive, got {elastica_n} and {elastica_tol}"
            )));
        }

        let study_h: Vec<f64> = raw.list("study.h")?.unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
        if study_h.is_empty() || study_h.iter().any(|h| !(*h > 0.0 && *h <= 0.5)) {
            return Err(cfg_err(format!("`study.h` entries must lie in (0, 0.5], got {study_h:?}")));
        }
        if study_h.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(cfg_err(format!("`study.h` must be strictly decreasing, got {study_h:?}")));
        }
        let study_nx: Vec<usize> = match raw.list("study.nx")? {
            None => study_h.iter().map(|&h| default_nx(length, h)).collect(),
            Some(v) => {
                if v.len() != study_h.len() {
                    return Err(cfg_err(format!(
                        "`study.nx` has {} entries but `study.h` has {}",
                        v.len(),
                        study_h.len()
                    )));
                }
                v
            }
        };
        for (&h, &n) in study_h.iter().zip(&study_nx) {
            if n < min_nx(length, h) {
                return Err(cfg_err(format!(
                    "`study.nx` = {n} at h = {h} is below the resolution rule max(64, ceil(4L/h)) = {}",
                    min_nx(length, h)
                )));
            }
        }
        let study_ny = raw.number("study.ny", 8usize)?;
        if study_ny < thinbeam::diagnostics::MIN_NY {
            return Err(cfg_err(format!(
                "`study.ny` must be at least {}, got {study_ny}",
                thinbeam::diagnostics::MIN_NY
            )));
        }

        let truncation = parse_truncation(raw)?;
        let seed = raw.number("run.seed", 0u64)?;
        let out_dir = raw.get("output.dir").map(PathBuf::from);
        Ok(Self {
            length,
            nx,
            ny,
            h,
            energy,
            fixture_non_objective,
            energy_samples,
            load,
            solver,
            elastica_n,
            elastica_tol,
            study_h,
            study_nx,
            study_ny,
            truncation,
            seed,
            out_dir,
            hash: raw.hash(),
        })
    }
}

fn parse_load(raw: &RawConfig, length: f64) -> Result<LoadProfile, LabError> {
    let load = match raw.get("load.kind").unwrap_or("transverse") {
        "transverse" => LoadProfile::transverse(raw.number("load.gamma", 0.0)?),
        "constant" => LoadProfile::Constant(Vec2::new(raw.number("load.g1", 0.0)?, raw.number("load.g2", 0.0)?)),
        "samples" => {
            let need = |key: &str| {
                raw.list::<f64>(key)?
                    .ok_or_else(|| LabError::Config(format!("load.kind = samples needs `{key}`")))
            };
            let (x, g1, g2) = (need("load.x")?, need("load.g1")?, need("load.g2")?);
            if g1.len() != x.len() || g2.len() != x.len() {
                return Err(LabError::Config("`load.x`, `load.g1` and `load.g2` must have equal lengths".into()));
            }
            let values = g1.iter().zip(&g2).map(|(a, b)| Vec2::new(*a, *b)).collect();
            LoadProfile::samples(x, values).map_err(|e| LabError::Config(format!("`load.*`: {e}")))?
        }
        other => {
            return Err(LabError::Config(format!(
                "`load.kind` = `{other}`; expected transverse, constant or samples"
            )))
        }
    };
    load.validate(length).map_err(|e| LabError::Config(format!("`load.*`: {e}")))?;
    Ok(load)
}

fn parse_truncation(raw: &RawConfig) -> Result<TruncationConfig, LabError> {
    let h: f64 = raw.number("truncation.h", 0.2)?;
    if !(h > 0.0 && h <= 1.0 / 3.0) {
        return Err(LabError::Config(format!(
            "`truncation.h` must lie in (0, 1/3] so that at least three strips fit, got {h}"
        )));
    }
    let resolutions = match raw.get("truncation.resolutions") {
        None => vec![(64, 8), (128, 16), (256, 32)],
        Some(v) => v
            .split(',')
            .map(|s| {
                let s = s.trim();
                s.split_once('x')
                    .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                    .filter(|(a, b): &(usize, usize)| *a >= 2 && *b >= 2)
                    .ok_or_else(|| LabError::Config(format!("`truncation.resolutions` entry `{s}` is not NXxNY")))
            })
            .collect::<Result<_, _>>()?,
    };
    let a: f64 = raw.number("truncation.a", 4.0)?;
    let big_a: f64 = raw.number("truncation.A", 16.0)?;
    if !(a > 0.0) || !(big_a > a) || !big_a.is_finite() {
        return Err(LabError::Config(format!(
            "`truncation.a` and `truncation.A` need 0 < a < A, got a = {a}, A = {big_a}"
        )));
    }
    let p: f64 = raw.number("truncation.p", 2.0)?;
    if !(p > 1.0 && p.is_finite()) {
        return Err(LabError::Config(format!("`truncation.p` must exceed 1, got {p}")));
    }
    let widen: f64 = raw.number("truncation.widen", 2.0)?;
    if !(widen >= 1.0 && widen.is_finite()) {
        return Err(LabError::Config(format!("`truncation.widen` must be at least 1, got {widen}")));
    }
    let field = match raw.get("truncation.field").unwrap_or("rough") {
        "rough" => FieldKind::Rough,
        "smooth" => FieldKind::Smooth,
        other => {
            return Err(LabError::Config(format!(
                "`truncation.field` = `{other}`; expected rough or smooth"
            )))
        }
    };
    let fields = raw.number("truncation.fields", 50usize)?;
    if fields == 0 {
        return Err(LabError::Config("`truncation.fields` must be positive".into()));
    }
    Ok(TruncationConfig {
        h,
        fields,
        resolutions,
        a,
        big_a,
        p,
        widen,
        field,
        input: raw.get("truncation.input").map(PathBuf::from),
    })
}
