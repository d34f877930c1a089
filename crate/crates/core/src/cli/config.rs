//! Run configuration: a flat JSON object whose keys can be overridden by
//! command-line flags, resolved to explicit values before anything runs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::analysis::MeshPolicy;
use crate::assembly::Parity;
use crate::eigensolver::{Preconditioner, SolverConfig};
use crate::star::StarPolicy;
use crate::{Error, Result};

pub const FORMATS: [&str; 4] = ["csv", "json", "svg", "pgm"];

/// Every key a configuration file may contain. Keys irrelevant to the
/// command stay `None` and are dropped from the resolved file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Angle list or range, see [`parse_values`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alphas: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gammas: Option<String>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
    #[serde(rename = "scan_L", skip_serializing_if = "Option::is_none")]
    pub scan_l: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grading: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_theta: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ray_grading: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub refine_tolerance: Option<f64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preconditioner: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_alpha: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_pencil: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
}

/// Reads a configuration file; it must hold one flat JSON object.
pub fn load_config_map(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Error::config(format!("config {} is not JSON: {e}", path.display())))?;
    match value {
        Value::Object(map) => {
            if let Some((k, _)) = map.iter().find(|(_, v)| v.is_object()) {
                return Err(Error::config(format!("config keys must be flat; '{k}' holds an object")));
            }
            Ok(map)
        }
        _ => Err(Error::config("config file must contain a JSON object")),
    }
}

/// Overlays `flags` on `base` (flags win) and deserializes the result.
pub fn merge(base: Map<String, Value>, flags: Map<String, Value>) -> Result<RunConfig> {
    let mut map = base;
    for (k, v) in flags {
        if !v.is_null() {
            map.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::config(format!("invalid configuration: {e}")))
}

/// Parses a list of reals: `a,b,c`, an integer range `lo:hi`, or
/// `lo:hi:linear:n` / `lo:hi:geometric:n` with `n` points including both ends.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::config(format!("bad value list '{spec}': {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [single] => single.split(',').map(num).collect::<Result<Vec<_>>>()?,
        [lo, hi] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            if lo.fract() != 0.0 || hi.fract() != 0.0 || hi < lo {
                return Err(bad("a two-part range needs integer bounds lo ≤ hi"));
            }
            (lo as i64..=hi as i64).map(|v| v as f64).collect()
        }
        [lo, hi, kind, n] => {
            let (lo, hi) = (num(lo)?, num(hi)?);
            let n: usize = n.trim().parse().map_err(|_| bad("point count is not an integer"))?;
            if n < 2 || !(hi > lo) {
                return Err(bad("need at least 2 points and lo < hi"));
            }
            let t = |i: usize| i as f64 / (n - 1) as f64;
            match *kind {
                "linear" | "lin" => (0..n).map(|i| lo + (hi - lo) * t(i)).collect(),
                "geometric" | "geom" | "log" => {
                    if !(lo > 0.0) {
                        return Err(bad("geometric ranges need lo > 0"));
                    }
                    (0..n).map(|i| if i + 1 == n { hi } else { lo * (hi / lo).powf(t(i)) }).collect()
                }
                _ => return Err(bad("spacing must be linear or geometric")),
            }
        }
        _ => return Err(bad("expected a,b,c or lo:hi or lo:hi:spacing:n")),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad("values must be finite"));
    }
    Ok(values)
}

impl RunConfig {
    pub fn command(&self) -> &str {
        self.command.as_deref().unwrap_or("")
    }

    pub fn formats(&self) -> Vec<String> {
        self.formats.clone().unwrap_or_else(|| FORMATS.iter().map(|s| s.to_string()).collect())
    }

    pub fn wants(&self, format: &str) -> bool {
        self.formats().iter().any(|f| f == format)
    }

    /// Fills every default relevant to the command and checks ranges.
    pub fn resolve(mut self) -> Result<RunConfig> {
        let cmd = self.command().to_string();
        if let Some(f) = &self.formats {
            if let Some(bad) = f.iter().find(|f| !FORMATS.contains(&f.as_str())) {
                return Err(Error::config(format!("unknown format '{bad}' (expected csv, json, svg or pgm)")));
            }
        }
        self.formats = Some(self.formats());
        let mesh = MeshPolicy::default();
        let solver_defaults = |c: &mut RunConfig, k: usize, iters: usize| {
            let s = SolverConfig::for_count(k);
            c.tolerance.get_or_insert(s.tolerance);
            c.max_iterations.get_or_insert(iters);
            c.block_size.get_or_insert(s.block_size);
            c.preconditioner.get_or_insert("band-cholesky".into());
            c.seed.get_or_insert(s.seed);
        };
        let refinement_defaults = |c: &mut RunConfig| {
            c.min_levels.get_or_insert(mesh.min_levels);
            c.max_levels.get_or_insert(mesh.max_levels);
            c.refine_tolerance.get_or_insert(mesh.tolerance);
            c.n_r.get_or_insert(mesh.n_r);
            c.grading.get_or_insert(mesh.grading);
        };
        match cmd.as_str() {
            "interval" => {
                if self.gamma.is_some() && self.gammas.is_some() {
                    return Err(Error::config("give either gamma or gammas, not both"));
                }
                if self.half_length.is_some() && self.scan_l.is_some() {
                    return Err(Error::config("give either L or scan_L, not both"));
                }
                if self.gammas.is_none() {
                    self.gamma.get_or_insert(1.0);
                }
                if self.scan_l.is_none() {
                    self.half_length.get_or_insert(1.0);
                }
            }
            "sector" | "certify" => {
                let alpha = self.alpha.ok_or_else(|| Error::config(format!("{cmd} needs --alpha")))?;
                if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
                    return Err(Error::config(format!("alpha must lie in (0, π/2), got {alpha}")));
                }
                self.gamma.get_or_insert(1.0);
                self.parity.get_or_insert("even".into());
                let k = *self.k.get_or_insert(1);
                if cmd == "sector" {
                    refinement_defaults(&mut self);
                    self.decay_window.get_or_insert([0.4, 0.7]);
                } else {
                    self.n_r.get_or_insert(200);
                    self.grading.get_or_insert(mesh.grading);
                }
                solver_defaults(&mut self, k, mesh.solver.max_iterations);
                self.dump_pencil.get_or_insert(false);
            }
            "scan" | "count" | "fit" => {
                if self.alphas.is_none() {
                    return Err(Error::config(format!("{cmd} needs --alphas")));
                }
                self.gamma.get_or_insert(1.0);
                if cmd == "fit" {
                    let n = *self.n.get_or_insert(1);
                    self.order.get_or_insert(2);
                    let k = self.k.get_or_insert(n);
                    if *k < n {
                        return Err(Error::config(format!("k = {k} is smaller than the fitted mode n = {n}")));
                    }
                } else {
                    self.k.get_or_insert(1);
                }
                self.log_alpha.get_or_insert(cmd != "fit");
                refinement_defaults(&mut self);
                let k = self.k.unwrap();
                solver_defaults(&mut self, k, mesh.solver.max_iterations);
            }
            "stargraph" => {
                if self.angles.as_ref().is_none_or(|a| a.is_empty()) {
                    return Err(Error::config("stargraph needs --angles"));
                }
                self.gamma.get_or_insert(1.0);
                let sp = StarPolicy::default();
                let k = *self.k.get_or_insert(sp.k);
                self.r_max.get_or_insert(sp.r_max);
                self.n_r.get_or_insert(sp.n_r);
                self.first_width.get_or_insert(sp.first_width);
                self.n_theta.get_or_insert(sp.n_theta);
                self.ray_grading.get_or_insert(sp.ray_grading);
                solver_defaults(&mut self, k, sp.solver.max_iterations);
                self.dump_pencil.get_or_insert(false);
            }
            other => return Err(Error::config(format!("unknown command '{other}'"))),
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x > 0.0 && x.is_finite()) => Err(Error::config(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("gamma", self.gamma.filter(|_| self.command() != "interval"))?;
        if self.command() == "interval" {
            if let Some(g) = self.gamma {
                if !g.is_finite() || g < 0.0 {
                    return Err(Error::config(format!("gamma must be finite and non-negative, got {g}")));
                }
            }
        }
        positive("L", self.half_length)?;
        positive("r_max", self.r_max)?;
        positive("first_width", self.first_width)?;
        positive("tolerance", self.tolerance)?;
        positive("refine_tolerance", self.refine_tolerance)?;
        if let Some(r) = self.r_min {
            if r != 0.0 {
                return Err(Error::config("r_min must be 0: the vertex belongs to every domain"));
            }
        }
        if let Some(g) = self.grading {
            if !(g >= 1.0 && g.is_finite()) {
                return Err(Error::config(format!("grading must be at least 1, got {g}")));
            }
        }
        if let Some(g) = self.ray_grading {
            if !(g >= 1.0 && g.is_finite()) {
                return Err(Error::config(format!("ray_grading must be at least 1, got {g}")));
            }
        }
        if self.k == Some(0) || self.n == Some(0) {
            return Err(Error::config("k and n must be at least 1"));
        }
        if let (Some(lo), Some(hi)) = (self.min_levels, self.max_levels) {
            if lo < 2 || hi < lo {
                return Err(Error::config("need 2 ≤ min_levels ≤ max_levels"));
            }
        }
        if let Some([a, b]) = self.decay_window {
            if !(0.0 < a && a < b && b <= 1.0) {
                return Err(Error::config("decay_window must satisfy 0 < lo < hi ≤ 1"));
            }
        }
        if let Some(p) = &self.preconditioner {
            p.parse::<Preconditioner>()?;
        }
        if let Some(p) = &self.parity {
            p.parse::<Parity>()?;
        }
        for spec in [&self.alphas, &self.gammas, &self.scan_l].into_iter().flatten() {
            parse_values(spec)?;
        }
        Ok(())
    }

    pub fn solver(&self) -> Result<SolverConfig> {
        let k = self.k.unwrap_or(1);
        let d = SolverConfig::for_count(k);
        Ok(SolverConfig {
            block_size: self.block_size.unwrap_or(d.block_size).max(k + 2),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            shift_c: None,
            preconditioner: match &self.preconditioner {
                Some(p) => p.parse()?,
                None => d.preconditioner,
            },
            seed: self.seed.unwrap_or(d.seed),
        })
    }

    pub fn mesh_policy(&self) -> Result<MeshPolicy> {
        let d = MeshPolicy::default();
        Ok(MeshPolicy {
            n_r: self.n_r.unwrap_or(d.n_r),
            grading: self.grading.unwrap_or(d.grading),
            r_max: self.r_max,
            n_theta: self.n_theta,
            min_levels: self.min_levels.unwrap_or(d.min_levels),
            max_levels: self.max_levels.unwrap_or(d.max_levels),
            tolerance: self.refine_tolerance.unwrap_or(d.tolerance),
            solver: self.solver()?,
            ..d
        })
    }

    pub fn star_policy(&self) -> Result<StarPolicy> {
        let d = StarPolicy::default();
        Ok(StarPolicy {
            r_max: self.r_max.unwrap_or(d.r_max),
            n_r: self.n_r.unwrap_or(d.n_r),
            first_width: self.first_width.unwrap_or(d.first_width),
            n_theta: self.n_theta.unwrap_or(d.n_theta),
            ray_grading: self.ray_grading.unwrap_or(d.ray_grading),
            k: self.k.unwrap_or(d.k),
            solver: self.solver()?,
            sector: d.sector,
        })
    }

    pub fn parity(&self) -> Result<Parity> {
        self.parity.as_deref().unwrap_or("even").parse()
    }

    /// Canonical JSON text: fields in declaration order, `None` fields omitted.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}
