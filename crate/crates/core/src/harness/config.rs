//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Later assignments
//! win, so command-line overrides are simply applied after the file.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scenario::{ScenarioSpec, SignalKind};
use crate::error::{Error, Result};
use crate::linmodel::{HyperState, LinearModel};
use crate::sampler::SamplerConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Simulate,
    Fit,
    Validate,
    Eb,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "fit" => Ok(Mode::Fit),
            "validate" => Ok(Mode::Validate),
            "eb" => Ok(Mode::Eb),
            _ => Err(Error::Config(format!("unknown mode {s:?}"))),
        }
    }
}

/// Initial hyperparameters. `lambda1 = None` uses
/// [`crate::linmodel::Dataset::default_lambda1`], `q = None` uses `d^{-u}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperInit {
    pub q: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: f64,
    pub alpha: f64,
    pub u: f64,
}

impl Default for HyperInit {
    fn default() -> Self {
        Self { q: None, lambda1: None, lambda2: 1.0, alpha: 0.9, u: 1.5 }
    }
}

impl HyperInit {
    pub fn resolve(&self, model: &LinearModel) -> Result<HyperState> {
        let d = model.data().d() as f64;
        let q = self.q.unwrap_or_else(|| d.powf(-self.u));
        let l1 = self.lambda1.unwrap_or_else(|| model.data().default_lambda1());
        HyperState::new(q, l1, self.lambda2, self.alpha, self.u, model.lambda_max())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub seed: u64,
    pub replications: usize,
    pub out_dir: PathBuf,
    pub x_path: Option<PathBuf>,
    pub z_path: Option<PathBuf>,
    /// Noise variance for `fit`; `eb` estimates it instead.
    pub sigma2: Option<f64>,
    pub scenario: ScenarioSpec,
    pub sampler: SamplerConfig,
    pub hyper: HyperInit,
    /// Keep every `thin`-th sweep in the trace; `None` means 10 when
    /// `d > 100` and 1 otherwise.
    pub thin: Option<usize>,
    /// Number of points on the running E/F curves.
    pub checkpoints: usize,
    /// Worker threads for replications; 0 lets rayon decide.
    pub threads: usize,
    pub cv_folds: usize,
    pub lambda_grid: usize,
    /// Post-burn-in sweeps of the stationarity check in `validate`.
    pub validate_sweeps: usize,
}

impl RunConfig {
    pub fn defaults(mode: Mode) -> Self {
        Self {
            mode,
            seed: 0,
            replications: 1,
            out_dir: PathBuf::from("out"),
            x_path: None,
            z_path: None,
            sigma2: None,
            scenario: ScenarioSpec::default(),
            sampler: SamplerConfig::default(),
            hyper: HyperInit::default(),
            thin: None,
            checkpoints: 20,
            threads: 0,
            cv_folds: 10,
            lambda_grid: 50,
            validate_sweeps: 50_000,
        }
    }

    /// Build from ordered `(key, value)` pairs on top of the defaults.
    /// `seed` must appear somewhere.
    pub fn from_pairs<I, K, V>(mode: Mode, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut cfg = Self::defaults(mode);
        let mut seeded = false;
        for (k, v) in pairs {
            let (k, v) = (k.as_ref().trim(), v.as_ref().trim());
            seeded |= k == "seed";
            cfg.set(k, v)?;
        }
        if !seeded {
            return Err(Error::Config("missing required key `seed`".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let sc = &mut self.scenario;
        let sm = &mut self.sampler;
        let hy = &mut self.hyper;
        match key {
            "seed" => self.seed = num(key, value)?,
            "replications" => self.replications = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "x_path" => self.x_path = Some(PathBuf::from(value)),
            "z_path" => self.z_path = Some(PathBuf::from(value)),
            "sigma2" => self.sigma2 = Some(num(key, value)?),
            "n" => sc.n = num(key, value)?,
            "d" => sc.d = num(key, value)?,
            "s_star" => sc.s_star = num(key, value)?,
            "v" => sc.v = auto(key, value)?,
            "rho" => sc.rho = num(key, value)?,
            "sigma" => sc.sigma = num(key, value)?,
            "signal" => {
                sc.signal = match value {
                    "centered" => SignalKind::Centered,
                    "floor" => SignalKind::Floor,
                    _ => return Err(bad(key, value)),
                }
            }
            "gamma0" => sm.gamma0 = num(key, value)?,
            "iterations" => sm.iterations = num(key, value)?,
            "burn_in" => sm.burn_in = num(key, value)?,
            "mala_step" => sm.mala_step = auto(key, value)?,
            "drift_cap" => sm.drift_cap = auto(key, value)?,
            "target_accept_mala" => sm.target_accept_mala = num(key, value)?,
            "target_accept_rwm" => sm.target_accept_rwm = num(key, value)?,
            "fixed_phi" => sm.fixed_phi = num(key, value)?,
            "q" => hy.q = auto(key, value)?,
            "lambda1" => hy.lambda1 = auto(key, value)?,
            "lambda2" => hy.lambda2 = num(key, value)?,
            "alpha" => hy.alpha = num(key, value)?,
            "u" => hy.u = num(key, value)?,
            "thin" => self.thin = auto(key, value)?,
            "checkpoints" => self.checkpoints = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            "cv_folds" => self.cv_folds = num(key, value)?,
            "lambda_grid" => self.lambda_grid = num(key, value)?,
            "validate_sweeps" => self.validate_sweeps = num(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if self.checkpoints == 0 {
            return fail("checkpoints must be at least 1".into());
        }
        if self.thin == Some(0) {
            return fail("thin must be at least 1".into());
        }
        if self.cv_folds < 2 {
            return fail("cv_folds must be at least 2".into());
        }
        if self.lambda_grid < 2 {
            return fail("lambda_grid must be at least 2".into());
        }
        if let Some(s) = self.sigma2 {
            if !(s > 0.0 && s.is_finite()) {
                return fail(format!("sigma2 must be positive, got {s}"));
            }
        }
        match self.mode {
            Mode::Fit => {
                let (Some(x), Some(z)) = (&self.x_path, &self.z_path) else {
                    return fail("fit needs x_path and z_path".into());
                };
                for p in [x, z] {
                    if !p.is_file() {
                        return fail(format!("no such file: {}", p.display()));
                    }
                }
                if self.sigma2.is_none() {
                    return fail("fit needs sigma2 (use `eb` to estimate it)".into());
                }
            }
            Mode::Eb => {
                if self.x_path.is_some() != self.z_path.is_some() {
                    return fail("eb needs both x_path and z_path, or neither".into());
                }
            }
            Mode::Simulate | Mode::Validate => {}
        }
        if matches!(self.mode, Mode::Simulate | Mode::Eb) {
            self.scenario.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        self.sampler.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn thinning(&self, d: usize) -> usize {
        self.thin.unwrap_or(if d > 100 { 10 } else { 1 })
    }

    /// The resolved configuration in the same flat format it is read from.
    pub fn to_kv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| x.to_string());
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let sc = &self.scenario;
        let sm = &self.sampler;
        let hy = &self.hyper;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("seed", self.seed.to_string());
        put("replications", self.replications.to_string());
        put("out_dir", self.out_dir.display().to_string());
        if let Some(p) = path(&self.x_path) {
            put("x_path", p);
        }
        if let Some(p) = path(&self.z_path) {
            put("z_path", p);
        }
        if let Some(s2) = self.sigma2 {
            put("sigma2", s2.to_string());
        }
        put("n", sc.n.to_string());
        put("d", sc.d.to_string());
        put("s_star", sc.s_star.to_string());
        put("v", opt(sc.v));
        put("rho", sc.rho.to_string());
        put("sigma", sc.sigma.to_string());
        put("signal", match sc.signal {
            SignalKind::Centered => "centered".into(),
            SignalKind::Floor => "floor".into(),
        });
        put("gamma0", sm.gamma0.to_string());
        put("iterations", sm.iterations.to_string());
        put("burn_in", sm.burn_in.to_string());
        put("mala_step", opt(sm.mala_step));
        put("drift_cap", opt(sm.drift_cap));
        put("target_accept_mala", sm.target_accept_mala.to_string());
        put("target_accept_rwm", sm.target_accept_rwm.to_string());
        put("fixed_phi", sm.fixed_phi.to_string());
        put("q", opt(hy.q));
        put("lambda1", opt(hy.lambda1));
        put("lambda2", hy.lambda2.to_string());
        put("alpha", hy.alpha.to_string());
        put("u", hy.u.to_string());
        put("thin", self.thin.map_or("auto".into(), |t| t.to_string()));
        put("checkpoints", self.checkpoints.to_string());
        put("threads", self.threads.to_string());
        put("cv_folds", self.cv_folds.to_string());
        put("lambda_grid", self.lambda_grid.to_string());
        put("validate_sweeps", self.validate_sweeps.to_string());
        s
    }
}

/// Split a config file into `(key, value)` pairs, keeping their order.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(split_pair(line).map_err(|_| Error::Config(format!("line {}: expected key = value, got {raw:?}", i + 1)))?);
    }
    Ok(out)
}

/// Parse one `key=value` override.
pub fn split_pair(s: &str) -> Result<(String, String)> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => Err(Error::Config(format!("expected key=value, got {s:?}"))),
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::Config(format!("bad value {value:?} for `{key}`"))
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value))
}

fn auto<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    if value == "auto" {
        Ok(None)
    } else {
        num(key, value).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn later_pairs_override_earlier_ones() {
        let mut pairs = parse_kv("# scenario\nseed = 3\nd=50\n\n n = 40 \n").unwrap();
        pairs.push(split_pair("d=60").unwrap());
        let cfg = RunConfig::from_pairs(Mode::Simulate, pairs).unwrap();
        assert_eq!((cfg.seed, cfg.scenario.n, cfg.scenario.d), (3, 40, 60));
    }

    #[test]
    fn seed_is_mandatory() {
        let err = RunConfig::from_pairs(Mode::Simulate, [("d", "10")]).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(RunConfig::from_pairs(Mode::Simulate, [("seed", "1"), ("colour", "red")]).is_err());
        assert!(RunConfig::from_pairs(Mode::Simulate, [("seed", "x")]).is_err());
        assert!(parse_kv("seed 1").is_err());
    }

    #[test]
    fn fit_requires_existing_files() {
        let err = RunConfig::from_pairs(
            Mode::Fit,
            [("seed", "1"), ("x_path", "/nonexistent/x.csv"), ("z_path", "/nonexistent/z.csv"), ("sigma2", "1")],
        )
        .unwrap_err();
        assert!(err.to_string().contains("no such file"));
    }

    #[test]
    fn kv_dump_round_trips() {
        let cfg = RunConfig::from_pairs(Mode::Simulate, [("seed", "9"), ("v", "auto"), ("lambda1", "2.5"), ("thin", "3")]).unwrap();
        let back = RunConfig::from_pairs(Mode::Simulate, parse_kv(&cfg.to_kv()).unwrap()).unwrap();
        assert_eq!(cfg, back);
    }
}
