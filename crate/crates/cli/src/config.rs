//! Run configuration: flat key = value files plus flag overrides.
//!
//! Unknown keys are rejected with their line number; every value is
//! validated before any compute starts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hydrolim_core::symmetry::InitialDataRecipe;
use hydrolim_core::{Error, Grid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    RunPe,
    RunSns,
    Converge,
    Verify,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::RunPe => "run-pe",
            Mode::RunSns => "run-sns",
            Mode::Converge => "converge",
            Mode::Verify => "verify",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecipeKind {
    SingleMode,
    Random,
}

impl RecipeKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "single-mode" => Ok(RecipeKind::SingleMode),
            "random" => Ok(RecipeKind::Random),
            other => Err(Error::Config(format!(
                "unknown recipe '{other}' (expected 'single-mode' or 'random')"
            ))),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RecipeKind::SingleMode => "single-mode",
            RecipeKind::Random => "random",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub l1: f64,
    pub l2: f64,
    pub dt: f64,
    pub t_final: f64,
    pub output_every: usize,
    pub eps: Vec<f64>,
    pub recipe: RecipeKind,
    pub amplitude: f64,
    pub seed: u64,
    pub cfl_safety: f64,
    pub out_dir: PathBuf,
    pub save_state: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        RunConfig {
            n: 32,
            l1: two_pi,
            l2: two_pi,
            dt: 5e-4,
            t_final: 1.0,
            output_every: 1,
            eps: vec![0.2, 0.1, 0.05],
            recipe: RecipeKind::SingleMode,
            amplitude: 1.0,
            seed: 42,
            cfl_safety: 0.5,
            out_dir: PathBuf::from("out"),
            save_state: false,
        }
    }
}

/// Optional flag overrides applied on top of the config file (or the
/// defaults when no file is given).
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub l1: Option<f64>,
    pub l2: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub output_every: Option<usize>,
    pub eps: Option<Vec<f64>>,
    pub recipe: Option<RecipeKind>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
    pub cfl_safety: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub save_state: Option<bool>,
}

impl RunConfig {
    /// Loads a key = value file; '#' starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
        Self::from_str_named(&text, &path.display().to_string())
    }

    pub fn from_str_named(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::Config(format!("{origin}:{}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
            let key = key.trim();
            let value = value.trim();
            let parse_f64 = |what: &str| -> Result<f64> {
                value
                    .parse::<f64>()
                    .map_err(|_| at(format!("{what} must be a number, got '{value}'")))
            };
            match key {
                "n" => {
                    cfg.n = value
                        .parse()
                        .map_err(|_| at(format!("n must be a positive integer, got '{value}'")))?
                }
                "l1" => cfg.l1 = parse_f64("l1")?,
                "l2" => cfg.l2 = parse_f64("l2")?,
                "dt" => cfg.dt = parse_f64("dt")?,
                "t_final" => cfg.t_final = parse_f64("t_final")?,
                "output_every" => {
                    cfg.output_every = value
                        .parse()
                        .map_err(|_| at(format!("output_every must be a positive integer, got '{value}'")))?
                }
                "eps" => {
                    cfg.eps = value
                        .split(',')
                        .map(|s| {
                            s.trim()
                                .parse::<f64>()
                                .map_err(|_| at(format!("eps entry '{s}' is not a number")))
                        })
                        .collect::<Result<Vec<f64>>>()?
                }
                "recipe" => cfg.recipe = RecipeKind::parse(value).map_err(|e| at(e.to_string()))?,
                "amplitude" => cfg.amplitude = parse_f64("amplitude")?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| at(format!("seed must be an unsigned integer, got '{value}'")))?
                }
                "cfl_safety" => cfg.cfl_safety = parse_f64("cfl_safety")?,
                "out" => cfg.out_dir = PathBuf::from(value),
                "save_state" => {
                    cfg.save_state = value
                        .parse()
                        .map_err(|_| at(format!("save_state must be true or false, got '{value}'")))?
                }
                other => return Err(at(format!("unknown key '{other}'"))),
            }
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(v) = ov.n {
            self.n = v;
        }
        if let Some(v) = ov.l1 {
            self.l1 = v;
        }
        if let Some(v) = ov.l2 {
            self.l2 = v;
        }
        if let Some(v) = ov.dt {
            self.dt = v;
        }
        if let Some(v) = ov.t_final {
            self.t_final = v;
        }
        if let Some(v) = ov.output_every {
            self.output_every = v;
        }
        if let Some(v) = &ov.eps {
            self.eps = v.clone();
        }
        if let Some(v) = ov.recipe {
            self.recipe = v;
        }
        if let Some(v) = ov.amplitude {
            self.amplitude = v;
        }
        if let Some(v) = ov.seed {
            self.seed = v;
        }
        if let Some(v) = ov.cfl_safety {
            self.cfl_safety = v;
        }
        if let Some(v) = &ov.out_dir {
            self.out_dir = v.clone();
        }
        if let Some(v) = ov.save_state {
            self.save_state = v;
        }
    }

    /// Full validation for a mode; nothing is computed before this passes.
    pub fn validate(&self, mode: Mode) -> Result<()> {
        if self.n == 0 || !self.n.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n must be a positive even integer, got {}",
                self.n
            )));
        }
        for (name, v) in [("l1", self.l1), ("l2", self.l2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::Config("t_final must be positive".into()));
        }
        if self.output_every == 0 {
            return Err(Error::Config("output_every must be at least 1".into()));
        }
        if !(self.amplitude.is_finite()) {
            return Err(Error::Config("amplitude must be finite".into()));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                self.cfl_safety
            )));
        }
        match mode {
            Mode::Converge => {
                if self.eps.len() < 3 {
                    return Err(Error::Config(format!(
                        "need >= 3 epsilons for converge mode, got {}",
                        self.eps.len()
                    )));
                }
            }
            Mode::RunSns => {
                if self.eps.len() != 1 {
                    return Err(Error::Config(format!(
                        "run-sns takes a single eps, got {}",
                        self.eps.len()
                    )));
                }
            }
            Mode::RunPe | Mode::Verify => {}
        }
        if matches!(mode, Mode::RunSns | Mode::Converge) {
            for &e in &self.eps {
                if !(e > 0.0 && e.is_finite()) {
                    return Err(Error::Config(format!("eps must be positive, got {e}")));
                }
            }
            for win in self.eps.windows(2) {
                if win[1].partial_cmp(&win[0]) != Some(std::cmp::Ordering::Less) {
                    return Err(Error::Config("eps list must be strictly decreasing".into()));
                }
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.n, self.n, self.n, self.l1, self.l2)
    }

    pub fn initial_recipe(&self) -> InitialDataRecipe {
        match self.recipe {
            RecipeKind::SingleMode => InitialDataRecipe::SingleMode {
                amplitude: self.amplitude,
            },
            RecipeKind::Random => InitialDataRecipe::RandomBand {
                amplitude: self.amplitude,
                max_mode: 3,
                seed: self.seed,
            },
        }
    }

    /// Canonical echo used in the manifest and hashed as the input
    /// fingerprint; 17 significant digits for all floats.
    pub fn echo(&self, mode: Mode) -> String {
        use crate::outputs::fmt_f64;
        let eps = self
            .eps
            .iter()
            .map(|&e| fmt_f64(e))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "mode = {mode}\nn = {}\nl1 = {}\nl2 = {}\ndt = {}\nt_final = {}\noutput_every = {}\neps = {}\nrecipe = {}\namplitude = {}\nseed = {}\ncfl_safety = {}\nsave_state = {}\n",
            self.n,
            fmt_f64(self.l1),
            fmt_f64(self.l2),
            fmt_f64(self.dt),
            fmt_f64(self.t_final),
            self.output_every,
            eps,
            self.recipe.label(),
            fmt_f64(self.amplitude),
            self.seed,
            fmt_f64(self.cfl_safety),
            self.save_state,
        )
    }
}
