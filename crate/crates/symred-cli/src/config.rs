//! Run configuration: command-line flags merged with an optional JSON
//! config file.  Explicit flags always win over config-file entries;
//! config entries win over built-in defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::Failure;

/// Default resonance tolerance of the normal-form engine.
pub const DEFAULT_ORDER: usize = 4;

/// JSON config file mirroring the command-line flags.  Keys use the flag
/// names with dashes replaced by underscores (`tol_res`, `t_final`); the
/// `b` and `r` keys hold numbers for the scalar commands and range
/// strings (`"start:stop:step"`) for `sweep`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub system: Option<String>,
    pub masses: Option<Vec<f64>>,
    pub lengths: Option<Vec<f64>>,
    pub gravity: Option<f64>,
    pub d0: Option<f64>,
    pub b: Option<serde_json::Value>,
    pub r: Option<serde_json::Value>,
    pub order: Option<usize>,
    pub tol_res: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub state: Option<Vec<f64>>,
    pub jobs: Option<usize>,
    pub reconstruct: Option<bool>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<FileConfig, Failure> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|err| Failure::Usage(format!("cannot read config {}: {err}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|err| Failure::Usage(format!("invalid config {}: {err}", path.display())))
    }

    fn number(value: &serde_json::Value, key: &str) -> Result<f64, Failure> {
        value
            .as_f64()
            .ok_or_else(|| Failure::Usage(format!("config key `{key}` must be a number")))
    }

    fn range_text(value: &serde_json::Value, key: &str) -> Result<String, Failure> {
        value
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| Failure::Usage(format!("config key `{key}` must be a range string")))
    }
}

/// Which reference system a run works on, with its model parameters.
#[derive(Clone, Debug)]
pub enum ModelSelection {
    ThreeBody { masses: [f64; 3], d0: f64 },
    Pendulum { masses: [f64; 2], lengths: [f64; 2], gravity: f64 },
}

/// An inclusive parameter range `start, start + step, ..., <= stop`.
#[derive(Clone, Copy, Debug)]
pub struct ParamRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn parse(text: &str) -> Result<ParamRange, Failure> {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts.as_slice() else {
            return Err(Failure::Usage(format!(
                "range must be start:stop:step, got `{text}`"
            )));
        };
        let parse = |part: &str, name: &str| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Failure::Usage(format!("range {name} `{part}` is not a number")))
        };
        let range = ParamRange {
            start: parse(start, "start")?,
            stop: parse(stop, "stop")?,
            step: parse(step, "step")?,
        };
        if !range.start.is_finite() || !range.stop.is_finite() || !range.step.is_finite() {
            return Err(Failure::Usage(format!("range `{text}` has non-finite parts")));
        }
        if range.step <= 0.0 {
            return Err(Failure::Usage(format!(
                "range step must be positive, got {}",
                range.step
            )));
        }
        Ok(range)
    }

    /// The sampled values; empty when `stop < start`.
    pub fn values(&self) -> Vec<f64> {
        if self.stop < self.start {
            return Vec::new();
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// Fully merged and validated options of one invocation.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub model: ModelSelection,
    /// Triangle size `b` (three-body scalar commands).
    pub size: Option<f64>,
    /// Group momentum `r` (pendulum scalar commands).
    pub momentum: Option<f64>,
    /// Sweep range over `b` or `r`.
    pub range: Option<ParamRange>,
    /// Normal-form truncation order.
    pub order: usize,
    /// Resonance denominator tolerance.
    pub resonance_tol: f64,
    pub time_step: Option<f64>,
    pub horizon: Option<f64>,
    pub initial_state: Option<Vec<f64>>,
    pub reconstruct: bool,
    pub jobs: usize,
    pub output: Option<PathBuf>,
}

/// Raw option values shared by every subcommand, before validation.
#[derive(Debug, Default)]
pub struct RawOptions {
    pub system: Option<String>,
    pub masses: Option<Vec<f64>>,
    pub lengths: Option<Vec<f64>>,
    pub gravity: Option<f64>,
    pub d0: Option<f64>,
    /// Scalar `--b` / `--r` (set by equilibrium, normalform, integrate).
    pub size: Option<f64>,
    pub momentum: Option<f64>,
    /// Range `--b` / `--r` strings (set by sweep).
    pub size_range: Option<String>,
    pub momentum_range: Option<String>,
    pub order: Option<usize>,
    pub tol_res: Option<f64>,
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub state: Option<Vec<f64>>,
    pub jobs: Option<usize>,
    pub reconstruct: bool,
    pub out: Option<PathBuf>,
    pub expects_range: bool,
}

impl RunConfig {
    pub fn resolve(flags: RawOptions, file: FileConfig) -> Result<RunConfig, Failure> {
        let system = flags
            .system
            .or(file.system)
            .ok_or_else(|| Failure::Usage("missing --system (three-body | pendulum)".to_string()))?;

        let positive = |value: f64, name: &str| {
            if value > 0.0 && value.is_finite() {
                Ok(value)
            } else {
                Err(Failure::Usage(format!("{name} must be positive, got {value}")))
            }
        };

        let masses = flags.masses.or(file.masses);
        let model = match system.as_str() {
            "three-body" => {
                let masses = masses.unwrap_or_else(|| vec![1.0, 1.0, 1.0]);
                let [m1, m2, m3] = masses.as_slice() else {
                    return Err(Failure::Usage(format!(
                        "three-body expects 3 masses, got {}",
                        masses.len()
                    )));
                };
                for &m in [m1, m2, m3] {
                    positive(m, "mass")?;
                }
                ModelSelection::ThreeBody {
                    masses: [*m1, *m2, *m3],
                    d0: positive(flags.d0.or(file.d0).unwrap_or(6.0), "d0")?,
                }
            }
            "pendulum" => {
                let masses = masses.unwrap_or_else(|| vec![1.0, 1.0]);
                let [m1, m2] = masses.as_slice() else {
                    return Err(Failure::Usage(format!(
                        "pendulum expects 2 masses, got {}",
                        masses.len()
                    )));
                };
                let lengths = flags.lengths.or(file.lengths).unwrap_or_else(|| vec![1.0, 1.0]);
                let [l1, l2] = lengths.as_slice() else {
                    return Err(Failure::Usage(format!(
                        "pendulum expects 2 lengths, got {}",
                        lengths.len()
                    )));
                };
                for &x in [m1, m2, l1, l2] {
                    positive(x, "pendulum parameter")?;
                }
                ModelSelection::Pendulum {
                    masses: [*m1, *m2],
                    lengths: [*l1, *l2],
                    gravity: positive(flags.gravity.or(file.gravity).unwrap_or(1.0), "gravity")?,
                }
            }
            other => {
                return Err(Failure::Usage(format!(
                    "unknown system `{other}` (expected three-body or pendulum)"
                )));
            }
        };

        // `b` and `r` arrive as scalars or as sweep ranges depending on
        // the subcommand; the config file mirrors whichever form applies.
        let mut size = flags.size;
        let mut momentum = flags.momentum;
        let mut size_range = flags.size_range;
        let mut momentum_range = flags.momentum_range;
        if flags.expects_range {
            if size_range.is_none() {
                if let Some(value) = &file.b {
                    size_range = Some(FileConfig::range_text(value, "b")?);
                }
            }
            if momentum_range.is_none() {
                if let Some(value) = &file.r {
                    momentum_range = Some(FileConfig::range_text(value, "r")?);
                }
            }
        } else {
            if size.is_none() {
                if let Some(value) = &file.b {
                    size = Some(FileConfig::number(value, "b")?);
                }
            }
            if momentum.is_none() {
                if let Some(value) = &file.r {
                    momentum = Some(FileConfig::number(value, "r")?);
                }
            }
        }
        if let Some(b) = size {
            positive(b, "b")?;
        }
        if let Some(r) = momentum {
            positive(r, "r")?;
        }
        let range = match (size_range, momentum_range) {
            (None, None) => None,
            (Some(text), None) => {
                if !matches!(model, ModelSelection::ThreeBody { .. }) {
                    return Err(Failure::Usage(
                        "a --b range applies to the three-body system; sweep the pendulum over --r"
                            .to_string(),
                    ));
                }
                let range = ParamRange::parse(&text)?;
                if range.start <= 0.0 {
                    return Err(Failure::Usage(format!(
                        "b must stay positive, range starts at {}",
                        range.start
                    )));
                }
                Some(range)
            }
            (None, Some(text)) => {
                if !matches!(model, ModelSelection::Pendulum { .. }) {
                    return Err(Failure::Usage(
                        "an --r range applies to the pendulum; sweep the three-body over --b"
                            .to_string(),
                    ));
                }
                let range = ParamRange::parse(&text)?;
                if range.start <= 0.0 {
                    return Err(Failure::Usage(format!(
                        "r must stay positive, range starts at {}",
                        range.start
                    )));
                }
                Some(range)
            }
            (Some(_), Some(_)) => {
                return Err(Failure::Usage(
                    "give exactly one sweep range (--b or --r)".to_string(),
                ));
            }
        };

        let order = flags.order.or(file.order).unwrap_or(DEFAULT_ORDER);
        if order < 2 || !order.is_multiple_of(2) {
            return Err(Failure::Usage(format!(
                "normal-form order must be even and at least 2, got {order}"
            )));
        }
        let resonance_tol = flags
            .tol_res
            .or(file.tol_res)
            .unwrap_or(symred::nf::DEFAULT_RESONANCE_TOL);
        positive(resonance_tol, "tol-res")?;

        let time_step = flags.dt.or(file.dt);
        if let Some(dt) = time_step {
            positive(dt, "dt")?;
        }
        let horizon = flags.t_final.or(file.t_final);
        if let Some(t) = horizon {
            if !t.is_finite() || t < 0.0 {
                return Err(Failure::Usage(format!(
                    "t-final must be nonnegative, got {t}"
                )));
            }
        }

        let jobs = flags.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(Failure::Usage("jobs must be at least 1".to_string()));
        }

        Ok(RunConfig {
            model,
            size,
            momentum,
            range,
            order,
            resonance_tol,
            time_step,
            horizon,
            initial_state: flags.state.or(file.state),
            reconstruct: flags.reconstruct || file.reconstruct.unwrap_or(false),
            jobs,
            output: flags.out.or(file.out),
        })
    }

    /// The scalar `b`, required for three-body commands.
    pub fn require_size(&self) -> Result<f64, Failure> {
        self.size
            .ok_or_else(|| Failure::Usage("three-body commands need --b".to_string()))
    }

    /// The scalar `r`, required for pendulum commands.
    pub fn require_momentum(&self) -> Result<f64, Failure> {
        self.momentum
            .ok_or_else(|| Failure::Usage("pendulum commands need --r".to_string()))
    }
}
