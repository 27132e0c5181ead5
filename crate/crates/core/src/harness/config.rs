//! Flat key-value run configuration, CLI overrides and resolution into a
//! fully specified [`RunConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::{Angle, ModelSpec, SpacingEnsemble};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Sweep,
    Eps,
    Bcurve,
    Order,
    Loop,
    Classify,
}

impl Experiment {
    pub const ALL: [Experiment; 10] = [
        Experiment::Fig1,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Sweep,
        Experiment::Eps,
        Experiment::Bcurve,
        Experiment::Order,
        Experiment::Loop,
        Experiment::Classify,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Sweep => "sweep",
            Experiment::Eps => "eps",
            Experiment::Bcurve => "bcurve",
            Experiment::Order => "order",
            Experiment::Loop => "loop",
            Experiment::Classify => "classify",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(HarnessError::Config(format!("unknown format '{s}' (csv|json)"))),
        }
    }
}

/// A number given either as a TOML number or as an exact decimal or fraction string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Exact {
    Number(f64),
    Text(String),
}

impl Exact {
    pub fn text(&self) -> String {
        match self {
            Exact::Number(x) => format!("{x}"),
            Exact::Text(s) => s.clone(),
        }
    }

    pub fn value(&self) -> Result<f64, HarnessError> {
        match self {
            Exact::Number(x) => Ok(*x),
            Exact::Text(s) => {
                let q = crate::asymptotics::parse_exact(s).map_err(|e| HarnessError::Config(e.to_string()))?;
                Ok(num_traits::ToPrimitive::to_f64(&q).unwrap_or(f64::NAN))
            }
        }
    }
}

/// The flat configuration file. Every key is optional; CLI flags override it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<String>,
    /// picket | perturbed | power_law | two_level | random_spacing
    pub model: Option<String>,
    pub n: Option<usize>,
    pub ladder: Option<Vec<usize>>,
    pub amplitude: Option<f64>,
    pub seed: Option<u64>,
    pub r: Option<Exact>,
    pub t: Option<Exact>,
    pub ensemble: Option<String>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub omega: Option<f64>,
    pub phi: Option<f64>,
    pub lambda_start: Option<f64>,
    pub lambda_stop: Option<f64>,
    pub lambda_step: Option<f64>,
    pub lambda_grid: Option<Vec<f64>>,
    pub center_re: Option<f64>,
    pub center_im: Option<f64>,
    pub radius: Option<f64>,
    pub windings: Option<i32>,
    pub samples: Option<usize>,
    pub lambda_max: Option<f64>,
    pub delta: Option<f64>,
    pub pairs: Option<Vec<[Exact; 2]>>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
}

impl RawConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Values set in `over` replace those in `self`.
    pub fn overridden_by(mut self, over: RawConfig) -> RawConfig {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            experiment, model, n, ladder, amplitude, seed, r, t, ensemble, eps1, eps2, omega, phi,
            lambda_start, lambda_stop, lambda_step, lambda_grid, center_re, center_im, radius, windings,
            samples, lambda_max, delta, pairs, out, format, jobs
        );
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    Range { start: f64, stop: f64, step: f64 },
    List { values: Vec<f64> },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, HarnessError> {
        match self {
            GridSpec::List { values } => {
                if values.is_empty() {
                    return Err(HarnessError::Config("empty lambda grid".into()));
                }
                Ok(values.clone())
            }
            &GridSpec::Range { start, stop, step } => {
                if !(start.is_finite() && stop.is_finite() && step.is_finite()) || step <= 0.0 || stop < start {
                    return Err(HarnessError::Config(format!(
                        "invalid lambda range start={start} stop={stop} step={step}"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                if count > 10_000_000 {
                    return Err(HarnessError::Config(format!("lambda grid too large ({count} points)")));
                }
                Ok((0..count).map(|i| start + i as f64 * step).collect())
            }
        }
    }
}

/// Parameters of the two-level loop experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopConfig {
    pub eps1: f64,
    pub eps2: f64,
    pub omega: f64,
    pub center_re: f64,
    pub center_im: f64,
    pub radius: f64,
    pub windings: i32,
    pub samples: usize,
    pub lambda_max: f64,
    pub delta: f64,
}

/// A fully resolved run. Everything that affects data files is here; the
/// output directory and worker count are not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub phi: f64,
    pub seed: u64,
    pub format: Format,
    pub grid: Option<GridSpec>,
    pub systems: Vec<ModelSpec>,
    pub looping: Option<LoopConfig>,
    pub pairs: Vec<[String; 2]>,
}

/// Where and how to run, kept apart from the digest-relevant [`RunConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlacement {
    pub out: PathBuf,
    pub jobs: Option<usize>,
}

pub const DEFAULT_OUT: &str = "results";
pub const FIG3_AMPLITUDE: f64 = 0.1;

fn range(start: f64, stop: f64, step: f64) -> GridSpec {
    GridSpec::Range { start, stop, step }
}

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, HarnessError> {
    Err(HarnessError::Config(msg.into()))
}

impl RawConfig {
    fn grid_or(&self, default: GridSpec) -> Result<GridSpec, HarnessError> {
        if let Some(values) = &self.lambda_grid {
            if self.lambda_start.is_some() || self.lambda_stop.is_some() || self.lambda_step.is_some() {
                return cfg_err("lambda_grid excludes lambda_start/stop/step");
            }
            let g = GridSpec::List { values: values.clone() };
            g.values()?;
            return Ok(g);
        }
        let GridSpec::Range { start, stop, step } = default else {
            return Ok(default);
        };
        let g = range(
            self.lambda_start.unwrap_or(start),
            self.lambda_stop.unwrap_or(stop),
            self.lambda_step.unwrap_or(step),
        );
        g.values()?;
        Ok(g)
    }

    fn exact(&self, x: &Option<Exact>) -> Result<Option<f64>, HarnessError> {
        x.as_ref().map(Exact::value).transpose()
    }

    fn model_kind(&self) -> Result<Option<&str>, HarnessError> {
        if let Some(m) = &self.model {
            return match m.as_str() {
                "picket" | "perturbed" | "power_law" | "two_level" | "random_spacing" => Ok(Some(m.as_str())),
                other => cfg_err(format!(
                    "unknown model '{other}' (picket|perturbed|power_law|two_level|random_spacing)"
                )),
            };
        }
        if self.r.is_some() || self.t.is_some() {
            return Ok(Some("power_law"));
        }
        if self.amplitude.is_some() {
            return Ok(Some("perturbed"));
        }
        if self.ensemble.is_some() {
            return Ok(Some("random_spacing"));
        }
        if self.eps1.is_some() || self.eps2.is_some() || self.omega.is_some() {
            return Ok(Some("two_level"));
        }
        Ok(None)
    }

    fn model_at(&self, kind: &str, n: usize) -> Result<ModelSpec, HarnessError> {
        let seed = self.seed.unwrap_or(0);
        let spec = match kind {
            "picket" => ModelSpec::PicketFence { n },
            "perturbed" => ModelSpec::PerturbedPicketFence {
                n,
                amplitude: self.amplitude.unwrap_or(FIG3_AMPLITUDE),
                seed,
            },
            "power_law" => ModelSpec::PowerLaw {
                n,
                r: self.exact(&self.r)?.unwrap_or(0.0),
                t: self.exact(&self.t)?.unwrap_or(2.0),
            },
            "two_level" => ModelSpec::TwoLevel {
                eps1: self.eps1.unwrap_or(0.0),
                eps2: self.eps2.unwrap_or(1.0),
                omega: Angle::from_degrees(self.omega.unwrap_or(30.0)),
            },
            "random_spacing" => ModelSpec::RandomSpacing {
                n,
                ensemble: match self.ensemble.as_deref().unwrap_or("poisson") {
                    "poisson" => SpacingEnsemble::Poisson,
                    "wigner" => SpacingEnsemble::Wigner,
                    other => return cfg_err(format!("unknown ensemble '{other}' (poisson|wigner)")),
                },
                seed,
            },
            _ => unreachable!(),
        };
        spec.build().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(spec)
    }

    fn ladder_or(&self, default: &[usize]) -> Result<Vec<usize>, HarnessError> {
        if self.ladder.is_some() && self.n.is_some() {
            return cfg_err("n and ladder are mutually exclusive");
        }
        let ladder = match (&self.ladder, self.n) {
            (Some(l), _) => l.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => default.to_vec(),
        };
        if ladder.is_empty() {
            return cfg_err("empty N ladder");
        }
        Ok(ladder)
    }

    /// Resolves experiment defaults. `experiment` is the subcommand; a
    /// different `experiment` key in the file is a config error.
    pub fn resolve(&self, experiment: Experiment) -> Result<(RunConfig, RunPlacement), HarnessError> {
        if let Some(e) = &self.experiment {
            let named: Experiment = e.parse()?;
            if named != experiment {
                return cfg_err(format!("config file is for '{named}', not '{experiment}'"));
            }
        }
        let phi = self.phi.unwrap_or(0.0);
        if !(0.0..=90.0).contains(&phi) {
            return cfg_err(format!("phi = {phi} must lie in [0, 90] degrees"));
        }
        let format = self.format.as_deref().map(str::parse).transpose()?.unwrap_or_default();
        let seed = self.seed.unwrap_or(0);
        let kind = self.model_kind()?;
        let single = |default_kind: &str, default_n: usize| -> Result<Vec<ModelSpec>, HarnessError> {
            Ok(vec![self.model_at(kind.unwrap_or(default_kind), self.n.unwrap_or(default_n))?])
        };
        let picket_only = |what: &str| -> Result<(), HarnessError> {
            match kind {
                None | Some("picket") | Some("perturbed") => Ok(()),
                Some(k) => cfg_err(format!("{what} needs a picket-fence model, got '{k}'")),
            }
        };
        let mut grid = None;
        let mut looping = None;
        let mut pairs = Vec::new();
        let systems = match experiment {
            Experiment::Fig1 => {
                picket_only("fig1")?;
                grid = Some(self.grid_or(range(0.001, 2.0, 0.001))?);
                let ladder = self.ladder_or(&[15, 43])?;
                ladder
                    .iter()
                    .map(|&n| self.model_at(kind.unwrap_or("picket"), n))
                    .collect::<Result<_, _>>()?
            }
            Experiment::Fig2 => {
                picket_only("fig2")?;
                let ladder = self.ladder_or(&[15, 19, 27, 43])?;
                if let Some(&n) = ladder.iter().find(|&&n| n < 3) {
                    return cfg_err(format!("fig2 ladder needs N >= 3, got {n}"));
                }
                ladder
                    .iter()
                    .map(|&n| self.model_at(kind.unwrap_or("picket"), n))
                    .collect::<Result<_, _>>()?
            }
            Experiment::Fig3 => {
                grid = Some(self.grid_or(range(0.005, 1.0, 0.005))?);
                match kind {
                    Some(k) => vec![self.model_at(k, self.n.unwrap_or(101))?],
                    None if self.n.is_some() => vec![self.model_at("picket", self.n.unwrap())?],
                    None => vec![
                        ModelSpec::PicketFence { n: 101 },
                        ModelSpec::PerturbedPicketFence { n: 101, amplitude: FIG3_AMPLITUDE, seed },
                        ModelSpec::PerturbedPicketFence { n: 1001, amplitude: FIG3_AMPLITUDE, seed },
                        ModelSpec::PowerLaw { n: 101, r: 1.0, t: 4.0 },
                        ModelSpec::PowerLaw { n: 1001, r: 1.0, t: 4.0 },
                        ModelSpec::PowerLaw { n: 101, r: 0.0, t: 4.0 },
                    ],
                }
            }
            Experiment::Fig4 => {
                picket_only("fig4")?;
                let n = self.n.unwrap_or(19);
                vec![
                    self.model_at("picket", n)?,
                    ModelSpec::PerturbedPicketFence {
                        n,
                        amplitude: self.amplitude.unwrap_or(FIG3_AMPLITUDE),
                        seed,
                    },
                ]
                .into_iter()
                .map(|s| s.build().map(|_| s).map_err(|e| HarnessError::Config(e.to_string())))
                .collect::<Result<_, _>>()?
            }
            Experiment::Sweep => {
                grid = Some(self.grid_or(range(0.001, 2.0, 0.001))?);
                single("picket", 15)?
            }
            Experiment::Eps => single("picket", 15)?,
            Experiment::Bcurve => {
                grid = Some(self.grid_or(range(0.005, 1.0, 0.005))?);
                single("picket", 101)?
            }
            Experiment::Order => {
                if phi != 0.0 {
                    return cfg_err("order parameter needs phi = 0");
                }
                grid = Some(self.grid_or(range(0.005, 1.0, 0.005))?);
                single("picket", 101)?
            }
            Experiment::Loop => {
                let spec = self.model_at("two_level", 2)?;
                if let Some(k) = kind {
                    if k != "two_level" {
                        return cfg_err(format!("loop needs the two-level model, got '{k}'"));
                    }
                }
                let ModelSpec::TwoLevel { eps1, eps2, omega } = spec else { unreachable!() };
                let (center_re, center_im) = match (self.center_re, self.center_im) {
                    (Some(re), Some(im)) => (re, im),
                    (None, None) => {
                        let eps = crate::ep::two_level_eps(eps1, eps2, omega)
                            .map_err(|e| HarnessError::Config(e.to_string()))?;
                        let p = eps.iter().find(|p| p.lambda_ep.re >= 0.0).unwrap_or(&eps[0]);
                        (p.lambda_ep.re, p.lambda_ep.im)
                    }
                    _ => return cfg_err("center_re and center_im must be given together"),
                };
                looping = Some(LoopConfig {
                    eps1,
                    eps2,
                    omega: omega.degrees(),
                    center_re,
                    center_im,
                    radius: self.radius.unwrap_or(0.2),
                    windings: self.windings.unwrap_or(1),
                    samples: self.samples.unwrap_or(512),
                    lambda_max: self.lambda_max.unwrap_or(100.0 * (eps2 - eps1).abs()),
                    delta: self.delta.unwrap_or(1.0),
                });
                vec![spec]
            }
            Experiment::Classify => {
                grid = Some(self.grid_or(range(0.05, 1.5, 0.01))?);
                pairs = match (&self.pairs, &self.r, &self.t) {
                    (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                        return cfg_err("pairs excludes r and t");
                    }
                    (Some(p), None, None) => p.iter().map(|[r, t]| [r.text(), t.text()]).collect(),
                    (None, None, None) => [("0", "2"), ("1", "4"), ("0", "4"), ("1", "3")]
                        .iter()
                        .map(|(r, t)| [r.to_string(), t.to_string()])
                        .collect(),
                    (None, r, t) => vec![[
                        r.as_ref().map_or("0".into(), Exact::text),
                        t.as_ref().map_or("2".into(), Exact::text),
                    ]],
                };
                let n = self.n.unwrap_or(101);
                pairs
                    .iter()
                    .map(|[r, t]| {
                        let r = Exact::Text(r.clone()).value()?;
                        let t = Exact::Text(t.clone()).value()?;
                        let spec = ModelSpec::PowerLaw { n, r, t };
                        spec.build().map_err(|e| HarnessError::Config(e.to_string()))?;
                        Ok(spec)
                    })
                    .collect::<Result<_, HarnessError>>()?
            }
        };
        if let Some(g) = &grid {
            crate::trajectory::validate_grid(&g.values()?).map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if self.jobs == Some(0) {
            return cfg_err("--jobs must be >= 1");
        }
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        Ok((
            RunConfig {
                experiment,
                phi,
                seed,
                format,
                grid,
                systems,
                looping,
                pairs,
            },
            RunPlacement { out, jobs: self.jobs },
        ))
    }
}

impl RunConfig {
    pub fn phi_angle(&self) -> Angle {
        Angle::from_degrees(self.phi)
    }

    pub fn grid_values(&self) -> Result<Vec<f64>, HarnessError> {
        match &self.grid {
            Some(g) => g.values(),
            None => cfg_err("experiment has no lambda grid"),
        }
    }

    /// Canonical text form used for the echo file and the digest.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig serializes")
    }

    pub fn digest(&self) -> String {
        super::output::sha256_hex(self.to_toml().as_bytes())
    }
}
