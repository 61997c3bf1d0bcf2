//! Scenario configuration: a flat TOML file with `[model]`, `[initial]`,
//! `[run]` and `[output]` sections. Unknown keys are rejected and every
//! validation message names the offending key.

use anyhow::{anyhow, bail, Context, Result};
use serde::Deserialize;
use std::path::Path;

use spinbath::models::{paper_couplings, ExchangeSpec, ModelSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub model: ModelSection,
    pub initial: InitialSection,
    pub run: RunSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// static-ising | transverse-bath | bath-exchange | two-spin-heisenberg
    pub family: String,
    pub delta: Option<f64>,
    pub j_central: Option<f64>,
    /// Either the string "paper" or an explicit list.
    pub couplings: Couplings,
    /// Transverse bath field; a list sweeps several values as independent
    /// jobs.
    pub hx: Option<HxValues>,
    pub exchange: Option<ExchangeSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Couplings {
    Named(String),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum HxValues {
    One(f64),
    Sweep(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExchangeSection {
    /// "constant" or "random"
    pub kind: String,
    pub value: Option<f64>,
    pub max: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// Bloch vector of the single central spin.
    pub bloch: Option<[f64; 3]>,
    /// Basis label for two central spins, e.g. "up-down" or "ud".
    pub label: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub bath_seed: u64,
    pub t_max: f64,
    /// Uniform grid size (including t = 0). Defaults to the sampling rule
    /// `dt <= 2*pi / (20 * omega_max)`.
    pub n_samples: Option<usize>,
    pub observables: Vec<String>,
    #[serde(default)]
    pub theory_overlay: bool,
    /// Chebyshev truncation tolerance.
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub prefix: String,
}

/// One fully validated job: a concrete model plus run parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub model: ModelSpec,
    pub initial: Initial,
    pub bath_seed: u64,
    pub t_max: f64,
    pub n_samples: Option<usize>,
    pub observables: Vec<Observable>,
    pub theory_overlay: bool,
    pub tolerance: f64,
    pub prefix: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    Bloch([f64; 3]),
    Label(Vec<u8>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    SigmaX,
    SigmaY,
    SigmaZ,
    Sigma1Z,
    Sigma2Z,
    Entropy,
    CorrZZ,
    CorrXX,
    CorrYY,
    RhoCoupled,
}

impl Observable {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name {
            "sigma_x" => Self::SigmaX,
            "sigma_y" => Self::SigmaY,
            "sigma_z" => Self::SigmaZ,
            "sigma1_z" => Self::Sigma1Z,
            "sigma2_z" => Self::Sigma2Z,
            "entropy" => Self::Entropy,
            "corr_zz" => Self::CorrZZ,
            "corr_xx" => Self::CorrXX,
            "corr_yy" => Self::CorrYY,
            "rho_coupled" => Self::RhoCoupled,
            other => bail!(
                "run.observables: unknown observable `{other}` (expected sigma_x, sigma_y, \
                 sigma_z, sigma1_z, sigma2_z, entropy, corr_zz, corr_xx, corr_yy, rho_coupled)"
            ),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SigmaX => "sigma_x",
            Self::SigmaY => "sigma_y",
            Self::SigmaZ => "sigma_z",
            Self::Sigma1Z => "sigma1_z",
            Self::Sigma2Z => "sigma2_z",
            Self::Entropy => "entropy",
            Self::CorrZZ => "corr_zz",
            Self::CorrXX => "corr_xx",
            Self::CorrYY => "corr_yy",
            Self::RhoCoupled => "rho_coupled",
        }
    }

    fn needs_two_central(&self) -> bool {
        matches!(
            self,
            Self::Sigma1Z | Self::Sigma2Z | Self::CorrZZ | Self::CorrXX | Self::CorrYY
                | Self::RhoCoupled
        )
    }

    fn needs_one_central(&self) -> bool {
        matches!(self, Self::SigmaX | Self::SigmaY | Self::SigmaZ)
    }
}

/// Parse and validate a scenario file into one or more jobs (a transverse
/// field sweep expands into one job per value, with the field value baked
/// into the output prefix).
pub fn load_scenarios(path: &Path, seed_override: Option<u64>) -> Result<Vec<Scenario>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario file {path:?}"))?;
    let file: ScenarioFile = toml::from_str(&text)
        .with_context(|| format!("cannot parse scenario file {path:?}"))?;
    expand(&file, seed_override)
}

pub fn expand(file: &ScenarioFile, seed_override: Option<u64>) -> Result<Vec<Scenario>> {
    let couplings = match &file.model.couplings {
        Couplings::Named(name) if name == "paper" => paper_couplings(),
        Couplings::Named(other) => {
            bail!("model.couplings: unknown named set `{other}` (only \"paper\" is defined)")
        }
        Couplings::Values(values) => {
            if values.is_empty() {
                bail!("model.couplings: the coupling list must not be empty");
            }
            values.clone()
        }
    };

    let hx_values: Vec<Option<f64>> = match &file.model.hx {
        None => vec![None],
        Some(HxValues::One(v)) => vec![Some(*v)],
        Some(HxValues::Sweep(vs)) => {
            if vs.is_empty() {
                bail!("model.hx: sweep list must not be empty");
            }
            vs.iter().map(|v| Some(*v)).collect()
        }
    };

    let mut scenarios = Vec::new();
    for hx in hx_values {
        let model = build_model(&file.model, &couplings, hx)?;
        let initial = build_initial(&file.initial, model.n_central())?;
        let observables = file
            .run
            .observables
            .iter()
            .map(|s| Observable::parse(s))
            .collect::<Result<Vec<_>>>()?;
        if observables.is_empty() {
            bail!("run.observables: at least one observable is required");
        }
        for obs in &observables {
            if obs.needs_two_central() && model.n_central() != 2 {
                bail!(
                    "run.observables: `{}` requires two central spins, but family `{}` has one",
                    obs.name(),
                    file.model.family
                );
            }
            if obs.needs_one_central() && model.n_central() != 1 {
                bail!(
                    "run.observables: `{}` addresses the single central spin; use sigma1_z / \
                     sigma2_z for the two-spin family",
                    obs.name()
                );
            }
        }
        if !(file.run.t_max > 0.0) {
            bail!("run.t_max: must be > 0");
        }
        if let Some(n) = file.run.n_samples {
            if n < 2 {
                bail!("run.n_samples: must be at least 2");
            }
        }
        let tolerance = file.run.tolerance.unwrap_or(1e-12);
        if !(tolerance > 0.0) {
            bail!("run.tolerance: must be > 0");
        }
        let prefix = match hx {
            Some(v) if matches!(file.model.hx, Some(HxValues::Sweep(_))) => {
                format!("{}_hx{}", file.output.prefix, v)
            }
            _ => file.output.prefix.clone(),
        };
        scenarios.push(Scenario {
            model,
            initial,
            bath_seed: seed_override.unwrap_or(file.run.bath_seed),
            t_max: file.run.t_max,
            n_samples: file.run.n_samples,
            observables: observables.clone(),
            theory_overlay: file.run.theory_overlay,
            tolerance,
            prefix,
        });
    }
    Ok(scenarios)
}

fn build_model(section: &ModelSection, couplings: &[f64], hx: Option<f64>) -> Result<ModelSpec> {
    let need_delta = || {
        section
            .delta
            .ok_or_else(|| anyhow!("model.delta: required for family `{}`", section.family))
    };
    match section.family.as_str() {
        "static-ising" => {
            reject(section.j_central.is_some(), "model.j_central", &section.family)?;
            reject(hx.is_some(), "model.hx", &section.family)?;
            reject(section.exchange.is_some(), "model.exchange", &section.family)?;
            Ok(ModelSpec::StaticIsing { delta: need_delta()?, couplings: couplings.to_vec() })
        }
        "transverse-bath" => {
            reject(section.j_central.is_some(), "model.j_central", &section.family)?;
            reject(section.exchange.is_some(), "model.exchange", &section.family)?;
            let hx = hx.ok_or_else(|| anyhow!("model.hx: required for family `transverse-bath`"))?;
            if hx < 0.0 {
                bail!("model.hx: must be >= 0");
            }
            Ok(ModelSpec::TransverseBath {
                delta: need_delta()?,
                couplings: couplings.to_vec(),
                hx,
            })
        }
        "bath-exchange" => {
            reject(section.j_central.is_some(), "model.j_central", &section.family)?;
            reject(hx.is_some(), "model.hx", &section.family)?;
            let ex = section
                .exchange
                .as_ref()
                .ok_or_else(|| anyhow!("model.exchange: required for family `bath-exchange`"))?;
            let exchange = match ex.kind.as_str() {
                "constant" => ExchangeSpec::Constant(
                    ex.value
                        .ok_or_else(|| anyhow!("model.exchange.value: required for kind `constant`"))?,
                ),
                "random" => ExchangeSpec::Random {
                    max: ex
                        .max
                        .ok_or_else(|| anyhow!("model.exchange.max: required for kind `random`"))?,
                    seed: ex
                        .seed
                        .ok_or_else(|| anyhow!("model.exchange.seed: required for kind `random`"))?,
                },
                other => bail!("model.exchange.kind: unknown kind `{other}`"),
            };
            Ok(ModelSpec::BathExchange {
                delta: need_delta()?,
                couplings: couplings.to_vec(),
                exchange,
            })
        }
        "two-spin-heisenberg" => {
            reject(section.delta.is_some(), "model.delta", &section.family)?;
            reject(hx.is_some(), "model.hx", &section.family)?;
            reject(section.exchange.is_some(), "model.exchange", &section.family)?;
            let j = section
                .j_central
                .ok_or_else(|| anyhow!("model.j_central: required for family `two-spin-heisenberg`"))?;
            Ok(ModelSpec::TwoSpinHeisenberg { j_central: j, couplings: couplings.to_vec() })
        }
        other => bail!(
            "model.family: unknown family `{other}` (expected static-ising, transverse-bath, \
             bath-exchange or two-spin-heisenberg)"
        ),
    }
}

fn reject(present: bool, key: &str, family: &str) -> Result<()> {
    if present {
        bail!("{key}: not accepted by family `{family}`");
    }
    Ok(())
}

fn build_initial(section: &InitialSection, n_central: usize) -> Result<Initial> {
    match (n_central, &section.bloch, &section.label) {
        (1, Some(b), None) => Ok(Initial::Bloch(*b)),
        (2, None, Some(label)) => {
            let lower = label.to_ascii_lowercase();
            let tokens: Vec<&str> = lower
                .split(|c: char| matches!(c, '-' | '_' | ' '))
                .filter(|s| !s.is_empty())
                .collect();
            let parse_one = |tok: &str| -> Result<u8> {
                match tok {
                    "u" | "up" | "1" => Ok(1),
                    "d" | "down" | "0" => Ok(0),
                    other => Err(anyhow!(
                        "initial.label: unexpected spin label `{other}` (use up/down)"
                    )),
                }
            };
            let bits: Vec<u8> = if tokens.len() == 2 {
                vec![parse_one(tokens[0])?, parse_one(tokens[1])?]
            } else if tokens.len() == 1 && tokens[0].len() == 2 {
                tokens[0]
                    .chars()
                    .map(|c| parse_one(&c.to_string()))
                    .collect::<Result<_>>()?
            } else {
                bail!("initial.label: need exactly two spin labels, e.g. \"up-down\" or \"ud\"");
            };
            Ok(Initial::Label(bits))
        }
        (1, None, _) => bail!("initial.bloch: required for single-central-spin families"),
        (2, _, None) => bail!("initial.label: required for the two-spin family"),
        (1, Some(_), Some(_)) => bail!("initial.label: not accepted alongside initial.bloch"),
        _ => bail!("initial: inconsistent section"),
    }
}
