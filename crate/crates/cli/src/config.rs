//! Experiment configuration.
//!
//! A config is TOML with every field optional. Resolution overlays three
//! layers, later wins: the experiment's own defaults, the config file, then
//! command-line flags. The resolved struct is hashed (SHA-256 of its
//! canonical JSON) and stamped into every artifact, so two runs with equal
//! hashes were computed from exactly the same knobs.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use margin_paths_core::{Dataset, NormTag, PredictorSpec, Sample, SeedProvenance};

use crate::datasets::{self, GeneratorKind};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InlineSample {
    pub x: Vec<f64>,
    pub y: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Inline rows; when present they shadow the generator fields.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<InlineSample>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PredictorConfig {
    /// linear | power_lifted | product_linear | svm_bias | linear_plus_power
    /// | linear_plus_product | log_wrap | power_log
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictor: Option<PredictorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    /// Largest scale of the geometric rho grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    /// Target spacing of the certification grid oracle, as a length on the
    /// unit sphere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_res: Option<f64>,
    /// Gradient-descent step budget.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<usize>,
    /// Constant gradient-descent step size.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Regularization weights, ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Command-line overrides; they beat both defaults and the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub rho_max: Option<f64>,
    pub restarts: Option<usize>,
    pub grid_res: Option<f64>,
}

fn overlay_dataset(base: Option<DatasetConfig>, over: Option<DatasetConfig>) -> Option<DatasetConfig> {
    match (base, over) {
        (b, None) => b,
        (None, o) => o,
        (Some(b), Some(o)) => {
            // inline rows replace the generator wholesale; mixing a file's
            // rows with a default generator seed would be misleading
            if o.samples.is_some() {
                return Some(o);
            }
            Some(DatasetConfig {
                kind: o.kind.or(b.kind),
                d: o.d.or(b.d),
                n: o.n.or(b.n),
                seed: o.seed.or(b.seed),
                samples: b.samples,
            })
        }
    }
}

fn overlay_predictor(
    base: Option<PredictorConfig>,
    over: Option<PredictorConfig>,
) -> Option<PredictorConfig> {
    match (base, over) {
        (b, None) => b,
        (None, o) => o,
        (Some(b), Some(o)) => {
            // a new family resets the shape knobs rather than inheriting
            // another family's power or depth
            if o.family.is_some() && o.family != b.family {
                return Some(o);
            }
            Some(PredictorConfig {
                family: b.family,
                power: o.power.or(b.power),
                depth: o.depth.or(b.depth),
                epsilon: o.epsilon.or(b.epsilon),
            })
        }
    }
}

impl ExperimentConfig {
    /// `over` wins field by field.
    pub fn overlaid(self, over: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            experiment: if over.experiment.is_empty() {
                self.experiment
            } else {
                over.experiment
            },
            dataset: overlay_dataset(self.dataset, over.dataset),
            predictor: overlay_predictor(self.predictor, over.predictor),
            norm: over.norm.or(self.norm),
            seed: over.seed.or(self.seed),
            restarts: over.restarts.or(self.restarts),
            max_iters: over.max_iters.or(self.max_iters),
            rho_max: over.rho_max.or(self.rho_max),
            grid_points: over.grid_points.or(self.grid_points),
            grid_res: over.grid_res.or(self.grid_res),
            t_max: over.t_max.or(self.t_max),
            eta: over.eta.or(self.eta),
            c_grid: over.c_grid.or(self.c_grid),
            output_dir: over.output_dir.or(self.output_dir),
        }
    }

    pub fn apply_flags(mut self, flags: &Overrides) -> ExperimentConfig {
        if let Some(seed) = flags.seed {
            self.seed = Some(seed);
        }
        if let Some(out) = &flags.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(rho_max) = flags.rho_max {
            self.rho_max = Some(rho_max);
        }
        if let Some(restarts) = flags.restarts {
            self.restarts = Some(restarts);
        }
        if let Some(grid_res) = flags.grid_res {
            self.grid_res = Some(grid_res);
        }
        self
    }

    /// SHA-256 of the canonical JSON form; the provenance stamp in every
    /// artifact file. The output directory is not part of the digest: it
    /// changes where results land, never what they are.
    pub fn sha256(&self) -> String {
        let mut hashed = self.clone();
        hashed.output_dir = None;
        let json = serde_json::to_string(&hashed).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            hex.push_str(&format!("{b:02x}"));
        }
        hex
    }

    pub fn norm_tag(&self) -> Result<NormTag> {
        match self.norm.as_deref() {
            None | Some("l2") => Ok(NormTag::L2),
            Some("l1") => Ok(NormTag::L1),
            Some("linf") => Ok(NormTag::Linf),
            Some(other) => bail!("unknown norm {other:?}; expected l2, l1, or linf"),
        }
    }

    pub fn build_dataset(&self) -> Result<Dataset> {
        let Some(ds) = &self.dataset else {
            bail!("experiment resolved without a dataset");
        };
        if let Some(rows) = &ds.samples {
            if rows.is_empty() {
                bail!("inline dataset has no samples");
            }
            let samples = rows
                .iter()
                .map(|r| Sample {
                    x: r.x.clone(),
                    y: r.y,
                })
                .collect();
            return Ok(Dataset::new(samples, SeedProvenance::Explicit)?);
        }
        let kind = GeneratorKind::from_str(
            ds.kind
                .as_deref()
                .context("dataset needs a kind or inline samples")?,
        )?;
        let d = ds.d.context("dataset.d unset")?;
        let n = ds.n.context("dataset.n unset")?;
        let seed = ds.seed.context("dataset.seed unset")?;
        datasets::generate(kind, d, n, seed)
    }

    pub fn build_spec(&self, data_dim: usize) -> Result<PredictorSpec> {
        let Some(p) = &self.predictor else {
            bail!("experiment resolved without a predictor");
        };
        let family = p.family.as_deref().context("predictor.family unset")?;
        let spec = match family {
            "linear" => PredictorSpec::linear(data_dim),
            "power_lifted" => {
                PredictorSpec::power_lifted(data_dim, p.power.context("power unset")?)?
            }
            "product_linear" => {
                PredictorSpec::product_linear(data_dim, p.depth.context("depth unset")?)?
            }
            "svm_bias" => PredictorSpec::svm_bias(data_dim),
            "linear_plus_power" => {
                PredictorSpec::linear_plus_power(data_dim, p.power.context("power unset")?)?
            }
            "linear_plus_product" => {
                PredictorSpec::linear_plus_product(data_dim, p.depth.context("depth unset")?)?
            }
            "log_wrap" => PredictorSpec::log_wrap(data_dim),
            "power_log" => PredictorSpec::power_log(data_dim, p.epsilon.context("epsilon unset")?)?,
            other => bail!("unknown predictor family {other:?}"),
        };
        Ok(spec)
    }
}

pub fn load_file(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    // toml errors carry line and column spans
    let cfg: ExperimentConfig =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    Ok(cfg)
}

/// defaults < file < flags; checks the file does not name a different
/// experiment than the one invoked.
pub fn resolve(
    defaults: ExperimentConfig,
    file: Option<ExperimentConfig>,
    flags: &Overrides,
) -> Result<ExperimentConfig> {
    let invoked = defaults.experiment.clone();
    let mut cfg = defaults;
    if let Some(file) = file {
        if !file.experiment.is_empty() && file.experiment != invoked {
            bail!(
                "config file names experiment {:?} but {:?} was invoked",
                file.experiment,
                invoked
            );
        }
        cfg = cfg.overlaid(file);
    }
    Ok(cfg.apply_flags(flags))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_overlay() {
        let file: ExperimentConfig = toml::from_str(
            r#"
            experiment = "margin_gap"
            seed = 99
            [dataset]
            kind = "separable_gaussian"
            d = 3
            "#,
        )
        .unwrap();
        let defaults = ExperimentConfig {
            experiment: String::from("margin_gap"),
            seed: Some(7),
            rho_max: Some(64.0),
            dataset: Some(DatasetConfig {
                kind: Some(String::from("symmetric_pair")),
                d: Some(2),
                n: Some(2),
                seed: Some(1),
                samples: None,
            }),
            ..ExperimentConfig::default()
        };
        let cfg = resolve(defaults, Some(file), &Overrides::default()).unwrap();
        assert_eq!(cfg.seed, Some(99));
        assert_eq!(cfg.rho_max, Some(64.0));
        let ds = cfg.dataset.unwrap();
        assert_eq!(ds.kind.as_deref(), Some("separable_gaussian"));
        assert_eq!(ds.d, Some(3));
        assert_eq!(ds.n, Some(2));
    }

    #[test]
    fn flags_beat_the_file() {
        let defaults = ExperimentConfig {
            experiment: String::from("homog_rate"),
            seed: Some(7),
            ..ExperimentConfig::default()
        };
        let file = ExperimentConfig {
            seed: Some(11),
            ..ExperimentConfig::default()
        };
        let flags = Overrides {
            seed: Some(23),
            rho_max: Some(4096.0),
            ..Overrides::default()
        };
        let cfg = resolve(defaults, Some(file), &flags).unwrap();
        assert_eq!(cfg.seed, Some(23));
        assert_eq!(cfg.rho_max, Some(4096.0));
    }

    #[test]
    fn mismatched_experiment_name_is_rejected() {
        let defaults = ExperimentConfig {
            experiment: String::from("margin_gap"),
            ..ExperimentConfig::default()
        };
        let file = ExperimentConfig {
            experiment: String::from("svm_bias"),
            ..ExperimentConfig::default()
        };
        assert!(resolve(defaults, Some(file), &Overrides::default()).is_err());
    }

    #[test]
    fn hash_tracks_every_resolved_field() {
        let a = ExperimentConfig {
            experiment: String::from("margin_gap"),
            seed: Some(7),
            ..ExperimentConfig::default()
        };
        let mut b = a.clone();
        assert_eq!(a.sha256(), b.sha256());
        b.seed = Some(8);
        assert_ne!(a.sha256(), b.sha256());
    }

    #[test]
    fn inline_samples_build_an_explicit_dataset() {
        let cfg = ExperimentConfig {
            experiment: String::from("log_predictor"),
            dataset: Some(DatasetConfig {
                samples: Some(vec![
                    InlineSample {
                        x: vec![1.0, 0.2],
                        y: 1.0,
                    },
                    InlineSample {
                        x: vec![0.6, 0.9],
                        y: 1.0,
                    },
                ]),
                ..DatasetConfig::default()
            }),
            ..ExperimentConfig::default()
        };
        let data = cfg.build_dataset().unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.dim(), 2);
    }
}
