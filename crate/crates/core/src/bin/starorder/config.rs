//! Run configuration: a JSON document whose sections feed the subcommands.
//! Command-line flags override file values; every run writes the fully
//! resolved document next to its outputs so it can be replayed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use starorder::error::Result;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distnet: Option<DistNetSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ordernet: Option<OrderNetSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<BaselineSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_max: Option<f64>,
    /// JSON-lines collection of datasets.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sets: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label_column: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistNetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder_hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fc_hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corner_input: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub holdout: Option<usize>,
    /// Model file consumed by other commands.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OrderNetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    /// Distance source for the reward: "exact" or "net".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contour_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub encoder_hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decoder_hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attention_width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critic_hidden: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub glimpse_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grad_clip: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint_every: Option<usize>,
    /// Checkpoint consumed by `order` and `bench`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Best-of-k decode count at inference.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_stall: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_start: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub force_exhaustive: Option<bool>,
    /// Stall budgets for the sweep mode of `bench`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_stall: Option<Vec<usize>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn data(&self) -> DataSection {
        self.data.clone().unwrap_or_default()
    }

    pub fn distnet(&self) -> DistNetSection {
        self.distnet.clone().unwrap_or_default()
    }

    pub fn ordernet(&self) -> OrderNetSection {
        self.ordernet.clone().unwrap_or_default()
    }

    pub fn baseline(&self) -> BaselineSection {
        self.baseline.clone().unwrap_or_default()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Writes the resolved document next to a produced file.
    pub fn write_beside(&self, output: &Path) -> Result<()> {
        let name = match output.file_name() {
            Some(n) => format!("{}.config.json", n.to_string_lossy()),
            None => "resolved.config.json".to_string(),
        };
        self.write(&output.with_file_name(name))
    }
}

/// Flag-over-config resolution.
pub fn pick<T: Clone>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn pick_opt<T: Clone>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}
