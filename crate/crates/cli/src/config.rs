//! `--config` file: optional TOML sections overriding built-in defaults.
//! Command-line flags override the file.

use std::path::Path;

use amfm_groupdet::backhead::BackHeadConfig;
use amfm_groupdet::filterbank::{FilterbankParams, FilterbankSpec};
use amfm_groupdet::group_filter::GroupFilterConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub filterbank: Option<FilterbankParams>,
    #[serde(default)]
    pub group_filter: GroupSection,
    #[serde(default)]
    pub backhead: BackheadSection,
    #[serde(default)]
    pub fusion: FusionSection,
    #[serde(default)]
    pub evaluate: EvalSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSection {
    pub if_threshold: Option<f64>,
    pub quantile: Option<f64>,
    pub score_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackheadSection {
    pub texture_if_band: Option<(f64, f64)>,
    pub min_am_median_factor: Option<f64>,
    pub min_am_peak_fraction: Option<f64>,
    pub min_region_area: Option<u64>,
    pub max_region_area: Option<u64>,
    pub aspect_bounds: Option<(f64, f64)>,
    pub score_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionSection {
    pub iou_dedup: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub iou_min: Option<f64>,
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        path.map_or_else(|| Ok(Self::default()), read_toml)
    }

    /// `--filterbank-config` wins over the `[filterbank]` section.
    pub fn filterbank(&self, override_file: Option<&Path>) -> Result<FilterbankSpec, CliError> {
        let params = match override_file {
            Some(p) => read_toml::<FilterbankParams>(p)?,
            None => self.filterbank.unwrap_or_default(),
        };
        FilterbankSpec::new(params).map_err(CliError::from)
    }

    pub fn group_filter(&self) -> GroupFilterConfig {
        let d = GroupFilterConfig::default();
        let s = &self.group_filter;
        GroupFilterConfig {
            if_threshold: s.if_threshold.unwrap_or(d.if_threshold),
            decision_quantile: s.quantile.unwrap_or(d.decision_quantile),
            score_threshold: s.score_threshold.unwrap_or(d.score_threshold),
            scorer: d.scorer,
        }
    }

    pub fn backhead(&self) -> BackHeadConfig {
        let d = BackHeadConfig::default();
        let s = &self.backhead;
        BackHeadConfig {
            texture_if_band: s.texture_if_band.unwrap_or(d.texture_if_band),
            min_am_median_factor: s.min_am_median_factor.unwrap_or(d.min_am_median_factor),
            min_am_peak_fraction: s.min_am_peak_fraction.unwrap_or(d.min_am_peak_fraction),
            min_region_area: s.min_region_area.unwrap_or(d.min_region_area),
            max_region_area: s.max_region_area.unwrap_or(d.max_region_area),
            aspect_bounds: s.aspect_bounds.unwrap_or(d.aspect_bounds),
            score_threshold: s.score_threshold.unwrap_or(d.score_threshold),
            scorer: d.scorer,
        }
    }
}
