//! Configuration block embedded in every emitted report.

use serde::{Deserialize, Serialize};

use crate::grid::CorpusSpec;
use crate::spaces::SpaceParams;

pub const ARTIFACT_VERSION: &str = concat!("fspace-", env!("CARGO_PKG_VERSION"));

/// Everything needed to rerun an experiment byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub artifact_version: String,
    pub space: SpaceParams,
    pub norm_kind: String,
    pub level: u32,
    pub corpus: Option<CorpusSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
}

impl ReportConfig {
    pub fn new(space: SpaceParams, norm_kind: impl Into<String>, level: u32, corpus: Option<CorpusSpec>) -> Self {
        ReportConfig {
            artifact_version: ARTIFACT_VERSION.to_string(),
            space,
            norm_kind: norm_kind.into(),
            level,
            corpus,
            operator: None,
        }
    }

    pub fn with_operator(mut self, op: impl Into<String>) -> Self {
        self.operator = Some(op.into());
        self
    }

    pub fn seed(&self) -> Option<u64> {
        self.corpus.as_ref().map(|c| c.seed)
    }
}
