use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::OceanReport;
use crate::inventory::TraitDimension;

/// Population (mean, σ) per dimension in OCEAN order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanReference {
    pub rows: [(f64, f64); 5],
}

impl HumanReference {
    /// Averages over 619,150 IPIP-NEO-120 human respondents.
    pub const IPIP_NEO_120: HumanReference = HumanReference {
        rows: [(3.44, 1.06), (3.60, 0.99), (3.41, 1.03), (3.66, 1.02), (2.80, 1.03)],
    };

    pub fn mean(&self, dimension: TraitDimension) -> f64 {
        self.rows[dimension.index()].0
    }

    pub fn sigma(&self, dimension: TraitDimension) -> f64 {
        self.rows[dimension.index()].1
    }

    /// The reference itself as a report, useful as a comparison baseline.
    pub fn as_report(&self) -> OceanReport {
        OceanReport::from_summary("human", "ipip-neo-120", self.rows)
    }
}

impl Default for HumanReference {
    fn default() -> Self {
        Self::IPIP_NEO_120
    }
}

/// Published (mean, σ) rows for models scored on the 120-item bank. These
/// came from hosted models that are no longer served in the same form, so
/// they are kept as comparison constants only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportedRow {
    pub model: &'static str,
    pub rows: [(f64, f64); 5],
}

pub const REPORTED_MODEL_ROWS: [ReportedRow; 6] = [
    ReportedRow { model: "BART", rows: [(3.00, 2.00), (2.83, 1.99), (4.00, 1.73), (2.17, 1.82), (3.83, 1.82)] },
    ReportedRow { model: "GPT-Neo 2.7B", rows: [(4.04, 1.49), (2.46, 1.41), (3.58, 1.41), (2.33, 1.46), (3.00, 1.58)] },
    ReportedRow { model: "GPT-NeoX 20B", rows: [(2.71, 1.24), (3.09, 1.56), (3.29, 1.14), (2.92, 1.27), (3.25, 1.45)] },
    ReportedRow { model: "T0++ 11B", rows: [(4.00, 0.95), (4.33, 0.47), (3.83, 1.05), (4.39, 1.01), (1.57, 0.73)] },
    ReportedRow { model: "Alpaca 7B", rows: [(3.58, 1.08), (3.75, 0.97), (4.00, 1.00), (3.50, 0.87), (2.75, 0.88)] },
    ReportedRow { model: "GPT-3.5 175B", rows: [(3.50, 1.76), (3.83, 1.52), (4.00, 1.53), (3.58, 1.22), (3.12, 1.69)] },
];

impl ReportedRow {
    pub fn find(model: &str) -> Option<&'static ReportedRow> {
        REPORTED_MODEL_ROWS.iter().find(|r| r.model.eq_ignore_ascii_case(model))
    }

    pub fn as_report(&self) -> OceanReport {
        OceanReport::from_summary(self.model, "mpi-120", self.rows)
    }
}

/// Thresholds under which a dimension counts as close to the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Closeness {
    pub max_delta_mean: f64,
    pub max_delta_sigma: f64,
}

impl Default for Closeness {
    fn default() -> Self {
        Closeness {
            max_delta_mean: 0.25,
            max_delta_sigma: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionComparison {
    pub dimension: TraitDimension,
    pub model_mean: f64,
    pub human_mean: f64,
    pub delta_mean: f64,
    pub model_sigma: f64,
    pub human_sigma: f64,
    pub delta_sigma: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanComparison {
    pub dimensions: [DimensionComparison; 5],
    pub closeness: Closeness,
    /// Dimensions whose mean and σ deltas are both within the thresholds.
    pub within: Vec<TraitDimension>,
    /// σ for the model is across items; the human σ is the average of
    /// per-respondent σ. The two are reported side by side, not equated.
    pub sigma_convention: String,
}

impl HumanComparison {
    pub fn get(&self, dimension: TraitDimension) -> &DimensionComparison {
        &self.dimensions[dimension.index()]
    }

    pub fn delta_means(&self) -> [f64; 5] {
        self.dimensions.map(|d| d.delta_mean)
    }

    pub fn to_json(&self) -> serde_json::Value {
        use crate::json::round4;
        let dims: serde_json::Map<String, serde_json::Value> = self
            .dimensions
            .iter()
            .map(|d| {
                (
                    d.dimension.letter().to_string(),
                    serde_json::json!({
                        "model_mean": round4(d.model_mean),
                        "human_mean": round4(d.human_mean),
                        "delta_mean": round4(d.delta_mean),
                        "model_sigma": round4(d.model_sigma),
                        "human_sigma": round4(d.human_sigma),
                        "delta_sigma": round4(d.delta_sigma),
                        "within": d.within,
                    }),
                )
            })
            .collect();
        serde_json::json!({
            "dimensions": dims,
            "thresholds": { "max_delta_mean": self.closeness.max_delta_mean, "max_delta_sigma": self.closeness.max_delta_sigma },
            "within": self.within.iter().map(|d| d.letter().to_string()).collect::<Vec<_>>(),
            "sigma_convention": self.sigma_convention,
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoringComparisonError {
    #[error("dimension {0} is undefined in the report (no valid answers)")]
    UndefinedDimension(TraitDimension),
}

/// Absolute differences between a report and the human reference.
pub fn compare_to_human(
    report: &OceanReport,
    reference: &HumanReference,
    closeness: Closeness,
) -> Result<HumanComparison, ScoringComparisonError> {
    let mut dims = Vec::with_capacity(5);
    for d in TraitDimension::ALL {
        let t = report.trait_report(d);
        let (Some(model_mean), Some(model_sigma)) = (t.mean, t.sigma) else {
            return Err(ScoringComparisonError::UndefinedDimension(d));
        };
        let delta_mean = (model_mean - reference.mean(d)).abs();
        let delta_sigma = (model_sigma - reference.sigma(d)).abs();
        dims.push(DimensionComparison {
            dimension: d,
            model_mean,
            human_mean: reference.mean(d),
            delta_mean,
            model_sigma,
            human_sigma: reference.sigma(d),
            delta_sigma,
            within: delta_mean <= closeness.max_delta_mean && delta_sigma <= closeness.max_delta_sigma,
        });
    }
    let dimensions: [DimensionComparison; 5] = dims.try_into().expect("five dimensions");
    let within = dimensions.iter().filter(|d| d.within).map(|d| d.dimension).collect();
    Ok(HumanComparison {
        dimensions,
        closeness,
        within,
        sigma_convention: "model sigma: population sd across items; human sigma: mean of per-respondent sd".into(),
    })
}
