use serde::{Deserialize, Serialize};

use crate::data::Normalization;
use crate::error::{DaError, Result};

/// Which terms of the full model are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    /// Marginal + conditional MMD alignment, 1-NN labelling.
    Jda,
    /// Label regression only, no distribution alignment.
    Olr,
    /// Alignment with the repulsive terms, 1-NN labelling.
    CddaPlus,
    /// Alignment plus label regression, no repulsive terms.
    JolrDa,
    /// The full model.
    DollDa,
}

impl Variant {
    pub const ALL: [Variant; 5] = [Variant::Jda, Variant::Olr, Variant::CddaPlus, Variant::JolrDa, Variant::DollDa];

    pub fn uses_alignment(self) -> bool {
        !matches!(self, Variant::Olr)
    }

    pub fn uses_repulsion(self) -> bool {
        matches!(self, Variant::CddaPlus | Variant::DollDa)
    }

    /// Variants that regress labels; the others label targets by 1-NN in the
    /// projected space.
    pub fn uses_regression(self) -> bool {
        matches!(self, Variant::Olr | Variant::JolrDa | Variant::DollDa)
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Jda => "JDA",
            Variant::Olr => "OLR",
            Variant::CddaPlus => "CDDA_PLUS",
            Variant::JolrDa => "JOLR_DA",
            Variant::DollDa => "DOLL_DA",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = DaError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '+'], "_");
        let norm = norm.trim_end_matches('_');
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == norm || (norm == "CDDA" && *v == Variant::CddaPlus))
            .ok_or_else(|| DaError::config(format!("unknown variant {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    #[default]
    None,
    Linear,
    /// `exp(-‖xᵢ − xⱼ‖² / (2σ²))`; `bandwidth: None` selects the median
    /// pairwise distance.
    Rbf {
        #[serde(default)]
        bandwidth: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitLabels {
    /// 1-NN from the source in the preprocessed input space.
    #[default]
    NearestNeighbor,
    /// Uniformly random classes.
    Random { seed: u64 },
}

/// Solver hyper-parameters. Field names double as the JSON config schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Subspace dimension.
    pub k: usize,
    /// Ridge weight on `‖A‖_F²`.
    pub alpha: f64,
    /// Weight of the squared ℓ2,1 penalty.
    pub beta: f64,
    pub outer_iters: usize,
    /// Reweighting passes (A-update, then G-update) per outer iteration.
    pub inner_iters: usize,
    /// Relative objective change at which a GPI run stops.
    pub gpi_tol: f64,
    pub gpi_max_iter: usize,
    /// ℓ2,1 smoothing.
    pub epsilon: f64,
    /// Ridge added to the centering matrix before factorization.
    pub centering_delta: f64,
    /// Relative singular-value cutoff for the pseudo-inverse of `X h`.
    pub rank_rcond: f64,
    pub variant: Variant,
    pub kernel: KernelSpec,
    pub init_labels: InitLabels,
    pub normalize: Normalization,
    pub seed: u64,
    /// Stop when target hard labels repeat between outer iterations.
    pub early_stop: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: 300,
            alpha: 1.0,
            beta: 0.1,
            outer_iters: 10,
            inner_iters: 10,
            gpi_tol: 1e-6,
            gpi_max_iter: 100,
            epsilon: 1e-6,
            centering_delta: 1e-6,
            rank_rcond: 1e-3,
            variant: Variant::DollDa,
            kernel: KernelSpec::None,
            init_labels: InitLabels::NearestNeighbor,
            normalize: Normalization::ZscoreUnit,
            seed: 0,
            early_stop: true,
        }
    }
}

impl SolverConfig {
    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    /// Checks the configuration against a dataset with `class_count` classes.
    pub fn validate(&self, class_count: usize) -> Result<()> {
        if self.k < class_count {
            return Err(DaError::config(format!(
                "subspace dimension k = {} is smaller than the class count C = {class_count}",
                self.k
            )));
        }
        if self.outer_iters == 0 || self.inner_iters == 0 || self.gpi_max_iter == 0 {
            return Err(DaError::config("iteration counts must be at least 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(DaError::config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.centering_delta > 0.0) {
            return Err(DaError::config(format!(
                "centering_delta must be positive, got {}",
                self.centering_delta
            )));
        }
        if !(self.alpha >= 0.0) || !(self.beta >= 0.0) {
            return Err(DaError::config("alpha and beta must be non-negative"));
        }
        if !(self.gpi_tol >= 0.0) {
            return Err(DaError::config("gpi_tol must be non-negative"));
        }
        if !(self.rank_rcond > 0.0 && self.rank_rcond < 1.0) {
            return Err(DaError::config("rank_rcond must lie in (0, 1)"));
        }
        if let KernelSpec::Rbf { bandwidth: Some(b) } = self.kernel {
            if !(b > 0.0) || !b.is_finite() {
                return Err(DaError::config(format!("RBF bandwidth must be positive, got {b}")));
            }
        }
        Ok(())
    }
}
