//! Experiment drivers: the weighted ratios of the broad operator, the Gauss
//! sharpness sweep, circular means, Mizohata-Takeuchi weights, maximal
//! Schrödinger norms and the two-ends Furstenberg sweep.
//!
//! Each driver is a pure function of an [`ExperimentConfig`]; cells run in
//! parallel and are merged in index order, so the emitted table depends
//! only on the config.

mod config;
mod fit;
mod gauss;
mod maximal;
mod means;
mod ratios;
mod runners;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{ExperimentConfig, Seeds, VariantName};
pub use fit::{exponent_fit, ExponentFit};
pub use gauss::{gauss_row, gauss_sharpness_sweep, GaussRow, GaussSweep, GAUSS_K, GAUSS_POINTWISE_C, ORACLE_TOLERANCE};
pub use maximal::{maximal_grid, maximal_schrodinger_norm, MaximalRecord, MaximalVariant};
pub use means::{circle_moduli, circular_means, circular_means_with, default_angles, mean_of, sigma_p_fit, MeasureFamily};
pub use ratios::{
    aligned_packet, constant_density, gauss_density, grid_for, mt_ratio, mt_weight, mt_weight_with, packet_density,
    random_density, single_cap_density, weighted_l2_ratio, weighted_lq_ratio, DensityKind, ExponentRange, MtWeight,
    WeightedSample, CRITICAL_EXPONENT,
};
pub use runners::{growth_exponent, ratio_cells, run_experiment, Check, ExperimentReport, RatioCell};
pub use table::{Cell, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    WeightedL2,
    WeightedLq,
    GaussSharpness,
    CircularMeans,
    MizohataTakeuchi,
    MaximalSchrodinger,
    Furstenberg,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        Self::WeightedL2,
        Self::WeightedLq,
        Self::GaussSharpness,
        Self::CircularMeans,
        Self::MizohataTakeuchi,
        Self::MaximalSchrodinger,
        Self::Furstenberg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::WeightedL2 => "weighted_l2",
            Self::WeightedLq => "weighted_lq",
            Self::GaussSharpness => "gauss_sharpness",
            Self::CircularMeans => "circular_means",
            Self::MizohataTakeuchi => "mizohata_takeuchi",
            Self::MaximalSchrodinger => "maximal_schrodinger",
            Self::Furstenberg => "furstenberg",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Self::WeightedL2 => {
                "‖Br_A Ef‖_{L²(X)} / (|X|^{2/9}‖f‖₂) over weight sets X and densities f; \
                 checks that the per-R maximum grows no faster than R^growth_limit"
            }
            Self::WeightedLq => {
                "‖Br_A Ef‖_{L^q(X)} / ‖f‖₂ with q ≥ 18/5 (q = 18/5 by default); \
                 checks the growth of the per-R maximum"
            }
            Self::GaussSharpness => {
                "Gauss-sum lattice example at R = q0^6: fits ‖Br_A Ef‖_{L²(X)}/‖f‖₂ against |X| \
                 and the median |Ef| on X against R, and compares every center with the closed-form sum"
            }
            Self::CircularMeans => {
                "(∫_{S¹} |μ̂(Rξ)|^p dσ)^{1/p} for Frostman measures; fits the decay in R \
                 and checks the Knapp family against -1/(2p)"
            }
            Self::MizohataTakeuchi => {
                "‖Ef‖^p_{L^p(X)} / (w_R(X)‖f‖₂^p) with w_R the heaviest 1×R tube; \
                 includes packets aligned with that tube"
            }
            Self::MaximalSchrodinger => {
                "‖e^{itΔ}f‖_{L^q_x L^∞_t} / (R^{1/2-1/p}‖f‖_p) with 2/q + 1/p = 1; \
                 variant = \"extension\" takes the sup over x₂ of Ef instead"
            }
            Self::Furstenberg => {
                "|∪Y(ℓ)| against δ^{ε₁/2}λ^{1/2}Σ|Y(ℓ)| for bushes, train tracks and random \
                 two-ends shadings, plus the dual tube count hypotheses"
            }
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| crate::Error::Config(format!("unknown experiment `{s}`")))
    }
}
