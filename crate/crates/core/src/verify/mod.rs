//! The acceptance suite behind `extlab verify`.
//!
//! Every criterion runs at one of two sizes: [`Suite::Full`] uses the
//! stated sizes, [`Suite::Fast`] shrinks the sweeps. Thresholds and frozen
//! reference values come from a [`Goldens`] file; the default copy is
//! compiled in.

mod criteria;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

pub use criteria::{decoupling_configuration, CRITERIA};

use crate::error::{Error, Result};
use crate::experiments::{Check, Table};
use crate::row;

const EMBEDDED_GOLDENS: &str = include_str!("goldens.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Fast,
    Full,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Self::Fast => "fast",
            Self::Full => "full",
        }
    }

    fn pick<T>(self, fast: T, full: T) -> T {
        match self {
            Self::Fast => fast,
            Self::Full => full,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Self::Fast),
            "full" => Ok(Self::Full),
            other => Err(Error::Config(format!("unknown suite `{other}`, expected fast or full"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadIdentities {
    pub residual_limit: f64,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadEquivalence {
    pub max_mismatches: usize,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavePackets {
    pub residual_limit: f64,
    pub off_tube_halfwidths: f64,
    pub off_tube_limit: f64,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolicRescaling {
    pub residual_limit: f64,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussSharpness {
    pub slope_range: [f64; 2],
    pub pointwise_slope_range: [f64; 2],
    pub oracle_tolerance: f64,
    pub min_pointwise_share: f64,
    pub frozen_slope: f64,
    pub frozen_pointwise_slope: f64,
    pub frozen_tolerance: f64,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnappMeans {
    pub slope_tolerance: f64,
    pub power_slope_tolerance: f64,
    /// Keyed by `p` as written by `{p}` formatting.
    pub frozen_slopes: std::collections::BTreeMap<String, f64>,
    pub frozen_tolerance: f64,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthLimit {
    pub growth_limit: f64,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KatzTao {
    pub mass_range: [f64; 2],
    pub max_attempts: usize,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Furstenberg {
    pub decay_limit: f64,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Decoupling {
    pub growth_limit: f64,
    /// `C_obs ≤ constant_factor·R^{constant_exponent}`.
    pub constant_factor: f64,
    pub constant_exponent: f64,
    pub budget_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    pub budget_secs: f64,
}

/// Thresholds and frozen reference values, one section per criterion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Goldens {
    pub broad_identities: BroadIdentities,
    pub broad_equivalence: BroadEquivalence,
    pub wave_packets: WavePackets,
    pub parabolic_rescaling: ParabolicRescaling,
    pub gauss_sharpness: GaussSharpness,
    pub knapp_means: KnappMeans,
    pub non_violation: GrowthLimit,
    pub katz_tao: KatzTao,
    pub furstenberg: Furstenberg,
    pub decoupling: Decoupling,
    pub determinism: Budget,
}

impl Goldens {
    pub fn embedded() -> Self {
        serde_json::from_str(EMBEDDED_GOLDENS).expect("embedded goldens parse")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: line {}: {e}", path.display(), e.line())))
    }
}

/// Result of one criterion.
#[derive(Clone, Debug, Serialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
}

impl CriterionOutcome {
    /// All checks pass and the criterion stayed within its time budget.
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.elapsed_secs <= self.budget_secs
    }

    /// One human-readable status line.
    pub fn line(&self) -> String {
        let status = if self.passed() { "PASS" } else { "FAIL" };
        let mut line = format!("[{status}] {:>2} {:<22} {:>8.2}s", self.id, self.name, self.elapsed_secs);
        let failed: Vec<String> = self
            .checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} = {:.6e}", c.name, c.value))
            .collect();
        if !failed.is_empty() {
            line.push_str(&format!("  failed: {}", failed.join(", ")));
        }
        if self.elapsed_secs > self.budget_secs {
            line.push_str(&format!("  over budget ({:.0}s)", self.budget_secs));
        }
        line
    }
}

/// Runs a single criterion by id (1-based).
pub fn run_criterion(id: u8, suite: Suite, goldens: &Goldens) -> Result<CriterionOutcome> {
    let (name, body) = *CRITERIA
        .get(usize::from(id).wrapping_sub(1))
        .ok_or_else(|| Error::InvalidArgument(format!("no criterion {id}")))?;
    let start = Instant::now();
    let (checks, budget_secs) = body(suite, goldens)?;
    Ok(CriterionOutcome { id, name, checks, elapsed_secs: start.elapsed().as_secs_f64(), budget_secs })
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub outcomes: Vec<CriterionOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(CriterionOutcome::passed)
    }

    /// Check values only; timings are left out so reruns compare equal.
    pub fn table(&self) -> Table {
        let mut table = Table::new(&["criterion", "name", "check", "value", "passed"]);
        for o in &self.outcomes {
            for c in &o.checks {
                table.push(row![u32::from(o.id), o.name, c.name.as_str(), c.value, if c.passed { "true" } else { "false" }]);
            }
        }
        table
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let summary = json!({
            "suite": self.suite,
            "passed": self.passed(),
            "criteria": self.outcomes.iter().map(|o| json!({
                "id": o.id,
                "name": o.name,
                "passed": o.passed(),
                "elapsed_secs": o.elapsed_secs,
                "budget_secs": o.budget_secs,
                "checks": o.checks,
            })).collect::<Vec<_>>(),
        });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        self.table().write_csv(fs::File::create(dir.join("data.csv"))?)
    }
}

/// Runs every criterion in order, calling `progress` after each.
pub fn run_suite(suite: Suite, goldens: &Goldens, mut progress: impl FnMut(&CriterionOutcome)) -> Result<SuiteReport> {
    let mut outcomes = Vec::with_capacity(CRITERIA.len());
    for id in 1..=CRITERIA.len() as u8 {
        let outcome = run_criterion(id, suite, goldens)?;
        progress(&outcome);
        outcomes.push(outcome);
    }
    Ok(SuiteReport { suite, outcomes })
}
