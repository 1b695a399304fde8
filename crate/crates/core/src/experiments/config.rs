use serde::{Deserialize, Serialize};

use super::means::MeasureFamily;
use super::ratios::{DensityKind, CRITICAL_EXPONENT};
use super::ExperimentKind;
use crate::error::{Error, Result};
use crate::extension::Curve;
use crate::fractal::WeightKind;

/// Seeds as an explicit list or as `{ start, count }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Seeds {
    List(Vec<u64>),
    Range { start: u64, count: u64 },
}

impl Seeds {
    pub fn to_vec(&self) -> Vec<u64> {
        match self {
            Seeds::List(v) => v.clone(),
            Seeds::Range { start, count } => (*start..start + count).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    #[default]
    Schrodinger,
    Extension,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seeds: Seeds,
    #[serde(default)]
    pub radii: Vec<f64>,
    /// Fixed `K`; otherwise `K = R^{k_exponent}`.
    pub k: Option<f64>,
    #[serde(default = "default_k_exponent")]
    pub k_exponent: f64,
    /// Fixed `A`; otherwise `max(2, ⌈K^{0.2}⌉)`.
    pub a: Option<usize>,
    #[serde(default)]
    pub curve: Curve,
    #[serde(default = "default_weight")]
    pub weight: WeightKind,
    #[serde(default)]
    pub densities: Vec<DensityKind>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    /// Accept exponents below 18/5.
    #[serde(default)]
    pub exploratory: bool,
    #[serde(default)]
    pub q0: Vec<u32>,
    #[serde(default)]
    pub families: Vec<MeasureFamily>,
    #[serde(default)]
    pub p_values: Vec<f64>,
    #[serde(default)]
    pub deltas: Vec<f64>,
    pub eps1: Option<f64>,
    #[serde(default)]
    pub variant: VariantName,
    #[serde(default = "default_growth")]
    pub growth_limit: f64,
}

fn default_k_exponent() -> f64 {
    0.05
}

fn default_weight() -> WeightKind {
    WeightKind::RandomKatzTao
}

fn default_growth() -> f64 {
    0.1
}

impl ExperimentConfig {
    /// A config with the experiment's default sweep.
    pub fn new(experiment: ExperimentKind, seeds: Vec<u64>) -> Self {
        Self {
            experiment,
            seeds: Seeds::List(seeds),
            radii: Vec::new(),
            k: None,
            k_exponent: default_k_exponent(),
            a: None,
            curve: Curve::Parabola,
            weight: default_weight(),
            densities: Vec::new(),
            p: None,
            q: None,
            exploratory: false,
            q0: Vec::new(),
            families: Vec::new(),
            p_values: Vec::new(),
            deltas: Vec::new(),
            eps1: None,
            variant: VariantName::Schrodinger,
            growth_limit: default_growth(),
        }
    }

    /// Parses and validates; messages carry the offending line.
    pub fn from_toml(src: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of(src, s.start)).unwrap_or(1);
            Error::Config(format!("line {line}: {}", e.message()))
        })?;
        cfg.validate().map_err(|(key, msg)| {
            let line = key_line(src, key).map_or_else(String::new, |l| format!("line {l}: "));
            Error::Config(format!("{line}{msg}"))
        })?;
        Ok(cfg)
    }

    pub fn seed_list(&self) -> Vec<u64> {
        self.seeds.to_vec()
    }

    pub fn k_for(&self, radius: f64) -> f64 {
        self.k.unwrap_or_else(|| radius.powf(self.k_exponent))
    }

    pub fn a_for(&self, radius: f64) -> usize {
        self.a.unwrap_or_else(|| (self.k_for(radius).powf(0.2).ceil() as usize).max(2))
    }

    pub fn radii_or_default(&self) -> Vec<f64> {
        if !self.radii.is_empty() {
            return self.radii.clone();
        }
        match self.experiment {
            ExperimentKind::WeightedL2 | ExperimentKind::WeightedLq | ExperimentKind::MizohataTakeuchi => {
                vec![256.0, 1024.0, 4096.0]
            }
            ExperimentKind::CircularMeans => vec![64.0, 128.0, 256.0, 512.0, 1024.0],
            ExperimentKind::MaximalSchrodinger => vec![64.0, 256.0, 1024.0],
            ExperimentKind::GaussSharpness => self.q0_or_default().iter().map(|&q| f64::from(q).powi(6)).collect(),
            ExperimentKind::Furstenberg => Vec::new(),
        }
    }

    pub fn q0_or_default(&self) -> Vec<u32> {
        if self.q0.is_empty() {
            (3..=7).collect()
        } else {
            self.q0.clone()
        }
    }

    pub fn q_or_default(&self) -> f64 {
        self.q.unwrap_or(CRITICAL_EXPONENT)
    }

    pub fn deltas_or_default(&self) -> Vec<f64> {
        if self.deltas.is_empty() {
            (5..=8).map(|k| 0.5f64.powi(k)).collect()
        } else {
            self.deltas.clone()
        }
    }

    /// Checks the invariants; on failure names the key to blame.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        if self.seed_list().is_empty() {
            return Err(("seeds", "at least one seed is required".into()));
        }
        let radii = self.radii_or_default();
        if let Some(r) = radii.iter().find(|&&r| !(r >= 64.0)) {
            return Err(("radii", format!("every R must be at least 64, got {r}")));
        }
        for &r in &radii {
            let k = self.k_for(r);
            if !(k >= 0.5) {
                return Err(("k", format!("K = {k} is below 1/2 at R = {r}")));
            }
            if k > r.powf(0.1) * (1.0 + 1e-12) {
                return Err(("k", format!("K = {k:.4} exceeds R^0.1 = {:.4} at R = {r}", r.powf(0.1))));
            }
            if self.a_for(r) < 2 {
                return Err(("a", format!("A must be at least 2, got {}", self.a_for(r))));
            }
        }
        let range = |key, v: Option<f64>| match v {
            Some(x) if !self.exploratory && x < CRITICAL_EXPONENT - 1e-12 => {
                Err((key, format!("{key} = {x} is below 18/5; set exploratory = true to allow it")))
            }
            Some(x) if !(x >= 1.0) => Err((key, format!("{key} must be at least 1"))),
            _ => Ok(()),
        };
        match self.experiment {
            ExperimentKind::WeightedLq => range("q", self.q)?,
            ExperimentKind::MizohataTakeuchi => range("p", self.p)?,
            ExperimentKind::MaximalSchrodinger => {
                let q = self.q_or_default();
                if !(q > 2.0) {
                    return Err(("q", format!("q must exceed 2, got {q}")));
                }
            }
            ExperimentKind::GaussSharpness => {
                if let Some(&q) = self.q0.iter().find(|&&q| q < 3) {
                    return Err(("q0", format!("q0 must be at least 3, got {q}")));
                }
            }
            ExperimentKind::CircularMeans => {
                if let Some(p) = self.p_values.iter().find(|p| !(1.8 - 1e-12..=2.0 + 1e-12).contains(*p)) {
                    return Err(("p_values", format!("p must lie in [9/5, 2], got {p}")));
                }
            }
            ExperimentKind::Furstenberg => {
                if let Some(d) = self.deltas.iter().find(|d| !(**d > 0.0 && **d < 1.0)) {
                    return Err(("deltas", format!("δ must lie in (0, 1), got {d}")));
                }
                if let Some(e) = self.eps1.filter(|e| !(*e > 0.0 && *e < 1.0)) {
                    return Err(("eps1", format!("ε₁ must lie in (0, 1), got {e}")));
                }
            }
            ExperimentKind::WeightedL2 => {}
        }
        if self.densities.contains(&DensityKind::Gauss) {
            if let Some(r) = radii.iter().find(|r| (r.powf(1.0 / 6.0).round().powi(6) - **r).abs() > 1e-6) {
                return Err(("densities", format!("the gauss density needs R = q0^6, got R = {r}")));
            }
        }
        Ok(())
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// 1-based line where `key` is assigned, if it is.
fn key_line(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key).is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_name_the_line() {
        let src = "experiment = \"weighted_l2\"\nseeds = [1, 2]\nradii = [256, \n";
        let err = ExperimentConfig::from_toml(src).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn invariant_errors_name_the_line() {
        let src = "experiment = \"weighted_l2\"\nseeds = [1]\nradii = [32.0]\n";
        let err = ExperimentConfig::from_toml(src).unwrap_err().to_string();
        assert!(err.contains("line 3") && err.contains("at least 64"), "{err}");
        let src = "experiment = \"weighted_l2\"\nseeds = [1]\na = 1\n";
        let err = ExperimentConfig::from_toml(src).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }

    #[test]
    fn seeds_accept_ranges() {
        let src = "experiment = \"furstenberg\"\nseeds = { start = 10, count = 3 }\n";
        let cfg = ExperimentConfig::from_toml(src).unwrap();
        assert_eq!(cfg.seed_list(), vec![10, 11, 12]);
    }

    #[test]
    fn default_rules() {
        let cfg = ExperimentConfig::new(ExperimentKind::WeightedL2, vec![0]);
        assert!((cfg.k_for(1024.0) - 1024f64.powf(0.05)).abs() < 1e-12);
        assert_eq!(cfg.a_for(1024.0), 2);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let src = "experiment = \"weighted_l2\"\nseeds = [1]\nradius = 3\n";
        assert!(ExperimentConfig::from_toml(src).is_err());
    }

    #[test]
    fn low_exponent_needs_flag() {
        let src = "experiment = \"weighted_lq\"\nseeds = [1]\nq = 3.0\n";
        assert!(ExperimentConfig::from_toml(src).is_err());
        let src = "experiment = \"weighted_lq\"\nseeds = [1]\nq = 3.0\nexploratory = true\n";
        assert!(ExperimentConfig::from_toml(src).is_ok());
    }
}
