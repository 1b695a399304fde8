use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::{ExperimentConfig, VariantName};
use super::fit::exponent_fit;
use super::gauss::gauss_sharpness_sweep;
use super::maximal::{maximal_grid, maximal_schrodinger_norm, MaximalVariant};
use super::means::{check_sweep, circle_moduli, default_angles, mean_of, MeasureFamily};
use super::ratios::{
    aligned_packet, constant_density, gauss_density, grid_for, mt_weight, random_density, single_cap_density,
    DensityKind, WeightedSample,
};
use super::table::Table;
use super::ExperimentKind;
use crate::broad::CapDecomposition;
use crate::error::{Error, Result};
use crate::fractal::generate_weight;
use crate::grid::SampledDensity;
use crate::incidence::{
    bush, dual_tube_count, furstenberg_ratio, random_two_ends, train_tracks, DualTubeFamily, LineShading,
};
use crate::row;

/// Offset between the weight seed and the density seed of a cell.
const DENSITY_SEED_SHIFT: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub passed: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lo: Option<f64>, hi: Option<f64>) -> Self {
        let passed = !value.is_nan() && lo.is_none_or(|l| value >= l) && hi.is_none_or(|h| value <= h);
        Self { name: name.into(), value, lo, hi, passed }
    }

    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Self::within(name, value, None, Some(hi))
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub table: Table,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Writes `summary.json` and `data.csv` into `dir`, creating it.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let summary = json!({
            "experiment": self.experiment.name(),
            "passed": self.passed(),
            "checks": self.checks,
            "summary": self.summary,
        });
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
        self.table.write_csv(fs::File::create(dir.join("data.csv"))?)
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate().map_err(|(key, msg)| Error::Config(format!("{key}: {msg}")))?;
    let mut report = match cfg.experiment {
        ExperimentKind::WeightedL2 | ExperimentKind::WeightedLq | ExperimentKind::MizohataTakeuchi => run_ratios(cfg)?,
        ExperimentKind::GaussSharpness => run_gauss(cfg)?,
        ExperimentKind::CircularMeans => run_means(cfg)?,
        ExperimentKind::MaximalSchrodinger => run_maximal(cfg)?,
        ExperimentKind::Furstenberg => run_furstenberg(cfg)?,
    };
    if let Value::Object(map) = &mut report.summary {
        map.insert("config".into(), serde_json::to_value(cfg)?);
        map.insert("seeds".into(), json!(cfg.seed_list()));
    }
    Ok(report)
}

/// Fitted exponent of `value` in `size`; an all-zero series is flat.
pub fn growth_exponent(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.iter().all(|p| p.1 == 0.0) && !pairs.is_empty() {
        return Ok(0.0);
    }
    if pairs.len() == 2 {
        let [(s0, v0), (s1, v1)] = [pairs[0], pairs[1]];
        if !(s0 > 0.0 && s1 > 0.0 && v0 > 0.0 && v1 > 0.0 && s0 != s1) {
            return Err(Error::DegenerateFit(format!("cannot fit {pairs:?}")));
        }
        return Ok((v1 / v0).ln() / (s1 / s0).ln());
    }
    Ok(exponent_fit(pairs)?.slope)
}

/// Largest value per size, in increasing size order.
fn max_by_size(values: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut best: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (s, v) in values {
        let e = best.entry(s.to_bits()).or_insert((s, v));
        e.1 = e.1.max(v);
    }
    let mut out: Vec<_> = best.into_values().collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// One `(R, seed, density)` evaluation shared by the three weighted sweeps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioCell {
    pub radius: f64,
    pub seed: u64,
    pub density: DensityKind,
    pub points: usize,
    pub area: f64,
    pub k: f64,
    pub a: usize,
    pub f_l2: f64,
    pub l2_ratio: f64,
    pub lq_ratio: f64,
    pub mt_weight: f64,
    pub mt_ratio: f64,
}

fn ratio_densities(cfg: &ExperimentConfig) -> Vec<DensityKind> {
    if cfg.densities.is_empty() {
        vec![DensityKind::Random, DensityKind::SingleCap, DensityKind::Packet]
    } else {
        cfg.densities.clone()
    }
}

/// Evaluates every `(R, seed)` cell with `q` for the `L^q` ratio and `p`
/// for the Mizohata-Takeuchi ratio.
pub fn ratio_cells(cfg: &ExperimentConfig, q: f64, p: f64) -> Result<Vec<RatioCell>> {
    let densities = ratio_densities(cfg);
    let keys: Vec<(f64, u64)> =
        cfg.radii_or_default().into_iter().flat_map(|r| cfg.seed_list().into_iter().map(move |s| (r, s))).collect();
    let cells = keys
        .par_iter()
        .map(|&(radius, seed)| {
            let weight = generate_weight(cfg.weight, radius, seed, &Map::new())?;
            let grid = grid_for(radius + 1.0, cfg.curve, 1.0);
            let (k, a) = (cfg.k_for(radius), cfg.a_for(radius));
            let caps = CapDecomposition::disjoint(k)?;
            let tube = mt_weight(&weight)?;
            let fseed = seed + DENSITY_SEED_SHIFT;
            densities
                .iter()
                .map(|&density| {
                    let f = match density {
                        DensityKind::Random => random_density(grid, radius, fseed)?,
                        DensityKind::SingleCap => single_cap_density(grid, radius, &caps, fseed)?,
                        DensityKind::Packet => aligned_packet(&tube, radius, cfg.curve, grid)?,
                        DensityKind::Gauss => gauss_density(radius)?,
                        DensityKind::Constant => constant_density(grid)?,
                    };
                    let s = WeightedSample::evaluate(&f, &weight, &caps, a, cfg.curve)?;
                    Ok(RatioCell {
                        radius,
                        seed,
                        density,
                        points: weight.len(),
                        area: s.area,
                        k,
                        a,
                        f_l2: s.f_l2,
                        l2_ratio: s.l2_ratio(),
                        lq_ratio: s.lq_ratio(q),
                        mt_weight: tube.value,
                        mt_ratio: s.mt_ratio(p, tube.value),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cells.into_iter().flatten().collect())
}

fn run_ratios(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let q = cfg.q_or_default();
    let p = cfg.p.unwrap_or(super::ratios::CRITICAL_EXPONENT);
    let cells = ratio_cells(cfg, q, p)?;
    let mut table = Table::new(&[
        "radius", "seed", "density", "points", "area", "k", "a", "f_l2", "l2_ratio", "lq_ratio", "mt_weight", "mt_ratio",
    ]);
    for c in &cells {
        table.push(row![
            c.radius,
            c.seed,
            c.density.name(),
            c.points,
            c.area,
            c.k,
            c.a,
            c.f_l2,
            c.l2_ratio,
            c.lq_ratio,
            c.mt_weight,
            c.mt_ratio
        ]);
    }
    let (metric, pick): (&str, fn(&RatioCell) -> f64) = match cfg.experiment {
        ExperimentKind::WeightedL2 => ("l2_ratio", |c| c.l2_ratio),
        ExperimentKind::WeightedLq => ("lq_ratio", |c| c.lq_ratio),
        _ => ("mt_ratio", |c| c.mt_ratio),
    };
    let maxima = max_by_size(cells.iter().map(|c| (c.radius, pick(c))));
    let growth = growth_exponent(&maxima)?;
    let checks = vec![Check::at_most(format!("{metric}_growth"), growth, cfg.growth_limit)];
    let summary = json!({
        "metric": metric,
        "q": q,
        "p": p,
        "max_per_radius": maxima,
        "growth_exponent": growth,
    });
    Ok(ExperimentReport { experiment: cfg.experiment, summary, checks, table })
}

fn run_gauss(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let q0s = cfg.q0_or_default();
    let sweep = gauss_sharpness_sweep(&q0s, cfg.a.unwrap_or(2))?;
    let mut table = Table::new(&[
        "q0", "radius", "centers", "area", "f_l2", "broad_l2", "ratio", "median_field", "pointwise_share", "oracle_error",
    ]);
    for r in &sweep.rows {
        table.push(row![
            r.q0,
            r.radius,
            r.centers,
            r.area,
            r.f_l2,
            r.broad_l2,
            r.ratio,
            r.median_field,
            r.pointwise_share,
            r.oracle_error
        ]);
    }
    let worst_share = sweep.rows.iter().map(|r| r.pointwise_share).fold(1.0, f64::min);
    let checks = vec![
        Check::within("ratio_slope", sweep.fit.slope, Some(0.10), Some(0.23)),
        Check::within("median_field_slope", sweep.pointwise_fit.slope, Some(-0.65), Some(-0.52)),
        Check::at_most("oracle_error", sweep.worst_oracle_error, super::gauss::ORACLE_TOLERANCE),
        Check::within("pointwise_share", worst_share, Some(0.5), None),
    ];
    let summary = json!({
        "a": sweep.a,
        "k": sweep.k,
        "slope": sweep.fit.slope,
        "slope_stderr": sweep.fit.stderr,
        "pointwise_slope": sweep.pointwise_fit.slope,
        "worst_oracle_error": sweep.worst_oracle_error,
        "pointwise_constant": super::gauss::GAUSS_POINTWISE_C,
    });
    Ok(ExperimentReport { experiment: cfg.experiment, summary, checks, table })
}

fn run_means(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let radii = cfg.radii_or_default();
    let ps = if cfg.p_values.is_empty() { vec![1.8, 2.0] } else { cfg.p_values.clone() };
    for &p in &ps {
        check_sweep(p, &radii)?;
    }
    let families =
        if cfg.families.is_empty() { vec![MeasureFamily::Knapp, MeasureFamily::Segment] } else { cfg.families.clone() };
    let keys: Vec<(MeasureFamily, f64)> =
        families.iter().flat_map(|&f| radii.iter().map(move |&r| (f, r))).collect();
    let moduli = keys
        .par_iter()
        .map(|&(family, r)| circle_moduli(&family.build(r)?, r, default_angles(r)))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["family", "p", "radius", "mean"]);
    let mut checks = Vec::new();
    let mut fits = Vec::new();
    for &family in &families {
        for &p in &ps {
            let pairs: Vec<(f64, f64)> = keys
                .iter()
                .zip(&moduli)
                .filter(|((f, _), _)| *f == family)
                .map(|(&(_, r), m)| (r, mean_of(m, p)))
                .collect();
            for &(r, m) in &pairs {
                table.push(row![family.name(), p, r, m]);
            }
            let fit = exponent_fit(&pairs)?;
            let target = -1.0 / (2.0 * p);
            match family {
                MeasureFamily::Knapp => {
                    checks.push(Check::within(
                        format!("knapp_slope_p{p}"),
                        fit.slope,
                        Some(target - 0.05),
                        Some(target + 0.05),
                    ));
                    if (p - 2.0).abs() < 1e-12 {
                        checks.push(Check::within("knapp_power_slope_p2", p * fit.slope, Some(-0.6), Some(-0.4)));
                    }
                }
                MeasureFamily::Segment => {
                    checks.push(Check::at_most(format!("segment_slope_p{p}"), fit.slope, target + 0.05));
                }
            }
            fits.push(json!({"family": family.name(), "p": p, "slope": fit.slope, "stderr": fit.stderr}));
        }
    }
    let summary = json!({ "fits": fits });
    Ok(ExperimentReport { experiment: cfg.experiment, summary, checks, table })
}

fn run_maximal(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let q = cfg.q_or_default();
    let p = q / (q - 2.0);
    let variant = match cfg.variant {
        VariantName::Schrodinger => MaximalVariant::Schrodinger,
        VariantName::Extension => MaximalVariant::Extension(cfg.curve),
    };
    let densities = if cfg.densities.is_empty() {
        vec![DensityKind::Constant, DensityKind::Random, DensityKind::SingleCap]
    } else {
        cfg.densities.clone()
    };
    let seeds = cfg.seed_list();
    let mut keys = Vec::new();
    for r in cfg.radii_or_default() {
        for (i, &s) in seeds.iter().enumerate() {
            for &d in &densities {
                // the constant density does not depend on the seed
                if d != DensityKind::Constant || i == 0 {
                    keys.push((r, s, d));
                }
            }
        }
    }
    let records = keys
        .par_iter()
        .map(|&(radius, seed, density)| {
            let grid = maximal_grid(radius, variant.curve());
            let fseed = seed + DENSITY_SEED_SHIFT;
            let fhat: SampledDensity<f64> = match density {
                DensityKind::Constant => constant_density(grid)?,
                DensityKind::Random => random_density(grid, radius, fseed)?,
                DensityKind::SingleCap => {
                    single_cap_density(grid, radius, &CapDecomposition::disjoint(cfg.k_for(radius))?, fseed)?
                }
                other => {
                    return Err(Error::Config(format!("density `{}` is not used by this experiment", other.name())))
                }
            };
            maximal_schrodinger_norm(&fhat, radius, q, p, variant)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(&["radius", "seed", "density", "lhs", "f_p", "bound", "ratio", "tail_bound", "edge"]);
    for (&(r, s, d), m) in keys.iter().zip(&records) {
        table.push(row![r, s, d.name(), m.lhs, m.f_p, m.bound, m.ratio, m.tail_bound, m.edge]);
    }
    let maxima = max_by_size(keys.iter().zip(&records).map(|(k, m)| (k.0, m.ratio)));
    let growth = growth_exponent(&maxima)?;
    let knapp: Vec<(f64, f64)> = keys
        .iter()
        .zip(&records)
        .filter(|(k, _)| k.2 == DensityKind::Constant)
        .map(|(k, m)| (k.0, m.ratio))
        .collect();
    let checks = vec![Check::at_most("ratio_growth", growth, cfg.growth_limit)];
    let summary = json!({
        "q": q,
        "p": p,
        "variant": cfg.variant,
        "max_per_radius": maxima,
        "growth_exponent": growth,
        "knapp_ratios": knapp,
    });
    Ok(ExperimentReport { experiment: cfg.experiment, summary, checks, table })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shading {
    Bush,
    TrainTracks,
    RandomTwoEnds,
}

impl Shading {
    fn name(self) -> &'static str {
        match self {
            Self::Bush => "bush",
            Self::TrainTracks => "train_tracks",
            Self::RandomTwoEnds => "random_two_ends",
        }
    }

    fn build(self, delta: f64, seed: u64) -> Result<LineShading> {
        let slots = (PI / delta).floor() as usize;
        match self {
            Self::Bush => bush(delta, slots / 4, [0.0, 0.0]),
            Self::TrainTracks => train_tracks(delta, seed),
            Self::RandomTwoEnds => random_two_ends(delta, slots / 4, 0.5, seed),
        }
    }
}

/// `⌈1/δ⌉` random balls in the disk of radius 0.9, each with 8 tubes at
/// equally spaced directions under a random rotation.
pub(crate) fn dual_family(delta: f64, seed: u64) -> DualTubeFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = (1.0 / delta).ceil() as usize;
    let mut balls = Vec::with_capacity(count);
    while balls.len() < count {
        let p = [rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9)];
        if f64::hypot(p[0], p[1]) <= 0.9 {
            balls.push(p);
        }
    }
    let turns: Vec<f64> = (0..count).map(|_| rng.gen_range(0.0..PI / 8.0)).collect();
    DualTubeFamily::through_balls(delta, balls, 8, |q| (0..8).map(|j| turns[q] + j as f64 * PI / 8.0).collect())
}

fn run_furstenberg(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let eps1 = cfg.eps1.unwrap_or(0.5);
    let deltas = cfg.deltas_or_default();
    let seeds = cfg.seed_list();
    let mut keys = Vec::new();
    for &d in &deltas {
        keys.push((d, Shading::Bush, 0));
        keys.push((d, Shading::TrainTracks, seeds[0]));
        keys.extend(seeds.iter().map(|&s| (d, Shading::RandomTwoEnds, s)));
    }
    let records = keys
        .par_iter()
        .map(|&(delta, kind, seed)| {
            let ly = kind.build(delta, seed)?;
            Ok((ly.lines().len(), ly.ball_count(), furstenberg_ratio(&ly, eps1)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table =
        Table::new(&["delta", "family", "seed", "lines", "balls", "union", "total", "density", "lower", "ratio"]);
    for (&(d, kind, s), (lines, balls, r)) in keys.iter().zip(&records) {
        table.push(row![d, kind.name(), s, *lines, *balls, r.union, r.total, r.density, r.lower, r.ratio]);
    }
    let mut worst: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for (k, (_, _, r)) in keys.iter().zip(&records) {
        let e = worst.entry(k.0.to_bits()).or_insert((k.0, r.ratio));
        e.1 = e.1.min(r.ratio);
    }
    let worst: Vec<(f64, f64)> = worst.into_values().collect();
    let trend = growth_exponent(&worst)?;

    let dual = deltas
        .par_iter()
        .flat_map_iter(|&d| seeds.iter().map(move |&s| (d, s)))
        .map(|(d, s)| match dual_tube_count(&dual_family(d, s), eps1) {
            Ok(rec) => Ok(Some(rec)),
            Err(Error::Precondition(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = dual.iter().filter(|r| r.is_none()).count();
    let dual_ratio = dual.iter().flatten().map(|r| r.ratio).fold(f64::INFINITY, f64::min);

    let checks = vec![
        Check::at_most("worst_ratio_decay", trend, 0.1),
        Check::at_most("dual_precondition_failures", violations as f64, 0.0),
    ];
    let summary = json!({
        "eps1": eps1,
        "worst_per_delta": worst,
        "decay_exponent": trend,
        "dual_families": dual.len(),
        "dual_min_ratio": dual_ratio,
    });
    Ok(ExperimentReport { experiment: cfg.experiment, summary, checks, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn growth_of_flat_and_power_series() {
        assert_eq!(growth_exponent(&[(1.0, 0.0), (2.0, 0.0)]).unwrap(), 0.0);
        let pairs: Vec<_> = [64.0, 256.0, 1024.0].iter().map(|&r: &f64| (r, 2.0 * r.powf(0.3))).collect();
        assert!((growth_exponent(&pairs).unwrap() - 0.3).abs() < 1e-12);
        assert!((growth_exponent(&pairs[..2]).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn max_by_size_orders_and_reduces() {
        let m = max_by_size([(4.0, 1.0), (2.0, 5.0), (4.0, 3.0)].into_iter());
        assert_eq!(m, vec![(2.0, 5.0), (4.0, 3.0)]);
    }

    #[test]
    fn check_bounds() {
        assert!(Check::within("x", 0.5, Some(0.0), Some(1.0)).passed);
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed);
        assert!(!Check::within("x", -1.0, Some(0.0), None).passed);
    }
}
