use std::sync::Arc;

use num_complex::Complex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Goldens, Suite};
use crate::broad::{ath_largest, broad_narrow_residual, broad_triangle_residual, CapDecomposition};
use crate::error::{precondition, Result};
use crate::experiments::{
    gauss_sharpness_sweep, grid_for, growth_exponent, ratio_cells, run_experiment, Check, ExperimentConfig, ExperimentKind,
    MeasureFamily, CRITICAL_EXPONENT,
};

use crate::extension::{rescale_identity_residual, Cap, Curve};
use crate::fractal::{katz_tao_constant, random_refine};
use crate::grid::{FrequencyGrid, SampledDensity, SpatialPointSet};
use crate::wavepackets::bumps::partition_weight;
use crate::wavepackets::{
    build_wave_packets, off_tube_decay_profile, reconstruction_residual, refined_decoupling_ratio, Packet,
};

type C64 = Complex<f64>;

/// Checks plus the time budget in seconds.
pub(super) type Outcome = Result<(Vec<Check>, f64)>;
pub type CriterionFn = fn(Suite, &Goldens) -> Outcome;

pub const CRITERIA: [(&str, CriterionFn); 11] = [
    ("broad_identities", broad_identities),
    ("broad_equivalence", broad_equivalence),
    ("wave_packets", wave_packets),
    ("parabolic_rescaling", parabolic_rescaling),
    ("gauss_sharpness", gauss_sharpness),
    ("knapp_means", knapp_means),
    ("non_violation", non_violation),
    ("katz_tao", katz_tao),
    ("furstenberg", furstenberg),
    ("decoupling", decoupling),
    ("determinism", determinism),
];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_density(grid: FrequencyGrid<f64>, seed: u64) -> Result<SampledDensity<f64>> {
    let mut r = rng(seed);
    SampledDensity::from_fn(grid, |_| C64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)))
}

fn disk_points(radius: f64, count: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut r = rng(seed);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let p = [r.gen_range(-radius..radius), r.gen_range(-radius..radius)];
        if p[0].hypot(p[1]) <= radius {
            pts.push(p);
        }
    }
    pts
}

fn point_set(radius: f64, pts: Vec<[f64; 2]>) -> Result<Arc<SpatialPointSet<f64>>> {
    Ok(Arc::new(SpatialPointSet::new(radius, pts, 1.0)?))
}

/// Broad-narrow and triangle residuals over random densities and caps.
fn broad_identities(suite: Suite, g: &Goldens) -> Outcome {
    let cases = suite.pick(20u64, 100);
    let radius = 64.0;
    let grid = grid_for(radius, Curve::Parabola, 1.0);
    let worst = (0..cases)
        .into_par_iter()
        .map(|case| {
            let k = if case % 2 == 0 { 8.0 } else { 16.0 };
            let a = 1 + (case / 2 % 3) as usize;
            let caps = CapDecomposition::disjoint(k)?;
            let pts = point_set(radius, disk_points(radius, 100, 7000 + case))?;
            let f1 = complex_density(grid, 3 * case)?;
            let f2 = complex_density(grid, 3 * case + 1)?;
            let narrow = broad_narrow_residual(&f1, Curve::Parabola, &caps, a, &pts)?;
            let triangle = broad_triangle_residual(&f1, &f2, Curve::Parabola, &caps, a, a, &pts)?;
            Ok((narrow, triangle))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold((0.0f64, 0.0f64), |m, (n, t)| (m.0.max(n), m.1.max(t)));
    let limit = g.broad_identities.residual_limit;
    Ok((
        vec![Check::at_most("narrow_residual", worst.0, limit), Check::at_most("triangle_residual", worst.1, limit)],
        g.broad_identities.budget_secs,
    ))
}

/// `min` over removed `(A-1)`-subsets of the max of the rest.
fn brute_broad(values: &[f64], a: usize) -> f64 {
    let n = values.len();
    let drop = a - 1;
    if drop >= n {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    let mut chosen: Vec<usize> = (0..drop).collect();
    loop {
        let rest = (0..n).filter(|i| !chosen.contains(i)).map(|i| values[i]).fold(0.0, f64::max);
        best = best.min(rest);
        // next combination in lexicographic order
        let Some(pos) = (0..drop).rev().find(|&i| chosen[i] < n - drop + i) else {
            return best;
        };
        chosen[pos] += 1;
        for j in pos + 1..drop {
            chosen[j] = chosen[j - 1] + 1;
        }
    }
}

fn broad_equivalence(suite: Suite, g: &Goldens) -> Outcome {
    let vectors = suite.pick(1_000u64, 10_000);
    let mismatches = (0..vectors)
        .into_par_iter()
        .map(|seed| {
            let mut r = rng(90_000 + seed);
            let n = r.gen_range(1..=20);
            let a = r.gen_range(1..=5);
            // coarse levels force ties
            let levels = if seed % 3 == 0 { 4.0 } else { 1e9 };
            let values: Vec<f64> = (0..n).map(|_| (r.gen_range(0.0..1.0f64) * levels).floor() / levels).collect();
            Ok(usize::from(ath_largest(&values, a)? != brute_broad(&values, a)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok((
        vec![Check::at_most("mismatches", mismatches as f64, g.broad_equivalence.max_mismatches as f64)],
        g.broad_equivalence.budget_secs,
    ))
}

fn wave_packets(suite: Suite, g: &Goldens) -> Outcome {
    let per_radius = suite.pick(4u64, 20);
    let keys: Vec<(f64, u64)> =
        [64.0, 256.0].into_iter().flat_map(|r| (0..per_radius).map(move |s| (r, s))).collect();
    let residual = keys
        .par_iter()
        .map(|&(radius, seed)| {
            let f = complex_density(FrequencyGrid::unit((80.0 * radius) as usize), 500 + seed)?;
            let set = build_wave_packets(&f, Curve::Parabola, radius, 0.05, 0.0)?;
            reconstruction_residual(&f, &set, &disk_points(radius, 200, 600 + seed))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let radius = 1024.0f64;
    let count = (2.0 * radius.sqrt()).ceil() as usize;
    let len = 2.0 / count as f64;
    let theta = count / 2;
    let bump = SampledDensity::from_fn(FrequencyGrid::unit((20.0 * radius) as usize), |xi| {
        C64::new(partition_weight((xi + 1.0) / len, theta, count), 0.0)
    })?;
    let set = build_wave_packets(&bump, Curve::Parabola, radius, 0.05, 0.0)?;
    let packet = set.packet(set.by_norm()[0])?;
    let w = &g.wave_packets;
    let off = off_tube_decay_profile(&packet, &[w.off_tube_halfwidths])?[0].1;
    Ok((
        vec![
            Check::at_most("reconstruction_residual", residual, w.residual_limit),
            Check::at_most("off_tube_ratio", off, w.off_tube_limit),
        ],
        w.budget_secs,
    ))
}

fn parabolic_rescaling(suite: Suite, g: &Goldens) -> Outcome {
    let radius = 256.0;
    let densities = suite.pick(2u64, 5);
    let grid = FrequencyGrid::unit(16_384);
    let mut keys = Vec::new();
    for k in [2.0, 8.0] {
        for center in [0.0, 0.5] {
            keys.extend((0..densities).map(|s| (k, center, s)));
        }
    }
    let worst = keys
        .par_iter()
        .map(|&(k, center, seed)| {
            let cap = Cap::new(center, k)?;
            let f = complex_density(grid, 800 + seed)?;
            let pts = point_set(radius, disk_points(radius, 100, 900 + seed))?;
            rescale_identity_residual(&f, Curve::Parabola, &cap, &pts)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let r = &g.parabolic_rescaling;
    Ok((vec![Check::at_most("rescale_residual", worst, r.residual_limit)], r.budget_secs))
}

fn frozen(name: &str, value: f64, golden: f64, tolerance: f64) -> Check {
    Check::within(name, value, Some(golden - tolerance), Some(golden + tolerance))
}

fn gauss_sharpness(_suite: Suite, g: &Goldens) -> Outcome {
    let sweep = gauss_sharpness_sweep(&[3, 4, 5, 6, 7], 2)?;
    let gs = &g.gauss_sharpness;
    let share = sweep.rows.iter().map(|r| r.pointwise_share).fold(1.0, f64::min);
    Ok((
        vec![
            Check::within("ratio_slope", sweep.fit.slope, Some(gs.slope_range[0]), Some(gs.slope_range[1])),
            Check::within(
                "median_field_slope",
                sweep.pointwise_fit.slope,
                Some(gs.pointwise_slope_range[0]),
                Some(gs.pointwise_slope_range[1]),
            ),
            Check::at_most("oracle_error", sweep.worst_oracle_error, gs.oracle_tolerance),
            Check::within("pointwise_share", share, Some(gs.min_pointwise_share), None),
            frozen("ratio_slope_golden", sweep.fit.slope, gs.frozen_slope, gs.frozen_tolerance),
            frozen("median_slope_golden", sweep.pointwise_fit.slope, gs.frozen_pointwise_slope, gs.frozen_tolerance),
        ],
        gs.budget_secs,
    ))
}

fn knapp_means(_suite: Suite, g: &Goldens) -> Outcome {
    let km = &g.knapp_means;
    let mut cfg = ExperimentConfig::new(ExperimentKind::CircularMeans, vec![0]);
    cfg.families = vec![MeasureFamily::Knapp];
    cfg.p_values = vec![1.8, 2.0];
    cfg.radii = vec![64.0, 128.0, 256.0, 512.0, 1024.0];
    let report = run_experiment(&cfg)?;
    let mut checks = Vec::new();
    for fit in report.summary["fits"].as_array().into_iter().flatten() {
        let p = fit["p"].as_f64().unwrap_or(f64::NAN);
        let slope = fit["slope"].as_f64().unwrap_or(f64::NAN);
        let target = -1.0 / (2.0 * p);
        checks.push(Check::within(
            format!("slope_p{p}"),
            slope,
            Some(target - km.slope_tolerance),
            Some(target + km.slope_tolerance),
        ));
        if (p - 2.0).abs() < 1e-12 {
            checks.push(Check::within(
                "power_slope_p2",
                p * slope,
                Some(-0.5 - km.power_slope_tolerance),
                Some(-0.5 + km.power_slope_tolerance),
            ));
        }
        let golden = km.frozen_slopes.get(&format!("{p}")).copied().unwrap_or(f64::NAN);
        checks.push(frozen(&format!("slope_p{p}_golden"), slope, golden, km.frozen_tolerance));
    }
    Ok((checks, km.budget_secs))
}

fn non_violation(suite: Suite, g: &Goldens) -> Outcome {
    let seeds = suite.pick(3u64, 50);
    let mut cfg = ExperimentConfig::new(ExperimentKind::WeightedL2, (0..seeds).collect());
    cfg.radii = suite.pick(vec![256.0, 512.0, 1024.0], vec![256.0, 1024.0, 4096.0]);
    let cells = ratio_cells(&cfg, CRITICAL_EXPONENT, CRITICAL_EXPONENT)?;
    let growth = |pick: fn(&crate::experiments::RatioCell) -> f64| -> Result<f64> {
        let pairs: Vec<(f64, f64)> = cfg
            .radii
            .iter()
            .map(|&r| (r, cells.iter().filter(|c| c.radius == r).map(pick).fold(0.0, f64::max)))
            .collect();
        growth_exponent(&pairs)
    };
    let limit = g.non_violation.growth_limit;
    Ok((
        vec![
            Check::at_most("l2_ratio_growth", growth(|c| c.l2_ratio)?, limit),
            Check::at_most("lq_ratio_growth", growth(|c| c.lq_ratio)?, limit),
            Check::at_most("mt_ratio_growth", growth(|c| c.mt_ratio)?, limit),
        ],
        g.non_violation.budget_secs,
    ))
}

/// Every center against every point at every dyadic radius.
fn brute_katz_tao(pts: &[[f64; 2]], delta: f64) -> f64 {
    let mut radii = Vec::new();
    let mut r = delta;
    while r < 1.0 - 1e-9 {
        radii.push(r);
        r *= 2.0;
    }
    radii.push(1.0);
    let mut best = 0.0f64;
    for &r in &radii {
        for c in pts {
            let n = pts.iter().filter(|p| (p[0] - c[0]).hypot(p[1] - c[1]) < r * (1.0 - 1e-9)).count();
            best = best.max(n as f64 / (r / delta));
        }
    }
    best
}

fn uniform(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut r = rng(seed);
    (0..n).map(|_| [r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)]).collect()
}

/// Half uniform, half packed around four hubs.
fn clustered(n: usize, delta: f64, seed: u64) -> Vec<[f64; 2]> {
    let mut r = rng(seed);
    let hubs: Vec<[f64; 2]> = (0..4).map(|_| [r.gen_range(0.1..0.9), r.gen_range(0.1..0.9)]).collect();
    (0..n)
        .map(|i| {
            if i % 2 == 0 {
                [r.gen_range(0.0..1.0), r.gen_range(0.0..1.0)]
            } else {
                let h = hubs[i % 4];
                [h[0] + r.gen_range(-delta..delta), h[1] + r.gen_range(-delta..delta)]
            }
        })
        .collect()
}

fn katz_tao(suite: Suite, g: &Goldens) -> Outcome {
    let sets = suite.pick(5u64, 20);
    let delta = 1.0 / 32.0;
    let mismatches = (0..sets)
        .into_par_iter()
        .map(|seed| {
            let pts = if seed % 2 == 0 { uniform(200, 40 + seed) } else { clustered(200, delta, 40 + seed) };
            Ok(usize::from(katz_tao_constant(&pts, delta, 1.0)? != brute_katz_tao(&pts, delta)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    let inputs = suite.pick(20u64, 100);
    let kt = &g.katz_tao;
    let refined = (0..inputs)
        .into_par_iter()
        .map(|seed| match random_refine(&clustered(300, 1.0 / 64.0, 300 + seed), 1.0 / 64.0, seed) {
            Ok(r) => Ok(Some((r.attempts, r.mass_ratio))),
            Err(crate::Error::RefinementFailed { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>>>()?;
    let failures = refined.iter().filter(|r| r.is_none()).count();
    let attempts = refined.iter().flatten().map(|r| r.0).max().unwrap_or(0);
    let lo = refined.iter().flatten().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let hi = refined.iter().flatten().map(|r| r.1).fold(0.0, f64::max);
    Ok((
        vec![
            Check::at_most("brute_mismatches", mismatches as f64, 0.0),
            Check::at_most("refine_failures", failures as f64, 0.0),
            Check::at_most("refine_attempts", attempts as f64, kt.max_attempts as f64),
            Check::within("refine_mass_min", lo, Some(kt.mass_range[0]), Some(kt.mass_range[1])),
            Check::within("refine_mass_max", hi, Some(kt.mass_range[0]), Some(kt.mass_range[1])),
        ],
        kt.budget_secs,
    ))
}

fn furstenberg(suite: Suite, g: &Goldens) -> Outcome {
    let seeds = suite.pick(5u64, 50);
    let cfg = ExperimentConfig::new(ExperimentKind::Furstenberg, (0..seeds).collect());
    let report = run_experiment(&cfg)?;
    let mut checks = report.checks;
    if let Some(c) = checks.iter_mut().find(|c| c.name == "worst_ratio_decay") {
        *c = Check::at_most(c.name.clone(), c.value, g.furstenberg.decay_limit);
    }
    Ok((checks, g.furstenberg.budget_secs))
}

/// Ten packets at separated random directions and random translates, with
/// `X` made of `√R`-balls on their tubes plus ten random balls.
pub fn decoupling_configuration(radius: f64, seed: u64) -> Result<(Vec<Packet>, Vec<[f64; 2]>)> {
    const PACKETS: usize = 10;
    let mut r = rng(seed);
    let grid = grid_for(radius, Curve::Parabola, 3.0);
    let probe = build_wave_packets(&SampledDensity::zeros(grid), Curve::Parabola, radius, 0.05, 0.0)?;
    let count = probe.theta_count();
    if count < 2 * PACKETS + 3 {
        return Err(precondition(format!("R = {radius} has only {count} directions")));
    }
    // interior directions at least two apart, so packet windows do not mix
    let thetas: Vec<usize> = loop {
        let mut t: Vec<usize> = sample(&mut r, count - 2, PACKETS).into_iter().map(|i| i + 1).collect();
        t.sort_unstable();
        if t.windows(2).all(|w| w[1] - w[0] >= 2) {
            break t;
        }
    };
    // keep tube axes well inside B_R
    let reach = ((0.4 * radius / probe.spacing()).floor() as i64).min(probe.translates() as i64 / 2);
    let vs: Vec<i64> = thetas.iter().map(|_| r.gen_range(-reach..=reach)).collect();
    let len = probe.theta_len();
    let spacing = probe.spacing();
    let f = SampledDensity::from_fn(grid, |xi| {
        thetas.iter().zip(&vs).fold(C64::new(0.0, 0.0), |acc, (&t, &v)| {
            let w = partition_weight((xi + 1.0) / len, t, count);
            if w == 0.0 {
                acc
            } else {
                acc + C64::from_polar(w, -(v as f64) * spacing * xi)
            }
        })
    })?;
    let set = build_wave_packets(&f, Curve::Parabola, radius, 0.05, 0.0)?;
    let packets = thetas
        .iter()
        .zip(&vs)
        .map(|(&t, &v)| {
            let i = set.find(t, v).ok_or_else(|| precondition(format!("no packet at ({t}, {v})")))?;
            set.packet(i)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut balls = Vec::new();
    for p in &packets {
        for _ in 0..2 {
            let x2 = r.gen_range(-0.5 * radius..0.5 * radius);
            balls.push([p.tube.center - x2 * p.tube.slope, x2]);
        }
    }
    balls.extend(disk_points(0.8 * radius, PACKETS, r.gen()));
    balls.retain(|q| q[0].hypot(q[1]) <= radius);
    Ok((packets, balls))
}

fn decoupling(suite: Suite, g: &Goldens) -> Outcome {
    let configs = suite.pick(3u64, 20);
    let radii = suite.pick([256.0, 512.0], [256.0, 1024.0]);
    let keys: Vec<(f64, u64)> = radii.iter().flat_map(|&r| (0..configs).map(move |s| (r, s))).collect();
    let records = keys
        .iter()
        .map(|&(radius, seed)| {
            let (packets, balls) = decoupling_configuration(radius, 1_000 + seed)?;
            Ok(refined_decoupling_ratio(&packets, &balls, radius)?.c_obs)
        })
        .collect::<Result<Vec<_>>>()?;
    let d = &g.decoupling;
    let maxima: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| (r, keys.iter().zip(&records).filter(|(k, _)| k.0 == r).map(|(_, c)| *c).fold(0.0, f64::max)))
        .collect();
    let worst_scaled = maxima.iter().map(|&(r, c)| c / (d.constant_factor * r.powf(d.constant_exponent))).fold(0.0, f64::max);
    Ok((
        vec![
            Check::at_most("c_obs_growth", growth_exponent(&maxima)?, d.growth_limit),
            Check::at_most("c_obs_over_bound", worst_scaled, 1.0),
        ],
        d.budget_secs,
    ))
}

/// Reruns the cheap criteria at fast size and compares the tables bytewise.
fn determinism(_suite: Suite, g: &Goldens) -> Outcome {
    let render = || -> Result<Vec<u8>> {
        let outcomes = [1u8, 2, 8, 9]
            .iter()
            .map(|&id| super::run_criterion(id, Suite::Fast, g))
            .collect::<Result<Vec<_>>>()?;
        let mut buf = Vec::new();
        super::SuiteReport { suite: Suite::Fast, outcomes }.table().write_csv(&mut buf)?;
        Ok(buf)
    };
    let same = render()? == render()?;
    Ok((vec![Check::within("byte_identical", f64::from(u8::from(same)), Some(1.0), None)], g.determinism.budget_secs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_broad_examples() {
        assert_eq!(brute_broad(&[5.0, 3.0, 2.0], 1), 5.0);
        assert_eq!(brute_broad(&[5.0, 3.0, 2.0], 2), 3.0);
        assert_eq!(brute_broad(&[5.0, 3.0, 2.0], 4), 0.0);
        assert_eq!(brute_broad(&[1.0, 4.0, 4.0, 2.0], 2), 4.0);
    }
}
