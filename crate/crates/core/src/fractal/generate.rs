use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{dyadic_radii, with_statistics, GaussLattice};
use crate::error::{invalid, Result};
use crate::grid::WeightSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Tube,
    Lattice,
    RandomKatzTao,
    GaussRational,
    Bush,
}

impl WeightKind {
    pub const ALL: [WeightKind; 5] =
        [Self::Tube, Self::Lattice, Self::RandomKatzTao, Self::GaussRational, Self::Bush];

    pub fn name(self) -> &'static str {
        match self {
            Self::Tube => "tube",
            Self::Lattice => "lattice",
            Self::RandomKatzTao => "random_katz_tao",
            Self::GaussRational => "gauss_rational",
            Self::Bush => "bush",
        }
    }
}

impl FromStr for WeightKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown weight kind `{s}`")))
    }
}

fn param(params: &Map<String, Value>, key: &str) -> Option<f64> {
    params.get(key).and_then(Value::as_f64)
}

/// Builds a weight set of unit balls in `B_R` and caches its Katz-Tao
/// statistics. Recognized `params`:
///
/// * `tube`: `angle`, `offset`, `length` (defaults: seeded angle, 0, `R`)
/// * `lattice`: `spacing` (default `√R`)
/// * `random_katz_tao`: `count` (default `R`), `constant` (default 2)
/// * `bush`: `lines` (default 8)
pub fn generate_weight(kind: WeightKind, radius: f64, seed: u64, params: &Map<String, Value>) -> Result<WeightSet> {
    if !(radius >= 1.0) {
        return Err(invalid(format!("weight radius must be at least 1, got {radius}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut used = params.clone();
    let centers = match kind {
        WeightKind::Tube => {
            let angle = param(params, "angle").unwrap_or_else(|| rng.gen_range(0.0..PI));
            let offset = param(params, "offset").unwrap_or(0.0);
            let length = param(params, "length").unwrap_or(radius).min(2.0 * radius);
            used.insert("angle".into(), json!(angle));
            tube(radius, angle, offset, length)
        }
        WeightKind::Lattice => {
            let spacing = param(params, "spacing").unwrap_or(radius.sqrt());
            if !(spacing >= 1.0) {
                return Err(invalid("lattice spacing must be at least 1"));
            }
            lattice(radius, spacing)
        }
        WeightKind::RandomKatzTao => {
            let count = param(params, "count").unwrap_or(radius).round() as usize;
            let constant = param(params, "constant").unwrap_or(2.0);
            random_katz_tao(radius, count, constant, &mut rng)
        }
        WeightKind::GaussRational => {
            let g = GaussLattice::from_radius(radius)?;
            used.insert("q0".into(), json!(g.q0));
            g.centers().into_iter().map(|c| c.x).collect()
        }
        WeightKind::Bush => {
            let lines = param(params, "lines").unwrap_or(8.0).round() as usize;
            bush(radius, lines.max(1), rng.gen_range(0.0..PI))
        }
    };
    let weight = WeightSet::new(radius, centers)?.with_provenance(kind.name(), Some(seed), used);
    with_statistics(weight)
}

fn tube(radius: f64, angle: f64, offset: f64, length: f64) -> Vec<[f64; 2]> {
    let (dir, normal) = ([angle.cos(), angle.sin()], [-angle.sin(), angle.cos()]);
    let count = length.floor() as usize;
    (0..count)
        .map(|i| {
            let t = -0.5 * count as f64 + 0.5 + i as f64;
            [t * dir[0] + offset * normal[0], t * dir[1] + offset * normal[1]]
        })
        .filter(|p| p[0].hypot(p[1]) <= radius)
        .collect()
}

fn lattice(radius: f64, spacing: f64) -> Vec<[f64; 2]> {
    let n = (radius / spacing).floor() as i64;
    let mut out = Vec::new();
    for i in -n..=n {
        for j in -n..=n {
            let p = [i as f64 * spacing, j as f64 * spacing];
            if p[0].hypot(p[1]) <= radius {
                out.push(p);
            }
        }
    }
    out
}

fn bush(radius: f64, lines: usize, phase: f64) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    let steps = radius.floor() as i64;
    for l in 0..lines {
        let angle = phase + PI * l as f64 / lines as f64;
        for t in -steps..=steps {
            let p = [t as f64 * angle.cos(), t as f64 * angle.sin()];
            if out.iter().all(|q| (q[0] - p[0]).hypot(q[1] - p[1]) >= 1.0) {
                out.push(p);
            }
        }
    }
    out
}

/// Uniform proposals in `B_R`, accepted only while every open-ball count
/// around accepted centers stays `≤ constant·r` at the dyadic radii and
/// centers stay one unit apart.
fn random_katz_tao(radius: f64, count: usize, constant: f64, rng: &mut ChaCha8Rng) -> Vec<[f64; 2]> {
    let radii: Vec<f64> = dyadic_radii(1.0 / radius).into_iter().map(|r| r * radius).collect();
    let caps: Vec<f64> = radii.iter().map(|r| constant * r).collect();
    let mut pts: Vec<[f64; 2]> = Vec::with_capacity(count);
    let mut counts: Vec<Vec<usize>> = Vec::with_capacity(count);
    let budget = 50 * count.max(1);
    for _ in 0..budget {
        if pts.len() == count {
            break;
        }
        let p = loop {
            let c = [rng.gen_range(-radius..radius), rng.gen_range(-radius..radius)];
            if c[0].hypot(c[1]) <= radius {
                break c;
            }
        };
        let dist: Vec<f64> = pts.iter().map(|q| (q[0] - p[0]).hypot(q[1] - p[1])).collect();
        if dist.iter().any(|&d| d < 1.0) {
            continue;
        }
        let own: Vec<usize> = radii.iter().map(|&r| 1 + dist.iter().filter(|&&d| d < r).count()).collect();
        let fits = own.iter().zip(&caps).all(|(&c, &cap)| c as f64 <= cap)
            && dist.iter().zip(&counts).all(|(&d, cq)| {
                radii.iter().zip(cq).zip(&caps).all(|((&r, &c), &cap)| d >= r || (c + 1) as f64 <= cap)
            });
        if !fits {
            continue;
        }
        for (&d, cq) in dist.iter().zip(counts.iter_mut()) {
            for (&r, c) in radii.iter().zip(cq.iter_mut()) {
                if d < r {
                    *c += 1;
                }
            }
        }
        pts.push(p);
        counts.push(own);
    }
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tube_has_r_balls() {
        let w = generate_weight(WeightKind::Tube, 256.0, 1, &Map::new()).unwrap();
        assert_eq!(w.len(), 256);
        assert_eq!(w.kind(), "tube");
        assert_eq!(w.seed(), Some(1));
        assert!(w.params().contains_key("angle"));
    }

    #[test]
    fn kinds_parse_by_name() {
        for k in WeightKind::ALL {
            assert_eq!(k.name().parse::<WeightKind>().unwrap(), k);
        }
        assert!("blob".parse::<WeightKind>().is_err());
    }

    #[test]
    fn bush_centers_are_separated() {
        let w = generate_weight(WeightKind::Bush, 64.0, 2, &Map::new()).unwrap();
        assert!(w.len() > 64);
    }

    #[test]
    fn gauss_needs_sixth_power() {
        assert!(generate_weight(WeightKind::GaussRational, 1000.0, 0, &Map::new()).is_err());
    }
}
