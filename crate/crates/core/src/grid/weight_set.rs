use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::points::sig;
use super::SpatialPointSet;
use crate::error::{invalid, Result};

/// Minimum allowed distance between unit-ball centers.
pub const MIN_SEPARATION: f64 = 0.5;

/// A union of unit balls inside `B_R`, described by the ball centers.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightSet {
    radius: f64,
    centers: Vec<[f64; 2]>,
    kind: String,
    seed: Option<u64>,
    params: serde_json::Map<String, serde_json::Value>,
    katz_tao_c: Option<f64>,
    gamma: Option<f64>,
}

/// JSON sidecar written next to the CSV of centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSidecar {
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "katz_tao_C")]
    pub katz_tao_c: Option<f64>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub kind: String,
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl WeightSet {
    /// Validates that centers lie in `B_R` (one unit of slack) and are separated.
    pub fn new(radius: f64, centers: Vec<[f64; 2]>) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(invalid("weight-set radius must be positive"));
        }
        for c in &centers {
            if !c[0].is_finite() || !c[1].is_finite() || c[0].hypot(c[1]) > radius + 1.0 {
                return Err(invalid(format!("center ({}, {}) outside B_{radius}", c[0], c[1])));
            }
        }
        if let Some((a, b)) = closest_violation(&centers, MIN_SEPARATION) {
            return Err(invalid(format!(
                "centers {a} and {b} closer than {MIN_SEPARATION}: ({}, {}) and ({}, {})",
                centers[a][0], centers[a][1], centers[b][0], centers[b][1]
            )));
        }
        Ok(Self {
            radius,
            centers,
            kind: "custom".into(),
            seed: None,
            params: serde_json::Map::new(),
            katz_tao_c: None,
            gamma: None,
        })
    }

    pub fn with_provenance(
        mut self,
        kind: impl Into<String>,
        seed: Option<u64>,
        params: serde_json::Map<String, serde_json::Value>,
    ) -> Self {
        self.kind = kind.into();
        self.seed = seed;
        self.params = params;
        self
    }

    pub fn with_stats(mut self, katz_tao_c: f64, gamma: f64) -> Self {
        self.katz_tao_c = Some(katz_tao_c);
        self.gamma = Some(gamma);
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn centers(&self) -> &[[f64; 2]] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn params(&self) -> &serde_json::Map<String, serde_json::Value> {
        &self.params
    }

    pub fn katz_tao_c(&self) -> Option<f64> {
        self.katz_tao_c
    }

    pub fn gamma(&self) -> Option<f64> {
        self.gamma
    }

    /// `|X|`: ball count times the unit-disc area.
    pub fn area(&self) -> f64 {
        self.centers.len() as f64 * PI
    }

    /// Centers as quadrature nodes with cell volume `π`.
    pub fn to_point_set(&self) -> Arc<SpatialPointSet<f64>> {
        Arc::new(
            SpatialPointSet::new(self.radius, self.centers.clone(), PI)
                .expect("weight-set centers already validated"),
        )
    }

    pub fn sidecar(&self) -> WeightSidecar {
        WeightSidecar {
            radius: self.radius,
            katz_tao_c: self.katz_tao_c,
            gamma: self.gamma,
            seed: self.seed,
            kind: self.kind.clone(),
            count: self.centers.len(),
            params: self.params.clone(),
        }
    }

    /// CSV with header `x1,x2`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x1", "x2"])?;
        for c in &self.centers {
            w.write_record([sig(c[0]), sig(c[1])])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R, radius: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x1", "x2"] {
            return Err(invalid("weight-set CSV header must be `x1,x2`"));
        }
        let mut centers = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| invalid(format!("bad number in weight-set CSV row {:?}", rec.position())))
            };
            centers.push([parse(0)?, parse(1)?]);
        }
        Self::new(radius, centers)
    }

    /// Writes `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_csv(std::fs::File::create(dir.join(format!("{stem}.csv")))?)?;
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let side: WeightSidecar =
            serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let mut set = Self::read_csv(std::fs::File::open(dir.join(format!("{stem}.csv")))?, side.radius)?
            .with_provenance(side.kind, side.seed, side.params);
        set.katz_tao_c = side.katz_tao_c;
        set.gamma = side.gamma;
        Ok(set)
    }
}

/// First pair of centers closer than `min_dist`, found by bucketing.
pub(crate) fn closest_violation(centers: &[[f64; 2]], min_dist: f64) -> Option<(usize, usize)> {
    let cell = |p: &[f64; 2]| ((p[0] / min_dist).floor() as i64, (p[1] / min_dist).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in centers.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(cx + dx, cy + dy)) {
                    for &j in list {
                        let q = &centers[j];
                        if (p[0] - q[0]).hypot(p[1] - q[1]) < min_dist {
                            return Some((j, i));
                        }
                    }
                }
            }
        }
        buckets.entry((cx, cy)).or_default().push(i);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_close_centers() {
        assert!(WeightSet::new(10.0, vec![[0.0, 0.0], [0.3, 0.2]]).is_err());
        assert!(WeightSet::new(10.0, vec![[0.0, 0.0], [0.5, 0.0]]).is_ok());
    }

    #[test]
    fn rejects_far_centers() {
        assert!(WeightSet::new(10.0, vec![[10.5, 0.0]]).is_ok());
        assert!(WeightSet::new(10.0, vec![[11.5, 0.0]]).is_err());
    }

    #[test]
    fn area_counts_unit_discs() {
        let w = WeightSet::new(10.0, vec![[0.0, 0.0], [2.0, 0.0], [4.0, 0.0]]).unwrap();
        assert!((w.area() - 3.0 * PI).abs() < 1e-15);
        assert_eq!(w.to_point_set().cell_volume(), PI);
    }

    #[test]
    fn csv_round_trip_keeps_twelve_digits() {
        let w = WeightSet::new(100.0, vec![[1.0 / 3.0, -2.0 / 7.0], [50.123456789012345, 3.0]]).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x1,x2\n"));
        let back = WeightSet::read_csv(buf.as_slice(), 100.0).unwrap();
        for (a, b) in w.centers().iter().zip(back.centers()) {
            assert!((a[0] - b[0]).abs() <= 1e-12 * a[0].abs().max(1.0));
            assert!((a[1] - b[1]).abs() <= 1e-12 * a[1].abs().max(1.0));
        }
    }

    #[test]
    fn sidecar_uses_documented_keys() {
        let w = WeightSet::new(4.0, vec![[0.0, 0.0]]).unwrap().with_stats(1.5, 3.1).with_provenance(
            "tube",
            Some(7),
            serde_json::Map::new(),
        );
        let v = serde_json::to_value(w.sidecar()).unwrap();
        assert_eq!(v["R"], 4.0);
        assert_eq!(v["katz_tao_C"], 1.5);
        assert_eq!(v["gamma"], 3.1);
        assert_eq!(v["seed"], 7);
    }
}
