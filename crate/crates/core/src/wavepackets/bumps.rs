//! The frozen bump family: a mollifier partition of unity in frequency and
//! a flat-top frequency profile for spatial localization.

use std::sync::OnceLock;

/// `exp(-1/(1-u²))` on `|u| < 1`, zero elsewhere.
pub fn mollifier(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

const TABLE_CELLS: usize = 2048;

/// Five-point Gauss-Legendre nodes and weights on `[-1, 1]`.
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

struct StepTable {
    values: Vec<f64>,
    total: f64,
}

fn step_table() -> &'static StepTable {
    static TABLE: OnceLock<StepTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let width = 2.0 / TABLE_CELLS as f64;
        let mut values = Vec::with_capacity(TABLE_CELLS + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for c in 0..TABLE_CELLS {
            let mid = -1.0 + (c as f64 + 0.5) * width;
            let cell: f64 = GL_NODES
                .iter()
                .zip(GL_WEIGHTS)
                .map(|(&x, w)| w * mollifier(mid + 0.5 * width * x))
                .sum();
            acc += 0.5 * width * cell;
            values.push(acc);
        }
        StepTable { values, total: acc }
    })
}

/// Smooth step rising from 0 at `t = -1/2` to 1 at `t = 1/2`; its derivative
/// is the normalized mollifier `2η(2t)`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= -0.5 {
        return 0.0;
    }
    if t >= 0.5 {
        return 1.0;
    }
    let table = step_table();
    let u = 2.0 * t;
    let width = 2.0 / TABLE_CELLS as f64;
    let pos = (u + 1.0) / width;
    let c = (pos.floor() as usize).min(TABLE_CELLS - 1);
    let s = pos - c as f64;
    let (u0, u1) = (-1.0 + c as f64 * width, -1.0 + (c + 1) as f64 * width);
    let (y0, y1) = (table.values[c], table.values[c + 1]);
    let (d0, d1) = (mollifier(u0) * width, mollifier(u1) * width);
    // cubic Hermite with exact derivatives
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    (h00 * y0 + h10 * d0 + h01 * y1 + h11 * d1) / table.total
}

/// Partition of unity over `count` unit cells of the coordinate `v`.
///
/// Cell `t` has weight `step(v - t) - step(v - t - 1)`, supported on
/// `(t - 1/2, t + 3/2)`; the first and last weights absorb the outer tails.
pub fn partition_weight(v: f64, t: usize, count: usize) -> f64 {
    if count == 1 {
        return 1.0;
    }
    let left = if t == 0 { 1.0 } else { smooth_step(v - t as f64) };
    let right = if t + 1 == count { 0.0 } else { smooth_step(v - (t + 1) as f64) };
    left - right
}

/// Flat-top profile on `[-1, 1]`: one on `|u| ≤ 1/2`, falling smoothly to
/// zero at `|u| = 1`.
pub fn plateau(u: f64) -> f64 {
    let a = u.abs();
    if a >= 1.0 {
        0.0
    } else {
        smooth_step(1.5 - 2.0 * a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_is_monotone_and_normalized() {
        assert_eq!(smooth_step(-0.5), 0.0);
        assert_eq!(smooth_step(0.5), 1.0);
        assert!((smooth_step(0.0) - 0.5).abs() < 1e-12);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let t = -0.5 + i as f64 * 1e-3;
            let s = smooth_step(t);
            assert!(s >= prev - 1e-15);
            prev = s;
        }
    }

    #[test]
    fn step_derivative_is_the_mollifier() {
        let total: f64 = {
            let n = 200_000;
            (0..n).map(|i| mollifier(-1.0 + (i as f64 + 0.5) * 2.0 / n as f64) * 2.0 / n as f64).sum()
        };
        for &t in &[-0.4, -0.1, 0.0, 0.23, 0.41] {
            let fd = (smooth_step(t + 1e-5) - smooth_step(t - 1e-5)) / 2e-5;
            let exact = 2.0 * mollifier(2.0 * t) / total;
            assert!((fd - exact).abs() < 1e-6, "t={t} fd={fd} exact={exact}");
        }
    }

    #[test]
    fn partition_sums_to_one() {
        let count = 7;
        for i in 0..=700 {
            let v = i as f64 * 0.01;
            let s: f64 = (0..count).map(|t| partition_weight(v, t, count)).sum();
            assert!((s - 1.0).abs() < 1e-14, "v={v} sum={s}");
        }
    }

    #[test]
    fn partition_support_is_doubled_cell() {
        for t in 1..5 {
            assert_eq!(partition_weight(t as f64 - 0.5, t, 6), 0.0);
            assert_eq!(partition_weight(t as f64 + 1.5, t, 6), 0.0);
            assert!(partition_weight(t as f64 + 0.5, t, 6) > 0.99);
        }
    }

    #[test]
    fn plateau_shape() {
        assert_eq!(plateau(0.0), 1.0);
        assert_eq!(plateau(0.5), 1.0);
        assert_eq!(plateau(-0.5), 1.0);
        assert_eq!(plateau(1.0), 0.0);
        assert!((plateau(0.75) - 0.5).abs() < 1e-12);
        assert_eq!(plateau(0.6), plateau(-0.6));
    }
}
