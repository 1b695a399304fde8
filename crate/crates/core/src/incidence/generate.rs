use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Line, LineShading, ShadedLine, TwoEnds};
use crate::error::{invalid, Result};

/// Balls at spacing `δ` along the whole chord.
fn full(line: Line, delta: f64) -> ShadedLine {
    let c = line.half_chord();
    let count = (2.0 * c / delta).floor() as usize;
    let start = -0.5 * (count as f64 - 1.0) * delta;
    let balls = (0..count).map(|k| line.point(start + k as f64 * delta)).collect();
    ShadedLine { line, balls }
}

pub fn single_line(delta: f64, line: Line) -> Result<LineShading> {
    LineShading::new(delta, vec![full(line, delta)], TwoEnds::default())
}

/// `count` fully shaded lines through `center` with equally spaced
/// directions.
pub fn bush(delta: f64, count: usize, center: [f64; 2]) -> Result<LineShading> {
    if count == 0 || PI / (count as f64) < delta {
        return Err(invalid(format!("a bush of {count} lines cannot be δ-separated at δ = {delta}")));
    }
    let lines = (0..count).map(|k| full(Line::through(center, PI * k as f64 / count as f64), delta)).collect();
    LineShading::new(delta, lines, TwoEnds::default())
}

/// About `δ^{-1/2}` families of `δ^{-1/2}` nearly parallel lines laid side by
/// side, directions `δ` apart within a family.
pub fn train_tracks(delta: f64, seed: u64) -> Result<LineShading> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let families = (1.0 / delta).sqrt().ceil() as usize;
    let members = families;
    let gap = PI / families as f64;
    let mut lines = Vec::with_capacity(families * members);
    for f in 0..families {
        let base = f as f64 * gap + rng.gen_range(0.0..(gap - members as f64 * delta).max(0.0));
        let offset = rng.gen_range(-0.5..0.5);
        for j in 0..members {
            let line = Line::new(base + j as f64 * delta, offset + 2.0 * j as f64 * delta);
            lines.push(full(line, delta));
        }
    }
    LineShading::new(delta, lines, TwoEnds::default())
}

/// `count` lines in distinct direction slots of width `π/⌊π/δ⌋`, offsets
/// uniform in `(-0.8, 0.8)`, each chord ball kept with probability `keep`.
pub fn random_two_ends(delta: f64, count: usize, keep: f64, seed: u64) -> Result<LineShading> {
    let slots = (PI / delta).floor() as usize;
    if count > slots {
        return Err(invalid(format!("only {slots} δ-separated directions available, asked for {count}")));
    }
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(invalid(format!("keep probability must lie in (0, 1], got {keep}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = sample(&mut rng, slots, count).into_vec();
    chosen.sort_unstable();
    let lines = chosen
        .into_iter()
        .map(|slot| {
            let line = Line::new(PI * slot as f64 / slots as f64, rng.gen_range(-0.8..0.8));
            let mut shaded = full(line, delta);
            let first = shaded.balls[0];
            shaded.balls.retain(|_| rng.gen_bool(keep));
            if shaded.balls.is_empty() {
                shaded.balls.push(first);
            }
            shaded
        })
        .collect();
    LineShading::new(delta, lines, TwoEnds::default())
}
