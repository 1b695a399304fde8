//! Wave packet decomposition `f = Σ_{θ,v} f_{θ,v}` with tubes `T_{θ,v}`.
//!
//! Frequency is split by a mollifier partition of unity `φ_θ` over
//! `⌈2√R⌉` intervals of length `L ≈ R^{-1/2}`. Each `fφ_θ` is then split in
//! space by `Σ_v ψ_v = 1`, realized on a cyclic window of `M` frequency nodes.
//! `ψ̂` is a flat-top profile of half-width at most `L/2`, so every packet is
//! supported in `3θ`. With `A` the half-width in nodes, the `Q = A + 1`
//! translates are spaced `2π/(Qh_ξ) ≈ 4π√R`, the widest spacing for which
//! the translates still sum to one.
//!
//! Packets are produced lazily from per-θ window spectra; only their norms
//! are computed eagerly.

pub mod bumps;
mod decoupling;

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{invalid, precondition, Result};
use crate::extension::{extension_values, Curve};
use crate::grid::{FrequencyGrid, SampledDensity};

pub use decoupling::{refined_decoupling_ratio, DecouplingRecord};

type C64 = Complex<f64>;

/// Samples per offset line in [`off_tube_decay_profile`].
pub const LINE_SAMPLES: usize = 257;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PacketIndex {
    pub theta: usize,
    /// Signed spatial translate index.
    pub v: i64,
    pub c_theta: f64,
    pub c_v: f64,
}

/// Slab `|x₁ - c_v + x₂Φ'(c_θ)| ≤ R^{1/2+ε₀}` inside `B_R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tube {
    pub center: f64,
    pub slope: f64,
    pub halfwidth: f64,
    pub radius: f64,
}

impl Tube {
    /// Signed `x₁`-displacement from the tube axis.
    pub fn axis_offset(&self, x: [f64; 2]) -> f64 {
        x[0] - self.center + x[1] * self.slope
    }

    pub fn contains(&self, x: [f64; 2]) -> bool {
        self.axis_offset(x).abs() <= self.halfwidth && x[0].hypot(x[1]) <= self.radius
    }

    /// Whether the slab meets the closed ball `B(q, r)`.
    pub fn meets_ball(&self, q: [f64; 2], r: f64) -> bool {
        self.axis_offset(q).abs() <= self.halfwidth + r * self.slope.hypot(1.0)
    }
}

/// A materialized packet `f_{θ,v}` on the extended frequency grid.
#[derive(Clone, Debug)]
pub struct Packet {
    pub index: PacketIndex,
    pub tube: Tube,
    pub curve: Curve,
    /// Distance between neighboring translate centers.
    pub spacing: f64,
    pub density: SampledDensity<f64>,
}

impl Packet {
    pub fn norm(&self) -> f64 {
        self.density.l2_norm()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { density: self.density.scaled(C64::new(c, 0.0)), ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PacketRecord {
    #[serde(flatten)]
    pub index: PacketIndex,
    pub norm: f64,
    pub kept: bool,
}

/// Mass removed by the tail cut, with a certified bound on `|Ef - Σ_kept Ef_T| / ‖f‖₂`.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct DiscardLedger {
    pub dropped: usize,
    pub threshold: f64,
    pub dropped_norm_sum: f64,
    pub residual_bound: f64,
}

#[derive(Serialize)]
pub struct PacketManifest<'a> {
    #[serde(rename = "R")]
    pub radius: f64,
    pub eps0: f64,
    pub tail_cut: f64,
    pub curve: Curve,
    pub theta_count: usize,
    pub translates: usize,
    pub spacing: f64,
    pub f_norm: f64,
    pub overlap_ratio: f64,
    pub discard: DiscardLedger,
    pub packets: &'a [PacketRecord],
}

struct ThetaBlock {
    theta: usize,
    /// Extended-grid index of window node 0 (may be negative).
    start: i64,
    /// Extended-grid index range `[lo, hi]` containing every packet of this θ.
    span: (usize, usize),
    spectrum: Vec<C64>,
}

pub struct PacketSet {
    radius: f64,
    eps0: f64,
    tail_cut: f64,
    curve: Curve,
    theta_count: usize,
    theta_len: f64,
    extended: FrequencyGrid<f64>,
    window: usize,
    translates: usize,
    stride: usize,
    psi: Vec<f64>,
    blocks: Vec<ThetaBlock>,
    records: Vec<PacketRecord>,
    /// `(block, translate)` for each record.
    slots: Vec<(usize, usize)>,
    f_norm: f64,
    ledger: DiscardLedger,
    forward: Arc<dyn Fft<f64>>,
}

/// Decomposes `f` into wave packets at scale `R`.
///
/// `f` must live on a grid of exactly `[-1, 1]` with `h_ξ ≤ 1/(10R)`.
/// Packets with `‖f_T‖₂ < tail_cut·‖f‖₂/#packets` are dropped into the
/// discard ledger.
pub fn build_wave_packets(
    f: &SampledDensity<f64>,
    curve: Curve,
    radius: f64,
    eps0: f64,
    tail_cut: f64,
) -> Result<PacketSet> {
    if !(radius >= 16.0) {
        return Err(invalid(format!("wave packets need R >= 16, got {radius}")));
    }
    if !(eps0 >= 0.0) || !(tail_cut >= 0.0) {
        return Err(invalid("eps0 and tail_cut must be nonnegative"));
    }
    let grid = *f.grid();
    if (grid.lo() + 1.0).abs() > 1e-12 || (grid.hi() - 1.0).abs() > 1e-12 {
        return Err(precondition(format!(
            "density must be sampled on [-1, 1], got [{}, {}]",
            grid.lo(),
            grid.hi()
        )));
    }
    let h = grid.step();
    if h > 1.0 / (10.0 * radius) * (1.0 + 1e-12) {
        return Err(crate::Error::GridTooCoarse { phase_step: h * radius, limit: 0.1 });
    }

    let theta_count = (2.0 * radius.sqrt()).ceil() as usize;
    let theta_len = 2.0 / theta_count as f64;
    check_direction_separation(curve, theta_count, theta_len)?;

    let half = (theta_len / (2.0 * h)).floor() as usize;
    if half < 2 {
        return Err(crate::Error::GridTooCoarse { phase_step: h * radius, limit: 0.1 });
    }
    let pad = half + 1;
    let extended = FrequencyGrid::with_len(-1.0 - pad as f64 * h, 1.0 + pad as f64 * h, grid.len() + 2 * pad)?;
    let theta_nodes = (2.0 * theta_len / h).ceil() as usize + 2;
    let translates = half + 1;
    let stride = (theta_nodes + 2 * half + 8).div_ceil(translates);
    let window = stride * translates;

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(window);
    let inverse = planner.plan_fft_inverse(window);
    let psi = spatial_partition(half, translates, window, &*inverse);

    let f_norm = f.l2_norm();
    let mut set = PacketSet {
        radius,
        eps0,
        tail_cut,
        curve,
        theta_count,
        theta_len,
        extended,
        window,
        translates,
        stride,
        psi,
        blocks: Vec::new(),
        records: Vec::new(),
        slots: Vec::new(),
        f_norm,
        ledger: DiscardLedger::default(),
        forward,
    };
    if f.is_zero() {
        return Ok(set);
    }

    for theta in 0..theta_count {
        let taper: Vec<(usize, C64)> = f
            .iter()
            .filter_map(|(i, xi, v)| {
                let w = bumps::partition_weight((xi + 1.0) / theta_len, theta, theta_count);
                (w != 0.0).then(|| (i + pad, v * w))
            })
            .collect();
        let (Some(&(first, _)), Some(&(last, _))) = (taper.first(), taper.last()) else {
            continue;
        };
        let used = last - first + 1 + 2 * half;
        if used > window {
            return Err(precondition("packet window too small for the θ-support"));
        }
        let start = first as i64 - half as i64 - ((window - used) / 2) as i64;
        let mut spectrum = vec![C64::zero(); window];
        for &(i, v) in &taper {
            spectrum[(i as i64 - start) as usize] = v;
        }
        inverse.process(&mut spectrum);
        let span = (first - half, last + half);
        set.blocks.push(ThetaBlock { theta, start, span, spectrum });
    }

    let norms: Vec<Vec<f64>> = set.blocks.par_iter().map(|b| set.window_norms(b)).collect();
    let candidates = set.blocks.len() * translates;
    let threshold = tail_cut * f_norm / candidates as f64;
    let mut ledger = DiscardLedger { threshold, ..DiscardLedger::default() };
    for (bi, block_norms) in norms.iter().enumerate() {
        for (k, &norm) in block_norms.iter().enumerate() {
            if norm == 0.0 {
                continue;
            }
            let kept = norm >= threshold;
            if !kept {
                ledger.dropped += 1;
                ledger.dropped_norm_sum += norm;
            }
            set.records.push(PacketRecord { index: set.index_of(set.blocks[bi].theta, k), norm, kept });
            set.slots.push((bi, k));
        }
    }
    ledger.residual_bound = (3.0 * theta_len).sqrt() * ledger.dropped_norm_sum / f_norm;
    set.ledger = ledger;
    Ok(set)
}

/// `ψ[k] = Σ_m ψ̂(m) e^{2πimk/M}` with `ψ̂(m) = plateau(m/A)/Q`; since
/// `ψ̂` vanishes at every nonzero multiple of `Q`, the `Q` translates by
/// `M/Q` sum to one.
fn spatial_partition(half: usize, translates: usize, window: usize, inverse: &dyn Fft<f64>) -> Vec<f64> {
    let mut buf = vec![C64::zero(); window];
    for m in -(half as i64)..=half as i64 {
        let value = bumps::plateau(m as f64 / half as f64) / translates as f64;
        buf[m.rem_euclid(window as i64) as usize] = C64::new(value, 0.0);
    }
    inverse.process(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

fn check_direction_separation(curve: Curve, count: usize, len: f64) -> Result<()> {
    let centers: Vec<f64> = (0..count).map(|t| -1.0 + (t as f64 + 0.5) * len).collect();
    let min_curvature = (0..=1000)
        .map(|i| curve.curvature(-1.0 + i as f64 * 2e-3).abs())
        .fold(f64::INFINITY, f64::min);
    for pair in centers.windows(2) {
        let gap = (curve.slope(pair[1]) - curve.slope(pair[0])).abs();
        if gap < 0.5 * min_curvature * len {
            return Err(precondition(format!(
                "directions at {} and {} are only {gap:.3e} apart",
                pair[0], pair[1]
            )));
        }
    }
    Ok(())
}

impl PacketSet {
    fn window_norms(&self, block: &ThetaBlock) -> Vec<f64> {
        let m = self.window;
        let power: Vec<f64> = block.spectrum.iter().map(|z| z.norm_sqr()).collect();
        let psi_sq: Vec<f64> = self.psi.iter().map(|p| p * p).collect();
        let scale = self.extended.step() / m as f64;
        (0..self.translates)
            .map(|v| {
                // Σ_k P(k) ψ²(k - shift), split to avoid a modulo per term
                let v = v * self.stride;
                let (head, tail) = power.split_at(v);
                let a: f64 = tail.iter().zip(&psi_sq).map(|(p, q)| p * q).sum();
                let b: f64 = head.iter().zip(&psi_sq[m - v..]).map(|(p, q)| p * q).sum();
                ((a + b) * scale).sqrt()
            })
            .collect()
    }

    fn signed(&self, v: usize) -> i64 {
        if v < self.translates.div_ceil(2) {
            v as i64
        } else {
            v as i64 - self.translates as i64
        }
    }

    fn index_of(&self, theta: usize, k: usize) -> PacketIndex {
        let v = self.signed(k);
        PacketIndex {
            theta,
            v,
            c_theta: -1.0 + (theta as f64 + 0.5) * self.theta_len,
            c_v: v as f64 * self.spacing(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eps0(&self) -> f64 {
        self.eps0
    }

    pub fn curve(&self) -> Curve {
        self.curve
    }

    pub fn theta_count(&self) -> usize {
        self.theta_count
    }

    pub fn theta_len(&self) -> f64 {
        self.theta_len
    }

    /// Frequency nodes in each cyclic window.
    pub fn window(&self) -> usize {
        self.window
    }

    /// Number of spatial translates per θ.
    pub fn translates(&self) -> usize {
        self.translates
    }

    /// Distance between neighboring translate centers `c_v`.
    pub fn spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / (self.translates as f64 * self.extended.step())
    }

    /// Grid `[-1 - e, 1 + e]` on which packets live.
    pub fn extended_grid(&self) -> &FrequencyGrid<f64> {
        &self.extended
    }

    pub fn f_norm(&self) -> f64 {
        self.f_norm
    }

    pub fn tube_halfwidth(&self) -> f64 {
        self.radius.powf(0.5 + self.eps0)
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn kept_count(&self) -> usize {
        self.records.iter().filter(|r| r.kept).count()
    }

    pub fn ledger(&self) -> &DiscardLedger {
        &self.ledger
    }

    /// `Σ_kept ‖f_T‖₂² / ‖f‖₂²`.
    pub fn overlap_ratio(&self) -> f64 {
        if self.f_norm == 0.0 {
            return 0.0;
        }
        let total: f64 = self.records.iter().filter(|r| r.kept).map(|r| r.norm * r.norm).sum();
        total / (self.f_norm * self.f_norm)
    }

    pub fn tube(&self, index: &PacketIndex) -> Tube {
        Tube {
            center: index.c_v,
            slope: self.curve.slope(index.c_theta),
            halfwidth: self.tube_halfwidth(),
            radius: self.radius,
        }
    }

    /// Position of the record with this `(θ, v)`.
    pub fn find(&self, theta: usize, v: i64) -> Option<usize> {
        self.records.iter().position(|r| r.index.theta == theta && r.index.v == v)
    }

    /// Record positions sorted by decreasing norm.
    pub fn by_norm(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.records.len()).collect();
        order.sort_by(|&a, &b| self.records[b].norm.total_cmp(&self.records[a].norm).then(a.cmp(&b)));
        order
    }

    /// Window samples of `f_T` before truncation to `3θ`.
    fn window_samples(&self, record: usize) -> (&ThetaBlock, Vec<C64>) {
        let (bi, v) = self.slots[record];
        let block = &self.blocks[bi];
        let m = self.window;
        let shift = v * self.stride;
        let mut buf: Vec<C64> = (0..m).map(|k| block.spectrum[k] * self.psi[(k + m - shift) % m]).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / m as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
        (block, buf)
    }

    /// Materializes the packet at record position `record`.
    pub fn packet(&self, record: usize) -> Result<Packet> {
        let index = self.records.get(record).ok_or_else(|| invalid("packet index out of range"))?.index;
        let (block, samples) = self.window_samples(record);
        let entries = (block.span.0..=block.span.1)
            .map(|i| (i, samples[(i as i64 - block.start) as usize]))
            .collect();
        Ok(Packet {
            index,
            tube: self.tube(&index),
            curve: self.curve,
            spacing: self.spacing(),
            density: SampledDensity::from_sparse(self.extended, entries)?,
        })
    }

    /// Fraction of `‖f_T‖₂²` outside `3θ` before truncation.
    pub fn leakage_outside_3theta(&self, record: usize) -> f64 {
        let (block, samples) = self.window_samples(record);
        let c = -1.0 + (block.theta as f64 + 0.5) * self.theta_len;
        let (mut inside, mut outside) = (0.0, 0.0);
        for (j, z) in samples.iter().enumerate() {
            let xi = self.extended.lo() + ((block.start + j as i64) as f64 + 0.5) * self.extended.step();
            if (xi - c).abs() <= 1.5 * self.theta_len {
                inside += z.norm_sqr();
            } else {
                outside += z.norm_sqr();
            }
        }
        let total = inside + outside;
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    /// `Σ_kept f_T` on the extended grid.
    pub fn kept_sum(&self) -> Result<SampledDensity<f64>> {
        let m = self.window;
        let mut dense = vec![C64::zero(); self.extended.len()];
        for (bi, block) in self.blocks.iter().enumerate() {
            let kept: Vec<usize> = self
                .records
                .iter()
                .zip(&self.slots)
                .filter(|(r, s)| r.kept && s.0 == bi)
                .map(|(_, s)| s.1)
                .collect();
            if kept.is_empty() {
                continue;
            }
            let weight = if kept.len() == self.translates { vec![1.0; m] } else { self.cover(&kept) };
            let mut buf: Vec<C64> = block.spectrum.iter().zip(&weight).map(|(s, w)| s * w).collect();
            self.forward.process(&mut buf);
            let scale = 1.0 / m as f64;
            for i in block.span.0..=block.span.1 {
                dense[i] += buf[(i as i64 - block.start) as usize] * scale;
            }
        }
        SampledDensity::from_dense(self.extended, &dense)
    }

    /// `W(k) = Σ_{v ∈ kept} ψ_v(k)`.
    fn cover(&self, kept: &[usize]) -> Vec<f64> {
        let m = self.window;
        let mut w = vec![0.0; m];
        for &v in kept {
            let shift = v * self.stride;
            for (k, slot) in w.iter_mut().enumerate() {
                *slot += self.psi[(k + m - shift) % m];
            }
        }
        w
    }

    pub fn manifest(&self) -> PacketManifest<'_> {
        PacketManifest {
            radius: self.radius,
            eps0: self.eps0,
            tail_cut: self.tail_cut,
            curve: self.curve,
            theta_count: self.theta_count,
            translates: self.translates,
            spacing: self.spacing(),
            f_norm: self.f_norm,
            overlap_ratio: self.overlap_ratio(),
            discard: self.ledger,
            packets: &self.records,
        }
    }

    pub fn write_manifest<W: std::io::Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.manifest())?;
        Ok(())
    }
}

/// `max_x |Ef(x) - Σ_T Ef_T(x)| / ‖f‖₂`, with the packet sum taken through
/// linearity of `E`.
pub fn reconstruction_residual(f: &SampledDensity<f64>, packets: &PacketSet, pts: &[[f64; 2]]) -> Result<f64> {
    if f.is_zero() || pts.is_empty() {
        return Ok(0.0);
    }
    let curve = packets.curve();
    let direct = extension_values(f, curve, pts)?;
    let sum = packets.kept_sum()?;
    let rebuilt = if sum.is_zero() { vec![C64::zero(); pts.len()] } else { extension_values(&sum, curve, pts)? };
    let worst = direct.iter().zip(&rebuilt).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(worst / f.l2_norm())
}

/// Points on the line at `offset` halfwidths from the tube axis, inside `B_R`.
fn offset_line(tube: &Tube, offset: f64) -> Vec<[f64; 2]> {
    let a = tube.center + offset * tube.halfwidth;
    let s = tube.slope;
    // (a - x₂s)² + x₂² ≤ R²
    let qa = 1.0 + s * s;
    let qb = -2.0 * a * s;
    let qc = a * a - tube.radius * tube.radius;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return Vec::new();
    }
    let root = disc.sqrt();
    let (lo, hi) = ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa));
    (0..LINE_SAMPLES)
        .map(|i| {
            let x2 = lo + (hi - lo) * i as f64 / (LINE_SAMPLES - 1) as f64;
            [a - x2 * s, x2]
        })
        .collect()
}

/// `(offset, max |Ef_T| at ±offset halfwidths / max |Ef_T| on the axis)`.
pub fn off_tube_decay_profile(packet: &Packet, offsets: &[f64]) -> Result<Vec<(f64, f64)>> {
    let line_max = |offset: f64| -> Result<f64> {
        let pts = offset_line(&packet.tube, offset);
        if pts.is_empty() || packet.density.is_zero() {
            return Ok(0.0);
        }
        let vals = extension_values(&packet.density, packet.curve, &pts)?;
        Ok(vals.iter().map(|z| z.norm()).fold(0.0, f64::max))
    };
    let core = line_max(0.0)?;
    offsets
        .iter()
        .map(|&d| {
            let side = line_max(d)?.max(line_max(-d)?);
            Ok((d, if core == 0.0 { 0.0 } else { side / core }))
        })
        .collect()
}
