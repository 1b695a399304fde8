use std::io::Write;

use crate::error::Result;

/// Square pixel grid of side `δ/2` covering the `δ`-neighborhood of the
/// unit disk. A pixel belongs to a ball when its center lies strictly
/// inside the ball.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    radius: f64,
    origin: f64,
    pixel: f64,
    size: usize,
    cells: Vec<bool>,
}

impl Raster {
    pub fn unit_disk(delta: f64) -> Self {
        let pixel = 0.5 * delta;
        let origin = -1.0 - 2.0 * delta;
        let size = (2.0 * (1.0 + 2.0 * delta) / pixel).ceil() as usize;
        Self { radius: delta, origin, pixel, size, cells: vec![false; size * size] }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pixel_area(&self) -> f64 {
        self.pixel * self.pixel
    }

    fn center(&self, i: usize) -> f64 {
        self.origin + (i as f64 + 0.5) * self.pixel
    }

    /// Pixel indices covered by the ball at `c`.
    pub fn cells_of(&self, c: [f64; 2]) -> Vec<usize> {
        let r = self.radius;
        let range = |x: f64| {
            let lo = ((x - r - self.origin) / self.pixel).floor().max(0.0) as usize;
            let hi = (((x + r - self.origin) / self.pixel).ceil() as usize).min(self.size);
            lo..hi
        };
        let mut out = Vec::new();
        for j in range(c[1]) {
            let dy = self.center(j) - c[1];
            for i in range(c[0]) {
                let dx = self.center(i) - c[0];
                if dx * dx + dy * dy < r * r {
                    out.push(j * self.size + i);
                }
            }
        }
        out
    }

    pub fn stamp(&mut self, c: [f64; 2]) {
        for k in self.cells_of(c) {
            self.cells[k] = true;
        }
    }

    pub fn filled(&self) -> usize {
        self.cells.iter().filter(|&&b| b).count()
    }

    pub fn area(&self) -> f64 {
        self.filled() as f64 * self.pixel_area()
    }

    /// Binary PGM, filled pixels black, top row at the largest `x₂`.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "P5\n{} {}\n255\n", self.size, self.size)?;
        let mut row = vec![0u8; self.size];
        for j in (0..self.size).rev() {
            for (i, px) in row.iter_mut().enumerate() {
                *px = if self.cells[j * self.size + i] { 0 } else { 255 };
            }
            out.write_all(&row)?;
        }
        Ok(())
    }
}
