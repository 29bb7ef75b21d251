use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::geometry::{Point2, SurfaceSpec};

/// Uniform midpoint lattice over the surface.
///
/// `n` is the number of cells along the shorter side; the longer side gets
/// as many cells as keeps them close to square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl IntegrationGrid {
    pub fn new(surface: &SurfaceSpec, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Grid(format!(
                "resolution {n} is too coarse (need at least 2 points per dimension)"
            )));
        }
        let (w, h) = (surface.width_m, surface.height_m);
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return Err(Error::Domain(format!("surface {w} x {h} m")));
        }
        let (nx, ny) = if w >= h {
            (((n as f64) * w / h).round().max(n as f64) as usize, n)
        } else {
            (n, ((n as f64) * h / w).round().max(n as f64) as usize)
        };
        if nx.saturating_mul(ny) > 1 << 22 {
            return Err(Error::Grid(format!("{nx} x {ny} lattice is too large")));
        }
        Ok(IntegrationGrid {
            nx,
            ny,
            dx: w / nx as f64,
            dy: h / ny as f64,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Cell centers in row-major order (`y` outer, `x` inner).
    pub fn points(&self) -> Vec<Point2> {
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                out.push(Point2::new((ix as f64 + 0.5) * self.dx, (iy as f64 + 0.5) * self.dy));
            }
        }
        out
    }

    /// Padded extent used for linear (non-wrapping) convolution.
    pub(crate) fn padded(&self) -> (usize, usize) {
        (2 * self.nx, 2 * self.ny)
    }

    /// Distances of every lattice offset in the padded, wrapped layout.
    pub(crate) fn offset_distances(&self) -> Vec<f64> {
        let (mx, my) = self.padded();
        let mut out = Vec::with_capacity(mx * my);
        for j in 0..my {
            let oy = if j < my / 2 { j as f64 } else { j as f64 - my as f64 };
            for i in 0..mx {
                let ox = if i < mx / 2 { i as f64 } else { i as f64 - mx as f64 };
                out.push((ox * self.dx).hypot(oy * self.dy));
            }
        }
        out
    }
}

/// Row-major 2-D FFT over a fixed padded shape.
pub(crate) struct Fft2 {
    mx: usize,
    my: usize,
    row: Arc<dyn Fft<f64>>,
    col: Arc<dyn Fft<f64>>,
    scratch_len: usize,
}

impl Fft2 {
    pub fn new(mx: usize, my: usize) -> Self {
        let mut planner = FftPlanner::new();
        let row = planner.plan_fft_forward(mx);
        let col = planner.plan_fft_forward(my);
        let scratch_len = row.get_inplace_scratch_len().max(col.get_inplace_scratch_len());
        Fft2 {
            mx,
            my,
            row,
            col,
            scratch_len,
        }
    }

    pub fn len(&self) -> usize {
        self.mx * self.my
    }

    /// Zero-pads an `nx x ny` field into the padded layout and transforms it.
    pub fn forward_padded(&self, field: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len()];
        for iy in 0..ny {
            buf[iy * self.mx..iy * self.mx + nx].copy_from_slice(&field[iy * nx..(iy + 1) * nx]);
        }
        self.forward_inplace(&mut buf);
        buf
    }

    pub fn forward_inplace(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len());
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        for r in buf.chunks_exact_mut(self.mx) {
            self.row.process_with_scratch(r, &mut scratch);
        }
        let mut column = vec![Complex64::new(0.0, 0.0); self.my];
        for i in 0..self.mx {
            for j in 0..self.my {
                column[j] = buf[j * self.mx + i];
            }
            self.col.process_with_scratch(&mut column, &mut scratch);
            for j in 0..self.my {
                buf[j * self.mx + i] = column[j];
            }
        }
    }

    /// `sum_p sum_q a(p) k(p - q) b(q)` from the transforms of `a`, `k` and `b`.
    pub fn bilinear(&self, a_hat: &[Complex64], k_hat: &[Complex64], b_hat: &[Complex64]) -> Complex64 {
        let (mx, my) = (self.mx, self.my);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..my {
            let nj = (my - j) % my;
            for i in 0..mx {
                let ni = (mx - i) % mx;
                let idx = j * mx + i;
                acc += a_hat[nj * mx + ni] * k_hat[idx] * b_hat[idx];
            }
        }
        acc / (mx * my) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagation::MaterialLibrary;

    fn surface(w: f64, h: f64) -> SurfaceSpec {
        SurfaceSpec {
            width_m: w,
            height_m: h,
            material: MaterialLibrary::builtin().get("cloth").unwrap().clone(),
        }
    }

    #[test]
    fn coarse_grid_is_rejected() {
        assert!(matches!(
            IntegrationGrid::new(&surface(1.0, 1.0), 1),
            Err(Error::Grid(_))
        ));
    }

    #[test]
    fn cells_stay_square() {
        let g = IntegrationGrid::new(&surface(3.0, 0.3), 8).unwrap();
        assert_eq!((g.nx, g.ny), (80, 8));
        assert!((g.dx - g.dy).abs() < 1e-12);
    }

    #[test]
    fn bilinear_matches_brute_force() {
        let g = IntegrationGrid::new(&surface(0.5, 0.3), 3).unwrap();
        let (nx, ny) = (g.nx, g.ny);
        let pts = g.points();
        let field = |s: f64| -> Vec<Complex64> {
            pts.iter()
                .map(|p| Complex64::from_polar(1.0 + p.x * s, 7.0 * p.y - s * p.x))
                .collect()
        };
        let a = field(0.3);
        let b = field(-1.1);
        let kern = |d: f64| Complex64::from_polar(1.0 / (1.0 + d), -20.0 * d);
        let mut brute = Complex64::new(0.0, 0.0);
        for (p, ap) in pts.iter().zip(&a) {
            for (q, bq) in pts.iter().zip(&b) {
                brute += ap * kern(p.dist(*q)) * bq;
            }
        }
        let (mx, my) = g.padded();
        let fft = Fft2::new(mx, my);
        let mut k: Vec<Complex64> = g.offset_distances().into_iter().map(kern).collect();
        fft.forward_inplace(&mut k);
        let fast = fft.bilinear(&fft.forward_padded(&a, nx, ny), &k, &fft.forward_padded(&b, nx, ny));
        assert!((fast - brute).norm() / brute.norm() < 1e-11, "{fast} vs {brute}");
    }
}
