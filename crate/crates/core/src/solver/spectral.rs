//! Cauchy and Beurling transforms on a uniform grid.
//!
//! The Cauchy transform `Ch(z) = (1/π) ∫ h(ζ)/(z − ζ) dA(ζ)` and the Beurling
//! transform `Sh = ∂_z Ch = −(1/π) p.v.∫ h(ζ)/(z − ζ)² dA(ζ)` are exact linear
//! convolutions of the samples with the kernels `dA/(π z)` and `−dA/(π z²)`
//! (zero on the self cell), computed by FFT on a grid padded to twice the size.
//! On square cells the sampled `1/z²` kernel has no constant defect, by its
//! symmetry under quarter turns.
//!
//! The unit-modulus multiplier `conj(k)/k` (forward transform `e^{-i k·x}`) is
//! kept for the periodic transform, where it is an exact isometry. Used on the
//! padded grid instead, its periodic images shift `Sh` by about `∫h` over the
//! padded area, which is why the padded path uses the kernel.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{Bbox, GridField};

/// Largest supported side length.
pub const MAX_GRID: usize = 2048;

/// Support closer than this fraction of the box to an edge triggers a warning:
/// the solution is only represented on the box, and finite differences and
/// interpolation near the rim lose accuracy.
pub const SUPPORT_MARGIN: f64 = 0.1;

/// A 2-D FFT of fixed size, rows then columns.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            nx,
            ny,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform in place, including the `1/(nx·ny)` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
        let s = 1.0 / (self.nx * self.ny) as f64;
        data.iter_mut().for_each(|v| *v *= s);
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        assert_eq!(data.len(), self.nx * self.ny);
        rows.process(data);
        let mut t = transpose(data, self.nx, self.ny);
        cols.process(&mut t);
        let back = transpose(&t, self.ny, self.nx);
        data.copy_from_slice(&back);
    }
}

fn transpose(data: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    const B: usize = 32;
    for jb in (0..ny).step_by(B) {
        for ib in (0..nx).step_by(B) {
            for j in jb..(jb + B).min(ny) {
                for i in ib..(ib + B).min(nx) {
                    out[i * ny + j] = data[j * nx + i];
                }
            }
        }
    }
    out
}

/// Signed FFT frequency index.
fn signed(k: usize, n: usize) -> f64 {
    if k < n.div_ceil(2) {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

fn beurling_multiplier(nx: usize, ny: usize, lx: f64, ly: f64) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); nx * ny];
    for b in 0..ny {
        let ky = signed(b, ny) / ly;
        for a in 0..nx {
            let kx = signed(a, nx) / lx;
            if a == 0 && b == 0 {
                continue;
            }
            let k = Complex64::new(kx, ky);
            m[b * nx + a] = k.conj() / k;
        }
    }
    m
}

/// Precomputed transforms for one grid geometry.
pub struct SpectralPlan {
    bbox: Bbox,
    nx: usize,
    ny: usize,
    px: usize,
    py: usize,
    fft: Fft2,
    cauchy_hat: Vec<Complex64>,
    beurling_hat: Vec<Complex64>,
}

/// Samples `weight · kernel(offset)` on the padded grid, zero at the origin, and
/// transforms it.
fn kernel_hat<K: Fn(Complex64) -> Complex64>(fft: &Fft2, px: usize, py: usize, dx: f64, dy: f64, kernel: K) -> Vec<Complex64> {
    let mut k = vec![Complex64::new(0.0, 0.0); px * py];
    for b in 0..py {
        let oy = signed(b, py) * dy;
        for a in 0..px {
            if a == 0 && b == 0 {
                continue;
            }
            k[b * px + a] = kernel(Complex64::new(signed(a, px) * dx, oy));
        }
    }
    fft.forward(&mut k);
    k
}

/// Where the support of a field sits relative to the box edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInfo {
    /// Smallest distance from a nonzero cell to an edge, as a fraction of the
    /// shorter box side; 0.5 for an empty field.
    pub margin: f64,
    /// Diameter of the bounding box of the support.
    pub diameter: f64,
    /// `Σ |h| dA`.
    pub l1: f64,
}

impl SupportInfo {
    pub fn warning(&self) -> Option<String> {
        (self.margin < SUPPORT_MARGIN).then(|| {
            format!(
                "support is within {:.1}% of the box edge",
                100.0 * self.margin
            )
        })
    }
}

impl SpectralPlan {
    pub fn new(bbox: Bbox, nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 || nx > MAX_GRID || ny > MAX_GRID {
            return Err(Error::InvalidGrid(format!(
                "grid {nx}x{ny} outside 2..={MAX_GRID}"
            )));
        }
        let (px, py) = (2 * nx, 2 * ny);
        let dx = bbox.width() / nx as f64;
        let dy = bbox.height() / ny as f64;
        let fft = Fft2::new(px, py);
        let weight = dx * dy / PI;
        let cauchy_hat = kernel_hat(&fft, px, py, dx, dy, |z| weight / z);
        let beurling_hat = kernel_hat(&fft, px, py, dx, dy, |z| -weight / (z * z));
        Ok(SpectralPlan {
            bbox,
            nx,
            ny,
            px,
            py,
            fft,
            cauchy_hat,
            beurling_hat,
        })
    }

    pub fn for_field(f: &GridField) -> Result<Self> {
        SpectralPlan::new(f.bbox(), f.nx(), f.ny())
    }

    pub fn bbox(&self) -> Bbox {
        self.bbox
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    fn pad(&self, h: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.px * self.py];
        for j in 0..self.ny {
            out[j * self.px..j * self.px + self.nx].copy_from_slice(&h[j * self.nx..(j + 1) * self.nx]);
        }
        out
    }

    fn crop(&self, padded: &[Complex64]) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny {
            out.extend_from_slice(&padded[j * self.px..j * self.px + self.nx]);
        }
        out
    }

    fn apply_multiplier(&self, h: &[Complex64], mult: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(h.len(), self.nx * self.ny);
        let mut buf = self.pad(h);
        self.fft.forward(&mut buf);
        buf.iter_mut().zip(mult).for_each(|(v, m)| *v *= m);
        self.fft.inverse(&mut buf);
        self.crop(&buf)
    }

    /// Cauchy transform of raw samples in storage order.
    pub fn cauchy(&self, h: &[Complex64]) -> Vec<Complex64> {
        self.apply_multiplier(h, &self.cauchy_hat)
    }

    /// Beurling transform of raw samples.
    pub fn beurling(&self, h: &[Complex64]) -> Vec<Complex64> {
        self.apply_multiplier(h, &self.beurling_hat)
    }

    pub fn support_info(&self, h: &[Complex64]) -> SupportInfo {
        let dx = self.bbox.width() / self.nx as f64;
        let dy = self.bbox.height() / self.ny as f64;
        let (mut i0, mut i1, mut j0, mut j1) = (usize::MAX, 0, usize::MAX, 0);
        let mut l1 = 0.0;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let v = h[j * self.nx + i];
                if v.norm_sqr() > 0.0 {
                    i0 = i0.min(i);
                    i1 = i1.max(i);
                    j0 = j0.min(j);
                    j1 = j1.max(j);
                    l1 += v.norm();
                }
            }
        }
        if i0 == usize::MAX {
            return SupportInfo {
                margin: 0.5,
                diameter: 0.0,
                l1: 0.0,
            };
        }
        let gaps = [
            i0 as f64 * dx,
            (self.nx - 1 - i1) as f64 * dx,
            j0 as f64 * dy,
            (self.ny - 1 - j1) as f64 * dy,
        ];
        let side = self.bbox.width().min(self.bbox.height());
        let w = (i1 - i0 + 1) as f64 * dx;
        let hgt = (j1 - j0 + 1) as f64 * dy;
        SupportInfo {
            margin: gaps.iter().copied().fold(f64::INFINITY, f64::min) / side,
            diameter: (w * w + hgt * hgt).sqrt(),
            l1: l1 * dx * dy,
        }
    }
}

/// A transformed field with its support diagnostics.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub field: GridField,
    pub warning: Option<String>,
}

fn transformed(plan: &SpectralPlan, h: &GridField, values: Vec<Complex64>) -> Result<Transformed> {
    let info = plan.support_info(h.values());
    Ok(Transformed {
        field: h.with_values(values)?,
        warning: info.warning(),
    })
}

pub fn cauchy_transform(h: &GridField) -> Result<Transformed> {
    let plan = SpectralPlan::for_field(h)?;
    let v = plan.cauchy(h.values());
    transformed(&plan, h, v)
}

pub fn beurling_transform(h: &GridField) -> Result<Transformed> {
    let plan = SpectralPlan::for_field(h)?;
    let v = plan.beurling(h.values());
    transformed(&plan, h, v)
}

/// Beurling multiplier on the unpadded, periodic grid. Exactly norm-preserving
/// on mean-zero fields.
pub fn beurling_periodic(h: &GridField) -> Result<GridField> {
    let (nx, ny) = (h.nx(), h.ny());
    let fft = Fft2::new(nx, ny);
    let mult = beurling_multiplier(nx, ny, h.bbox().width(), h.bbox().height());
    let mut buf = h.values().to_vec();
    fft.forward(&mut buf);
    buf.iter_mut().zip(&mult).for_each(|(v, m)| *v *= m);
    fft.inverse(&mut buf);
    h.with_values(buf)
}

/// `∂_z` and `∂_z̄` by central differences on interior cells (0 on the rim).
pub fn wirtinger_fd(f: &GridField) -> (GridField, GridField) {
    let (nx, ny) = (f.nx(), f.ny());
    let (dx, dy) = (f.dx(), f.dy());
    let zero = Complex64::new(0.0, 0.0);
    let mut dz = vec![zero; nx * ny];
    let mut dzb = vec![zero; nx * ny];
    let i_unit = Complex64::new(0.0, 1.0);
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let fx = (f.get(i + 1, j) - f.get(i - 1, j)) / (2.0 * dx);
            let fy = (f.get(i, j + 1) - f.get(i, j - 1)) / (2.0 * dy);
            dz[j * nx + i] = (fx - i_unit * fy) * 0.5;
            dzb[j * nx + i] = (fx + i_unit * fy) * 0.5;
        }
    }
    (
        f.with_values(dz).expect("same grid"),
        f.with_values(dzb).expect("same grid"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Norm;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn bump(z: Complex64) -> Option<Complex64> {
        let r2 = z.norm_sqr();
        Some(if r2 < 1.0 {
            c((-1.0 / (1.0 - r2)).exp() * 10.0, 0.0) * (1.0 + 0.5 * z)
        } else {
            c(0.0, 0.0)
        })
    }

    #[test]
    fn fft_roundtrip() {
        let fft = Fft2::new(6, 4);
        let data: Vec<_> = (0..24).map(|k| c(k as f64, (k * k) as f64 * 0.1)).collect();
        let mut buf = data.clone();
        fft.forward(&mut buf);
        // DC term is the sum
        let sum: Complex64 = data.iter().sum();
        assert!((buf[0] - sum).norm() < 1e-10);
        fft.inverse(&mut buf);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let b = Bbox::square(2.0).unwrap();
        let z = GridField::zeros(b, 32, 32).unwrap();
        assert_eq!(cauchy_transform(&z).unwrap().field.sup_norm(), 0.0);
        assert_eq!(beurling_transform(&z).unwrap().field.sup_norm(), 0.0);
    }

    #[test]
    fn cauchy_of_disk_indicator() {
        let b = Bbox::square(2.0).unwrap();
        let n = 512;
        let h = GridField::sample_averaged(
            |z| Some(if z.norm() < 1.0 { c(1.0, 0.0) } else { c(0.0, 0.0) }),
            b,
            n,
            n,
            4,
        )
        .unwrap()
        .field;
        let ch = cauchy_transform(&h).unwrap().field;
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let z = ch.center(i, j);
                let r = z.norm();
                // interior cells away from the discontinuity of the derivative
                if (r - 1.0).abs() < 0.05 || z.re.abs() > 1.5 || z.im.abs() > 1.5 {
                    continue;
                }
                let exact = if r < 1.0 { z.conj() } else { z.inv() };
                worst = worst.max((ch.get(i, j) - exact).norm());
            }
        }
        assert!(worst < 0.01, "worst {worst}");
    }

    #[test]
    fn derivatives_of_cauchy_transform() {
        let b = Bbox::square(2.0).unwrap();
        let h = GridField::sample(bump, b, 512, 512).unwrap().field;
        let ch = cauchy_transform(&h).unwrap().field;
        let (dz, dzb) = wirtinger_fd(&ch);
        let s = beurling_transform(&h).unwrap().field;
        let interior = |f: &GridField, g: &GridField| {
            let vals: Vec<_> = f
                .values()
                .iter()
                .zip(g.values())
                .enumerate()
                .map(|(k, (a, b))| {
                    let (i, j) = (k % 512, k / 512);
                    if i == 0 || j == 0 || i == 511 || j == 511 {
                        c(0.0, 0.0)
                    } else {
                        a - b
                    }
                })
                .collect();
            f.with_values(vals).unwrap().lp_norm(Norm::L2)
        };
        let e1 = interior(&dzb, &h);
        let e2 = interior(&dz, &s);
        assert!(e1 < 1e-3, "dzb err {e1}");
        assert!(e2 < 1e-3, "dz err {e2}");
    }

    #[test]
    fn periodic_beurling_is_an_isometry() {
        let b = Bbox::square(1.0).unwrap();
        let h = GridField::sample(
            |z| Some(c((3.0 * z.re).sin() * (2.0 * z.im).cos(), (5.0 * z.im).sin())),
            b,
            64,
            48,
        )
        .unwrap()
        .field;
        let mean: Complex64 = h.values().iter().sum::<Complex64>() / h.values().len() as f64;
        let h = h.map(|v| v - mean);
        let s = beurling_periodic(&h).unwrap();
        let ratio = s.lp_norm(Norm::L2) / h.lp_norm(Norm::L2);
        assert!((ratio - 1.0).abs() < 1e-8);
    }

    #[test]
    fn support_diagnostics() {
        let b = Bbox::square(2.0).unwrap();
        let near_edge = GridField::sample(
            |z| Some(if z.re > 1.9 { c(1.0, 0.0) } else { c(0.0, 0.0) }),
            b,
            64,
            64,
        )
        .unwrap()
        .field;
        let t = beurling_transform(&near_edge).unwrap();
        assert!(t.warning.is_some());
        let h = GridField::sample(bump, Bbox::square(3.0).unwrap(), 64, 64).unwrap().field;
        let t = beurling_transform(&h).unwrap();
        assert!(t.warning.is_none());
    }
}
