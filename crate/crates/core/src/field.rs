//! Complex fields sampled at cell centers of a rectangular grid, and the CPGF
//! binary format.
//!
//! Storage is row-major with rows ordered by increasing `y`; cell `(i, j)` is
//! column `i`, row `j`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CPGF";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Bbox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        let b = Bbox { x0, y0, x1, y1 };
        b.check()?;
        Ok(b)
    }

    /// `[-half, half]²`.
    pub fn square(half: f64) -> Result<Self> {
        Bbox::new(-half, -half, half, half)
    }

    fn check(&self) -> Result<()> {
        let finite = [self.x0, self.y0, self.x1, self.y1].iter().all(|v| v.is_finite());
        if !finite || self.x1 <= self.x0 || self.y1 <= self.y0 {
            return Err(Error::InvalidGrid(format!("bad bounding box {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    bbox: Bbox,
    nx: usize,
    ny: usize,
    values: Vec<Complex64>,
}

/// A sampled field plus the number of cells where the function was undefined.
#[derive(Debug, Clone)]
pub struct Sampled {
    pub field: GridField,
    pub undefined: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Norm {
    L2,
    Sup,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperLevelMeasure {
    pub epsilons: Vec<f64>,
    pub measures: Vec<f64>,
}

impl GridField {
    pub fn new(bbox: Bbox, nx: usize, ny: usize, values: Vec<Complex64>) -> Result<Self> {
        bbox.check()?;
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!("grid {nx}x{ny} is smaller than 2x2")));
        }
        if values.len() != nx * ny {
            return Err(Error::InvalidGrid(format!(
                "{} values for a {nx}x{ny} grid",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid("non-finite sample".into()));
        }
        Ok(GridField { bbox, nx, ny, values })
    }

    pub fn zeros(bbox: Bbox, nx: usize, ny: usize) -> Result<Self> {
        GridField::new(bbox, nx, ny, vec![Complex64::new(0.0, 0.0); nx * ny])
    }

    /// Samples `f` at cell centers; `None` becomes 0 and is counted.
    pub fn sample<F>(f: F, bbox: Bbox, nx: usize, ny: usize) -> Result<Sampled>
    where
        F: Fn(Complex64) -> Option<Complex64>,
    {
        let mut field = GridField::zeros(bbox, nx, ny)?;
        let mut undefined = 0;
        for j in 0..ny {
            for i in 0..nx {
                match f(field.center(i, j)).filter(|v| v.is_finite()) {
                    Some(v) => field.values[j * nx + i] = v,
                    None => undefined += 1,
                }
            }
        }
        Ok(Sampled { field, undefined })
    }

    /// Averages `f` over a `sub × sub` lattice inside each cell. Undefined
    /// subsamples contribute 0; a cell counts as undefined if any did.
    pub fn sample_averaged<F>(f: F, bbox: Bbox, nx: usize, ny: usize, sub: usize) -> Result<Sampled>
    where
        F: Fn(Complex64) -> Option<Complex64>,
    {
        let sub = sub.max(1);
        let mut field = GridField::zeros(bbox, nx, ny)?;
        let (dx, dy) = (field.dx(), field.dy());
        let w = 1.0 / (sub * sub) as f64;
        let mut undefined = 0;
        for j in 0..ny {
            for i in 0..nx {
                let corner = Complex64::new(bbox.x0 + i as f64 * dx, bbox.y0 + j as f64 * dy);
                let mut acc = Complex64::new(0.0, 0.0);
                let mut bad = false;
                for sj in 0..sub {
                    for si in 0..sub {
                        let z = corner
                            + Complex64::new(
                                (si as f64 + 0.5) / sub as f64 * dx,
                                (sj as f64 + 0.5) / sub as f64 * dy,
                            );
                        match f(z).filter(|v| v.is_finite()) {
                            Some(v) => acc += v,
                            None => bad = true,
                        }
                    }
                }
                if bad {
                    undefined += 1;
                }
                field.values[j * nx + i] = acc * w;
            }
        }
        Ok(Sampled { field, undefined })
    }

    pub fn bbox(&self) -> Bbox {
        self.bbox
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.bbox.width() / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.bbox.height() / self.ny as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[j * self.nx + i]
    }

    pub fn center(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.bbox.x0 + (i as f64 + 0.5) * self.dx(),
            self.bbox.y0 + (j as f64 + 0.5) * self.dy(),
        )
    }

    /// Cell centers in storage order.
    pub fn centers(&self) -> Vec<Complex64> {
        (0..self.ny)
            .flat_map(|j| (0..self.nx).map(move |i| (i, j)))
            .map(|(i, j)| self.center(i, j))
            .collect()
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<Complex64>) -> Result<Self> {
        GridField::new(self.bbox, self.nx, self.ny, values)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        GridField {
            bbox: self.bbox,
            nx: self.nx,
            ny: self.ny,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_grid(&self, other: &GridField) -> bool {
        self.bbox == other.bbox && self.nx == other.nx && self.ny == other.ny
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn lp_norm(&self, p: Norm) -> f64 {
        match p {
            Norm::Sup => self.sup_norm(),
            Norm::L2 => (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()).sqrt(),
        }
    }

    /// Whether every sample has modulus below 1.
    pub fn is_coefficient(&self) -> bool {
        self.values.iter().all(|v| v.norm() < 1.0)
    }

    /// Cell-counting measure of `{|μ| > 1 − ε}` for each `ε`.
    pub fn superlevel_measure(&self, epsilons: &[f64]) -> SuperLevelMeasure {
        let cell = self.cell_area();
        let measures = epsilons
            .iter()
            .map(|&eps| {
                let t = 1.0 - eps;
                self.values.iter().filter(|v| v.norm() > t).count() as f64 * cell
            })
            .collect();
        SuperLevelMeasure {
            epsilons: epsilons.to_vec(),
            measures,
        }
    }

    /// Bilinear interpolation between cell centers, clamped to the outermost
    /// centers. `None` outside the bounding box.
    pub fn interpolate(&self, z: Complex64) -> Option<Complex64> {
        if !self.bbox.contains(z) {
            return None;
        }
        let u = ((z.re - self.bbox.x0) / self.dx() - 0.5).clamp(0.0, (self.nx - 1) as f64);
        let v = ((z.im - self.bbox.y0) / self.dy() - 0.5).clamp(0.0, (self.ny - 1) as f64);
        let i = (u.floor() as usize).min(self.nx - 2);
        let j = (v.floor() as usize).min(self.ny - 2);
        let (s, t) = (u - i as f64, v - j as f64);
        Some(
            self.get(i, j) * ((1.0 - s) * (1.0 - t))
                + self.get(i + 1, j) * (s * (1.0 - t))
                + self.get(i, j + 1) * ((1.0 - s) * t)
                + self.get(i + 1, j + 1) * (s * t),
        )
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut out = BufWriter::new(out);
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        for v in [self.bbox.x0, self.bbox.y0, self.bbox.x1, self.bbox.y1] {
            out.write_all(&v.to_le_bytes())?;
        }
        out.write_all(&(self.nx as u32).to_le_bytes())?;
        out.write_all(&(self.ny as u32).to_le_bytes())?;
        for v in &self.values {
            out.write_all(&v.re.to_le_bytes())?;
            out.write_all(&v.im.to_le_bytes())?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(input: R) -> Result<Self> {
        let mut input = BufReader::new(input);
        let mut magic = [0u8; 4];
        read_exact(&mut input, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::BadMagic);
        }
        let version = read_u32(&mut input)?;
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let x0 = read_f64(&mut input)?;
        let y0 = read_f64(&mut input)?;
        let x1 = read_f64(&mut input)?;
        let y1 = read_f64(&mut input)?;
        let nx = read_u32(&mut input)? as usize;
        let ny = read_u32(&mut input)? as usize;
        let n = nx
            .checked_mul(ny)
            .ok_or_else(|| Error::InvalidGrid("grid size overflows".into()))?;
        let mut values = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            let re = read_f64(&mut input)?;
            let im = read_f64(&mut input)?;
            values.push(Complex64::new(re, im));
        }
        GridField::new(Bbox { x0, y0, x1, y1 }, nx, ny, values)
    }

    pub fn write_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        self.write_to(File::create(path)?)
    }

    pub fn read_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        GridField::read_from(File::open(path)?)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Truncated,
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}
