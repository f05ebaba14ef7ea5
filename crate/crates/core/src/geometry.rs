//! Circles, reflections and (anti-)Möbius maps.
//!
//! An orientation-reversing map is stored as a Möbius matrix plus a flag that
//! says "conjugate the input first", so `z ↦ (a z̄ + b)/(c z̄ + d)`. The matrix is
//! kept at unit determinant.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cantor::FatCantorSpec;
use crate::error::{Error, Result};

/// Tolerance for algebraic identities (normalization, strict disjointness).
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for geometric fits.
pub const GEOMETRIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircleRepr", into = "CircleRepr")]
pub struct Circle {
    center: Complex64,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
struct CircleRepr {
    cx: f64,
    cy: f64,
    r: f64,
}

impl TryFrom<CircleRepr> for Circle {
    type Error = Error;
    fn try_from(c: CircleRepr) -> Result<Self> {
        Circle::new(Complex64::new(c.cx, c.cy), c.r)
    }
}

impl From<Circle> for CircleRepr {
    fn from(c: Circle) -> Self {
        CircleRepr {
            cx: c.center.re,
            cy: c.center.im,
            r: c.radius,
        }
    }
}

impl Circle {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidCircle(format!("radius {radius}")));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(Error::InvalidCircle(format!("center {center}")));
        }
        Ok(Circle { center, radius })
    }

    pub fn center(&self) -> Complex64 {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.radius * self.radius
    }

    /// `n` equally spaced points on the circle, starting at angle 0.
    pub fn sample(&self, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / n as f64;
                self.center + Complex64::from_polar(self.radius, t)
            })
            .collect()
    }

    /// Strictly inside the open disk.
    pub fn contains_open(&self, z: Complex64) -> bool {
        (z - self.center).norm_sqr() < self.radius * self.radius
    }

    /// Distance from `z` to the circle itself.
    pub fn distance_to_curve(&self, z: Complex64) -> f64 {
        ((z - self.center).norm() - self.radius).abs()
    }

    /// Reflection across this circle, `a + r²/conj(z − a)`.
    pub fn reflect(&self, z: Complex64) -> Result<Complex64> {
        let u = z - self.center;
        if u.norm_sqr() == 0.0 {
            return Err(Error::Pole(z));
        }
        Ok(self.center + self.radius * self.radius / u.conj())
    }

    /// Image of `other` under reflection across `self`, by the inversive formula.
    /// The image of the closed disk bounded by `other` is the closed disk bounded by
    /// the result whenever `self.center` lies outside that disk.
    pub fn reflect_circle(&self, other: &Circle) -> Result<Circle> {
        let d = other.center - self.center;
        let den = d.norm_sqr() - other.radius * other.radius;
        if den.abs() <= ALGEBRAIC_TOL * other.radius * other.radius {
            return Err(Error::CircleThroughPole);
        }
        let r2 = self.radius * self.radius;
        Circle::new(self.center + d * (r2 / den), r2 * other.radius / den.abs())
    }

    pub fn as_conj_moebius(&self) -> ConjMoebius {
        let a = self.center;
        let r2 = self.radius * self.radius;
        // (a z̄ + r² − |a|²)/(z̄ − ā), determinant −r²
        ConjMoebius::new(
            a,
            Complex64::new(r2 - a.norm_sqr(), 0.0),
            Complex64::new(1.0, 0.0),
            -a.conj(),
            true,
        )
        .expect("reflection matrix is invertible")
    }
}

/// `z ↦ (a w + b)/(c w + d)` with `w = z̄` when `conj` is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjMoebius {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
    conj: bool,
}

impl ConjMoebius {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        ConjMoebius {
            a: one,
            b: zero,
            c: zero,
            d: one,
            conj: false,
        }
    }

    /// Builds and normalizes to `ad − bc = 1`.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64, conj: bool) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() == 0.0 || !det.is_finite() {
            return Err(Error::Degenerate("singular Möbius matrix".into()));
        }
        let s = det.sqrt().inv();
        Ok(ConjMoebius {
            a: a * s,
            b: b * s,
            c: c * s,
            d: d * s,
            conj,
        })
    }

    pub fn matrix(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_orientation_reversing(&self) -> bool {
        self.conj
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    fn input(&self, z: Complex64) -> Complex64 {
        if self.conj {
            z.conj()
        } else {
            z
        }
    }

    pub fn apply(&self, z: Complex64) -> Result<Complex64> {
        let w = self.input(z);
        let den = self.c * w + self.d;
        if den.norm() <= f64::EPSILON * (self.c.norm() * w.norm() + self.d.norm()) {
            return Err(Error::Pole(z));
        }
        Ok((self.a * w + self.b) / den)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &ConjMoebius) -> ConjMoebius {
        // Pushing our conjugation through `other` conjugates its matrix.
        let (a2, b2, c2, d2) = if self.conj {
            (other.a.conj(), other.b.conj(), other.c.conj(), other.d.conj())
        } else {
            (other.a, other.b, other.c, other.d)
        };
        let a = self.a * a2 + self.b * c2;
        let b = self.a * b2 + self.b * d2;
        let c = self.c * a2 + self.d * c2;
        let d = self.c * b2 + self.d * d2;
        ConjMoebius::new(a, b, c, d, self.conj ^ other.conj)
            .expect("product of unimodular matrices is invertible")
    }

    pub fn inverse(&self) -> ConjMoebius {
        let (a, b, c, d) = (self.d, -self.b, -self.c, self.a);
        let m = if self.conj {
            ConjMoebius {
                a: a.conj(),
                b: b.conj(),
                c: c.conj(),
                d: d.conj(),
                conj: true,
            }
        } else {
            ConjMoebius {
                a,
                b,
                c,
                d,
                conj: false,
            }
        };
        ConjMoebius::new(m.a, m.b, m.c, m.d, m.conj).expect("inverse is invertible")
    }

    /// The nonvanishing Wirtinger derivative at `z`: `∂_z` for Möbius maps,
    /// `∂_z̄` for anti-Möbius maps.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        let w = self.input(z);
        let den = self.c * w + self.d;
        if den.norm() == 0.0 {
            return Err(Error::Pole(z));
        }
        Ok(self.determinant() / (den * den))
    }

    /// Pole in the input variable, `None` for affine maps.
    pub fn pole(&self) -> Option<Complex64> {
        if self.c.norm() == 0.0 {
            return None;
        }
        let p = -self.d / self.c;
        Some(if self.conj { p.conj() } else { p })
    }

    pub fn image_circle(&self, circle: &Circle) -> Result<Circle> {
        let (center, r) = if self.conj {
            (circle.center.conj(), circle.radius)
        } else {
            (circle.center, circle.radius)
        };
        let scale = self.a.norm() + self.b.norm() + self.c.norm() + self.d.norm();
        if self.c.norm() <= f64::EPSILON * scale {
            let k = self.a / self.d;
            return Circle::new(k * center + self.b / self.d, k.norm() * r);
        }
        // f(w) = a/c − 1/(c² (w − p)), p = −d/c
        let p = -self.d / self.c;
        let q = center - p;
        let den = q.norm_sqr() - r * r;
        if (q.norm() - r).abs() <= ALGEBRAIC_TOL * r.max(1.0) {
            return Err(Error::CircleThroughPole);
        }
        let b = (self.c * self.c).inv();
        let inv_center = q.conj() / den;
        let inv_radius = r / den.abs();
        Circle::new(self.a / self.c - b * inv_center, b.norm() * inv_radius)
    }

    /// Image of one side of a circle. The side of the image is found by mapping a
    /// sample point of the region.
    pub fn image_disk(&self, circle: &Circle, side: Side) -> Result<(Circle, Side)> {
        let image = self.image_circle(circle)?;
        let sample = match side {
            Side::Inside => circle.center,
            Side::Outside => {
                let dir = match self.pole() {
                    Some(p) if (p - circle.center).norm() > 0.0 => {
                        let u = circle.center - p;
                        u / u.norm()
                    }
                    _ => Complex64::new(1.0, 0.0),
                };
                // farther from the pole than the circle, on the far side
                circle.center + dir * (2.0 * circle.radius)
            }
        };
        let out_side = match self.apply(sample) {
            Ok(w) if image.contains_open(w) => Side::Inside,
            Ok(_) => Side::Outside,
            // the sample is the pole, so the region contains the preimage of ∞
            Err(_) => Side::Outside,
        };
        Ok((image, out_side))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Inside,
    Outside,
}

/// Complement of finitely many closed disks, plus an optional set of point
/// components. `∞` always belongs to the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleDomain {
    pub circles: Vec<Circle>,
    #[serde(default = "default_true")]
    pub contains_infinity: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cantor_spec: Option<FatCantorSpec>,
}

fn default_true() -> bool {
    true
}

impl CircleDomain {
    pub fn new(circles: Vec<Circle>) -> Self {
        CircleDomain {
            circles,
            contains_infinity: true,
            cantor_spec: None,
        }
    }

    pub fn with_cantor(mut self, spec: FatCantorSpec) -> Self {
        self.cantor_spec = Some(spec);
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn circle(&self, letter: usize) -> Result<&Circle> {
        letter
            .checked_sub(1)
            .and_then(|i| self.circles.get(i))
            .ok_or(Error::BadIndex {
                index: letter,
                count: self.circles.len(),
            })
    }

    /// Index (0-based) of a circle whose open disk contains `z`.
    pub fn disk_containing(&self, z: Complex64) -> Option<usize> {
        self.circles.iter().position(|c| c.contains_open(z))
    }

    /// Whether `z` lies in Ω′ = Ω ∪ P, the complement of the open disks.
    pub fn in_fundamental_domain(&self, z: Complex64) -> bool {
        self.disk_containing(z).is_none()
    }

    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if !self.contains_infinity {
            report
                .problems
                .push("domains must contain infinity".to_string());
        }
        for i in 0..self.circles.len() {
            for j in i + 1..self.circles.len() {
                let (ci, cj) = (&self.circles[i], &self.circles[j]);
                let gap = (ci.center - cj.center).norm() - ci.radius - cj.radius;
                if gap <= ALGEBRAIC_TOL {
                    report.overlaps.push(Overlap { i: i + 1, j: j + 1, gap });
                }
            }
        }
        if let Some(spec) = &self.cantor_spec {
            for (i, c) in self.circles.iter().enumerate() {
                if spec.intersects_closed_disk(c) {
                    report.cantor_intersections.push(i + 1);
                }
            }
        }
        report
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Overlap {
    pub i: usize,
    pub j: usize,
    /// `|c_i − c_j| − r_i − r_j`; nonpositive gaps are violations.
    pub gap: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub overlaps: Vec<Overlap>,
    pub cantor_intersections: Vec<usize>,
    pub problems: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.overlaps.is_empty() && self.cantor_intersections.is_empty() && self.problems.is_empty()
    }
}
