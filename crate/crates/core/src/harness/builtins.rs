//! Named domains and coefficients used by the experiments and the CLI.

use num_complex::Complex64;

use crate::beltrami::{AnnulusCoefficientSpec, InvariantExtension};
use crate::cantor::FatCantorSpec;
use crate::error::{Error, Result};
use crate::field::{Bbox, GridField};
use crate::geometry::{Circle, CircleDomain};

pub const DOMAIN_NAMES: &[&str] = &["two-circles", "three-circles", "zero-area"];
pub const COEFFICIENT_NAMES: &[&str] = &["zero", "invariant-constant", "control"];

/// Modulus of the constant coefficients in the circle-image experiment.
pub const CONSTANT_MODULUS: f64 = 0.3;
/// Radius of the disk `D(0, R)` that cuts the constant coefficient off.
pub const CONSTANT_RADIUS: f64 = 3.5;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Unit circles centered at ±2.
pub fn two_circles() -> CircleDomain {
    CircleDomain::new(vec![
        Circle::new(c(-2.0, 0.0), 1.0).expect("valid circle"),
        Circle::new(c(2.0, 0.0), 1.0).expect("valid circle"),
    ])
}

pub fn three_circles() -> CircleDomain {
    let circles = (0..3)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / 3.0;
            Circle::new(Complex64::from_polar(2.5, t), 1.0).expect("valid circle")
        })
        .collect();
    CircleDomain::new(circles)
}

/// The fat Cantor set `[−0.5, 0.5]²`-scaled, anchored at `−0.5 − 0.5i`.
pub fn zero_area_cantor() -> FatCantorSpec {
    FatCantorSpec::new(c(-0.5, -0.5), 1.0, 24)
}

/// Two circles plus a fat Cantor set of point components between them.
pub fn zero_area_domain() -> CircleDomain {
    two_circles().with_cantor(zero_area_cantor())
}

pub fn domain(name: &str) -> Result<CircleDomain> {
    match name {
        "two-circles" => Ok(two_circles()),
        "three-circles" => Ok(three_circles()),
        "zero-area" => Ok(zero_area_domain()),
        _ => Err(Error::InvalidArgument(format!(
            "unknown builtin domain {name:?}; expected one of {DOMAIN_NAMES:?}"
        ))),
    }
}

/// How a coefficient is turned into a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coefficient {
    Zero,
    /// `CONSTANT_MODULUS` on `Ω′ ∩ D(0, CONSTANT_RADIUS)`, invariantly extended.
    InvariantConstant,
    /// `CONSTANT_MODULUS` on `0.5 < |z − c_1| < 1.5`, not extended.
    Control,
}

impl Coefficient {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(Coefficient::Zero),
            "invariant-constant" => Ok(Coefficient::InvariantConstant),
            "control" => Ok(Coefficient::Control),
            _ => Err(Error::InvalidArgument(format!(
                "unknown builtin coefficient {name:?}; expected one of {COEFFICIENT_NAMES:?}"
            ))),
        }
    }

    /// The coefficient on the whole plane, sampled at cell centers.
    pub fn grid(self, domain: &CircleDomain, bbox: Bbox, n: usize) -> Result<GridField> {
        match self {
            Coefficient::Zero => GridField::zeros(bbox, n, n),
            Coefficient::InvariantConstant => {
                let ext = InvariantExtension::new(domain, |z| Some(constant_on_domain(domain, z)));
                Ok(ext.sample(bbox, n, n)?.field)
            }
            Coefficient::Control => {
                let center = domain
                    .circles
                    .first()
                    .ok_or_else(|| Error::InvalidDomain("no circles".into()))?
                    .center();
                Ok(GridField::sample(
                    |z| {
                        let r = (z - center).norm();
                        Some(c(if r > 0.5 && r < 1.5 { CONSTANT_MODULUS } else { 0.0 }, 0.0))
                    },
                    bbox,
                    n,
                    n,
                )?
                .field)
            }
        }
    }
}

/// `CONSTANT_MODULUS` on `Ω ∩ D(0, CONSTANT_RADIUS)`, 0 on the point components.
pub fn constant_on_domain(domain: &CircleDomain, z: Complex64) -> Complex64 {
    let on_points = domain.cantor_spec.as_ref().is_some_and(|p| p.contains(z));
    if z.norm() < CONSTANT_RADIUS && !on_points {
        c(CONSTANT_MODULUS, 0.0)
    } else {
        c(0.0, 0.0)
    }
}

/// Piecewise-constant reading of a sampled coefficient on `Ω′`; zero outside the
/// grid.
pub fn nearest_cell(field: &GridField) -> impl Fn(Complex64) -> Option<Complex64> + '_ {
    move |z| {
        let b = field.bbox();
        if !b.contains(z) {
            return Some(c(0.0, 0.0));
        }
        let i = (((z.re - b.x0) / field.dx()) as usize).min(field.nx() - 1);
        let j = (((z.im - b.y0) / field.dy()) as usize).min(field.ny() - 1);
        Some(field.get(i, j))
    }
}

/// The annulus coefficient evaluated on `Ω′`.
pub fn annulus_on_domain(spec: &AnnulusCoefficientSpec) -> impl Fn(Complex64) -> Option<Complex64> + '_ {
    move |z| Some(spec.eval(z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        for name in DOMAIN_NAMES {
            assert!(domain(name).unwrap().validate().is_valid(), "{name}");
        }
        assert!(domain("nope").is_err());
        assert!(Coefficient::from_name("nope").is_err());
    }

    #[test]
    fn nearest_cell_reads_back_samples() {
        let b = Bbox::square(1.0).unwrap();
        let f = GridField::sample(Some, b, 8, 8).unwrap().field;
        let look = nearest_cell(&f);
        assert_eq!(look(f.center(3, 5)), Some(f.get(3, 5)));
        assert_eq!(look(c(5.0, 0.0)), Some(c(0.0, 0.0)));
    }
}
