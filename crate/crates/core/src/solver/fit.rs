//! Circle fitting and cross-ratio deviation, the numerical tests of "this curve
//! is a circle" and "this map is Möbius".

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Circle;

pub const MIN_FIT_POINTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircleFitReport {
    pub fitted: Circle,
    /// `max |dist(point, center) − radius| / radius`.
    pub deviation: f64,
    pub samples: usize,
}

/// Taubin's algebraic fit, solved by Newton's method on its characteristic
/// polynomial.
pub fn circle_fit(points: &[Complex64]) -> Result<CircleFitReport> {
    let n = points.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::Degenerate(format!(
            "{n} points; at least {MIN_FIT_POINTS} are needed"
        )));
    }
    let mean = points.iter().sum::<Complex64>() / n as f64;
    let (mut mxx, mut myy, mut mxy, mut mxz, mut myz, mut mzz) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for p in points {
        let (x, y) = (p.re - mean.re, p.im - mean.im);
        let z = x * x + y * y;
        mxx += x * x;
        myy += y * y;
        mxy += x * y;
        mxz += x * z;
        myz += y * z;
        mzz += z * z;
    }
    let nf = n as f64;
    let (mxx, myy, mxy, mxz, myz, mzz) = (mxx / nf, myy / nf, mxy / nf, mxz / nf, myz / nf, mzz / nf);
    let mz = mxx + myy;
    let cov_xy = mxx * myy - mxy * mxy;
    if mz.is_nan() || mz <= 0.0 || cov_xy <= 1e-12 * mz * mz {
        return Err(Error::Degenerate("points are collinear or coincident".into()));
    }
    let var_z = mzz - mz * mz;
    let a3 = 4.0 * mz;
    let a2 = -3.0 * mz * mz - mzz;
    let a1 = var_z * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz;
    let a0 = mxz * (mxz * myy - myz * mxy) + myz * (myz * mxx - mxz * mxy) - var_z * cov_xy;
    let (a22, a33) = (a2 + a2, 3.0 * a3);

    let mut x = 0.0;
    let mut y = a0;
    for _ in 0..99 {
        let dy = a1 + x * (a22 + a33 * x);
        let x_new = x - y / dy;
        if x_new == x || !x_new.is_finite() {
            break;
        }
        let y_new = a0 + x_new * (a1 + x_new * (a2 + x_new * a3));
        if y_new.abs() >= y.abs() {
            break;
        }
        x = x_new;
        y = y_new;
    }
    let det = x * x - x * mz + cov_xy;
    if det.abs() <= f64::EPSILON * mz * mz {
        return Err(Error::Degenerate("singular circle fit".into()));
    }
    let xc = (mxz * (myy - x) - myz * mxy) / det / 2.0;
    let yc = (myz * (mxx - x) - mxz * mxy) / det / 2.0;
    let center = mean + Complex64::new(xc, yc);
    let radius = (xc * xc + yc * yc + mz).sqrt();
    let fitted = Circle::new(center, radius).map_err(|_| Error::Degenerate("fit did not produce a circle".into()))?;
    let deviation = points
        .iter()
        .map(|p| ((p - center).norm() - radius).abs())
        .fold(0.0, f64::max)
        / radius;
    Ok(CircleFitReport {
        fitted,
        deviation,
        samples: n,
    })
}

/// `(z1 − z3)(z2 − z4) / ((z2 − z3)(z1 − z4))`.
pub fn cross_ratio(z: [Complex64; 4]) -> Result<Complex64> {
    for i in 0..4 {
        for j in i + 1..4 {
            if z[i] == z[j] {
                return Err(Error::Degenerate("cross ratio of repeated points".into()));
            }
        }
    }
    Ok((z[0] - z[2]) * (z[1] - z[3]) / ((z[1] - z[2]) * (z[0] - z[3])))
}

/// `max |cr(f(z)) − cr(z)| / (1 + |cr(z)|)` over the probe tuples.
pub fn mobius_deviation<F>(f: F, probes: &[[Complex64; 4]]) -> Result<f64>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let mut worst: f64 = 0.0;
    for tuple in probes {
        let before = cross_ratio(*tuple)?;
        let mut image = [Complex64::new(0.0, 0.0); 4];
        for (k, &z) in tuple.iter().enumerate() {
            image[k] = f(z).ok_or_else(|| Error::Degenerate(format!("map undefined at {z}")))?;
        }
        let after = cross_ratio(image)?;
        worst = worst.max((after - before).norm() / (1.0 + before.norm()));
    }
    Ok(worst)
}

/// Deterministic 4-point probes spread over the disk `D(center, radius)`:
/// consecutive points of a golden-angle spiral.
pub fn standard_probes(center: Complex64, radius: f64, count: usize) -> Vec<[Complex64; 4]> {
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    let total = 4 * count;
    let pts: Vec<Complex64> = (0..total)
        .map(|k| {
            let r = radius * ((k as f64 + 0.5) / total as f64).sqrt();
            center + Complex64::from_polar(r, golden * k as f64)
        })
        .collect();
    // interleave so each tuple spans several radii
    (0..count)
        .map(|t| [pts[t], pts[t + count], pts[t + 2 * count], pts[t + 3 * count]])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ConjMoebius;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exact_circle() {
        let k = Circle::new(c(1.0, 1.0), 2.0).unwrap();
        let rep = circle_fit(&k.sample(64)).unwrap();
        assert!(rep.deviation <= 1e-12);
        assert!((rep.fitted.center() - c(1.0, 1.0)).norm() < 1e-12);
        assert!((rep.fitted.radius() - 2.0).abs() < 1e-12);
        assert_eq!(rep.samples, 64);
    }

    #[test]
    fn ellipse_deviation() {
        let pts: Vec<_> = (0..256)
            .map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 256.0;
                3.0 * Complex64::from_polar(1.0, t) + Complex64::from_polar(1.0, -t) / 6.0
            })
            .collect();
        let rep = circle_fit(&pts).unwrap();
        // the best possible sup deviation is (a − b)/(a + b) = 1/18
        assert!(rep.deviation >= 0.0555 && rep.deviation < 0.06, "{}", rep.deviation);
    }

    #[test]
    fn one_perturbed_point() {
        let k = Circle::new(c(0.0, 0.0), 1.0).unwrap();
        let mut pts = k.sample(8);
        pts[3] *= 1.01;
        let rep = circle_fit(&pts).unwrap();
        assert!(rep.deviation > 0.005 && rep.deviation < 0.0101, "{}", rep.deviation);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<_> = (0..10).map(|k| c(k as f64, 2.0 * k as f64)).collect();
        assert!(circle_fit(&line).is_err());
        assert!(circle_fit(&Circle::new(c(0.0, 0.0), 1.0).unwrap().sample(5)).is_err());
    }

    #[test]
    fn cross_ratio_deviation() {
        let probes = standard_probes(c(0.0, 0.0), 2.0, 32);
        assert_eq!(mobius_deviation(Some, &probes).unwrap(), 0.0);
        let m = ConjMoebius::new(c(1.0, 2.0), c(0.5, 0.0), c(0.1, 0.1), c(1.0, -0.5), false).unwrap();
        assert!(mobius_deviation(|z| m.apply(z).ok(), &probes).unwrap() <= 1e-10);
        let shear = mobius_deviation(|z: Complex64| Some(z + 0.3 * z.conj()), &probes).unwrap();
        assert!(shear > 0.01, "{shear}");
        assert!(mobius_deviation(Some, &[[c(0.0, 0.0); 4]]).is_err());
    }
}
