//! Circle domains in which every boundary circle is accumulated by later ones.
//!
//! Step `k` surrounds each circle `γ ∈ F_k` by an annulus `A_k(γ)` of half-width
//! `b ≤ 1/(2k)` that avoids every other circle of `F_k`, then places
//! `⌈4πk·r(γ)⌉` equally spaced circles just outside `γ`, inside the outer half
//! of that annulus.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Circle, CircleDomain};

/// `{inner < |z − center| < outer}` around circle `circle` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Annulus {
    pub circle: usize,
    pub center: Complex64,
    pub inner: f64,
    pub outer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulationConfig {
    /// `F_{k_max}`; `F_k` is the prefix of length `level_sizes[k-1]`.
    pub circles: Vec<Circle>,
    pub level_sizes: Vec<usize>,
    /// `annuli[k-1]` holds `A_k(γ)` for each `γ ∈ F_k`, for `k < k_max`.
    pub annuli: Vec<Vec<Annulus>>,
}

impl AccumulationConfig {
    pub fn k_max(&self) -> usize {
        self.level_sizes.len()
    }

    pub fn level(&self, k: usize) -> &[Circle] {
        &self.circles[..self.level_sizes[k - 1]]
    }

    pub fn domain(&self) -> CircleDomain {
        CircleDomain::new(self.circles.clone())
    }
}

/// Smallest gap `|c_i − c_j| − r_i − r_j` between circle `i` and the others.
fn clearance(circles: &[Circle], i: usize) -> f64 {
    circles
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, other)| (circles[i].center() - other.center()).norm() - circles[i].radius() - other.radius())
        .fold(f64::INFINITY, f64::min)
}

fn annuli_for(circles: &[Circle], k: usize) -> Vec<Annulus> {
    circles
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let b = (1.0 / (2.0 * k as f64)).min(c.radius()).min(0.5 * clearance(circles, i));
            Annulus {
                circle: i,
                center: c.center(),
                inner: c.radius() - b,
                outer: c.radius() + b,
            }
        })
        .collect()
}

pub fn generate_accumulation_example(k_max: usize) -> Result<AccumulationConfig> {
    if k_max == 0 {
        return Err(Error::InvalidArgument("k_max must be at least 1".into()));
    }
    let mut circles = vec![Circle::new(Complex64::new(0.0, 0.0), 1.0)?];
    let mut level_sizes = vec![1];
    let mut annuli = Vec::new();
    for k in 1..k_max {
        let rings = annuli_for(&circles, k);
        let kf = k as f64;
        let mut added = Vec::new();
        for (gamma, ring) in circles.iter().zip(&rings) {
            let r = gamma.radius();
            let a = (ring.outer - r) / 2.0;
            let n = (4.0 * PI * kf * r).ceil() as usize;
            // chord spacing at the innermost admissible placement radius r + a/2
            let s = 2.0 * (r + a / 2.0) * (PI / n as f64).sin();
            let rho = (1.0 / (4.0 * kf * kf)).min(a.min(s) / 4.0);
            let place = r + a - 2.0 * rho;
            for m in 0..n {
                let t = 2.0 * PI * m as f64 / n as f64;
                added.push(Circle::new(gamma.center() + Complex64::from_polar(place, t), rho)?);
            }
        }
        annuli.push(rings);
        circles.extend(added);
        level_sizes.push(circles.len());
    }
    Ok(AccumulationConfig {
        circles,
        level_sizes,
        annuli,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulationReport {
    pub nested: bool,
    pub disjoint: bool,
    /// Every annulus lies in the `1/k`-neighborhood of its circle and avoids the
    /// other circles of `F_k`.
    pub annuli_ok: bool,
    /// Largest sampled distance from a point of `γ ∈ F_k` to another circle of
    /// `F_{k+1}`, times `k`; at most 1 when dense enough.
    pub worst_density_ratio: f64,
    pub density_ok: bool,
    pub problems: Vec<String>,
}

impl AccumulationReport {
    pub fn passed(&self) -> bool {
        self.nested && self.disjoint && self.annuli_ok && self.density_ok
    }
}

pub fn verify_accumulation(config: &AccumulationConfig) -> AccumulationReport {
    let mut problems = Vec::new();
    let nested = config.level_sizes.windows(2).all(|w| w[0] <= w[1])
        && config.level_sizes.last() == Some(&config.circles.len());
    if !nested {
        problems.push("level sizes are not nested".to_string());
    }

    let report = config.domain().validate();
    let disjoint = report.overlaps.is_empty();
    for o in report.overlaps.iter().take(5) {
        problems.push(format!("circles {} and {} overlap (gap {:e})", o.i, o.j, o.gap));
    }

    let mut annuli_ok = config.annuli.len() + 1 == config.k_max();
    for (k0, rings) in config.annuli.iter().enumerate() {
        let k = k0 + 1;
        let level = config.level(k);
        if rings.len() != level.len() {
            annuli_ok = false;
            continue;
        }
        for ring in rings {
            let gamma = level[ring.circle];
            let width = (ring.outer - gamma.radius()).max(gamma.radius() - ring.inner);
            if !(ring.inner < gamma.radius() && gamma.radius() < ring.outer) || width >= 1.0 / k as f64 {
                annuli_ok = false;
                problems.push(format!("A_{k} of circle {} leaves the 1/k-neighborhood", ring.circle + 1));
            }
            for (j, other) in level.iter().enumerate() {
                if j == ring.circle {
                    continue;
                }
                if (other.center() - ring.center).norm() - other.radius() < ring.outer {
                    annuli_ok = false;
                    problems.push(format!("A_{k} of circle {} meets circle {}", ring.circle + 1, j + 1));
                }
            }
        }
    }

    let mut worst: f64 = 0.0;
    for k in 1..config.k_max() {
        let next = config.level(k + 1);
        for (i, gamma) in config.level(k).iter().enumerate() {
            let samples = ((2.0 * PI * gamma.radius() * 20.0 * k as f64).ceil() as usize).max(64);
            for z in gamma.sample(samples) {
                let d = next
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, c)| c.distance_to_curve(z))
                    .fold(f64::INFINITY, f64::min);
                worst = worst.max(d * k as f64);
            }
        }
    }
    let density_ok = worst <= 1.0;
    if !density_ok {
        problems.push(format!("density ratio {worst} exceeds 1"));
    }
    AccumulationReport {
        nested,
        disjoint,
        annuli_ok,
        worst_density_ratio: worst,
        density_ok,
        problems,
    }
}
