//! End-to-end experiments: Sibner's pipeline, the circle-image probe and the
//! zero-area non-rigidity construction.

use num_complex::Complex64;
use serde::Serialize;

use super::builtins;
use crate::beltrami::{self, AnnulusCoefficientSpec, DavidProfile, InvariantExtension};
use crate::cantor::MeasureBracket;
use crate::error::{Error, Result};
use crate::field::{Bbox, GridField};
use crate::geometry::CircleDomain;
use crate::schottky::{self, AreaLedger};
use crate::solver::{self, CircleFitReport, GridMap, SolveOptions, SolveResult};

pub const FIT_SAMPLES: usize = 256;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Circle fits of `f(γ_j)` from `FIT_SAMPLES` points on each circle.
pub fn circle_images<F: Fn(Complex64) -> Complex64>(domain: &CircleDomain, f: F) -> Result<Vec<CircleFitReport>> {
    domain
        .circles
        .iter()
        .map(|k| {
            let pts: Vec<_> = k.sample(FIT_SAMPLES).into_iter().map(&f).collect();
            solver::circle_fit(&pts)
        })
        .collect()
}

/// Quasiconformal test maps with closed-form Beltrami coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestMap {
    Identity,
    /// `z + c·z̄`, `|c| < 1`.
    Shear { c: Complex64 },
    /// `z·|z|^a`, `a > −1`.
    RadialStretch { a: f64 },
}

impl TestMap {
    pub fn validate(&self) -> Result<()> {
        match *self {
            TestMap::Shear { c } if c.norm().is_nan() || c.norm() >= 1.0 => {
                Err(Error::InvalidArgument(format!("shear parameter {c} must have modulus below 1")))
            }
            TestMap::RadialStretch { a } if !a.is_finite() || a <= -1.0 => {
                Err(Error::InvalidArgument(format!("stretch exponent {a} must exceed −1")))
            }
            _ => Ok(()),
        }
    }

    /// Parses `identity`, `shear:<re>[,<im>]` or `radial:<a>`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse test map {s:?}"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let map = match s.split_once(':') {
            None if s == "identity" => TestMap::Identity,
            Some(("shear", rest)) => {
                let (re, im) = match rest.split_once(',') {
                    Some((re, im)) => (num(re)?, num(im)?),
                    None => (num(rest)?, 0.0),
                };
                TestMap::Shear { c: c(re, im) }
            }
            Some(("radial", rest)) => TestMap::RadialStretch { a: num(rest)? },
            _ => return Err(bad()),
        };
        map.validate()?;
        Ok(map)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match *self {
            TestMap::Identity => z,
            TestMap::Shear { c } => z + c * z.conj(),
            TestMap::RadialStretch { a } => z * z.norm().powf(a),
        }
    }

    pub fn inverse(&self, w: Complex64) -> Complex64 {
        match *self {
            TestMap::Identity => w,
            TestMap::Shear { c } => (w - c * w.conj()) / (1.0 - c.norm_sqr()),
            TestMap::RadialStretch { a } => {
                if w == c(0.0, 0.0) {
                    w
                } else {
                    w * w.norm().powf(-a / (1.0 + a))
                }
            }
        }
    }

    pub fn mu(&self, z: Complex64) -> Complex64 {
        match *self {
            TestMap::Identity => c(0.0, 0.0),
            TestMap::Shear { c } => c,
            TestMap::RadialStretch { a } => {
                if z == c(0.0, 0.0) {
                    c(0.0, 0.0)
                } else {
                    a / (a + 2.0) * z / z.conj()
                }
            }
        }
    }
}

/// Beltrami coefficient of `f` at `z` by central differences with step `h`.
pub fn fd_beltrami<F: Fn(Complex64) -> Complex64>(f: F, z: Complex64, h: f64) -> Complex64 {
    let fx = (f(z + h) - f(z - h)) / (2.0 * h);
    let fy = (f(z + c(0.0, h)) - f(z - c(0.0, h))) / (2.0 * h);
    let fz = (fx - c(0.0, 1.0) * fy) / 2.0;
    let fzb = (fx + c(0.0, 1.0) * fy) / 2.0;
    fzb / fz
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub n: usize,
}

impl GridSpec {
    pub fn bbox(&self) -> Result<Bbox> {
        Bbox::square(self.half_width)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub iterations: usize,
    pub residual_l2: f64,
    pub convergence_ratio: f64,
    pub residuals: Vec<f64>,
    pub warning: Option<String>,
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        SolveSummary {
            iterations: r.iterations,
            residual_l2: r.residual_l2,
            convergence_ratio: r.convergence_ratio,
            residuals: r.residuals.clone(),
            warning: r.warning.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SibnerOptions {
    pub grid: GridSpec,
    /// `μ = μ_g` on `Ω ∩ D(0, radius)`, 0 elsewhere on `Ω′`.
    pub radius: f64,
    /// Probes keep this distance from the circles and from `|z| = radius`.
    pub margin: f64,
    pub solve: SolveOptions,
}

impl Default for SibnerOptions {
    fn default() -> Self {
        SibnerOptions {
            grid: GridSpec { half_width: 4.5, n: 1024 },
            radius: 3.5,
            margin: 0.25,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SibnerReport {
    pub map: TestMap,
    pub probes: usize,
    /// RMS and maximum of the finite-difference `|μ|` of `f ∘ g⁻¹` at `g(probes)`.
    pub residual_l2: f64,
    pub residual_max: f64,
    pub circle_fits: Vec<CircleFitReport>,
    pub unresolved_cells: usize,
    pub solve: SolveSummary,
}

/// Lattice points of `Ω ∩ D(0, radius − margin)` at least `margin` from every disk.
pub fn domain_probes(domain: &CircleDomain, radius: f64, margin: f64, spacing: f64) -> Vec<Complex64> {
    let r = radius - margin;
    let steps = (r / spacing).floor() as i64;
    let mut out = Vec::new();
    for j in -steps..=steps {
        for i in -steps..=steps {
            let z = c(i as f64 * spacing, j as f64 * spacing);
            if z.norm() > r {
                continue;
            }
            let clear = domain
                .circles
                .iter()
                .all(|k| (z - k.center()).norm() - k.radius() >= margin);
            if clear && !domain.cantor_spec.as_ref().is_some_and(|p| p.contains(z)) {
                out.push(z);
            }
        }
    }
    out
}

pub fn sibner_pipeline(domain: &CircleDomain, g: TestMap, opts: SibnerOptions) -> Result<SibnerReport> {
    g.validate()?;
    let bbox = opts.grid.bbox()?;
    let base = |z: Complex64| {
        let on_points = domain.cantor_spec.as_ref().is_some_and(|p| p.contains(z));
        Some(if z.norm() < opts.radius && !on_points { g.mu(z) } else { c(0.0, 0.0) })
    };
    let ext = InvariantExtension::new(domain, base).sample(bbox, opts.grid.n, opts.grid.n)?;
    let result = solver::solve_beltrami(&ext.field, opts.solve)?;
    let f = result.map();

    let probes = domain_probes(domain, opts.radius, opts.margin, 0.25);
    let step = 4.0 * bbox.width() / opts.grid.n as f64;
    let composed = |w: Complex64| f.eval(g.inverse(w));
    let mut sum = 0.0;
    let mut worst: f64 = 0.0;
    for &z in &probes {
        let r = fd_beltrami(composed, g.eval(z), step).norm();
        sum += r * r;
        worst = worst.max(r);
    }
    let residual_l2 = if probes.is_empty() { 0.0 } else { (sum / probes.len() as f64).sqrt() };
    Ok(SibnerReport {
        map: g,
        probes: probes.len(),
        residual_l2,
        residual_max: worst,
        circle_fits: circle_images(domain, |z| f.eval(z))?,
        unresolved_cells: ext.unresolved_cells,
        solve: SolveSummary::from(&result),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub circle_fits: Vec<CircleFitReport>,
    pub max_deviation: f64,
    pub mobius_deviation: f64,
    pub solve: SolveSummary,
}

/// Solves for a coefficient on the plane and measures how far the solution is
/// from mapping circles to circles, and from being Möbius.
pub fn rigidity_check(domain: &CircleDomain, mu: &GridField, opts: SolveOptions) -> Result<RigidityReport> {
    let result = solver::solve_beltrami(mu, opts)?;
    let f = result.map();
    let circle_fits = circle_images(domain, |z| f.eval(z))?;
    let b = mu.bbox();
    let center = c((b.x0 + b.x1) / 2.0, (b.y0 + b.y1) / 2.0);
    let probes = solver::standard_probes(center, 0.45 * b.width().min(b.height()), 64);
    let mobius_deviation = solver::mobius_deviation(|z| Some(f.eval(z)), &probes)?;
    Ok(RigidityReport {
        max_deviation: circle_fits.iter().map(|r| r.deviation).fold(0.0, f64::max),
        circle_fits,
        mobius_deviation,
        solve: SolveSummary::from(&result),
    })
}

/// A ledger deep enough for `M(1), …, M(n_max)`, or the largest one the word
/// cap allows.
pub fn ledger_for(domain: &CircleDomain, n_max: usize) -> Result<AreaLedger> {
    let mut ledger = AreaLedger::build(domain, schottky::DEFAULT_DEPTH)?;
    for _ in 0..4 {
        match ledger.tail_indices(n_max) {
            Ok(_) => return Ok(ledger),
            Err(Error::InsufficientDepth { required: Some(r), .. }) if r > ledger.depth() => {
                match AreaLedger::build(domain, r + 1) {
                    Ok(deeper) => ledger = deeper,
                    Err(Error::InvalidArgument(_)) => return Ok(ledger),
                    Err(e) => return Err(e),
                }
            }
            Err(Error::InsufficientDepth { .. }) | Err(Error::NoContraction(_)) => return Ok(ledger),
            Err(e) => return Err(e),
        }
    }
    Ok(ledger)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroAreaOptions {
    pub grid: GridSpec,
    /// Largest `n` checked on the grid.
    pub grid_n_max: usize,
    /// Largest `n` checked by the analytic oracle.
    pub analytic_n_max: usize,
    pub ladder_rungs: usize,
    pub solve: SolveOptions,
}

impl Default for ZeroAreaOptions {
    fn default() -> Self {
        ZeroAreaOptions {
            grid: GridSpec { half_width: 4.0, n: 512 },
            grid_n_max: 3,
            analytic_n_max: schottky::SCALE_CAP,
            ladder_rungs: 4,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRung {
    pub eps: f64,
    pub iterations: usize,
    pub residual_l2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderSummary {
    pub rungs: Vec<LadderRung>,
    pub sup_distances: Vec<f64>,
    pub strictly_decreasing: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroAreaReport {
    #[serde(rename = "M")]
    pub m: Vec<usize>,
    pub h: Vec<f64>,
    /// `(π+1)e^{−eⁿ}` for `n = 1, …, analytic_n_max`.
    pub proof_bounds: Vec<f64>,
    /// Grid measure of `{|μ̃| > 1 − 1/n}` for `n = 1, …, grid_n_max`.
    pub grid_measures: Vec<f64>,
    pub analytic_bounds: Vec<f64>,
    pub witness_measures: Vec<MeasureBracket>,
    /// `lower bound on m(P ∩ D̄(p, h(n))) / (π h(n)²)`.
    pub witness_density: Vec<f64>,
    pub density_ok: bool,
    pub grid_within_analytic: bool,
    pub grid_within_proof: bool,
    pub analytic_within_proof: bool,
    pub ledger_depth: usize,
    pub unresolved_cells: usize,
    pub sup_norm: f64,
    pub ladder: LadderSummary,
    pub circle_deviations: Vec<f64>,
    pub problems: Vec<String>,
}

/// Probes for the ladder: a lattice over the box interior.
fn ladder_probes(bbox: Bbox) -> Vec<Complex64> {
    let k = 12;
    let mut out = Vec::with_capacity(k * k);
    for j in 0..k {
        for i in 0..k {
            let t = (i as f64 + 0.5) / k as f64;
            let s = (j as f64 + 0.5) / k as f64;
            out.push(c(
                bbox.x0 + bbox.width() * (0.1 + 0.8 * t),
                bbox.y0 + bbox.height() * (0.1 + 0.8 * s),
            ));
        }
    }
    out
}

pub fn zero_area_probe(domain: &CircleDomain, opts: ZeroAreaOptions) -> Result<ZeroAreaReport> {
    let support = domain
        .cantor_spec
        .ok_or_else(|| Error::InvalidDomain("the zero-area probe needs a fat Cantor set".into()))?;
    let report = domain.validate();
    if !report.is_valid() {
        return Err(Error::InvalidDomain(format!("{report:?}")));
    }
    if opts.grid_n_max == 0 || opts.grid_n_max > opts.analytic_n_max {
        return Err(Error::InvalidArgument("need 1 ≤ grid_n_max ≤ analytic_n_max".into()));
    }
    if opts.analytic_n_max > schottky::SCALE_CAP {
        return Err(Error::ScaleCap {
            n: opts.analytic_n_max,
            cap: schottky::SCALE_CAP,
        });
    }
    let mut problems = Vec::new();
    let ledger = ledger_for(domain, opts.analytic_n_max)?;
    // as many scales as the ledger supports
    let mut m = Vec::new();
    for n in 1..=opts.analytic_n_max {
        match ledger.tail_indices(n) {
            Ok(v) => m = v,
            Err(e) => {
                problems.push(format!("M({n}) unavailable: {e}"));
                break;
            }
        }
    }
    if m.len() < opts.grid_n_max {
        return Err(Error::InsufficientDepth {
            depth: ledger.depth(),
            required: None,
        });
    }
    let spec = AnnulusCoefficientSpec::from_tail_indices(m, support)?;
    let n_avail = spec.n_max();

    let proof = DavidProfile::annulus_construction();
    let proof_bounds: Vec<f64> = (1..=n_avail).map(|n| proof.bound(1.0 / n as f64)).collect();
    let analytic_bounds = (1..=n_avail)
        .map(|n| beltrami::analytic_superlevel_oracle(&spec, &ledger, n))
        .collect::<Result<Vec<_>>>()?;
    let witness_measures = (1..=n_avail).map(|n| spec.witness_measure(n)).collect::<Result<Vec<_>>>()?;
    let witness_density: Vec<f64> = witness_measures
        .iter()
        .zip(&spec.h)
        .map(|(w, h)| w.lower / (std::f64::consts::PI * h * h))
        .collect();
    let density_ok = witness_measures.iter().take(opts.grid_n_max).all(|w| w.lower > 0.0);
    if !density_ok {
        problems.push("witness measure vanishes at a tested scale; p is not behaving as a density point".into());
    }

    let bbox = opts.grid.bbox()?;
    let base = builtins::annulus_on_domain(&spec);
    let ext = InvariantExtension::new(domain, base).sample(bbox, opts.grid.n, opts.grid.n)?;
    let eps: Vec<f64> = (1..=opts.grid_n_max).map(|n| 1.0 / n as f64).collect();
    let grid_measures = ext.field.superlevel_measure(&eps).measures;
    let grid_within_analytic = grid_measures.iter().zip(&analytic_bounds).all(|(g, a)| g <= a);
    let grid_within_proof = grid_measures.iter().zip(&proof_bounds).all(|(g, b)| g <= b);
    let analytic_within_proof = analytic_bounds.iter().zip(&proof_bounds).all(|(a, b)| a <= b);

    let sup_norm = ext.field.sup_norm();
    let ladder_eps = solver::converging_ladder(sup_norm, opts.ladder_rungs);
    let probes = ladder_probes(bbox);
    let ladder = solver::solve_david_ladder(&ext.field, &ladder_eps, opts.solve, &probes)?;
    let last = ladder
        .rungs
        .last()
        .ok_or_else(|| Error::InvalidArgument("the ladder needs at least one rung".into()))?;
    let fmap: GridMap<'_> = last.map();
    let circle_deviations = circle_images(domain, |z| fmap.eval(z))?
        .into_iter()
        .map(|r| r.deviation)
        .collect();
    let summary = LadderSummary {
        rungs: ladder
            .rungs
            .iter()
            .map(|r| LadderRung {
                eps: r.truncation_eps,
                iterations: r.iterations,
                residual_l2: r.residual_l2,
            })
            .collect(),
        strictly_decreasing: ladder.strictly_decreasing(),
        sup_distances: ladder.sup_distances,
    };
    Ok(ZeroAreaReport {
        m: spec.m.clone(),
        h: spec.h.clone(),
        proof_bounds,
        grid_measures,
        analytic_bounds,
        witness_measures,
        witness_density,
        density_ok,
        grid_within_analytic,
        grid_within_proof,
        analytic_within_proof,
        ledger_depth: ledger.depth(),
        unresolved_cells: ext.unresolved_cells,
        sup_norm,
        ladder: summary,
        circle_deviations,
        problems,
    })
}
