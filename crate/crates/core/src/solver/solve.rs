//! Principal solutions of `∂_z̄ f = μ ∂_z f` for compactly supported `μ`.
//!
//! With `f = z + C h` the equation becomes `h = μ S h + μ`, solved by Neumann
//! iteration from `h = 0`.

use num_complex::Complex64;
use serde::Serialize;

use super::spectral::SpectralPlan;
use crate::error::{Error, Result};
use crate::field::{GridField, Norm};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// `f(z) − z` at cell centers.
    pub displacement: GridField,
    /// The density `h = ∂_z̄ f`.
    pub density: GridField,
    /// `‖h − μ S h − μ‖₂` of the returned density.
    pub residual_l2: f64,
    pub iterations: usize,
    /// Residual after each sweep, starting from `h = 0`.
    pub residuals: Vec<f64>,
    /// Geometric mean of consecutive residual ratios; 0 if fewer than two sweeps.
    pub convergence_ratio: f64,
    /// Truncation level `ε` of the coefficient (0 = none).
    pub truncation_eps: f64,
    /// `(1/π) ∫ h dA`, the `1/z` coefficient of `f` at infinity.
    pub laurent: Complex64,
    pub warning: Option<String>,
}

impl SolveResult {
    pub fn map(&self) -> GridMap<'_> {
        GridMap { result: self }
    }
}

fn l2(values: &[Complex64], cell: f64) -> f64 {
    (values.iter().map(|v| v.norm_sqr()).sum::<f64>() * cell).sqrt()
}

pub fn solve_beltrami(mu: &GridField, opts: SolveOptions) -> Result<SolveResult> {
    let plan = SpectralPlan::for_field(mu)?;
    solve_with_plan(&plan, mu, opts, 0.0)
}

pub fn solve_with_plan(plan: &SpectralPlan, mu: &GridField, opts: SolveOptions, truncation_eps: f64) -> Result<SolveResult> {
    if plan.shape() != (mu.nx(), mu.ny()) || plan.bbox() != mu.bbox() {
        return Err(Error::InvalidGrid("plan does not match the coefficient grid".into()));
    }
    let k = mu.sup_norm();
    if k >= 1.0 {
        return Err(Error::CoefficientTooLarge(k));
    }
    let cell = mu.cell_area();
    let m = mu.values();
    let mut h = vec![Complex64::new(0.0, 0.0); m.len()];
    let mut residuals = Vec::new();
    let mut iterations = 0;
    loop {
        let s = plan.beurling(&h);
        let next: Vec<Complex64> = m.iter().zip(&s).map(|(&mi, &si)| mi * si + mi).collect();
        let diff: Vec<Complex64> = h.iter().zip(&next).map(|(a, b)| a - b).collect();
        let r = l2(&diff, cell);
        residuals.push(r);
        if r <= opts.tol {
            break;
        }
        if iterations >= opts.max_iter || !r.is_finite() {
            return Err(Error::NonConvergence { residuals });
        }
        h = next;
        iterations += 1;
    }
    let residual_l2 = *residuals.last().expect("at least one sweep");
    let convergence_ratio = if residuals.len() >= 3 {
        // skip the first sweep, which starts from h = 0
        let first = residuals[1];
        let steps = (residuals.len() - 2) as f64;
        if first > 0.0 {
            (residual_l2 / first).powf(1.0 / steps)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let info = plan.support_info(&h);
    let cauchy = plan.cauchy(&h);
    let laurent = h.iter().sum::<Complex64>() * (cell / std::f64::consts::PI);
    Ok(SolveResult {
        displacement: mu.with_values(cauchy)?,
        density: mu.with_values(h)?,
        residual_l2,
        iterations,
        residuals,
        convergence_ratio,
        truncation_eps,
        laurent,
        warning: info.warning(),
    })
}

/// `μ_f = h / (1 + S h)` of a solution, from its density.
pub fn solution_coefficient(result: &SolveResult) -> Result<GridField> {
    let plan = SpectralPlan::for_field(&result.density)?;
    let h = result.density.values();
    let s = plan.beurling(h);
    let v = h.iter().zip(&s).map(|(&a, &b)| a / (1.0 + b)).collect();
    result.density.with_values(v)
}

/// Evaluates a solved map: bilinear interpolation of the displacement inside the
/// box, the Laurent tail `z + c/z` outside it.
#[derive(Clone, Copy)]
pub struct GridMap<'a> {
    result: &'a SolveResult,
}

impl GridMap<'_> {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self.result.displacement.interpolate(z) {
            Some(d) => z + d,
            None => z + self.result.laurent / z,
        }
    }
}

/// `μ·min(1, (1−ε)/|μ|)`.
pub fn truncate(mu: &GridField, eps: f64) -> GridField {
    let cap = 1.0 - eps;
    mu.map(|v| {
        let r = v.norm();
        if r > cap {
            v * (cap / r)
        } else {
            v
        }
    })
}

/// Truncation levels whose thresholds `1 − ε_k = sup·(1 − 2^{−(k+1)})`
/// increase to the coefficient's sup norm.
pub fn converging_ladder(sup: f64, rungs: usize) -> Vec<f64> {
    (0..rungs)
        .map(|k| 1.0 - sup * (1.0 - 0.5f64.powi(k as i32 + 1)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LadderReport {
    pub rungs: Vec<SolveResult>,
    /// `max_p |f_{k+1}(p) − f_k(p)|` over the probes, one per consecutive pair.
    pub sup_distances: Vec<f64>,
}

impl LadderReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.sup_distances.windows(2).all(|w| w[1] < w[0])
    }
}

/// Solves for each truncation `μ_ε` of a David coefficient.
pub fn solve_david_ladder(
    mu: &GridField,
    eps_ladder: &[f64],
    opts: SolveOptions,
    probes: &[Complex64],
) -> Result<LadderReport> {
    if eps_ladder.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::InvalidArgument("ladder levels must lie in (0, 1]".into()));
    }
    if eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("ladder levels must strictly decrease".into()));
    }
    let plan = SpectralPlan::for_field(mu)?;
    let mut rungs = Vec::with_capacity(eps_ladder.len());
    for &eps in eps_ladder {
        let truncated = truncate(mu, eps);
        rungs.push(solve_with_plan(&plan, &truncated, opts, eps)?);
    }
    let values: Vec<Vec<Complex64>> = rungs
        .iter()
        .map(|r| probes.iter().map(|&p| r.map().eval(p)).collect())
        .collect();
    let sup_distances = values
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
        .collect();
    Ok(LadderReport { rungs, sup_distances })
}

/// L² distance between two fields on the same grid.
pub fn l2_distance(a: &GridField, b: &GridField) -> Result<f64> {
    if !a.same_grid(b) {
        return Err(Error::InvalidGrid("fields live on different grids".into()));
    }
    let d: Vec<_> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
    Ok(a.with_values(d)?.lp_norm(Norm::L2))
}
