//! Grid solver for the Beltrami equation, and circularity and Möbius metrics.

mod fit;
mod solve;
mod spectral;

pub use fit::{circle_fit, cross_ratio, mobius_deviation, standard_probes, CircleFitReport, MIN_FIT_POINTS};
pub use solve::{
    converging_ladder, l2_distance, solution_coefficient, solve_beltrami, solve_david_ladder, solve_with_plan,
    truncate, GridMap, LadderReport, SolveOptions, SolveResult, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use spectral::{
    beurling_periodic, beurling_transform, cauchy_transform, wirtinger_fd, Fft2, SpectralPlan, SupportInfo,
    Transformed, MAX_GRID, SUPPORT_MARGIN,
};
