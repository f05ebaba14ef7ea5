//! Pullbacks of Beltrami coefficients by (anti-)Möbius maps, the group-invariant
//! extension from the fundamental domain, the annulus David coefficient over a
//! fat Cantor set, and checks of the David growth conditions.
//!
//! Pointwise coefficients are plain closures returning `None` where undefined.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cantor::{FatCantorSpec, MeasureBracket};
use crate::error::{Error, Result};
use crate::field::{Bbox, GridField, SuperLevelMeasure};
use crate::geometry::{CircleDomain, ConjMoebius};
use crate::schottky::{self, AreaLedger, ReducedWord, Reduction};

/// `T*(μ)(z)` given `m = μ(T(z))`.
///
/// Möbius: `m·conj(T′)/T′`. Anti-Möbius: `conj(m)·D/conj(D)` with `D = ∂_z̄ T`.
pub fn pullback_value(t: &ConjMoebius, m: Complex64, z: Complex64) -> Result<Complex64> {
    let d = t.derivative(z)?;
    let phase = d.conj() / d;
    Ok(if t.is_orientation_reversing() {
        m.conj() / phase
    } else {
        m * phase
    })
}

/// `T*(μ)` as a pointwise coefficient.
pub fn pullback<'a, F>(t: ConjMoebius, mu: &'a F) -> impl Fn(Complex64) -> Option<Complex64> + 'a
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    move |z| {
        let w = t.apply(z).ok()?;
        pullback_value(&t, mu(w)?, z).ok()
    }
}

/// Value of the invariant extension at a point, with the reason when it is not
/// a pullback.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extended {
    Value(Complex64),
    /// Not resolved within the reduction depth; evaluates to 0.
    LimitSet,
    /// The point is the image of ∞ or `μ` is undefined at its representative.
    Undefined,
}

impl Extended {
    pub fn value(self) -> Complex64 {
        match self {
            Extended::Value(v) => v,
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

/// `μ̃(w) = (T⁻¹)*(μ)(w)` for `w ∈ T(Ω′)`, and 0 on the limit set.
pub struct InvariantExtension<'a, F> {
    domain: &'a CircleDomain,
    mu: F,
    max_depth: usize,
}

/// A sampled extension with cell accounting.
#[derive(Debug, Clone)]
pub struct ExtensionGrid {
    pub field: GridField,
    pub unresolved_cells: usize,
    pub undefined_cells: usize,
}

impl<'a, F> InvariantExtension<'a, F>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    pub fn new(domain: &'a CircleDomain, mu: F) -> Self {
        Self::with_depth(domain, mu, schottky::DEFAULT_REDUCTION_DEPTH)
    }

    pub fn with_depth(domain: &'a CircleDomain, mu: F, max_depth: usize) -> Self {
        InvariantExtension { domain, mu, max_depth }
    }

    pub fn domain(&self) -> &CircleDomain {
        self.domain
    }

    pub fn base(&self, z: Complex64) -> Option<Complex64> {
        (self.mu)(z)
    }

    /// Reflects `w` into `Ω′`, then carries `μ` back one reflection at a time.
    pub fn eval(&self, w: Complex64) -> Extended {
        let word = match schottky::reduce_to_fundamental(self.domain, w, self.max_depth) {
            Reduction::Resolved { word, .. } => word,
            Reduction::Infinity { .. } => return Extended::Undefined,
            Reduction::LimitSet => return Extended::LimitSet,
        };
        self.eval_along(w, &word)
    }

    fn eval_along(&self, w: Complex64, word: &ReducedWord) -> Extended {
        let mut points = Vec::with_capacity(word.len() + 1);
        points.push(w);
        let mut z = w;
        for &letter in word.letters() {
            z = match self.domain.circles[letter - 1].reflect(z) {
                Ok(next) => next,
                Err(_) => return Extended::Undefined,
            };
            points.push(z);
        }
        let Some(mut nu) = (self.mu)(z) else {
            return Extended::Undefined;
        };
        for (k, &letter) in word.letters().iter().enumerate().rev() {
            let u = points[k] - self.domain.circles[letter - 1].center();
            let phase = u / u.conj();
            nu = nu.conj() * phase * phase;
        }
        Extended::Value(nu)
    }

    pub fn value(&self, w: Complex64) -> Complex64 {
        self.eval(w).value()
    }

    /// Same value computed from the full matrix of `T⁻¹`.
    pub fn eval_by_matrix(&self, w: Complex64) -> Result<Complex64> {
        let word = match schottky::reduce_to_fundamental(self.domain, w, self.max_depth) {
            Reduction::Resolved { word, .. } => word,
            _ => return Err(Error::Degenerate(format!("{w} does not reduce to a finite point"))),
        };
        let inv = schottky::word_to_map(&word, self.domain)?.inverse();
        let z = inv.apply(w)?;
        let m = (self.mu)(z).ok_or_else(|| Error::Degenerate(format!("μ undefined at {z}")))?;
        pullback_value(&inv, m, w)
    }

    pub fn sample(&self, bbox: Bbox, nx: usize, ny: usize) -> Result<ExtensionGrid> {
        let mut field = GridField::zeros(bbox, nx, ny)?;
        let mut unresolved_cells = 0;
        let mut undefined_cells = 0;
        for (idx, z) in field.centers().into_iter().enumerate() {
            match self.eval(z) {
                Extended::Value(v) => field.values_mut()[idx] = v,
                Extended::LimitSet => unresolved_cells += 1,
                Extended::Undefined => undefined_cells += 1,
            }
        }
        Ok(ExtensionGrid {
            field,
            unresolved_cells,
            undefined_cells,
        })
    }

    /// `max_j |R_j*(μ̃)(w) − μ̃(w)|` over the probes; probes where either side
    /// is not a pullback are skipped.
    pub fn invariance_residual(&self, probes: &[Complex64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &w in probes {
            let Extended::Value(here) = self.eval(w) else {
                continue;
            };
            for circle in &self.domain.circles {
                let Ok(rw) = circle.reflect(w) else { continue };
                let Extended::Value(there) = self.eval(rw) else {
                    continue;
                };
                let Ok(pulled) = pullback_value(&circle.as_conj_moebius(), there, w) else {
                    continue;
                };
                worst = worst.max((pulled - here).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DavidKind {
    David,
    StronglyDavid,
}

/// `m({|μ| > 1−ε}) < M e^{−α/ε}` or `≤ M e^{−β e^{α/ε}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavidProfile {
    pub m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub kind: DavidKind,
}

impl DavidProfile {
    pub fn david(m: f64, alpha: f64) -> Result<Self> {
        Self::new(m, alpha, 1.0, DavidKind::David)
    }

    pub fn strongly_david(m: f64, alpha: f64, beta: f64) -> Result<Self> {
        Self::new(m, alpha, beta, DavidKind::StronglyDavid)
    }

    /// The profile of the annulus construction: `(π+1) e^{−e^{1/ε}}`.
    pub fn annulus_construction() -> Self {
        DavidProfile {
            m: std::f64::consts::PI + 1.0,
            alpha: 1.0,
            beta: 1.0,
            kind: DavidKind::StronglyDavid,
        }
    }

    pub fn new(m: f64, alpha: f64, beta: f64, kind: DavidKind) -> Result<Self> {
        for (name, v) in [("M", m), ("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
            }
        }
        Ok(DavidProfile { m, alpha, beta, kind })
    }

    pub fn bound(&self, eps: f64) -> f64 {
        match self.kind {
            DavidKind::David => self.m * (-self.alpha / eps).exp(),
            DavidKind::StronglyDavid => self.m * (-self.beta * (self.alpha / eps).exp()).exp(),
        }
    }

    fn holds(&self, measure: f64, eps: f64) -> bool {
        match self.kind {
            DavidKind::David => measure < self.bound(eps),
            DavidKind::StronglyDavid => measure <= self.bound(eps),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DavidCheckRow {
    pub epsilon: f64,
    pub measure: f64,
    pub bound: f64,
    pub holds: bool,
    /// `bound / measure`; infinite for empty super-level sets.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DavidReport {
    pub profile: DavidProfile,
    pub rows: Vec<DavidCheckRow>,
}

impl DavidReport {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

/// Compares measured (or analytically bounded) super-level measures against the
/// profile.
pub fn check_david(measures: &SuperLevelMeasure, profile: &DavidProfile) -> DavidReport {
    let rows = measures
        .epsilons
        .iter()
        .zip(&measures.measures)
        .map(|(&epsilon, &measure)| {
            let bound = profile.bound(epsilon);
            DavidCheckRow {
                epsilon,
                measure,
                bound,
                holds: profile.holds(measure, epsilon),
                margin: if measure > 0.0 { bound / measure } else { f64::INFINITY },
            }
        })
        .collect();
    DavidReport {
        profile: *profile,
        rows,
    }
}

/// `μ = 1 − 1/(n+1)` on `P ∩ {h(n+1) < |z − p| ≤ h(n)}`, 0 elsewhere on `Ω′`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnulusCoefficientSpec {
    pub p: Complex64,
    /// `h[n-1] = h(n)`.
    pub h: Vec<f64>,
    /// `m[n-1] = M(n)`.
    pub m: Vec<usize>,
    /// `values[n-1] = 1 − 1/(n+1)`.
    pub values: Vec<f64>,
    pub support: FatCantorSpec,
}

/// `h(n) = e^{−e^n/2} / √(M(n)+1)`.
pub fn annulus_radius(n: usize, m: usize) -> f64 {
    (-(n as f64).exp() / 2.0).exp() / ((m + 1) as f64).sqrt()
}

impl AnnulusCoefficientSpec {
    /// Builds the radii from given tail indices `M(1), …, M(n_max)`.
    pub fn from_tail_indices(m: Vec<usize>, support: FatCantorSpec) -> Result<Self> {
        if m.is_empty() {
            return Err(Error::InvalidArgument("need at least M(1)".into()));
        }
        if m.len() > schottky::SCALE_CAP {
            return Err(Error::ScaleCap {
                n: m.len(),
                cap: schottky::SCALE_CAP,
            });
        }
        let h: Vec<f64> = m.iter().enumerate().map(|(k, &mk)| annulus_radius(k + 1, mk)).collect();
        if h.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("radii must strictly decrease".into()));
        }
        let values = (1..=m.len()).map(|n| 1.0 - 1.0 / (n as f64 + 1.0)).collect();
        Ok(AnnulusCoefficientSpec {
            p: support.anchor(),
            h,
            m,
            values,
            support,
        })
    }

    pub fn n_max(&self) -> usize {
        self.h.len()
    }

    /// The annulus index `n` with `h(n+1) < |z − p| ≤ h(n)`. Points inside the
    /// last computed radius get `n_max`.
    pub fn annulus_index(&self, z: Complex64) -> Option<usize> {
        let r = (z - self.p).norm();
        if r > self.h[0] {
            return None;
        }
        Some(self.h.iter().rposition(|&h| r <= h).expect("r <= h(1)") + 1)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self.annulus_index(z) {
            Some(n) if self.support.contains(z) => Complex64::new(self.values[n - 1], 0.0),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    /// Bracket on `m(P ∩ D̄(p, h(n)))`, where `|μ| ≥ 1 − 1/(n+1)`.
    pub fn witness_measure(&self, n: usize) -> Result<MeasureBracket> {
        let h = self.radius(n)?;
        Ok(self.support.disk_measure(self.p, h, 10))
    }

    pub fn radius(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        self.h.get(n - 1).copied().ok_or(Error::ScaleCap {
            n,
            cap: self.n_max(),
        })
    }
}

/// Builds the annulus coefficient from a ledger of the domain's reflection group.
pub fn david_coefficient(
    ledger: &AreaLedger,
    support: FatCantorSpec,
    n_max: usize,
) -> Result<AnnulusCoefficientSpec> {
    if n_max > schottky::SCALE_CAP {
        return Err(Error::ScaleCap {
            n: n_max,
            cap: schottky::SCALE_CAP,
        });
    }
    AnnulusCoefficientSpec::from_tail_indices(ledger.tail_indices(n_max)?, support)
}

/// Upper bound on `m({|μ̃| > 1 − 1/n})` without a grid:
/// `(M(n)+1)·m(P ∩ D̄(p, h(n))) + Σ_{j > M(n)} m(T_j(Ω′))`.
pub fn analytic_superlevel_oracle(spec: &AnnulusCoefficientSpec, ledger: &AreaLedger, n: usize) -> Result<f64> {
    let m = *spec.m.get(n.wrapping_sub(1)).ok_or(Error::ScaleCap {
        n,
        cap: spec.n_max(),
    })?;
    let inner = spec.witness_measure(n)?.upper;
    Ok((m as f64 + 1.0) * inner + ledger.tail_sum(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Circle;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn two_circles() -> CircleDomain {
        CircleDomain::new(vec![
            Circle::new(c(-2.0, 0.0), 1.0).unwrap(),
            Circle::new(c(2.0, 0.0), 1.0).unwrap(),
        ])
    }

    /// `μ` of `g` at `z` by central differences, with the orientation-reversing
    /// convention `conj(g_z)/conj(g_z̄)`.
    fn fd_beltrami<G: Fn(Complex64) -> Complex64>(g: G, z: Complex64, h: f64) -> Complex64 {
        let gx = (g(z + h) - g(z - h)) / (2.0 * h);
        let gy = (g(z + c(0.0, h)) - g(z - c(0.0, h))) / (2.0 * h);
        let gz = (gx - c(0.0, 1.0) * gy) / 2.0;
        let gzb = (gx + c(0.0, 1.0) * gy) / 2.0;
        if gz.norm() >= gzb.norm() {
            gzb / gz
        } else {
            gz.conj() / gzb.conj()
        }
    }

    #[test]
    fn pullback_examples() {
        let mu = |_| Some(c(0.3, 0.1));
        let dilation = ConjMoebius::new(c(2.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), false).unwrap();
        let v = pullback(dilation, &mu)(c(0.7, -0.2)).unwrap();
        assert!((v - c(0.3, 0.1)).norm() < 1e-15);

        let zero = |_| Some(c(0.0, 0.0));
        let r = Circle::new(c(1.0, 1.0), 0.5).unwrap().as_conj_moebius();
        assert_eq!(pullback(r, &zero)(c(3.0, 0.0)).unwrap(), c(0.0, 0.0));

        let theta: f64 = 0.7;
        let rot = Complex64::from_polar(1.0, theta);
        let t = ConjMoebius::new(rot, c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), false).unwrap();
        let v = pullback(t, &mu)(c(0.2, 0.4)).unwrap();
        assert!((v - c(0.3, 0.1) * Complex64::from_polar(1.0, -2.0 * theta)).norm() < 1e-14);
    }

    #[test]
    fn pullback_matches_difference_quotients() {
        // F(w) = w + k conj(w) has μ_F ≡ k; μ_{F∘T} must be T*(μ_F)
        let k = c(0.3, -0.2);
        let mu = |_| Some(k);
        let maps = [
            ConjMoebius::new(c(1.0, 1.0), c(0.5, 0.0), c(0.2, -0.1), c(1.0, 0.0), false).unwrap(),
            Circle::new(c(-2.0, 0.0), 1.0).unwrap().as_conj_moebius(),
            Circle::new(c(0.5, 0.3), 0.8)
                .unwrap()
                .as_conj_moebius()
                .compose(&Circle::new(c(3.0, 0.0), 1.0).unwrap().as_conj_moebius())
                .compose(&Circle::new(c(-1.0, 2.0), 0.6).unwrap().as_conj_moebius()),
        ];
        for t in maps {
            for z in [c(4.0, 1.0), c(-0.7, 3.1), c(1.3, -2.2)] {
                let g = |u: Complex64| {
                    let w = t.apply(u).unwrap();
                    w + k * w.conj()
                };
                let fd = fd_beltrami(g, z, 1e-5);
                let exact = pullback(t, &mu)(z).unwrap();
                assert!((fd - exact).norm() < 1e-6, "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn extension_basics() {
        let d = two_circles();
        let zero = InvariantExtension::new(&d, |_| Some(c(0.0, 0.0)));
        assert_eq!(zero.value(c(-2.3, 0.1)), c(0.0, 0.0));

        let mu = |z: Complex64| Some(c(0.3, 0.0) * Complex64::from_polar(1.0, z.im));
        let ext = InvariantExtension::new(&d, mu);
        let w = c(0.1, 2.0);
        assert_eq!(ext.value(w), mu(w).unwrap());

        let constant = InvariantExtension::new(&d, |_| Some(c(0.3, 0.0)));
        let w = d.circles[0].reflect(c(5.0, 0.0)).unwrap();
        assert!((constant.value(w).norm() - 0.3).abs() < 1e-15);
        // phase from the anti-Möbius formula: R*(μ) at w with T = R_1
        let g = |u: Complex64| {
            let z = d.circles[0].reflect(u).unwrap();
            z + 0.3 * z.conj()
        };
        let fd = fd_beltrami(g, w, 1e-6);
        assert!((fd - constant.value(w)).norm() < 1e-6);
    }

    #[test]
    fn stepwise_and_matrix_agree() {
        let d = two_circles();
        let mu = |z: Complex64| Some(c(0.2, 0.1) + 0.05 * Complex64::from_polar(1.0, z.re));
        let ext = InvariantExtension::new(&d, mu);
        for z0 in [c(0.3, 1.1), c(-4.0, 2.0), c(0.0, -0.5)] {
            for word in [vec![1], vec![2, 1], vec![1, 2, 1, 2]] {
                let w = schottky::apply_word(&ReducedWord::new(word).unwrap(), &d, z0).unwrap();
                let a = ext.value(w);
                let b = ext.eval_by_matrix(w).unwrap();
                assert!((a - b).norm() < 1e-10, "{a} vs {b}");
                assert!((a.norm() - mu(z0).unwrap().norm()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn invariance_on_probes() {
        let d = two_circles();
        let ext = InvariantExtension::new(&d, |z: Complex64| Some(0.3 * Complex64::from_polar(1.0, z.re + z.im)));
        let probes: Vec<_> = (0..200)
            .map(|k| {
                let t = k as f64 * 0.731;
                c(-3.0 + 6.0 * (t.sin() * 0.5 + 0.5), -1.5 + 3.0 * (t.cos() * 0.5 + 0.5))
            })
            .collect();
        assert!(ext.invariance_residual(&probes) < 1e-9);
    }

    #[test]
    fn david_profiles() {
        let half = SuperLevelMeasure {
            epsilons: vec![0.1, 0.3, 0.49],
            measures: vec![0.0; 3],
        };
        let p = DavidProfile::david(1.0, 1.0).unwrap();
        assert!(check_david(&half, &p).holds());
        assert!(DavidProfile::david(0.0, 1.0).is_err());
        let lemma = DavidProfile::annulus_construction();
        let bound2 = lemma.bound(0.5);
        assert!((bound2 - (std::f64::consts::PI + 1.0) * (-(2.0f64).exp()).exp()).abs() < 1e-15);
        assert!((bound2 - 2.57e-3).abs() < 2e-5);
        let too_big = SuperLevelMeasure {
            epsilons: vec![0.5],
            measures: vec![1.0],
        };
        assert!(!check_david(&too_big, &lemma).holds());
    }

    fn demo_cantor() -> FatCantorSpec {
        FatCantorSpec::new(c(-0.5, -0.5), 1.0, 24)
    }

    #[test]
    fn annulus_radii_and_values() {
        let spec = AnnulusCoefficientSpec::from_tail_indices(vec![0, 1, 2], demo_cantor()).unwrap();
        assert!((spec.h[0] - (-std::f64::consts::E / 2.0).exp()).abs() < 1e-15);
        assert!((spec.h[0] - 0.25688).abs() < 1e-5);
        assert_eq!(spec.values[0], 0.5);
        assert!((spec.values[1] - 2.0 / 3.0).abs() < 1e-15);
        for n in 1..=3 {
            let h = spec.h[n - 1];
            let bound = std::f64::consts::PI * (-(n as f64).exp()).exp();
            assert!(std::f64::consts::PI * h * h * (spec.m[n - 1] + 1) as f64 <= bound * (1.0 + 1e-12));
        }
        // left endpoints of construction intervals stay in P; 7/32 starts the
        // second depth-2 interval
        let z = spec.p + c(7.0 / 32.0, 0.0);
        assert!(spec.support.contains(z));
        assert_eq!(spec.annulus_index(z), Some(1));
        assert_eq!(spec.eval(z), c(0.5, 0.0));
        // not in P
        assert_eq!(spec.eval(c(0.0, 0.0)), c(0.0, 0.0));
        assert_eq!(spec.eval(c(-5.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn two_circle_coefficient_and_oracle() {
        let d = two_circles();
        let ledger = AreaLedger::build(&d, 90).unwrap();
        let spec = david_coefficient(&ledger, demo_cantor(), 6).unwrap();
        assert_eq!(&spec.m[..4], &[2, 4, 10, 22]);
        assert!((spec.h[0] - 0.14831052541353063).abs() < 1e-15);
        for n in 1..=6 {
            let bound = (std::f64::consts::PI + 1.0) * schottky::threshold(n);
            let v = analytic_superlevel_oracle(&spec, &ledger, n).unwrap();
            assert!(v <= bound, "n={n}: {v} > {bound}");
            assert!(spec.witness_measure(n).unwrap().lower > 0.0);
        }
        let h1 = spec.h[0];
        let v1 = analytic_superlevel_oracle(&spec, &ledger, 1).unwrap();
        assert!(v1 <= std::f64::consts::PI * h1 * h1 * 3.0 + schottky::threshold(1));
        assert!(david_coefficient(&ledger, demo_cantor(), 7).is_err());
    }
}
