//! Reduced words of the reflection group, per-word areas of the tiles `T(Ω′)`,
//! the tail index `M(n)` and point location in the fundamental domain.
//!
//! Nonidentity words are enumerated in length-lexicographic order; the `j`-th
//! entry of a ledger (1-based) is `T_j`, the identity being `T_0`.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::geometry::{Circle, CircleDomain, ConjMoebius};

/// Default enumeration depth for ledgers.
pub const DEFAULT_DEPTH: usize = 8;
/// Default number of reflections before a point is declared to be on the limit set.
pub const DEFAULT_REDUCTION_DEPTH: usize = 64;
/// Largest `n` for which `e^{-e^n}` is a normal double.
pub const SCALE_CAP: usize = 6;
/// Default cap on the number of enumerated words.
pub const DEFAULT_WORD_CAP: usize = 4_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct ReducedWord(Vec<usize>);

impl ReducedWord {
    pub fn identity() -> Self {
        ReducedWord(Vec::new())
    }

    /// Letters are 1-based generator indices with no two adjacent letters equal.
    pub fn new(letters: Vec<usize>) -> Result<Self> {
        if letters.contains(&0) || letters.windows(2).any(|p| p[0] == p[1]) {
            return Err(Error::NotReduced(letters));
        }
        Ok(ReducedWord(letters))
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<usize> {
        self.0.last().copied()
    }

    /// `self` followed by `letter`, if the result is reduced.
    pub fn extend(&self, letter: usize) -> Option<ReducedWord> {
        if letter == 0 || self.last() == Some(letter) {
            return None;
        }
        let mut v = self.0.clone();
        v.push(letter);
        Some(ReducedWord(v))
    }
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub words: Vec<ReducedWord>,
    /// False when the word cap cut the enumeration short.
    pub complete: bool,
}

/// All nonidentity reduced words of length at most `max_length`, in
/// length-lexicographic order, stopping once `cap` words are produced.
pub fn enumerate_words(n_generators: usize, max_length: usize, cap: usize) -> Result<Enumeration> {
    if n_generators == 0 {
        return Err(Error::InvalidArgument("at least one generator is required".into()));
    }
    let mut words = Vec::new();
    let mut level = vec![ReducedWord::identity()];
    for _ in 0..max_length {
        let mut next = Vec::new();
        for w in &level {
            for letter in 1..=n_generators {
                if let Some(x) = w.extend(letter) {
                    if words.len() + next.len() >= cap {
                        words.extend(next);
                        return Ok(Enumeration {
                            words,
                            complete: false,
                        });
                    }
                    next.push(x);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        words.extend(next.iter().cloned());
        level = next;
    }
    Ok(Enumeration {
        words,
        complete: true,
    })
}

/// `R_{i_1} ∘ ⋯ ∘ R_{i_k}`.
pub fn word_to_map(word: &ReducedWord, domain: &CircleDomain) -> Result<ConjMoebius> {
    let mut t = ConjMoebius::identity();
    for &letter in word.letters() {
        t = t.compose(&domain.circle(letter)?.as_conj_moebius());
    }
    Ok(t)
}

/// Applies the word to a point one reflection at a time, innermost first.
pub fn apply_word(word: &ReducedWord, domain: &CircleDomain, z: Complex64) -> Result<Complex64> {
    let mut w = z;
    for &letter in word.letters().iter().rev() {
        w = domain.circle(letter)?.reflect(w)?;
    }
    Ok(w)
}

/// Image of the closed disk `D_j` under a word, by successive inversive images.
pub fn word_disk(word: &ReducedWord, domain: &CircleDomain, j: usize) -> Result<Circle> {
    let mut disk = *domain.circle(j)?;
    for &letter in word.letters().iter().rev() {
        disk = domain.circle(letter)?.reflect_circle(&disk)?;
    }
    Ok(disk)
}

/// Uniform bound on the ratio between consecutive level totals: the largest
/// total area distortion of the reflections `R_i` (`i ≠ j`) on the disk `D_j`.
pub fn contraction_ratio(domain: &CircleDomain) -> f64 {
    let cs = &domain.circles;
    (0..cs.len())
        .map(|j| {
            (0..cs.len())
                .filter(|&i| i != j)
                .map(|i| {
                    let dist = (cs[i].center() - cs[j].center()).norm() - cs[j].radius();
                    if dist <= 0.0 {
                        f64::INFINITY
                    } else {
                        (cs[i].radius() / dist).powi(4)
                    }
                })
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    pub word: ReducedWord,
    pub outer: Circle,
    /// `m(T(Ω′))`: outer disk area minus the areas of its child disks.
    pub area: f64,
}

#[derive(Debug, Clone)]
pub struct AreaLedger {
    pub entries: Vec<LedgerEntry>,
    /// `level_totals[k-1]` is the total area of the disks nested `k` deep, i.e.
    /// of everything not covered by entries of length at most `k`.
    pub level_totals: Vec<f64>,
    pub contraction_ratio: f64,
    /// Area of the original closed disks.
    pub disk_area: f64,
    depth: usize,
    /// `suffix[i] = Σ_{j ≥ i} entries[j].area`, summed from the small end.
    suffix: Vec<f64>,
}

#[derive(Serialize)]
struct LedgerHeader<'a> {
    depth: usize,
    contraction_ratio: f64,
    level_totals: &'a [f64],
}

impl AreaLedger {
    /// Exact per-word areas for all nonidentity words of length at most `depth`.
    pub fn build(domain: &CircleDomain, depth: usize) -> Result<Self> {
        Self::build_capped(domain, depth, DEFAULT_WORD_CAP)
    }

    pub fn build_capped(domain: &CircleDomain, depth: usize, cap: usize) -> Result<Self> {
        let report = domain.validate();
        if !report.overlaps.is_empty() {
            return Err(Error::InvalidDomain(format!("overlapping circles: {:?}", report.overlaps)));
        }
        if depth == 0 {
            return Err(Error::InvalidArgument("ledger depth must be at least 1".into()));
        }
        let g = domain.circles.len();
        if g == 0 {
            return Err(Error::InvalidDomain("no circles".into()));
        }
        let word_count: f64 = (1..=depth).map(|k| g as f64 * ((g - 1) as f64).powi(k as i32 - 1)).sum();
        if word_count > cap as f64 {
            return Err(Error::InvalidArgument(format!(
                "{word_count} words exceed the cap of {cap}"
            )));
        }

        let mut entries = Vec::new();
        let mut level_totals = Vec::with_capacity(depth);
        // (word, outer disk) at the current length
        let mut level: Vec<(ReducedWord, Circle)> = (1..=g)
            .map(|j| (ReducedWord(vec![j]), domain.circles[j - 1]))
            .collect();
        for _ in 0..depth {
            let mut next = Vec::with_capacity(level.len() * g.saturating_sub(1));
            let mut total = 0.0;
            for (word, outer) in &level {
                let mut children = 0.0;
                for j in 1..=g {
                    if let Some(child_word) = word.extend(j) {
                        let child = word_disk(word, domain, j)?;
                        children += child.area();
                        next.push((child_word, child));
                    }
                }
                total += children;
                entries.push(LedgerEntry {
                    word: word.clone(),
                    outer: *outer,
                    area: (outer.area() - children).max(0.0),
                });
            }
            level_totals.push(total);
            level = next;
        }

        let mut suffix = vec![0.0; entries.len() + 1];
        for i in (0..entries.len()).rev() {
            suffix[i] = suffix[i + 1] + entries[i].area;
        }
        Ok(AreaLedger {
            entries,
            level_totals,
            contraction_ratio: contraction_ratio(domain),
            disk_area: domain.circles.iter().map(Circle::area).sum(),
            depth,
            suffix,
        })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Errors when no uniform contraction is available for extrapolation.
    pub fn check_contraction(&self) -> Result<f64> {
        if self.contraction_ratio < 1.0 {
            Ok(self.contraction_ratio)
        } else {
            Err(Error::NoContraction(self.contraction_ratio))
        }
    }

    /// Upper bound on the total area of the tiles of length greater than `level`.
    /// Exact within the enumerated depth; beyond it, extrapolated by the
    /// contraction ratio.
    pub fn tail_bound(&self, level: usize) -> Result<f64> {
        if level == 0 {
            return Ok(self.disk_area);
        }
        if level <= self.depth {
            return Ok(self.level_totals[level - 1]);
        }
        let q = self.check_contraction()?;
        Ok(self.level_totals[self.depth - 1] * q.powi((level - self.depth) as i32))
    }

    /// Area of the disks nested `level` deep, which cover the limit set.
    pub fn limit_set_area_upper(&self, level: usize) -> Result<f64> {
        if level > self.depth {
            return Err(Error::InsufficientDepth {
                depth: self.depth,
                required: Some(level),
            });
        }
        Ok(if level == 0 {
            self.disk_area
        } else {
            self.level_totals[level - 1]
        })
    }

    /// `Σ_{j > m} m(T_j(Ω′))` with `m` counted among nonidentity entries.
    pub fn tail_sum(&self, m: usize) -> f64 {
        self.suffix[m.min(self.entries.len())] + self.level_totals[self.depth - 1]
    }

    /// Smallest `M` with `Σ_{j > M} m(T_j(Ω′)) < e^{-e^n}`, without
    /// monotonization.
    pub fn raw_tail_index(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        if n > SCALE_CAP {
            return Err(Error::ScaleCap { n, cap: SCALE_CAP });
        }
        let target = threshold(n);
        let tail = self.level_totals[self.depth - 1];
        if tail >= target {
            return Err(Error::InsufficientDepth {
                depth: self.depth,
                required: self.required_depth(target),
            });
        }
        // tail_sum is nonincreasing in m, so bisect for the first m below target
        let (mut lo, mut hi) = (0usize, self.entries.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.tail_sum(mid) < target {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(lo)
    }

    /// `M(1), …, M(n_max)`, made strictly increasing by a running maximum.
    pub fn tail_indices(&self, n_max: usize) -> Result<Vec<usize>> {
        let mut out: Vec<usize> = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            let raw = self.raw_tail_index(n)?;
            let m = match out.last() {
                Some(&prev) if raw <= prev => prev + 1,
                _ => raw,
            };
            out.push(m);
        }
        Ok(out)
    }

    pub fn tail_index(&self, n: usize) -> Result<usize> {
        Ok(*self.tail_indices(n)?.last().expect("n >= 1"))
    }

    fn required_depth(&self, target: f64) -> Option<usize> {
        let q = self.check_contraction().ok()?;
        if q == 0.0 {
            return Some(self.depth);
        }
        let mut level = self.depth;
        let mut bound = self.level_totals[self.depth - 1];
        while bound >= target {
            bound *= q;
            level += 1;
            if level > 100_000 {
                return None;
            }
        }
        Some(level)
    }

    /// JSON lines: a header, then one line per entry.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        let header = LedgerHeader {
            depth: self.depth,
            contraction_ratio: self.contraction_ratio,
            level_totals: &self.level_totals,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for e in &self.entries {
            serde_json::to_writer(&mut out, &json!({"word": e.word, "outer": e.outer, "area": e.area}))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// `e^{-e^n}`.
pub fn threshold(n: usize) -> f64 {
    (-(n as f64).exp()).exp()
}

/// Where a point lands after reflecting it into the fundamental domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    /// `w = T(z)` with `T` the word and `z ∈ Ω′`.
    Resolved {
        word: ReducedWord,
        representative: Complex64,
    },
    /// The point went through a circle center, so `w = T(∞)`.
    Infinity { word: ReducedWord },
    /// `max_depth` reflections did not reach `Ω′`.
    LimitSet,
}

/// Reflects `w` across any circle whose open disk contains it until it lies in
/// `Ω′`. Points on circles count as in `Ω′`.
pub fn reduce_to_fundamental(domain: &CircleDomain, w: Complex64, max_depth: usize) -> Reduction {
    let mut letters = Vec::new();
    let mut z = w;
    loop {
        let Some(j) = domain.disk_containing(z) else {
            return Reduction::Resolved {
                word: ReducedWord(letters),
                representative: z,
            };
        };
        if letters.len() >= max_depth {
            return Reduction::LimitSet;
        }
        letters.push(j + 1);
        match domain.circles[j].reflect(z) {
            Ok(next) => z = next,
            Err(_) => return Reduction::Infinity { word: ReducedWord(letters) },
        }
    }
}
