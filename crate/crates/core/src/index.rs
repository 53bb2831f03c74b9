//! Stabilized Fredholm index extraction from growing finite sections.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c64, singular_values};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexReport {
    pub index: i64,
    pub ker_dim: usize,
    pub coker_dim: usize,
    pub sigma_gap: f64,
    pub truncations: Vec<usize>,
    pub converged: bool,
}

impl IndexReport {
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NoConvergence(Box::new(self)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// First truncation level; `None` lets the operator family choose.
    pub start: Option<usize>,
    pub max_attempts: usize,
    /// Singular values below `rel_threshold * sigma_max` count as kernel.
    pub rel_threshold: f64,
    pub min_gap: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self { start: None, max_attempts: 4, rel_threshold: 1e-8, min_gap: 1e3 }
    }
}

impl TruncationPolicy {
    pub fn with_max_attempts(mut self, n: usize) -> Self {
        self.max_attempts = n.max(1);
        self
    }

    pub fn with_start(mut self, start: usize) -> Self {
        self.start = Some(start);
        self
    }
}

/// An operator that can be cut down to finite sections at any level.
///
/// `section(level)` must be an exact restriction: the columns span a finite
/// piece of the domain and the rows cover the whole image of those columns,
/// so the section has no truncation artifacts and its kernel is a subspace
/// of the operator's kernel. `adjoint_section` does the same for the adjoint.
pub trait SectionFamily {
    fn default_start(&self) -> usize;
    fn section(&self, level: usize) -> Result<Mat<c64>>;
    fn adjoint_section(&self, level: usize) -> Result<Mat<c64>>;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallCount {
    pub dim: usize,
    /// Distance of the spectrum from the threshold `tau`: the smaller of
    /// `smallest_kept / tau` and `tau / largest_small`.
    pub gap: f64,
    /// Smallest retained singular value relative to `sigma_max`.
    pub floor: f64,
}

/// Counts singular values below `rel * sigma_max` and measures how cleanly
/// the threshold separates them from the rest.
pub fn count_small(sv: &[f64], rel: f64) -> SmallCount {
    let sigma_max = sv.iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return SmallCount { dim: sv.len(), gap: 0.0, floor: f64::INFINITY };
    }
    let tau = rel * sigma_max;
    let dim = sv.iter().filter(|&&s| s < tau).count();
    let largest_small = sv.iter().copied().filter(|&s| s < tau).fold(0.0, f64::max);
    let smallest_kept = sv.iter().copied().filter(|&s| s >= tau).fold(f64::INFINITY, f64::min);
    let gap = (smallest_kept / tau).min(tau / largest_small.max(f64::EPSILON * sigma_max));
    SmallCount { dim, gap, floor: smallest_kept / sigma_max }
}

/// Kernel dimension of a section; a wide section has at least
/// `ncols - nrows` kernel directions that carry no singular value.
pub fn kernel_count(section: &Mat<c64>, rel: f64) -> Result<SmallCount> {
    let mut c = count_small(&singular_values(section.as_ref())?, rel);
    c.dim += section.ncols().saturating_sub(section.nrows());
    Ok(c)
}

/// Largest allowed drop of the retained floor between consecutive levels.
/// Kernel vectors with infinite support show up as singular values that
/// shrink geometrically with the level; a genuine floor does not move.
pub const FLOOR_DRIFT: f64 = 0.5;

/// Doubles the level until two consecutive sections agree on kernel and
/// cokernel dimensions, the threshold gap exceeds `min_gap`, and the
/// smallest retained singular values have settled.
pub fn stabilized_index(family: &dyn SectionFamily, policy: &TruncationPolicy) -> Result<IndexReport> {
    let mut level = policy.start.unwrap_or_else(|| family.default_start()).max(1);
    let mut truncations = Vec::new();
    let mut history: Vec<(usize, usize, f64, f64)> = Vec::new();
    let mut report = None;
    for _ in 0..policy.max_attempts.max(1) {
        let ker = kernel_count(&family.section(level)?, policy.rel_threshold)?;
        let coker = kernel_count(&family.adjoint_section(level)?, policy.rel_threshold)?;
        truncations.push(level);
        history.push((ker.dim, coker.dim, ker.floor, coker.floor));
        let gap = ker.gap.min(coker.gap);
        let agreed = match history.as_slice() {
            [.., a, b] => {
                let settled = |prev: f64, cur: f64| !prev.is_finite() || cur >= FLOOR_DRIFT * prev;
                (a.0, a.1) == (b.0, b.1) && settled(a.2, b.2) && settled(a.3, b.3)
            }
            _ => false,
        };
        let converged = agreed && gap >= policy.min_gap;
        report = Some(IndexReport {
            index: ker.dim as i64 - coker.dim as i64,
            ker_dim: ker.dim,
            coker_dim: coker.dim,
            sigma_gap: gap,
            truncations: truncations.clone(),
            converged,
        });
        if converged {
            break;
        }
        level *= 2;
    }
    Ok(report.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_gaps() {
        let c = count_small(&[3.0, 1.0, 1e-12, 0.0], 1e-8);
        assert_eq!(c.dim, 2);
        assert!((c.gap - 3e4).abs() / 3e4 < 1e-12);
        assert!((c.floor - 1.0 / 3.0).abs() < 1e-15);
        let none = count_small(&[2.0, 1.0], 1e-8);
        assert_eq!(none.dim, 0);
        assert!((none.gap - 1e-8 / f64::EPSILON).abs() < 1.0);
    }

    struct Shift;

    impl SectionFamily for Shift {
        fn default_start(&self) -> usize {
            4
        }
        fn section(&self, n: usize) -> Result<Mat<c64>> {
            Ok(Mat::from_fn(n + 2, n + 1, |i, j| if i == j + 1 { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }))
        }
        fn adjoint_section(&self, n: usize) -> Result<Mat<c64>> {
            Ok(Mat::from_fn(n, n + 1, |i, j| if j == i + 1 { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }))
        }
    }

    #[test]
    fn unilateral_shift_has_index_minus_one() {
        let r = stabilized_index(&Shift, &TruncationPolicy::default()).unwrap();
        assert_eq!(r.index, -1);
        assert_eq!((r.ker_dim, r.coker_dim), (0, 1));
        assert!(r.converged);
        assert_eq!(r.truncations, vec![4, 8]);
    }

    #[test]
    fn single_attempt_never_converges() {
        let r = stabilized_index(&Shift, &TruncationPolicy::default().with_max_attempts(1)).unwrap();
        assert!(!r.converged);
        assert!(matches!(r.require_converged(), Err(Error::NoConvergence(_))));
    }
}
