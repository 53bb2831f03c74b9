//! The cylinder `R x S^1` in the basis `a_n (x) e_k`.
//!
//! With `c = (t - i)/(t + i)` acting as the shift `a_n -> a_{n+1}` and `P`
//! the Hardy projection on the circle, the operator `T_phi` on the cylinder
//! has the block form
//!
//! ```text
//!   [ 1 (x) P phi P        c (x) P phi (1 - P)       ]
//!   [ c^-1 (x) (1 - P) phi P   1 (x) (1 - P) phi (1 - P) ]
//! ```
//!
//! and its compression to `n >= 0` splits into the Toeplitz operator on
//! `a_0 (x) H_+` plus an invertible remainder.

pub mod bounds;
pub mod fiber;

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{stabilized_index, IndexReport, SectionFamily, TruncationPolicy};
use crate::matrix::{c64, singular_values, Basis, GradingOp, GradingRole, Label, LabeledMatrix};
use crate::symbol::{TrigSymbol, DEFAULT_TOL};
use crate::toeplitz::toeplitz_section;

pub use bounds::{verify_scalar_bounds, BoundFamily, ScalarBoundsReport, ScalarGrids};
pub use fiber::{
    fiber_d_s, fiber_resolvent_bound_sweep, homotopy_continuity_sweep, ContinuityReport, FiberGrid, FiberSweep,
};

/// Half of the circle spectrum a mode belongs to: 0 for `H_+`, 1 for `H_-`.
pub fn half(k: i64) -> u8 {
    if k >= 0 {
        0
    } else {
        1
    }
}

pub fn cylinder_label(n: i64, k: i64, comp: usize) -> Label {
    Label::new(n, k, half(k), comp as u16)
}

/// Line shift applied by the block of `T_phi` from circle mode `k` to `j`.
fn line_step(j: i64, k: i64) -> i64 {
    match (j >= 0, k >= 0) {
        (true, false) => 1,
        (false, true) => -1,
        _ => 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CylinderTruncation {
    pub n_min: i64,
    pub n_max: i64,
    /// Reporting window `|k| <= k_max`.
    pub k_max: usize,
    pub l: usize,
    /// Extra circle modes kept beyond the reporting window.
    pub margin: usize,
}

impl CylinderTruncation {
    /// Symmetric line range with the margin pinned to `degree + 4`.
    pub fn for_symbol(phi: &TrigSymbol, n_max: i64, k_max: usize) -> Self {
        Self { n_min: -n_max.max(1), n_max, k_max, l: phi.size(), margin: phi.degree() + 4 }
    }

    pub fn validate(&self, phi: &TrigSymbol) -> Result<()> {
        if !(self.n_min <= -1 && self.n_max >= 0) {
            return Err(Error::InvalidParameter(format!(
                "line range [{}, {}] must contain -1 and 0",
                self.n_min, self.n_max
            )));
        }
        if self.l != phi.size() {
            return Err(Error::InvalidParameter(format!("truncation has l = {} but symbol is {}x{}", self.l, phi.size(), phi.size())));
        }
        if self.margin < phi.degree() || self.k_max < phi.degree() {
            return Err(Error::TruncationTooSmall { k_max: self.k_max.min(self.margin), degree: phi.degree() });
        }
        Ok(())
    }

    pub fn circle_cap(&self) -> i64 {
        (self.k_max + self.margin) as i64
    }

    pub fn basis(&self) -> Basis {
        let cap = self.circle_cap();
        let mut labels = Vec::new();
        for n in self.n_min..=self.n_max {
            for k in -cap..=cap {
                for c in 0..self.l {
                    labels.push(cylinder_label(n, k, c));
                }
            }
        }
        let (n_min, n_max, k_max) = (self.n_min, self.n_max, self.k_max as i64);
        Basis::from_fn(labels, |l| l.line == n_min || l.line == n_max || l.circle.abs() > k_max)
    }
}

#[derive(Clone, Debug)]
pub struct CylinderOperator {
    pub symbol: TrigSymbol,
    pub trunc: CylinderTruncation,
    pub matrix: LabeledMatrix,
    pub tridiagonal_in_n: bool,
}

/// Fills `m` with the entries of `T_phi` whose source and target both lie in
/// the bases of `m`.
fn fill_t_phi(phi: &TrigSymbol, m: &mut LabeledMatrix) {
    let d = phi.degree() as i64;
    let l = phi.size();
    let cols: Vec<Label> = m.cols().labels().to_vec();
    for col in cols {
        let k = col.circle;
        let b = col.comp as usize;
        for j in k - d..=k + d {
            let row_n = col.line + line_step(j, k);
            for a in 0..l {
                let v = phi.coeff_entry(j - k, a, b);
                if v != c64::new(0.0, 0.0) {
                    m.add_at(&cylinder_label(row_n, j, a), &col, v);
                }
            }
        }
    }
}

fn max_line_coupling(m: &LabeledMatrix) -> i64 {
    let d = m.data();
    let mut worst = 0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if d[(i, j)] != c64::new(0.0, 0.0) {
                worst = worst.max((m.rows().label(i).line - m.cols().label(j).line).abs());
            }
        }
    }
    worst
}

pub fn build_t_phi(phi: &TrigSymbol, trunc: CylinderTruncation) -> Result<CylinderOperator> {
    trunc.validate(phi)?;
    let basis = trunc.basis();
    let mut matrix = LabeledMatrix::zeros(basis.clone(), basis);
    fill_t_phi(phi, &mut matrix);
    let tridiagonal_in_n = max_line_coupling(&matrix) <= 1;
    Ok(CylinderOperator { symbol: phi.clone(), trunc, matrix, tridiagonal_in_n })
}

impl CylinderOperator {
    /// Square compression to `n >= 0`.
    pub fn compressed(&self) -> LabeledMatrix {
        self.matrix.restrict(|l| l.line >= 0, |l| l.line >= 0)
    }

    /// Grading `2 P_hat - 1`, `+1` on `n >= 0`.
    pub fn line_grading(&self) -> GradingOp {
        GradingOp::from_fn(self.matrix.rows().clone(), GradingRole::Partition, |l| l.line >= 0)
    }

    pub fn compress_index(&self, policy: &TruncationPolicy) -> Result<IndexReport> {
        compress_index(&self.symbol, policy)
    }
}

/// Tall sections of the compression of `T_phi` to `n >= 0`.
///
/// At level `K` the columns are `0 <= n <= n_max`, `|k| <= K` and the rows
/// `0 <= n <= n_max + 1`, `|k| <= K + degree + 4`, which contain the image of
/// every column. `n_max` grows with `K`: 2 at the starting level, doubling
/// whenever `K` doubles.
pub struct CylinderFamily {
    symbol: TrigSymbol,
    adjoint: TrigSymbol,
}

impl CylinderFamily {
    pub fn new(phi: &TrigSymbol) -> Self {
        Self { symbol: phi.clone(), adjoint: phi.adjoint() }
    }

    pub fn line_cap(&self, level: usize) -> i64 {
        ((2 * level).div_ceil(self.default_start()) as i64).max(2)
    }

    fn tall(&self, phi: &TrigSymbol, level: usize) -> Result<Mat<c64>> {
        let n_max = self.line_cap(level);
        let k = level as i64;
        let margin = (phi.degree() + 4) as i64;
        let l = phi.size();
        let labels = |n_hi: i64, cap: i64| {
            let mut v = Vec::new();
            for n in 0..=n_hi {
                for kk in -cap..=cap {
                    for c in 0..l {
                        v.push(cylinder_label(n, kk, c));
                    }
                }
            }
            Basis::new(v)
        };
        let mut m = LabeledMatrix::zeros(labels(n_max + 1, k + margin), labels(n_max, k));
        fill_t_phi(phi, &mut m);
        Ok(m.data().to_owned())
    }
}

impl SectionFamily for CylinderFamily {
    fn default_start(&self) -> usize {
        self.symbol.degree() + 8
    }

    fn section(&self, level: usize) -> Result<Mat<c64>> {
        self.tall(&self.symbol, level)
    }

    fn adjoint_section(&self, level: usize) -> Result<Mat<c64>> {
        self.tall(&self.adjoint, level)
    }
}

/// Stabilized index of the compression of `T_phi` to `n >= 0`.
pub fn compress_index(phi: &TrigSymbol, policy: &TruncationPolicy) -> Result<IndexReport> {
    phi.ensure_invertible()?;
    stabilized_index(&CylinderFamily::new(phi), policy)
}

#[derive(Clone, Debug, Serialize)]
pub struct BlockSplitReport {
    /// Largest entry coupling `X_0 = a_0 (x) H_+` with its complement.
    pub cross_norm: f64,
    /// Largest entrywise difference between the `X_0` block and the Toeplitz section.
    pub x0_deviation: f64,
    /// Largest entry of `P T_psi P T_phi P - 1` on interior columns of `X_1`.
    pub x1_residual: f64,
    pub inverse_degree: usize,
    pub inverse_tail_tol: f64,
}

/// Checks that the compression of `T_phi` is the Toeplitz operator on `X_0`
/// plus an operator on `X_1` inverted by the compression of `T_{phi^-1}`.
pub fn block_split_check(phi: &TrigSymbol, inverse_degree: usize) -> Result<BlockSplitReport> {
    let psi = phi.invert(inverse_degree, DEFAULT_TOL)?;
    let reach = phi.degree() + psi.degree();
    let trunc = CylinderTruncation { n_min: -1, n_max: 3, k_max: reach + 8, l: phi.size(), margin: reach + 4 };
    let op = build_t_phi(phi, trunc)?;
    let op_inv = build_t_phi(&psi, trunc)?;
    let c = op.compressed();
    let c_inv = op_inv.compressed();
    let in_x0 = |l: &Label| l.line == 0 && l.circle >= 0;

    let mut cross = 0.0f64;
    for i in 0..c.nrows() {
        for j in 0..c.ncols() {
            if in_x0(&c.rows().label(i)) != in_x0(&c.cols().label(j)) {
                cross = cross.max(c.data()[(i, j)].norm());
            }
        }
    }
    if cross > 1e-10 {
        return Err(Error::SplitViolated { block: "X0/X1 coupling".into(), norm: cross });
    }

    let x0 = c.restrict(in_x0, in_x0);
    let section = toeplitz_section(phi, trunc.circle_cap() as usize)?;
    let mut x0_dev = 0.0f64;
    for i in 0..x0.nrows() {
        for j in 0..x0.ncols() {
            let v = section.matrix.get(&reduce(x0.rows().label(i)), &reduce(x0.cols().label(j)));
            x0_dev = x0_dev.max((x0.data()[(i, j)] - v).norm());
        }
    }
    if x0_dev > 1e-12 {
        return Err(Error::SplitViolated { block: "X0 vs Toeplitz section".into(), norm: x0_dev });
    }

    let prod = c_inv.matmul(&c)?;
    let interior_cap = trunc.circle_cap() - phi.degree() as i64;
    let mut residual = 0.0f64;
    for j in 0..prod.ncols() {
        let col = prod.cols().label(j);
        if in_x0(&col) || col.line > trunc.n_max - 1 || col.circle.abs() > interior_cap {
            continue;
        }
        for i in 0..prod.nrows() {
            let want = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((prod.data()[(i, j)] - c64::new(want, 0.0)).norm());
        }
    }
    if residual > 1e-8 {
        return Err(Error::SplitViolated { block: "X1 inverse composition".into(), norm: residual });
    }
    Ok(BlockSplitReport {
        cross_norm: cross,
        x0_deviation: x0_dev,
        x1_residual: residual,
        inverse_degree,
        inverse_tail_tol: psi.tail_tol(),
    })
}

fn reduce(l: Label) -> Label {
    crate::toeplitz::circle_label(l.circle, l.comp as usize)
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorSpectrum {
    pub leading: Vec<f64>,
    /// Largest singular value beyond the leading `2 l degree`.
    pub remainder: f64,
}

/// Singular values of `[P_hat, T_phi]` on the two-sided truncation.
pub fn hardy_commutator_spectrum(phi: &TrigSymbol, trunc: CylinderTruncation) -> Result<CommutatorSpectrum> {
    let op = build_t_phi(phi, trunc)?;
    let g = op.line_grading();
    let m = op.matrix.data();
    let p = |i: usize| if g.sign(i) > 0.0 { 1.0 } else { 0.0 };
    let comm = Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (p(i) - p(j)));
    let sv = singular_values(comm.as_ref())?;
    let r = 2 * phi.size() * phi.degree();
    Ok(CommutatorSpectrum {
        leading: sv.iter().copied().take(r).collect(),
        remainder: sv.get(r).copied().unwrap_or(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toeplitz::fredholm_index;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    fn two_plus_z() -> TrigSymbol {
        TrigSymbol::scalar(&[(0, c(2.0)), (1, c(1.0))]).unwrap()
    }

    #[test]
    fn constant_symbol_gives_identity() {
        let phi = TrigSymbol::identity(2);
        let op = build_t_phi(&phi, CylinderTruncation::for_symbol(&phi, 2, 3)).unwrap();
        let d = op.matrix.data();
        for i in 0..op.matrix.nrows() {
            for j in 0..op.matrix.ncols() {
                assert_eq!(d[(i, j)], c(if i == j { 1.0 } else { 0.0 }));
            }
        }
    }

    #[test]
    fn shift_crosses_cut_once_per_line_mode() {
        let phi = TrigSymbol::monomial(1);
        let trunc = CylinderTruncation::for_symbol(&phi, 3, 4);
        let op = build_t_phi(&phi, trunc).unwrap();
        assert!(op.tridiagonal_in_n);
        let mut up = 0;
        for n in trunc.n_min..trunc.n_max {
            let v = op.matrix.get(&cylinder_label(n + 1, 0, 0), &cylinder_label(n, -1, 0));
            if v == c(1.0) {
                up += 1;
            }
        }
        assert_eq!(up as i64, trunc.n_max - trunc.n_min);
        let coupling: usize = (0..op.matrix.ncols())
            .flat_map(|j| (0..op.matrix.nrows()).map(move |i| (i, j)))
            .filter(|&(i, j)| {
                let r = op.matrix.rows().label(i);
                let cl = op.matrix.cols().label(j);
                r.line != cl.line && op.matrix.data()[(i, j)] != c(0.0)
            })
            .count();
        assert_eq!(coupling as i64, trunc.n_max - trunc.n_min);
    }

    #[test]
    fn truncation_is_validated() {
        let phi = TrigSymbol::monomial(3);
        let mut t = CylinderTruncation::for_symbol(&phi, 2, 8);
        t.margin = 1;
        assert!(matches!(build_t_phi(&phi, t), Err(Error::TruncationTooSmall { .. })));
        let mut t = CylinderTruncation::for_symbol(&phi, 2, 8);
        t.n_min = 0;
        assert!(build_t_phi(&phi, t).is_err());
    }

    #[test]
    fn compressed_index_matches_circle() {
        let p = TruncationPolicy::default();
        for phi in [TrigSymbol::monomial(1), TrigSymbol::identity(1), two_plus_z()] {
            let a = compress_index(&phi, &p).unwrap();
            let b = fredholm_index(&phi, &p).unwrap();
            assert!(a.converged);
            assert_eq!(a.index, b.index);
        }
        let phi = TrigSymbol::scalar(&[(-2, c(3.0)), (-1, c(1.0))]).unwrap();
        assert_eq!(compress_index(&phi, &p).unwrap().index, 2);
    }

    #[test]
    fn block_split_examples() {
        let r = block_split_check(&TrigSymbol::monomial(1), 40).unwrap();
        assert!(r.x0_deviation <= 1e-12);
        let r = block_split_check(&TrigSymbol::identity(1), 40).unwrap();
        assert_eq!(r.x1_residual, 0.0);
        let r = block_split_check(&two_plus_z(), 40).unwrap();
        assert!(r.x1_residual <= 1e-8);
        assert!(r.cross_norm == 0.0);
    }

    #[test]
    fn commutator_is_finite_rank() {
        let phi = TrigSymbol::block_diag(&[TrigSymbol::monomial(1), two_plus_z()]).unwrap();
        let s = hardy_commutator_spectrum(&phi, CylinderTruncation::for_symbol(&phi, 3, 6)).unwrap();
        assert!(s.remainder < 1e-10);
        assert_eq!(s.leading.len(), 4);
    }
}
