//! Toeplitz operators on the Hardy space of the circle.
//!
//! The circle Dirac operator `-i d/dtheta` has eigenbasis `e^{ik theta}` with
//! eigenvalue `k`. The Hardy projection keeps `k >= 0`, zero mode included.

use faer::Mat;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{stabilized_index, IndexReport, SectionFamily, TruncationPolicy};
use crate::matrix::{c64, singular_values, Basis, Label, LabeledMatrix};
use crate::symbol::TrigSymbol;

pub fn dirac_circle_spectrum(k_max: usize) -> Vec<(i64, f64)> {
    let k = k_max as i64;
    (-k..=k).map(|m| (m, m as f64)).collect()
}

/// Rank of the Hardy projection restricted to modes `|k| <= k_max`.
pub fn hardy_rank(k_max: usize) -> usize {
    dirac_circle_spectrum(k_max).iter().filter(|(_, lambda)| *lambda >= 0.0).count()
}

pub fn circle_label(k: i64, comp: usize) -> Label {
    Label::new(0, k, 0, comp as u16)
}

pub fn circle_basis(modes: impl IntoIterator<Item = i64>, l: usize) -> Basis {
    let labels = modes.into_iter().flat_map(|k| (0..l).map(move |c| circle_label(k, c))).collect();
    Basis::new(labels)
}

/// Dense matrix of multiplication by `phi` between mode ranges:
/// entry `((j, a), (k, b)) = coeff(j - k)[a, b]`.
pub fn mode_block(phi: &TrigSymbol, rows: &[i64], cols: &[i64]) -> Mat<c64> {
    let l = phi.size();
    Mat::from_fn(rows.len() * l, cols.len() * l, |r, c| {
        phi.coeff_entry(rows[r / l] - cols[c / l], r % l, c % l)
    })
}

#[derive(Clone, Debug)]
pub struct ToeplitzSection {
    pub symbol: TrigSymbol,
    pub k_max: usize,
    pub matrix: LabeledMatrix,
}

/// Square section of `T_phi` on modes `0..=k_max`.
pub fn toeplitz_section(phi: &TrigSymbol, k_max: usize) -> Result<ToeplitzSection> {
    if k_max < phi.degree() {
        return Err(Error::TruncationTooSmall { k_max, degree: phi.degree() });
    }
    let modes: Vec<i64> = (0..=k_max as i64).collect();
    let basis = circle_basis(modes.iter().copied(), phi.size());
    let matrix = LabeledMatrix::new(basis.clone(), basis, mode_block(phi, &modes, &modes))?;
    Ok(ToeplitzSection { symbol: phi.clone(), k_max, matrix })
}

/// Tall sections of `T_phi`: columns `0..=N`, rows `0..=N + degree`.
///
/// Since `T_phi` moves mode `k` by at most `degree`, the rows hold the full
/// image of the retained columns and no truncation artifact appears.
pub struct ToeplitzFamily {
    symbol: TrigSymbol,
    adjoint: TrigSymbol,
}

impl ToeplitzFamily {
    pub fn new(symbol: &TrigSymbol) -> Self {
        Self { symbol: symbol.clone(), adjoint: symbol.adjoint() }
    }

    fn tall(phi: &TrigSymbol, n: usize) -> Mat<c64> {
        let cols: Vec<i64> = (0..=n as i64).collect();
        let rows: Vec<i64> = (0..=(n + phi.degree()) as i64).collect();
        mode_block(phi, &rows, &cols)
    }
}

impl SectionFamily for ToeplitzFamily {
    fn default_start(&self) -> usize {
        self.symbol.degree() + 8
    }

    fn section(&self, level: usize) -> Result<Mat<c64>> {
        Ok(Self::tall(&self.symbol, level))
    }

    fn adjoint_section(&self, level: usize) -> Result<Mat<c64>> {
        Ok(Self::tall(&self.adjoint, level))
    }
}

pub fn fredholm_index(phi: &TrigSymbol, policy: &TruncationPolicy) -> Result<IndexReport> {
    phi.ensure_invertible()?;
    stabilized_index(&ToeplitzFamily::new(phi), policy)
}

#[derive(Clone, Debug, Serialize)]
pub struct TheoremCheck {
    pub holds: bool,
    pub index: i64,
    pub winding: i64,
    pub report: IndexReport,
}

/// Compares the stabilized index of `T_phi` with minus the winding of `det phi`.
pub fn index_theorem_check(phi: &TrigSymbol, policy: &TruncationPolicy) -> Result<TheoremCheck> {
    let report = fredholm_index(phi, policy)?;
    let winding = phi.winding()?;
    Ok(TheoremCheck { holds: report.converged && report.index == -winding, index: report.index, winding, report })
}

/// Rank of the commutator of the Hardy projection with multiplication by
/// `phi` on the two-sided modes `|k| <= k_max`.
pub fn mode_commutator_rank(phi: &TrigSymbol, k_max: usize) -> Result<usize> {
    if k_max < 2 * phi.degree() {
        return Err(Error::TruncationTooSmall { k_max, degree: 2 * phi.degree() });
    }
    let modes: Vec<i64> = (-(k_max as i64)..=k_max as i64).collect();
    let l = phi.size();
    let mult = mode_block(phi, &modes, &modes);
    let hardy = |i: usize| if modes[i / l] >= 0 { 1.0 } else { 0.0 };
    let comm = Mat::from_fn(mult.nrows(), mult.ncols(), |i, j| mult[(i, j)] * (hardy(i) - hardy(j)));
    let sv = singular_values(comm.as_ref())?;
    let top = sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&s| s > 1e-10 * top.max(1.0)).count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn spectrum_and_hardy_rank() {
        assert_eq!(dirac_circle_spectrum(0), vec![(0, 0.0)]);
        let eig: Vec<f64> = dirac_circle_spectrum(2).iter().map(|p| p.1).collect();
        assert_eq!(eig, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        for k in 0..10 {
            assert_eq!(hardy_rank(k), k + 1);
        }
    }

    #[test]
    fn shift_section() {
        let s = toeplitz_section(&TrigSymbol::monomial(1), 4).unwrap();
        let m = s.matrix.data();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j + 1 { 1.0 } else { 0.0 };
                assert_eq!(m[(i, j)], c(want));
            }
        }
    }

    #[test]
    fn two_plus_z_section() {
        let phi = TrigSymbol::scalar(&[(0, c(2.0)), (1, c(1.0))]).unwrap();
        let m = toeplitz_section(&phi, 2).unwrap().matrix;
        let want = [[2.0, 0.0, 0.0], [1.0, 2.0, 0.0], [0.0, 1.0, 2.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.data()[(i, j)], c(want[i][j]));
            }
        }
        assert!(matches!(toeplitz_section(&TrigSymbol::monomial(3), 2), Err(Error::TruncationTooSmall { .. })));
    }

    #[test]
    fn kernel_with_infinite_support_is_found() {
        let phi = TrigSymbol::scalar(&[(-1, c(1.0)), (1, c(0.27))]).unwrap();
        let r = fredholm_index(&phi, &TruncationPolicy::default()).unwrap();
        assert!(r.converged);
        assert_eq!(r.index, 1);
        assert!(r.truncations.len() > 2);
    }

    #[test]
    fn section_is_hermitian_for_hermitian_symbol() {
        let phi = TrigSymbol::scalar(&[(-1, c64::new(0.5, 0.25)), (0, c(3.0)), (1, c64::new(0.5, -0.25))]).unwrap();
        assert!(toeplitz_section(&phi, 6).unwrap().matrix.hermitian_defect() < 1e-15);
        let psi = TrigSymbol::scalar(&[(0, c(3.0)), (1, c(1.0))]).unwrap();
        assert!(toeplitz_section(&psi, 6).unwrap().matrix.hermitian_defect() > 0.5);
    }

    #[test]
    fn oracle_examples() {
        let p = TruncationPolicy::default();
        let r = fredholm_index(&TrigSymbol::identity(1), &p).unwrap();
        assert_eq!(r.index, 0);
        let r = fredholm_index(&TrigSymbol::monomial(1), &p).unwrap();
        assert_eq!((r.index, r.ker_dim, r.coker_dim), (-1, 0, 1));
        assert!(r.converged);
        let r = fredholm_index(&TrigSymbol::monomial(-3), &p).unwrap();
        assert_eq!((r.index, r.ker_dim), (3, 3));
        let d = TrigSymbol::block_diag(&[
            TrigSymbol::monomial(1),
            TrigSymbol::scalar(&[(0, c(3.0)), (1, c(1.0))]).unwrap(),
        ])
        .unwrap();
        assert_eq!(fredholm_index(&d, &p).unwrap().index, -1);
    }

    #[test]
    fn slowly_decaying_kernel_needs_escalation() {
        let phi = TrigSymbol::scalar(&[(-2, c(3.0)), (-1, c(1.0))]).unwrap();
        let check = index_theorem_check(&phi, &TruncationPolicy::default()).unwrap();
        assert!(check.holds);
        assert_eq!((check.index, check.winding), (2, -2));
        assert_eq!(check.report.truncations, vec![10, 20, 40]);
    }

    #[test]
    fn zero_on_circle_is_rejected() {
        let phi = TrigSymbol::scalar(&[(0, c(1.0)), (1, c(1.0))]).unwrap();
        assert!(matches!(fredholm_index(&phi, &TruncationPolicy::default()), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn commutator_rank_bound() {
        let phi = TrigSymbol::scalar(&[(-2, c(0.3)), (0, c(2.0)), (1, c(1.0))]).unwrap();
        let r = mode_commutator_rank(&phi, 12).unwrap();
        assert!(r <= 2 * phi.degree());
        assert_eq!(mode_commutator_rank(&TrigSymbol::identity(2), 4).unwrap(), 0);
    }
}
