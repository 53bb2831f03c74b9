//! Dense complex matrices whose rows and columns carry basis labels.

use std::collections::HashMap;

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

pub use faer::c64;

use crate::error::{Error, Result};

/// A basis vector of one of the model spaces.
///
/// `line` is the line mode `n` (or the t-index on a grid), `circle` the
/// circle mode `k`, `spinor` the bundle component and `comp` the matrix
/// index of the symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Label {
    pub line: i64,
    pub circle: i64,
    pub spinor: u8,
    pub comp: u16,
}

impl Label {
    pub const fn new(line: i64, circle: i64, spinor: u8, comp: u16) -> Self {
        Self { line, circle, spinor, comp }
    }
}

/// Ordered list of labels. Each label may be flagged as an edge label,
/// meaning the truncation cut off part of the operator's action there.
#[derive(Clone, Debug)]
pub struct Basis {
    labels: Vec<Label>,
    edge: Vec<bool>,
    lookup: HashMap<Label, usize>,
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels
    }
}

impl Basis {
    pub fn new(labels: Vec<Label>) -> Self {
        let edge = vec![false; labels.len()];
        Self::with_edges(labels, edge)
    }

    pub fn with_edges(labels: Vec<Label>, edge: Vec<bool>) -> Self {
        assert_eq!(labels.len(), edge.len());
        let lookup = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect::<HashMap<_, _>>();
        assert_eq!(lookup.len(), labels.len(), "duplicate basis label");
        Self { labels, edge, lookup }
    }

    pub fn from_fn(labels: Vec<Label>, is_edge: impl Fn(&Label) -> bool) -> Self {
        let edge = labels.iter().map(&is_edge).collect();
        Self::with_edges(labels, edge)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn is_edge(&self, i: usize) -> bool {
        self.edge[i]
    }

    pub fn position(&self, label: &Label) -> Option<usize> {
        self.lookup.get(label).copied()
    }

    pub fn select(&self, keep: impl Fn(&Label) -> bool) -> (Basis, Vec<usize>) {
        let idx: Vec<usize> = (0..self.len()).filter(|&i| keep(&self.labels[i])).collect();
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        let edge = idx.iter().map(|&i| self.edge[i]).collect();
        (Basis::with_edges(labels, edge), idx)
    }
}

#[derive(Clone, Debug)]
pub struct LabeledMatrix {
    rows: Basis,
    cols: Basis,
    data: Mat<c64>,
}

impl LabeledMatrix {
    pub fn new(rows: Basis, cols: Basis, data: Mat<c64>) -> Result<Self> {
        if data.nrows() != rows.len() || data.ncols() != cols.len() {
            return Err(Error::BasisMismatch(format!(
                "data is {}x{} but bases have {} rows and {} columns",
                data.nrows(),
                data.ncols(),
                rows.len(),
                cols.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: Basis, cols: Basis) -> Self {
        let data = Mat::zeros(rows.len(), cols.len());
        Self { rows, cols, data }
    }

    pub fn identity(basis: Basis) -> Self {
        let data = Mat::identity(basis.len(), basis.len());
        Self { rows: basis.clone(), cols: basis, data }
    }

    pub fn rows(&self) -> &Basis {
        &self.rows
    }

    pub fn cols(&self) -> &Basis {
        &self.cols
    }

    pub fn data(&self) -> MatRef<'_, c64> {
        self.data.as_ref()
    }

    pub fn data_mut(&mut self) -> &mut Mat<c64> {
        &mut self.data
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn get(&self, row: &Label, col: &Label) -> c64 {
        match (self.rows.position(row), self.cols.position(col)) {
            (Some(i), Some(j)) => self.data[(i, j)],
            _ => c64::new(0.0, 0.0),
        }
    }

    /// Adds `value` at (row, col); labels outside the truncation are ignored.
    pub fn add_at(&mut self, row: &Label, col: &Label, value: c64) -> bool {
        match (self.rows.position(row), self.cols.position(col)) {
            (Some(i), Some(j)) => {
                self.data[(i, j)] += value;
                true
            }
            _ => false,
        }
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn matmul(&self, rhs: &LabeledMatrix) -> Result<LabeledMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::BasisMismatch("inner bases of a product differ".into()));
        }
        Ok(LabeledMatrix {
            rows: self.rows.clone(),
            cols: rhs.cols.clone(),
            data: &self.data * &rhs.data,
        })
    }

    pub fn adjoint(&self) -> LabeledMatrix {
        LabeledMatrix {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            data: self.data.adjoint().to_owned(),
        }
    }

    pub fn restrict(&self, keep_row: impl Fn(&Label) -> bool, keep_col: impl Fn(&Label) -> bool) -> LabeledMatrix {
        let (rows, ri) = self.rows.select(keep_row);
        let (cols, ci) = self.cols.select(keep_col);
        let data = Mat::from_fn(ri.len(), ci.len(), |i, j| self.data[(ri[i], ci[j])]);
        LabeledMatrix { rows, cols, data }
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        singular_values(self.data.as_ref())
    }

    /// Largest entry of `self * inv - I` over rows that are not edge rows.
    ///
    /// Edge rows are where the truncated product loses terms, so only the
    /// interior carries information about the untruncated operators.
    pub fn interior_inverse_defect(&self, inv: &LabeledMatrix) -> Result<f64> {
        let prod = self.matmul(inv)?;
        if prod.rows != prod.cols {
            return Err(Error::BasisMismatch("u * u_inv is not square".into()));
        }
        let mut defect = 0.0f64;
        for i in 0..prod.nrows() {
            if prod.rows.is_edge(i) {
                continue;
            }
            for j in 0..prod.ncols() {
                let target = if i == j { 1.0 } else { 0.0 };
                defect = defect.max((prod.data[(i, j)] - c64::new(target, 0.0)).norm());
            }
        }
        Ok(defect)
    }

    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let n = self.nrows();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                d = d.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradingRole {
    Partition,
    Bundle,
    SpectralSign,
}

/// Diagonal +-1 operator over a labeled basis.
#[derive(Clone, Debug)]
pub struct GradingOp {
    basis: Basis,
    signs: Vec<i8>,
    role: GradingRole,
}

impl GradingOp {
    /// Grading that is `+1` where `positive` holds and `-1` elsewhere.
    pub fn from_fn(basis: Basis, role: GradingRole, positive: impl Fn(&Label) -> bool) -> Self {
        let signs = basis.labels().iter().map(|l| if positive(l) { 1 } else { -1 }).collect();
        Self { basis, signs, role }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn role(&self) -> GradingRole {
        self.role
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn sign(&self, i: usize) -> f64 {
        self.signs[i] as f64
    }

    /// Indices of the `+1` eigenspace (the range of `(1 + G)/2`).
    pub fn positive_indices(&self) -> Vec<usize> {
        (0..self.signs.len()).filter(|&i| self.signs[i] > 0).collect()
    }

    pub fn to_matrix(&self) -> LabeledMatrix {
        let n = self.basis.len();
        let data = Mat::from_fn(n, n, |i, j| if i == j { c64::new(self.sign(i), 0.0) } else { c64::new(0.0, 0.0) });
        LabeledMatrix { rows: self.basis.clone(), cols: self.basis.clone(), data }
    }

    pub fn check_basis(&self, m: &LabeledMatrix) -> Result<()> {
        if m.rows() != &self.basis || m.cols() != &self.basis {
            return Err(Error::BasisMismatch("operator and grading live on different bases".into()));
        }
        Ok(())
    }
}

/// Serializes a complex number as `[re, im]`.
pub fn ser_c64<S: serde::Serializer>(z: &c64, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize;
    [z.re, z.im].serialize(s)
}

pub fn singular_values(m: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    m.singular_values().map_err(|e| Error::EigenFailure(format!("svd: {e:?}")))
}

pub fn spectral_norm(m: MatRef<'_, c64>) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Singular values of a 2x2 matrix, largest first.
pub fn singular_values_2x2(m: [[c64; 2]; 2]) -> (f64, f64) {
    let fro2 = m.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
    let hi = ((fro2 + disc) / 2.0).sqrt();
    let lo = if hi > 0.0 { det / hi } else { 0.0 };
    (hi, lo)
}

pub fn inverse(m: MatRef<'_, c64>) -> Mat<c64> {
    use faer::linalg::solvers::DenseSolveCore;
    m.partial_piv_lu().inverse()
}
