//! Finite-difference model of the Dirac operator on a truncated cylinder.
//!
//! The line direction is discretized with centered differences plus a
//! Wilson term, the circle direction is handled exactly in Fourier modes, so
//! `D` is block diagonal in the circle mode `k` with `2 n_t x 2 n_t` blocks
//!
//! ```text
//!   [ 0                  -d/dt + k + W ]
//!   [ d/dt + k + W        0            ]
//! ```
//!
//! with `W = w (1 - (S + S^T)/2)` removing the doubler of the centered
//! difference at the edge of the Brillouin zone.

use std::path::Path;

use faer::{Mat, MatRef, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::IndexReport;
use crate::matrix::{c64, inverse, singular_values, Basis, GradingOp, GradingRole, Label, LabeledMatrix};
use crate::symbol::TrigSymbol;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };
const ONE: c64 = c64 { re: 1.0, im: 0.0 };

/// Singular values below this fraction of the largest count as kernel.
pub const GRID_THRESHOLD: f64 = 1e-2;
/// Ratio between the smallest retained and largest discarded singular value
/// required for a grid index to count as converged.
pub const GRID_MIN_GAP: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderGrid {
    #[serde(rename = "L")]
    pub half_length: f64,
    pub n_t: usize,
    pub n_theta: usize,
    pub bc: BoundaryCondition,
    /// First line index inside the partition.
    pub cut_index: usize,
}

impl CylinderGrid {
    /// Dirichlet grid with the cut in the middle.
    pub fn new(half_length: f64, n_t: usize, n_theta: usize) -> Self {
        Self { half_length, n_t, n_theta, bc: BoundaryCondition::Dirichlet, cut_index: n_t / 2 }
    }

    pub fn with_cut(mut self, cut_index: usize) -> Self {
        self.cut_index = cut_index;
        self
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let g: Self = serde_json::from_str(s)?;
        g.validate()?;
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_t < 8 || self.n_theta < 8 {
            return Err(Error::GridTooSmall(format!("n_t = {}, n_theta = {}; both must be >= 8", self.n_t, self.n_theta)));
        }
        if !(self.half_length > 0.0 && self.half_length.is_finite()) {
            return Err(Error::InvalidParameter(format!("half length {} must be positive", self.half_length)));
        }
        let quarter = self.n_t / 4;
        if self.cut_index < quarter || self.n_t - self.cut_index.min(self.n_t) < quarter {
            return Err(Error::InvalidParameter(format!(
                "cut index {} must leave at least {} points on each side of {}",
                self.cut_index, quarter, self.n_t
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        match self.bc {
            BoundaryCondition::Dirichlet => 2.0 * self.half_length / (self.n_t + 1) as f64,
            BoundaryCondition::Periodic => 2.0 * self.half_length / self.n_t as f64,
        }
    }

    pub fn t(&self, j: usize) -> f64 {
        match self.bc {
            BoundaryCondition::Dirichlet => -self.half_length + (j + 1) as f64 * self.spacing(),
            BoundaryCondition::Periodic => -self.half_length + j as f64 * self.spacing(),
        }
    }

    /// Circle modes `-n_theta/2 .. n_theta - n_theta/2`.
    pub fn modes(&self) -> Vec<i64> {
        let lo = -((self.n_theta / 2) as i64);
        (lo..lo + self.n_theta as i64).collect()
    }

    pub fn wilson(&self) -> f64 {
        (self.n_theta / 2) as f64
    }

    pub fn dimension(&self, l: usize) -> usize {
        2 * self.n_t * self.n_theta * l
    }

    /// Half the length and half the points, keeping the cut at the same `t`.
    pub fn coarser(&self) -> Result<Self> {
        let mut g = Self { half_length: self.half_length / 2.0, n_t: self.n_t / 2, ..self.clone() };
        let tc = self.t(self.cut_index);
        let j = match g.bc {
            BoundaryCondition::Dirichlet => (tc + g.half_length) / g.spacing() - 1.0,
            BoundaryCondition::Periodic => (tc + g.half_length) / g.spacing(),
        };
        g.cut_index = j.round().max(0.0) as usize;
        g.validate()?;
        Ok(g)
    }
}

/// Line operators `(d/dt, W)` as dense `n_t x n_t` matrices.
fn line_operators(grid: &CylinderGrid) -> (Mat<c64>, Mat<c64>) {
    let n = grid.n_t;
    let h = grid.spacing();
    let w = grid.wilson();
    let periodic = grid.bc == BoundaryCondition::Periodic;
    let mut grad = Mat::zeros(n, n);
    let mut wil = Mat::zeros(n, n);
    for j in 0..n {
        wil[(j, j)] = c64::new(w, 0.0);
        let next = if j + 1 < n { Some(j + 1) } else if periodic { Some(0) } else { None };
        if let Some(p) = next {
            grad[(j, p)] += c64::new(0.5 / h, 0.0);
            grad[(p, j)] -= c64::new(0.5 / h, 0.0);
            wil[(j, p)] -= c64::new(w / 2.0, 0.0);
            wil[(p, j)] -= c64::new(w / 2.0, 0.0);
        }
    }
    (grad, wil)
}

/// Block of `D` at circle mass `m`, ordered `(spinor, t)`.
fn dirac_block(grad: MatRef<'_, c64>, wil: MatRef<'_, c64>, m: f64) -> Mat<c64> {
    let n = grad.nrows();
    let a = Mat::from_fn(n, n, |i, j| grad[(i, j)] + wil[(i, j)] + if i == j { c64::new(m, 0.0) } else { ZERO });
    Mat::from_fn(2 * n, 2 * n, |i, j| match (i < n, j < n) {
        (true, false) => a[(j - n, i)].conj(),
        (false, true) => a[(i - n, j)],
        _ => ZERO,
    })
}

fn homotopy_mass(k: i64, s: f64) -> f64 {
    let sgn = if k >= 0 { 1.0 } else { -1.0 };
    (1.0 - s) * k as f64 + s * sgn
}

pub fn grid_label(t: usize, k: i64, spinor: usize, comp: usize) -> Label {
    Label::new(t as i64, k, spinor as u8, comp as u16)
}

#[derive(Clone, Debug)]
pub struct DiracGrid {
    pub grid: CylinderGrid,
    pub matrix: LabeledMatrix,
    /// The circle derivative is exact in Fourier modes rather than a difference.
    pub fourier_circle: bool,
    pub wilson: f64,
}

impl DiracGrid {
    pub fn bundle_grading(&self) -> GradingOp {
        bundle_grading(self.matrix.rows())
    }
}

pub fn bundle_grading(basis: &Basis) -> GradingOp {
    GradingOp::from_fn(basis.clone(), GradingRole::Bundle, |l| l.spinor == 0)
}

pub fn build_dirac_grid(grid: &CylinderGrid) -> Result<DiracGrid> {
    grid.validate()?;
    let n = grid.n_t;
    let modes = grid.modes();
    let mut labels = Vec::with_capacity(grid.dimension(1));
    for &k in &modes {
        for sp in 0..2 {
            for t in 0..n {
                labels.push(grid_label(t, k, sp, 0));
            }
        }
    }
    let basis = Basis::new(labels);
    let (grad, wil) = line_operators(grid);
    let mut data = Mat::zeros(basis.len(), basis.len());
    for (b, &k) in modes.iter().enumerate() {
        let blk = dirac_block(grad.as_ref(), wil.as_ref(), k as f64);
        let off = b * 2 * n;
        for i in 0..2 * n {
            for j in 0..2 * n {
                data[(off + i, off + j)] = blk[(i, j)];
            }
        }
    }
    let matrix = LabeledMatrix::new(basis.clone(), basis, data)?;
    Ok(DiracGrid { grid: grid.clone(), matrix, fourier_circle: true, wilson: grid.wilson() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChoppingSpec {
    /// `x (1 + x^2)^{-1/2}`.
    Rational,
    /// Linear interpolation of samples, constant beyond the ends.
    Table { xs: Vec<f64>, values: Vec<f64> },
}

impl ChoppingSpec {
    pub fn validate(&self) -> Result<()> {
        let ChoppingSpec::Table { xs, values } = self else {
            return Ok(());
        };
        let n = xs.len();
        let bad = |m: &str| Err(Error::InvalidParameter(format!("chopping table: {m}")));
        if n < 2 || values.len() != n {
            return bad("need at least two samples and one value per sample");
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return bad("sample points must increase strictly");
        }
        for i in 0..n {
            if (xs[i] + xs[n - 1 - i]).abs() > 1e-12 || (values[i] + values[n - 1 - i]).abs() > 1e-12 {
                return bad("not odd");
            }
            if values[i].abs() > 1.0 {
                return bad("values outside [-1, 1]");
            }
        }
        if (values[n - 1] - 1.0).abs() > 0.05 {
            return bad("does not approach 1 at the end of the sampled range");
        }
        Ok(())
    }

    pub fn chi(&self, x: f64) -> f64 {
        match self {
            ChoppingSpec::Rational => x / (1.0 + x * x).sqrt(),
            ChoppingSpec::Table { xs, values } => {
                let n = xs.len();
                if x <= xs[0] {
                    return values[0];
                }
                if x >= xs[n - 1] {
                    return values[n - 1];
                }
                let i = xs.partition_point(|&p| p <= x) - 1;
                let f = (x - xs[i]) / (xs[i + 1] - xs[i]);
                values[i] + f * (values[i + 1] - values[i])
            }
        }
    }

    pub fn eta(&self, x: f64) -> f64 {
        match self {
            ChoppingSpec::Rational => 1.0 / (1.0 + x * x).sqrt(),
            _ => {
                let c = self.chi(x);
                (1.0 - c * c).max(0.0).sqrt()
            }
        }
    }
}

struct Eigen {
    values: Vec<f64>,
    vectors: Mat<c64>,
}

fn hermitian_eigen(m: MatRef<'_, c64>) -> Result<Eigen> {
    let e = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let values = e.S().column_vector().iter().map(|z| z.re).collect();
    Ok(Eigen { values, vectors: e.U().to_owned() })
}

/// `V diag(f(lambda)) V*`.
fn apply_fn(e: &Eigen, f: impl Fn(f64) -> f64) -> Mat<c64> {
    let v = &e.vectors;
    let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * f(e.values[j]));
    &scaled * v.adjoint()
}

/// Multiplies rows by the bundle grading, `+1` on the first spinor.
fn grade_rows(m: &Mat<c64>, signs: impl Fn(usize) -> f64) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * signs(i))
}

#[derive(Clone, Debug)]
pub struct ChoppingCalculus {
    pub chi: LabeledMatrix,
    pub eta: LabeledMatrix,
    /// `chi(D) + eps eta(D)`.
    pub dirac_chi: LabeledMatrix,
    /// Largest entry of `chi(D)^2 + eta(D)^2 - 1`.
    pub pythagoras_defect: f64,
}

pub fn chopping_calculus(d: &LabeledMatrix, spec: &ChoppingSpec) -> Result<ChoppingCalculus> {
    spec.validate()?;
    if !d.is_square() || d.hermitian_defect() > 1e-12 {
        return Err(Error::InvalidParameter("operator is not Hermitian".into()));
    }
    let e = hermitian_eigen(d.data())?;
    let chi = apply_fn(&e, |x| spec.chi(x));
    let eta = apply_fn(&e, |x| spec.eta(x));
    let eps = bundle_grading(d.rows());
    let dirac_chi = &chi + grade_rows(&eta, |i| eps.sign(i));
    let sum = &chi * &chi + &eta * &eta;
    let n = sum.nrows();
    let mut defect = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            defect = defect.max((sum[(i, j)] - if i == j { ONE } else { ZERO }).norm());
        }
    }
    if defect > 1e-10 {
        return Err(Error::EigenFailure(format!("chi^2 + eta^2 differs from the identity by {defect:.3e}")));
    }
    let wrap = |m: Mat<c64>| LabeledMatrix::new(d.rows().clone(), d.cols().clone(), m);
    Ok(ChoppingCalculus { chi: wrap(chi)?, eta: wrap(eta)?, dirac_chi: wrap(dirac_chi)?, pythagoras_defect: defect })
}

/// Largest `| |M v|^2 / |v|^2 - 1 |` over random complex Gaussian-ish vectors.
pub fn norm_preservation_defect(m: MatRef<'_, c64>, samples: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let v = Mat::from_fn(m.ncols(), 1, |_, _| c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let mv = m * &v;
        let ratio = mv.norm_l2().powi(2) / v.norm_l2().powi(2);
        worst = worst.max((ratio - 1.0).abs());
    }
    worst
}

/// Principal square root of a Hermitian positive definite matrix by the
/// Denman-Beavers iteration.
pub fn sqrt_positive(x: MatRef<'_, c64>) -> Result<Mat<c64>> {
    let n = x.nrows();
    let mut y = x.to_owned();
    let mut z: Mat<c64> = Mat::identity(n, n);
    for _ in 0..100 {
        let yi = inverse(y.as_ref());
        let zi = inverse(z.as_ref());
        let y_next = Mat::from_fn(n, n, |i, j| (y[(i, j)] + zi[(i, j)]) * 0.5);
        z = Mat::from_fn(n, n, |i, j| (z[(i, j)] + yi[(i, j)]) * 0.5);
        let step = (&y_next - &y).norm_max();
        y = y_next;
        if step <= 1e-14 * y.norm_max() {
            return Ok(y);
        }
    }
    Err(Error::EigenFailure("square root iteration did not converge".into()))
}

/// Largest entry of `chi_0(D) - D (1 + D^2)^{-1/2}` with the right side
/// computed by a matrix square root and a linear solve.
pub fn chi0_direct_defect(d: MatRef<'_, c64>) -> Result<f64> {
    use faer::linalg::solvers::Solve;
    let e = hermitian_eigen(d)?;
    let spectral = apply_fn(&e, |x| ChoppingSpec::Rational.chi(x));
    let n = d.nrows();
    let x = Mat::<c64>::identity(n, n) + d * d;
    let root = sqrt_positive(x.as_ref())?;
    let direct = root.partial_piv_lu().solve(d.to_owned());
    Ok((&spectral - &direct).norm_max())
}

/// Which invertible the grid index is computed for.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridForm {
    /// `D_chi diag(phi, 1) D_chi` with `D_chi = chi(D) + eps eta(D)`.
    Chopping,
    /// `(D + eps)^{-1} diag(phi, 1) (D + eps)`.
    Corollary,
}

/// Left and right factors of `u = L diag(phi, 1) R` for every circle mode in
/// a range, each `2 n_t x 2 n_t`.
struct Factors {
    k0: i64,
    left: Vec<Mat<c64>>,
    right: Vec<Mat<c64>>,
}

impl Factors {
    fn at(&self, k: i64) -> (&Mat<c64>, &Mat<c64>) {
        let i = (k - self.k0) as usize;
        (&self.left[i], &self.right[i])
    }

    fn adjoint(&self) -> Factors {
        Factors {
            k0: self.k0,
            left: self.right.iter().map(|m| m.adjoint().to_owned()).collect(),
            right: self.left.iter().map(|m| m.adjoint().to_owned()).collect(),
        }
    }
}

/// Condition number above which `D + eps` is not trusted.
const MAX_CONDITION: f64 = 1e10;

fn build_factors(grid: &CylinderGrid, modes: &[i64], form: GridForm, spec: &ChoppingSpec, s: f64) -> Result<Factors> {
    let n = grid.n_t;
    let (grad, wil) = line_operators(grid);
    let eps = |i: usize| if i < n { 1.0 } else { -1.0 };
    let mut left = Vec::with_capacity(modes.len());
    let mut right = Vec::with_capacity(modes.len());
    for &k in modes {
        let d = dirac_block(grad.as_ref(), wil.as_ref(), homotopy_mass(k, s));
        match form {
            GridForm::Chopping => {
                let e = hermitian_eigen(d.as_ref())?;
                let chi = apply_fn(&e, |x| spec.chi(x));
                let eta = apply_fn(&e, |x| spec.eta(x));
                let dc = &chi + grade_rows(&eta, eps);
                left.push(dc.clone());
                right.push(dc);
            }
            GridForm::Corollary => {
                let x = Mat::from_fn(2 * n, 2 * n, |i, j| d[(i, j)] + if i == j { c64::new((1.0 - s) * eps(i), 0.0) } else { ZERO });
                let sv = singular_values(x.as_ref())?;
                let cond = sv[0] / sv[sv.len() - 1];
                if !(cond < MAX_CONDITION) {
                    return Err(Error::IllConditioned(format!("D + eps at mode {k} has condition number {cond:.3e}")));
                }
                left.push(inverse(x.as_ref()));
                right.push(x);
            }
        }
    }
    Ok(Factors { k0: modes[0], left, right })
}

/// Compression of `L diag(phi, 1) R` to `t >= cut`, columns over `cols`
/// and rows over `cols` widened by the symbol degree, ordered
/// `(k, comp, spinor, t)`.
fn compressed_u(grid: &CylinderGrid, phi: &TrigSymbol, f: &Factors, cols: &[i64], rows: &[i64]) -> Mat<c64> {
    let n = grid.n_t;
    let cut = grid.cut_index;
    let nk = n - cut;
    let l = phi.size();
    let blk = 2 * nk;
    let mut u = Mat::zeros(rows.len() * l * blk, cols.len() * l * blk);
    for (ir, &k) in rows.iter().enumerate() {
        let (lk, _) = f.at(k);
        for (ic, &kp) in cols.iter().enumerate() {
            let within = (k - kp).unsigned_abs() as usize <= phi.degree();
            let diagonal = k == kp;
            if !within && !diagonal {
                continue;
            }
            let coeff = phi.coeff(k - kp);
            let (_, rkp) = f.at(kp);
            let upper = lk.subcols(0, n) * rkp.subrows(0, n);
            let lower = if diagonal { Some(lk.subcols(n, n) * rkp.subrows(n, n)) } else { None };
            let keep = |i: usize| (i / nk) * n + cut + i % nk;
            for a in 0..l {
                for b in 0..l {
                    let c = coeff[(a, b)];
                    let id = diagonal && a == b;
                    if c == ZERO && !id {
                        continue;
                    }
                    let r0 = (ir * l + a) * blk;
                    let c0 = (ic * l + b) * blk;
                    for i in 0..blk {
                        for j in 0..blk {
                            let mut v = upper[(keep(i), keep(j))] * c;
                            if let (true, Some(lo)) = (id, &lower) {
                                v += lo[(keep(i), keep(j))];
                            }
                            u[(r0 + i, c0 + j)] = v;
                        }
                    }
                }
            }
        }
    }
    u
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridCount {
    /// Small singular values whose vectors sit at the cut.
    pub dim: usize,
    /// Small singular values whose vectors sit at the walls instead.
    pub wall_modes: usize,
    pub gap: f64,
}

/// Counts the kernel of a tall compressed section via the eigenvalues of
/// `U* U`, keeping only vectors concentrated near the cut.
fn count_cut_kernel(u: &Mat<c64>, grid: &CylinderGrid) -> Result<GridCount> {
    let gram = u.adjoint() * u;
    let e = hermitian_eigen(gram.as_ref())?;
    let sigma: Vec<f64> = e.values.iter().map(|&x| x.max(0.0).sqrt()).collect();
    let top = sigma.last().copied().unwrap_or(0.0);
    let nk = grid.n_t - grid.cut_index;
    let near = |col: usize| col % nk < nk / 2;
    let (mut dim, mut wall) = (0, 0);
    let mut largest_small = 0.0f64;
    let mut smallest_kept = f64::INFINITY;
    for (i, &s) in sigma.iter().enumerate() {
        if s < GRID_THRESHOLD * top {
            largest_small = largest_small.max(s);
            let mass: f64 = (0..e.vectors.nrows()).filter(|&r| near(r)).map(|r| e.vectors[(r, i)].norm_sqr()).sum();
            if mass >= 0.5 {
                dim += 1;
            } else {
                wall += 1;
            }
        } else {
            smallest_kept = smallest_kept.min(s);
        }
    }
    let gap = smallest_kept / largest_small.max(f64::EPSILON * top);
    Ok(GridCount { dim, wall_modes: wall, gap })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridLevel {
    pub n_t: usize,
    pub index: i64,
    pub ker: GridCount,
    pub coker: GridCount,
}

fn level_index(grid: &CylinderGrid, phi: &TrigSymbol, form: GridForm, spec: &ChoppingSpec, s: f64) -> Result<GridLevel> {
    grid.validate()?;
    if grid.bc != BoundaryCondition::Dirichlet {
        return Err(Error::InvalidParameter("the grid index needs Dirichlet walls".into()));
    }
    let cols = grid.modes();
    let d = phi.degree() as i64;
    let rows: Vec<i64> = (cols[0] - d..=cols[cols.len() - 1] + d).collect();
    let f = build_factors(grid, &rows, form, spec, s)?;
    let u = compressed_u(grid, phi, &f, &cols, &rows);
    let ker = count_cut_kernel(&u, grid)?;
    let u_adj = compressed_u(grid, &phi.adjoint(), &f.adjoint(), &cols, &rows);
    let coker = count_cut_kernel(&u_adj, grid)?;
    Ok(GridLevel { n_t: grid.n_t, index: ker.dim as i64 - coker.dim as i64, ker, coker })
}

#[derive(Clone, Debug, Serialize)]
pub struct GridIndex {
    #[serde(flatten)]
    pub report: IndexReport,
    pub levels: Vec<GridLevel>,
    /// Some small singular vector sits at a wall rather than at the cut.
    pub boundary_flag: bool,
}

/// Index on the coarser grid `(L/2, n_t/2)` and on `grid`; converged when the
/// two agree and both gaps exceed [`GRID_MIN_GAP`].
pub fn grid_index(grid: &CylinderGrid, phi: &TrigSymbol, form: GridForm, spec: &ChoppingSpec, s: f64) -> Result<GridIndex> {
    phi.ensure_invertible()?;
    spec.validate()?;
    let levels = vec![level_index(&grid.coarser()?, phi, form, spec, s)?, level_index(grid, phi, form, spec, s)?];
    let last = levels[1];
    let gap = levels.iter().map(|l| l.ker.gap.min(l.coker.gap)).fold(f64::INFINITY, f64::min);
    let converged = levels[0].index == last.index && gap >= GRID_MIN_GAP;
    let boundary_flag = levels.iter().any(|l| l.ker.wall_modes + l.coker.wall_modes > 0);
    let report = IndexReport {
        index: last.index,
        ker_dim: last.ker.dim,
        coker_dim: last.coker.dim,
        sigma_gap: gap,
        truncations: levels.iter().map(|l| l.n_t).collect(),
        converged,
    };
    Ok(GridIndex { report, levels, boundary_flag })
}

#[derive(Clone, Debug, Serialize)]
pub struct GridIndexReport {
    pub grid: CylinderGrid,
    #[serde(flatten)]
    pub chopping: GridIndex,
    /// The same computation for `(D + eps)^{-1} diag(phi, 1) (D + eps)`.
    pub corollary: Option<GridIndex>,
    pub corollary_note: Option<String>,
    pub winding: i64,
    /// Minus the winding number of `det phi`.
    pub oracle: i64,
    pub matches_oracle: bool,
}

pub fn index_class_grid(grid: &CylinderGrid, phi: &TrigSymbol, spec: &ChoppingSpec) -> Result<GridIndexReport> {
    let chopping = grid_index(grid, phi, GridForm::Chopping, spec, 0.0)?;
    let (corollary, corollary_note) = match grid_index(grid, phi, GridForm::Corollary, spec, 0.0) {
        Ok(r) => (Some(r), None),
        Err(Error::IllConditioned(m)) => (None, Some(m)),
        Err(e) => return Err(e),
    };
    let winding = phi.winding()?;
    let oracle = -winding;
    let matches_oracle = chopping.report.index == oracle;
    Ok(GridIndexReport { grid: grid.clone(), chopping, corollary, corollary_note, winding, oracle, matches_oracle })
}

#[derive(Clone, Debug, Serialize)]
pub struct CobordismReport {
    pub cut_before: usize,
    pub cut_after: usize,
    pub index_before: i64,
    pub index_after: i64,
    pub converged: bool,
    pub agree: bool,
}

pub fn cobordism_shift_test(grid: &CylinderGrid, phi: &TrigSymbol, spec: &ChoppingSpec, shift: i64) -> Result<CobordismReport> {
    let moved = grid.cut_index as i64 + shift;
    if moved < 0 {
        return Err(Error::InvalidParameter(format!("shift {shift} moves the cut off the grid")));
    }
    let shifted = grid.clone().with_cut(moved as usize);
    shifted.validate()?;
    let before = grid_index(grid, phi, GridForm::Chopping, spec, 0.0)?;
    let after = if shift == 0 { before.clone() } else { grid_index(&shifted, phi, GridForm::Chopping, spec, 0.0)? };
    Ok(CobordismReport {
        cut_before: grid.cut_index,
        cut_after: shifted.cut_index,
        index_before: before.report.index,
        index_after: after.report.index,
        converged: before.report.converged && after.report.converged,
        agree: before.report.index == after.report.index,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HomotopyEndpoints {
    pub start: GridIndex,
    pub end: GridIndex,
    pub agree: bool,
}

/// Grid index of `(D_s + (1-s) eps)^{-1} diag(phi, 1) (D_s + (1-s) eps)` at
/// `s = 0` and `s = 1`.
pub fn homotopy_endpoint_indices(grid: &CylinderGrid, phi: &TrigSymbol) -> Result<HomotopyEndpoints> {
    let spec = ChoppingSpec::Rational;
    let start = grid_index(grid, phi, GridForm::Corollary, &spec, 0.0)?;
    let end = grid_index(grid, phi, GridForm::Corollary, &spec, 1.0)?;
    let agree = start.report.index == end.report.index;
    Ok(HomotopyEndpoints { start, end, agree })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CylinderGrid {
        CylinderGrid::new(4.0, 12, 8)
    }

    #[test]
    fn dirac_is_hermitian_and_odd() {
        let d = build_dirac_grid(&small()).unwrap();
        assert_eq!(d.matrix.nrows(), small().dimension(1));
        assert_eq!(d.matrix.hermitian_defect(), 0.0);
        let eps = d.bundle_grading().to_matrix();
        let anti = &(eps.data() * d.matrix.data()) + &(d.matrix.data() * eps.data());
        assert_eq!(anti.norm_max(), 0.0);
        let mut ev = d.matrix.data().self_adjoint_eigenvalues(Side::Lower).unwrap();
        let neg: Vec<f64> = ev.iter().rev().map(|x| -x).collect();
        ev.iter_mut().zip(&neg).for_each(|(a, b)| *a -= b);
        assert!(ev.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn periodic_grid_is_hermitian() {
        let g = CylinderGrid { bc: BoundaryCondition::Periodic, ..small() };
        assert_eq!(build_dirac_grid(&g).unwrap().matrix.hermitian_defect(), 0.0);
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(build_dirac_grid(&CylinderGrid::new(4.0, 6, 8)), Err(Error::GridTooSmall(_))));
        assert!(matches!(small().with_cut(1).validate(), Err(Error::InvalidParameter(_))));
        let json = r#"{"L": 16.0, "n_t": 64, "n_theta": 16, "bc": "dirichlet", "cut_index": 32}"#;
        assert_eq!(CylinderGrid::from_json(json).unwrap(), CylinderGrid::new(16.0, 64, 16));
    }

    #[test]
    fn chopping_calculus_identities() {
        let d = build_dirac_grid(&small()).unwrap();
        let c = chopping_calculus(&d.matrix, &ChoppingSpec::Rational).unwrap();
        assert!(c.pythagoras_defect < 1e-10);
        assert!(crate::matrix::spectral_norm(c.chi.data()).unwrap() <= 1.0 + 1e-12);
        assert!(norm_preservation_defect(c.dirac_chi.data(), 8, 7) < 1e-8);
    }

    #[test]
    fn chi0_matches_direct_formula() {
        let g = small();
        let (grad, wil) = line_operators(&g);
        let d = dirac_block(grad.as_ref(), wil.as_ref(), 2.0);
        assert!(chi0_direct_defect(d.as_ref()).unwrap() < 1e-8);
    }

    #[test]
    fn chopping_table() {
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 / 2.0).collect();
        let values: Vec<f64> = xs.iter().map(|&x| ChoppingSpec::Rational.chi(x)).collect();
        let t = ChoppingSpec::Table { xs, values };
        t.validate().unwrap();
        assert!((t.chi(0.25) - ChoppingSpec::Rational.chi(0.25)).abs() < 3e-2);
        assert!((t.chi(1e3) - t.chi(20.0)).abs() == 0.0);
        let even = ChoppingSpec::Table { xs: vec![-1.0, 1.0], values: vec![1.0, 1.0] };
        assert!(even.validate().is_err());
    }

    #[test]
    fn trivial_symbol_has_index_zero() {
        let g = CylinderGrid::new(8.0, 32, 8);
        let r = index_class_grid(&g, &TrigSymbol::identity(1), &ChoppingSpec::Rational).unwrap();
        assert_eq!(r.chopping.report.index, 0);
        assert!(r.matches_oracle);
    }

    #[test]
    fn grid_index_counts_plus_winding() {
        let g = CylinderGrid::new(8.0, 32, 8);
        let r = index_class_grid(&g, &TrigSymbol::monomial(1), &ChoppingSpec::Rational).unwrap();
        assert_eq!(r.chopping.report.index, 1, "{:?}", r.chopping);
        assert_eq!(r.corollary.unwrap().report.index, 1);
        assert!(!r.matches_oracle);
    }

    #[test]
    fn coarser_keeps_cut_position() {
        let g = CylinderGrid::new(16.0, 64, 16).with_cut(36);
        let c = g.coarser().unwrap();
        assert_eq!(c.n_t, 32);
        assert!((c.t(c.cut_index) - g.t(g.cut_index)).abs() <= c.spacing());
    }
}
