//! Matrix-valued trigonometric polynomials on the circle.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use faer::Mat;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c64, inverse, singular_values};

pub const DEFAULT_TOL: f64 = 1e-10;

/// Coefficients smaller than this (relative to the largest one) are treated
/// as zero when a symbol is produced by numerical Fourier analysis.
const CLEAN_REL: f64 = 1e-14;

/// `phi(theta) = sum_k coeff(k) e^{i k theta}` with `l x l` coefficients.
#[derive(Clone, Debug)]
pub struct TrigSymbol {
    size: usize,
    degree: usize,
    coeffs: Vec<Mat<c64>>,
    tail_tol: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InvertibilityCertificate {
    pub floor: f64,
    pub theta: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Winding {
    pub value: i64,
    pub defect: f64,
    pub max_jump: f64,
}

#[derive(Clone, Debug)]
pub struct Interpolation {
    pub symbol: TrigSymbol,
    pub distance: f64,
    pub margin: f64,
}

fn zero(l: usize) -> Mat<c64> {
    Mat::zeros(l, l)
}

fn max_abs(m: &Mat<c64>) -> f64 {
    let mut r = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            r = r.max(m[(i, j)].norm());
        }
    }
    r
}

fn matrix_norm(m: &Mat<c64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    singular_values(m.as_ref()).map(|s| s[0]).unwrap_or(f64::NAN)
}

fn smallest_singular_value(m: &Mat<c64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)].norm();
    }
    singular_values(m.as_ref()).map(|s| *s.last().unwrap()).unwrap_or(0.0)
}

fn theta(j: usize, points: usize) -> f64 {
    TAU * j as f64 / points as f64
}

impl TrigSymbol {
    /// Builds a symbol from `(k, coefficient)` pairs; duplicate modes are rejected.
    pub fn from_coeffs(size: usize, coeffs: impl IntoIterator<Item = (i64, Mat<c64>)>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidSymbol("matrix size must be positive".into()));
        }
        let mut map = BTreeMap::new();
        for (k, m) in coeffs {
            if m.nrows() != size || m.ncols() != size {
                return Err(Error::InvalidSymbol(format!(
                    "coefficient at k = {k} is {}x{}, expected {size}x{size}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if map.insert(k, m).is_some() {
                return Err(Error::InvalidSymbol(format!("duplicate mode k = {k}")));
            }
        }
        let degree = map
            .iter()
            .filter(|(_, m)| max_abs(m) > 0.0)
            .map(|(k, _)| k.unsigned_abs() as usize)
            .max()
            .unwrap_or(0);
        let mut dense: Vec<Mat<c64>> = (0..2 * degree + 1).map(|_| zero(size)).collect();
        for (k, m) in map {
            if k.unsigned_abs() as usize <= degree {
                dense[(k + degree as i64) as usize] = m;
            }
        }
        Ok(Self { size, degree, coeffs: dense, tail_tol: 0.0 })
    }

    pub fn scalar(coeffs: &[(i64, c64)]) -> Result<Self> {
        Self::from_coeffs(1, coeffs.iter().map(|&(k, c)| (k, Mat::from_fn(1, 1, |_, _| c))))
    }

    /// `e^{i k theta}`.
    pub fn monomial(k: i64) -> Self {
        Self::scalar(&[(k, c64::new(1.0, 0.0))]).expect("monomial is valid")
    }

    pub fn constant(m: Mat<c64>) -> Result<Self> {
        let l = m.nrows();
        Self::from_coeffs(l, [(0, m)])
    }

    pub fn identity(l: usize) -> Self {
        Self::constant(Mat::identity(l, l)).expect("identity is valid")
    }

    /// Block-diagonal symbol with the given symbols on the diagonal.
    pub fn block_diag(parts: &[TrigSymbol]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidSymbol("empty block diagonal".into()));
        }
        let size: usize = parts.iter().map(|p| p.size).sum();
        let degree = parts.iter().map(|p| p.degree).max().unwrap();
        let mut out = Vec::new();
        for k in -(degree as i64)..=degree as i64 {
            let mut m = zero(size);
            let mut off = 0;
            for p in parts {
                let c = p.coeff(k);
                for i in 0..p.size {
                    for j in 0..p.size {
                        m[(off + i, off + j)] = c[(i, j)];
                    }
                }
                off += p.size;
            }
            out.push((k, m));
        }
        Self::from_coeffs(size, out)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Fourier coefficient at mode `k` (zero outside the support).
    pub fn coeff(&self, k: i64) -> Mat<c64> {
        if k.unsigned_abs() as usize > self.degree {
            zero(self.size)
        } else {
            self.coeffs[(k + self.degree as i64) as usize].clone()
        }
    }

    /// Entry `(i, j)` of the coefficient at mode `k`.
    pub fn coeff_entry(&self, k: i64, i: usize, j: usize) -> c64 {
        if k.unsigned_abs() as usize > self.degree {
            c64::new(0.0, 0.0)
        } else {
            self.coeffs[(k + self.degree as i64) as usize][(i, j)]
        }
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        let d = self.degree as i64;
        -d..=d
    }

    pub fn evaluate(&self, theta: f64) -> Mat<c64> {
        let mut out = zero(self.size);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = idx as i64 - self.degree as i64;
            let e = c64::cis(k as f64 * theta);
            for j in 0..self.size {
                for i in 0..self.size {
                    out[(i, j)] += c[(i, j)] * e;
                }
            }
        }
        out
    }

    pub fn sample(&self, points: usize) -> Vec<Mat<c64>> {
        (0..points).map(|j| self.evaluate(theta(j, points))).collect()
    }

    /// Discrete Fourier analysis of samples at `theta_j = 2 pi j / M`,
    /// keeping modes `|k| <= max_degree`.
    pub fn analyze(samples: &[Mat<c64>], max_degree: usize) -> Result<Self> {
        let m = samples.len();
        if m < 2 * max_degree + 1 {
            return Err(Error::InvalidParameter(format!(
                "{m} samples cannot resolve degree {max_degree}"
            )));
        }
        let l = samples[0].nrows();
        let fft = FftPlanner::<f64>::new().plan_fft_forward(m);
        let mut coeffs: Vec<Mat<c64>> = (0..2 * max_degree + 1).map(|_| zero(l)).collect();
        let mut buf = vec![c64::new(0.0, 0.0); m];
        for i in 0..l {
            for j in 0..l {
                for (b, s) in buf.iter_mut().zip(samples) {
                    *b = s[(i, j)];
                }
                fft.process(&mut buf);
                for (idx, c) in coeffs.iter_mut().enumerate() {
                    let k = idx as i64 - max_degree as i64;
                    c[(i, j)] = buf[k.rem_euclid(m as i64) as usize] / m as f64;
                }
            }
        }
        Self::from_coeffs(l, coeffs.into_iter().enumerate().map(|(idx, c)| (idx as i64 - max_degree as i64, c)))
    }

    /// Zeroes coefficient entries that are negligible relative to the
    /// largest one and recomputes the degree.
    fn cleaned(self) -> Self {
        let scale = self.coeffs.iter().map(max_abs).fold(0.0, f64::max);
        let cut = scale * CLEAN_REL;
        let tail_tol = self.tail_tol;
        let d = self.degree as i64;
        let l = self.size;
        let coeffs = self.coeffs.into_iter().enumerate().map(|(idx, mut c)| {
            for j in 0..l {
                for i in 0..l {
                    if c[(i, j)].norm() <= cut {
                        c[(i, j)] = c64::new(0.0, 0.0);
                    }
                }
            }
            (idx as i64 - d, c)
        });
        let mut out = Self::from_coeffs(l, coeffs).expect("cleaning preserves validity");
        out.tail_tol = tail_tol;
        out
    }

    fn check_size(&self, other: &Self) -> Result<()> {
        if self.size != other.size {
            return Err(Error::InvalidSymbol(format!("size mismatch {} vs {}", self.size, other.size)));
        }
        Ok(())
    }

    fn combine(&self, other: &Self, a: c64, b: c64) -> Result<Self> {
        self.check_size(other)?;
        let d = self.degree.max(other.degree) as i64;
        let coeffs = (-d..=d).map(|k| {
            let x = self.coeff(k);
            let y = other.coeff(k);
            (k, Mat::from_fn(self.size, self.size, |i, j| a * x[(i, j)] + b * y[(i, j)]))
        });
        let mut out = Self::from_coeffs(self.size, coeffs)?;
        out.tail_tol = self.tail_tol.max(other.tail_tol);
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, c64::new(1.0, 0.0), c64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, c64::new(1.0, 0.0), c64::new(-1.0, 0.0))
    }

    pub fn scale(&self, s: c64) -> Self {
        let coeffs = self.modes().map(|k| {
            let c = self.coeff(k);
            (k, Mat::from_fn(self.size, self.size, |i, j| s * c[(i, j)]))
        });
        Self::from_coeffs(self.size, coeffs).expect("scaling preserves validity")
    }

    /// Pointwise product, computed as a convolution of coefficients.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_size(other)?;
        let d = (self.degree + other.degree) as i64;
        let mut out: BTreeMap<i64, Mat<c64>> = (-d..=d).map(|k| (k, zero(self.size))).collect();
        for a in self.modes() {
            let ca = self.coeff(a);
            for b in other.modes() {
                let prod = &ca * other.coeff(b);
                *out.get_mut(&(a + b)).unwrap() += prod;
            }
        }
        let mut r = Self::from_coeffs(self.size, out)?;
        r.tail_tol = self.tail_tol.max(other.tail_tol);
        Ok(r)
    }

    /// Pointwise adjoint `theta -> phi(theta)^*`.
    pub fn adjoint(&self) -> Self {
        let coeffs = self.modes().map(|k| (k, self.coeff(-k).adjoint().to_owned()));
        let mut r = Self::from_coeffs(self.size, coeffs).expect("adjoint preserves validity");
        r.tail_tol = self.tail_tol;
        r
    }

    /// `d phi / d theta`.
    pub fn derivative(&self) -> Self {
        let coeffs = self.modes().map(|k| {
            let c = self.coeff(k);
            let f = c64::new(0.0, k as f64);
            (k, Mat::from_fn(self.size, self.size, |i, j| f * c[(i, j)]))
        });
        Self::from_coeffs(self.size, coeffs).expect("derivative preserves validity")
    }

    fn default_grid(&self) -> usize {
        (8 * (self.degree + 1)).max(64)
    }

    /// Smallest singular value of `phi(theta)` over `points` equispaced samples.
    pub fn certificate_on(&self, points: usize) -> InvertibilityCertificate {
        let mut best = InvertibilityCertificate { floor: f64::INFINITY, theta: 0.0, points };
        for j in 0..points {
            let t = theta(j, points);
            let s = smallest_singular_value(&self.evaluate(t));
            if s < best.floor {
                best.floor = s;
                best.theta = t;
            }
        }
        best
    }

    pub fn certificate(&self) -> InvertibilityCertificate {
        self.certificate_on(self.default_grid())
    }

    pub fn ensure_invertible(&self) -> Result<InvertibilityCertificate> {
        let c = self.certificate();
        if c.floor <= DEFAULT_TOL {
            return Err(Error::NotInvertible { floor: c.floor, theta: c.theta });
        }
        Ok(c)
    }

    /// Pointwise inverse, truncated to `target_degree` modes.
    pub fn invert(&self, target_degree: usize, tol: f64) -> Result<Self> {
        let pre = self.certificate_on(4 * (self.degree + 1));
        if pre.floor <= tol {
            return Err(Error::NotInvertible { floor: pre.floor, theta: pre.theta });
        }
        let m = 4 * self.degree.max(target_degree) + 1;
        let values: Vec<Mat<c64>> = self.sample(m).iter().map(|v| inverse(v.as_ref())).collect();
        let mut psi = Self::analyze(&values, target_degree)?.cleaned();
        let residual = self.inverse_residual(&psi, (2 * m).max(self.default_grid()));
        if residual > tol {
            return Err(Error::DegreeTooSmall { residual, tol, target: target_degree });
        }
        psi.tail_tol = residual;
        Ok(psi)
    }

    /// `max_theta max(|phi psi - I|, |psi phi - I|)` over a grid.
    pub fn inverse_residual(&self, psi: &Self, points: usize) -> f64 {
        let id = Mat::<c64>::identity(self.size, self.size);
        let mut r = 0.0f64;
        for j in 0..points {
            let t = theta(j, points);
            let a = self.evaluate(t);
            let b = psi.evaluate(t);
            r = r.max(matrix_norm(&(&a * &b - &id))).max(matrix_norm(&(&b * &a - &id)));
        }
        r
    }

    pub fn det(&self, theta: f64) -> c64 {
        let v = self.evaluate(theta);
        if self.size == 1 {
            v[(0, 0)]
        } else {
            v.determinant()
        }
    }

    pub fn default_quad_points(&self) -> usize {
        (64 * (self.size * self.degree + 1)).max(256)
    }

    /// Winding number of `det phi` by accumulating argument increments.
    pub fn winding_of_det(&self, quad_points: usize) -> Result<Winding> {
        if quad_points < 3 {
            return Err(Error::InvalidParameter("winding needs at least 3 points".into()));
        }
        let cert = self.certificate_on(quad_points);
        if cert.floor <= DEFAULT_TOL {
            return Err(Error::NotInvertible { floor: cert.floor, theta: cert.theta });
        }
        let dets: Vec<c64> = (0..quad_points).map(|j| self.det(theta(j, quad_points))).collect();
        let mut total = 0.0;
        let mut max_jump = 0.0f64;
        for j in 0..quad_points {
            let a = dets[j];
            let b = dets[(j + 1) % quad_points];
            let jump = (b / a).arg();
            if jump.abs() > FRAC_PI_2 {
                return Err(Error::QuadratureUnstable { step: j, jump });
            }
            max_jump = max_jump.max(jump.abs());
            total += jump;
        }
        let w = total / TAU;
        let value = w.round();
        Ok(Winding { value: value as i64, defect: (w - value).abs(), max_jump })
    }

    pub fn winding(&self) -> Result<i64> {
        Ok(self.winding_of_det(self.default_quad_points())?.value)
    }

    /// Straight-line homotopy `t psi + (1 - t) phi`, certified to stay inside
    /// the invertibles by the perturbation margin.
    pub fn homotopy_interpolate(phi: &Self, psi: &Self, t: f64) -> Result<Interpolation> {
        phi.check_size(psi)?;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!("t = {t} outside [0, 1]")));
        }
        let points = (8 * (phi.degree.max(psi.degree) + 1)).max(64);
        let mut distance = 0.0f64;
        let mut margin = f64::INFINITY;
        for j in 0..points {
            let th = theta(j, points);
            let a = phi.evaluate(th);
            let b = psi.evaluate(th);
            distance = distance.max(matrix_norm(&(&b - &a)));
            margin = margin.min(smallest_singular_value(&a));
        }
        if distance >= margin {
            return Err(Error::MarginViolated { distance, margin });
        }
        let symbol = phi.combine(psi, c64::new(1.0 - t, 0.0), c64::new(t, 0.0))?;
        Ok(Interpolation { symbol, distance, margin })
    }

    pub fn to_file(&self) -> SymbolFile {
        let coeffs = self
            .modes()
            .filter_map(|k| {
                let c = self.coeff(k);
                if max_abs(&c) == 0.0 {
                    return None;
                }
                let re = (0..self.size).map(|i| (0..self.size).map(|j| c[(i, j)].re).collect()).collect();
                let im = (0..self.size).map(|i| (0..self.size).map(|j| c[(i, j)].im).collect()).collect();
                Some(CoeffEntry { k, re, im })
            })
            .collect();
        SymbolFile { l: self.size, coeffs }
    }

    pub fn from_file(file: &SymbolFile) -> Result<Self> {
        let l = file.l;
        let mut out = Vec::with_capacity(file.coeffs.len());
        for e in &file.coeffs {
            let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == l && rows.iter().all(|r| r.len() == l);
            if !shape_ok(&e.re) || !shape_ok(&e.im) {
                return Err(Error::InvalidSymbol(format!("coefficient at k = {} is not {l}x{l}", e.k)));
            }
            if e.re.iter().chain(&e.im).flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidSymbol(format!("non-finite entry at k = {}", e.k)));
            }
            out.push((e.k, Mat::from_fn(l, l, |i, j| c64::new(e.re[i][j], e.im[i][j]))));
        }
        Self::from_coeffs(l, out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("symbol serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SymbolFile = serde_json::from_str(text)?;
        Self::from_file(&file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk symbol format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymbolFile {
    pub l: usize,
    pub coeffs: Vec<CoeffEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub k: i64,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

/// Largest spectral norm of `phi(theta)^{-1}` on the default grid.
pub fn sup_inverse_norm(phi: &TrigSymbol) -> f64 {
    1.0 / phi.certificate().floor
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn c(re: f64) -> c64 {
        c64::new(re, 0.0)
    }

    #[test]
    fn evaluates_simple_symbols() {
        let id = TrigSymbol::identity(3).evaluate(1.3);
        assert_eq!(id, Mat::<c64>::identity(3, 3));
        let z = TrigSymbol::monomial(1).evaluate(PI);
        assert!((z[(0, 0)] - c(-1.0)).norm() < 1e-15);
        let p = TrigSymbol::scalar(&[(0, c(2.0)), (1, c(1.0))]).unwrap();
        assert!((p.evaluate(0.0)[(0, 0)] - c(3.0)).norm() < 1e-15);
    }

    #[test]
    fn degree_ignores_zero_outer_coefficients() {
        let p = TrigSymbol::scalar(&[(0, c(1.0)), (5, c(0.0))]).unwrap();
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn rejects_duplicate_modes() {
        let r = TrigSymbol::scalar(&[(1, c(1.0)), (1, c(2.0))]);
        assert!(matches!(r, Err(Error::InvalidSymbol(_))));
        let text = r#"{"l":1,"coeffs":[{"k":0,"re":[[1]],"im":[[0]]},{"k":0,"re":[[2]],"im":[[0]]}]}"#;
        assert!(TrigSymbol::from_json(text).is_err());
    }

    #[test]
    fn json_round_trip_sorted() {
        let p = TrigSymbol::scalar(&[(1, c(1.0)), (-2, c64::new(0.5, -0.25)), (0, c(3.0))]).unwrap();
        let text = p.to_json();
        let ks: Vec<i64> = p.to_file().coeffs.iter().map(|e| e.k).collect();
        assert_eq!(ks, vec![-2, 0, 1]);
        let q = TrigSymbol::from_json(&text).unwrap();
        for k in -2..=2 {
            assert_eq!(p.coeff(k), q.coeff(k));
        }
    }

    #[test]
    fn inverse_of_monomial_is_exact() {
        let psi = TrigSymbol::monomial(1).invert(8, DEFAULT_TOL).unwrap();
        assert_eq!(psi.degree(), 1);
        assert!((psi.coeff_entry(-1, 0, 0) - c(1.0)).norm() < 1e-15);
        assert!(psi.tail_tol() < 1e-14);
    }

    #[test]
    fn inverse_of_two_plus_z_is_geometric() {
        let phi = TrigSymbol::scalar(&[(0, c(2.0)), (1, c(1.0))]).unwrap();
        let psi = phi.invert(40, DEFAULT_TOL).unwrap();
        for k in 0..=40i64 {
            let want = (-1f64).powi(k as i32) / 2f64.powi(k as i32 + 1);
            assert!((psi.coeff_entry(k, 0, 0) - c(want)).norm() < 1e-14, "k = {k}");
        }
        for k in 1..=40i64 {
            assert!(psi.coeff_entry(-k, 0, 0).norm() < 1e-14);
        }
    }

    #[test]
    fn inverse_fails_at_low_degree() {
        let phi = TrigSymbol::scalar(&[(0, c(2.0)), (1, c(1.0))]).unwrap();
        assert!(matches!(phi.invert(5, DEFAULT_TOL), Err(Error::DegreeTooSmall { .. })));
    }

    #[test]
    fn inverse_rejects_zero_on_circle() {
        let phi = TrigSymbol::scalar(&[(0, c(1.0)), (1, c(1.0))]).unwrap();
        assert!(matches!(phi.invert(10, DEFAULT_TOL), Err(Error::NotInvertible { .. })));
    }

    #[test]
    fn winding_examples() {
        assert_eq!(TrigSymbol::monomial(1).winding().unwrap(), 1);
        let d = TrigSymbol::block_diag(&[TrigSymbol::monomial(1), TrigSymbol::monomial(1)]).unwrap();
        assert_eq!(d.winding().unwrap(), 2);
        let p = TrigSymbol::scalar(&[(0, c(3.0)), (1, c(1.0))]).unwrap();
        let w = p.winding_of_det(256).unwrap();
        assert_eq!(w.value, 0);
        assert!(w.defect < 1e-12);
    }

    #[test]
    fn winding_detects_undersampling() {
        let r = TrigSymbol::monomial(5).winding_of_det(8);
        assert!(matches!(r, Err(Error::QuadratureUnstable { .. })));
    }

    #[test]
    fn interpolation_margin() {
        let phi = TrigSymbol::scalar(&[(0, c(2.0)), (1, c(1.0))]).unwrap();
        let psi = TrigSymbol::scalar(&[(0, c(2.1)), (1, c(1.0))]).unwrap();
        let mid = TrigSymbol::homotopy_interpolate(&phi, &psi, 0.5).unwrap();
        assert!((mid.symbol.coeff_entry(0, 0, 0) - c(2.05)).norm() < 1e-15);
        assert!((mid.distance - 0.1).abs() < 1e-12);
        assert!((mid.margin - 1.0).abs() < 1e-12);
        let start = TrigSymbol::homotopy_interpolate(&phi, &psi, 0.0).unwrap().symbol;
        assert_eq!(start.coeff(0), phi.coeff(0));
        let far = TrigSymbol::monomial(1);
        let r = TrigSymbol::homotopy_interpolate(&phi, &far, 0.5);
        assert!(matches!(r, Err(Error::MarginViolated { .. })));
    }

    #[test]
    fn adjoint_is_pointwise_conjugate_transpose() {
        let m = Mat::from_fn(2, 2, |i, j| c64::new(i as f64 + 1.0, j as f64 - 0.5));
        let p = TrigSymbol::from_coeffs(2, [(1, m.clone()), (0, Mat::identity(2, 2))]).unwrap();
        let a = p.adjoint();
        let th = 0.7;
        let lhs = a.evaluate(th);
        let rhs = p.evaluate(th).adjoint().to_owned();
        assert!((&lhs - &rhs).norm_max() < 1e-14);
    }
}
