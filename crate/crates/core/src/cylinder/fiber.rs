//! Fiberwise analysis of the homotopy `D_s` after Fourier transform in `t`.
//!
//! `D_s` has off-diagonal entries `-d/dt + m` and `d/dt + m` with
//! `m = (1 - s) k + s sgn(k)` on circle mode `k`; in the Fourier variable
//! `d/dt` becomes `i xi`, so each `(xi, k)` fiber is a 2x2 matrix.

use faer::Mat;
use serde::Serialize;

use super::{build_t_phi, cylinder_label, CylinderTruncation};
use crate::error::{Error, Result};
use crate::hilbert::cayley;
use crate::matrix::{c64, singular_values_2x2, spectral_norm};
use crate::symbol::TrigSymbol;
use crate::toeplitz::mode_block;

const I: c64 = c64 { re: 0.0, im: 1.0 };

/// `+1` for `k >= 0`, `-1` otherwise.
pub fn sgn(k: i64) -> f64 {
    if k >= 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn homotopy_mass(k: i64, s: f64) -> f64 {
    (1.0 - s) * k as f64 + s * sgn(k)
}

pub fn fiber_d_s(xi: f64, k: i64, s: f64) -> [[c64; 2]; 2] {
    let m = homotopy_mass(k, s);
    let zero = c64::new(0.0, 0.0);
    [[zero, -I * xi + m], [I * xi + m, zero]]
}

/// `D_s + (1 - s) eps` on one fiber, `eps = diag(1, -1)`.
fn shifted_fiber(xi: f64, k: i64, s: f64) -> [[c64; 2]; 2] {
    let mut f = fiber_d_s(xi, k, s);
    f[0][0] += 1.0 - s;
    f[1][1] -= 1.0 - s;
    f
}

fn inverse_2x2(m: [[c64; 2]; 2]) -> [[c64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiberGrid {
    pub xi_min: f64,
    pub xi_max: f64,
    pub xi_points: usize,
    pub k_max: i64,
    pub s_values: Vec<f64>,
}

impl Default for FiberGrid {
    fn default() -> Self {
        Self { xi_min: -50.0, xi_max: 50.0, xi_points: 201, k_max: 30, s_values: (0..=10).map(|i| i as f64 / 10.0).collect() }
    }
}

impl FiberGrid {
    pub fn xis(&self) -> Vec<f64> {
        let n = self.xi_points.max(2);
        (0..n).map(|i| self.xi_min + (self.xi_max - self.xi_min) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberSweep {
    pub points: usize,
    pub max_resolvent_norm: f64,
    pub resolvent_witness: (f64, i64, f64),
    /// `min (sigma_min(D_s) - s)`; non-negative when the gap holds.
    pub min_gap_defect: f64,
    pub gap_witness: (f64, i64, f64),
}

/// Largest `|(D_s + (1 - s) eps)^{-1}|` and smallest gap defect over the grid.
pub fn fiber_resolvent_bound_sweep(grid: &FiberGrid) -> Result<FiberSweep> {
    let mut out = FiberSweep {
        points: 0,
        max_resolvent_norm: 0.0,
        resolvent_witness: (0.0, 0, 0.0),
        min_gap_defect: f64::INFINITY,
        gap_witness: (0.0, 0, 0.0),
    };
    for &s in &grid.s_values {
        for k in -grid.k_max..=grid.k_max {
            for xi in grid.xis() {
                out.points += 1;
                let (_, lo) = singular_values_2x2(fiber_d_s(xi, k, s));
                if lo - s < out.min_gap_defect {
                    out.min_gap_defect = lo - s;
                    out.gap_witness = (xi, k, s);
                }
                let (_, lo_shift) = singular_values_2x2(shifted_fiber(xi, k, s));
                let norm = 1.0 / lo_shift;
                if norm > out.max_resolvent_norm {
                    out.max_resolvent_norm = norm;
                    out.resolvent_witness = (xi, k, s);
                }
            }
        }
    }
    if out.max_resolvent_norm > 4.0 + 1e-10 {
        let (xi, k, s) = out.resolvent_witness;
        return Err(Error::BoundViolated {
            family: "resolvent of D_s + (1-s) eps".into(),
            value: out.max_resolvent_norm,
            bound: 4.0,
            witness: format!("xi = {xi}, k = {k}, s = {s}"),
        });
    }
    if out.min_gap_defect < -1e-12 {
        let (xi, k, s) = out.gap_witness;
        return Err(Error::BoundViolated {
            family: "spectral gap of D_s".into(),
            value: out.min_gap_defect,
            bound: 0.0,
            witness: format!("xi = {xi}, k = {k}, s = {s}"),
        });
    }
    Ok(out)
}

/// `u_{phi,s}` on one `xi` fiber, over circle modes `|k| <= k_max`.
///
/// Rows and columns are ordered `(spinor, k, comp)`.
struct FiberFamily {
    modes: Vec<i64>,
    l: usize,
    mult: Mat<c64>,
    mult_minus_one: Mat<c64>,
    clifford_grad: Mat<c64>,
    sign_commutator: Mat<c64>,
}

impl FiberFamily {
    fn new(phi: &TrigSymbol, k_max: usize) -> Self {
        let modes: Vec<i64> = (-(k_max as i64)..=k_max as i64).collect();
        let l = phi.size();
        let mult = mode_block(phi, &modes, &modes);
        let dim = mult.nrows();
        let mult_minus_one = Mat::from_fn(dim, dim, |i, j| mult[(i, j)] - if i == j { 1.0 } else { 0.0 });
        // c(grad phi) = -i phi'
        let clifford_grad = mode_block(&phi.derivative().scale(-I), &modes, &modes);
        let f = |i: usize| sgn(modes[i / l]);
        let sign_commutator = Mat::from_fn(dim, dim, |i, j| mult[(i, j)] * (f(j) - f(i)));
        Self { modes, l, mult, mult_minus_one, clifford_grad, sign_commutator }
    }

    fn dim(&self) -> usize {
        self.mult.nrows()
    }

    fn resolvent(&self, xi: f64, s: f64) -> Vec<[[c64; 2]; 2]> {
        self.modes.iter().map(|&k| inverse_2x2(shifted_fiber(xi, k, s))).collect()
    }

    /// `diag(1, phi) + R [[(1-s)(phi-1), -(1-s) c(grad phi) + s [phi, F]], [0, (1-s)(phi-1)]]`.
    fn decomposed(&self, xi: f64, s: f64) -> Mat<c64> {
        let n = self.dim();
        let r = self.resolvent(xi, s);
        let a = 1.0 - s;
        let block = |p: usize, q: usize, i: usize, j: usize| -> c64 {
            match (p, q) {
                (0, 0) | (1, 1) => self.mult_minus_one[(i, j)] * a,
                (0, 1) => -self.clifford_grad[(i, j)] * a + self.sign_commutator[(i, j)] * s,
                _ => c64::new(0.0, 0.0),
            }
        };
        Mat::from_fn(2 * n, 2 * n, |row, col| {
            let (p, i) = (row / n, row % n);
            let (q, j) = (col / n, col % n);
            let base = match (p, q) {
                (0, 0) => c64::new(if i == j { 1.0 } else { 0.0 }, 0.0),
                (1, 1) => self.mult[(i, j)],
                _ => c64::new(0.0, 0.0),
            };
            let rk = r[i / self.l];
            base + rk[p][0] * block(0, q, i, j) + rk[p][1] * block(1, q, i, j)
        })
    }

    /// `(D_s + (1-s) eps)^{-1} diag(phi, 1) (D_s + (1-s) eps)`.
    fn conjugated(&self, xi: f64, s: f64) -> Mat<c64> {
        let n = self.dim();
        let r = self.resolvent(xi, s);
        let x: Vec<[[c64; 2]; 2]> = self.modes.iter().map(|&k| shifted_fiber(xi, k, s)).collect();
        let middle = |p: usize, i: usize, j: usize| -> c64 {
            if p == 0 {
                self.mult[(i, j)]
            } else {
                c64::new(if i == j { 1.0 } else { 0.0 }, 0.0)
            }
        };
        Mat::from_fn(2 * n, 2 * n, |row, col| {
            let (p, i) = (row / n, row % n);
            let (q, j) = (col / n, col % n);
            let ri = r[i / self.l];
            let xj = x[j / self.l];
            (0..2).map(|m| ri[p][m] * middle(m, i, j) * xj[m][q]).sum()
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ContinuityReport {
    pub s_samples: Vec<f64>,
    /// `sup_xi |u_s - u_s'|` for adjacent samples.
    pub adjacent_sup: Vec<f64>,
    /// Measured Lipschitz constant over the samples.
    pub constant: f64,
    /// Same quantities after inserting all midpoints.
    pub refined_constant: f64,
    pub refined_max_step: f64,
    pub linear: bool,
    /// `max |decomposed - conjugated|` over all fibers.
    pub form_agreement: f64,
    /// `max |u_{phi,1} - T_phi symbol|` on the lower-right block.
    pub endpoint_deviation: f64,
}

fn lipschitz(family: &FiberFamily, xis: &[f64], s: &[f64], agreement: &mut f64) -> Result<Vec<f64>> {
    let mut per_s = Vec::with_capacity(s.len());
    for &sv in s {
        let mut mats = Vec::with_capacity(xis.len());
        for &xi in xis {
            let u = family.decomposed(xi, sv);
            let v = family.conjugated(xi, sv);
            *agreement = agreement.max((&u - &v).norm_max());
            mats.push(u);
        }
        per_s.push(mats);
    }
    let mut sup = Vec::with_capacity(s.len().saturating_sub(1));
    for w in 0..s.len().saturating_sub(1) {
        let mut m = 0.0f64;
        for x in 0..xis.len() {
            m = m.max(spectral_norm((&per_s[w + 1][x] - &per_s[w][x]).as_ref())?);
        }
        sup.push(m);
    }
    Ok(sup)
}

/// Continuity modulus of `s -> u_{phi,s}` measured fiberwise.
pub fn homotopy_continuity_sweep(
    phi: &TrigSymbol,
    s_samples: &[f64],
    trunc: CylinderTruncation,
    xis: &[f64],
) -> Result<ContinuityReport> {
    trunc.validate(phi)?;
    phi.ensure_invertible()?;
    if s_samples.len() < 2 || s_samples.iter().any(|s| !(0.0..=1.0).contains(s)) || s_samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("s samples must be increasing in [0, 1]".into()));
    }
    let family = FiberFamily::new(phi, trunc.k_max);
    let mut agreement = 0.0f64;
    let sup = lipschitz(&family, xis, s_samples, &mut agreement)?;
    let quotient = |sup: &[f64], s: &[f64]| sup.iter().zip(s.windows(2)).map(|(m, w)| m / (w[1] - w[0])).fold(0.0, f64::max);
    let constant = quotient(&sup, s_samples);

    let mut refined = Vec::with_capacity(2 * s_samples.len());
    for w in s_samples.windows(2) {
        refined.push(w[0]);
        refined.push(0.5 * (w[0] + w[1]));
    }
    refined.push(*s_samples.last().unwrap());
    let sup_refined = lipschitz(&family, xis, &refined, &mut agreement)?;
    let refined_constant = quotient(&sup_refined, &refined);
    let coarse_step = sup.iter().copied().fold(0.0, f64::max);
    let refined_max_step = sup_refined.iter().copied().fold(0.0, f64::max);
    let linear = constant.is_finite()
        && refined_constant <= 1.25 * constant + 1e-12
        && refined_max_step <= 0.75 * coarse_step + 1e-12;

    let endpoint_deviation = endpoint_against_t_phi(phi, &family, trunc, xis)?;
    Ok(ContinuityReport {
        s_samples: s_samples.to_vec(),
        adjacent_sup: sup,
        constant,
        refined_constant,
        refined_max_step,
        linear,
        form_agreement: agreement,
        endpoint_deviation,
    })
}

/// Compares the `s = 1` fiber with the symbol of `T_phi` in the line
/// variable: the block coupling line modes `n -> n + delta` contributes
/// `c(xi)^delta`.
fn endpoint_against_t_phi(phi: &TrigSymbol, family: &FiberFamily, trunc: CylinderTruncation, xis: &[f64]) -> Result<f64> {
    let op = build_t_phi(phi, CylinderTruncation { n_min: -2, n_max: 2, ..trunc })?;
    let n = family.dim();
    let l = family.l;
    let mut dev = 0.0f64;
    for &xi in xis {
        let u = family.decomposed(xi, 1.0);
        let c = cayley(xi);
        for i in 0..n {
            for j in 0..n {
                let (kj, a) = (family.modes[i / l], i % l);
                let (kk, b) = (family.modes[j / l], j % l);
                let mut sym = c64::new(0.0, 0.0);
                for delta in -1..=1i32 {
                    let v = op.matrix.get(&cylinder_label(delta as i64, kj, a), &cylinder_label(0, kk, b));
                    sym += v * c.powi(delta);
                }
                dev = dev.max((u[(n + i, n + j)] - sym).norm());
                let id = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((u[(i, j)] - c64::new(id, 0.0)).norm());
                dev = dev.max(u[(i, n + j)].norm()).max(u[(n + i, j)].norm());
            }
        }
    }
    Ok(dev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_examples() {
        let f = fiber_d_s(0.0, 0, 1.0);
        assert_eq!(f[0][1], c64::new(1.0, 0.0));
        assert_eq!(f[1][0], c64::new(1.0, 0.0));
        assert_eq!(singular_values_2x2(f), (1.0, 1.0));
        let z = fiber_d_s(0.0, 0, 0.0);
        assert!(z.iter().flatten().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn resolvent_at_corners() {
        let one = FiberGrid { xi_min: 0.0, xi_max: 0.0, xi_points: 2, k_max: 0, s_values: vec![0.0, 1.0] };
        let r = fiber_resolvent_bound_sweep(&one).unwrap();
        assert!((r.max_resolvent_norm - 1.0).abs() < 1e-14);
    }

    #[test]
    fn full_sweep_respects_bounds() {
        let r = fiber_resolvent_bound_sweep(&FiberGrid::default()).unwrap();
        assert!(r.max_resolvent_norm <= 4.0 + 1e-10);
        assert!(r.min_gap_defect >= -1e-12);
        assert_eq!(r.points, 201 * 61 * 11);
    }

    fn samples() -> Vec<f64> {
        (0..=10).map(|i| i as f64 / 10.0).collect()
    }

    fn xis() -> Vec<f64> {
        (0..=40).map(|i| -20.0 + i as f64).collect()
    }

    #[test]
    fn identity_symbol_is_constant() {
        let phi = TrigSymbol::identity(1);
        let r = homotopy_continuity_sweep(&phi, &samples(), CylinderTruncation::for_symbol(&phi, 1, 4), &xis()).unwrap();
        assert!(r.constant < 1e-14);
        assert!(r.endpoint_deviation < 1e-14);
    }

    #[test]
    fn shift_symbol_is_lipschitz() {
        let phi = TrigSymbol::monomial(1);
        let r = homotopy_continuity_sweep(&phi, &samples(), CylinderTruncation::for_symbol(&phi, 1, 6), &xis()).unwrap();
        assert!(r.linear, "{r:?}");
        assert!(r.form_agreement < 1e-12);
        assert!(r.endpoint_deviation < 1e-12);
    }
}
