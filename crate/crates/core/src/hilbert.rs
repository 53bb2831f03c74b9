//! The real line: the Hilbert transform eigenbasis
//! `a_n(t) = (t - i)^n / (t + i)^{n + 1}`, its Gram matrix, an FFT Hilbert
//! transform and the Cayley shift `(t - i)/(t + i)`.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{c64, Basis, Label, LabeledMatrix};

const I: c64 = c64 { re: 0.0, im: 1.0 };

/// Upper bound on quadrature work (points times retained modes).
pub const QUADRATURE_BUDGET: usize = 1 << 28;

/// Retained modes `a_n`, `n_min <= n <= n_max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LineBasisSpec {
    pub n_min: i64,
    pub n_max: i64,
}

impl LineBasisSpec {
    pub fn new(n_min: i64, n_max: i64) -> Result<Self> {
        if !(n_min <= 0 && 0 <= n_max) {
            return Err(Error::InvalidParameter(format!("need n_min <= 0 <= n_max, got [{n_min}, {n_max}]")));
        }
        Ok(Self { n_min, n_max })
    }

    pub fn symmetric(m: i64) -> Self {
        Self { n_min: -m, n_max: m }
    }

    pub fn modes(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The `a_n / sqrt(pi)` are orthonormal.
    pub fn normalization() -> f64 {
        1.0 / PI.sqrt()
    }
}

/// `(t - i)/(t + i)`, of modulus one.
pub fn cayley(t: f64) -> c64 {
    (c64::new(t, -1.0)) / (c64::new(t, 1.0))
}

pub fn eval_a_n(n: i64, t: f64) -> c64 {
    let base = c64::new(1.0, 0.0) / c64::new(t, 1.0);
    let step = if n >= 0 { cayley(t) } else { cayley(t).conj() };
    (0..n.unsigned_abs()).fold(base, |acc, _| acc * step)
}

#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub spec: LineBasisSpec,
    pub matrix: Mat<c64>,
    /// `|integral over |t| > T| <= 2/T` for every entry.
    pub tail_bound: f64,
}

impl GramMatrix {
    /// `max |G / pi - I|` over all entries.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut d = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                d = d.max((self.matrix[(i, j)] / PI - want).norm());
            }
        }
        d
    }
}

/// Exact value of the tail of `<a_m, a_n>` outside `[-T, T]`.
///
/// With `t = tan(alpha)` the integrand becomes `(-1)^p e^{2 i p alpha}`,
/// `p = n - m`, which integrates in closed form.
fn gram_tail(p: i64, big_t: f64) -> c64 {
    let a = big_t.atan();
    if p == 0 {
        c64::new(PI - 2.0 * a, 0.0)
    } else {
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        c64::new(-sign * (2.0 * p as f64 * a).sin() / p as f64, 0.0)
    }
}

/// `<a_m, a_n> = integral conj(a_m) a_n dt` by the composite midpoint rule
/// on `[-T, T]` plus the closed-form tail.
pub fn gram_quadrature(spec: LineBasisSpec, big_t: f64, points: usize) -> Result<GramMatrix> {
    if big_t < 1e3 || points < 10_000 {
        return Err(Error::InvalidParameter(format!("need T >= 1e3 and points >= 1e4, got T = {big_t}, points = {points}")));
    }
    if points.saturating_mul(spec.len()) > QUADRATURE_BUDGET {
        return Err(Error::QuadratureBudgetExceeded(format!(
            "{points} points x {} modes exceeds {QUADRATURE_BUDGET}",
            spec.len()
        )));
    }
    let modes: Vec<i64> = spec.modes().collect();
    let m = modes.len();
    let h = 2.0 * big_t / points as f64;
    let mut acc = vec![c64::new(0.0, 0.0); m * m];
    let mut vals = vec![c64::new(0.0, 0.0); m];
    for j in 0..points {
        let t = -big_t + (j as f64 + 0.5) * h;
        for (v, &n) in vals.iter_mut().zip(&modes) {
            *v = eval_a_n(n, t);
        }
        for a in 0..m {
            let ca = vals[a].conj();
            for b in a..m {
                acc[a * m + b] += ca * vals[b];
            }
        }
    }
    let matrix = Mat::from_fn(m, m, |a, b| {
        if a <= b {
            acc[a * m + b] * h + gram_tail(modes[b] - modes[a], big_t)
        } else {
            (acc[b * m + a] * h + gram_tail(modes[a] - modes[b], big_t)).conj()
        }
    });
    Ok(GramMatrix { spec, matrix, tail_bound: 2.0 / big_t })
}

/// Uniform grid `t_j = -T + j * 2T / len`, `j = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineGrid {
    pub half_width: f64,
    pub len: usize,
}

impl LineGrid {
    pub fn new(half_width: f64, len: usize) -> Result<Self> {
        if !(half_width > 0.0) || !len.is_power_of_two() || len < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs T > 0 and a power-of-two length >= 16, got T = {half_width}, len = {len}"
            )));
        }
        Ok(Self { half_width, len })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.len as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.point(j)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> c64) -> Vec<c64> {
        (0..self.len).map(|j| f(self.point(j))).collect()
    }
}

/// The multiplier sign of `(i/pi) p.v. integral f(y)/(t - y) dy` read
/// literally, relative to the forward transform `sum f_j e^{-2 pi i jk/N}`:
/// `i * (-i sgn xi) = +sgn xi`.
pub const LITERAL_KERNEL_SIGN: f64 = 1.0;

/// FFT Hilbert transform with frequency multiplier `sign * sgn(xi)`.
///
/// Samples decaying like `1/t` are handled by subtracting the two model
/// tails `t/(1+t^2)` and `1/(1+t^2)`, whose transforms are known exactly,
/// and transforming only the rapidly decaying remainder.
#[derive(Clone)]
pub struct HilbertTransform {
    grid: LineGrid,
    sign: f64,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConventionLock {
    pub sign: f64,
    /// Relative L2 eigenrelation error per mode under the chosen sign.
    pub errors: Vec<(i64, f64)>,
    /// Smallest error any mode reaches under the rejected sign.
    pub rejected_error: f64,
    pub matches_literal_kernel: bool,
}

impl ConventionLock {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().map(|e| e.1).fold(0.0, f64::max)
    }
}

fn rel_l2(a: &[c64], b: &[c64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

/// Eigenvalue of the transform on `a_n`: `+1` for `n < 0`, `-1` for `n >= 0`.
pub fn eigenvalue(n: i64) -> f64 {
    if n < 0 {
        1.0
    } else {
        -1.0
    }
}

impl HilbertTransform {
    pub fn with_sign(grid: LineGrid, sign: f64) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.len);
        let backward = planner.plan_fft_inverse(grid.len);
        Self { grid, sign: sign.signum(), forward, backward }
    }

    /// Chooses the multiplier sign by the eigenrelations on `a_n`, `|n| <= 8`.
    pub fn locked(grid: LineGrid) -> Result<(Self, ConventionLock)> {
        let modes: Vec<i64> = (-8..=8).collect();
        let samples: Vec<Vec<c64>> = modes.iter().map(|&n| grid.sample(|t| eval_a_n(n, t))).collect();
        let mut results = Vec::new();
        for sign in [1.0, -1.0] {
            let h = Self::with_sign(grid, sign);
            let mut errors = Vec::new();
            for (&n, f) in modes.iter().zip(&samples) {
                let out = h.apply(f)?;
                let want: Vec<c64> = f.iter().map(|z| z * eigenvalue(n)).collect();
                errors.push((n, rel_l2(&out, &want)));
            }
            results.push((h, errors));
        }
        let max_err = |e: &[(i64, f64)]| e.iter().map(|x| x.1).fold(0.0, f64::max);
        let min_err = |e: &[(i64, f64)]| e.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let passing: Vec<usize> = (0..2).filter(|&i| max_err(&results[i].1) < 1e-3).collect();
        if passing.len() != 1 {
            let best = results.iter().map(|r| max_err(&r.1)).fold(f64::INFINITY, f64::min);
            return Err(Error::ConventionLockFailure { best });
        }
        let chosen = passing[0];
        let rejected_error = min_err(&results[1 - chosen].1);
        let (h, errors) = results.swap_remove(chosen);
        let lock = ConventionLock { sign: h.sign, errors, rejected_error, matches_literal_kernel: h.sign == LITERAL_KERNEL_SIGN };
        Ok((h, lock))
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    pub fn grid(&self) -> LineGrid {
        self.grid
    }

    pub fn apply(&self, samples: &[c64]) -> Result<Vec<c64>> {
        let n = self.grid.len;
        if samples.len() != n {
            return Err(Error::InvalidParameter(format!("expected {n} samples, got {}", samples.len())));
        }
        let t = self.grid.points();
        let dt = self.grid.spacing();
        let r1: Vec<f64> = t.iter().map(|&x| x / (1.0 + x * x)).collect();
        let r2: Vec<f64> = t.iter().map(|&x| 1.0 / (1.0 + x * x)).collect();
        let c1 = (samples[0] * t[0] + samples[n - 1] * t[n - 1]) * 0.5;
        let c2 = samples.iter().zip(&r1).map(|(f, r)| f - c1 * r).sum::<c64>() * dt / PI;
        let mut buf: Vec<c64> = (0..n).map(|j| samples[j] - c1 * r1[j] - c2 * r2[j]).collect();
        self.forward.process(&mut buf);
        for (k, z) in buf.iter_mut().enumerate() {
            let s = if k == 0 {
                0.0
            } else if k < n / 2 {
                1.0
            } else {
                -1.0
            };
            *z *= self.sign * s / n as f64;
        }
        self.backward.process(&mut buf);
        let tail = I * self.sign;
        Ok((0..n).map(|j| buf[j] + tail * (c2 * r1[j] - c1 * r2[j])).collect())
    }

    /// `(1 - H)/2`.
    pub fn hardy_projection(&self, samples: &[c64]) -> Result<Vec<c64>> {
        let h = self.apply(samples)?;
        Ok(samples.iter().zip(&h).map(|(f, g)| (f - g) * 0.5).collect())
    }
}

/// Locks the convention on `grid` and applies the transform.
pub fn hilbert_apply_fft(samples: &[c64], grid: LineGrid) -> Result<Vec<c64>> {
    let (h, _) = HilbertTransform::locked(grid)?;
    h.apply(samples)
}

/// Eigenvalues of the locked transform on the Fourier images of functions
/// supported on a half line.
///
/// With `F[f](xi) = integral e^{-i x xi} f(x) dx`, the functions
/// `x^m e^{-x}` on `x >= 0` go to `m! / (1 + i xi)^{m+1}` and their mirror
/// images on `x <= 0` to `m! / (1 - i xi)^{m+1}`.
#[derive(Clone, Debug, Serialize)]
pub struct HalfLineImage {
    pub positive_half: f64,
    pub negative_half: f64,
    pub max_error: f64,
}

pub fn fourier_half_line_image(h: &HilbertTransform) -> Result<HalfLineImage> {
    let grid = h.grid();
    let mut out = HalfLineImage { positive_half: 0.0, negative_half: 0.0, max_error: 0.0 };
    for (side, slot) in [(1.0, 0usize), (-1.0, 1usize)] {
        let mut eig = 0.0;
        for m in 0..3i32 {
            let fact = [1.0, 1.0, 2.0][m as usize];
            let f = grid.sample(|xi| fact / (c64::new(1.0, side * xi)).powi(m + 1));
            let g = h.apply(&f)?;
            let num: c64 = g.iter().zip(&f).map(|(a, b)| b.conj() * a).sum();
            let den: f64 = f.iter().map(|b| b.norm_sqr()).sum();
            let lambda = (num / den).re.round();
            let want: Vec<c64> = f.iter().map(|z| z * lambda).collect();
            out.max_error = out.max_error.max(rel_l2(&g, &want));
            eig = lambda;
        }
        if slot == 0 {
            out.positive_half = eig;
        } else {
            out.negative_half = eig;
        }
    }
    Ok(out)
}

fn line_label(n: i64) -> Label {
    Label::new(n, 0, 0, 0)
}

fn shift_matrix(spec: LineBasisSpec, step: i64) -> LabeledMatrix {
    let labels: Vec<Label> = spec.modes().map(line_label).collect();
    let starved = if step > 0 { spec.n_min } else { spec.n_max };
    let basis = Basis::from_fn(labels, |l| l.line == starved);
    let mut m = LabeledMatrix::zeros(basis.clone(), basis);
    for n in spec.modes() {
        m.add_at(&line_label(n + step), &line_label(n), c64::new(1.0, 0.0));
    }
    m
}

/// Multiplication by `(t - i)/(t + i)` on `span{a_n}`: `a_n -> a_{n+1}`.
///
/// The row `n_min` is flagged as an edge: its source `a_{n_min - 1}` lies
/// outside the truncation.
pub fn cayley_shift_matrix(spec: LineBasisSpec) -> LabeledMatrix {
    shift_matrix(spec, 1)
}

/// Multiplication by `(t + i)/(t - i)`: `a_n -> a_{n-1}`.
pub fn inverse_cayley_shift_matrix(spec: LineBasisSpec) -> LabeledMatrix {
    shift_matrix(spec, -1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a_n_values() {
        assert!((eval_a_n(0, 0.0) - c64::new(0.0, -1.0)).norm() < 1e-15);
        assert!((eval_a_n(0, 1.0) - c64::new(0.5, -0.5)).norm() < 1e-15);
        for n in -6..=6 {
            for &t in &[-30.0, -1.5, 0.0, 0.25, 7.0] {
                let want = 1.0 / (t * t + 1.0f64).sqrt();
                assert!((eval_a_n(n, t).norm() - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn a_n_matches_closed_form() {
        for n in -5..=5i32 {
            let t = 0.8;
            let direct = c64::new(t, -1.0).powi(n) / c64::new(t, 1.0).powi(n + 1);
            assert!((eval_a_n(n as i64, t) - direct).norm() < 1e-14);
        }
    }

    #[test]
    fn cayley_identity_and_shift_matrix() {
        for n in -4..4 {
            for &t in &[-3.0, 0.0, 0.5, 11.0] {
                assert!((cayley(t) * eval_a_n(n, t) - eval_a_n(n + 1, t)).norm() < 1e-14);
                assert!((eval_a_n(n + 1, t) / cayley(t) - eval_a_n(n, t)).norm() < 1e-14);
            }
        }
        let spec = LineBasisSpec::symmetric(3);
        let s = cayley_shift_matrix(spec);
        let d = s.data();
        for i in 0..spec.len() {
            for j in 0..spec.len() {
                let want = if i == j + 1 { 1.0 } else { 0.0 };
                assert_eq!(d[(i, j)].re, want);
            }
        }
        assert!(s.rows().is_edge(0));
        let back = inverse_cayley_shift_matrix(spec);
        assert!(back.interior_inverse_defect(&s).unwrap() < 1e-15);
        assert!(s.interior_inverse_defect(&back).unwrap() < 1e-15);
    }

    #[test]
    fn gram_small_modes() {
        let g = gram_quadrature(LineBasisSpec::symmetric(2), 1e4, 1 << 17).unwrap();
        assert!(g.orthonormality_defect() < 1e-6);
        assert!((g.tail_bound - 2e-4).abs() < 1e-18);
        assert!(matches!(gram_quadrature(LineBasisSpec::symmetric(2), 10.0, 1 << 17), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            gram_quadrature(LineBasisSpec::symmetric(2), 1e4, 1 << 27),
            Err(Error::QuadratureBudgetExceeded(_))
        ));
    }

    #[test]
    fn gram_tail_matches_quadrature() {
        let t0 = 1e3;
        let t1 = 2e3;
        let n = 400_000;
        let h = (t1 - t0) / n as f64;
        for p in [0i64, 1, 3] {
            let mut s = c64::new(0.0, 0.0);
            for j in 0..n {
                let t = t0 + (j as f64 + 0.5) * h;
                s += (cayley(t).powi(p as i32) + cayley(-t).powi(p as i32)) / (1.0 + t * t) * h;
            }
            let want = gram_tail(p, t0) - gram_tail(p, t1);
            assert!((s - want).norm() < 1e-10, "p = {p}");
        }
    }

    fn grid() -> LineGrid {
        LineGrid::new(2048.0, 1 << 16).unwrap()
    }

    #[test]
    fn lock_rejects_literal_kernel_sign() {
        let (h, lock) = HilbertTransform::locked(grid()).unwrap();
        assert_eq!(h.sign(), -1.0);
        assert!(!lock.matches_literal_kernel);
        assert!(lock.max_error() < 1e-3);
        assert!(lock.rejected_error > 1.0);
        let out = hilbert_apply_fft(&grid().sample(|t| eval_a_n(-1, t)), grid()).unwrap();
        let want = grid().sample(|t| eval_a_n(-1, t));
        assert!(rel_l2(&out, &want) < 1e-3);
    }

    #[test]
    fn square_is_identity_and_projection_is_idempotent() {
        let (h, _) = HilbertTransform::locked(grid()).unwrap();
        let g = grid();
        let interior: Vec<usize> = (0..g.len).filter(|&j| g.point(j).abs() <= g.half_width / 2.0).collect();
        let restrict = |v: &[c64]| interior.iter().map(|&j| v[j]).collect::<Vec<_>>();
        for f in [g.sample(|t| eval_a_n(0, t)), g.sample(|t| c64::new((-t * t / 8.0).exp(), 0.0))] {
            let hh = h.apply(&h.apply(&f).unwrap()).unwrap();
            assert!(rel_l2(&restrict(&hh), &restrict(&f)) < 1e-3);
            let p = h.hardy_projection(&f).unwrap();
            let pp = h.hardy_projection(&p).unwrap();
            assert!(rel_l2(&restrict(&pp), &restrict(&p)) < 1e-3);
        }
        for n in -3..=3 {
            let f = g.sample(|t| eval_a_n(n, t));
            let p = h.hardy_projection(&f).unwrap();
            let want: Vec<c64> = if n >= 0 { f.clone() } else { vec![c64::new(0.0, 0.0); f.len()] };
            let err: f64 = p.iter().zip(&want).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
                / f.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-3, "n = {n}: {err}");
        }
    }

    #[test]
    fn half_line_images_sit_in_opposite_sectors() {
        let (h, _) = HilbertTransform::locked(grid()).unwrap();
        let img = fourier_half_line_image(&h).unwrap();
        assert_eq!(img.positive_half, 1.0);
        assert_eq!(img.negative_half, -1.0);
        assert!(img.max_error < 1e-3);
    }
}
