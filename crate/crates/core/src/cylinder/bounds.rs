//! Sup bounds for the scalar functions that control the homotopy estimates.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalarGrids {
    pub x_min: f64,
    pub x_max: f64,
    pub x_step: f64,
    pub lambdas: Vec<f64>,
    /// Homotopy parameters; values equal to 1 are skipped where undefined.
    pub s_values: Vec<f64>,
}

impl Default for ScalarGrids {
    fn default() -> Self {
        Self {
            x_min: -100.0,
            x_max: 100.0,
            x_step: 1e-3,
            lambdas: vec![0.0, 0.5, -0.5, 1.0, -1.0, 5.0, -5.0, 50.0, -50.0],
            s_values: (0..=20).map(|i| i as f64 / 20.0).collect(),
        }
    }
}

impl ScalarGrids {
    fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        let n = ((self.x_max - self.x_min) / self.x_step).round() as usize;
        (0..=n).map(move |i| self.x_min + i as f64 * self.x_step)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundFamily {
    pub name: String,
    pub evaluations: usize,
    /// Largest `|value| / bound` seen.
    pub max_ratio: f64,
    pub violations: usize,
    pub witness: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalarBoundsReport {
    pub families: Vec<BoundFamily>,
    pub evaluations: usize,
}

impl ScalarBoundsReport {
    pub fn all_hold(&self) -> bool {
        self.families.iter().all(|f| f.violations == 0)
    }

    pub fn into_result(self) -> Result<Self> {
        if let Some(f) = self.families.iter().find(|f| f.violations > 0) {
            return Err(Error::BoundViolated {
                family: f.name.clone(),
                value: f.max_ratio,
                bound: 1.0,
                witness: f.witness.clone(),
            });
        }
        Ok(self)
    }
}

/// Relative slack for floating-point rounding at equality cases.
const SLACK: f64 = 1e-12;

struct Tracker {
    family: BoundFamily,
}

impl Tracker {
    fn new(name: &str) -> Self {
        Self { family: BoundFamily { name: name.into(), evaluations: 0, max_ratio: 0.0, violations: 0, witness: String::new() } }
    }

    fn record(&mut self, value: f64, bound: f64, witness: impl FnOnce() -> String) {
        self.family.evaluations += 1;
        let ratio = value.abs() / bound;
        if ratio > 1.0 + SLACK || !ratio.is_finite() {
            self.family.violations += 1;
        }
        if ratio > self.family.max_ratio || !ratio.is_finite() {
            self.family.max_ratio = ratio;
            self.family.witness = witness();
        }
    }
}

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Evaluates every family on its grid and records the worst ratio to the
/// claimed bound.
///
/// * `x / (x^2 + (1-s)^2)` and `1 / (x^2 + (1-s)^2)` on `|x| >= s`, bound 2;
/// * `1 / (x^2 + m^2 + (1-s)^2)` with `m = (1-s) lambda + s sgn(lambda)`,
///   bound `1 / ((1-s)^2 (lambda^2 + 1))`, and `x / (...)` with bound
///   `1 / (2 (1-s) sqrt(lambda^2 + 1))`, for `s < 1`;
/// * `x / ((1+x^2) F_t(x))` and `1 / ((1+x^2) F_t(x))` with
///   `F_t(x) = t + (1-t)(1+x^2)^{-1/2}`, bound 1;
/// * `1 / F_t(x) <= 1 / t` for `t > 0`.
pub fn verify_scalar_bounds(grids: &ScalarGrids) -> ScalarBoundsReport {
    let mut f = Tracker::new("f_s = x/(x^2+(1-s)^2), |x| >= s");
    let mut g = Tracker::new("g_s = 1/(x^2+(1-s)^2), |x| >= s");
    let mut mu = Tracker::new("mu_{lambda,s}");
    let mut nu = Tracker::new("nu_{lambda,s}");
    let mut gt = Tracker::new("g_t = x/((1+x^2)F_t)");
    let mut ht = Tracker::new("h_t = 1/((1+x^2)F_t)");
    let mut ft = Tracker::new("f_t = 1/F_t <= 1/t");

    for &s in &grids.s_values {
        let a2 = (1.0 - s) * (1.0 - s);
        for x in grids.xs() {
            if x.abs() < s {
                continue;
            }
            let den = x * x + a2;
            f.record(x / den, 2.0, || format!("s = {s}, x = {x}"));
            g.record(1.0 / den, 2.0, || format!("s = {s}, x = {x}"));
        }
        if s < 1.0 {
            for &lambda in &grids.lambdas {
                let m = (1.0 - s) * lambda + s * sgn(lambda);
                let mu_bound = 1.0 / (a2 * (lambda * lambda + 1.0));
                let nu_bound = 1.0 / (2.0 * (1.0 - s) * (lambda * lambda + 1.0).sqrt());
                for x in grids.xs() {
                    let den = x * x + m * m + a2;
                    mu.record(1.0 / den, mu_bound, || format!("lambda = {lambda}, s = {s}, x = {x}"));
                    nu.record(x / den, nu_bound, || format!("lambda = {lambda}, s = {s}, x = {x}"));
                }
            }
        }
        let t = s;
        for x in grids.xs() {
            let q = 1.0 + x * x;
            let big_f = t + (1.0 - t) / q.sqrt();
            gt.record(x / (q * big_f), 1.0, || format!("t = {t}, x = {x}"));
            ht.record(1.0 / (q * big_f), 1.0, || format!("t = {t}, x = {x}"));
            if t > 0.0 {
                ft.record(1.0 / big_f, 1.0 / t, || format!("t = {t}, x = {x}"));
            }
        }
    }
    let families: Vec<BoundFamily> = [f, g, mu, nu, gt, ht, ft].into_iter().map(|t| t.family).collect();
    let evaluations = families.iter().map(|f| f.evaluations).sum();
    ScalarBoundsReport { families, evaluations }
}
