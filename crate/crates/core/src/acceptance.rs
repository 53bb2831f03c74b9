//! The ten acceptance criteria, each evaluated over the built-in corpus.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::corpus::{corpus, homotopy_pair, CorpusEntry};
use crate::cylinder::{
    block_split_check, compress_index, fiber_resolvent_bound_sweep, homotopy_continuity_sweep, verify_scalar_bounds,
    CylinderFamily, CylinderTruncation, FiberGrid, ScalarGrids,
};
use crate::error::Result;
use crate::grid::{cobordism_shift_test, homotopy_endpoint_indices, index_class_grid, ChoppingSpec, CylinderGrid};
use crate::hilbert::{fourier_half_line_image, gram_quadrature, HilbertTransform, LineBasisSpec, LineGrid};
use crate::index::TruncationPolicy;
use crate::pairing::{auto_inverse_degree, bilateral_shift, cylinder_pairing, cylinder_window, index_trace_identity, ShiftCompression};
use crate::symbol::TrigSymbol;
use crate::toeplitz::{fredholm_index, index_theorem_check};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub summary: String,
    pub data: Value,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: {} ({:.2} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.summary,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed(id: u8, title: &'static str, f: impl FnOnce() -> Result<(bool, String, Value)>) -> CriterionResult {
    let start = Instant::now();
    let (passed, summary, data) = match f() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}"), json!({ "error": e.to_string() })),
    };
    CriterionResult { id, title, passed, summary, data, elapsed: start.elapsed() }
}

fn per_symbol<T: Send>(f: impl Fn(&CorpusEntry) -> Result<T> + Sync) -> Result<Vec<(&'static str, T)>> {
    corpus().par_iter().map(|e| Ok((e.id, f(e)?))).collect()
}

pub fn criterion_1() -> CriterionResult {
    timed(1, "circle Toeplitz index equals minus the winding", || {
        let policy = TruncationPolicy::default();
        let rows = per_symbol(|e| {
            let start = Instant::now();
            let check = index_theorem_check(&e.symbol, &policy)?;
            Ok((check, start.elapsed()))
        })?;
        let mut ok = true;
        let mut data = Vec::new();
        for (id, (c, dt)) in &rows {
            let small = c.report.truncations.iter().all(|&n| n <= 64);
            let fast = dt.as_secs_f64() < 1.0;
            ok &= c.holds && small && fast;
            data.push(json!({ "symbol": id, "index": c.index, "winding": c.winding, "converged": c.report.converged,
                "truncations": c.report.truncations, "holds": c.holds }));
        }
        Ok((ok, format!("{} symbols, index = -winding for all: {ok}", rows.len()), Value::Array(data)))
    })
}

pub fn criterion_2() -> CriterionResult {
    timed(2, "cylinder index equals circle index", || {
        let policy = TruncationPolicy::default();
        let rows = per_symbol(|e| {
            let start = Instant::now();
            let cyl = compress_index(&e.symbol, &policy)?;
            let circ = fredholm_index(&e.symbol, &policy)?;
            Ok((cyl, circ, start.elapsed()))
        })?;
        let mut ok = true;
        let mut data = Vec::new();
        for (id, (cyl, circ, dt)) in &rows {
            let family = CylinderFamily::new(&crate::corpus::builtin(id)?);
            let caps_ok = cyl.truncations.iter().all(|&k| k <= 64 && family.line_cap(k) <= 64);
            let pass = cyl.converged && cyl.index == circ.index && caps_ok && dt.as_secs_f64() < 10.0;
            ok &= pass;
            data.push(json!({ "symbol": id, "cylinder": cyl.index, "circle": circ.index, "converged": cyl.converged,
                "truncations": cyl.truncations }));
        }
        Ok((ok, format!("{} symbols agree: {ok}", rows.len()), Value::Array(data)))
    })
}

pub fn criterion_3() -> CriterionResult {
    timed(3, "8 pi i times the pairing equals minus the index", || {
        let policy = TruncationPolicy::default();
        let rows = per_symbol(|e| cylinder_pairing(&e.symbol, &policy))?;
        let mut ok = true;
        let mut worst = 0.0f64;
        let mut data = Vec::new();
        for (id, r) in &rows {
            ok &= r.matches_index;
            worst = worst.max(r.rounding_defect);
            data.push(json!({ "symbol": id, "pairing_times_8pi_i": r.times_8pi_i_rounded, "index": r.index.index,
                "rounding_defect": r.rounding_defect, "form_defect": r.pairing.form_defect() }));
        }
        Ok((ok, format!("all match: {ok}, worst rounding defect {worst:.1e}"), Value::Array(data)))
    })
}

pub fn criterion_4() -> CriterionResult {
    timed(4, "trace identity for the index", || {
        let policy = TruncationPolicy::default();
        let mut data = Vec::new();
        let mut ok = true;
        for p in [1, 2] {
            let w = bilateral_shift(p, 32)?;
            let t = index_trace_identity(&w.u, &w.u_inv, &w.grading, &ShiftCompression::new(p), &policy)?;
            ok &= t.agree;
            data.push(json!({ "case": format!("S^{p}"), "lhs": t.lhs, "rhs": t.rhs, "defect": t.defect, "agree": t.agree }));
        }
        let phi = TrigSymbol::monomial(1);
        let w = cylinder_window(&phi, auto_inverse_degree(&phi)?)?;
        let t = index_trace_identity(&w.u, &w.u_inv, &w.grading, &CylinderFamily::new(&phi), &policy)?;
        ok &= t.agree;
        data.push(json!({ "case": "T_z", "lhs": t.lhs, "rhs": t.rhs, "defect": t.defect, "agree": t.agree }));
        Ok((ok, format!("shift, shift squared and T_z agree: {ok}"), Value::Array(data)))
    })
}

pub fn criterion_5() -> CriterionResult {
    timed(5, "scalar bounds", || {
        let r = verify_scalar_bounds(&ScalarGrids::default());
        let ok = r.all_hold() && r.evaluations >= 200_000;
        let worst = r.families.iter().map(|f| f.max_ratio).fold(0.0, f64::max);
        Ok((ok, format!("{} evaluations, max value/bound {worst:.6}", r.evaluations), serde_json::to_value(&r)?))
    })
}

pub fn criterion_6() -> CriterionResult {
    timed(6, "fiber operator bounds", || {
        let s = fiber_resolvent_bound_sweep(&FiberGrid::default())?;
        let ok = s.max_resolvent_norm <= 4.0 + 1e-10 && s.min_gap_defect >= -1e-12;
        Ok((
            ok,
            format!("{} fibers, max resolvent norm {:.6}, min(sigma_min - s) {:.2e}", s.points, s.max_resolvent_norm, s.min_gap_defect),
            serde_json::to_value(&s)?,
        ))
    })
}

/// Grid used for the homotopy endpoints and the grid criterion.
pub fn reference_grid() -> CylinderGrid {
    CylinderGrid::new(16.0, 64, 16)
}

pub fn criterion_7() -> CriterionResult {
    timed(7, "homotopy endpoints and continuity", || {
        let phi = TrigSymbol::monomial(1);
        let s: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let xis = FiberGrid { xi_points: 41, ..FiberGrid::default() }.xis();
        let cont = homotopy_continuity_sweep(&phi, &s, CylinderTruncation::for_symbol(&phi, 2, 8), &xis)?;
        let ends = homotopy_endpoint_indices(&reference_grid(), &phi)?;
        let ok = ends.agree && cont.linear && cont.constant.is_finite() && cont.endpoint_deviation < 1e-12 && cont.form_agreement < 1e-10;
        Ok((
            ok,
            format!(
                "endpoint indices {} and {}, continuity constant {:.4} (refined {:.4}), linear: {}",
                ends.start.report.index, ends.end.report.index, cont.constant, cont.refined_constant, cont.linear
            ),
            json!({ "continuity": cont, "start": ends.start, "end": ends.end }),
        ))
    })
}

pub fn criterion_8() -> CriterionResult {
    timed(8, "block decomposition of the compression", || {
        let rows = per_symbol(|e| block_split_check(&e.symbol, auto_inverse_degree(&e.symbol)?))?;
        let x0 = rows.iter().map(|r| r.1.x0_deviation).fold(0.0, f64::max);
        let x1 = rows.iter().map(|r| r.1.x1_residual).fold(0.0, f64::max);
        let data: Vec<Value> = rows.iter().map(|(id, r)| json!({ "symbol": id, "report": r })).collect();
        Ok((x0 <= 1e-12 && x1 <= 1e-8, format!("X0 deviation {x0:.1e}, X1 residual {x1:.1e}"), Value::Array(data)))
    })
}

pub fn criterion_9() -> CriterionResult {
    timed(9, "line basis orthogonality and Hilbert eigenrelations", || {
        let g = gram_quadrature(LineBasisSpec::symmetric(8), 1e4, 1 << 20)?;
        let defect = g.orthonormality_defect() * std::f64::consts::PI;
        let (h, lock) = HilbertTransform::locked(LineGrid::new(2048.0, 1 << 16)?)?;
        let half = fourier_half_line_image(&h)?;
        let ok = defect <= 1e-6 && lock.max_error() < 1e-3;
        Ok((
            ok,
            format!("Gram defect {defect:.1e}, eigenrelation error {:.1e}, multiplier sign {}", lock.max_error(), lock.sign),
            json!({ "gram_defect": defect, "lock": lock, "half_line_image": half }),
        ))
    })
}

pub fn criterion_10() -> CriterionResult {
    timed(10, "grid index against the oracle and cut shifts", || {
        let grid = reference_grid();
        let spec = ChoppingSpec::Rational;
        let policy = TruncationPolicy::default();
        let symbols = [("one", TrigSymbol::identity(1)), ("z", TrigSymbol::monomial(1)), ("z^2", TrigSymbol::monomial(2))];
        let reports: Vec<_> = symbols.par_iter().map(|(_, phi)| index_class_grid(&grid, phi, &spec)).collect::<Result<_>>()?;
        let shifts: Vec<_> = [-4i64, 4].par_iter().map(|&s| cobordism_shift_test(&grid, &TrigSymbol::monomial(1), &spec, s)).collect::<Result<_>>()?;
        let mut ok = true;
        let mut parts = Vec::new();
        let mut data = Vec::new();
        for ((id, phi), r) in symbols.iter().zip(&reports) {
            ok &= r.matches_oracle;
            let cylinder = compress_index(phi, &policy)?.index;
            parts.push(format!("{id}: grid {} oracle {}", r.chopping.report.index, r.oracle));
            data.push(json!({ "symbol": id, "grid": r, "cylinder_index": cylinder }));
        }
        for s in &shifts {
            ok &= s.agree;
            parts.push(format!("cut {} -> {}: {} = {}", s.cut_before, s.cut_after, s.index_before, s.index_after));
        }
        Ok((ok, parts.join("; "), json!({ "symbols": data, "shifts": shifts })))
    })
}

pub type Criterion = fn() -> CriterionResult;

pub const CRITERIA: [Criterion; 10] =
    [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9, criterion_10];

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| c()).collect()
}

/// Homotopy pair check used by the suite: both ends have the same index.
pub fn homotopy_pair_indices(policy: &TruncationPolicy) -> Result<(i64, i64)> {
    let (a, b) = homotopy_pair();
    Ok((fredholm_index(&a, policy)?.index, fredholm_index(&b, policy)?.index))
}
