//! The Roe cocycle, its pairing with invertibles, and the trace identity for
//! the index of a compression.
//!
//! All traces are finite sums over commutators with a grading, which are
//! supported near the cut, so truncated matrices give exact values as long
//! as the window contains that support.

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cylinder::{build_t_phi, compress_index, CylinderTruncation};
use crate::error::{Error, Result};
use crate::index::{stabilized_index, IndexReport, SectionFamily, TruncationPolicy};
use crate::matrix::{c64, ser_c64, singular_values, Basis, GradingOp, GradingRole, Label, LabeledMatrix};
use crate::symbol::{TrigSymbol, DEFAULT_TOL};
use crate::toeplitz::fredholm_index;

const ZERO: c64 = c64 { re: 0.0, im: 0.0 };

/// Largest interior defect of `u * u_inv - I` accepted as an inverse pair.
pub const INVERSE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CocycleValue {
    #[serde(serialize_with = "ser_c64")]
    pub zeta: c64,
    pub rank_a: usize,
    pub rank_b: usize,
}

fn same_basis(a: &LabeledMatrix, b: &LabeledMatrix, g: &GradingOp) -> Result<()> {
    g.check_basis(a)?;
    g.check_basis(b)
}

/// `1/4 tr(G [G, A] [G, B])` in `O(n^2)`: entry `(i, j)` of `[G, A]` is
/// `(g_i - g_j) A_ij`.
fn zeta_raw(a: impl Fn(usize, usize) -> c64, b: impl Fn(usize, usize) -> c64, g: &[f64]) -> c64 {
    let n = g.len();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            let d = g[i] - g[j];
            if d != 0.0 {
                acc += a(i, j) * b(j, i) * (-g[i] * d * d);
            }
        }
    }
    acc * 0.25
}

fn signs(g: &GradingOp) -> Vec<f64> {
    g.signs().iter().map(|&s| s as f64).collect()
}

/// Rank of `[G, A]`, computed on the rows and columns where it can be nonzero.
fn commutator_rank(a: &LabeledMatrix, g: &[f64]) -> Result<usize> {
    let d = a.data();
    let n = g.len();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if g[i] != g[j] && d[(i, j)] != ZERO {
                rows.push(i);
                cols.push(j);
            }
        }
    }
    rows.sort_unstable();
    rows.dedup();
    cols.sort_unstable();
    cols.dedup();
    let m = Mat::from_fn(rows.len(), cols.len(), |r, c| d[(rows[r], cols[c])] * (g[rows[r]] - g[cols[c]]));
    let sv = singular_values(m.as_ref())?;
    let top = sv.first().copied().unwrap_or(0.0);
    Ok(sv.iter().filter(|&&s| s > 1e-10 * top.max(1.0)).count())
}

pub fn roe_cocycle(a: &LabeledMatrix, b: &LabeledMatrix, grading: &GradingOp) -> Result<CocycleValue> {
    same_basis(a, b, grading)?;
    let g = signs(grading);
    let (da, db) = (a.data(), b.data());
    let zeta = zeta_raw(|i, j| da[(i, j)], |i, j| db[(i, j)], &g);
    Ok(CocycleValue { zeta, rank_a: commutator_rank(a, &g)?, rank_b: commutator_rank(b, &g)? })
}

/// Positions of each component in a basis whose components share the same
/// `(line, circle, spinor)` labels in the same order.
fn component_positions(basis: &Basis) -> Result<Vec<Vec<usize>>> {
    let l = basis.labels().iter().map(|x| x.comp as usize + 1).max().unwrap_or(0);
    let mut pos = vec![Vec::new(); l];
    for (i, x) in basis.labels().iter().enumerate() {
        pos[x.comp as usize].push(i);
    }
    let strip = |x: Label| (x.line, x.circle, x.spinor);
    for c in 1..l {
        let same = pos[c].len() == pos[0].len()
            && pos[c].iter().zip(&pos[0]).all(|(&i, &j)| strip(basis.label(i)) == strip(basis.label(j)));
        if !same {
            return Err(Error::BasisMismatch(format!("component {c} does not share the base labels of component 0")));
        }
    }
    Ok(pos)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct PairingValue {
    /// `sum_{i,j} zeta((u^-1)_{ji}, u_{ij})`, i.e. the pairing times `8 pi i`.
    #[serde(serialize_with = "ser_c64")]
    pub times_8pi_i: c64,
    /// The same sum as one trace over the full space.
    #[serde(serialize_with = "ser_c64")]
    pub direct: c64,
    /// The factor `1 / (8 pi i)`, kept apart from the sum.
    #[serde(serialize_with = "ser_c64")]
    pub factor: c64,
    pub inverse_defect: f64,
}

impl PairingValue {
    pub fn value(&self) -> c64 {
        self.times_8pi_i * self.factor
    }

    pub fn form_defect(&self) -> f64 {
        (self.times_8pi_i - self.direct).norm()
    }

    /// Nearest integer to the real part and the distance to it, imaginary part included.
    pub fn rounded(&self) -> (i64, f64) {
        let r = self.times_8pi_i.re.round();
        (r as i64, (self.times_8pi_i - c64::new(r, 0.0)).norm())
    }
}

pub fn pairing_factor() -> c64 {
    c64::new(0.0, -1.0 / (8.0 * std::f64::consts::PI))
}

/// Pairs the invertible `u` with the cocycle, summing over the blocks of the
/// component index and, independently, as a single trace.
pub fn connes_pairing(u: &LabeledMatrix, u_inv: &LabeledMatrix, grading: &GradingOp) -> Result<PairingValue> {
    same_basis(u, u_inv, grading)?;
    let inverse_defect = u.interior_inverse_defect(u_inv)?.max(u_inv.interior_inverse_defect(u)?);
    if inverse_defect > INVERSE_TOL {
        return Err(Error::NotInverse { defect: inverse_defect });
    }
    let g = signs(grading);
    let pos = component_positions(grading.basis())?;
    let (du, dv) = (u.data(), u_inv.data());

    let mut blockwise = ZERO;
    for ci in 0..pos.len() {
        for cj in 0..pos.len() {
            let (pi, pj) = (&pos[ci], &pos[cj]);
            let gb: Vec<f64> = pi.iter().map(|&p| g[p]).collect();
            if pj.iter().zip(&gb).any(|(&p, &s)| g[p] != s) {
                return Err(Error::BasisMismatch("grading differs between components".into()));
            }
            // A = (u^-1)_{ji}: rows of component j, columns of component i.
            blockwise += zeta_raw(|r, c| dv[(pj[r], pi[c])], |r, c| du[(pi[r], pj[c])], &gb);
        }
    }
    let direct = zeta_raw(|i, j| dv[(i, j)], |i, j| du[(i, j)], &g);
    Ok(PairingValue { times_8pi_i: blockwise, direct, factor: pairing_factor(), inverse_defect })
}

/// `tr(P [P, A] [P, B] P)` with `P` the projection onto the `+1` part.
fn compressed_commutator_trace(a: MatRefC, b: MatRefC, p: &[f64]) -> c64 {
    let n = p.len();
    let mut acc = ZERO;
    for i in 0..n {
        if p[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            let d = p[i] - p[j];
            if d != 0.0 {
                acc -= a[(i, j)] * b[(j, i)] * (d * d);
            }
        }
    }
    acc
}

type MatRefC<'a> = faer::MatRef<'a, c64>;

#[derive(Clone, Debug, Serialize)]
pub struct TraceIdentity {
    pub lhs: i64,
    pub rhs: f64,
    /// Distance of the trace difference from the nearest integer.
    pub defect: f64,
    pub agree: bool,
    pub report: IndexReport,
}

/// Compares the stabilized index of `P u P` (from `family`) with
/// `tr(P - P u^-1 P u P) - tr(P - P u P u^-1 P)`, written through
/// commutators as `-tr(P [P,u^-1][P,u] P) + tr(P [P,u][P,u^-1] P)`.
pub fn index_trace_identity(
    u: &LabeledMatrix,
    u_inv: &LabeledMatrix,
    projection: &GradingOp,
    family: &dyn SectionFamily,
    policy: &TruncationPolicy,
) -> Result<TraceIdentity> {
    same_basis(u, u_inv, projection)?;
    let defect = u.interior_inverse_defect(u_inv)?;
    if defect > INVERSE_TOL {
        return Err(Error::NotInverse { defect });
    }
    let p: Vec<f64> = projection.signs().iter().map(|&s| if s > 0 { 1.0 } else { 0.0 }).collect();
    let rhs_c = -compressed_commutator_trace(u_inv.data(), u.data(), &p) + compressed_commutator_trace(u.data(), u_inv.data(), &p);
    let report = stabilized_index(family, policy)?.require_converged()?;
    let rhs = rhs_c.re;
    let defect = (rhs_c - c64::new(rhs.round(), 0.0)).norm();
    Ok(TraceIdentity { lhs: report.index, rhs, defect, agree: report.index == rhs.round() as i64 && defect < 1e-8, report })
}

/// An invertible operator cut to a finite window, with its inverse and the
/// grading `+1` on `n >= 0`.
#[derive(Clone, Debug)]
pub struct PairingWindow {
    pub u: LabeledMatrix,
    pub u_inv: LabeledMatrix,
    pub grading: GradingOp,
}

/// Powers of the bilateral shift `e_n -> e_{n+1}` on `|n| <= n_max`.
pub fn bilateral_shift(power: i64, n_max: i64) -> Result<PairingWindow> {
    if n_max < power.abs() + 1 {
        return Err(Error::InvalidParameter(format!("window {n_max} too small for shift power {power}")));
    }
    let labels: Vec<Label> = (-n_max..=n_max).map(|n| Label::new(n, 0, 0, 0)).collect();
    let reach = power.abs();
    let basis = Basis::from_fn(labels, |l| l.line.abs() > n_max - reach);
    let shift = |p: i64| {
        let mut m = LabeledMatrix::zeros(basis.clone(), basis.clone());
        for n in -n_max..=n_max {
            m.add_at(&Label::new(n + p, 0, 0, 0), &Label::new(n, 0, 0, 0), c64::new(1.0, 0.0));
        }
        m
    };
    let grading = GradingOp::from_fn(basis.clone(), GradingRole::Partition, |l| l.line >= 0);
    Ok(PairingWindow { u: shift(power), u_inv: shift(-power), grading })
}

/// `T_phi` and `T_{phi^-1}` on a cylinder window wide enough to hold every
/// commutator with the line grading.
pub fn cylinder_window(phi: &TrigSymbol, inverse_degree: usize) -> Result<PairingWindow> {
    let psi = phi.invert(inverse_degree, DEFAULT_TOL)?;
    let reach = phi.degree().max(psi.degree());
    let trunc = CylinderTruncation { n_min: -3, n_max: 3, k_max: reach + 4, l: phi.size(), margin: reach + 4 };
    let u = build_t_phi(phi, trunc)?;
    let u_inv = build_t_phi(&psi, trunc)?;
    let grading = u.line_grading();
    Ok(PairingWindow { u: u.matrix, u_inv: u_inv.matrix, grading })
}

/// Smallest inverse degree that meets the default tolerance, searched upward
/// from `8 (degree + 1)`.
pub fn auto_inverse_degree(phi: &TrigSymbol) -> Result<usize> {
    let mut target = 8 * (phi.degree() + 1);
    loop {
        match phi.invert(target, DEFAULT_TOL) {
            Ok(psi) => return Ok(psi.degree()),
            Err(Error::DegreeTooSmall { .. }) if target < 512 => target *= 2,
            Err(e) => return Err(e),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CylinderPairing {
    pub pairing: PairingValue,
    pub index: IndexReport,
    pub times_8pi_i_rounded: i64,
    pub rounding_defect: f64,
    pub matches_index: bool,
}

/// Checks that the pairing of `T_phi` times `8 pi i` is minus the index of
/// its compression.
pub fn cylinder_pairing(phi: &TrigSymbol, policy: &TruncationPolicy) -> Result<CylinderPairing> {
    let w = cylinder_window(phi, auto_inverse_degree(phi)?)?;
    let pairing = connes_pairing(&w.u, &w.u_inv, &w.grading)?;
    let index = compress_index(phi, policy)?;
    let (rounded, defect) = pairing.rounded();
    Ok(CylinderPairing {
        pairing,
        matches_index: index.converged && rounded == -index.index && defect < 1e-6,
        index,
        times_8pi_i_rounded: rounded,
        rounding_defect: defect,
    })
}

/// Compressions `P S^p P` of the bilateral shift to `n >= 0`.
pub struct ShiftCompression {
    symbol: TrigSymbol,
}

impl ShiftCompression {
    pub fn new(power: i64) -> Self {
        Self { symbol: TrigSymbol::monomial(power) }
    }

    pub fn index(&self, policy: &TruncationPolicy) -> Result<IndexReport> {
        fredholm_index(&self.symbol, policy)
    }
}

impl SectionFamily for ShiftCompression {
    fn default_start(&self) -> usize {
        crate::toeplitz::ToeplitzFamily::new(&self.symbol).default_start()
    }

    fn section(&self, level: usize) -> Result<Mat<c64>> {
        crate::toeplitz::ToeplitzFamily::new(&self.symbol).section(level)
    }

    fn adjoint_section(&self, level: usize) -> Result<Mat<c64>> {
        crate::toeplitz::ToeplitzFamily::new(&self.symbol).adjoint_section(level)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CocycleIdentities {
    pub trials: usize,
    /// Largest `|zeta(A, B) + zeta(B, A)|`.
    pub antisymmetry: f64,
    /// Largest `|zeta(AB, C) - zeta(A, BC) + zeta(CA, B)|`.
    pub hochschild: f64,
}

fn random_banded(basis: &Basis, band: i64, rng: &mut ChaCha8Rng) -> LabeledMatrix {
    let n = basis.len();
    let data = Mat::from_fn(n, n, |i, j| {
        if (basis.label(i).line - basis.label(j).line).abs() <= band {
            c64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        } else {
            ZERO
        }
    });
    LabeledMatrix::new(basis.clone(), basis.clone(), data).expect("square")
}

/// Checks cyclic antisymmetry and the Hochschild cocycle identity on random
/// banded triples over `|n| <= n_max`.
pub fn cocycle_identities(seed: u64, n_max: i64, trials: usize) -> Result<CocycleIdentities> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let basis = Basis::new((-n_max..=n_max).map(|n| Label::new(n, 0, 0, 0)).collect());
    let g = GradingOp::from_fn(basis.clone(), GradingRole::Partition, |l| l.line >= 0);
    let mut out = CocycleIdentities { trials, antisymmetry: 0.0, hochschild: 0.0 };
    for _ in 0..trials {
        let a = random_banded(&basis, 2, &mut rng);
        let b = random_banded(&basis, 2, &mut rng);
        let c = random_banded(&basis, 2, &mut rng);
        let z = |x: &LabeledMatrix, y: &LabeledMatrix| roe_cocycle(x, y, &g).map(|v| v.zeta);
        out.antisymmetry = out.antisymmetry.max((z(&a, &b)? + z(&b, &a)?).norm());
        let h = z(&a.matmul(&b)?, &c)? - z(&a, &b.matmul(&c)?)? + z(&c.matmul(&a)?, &b)?;
        out.hochschild = out.hochschild.max(h.norm());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::CylinderFamily;

    fn close(a: c64, re: f64) -> bool {
        (a - c64::new(re, 0.0)).norm() < 1e-12
    }

    #[test]
    fn shift_cocycle_values() {
        let w = bilateral_shift(1, 6).unwrap();
        let z = roe_cocycle(&w.u_inv, &w.u, &w.grading).unwrap();
        assert!(close(z.zeta, 1.0), "{:?}", z.zeta);
        assert_eq!((z.rank_a, z.rank_b), (1, 1));
        assert!(close(roe_cocycle(&w.u, &w.u_inv, &w.grading).unwrap().zeta, -1.0));
        let id = LabeledMatrix::identity(w.grading.basis().clone());
        assert!(close(roe_cocycle(&id, &id, &w.grading).unwrap().zeta, 0.0));
    }

    #[test]
    fn shift_cocycle_stabilizes() {
        for n in 2..12 {
            let w = bilateral_shift(1, n).unwrap();
            assert!(close(roe_cocycle(&w.u_inv, &w.u, &w.grading).unwrap().zeta, 1.0));
        }
    }

    #[test]
    fn shift_pairings() {
        let w = bilateral_shift(1, 8).unwrap();
        let p = connes_pairing(&w.u, &w.u_inv, &w.grading).unwrap();
        assert!(close(p.times_8pi_i, 1.0));
        assert!((p.value() - c64::new(0.0, -1.0 / (8.0 * std::f64::consts::PI))).norm() < 1e-15);
        let w2 = bilateral_shift(2, 8).unwrap();
        assert!(close(connes_pairing(&w2.u, &w2.u_inv, &w2.grading).unwrap().times_8pi_i, 2.0));
        let id = LabeledMatrix::identity(w.grading.basis().clone());
        assert!(close(connes_pairing(&id, &id, &w.grading).unwrap().times_8pi_i, 0.0));
    }

    #[test]
    fn random_cocycle_identities() {
        let r = cocycle_identities(11, 6, 20).unwrap();
        assert!(r.antisymmetry < 1e-10 && r.hochschild < 1e-10, "{r:?}");
    }

    #[test]
    fn non_inverse_is_rejected() {
        let w = bilateral_shift(1, 6).unwrap();
        assert!(matches!(connes_pairing(&w.u, &w.u, &w.grading), Err(Error::NotInverse { .. })));
    }

    #[test]
    fn mismatched_bases_are_rejected() {
        let a = bilateral_shift(1, 5).unwrap();
        let b = bilateral_shift(1, 6).unwrap();
        assert!(matches!(roe_cocycle(&a.u, &b.u, &a.grading), Err(Error::BasisMismatch(_))));
    }

    #[test]
    fn trace_identity_on_shifts() {
        let policy = TruncationPolicy::default();
        for p in [0, 1, 2] {
            let w = bilateral_shift(p, 32).unwrap();
            let t = index_trace_identity(&w.u, &w.u_inv, &w.grading, &ShiftCompression::new(p), &policy).unwrap();
            assert!(t.agree, "{t:?}");
            assert_eq!(t.lhs, -p);
        }
    }

    #[test]
    fn cylinder_pairing_matches_index() {
        let policy = TruncationPolicy::default();
        for k in [-1, 0, 1, 2] {
            let r = cylinder_pairing(&TrigSymbol::monomial(k), &policy).unwrap();
            assert!(r.matches_index, "{k}: {r:?}");
            assert_eq!(r.times_8pi_i_rounded, k);
            assert!(r.pairing.form_defect() < 1e-12);
        }
    }

    #[test]
    fn cylinder_trace_identity() {
        let phi = TrigSymbol::monomial(1);
        let w = cylinder_window(&phi, 1).unwrap();
        let t = index_trace_identity(&w.u, &w.u_inv, &w.grading, &CylinderFamily::new(&phi), &TruncationPolicy::default())
            .unwrap();
        assert!(t.agree, "{t:?}");
        assert_eq!(t.lhs, -1);
    }
}
