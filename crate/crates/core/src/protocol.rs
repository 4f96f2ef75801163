//! SVD-based optimization of the created projection.
//!
//! The transition matrix P(t) factors as P = V^svd Λ^svd (U^svd)^+; sending
//! the first right-singular vector and applying the extended-receiver
//! unitary V = J (V^svd)^+ (J the index-reversal permutation) turns the
//! created projection into the largest singular value, f_N = w_1. Scanning
//! the registration time and then the chain length yields the critical
//! length for a given target |f_N|^2 threshold.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::dynamics::{propagate, TransitionKernel, TransitionMatrix};
use crate::error::{Error, Result};
use crate::hamiltonian::{one_excitation_eigensystem, ChainSpec, EigenSystem};
use crate::optim::grid_refine_max;

/// Singular value decomposition of the transition matrix with both factors
/// completed to square unitaries and phases canonicalized (first nonzero
/// element of every left-singular column real positive).
#[derive(Debug, Clone)]
pub struct SvdTriple {
    /// V^svd, N_R x N_R
    pub left: DMatrix<C64>,
    /// w_1 >= w_2 >= ..., length min(N_R, N_S)
    pub singulars: DVector<f64>,
    /// U^svd, N_S x N_S
    pub right: DMatrix<C64>,
}

impl SvdTriple {
    /// Largest singular value w_1.
    pub fn w1(&self) -> f64 {
        self.singulars[0]
    }

    /// Residual of the reconstruction P = V^svd Λ (U^svd)^+.
    pub fn reconstruction_residual(&self, tm: &TransitionMatrix) -> f64 {
        let (nr, ns) = (self.left.nrows(), self.right.nrows());
        let mut lambda = DMatrix::<C64>::zeros(nr, ns);
        for (k, &w) in self.singulars.iter().enumerate() {
            lambda[(k, k)] = C64::from(w);
        }
        (&self.left * lambda * self.right.adjoint() - &tm.entries).map(|z| z.norm()).max()
    }
}

/// Extend a thin column-orthonormal matrix to a full unitary by appending
/// an orthonormal complement built from canonical basis vectors.
fn complete_unitary(thin: &DMatrix<C64>) -> DMatrix<C64> {
    let n = thin.nrows();
    let r = thin.ncols();
    if r == n {
        return thin.clone();
    }
    let mut cols: Vec<DVector<C64>> = thin.column_iter().map(|c| c.clone_owned()).collect();
    for i in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::<C64>::zeros(n);
        v[i] = C64::ONE;
        for c in &cols {
            let overlap = c.dotc(&v);
            v -= c * overlap;
        }
        let norm = v.norm();
        if norm > 1.0e-8 {
            v /= C64::from(norm);
            canonical_phase(&mut v);
            cols.push(v);
        }
    }
    debug_assert_eq!(cols.len(), n);
    DMatrix::from_columns(&cols)
}

/// Rotate a vector by a global phase so its first nonzero entry is real
/// positive.
fn canonical_phase(v: &mut DVector<C64>) -> C64 {
    let scale = v.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0e-300);
    let lead = v.iter().find(|z| z.norm() > 1.0e-12 * scale).copied();
    match lead {
        Some(z) if z.norm() > 0.0 => {
            let phase = z / C64::from(z.norm());
            let rot = phase.conj();
            for x in v.iter_mut() {
                *x *= rot;
            }
            rot
        }
        _ => C64::ONE,
    }
}

/// SVD of the transition matrix, sorted and phase-canonicalized.
pub fn svd(tm: &TransitionMatrix) -> Result<SvdTriple> {
    let (nr, ns) = (tm.entries.nrows(), tm.entries.ncols());
    let fail = Error::SvdFailure { rows: nr, cols: ns };
    let svd = nalgebra::SVD::try_new(tm.entries.clone(), true, true, 1.0e-13, 0).ok_or(fail)?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let r = svd.singular_values.len();

    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let singulars = DVector::from_iterator(r, order.iter().map(|&k| svd.singular_values[k]));
    let mut left_thin = DMatrix::<C64>::zeros(nr, r);
    let mut right_thin = DMatrix::<C64>::zeros(ns, r);
    for (col, &k) in order.iter().enumerate() {
        let mut lc = u.column(k).clone_owned();
        let rot = canonical_phase(&mut lc);
        // the same phase multiplies the right factor column to keep
        // v_k u_k^+ invariant
        let rc = v_t.row(k).adjoint() * rot;
        left_thin.set_column(col, &lc);
        right_thin.set_column(col, &rc);
    }
    Ok(SvdTriple {
        left: complete_unitary(&left_thin),
        singulars,
        right: complete_unitary(&right_thin),
    })
}

/// The optimal sender state and extended-receiver unitary derived from an
/// [`SvdTriple`].
#[derive(Debug, Clone)]
pub struct OptimalOperators {
    /// first column of U^svd: the optimal sender amplitudes
    pub sender_vector: DVector<C64>,
    /// row N_R of V (the bra applied at the receiver node): the conjugated
    /// first column of V^svd
    pub receiver_row: DVector<C64>,
    /// V = J (V^svd)^+, the full extended-receiver unitary
    pub v_matrix: DMatrix<C64>,
}

pub fn optimal_unitaries(triple: &SvdTriple) -> OptimalOperators {
    let nr = triple.left.nrows();
    let adj = triple.left.adjoint();
    let mut v_matrix = DMatrix::<C64>::zeros(nr, nr);
    for n in 0..nr {
        v_matrix.set_row(n, &adj.row(nr - 1 - n));
    }
    OptimalOperators {
        sender_vector: triple.right.column(0).clone_owned(),
        receiver_row: v_matrix.row(nr - 1).transpose(),
        v_matrix,
    }
}

/// Outcome of a registration-time optimization.
#[derive(Debug, Clone, Copy)]
pub struct TimeOptimum {
    pub t0: f64,
    pub w1: f64,
    /// true when the maximizer landed within one grid step of the window
    /// boundary, i.e. the window may be clipping the true optimum
    pub at_window_edge: bool,
}

/// Scan parameters shared by the time search and the critical-length scan.
#[derive(Debug, Clone, Copy)]
pub struct ScanConfig {
    /// first chain length to test; defaults to max(N_S + N_R, 2)
    pub n_start: Option<usize>,
    /// hard cap on the scanned chain length
    pub n_max: usize,
    /// consecutive failing lengths required to certify a critical length
    pub k_fail: usize,
    /// registration-time window as multiples of N
    pub window_factors: (f64, f64),
    /// coarse time-grid step
    pub grid_step: f64,
    /// golden-section refinement tolerance on t
    pub refine_tol: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            n_start: None,
            n_max: 300,
            k_fail: 10,
            window_factors: (0.5, 1.5),
            grid_step: 0.05,
            refine_tol: 1.0e-4,
        }
    }
}

impl ScanConfig {
    pub fn window_for(&self, n_total: usize) -> (f64, f64) {
        (self.window_factors.0 * n_total as f64, self.window_factors.1 * n_total as f64)
    }
}

/// number of coarse local maxima refined by golden section
pub(crate) const REFINE_CANDIDATES: usize = 5;

fn maximize_on_kernel(
    kernel: &TransitionKernel,
    window: (f64, f64),
    grid_step: f64,
    refine_tol: f64,
) -> Result<TimeOptimum> {
    let eval = |t: f64| largest_singular_value(&kernel.matrix(t).entries);
    let best = grid_refine_max(&eval, window, grid_step, refine_tol, REFINE_CANDIDATES)
        .ok_or(Error::EmptyWindow { start: window.0, end: window.1 })?;
    Ok(TimeOptimum { t0: best.x, w1: best.f, at_window_edge: best.at_edge })
}

/// Maximize w_1(t) over a time window: coarse grid, then golden-section
/// refinement of the best coarse maxima.
pub fn maximize_w1(eig: &EigenSystem, spec: &ChainSpec, window: (f64, f64)) -> Result<TimeOptimum> {
    let scan = ScanConfig::default();
    maximize_w1_with(eig, spec, window, scan.grid_step, scan.refine_tol)
}

pub fn maximize_w1_with(
    eig: &EigenSystem,
    spec: &ChainSpec,
    window: (f64, f64),
    grid_step: f64,
    refine_tol: f64,
) -> Result<TimeOptimum> {
    let kernel = TransitionKernel::new(eig, spec)?;
    maximize_on_kernel(&kernel, window, grid_step, refine_tol)
}

/// Largest singular value with closed forms for the row/column and
/// two-row Gram cases that dominate table scans.
pub fn largest_singular_value(m: &DMatrix<C64>) -> f64 {
    let (nr, nc) = m.shape();
    if nr == 1 || nc == 1 {
        return m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    }
    if nr.min(nc) == 2 {
        // Gram matrix of the smaller side: 2x2 Hermitian eigenproblem
        let g = if nr == 2 { m * m.adjoint() } else { m.adjoint() * m };
        let (a, c) = (g[(0, 0)].re, g[(1, 1)].re);
        let b = g[(0, 1)].norm_sqr();
        let mid = 0.5 * (a + c);
        let disc = (0.25 * (a - c) * (a - c) + b).sqrt();
        return (mid + disc).max(0.0).sqrt();
    }
    let sv = nalgebra::SVD::new_unordered(m.clone(), false, false).singular_values;
    sv.iter().copied().fold(0.0f64, f64::max)
}

/// Full protocol output at a fixed registration time.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub t0: f64,
    pub w1: f64,
    pub sender_vector: DVector<C64>,
    pub receiver_row: DVector<C64>,
    /// |f_n(t0)| over all nodes n = 1..N, after applying V to the extended
    /// receiver
    pub f_profile: DVector<f64>,
}

/// Run the SVD protocol at time `t0`: factorize P(t0), build the optimal
/// operators and the resulting projection profile.
pub fn run_protocol(eig: &EigenSystem, spec: &ChainSpec, t0: f64) -> Result<ProtocolResult> {
    let tm = crate::dynamics::transition_matrix(eig, spec, t0)?;
    let triple = svd(&tm)?;
    let ops = optimal_unitaries(&triple);

    let n = spec.n_total;
    let nr = spec.n_ext_receiver;
    let mut psi0 = DVector::<C64>::zeros(n);
    for (i, &a) in ops.sender_vector.iter().enumerate() {
        psi0[i] = a;
    }
    let mut psi = propagate(eig, &psi0, t0);
    let rotated = &ops.v_matrix * psi.rows(n - nr, nr).clone_owned();
    psi.rows_mut(n - nr, nr).copy_from(&rotated);

    Ok(ProtocolResult {
        t0,
        w1: triple.w1(),
        sender_vector: ops.sender_vector,
        receiver_row: ops.receiver_row,
        f_profile: psi.map(|z| z.norm()),
    })
}

/// Feasibility evaluation of a single chain length.
#[derive(Debug, Clone, Copy)]
pub struct LengthEvaluation {
    pub n_total: usize,
    pub t0: f64,
    pub w1: f64,
    pub feasible: bool,
    pub at_window_edge: bool,
}

/// Maximize w_1 over the time window of length `n` and compare w_1^2
/// against the threshold.
pub fn evaluate_length(
    n_sender: usize,
    n_ext_receiver: usize,
    n_total: usize,
    threshold: f64,
    scan: &ScanConfig,
) -> Result<LengthEvaluation> {
    let spec = ChainSpec::new(n_total, n_sender, n_ext_receiver)?;
    let eig = one_excitation_eigensystem(&spec)?;
    let kernel = TransitionKernel::new(&eig, &spec)?;
    drop(eig);
    let opt = maximize_on_kernel(&kernel, scan.window_for(n_total), scan.grid_step, scan.refine_tol)?;
    Ok(LengthEvaluation {
        n_total,
        t0: opt.t0,
        w1: opt.w1,
        feasible: opt.w1 * opt.w1 >= threshold,
        at_window_edge: opt.at_window_edge,
    })
}

/// Critical length for a one-qubit target.
#[derive(Debug, Clone, Copy)]
pub struct CriticalLengthRecord {
    pub n_sender: usize,
    pub n_ext_receiver: usize,
    /// target on |f_N|^2 = w_1^2
    pub threshold: f64,
    pub n_critical: usize,
    pub t0_at_critical: f64,
    pub w1_at_critical: f64,
    /// true when `k_fail` consecutive lengths above `n_critical` failed;
    /// false means the scan cap was reached while still feasible
    pub certified: bool,
}

/// Fold length evaluations (ascending in N) into the certified critical
/// length: the largest feasible N followed by `k_fail` consecutive failures.
pub fn fold_scan(evals: &[LengthEvaluation], k_fail: usize) -> Option<(LengthEvaluation, bool)> {
    let mut best: Option<LengthEvaluation> = None;
    let mut fails = 0usize;
    for ev in evals {
        if ev.feasible {
            best = Some(*ev);
            fails = 0;
        } else if best.is_some() {
            fails += 1;
        }
    }
    best.map(|ev| (ev, fails >= k_fail))
}

/// Scan chain lengths upward and certify the largest feasible one.
pub fn critical_length(
    n_sender: usize,
    n_ext_receiver: usize,
    threshold: f64,
    scan: &ScanConfig,
) -> Result<CriticalLengthRecord> {
    let start = scan.n_start.unwrap_or((n_sender + n_ext_receiver).max(2));
    let mut evals = Vec::new();
    for n in start..=scan.n_max {
        evals.push(evaluate_length(n_sender, n_ext_receiver, n, threshold, scan)?);
        if let Some((_, true)) = fold_scan(&evals, scan.k_fail) {
            break;
        }
    }
    let (best, certified) =
        fold_scan(&evals, scan.k_fail).ok_or(Error::ScanExhausted { n_max: scan.n_max })?;
    Ok(CriticalLengthRecord {
        n_sender,
        n_ext_receiver,
        threshold,
        n_critical: best.n_total,
        t0_at_critical: best.t0,
        w1_at_critical: best.w1,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{receiver_projection, transition_matrix};
    use approx::assert_abs_diff_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn hpst_case() -> (ChainSpec, EigenSystem) {
        let spec = ChainSpec::new(31, 10, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        (spec, eig)
    }

    fn random_unit(rng: &mut StdRng, dim: usize) -> DVector<C64> {
        let v = DVector::from_fn(dim, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let n = v.norm();
        v / C64::from(n)
    }

    #[test]
    fn scalar_svd_is_modulus() {
        let tm = TransitionMatrix {
            entries: DMatrix::from_element(1, 1, C64::new(-0.3, 0.4)),
            time: 0.0,
        };
        let triple = svd(&tm).unwrap();
        assert_abs_diff_eq!(triple.w1(), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn svd_reconstructs_transition_matrix() {
        let (spec, eig) = hpst_case();
        let tm = transition_matrix(&eig, &spec, 39.3815).unwrap();
        let triple = svd(&tm).unwrap();
        assert!(triple.reconstruction_residual(&tm) < 1e-10);
        assert!(triple.w1() <= 1.0 + 1e-12);
        // factors are unitary after completion
        let nr = triple.left.nrows();
        let ns = triple.right.nrows();
        assert!((triple.left.adjoint() * &triple.left - DMatrix::identity(nr, nr)).map(|z| z.norm()).max() < 1e-12);
        assert!((triple.right.adjoint() * &triple.right - DMatrix::identity(ns, ns)).map(|z| z.norm()).max() < 1e-12);
    }

    #[test]
    fn singular_values_symmetric_under_chain_reversal() {
        let t = 17.4;
        for (ns, nr) in [(3usize, 2usize), (1, 4)] {
            let n = 13;
            let spec_a = ChainSpec::new(n, ns, nr).unwrap();
            let spec_b = ChainSpec::new(n, nr, ns).unwrap();
            let eig = one_excitation_eigensystem(&spec_a).unwrap();
            let sv_a = svd(&transition_matrix(&eig, &spec_a, t).unwrap()).unwrap().singulars;
            let sv_b = svd(&transition_matrix(&eig, &spec_b, t).unwrap()).unwrap().singulars;
            for k in 0..sv_a.len() {
                assert_abs_diff_eq!(sv_a[k], sv_b[k], epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn optimal_operators_reach_w1() {
        let (spec, eig) = hpst_case();
        let tm = transition_matrix(&eig, &spec, 39.3815).unwrap();
        let triple = svd(&tm).unwrap();
        let ops = optimal_unitaries(&triple);
        let f = receiver_projection(&ops.sender_vector, &tm, &ops.receiver_row).unwrap();
        assert!((f.norm() - triple.w1()).abs() < 1e-10);
        // V is unitary
        let nr = spec.n_ext_receiver;
        let err = (&ops.v_matrix * ops.v_matrix.adjoint() - DMatrix::identity(nr, nr))
            .map(|z| z.norm())
            .max();
        assert!(err < 1e-12);
    }

    #[test]
    fn random_encodings_never_beat_w1() {
        let spec = ChainSpec::new(6, 2, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let tm = transition_matrix(&eig, &spec, 5.89).unwrap();
        let w1 = svd(&tm).unwrap().w1();
        let mut rng = StdRng::seed_from_u64(101);
        let mut best = 0.0f64;
        for _ in 0..10_000 {
            let a = random_unit(&mut rng, 2);
            let v = random_unit(&mut rng, 1);
            let f = receiver_projection(&a, &tm, &v).unwrap().norm();
            best = best.max(f);
            assert!(f <= w1 + 1e-8);
        }
        assert!(best <= w1 + 1e-8);
    }

    #[test]
    fn equal_blocks_satisfy_reversal_symmetry() {
        // for N_S = N_R the optimal sender vector equals the reversed
        // conjugated receiver column up to a global phase
        let spec = ChainSpec::new(12, 4, 4).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let tm = transition_matrix(&eig, &spec, 11.8).unwrap();
        let triple = svd(&tm).unwrap();
        let ns = 4;
        let u1: DVector<C64> = triple.right.column(0).clone_owned();
        let v1_reversed_conj: DVector<C64> =
            DVector::from_fn(ns, |i, _| triple.left[(ns - 1 - i, 0)].conj());
        // align global phase before comparing
        let overlap = u1.dotc(&v1_reversed_conj);
        let phase = overlap / C64::from(overlap.norm().max(1e-300));
        let aligned = v1_reversed_conj * phase.conj();
        assert!((u1 - aligned).norm() < 1e-8);
    }

    #[test]
    fn two_node_window_peaks_at_pi() {
        let spec = ChainSpec::new(2, 1, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let opt = maximize_w1(&eig, &spec, (0.5, 3.5)).unwrap();
        assert!((opt.t0 - std::f64::consts::PI).abs() < 1e-3);
        assert!((opt.w1 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn empty_window_is_rejected() {
        let spec = ChainSpec::new(4, 1, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        assert!(maximize_w1(&eig, &spec, (3.0, 3.0)).is_err());
    }

    #[test]
    fn edge_maximum_is_flagged() {
        // on [1, 3] the two-node w_1(t) = sin(t/2) increases monotonically,
        // so the maximizer sits on the right edge
        let spec = ChainSpec::new(2, 1, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let opt = maximize_w1(&eig, &spec, (1.0, 3.0)).unwrap();
        assert!(opt.at_window_edge);
        assert!((opt.t0 - 3.0).abs() < 0.06);
    }

    #[test]
    fn hpst_case_matches_reported_time() {
        let (spec, eig) = hpst_case();
        let opt = maximize_w1(&eig, &spec, (15.5, 46.5)).unwrap();
        assert!((opt.t0 - 39.3815).abs() < 0.5, "t0 = {}", opt.t0);
        assert!(opt.w1 * opt.w1 > 0.9);
        assert!(!opt.at_window_edge);
    }

    #[test]
    fn w1_profile_is_continuous_on_grid() {
        let spec = ChainSpec::new(9, 3, 2).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let kernel = TransitionKernel::new(&eig, &spec).unwrap();
        let mut prev: Option<f64> = None;
        let mut t = 4.5;
        while t <= 13.5 {
            let w = largest_singular_value(&kernel.matrix(t).entries);
            assert!(w <= 1.0 + 1e-12);
            if let Some(p) = prev {
                assert!((w - p).abs() < 0.1, "jump at t = {t}");
            }
            prev = Some(w);
            t += 0.05;
        }
    }

    #[test]
    fn protocol_profile_vanishes_on_inner_receiver_nodes() {
        let spec = ChainSpec::new(13, 3, 4).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let opt = maximize_w1(&eig, &spec, (6.5, 19.5)).unwrap();
        let result = run_protocol(&eig, &spec, opt.t0).unwrap();
        assert!((result.f_profile[12] - result.w1).abs() < 1e-10);
        for n in 9..12 {
            assert!(result.f_profile[n] < 1e-10, "f_{} = {:.3e}", n + 1, result.f_profile[n]);
        }
        assert!((result.sender_vector.norm() - 1.0).abs() < 1e-12);
        assert!((result.receiver_row.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn smallest_hpst_critical_length_is_four() {
        let record = critical_length(1, 1, 0.9, &ScanConfig::default()).unwrap();
        assert_eq!(record.n_critical, 4);
        assert!(record.certified);
        assert!(record.w1_at_critical * record.w1_at_critical >= 0.9);
    }

    #[test]
    fn scan_exhaustion_is_reported() {
        let scan = ScanConfig { n_max: 8, ..Default::default() };
        // nothing reaches w_1^2 >= 0.999999 beyond trivial lengths here
        let err = critical_length(1, 1, 0.999_999, &ScanConfig { n_start: Some(5), ..scan });
        assert!(err.is_err());
    }

    #[test]
    fn fold_scan_requires_consecutive_failures() {
        let ev = |n: usize, ok: bool| LengthEvaluation {
            n_total: n,
            t0: n as f64,
            w1: if ok { 0.99 } else { 0.1 },
            feasible: ok,
            at_window_edge: false,
        };
        let evals = vec![ev(2, true), ev(3, false), ev(4, true), ev(5, false), ev(6, false)];
        let (best, certified) = fold_scan(&evals, 2).unwrap();
        assert_eq!(best.n_total, 4);
        assert!(certified);
        let (_, certified) = fold_scan(&evals[..4], 2).unwrap();
        assert!(!certified);
        assert!(fold_scan(&[ev(2, false)], 2).is_none());
    }
}
