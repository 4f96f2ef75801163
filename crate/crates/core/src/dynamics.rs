//! State evolution in fixed excitation sectors and reduced receiver states.
//!
//! Everything here works on sector amplitude vectors, never on the full
//! 2^N Hilbert space: the propagator of a sector with eigensystem
//! H = W diag(Λ) W^T is W diag(e^{-iΛt}) W^T, and the two-qubit reduced
//! density matrix of the last two nodes is assembled by summing over the
//! configurations of nodes 1..N-2 sector by sector. The full-space route
//! exists in [`crate::fullspace`] as a small-N cross-check.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{pair_count, pair_index, ChainSpec, EigenSystem};

const NORM_TOL: f64 = 1.0e-12;

/// Amplitudes over the basis of a single excitation block, tagged with the
/// dimensionless time they refer to.
#[derive(Debug, Clone)]
pub struct SectorState {
    pub amplitudes: DVector<C64>,
    pub time_tag: f64,
}

impl SectorState {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let deviation = (amplitudes.norm() - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { amplitudes, time_tag: 0.0 })
    }

    /// One-excitation state with the sender amplitudes `a` on nodes 1..N_S
    /// and zeros elsewhere.
    pub fn from_sender(spec: &ChainSpec, a: &DVector<C64>) -> Result<Self> {
        if a.len() != spec.n_sender {
            return Err(Error::DimensionMismatch { expected: spec.n_sender, got: a.len() });
        }
        let mut amplitudes = DVector::zeros(spec.n_total);
        amplitudes.rows_mut(0, spec.n_sender).copy_from(a);
        Self::new(amplitudes)
    }
}

/// Apply the sector propagator at time `t` to a bare amplitude vector.
pub(crate) fn propagate(eig: &EigenSystem, amplitudes: &DVector<C64>, t: f64) -> DVector<C64> {
    let w = &eig.eigenvectors;
    // modes = W^T a (W is real orthogonal)
    let mut modes = DVector::<C64>::zeros(eig.dim());
    for k in 0..eig.dim() {
        let mut acc = C64::ZERO;
        for i in 0..eig.dim() {
            acc += w[(i, k)] * amplitudes[i];
        }
        let phase = C64::from_polar(1.0, -eig.eigenvalues[k] * t);
        modes[k] = acc * phase;
    }
    let mut out = DVector::<C64>::zeros(eig.dim());
    for i in 0..eig.dim() {
        let mut acc = C64::ZERO;
        for k in 0..eig.dim() {
            acc += w[(i, k)] * modes[k];
        }
        out[i] = acc;
    }
    out
}

/// Evolve a sector state by a time interval `t`.
pub fn evolve(eig: &EigenSystem, state: &SectorState, t: f64) -> Result<SectorState> {
    if state.amplitudes.len() != eig.dim() {
        return Err(Error::DimensionMismatch {
            expected: eig.dim(),
            got: state.amplitudes.len(),
        });
    }
    Ok(SectorState {
        amplitudes: propagate(eig, &state.amplitudes, t),
        time_tag: state.time_tag + t,
    })
}

/// The N_R x N_S sub-block of the one-excitation propagator mapping sender
/// amplitudes to extended-receiver amplitudes,
///
///   P_nm(t) = Σ_k W_{(N-N_R+n) k} e^{-i λ_k t} W_{m k}.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub entries: DMatrix<C64>,
    pub time: f64,
}

/// Picks out the eigenvector rows needed for the transition matrix so that
/// time scans do not touch the full N x N eigenvector matrix.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    eigenvalues: DVector<f64>,
    /// products W_{(N-N_R+n) k} * W_{m k}, laid out as (n, m) blocks of
    /// length N for cache-friendly accumulation over k
    products: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
}

impl TransitionKernel {
    pub fn new(eig: &EigenSystem, spec: &ChainSpec) -> Result<Self> {
        let n = spec.n_total;
        if eig.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: eig.dim() });
        }
        let (n_rows, n_cols) = (spec.n_ext_receiver, spec.n_sender);
        let w = &eig.eigenvectors;
        let mut products = Vec::with_capacity(n_rows * n_cols * n);
        for row in 0..n_rows {
            let node = n - n_rows + row;
            for col in 0..n_cols {
                for k in 0..n {
                    products.push(w[(node, k)] * w[(col, k)]);
                }
            }
        }
        Ok(Self { eigenvalues: eig.eigenvalues.clone(), products, n_rows, n_cols })
    }

    pub fn matrix(&self, t: f64) -> TransitionMatrix {
        let n = self.eigenvalues.len();
        let phases: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|&lam| C64::from_polar(1.0, -lam * t))
            .collect();
        let mut entries = DMatrix::<C64>::zeros(self.n_rows, self.n_cols);
        for row in 0..self.n_rows {
            for col in 0..self.n_cols {
                let base = (row * self.n_cols + col) * n;
                let acc: C64 = self.products[base..base + n]
                    .iter()
                    .zip(&phases)
                    .map(|(&p, &ph)| p * ph)
                    .sum();
                entries[(row, col)] = acc;
            }
        }
        TransitionMatrix { entries, time: t }
    }
}

/// Build the transition matrix at a single time; for time grids construct a
/// [`TransitionKernel`] once instead.
pub fn transition_matrix(eig: &EigenSystem, spec: &ChainSpec, t: f64) -> Result<TransitionMatrix> {
    Ok(TransitionKernel::new(eig, spec)?.matrix(t))
}

/// The created projection f_N = v · P · a for a sender state `a` and the
/// receiver bra row `v_row` (row N_R of the extended-receiver unitary).
/// `v_row` enters as a bra: no conjugation is applied here.
pub fn receiver_projection(
    psi0_sender: &DVector<C64>,
    tm: &TransitionMatrix,
    v_row: &DVector<C64>,
) -> Result<C64> {
    if psi0_sender.len() != tm.entries.ncols() {
        return Err(Error::DimensionMismatch {
            expected: tm.entries.ncols(),
            got: psi0_sender.len(),
        });
    }
    if v_row.len() != tm.entries.nrows() {
        return Err(Error::DimensionMismatch {
            expected: tm.entries.nrows(),
            got: v_row.len(),
        });
    }
    Ok(v_row.dot(&(&tm.entries * psi0_sender)))
}

/// Joint zero ⊕ one ⊕ two excitation state of the whole chain:
/// a_0 |0⟩ + Σ_i a_i |i⟩ + Σ_{i<j} a_ij |ij⟩.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub vacuum: C64,
    /// length N, node basis
    pub single: DVector<C64>,
    /// length N(N-1)/2, lexicographic pair basis
    pub double: DVector<C64>,
    pub time_tag: f64,
}

impl ChainState {
    pub fn new(vacuum: C64, single: DVector<C64>, double: DVector<C64>) -> Result<Self> {
        let norm_sq = vacuum.norm_sqr() + single.norm_squared() + double.norm_squared();
        let deviation = (norm_sq.sqrt() - 1.0).abs();
        if deviation > NORM_TOL {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self { vacuum, single, double, time_tag: 0.0 })
    }

    /// Build the initial state from sender amplitudes: `a_single` over nodes
    /// 1..N_S, `a_pairs` over sender pairs in lexicographic order.
    pub fn from_sender(
        spec: &ChainSpec,
        vacuum: C64,
        a_single: &[C64],
        a_pairs: &[C64],
    ) -> Result<Self> {
        let ns = spec.n_sender;
        if a_single.len() != ns {
            return Err(Error::DimensionMismatch { expected: ns, got: a_single.len() });
        }
        if a_pairs.len() != pair_count(ns) {
            return Err(Error::DimensionMismatch {
                expected: pair_count(ns),
                got: a_pairs.len(),
            });
        }
        let n = spec.n_total;
        let mut single = DVector::zeros(n);
        for (i, &a) in a_single.iter().enumerate() {
            single[i] = a;
        }
        let mut double = DVector::zeros(pair_count(n));
        let mut idx = 0;
        for i in 1..=ns {
            for j in (i + 1)..=ns {
                double[pair_index(n, i, j)] = a_pairs[idx];
                idx += 1;
            }
        }
        Self::new(vacuum, single, double)
    }

    pub fn n_nodes(&self) -> usize {
        self.single.len()
    }

    /// Evolve all sectors by `t`; the vacuum amplitude is invariant.
    pub fn evolve(&self, eig_one: &EigenSystem, eig_two: &EigenSystem, t: f64) -> Result<Self> {
        let n = self.n_nodes();
        if eig_one.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: eig_one.dim() });
        }
        if eig_two.dim() != pair_count(n) {
            return Err(Error::DimensionMismatch { expected: pair_count(n), got: eig_two.dim() });
        }
        Ok(Self {
            vacuum: self.vacuum,
            single: propagate(eig_one, &self.single, t),
            double: propagate(eig_two, &self.double, t),
            time_tag: self.time_tag + t,
        })
    }
}

/// Reduced density matrix of the two receiver nodes (N-1, N) in the basis
/// |00⟩, |0 1_N⟩, |1_{N-1} 0⟩, |1_{N-1} 1_N⟩ (node N least significant).
#[derive(Debug, Clone)]
pub struct ReceiverDensity {
    pub entries: Matrix4<C64>,
}

impl ReceiverDensity {
    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.entries - self.entries.adjoint()).map(|z| z.norm()).max()
    }

    /// Real eigenvalues, ascending (the matrix is Hermitian up to numerics).
    pub fn eigenvalues(&self) -> [f64; 4] {
        let sym = (self.entries + self.entries.adjoint()).scale(0.5);
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3]]
    }
}

/// Trace out nodes 1..N-2 of a zero ⊕ one ⊕ two excitation pure state.
///
/// Grouping the state by the configuration of the traced-out nodes gives,
/// per configuration, a 4-vector over the receiver basis; the reduced matrix
/// is the sum of their outer products:
///   vacuum rest  -> (a_0, a_N, a_{N-1}, a_{(N-1,N)})
///   one at m     -> (a_m, a_{(m,N)}, a_{(m,N-1)}, 0)
///   two in rest  -> |a_{(m,m')}|^2 into the |00⟩ slot.
pub fn two_qubit_density(state: &ChainState, spec: &ChainSpec) -> Result<ReceiverDensity> {
    let n = spec.n_total;
    if n < 4 {
        return Err(Error::InvalidChain(format!(
            "two-qubit receiver needs N >= 4, got {n}"
        )));
    }
    if n < spec.n_sender + 2 {
        return Err(Error::InvalidChain(format!(
            "sender (N_S = {}) must not overlap the receiver pair of an N = {n} chain",
            spec.n_sender
        )));
    }
    if state.n_nodes() != n {
        return Err(Error::DimensionMismatch { expected: n, got: state.n_nodes() });
    }

    let mut rho = Matrix4::<C64>::zeros();
    let mut add_outer = |v: [C64; 4]| {
        for r in 0..4 {
            for c in 0..4 {
                rho[(r, c)] += v[r] * v[c].conj();
            }
        }
    };

    let amp_pair = |i: usize, j: usize| state.double[pair_index(n, i, j)];
    add_outer([
        state.vacuum,
        state.single[n - 1],
        state.single[n - 2],
        amp_pair(n - 1, n),
    ]);
    for m in 1..=(n - 2) {
        add_outer([state.single[m - 1], amp_pair(m, n), amp_pair(m, n - 1), C64::ZERO]);
    }
    for m in 1..=(n - 2) {
        for mp in (m + 1)..=(n - 2) {
            rho[(0, 0)] += C64::from(amp_pair(m, mp).norm_sqr());
        }
    }
    Ok(ReceiverDensity { entries: rho })
}
