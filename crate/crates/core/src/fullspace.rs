//! Brute-force full-Hilbert-space reference path for small chains.
//!
//! Builds the XY Hamiltonian on all 2^N basis states from bit operations,
//! projects excitation sectors, embeds sector states and takes partial
//! traces by explicit summation. Exponential in N (guarded at N <= 12);
//! used to cross-check the sector-wise implementations.
//!
//! Bit convention: node n (1-based) maps to bit N - n, so node N is the
//! least significant bit and the receiver-pair sub-index of nodes
//! (N-1, N) is simply `index & 3`.

use nalgebra::{DMatrix, DVector, Matrix4};
use num_complex::Complex64 as C64;

use crate::dynamics::ChainState;
use crate::error::{Error, Result};
use crate::hamiltonian::{pair_list, CouplingMatrix};

const MAX_FULL_NODES: usize = 12;

fn check_size(n: usize) -> Result<()> {
    if !(2..=MAX_FULL_NODES).contains(&n) {
        return Err(Error::InvalidChain(format!(
            "full-space path supports 2..={MAX_FULL_NODES} nodes, got {n}"
        )));
    }
    Ok(())
}

fn bit_of_node(n_total: usize, node: usize) -> usize {
    n_total - node
}

/// Full 2^N x 2^N XY Hamiltonian, Σ_{j>i} D_ij/2 (σ+_i σ-_j + σ-_i σ+_j).
pub fn xy_hamiltonian(couplings: &CouplingMatrix) -> Result<DMatrix<f64>> {
    let n = couplings.n_nodes();
    check_size(n)?;
    let dim = 1usize << n;
    let mut h = DMatrix::zeros(dim, dim);
    for state in 0..dim {
        for i in 1..=n {
            let bi = bit_of_node(n, i);
            if state >> bi & 1 == 0 {
                continue;
            }
            for j in 1..=n {
                if j == i {
                    continue;
                }
                let bj = bit_of_node(n, j);
                if state >> bj & 1 == 1 {
                    continue;
                }
                // move the excitation from node i to node j
                let target = state & !(1 << bi) | (1 << bj);
                h[(target, state)] += 0.5 * couplings.get(i, j);
            }
        }
    }
    Ok(h)
}

/// Full-space indices of the k-excitation sector, ordered to match the
/// sector block bases: node order for k = 1, lexicographic pairs for k = 2.
pub fn sector_indices(n_total: usize, k: usize) -> Vec<usize> {
    match k {
        0 => vec![0],
        1 => (1..=n_total).map(|node| 1usize << bit_of_node(n_total, node)).collect(),
        2 => pair_list(n_total)
            .into_iter()
            .map(|(i, j)| (1usize << bit_of_node(n_total, i)) | (1usize << bit_of_node(n_total, j)))
            .collect(),
        _ => panic!("only sectors 0..=2 are labelled"),
    }
}

/// Project the full Hamiltonian onto a sector given by its basis indices.
pub fn project_sector(h_full: &DMatrix<f64>, indices: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(indices.len(), indices.len(), |a, b| h_full[(indices[a], indices[b])])
}

/// Embed a zero ⊕ one ⊕ two excitation state into the full 2^N space.
pub fn embed(state: &ChainState) -> Result<DVector<C64>> {
    let n = state.n_nodes();
    check_size(n)?;
    let mut psi = DVector::zeros(1usize << n);
    psi[0] = state.vacuum;
    for (pos, &idx) in sector_indices(n, 1).iter().enumerate() {
        psi[idx] = state.single[pos];
    }
    for (pos, &idx) in sector_indices(n, 2).iter().enumerate() {
        psi[idx] = state.double[pos];
    }
    Ok(psi)
}

/// Evolve a full-space state by diagonalizing the full Hamiltonian.
pub fn evolve_full(h_full: &DMatrix<f64>, psi: &DVector<C64>, t: f64) -> Result<DVector<C64>> {
    let dim = h_full.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(h_full.clone(), 1.0e-13, 0)
        .ok_or(Error::EigenFailure { dim })?;
    let w = &eig.eigenvectors;
    let mut modes = DVector::<C64>::zeros(dim);
    for k in 0..dim {
        let mut acc = C64::ZERO;
        for i in 0..dim {
            acc += w[(i, k)] * psi[i];
        }
        modes[k] = acc * C64::from_polar(1.0, -eig.eigenvalues[k] * t);
    }
    let mut out = DVector::<C64>::zeros(dim);
    for i in 0..dim {
        let mut acc = C64::ZERO;
        for k in 0..dim {
            acc += w[(i, k)] * modes[k];
        }
        out[i] = acc;
    }
    Ok(out)
}

/// Partial trace of |ψ⟩⟨ψ| over nodes 1..N-2, by explicit summation over
/// the configurations of the traced-out nodes.
pub fn partial_trace_last_two(psi: &DVector<C64>) -> Matrix4<C64> {
    let dim = psi.len();
    debug_assert!(dim.is_power_of_two() && dim >= 16);
    let rest = dim / 4;
    let mut rho = Matrix4::<C64>::zeros();
    for cfg in 0..rest {
        for r in 0..4usize {
            for c in 0..4usize {
                rho[(r, c)] += psi[cfg << 2 | r] * psi[cfg << 2 | c].conj();
            }
        }
    }
    rho
}
