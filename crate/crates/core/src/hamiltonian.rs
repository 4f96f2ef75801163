//! Dipolar couplings and excitation-sector blocks of the homogeneous chain.
//!
//! The chain is governed by an XY Hamiltonian with all-node dipole-dipole
//! interaction,
//!
//!   H = Σ_{j>i} D_ij (I_ix I_jx + I_iy I_jy),   D_ij = |i-j|^{-3},
//!
//! in dimensionless units with the nearest-neighbor constant D_12 = 1.
//! H conserves the total z-projection, so the dynamics block-diagonalizes
//! over excitation sectors. Only the zero-, one- and two-excitation blocks
//! are needed here: the one-excitation block is N x N with entries D_mn / 2,
//! the two-excitation block lives on unordered node pairs (i, j), i < j, in
//! lexicographic order, and couples pairs sharing exactly one node.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Geometry of the communication line: total length and the sizes of the
/// sender block (first `n_sender` nodes) and the extended receiver block
/// (last `n_ext_receiver` nodes). The one-qubit receiver is node N; the
/// two-qubit receiver is the pair (N-1, N).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainSpec {
    pub n_total: usize,
    pub n_sender: usize,
    pub n_ext_receiver: usize,
}

impl ChainSpec {
    pub fn new(n_total: usize, n_sender: usize, n_ext_receiver: usize) -> Result<Self> {
        if n_sender < 1 || n_ext_receiver < 1 {
            return Err(Error::InvalidChain(format!(
                "sender and extended receiver must be nonempty (got {n_sender}, {n_ext_receiver})"
            )));
        }
        if n_sender + n_ext_receiver > n_total {
            return Err(Error::InvalidChain(format!(
                "N_S + N_R = {} exceeds N = {n_total}",
                n_sender + n_ext_receiver
            )));
        }
        Ok(Self { n_total, n_sender, n_ext_receiver })
    }

    /// 1-based node indices of the extended receiver: N - N_R + 1 ..= N.
    pub fn ext_receiver_nodes(&self) -> std::ops::RangeInclusive<usize> {
        (self.n_total - self.n_ext_receiver + 1)..=self.n_total
    }
}

/// Which pairs interact when building couplings. All-node is the physical
/// model; the nearest-neighbor truncation exists for sensitivity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingRange {
    #[default]
    AllNode,
    NearestNeighbor,
}

/// Symmetric matrix of dimensionless dipolar constants D_ij = |i-j|^{-3},
/// zero on the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn n_nodes(&self) -> usize {
        self.entries.nrows()
    }

    /// Coupling between 1-based nodes `i` and `j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i - 1, j - 1)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Build the dipolar coupling matrix for a chain of `spec.n_total` nodes.
pub fn dipolar_couplings(spec: &ChainSpec) -> Result<CouplingMatrix> {
    dipolar_couplings_with(spec, CouplingRange::AllNode)
}

pub fn dipolar_couplings_with(spec: &ChainSpec, range: CouplingRange) -> Result<CouplingMatrix> {
    let n = spec.n_total;
    if n < 2 {
        return Err(Error::InvalidChain(format!(
            "need at least two nodes to couple, got {n}"
        )));
    }
    let entries = DMatrix::from_fn(n, n, |i, j| {
        let d = i.abs_diff(j);
        match range {
            _ if d == 0 => 0.0,
            CouplingRange::NearestNeighbor if d > 1 => 0.0,
            _ => ((d * d * d) as f64).recip(),
        }
    });
    Ok(CouplingMatrix { entries })
}

/// Excitation sector of the z-projection-conserving Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    Zero,
    One,
    Two,
}

/// Label of a basis state of an excitation block: a single excited node, or
/// an ordered pair of excited nodes (1-based, i < j).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisLabel {
    Vacuum,
    Node(usize),
    Pair(usize, usize),
}

/// One excitation-sector block of the Hamiltonian, together with the basis
/// labelling of its rows/columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationBlock {
    pub sector: Sector,
    pub matrix: DMatrix<f64>,
    pub basis_labels: Vec<BasisLabel>,
}

/// Number of unordered node pairs of an N-node chain.
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Lexicographic index of the pair (i, j), 1 <= i < j <= n, 0-based.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(1 <= i && i < j && j <= n);
    (i - 1) * n - i * (i - 1) / 2 + (j - i - 1)
}

/// All pairs (i, j), i < j, in lexicographic order (matches `pair_index`).
pub fn pair_list(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(pair_count(n));
    for i in 1..=n {
        for j in (i + 1)..=n {
            pairs.push((i, j));
        }
    }
    pairs
}

/// One-excitation block: H1[m][n] = D_mn / 2 off-diagonal, zero diagonal.
pub fn one_excitation_block(couplings: &CouplingMatrix) -> ExcitationBlock {
    let n = couplings.n_nodes();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            0.5 * couplings.as_matrix()[(i, j)]
        }
    });
    ExcitationBlock {
        sector: Sector::One,
        matrix,
        basis_labels: (1..=n).map(BasisLabel::Node).collect(),
    }
}

/// Two-excitation block on the lexicographic pair basis. Two pair states
/// couple iff they share exactly one node; the matrix element is D_pq / 2
/// where p, q are the unshared nodes.
pub fn two_excitation_block(couplings: &CouplingMatrix) -> ExcitationBlock {
    let n = couplings.n_nodes();
    let pairs = pair_list(n);
    let dim = pairs.len();
    let mut matrix = DMatrix::zeros(dim, dim);
    for (a, &(i, j)) in pairs.iter().enumerate() {
        for (b, &(k, l)) in pairs.iter().enumerate().skip(a + 1) {
            let shared = [i, j].iter().filter(|&&x| x == k || x == l).count();
            if shared == 1 {
                let p = if i == k || i == l { j } else { i };
                let q = if k == i || k == j { l } else { k };
                let v = 0.5 * couplings.get(p, q);
                matrix[(a, b)] = v;
                matrix[(b, a)] = v;
            }
        }
    }
    ExcitationBlock {
        sector: Sector::Two,
        matrix,
        basis_labels: pairs.into_iter().map(|(i, j)| BasisLabel::Pair(i, j)).collect(),
    }
}

/// Eigendecomposition H = W diag(Λ) W^T of a sector block, with eigenvalues
/// ascending and each eigenvector's first nonzero component made positive.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

pub fn eigendecompose(block: &ExcitationBlock) -> Result<EigenSystem> {
    let dim = block.matrix.nrows();
    let eig = nalgebra::SymmetricEigen::try_new(block.matrix.clone(), 1.0e-13, 0)
        .ok_or(Error::EigenFailure { dim })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut eigenvectors = DMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(k).clone_owned();
        // Column signs are arbitrary; fix them for determinism.
        let lead = v.iter().find(|x| x.abs() > 1.0e-12 * v.amax().max(1.0e-300));
        if let Some(&x) = lead {
            if x < 0.0 {
                v.neg_mut();
            }
        }
        eigenvectors.set_column(col, &v);
    }
    Ok(EigenSystem { eigenvalues, eigenvectors })
}

/// Convenience: couplings, one-excitation block and its eigensystem in one
/// call. Most protocol-level code starts here.
pub fn one_excitation_eigensystem(spec: &ChainSpec) -> Result<EigenSystem> {
    let couplings = dipolar_couplings(spec)?;
    eigendecompose(&one_excitation_block(&couplings))
}

pub fn two_excitation_eigensystem(spec: &ChainSpec) -> Result<EigenSystem> {
    let couplings = dipolar_couplings(spec)?;
    eigendecompose(&two_excitation_block(&couplings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(n: usize) -> ChainSpec {
        ChainSpec::new(n, 1, 1).unwrap()
    }

    #[test]
    fn couplings_follow_inverse_cube_law() {
        let c = dipolar_couplings(&spec(6)).unwrap();
        assert_eq!(c.get(1, 2), 1.0);
        assert_eq!(c.get(1, 3), 0.125);
        assert_abs_diff_eq!(c.get(2, 5), 1.0 / 27.0, epsilon = 1e-15);
        assert_eq!(c.get(4, 4), 0.0);
        // symmetric and translation invariant
        assert_eq!(c.get(2, 5), c.get(5, 2));
        assert_eq!(c.get(1, 4), c.get(3, 6));
    }

    #[test]
    fn couplings_reject_single_node() {
        let one = ChainSpec { n_total: 1, n_sender: 1, n_ext_receiver: 1 };
        assert!(dipolar_couplings(&one).is_err());
    }

    #[test]
    fn nearest_neighbor_truncation_zeroes_long_range() {
        let c = dipolar_couplings_with(&spec(4), CouplingRange::NearestNeighbor).unwrap();
        assert_eq!(c.get(1, 2), 1.0);
        assert_eq!(c.get(1, 3), 0.0);
        assert_eq!(c.get(1, 4), 0.0);
    }

    #[test]
    fn chain_spec_rejects_oversized_partition() {
        assert!(ChainSpec::new(3, 2, 2).is_err());
        assert!(ChainSpec::new(3, 0, 1).is_err());
        assert!(ChainSpec::new(3, 2, 1).is_ok());
    }

    #[test]
    fn one_excitation_block_two_nodes() {
        let b = one_excitation_block(&dipolar_couplings(&spec(2)).unwrap());
        assert_eq!(b.matrix[(0, 0)], 0.0);
        assert_eq!(b.matrix[(0, 1)], 0.5);
        assert_eq!(b.matrix[(1, 0)], 0.5);
    }

    #[test]
    fn one_excitation_block_next_nearest_element() {
        let b = one_excitation_block(&dipolar_couplings(&spec(3)).unwrap());
        assert_abs_diff_eq!(b.matrix[(0, 2)], 1.0 / 16.0, epsilon = 1e-15);
    }

    #[test]
    fn one_excitation_block_is_persymmetric() {
        let n = 9;
        let b = one_excitation_block(&dipolar_couplings(&spec(n)).unwrap());
        for i in 0..n {
            for j in 0..n {
                assert_eq!(b.matrix[(i, j)], b.matrix[(n - 1 - j, n - 1 - i)]);
            }
        }
    }

    #[test]
    fn pair_index_matches_pair_list() {
        for n in [2, 3, 5, 8] {
            for (idx, (i, j)) in pair_list(n).into_iter().enumerate() {
                assert_eq!(pair_index(n, i, j), idx);
            }
            assert_eq!(pair_list(n).len(), pair_count(n));
        }
    }

    #[test]
    fn two_excitation_block_three_nodes() {
        let b = two_excitation_block(&dipolar_couplings(&spec(3)).unwrap());
        // basis order: (1,2), (1,3), (2,3)
        assert_eq!(b.basis_labels[1], BasisLabel::Pair(1, 3));
        // <12|H|13> = D_23 / 2, <12|H|23> = D_13 / 2
        assert_abs_diff_eq!(b.matrix[(0, 1)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.matrix[(0, 2)], 1.0 / 16.0, epsilon = 1e-15);
        for a in 0..3 {
            assert_eq!(b.matrix[(a, a)], 0.0);
        }
    }

    #[test]
    fn two_excitation_block_disjoint_pairs_do_not_couple() {
        let b = two_excitation_block(&dipolar_couplings(&spec(4)).unwrap());
        let i = pair_index(4, 1, 2);
        let j = pair_index(4, 3, 4);
        assert_eq!(b.matrix[(i, j)], 0.0);
    }

    #[test]
    fn eigendecompose_two_nodes() {
        let eig = one_excitation_eigensystem(&spec(2)).unwrap();
        assert_abs_diff_eq!(eig.eigenvalues[0], -0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(eig.eigenvalues[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn eigendecomposition_reconstructs_block() {
        for n in [2, 3, 5, 9, 17, 31, 64] {
            let block = one_excitation_block(&dipolar_couplings(&spec(n)).unwrap());
            let eig = eigendecompose(&block).unwrap();
            let w = &eig.eigenvectors;
            let recon = w * DMatrix::from_diagonal(&eig.eigenvalues) * w.transpose();
            let resid = (&recon - &block.matrix).amax();
            assert!(resid < 1e-10, "N={n}: reconstruction residual {resid:.3e}");
            let ortho = (w.transpose() * w - DMatrix::identity(n, n)).amax();
            assert!(ortho < 1e-10, "N={n}: orthogonality residual {ortho:.3e}");
            assert!(eig.eigenvalues.sum().abs() < 1e-10, "trace must vanish");
            for k in 1..n {
                assert!(eig.eigenvalues[k] >= eig.eigenvalues[k - 1]);
            }
        }
    }

    #[test]
    fn spectrum_invariant_under_node_reversal() {
        let n = 12;
        let block = one_excitation_block(&dipolar_couplings(&spec(n)).unwrap());
        let reversed = DMatrix::from_fn(n, n, |i, j| block.matrix[(n - 1 - i, n - 1 - j)]);
        let ev_a = eigendecompose(&block).unwrap().eigenvalues;
        let ev_b = eigendecompose(&ExcitationBlock {
            sector: Sector::One,
            matrix: reversed,
            basis_labels: block.basis_labels.clone(),
        })
        .unwrap()
        .eigenvalues;
        for k in 0..n {
            assert_abs_diff_eq!(ev_a[k], ev_b[k], epsilon = 1e-10);
        }
    }
}
