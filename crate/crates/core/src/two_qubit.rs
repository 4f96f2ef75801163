//! Two-qubit eigenvalue creation through two-excitation dynamics.
//!
//! The registration time is chosen by maximizing the receiver excitation
//! measure κ = ⟨N|ρ|N⟩ + ⟨N-1|ρ|N-1⟩ + ⟨N,N-1|ρ|N,N-1⟩ averaged over
//! sender initial states; the average over the Ñ_S-dimensional sender space
//! (Ñ_S = N_S(N_S+1)/2 + 1) reduces to a deterministic mean over the
//! excited sender basis states. A target two-qubit spectrum is then
//! encoded through the characteristic polynomial
//!   |ρ - λI| = λ^4 - λ^3 + A λ^2 + B λ + C,
//! and the sender amplitudes are fitted by minimizing the discrepancy
//!   ε = sqrt((A - A0)^2 + (B - B0)^2 + (C - C0)^2)
//! with a restarted Nelder-Mead search at the frozen registration time.
//! Targets with only two nonzero eigenvalues reduce to the one-excitation
//! singular-value route: the receiver-pair population sweeps [0, w_1^2],
//! so the spectrum {λ1, λ2, 0, 0} is creatable iff w_1^2 >= λ2.

use nalgebra::{DVector, Matrix3, Matrix4};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dynamics::{propagate, ChainState, ReceiverDensity};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    one_excitation_eigensystem, pair_count, pair_index, two_excitation_eigensystem, ChainSpec,
    EigenSystem,
};
use crate::optim::{grid_refine_max, nelder_mead_min, splitmix64, SimplexOptions};
use crate::protocol::{self, ScanConfig};
use rand::SeedableRng;

/// Sum of the three excited diagonal elements of the receiver state: one
/// excitation on node N, one on node N-1, and the double excitation.
pub fn kappa(rho: &ReceiverDensity) -> f64 {
    (rho.entries[(1, 1)] + rho.entries[(2, 2)] + rho.entries[(3, 3)]).re
}

/// Dimension of the zero ⊕ one ⊕ two excitation sender state space.
pub fn sender_basis_size(n_sender: usize) -> usize {
    n_sender * (n_sender + 1) / 2 + 1
}

/// Chain geometry with the one- and two-excitation eigensystems.
#[derive(Debug, Clone)]
pub struct ChainSectors {
    pub spec: ChainSpec,
    pub one: EigenSystem,
    pub two: EigenSystem,
}

impl ChainSectors {
    pub fn build(spec: ChainSpec) -> Result<Self> {
        Ok(Self {
            spec,
            one: one_excitation_eigensystem(&spec)?,
            two: two_excitation_eigensystem(&spec)?,
        })
    }
}

/// Precomputed eigenvector products for the receiver-facing rows of both
/// sector propagators, enough to evaluate κ of every excited sender basis
/// state at any time.
struct KappaKernel {
    tilde_ns: f64,
    eigenvalues1: DVector<f64>,
    /// [row in {N, N-1}] x [sender col] -> products over k
    prods1: Vec<Vec<f64>>,
    eigenvalues2: DVector<f64>,
    /// [receiver-facing pair row] x [sender pair col] -> products over k
    prods2: Vec<Vec<f64>>,
}

impl KappaKernel {
    fn new(sectors: &ChainSectors) -> Self {
        let spec = &sectors.spec;
        let (n, ns) = (spec.n_total, spec.n_sender);
        let w1 = &sectors.one.eigenvectors;
        let mut prods1 = Vec::new();
        for row in [n - 1, n - 2] {
            for col in 0..ns {
                prods1.push((0..n).map(|k| w1[(row, k)] * w1[(col, k)]).collect());
            }
        }

        let w2 = &sectors.two.eigenvectors;
        let dim2 = pair_count(n);
        let mut rows2 = Vec::new();
        for m in 1..=(n - 2) {
            rows2.push(pair_index(n, m, n));
            rows2.push(pair_index(n, m, n - 1));
        }
        rows2.push(pair_index(n, n - 1, n));
        let mut cols2 = Vec::new();
        for i in 1..=ns {
            for j in (i + 1)..=ns {
                cols2.push(pair_index(n, i, j));
            }
        }
        let mut prods2 = Vec::new();
        for &row in &rows2 {
            for &col in &cols2 {
                prods2.push((0..dim2).map(|k| w2[(row, k)] * w2[(col, k)]).collect());
            }
        }
        Self {
            tilde_ns: sender_basis_size(ns) as f64,
            eigenvalues1: sectors.one.eigenvalues.clone(),
            prods1,
            eigenvalues2: sectors.two.eigenvalues.clone(),
            prods2,
        }
    }

    fn averaged(&self, t: f64) -> f64 {
        let amp_sq = |prods: &[f64], phases: &[C64]| -> f64 {
            let mut acc = C64::ZERO;
            for (p, ph) in prods.iter().zip(phases) {
                acc += p * ph;
            }
            acc.norm_sqr()
        };
        let phases1: Vec<C64> =
            self.eigenvalues1.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect();
        let phases2: Vec<C64> =
            self.eigenvalues2.iter().map(|&l| C64::from_polar(1.0, -l * t)).collect();
        let mut total = 0.0;
        for prods in &self.prods1 {
            total += amp_sq(prods, &phases1);
        }
        for prods in &self.prods2 {
            total += amp_sq(prods, &phases2);
        }
        total / self.tilde_ns
    }
}

/// Deterministic average of κ over the excited sender basis states (the
/// ground state contributes zero and enters only through the 1/Ñ_S
/// normalization). Equals the Haar average over pure sender states.
pub fn averaged_kappa(sectors: &ChainSectors, t: f64) -> f64 {
    KappaKernel::new(sectors).averaged(t)
}

/// Registration-time optimum for the two-qubit flow.
#[derive(Debug, Clone, Copy)]
pub struct RegistrationTime {
    pub t0: f64,
    pub kappa_avg: f64,
    pub at_window_edge: bool,
}

/// Maximize the averaged κ over a time window (coarse grid plus golden
/// refinement, like the one-qubit time search).
pub fn registration_time(
    sectors: &ChainSectors,
    window: (f64, f64),
    grid_step: f64,
    refine_tol: f64,
) -> Result<RegistrationTime> {
    let kernel = KappaKernel::new(sectors);
    let eval = |t: f64| kernel.averaged(t);
    let best = grid_refine_max(&eval, window, grid_step, refine_tol, protocol::REFINE_CANDIDATES)
        .ok_or(Error::EmptyWindow { start: window.0, end: window.1 })?;
    Ok(RegistrationTime { t0: best.x, kappa_avg: best.f, at_window_edge: best.at_edge })
}

/// Ordered triple of independent two-qubit eigenvalues; the fourth is
/// 1 - λ1 - λ2 - λ3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenTriple {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
}

impl EigenTriple {
    const TOL: f64 = 1.0e-12;

    pub fn new(lambda1: f64, lambda2: f64, lambda3: f64) -> Result<Self> {
        let l4 = 1.0 - lambda1 - lambda2 - lambda3;
        let ordered = lambda1 >= lambda2 - Self::TOL && lambda2 >= lambda3 - Self::TOL;
        let bounded = lambda3 >= -Self::TOL && lambda1 <= 1.0 + Self::TOL && l4 >= -Self::TOL;
        if !(ordered && bounded) {
            return Err(Error::InvalidSpectrum(format!(
                "({lambda1}, {lambda2}, {lambda3}) is not an ordered unit-trace spectrum"
            )));
        }
        Ok(Self { lambda1, lambda2, lambda3 })
    }

    pub fn lambda4(&self) -> f64 {
        1.0 - self.lambda1 - self.lambda2 - self.lambda3
    }

    /// Pure state (1, 0, 0).
    pub fn pure() -> Self {
        Self { lambda1: 1.0, lambda2: 0.0, lambda3: 0.0 }
    }

    /// Uniform rank-2 mixture (1/2, 1/2, 0).
    pub fn mixed2() -> Self {
        Self { lambda1: 0.5, lambda2: 0.5, lambda3: 0.0 }
    }

    /// Uniform rank-3 mixture (1/3, 1/3, 1/3).
    pub fn mixed3() -> Self {
        let third = 1.0 / 3.0;
        Self { lambda1: third, lambda2: third, lambda3: third }
    }

    /// Maximally mixed state (1/4, 1/4, 1/4).
    pub fn mixed4() -> Self {
        Self { lambda1: 0.25, lambda2: 0.25, lambda3: 0.25 }
    }

    /// True when at most two eigenvalues are nonzero, which makes the
    /// target reachable through one-excitation dynamics alone.
    pub fn is_rank_two(&self) -> bool {
        self.lambda3 <= Self::TOL && self.lambda4() <= Self::TOL
    }
}

/// Characteristic-polynomial coefficients of a target spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetCoefficients {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
}

/// Elementary symmetric polynomials of the four target eigenvalues:
/// A0 = e2, B0 = -e3, C0 = e4.
pub fn target_coefficients(target: &EigenTriple) -> TargetCoefficients {
    let l = [target.lambda1, target.lambda2, target.lambda3, target.lambda4()];
    let mut e2 = 0.0;
    let mut e3 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            e2 += l[i] * l[j];
            for k in (j + 1)..4 {
                e3 += l[i] * l[j] * l[k];
            }
        }
    }
    let e4 = l[0] * l[1] * l[2] * l[3];
    TargetCoefficients { a0: e2, b0: -e3, c0: e4 }
}

/// Characteristic coefficients (A, B, C) of a receiver density matrix,
/// computed from principal minors rather than explicit eigenvalues.
pub fn characteristic_coefficients(rho: &ReceiverDensity) -> (f64, f64, f64) {
    let m = &rho.entries;
    let mut e2 = C64::ZERO;
    for i in 0..4 {
        for j in (i + 1)..4 {
            e2 += m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
        }
    }
    let mut e3 = C64::ZERO;
    for skip in 0..4 {
        let idx: Vec<usize> = (0..4).filter(|&i| i != skip).collect();
        let sub = Matrix3::from_fn(|r, c| m[(idx[r], idx[c])]);
        e3 += sub.determinant();
    }
    let e4 = m.determinant();
    (e2.re, -e3.re, e4.re)
}

/// How a critical-length scan concluded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanStatus {
    /// single-length evaluation, no scan
    AtLength,
    /// largest feasible length certified by consecutive failures above it
    Certified,
    /// still feasible when the scan cap was reached
    OpenEnded,
    /// no feasible length found up to the scan cap
    Infeasible,
}

/// A fitted two-qubit creation: target spectrum, chain length, frozen
/// registration time, optimizing amplitudes and the reached discrepancy.
#[derive(Debug, Clone)]
pub struct CreationRecord {
    pub target: EigenTriple,
    pub n_total: usize,
    pub t0: f64,
    pub amplitudes: ChainState,
    pub epsilon: f64,
    pub feasible: bool,
    pub status: ScanStatus,
}

/// Discrepancy-minimization settings. The per-restart seed is derived from
/// `seed`, the target and the chain length, so sweeps are reproducible.
#[derive(Debug, Clone, Copy)]
pub struct DiscrepancyOptions {
    pub restarts: usize,
    pub seed: u64,
    pub epsilon_threshold: f64,
}

impl Default for DiscrepancyOptions {
    fn default() -> Self {
        Self { restarts: 32, seed: 42, epsilon_threshold: 1.0e-8 }
    }
}

/// Settings of the two-qubit pipeline: sender size (the receiver pair is
/// fixed), discrepancy options and the length-scan parameters.
#[derive(Debug, Clone, Copy)]
pub struct TwoQubitConfig {
    pub n_sender: usize,
    pub opt: DiscrepancyOptions,
    pub scan: ScanConfig,
}

impl Default for TwoQubitConfig {
    fn default() -> Self {
        Self { n_sender: 4, opt: DiscrepancyOptions::default(), scan: ScanConfig::default() }
    }
}

/// Evolved sender basis columns at a frozen time, plus the pair-index sets
/// needed to assemble the receiver density matrix without allocation.
struct DiscrepancyProblem {
    n: usize,
    ns: usize,
    /// N x N_S: one-excitation propagator columns of the sender nodes
    u1_cols: Vec<Vec<C64>>,
    /// dim2 x P_S: two-excitation propagator columns of the sender pairs
    u2_cols: Vec<Vec<C64>>,
    idx_pair_n: Vec<usize>,
    idx_pair_n1: Vec<usize>,
    idx_recv: usize,
    idx_rest: Vec<usize>,
    target: TargetCoefficients,
}

impl DiscrepancyProblem {
    fn new(sectors: &ChainSectors, target: &EigenTriple, t0: f64) -> Self {
        let spec = &sectors.spec;
        let (n, ns) = (spec.n_total, spec.n_sender);
        let mut u1_cols = Vec::with_capacity(ns);
        for j in 0..ns {
            let mut e = DVector::<C64>::zeros(n);
            e[j] = C64::ONE;
            u1_cols.push(propagate(&sectors.one, &e, t0).iter().copied().collect());
        }
        let dim2 = pair_count(n);
        let mut u2_cols = Vec::new();
        for i in 1..=ns {
            for j in (i + 1)..=ns {
                let mut e = DVector::<C64>::zeros(dim2);
                e[pair_index(n, i, j)] = C64::ONE;
                u2_cols.push(propagate(&sectors.two, &e, t0).iter().copied().collect());
            }
        }
        let idx_pair_n: Vec<usize> = (1..=(n - 2)).map(|m| pair_index(n, m, n)).collect();
        let idx_pair_n1: Vec<usize> = (1..=(n - 2)).map(|m| pair_index(n, m, n - 1)).collect();
        let idx_recv = pair_index(n, n - 1, n);
        let mut idx_rest = Vec::new();
        for m in 1..=(n - 2) {
            for mp in (m + 1)..=(n - 2) {
                idx_rest.push(pair_index(n, m, mp));
            }
        }
        Self {
            n,
            ns,
            u1_cols,
            u2_cols,
            idx_pair_n,
            idx_pair_n1,
            idx_recv,
            idx_rest,
            target: target_coefficients(target),
        }
    }

    fn param_dim(&self) -> usize {
        2 * sender_basis_size(self.ns)
    }

    /// Receiver density matrix of the normalized amplitude vector encoded
    /// in `params` (interleaved re/im for a0, a_i, a_ij).
    fn density(&self, params: &[f64]) -> Option<Matrix4<C64>> {
        let dim = sender_basis_size(self.ns);
        debug_assert_eq!(params.len(), 2 * dim);
        let mut amps: Vec<C64> =
            (0..dim).map(|i| C64::new(params[2 * i], params[2 * i + 1])).collect();
        let norm_sq: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        if norm_sq < 1.0e-24 {
            return None;
        }
        let inv = norm_sq.sqrt().recip();
        for a in amps.iter_mut() {
            *a *= inv;
        }

        let mut b = vec![C64::ZERO; self.n];
        for (j, col) in self.u1_cols.iter().enumerate() {
            let a = amps[1 + j];
            if a != C64::ZERO {
                for (bi, &ci) in b.iter_mut().zip(col) {
                    *bi += a * ci;
                }
            }
        }
        let dim2 = pair_count(self.n);
        let mut c = vec![C64::ZERO; dim2];
        for (p, col) in self.u2_cols.iter().enumerate() {
            let a = amps[1 + self.ns + p];
            if a != C64::ZERO {
                for (ci, &ui) in c.iter_mut().zip(col) {
                    *ci += a * ui;
                }
            }
        }

        let mut rho = Matrix4::<C64>::zeros();
        let mut add_outer = |v: [C64; 4]| {
            for r in 0..4 {
                for s in 0..4 {
                    rho[(r, s)] += v[r] * v[s].conj();
                }
            }
        };
        add_outer([amps[0], b[self.n - 1], b[self.n - 2], c[self.idx_recv]]);
        for m in 0..(self.n - 2) {
            add_outer([b[m], c[self.idx_pair_n[m]], c[self.idx_pair_n1[m]], C64::ZERO]);
        }
        for &idx in &self.idx_rest {
            rho[(0, 0)] += C64::from(c[idx].norm_sqr());
        }
        Some(rho)
    }

    /// Squared discrepancy ε² of the encoded amplitude vector.
    fn objective(&self, params: &[f64]) -> f64 {
        let Some(rho) = self.density(params) else {
            return 1.0e9;
        };
        let (a, b, c) = characteristic_coefficients(&ReceiverDensity { entries: rho });
        let da = a - self.target.a0;
        let db = b - self.target.b0;
        let dc = c - self.target.c0;
        da * da + db * db + dc * dc
    }
}

fn restart_seed(opts: &DiscrepancyOptions, target: &EigenTriple, n: usize, restart: usize) -> u64 {
    let mut s = opts.seed;
    for x in [
        target.lambda1.to_bits(),
        target.lambda2.to_bits(),
        target.lambda3.to_bits(),
        n as u64,
        restart as u64,
    ] {
        s = splitmix64(s ^ x);
    }
    s
}

/// Rotate the global phase so the first nonzero amplitude is real positive
/// and renormalize exactly.
fn canonicalize(params: &[f64]) -> Vec<C64> {
    let dim = params.len() / 2;
    let mut amps: Vec<C64> = (0..dim).map(|i| C64::new(params[2 * i], params[2 * i + 1])).collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for a in amps.iter_mut() {
        *a /= norm;
    }
    let scale = amps.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1.0e-300);
    if let Some(z) = amps.iter().find(|z| z.norm() > 1.0e-12 * scale).copied() {
        let rot = (z / C64::from(z.norm())).conj();
        for a in amps.iter_mut() {
            *a *= rot;
        }
    }
    amps
}

/// Discrepancy of a given initial sender state at registration time `t0`.
pub fn discrepancy(
    sectors: &ChainSectors,
    state: &ChainState,
    target: &EigenTriple,
    t0: f64,
) -> Result<f64> {
    let evolved = state.evolve(&sectors.one, &sectors.two, t0)?;
    let rho = crate::dynamics::two_qubit_density(&evolved, &sectors.spec)?;
    let (a, b, c) = characteristic_coefficients(&rho);
    let t = target_coefficients(target);
    Ok(((a - t.a0).powi(2) + (b - t.b0).powi(2) + (c - t.c0).powi(2)).sqrt())
}

/// per-restart simplex budget; polish stages restart the simplex from the
/// best point with progressively smaller edges
const NM_OPTIONS: SimplexOptions = SimplexOptions { max_evals: 30_000, f_tol: 1.0e-30, x_tol: 1.0e-13 };
const POLISH_STEPS: [f64; 2] = [1.0e-3, 1.0e-6];

/// Fit the sender amplitudes to a target spectrum at frozen `t0`:
/// restarted Nelder-Mead over the real parameterization of the unit-sphere
/// amplitudes, global phase fixed, best of all restarts.
pub fn minimize_discrepancy(
    sectors: &ChainSectors,
    target: &EigenTriple,
    t0: f64,
    opts: &DiscrepancyOptions,
) -> Result<CreationRecord> {
    if opts.restarts < 1 {
        return Err(Error::InvalidSpectrum("need at least one restart".into()));
    }
    let spec = &sectors.spec;
    if spec.n_total < spec.n_sender + 2 {
        return Err(Error::InvalidChain(format!(
            "two-qubit flow needs N >= N_S + 2, got N = {}",
            spec.n_total
        )));
    }
    let problem = DiscrepancyProblem::new(sectors, target, t0);
    let dim = problem.param_dim();

    let best = (0..opts.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(opts, target, problem.n, restart));
            let mut x0: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in x0.iter_mut() {
                *v /= norm;
            }
            let mut result = nelder_mead_min(|p| problem.objective(p), &x0, 0.3, &NM_OPTIONS);
            for step in POLISH_STEPS {
                if result.f <= NM_OPTIONS.f_tol {
                    break;
                }
                let polish = nelder_mead_min(|p| problem.objective(p), &result.x, step, &NM_OPTIONS);
                if polish.f < result.f {
                    result = polish;
                }
            }
            (result.f, restart, result.x)
        })
        .reduce_with(|a, b| if (b.0, b.1) < (a.0, a.1) { b } else { a })
        .expect("at least one restart");

    let amps = canonicalize(&best.2);
    let ns = spec.n_sender;
    let amplitudes = ChainState::from_sender(spec, amps[0], &amps[1..=ns], &amps[ns + 1..])?;
    let epsilon = best.0.max(0.0).sqrt();
    Ok(CreationRecord {
        target: *target,
        n_total: spec.n_total,
        t0,
        amplitudes,
        epsilon,
        feasible: epsilon <= opts.epsilon_threshold,
        status: ScanStatus::AtLength,
    })
}

/// Optimize the registration time and fit a target at one chain length.
pub fn creation_at_length(
    n_total: usize,
    target: &EigenTriple,
    config: &TwoQubitConfig,
) -> Result<CreationRecord> {
    let spec = ChainSpec::new(n_total, config.n_sender, 2)?;
    let sectors = ChainSectors::build(spec)?;
    let reg = registration_time(
        &sectors,
        config.scan.window_for(n_total),
        config.scan.grid_step,
        config.scan.refine_tol,
    )?;
    minimize_discrepancy(&sectors, target, reg.t0, &config.opt)
}

fn rank_two_route(target: &EigenTriple, config: &TwoQubitConfig) -> Result<CreationRecord> {
    let lambda2 = 1.0 - target.lambda1;
    let n_start = config.scan.n_start.unwrap_or(config.n_sender + 2);
    let make_record = |n: usize, t0: f64, w1: f64, status: ScanStatus| -> Result<CreationRecord> {
        let spec = ChainSpec::new(n, config.n_sender, 2)?;
        let eig = one_excitation_eigensystem(&spec)?;
        let result = protocol::run_protocol(&eig, &spec, t0)?;
        let a: Vec<C64> = result.sender_vector.iter().copied().collect();
        let zeros = vec![C64::ZERO; pair_count(config.n_sender)];
        let amplitudes = ChainState::from_sender(&spec, C64::ZERO, &a, &zeros)?;
        // best reachable receiver-pair population is w1^2; the coefficient
        // gap to A0 = λ1 λ2 is the residual discrepancy (B = C = 0 on both
        // sides)
        let p = (w1 * w1).min(lambda2);
        let epsilon = (target.lambda1 * lambda2 - p * (1.0 - p)).max(0.0);
        Ok(CreationRecord {
            target: *target,
            n_total: n,
            t0,
            amplitudes,
            epsilon,
            feasible: w1 * w1 >= lambda2,
            status,
        })
    };

    if lambda2 <= EigenTriple::TOL {
        // pure target: a_0 = 1 creates it at any length
        let spec = ChainSpec::new(n_start, config.n_sender, 2)?;
        let single = vec![C64::ZERO; config.n_sender];
        let zeros = vec![C64::ZERO; pair_count(config.n_sender)];
        let amplitudes = ChainState::from_sender(&spec, C64::ONE, &single, &zeros)?;
        return Ok(CreationRecord {
            target: *target,
            n_total: config.scan.n_max,
            t0: 0.0,
            amplitudes,
            epsilon: 0.0,
            feasible: true,
            status: ScanStatus::OpenEnded,
        });
    }

    let scan = ScanConfig { n_start: Some(n_start), ..config.scan };
    let mut evals = Vec::new();
    for n in n_start..=scan.n_max {
        evals.push(protocol::evaluate_length(config.n_sender, 2, n, lambda2, &scan)?);
        if let Some((_, true)) = protocol::fold_scan(&evals, scan.k_fail) {
            break;
        }
    }
    match protocol::fold_scan(&evals, scan.k_fail) {
        Some((best, certified)) => make_record(
            best.n_total,
            best.t0,
            best.w1,
            if certified { ScanStatus::Certified } else { ScanStatus::OpenEnded },
        ),
        None => {
            let first = evals.first().ok_or(Error::ScanExhausted { n_max: scan.n_max })?;
            let mut rec = make_record(first.n_total, first.t0, first.w1, ScanStatus::Infeasible)?;
            rec.feasible = false;
            Ok(rec)
        }
    }
}

/// Largest chain length at which the target spectrum stays creatable,
/// certified by `k_fail` consecutive failing lengths. Rank-two targets ride
/// the one-excitation singular-value route; everything else goes through
/// the discrepancy minimizer.
pub fn eigenvalue_critical_length(
    target: &EigenTriple,
    config: &TwoQubitConfig,
) -> Result<CreationRecord> {
    EigenTriple::new(target.lambda1, target.lambda2, target.lambda3)?;
    if target.is_rank_two() {
        return rank_two_route(target, config);
    }

    let n_start = config.scan.n_start.unwrap_or(config.n_sender + 2).max(config.n_sender + 2);
    let mut best: Option<CreationRecord> = None;
    let mut first: Option<CreationRecord> = None;
    let mut fails = 0usize;
    for n in n_start..=config.scan.n_max {
        let rec = creation_at_length(n, target, config)?;
        if first.is_none() {
            first = Some(rec.clone());
        }
        if rec.feasible {
            best = Some(rec);
            fails = 0;
        } else if best.is_some() {
            fails += 1;
            if fails >= config.scan.k_fail {
                let mut rec = best.take().expect("feasible record");
                rec.status = ScanStatus::Certified;
                return Ok(rec);
            }
        }
    }
    match best {
        Some(mut rec) => {
            rec.status = ScanStatus::OpenEnded;
            Ok(rec)
        }
        None => {
            let mut rec = first.ok_or(Error::ScanExhausted { n_max: config.scan.n_max })?;
            rec.status = ScanStatus::Infeasible;
            Ok(rec)
        }
    }
}

/// All lattice triples λ_i = p_i / resolution with p1 >= p2 >= p3 >= 0 and
/// p4 = resolution - p1 - p2 - p3 >= 0, in lexicographic order.
pub fn lattice_points(resolution: usize) -> Vec<EigenTriple> {
    let mut points = Vec::new();
    let r = resolution as f64;
    for p1 in 0..=resolution {
        for p2 in 0..=p1 {
            for p3 in 0..=p2 {
                if p1 + p2 + p3 <= resolution {
                    points.push(EigenTriple {
                        lambda1: p1 as f64 / r,
                        lambda2: p2 as f64 / r,
                        lambda3: p3 as f64 / r,
                    });
                }
            }
        }
    }
    points
}

/// Critical length for every lattice point of the eigenvalue tetrahedron.
/// Points are independent; the result order matches [`lattice_points`].
pub fn lattice_scan(resolution: usize, config: &TwoQubitConfig) -> Result<Vec<CreationRecord>> {
    let points = lattice_points(resolution);
    points
        .par_iter()
        .map(|target| eigenvalue_critical_length(target, config))
        .collect::<Result<Vec<_>>>()
}
