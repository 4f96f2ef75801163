//! Acceptance suite: reproduces the published critical-length tables,
//! registration times, spectral windows and two-qubit creation results,
//! one test per criterion, plus the always-on property batch. The long
//! (hours) reproduction runs are `#[ignore]`d; run them explicitly with
//! `cargo test --release -p spinline --test acceptance -- --ignored`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

use spinline::dynamics::{
    evolve, receiver_projection, transition_matrix, two_qubit_density, ChainState, SectorState,
};
use spinline::fullspace;
use spinline::hamiltonian::{
    dipolar_couplings, eigendecompose, one_excitation_block, one_excitation_eigensystem,
    pair_count, two_excitation_block, ChainSpec,
};
use spinline::protocol::{
    critical_length, maximize_w1, run_protocol, svd, CriticalLengthRecord, ScanConfig,
};
use spinline::spectral::{phase_window, spectral_profile, PHASE_BOUND};
use spinline::two_qubit::{
    averaged_kappa, creation_at_length, eigenvalue_critical_length, kappa, ChainSectors,
    EigenTriple, ScanStatus, TwoQubitConfig,
};

fn report(criterion: &str, detail: &str) {
    println!("acceptance {criterion}: PASS ({detail})");
}

fn hpst_cell(ns: usize, nr: usize) -> CriticalLengthRecord {
    critical_length(ns, nr, 0.9, &ScanConfig::default()).expect("scan succeeds")
}

fn mixed_cell(ns: usize, nr: usize) -> CriticalLengthRecord {
    critical_length(ns, nr, 0.5, &ScanConfig::default()).expect("scan succeeds")
}

#[test]
fn criterion_1_hpst_table_upper_left_block() {
    let expected = [[4usize, 4, 9], [4, 17, 17], [9, 17, 22]];
    let mut cells = [[0usize; 3]; 3];
    for (i, row) in expected.iter().enumerate() {
        for (j, &want) in row.iter().enumerate() {
            let rec = hpst_cell(i + 1, j + 1);
            assert!(rec.certified, "({}, {}) scan not certified", i + 1, j + 1);
            assert_eq!(
                rec.n_critical,
                want,
                "HPST cell ({}, {}): got {}, expected {want}",
                i + 1,
                j + 1,
                rec.n_critical
            );
            cells[i][j] = rec.n_critical;
        }
    }
    // soft regression, reported not asserted: N_c non-decreasing along rows
    // and columns
    let mut monotone = true;
    for i in 0..3 {
        for j in 1..3 {
            monotone &= cells[i][j] >= cells[i][j - 1];
            monotone &= cells[j][i] >= cells[j - 1][i];
        }
    }
    report(
        "criterion 1 (3x3 high-probability table)",
        &format!("{cells:?}, monotone along rows/columns: {monotone}"),
    );
}

#[test]
fn criterion_2_hpst_cell_ten_senders() {
    let rec = hpst_cell(10, 1);
    assert_eq!(rec.n_critical, 31);
    assert!(
        (rec.t0_at_critical - 39.38).abs() <= 0.5,
        "t0 = {} out of 39.38 +/- 0.5",
        rec.t0_at_critical
    );
    report(
        "criterion 2 (N_S=10, N_R=1 cell)",
        &format!("N_c = {}, t0 = {:.4}", rec.n_critical, rec.t0_at_critical),
    );
}

#[test]
fn criterion_3_mixed_state_cells() {
    let cases = [(1usize, 1usize, 22usize), (2, 2, 109), (4, 2, 191)];
    let mut got = Vec::new();
    for (ns, nr, want) in cases {
        let rec = mixed_cell(ns, nr);
        assert!(rec.certified);
        assert!(
            rec.n_critical.abs_diff(want) <= 1,
            "mixed cell ({ns}, {nr}): got {}, expected {want} +/- 1",
            rec.n_critical
        );
        got.push((ns, nr, rec.n_critical));
    }
    report("criterion 3 (mixed-state cells)", &format!("{got:?}"));
}

/// The rank-two target (1/2, 1/2, 0, 0) rides the one-excitation route and
/// must land on the same critical length as the mixed-state table cell.
#[test]
fn rank_two_target_matches_mixed_table_cell() {
    let rec = eigenvalue_critical_length(&EigenTriple::mixed2(), &TwoQubitConfig::default())
        .expect("scan succeeds");
    assert_eq!(rec.n_total, 191);
    assert_eq!(rec.status, ScanStatus::Certified);
    assert!(rec.epsilon < 1e-12);
    report("rank-two route", &format!("N_c = {} via the singular-value path", rec.n_total));
}

#[test]
fn criterion_4_exchange_symmetry() {
    let mut pairs = Vec::new();
    for (ns, nr) in [(1usize, 2usize), (1, 3), (2, 3)] {
        let a = hpst_cell(ns, nr).n_critical;
        let b = hpst_cell(nr, ns).n_critical;
        assert_eq!(a, b, "HPST ({ns},{nr}) vs ({nr},{ns})");
        pairs.push((ns, nr, a));
    }
    let a = mixed_cell(1, 2).n_critical;
    let b = mixed_cell(2, 1).n_critical;
    assert_eq!(a, b, "mixed (1,2) vs (2,1)");
    assert_eq!(a, 37);
    report(
        "criterion 4 (exchange symmetry)",
        &format!("hpst pairs {pairs:?}, mixed (1,2) = (2,1) = {a}"),
    );
}

#[test]
fn criterion_5_spectral_window() {
    let spec = ChainSpec::new(31, 10, 1).unwrap();
    let eig = one_excitation_eigensystem(&spec).unwrap();
    let opt = maximize_w1(&eig, &spec, (15.5, 46.5)).unwrap();
    let result = run_protocol(&eig, &spec, opt.t0).unwrap();
    let profile =
        spectral_profile(&eig, &spec, &result.sender_vector, &result.receiver_row, opt.t0)
            .unwrap();

    let (k_min, k_max) = phase_window(&profile, PHASE_BOUND).expect("window exists");
    assert!(k_min.abs_diff(8) <= 1, "k_min = {k_min}, expected 8 +/- 1");
    assert!(k_max.abs_diff(30) <= 1, "k_max = {k_max}, expected 30 +/- 1");

    let recon_err = (profile.reconstruction() - profile.projection).norm();
    assert!(recon_err < 1e-10, "reconstruction error {recon_err:.3e}");
    report(
        "criterion 5 (spectral window)",
        &format!("window [{k_min}, {k_max}], reconstruction error {recon_err:.1e}"),
    );
}

#[test]
fn criterion_6_two_qubit_vertices() {
    let config = TwoQubitConfig::default();
    let targets = [("rank-3 mixture", EigenTriple::mixed3()), ("rank-4 mixture", EigenTriple::mixed4())];
    for (name, target) in &targets {
        for n in 6..=16 {
            let rec = creation_at_length(n, target, &config).unwrap();
            assert!(
                rec.epsilon <= 1e-8,
                "{name} at N = {n}: epsilon = {:.3e} exceeds 1e-8",
                rec.epsilon
            );
        }
        let rec = creation_at_length(17, target, &config).unwrap();
        assert!(
            rec.epsilon >= 1e-6,
            "{name} at N = 17: epsilon = {:.3e} below the infeasibility jump",
            rec.epsilon
        );
    }
    // the full certified scan for the rank-3 vertex
    let rec = eigenvalue_critical_length(&EigenTriple::mixed3(), &config).unwrap();
    assert_eq!(rec.n_total, 16);
    assert_eq!(rec.status, ScanStatus::Certified);
    report(
        "criterion 6 (two-qubit vertices)",
        "epsilon <= 1e-8 through N = 16, jump at N = 17, N_c = 16 certified",
    );
}

/// Long reproduction runs (hours): the N_S = N_R = 10 table cells and their
/// spectral windows.
#[test]
#[ignore = "multi-hour extended reproduction; run with -- --ignored"]
fn criterion_7_extended_ten_by_ten() {
    let scan = ScanConfig { n_max: 6000, ..Default::default() };
    let hpst = critical_length(10, 10, 0.9, &scan).unwrap();
    assert_eq!(hpst.n_critical, 776);
    assert!((hpst.t0_at_critical - 767.9).abs() <= 1.0);

    let spec = ChainSpec::new(776, 10, 10).unwrap();
    let eig = one_excitation_eigensystem(&spec).unwrap();
    let result = run_protocol(&eig, &spec, hpst.t0_at_critical).unwrap();
    let profile = spectral_profile(
        &eig,
        &spec,
        &result.sender_vector,
        &result.receiver_row,
        hpst.t0_at_critical,
    )
    .unwrap();
    let (k_min, k_max) = phase_window(&profile, PHASE_BOUND).unwrap();
    assert!(k_min.abs_diff(457) <= 2, "k_min = {k_min}");
    assert!(k_max.abs_diff(574) <= 2, "k_max = {k_max}");

    let mixed = critical_length(10, 10, 0.5, &scan).unwrap();
    assert_eq!(mixed.n_critical, 5473);
    assert!((mixed.t0_at_critical - 5404.0).abs() <= 2.0);

    let spec = ChainSpec::new(5473, 10, 10).unwrap();
    let eig = one_excitation_eigensystem(&spec).unwrap();
    let result = run_protocol(&eig, &spec, mixed.t0_at_critical).unwrap();
    let profile = spectral_profile(
        &eig,
        &spec,
        &result.sender_vector,
        &result.receiver_row,
        mixed.t0_at_critical,
    )
    .unwrap();
    let (k_min, k_max) = phase_window(&profile, PHASE_BOUND).unwrap();
    assert!(k_min.abs_diff(3405) <= 2, "k_min = {k_min}");
    assert!(k_max.abs_diff(3886) <= 2, "k_max = {k_max}");

    report("criterion 7 (extended 10x10 cells)", "776 @ 767.9 and 5473 @ 5404");
}

fn random_unit(rng: &mut StdRng, dim: usize) -> DVector<C64> {
    let v = DVector::from_fn(dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let norm = v.norm();
    v / C64::from(norm)
}

#[test]
fn criterion_8_property_suite() {
    // eigendecomposition residuals up to N = 200
    for n in [2usize, 31, 64, 128, 200] {
        let spec = ChainSpec::new(n, 1, 1).unwrap();
        let block = one_excitation_block(&dipolar_couplings(&spec).unwrap());
        let eig = eigendecompose(&block).unwrap();
        let w = &eig.eigenvectors;
        let recon = (w * DMatrix::from_diagonal(&eig.eigenvalues) * w.transpose() - &block.matrix)
            .amax();
        let ortho = (w.transpose() * w - DMatrix::identity(n, n)).amax();
        assert!(recon < 1e-10 && ortho < 1e-10, "N = {n}: {recon:.2e} / {ortho:.2e}");
    }
    // two-excitation block residual at a moderate size
    {
        let spec = ChainSpec::new(20, 1, 1).unwrap();
        let block = two_excitation_block(&dipolar_couplings(&spec).unwrap());
        let eig = eigendecompose(&block).unwrap();
        let w = &eig.eigenvectors;
        let dim = pair_count(20);
        let recon = (w * DMatrix::from_diagonal(&eig.eigenvalues) * w.transpose() - &block.matrix)
            .amax();
        let ortho = (w.transpose() * w - DMatrix::identity(dim, dim)).amax();
        assert!(recon < 1e-10 && ortho < 1e-10);
    }

    // unitarity of the sector evolution
    let mut rng = StdRng::seed_from_u64(2024);
    {
        let spec = ChainSpec::new(10, 3, 2).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        for _ in 0..50 {
            let state = SectorState::new(random_unit(&mut rng, 10)).unwrap();
            let evolved = evolve(&eig, &state, 37.5).unwrap();
            assert!((evolved.amplitudes.norm() - 1.0).abs() < 1e-12);
        }
    }

    // sector-wise partial trace against the full-space oracle at N = 4
    {
        let spec = ChainSpec::new(4, 2, 1).unwrap();
        for _ in 0..200 {
            let raw = random_unit(&mut rng, 11);
            let state = ChainState::new(
                raw[0],
                raw.rows(1, 4).clone_owned(),
                raw.rows(5, 6).clone_owned(),
            )
            .unwrap();
            let rho = two_qubit_density(&state, &spec).unwrap();
            let oracle = fullspace::partial_trace_last_two(&fullspace::embed(&state).unwrap());
            assert!((rho.entries - oracle).map(|z| z.norm()).max() < 1e-12);
        }
    }

    // averaged kappa against Monte Carlo over 1e5 Haar-random sender states
    {
        let spec = ChainSpec::new(8, 4, 2).unwrap();
        let sectors = ChainSectors::build(spec).unwrap();
        let t = 7.77;
        let predicted = averaged_kappa(&sectors, t);
        let samples = 100_000usize;
        let dim = 11;
        let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
        for _ in 0..samples {
            let raw = random_unit(&mut rng, dim);
            let state = ChainState::new(
                raw[0],
                {
                    let mut single = DVector::zeros(8);
                    single.rows_mut(0, 4).copy_from(&raw.rows(1, 4));
                    single
                },
                {
                    let mut double = DVector::zeros(pair_count(8));
                    let mut idx = 5;
                    for i in 1..=4usize {
                        for j in (i + 1)..=4 {
                            double[spinline::hamiltonian::pair_index(8, i, j)] = raw[idx];
                            idx += 1;
                        }
                    }
                    double
                },
            )
            .unwrap();
            let evolved = state.evolve(&sectors.one, &sectors.two, t).unwrap();
            let k = kappa(&two_qubit_density(&evolved, &spec).unwrap());
            sum += k;
            sum_sq += k * k;
        }
        let mean = sum / samples as f64;
        let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
        let stderr = (var / samples as f64).sqrt();
        assert!(
            (mean - predicted).abs() <= 3.0 * stderr,
            "MC mean {mean:.6} vs predicted {predicted:.6} (stderr {stderr:.2e})"
        );
    }

    // optimal unitaries reach w1; inner extended-receiver projections vanish
    for (n, ns, nr) in [(31usize, 10usize, 1usize), (13, 3, 4)] {
        let spec = ChainSpec::new(n, ns, nr).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let opt = maximize_w1(&eig, &spec, (0.5 * n as f64, 1.5 * n as f64)).unwrap();
        let tm = transition_matrix(&eig, &spec, opt.t0).unwrap();
        let triple = svd(&tm).unwrap();
        let result = run_protocol(&eig, &spec, opt.t0).unwrap();
        let f = receiver_projection(&result.sender_vector, &tm, &result.receiver_row).unwrap();
        assert!((f.norm() - triple.w1()).abs() < 1e-10);
        for node in (n - nr)..(n - 1) {
            assert!(result.f_profile[node] < 1e-10);
        }
    }

    // random sender encodings never beat the largest singular value
    {
        let spec = ChainSpec::new(6, 2, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let tm = transition_matrix(&eig, &spec, 6.1).unwrap();
        let w1 = svd(&tm).unwrap().w1();
        for _ in 0..10_000 {
            let a = random_unit(&mut rng, 2);
            let v = random_unit(&mut rng, 1);
            let f = receiver_projection(&a, &tm, &v).unwrap().norm();
            assert!(f <= w1 + 1e-8);
        }
    }

    report("criterion 8 (property suite)", "residuals, unitarity, traces, averages, bounds");
}
