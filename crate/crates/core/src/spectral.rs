//! Spectral decomposition of the created projection.
//!
//! The projection factors over eigenmodes as
//!   f_N(t) = Σ_k P_k e^{i(φ_k - λ_k t)},
//! with per-mode amplitudes P_k and optimizing phases φ_k determined by the
//! sender amplitudes and the extended-receiver unitary. A mode contributes
//! constructively when its resulting phase Φ_k = φ_k - λ_k t0 (taken
//! relative to the global phase of f_N) stays inside a small band; the
//! well-phased spectral window is the longest contiguous run of
//! significant modes with |Φ_k| below the bound.

use nalgebra::DVector;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hamiltonian::{ChainSpec, EigenSystem};

/// Wrap an angle to (-π, π]; idempotent.
pub fn wrap_phase(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let y = x.rem_euclid(tau);
    if y > std::f64::consts::PI {
        y - tau
    } else {
        y
    }
}

/// fraction of the largest amplitude below which a mode is insignificant
const P_MIN_FRACTION: f64 = 0.01;

/// Per-eigenmode amplitudes and phases of the created projection. Mode
/// indices are 1-based and follow the ascending eigenvalue order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    /// P_k >= 0
    pub amplitudes: DVector<f64>,
    /// optimizing phases φ_k in (-π, π]
    pub phases: DVector<f64>,
    /// resulting phases Φ_k = φ_k - λ_k t0 - arg f_N, wrapped to (-π, π]
    pub resulting_phases: DVector<f64>,
    /// sector eigenvalues λ_k (ascending), kept for reconstruction
    pub eigenvalues: DVector<f64>,
    pub t0: f64,
    /// absolute significance threshold on P_k
    pub p_min: f64,
    /// the projection f_N(t0)
    pub projection: C64,
}

/// Decompose the projection created by `sender_vector` and `receiver_row`
/// at registration time `t0` into per-mode amplitudes and phases.
pub fn spectral_profile(
    eig: &EigenSystem,
    spec: &ChainSpec,
    sender_vector: &DVector<C64>,
    receiver_row: &DVector<C64>,
    t0: f64,
) -> Result<SpectralProfile> {
    let n = spec.n_total;
    if eig.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: eig.dim() });
    }
    if sender_vector.len() != spec.n_sender {
        return Err(Error::DimensionMismatch {
            expected: spec.n_sender,
            got: sender_vector.len(),
        });
    }
    if receiver_row.len() != spec.n_ext_receiver {
        return Err(Error::DimensionMismatch {
            expected: spec.n_ext_receiver,
            got: receiver_row.len(),
        });
    }
    for norm in [sender_vector.norm(), receiver_row.norm()] {
        let deviation = (norm - 1.0).abs();
        if deviation > 1.0e-10 {
            return Err(Error::NotNormalized { deviation });
        }
    }

    let w = &eig.eigenvectors;
    let nr = spec.n_ext_receiver;
    let mut weights = DVector::<C64>::zeros(n);
    let mut projection = C64::ZERO;
    for k in 0..n {
        let mut recv = C64::ZERO;
        for m in 0..nr {
            recv += receiver_row[m] * w[(n - nr + m, k)];
        }
        let mut send = C64::ZERO;
        for j in 0..spec.n_sender {
            send += w[(j, k)] * sender_vector[j];
        }
        weights[k] = recv * send;
        projection += weights[k] * C64::from_polar(1.0, -eig.eigenvalues[k] * t0);
    }

    let global = projection.arg();
    let amplitudes = DVector::from_iterator(n, weights.iter().map(|z| z.norm()));
    let phases = DVector::from_iterator(n, weights.iter().map(|z| wrap_phase(z.arg())));
    let resulting_phases = DVector::from_iterator(
        n,
        (0..n).map(|k| wrap_phase(phases[k] - eig.eigenvalues[k] * t0 - global)),
    );
    let p_min = P_MIN_FRACTION * amplitudes.max();
    Ok(SpectralProfile {
        amplitudes,
        phases,
        resulting_phases,
        eigenvalues: eig.eigenvalues.clone(),
        t0,
        p_min,
        projection,
    })
}

impl SpectralProfile {
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.len() == 0
    }

    pub fn with_p_min(mut self, p_min: f64) -> Self {
        self.p_min = p_min;
        self
    }

    /// π-k-shifted optimizing phase of 1-based mode `k`, the form in which
    /// phases are usually plotted.
    pub fn shifted_phase(&self, k: usize) -> f64 {
        wrap_phase(self.phases[k - 1] + std::f64::consts::PI * k as f64)
    }

    /// Σ_k P_k e^{i(φ_k - λ_k t0)}; equals the stored projection up to
    /// rounding.
    pub fn reconstruction(&self) -> C64 {
        (0..self.len())
            .map(|k| {
                C64::from_polar(
                    self.amplitudes[k],
                    self.phases[k] - self.eigenvalues[k] * self.t0,
                )
            })
            .sum()
    }

    /// Serialize to a CSV block with header comments; `from_csv` restores
    /// the profile bit-exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# t0={}\n", self.t0));
        out.push_str(&format!("# p_min={}\n", self.p_min));
        out.push_str(&format!("# f={},{}\n", self.projection.re, self.projection.im));
        out.push_str("# columns: k,amplitude,phase,phase_pi_shifted,resulting_phase,eigenvalue\n");
        for k in 1..=self.len() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k,
                self.amplitudes[k - 1],
                self.phases[k - 1],
                self.shifted_phase(k),
                self.resulting_phases[k - 1],
                self.eigenvalues[k - 1],
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |what: &str| Error::InvalidSpectrum(format!("malformed profile data: {what}"));
        let mut t0 = None;
        let mut p_min = None;
        let mut f = None;
        let mut rows: Vec<[f64; 4]> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("t0=") {
                    t0 = v.parse::<f64>().ok();
                } else if let Some(v) = rest.strip_prefix("p_min=") {
                    p_min = v.parse::<f64>().ok();
                } else if let Some(v) = rest.strip_prefix("f=") {
                    let mut parts = v.split(',');
                    let re = parts.next().and_then(|s| s.parse::<f64>().ok());
                    let im = parts.next().and_then(|s| s.parse::<f64>().ok());
                    if let (Some(re), Some(im)) = (re, im) {
                        f = Some(C64::new(re, im));
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(bad("expected 6 columns"));
            }
            let parse = |s: &str| s.parse::<f64>().map_err(|_| bad("unparsable number"));
            rows.push([parse(fields[1])?, parse(fields[2])?, parse(fields[4])?, parse(fields[5])?]);
        }
        let n = rows.len();
        if n == 0 {
            return Err(bad("no rows"));
        }
        Ok(Self {
            amplitudes: DVector::from_iterator(n, rows.iter().map(|r| r[0])),
            phases: DVector::from_iterator(n, rows.iter().map(|r| r[1])),
            resulting_phases: DVector::from_iterator(n, rows.iter().map(|r| r[2])),
            eigenvalues: DVector::from_iterator(n, rows.iter().map(|r| r[3])),
            t0: t0.ok_or_else(|| bad("missing t0"))?,
            p_min: p_min.ok_or_else(|| bad("missing p_min"))?,
            projection: f.ok_or_else(|| bad("missing f"))?,
        })
    }
}

/// default half-width of the well-phased band
pub const PHASE_BOUND: f64 = std::f64::consts::PI / 6.0;

/// Longest contiguous 1-based index interval [k_min, k_max] whose
/// significant modes (P_k > p_min) all satisfy |Φ_k| < bound. Insignificant
/// modes inside the interval are ignored; the endpoints are significant
/// well-phased modes. `None` when no mode qualifies.
pub fn phase_window(profile: &SpectralProfile, bound: f64) -> Option<(usize, usize)> {
    let n = profile.len();
    let significant = |k: usize| profile.amplitudes[k] > profile.p_min;
    let good = |k: usize| profile.resulting_phases[k].abs() < bound;

    let mut best: Option<(usize, usize)> = None;
    let mut seg_start = 0usize;
    let consider = |seg: std::ops::Range<usize>, best: &mut Option<(usize, usize)>| {
        let lo = seg.clone().find(|&k| significant(k) && good(k));
        let hi = seg.rev().find(|&k| significant(k) && good(k));
        if let (Some(lo), Some(hi)) = (lo, hi) {
            let better = match *best {
                Some((a, b)) => hi - lo > b - a,
                None => true,
            };
            if better {
                *best = Some((lo, hi));
            }
        }
    };
    for k in 0..n {
        if significant(k) && !good(k) {
            consider(seg_start..k, &mut best);
            seg_start = k + 1;
        }
    }
    consider(seg_start..n, &mut best);
    best.map(|(lo, hi)| (lo + 1, hi + 1))
}

/// 1-based indices of modes with P_k above the profile's threshold.
pub fn significant_harmonics(profile: &SpectralProfile) -> Vec<usize> {
    (0..profile.len())
        .filter(|&k| profile.amplitudes[k] > profile.p_min)
        .map(|k| k + 1)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::one_excitation_eigensystem;
    use crate::protocol::{maximize_w1, run_protocol};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn hpst_profile() -> SpectralProfile {
        let spec = ChainSpec::new(31, 10, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let opt = maximize_w1(&eig, &spec, (15.5, 46.5)).unwrap();
        let result = run_protocol(&eig, &spec, opt.t0).unwrap();
        spectral_profile(&eig, &spec, &result.sender_vector, &result.receiver_row, opt.t0).unwrap()
    }

    #[test]
    fn reconstruction_matches_projection() {
        let profile = hpst_profile();
        let diff = (profile.reconstruction() - profile.projection).norm();
        assert!(diff < 1e-10, "reconstruction error {diff:.3e}");
        assert!(profile.amplitudes.iter().all(|&p| p <= 1.0 + 1e-12));
    }

    #[test]
    fn two_node_modes_split_evenly() {
        let spec = ChainSpec::new(2, 1, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let one = DVector::from_vec(vec![C64::ONE]);
        let profile = spectral_profile(&eig, &spec, &one, &one, std::f64::consts::PI).unwrap();
        assert_abs_diff_eq!(profile.amplitudes[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(profile.amplitudes[1], 0.5, epsilon = 1e-12);
        assert!(profile.resulting_phases[0].abs() < 1e-12);
        assert!(profile.resulting_phases[1].abs() < 1e-12);
        assert_abs_diff_eq!(profile.projection.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn antisymmetric_modes_vanish_for_central_placement() {
        // a centered source only overlaps eigenvectors that are symmetric
        // under node reversal; for N = 5 the antisymmetric ones have a node
        // at the chain center
        let n = 5;
        let spec = ChainSpec::new(n, 3, 2).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let mut center = DVector::<C64>::zeros(3);
        center[n / 2] = C64::ONE;
        let recv = DVector::from_vec(vec![C64::ONE, C64::ZERO]);
        let profile = spectral_profile(&eig, &spec, &center, &recv, 1.0).unwrap();
        let w = &eig.eigenvectors;
        let mut zeros = 0;
        for k in 0..n {
            if w[(n / 2, k)].abs() < 1e-12 {
                assert!(profile.amplitudes[k] < 1e-12);
                zeros += 1;
            }
        }
        assert_eq!(zeros, 2);
    }

    #[test]
    fn hpst_window_covers_most_of_the_spectrum() {
        let profile = hpst_profile();
        let (k_min, k_max) = phase_window(&profile, PHASE_BOUND).unwrap();
        assert!((k_min as i64 - 8).abs() <= 1, "k_min = {k_min}");
        assert!((k_max as i64 - 30).abs() <= 1, "k_max = {k_max}");
        // almost the whole spectrum is significant
        let significant = significant_harmonics(&profile);
        assert!(significant.len() * 10 >= profile.len() * 8);
    }

    #[test]
    fn degenerate_thresholds() {
        let profile = hpst_profile();
        let all = significant_harmonics(&profile.clone().with_p_min(0.0));
        assert_eq!(all.len(), profile.amplitudes.iter().filter(|&&p| p > 0.0).count());
        let none = significant_harmonics(&profile.clone().with_p_min(1.0));
        assert!(none.is_empty());
        assert!(phase_window(&profile.with_p_min(1.0), PHASE_BOUND).is_none());
    }

    #[test]
    fn window_invariant_under_global_sender_phase() {
        let spec = ChainSpec::new(31, 10, 1).unwrap();
        let eig = one_excitation_eigensystem(&spec).unwrap();
        let opt = maximize_w1(&eig, &spec, (15.5, 46.5)).unwrap();
        let result = run_protocol(&eig, &spec, opt.t0).unwrap();
        let rotated = &result.sender_vector * C64::from_polar(1.0, 1.234_567);
        let base =
            spectral_profile(&eig, &spec, &result.sender_vector, &result.receiver_row, opt.t0)
                .unwrap();
        let shifted =
            spectral_profile(&eig, &spec, &rotated, &result.receiver_row, opt.t0).unwrap();
        assert_eq!(phase_window(&base, PHASE_BOUND), phase_window(&shifted, PHASE_BOUND));
        for k in 0..base.len() {
            assert_abs_diff_eq!(
                base.resulting_phases[k],
                shifted.resulting_phases[k],
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let profile = hpst_profile();
        let text = profile.to_csv();
        let restored = SpectralProfile::from_csv(&text).unwrap();
        assert_eq!(profile, restored);
        assert_eq!(text, restored.to_csv());
    }

    proptest! {
        #[test]
        fn wrap_phase_lands_in_half_open_interval(x in -1.0e6f64..1.0e6) {
            let y = wrap_phase(x);
            prop_assert!(y > -std::f64::consts::PI && y <= std::f64::consts::PI);
            prop_assert!((wrap_phase(y) - y).abs() == 0.0);
        }
    }
}
