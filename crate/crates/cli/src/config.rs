//! Flat key-value sweep configuration with command-line overrides.
//!
//! Every tunable of the numerical pipeline (grid step, time window,
//! refinement tolerance, failure margin, restart count, thresholds) is a
//! config key, so a sweep is reproducible from the config file plus the
//! seed alone. The config hash stored with every record covers exactly the
//! keys that influence numbers.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use spinline::protocol::ScanConfig;
use spinline::two_qubit::{DiscrepancyOptions, TwoQubitConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// registry name of the strategy to run
    pub mode: String,
    pub ns: Vec<usize>,
    pub nr: Vec<usize>,
    /// fixed chain length for the spectrum/profile modes
    pub n_total: Option<usize>,
    /// target on |f_N|^2 for the table modes
    pub threshold: f64,
    pub n_start: Option<usize>,
    pub n_max: Option<usize>,
    pub k_fail: usize,
    pub window: (f64, f64),
    pub grid_step: f64,
    pub refine_tol: f64,
    pub restarts: usize,
    pub seed: u64,
    pub epsilon_threshold: f64,
    /// override of the spectral significance threshold fraction
    pub p_min_fraction: Option<f64>,
    /// eigenvalue-lattice denominator
    pub resolution: usize,
    /// two-qubit target: pure | mixed2 | mixed3 | mixed4 | "l1,l2,l3"
    pub target: Option<String>,
    pub out: PathBuf,
    pub extended: bool,
    pub resume: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let scan = ScanConfig::default();
        let opt = DiscrepancyOptions::default();
        Self {
            mode: String::new(),
            ns: vec![1],
            nr: vec![1],
            n_total: None,
            threshold: 0.9,
            n_start: None,
            n_max: None,
            k_fail: scan.k_fail,
            window: scan.window_factors,
            grid_step: scan.grid_step,
            refine_tol: scan.refine_tol,
            restarts: opt.restarts,
            seed: opt.seed,
            epsilon_threshold: opt.epsilon_threshold,
            p_min_fraction: None,
            resolution: 12,
            target: None,
            out: PathBuf::from("out"),
            extended: false,
            resume: false,
        }
    }
}

fn parse_usize_list(value: &str) -> Result<Vec<usize>> {
    let mut items = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = part.split_once("..") {
            let lo: usize = lo.trim().parse().context("bad range start")?;
            let hi: usize = hi.trim().parse().context("bad range end")?;
            if hi < lo {
                bail!("empty range {part}");
            }
            items.extend(lo..=hi);
        } else {
            items.push(part.parse().with_context(|| format!("bad integer {part}"))?);
        }
    }
    if items.is_empty() {
        bail!("empty list");
    }
    Ok(items)
}

impl SweepConfig {
    /// Apply one `key = value` assignment (config-file line or CLI
    /// override).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "mode" => self.mode = value.to_string(),
            "ns" => self.ns = parse_usize_list(value)?,
            "nr" => self.nr = parse_usize_list(value)?,
            "n_total" => self.n_total = Some(value.parse()?),
            "threshold" => self.threshold = value.parse()?,
            "n_start" => self.n_start = Some(value.parse()?),
            "n_max" => self.n_max = Some(value.parse()?),
            "k_fail" => self.k_fail = value.parse()?,
            "window_lo" => self.window.0 = value.parse()?,
            "window_hi" => self.window.1 = value.parse()?,
            "grid_step" => self.grid_step = value.parse()?,
            "refine_tol" => self.refine_tol = value.parse()?,
            "restarts" => self.restarts = value.parse()?,
            "seed" => self.seed = value.parse()?,
            "epsilon_threshold" => self.epsilon_threshold = value.parse()?,
            "p_min_fraction" => self.p_min_fraction = Some(value.parse()?),
            "resolution" => self.resolution = value.parse()?,
            "target" => self.target = Some(value.to_string()),
            "out" => self.out = PathBuf::from(value),
            "extended" => self.extended = value.parse()?,
            "resume" => self.resume = value.parse()?,
            other => bail!("unknown config key `{other}`"),
        }
        Ok(())
    }

    /// Read a flat `key = value` file (`#` starts a comment).
    pub fn load_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("{}:{}: expected key = value", path.display(), lineno + 1))?;
            self.set(key.trim(), value)
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        Ok(())
    }

    /// Canonical serialization of the number-affecting keys, used for the
    /// config hash and for audit output.
    pub fn canonical(&self) -> String {
        let mut map = BTreeMap::new();
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        map.insert("mode", self.mode.clone());
        map.insert("ns", list(&self.ns));
        map.insert("nr", list(&self.nr));
        map.insert("n_total", self.n_total.map(|v| v.to_string()).unwrap_or_default());
        map.insert("threshold", self.threshold.to_string());
        map.insert("n_start", self.n_start.map(|v| v.to_string()).unwrap_or_default());
        map.insert("n_max", self.effective_n_max().to_string());
        map.insert("k_fail", self.k_fail.to_string());
        map.insert("window_lo", self.window.0.to_string());
        map.insert("window_hi", self.window.1.to_string());
        map.insert("grid_step", self.grid_step.to_string());
        map.insert("refine_tol", self.refine_tol.to_string());
        map.insert("restarts", self.restarts.to_string());
        map.insert("seed", self.seed.to_string());
        map.insert("epsilon_threshold", self.epsilon_threshold.to_string());
        map.insert(
            "p_min_fraction",
            self.p_min_fraction.map(|v| v.to_string()).unwrap_or_default(),
        );
        map.insert("resolution", self.resolution.to_string());
        map.insert("target", self.target.clone().unwrap_or_default());
        let mut out = String::new();
        for (k, v) in map {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            let _ = write!(hex, "{byte:02x}");
        }
        hex
    }

    /// Length cap, depending on the mode family and the `--extended` flag
    /// unless set explicitly.
    pub fn effective_n_max(&self) -> usize {
        if let Some(n) = self.n_max {
            return n;
        }
        let two_excitation = matches!(self.mode.as_str(), "two_qubit_lattice" | "accuracy_curve")
            || (self.mode == "two_qubit_vertex" && !self.target_is_rank_two());
        match (two_excitation, self.extended) {
            (true, false) => 40,
            (true, true) => 300,
            (false, false) => 300,
            (false, true) => 6000,
        }
    }

    fn target_is_rank_two(&self) -> bool {
        self.parse_target().map(|t| t.is_rank_two()).unwrap_or(false)
    }

    pub fn parse_target(&self) -> Result<spinline::two_qubit::EigenTriple> {
        use spinline::two_qubit::EigenTriple;
        let spec = self.target.as_deref().context("this mode needs a target spectrum")?;
        match spec {
            "pure" => Ok(EigenTriple::pure()),
            "mixed2" => Ok(EigenTriple::mixed2()),
            "mixed3" => Ok(EigenTriple::mixed3()),
            "mixed4" => Ok(EigenTriple::mixed4()),
            other => {
                let parts: Vec<&str> = other.split(',').collect();
                if parts.len() != 3 {
                    bail!("target must be pure|mixed2|mixed3|mixed4 or three eigenvalues `l1,l2,l3`");
                }
                let mut l = [0.0f64; 3];
                for (slot, part) in l.iter_mut().zip(&parts) {
                    *slot = part.trim().parse().context("bad eigenvalue")?;
                }
                Ok(EigenTriple::new(l[0], l[1], l[2])?)
            }
        }
    }

    pub fn scan_config(&self) -> ScanConfig {
        ScanConfig {
            n_start: self.n_start,
            n_max: self.effective_n_max(),
            k_fail: self.k_fail,
            window_factors: self.window,
            grid_step: self.grid_step,
            refine_tol: self.refine_tol,
        }
    }

    pub fn two_qubit_config(&self) -> TwoQubitConfig {
        TwoQubitConfig {
            n_sender: *self.ns.first().unwrap_or(&4),
            opt: DiscrepancyOptions {
                restarts: self.restarts,
                seed: self.seed,
                epsilon_threshold: self.epsilon_threshold,
            },
            scan: self.scan_config(),
        }
    }
}
