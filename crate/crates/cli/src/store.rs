//! Append-only result log with idempotent resume.
//!
//! Every evaluated cell (one chain length of one sweep unit) becomes one
//! CSV line keyed by (mode, N_S, N_R, N, target). Records are flushed as
//! they are appended, so an interrupted sweep loses at most the cell in
//! flight; a resumed run skips every key that already carries the current
//! config hash.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};

pub const STORE_HEADER: &str =
    "mode,n_s,n_r,n,target,config_hash,t0,objective,feasible,timestamp";

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub mode: String,
    pub n_sender: usize,
    pub n_ext_receiver: usize,
    pub n_total: usize,
    /// target label; "-" for the one-qubit modes
    pub target: String,
    pub config_hash: String,
    pub t0: f64,
    /// w_1 for the one-qubit modes, ε for the two-qubit modes
    pub objective: f64,
    pub feasible: bool,
    pub timestamp: u64,
}

pub type Key = (String, usize, usize, usize, String);

impl Record {
    pub fn key(&self) -> Key {
        (
            self.mode.clone(),
            self.n_sender,
            self.n_ext_receiver,
            self.n_total,
            self.target.clone(),
        )
    }

    fn to_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.mode,
            self.n_sender,
            self.n_ext_receiver,
            self.n_total,
            self.target,
            self.config_hash,
            self.t0,
            self.objective,
            self.feasible,
            self.timestamp
        )
    }

    fn parse(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.split(',').collect();
        // the target field may itself contain commas (eigenvalue triples);
        // it spans everything between the fixed prefix and suffix columns
        if fields.len() < 10 {
            bail!("short record line: {line}");
        }
        let suffix = &fields[fields.len() - 5..];
        let target = fields[4..fields.len() - 5].join(",");
        Ok(Record {
            mode: fields[0].to_string(),
            n_sender: fields[1].parse()?,
            n_ext_receiver: fields[2].parse()?,
            n_total: fields[3].parse()?,
            target,
            config_hash: suffix[0].to_string(),
            t0: suffix[1].parse()?,
            objective: suffix[2].parse()?,
            feasible: suffix[3].parse()?,
            timestamp: suffix[4].parse()?,
        })
    }
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

#[derive(Debug)]
pub struct ResultStore {
    path: PathBuf,
    records: Vec<Record>,
    index: HashMap<Key, usize>,
    writer: BufWriter<File>,
}

impl ResultStore {
    /// Open (or create) a store file. With `resume` the existing records
    /// are loaded; otherwise the file must not already contain data.
    pub fn open(path: &Path, resume: bool) -> Result<Self> {
        let mut records = Vec::new();
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read store {}", path.display()))?;
            let mut lines = text.lines().filter(|l| !l.trim().is_empty());
            match lines.next() {
                None => {}
                Some(header) if header == STORE_HEADER => {
                    if !resume {
                        bail!(
                            "store {} already has records; pass --resume or use a fresh --out",
                            path.display()
                        );
                    }
                    for line in lines {
                        records.push(Record::parse(line)?);
                    }
                }
                Some(_) => bail!("{} is not a result store", path.display()),
            }
        }
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let fresh = records.is_empty();
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        let mut writer = BufWriter::new(file);
        if fresh && std::fs::metadata(path)?.len() == 0 {
            writeln!(writer, "{STORE_HEADER}")?;
            writer.flush()?;
        }
        let mut index = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            index.insert(r.key(), i);
        }
        Ok(Self { path: path.to_path_buf(), records, index, writer })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Record for a key, if present with the given config hash.
    pub fn get(&self, key: &Key, config_hash: &str) -> Option<&Record> {
        self.index
            .get(key)
            .map(|&i| &self.records[i])
            .filter(|r| r.config_hash == config_hash)
    }

    /// Append a record and flush it to disk immediately.
    pub fn append(&mut self, record: Record) -> Result<()> {
        writeln!(self.writer, "{}", record.to_line())?;
        self.writer.flush()?;
        self.index.insert(record.key(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize) -> Record {
        Record {
            mode: "hpst_table".into(),
            n_sender: 2,
            n_ext_receiver: 1,
            n_total: n,
            target: "-".into(),
            config_hash: "ff00".into(),
            t0: 4.25,
            objective: 0.93,
            feasible: true,
            timestamp: 12345,
        }
    }

    #[test]
    fn round_trip_and_resume() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.csv");
        {
            let mut store = ResultStore::open(&path, false).unwrap();
            store.append(sample(5)).unwrap();
            store.append(sample(6)).unwrap();
        }
        let store = ResultStore::open(&path, true).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.get(&sample(5).key(), "ff00"), Some(&sample(5)));
        assert!(store.get(&sample(5).key(), "other").is_none());
        assert!(store.get(&sample(9).key(), "ff00").is_none());
    }

    #[test]
    fn fresh_open_refuses_existing_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("store.csv");
        {
            let mut store = ResultStore::open(&path, false).unwrap();
            store.append(sample(5)).unwrap();
        }
        assert!(ResultStore::open(&path, false).is_err());
    }

    #[test]
    fn comma_targets_survive_parsing() {
        let mut r = sample(7);
        r.mode = "two_qubit_lattice".into();
        r.target = "0.5,0.25,0.25".into();
        let parsed = Record::parse(&r.to_line()).unwrap();
        assert_eq!(parsed, r);
    }
}
