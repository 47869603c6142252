//! Artifact plumbing: output directories, run summaries and the on-disk
//! pose dataset layout.
//!
//! A dataset directory holds `inputs/NNNNN.csv` (one stacked network input
//! per figure index) and optionally `figures/NNNNN.pgm` (its annotation).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use csimon_core::features::{NetInput, INPUT_CHANNELS, MAP_FRAMES};
use csimon_core::net::Tensor3;
use csimon_core::SUBCARRIERS;
use serde::Serialize;

pub const INPUTS_DIR: &str = "inputs";
pub const FIGURES_DIR: &str = "figures";
pub const INPUT_HEADER: &str = "sc,frame,amp_rx1,phase_rx1,amp_rx2,phase_rx2";

pub fn require_file(path: &Path) -> Result<()> {
    ensure!(path.is_file(), "input file not found: {}", path.display());
    Ok(())
}

pub fn require_dir(path: &Path) -> Result<()> {
    ensure!(path.is_dir(), "input directory not found: {}", path.display());
    Ok(())
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// `run.toml`: what ran, with which seed, and every artifact it wrote
/// (paths relative to the output directory).
#[derive(Debug, Default, Serialize)]
pub struct RunSummary {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub artifacts: Vec<String>,
    pub results: BTreeMap<String, toml::Value>,
}

impl RunSummary {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Self {
            command: command.into(),
            seed,
            ..Self::default()
        }
    }

    pub fn artifact(&mut self, name: impl Into<String>) {
        self.artifacts.push(name.into());
    }

    pub fn result(&mut self, key: &str, value: impl Into<toml::Value>) {
        self.results.insert(key.into(), value.into());
    }

    pub fn write(mut self, out_dir: &Path) -> Result<()> {
        self.artifacts.sort();
        let text = toml::to_string(&self).context("serializing run summary")?;
        write(&out_dir.join("run.toml"), text)
    }
}

pub fn index_name(index: usize, ext: &str) -> String {
    format!("{index:05}.{ext}")
}

/// Files in `dir` with extension `ext`, sorted by name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    require_dir(dir)?;
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn format_input(input: &NetInput) -> String {
    let t = input.tensor();
    let mut out = String::with_capacity(SUBCARRIERS * MAP_FRAMES * 100);
    out.push_str(INPUT_HEADER);
    out.push('\n');
    for sc in 0..SUBCARRIERS {
        for frame in 0..MAP_FRAMES {
            let _ = write!(out, "{sc},{frame}");
            for v in t.pixel(sc, frame) {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn read_input(path: &Path) -> Result<NetInput> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    ensure!(
        lines.next() == Some(INPUT_HEADER),
        "{}: expected header `{INPUT_HEADER}`",
        path.display()
    );
    let mut data = vec![f64::NAN; SUBCARRIERS * MAP_FRAMES * INPUT_CHANNELS];
    let mut seen = vec![false; SUBCARRIERS * MAP_FRAMES];
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || format!("{} line {}: `{line}`", path.display(), n + 2);
        ensure!(fields.len() == 2 + INPUT_CHANNELS, "{}", bad());
        let sc: usize = fields[0].parse().with_context(bad)?;
        let frame: usize = fields[1].parse().with_context(bad)?;
        ensure!(sc < SUBCARRIERS && frame < MAP_FRAMES, "{}: cell out of range", bad());
        let cell = sc * MAP_FRAMES + frame;
        ensure!(!seen[cell], "{}: duplicate cell", bad());
        seen[cell] = true;
        for (c, field) in fields[2..].iter().enumerate() {
            data[cell * INPUT_CHANNELS + c] = field.parse().with_context(bad)?;
        }
    }
    if seen.iter().any(|s| !s) {
        bail!("{}: missing map cells", path.display());
    }
    let tensor = Tensor3::from_vec(SUBCARRIERS, MAP_FRAMES, INPUT_CHANNELS, data)?;
    NetInput::from_tensor(tensor).with_context(|| format!("{}", path.display()))
}

/// Column index of `name` in a CSV header line.
pub fn column(header: &str, name: &str, path: &Path) -> Result<usize> {
    header
        .split(',')
        .position(|c| c == name)
        .with_context(|| format!("{}: no `{name}` column", path.display()))
}

/// Reads one numeric column of a CSV file with a header row.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().with_context(|| format!("{}: empty file", path.display()))?;
    let col = column(header, name, path)?;
    lines
        .enumerate()
        .map(|(n, line)| {
            line.split(',')
                .nth(col)
                .and_then(|v| v.parse().ok())
                .with_context(|| format!("{} line {}: bad `{name}` value", path.display(), n + 2))
        })
        .collect()
}
