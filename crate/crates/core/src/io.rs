//! Persistence: binary trajectories, CSV tables and run manifests.
//!
//! Binary trajectory layout, all little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 8     | magic `MFOUTRJ\0` |
//! | 4     | format version (u32) |
//! | 8     | n_points (u64) |
//! | 8     | dt (f64) |
//! | 8     | hurst (f64) |
//! | 8     | gamma_sq (f64) |
//! | 8     | seed (u64) |
//! | 8     | traj_index (u64) |
//! | 8·N   | values (f64) |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{MfouError, Result};
use crate::grid::{SampledPath, SimConfig};
use crate::stats::{HistogramSet, MomentTable};

pub const TRAJECTORY_MAGIC: [u8; 8] = *b"MFOUTRJ\0";
pub const TRAJECTORY_VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 6 * 8;

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(MfouError::Format(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryHeader {
    pub version: u32,
    pub n_points: u64,
    pub dt: f64,
    pub hurst: f64,
    pub gamma_sq: f64,
    pub seed: u64,
    pub traj_index: u64,
}

impl TrajectoryHeader {
    pub fn for_path(path: &SampledPath, traj_index: u64) -> Self {
        Self {
            version: TRAJECTORY_VERSION,
            n_points: path.len() as u64,
            dt: path.dt,
            hurst: path.meta.hurst,
            gamma_sq: path.meta.gamma_sq,
            seed: path.meta.seed,
            traj_index,
        }
    }

    /// True when both headers describe the same run (all but the index).
    pub fn same_run(&self, other: &Self) -> bool {
        self.n_points == other.n_points
            && self.dt == other.dt
            && self.hurst == other.hurst
            && self.gamma_sq == other.gamma_sq
            && self.seed == other.seed
    }
}

pub fn encode_trajectory(header: &TrajectoryHeader, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * values.len());
    out.extend_from_slice(&TRAJECTORY_MAGIC);
    out.extend_from_slice(&header.version.to_le_bytes());
    out.extend_from_slice(&header.n_points.to_le_bytes());
    out.extend_from_slice(&header.dt.to_le_bytes());
    out.extend_from_slice(&header.hurst.to_le_bytes());
    out.extend_from_slice(&header.gamma_sq.to_le_bytes());
    out.extend_from_slice(&header.seed.to_le_bytes());
    out.extend_from_slice(&header.traj_index.to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn take8(bytes: &[u8], at: usize) -> [u8; 8] {
    bytes[at..at + 8].try_into().expect("slice of length 8")
}

pub fn decode_trajectory(bytes: &[u8]) -> Result<(TrajectoryHeader, Vec<f64>)> {
    if bytes.len() < HEADER_LEN {
        return format_err("trajectory file shorter than its header");
    }
    if bytes[..8] != TRAJECTORY_MAGIC {
        return format_err("bad magic: not a trajectory file");
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != TRAJECTORY_VERSION {
        return format_err(format!("unsupported trajectory format version {version}"));
    }
    let header = TrajectoryHeader {
        version,
        n_points: u64::from_le_bytes(take8(bytes, 12)),
        dt: f64::from_le_bytes(take8(bytes, 20)),
        hurst: f64::from_le_bytes(take8(bytes, 28)),
        gamma_sq: f64::from_le_bytes(take8(bytes, 36)),
        seed: u64::from_le_bytes(take8(bytes, 44)),
        traj_index: u64::from_le_bytes(take8(bytes, 52)),
    };
    let body = &bytes[HEADER_LEN..];
    if body.len() as u64 != 8 * header.n_points {
        return format_err(format!(
            "trajectory body holds {} bytes, header announces {} samples",
            body.len(),
            header.n_points
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, values))
}

pub fn write_trajectory(file: &Path, path: &SampledPath, traj_index: u64) -> Result<()> {
    let header = TrajectoryHeader::for_path(path, traj_index);
    fs::write(file, encode_trajectory(&header, &path.values))?;
    Ok(())
}

pub fn read_trajectory(file: &Path) -> Result<(TrajectoryHeader, Vec<f64>)> {
    decode_trajectory(&fs::read(file)?)
        .map_err(|e| MfouError::Format(format!("{}: {e}", file.display())))
}

/// `index,time,value` rows.
pub fn trajectory_csv(path: &SampledPath) -> String {
    let mut s = String::from("index,time,value\n");
    for (i, v) in path.values.iter().enumerate() {
        let _ = writeln!(s, "{i},{},{v}", path.time(i));
    }
    s
}

pub fn moments_csv(table: &MomentTable) -> String {
    let mut s = String::from("tau,order,value,n_samples\n");
    for (i, tau) in table.scales.iter().enumerate() {
        for (order, values) in &table.s_n {
            let _ = writeln!(s, "{tau},{order},{},{}", values[i], table.n_samples_per_scale[i]);
        }
    }
    s
}

/// `None` when the table lacks orders 2 or 4.
pub fn flatness_csv(table: &MomentTable) -> Option<String> {
    let f = table.flatness.as_ref()?;
    let mut s = String::from("tau,F\n");
    for (tau, v) in table.scales.iter().zip(f) {
        let _ = writeln!(s, "{tau},{v}");
    }
    Some(s)
}

pub fn histograms_csv(set: &HistogramSet) -> String {
    let mut s = String::from("scale,bin_left,bin_right,count,density\n");
    for (j, h) in set.histograms.iter().enumerate() {
        let density = set.densities(j);
        for (i, &c) in h.counts.iter().enumerate() {
            let _ = writeln!(s, "{},{},{},{c},{}", h.scale, set.edges[i], set.edges[i + 1], density[i]);
        }
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Config echo, file hashes and summary statistics of a synthesis run.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config: SimConfig,
    /// (file name, sha256)
    pub files: Vec<(String, String)>,
    /// (key, value) lines, e.g. ensemble variance against theory
    pub summary: Vec<(String, f64)>,
}

impl Manifest {
    pub fn to_text(&self) -> String {
        let mut s = String::from("[config]\n");
        s.push_str(&self.config.to_key_values());
        s.push_str("[files]\n");
        for (name, hash) in &self.files {
            let _ = writeln!(s, "{name} {hash}");
        }
        s.push_str("[summary]\n");
        for (key, v) in &self.summary {
            let _ = writeln!(s, "{key} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut section = "";
        let mut config_text = String::new();
        let mut files = Vec::new();
        let mut summary = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = match line {
                    "[config]" => "config",
                    "[files]" => "files",
                    "[summary]" => "summary",
                    _ => return format_err(format!("unknown manifest section {line}")),
                };
                continue;
            }
            match section {
                "config" => {
                    config_text.push_str(line);
                    config_text.push('\n');
                }
                "files" => match line.split_once(' ') {
                    Some((name, hash)) => files.push((name.to_string(), hash.trim().to_string())),
                    None => return format_err(format!("bad manifest file line: {line}")),
                },
                "summary" => {
                    let parsed = line
                        .split_once('=')
                        .and_then(|(k, v)| v.trim().parse::<f64>().ok().map(|v| (k.trim().to_string(), v)));
                    match parsed {
                        Some(kv) => summary.push(kv),
                        None => return format_err(format!("bad manifest summary line: {line}")),
                    }
                }
                _ => return format_err("manifest content before the first section"),
            }
        }
        let config = SimConfig::parse_key_values(&config_text, SimConfig::desk(0.5, 0.0, 0))?;
        Ok(Manifest {
            config,
            files,
            summary,
        })
    }

    pub fn read(dir: &Path) -> Result<Manifest> {
        Manifest::parse(&fs::read_to_string(dir.join(MANIFEST_NAME))?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST_NAME), self.to_text())?;
        Ok(())
    }

    /// Names of listed files whose current hash differs (or that are
    /// missing) under `dir`.
    pub fn corrupted_files(&self, dir: &Path) -> Vec<String> {
        self.files
            .iter()
            .filter(|(name, hash)| match fs::read(dir.join(name)) {
                Ok(bytes) => &sha256_hex(&bytes) != hash,
                Err(_) => true,
            })
            .map(|(name, _)| name.clone())
            .collect()
    }
}
