//! CSV dumps, binary checkpoints and run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::lattice_gauge::{CurvatureSample, GaugeField};

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Builds a CSV document in memory from a header and rows of floats.
pub fn csv_bytes<I, R>(header: &[String], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = f64>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.into_iter().map(|v| v.to_string()))?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn write_csv<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = f64>,
{
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_atomic(path, &csv_bytes(&header, rows)?)
}

/// `(p, x_p, re/im of 2N components, |Ψ|²)` per site.
pub fn state_csv(spec: &LatticeSpec, dim: usize, amps: &[Complex64]) -> Result<Vec<u8>> {
    let w = 2 * dim;
    if amps.len() != spec.n_sites() * w {
        return Err(Error::DimensionMismatch {
            expected: spec.n_sites() * w,
            got: amps.len(),
        });
    }
    let mut header = vec!["p".to_string(), "x_p".to_string()];
    for block in ["minus", "plus"] {
        for a in 0..dim {
            header.push(format!("re_{block}_{a}"));
            header.push(format!("im_{block}_{a}"));
        }
    }
    header.push("density".into());
    let rows = spec.sites().zip(amps.chunks_exact(w)).map(|(p, site)| {
        let mut row = vec![p as f64, spec.x(p)];
        for z in site {
            row.push(z.re);
            row.push(z.im);
        }
        row.push(site.iter().map(|z| z.norm_sqr()).sum());
        row
    });
    csv_bytes(&header, rows)
}

fn matrix_header(prefix: &str, dim: usize, header: &mut Vec<String>) {
    for r in 0..dim {
        for c in 0..dim {
            header.push(format!("re_{prefix}{r}{c}"));
            header.push(format!("im_{prefix}{r}{c}"));
        }
    }
}

/// `(j, p, re/im of the N² entries of P then Q)` for slices `0..=j_max`.
pub fn gauge_field_csv(field: &GaugeField) -> Result<Vec<u8>> {
    let spec = field.spec();
    let n = field.dim();
    let mut header = vec!["j".to_string(), "p".to_string()];
    matrix_header("P", n, &mut header);
    matrix_header("Q", n, &mut header);
    let mut rows = Vec::new();
    for j in 0..=spec.j_max() {
        for p in spec.sites() {
            let (pm, qm) = field.links(j, p)?;
            let mut row = vec![j as f64, p as f64];
            for m in [&pm, &qm] {
                for r in 0..n {
                    for c in 0..n {
                        row.push(m[(r, c)].re);
                        row.push(m[(r, c)].im);
                    }
                }
            }
            rows.push(row);
        }
    }
    csv_bytes(&header, rows)
}

/// `(j, p, re/im of the N² entries of ℱ)`.
pub fn curvature_csv(samples: &[CurvatureSample]) -> Result<Vec<u8>> {
    let n = samples.first().map(|s| s.value.nrows()).unwrap_or(0);
    let mut header = vec!["j".to_string(), "p".to_string()];
    matrix_header("F", n, &mut header);
    let rows = samples.iter().map(|s| {
        let mut row = vec![s.j as f64, s.p as f64];
        for r in 0..n {
            for c in 0..n {
                row.push(s.value[(r, c)].re);
                row.push(s.value[(r, c)].im);
            }
        }
        row
    });
    csv_bytes(&header, rows)
}

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"GWCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Walk,
    Dirac,
}

/// A state slice in the shared binary format: magic, version, origin flag,
/// `N`, `p_max`, `j`, `ε`, then `(re, im)` little-endian `f64` pairs in
/// site-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub origin: Origin,
    pub dim: usize,
    pub p_max: usize,
    pub j: u64,
    pub epsilon: f64,
    pub amps: Vec<Complex64>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let expected = (2 * self.p_max + 1) * 2 * self.dim;
        if self.amps.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.amps.len(),
            });
        }
        let mut out = Vec::with_capacity(40 + 16 * self.amps.len());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(match self.origin {
            Origin::Walk => 0,
            Origin::Dirac => 1,
        });
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.p_max as u64).to_le_bytes());
        out.extend_from_slice(&self.j.to_le_bytes());
        out.extend_from_slice(&self.epsilon.to_le_bytes());
        for z in &self.amps {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::InvalidArgument(format!("checkpoint: {msg}"));
        const HEADER: usize = 4 + 4 + 1 + 4 + 8 + 8 + 8;
        if bytes.len() < HEADER {
            return Err(bad("truncated header"));
        }
        if bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u32_at(4) != CHECKPOINT_VERSION {
            return Err(bad("unsupported version"));
        }
        let origin = match bytes[8] {
            0 => Origin::Walk,
            1 => Origin::Dirac,
            _ => return Err(bad("unknown origin flag")),
        };
        let dim = u32_at(9) as usize;
        let p_max = u64_at(13) as usize;
        let j = u64_at(21);
        let epsilon = f64_at(29);
        let count = (2 * p_max + 1) * 2 * dim;
        if bytes.len() != HEADER + 16 * count {
            return Err(bad("payload length does not match header"));
        }
        let amps = (0..count)
            .map(|i| {
                let o = HEADER + 16 * i;
                Complex64::new(f64_at(o), f64_at(o + 8))
            })
            .collect();
        Ok(Self {
            origin,
            dim,
            p_max,
            j,
            epsilon,
            amps,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Config echo plus checksums of every artifact a run wrote.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    pub threads: usize,
    pub config: serde_json::Value,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects artifacts written under one output directory.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    artifacts: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self { dir, artifacts: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn artifacts(&self) -> &[Artifact] {
        &self.artifacts
    }

    /// Writes `manifest.json` and returns the manifest.
    pub fn finish(self, experiment: &str, threads: usize, config: serde_json::Value) -> Result<Manifest> {
        let manifest = Manifest {
            tool: "gaugewalk".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            experiment: experiment.into(),
            threads,
            config,
            artifacts: self.artifacts,
        };
        let bytes = serde_json::to_vec_pretty(&manifest)?;
        write_atomic(&self.dir.join("manifest.json"), &bytes)?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let amps: Vec<Complex64> = (0..20).map(|i| c((i as f64).sin() * 1e-300, -(i as f64) / 3.0)).collect();
        let ck = Checkpoint {
            origin: Origin::Dirac,
            dim: 2,
            p_max: 2,
            j: 17,
            epsilon: 0.1,
            amps,
        };
        let bytes = ck.to_bytes().unwrap();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_bytes().unwrap(), bytes);
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut corrupt = bytes.clone();
        corrupt[0] = b'X';
        assert!(Checkpoint::from_bytes(&corrupt).is_err());
        let short = Checkpoint { amps: vec![], ..ck };
        assert!(short.to_bytes().is_err());
    }

    #[test]
    fn state_csv_layout() {
        let spec = LatticeSpec::new(0.5, 2, 2).unwrap();
        let mut amps = vec![c(0.0, 0.0); 10];
        amps[4] = c(0.6, 0.8);
        let text = String::from_utf8(state_csv(&spec, 1, &amps).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "p,x_p,re_minus_0,im_minus_0,re_plus_0,im_plus_0,density");
        assert_eq!(lines.len(), 6);
        assert!(lines[3].starts_with("0,0,0.6,0.8,0,0,1"));
    }

    #[test]
    fn artifacts_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path().join("run")).unwrap();
        w.write("a.csv", b"x\n1\n").unwrap();
        w.write("a.csv", b"x\n2\n").unwrap();
        let m = w.finish("evolve", 1, serde_json::json!({"epsilon": 0.1})).unwrap();
        assert_eq!(m.artifacts.len(), 1);
        assert_eq!(m.artifacts[0].sha256, sha256_hex(b"x\n2\n"));
        let text = fs::read_to_string(dir.path().join("run/manifest.json")).unwrap();
        let back: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(fs::read(dir.path().join("run/a.csv")).unwrap(), b"x\n2\n");
    }
}
