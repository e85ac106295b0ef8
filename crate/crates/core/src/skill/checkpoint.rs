//! On-disk skill checkpoints. Each tabular skill is stored as two binary
//! little-endian files (`<key>.policy` with signature, hyperparameters and
//! Q-table; `<key>.replay` with the replay store) and listed in a
//! `manifest.toml`.

use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::SpaceSignature;
use crate::env::NUM_PRIMITIVES;

use super::{LearnerParams, ReplayStore, StateKey, TabularPolicy, Transition};

pub const POLICY_MAGIC: &[u8; 4] = b"PSKQ";
pub const REPLAY_MAGIC: &[u8; 4] = b"PSKR";
pub const FORMAT_VERSION: u16 = 1;
pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: not a checkpoint file (bad magic)")]
    BadMagic { path: PathBuf },
    #[error("{path}: unsupported format version {found}")]
    Version { path: PathBuf, found: u16 },
    #[error("{path}: corrupt checkpoint: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("no checkpoint for skill `{0}`")]
    MissingSkill(String),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CheckpointError + '_ {
    move |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_str(w: &mut impl Write, s: &str) -> io::Result<()> {
    w.write_u32::<LE>(s.len() as u32)?;
    w.write_all(s.as_bytes())
}

fn read_str(r: &mut impl Read) -> io::Result<String> {
    let n = r.read_u32::<LE>()? as usize;
    if n > 1 << 20 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "string too long",
        ));
    }
    let mut buf = vec![0; n];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn write_key(w: &mut impl Write, k: &StateKey) -> io::Result<()> {
    w.write_u16::<LE>(k.len() as u16)?;
    for v in k {
        w.write_i16::<LE>(*v)?;
    }
    Ok(())
}

fn read_key(r: &mut impl Read) -> io::Result<StateKey> {
    let n = r.read_u16::<LE>()? as usize;
    (0..n).map(|_| r.read_i16::<LE>()).collect()
}

fn write_header(w: &mut impl Write, magic: &[u8; 4]) -> io::Result<()> {
    w.write_all(magic)?;
    w.write_u16::<LE>(FORMAT_VERSION)
}

fn read_header(r: &mut impl Read, magic: &[u8; 4], path: &Path) -> Result<(), CheckpointError> {
    let mut m = [0u8; 4];
    r.read_exact(&mut m).map_err(io_err(path))?;
    if &m != magic {
        return Err(CheckpointError::BadMagic { path: path.into() });
    }
    let v = r.read_u16::<LE>().map_err(io_err(path))?;
    if v != FORMAT_VERSION {
        return Err(CheckpointError::Version {
            path: path.into(),
            found: v,
        });
    }
    Ok(())
}

pub fn write_policy(w: &mut impl Write, p: &TabularPolicy) -> io::Result<()> {
    write_header(w, POLICY_MAGIC)?;
    write_str(w, &p.signature.operator)?;
    w.write_u32::<LE>(p.signature.slots.len() as u32)?;
    for (t, d) in &p.signature.slots {
        write_str(w, t)?;
        w.write_u32::<LE>(*d as u32)?;
    }
    let h = &p.params;
    for f in [
        h.gamma,
        h.alpha,
        h.epsilon_start,
        h.epsilon_end,
        h.lambda_eff,
        h.bin,
    ] {
        w.write_f64::<LE>(f)?;
    }
    for n in [
        h.epsilon_anneal_episodes,
        h.horizon as u64,
        h.replay_capacity as u64,
        h.minibatch as u64,
        h.k_episodes as u64,
    ] {
        w.write_u64::<LE>(n)?;
    }
    w.write_u64::<LE>(p.episodes)?;
    w.write_u32::<LE>(NUM_PRIMITIVES as u32)?;
    w.write_u64::<LE>(p.q.len() as u64)?;
    for (k, row) in &p.q {
        write_key(w, k)?;
        for v in row {
            w.write_f64::<LE>(*v)?;
        }
    }
    Ok(())
}

/// Reads a policy; the replay store comes back empty with the stored
/// capacity.
pub fn read_policy(r: &mut impl Read, path: &Path) -> Result<TabularPolicy, CheckpointError> {
    read_header(r, POLICY_MAGIC, path)?;
    let corrupt = |reason: &str| CheckpointError::Corrupt {
        path: path.into(),
        reason: reason.into(),
    };
    let mut body = || -> io::Result<TabularPolicy> {
        let operator = read_str(r)?;
        let n = r.read_u32::<LE>()? as usize;
        if n > 64 {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "too many slots"));
        }
        let mut slots = Vec::with_capacity(n);
        for _ in 0..n {
            let t = read_str(r)?;
            slots.push((t, r.read_u32::<LE>()? as usize));
        }
        let mut f = [0.0; 6];
        for v in &mut f {
            *v = r.read_f64::<LE>()?;
        }
        let mut u = [0u64; 5];
        for v in &mut u {
            *v = r.read_u64::<LE>()?;
        }
        let params = LearnerParams {
            gamma: f[0],
            alpha: f[1],
            epsilon_start: f[2],
            epsilon_end: f[3],
            lambda_eff: f[4],
            bin: f[5],
            epsilon_anneal_episodes: u[0],
            horizon: u[1] as usize,
            replay_capacity: u[2] as usize,
            minibatch: u[3] as usize,
            k_episodes: u[4] as usize,
        };
        let episodes = r.read_u64::<LE>()?;
        let actions = r.read_u32::<LE>()? as usize;
        if actions != NUM_PRIMITIVES {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "action count mismatch",
            ));
        }
        let rows = r.read_u64::<LE>()?;
        let mut p = TabularPolicy::new(SpaceSignature { operator, slots }, params);
        p.episodes = episodes;
        for _ in 0..rows {
            let k = read_key(r)?;
            let mut row = [0.0; NUM_PRIMITIVES];
            for v in &mut row {
                *v = r.read_f64::<LE>()?;
            }
            p.q.insert(k, row);
        }
        Ok(p)
    };
    let p = body().map_err(|e| corrupt(&e.to_string()))?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(io_err(path))? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    Ok(p)
}

pub fn write_replay(w: &mut impl Write, store: &ReplayStore) -> io::Result<()> {
    write_header(w, REPLAY_MAGIC)?;
    w.write_u64::<LE>(store.capacity() as u64)?;
    w.write_u64::<LE>(store.len() as u64)?;
    for t in store.iter() {
        write_key(w, &t.state)?;
        w.write_u8(t.action)?;
        w.write_f64::<LE>(t.reward)?;
        write_key(w, &t.next)?;
        w.write_u8(t.done as u8)?;
    }
    Ok(())
}

pub fn read_replay(r: &mut impl Read, path: &Path) -> Result<ReplayStore, CheckpointError> {
    read_header(r, REPLAY_MAGIC, path)?;
    let mut body = || -> io::Result<ReplayStore> {
        let capacity = r.read_u64::<LE>()? as usize;
        let n = r.read_u64::<LE>()?;
        if n as usize > capacity {
            return Err(io::Error::new(
                io::ErrorKind::InvalidData,
                "more transitions than capacity",
            ));
        }
        let mut store = ReplayStore::new(capacity);
        for _ in 0..n {
            let state = read_key(r)?;
            let action = r.read_u8()?;
            let reward = r.read_f64::<LE>()?;
            let next = read_key(r)?;
            let done = r.read_u8()? != 0;
            store.push(Transition {
                state,
                action,
                reward,
                next,
                done,
            });
        }
        Ok(store)
    };
    body().map_err(|e| CheckpointError::Corrupt {
        path: path.into(),
        reason: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub key: String,
    pub operator: String,
    pub dims: Vec<usize>,
    pub policy: String,
    pub replay: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u16,
    pub domain: String,
    #[serde(default)]
    pub skill: Vec<ManifestEntry>,
}

/// File-name-safe version of a skill key: `(pick peg1)` -> `pick_peg1`.
pub fn file_stem(key: &str) -> String {
    key.trim_matches(|c| c == '(' || c == ')')
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Writes every policy and its replay store into `dir` plus the manifest.
pub fn save<'a>(
    dir: &Path,
    domain: &str,
    policies: impl IntoIterator<Item = (&'a String, &'a TabularPolicy)>,
) -> Result<Manifest, CheckpointError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut manifest = Manifest {
        format_version: FORMAT_VERSION,
        domain: domain.to_string(),
        skill: Vec::new(),
    };
    for (key, p) in policies {
        let stem = file_stem(key);
        let policy = format!("{stem}.policy");
        let replay = format!("{stem}.replay");
        let path = dir.join(&policy);
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        write_policy(&mut w, p)
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
        let path = dir.join(&replay);
        let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
        write_replay(&mut w, &p.replay)
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
        manifest.skill.push(ManifestEntry {
            key: key.clone(),
            operator: p.signature.operator.clone(),
            dims: p.signature.slots.iter().map(|(_, d)| *d).collect(),
            policy,
            replay,
        });
    }
    let path = dir.join(MANIFEST);
    let text = toml::to_string(&manifest).map_err(|e| CheckpointError::Manifest {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest, CheckpointError> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: Manifest = toml::from_str(&text).map_err(|e| CheckpointError::Manifest {
        path: path.clone(),
        reason: e.to_string(),
    })?;
    if m.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Version {
            path,
            found: m.format_version,
        });
    }
    Ok(m)
}

/// Loads every skill listed in the manifest, replay stores included.
pub fn load(dir: &Path) -> Result<(Manifest, Vec<(String, TabularPolicy)>), CheckpointError> {
    let m = read_manifest(dir)?;
    let mut out = Vec::new();
    for e in &m.skill {
        let path = dir.join(&e.policy);
        let mut r = BufReader::new(File::open(&path).map_err(io_err(&path))?);
        let mut p = read_policy(&mut r, &path)?;
        let path = dir.join(&e.replay);
        let mut r = BufReader::new(File::open(&path).map_err(io_err(&path))?);
        p.replay = read_replay(&mut r, &path)?;
        out.push((e.key.clone(), p));
    }
    Ok((m, out))
}
