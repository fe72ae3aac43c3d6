//! Binary archive of posterior draws.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `PTDRAWS\0` |
//! | 4 | format version (`u32`) |
//! | 8 | header length `h` (`u64`) |
//! | `h` | JSON header: prior, dimensions, athlete ids, per-chain draw counts |
//! | ... | per chain, `f64` values column by column: every draw of the first flattened parameter, then the second, ... |
//! | 32 | SHA-256 of everything before it |

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mcmc::{ChainDraws, PosteriorDraws};
use crate::model::{PriorConfig, StateDims};

pub const ARCHIVE_MAGIC: &[u8; 8] = b"PTDRAWS\0";
pub const ARCHIVE_VERSION: u32 = 1;

const PREAMBLE: usize = 8 + 4 + 8;
const DIGEST: usize = 32;

#[derive(Serialize, Deserialize)]
struct Header {
    prior: PriorConfig,
    season_length: f64,
    athlete_ids: Vec<String>,
    start_ages: Vec<f64>,
    dims: StateDims,
    with_latents: bool,
    parameters: usize,
    chains: Vec<ChainHeader>,
}

#[derive(Serialize, Deserialize)]
struct ChainHeader {
    index: usize,
    draws: usize,
    acceptance: Vec<(String, f64)>,
}

pub fn write_draws<W: Write>(mut writer: W, draws: &PosteriorDraws) -> Result<()> {
    let parameters = draws.dims.flat_len(draws.with_latents);
    for c in &draws.chains {
        if let Some(bad) = c.draws.iter().find(|d| d.len() != parameters) {
            return Err(Error::InvalidArgument(format!(
                "chain {} has a draw of length {} (expected {parameters})",
                c.index,
                bad.len()
            )));
        }
    }
    let header = Header {
        prior: draws.prior.clone(),
        season_length: draws.season_length,
        athlete_ids: draws.athlete_ids.clone(),
        start_ages: draws.start_ages.clone(),
        dims: draws.dims.clone(),
        with_latents: draws.with_latents,
        parameters,
        chains: draws
            .chains
            .iter()
            .map(|c| ChainHeader {
                index: c.index,
                draws: c.draws.len(),
                acceptance: c.acceptance.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let body: usize = draws.chains.iter().map(|c| c.draws.len() * parameters * 8).sum();
    let mut buf = Vec::with_capacity(PREAMBLE + json.len() + body + DIGEST);
    buf.extend_from_slice(ARCHIVE_MAGIC);
    buf.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    for c in &draws.chains {
        for j in 0..parameters {
            for d in &c.draws {
                buf.extend_from_slice(&d[j].to_le_bytes());
            }
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    writer.write_all(&buf)?;
    Ok(())
}

pub fn read_draws<R: Read>(mut reader: R) -> Result<PosteriorDraws> {
    let mut buf = Vec::new();
    reader.read_to_end(&mut buf)?;
    if buf.len() < 8 || &buf[..8] != ARCHIVE_MAGIC {
        return Err(Error::Integrity("not a draws archive".into()));
    }
    if buf.len() < PREAMBLE + DIGEST {
        return Err(Error::Integrity("archive truncated".into()));
    }
    let version = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes"));
    if version != ARCHIVE_VERSION {
        return Err(Error::Integrity(format!(
            "archive format version {version}; this build reads version {ARCHIVE_VERSION}"
        )));
    }
    let (content, digest) = buf.split_at(buf.len() - DIGEST);
    if Sha256::digest(content).as_slice() != digest {
        return Err(Error::Integrity("checksum mismatch (truncated or corrupted archive)".into()));
    }
    let header_len = u64::from_le_bytes(content[12..20].try_into().expect("8 bytes")) as usize;
    let body_start = PREAMBLE
        .checked_add(header_len)
        .filter(|&e| e <= content.len())
        .ok_or_else(|| Error::Integrity("header length exceeds archive".into()))?;
    let header: Header = serde_json::from_slice(&content[PREAMBLE..body_start])
        .map_err(|e| Error::Integrity(format!("unreadable header: {e}")))?;
    let p = header.parameters;
    if p != header.dims.flat_len(header.with_latents) {
        return Err(Error::Integrity("parameter count disagrees with dimensions".into()));
    }
    let expected: usize = header.chains.iter().map(|c| c.draws * p * 8).sum();
    let body = &content[body_start..];
    if body.len() != expected {
        return Err(Error::Integrity(format!("body has {} bytes, expected {expected}", body.len())));
    }
    let mut values = body
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")));
    let mut chains = Vec::with_capacity(header.chains.len());
    for ch in header.chains {
        let mut draws = vec![vec![0.0; p]; ch.draws];
        for j in 0..p {
            for d in draws.iter_mut() {
                d[j] = values.next().expect("length checked");
            }
        }
        chains.push(ChainDraws {
            index: ch.index,
            draws,
            acceptance: ch.acceptance,
        });
    }
    Ok(PosteriorDraws {
        prior: header.prior,
        season_length: header.season_length,
        athlete_ids: header.athlete_ids,
        start_ages: header.start_ages,
        dims: header.dims,
        with_latents: header.with_latents,
        chains,
    })
}

pub fn persist_draws(draws: &PosteriorDraws, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_draws(&mut w, draws)?;
    w.flush()?;
    Ok(())
}

pub fn restore_draws(path: &Path) -> Result<PosteriorDraws> {
    let file = std::fs::File::open(path)?;
    read_draws(std::io::BufReader::new(file))
}
