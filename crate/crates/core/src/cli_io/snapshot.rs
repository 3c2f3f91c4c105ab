//! Binary snapshots: one line of JSON header followed by the raw arrays
//! phi, pi, A, E as little-endian f64, site-major.
//!
//! `pi` holds the reduced momentum (c/K)Π_{Φ+}.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::algebra::{FourVector, Spinor8};
use crate::error::{DiracError, Result};
use crate::lattice::{FieldState, GridSpec, ModeTag, PhysicalParams};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub n_sites: usize,
    pub dx: f64,
    pub dt: f64,
    pub t: f64,
    pub kappa: f64,
    pub e: f64,
    #[serde(rename = "mode-tag")]
    pub mode_tag: ModeTag,
    #[serde(rename = "z-index")]
    pub z_index: usize,
    #[serde(rename = "format-version")]
    pub format_version: u32,
}

impl SnapshotHeader {
    pub fn new(state: &FieldState, grid: &GridSpec, params: &PhysicalParams, z_index: usize) -> Self {
        SnapshotHeader {
            n_sites: state.n_sites(),
            dx: grid.dx,
            dt: grid.dt,
            t: state.t,
            kappa: params.kappa(),
            e: params.e(),
            mode_tag: state.mode,
            z_index,
            format_version: SNAPSHOT_FORMAT_VERSION,
        }
    }
}

pub fn encode_snapshot<W: Write>(mut w: W, header: &SnapshotHeader, state: &FieldState) -> Result<()> {
    let json = serde_json::to_string(header).map_err(|e| DiracError::Snapshot(e.to_string()))?;
    w.write_all(json.as_bytes())?;
    w.write_all(b"\n")?;
    for s in state.phi.iter().chain(&state.pi) {
        for x in s.0 {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    for v in state.a.iter().chain(&state.e) {
        for x in v.0 {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| DiracError::Snapshot(format!("truncated array data: {e}")))?;
    Ok(f64::from_le_bytes(buf))
}

pub fn decode_snapshot<R: BufRead>(mut r: R) -> Result<(SnapshotHeader, FieldState)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: SnapshotHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| DiracError::Snapshot(format!("bad header: {e}")))?;
    if header.format_version != SNAPSHOT_FORMAT_VERSION {
        return Err(DiracError::Snapshot(format!(
            "unsupported format-version {}",
            header.format_version
        )));
    }
    let n = header.n_sites;
    let spinors = |r: &mut R| -> Result<Vec<Spinor8>> {
        (0..n)
            .map(|_| {
                let mut s = Spinor8::ZERO;
                for c in 0..8 {
                    s.0[c] = read_f64(r)?;
                }
                Ok(s)
            })
            .collect()
    };
    let phi = spinors(&mut r)?;
    let pi = spinors(&mut r)?;
    let vectors = |r: &mut R| -> Result<Vec<FourVector>> {
        (0..n)
            .map(|_| {
                let mut v = FourVector::ZERO;
                for c in 0..4 {
                    v.0[c] = read_f64(r)?;
                }
                Ok(v)
            })
            .collect()
    };
    let a = vectors(&mut r)?;
    let e = vectors(&mut r)?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(DiracError::Snapshot(format!("{} trailing bytes", rest.len())));
    }
    let state = FieldState {
        t: header.t,
        phi,
        pi,
        a,
        e,
        mode: header.mode_tag,
    };
    Ok((header, state))
}

pub fn write_snapshot(
    path: &Path,
    state: &FieldState,
    grid: &GridSpec,
    params: &PhysicalParams,
    z_index: usize,
) -> Result<()> {
    let header = SnapshotHeader::new(state, grid, params, z_index);
    encode_snapshot(BufWriter::new(File::create(path)?), &header, state)
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, FieldState)> {
    let file = File::open(path)
        .map_err(|e| DiracError::Snapshot(format!("cannot open {}: {e}", path.display())))?;
    decode_snapshot(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state_from(values: &[f64], n: usize, t: f64) -> FieldState {
        let mut it = values.iter().cycle().copied();
        let mut s = FieldState::zeros(n, ModeTag::CoupledNonlinear);
        s.t = t;
        for p in s.phi.iter_mut().chain(s.pi.iter_mut()) {
            p.0 = std::array::from_fn(|_| it.next().unwrap());
        }
        for v in s.a.iter_mut().chain(s.e.iter_mut()) {
            v.0 = std::array::from_fn(|_| it.next().unwrap());
        }
        s
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(
            values in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..64),
            n in 8usize..20,
            t in -1e3f64..1e3,
        ) {
            let state = state_from(&values, n, t);
            let grid = GridSpec { n_sites: n, dx: 0.1, dt: 0.01 };
            let params = PhysicalParams::new(1.3, -0.2).unwrap();
            let header = SnapshotHeader::new(&state, &grid, &params, 2);
            let mut buf = Vec::new();
            encode_snapshot(&mut buf, &header, &state).unwrap();
            let (h2, s2) = decode_snapshot(buf.as_slice()).unwrap();
            prop_assert_eq!(h2, header);
            prop_assert_eq!(s2.phi.iter().map(|s| s.0.map(f64::to_bits)).collect::<Vec<_>>(),
                            state.phi.iter().map(|s| s.0.map(f64::to_bits)).collect::<Vec<_>>());
            prop_assert_eq!(s2, state);
        }
    }

    #[test]
    fn header_uses_expected_keys() {
        let state = FieldState::zeros(8, ModeTag::CoupledLinearII);
        let grid = GridSpec { n_sites: 8, dx: 0.1, dt: 0.01 };
        let params = PhysicalParams::new(1.0, 0.0).unwrap();
        let json = serde_json::to_string(&SnapshotHeader::new(&state, &grid, &params, 1)).unwrap();
        for key in ["n_sites", "dx", "dt", "\"t\"", "kappa", "\"e\"", "mode-tag", "z-index", "format-version"] {
            assert!(json.contains(key), "{json}");
        }
        assert!(json.contains("\"coupled-linear-II\""));
    }

    #[test]
    fn truncated_data_is_rejected() {
        let state = FieldState::zeros(8, ModeTag::Free);
        let grid = GridSpec { n_sites: 8, dx: 0.1, dt: 0.01 };
        let params = PhysicalParams::new(1.0, 0.0).unwrap();
        let mut buf = Vec::new();
        encode_snapshot(&mut buf, &SnapshotHeader::new(&state, &grid, &params, 0), &state).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(decode_snapshot(buf.as_slice()), Err(DiracError::Snapshot(_))));
    }
}
