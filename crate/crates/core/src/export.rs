//! Operator and state snapshots: JSON with `[re, im]` pairs in row-major
//! order, and a raw little-endian binary format for state vectors.
//!
//! Binary layout: 8-byte magic `AKLTSV01`, then `u32` sites, `u32` site
//! dimension, `u32` encoding code, `u64` amplitude count, then one
//! `(f64 re, f64 im)` pair per amplitude.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{to_row_major, CMatrix, C64};
use crate::state::{SiteEncoding, StateVector};

pub const STATE_MAGIC: &[u8; 8] = b"AKLTSV01";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorJson {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl OperatorJson {
    pub fn new(name: impl Into<String>, m: &CMatrix) -> Self {
        OperatorJson {
            name: name.into(),
            rows: m.nrows(),
            cols: m.ncols(),
            data: to_row_major(m).iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                actual: self.data.len(),
            });
        }
        let values: Vec<C64> = self.data.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        Ok(CMatrix::from_row_slice(self.rows, self.cols, &values))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub sites: usize,
    pub site_dim: usize,
    pub encoding: SiteEncoding,
    pub tag: String,
    pub amplitudes: Vec<[f64; 2]>,
}

impl StateJson {
    pub fn new(state: &StateVector) -> Self {
        StateJson {
            sites: state.sites(),
            site_dim: state.encoding().site_dim(),
            encoding: state.encoding(),
            tag: state.encoding().tag().to_string(),
            amplitudes: state.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn to_state(&self) -> Result<StateVector> {
        if self.site_dim != self.encoding.site_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.encoding.site_dim(),
                actual: self.site_dim,
            });
        }
        let amps = self.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect();
        StateVector::from_amplitudes(self.sites, self.encoding, amps)
    }
}

pub fn write_state_binary<W: Write>(state: &StateVector, out: &mut W) -> std::io::Result<()> {
    out.write_all(STATE_MAGIC)?;
    out.write_all(&(state.sites() as u32).to_le_bytes())?;
    out.write_all(&(state.encoding().site_dim() as u32).to_le_bytes())?;
    out.write_all(&state.encoding().code().to_le_bytes())?;
    out.write_all(&(state.dim() as u64).to_le_bytes())?;
    for z in state.amplitudes() {
        out.write_all(&z.re.to_le_bytes())?;
        out.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_array<const N: usize, R: Read>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::InvalidConfig(format!("truncated state snapshot: {e}")))?;
    Ok(buf)
}

/// Reads a snapshot written by [`write_state_binary`]. Amplitudes are
/// renormalized on load.
pub fn read_state_binary<R: Read>(input: &mut R) -> Result<StateVector> {
    if &read_array::<8, _>(input)? != STATE_MAGIC {
        return Err(Error::InvalidConfig("not a state snapshot".into()));
    }
    let sites = u32::from_le_bytes(read_array(input)?) as usize;
    let site_dim = u32::from_le_bytes(read_array(input)?) as usize;
    let code = u32::from_le_bytes(read_array(input)?);
    let count = u64::from_le_bytes(read_array(input)?) as usize;
    let encoding = SiteEncoding::from_code(code)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown encoding code {code}")))?;
    if site_dim != encoding.site_dim() {
        return Err(Error::DimensionMismatch {
            expected: encoding.site_dim(),
            actual: site_dim,
        });
    }
    let expected = site_dim
        .checked_pow(sites as u32)
        .ok_or_else(|| Error::InvalidConfig("snapshot dimension overflows".into()))?;
    if count != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: count,
        });
    }
    let mut amps = Vec::with_capacity(count);
    for _ in 0..count {
        let re = f64::from_le_bytes(read_array(input)?);
        let im = f64::from_le_bytes(read_array(input)?);
        amps.push(C64::new(re, im));
    }
    StateVector::from_amplitudes(sites, encoding, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubit::qubit_aklt_state;
    use crate::spin::{aklt_state, bond_projector, BondMode};

    #[test]
    fn operator_json_round_trip_is_row_major() {
        let p = bond_projector(BondMode::Spin1).matrix;
        let json = OperatorJson::new("P", &p);
        assert_eq!(json.data.len(), 81);
        assert_eq!(json.data[1], [p[(0, 1)].re, p[(0, 1)].im]);
        let text = serde_json::to_string(&json).unwrap();
        let back: OperatorJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_matrix().unwrap(), p);
    }

    #[test]
    fn state_json_round_trip() {
        let s = aklt_state(4).unwrap().state;
        let text = serde_json::to_string(&StateJson::new(&s)).unwrap();
        let back: StateJson = serde_json::from_str(&text).unwrap();
        let t = back.to_state().unwrap();
        for (a, b) in s.amplitudes().iter().zip(t.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn binary_round_trip_and_header() {
        let s = qubit_aklt_state(3).unwrap().state;
        let mut buf = Vec::new();
        write_state_binary(&s, &mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 + 4 + 4 + 8 + 64 * 16);
        assert_eq!(&buf[..8], STATE_MAGIC);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 4);
        let t = read_state_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(t.encoding(), SiteEncoding::QubitPair);
        for (a, b) in s.amplitudes().iter().zip(t.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn binary_rejects_corruption() {
        let s = aklt_state(3).unwrap().state;
        let mut buf = Vec::new();
        write_state_binary(&s, &mut buf).unwrap();
        assert!(read_state_binary(&mut &buf[..buf.len() - 3]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_state_binary(&mut bad.as_slice()).is_err());
        let mut bad = buf;
        bad[12] = 4;
        assert!(read_state_binary(&mut bad.as_slice()).is_err());
    }
}
