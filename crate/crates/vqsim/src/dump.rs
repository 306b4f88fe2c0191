//! Binary state dumps.
//!
//! ```text
//! offset  size  field
//! 0       4     magic "VQCS"
//! 4       4     version (u32, little endian), currently 1
//! 8       4     n, the number of qubits (u32, little endian)
//! 12      1     precision of the dumped state: 4 = f32, 8 = f64
//! 13      ...   amplitudes as (re, im) pairs of little-endian f64
//! ```
//!
//! Amplitudes follow the flat basis order of the state, so qubit 1 is the
//! least significant bit of the index. A pure state has `2^n` amplitudes; a
//! density matrix has `4^n` entries in its vectorized order (`row + 2^n col`).
//! Values are always stored as `f64`; the precision byte records what the
//! writer held and readers convert to the precision they ask for.

use std::io::{Read, Write};

use vqsim_core::{Complex, MixedState, Precision, PureState, Real};

use crate::{Error, Result};

pub const MAGIC: [u8; 4] = *b"VQCS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 13;

/// Header fields of a dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub num_qubits: u32,
    pub precision: Precision,
}

/// A state read back from a dump.
#[derive(Debug, Clone, PartialEq)]
pub enum DumpedState<T: Real = f64> {
    Pure(PureState<T>),
    Mixed(MixedState<T>),
}

fn write_dump<T: Real, W: Write>(w: &mut W, num_qubits: usize, data: &[Complex<T>]) -> Result<()> {
    let n = u32::try_from(num_qubits).map_err(|_| Error::Format("qubit count does not fit in u32".into()))?;
    let mut buf = Vec::with_capacity(HEADER_LEN + 16 * data.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&n.to_le_bytes());
    buf.push(T::PRECISION.tag());
    for z in data {
        buf.extend_from_slice(&z.re.as_f64().to_le_bytes());
        buf.extend_from_slice(&z.im.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_pure<T: Real, W: Write>(w: &mut W, state: &PureState<T>) -> Result<()> {
    write_dump(w, state.num_qubits(), state.amplitudes())
}

pub fn write_mixed<T: Real, W: Write>(w: &mut W, dm: &MixedState<T>) -> Result<()> {
    write_dump(w, dm.num_qubits(), dm.entries())
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let precision =
        Precision::from_tag(bytes[12]).ok_or_else(|| Error::Format(format!("unknown precision tag {}", bytes[12])))?;
    Ok(Header { num_qubits: word(8), precision })
}

/// Reads a whole dump. Pure and mixed states are told apart by the payload
/// length. Values are taken as stored, without renormalization.
pub fn read_state<T: Real, R: Read>(r: &mut R) -> Result<(Header, DumpedState<T>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let header = parse_header(&bytes)?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() % 16 != 0 {
        return Err(Error::Format(format!("payload of {} bytes is not whole complex values", payload.len())));
    }
    let n = header.num_qubits as usize;
    if n >= vqsim_core::statespace::MAX_QUBITS {
        return Err(Error::Format(format!("{n} qubits is beyond the supported range")));
    }
    let count = payload.len() / 16;
    let values: Vec<Complex<T>> = payload
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex::new(T::from_f64(re), T::from_f64(im))
        })
        .collect();
    let state = if count == 1 << n {
        DumpedState::Pure(PureState::from_raw_unchecked(values)?)
    } else if 2 * n < vqsim_core::statespace::MAX_QUBITS && count == 1 << (2 * n) {
        DumpedState::Mixed(MixedState::from_raw_unchecked(values)?)
    } else {
        return Err(Error::Format(format!("{count} values fit neither a pure nor a mixed {n}-qubit state")));
    };
    Ok((header, state))
}
