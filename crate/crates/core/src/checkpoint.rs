//! Binary checkpoints: a JSON header followed by little-endian f64 sector data.
//!
//! Layout: the magic line `HFCKPT1\n`, the header length as a little-endian u64,
//! the JSON header, then every g_l block and (for HFB states) every a_l block,
//! each N×N row-major with re/im interleaved.

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::potential::PotentialSpec;
use crate::radial::{build_grid, GridSpec};
use crate::state::{Constants, State};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

const MAGIC: &[u8; 8] = b"HFCKPT1\n";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub grid: GridSpec,
    pub constants: Constants,
    pub potential: PotentialSpec,
    pub lambda: usize,
    pub hfb: bool,
    pub time: f64,
    pub step: u64,
    pub fingerprint: u64,
}

pub fn write<W: Write>(state: &State, potential: &PotentialSpec, mut w: W) -> Result<()> {
    let header = Header {
        grid: state.grid.spec.clone(),
        constants: Constants::current(),
        potential: potential.clone(),
        lambda: state.lambda(),
        hfb: state.is_hfb(),
        time: state.time,
        step: state.step,
        fingerprint: state.fingerprint(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    let n = state.grid.len();
    let mut buf = Vec::with_capacity(16 * n * n);
    for m in state.g.iter().chain(state.a.iter().flatten()) {
        buf.clear();
        for i in 0..n {
            for j in 0..n {
                buf.extend_from_slice(&m.re[(i, j)].to_le_bytes());
                buf.extend_from_slice(&m.im[(i, j)].to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Read a checkpoint written by this build; different normalization constants are rejected.
pub fn read<R: Read>(mut r: R) -> Result<(Header, State)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let len = u64::from_le_bytes(len);
    if len > 1 << 20 {
        return Err(Error::Checkpoint(format!("header length {len} too large")));
    }
    let mut json = vec![0u8; len as usize];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    if header.constants != Constants::current() {
        return Err(Error::Checkpoint(format!("written with constants {:?}", header.constants)));
    }
    let grid = Arc::new(build_grid(header.grid.n, header.grid.radius, header.grid.scheme)?);
    let n = grid.len();
    let mut block = || -> Result<CMat> {
        let mut bytes = vec![0u8; 16 * n * n];
        r.read_exact(&mut bytes)?;
        let mut m = CMat::zeros(n);
        for (k, c) in bytes.chunks_exact(16).enumerate() {
            let (i, j) = (k / n, k % n);
            m.re[(i, j)] = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            m.im[(i, j)] = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
        }
        Ok(m)
    };
    let g = (0..=header.lambda).map(|_| block()).collect::<Result<Vec<_>>>()?;
    let mut state = if header.hfb {
        let a = (0..=header.lambda).map(|_| block()).collect::<Result<Vec<_>>>()?;
        State::hfb(grid, g, a)?
    } else {
        State::hf(grid, g)?
    };
    state.time = header.time;
    state.step = header.step;
    if state.fingerprint() != header.fingerprint {
        return Err(Error::Checkpoint("fingerprint mismatch: data corrupted".into()));
    }
    Ok((header, state))
}

pub fn save(state: &State, potential: &PotentialSpec, path: &std::path::Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write(state, potential, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<(Header, State)> {
    read(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::random_state;
    use crate::radial::GridScheme;
    use crate::system::System;
    use rand::SeedableRng;

    #[test]
    fn round_trip_is_bitwise() {
        let grid = Arc::new(build_grid(12, 6.0, GridScheme::LegendreMapped).unwrap());
        let sys = System::new(grid, PotentialSpec::newton(1.0, 1.0, 12.0).unwrap(), 1).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for hfb in [false, true] {
            let mut st = random_state(&sys, 2, hfb, &mut rng).unwrap();
            st.time = 0.375;
            st.step = 17;
            let mut bytes = Vec::new();
            write(&st, &sys.potential, &mut bytes).unwrap();
            let (header, back) = read(bytes.as_slice()).unwrap();
            assert_eq!(header.potential, sys.potential);
            assert_eq!(back.fingerprint(), st.fingerprint());
            assert_eq!(back.time, st.time);
            assert_eq!(back.step, 17);
            assert_eq!(back.is_hfb(), hfb);
            assert_eq!(back.distance(&st), 0.0);
        }
    }

    #[test]
    fn corruption_is_detected() {
        let grid = Arc::new(build_grid(8, 4.0, GridScheme::Uniform).unwrap());
        let sys = System::new(grid, PotentialSpec::newton(1.0, 1.0, 8.0).unwrap(), 0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let st = random_state(&sys, 1, false, &mut rng).unwrap();
        let mut bytes = Vec::new();
        write(&st, &sys.potential, &mut bytes).unwrap();
        let last = bytes.len() - 3;
        bytes[last] ^= 0x40;
        assert!(matches!(read(bytes.as_slice()), Err(Error::Checkpoint(_))));
        assert!(read(&b"NOTACKPT"[..]).is_err());
    }
}
