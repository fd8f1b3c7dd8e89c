//! Flat binary checkpoint of a walker ensemble, for run resumption.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! bytes 0..8    magic "JLCKPT01"
//! u64           format version (1)
//! u64           master seed
//! u64           walker count n
//! f64 × n       positions
//! f64 × n       pending jump times (+inf when no jump will fire)
//! u64 × n       rng word position, low 64 bits
//! u64 × n       rng word position, high 64 bits
//! u8  × n       frozen flags (0 or 1)
//! ```

use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use jumplab_core::walkers::WalkerEnsemble;

use crate::{CliError, Result};

const MAGIC: &[u8; 8] = b"JLCKPT01";
const VERSION: u64 = 1;

pub fn save(path: &Path, ensemble: &WalkerEnsemble) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&ensemble.master_seed().to_le_bytes())?;
    w.write_all(&(ensemble.len() as u64).to_le_bytes())?;
    for x in ensemble.positions() {
        w.write_all(&x.to_le_bytes())?;
    }
    for t in ensemble.next_jump_times() {
        w.write_all(&t.to_le_bytes())?;
    }
    for pos in ensemble.rng_positions() {
        w.write_all(&((*pos & u128::from(u64::MAX)) as u64).to_le_bytes())?;
    }
    for pos in ensemble.rng_positions() {
        w.write_all(&((*pos >> 64) as u64).to_le_bytes())?;
    }
    for f in ensemble.frozen_flags() {
        w.write_all(&[u8::from(*f)])?;
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<WalkerEnsemble> {
    let mut r = BufReader::new(fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CliError::validation(format!(
            "{}: not a walker checkpoint",
            path.display()
        )));
    }
    let version = read_u64(&mut r)?;
    if version != VERSION {
        return Err(CliError::validation(format!(
            "{}: unsupported checkpoint version {version}",
            path.display()
        )));
    }
    let master_seed = read_u64(&mut r)?;
    let n = read_u64(&mut r)? as usize;
    let mut positions = Vec::with_capacity(n);
    for _ in 0..n {
        positions.push(read_f64(&mut r)?);
    }
    let mut next_jump = Vec::with_capacity(n);
    for _ in 0..n {
        next_jump.push(read_f64(&mut r)?);
    }
    let mut lo = Vec::with_capacity(n);
    for _ in 0..n {
        lo.push(read_u64(&mut r)?);
    }
    let mut rng_pos = Vec::with_capacity(n);
    for lo in lo.into_iter() {
        rng_pos.push(u128::from(lo));
    }
    for pos in rng_pos.iter_mut() {
        *pos |= u128::from(read_u64(&mut r)?) << 64;
    }
    let mut frozen = Vec::with_capacity(n);
    let mut byte = [0u8; 1];
    for _ in 0..n {
        r.read_exact(&mut byte)?;
        frozen.push(byte[0] != 0);
    }
    WalkerEnsemble::from_raw(master_seed, positions, next_jump, frozen, rng_pos)
        .map_err(|e| CliError::validation(e.to_string()))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use jumplab_core::kernel::{JumpKernel, RateField};
    use jumplab_core::walkers::{
        simulate_ctrw, BinSpec, CtrwConfig, InitialPosition, JumpSampler,
    };

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let kernel = JumpKernel::gaussian_iso(0.05).unwrap();
        let rate = RateField::uniform(1.0).unwrap();
        let sampler = JumpSampler::new(&kernel, None).unwrap();
        let cfg = CtrwConfig {
            t_end: 1.0,
            snapshots: vec![],
            bins: BinSpec::new(0.0, 1.0, 8).unwrap(),
            initial: InitialPosition::Point(0.5),
            n_walkers: 1500,
            seed: 99,
            record_jumps: false,
        };
        let run = simulate_ctrw(&rate, &sampler, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.bin");
        save(&path, &run.ensemble).unwrap();
        let back = load(&path).unwrap();
        assert_eq!(back, run.ensemble);
    }

    #[test]
    fn garbage_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"not a checkpoint").unwrap();
        assert!(load(&path).is_err());
    }
}
