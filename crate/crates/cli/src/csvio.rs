//! CSV writers and readers for fields, profiles, generators, and walker data.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a file
//! re-read with [`read_field_csv`] reproduces the values bit for bit and
//! reruns of a deterministic pipeline yield byte-identical artifacts.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use jumplab_core::coefficients::TransportProfile;
use jumplab_core::master_equation::RateMatrix;
use jumplab_core::walkers::{EmpiricalProfile, JumpRecord};
use jumplab_core::{Grid, LatticeField};

use crate::{CliError, Result};

fn writer(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

/// Field snapshot: columns `x,u,t` (time repeated per row).
pub fn write_field_csv(path: &Path, field: &LatticeField) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "x,u,t")?;
    let t = field.time();
    for (x, u) in field.grid().centers().zip(field.values()) {
        writeln!(w, "{x},{u},{t}")?;
    }
    Ok(())
}

/// Read a field snapshot written by [`write_field_csv`].
pub fn read_field_csv(path: &Path) -> Result<LatticeField> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::validation(format!("{}: empty file", path.display())))?;
    if header.trim() != "x,u,t" {
        return Err(CliError::validation(format!(
            "{}: expected header x,u,t, got {header}",
            path.display()
        )));
    }
    let mut xs = Vec::new();
    let mut us = Vec::new();
    let mut time = 0.0;
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |field: Option<&str>, what: &str| -> Result<f64> {
            field
                .ok_or_else(|| {
                    CliError::validation(format!("{}:{}: missing {what}", path.display(), i + 2))
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| {
                    CliError::validation(format!("{}:{}: {what}: {e}", path.display(), i + 2))
                })
        };
        xs.push(parse(parts.next(), "x")?);
        us.push(parse(parts.next(), "u")?);
        time = parse(parts.next(), "t")?;
    }
    if xs.len() < 2 {
        return Err(CliError::validation(format!(
            "{}: need at least two rows",
            path.display()
        )));
    }
    let h = xs[1] - xs[0];
    for pair in xs.windows(2) {
        if ((pair[1] - pair[0]) - h).abs() > 1e-9 * h.abs() {
            return Err(CliError::validation(format!(
                "{}: grid is not uniform",
                path.display()
            )));
        }
    }
    let grid = Grid::new(xs[0] - 0.5 * h, xs[xs.len() - 1] + 0.5 * h, xs.len())
        .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
    LatticeField::new(grid, us, time).map_err(|e| CliError::validation(e.to_string()))
}

/// Transport profile: columns `x,D,Vprime,V`.
pub fn write_profile_csv(path: &Path, profile: &TransportProfile) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "x,D,Vprime,V")?;
    let grid = profile.grid();
    for i in 0..grid.len() {
        writeln!(
            w,
            "{},{},{},{}",
            grid.center(i),
            profile.d()[i],
            profile.vprime()[i],
            profile.v()[i]
        )?;
    }
    Ok(())
}

/// Generator dump: coordinate triplets `i,j,w` of `du_i/dt = Σ_j w_ij u_j`.
pub fn write_generator_csv(path: &Path, gen: &RateMatrix) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "i,j,w")?;
    for (i, j, g) in gen.entries() {
        writeln!(w, "{i},{j},{g}")?;
    }
    Ok(())
}

/// Walker histogram snapshot: `x_lo,x_hi,count,density,t`.
pub fn write_snapshot_csv(path: &Path, profile: &EmpiricalProfile) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "x_lo,x_hi,count,density,t")?;
    for b in 0..profile.bins.count {
        writeln!(
            w,
            "{},{},{},{},{}",
            profile.bins.edge(b),
            profile.bins.edge(b + 1),
            profile.counts[b],
            profile.density[b],
            profile.time
        )?;
    }
    Ok(())
}

/// Per-bin Kramers-Moyal estimates from jump records.
pub fn write_km_csv(path: &Path, profile: &EmpiricalProfile) -> Result<()> {
    let stats = profile.jump_stats.as_ref().ok_or_else(|| {
        CliError::validation("profile carries no jump statistics to export")
    })?;
    let mut w = writer(path)?;
    writeln!(
        w,
        "x_lo,x_hi,count,mean_delta,mean_delta_sq,vprime_hat,vprime_se,d_hat,d_se,reported"
    )?;
    for b in 0..profile.bins.count {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            profile.bins.edge(b),
            profile.bins.edge(b + 1),
            stats.counts[b],
            stats.mean_delta[b],
            stats.mean_delta_sq[b],
            stats.vprime[b],
            stats.vprime_se[b],
            stats.d[b],
            stats.d_se[b],
            stats.reported[b]
        )?;
    }
    Ok(())
}

/// Raw jump records: `x,delta,tau`.
pub fn write_jumps_csv(path: &Path, jumps: &[JumpRecord]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "x,delta,tau")?;
    for j in jumps {
        writeln!(w, "{},{},{}", j.x, j.delta, j.tau_local)?;
    }
    Ok(())
}

/// Generic small table with a caller-provided header.
pub fn write_table_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let mut w = writer(path)?;
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
