//! Trajectory serialization: a CSV export with full float round-trip
//! precision, and a compact binary dump with an 8-byte magic header that
//! reads back into the exact same trajectory.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::dynamics::{Beta, LangevinConfig, Trajectory, TrajectoryKind};
use crate::error::{Error, Result};

pub const TRAJECTORY_MAGIC: &[u8; 8] = b"LNGVTRJ1";

/// CSV with header `k,t,w_1,..,w_d`; floats at 17 significant digits so the
/// text form round-trips to the same bits.
pub fn trajectory_to_csv(traj: &Trajectory) -> String {
    let d = traj.dim();
    let mut out = String::from("k,t");
    for j in 1..=d {
        out.push_str(&format!(",w_{j}"));
    }
    out.push('\n');
    for (k, (t, w)) in traj.times.iter().zip(&traj.points).enumerate() {
        out.push_str(&format!("{k},{t:.16e}"));
        for v in w.iter() {
            out.push_str(&format!(",{v:.16e}"));
        }
        out.push('\n');
    }
    out
}

fn kind_code(kind: TrajectoryKind) -> u8 {
    match kind {
        TrajectoryKind::Discrete => 0,
        TrajectoryKind::DiffusionProxy => 1,
        TrajectoryKind::ExactOu => 2,
    }
}

fn kind_from_code(code: u8) -> Result<TrajectoryKind> {
    match code {
        0 => Ok(TrajectoryKind::Discrete),
        1 => Ok(TrajectoryKind::DiffusionProxy),
        2 => Ok(TrajectoryKind::ExactOu),
        other => Err(Error::BadTrajectoryFile(format!(
            "unknown trajectory kind code {other}"
        ))),
    }
}

/// Binary layout, little-endian throughout: magic, kind u8, beta-mode u8
/// (0 finite / 1 noiseless), d u32, substep_factor u32, length u64, eta f64,
/// beta f64 (zero in noiseless mode), seed u64, then `length` times and
/// `length * d` coordinates row-major.
pub fn write_trajectory_bin<W: Write>(traj: &Trajectory, w: &mut W) -> Result<()> {
    let d = traj.dim();
    w.write_all(TRAJECTORY_MAGIC)?;
    w.write_all(&[kind_code(traj.kind)])?;
    let (beta_mode, beta_val) = match traj.config.beta {
        Beta::Finite(b) => (0u8, b),
        Beta::Infinite => (1u8, 0.0),
    };
    w.write_all(&[beta_mode])?;
    w.write_all(&(d as u32).to_le_bytes())?;
    w.write_all(&(traj.substep_factor as u32).to_le_bytes())?;
    w.write_all(&(traj.len() as u64).to_le_bytes())?;
    w.write_all(&traj.config.eta.to_le_bytes())?;
    w.write_all(&beta_val.to_le_bytes())?;
    w.write_all(&traj.config.seed.to_le_bytes())?;
    for t in &traj.times {
        w.write_all(&t.to_le_bytes())?;
    }
    for p in &traj.points {
        for v in p.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_trajectory_bin<R: Read>(r: &mut R) -> Result<Trajectory> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TRAJECTORY_MAGIC {
        return Err(Error::BadTrajectoryFile(
            "magic header mismatch (not a trajectory dump)".into(),
        ));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let kind = kind_from_code(b1[0])?;
    r.read_exact(&mut b1)?;
    let beta_mode = b1[0];
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let substep_factor = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let len = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let eta = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let beta_val = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    let beta = match beta_mode {
        0 => Beta::Finite(beta_val),
        1 => Beta::Infinite,
        other => {
            return Err(Error::BadTrajectoryFile(format!(
                "unknown beta mode {other}"
            )))
        }
    };
    if len == 0 || d == 0 {
        return Err(Error::BadTrajectoryFile(
            "empty trajectory or zero dimension".into(),
        ));
    }
    let mut times = Vec::with_capacity(len);
    for _ in 0..len {
        r.read_exact(&mut b8)?;
        times.push(f64::from_le_bytes(b8));
    }
    let mut points = Vec::with_capacity(len);
    for _ in 0..len {
        let mut p = DVector::zeros(d);
        for j in 0..d {
            r.read_exact(&mut b8)?;
            p[j] = f64::from_le_bytes(b8);
        }
        points.push(p);
    }
    let config = LangevinConfig {
        eta,
        beta,
        horizon_k: len.saturating_sub(1).max(1),
        initial_point: points[0].iter().cloned().collect(),
        seed,
    };
    Ok(Trajectory {
        kind,
        times,
        points,
        config,
        substep_factor,
    })
}

pub fn write_trajectory_file(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_trajectory_bin(traj, &mut f)?;
    f.flush()?;
    Ok(())
}

pub fn read_trajectory_file(path: &Path) -> Result<Trajectory> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    read_trajectory_bin(&mut f)
}
