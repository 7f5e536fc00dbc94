//! CSV writers for the file formats consumed by downstream plotting.
//!
//! All numbers use Rust's shortest round-trip decimal formatting: parsing a
//! written field recovers the exact f64, independent of locale.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Result, Write};
use std::path::Path;

use crate::chaos::IndicatorSeries;
use crate::experiments::{ChaosFractionRow, CoefficientStats};
use crate::integrators::Trajectory;
use crate::two_mode::PortraitCell;

fn write_row(out: &mut impl Write, fields: &[f64]) -> Result<()> {
    let mut line = String::new();
    for (i, v) in fields.iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        let _ = write!(line, "{v}");
    }
    line.push('\n');
    out.write_all(line.as_bytes())
}

/// `t, x_1..x_N, p_1..p_N` per sample; samples are `[x, p]` state vectors.
pub fn write_trajectory_csv(path: &Path, trajectory: &Trajectory, n: usize) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = String::from("t");
    for j in 1..=n {
        let _ = write!(header, ",x_{j}");
    }
    for j in 1..=n {
        let _ = write!(header, ",p_{j}");
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;
    let mut row = Vec::with_capacity(2 * n + 1);
    for (t, y) in &trajectory.samples {
        row.clear();
        row.push(*t);
        row.extend_from_slice(y);
        write_row(&mut out, &row)?;
    }
    out.flush()
}

/// `t, E_1..E_N` per sample.
pub fn write_mode_energy_csv(path: &Path, rows: &[(f64, Vec<f64>)], n: usize) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let mut header = String::from("t");
    for k in 1..=n {
        let _ = write!(header, ",E_{k}");
    }
    header.push('\n');
    out.write_all(header.as_bytes())?;
    let mut row = Vec::with_capacity(n + 1);
    for (t, energies) in rows {
        row.clear();
        row.push(*t);
        row.extend_from_slice(energies);
        write_row(&mut out, &row)?;
    }
    out.flush()
}

/// `t, value` of an indicator series.
pub fn write_series_csv(path: &Path, series: &IndicatorSeries) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(b"t,value\n")?;
    for (t, v) in series.times.iter().zip(&series.values) {
        write_row(&mut out, &[*t, *v])?;
    }
    out.flush()
}

/// `tau, mean_A, sd_A, mean_B, sd_B` per tolerance.
pub fn write_sweep_csv(path: &Path, stats: &[CoefficientStats]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(b"tau,mean_A,sd_A,mean_B,sd_B\n")?;
    for s in stats {
        write_row(&mut out, &[s.tau, s.mean_a, s.sd_a, s.mean_b, s.sd_b])?;
    }
    out.flush()
}

/// `N, percent_chaotic, percent_undetermined` per chain size.
pub fn write_chaos_fraction_csv(path: &Path, rows: &[ChaosFractionRow]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(b"N,percent_chaotic,percent_undetermined\n")?;
    for r in rows {
        write_row(
            &mut out,
            &[r.n as f64, r.percent_chaotic, r.percent_undetermined],
        )?;
    }
    out.flush()
}

/// `theta, delta, dtheta, ddelta, in_region` per grid cell.
pub fn write_phase_portrait_csv(path: &Path, cells: &[PortraitCell]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(b"theta,delta,dtheta,ddelta,in_region\n")?;
    for c in cells {
        let mut line = String::new();
        let _ = writeln!(
            line,
            "{},{},{},{},{}",
            c.theta, c.delta, c.d_theta, c.d_delta, c.in_region as u8
        );
        out.write_all(line.as_bytes())?;
    }
    out.flush()
}

/// `T, delta, theta` along a reduced trajectory.
pub fn write_reduced_trajectory_csv(path: &Path, points: &[(f64, f64, f64)]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(b"T,delta,theta\n")?;
    for (t, d, th) in points {
        write_row(&mut out, &[*t, *d, *th])?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::TrajectoryStatus;

    #[test]
    fn csv_round_trips_exact_floats() {
        let dir = std::env::temp_dir().join("fput_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("traj.csv");
        let values = [
            0.1 + 0.2,
            std::f64::consts::PI,
            1.0 / 3.0,
            6.02e23,
            -1.2345678901234567e-8,
        ];
        let traj = Trajectory {
            samples: vec![
                (0.125, values[..4].to_vec()),
                (values[4], values[..4].to_vec()),
            ],
            status: TrajectoryStatus::Completed,
        };
        write_trajectory_csv(&path, &traj, 2).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,x_2,p_1,p_2");
        for (line, (t, y)) in lines.zip(&traj.samples) {
            let parsed: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!(parsed[0].to_bits(), t.to_bits());
            for (a, b) in parsed[1..].iter().zip(y) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
