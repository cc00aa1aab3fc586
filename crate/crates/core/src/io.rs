//! CSV interchange for measures, trajectories and plans.
//!
//! Reals are written with 17 significant digits, enough to round-trip any
//! `f64`.

use std::io::{Read, Write};
use std::path::Path;

use crate::dynamics::{Diagnostics, Trajectory};
use crate::error::{invalid, Result};
use crate::transport::{DiscreteMeasure, TransportPlan};

/// 17 significant digits.
pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(e: impl std::fmt::Display) -> crate::Error {
    invalid(format!("i/o: {e}"))
}

fn coordinate_names(dim: usize) -> Vec<String> {
    if dim == 4 || dim == 6 {
        let d = dim / 2;
        (1..=d).map(|k| format!("x{k}")).chain((1..=d).map(|k| format!("v{k}"))).collect()
    } else {
        (1..=dim).map(|k| format!("z{k}")).collect()
    }
}

/// Header row, then one atom per row: coordinates then weight.
pub fn write_measure<W: Write>(mut w: W, mu: &DiscreteMeasure) -> Result<()> {
    let mut header = coordinate_names(mu.dim);
    header.push("weight".into());
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for k in 0..mu.len() {
        let row: Vec<String> = mu.point(k).iter().chain([&mu.weights[k]]).map(|&x| fmt(x)).collect();
        writeln!(w, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_measure<R: Read>(r: R) -> Result<DiscreteMeasure> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r);
    let cols = rdr.headers().map_err(io_err)?.len();
    if cols < 2 {
        return Err(invalid("measure CSV needs at least one coordinate column and a weight column"));
    }
    let dim = cols - 1;
    let (mut points, mut weights) = (Vec::new(), Vec::new());
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        if rec.len() != cols {
            return Err(invalid(format!("row {} has {} fields, expected {cols}", line + 2, rec.len())));
        }
        for (k, field) in rec.iter().enumerate() {
            let x: f64 = field.parse().map_err(|_| invalid(format!("row {}: cannot parse {field:?}", line + 2)))?;
            if k < dim {
                points.push(x);
            } else {
                weights.push(x);
            }
        }
    }
    DiscreteMeasure::new(dim, points, weights)
}

pub fn read_measure_file(path: &Path) -> Result<DiscreteMeasure> {
    let f = std::fs::File::open(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    read_measure(std::io::BufReader::new(f))
}

pub fn write_measure_file(path: &Path, mu: &DiscreteMeasure) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    write_measure(std::io::BufWriter::new(f), mu)
}

/// Columns `t, particle, x1.., v1.., weight`, one row per particle per
/// recorded snapshot.
pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    let d = traj.snapshots.first().map_or(2, |s| s.dim);
    let mut header = vec!["t".to_string(), "particle".to_string()];
    header.extend(coordinate_names(2 * d));
    header.push("weight".into());
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for (t, st) in traj.times.iter().zip(&traj.snapshots) {
        for i in 0..st.len() {
            let mut row = vec![fmt(*t), i.to_string()];
            row.extend(st.positions[i][..d].iter().chain(&st.velocities[i][..d]).map(|&x| fmt(x)));
            row.push(fmt(st.weights[i]));
            writeln!(w, "{}", row.join(",")).map_err(io_err)?;
        }
    }
    Ok(())
}

/// Columns `t, max_speed, p1.., kinetic_energy`, one row per step.
pub fn write_diagnostics<W: Write>(mut w: W, diags: &[Diagnostics], dim: usize) -> Result<()> {
    let mut header = vec!["t".to_string(), "max_speed".to_string()];
    header.extend((1..=dim).map(|k| format!("p{k}")));
    header.push("kinetic_energy".into());
    writeln!(w, "{}", header.join(",")).map_err(io_err)?;
    for dg in diags {
        let mut row = vec![fmt(dg.t), fmt(dg.max_speed)];
        row.extend(dg.momentum[..dim].iter().map(|&x| fmt(x)));
        row.push(fmt(dg.kinetic_energy));
        writeln!(w, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// Triples `(i, j, mass)`.
pub fn write_plan<W: Write>(mut w: W, plan: &TransportPlan) -> Result<()> {
    writeln!(w, "source,target,mass").map_err(io_err)?;
    for e in &plan.entries {
        writeln!(w, "{},{},{}", e.source, e.target, fmt(e.mass)).map_err(io_err)?;
    }
    Ok(())
}
