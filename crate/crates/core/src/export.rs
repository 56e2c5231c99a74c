//! CSV writers. Floats use Rust's shortest round-trip decimal form, so a
//! value read back parses to the identical `f64`.

use std::io::Write;

use crate::action::Path;
use crate::error::{Error, Result};
use crate::flow::Trajectory;
use crate::montecarlo::{DecayFit, OccupationHistogram};
use crate::quasipotential::QuasipotentialResult;

fn io(e: impl std::fmt::Display) -> Error {
    Error::Export(e.to_string())
}

fn point_header(first: &str, dim: usize) -> Vec<String> {
    std::iter::once(first.to_string()).chain((1..=dim).map(|i| format!("x{i}"))).collect()
}

fn write_nodes<W: Write>(w: W, times: &[f64], points: &[Vec<f64>]) -> Result<()> {
    let dim = points.first().map_or(0, |p| p.len());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(point_header("t", dim)).map_err(io)?;
    for (t, p) in times.iter().zip(points) {
        out.write_record(std::iter::once(t).chain(p).map(|v| v.to_string())).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// `t,x1,...,xr`, one row per node.
pub fn write_trajectory_csv<W: Write>(w: W, traj: &Trajectory) -> Result<()> {
    write_nodes(w, &traj.times, &traj.states)
}

/// Same schema as trajectories.
pub fn write_path_csv<W: Write>(w: W, path: &Path) -> Result<()> {
    write_nodes(w, &path.times, &path.points)
}

/// `value,T_used,iters,converged`.
pub fn write_quasipotential_csv<W: Write>(w: W, r: &QuasipotentialResult) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["value", "T_used", "iters", "converged"]).map_err(io)?;
    out.write_record([
        r.value.to_string(),
        r.t_used.to_string(),
        r.optimizer_iters.to_string(),
        r.converged.to_string(),
    ])
    .map_err(io)?;
    out.flush().map_err(io)
}

/// `bin1..binr,center1..centerr,weight`, one row per bin in row-major order.
pub fn write_histogram_csv<W: Write>(w: W, h: &OccupationHistogram) -> Result<()> {
    let dim = h.bins_per_axis.len();
    let mut out = csv::Writer::from_writer(w);
    let header: Vec<String> = (1..=dim)
        .map(|i| format!("bin{i}"))
        .chain((1..=dim).map(|i| format!("center{i}")))
        .chain(std::iter::once("weight".to_string()))
        .collect();
    out.write_record(&header).map_err(io)?;
    for b in 0..h.n_bins() {
        let row: Vec<String> = h
            .multi_index(b)
            .iter()
            .map(|i| i.to_string())
            .chain(h.center(b).iter().map(|c| c.to_string()))
            .chain(std::iter::once(h.weights[b].to_string()))
            .collect();
        out.write_record(&row).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// `epsilon,mass,log_mass` per noise level, then one summary row holding
/// `kappa_hat,intercept,r_squared` in the same three columns.
pub fn write_decay_csv<W: Write>(w: W, f: &DecayFit) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["epsilon", "mass", "log_mass"]).map_err(io)?;
    for ((e, m), l) in f.epsilons.iter().zip(&f.masses).zip(&f.log_masses) {
        out.write_record([e.to_string(), m.to_string(), l.to_string()]).map_err(io)?;
    }
    out.write_record([f.kappa_hat.to_string(), f.intercept.to_string(), f.r_squared.to_string()]).map_err(io)?;
    out.flush().map_err(io)
}
