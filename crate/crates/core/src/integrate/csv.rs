//! Trajectory CSV: header `t,q1..qn,p1..pn,H`, 17 significant digits.

use super::Trajectory;
use crate::error::{Error, Result};
use crate::phase::{fmt17, PhasePoint};
use crate::systems::Hamiltonian;

pub fn header(n: usize) -> String {
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=n).map(|i| format!("q{i}")));
    cols.extend((1..=n).map(|i| format!("p{i}")));
    cols.push("H".into());
    cols.join(",")
}

/// Writes the trajectory with `H` recomputed from `sys`.
pub fn to_csv(traj: &Trajectory, sys: &dyn Hamiltonian) -> Result<String> {
    let n = traj.states.first().map_or(sys.dof(), PhasePoint::dof);
    let mut out = header(n);
    out.push('\n');
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let h = sys.energy(s)?;
        let row: Vec<String> = std::iter::once(*t)
            .chain(s.q.iter().copied())
            .chain(s.p.iter().copied())
            .chain(std::iter::once(h))
            .map(fmt17)
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Parses a trajectory CSV. `energy0` and `max_drift` come from the `H` column.
pub fn from_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let head = lines.next().ok_or_else(|| Error::Parse("empty trajectory CSV".into()))?;
    let cols: Vec<&str> = head.split(',').map(str::trim).collect();
    if cols.len() < 4 || !cols.len().is_multiple_of(2) || cols[0] != "t" || *cols.last().unwrap() != "H" {
        return Err(Error::Parse(format!("bad trajectory header `{head}`")));
    }
    let n = (cols.len() - 2) / 2;
    if header(n) != cols.join(",") {
        return Err(Error::Parse(format!("bad trajectory header `{head}`")));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut energies = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("row {}: bad number `{v}`", lineno + 2)))
            })
            .collect::<Result<_>>()?;
        if vals.len() != cols.len() {
            return Err(Error::Parse(format!(
                "row {}: expected {} columns, got {}",
                lineno + 2,
                cols.len(),
                vals.len()
            )));
        }
        times.push(vals[0]);
        states.push(PhasePoint {
            q: vals[1..=n].to_vec(),
            p: vals[n + 1..=2 * n].to_vec(),
        });
        energies.push(vals[2 * n + 1]);
    }
    let energy0 = *energies
        .first()
        .ok_or_else(|| Error::Parse("trajectory CSV has no rows".into()))?;
    let max_drift = energies.iter().map(|e| (e - energy0).abs()).fold(0.0, f64::max);
    Ok(Trajectory {
        times,
        states,
        energy0,
        max_drift,
        exit_reason: None,
    })
}
