//! Exact solution of the destination-aggregated flow LP for tiny networks,
//! by a dense two-phase simplex with Bland's rule. Used to validate the
//! approximation scheme.

use super::{demands_by_destination, McfError};
use crate::model::{Topology, TrafficMatrix};

pub const EXACT_MAX_NODES: usize = 6;

const TOL: f64 = 1e-9;

/// Dense simplex tableau for `min c.x  s.t.  A x = b, x >= 0` with `b >= 0`.
struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows` constraint rows followed by the objective row; each row has
    /// `cols` coefficients then the right-hand side.
    data: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.data[row][col];
        for v in self.data[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.data[row].clone();
        for (r, line) in self.data.iter_mut().enumerate() {
            if r == row {
                continue;
            }
            let factor = line[col];
            if factor.abs() > 0.0 {
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations on the objective row, only entering columns
    /// below `allowed`. Returns false if unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        let obj = self.rows;
        loop {
            let Some(col) = (0..allowed).find(|&c| self.data[obj][c] < -TOL) else {
                return true;
            };
            let mut best: Option<(f64, usize)> = None;
            for r in 0..self.rows {
                let a = self.data[r][col];
                if a > TOL {
                    let ratio = self.data[r][self.cols] / a;
                    let better = match best {
                        None => true,
                        Some((br, bi)) => ratio < br - TOL || (ratio <= br + TOL && self.basis[r] < self.basis[bi]),
                    };
                    if better {
                        best = Some((ratio, r));
                    }
                }
            }
            match best {
                Some((_, r)) => self.pivot(r, col),
                None => return false,
            }
        }
    }
}

/// Solves `min c.x  s.t.  A x = b, x >= 0` and returns the optimal `x`.
fn solve_standard_form(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let rows = a.len();
    let n = c.len();
    let cols = n + rows;
    let mut data = Vec::with_capacity(rows + 1);
    for (r, row) in a.iter().enumerate() {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        let mut line = vec![0.0; cols + 1];
        for (j, &v) in row.iter().enumerate() {
            line[j] = sign * v;
        }
        line[n + r] = 1.0;
        line[cols] = sign * b[r];
        data.push(line);
    }
    // Phase one: minimize the sum of artificials.
    let mut objective = vec![0.0; cols + 1];
    for line in &data {
        for j in 0..n {
            objective[j] -= line[j];
        }
        objective[cols] -= line[cols];
    }
    data.push(objective);
    let mut t = Tableau { rows, cols, data, basis: (n..n + rows).collect() };
    if !t.optimize(n) || t.data[rows][cols].abs() > 1e-7 {
        return None;
    }
    // Drive remaining artificials out of the basis where possible.
    for r in 0..rows {
        if t.basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| t.data[r][j].abs() > TOL) {
                t.pivot(r, col);
            }
        }
    }
    // Phase two objective expressed in the current basis.
    let mut objective = vec![0.0; cols + 1];
    objective[..n].copy_from_slice(c);
    for r in 0..rows {
        let bc = if t.basis[r] < n { c[t.basis[r]] } else { 0.0 };
        if bc != 0.0 {
            for j in 0..=cols {
                objective[j] -= bc * t.data[r][j];
            }
        }
    }
    t.data[rows] = objective;
    if !t.optimize(n) {
        return None;
    }
    let mut x = vec![0.0; n];
    for r in 0..rows {
        if t.basis[r] < n {
            x[t.basis[r]] = t.data[r][cols];
        }
    }
    Some(x)
}

/// Exact optimum of the destination-aggregated flow LP. Only for topologies
/// with at most [`EXACT_MAX_NODES`] nodes.
pub fn exact_lower_bound(topology: &Topology, traffic: &TrafficMatrix) -> Result<f64, McfError> {
    let n = topology.node_count();
    if n > EXACT_MAX_NODES {
        return Err(McfError::TooLarge { nodes: n, max: EXACT_MAX_NODES });
    }
    let m = topology.edge_count();
    let (demand, _) = demands_by_destination(n, traffic)?;
    // Columns: load[t][e] at t * m + e, then U, then one slack per edge.
    let flow_cols = n * m;
    let u_col = flow_cols;
    let cols = flow_cols + 1 + m;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for t in 0..n {
        for i in 0..n {
            if i == t {
                continue;
            }
            let mut row = vec![0.0; cols];
            for (e, edge) in topology.edges.iter().enumerate() {
                if edge.src == i {
                    row[t * m + e] += 1.0;
                }
                if edge.dst == i {
                    row[t * m + e] -= 1.0;
                }
            }
            a.push(row);
            b.push(demand[t][i]);
        }
    }
    for (e, edge) in topology.edges.iter().enumerate() {
        let mut row = vec![0.0; cols];
        for t in 0..n {
            row[t * m + e] = 1.0;
        }
        row[u_col] = -edge.capacity;
        row[u_col + 1 + e] = 1.0;
        a.push(row);
        b.push(0.0);
    }
    let mut c = vec![0.0; cols];
    c[u_col] = 1.0;
    let x = solve_standard_form(&a, &b, &c).ok_or(McfError::Numerical)?;
    Ok(x[u_col])
}
