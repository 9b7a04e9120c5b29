//! Exact discrete optimal transport by the transportation simplex method.
//!
//! The basis is a spanning tree over row and column nodes, started from the
//! north-west corner rule. Pivots use Dantzig's most-negative reduced cost and
//! switch permanently to Bland's smallest-index rule after a run of degenerate
//! pivots, which rules out cycling.

use nalgebra::DMatrix;

use crate::error::{FrameError, Result};

const DEGENERATE_RUN_LIMIT: usize = 50;
/// Flows below this are treated as exact zeros in the returned plan.
const FLOW_CLEANUP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub plan: DMatrix<f64>,
    pub cost: f64,
    pub iterations: usize,
}

/// Minimises `Σ γ_ij c_ij` over couplings with row sums `supply` and column
/// sums `demand`. Both marginals must carry the same total mass.
pub fn solve(supply: &[f64], demand: &[f64], cost: &DMatrix<f64>) -> Result<TransportSolution> {
    let m = supply.len();
    let n = demand.len();
    if m == 0 || n == 0 {
        return Err(FrameError::Empty("transport marginal"));
    }
    if cost.nrows() != m || cost.ncols() != n {
        return Err(FrameError::DimensionMismatch { expected: m * n, got: cost.nrows() * cost.ncols() });
    }
    let total_a: f64 = supply.iter().sum();
    let total_b: f64 = demand.iter().sum();
    if (total_a - total_b).abs() > 1e-10 * total_a.abs().max(1.0) {
        return Err(FrameError::InvalidWeights(format!(
            "marginal masses differ: {total_a} vs {total_b}"
        )));
    }

    let mut flow = DMatrix::<f64>::zeros(m, n);
    let mut basis = north_west_corner(supply, demand, &mut flow);
    let mut is_basic = DMatrix::from_element(m, n, false);
    for &(i, j) in &basis {
        is_basic[(i, j)] = true;
    }

    let scale = cost.amax().max(1.0);
    let eps = 1e-12 * scale;
    let max_iterations = 50 * (m * n + m + n) + 1000;
    let mut bland = false;
    let mut degenerate_run = 0usize;
    let mut iterations = 0usize;

    loop {
        let (u, v) = potentials(m, n, &basis, cost);
        let entering = select_entering(cost, &is_basic, &u, &v, eps, bland);
        let Some((ei, ej)) = entering else { break };

        iterations += 1;
        if iterations > max_iterations {
            return Err(FrameError::InvalidArgument("transport simplex failed to converge".into()));
        }

        let path = tree_path(m, n, &basis, ei, ej);
        // Cells on the path alternate −, +, −, ... starting at column ej.
        let minus: Vec<(usize, usize)> = path.iter().step_by(2).copied().collect();
        let plus: Vec<(usize, usize)> = path.iter().skip(1).step_by(2).copied().collect();
        let theta = minus.iter().map(|&c| flow[c]).fold(f64::INFINITY, f64::min);
        let leaving = minus
            .iter()
            .copied()
            .filter(|&c| flow[c] <= theta)
            .min_by_key(|&(i, j)| if bland { i * n + j } else { 0 })
            .expect("cycle has a minus cell");

        for &c in &minus {
            flow[c] -= theta;
        }
        for &c in &plus {
            flow[c] += theta;
        }
        flow[(ei, ej)] += theta;
        flow[leaving] = 0.0;

        is_basic[leaving] = false;
        is_basic[(ei, ej)] = true;
        let slot = basis.iter().position(|&c| c == leaving).expect("leaving cell is basic");
        basis[slot] = (ei, ej);

        if theta <= 0.0 {
            degenerate_run += 1;
            if degenerate_run > DEGENERATE_RUN_LIMIT {
                bland = true;
            }
        } else {
            degenerate_run = 0;
        }
    }

    for x in flow.iter_mut() {
        if *x < FLOW_CLEANUP {
            *x = 0.0;
        }
    }
    let total_cost = flow.iter().zip(cost.iter()).map(|(x, c)| x * c).sum::<f64>();
    Ok(TransportSolution { plan: flow, cost: total_cost, iterations })
}

fn north_west_corner(supply: &[f64], demand: &[f64], flow: &mut DMatrix<f64>) -> Vec<(usize, usize)> {
    let (m, n) = (supply.len(), demand.len());
    let mut ra = supply.to_vec();
    let mut rb = demand.to_vec();
    let (mut i, mut j) = (0, 0);
    let mut basis = Vec::with_capacity(m + n - 1);
    loop {
        let x = ra[i].min(rb[j]).max(0.0);
        flow[(i, j)] = x;
        basis.push((i, j));
        ra[i] -= x;
        rb[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }
    basis
}

/// Dual potentials with `u_0 = 0` and `u_i + v_j = c_ij` on basic cells.
fn potentials(m: usize, n: usize, basis: &[(usize, usize)], cost: &DMatrix<f64>) -> (Vec<f64>, Vec<f64>) {
    let adjacency = adjacency(m, n, basis);
    let mut pot = vec![f64::NAN; m + n];
    pot[0] = 0.0;
    let mut stack = vec![0usize];
    while let Some(node) = stack.pop() {
        for &next in &adjacency[node] {
            if pot[next].is_nan() {
                let (i, j) = cell(m, node, next);
                pot[next] = cost[(i, j)] - pot[node];
                stack.push(next);
            }
        }
    }
    let v = pot.split_off(m);
    (pot, v)
}

fn select_entering(
    cost: &DMatrix<f64>,
    is_basic: &DMatrix<bool>,
    u: &[f64],
    v: &[f64],
    eps: f64,
    bland: bool,
) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for i in 0..u.len() {
        for j in 0..v.len() {
            if is_basic[(i, j)] {
                continue;
            }
            let reduced = cost[(i, j)] - u[i] - v[j];
            if reduced < -eps {
                if bland {
                    return Some((i, j));
                }
                if best.is_none_or(|(_, r)| reduced < r) {
                    best = Some(((i, j), reduced));
                }
            }
        }
    }
    best.map(|(c, _)| c)
}

/// Tree path from column node `col` to row node `row`, as cells.
fn tree_path(m: usize, n: usize, basis: &[(usize, usize)], row: usize, col: usize) -> Vec<(usize, usize)> {
    let adjacency = adjacency(m, n, basis);
    let start = m + col;
    let mut parent = vec![usize::MAX; m + n];
    parent[start] = start;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == row {
            break;
        }
        for &next in &adjacency[node] {
            if parent[next] == usize::MAX {
                parent[next] = node;
                queue.push_back(next);
            }
        }
    }
    let mut cells = Vec::new();
    let mut node = row;
    while node != start {
        let prev = parent[node];
        cells.push(cell(m, prev, node));
        node = prev;
    }
    cells.reverse();
    cells
}

fn adjacency(m: usize, n: usize, basis: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); m + n];
    for &(i, j) in basis {
        adjacency[i].push(m + j);
        adjacency[m + j].push(i);
    }
    adjacency
}

fn cell(m: usize, a: usize, b: usize) -> (usize, usize) {
    if a < m {
        (a, b - m)
    } else {
        (b, a - m)
    }
}
