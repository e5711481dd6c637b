//! Transportation simplex for the discrete Kantorovich problem.

use std::collections::VecDeque;

use nalgebra::DMatrix;

use super::TransportError;

/// Optimal plan with a dual certificate `u_i + v_j ≤ c_ij` (equality on the basis).
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub plan: DMatrix<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

/// Solves `min Σ c_ij π_ij` over couplings of `a` and `b` exactly (up to rounding).
///
/// Northwest-corner start, tree duals, Dantzig pricing; long runs of degenerate
/// pivots switch to Bland's rule so the method cannot cycle.
pub fn transport_lp(a: &[f64], b: &[f64], cost: &DMatrix<f64>) -> Result<LpSolution, TransportError> {
    let (m, n) = (a.len(), b.len());
    if m == 0 || n == 0 || cost.nrows() != m || cost.ncols() != n {
        return Err(TransportError::ShapeMismatch(format!(
            "cost is {}x{}, marginals have {m} and {n} entries",
            cost.nrows(),
            cost.ncols()
        )));
    }
    if a.iter().chain(b).any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(TransportError::InvalidDensity("marginals must be finite and nonnegative".into()));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > 1e-9 * sa.max(sb).max(1.0) {
        return Err(TransportError::MassMismatch { source_total: sa, target_total: sb });
    }

    let mut x = DMatrix::<f64>::zeros(m, n);
    let mut basic = vec![false; m * n];
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);
    {
        let (mut ra, mut rb) = (a.to_vec(), b.to_vec());
        let (mut i, mut j) = (0, 0);
        loop {
            let q = ra[i].min(rb[j]).max(0.0);
            x[(i, j)] = q;
            basic[i * n + j] = true;
            basis.push((i, j));
            ra[i] -= q;
            rb[j] -= q;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if j == n - 1 || (i < m - 1 && ra[i] <= rb[j]) {
                i += 1;
            } else {
                j += 1;
            }
        }
    }

    let cmax = cost.iter().fold(1.0f64, |s, c| s.max(c.abs()));
    let tol = 1e-12 * cmax;
    let max_pivots = 50 * (m + n) * (m + n) + 1000;
    let mut degenerate_run = 0usize;
    let mut pivots = 0usize;
    let (mut u, mut v) = (vec![0.0; m], vec![0.0; n]);
    loop {
        // adjacency of the basis tree: rows are nodes 0..m, columns m..m+n
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); m + n];
        for (e, &(i, j)) in basis.iter().enumerate() {
            adj[i].push(e);
            adj[m + j].push(e);
        }
        tree_duals(&basis, &adj, cost, m, &mut u, &mut v);

        let bland = degenerate_run > 10 * (m + n);
        let mut enter: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            for j in 0..n {
                if basic[i * n + j] {
                    continue;
                }
                let rc = cost[(i, j)] - u[i] - v[j];
                if rc < best {
                    enter = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = rc;
                }
            }
        }
        let Some((ei, ej)) = enter else { break };
        if pivots == max_pivots {
            return Err(TransportError::NonConvergence {
                iterations: pivots,
                residual: best,
            });
        }
        pivots += 1;

        // path row ei → column ej in the basis tree
        let mut parent: Vec<Option<usize>> = vec![None; m + n];
        let mut seen = vec![false; m + n];
        let mut queue = VecDeque::from([ei]);
        seen[ei] = true;
        while let Some(node) = queue.pop_front() {
            if node == m + ej {
                break;
            }
            for &e in &adj[node] {
                let (i, j) = basis[e];
                let other = if node < m { m + j } else { i };
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = Some(e);
                    queue.push_back(other);
                }
            }
        }
        // walk back from column ej; cells alternate −, +, −, ... starting at ej's end
        let mut path = Vec::new();
        let mut node = m + ej;
        while node != ei {
            let e = parent[node].expect("basis is a spanning tree");
            path.push(e);
            let (i, j) = basis[e];
            node = if node < m { m + j } else { i };
        }
        let mut leave = None;
        let mut theta = f64::INFINITY;
        for (pos, &e) in path.iter().enumerate() {
            if pos % 2 == 0 {
                let (i, j) = basis[e];
                let val = x[(i, j)];
                let better = match leave {
                    None => true,
                    Some(l) => val < theta || (val == theta && bland && i * n + j < key(basis[l], n)),
                };
                if better {
                    theta = val;
                    leave = Some(e);
                }
            }
        }
        let leave = leave.expect("cycle has a decreasing cell");
        degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        for (pos, &e) in path.iter().enumerate() {
            let (i, j) = basis[e];
            if pos % 2 == 0 {
                x[(i, j)] -= theta;
            } else {
                x[(i, j)] += theta;
            }
        }
        x[(ei, ej)] += theta;
        let (li, lj) = basis[leave];
        x[(li, lj)] = 0.0;
        basic[li * n + lj] = false;
        basic[ei * n + ej] = true;
        basis[leave] = (ei, ej);
    }
    x.iter_mut().for_each(|p| *p = p.max(0.0));
    let total = x.iter().zip(cost.iter()).map(|(p, c)| p * c).sum();
    Ok(LpSolution {
        plan: x,
        u,
        v,
        cost: total,
        pivots,
    })
}

fn key((i, j): (usize, usize), n: usize) -> usize {
    i * n + j
}

fn tree_duals(
    basis: &[(usize, usize)],
    adj: &[Vec<usize>],
    cost: &DMatrix<f64>,
    m: usize,
    u: &mut [f64],
    v: &mut [f64],
) {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    u[0] = 0.0;
    while let Some(node) = queue.pop_front() {
        for &e in &adj[node] {
            let (i, j) = basis[e];
            if node < m {
                if !seen[m + j] {
                    v[j] = cost[(i, j)] - u[i];
                    seen[m + j] = true;
                    queue.push_back(m + j);
                }
            } else if !seen[i] {
                u[i] = cost[(i, j)] - v[j];
                seen[i] = true;
                queue.push_back(i);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        // three plants, four markets
        let a = [20.0, 30.0, 25.0];
        let b = [10.0, 28.0, 15.0, 22.0];
        let c = DMatrix::from_row_slice(3, 4, &[8.0, 6.0, 10.0, 9.0, 9.0, 12.0, 13.0, 7.0, 14.0, 9.0, 16.0, 5.0]);
        let s = transport_lp(&a, &b, &c).unwrap();
        // primal feasibility, dual feasibility and a zero duality gap certify optimality
        for i in 0..3 {
            assert!((s.plan.row(i).sum() - a[i]).abs() < 1e-12);
            for j in 0..4 {
                assert!(c[(i, j)] - s.u[i] - s.v[j] > -1e-9);
            }
        }
        let dual: f64 = a.iter().zip(&s.u).map(|(x, y)| x * y).sum::<f64>()
            + b.iter().zip(&s.v).map(|(x, y)| x * y).sum::<f64>();
        assert!((dual - s.cost).abs() < 1e-9);
    }

    #[test]
    fn degenerate_uniform_instance_terminates() {
        let n = 6;
        let a = vec![1.0; n];
        let c = DMatrix::from_fn(n, n, |i, j| ((i * 7 + j * 3) % 5) as f64);
        let s = transport_lp(&a, &a, &c).unwrap();
        assert!(s.cost >= 0.0);
        for j in 0..n {
            assert!((s.plan.column(j).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_mismatch_is_reported() {
        let c = DMatrix::zeros(1, 1);
        assert!(matches!(transport_lp(&[1.0], &[2.0], &c), Err(TransportError::MassMismatch { .. })));
    }
}
