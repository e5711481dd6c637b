use super::TransportError;

/// Perfect matching `a[i] ↦ b[assignment[i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    pub assignment: Vec<usize>,
    pub cost: f64,
}

/// `Σ_i |a_i − b_σ(i)|²`, summed in index order.
pub fn matching_cost(a: &[Vec<f64>], b: &[Vec<f64>], sigma: &[usize]) -> f64 {
    sigma.iter().enumerate().map(|(i, &j)| sq_dist(&a[i], &b[j])).sum()
}

fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn check_distinct(pts: &[Vec<f64>], side: &str) -> Result<(), TransportError> {
    for i in 0..pts.len() {
        for j in 0..i {
            if pts[i] == pts[j] {
                return Err(TransportError::DiagonalViolation(format!("{side} points {j} and {i} coincide")));
            }
        }
    }
    Ok(())
}

/// Minimum squared-distance matching between two configurations of `m` distinct
/// points (Hungarian method with row/column potentials, `O(m³)`).
pub fn config_transport(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<Matching, TransportError> {
    let m = a.len();
    if b.len() != m {
        return Err(TransportError::SizeMismatch { left: m, right: b.len() });
    }
    if let Some(p) = a.iter().chain(b).find(|p| p.len() != a.first().map_or(0, Vec::len)) {
        return Err(TransportError::ShapeMismatch(format!("point of dimension {}", p.len())));
    }
    check_distinct(a, "source")?;
    check_distinct(b, "target")?;
    if m == 0 {
        return Ok(Matching {
            assignment: Vec::new(),
            cost: 0.0,
        });
    }
    let c = |i: usize, j: usize| sq_dist(&a[i - 1], &b[j - 1]);
    // 1-based arrays; column 0 is a virtual start column
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = c(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; m];
    for j in 1..=m {
        assignment[p[j] - 1] = j - 1;
    }
    let cost = matching_cost(a, b, &assignment);
    Ok(Matching { assignment, cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_configurations_match_identically() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.3, 2.0]];
        let m = config_transport(&a, &a).unwrap();
        assert_eq!(m.assignment, vec![0, 1, 2]);
        assert_eq!(m.cost, 0.0);
    }

    #[test]
    fn collision_and_size_errors() {
        let a = vec![vec![0.0], vec![0.0]];
        let b = vec![vec![1.0], vec![2.0]];
        assert!(matches!(config_transport(&a, &b), Err(TransportError::DiagonalViolation(_))));
        assert!(matches!(config_transport(&b, &b[..1]), Err(TransportError::SizeMismatch { .. })));
    }
}
