//! Small dense linear algebra for the basis construction. Matrices are
//! row-major `Vec<f64>` with explicit dimension.

/// Result of a diagonally pivoted Cholesky factorization of a PSD matrix.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    /// Selected pivot indices, in pivot order.
    pub pivots: Vec<usize>,
    /// Pivot values (squared diagonal of the factor), in pivot order.
    pub pivot_values: Vec<f64>,
}

/// Pivoted Cholesky of the `n×n` PSD matrix `g`. Stops when the largest
/// remaining Schur-complement diagonal falls below `rel_tol` times the
/// largest initial diagonal.
pub fn pivoted_cholesky(g: &[f64], n: usize, rel_tol: f64) -> PivotedCholesky {
    assert_eq!(g.len(), n * n);
    let mut diag: Vec<f64> = (0..n).map(|i| g[i * n + i]).collect();
    let scale = diag.iter().cloned().fold(0.0_f64, f64::max);
    let mut used = vec![false; n];
    // columns of the factor, indexed [pivot step][row]
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let mut pivot_values = Vec::new();
    if scale <= 0.0 {
        return PivotedCholesky {
            pivots,
            pivot_values,
        };
    }
    for _ in 0..n {
        let (best, val) = (0..n).filter(|&i| !used[i]).map(|i| (i, diag[i])).fold(
            (usize::MAX, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 { b } else { a },
        );
        if best == usize::MAX || val <= rel_tol * scale {
            break;
        }
        used[best] = true;
        let root = val.sqrt();
        let mut col = vec![0.0; n];
        for i in 0..n {
            if used[i] && i != best {
                continue;
            }
            let mut s = g[i * n + best];
            for c in &cols {
                s -= c[i] * c[best];
            }
            col[i] = s / root;
        }
        for i in 0..n {
            if !used[i] {
                diag[i] -= col[i] * col[i];
            }
        }
        cols.push(col);
        pivots.push(best);
        pivot_values.push(val);
    }
    PivotedCholesky {
        pivots,
        pivot_values,
    }
}

/// Solves `a x = b` for several right-hand sides by Gaussian elimination with
/// partial pivoting. `a` is `n×n`, `b` is `n×m` (row-major). Returns `None`
/// when `a` is numerically singular.
pub fn solve(a: &[f64], n: usize, b: &[f64], m: usize) -> Option<Vec<f64>> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    let norm = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for col in 0..n {
        let piv =
            (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() <= 1e-14 * norm {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(piv * n + k, col * n + k);
            }
            for k in 0..m {
                b.swap(piv * m + k, col * m + k);
            }
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            for k in 0..m {
                b[row * m + k] -= f * b[col * m + k];
            }
        }
    }
    let mut x = vec![0.0; n * m];
    for k in 0..m {
        for row in (0..n).rev() {
            let mut s = b[row * m + k];
            for j in row + 1..n {
                s -= a[row * n + j] * x[j * m + k];
            }
            x[row * m + k] = s / a[row * n + row];
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = [2.0, 1.0, 1.0, 3.0];
        let b = [3.0, 5.0];
        let x = solve(&a, 2, &b, 1).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn cholesky_detects_rank() {
        // rank-2 Gram matrix of vectors (1,0), (0,1), (1,1)
        let v = [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
        let mut g = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                g[i * 3 + j] = v[i][0] * v[j][0] + v[i][1] * v[j][1];
            }
        }
        let f = pivoted_cholesky(&g, 3, 1e-10);
        assert_eq!(f.pivots.len(), 2);
        assert_eq!(f.pivots[0], 2);
    }

    #[test]
    fn singular_solve_is_none() {
        assert!(solve(&[1.0, 2.0, 2.0, 4.0], 2, &[1.0, 1.0], 1).is_none());
    }
}
