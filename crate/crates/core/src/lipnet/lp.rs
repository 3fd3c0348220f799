//! Dense simplex for the small feasibility programs of region enumeration.

/// Minimum Chebyshev margin for a polyhedron to count as full-dimensional.
pub const INTERIOR_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 50_000;

/// Maximizes `cᵀy` subject to `A y ≤ b`, `y ≥ 0`, for `b ≥ 0` (the origin is
/// feasible). Bland's rule avoids cycling. Returns the optimal point, or
/// `None` if the program is unbounded or the pivot budget runs out.
fn simplex_max(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    let n = c.len();
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&a[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = b[i];
    }
    for j in 0..n {
        t[m][j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    for _ in 0..MAX_PIVOTS {
        let Some(col) = (0..n + m).find(|&j| t[m][j] < -PIVOT_TOL) else {
            let mut y = vec![0.0; n];
            for (i, &bv) in basis.iter().enumerate() {
                if bv < n {
                    y[bv] = t[i][width - 1];
                }
            }
            return Some(y);
        };
        let mut row = None;
        let mut best = f64::INFINITY;
        for i in 0..m {
            if t[i][col] > PIVOT_TOL {
                let ratio = t[i][width - 1] / t[i][col];
                let better = match row {
                    None => true,
                    Some(r) => ratio < best - 1e-15 || (ratio <= best + 1e-15 && basis[i] < basis[r]),
                };
                if better {
                    best = ratio;
                    row = Some(i);
                }
            }
        }
        let r = row?;
        let pivot = t[r][col];
        for v in t[r].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[r].clone();
        for (i, tr) in t.iter_mut().enumerate() {
            if i != r && tr[col] != 0.0 {
                let f = tr[col];
                for (v, p) in tr.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
            }
        }
        basis[r] = col;
    }
    None
}

/// Largest `t ≤ 1` with `aᵢ·x + bᵢ ≥ t‖aᵢ‖₂` for all rows, and a point
/// attaining it. Rows with vanishing `aᵢ` must be filtered by the caller.
pub fn chebyshev_margin(rows: &[(Vec<f64>, f64)], dim: usize) -> (f64, Vec<f64>) {
    if rows.is_empty() {
        return (1.0, vec![0.0; dim]);
    }
    let normed: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|(a, b)| {
            let n = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            (a.iter().map(|v| v / n).collect(), b / n)
        })
        .collect();
    // t = s - shift keeps every right-hand side positive at the origin
    let shift = normed.iter().fold(0.0f64, |m, (_, b)| m.max(-b)) + 1.0;
    // variables: x⁺ (dim), x⁻ (dim), s
    let nv = 2 * dim + 1;
    let mut a_mat = Vec::with_capacity(normed.len() + 1);
    let mut b_vec = Vec::with_capacity(normed.len() + 1);
    for (a, b) in &normed {
        // -a·x + s ≤ b + shift
        let mut row = vec![0.0; nv];
        for k in 0..dim {
            row[k] = -a[k];
            row[dim + k] = a[k];
        }
        row[2 * dim] = 1.0;
        a_mat.push(row);
        b_vec.push(b + shift);
    }
    let mut cap = vec![0.0; nv];
    cap[2 * dim] = 1.0;
    a_mat.push(cap);
    b_vec.push(1.0 + shift);
    let mut c = vec![0.0; nv];
    c[2 * dim] = 1.0;
    match simplex_max(&a_mat, &b_vec, &c) {
        Some(y) => {
            let x: Vec<f64> = (0..dim).map(|k| y[k] - y[dim + k]).collect();
            // recompute the margin at x to shed pivoting error
            let t = normed
                .iter()
                .map(|(a, b)| a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum::<f64>() + b)
                .fold(1.0f64, f64::min);
            (t, x)
        }
        None => (f64::NEG_INFINITY, vec![0.0; dim]),
    }
}
