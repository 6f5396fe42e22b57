//! Small dense helpers for Jacobian rank and metric definiteness.

/// Rank by Gaussian elimination with full pivoting. A pivot counts when
/// `|pivot| > tol * max|entry|`; an all-zero matrix has rank 0.
pub fn rank(matrix: &[Vec<f64>], tol: f64) -> usize {
    let rows = matrix.len();
    if rows == 0 {
        return 0;
    }
    let cols = matrix[0].len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return 0;
    }
    let threshold = tol * scale;
    let mut rank = 0;
    let mut row_used = vec![false; rows];
    let mut col_used = vec![false; cols];
    for _ in 0..rows.min(cols) {
        let mut best = (0, 0, 0.0_f64);
        for (i, row) in a.iter().enumerate() {
            if row_used[i] {
                continue;
            }
            for (j, v) in row.iter().enumerate() {
                if !col_used[j] && v.abs() > best.2 {
                    best = (i, j, v.abs());
                }
            }
        }
        let (pi, pj, mag) = best;
        if mag <= threshold {
            break;
        }
        row_used[pi] = true;
        col_used[pj] = true;
        rank += 1;
        let pivot_row = a[pi].clone();
        for (i, row) in a.iter_mut().enumerate() {
            if row_used[i] {
                continue;
            }
            let factor = row[pj] / pivot_row[pj];
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= factor * p;
            }
        }
    }
    rank
}

/// True iff the symmetric matrix admits a Cholesky factorisation with
/// strictly positive diagonal.
pub fn is_positive_definite(matrix: &[Vec<f64>]) -> bool {
    let n = matrix.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = matrix[i][j];
            s -= l[i][..j].iter().zip(&l[j][..j]).map(|(a, b)| a * b).sum::<f64>();
            if i == j {
                if s <= 0.0 || s.is_nan() {
                    return false;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&[vec![0.0]], 1e-9), 0);
        assert_eq!(rank(&[vec![1.0, 1.0]], 1e-9), 1);
        assert_eq!(rank(&[vec![1.0, 2.0], vec![2.0, 4.0]], 1e-9), 1);
        assert_eq!(rank(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]], 1e-9), 2);
        assert_eq!(rank(&[vec![1.0, 0.0], vec![0.0, 1e-12]], 1e-9), 1);
    }

    #[test]
    fn definiteness() {
        assert!(is_positive_definite(&[vec![2.0, 1.0], vec![1.0, 2.0]]));
        assert!(!is_positive_definite(&[vec![1.0, 2.0], vec![2.0, 1.0]]));
        assert!(!is_positive_definite(&[vec![0.0]]));
        assert!(is_positive_definite(&[]));
    }
}
