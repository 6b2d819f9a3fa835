//! Dense Gaussian elimination over any [`Scalar`].

use crate::scalar::Scalar;

fn magnitude<T: Scalar>(x: &T) -> f64 {
    x.to_f64().abs()
}

/// Solves `a · x = b` for an `m × k` system with `m ≥ k`.
///
/// Returns `None` when the columns are linearly dependent or the system is
/// inconsistent. Exact for rationals; pivots by magnitude for floats.
pub fn solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let m = a.len();
    let k = a.first().map_or(0, Vec::len);
    if m < k {
        return None;
    }
    for col in 0..k {
        let pivot = (col..m)
            .filter(|&r| !a[r][col].is_negligible())
            .max_by(|&x, &y| magnitude(&a[x][col]).total_cmp(&magnitude(&a[y][col])))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col].clone();
        for j in col..k {
            a[col][j] = a[col][j].clone() / p.clone();
        }
        b[col] = b[col].clone() / p;
        for r in 0..m {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for j in col..k {
                let delta = factor.clone() * a[col][j].clone();
                a[r][j] = a[r][j].clone() - delta;
            }
            let delta = factor * b[col].clone();
            b[r] = b[r].clone() - delta;
        }
    }
    // Rows beyond the pivots must be satisfied already.
    let residual_ok = (k..m).all(|r| {
        if T::EXACT {
            b[r].is_zero()
        } else {
            b[r].to_f64().abs() <= 1e-9
        }
    });
    if !residual_ok {
        return None;
    }
    b.truncate(k);
    Some(b)
}
