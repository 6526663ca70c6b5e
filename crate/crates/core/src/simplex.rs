//! Euclidean projection onto the probability simplex shrunk by `delta`,
//! `{x : x_i >= delta, sum x_i = 1}`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Projects `z` onto the `delta`-shrunken simplex.
///
/// Sort-and-threshold: with `u` the entries of `z` in descending order and
/// `r = 1 - delta * K`, take the largest `j` such that
/// `u_j + (r - sum_{i<=j} u_i) / j > 0`, set `lambda = (r - sum_{i<=j} u_i) / j`
/// and return `max(z_i + lambda, 0) + delta`.
pub fn project_shrunken_simplex(z: &[f64], delta: f64) -> Result<Vec<f64>> {
    let mut x = z.to_vec();
    project_in_place(&mut x, delta)?;
    Ok(x)
}

pub fn project_in_place(x: &mut [f64], delta: f64) -> Result<()> {
    let k = x.len();
    if k == 0 {
        return Err(Error::InvalidParameter("cannot project an empty vector".into()));
    }
    if !(delta >= 0.0 && delta * (k as f64) < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "shrink factor {delta} must satisfy 0 <= delta < 1/{k}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            context: "simplex projection input",
            pair: None,
        });
    }
    let lambda = threshold(x, delta, &mut Vec::with_capacity(k));
    for v in x.iter_mut() {
        *v = (*v + lambda).max(0.0) + delta;
    }
    Ok(())
}

/// Projection without validation, reusing `scratch` for the sort buffer.
/// Callers guarantee finite input and `0 <= delta < 1/K`.
pub(crate) fn project_unchecked(x: &mut [f64], delta: f64, scratch: &mut Vec<f64>) {
    let lambda = threshold(x, delta, scratch);
    for v in x.iter_mut() {
        *v = (*v + lambda).max(0.0) + delta;
    }
}

fn threshold(z: &[f64], delta: f64, sorted: &mut Vec<f64>) -> f64 {
    let k = z.len();
    sorted.clear();
    sorted.extend_from_slice(z);
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let radius = 1.0 - delta * k as f64;
    let mut cumsum = 0.0;
    let mut lambda = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let cand = (radius - cumsum) / (j + 1) as f64;
        if u + cand > 0.0 {
            lambda = cand;
        }
    }
    lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_entries_split_evenly() {
        let x = project_shrunken_simplex(&[0.6, 0.6], 0.0).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn vertex_is_pulled_to_shrunken_boundary() {
        let x = project_shrunken_simplex(&[1.0, 0.0], 0.1).unwrap();
        assert!((x[0] - 0.9).abs() < 1e-15, "{x:?}");
        assert!((x[1] - 0.1).abs() < 1e-15, "{x:?}");
    }

    #[test]
    fn feasible_point_is_fixed() {
        let z = [0.2, 0.3, 0.15, 0.35];
        let x = project_shrunken_simplex(&z, 0.1).unwrap();
        for (a, b) in x.iter().zip(z) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_coordinate() {
        assert_eq!(project_shrunken_simplex(&[-3.0], 0.5).unwrap(), [1.0]);
    }

    #[test]
    fn rejects_infeasible_delta() {
        assert!(project_shrunken_simplex(&[0.5, 0.5], 0.5).is_err());
        assert!(project_shrunken_simplex(&[0.5, 0.5], -0.1).is_err());
        assert!(project_shrunken_simplex(&[], 0.0).is_err());
    }
}
