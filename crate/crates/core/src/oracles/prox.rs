use crate::error::{CpcpError, Result};

/// Scalar soft threshold sign(x)·max(|x| − λ, 0).
#[inline]
pub fn shrink(x: f64, lambda: f64) -> f64 {
    if x > lambda {
        x - lambda
    } else if x < -lambda {
        x + lambda
    } else {
        0.0
    }
}

fn check_nonneg(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(CpcpError::param(name, format!("must be finite and >= 0, got {x}")))
    }
}

/// Elementwise soft thresholding T_λ.
pub fn soft_threshold(y: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_nonneg("lambda", lambda)?;
    Ok(y.iter().map(|&x| shrink(x, lambda)).collect())
}

pub fn soft_threshold_in_place(y: &mut [f64], lambda: f64) -> Result<()> {
    check_nonneg("lambda", lambda)?;
    for x in y {
        *x = shrink(*x, lambda);
    }
    Ok(())
}

/// Euclidean projection onto {X : ‖X‖_1 ≤ β}.
///
/// The result is x = sign(y)·max(|y| − θ, 0) with θ > 0 solving
/// Σ max(|y_i| − θ, 0) = β. θ is found by repeated filtering: starting from
/// all magnitudes, set θ = (Σ_{active} μ − β)/|active| and drop every
/// magnitude ≤ θ until the active set stops shrinking. Each pass is O(n) and
/// θ never decreases, so the active set only shrinks. Inputs already inside
/// the ball are returned unchanged.
pub fn project_l1(y: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_nonneg("beta", beta)?;
    let l1: f64 = y.iter().map(|x| x.abs()).sum();
    if l1 <= beta {
        return Ok(y.to_vec());
    }
    if beta == 0.0 {
        return Ok(vec![0.0; y.len()]);
    }
    let mut active: Vec<f64> = y.iter().map(|x| x.abs()).filter(|&x| x > 0.0).collect();
    let mut sum = l1;
    let theta = loop {
        let theta = (sum - beta) / active.len() as f64;
        let before = active.len();
        active.retain(|&mu| mu > theta);
        if active.len() == before {
            break theta;
        }
        sum = active.iter().sum();
    };
    Ok(y.iter().map(|&x| shrink(x, theta)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    /// θ by bisection on Σ max(|y| − θ, 0) = β.
    fn bisection_theta(y: &[f64], beta: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, y.iter().fold(0.0f64, |m, x| m.max(x.abs())));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let s: f64 = y.iter().map(|x| (x.abs() - mid).max(0.0)).sum();
            if s > beta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn scalar_soft_threshold() {
        assert_eq!(shrink(3.0, 1.0), 2.0);
        assert_eq!(shrink(-0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(&[1.5, -2.0], 0.0).unwrap(), vec![1.5, -2.0]);
        assert!(soft_threshold(&[1.0], -0.1).is_err());
    }

    #[test]
    fn soft_threshold_minimizes_prox_objective() {
        let mut s = Stream::new(5);
        let lambda = 0.4;
        for _ in 0..25 {
            let y = 2.0 * s.normal();
            let x = shrink(y, lambda);
            let obj = |z: f64| 0.5 * (z - y).powi(2) + lambda * z.abs();
            // 1D grid of step 1e-4 over [-6, 6]
            let grid_min = (-60_000..=60_000)
                .map(|k| obj(k as f64 * 1e-4))
                .fold(f64::INFINITY, f64::min);
            assert!(obj(x) <= grid_min + 1e-12);
        }
    }

    #[test]
    fn l1_projection_example() {
        let x = project_l1(&[2.0, 1.0], 2.0).unwrap();
        let theta = bisection_theta(&[2.0, 1.0], 2.0);
        assert!((theta - 0.5).abs() < 1e-12);
        assert!((x[0] - 1.5).abs() < 1e-15);
        assert!((x[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn l1_projection_interior_and_zero_radius() {
        let y = vec![0.3, -0.2, 0.1];
        assert_eq!(project_l1(&y, 1.0).unwrap(), y);
        assert_eq!(project_l1(&y, 0.0).unwrap(), vec![0.0; 3]);
        assert!(project_l1(&y, -1.0).is_err());
    }

    #[test]
    fn l1_projection_matches_bisection_oracle() {
        let mut s = Stream::new(9);
        for _ in 0..50 {
            let y: Vec<f64> = (0..30).map(|_| 3.0 * s.normal()).collect();
            let beta = 10.0 * s.uniform();
            let x = project_l1(&y, beta).unwrap();
            let theta = bisection_theta(&y, beta);
            let err: f64 = y
                .iter()
                .zip(&x)
                .map(|(yi, xi)| (shrink(*yi, theta) - xi).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(err < 1e-10, "{err}");
        }
    }
}
