use super::{CpcpProblem, EpigraphIterate, KahanSum, LowRankIterate, SparseIterate};
use crate::error::Result;

/// ½ Σ_{(i,j)∈Ω} (L_ij + S_ij − M_ij)², summed elementwise.
pub fn data_fit(problem: &CpcpProblem, low_rank: &LowRankIterate, sparse: &SparseIterate) -> f64 {
    let l = low_rank.masked_entries(problem.mask());
    let mut acc = KahanSum::new();
    for p in 0..l.len() {
        let r = l.0[p] + sparse.values.0[p] - problem.observed().0[p];
        acc.add(r * r);
    }
    0.5 * acc.value()
}

/// Objective of the norm-constrained problem, l(L, S).
pub fn eval_constrained(problem: &CpcpProblem, low_rank: &LowRankIterate, sparse: &SparseIterate) -> Result<f64> {
    problem.radii()?;
    Ok(data_fit(problem, low_rank, sparse))
}

/// f(L, S) = ½‖P_Ω[L+S−M]‖² + λ_L‖L‖_* + λ_S‖S‖_1 with an exact nuclear norm.
pub fn eval_penalized(problem: &CpcpProblem, low_rank: &LowRankIterate, sparse: &SparseIterate) -> Result<f64> {
    let (lambda_l, lambda_s) = problem.weights()?;
    Ok(data_fit(problem, low_rank, sparse) + lambda_l * low_rank.nuclear_norm() + lambda_s * sparse.l1())
}

/// g(L, S, t_L, t_S) = ½‖P_Ω[L+S−M]‖² + λ_L t_L + λ_S t_S.
pub fn eval_epigraph(problem: &CpcpProblem, x: &EpigraphIterate) -> Result<f64> {
    let (lambda_l, lambda_s) = problem.weights()?;
    Ok(data_fit(problem, &x.low_rank, &x.sparse) + lambda_l * x.t_l + lambda_s * x.t_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{jacobi_svd, normalize};
    use crate::model::{MaskedValues, ObservationMask, Residual};
    use crate::rng::Stream;
    use ndarray::Array2;

    fn random_problem(m: usize, n: usize, seed: u64, penalized: bool) -> (CpcpProblem, Array2<f64>) {
        let mut s = Stream::new(seed);
        let dense = Array2::from_shape_fn((m, n), |_| s.normal());
        let entries: Vec<_> = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| (i + 2 * j) % 3 != 0)
            .collect();
        let mask = ObservationMask::new(m, n, entries).unwrap();
        let form = if penalized {
            crate::model::Formulation::Penalized { lambda_l: 0.7, lambda_s: 0.2 }
        } else {
            crate::model::Formulation::Constrained { tau_l: 1.0, tau_s: 1.0 }
        };
        (CpcpProblem::from_dense(mask, &dense, form).unwrap(), dense)
    }

    fn random_low_rank(m: usize, n: usize, rank: usize, s: &mut Stream) -> LowRankIterate {
        let mut l = LowRankIterate::zeros(m, n);
        for _ in 0..rank {
            let mut u: Vec<f64> = (0..m).map(|_| s.normal()).collect();
            let mut v: Vec<f64> = (0..n).map(|_| s.normal()).collect();
            normalize(&mut u);
            normalize(&mut v);
            l.convex_step(0.5, 3.0 * s.normal(), &u, &v);
        }
        l
    }

    #[test]
    fn zero_iterate_gives_half_data_norm() {
        let (p, _) = random_problem(4, 5, 1, false);
        let l = LowRankIterate::zeros(4, 5);
        let s = SparseIterate::zeros(p.mask());
        let v = eval_constrained(&p, &l, &s).unwrap();
        assert!((v - 0.5 * p.observed().norm_sq()).abs() < 1e-14);
        assert!(eval_penalized(&p, &l, &s).is_err());
    }

    #[test]
    fn exact_fit_on_full_mask_is_zero() {
        let mask = ObservationMask::full(3, 3).unwrap();
        let obs = MaskedValues((0..9).map(|x| x as f64 - 4.0).collect());
        let p = CpcpProblem::constrained(mask.clone(), obs.clone(), 1.0, 1.0).unwrap();
        let l = LowRankIterate::zeros(3, 3);
        let s = SparseIterate { values: obs };
        assert_eq!(eval_constrained(&p, &l, &s).unwrap(), 0.0);
    }

    #[test]
    fn constrained_matches_elementwise_sum() {
        let mut rng = Stream::new(2);
        let (p, dense) = random_problem(3, 3, 2, false);
        let l = random_low_rank(3, 3, 2, &mut rng);
        let mut s = SparseIterate::zeros(p.mask());
        s.values.0[1] = 0.7;
        let ld = l.to_dense();
        let sd = s.to_dense(p.mask());
        let mut oracle = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                if p.mask().position(i, j).is_some() {
                    let r = ld[[i, j]] + sd[[i, j]] - dense[[i, j]];
                    oracle += 0.5 * r * r;
                }
            }
        }
        let v = eval_constrained(&p, &l, &s).unwrap();
        assert!((v - oracle).abs() < 1e-13 * oracle.max(1.0));
    }

    #[test]
    fn penalized_matches_dense_svd_oracle() {
        let mut rng = Stream::new(3);
        let (p, dense) = random_problem(4, 4, 3, true);
        let l = random_low_rank(4, 4, 2, &mut rng);
        let mut s = SparseIterate::zeros(p.mask());
        for q in [0, 3, 5] {
            s.values.0[q] = rng.normal();
        }
        let ld = l.to_dense();
        let nuc: f64 = jacobi_svd(ld.view()).s.iter().sum();
        let sd = s.to_dense(p.mask());
        let mut fit = 0.0;
        for (i, j) in p.mask().iter() {
            let r = ld[[i, j]] + sd[[i, j]] - dense[[i, j]];
            fit += 0.5 * r * r;
        }
        let l1: f64 = sd.iter().map(|x| x.abs()).sum();
        let oracle = fit + 0.7 * nuc + 0.2 * l1;
        let v = eval_penalized(&p, &l, &s).unwrap();
        assert!((v - oracle).abs() < 1e-12 * oracle);
    }

    #[test]
    fn epigraph_tight_equals_penalized_and_dominates_otherwise() {
        let mut rng = Stream::new(4);
        for trial in 0..100 {
            let (p, _) = random_problem(4, 3, 100 + trial, true);
            let l = random_low_rank(4, 3, 1 + (trial as usize % 3), &mut rng);
            let mut s = SparseIterate::zeros(p.mask());
            s.values.0[0] = rng.normal();
            let f = eval_penalized(&p, &l, &s).unwrap();
            let mut x = EpigraphIterate {
                t_l: l.nuclear_norm(),
                t_s: s.l1(),
                low_rank: l,
                sparse: s,
            };
            let g = eval_epigraph(&p, &x).unwrap();
            assert!((g - f).abs() <= 1e-10 * f.abs().max(1.0));
            x.t_l += 0.5;
            assert!(x.is_feasible());
            assert!(eval_epigraph(&p, &x).unwrap() >= f);
        }
    }

    #[test]
    fn zero_epigraph_point() {
        let (p, _) = random_problem(3, 4, 5, true);
        let x = EpigraphIterate::zeros(p.mask());
        let g = eval_epigraph(&p, &x).unwrap();
        assert!((g - 0.5 * p.observed().norm_sq()).abs() < 1e-14);
    }

    #[test]
    fn gradient_is_two_lipschitz() {
        // ∇l(L,S) = (R, R) with R = P_Ω[L+S−M]
        let mut rng = Stream::new(6);
        let (p, _) = random_problem(5, 4, 6, false);
        for _ in 0..100 {
            let l1 = random_low_rank(5, 4, 2, &mut rng);
            let l2 = random_low_rank(5, 4, 2, &mut rng);
            let mut s1 = SparseIterate::zeros(p.mask());
            let mut s2 = SparseIterate::zeros(p.mask());
            for q in 0..p.mask().len() {
                s1.values.0[q] = rng.normal();
                s2.values.0[q] = rng.normal();
            }
            let r1 = Residual::from_scratch(&p, &l1, &s1).values;
            let r2 = Residual::from_scratch(&p, &l2, &s2).values;
            let mut dr = r1.clone();
            dr.axpy(-1.0, &r2);
            let grad_diff = (2.0 * dr.norm_sq()).sqrt();
            let dl = &l1.to_dense() - &l2.to_dense();
            let ds = &s1.to_dense(p.mask()) - &s2.to_dense(p.mask());
            let x_diff = (dl.iter().map(|x| x * x).sum::<f64>() + ds.iter().map(|x| x * x).sum::<f64>()).sqrt();
            assert!(grad_diff <= 2.0 * x_diff + 1e-12);
        }
    }
}
