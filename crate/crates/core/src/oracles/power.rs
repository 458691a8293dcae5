use crate::linalg::{norm2, normalize, LinearOperator};
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerOptions {
    /// Converged once |σ_t − σ_{t−1}| ≤ tol·max(1, σ_t).
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for PowerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 1000,
            seed: 0,
        }
    }
}

/// Leading singular value with its unit singular vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iter` was exhausted; the triplet is then the last iterate.
    pub converged: bool,
    /// The operator annihilated every probe; `sigma` is 0 and u, v are arbitrary.
    pub zero_operator: bool,
}

/// Power iteration on AᵀA from a seeded random start.
pub fn leading_singular_pair<A: LinearOperator + ?Sized>(op: &A, opts: &PowerOptions) -> SingularTriplet {
    leading_singular_pair_from(op, None, opts)
}

/// Power iteration on AᵀA, optionally warm-started from a right vector.
///
/// The iteration alternates u ← Av/‖Av‖, v ← Aᵀu/‖Aᵀu‖ and tracks
/// σ_t = ‖A v_t‖. On return `u = Av/σ` exactly, so ‖Av − σu‖ = 0 up to
/// rounding.
pub fn leading_singular_pair_from<A: LinearOperator + ?Sized>(
    op: &A,
    start: Option<&[f64]>,
    opts: &PowerOptions,
) -> SingularTriplet {
    let (m, n) = (op.nrows(), op.ncols());
    let mut rng = Stream::substream(opts.seed, stream::POWER_START);
    let random_start = |rng: &mut Stream| {
        let mut v: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        normalize(&mut v);
        v
    };

    let mut v = match start {
        Some(s) if s.len() == n && norm2(s) > 0.0 => {
            let mut v = s.to_vec();
            normalize(&mut v);
            v
        }
        _ => random_start(&mut rng),
    };
    let mut w = vec![0.0; m];
    op.apply(&v, &mut w);
    let mut sigma = norm2(&w);
    if sigma == 0.0 && start.is_some() {
        v = random_start(&mut rng);
        op.apply(&v, &mut w);
        sigma = norm2(&w);
    }
    if sigma == 0.0 {
        let mut u = vec![0.0; m];
        if m > 0 {
            u[0] = 1.0;
        }
        return SingularTriplet {
            sigma: 0.0,
            u,
            v,
            iterations: 0,
            converged: true,
            zero_operator: true,
        };
    }

    let mut z = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        for x in w.iter_mut() {
            *x /= sigma;
        }
        op.apply_transpose(&w, &mut z);
        let nz = norm2(&z);
        if nz == 0.0 {
            // u is orthogonal to the range; cannot happen for u ∈ range(A)
            // except through underflow.
            op.apply(&v, &mut w);
            break;
        }
        for (vi, zi) in v.iter_mut().zip(&z) {
            *vi = zi / nz;
        }
        op.apply(&v, &mut w);
        let next = norm2(&w);
        let done = (next - sigma).abs() <= opts.tol * next.max(1.0);
        sigma = next;
        if done {
            converged = true;
            break;
        }
    }
    let mut u = w;
    for x in u.iter_mut() {
        *x /= sigma;
    }
    SingularTriplet {
        sigma,
        u,
        v,
        iterations,
        converged,
        zero_operator: false,
    }
}
