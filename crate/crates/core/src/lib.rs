//! Low-rank plus sparse recovery from partially observed matrices.
//!
//! The crate solves the compressive principal component pursuit problem in
//! its norm-constrained form
//!
//! ```text
//! min ½‖P_Ω[L + S − M]‖²_F   s.t.  ‖L‖_* ≤ τ_L,  ‖S‖_1 ≤ τ_S
//! ```
//!
//! and its penalized form
//!
//! ```text
//! min ½‖P_Ω[L + S − M]‖²_F + λ_L‖L‖_* + λ_S‖S‖_1
//! ```
//!
//! with Frank-Wolfe type methods whose iterations only touch the observed
//! entries plus one leading singular pair ([`fw`], [`fwt`]), and with the
//! proximal-gradient baselines ISTA / FISTA ([`baselines`]).
//!
//! ```no_run
//! use cpcp::synth::{gen_synthetic, SyntheticSpec};
//! use cpcp::fwt::{solve_fwt, PenalizedConfig};
//! use cpcp::model::CpcpProblem;
//!
//! let truth = gen_synthetic(&SyntheticSpec::low_noise(200, 200, 7)).unwrap();
//! let norm = truth.observed.norm();
//! let problem = CpcpProblem::penalized(
//!     truth.mask.clone(),
//!     truth.observed.clone(),
//!     0.005 * norm,
//!     0.005 * norm / 200f64.sqrt(),
//! )
//! .unwrap();
//! let config = PenalizedConfig::new(0.005 * norm, 0.005 * norm / 200f64.sqrt());
//! let solution = solve_fwt(&problem, &config).unwrap();
//! println!("objective {}", solution.trace.last().unwrap().objective);
//! ```

pub mod baselines;
pub mod bench;
pub mod error;
pub mod fw;
pub mod fwt;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracles;
pub mod rng;
pub mod synth;

pub use error::{CpcpError, Result};
