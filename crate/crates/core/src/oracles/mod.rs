//! Linear minimization oracles over the nuclear-norm and ℓ1 balls, the
//! ℓ1-ball projection, soft thresholding, and singular value thresholding.

mod lmo;
mod power;
mod prox;
mod svt;

pub use lmo::{lmo_l1, lmo_nuclear, L1Lmo, NuclearLmo, OneSparseDirection, RankOneDirection};
pub use power::{leading_singular_pair, leading_singular_pair_from, PowerOptions, SingularTriplet};
pub use prox::{project_l1, shrink, soft_threshold, soft_threshold_in_place};
pub use svt::{initial_sv, singular_value_threshold, singular_value_threshold_warm, sv_heuristic, SvtOutput};
