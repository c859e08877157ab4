//! Information- and estimation-theoretic functionals of a model seen through
//! the filter `Z_γ = √γ·Y + N`: conditional MMSEs, mutual informations by
//! I-MMSE integration, non-Gaussianness, maximal correlations and a lower
//! bound on the strong data-processing constant.
//!
//! All informations and divergences are in nats.

pub mod correlation;
pub mod gaussianness;
pub mod mmse;
pub mod sstar;

pub use correlation::{
    ace, delta_coeff, e_var2_y_x, eta_sq, eta_sq_z, maximal_correlation, maximal_correlation_xy, mmse_y_x,
    AceResult, PairCorrelation,
};
pub use gaussianness::{
    cond_non_gaussianness, cond_output_entropy, decomposition, decomposition_residual, marginal_non_gaussianness, non_gaussianness,
    Decomposition,
};
pub use mmse::{info_point, mi_x_z, mi_y_z, mmse_pair, output_entropy, Context, InfoPoint, MmsePair};
pub use sstar::s_star_lower_bound;
