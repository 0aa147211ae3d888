//! Regression manifolds for non-stationary bivariate extremes.
//!
//! The pipeline stationarizes each margin with a trend/seasonality
//! decomposition, maps the result to unit-Fréchet margins, fits a
//! Logistic-Normal spectral density by maximum likelihood and solves
//! conditional-quantile equations to obtain regression manifolds.

pub mod error;
pub mod evmodels;
pub mod io;
pub mod manifold;
pub mod margins;
pub mod optim;
pub mod rng;
pub mod selection;
pub mod special;
pub mod spectral;
pub mod tstationary;

pub use error::{Error, ErrorKind, Result};
pub use evmodels::{
    conditional_cdf, joint_cdf, log_density, sample_pairs, simulate_scenario, Cadence, EvModel,
    SimScenario,
};
pub use manifold::{
    build_manifold, conditional_quantile, logistic_approx_line, manifold_to_original_scale,
    predict_quantile_table, QuantileTable, RegressionManifold, ScaleTag, SolverConfig,
};
pub use margins::{
    block_maxima, fit_gev, gev_cdf, gev_quantile, to_unit_frechet, BlockPeriod, FrechetSample,
    GevParams, UniSeries,
};
pub use selection::{compare, fit_family, score, Family, ModelScore, Ranking};
pub use spectral::{
    extract_pseudo_angles, fit_sigma_mle, ln_density, sigma_posterior_band, GaussQuadRule,
    LnSpectral, PosteriorBand, PosteriorConfig, PseudoAngles, SigmaFit,
};
pub use tstationary::{
    destationarize_gev, restore_series, stationarize, TimeVaryingGev, TsConfig, TsDecomposition,
};
