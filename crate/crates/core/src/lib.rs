//! Statistical complexity of SAR intensity data.
//!
//! The G0 and Gamma intensity laws, maximum-likelihood fitting of G0,
//! entropy and Hellinger distance by adaptive quadrature, sliding-window
//! feature maps, raster I/O with false-colour rendering, and synthetic scenes.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod error;
pub mod estimation;
pub mod features;
pub mod information;
pub mod raster;
pub mod simulate;
pub mod specfun;

pub use distributions::{G0Params, GammaParams, LogDensity};
pub use error::{Error, Result};
pub use estimation::{fit_g0_mle, Fallback, FitResult, SolverConfig};
pub use features::{
    extract_features, vector_gsc, Boundary, FeatureConfig, FeatureKind, FeatureMaps, Grid,
    IntensityChannel, Polarization, WindowSpec,
};
pub use information::{
    hellinger_distance, shannon_entropy, EntropyConvention, InformationMeasures,
};
pub use raster::{BandStack, DType, RasterHeader, RgbImage};
pub use simulate::{default_scene, render_phantom, Scene, ScenePhantom};
pub use specfun::QuadratureConfig;
