//! Gaussian stationary processes specified by their spectral measures:
//! covariance kernels, seeded path sampling, gap-probability estimation and
//! numerical checks of the exponential bound constructions.

pub mod bounds;
pub mod covariance;
pub mod error;
pub mod measure;
pub mod normal;
pub mod persistence;
pub mod report;
pub mod rng;
pub mod sampler;
pub mod special;
pub mod verify;

pub use covariance::{covariance, gram, CovarianceKernel, GramMatrix};
pub use error::{Error, Result};
pub use persistence::{EstimateMethod, HoleEstimate};
pub use measure::{Atom, Band, DualDomain, OriginRegularity, SpectralMeasure, SymmetricInterval, Tabulated};
