//! Nearest neighbors, simplex projection and S-map forecasting over an
//! [`Embedding`](crate::timeseries::Embedding).

mod knn;
pub mod lstsq;
mod simplex;
mod skill;
mod smap;

pub use knn::{knn, Exclusion, NeighborSet};
pub use simplex::{simplex_predict, simplex_weights};
pub use skill::{pearson_rho, SkillReport};
pub use smap::{smap_predict, smap_single, SMapOutput, SMapParams};
