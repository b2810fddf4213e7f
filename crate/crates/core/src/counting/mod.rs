//! Geodesic segment counting, counting integrals, wavefront length, and
//! growth-rate fitting.

pub mod area;
pub mod count;
pub mod front;
pub mod growth;
pub mod integral;
pub mod shoot;

pub use area::AreaSampler;
pub use count::{count_segments, count_segments_bundle, CountQuery, CountResult, Segment};
pub use front::{front_length, FrontCurve};
pub use growth::{growth_rate, growth_rate_seeded, GrowthFit, GrowthSeries};
pub use integral::{
    double_integral_count, integral_count, integral_count_series, DoubleIntegral, IntegralCount,
};
pub use shoot::{ShotBundle, SourcePoint};
