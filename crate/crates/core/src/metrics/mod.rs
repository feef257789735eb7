//! Tracking and search quality metrics.

pub mod gospa;
pub mod summary;

pub use gospa::{gospa, gospa_assign, gospa_switching, GospaResult};
pub use summary::{episode_summary, percentile, EpisodeSummary, Stats};
