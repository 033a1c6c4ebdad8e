//! Research productivity of universities with and without gender-stratified
//! field scaling, and the statistics that compare the two rankings.

pub mod aggregation;
pub mod chart;
pub mod eligibility;
pub mod fss;
pub mod ingest;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod stats;
pub mod synth;
