//! Minimum-time toolpaths for a 2D print head under per-cell temperature
//! bounds, posed as a mixed-integer linear program.

pub mod bench;
pub mod cli;
pub mod encoder;
pub mod milp;
pub mod oracle;
pub mod plan;
pub mod scenario;
pub mod solver;
pub mod thermal;
