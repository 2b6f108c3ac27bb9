//! Scenario driver and report persistence behind the `parlab` binary.

pub mod report;
pub mod scenario;
