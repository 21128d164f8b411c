//! Prediction functions for the Berry-Esseen, Edgeworth, moderate deviation
//! and local limit statements, empirical counterparts, and the harness that
//! compares them.

mod empirical;
mod predict;
mod verify;

pub use empirical::{
    interval_estimate, rate_fit, sup_gap, tail_estimate, target_cdf, weighted_target_cdf, y_grid,
    EmpiricalTargetCdf, Tail,
};
pub use predict::{edgeworth_prediction, llt_prediction, md_prediction, normal_cdf, normal_pdf, normal_prediction};
pub use verify::{
    cdf_grid, verify_be, verify_edgeworth, verify_llt, verify_md, CriterionResult, LltSettings, MdSettings, Model,
    ReportRow, Theorem, VerificationReport, REPORT_VERSION,
};
