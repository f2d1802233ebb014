//! Rate control: qp search against MSE or size targets, the stage ablation
//! harness, per-tensor bit allocation and report tables.

mod alloc;
mod report;
mod search;

pub use alloc::{allocate_bits, AllocationPlan, MIN_GLOBAL_BITS};
pub use report::{read_csv, read_json, write_csv, write_json, ReportRow, REPORT_COLUMNS};
pub use search::{
    ablation_report, codec_plane, search_qp_for_bits, search_qp_for_mse, stage_label, QpSearch, RateReport,
    SearchOutcome, Trial, SCAN_WINDOW,
};
