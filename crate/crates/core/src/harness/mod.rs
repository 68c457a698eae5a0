//! Declarative Monte Carlo campaigns.
//!
//! A campaign is one JSON document ([`ExperimentSpec`]); [`run_experiment`]
//! turns it into a [`Report`] that [`write_report`] stores as CSV or JSON.
//! Reports are a pure function of the spec: the thread count never changes
//! a byte.

mod report;
mod run;
mod spec;
mod verify;

pub use report::{load_cached, report_file_name, write_report, Report, ReportRow, TwoArmSummary, CSV_HEADER};
pub use run::{campaign_sites, clt_functional, psi_functional, run_experiment, BOOTSTRAP_RESAMPLES};
pub use spec::{
    emit_spec, parse_spec, ExperimentKind, ExperimentSpec, OutputFormat, PsiTarget, RadiusKind, SpecError,
    MIN_CAMPAIGN_REPLICAS,
};
pub use verify::{run_invariants, InvariantOutcome};

#[cfg(test)]
mod tests;
