//! Quantitative checks: the positivity functional for `C`, constants of the
//! exponential estimates, decay fits and randomized input probes.

mod estimate;
mod fit;
mod positivity;
mod probe;

pub use estimate::{
    decay_exponent, estimate_k, exponential_constants, gronwall_bound, induction_bound,
    input_response_bound, theorem2_estimate, theorem3_constants, theorem3_estimate,
    verify_exponential_estimate, EstimateReport, EstimateTarget, KEstimate, Provenance,
    VerifyReport,
};
pub use fit::{fit_decay, DecayFit, FIT_FLOOR};
pub use positivity::{positivity_functional, positivity_test, PositivityReport, INV_E};
pub use probe::{input_probe, InputClass, ProbeResult, TrialStats};
