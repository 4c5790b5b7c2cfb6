//! Estimation and simulation toolkit for the hypothetical ("everyone
//! complies") treatment effect in two-arm non-inferiority trials with
//! all-or-nothing non-compliance.
//!
//! * [`numkernel`]: least squares, sandwich variance, logistic IRLS, 2SLS,
//!   a conjugate Gibbs sampler and seeded random streams.
//! * [`estimators`]: ITT, per-protocol, IPW, IV(interaction) and IV(Bayes),
//!   each returning an [`estimators::EstimateResult`] with a non-inferiority
//!   decision.
//! * [`dgp`]: the two simulation data-generating processes, the frozen
//!   scenario catalog and analytic ground truth.
//! * [`mcharness`]: replications, the IV outlier filter, metrics and study
//!   orchestration with CSV/JSON output.

pub mod numkernel;
pub mod estimators;
pub mod dgp;
pub mod mcharness;
