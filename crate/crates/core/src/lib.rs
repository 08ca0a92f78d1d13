//! Partial penalized hypothesis tests for high-dimensional generalized linear
//! models.
//!
//! Linear hypotheses `C β_M = t` on a small set of tested coefficients `M` are
//! tested with Wald, score and likelihood-ratio statistics built from
//! folded-concave (SCAD / MCP) penalized estimators in which only the nuisance
//! coordinates are penalized. The estimators are computed with a two-step local
//! linear approximation (LLA) whose weighted-lasso subproblems are solved by an
//! ADMM that enforces the hypothesis constraints exactly.
//!
//! Module map:
//!
//! * [`glm`]: families, datasets and the negative average log-likelihood.
//! * [`penalty`]: SCAD, MCP and ℓ₁ penalties with an axiom audit.
//! * [`init`]: the ℓ₁-penalized initial estimator and its cross-validation.
//! * [`admm`]: equality-constrained weighted lasso solver.
//! * [`lla`]: reduced / full model LLA loops and GIC tuning.
//! * [`oracle`]: oracle estimators and the two-step convergence events.
//! * [`inference`]: the three statistics, dispersion, chi-square calibration
//!   and the end-to-end test pipeline.
//! * [`sim`]: the seeded Monte-Carlo engine.

pub mod admm;
pub mod error;
pub mod fit;
pub mod glm;
pub mod inference;
pub mod init;
pub mod linalg;
pub mod lla;
mod newton;
pub mod oracle;
pub mod penalty;
pub mod sim;

pub use error::{Error, Result};
pub use fit::FitResult;
pub use glm::{Dataset, GlmFamily};
pub use lla::HypothesisSpec;
pub use penalty::{PenaltyKind, PenaltySpec};
