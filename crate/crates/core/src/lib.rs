//! Distributional analysis of the Bellman error.
//!
//! Tabular Q-iteration started from Gumbel (or, approximately, Normal) noise produces
//! optimality gaps that are Gumbel distributed and Bellman errors that are close to Logistic.
//! This crate implements the pieces needed to check that claim numerically and to act on it:
//!
//! * [`dist`]: Gumbel / Logistic / Normal laws with sampling and maximum likelihood fits.
//! * [`gumbel`]: closed-form Gumbel algebra and the KL bound between a Gumbel law and its
//!   discounted contraction.
//! * [`tabular`]: deterministic finite MDPs, hard-max Q-iteration, error snapshots and the
//!   predicted Gumbel parameters of the optimality gap.
//! * [`normal_max`]: finite-N Gumbel approximation of the maximum of N standard Normals.
//! * [`order_stats`]: order-statistic expectations of the Logistic law and the sampling error
//!   of the expected empirical CDF.
//! * [`scaling`]: expected Bellman error as a function of a reward scaling ratio.
//! * [`loss`]: MSE and Logistic likelihood losses, gradients and the softmax policy formula.
//! * [`fit`]: KS statistic, histogram errors and family ranking.
//! * [`trainer`]: a small deterministic Q-learning harness comparing the two losses.
//! * [`cli`]: the `bellman` command line front end.

pub mod cli;
pub mod dist;
pub mod error;
pub mod fit;
pub mod gumbel;
pub mod loss;
pub mod normal_max;
pub mod order_stats;
pub mod quadrature;
pub mod rng;
pub mod scaling;
pub mod special;
pub mod tabular;
pub mod trainer;

pub use dist::{fit_mle, DistSpec, Family, SampleBatch};
pub use error::{Error, Result};
pub use fit::{ks_statistic, rank_families, FitOptions, FitReport, KsMode};
