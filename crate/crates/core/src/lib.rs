//! Finite approximations for partially observed Markov decision processes
//! with continuous state and observation spaces.
//!
//! The pipeline: quantize the hidden state box and the observation box
//! ([`quantize`]), build a finite surrogate HMM by averaging the true kernels
//! over quantization bins ([`discretize`]), then control it either through a
//! belief MDP on a simplex grid ([`beliefmdp`]) or through a finite-window MDP
//! whose states are the last N+1 discrete observations and N actions
//! ([`window`]). Both finite models can also be learned from interaction with
//! tabular Q-learning ([`learn`]). The [`stability`] module computes every
//! quantitative diagnostic the approximation theory rests on: Dobrushin
//! coefficients, mixing constants, Hilbert-metric contraction rates, filter
//! stability estimates, and the closed-form performance bounds. [`sim`]
//! evaluates any controller on the true model by seeded Monte Carlo.
//!
//! Everything is deterministic given the seeds passed in; parallel code
//! derives per-task seeds and reduces in a fixed order, so results do not
//! depend on worker count.

pub mod beliefmdp;
pub mod discretize;
pub mod error;
pub mod learn;
pub mod model;
pub mod quantize;
pub mod seeds;
pub mod sim;
pub mod stability;
pub mod window;

pub use error::{Error, Result};
