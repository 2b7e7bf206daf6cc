//! Cascade-source localization on `Z^d`.
//!
//! A cascade starts at an unknown vertex and grows as an L1 ball, one unit per
//! step. Every vertex emits an i.i.d. signal each step, drawn from `Q1` if it
//! is infected and `Q0` otherwise. [`posterior::PosteriorState`] tracks the
//! Bayes posterior over a uniform prior on a ball of radius `k`, and
//! [`stopping::StoppingRule`] decides when to stop observing, trading squared
//! estimation error against the number of infected vertices.
//!
//! ```
//! use cascade_core::{ChannelPair, Experiment, StoppingRule, SumPath};
//!
//! let ch = ChannelPair::gaussian(2.0).unwrap();
//! let exp = Experiment::new(1, 20, ch, StoppingRule::TPlus, 16, SumPath::Direct).unwrap();
//! let rec = exp.run_trial(0, 42, None).unwrap();
//! assert!(rec.stop_time <= 16);
//! ```

pub mod cascade_sim;
pub mod channels;
pub mod config;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod posterior;
pub mod stopping;

pub use cascade_sim::{Experiment, ObservationFrame, TrialObserver, TrialStreams, WorldState};
pub use channels::{ChannelMoments, ChannelPair, ChannelSpec, Signal};
pub use config::ExperimentConfig;
pub use error::{Error, Result};
pub use harness::{BatchSummary, TrialRecord};
pub use lattice::{BallRegion, PriorSupport, Vertex};
pub use posterior::{PosteriorState, SumPath};
pub use stopping::{LookaheadEstimator, LookaheadParams, StoppingRule};
