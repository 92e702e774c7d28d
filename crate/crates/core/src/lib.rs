//! Conditional sampling of temporal point processes with sequential Monte
//! Carlo, a beam-search baseline, and a symbolic music model that runs as a
//! point process over unrolled event codes.
//!
//! A run takes a [`SequenceModel`], a [`ConstraintSet`] of required event
//! times `z` with flags `b` (whether free events may occur after each `z`),
//! and a [`StreamFactory`] seed:
//!
//! ```
//! use ppsmc::{conditional_sample, ConstraintSet, Poisson, SmcConfig, StreamFactory};
//!
//! let model = Poisson::new(3.0).unwrap();
//! let constraints = ConstraintSet::allowing_all(vec![0.5]).unwrap();
//! let result = conditional_sample(&model, &constraints, &SmcConfig::new(32), &StreamFactory::new(7)).unwrap();
//! assert!(result.survived);
//! assert!(result.samples.iter().all(|x| constraints.is_satisfied_by(x.as_slice())));
//! ```

pub mod beam;
pub mod error;
pub mod io;
pub mod models;
pub mod music;
pub mod oracle;
pub mod process;
pub mod rng;
pub mod smc;

pub use beam::{beam_search_sample, BeamConfig};
pub use error::{Error, Result};
pub use io::{ConstraintFile, Domain};
pub use models::{Poisson, UniformRenewal, WeibullRenewal};
pub use process::{
    conditional_intensity, hazard, log_probability, partition, restrict, sample_restricted,
    EventSequence, InterArrival, SequenceModel, DEFAULT_MAX_EVENTS,
};
pub use rng::StreamFactory;
pub use smc::{
    barrier_weight, conditional_sample, effective_sample_size, propose_segment,
    systematic_resample, systematic_resample_with_offset, BarrierDiagnostics, ConstraintSet,
    EnsembleResult, Particle, Segment, SmcConfig,
};
