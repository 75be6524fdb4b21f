//! Anticipatory visual search with dynamic neural fields.
//!
//! Six coupled `n × n` maps scan a scene of identical stimuli by saccades.
//! A saliency map feeds a winner-take-all focus map; the focused location
//! enters a two-map working memory; and a sigma-pi anticipation map
//! correlates memory with focus to predict where every memorized stimulus
//! will land after the saccade. That prediction, confirmed by the new
//! saliency, rebuilds the memory so no stimulus is fixated twice.
//!
//! Module map:
//! - [`field`]: grids, kernels, Euler steps
//! - [`network`]: map graph and synchronous ticks
//! - [`perception`]: synthetic scene and retina
//! - [`attention`]: bump readout, saccade decoding, switch
//! - [`memory`]: working-memory readouts
//! - [`anticipation`]: the correlation predictor
//! - [`scan`]: the experiment driver and frame dumps
//! - [`oracle`]: brute-force references

pub mod anticipation;
pub mod attention;
pub mod config;
pub mod dump;
pub mod error;
pub mod field;
pub mod memory;
pub mod network;
pub mod oracle;
pub mod perception;
pub mod scan;

pub use config::{NetworkSpec, SimConfig};
pub use error::{Error, Result};
pub use field::{Cell, ConvPath, DoGKernel, FieldGrid, GaussianKernel, StepParams, U_MAX};
pub use network::{build_network, MapId, Network, SettleCriterion, SettleOutcome};
pub use perception::{GazeState, Scene};
pub use scan::{run_batch, run_trial, BatchSummary, Outcome, ScanMetrics, TrialPhase};
