//! Bandwidth-limited waveforms and waveform files.

mod filter;
pub mod io;

pub use filter::{evaluate_filtered, low_pass_filter, Evaluation, FilteredWaveform, DEFAULT_OVERSAMPLE};
