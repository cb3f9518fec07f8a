//! Nonbinary polar codes over GF(2^r): successive-cancellation list
//! decoding, split-tree list decoding with sub-path skimming, hardware
//! latency models and a Monte-Carlo frame-error-rate harness.

pub mod channel;
pub mod error;
pub mod fer;
pub mod gf;
pub mod llrv;
pub mod nbscl;
pub mod polar;
pub mod sorter;
pub mod split;
pub mod timing;
mod trellis;

pub use error::{Error, Result};
pub use gf::{GfContext, GfElement};
pub use llrv::{KernelCoeffs, Llrv, Precision, Quantizer};
pub use polar::{CodeSpec, SplitSpec};
pub use trellis::DecoderPath;
