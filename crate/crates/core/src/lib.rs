//! Behavioral simulator of a hybrid memristor/CMOS prototyping die.
//!
//! The die couples an array of hafnium-oxide memristors, arranged as 2T2R
//! complementary cells, with two kinds of periphery:
//!
//! - a digital mode (decoders, level shifters, precharge sense amplifiers
//!   with an XNOR logic-in-memory read), see [`digital`];
//! - an analog mode where shift registers route every word, bit and source
//!   line to ground or to one of two pads, see [`analog`].
//!
//! [`die::Die`] owns the whole simulated chip and enforces the mode
//! exclusivity between the two. [`experiments`] holds the characterization
//! recipes (progressive RESET, endurance, endurance versus programming
//! conditions, bit error rate) and [`protocol`] exposes everything through a
//! line-oriented text protocol emulating the bench microcontroller.

pub mod analog;
pub mod array;
pub mod config;
pub mod device;
pub mod die;
pub mod digital;
pub mod error;
pub mod experiments;
pub mod protocol;
pub mod rng;

pub use config::SimConfig;
pub use die::{Die, Mode};
pub use error::{Error, Result};
pub use rng::SimRng;
