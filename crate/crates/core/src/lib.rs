//! Behavioral simulator for analog joint source-channel coding with a
//! single MOSFET as the mapping curve.
//!
//! One sensor voltage is quantized by a variable-step precircuit and drives
//! the gate; the other is applied as Vds. The transmitted drain current is
//! decoded at the receiver by matching the channel-length-modulation slope
//! of candidate curves against consecutive samples.
//!
//! ```
//! use ajscc::{device::MosfetParams, precircuit::QuantizerConfig, receiver, transmitter};
//!
//! let p = MosfetParams::nmos_180nm();
//! let q = QuantizerConfig::with_phi(0.5).unwrap();
//! let a = transmitter::encode(transmitter::SensorPair { y_raw: 2.1, x_raw: 5.0 }, &q, &p).unwrap();
//! let b = transmitter::encode(transmitter::SensorPair { y_raw: 2.1, x_raw: 5.1 }, &q, &p).unwrap();
//! let dec = receiver::DecoderConfig::new(q.levels(), p, (4.5, 10.0)).unwrap();
//! let out = receiver::decode_pair(&dec, a.ids, b.ids, true).unwrap();
//! assert_eq!(out.vgs_hat, 2.0);
//! ```

pub mod device;
pub mod error;
pub mod experiments;
pub mod multimos;
pub mod precircuit;
pub mod receiver;
pub mod transmitter;

pub use error::{Error, Result};
