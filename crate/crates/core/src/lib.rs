//! Weighted min-sum and attenuated max-product decoding of regular LDPC codes,
//! with consistency checks, LP/ML optimality certificates, exact oracles,
//! density evolution and Monte Carlo campaigns.

pub mod certify;
pub mod channel;
pub mod de;
pub mod msgpass;
pub mod opt;
pub mod sim;
pub mod tanner;

pub use certify::{certify_ml, Certificate, CertKind, ConsistencyReport, DualWitness, Reason};
pub use channel::{ChannelSpec, LlrVector};
pub use msgpass::{run, AmpMessages, DecodeResult, DecoderConfig, Status, WmsMessages};
pub use tanner::{Codeword, TannerGraph};
