//! Computational laboratory for two-way wiretap channels.
//!
//! Rates, information quantities and leakages are in nats throughout.

pub mod channel;
pub mod error;
pub mod exponents;
pub mod measures;
pub mod regions;
pub mod serde_num;
pub mod simulator;
pub mod typelib;

pub use channel::{
    AdditiveChannelSpec, AdditiveCoeffs, ChannelTensor, CostSpec, GaussianChannelSpec, GaussianCoeffs, JointInputLaw,
};
pub use error::{Error, Result};
pub use measures::{CondPmf, JointPmf, OrderParam, Pmf, SibsonOrder};
pub use exponents::{ExponentReport, FactorMode, RateTuple};
pub use regions::{LinearSystem, RateRegion2D, SecrecyFlavor};
pub use simulator::{Codebook, CodebookParams, InputMode, Leakage, SimResult, VerifyMethod, VerifyReport};
pub use typelib::{JointType, TypeVector};
