//! Stability analysis for hybrid continuous-discrete fractional-order
//! multidimensional Roesser systems.
//!
//! The crate synthesizes and verifies LMI stability certificates and checks
//! their verdicts against two independent oracles: a determinant scan over
//! the stability region and a Grünwald–Letnikov time-domain simulation.

pub mod cli;
pub mod error;
pub mod format;
pub mod lmi;
pub mod model;
pub mod oracle;
pub mod region;
pub mod sdpcore;

pub use error::{Error, Result};
pub use lmi::{CertificateForm, StabilityCertificate, Tolerances, VerificationReport};
pub use model::{ComplexPoint, HybridRoesserModel};
pub use region::RegionDescriptor;
