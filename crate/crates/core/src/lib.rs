//! Scalar Lévy channels, their natural estimation losses, and numerical
//! certification of the information–estimation identities that relate them.
//!
//! The entry points are [`ChannelModel`] (Gaussian, Poisson, Gamma, negative
//! binomial, or a user-supplied infinitely divisible family),
//! [`DiscretePrior`], the loss kernels in [`loss`], the information
//! functionals in [`info`], and the identity checks in [`harness`].

// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod harness;
pub mod info;
pub mod loss;
pub mod mc;
pub mod posterior;
pub mod quad;

pub use channel::{ChannelModel, GammaAmplified, Interval, JumpMeasure, LevyTriple, OutputKind};
pub use error::{Error, Result};
pub use loss::{Reconstruction, levy_loss, point_mass_reconstruction, representative_loss};
pub use posterior::DiscretePrior;
pub use quad::QuadResult;
