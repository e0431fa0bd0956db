//! Microscopic traffic simulation with a model-agnostic lane-changing relaxation model.
//!
//! The math core ([`cf_models`], [`relaxation`], [`analysis`], [`lane_changing`]) is generic
//! over [`Scalar`] (`f32` or `f64`). The engine, measurement and calibration layers run on
//! `f64`; the aliases below name the concrete types they use.

pub mod analysis;
pub mod calibration;
pub mod cf_models;
pub mod config;
pub mod error;
pub mod integrate;
pub mod lane_changing;
pub mod measurement;
pub mod relaxation;
pub mod scalar;
pub mod simulation;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type CfParams = cf_models::CfParams<f64>;
pub type CfInput = cf_models::CfInput<f64>;
pub type RelaxationConfig = relaxation::RelaxationConfig<f64>;
pub type RelaxationState = relaxation::RelaxationState<f64>;
pub type RelaxationEvent = relaxation::RelaxationEvent<f64>;
