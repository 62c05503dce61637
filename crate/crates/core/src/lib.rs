//! Construction and numerical certification of compact proper Dupin
//! hypersurfaces in spheres.
//!
//! The crate builds three families of examples and checks their closed-form
//! curvature data numerically:
//!
//! * isoparametric tubes over the Clifford–Stiefel manifold `V₂(C_{m-1})`
//!   ([`clifford`], [`otfkm`]),
//! * the Pinkall–Thorbergsson deformations `T_{α,β} V₂` whose Lie curvature
//!   is not constant ([`ptdeform`]),
//! * Miyaoka–Ozawa lifts `h⁻¹(M) ⊂ S⁷` of Dupin hypersurfaces of `S⁴` through
//!   the quaternionic Hopf fibration ([`quat`], [`hopfmo`], [`morse`]).
//!
//! Shape operators, principal spectra and Lie curvatures are computed by the
//! generic machinery in [`engine`] on top of the small dense kernel in
//! [`numkit`]. Lie sphere geometry in homogeneous coordinates lives in
//! [`liegeo`]. [`certify`] bundles everything into reproducible reports.

pub mod certify;
pub mod clifford;
pub mod engine;
pub mod error;
pub mod hopfmo;
pub mod liegeo;
pub mod morse;
pub mod numkit;
pub mod otfkm;
pub mod ptdeform;
pub mod quat;
pub mod report;
pub mod rng;

pub use error::{Error, Result};
