//! Numerical exterior calculus on almost complex manifolds.
//!
//! The crate provides, at desk scale:
//! - a pointwise complex exterior algebra with bidegree splitting relative
//!   to an almost complex structure, and sampled positivity tests;
//! - structure fields (standard and a non-integrable twisted family on
//!   R^4), adapted coordinate charts, and a Nijenhuis integrability probe;
//! - the exterior derivative with its (del, dbar, theta, thetabar)
//!   splitting, second-order operators, and pullbacks, differentiated
//!   exactly through nested jets;
//! - currents (smooth, integration, regularized Monge-Ampere, linear
//!   combinations) paired against compactly supported test forms by
//!   deterministic adaptive cubature, with mass measures, duality
//!   derivatives, positivity/closedness/psh probes, and tube localization;
//! - regularized Poincare-Lelong limits with remainder extraction;
//! - Lelong numbers: ball-mass profiles, monotone-corrected quantities,
//!   radial extrapolation, and coordinate-invariance experiments;
//! - stratified subsets with validation probes, integration currents,
//!   generic Lelong numbers and restriction checks.

pub mod algebra {
    //! Exterior values, bidegree projectors, positivity.
    pub use crate::form::{ExteriorValue, SpForm, PRUNE_EPS};
    pub use crate::positivity::{
        is_positive_sample, random_decomposition, strongly_positive_form, PositivityReport,
        StronglyPositiveDecomposition,
    };
    pub use crate::projector::{project_bidegree, split_by_bidegree, BidegreeProjector, ACS_TOL};
}

pub mod calculus;
pub mod chart;
pub mod current;
pub mod engine;
pub mod error;
pub mod field;
mod form;
pub mod linalg;
mod positivity;
mod projector;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod structures;

pub use engine::Engine;
pub use error::{Error, Result};
pub use current::{mass, tau_p, Current, MassResult, Pairing, ParamChart, Region, TestForm};
pub use field::{CMap, FormField, RMap};
pub use form::ExteriorValue;
pub use quadrature::{integrate, HintFn, Kbn, QuadResult, QuadratureConfig};
pub use sampling::{BoxDomain, Sampler};
pub use scalar::{Cx, C64};
pub use structures::AlmostComplexStructure;
