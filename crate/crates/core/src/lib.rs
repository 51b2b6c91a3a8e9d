//! Deformations of flat superconnections over finite graded-commutative base
//! algebras: the endomorphism DGLA, its finite Hodge theory, truncated
//! Maurer–Cartan series, homotopy transfer and family normalization.
//!
//! The manifold-level form algebra is replaced by a finite base algebra
//! (a point or an exterior algebra Λ(θ₁..θ_g) stands in for the
//! antiholomorphic forms of a complex torus), and "sufficiently small
//! parameter disk" is replaced by truncation of power series at a fixed
//! order. Every identity that holds analytically then holds exactly, up to
//! floating-point rounding.

pub mod base;
pub mod cohesive;
pub mod deform;
pub mod element;
pub mod error;
pub mod graded;
pub mod hodge;
pub mod linalg;
pub mod samples;
pub mod series;
pub mod tol;
pub mod transfer;

pub use base::{AxiomReport, BaseAlgebra, FamilyAlgebra, Monomial, ParameterAlgebra};
pub use cohesive::{
    cone, dgla_of, hom_differential, is_homotopy_equivalence, make_model, shift, CohesiveModel,
    Dgla, HomotopyData, Morphism,
};
pub use deform::{
    gauge_act, kodaira_spencer, kuranishi_map, mc_residual, slice_normalize, solve_kuranishi,
    ObstructionTable,
};
pub use element::{AlgebraElement, Layout};
pub use error::{Error, Result};
pub use graded::{GradedMap, GradedSpace, C64, CMatrix};
pub use hodge::{build_hodge, HodgePackage, MetricData};
pub use series::{GaugeSeries, McSeries, MultiIndex, Series};
pub use transfer::{
    linfty_term, mc_eval, regularize, regularize_morphism, strongify, transfer_mc,
    FamilyConnection,
};
