//! Numerical tolerances. All are absolute unless the name says otherwise.

/// Terms whose Frobenius norm falls below this are dropped after every operation.
pub const PRUNE: f64 = 1e-14;
/// Identities that hold exactly in exact arithmetic.
pub const EXACT: f64 = 1e-10;
/// Axioms of constructed base algebras.
pub const AXIOM: f64 = 1e-12;
/// Curvature of a connection.
pub const FLATNESS: f64 = 1e-9;
/// Closedness of morphisms and of first-order coefficients.
pub const CLOSED: f64 = 1e-9;
/// Per-coefficient Maurer–Cartan residuals and obstruction norms.
pub const RESIDUAL: f64 = 1e-9;
/// Homotopy data validation: |ψφ − id − d(h)|.
pub const HOMOTOPY: f64 = 1e-10;
/// Distance of a seed from its harmonic projection.
pub const HARMONIC: f64 = 1e-9;
/// Relative singular-value threshold for numerical rank.
pub const RANK_RELATIVE: f64 = 1e-8;
/// Relative eigenvalue threshold separating harmonic from non-harmonic.
pub const SPECTRAL_RELATIVE: f64 = 1e-8;
