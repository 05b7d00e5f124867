//! Numerical tolerances shared by every module.
//!
//! Everything that decides membership, degeneracy or activity of a facet reads
//! its threshold from here so that results are reproducible across call sites.

/// Membership tolerance for points against halfspaces and quadrics.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Volumes below this are treated as degenerate.
pub const DEGENERACY_VOL: f64 = 1e-14;

/// Unit-vector tolerance for direction arguments.
pub const UNIT_TOL: f64 = 1e-12;

/// Orthogonality tolerance for ellipsoid rotations.
pub const ORTHO_TOL: f64 = 1e-12;

/// Radial values at or below this are treated as "ray leaves immediately".
pub const RADIAL_ZERO: f64 = 1e-12;

/// Relative tolerance used by the hull routines when classifying a point
/// as on (not beyond) a supporting line or plane.
pub const HULL_TOL: f64 = 1e-12;

/// Riesz-potential samples closer than this to the base point are dropped.
pub const RIESZ_CUTOFF: f64 = 1e-12;

/// Relative closure tolerance for discrete Minkowski data.
pub const CLOSURE_TOL: f64 = 1e-10;

/// Solver box for support numbers in the variational problem.
pub const SUPPORT_BOX: (f64, f64) = (1e-4, 1e4);
