//! Exact combinatorics for return-time analysis of weighted backward shifts.
//!
//! The crate is organised around one data spine:
//!
//! * [`intset`]: canonical run-length sets over the positive integers with
//!   exact big-integer endpoints,
//! * [`density`]: exact rational density estimates (prefix ratios and
//!   sliding-window extrema) over those sets,
//! * [`families`]: horizon-bounded membership verdicts for the classical
//!   collections (cofinite, thick, syndetic, density-positive, ...), each with
//!   a machine-checkable witness,
//! * [`finite_algebra`]: exhaustive verification of the duality and
//!   partition-regularity laws for upward-closed collections on tiny universes,
//! * [`shifts`]: weight-sequence programs, their piecewise-linear exponent
//!   profiles, return-time sets, and the class verdict matrix,
//! * [`dynamics`]: exact dyadic vectors and open-cylinder membership, used to
//!   cross-check the set-level results by direct simulation.
//!
//! Everything downstream of the weight programs is computed by segment and run
//! arithmetic; no operation enumerates set elements unless its output is
//! inherently element-sized.

pub mod density;
pub mod dynamics;
pub mod error;
pub mod families;
pub mod finite_algebra;
pub mod intset;
pub mod numeric;
pub mod shifts;

pub use error::{Error, Result};
pub use intset::{GapBound, RunSet};
pub use numeric::{Int, Nat, Rat};
