//! Exact rational arithmetic for the higher-order q-Painlevé system
//! q-P(n+1, n+1).
//!
//! The crate works in two coordinate systems: the `(f, g, h)` state of
//! [`StateFG`] on which the forward map acts, and the `(x, x̲, y)` frame of
//! [`XYFrame`] in which the Lax pair and the symmetry generators are written.
//! Every computation is exact; nothing is ever compared up to a tolerance.
//!
//! ```
//! use qplab_core::{SampleOptions, Snapshot};
//!
//! let s = Snapshot::sample(2, 7, &SampleOptions::default()).unwrap();
//! let next = s.forward().unwrap();
//! assert_eq!(next.backward().unwrap(), s);
//! assert_eq!(next.params.t(), &(s.params.t() * s.params.q()));
//! ```

pub mod coords;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod hypergeom;
pub mod lax;
pub mod linalg;
pub mod model;
pub mod scalar;
pub mod series;
pub mod symmetry;

pub use dynamics::{run_orbit, Orbit, Snapshot};
pub use error::{Error, Result};
pub use harness::{run_suite, run_suites, RelationReport, Suite, SuiteConfig};
pub use linalg::Matrix;
pub use model::{Params, SampleOptions, StateFG, StateReport, TRegime, XYFrame};
pub use scalar::Scalar;
pub use series::TruncSeries;
pub use symmetry::GeneratorId;
