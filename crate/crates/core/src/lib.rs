//! Time-consistent sublinear expectations on finite scenario trees.
//!
//! The crate works on a finite `K`-step path lattice. A family of scenario
//! measures is attached to every node; the conditional sublinear
//! expectation at a stopping rule is the supremum of linear conditional
//! expectations over the family at the stopped node. Alongside the
//! computation the crate provides exact, enumeration-based checks of the
//! tower property, of the essential-supremum representation, and of the
//! invariance and pasting conditions on the family, plus volatility-lattice
//! (G-expectation) instantiations and a small payoff language.
//!
//! ```
//! use sublinear::gexp::{g_expectation, DProcess, VolSpec};
//!
//! let spec = VolSpec::FiniteSet { values: vec![1.0, 4.0] };
//! let v = g_expectation(&DProcess::constant(spec), 3, 0.5, |l, p| l.value_at(p).powi(2))
//!     .unwrap();
//! assert!((v - 4.0 * 3.0 * 0.5).abs() < 1e-12);
//! ```

pub mod ambiguity;
pub mod dsl;
pub mod engine;
pub mod error;
pub mod ext;
pub mod gexp;
pub mod measure;
pub mod pathspace;
pub mod sampling;

pub use ambiguity::{AmbiguityFamily, ExplicitFamily, RectangularFamily, Status};
pub use error::{Error, Result};
pub use measure::{Kernel, TreeMeasure};
pub use pathspace::{Lattice, Node, PathId, RandomVariable, StoppingRule};

/// Version of this crate, as recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
