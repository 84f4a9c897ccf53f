//! Forwarding-table verification through representative header sets.
//!
//! The engine computes the header classes (atoms) of a rule collection as
//! the minimal weak completion of the collection, using only intersection,
//! inclusion tests and exact cardinalities. Each member of the completion is
//! a representative set for one class, so network-wide properties such as
//! NO-LOOP and NO-BLACKHOLE can be verified with one pass per class instead
//! of one pass per header.
//!
//! Modules:
//! - [`headerset`]: mask/range header-set values and the three primitives.
//! - [`algebra`]: minimal weak completion, incremental updates, atom reports.
//! - [`network`]: network instances and centralized verification tasks.
//! - [`distributed`]: simulated local checks and the NO-LOOP proof labeling.
//! - [`oracle`]: brute-force ground truth and seeded instance generators.
//! - [`doc`]: the JSON document formats shared by the CLI and the tests.

pub mod algebra;
pub mod count;
pub mod distributed;
pub mod doc;
pub mod headerset;
pub mod network;
pub mod oracle;

pub use count::BigCount;
pub use headerset::{FieldKind, FieldSpec, HeaderLayout, HeaderSet, LayoutMismatch};
