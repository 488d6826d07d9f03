//! The two-part classifier: a feature-extractor body feeding one linear
//! softmax head, plus snapshotting, head freezing, and checkpoint I/O.

pub mod arch;
pub mod checkpoint;
pub mod net;

pub use arch::ArchConfig;
pub use net::{build_model, FrozenSnapshot, LayeredNet};
