//! Sequencings of subsets of `Z_p ⋊ H` where `H` is a finite abelian group
//! acting on `Z_p` by `±1`.

pub mod block_order;
pub mod decompose;
pub mod dissociation;
pub mod e_order;
pub mod error;
pub mod group;
pub mod oracle;
pub mod pipeline;
pub mod planted;
pub mod rectify;
pub mod sequencing;

pub use error::{Error, Result};
pub use group::{GElem, GElemWire, GroupSpec, GroupSpecWire, Sign};
pub use sequencing::{Certificate, Ordering, Verdict};
