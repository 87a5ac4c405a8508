//! Projection complexes built from rotating families on hyperbolic graphs,
//! with exact audits of their axioms and the windmill free-product
//! certificate.

pub mod axioms;
pub mod canoe;
pub mod complex;
pub mod constants;
pub mod error;
pub mod ext;
pub mod family;
pub mod group;
pub mod instance;
pub mod metric;
pub mod pipeline;
pub mod projection;
pub mod report;
pub mod windmill;
pub mod word;

pub use error::{Error, Result};
pub use ext::Ext;
pub use report::{Report, Verdict, Witness};
