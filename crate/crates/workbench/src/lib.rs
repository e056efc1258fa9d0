//! Population store, dataset management, batch generation, training jobs,
//! the `formscape` command line and the HTTP service behind the studio.

pub mod analysis;
pub mod cli;
pub mod generate;
pub mod record;
pub mod server;
pub mod split;
pub mod store;
pub mod taxonomy;
pub mod training;

pub use record::{PhenotypeRecord, Provenance};
pub use store::{Store, StoreError};
pub use taxonomy::Taxonomy;
