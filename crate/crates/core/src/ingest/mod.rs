//! Raw table parsing, stint merging and WAR attachment.

mod columns;
mod load;
mod merge;
mod types;

pub use columns::ColumnMap;
pub use load::{load_dataset, write_rejects, DataPaths};
pub use merge::{attach_war, derive_primary_position, merge_stints};
pub use types::*;
