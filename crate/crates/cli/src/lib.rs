//! File formats, parallel drivers and the `shellkit` command-line tool built
//! on `shellkit-core`.

pub mod cli;
pub mod dataset;
pub mod model;
pub mod parallel;
pub mod report;
pub mod spec;

pub use dataset::{load_dataset, save_dataset, Dataset, DatasetError, Format};
pub use model::{load_model, save_model, ModelFile, ShellFile};
pub use spec::{load_spec, SpecFile, Truth};
