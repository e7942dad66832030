//! Configuration, initial data and on-disk formats.

pub mod config;
pub mod heatmap;
pub mod initial;
pub mod manifest;
pub mod snapshot;
pub mod timeseries;

pub use config::{parse_config, RunSpec};
pub use heatmap::{encode_heatmap, write_heatmap};
pub use initial::{generate_initial, initial_from_spec, InitialKind, InitialSpec};
pub use manifest::{verify_manifest, RunManifest};
pub use snapshot::{decode_snapshot, encode_snapshot, read_snapshot, write_snapshot};
pub use timeseries::{parse_timeseries, read_timeseries, timeseries_csv, write_timeseries};
