//! Grid, real and spectral field types, transforms and snapshots.

pub mod compact;
pub mod ensemble;
pub(crate) mod fft;
pub mod field;
pub mod grid;
pub mod snapshot;

pub use compact::CompactSpectrum;
pub use ensemble::{gaussian_ensemble, gaussian_ensemble_spectral, EnsembleSpec};
pub use field::{forward_transform, inverse_transform, lp_norm, plancherel_constant, RealField, SpectralField};
pub use grid::Grid;
pub use snapshot::{read_snapshot, write_snapshot, Snapshot, SnapshotHeader};
