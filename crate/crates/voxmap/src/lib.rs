//! Sparse voxel occupancy mapping.
//!
//! `voxmap` builds global 3D occupancy maps from point-cloud scans. The
//! map lives in a VDB-style sparse voxel tree ([`Grid`]) addressed by a
//! virtually infinite signed 32-bit index space; cells hold clamped
//! log-odds occupancy belief. Scans are integrated by raycasting
//! ([`integrate_scan`]): points are split into chunks which workers
//! cast in parallel into private bit grids, the bit grids are OR-merged
//! into one aggregation grid, and a single pass applies one hit or miss
//! update per observed voxel. Two endpoint-level filters, subsampling
//! and bundling, trade map detail for integration speed.
//!
//! The crate also ships deterministic scenario generators with a
//! benchmark harness ([`bench`]), a binary scan-frame format with
//! dataset replay ([`frame`], [`replay`]), and map export in the
//! voxlist format ([`voxlist`]).

pub mod bench;
mod coord;
pub mod dda;
mod error;
pub mod frame;
pub mod integrator;
pub mod occupancy;
pub mod replay;
pub mod scenario;
pub mod tree;
pub mod voxlist;

pub use coord::Coord;
pub use dda::{march, DdaState, Ray};
pub use error::{FrameError, GridError, IntegrateError, RayError, ReplayError, VoxlistError};
pub use frame::ScanFrame;
pub use integrator::{integrate_scan, IntegrationOptions, UpdateStats};
pub use occupancy::{classify, logodds, prob, CellClass, OccValue, OccupancyParams};
pub use tree::{Accessor, AggValue, CellValue, Grid, Transform, TreeConfig};
