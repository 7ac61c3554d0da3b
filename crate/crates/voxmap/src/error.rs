use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by grid construction and coordinate transforms.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("voxel size must be strictly positive and finite, got {0}")]
    InvalidVoxelSize(f64),
    #[error("log2 branching extents must be in 1..=8, got ({0}, {1}, {2})")]
    InvalidBranching(u8, u8, u8),
    #[error("coalign scale must be >= 1")]
    InvalidScale,
    #[error("world point {0:?} is not finite")]
    NonFinitePoint([f64; 3]),
    #[error("index {0:?} overflows the signed 32-bit index space")]
    IndexOverflow([f64; 3]),
    #[error("grids are not coaligned (configs differ)")]
    ConfigMismatch,
}

/// Errors raised by ray construction and traversal setup.
#[derive(Debug, Error)]
pub enum RayError {
    #[error("zero-length ray at origin {0:?}")]
    ZeroLength([f64; 3]),
    #[error("ray endpoint is not finite")]
    NonFinite,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors raised while integrating a scan.
#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("scan frame contains no finite point")]
    EmptyFrame,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Errors raised while decoding or encoding an OCCF frame.
#[derive(Debug, Error)]
pub enum FrameError {
    #[error("bad magic {found:?}, expected \"OCCF\"")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported OCCF version {0}")]
    BadVersion(u16),
    #[error("truncated frame: needed {needed} bytes at offset {offset}, got {available}")]
    Truncated {
        offset: usize,
        needed: usize,
        available: usize,
    },
    #[error("quaternion norm {norm} is outside 1 +/- 1e-6")]
    BadQuaternion { norm: f64 },
    #[error("pose contains a non-finite value")]
    NonFinitePose,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Errors raised while reading or writing voxlist map files.
#[derive(Debug, Error)]
pub enum VoxlistError {
    #[error("bad magic {found:?}, expected \"VXL1\"")]
    BadMagic { found: [u8; 4] },
    #[error("truncated voxlist: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("malformed voxlist line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Errors raised during dataset replay.
#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        source: io::Error,
    },
    #[error("manifest {path} lists no frames")]
    EmptyManifest { path: PathBuf },
    #[error("frame {index} ({path}): {source}")]
    Frame {
        index: usize,
        path: PathBuf,
        source: FrameError,
    },
    #[error("frame {index}: {source}")]
    Integrate {
        index: usize,
        source: IntegrateError,
    },
}
