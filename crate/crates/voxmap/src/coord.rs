use std::fmt;
use std::ops::{Add, Sub};

/// A voxel address in the signed 32-bit index space.
///
/// The index space is virtually infinite: any `i32` triple is a valid
/// address and no bounding box is ever declared. Ordering is
/// lexicographic with `z` varying fastest, which is the order used for
/// deterministic exports.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub x: i32,
    pub y: i32,
    pub z: i32,
}

impl Coord {
    pub const fn new(x: i32, y: i32, z: i32) -> Self {
        Self { x, y, z }
    }

    pub const ZERO: Coord = Coord::new(0, 0, 0);

    /// Component-wise arithmetic shift right. Rounds toward negative
    /// infinity, so it maps a voxel to the key of the node covering it.
    #[inline]
    pub fn shr(self, bits: u8) -> Coord {
        Coord::new(self.x >> bits, self.y >> bits, self.z >> bits)
    }

    /// Component-wise mask with `(1 << bits) - 1`, i.e. the in-node
    /// local coordinate. Non-negative for any input (two's complement).
    #[inline]
    pub fn mask(self, bits: u8) -> Coord {
        let m = (1i32 << bits) - 1;
        Coord::new(self.x & m, self.y & m, self.z & m)
    }

    #[inline]
    pub fn component(self, axis: usize) -> i32 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    #[inline]
    pub fn set_component(&mut self, axis: usize, v: i32) {
        match axis {
            0 => self.x = v,
            1 => self.y = v,
            _ => self.z = v,
        }
    }

    /// Chebyshev (max-axis) distance to `other`.
    pub fn chebyshev(self, other: Coord) -> u32 {
        let dx = (self.x as i64 - other.x as i64).unsigned_abs();
        let dy = (self.y as i64 - other.y as i64).unsigned_abs();
        let dz = (self.z as i64 - other.z as i64).unsigned_abs();
        dx.max(dy).max(dz) as u32
    }

    /// Manhattan (axis-sum) distance to `other`.
    pub fn manhattan(self, other: Coord) -> u64 {
        let dx = (self.x as i64 - other.x as i64).unsigned_abs();
        let dy = (self.y as i64 - other.y as i64).unsigned_abs();
        let dz = (self.z as i64 - other.z as i64).unsigned_abs();
        dx + dy + dz
    }
}

impl Add for Coord {
    type Output = Coord;
    fn add(self, rhs: Coord) -> Coord {
        Coord::new(self.x + rhs.x, self.y + rhs.y, self.z + rhs.z)
    }
}

impl Sub for Coord {
    type Output = Coord;
    fn sub(self, rhs: Coord) -> Coord {
        Coord::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl fmt::Debug for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.x, self.y, self.z)
    }
}
