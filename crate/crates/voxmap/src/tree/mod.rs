//! VDB-style sparse voxel grid.
//!
//! The tree has a fixed height of four: a hash-map root over upper
//! internal nodes, a second internal level, and leaf nodes holding the
//! actual voxel values. All levels below the root branch by a power of
//! two per axis, so descending is pure shift/mask arithmetic and a read
//! or write is constant time on average. Each node carries bitmasks for
//! child presence and voxel activity, which lets iteration and merging
//! skip unobserved space without touching values.
//!
//! Nodes live in per-level arenas owned by the [`Grid`]; children refer
//! to each other by arena index. Nodes are never removed or reordered
//! inside a grid, so a [`Accessor`] can cache the indices of the nodes
//! it touched last and serve spatially coherent access patterns with a
//! single comparison.

mod accessor;
mod bitmask;
mod cell;
mod iter;
mod merge;

pub use accessor::Accessor;
pub use bitmask::Bitmask;
pub use cell::{AggValue, CellValue};
pub use iter::ActiveIter;

use std::collections::HashMap;

use nalgebra::{Point3, Vector3};

use crate::coord::Coord;
use crate::error::GridError;

const EMPTY: u32 = u32::MAX;

/// Uniform world <-> index transform: `index = floor((p - origin) / voxel_size)`.
///
/// Points exactly on a voxel boundary resolve by the floor rule; there
/// is no epsilon nudging anywhere, so every component of the pipeline
/// agrees on voxel membership.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Transform {
    pub voxel_size: f64,
    pub origin: Point3<f64>,
}

impl Transform {
    pub fn new(voxel_size: f64, origin: Point3<f64>) -> Self {
        Self { voxel_size, origin }
    }

    /// Continuous index-space coordinates of a world point.
    #[inline]
    pub fn index_space(&self, p: Point3<f64>) -> Vector3<f64> {
        (p - self.origin) / self.voxel_size
    }

    /// Voxel containing a world point.
    pub fn world_to_index(&self, p: Point3<f64>) -> Result<Coord, GridError> {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return Err(GridError::NonFinitePoint([p.x, p.y, p.z]));
        }
        let s = self.index_space(p);
        let f = [s.x.floor(), s.y.floor(), s.z.floor()];
        for v in f {
            if !(v >= i32::MIN as f64 && v <= i32::MAX as f64) {
                return Err(GridError::IndexOverflow(f));
            }
        }
        Ok(Coord::new(f[0] as i32, f[1] as i32, f[2] as i32))
    }

    /// World-space center of a voxel.
    pub fn index_to_world(&self, c: Coord) -> Point3<f64> {
        self.origin
            + Vector3::new(
                (c.x as f64 + 0.5) * self.voxel_size,
                (c.y as f64 + 0.5) * self.voxel_size,
                (c.z as f64 + 0.5) * self.voxel_size,
            )
    }

    /// Transform of a coaligned grid whose voxels are `scale` times finer.
    pub fn refined(&self, scale: u32) -> Result<Transform, GridError> {
        if scale == 0 {
            return Err(GridError::InvalidScale);
        }
        Ok(Transform {
            voxel_size: self.voxel_size / scale as f64,
            origin: self.origin,
        })
    }
}

/// Tree shape and world transform of a [`Grid`].
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct TreeConfig {
    /// Per-level log2 extents: `[upper internal, lower internal, leaf]`.
    /// The default `[5, 4, 3]` gives 32^3 and 16^3 internal nodes over
    /// 8^3-voxel leaves.
    pub log2_branch: [u8; 3],
    pub transform: Transform,
}

pub const DEFAULT_LOG2_BRANCH: [u8; 3] = [5, 4, 3];

impl TreeConfig {
    pub fn new(log2_branch: [u8; 3], voxel_size: f64, origin: Point3<f64>) -> Self {
        Self {
            log2_branch,
            transform: Transform::new(voxel_size, origin),
        }
    }

    /// Default branching, origin at the world origin.
    pub fn with_resolution(voxel_size: f64) -> Self {
        Self::new(DEFAULT_LOG2_BRANCH, voxel_size, Point3::origin())
    }

    pub fn voxel_size(&self) -> f64 {
        self.transform.voxel_size
    }

    pub fn origin(&self) -> Point3<f64> {
        self.transform.origin
    }

    fn validate(&self) -> Result<Layout, GridError> {
        let [u, l, f] = self.log2_branch;
        if !(self.transform.voxel_size.is_finite() && self.transform.voxel_size > 0.0) {
            return Err(GridError::InvalidVoxelSize(self.transform.voxel_size));
        }
        if !(1..=8).contains(&u) || !(1..=8).contains(&l) || !(1..=8).contains(&f) {
            return Err(GridError::InvalidBranching(u, l, f));
        }
        Ok(Layout::new(u, l, f))
    }
}

/// Precomputed shift/mask arithmetic for one tree shape.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub(crate) struct Layout {
    pub upper_log2: u8,
    pub lower_log2: u8,
    pub leaf_log2: u8,
    /// Bits below a lower-internal key: `leaf_log2 + lower_log2`.
    pub lower_shift: u8,
    /// Bits below a root key.
    pub total_shift: u8,
    pub upper_cells: usize,
    pub lower_cells: usize,
    pub leaf_cells: usize,
}

impl Layout {
    fn new(upper: u8, lower: u8, leaf: u8) -> Self {
        Self {
            upper_log2: upper,
            lower_log2: lower,
            leaf_log2: leaf,
            lower_shift: leaf + lower,
            total_shift: leaf + lower + upper,
            upper_cells: 1usize << (3 * upper),
            lower_cells: 1usize << (3 * lower),
            leaf_cells: 1usize << (3 * leaf),
        }
    }

    #[inline]
    fn offset(c: Coord, shift: u8, log2: u8) -> usize {
        let l = c.shr(shift).mask(log2);
        ((((l.x as usize) << log2) | l.y as usize) << log2) | l.z as usize
    }

    #[inline]
    pub fn upper_offset(&self, c: Coord) -> usize {
        Self::offset(c, self.lower_shift, self.upper_log2)
    }

    #[inline]
    pub fn lower_offset(&self, c: Coord) -> usize {
        Self::offset(c, self.leaf_log2, self.lower_log2)
    }

    #[inline]
    pub fn leaf_offset(&self, c: Coord) -> usize {
        Self::offset(c, 0, self.leaf_log2)
    }

    /// Inverse of the linear in-node offset: local (x, y, z).
    #[inline]
    pub fn split_offset(offset: usize, log2: u8) -> Coord {
        let m = (1usize << log2) - 1;
        Coord::new(
            (offset >> (2 * log2)) as i32,
            ((offset >> log2) & m) as i32,
            (offset & m) as i32,
        )
    }
}

pub(crate) struct InternalNode {
    /// Bit set iff the child slot holds a node.
    pub child_mask: Bitmask,
    /// Tile activity. This implementation never collapses nodes into
    /// constant tiles, so the mask stays empty; the audit checks that.
    pub active_mask: Bitmask,
    pub children: Box<[u32]>,
}

impl InternalNode {
    fn new(cells: usize) -> Self {
        Self {
            child_mask: Bitmask::new(cells),
            active_mask: Bitmask::new(cells),
            children: vec![EMPTY; cells].into_boxed_slice(),
        }
    }

    fn heap_bytes(&self) -> usize {
        self.child_mask.byte_len() + self.active_mask.byte_len() + self.children.len() * 4
    }
}

impl Clone for InternalNode {
    fn clone(&self) -> Self {
        Self {
            child_mask: self.child_mask.clone(),
            active_mask: self.active_mask.clone(),
            children: self.children.clone(),
        }
    }
}

pub(crate) struct LeafNode<V: CellValue> {
    pub active: Bitmask,
    pub values: V::Store,
}

impl<V: CellValue> Clone for LeafNode<V> {
    fn clone(&self) -> Self {
        Self {
            active: self.active.clone(),
            values: self.values.clone(),
        }
    }
}

/// Exact node and voxel counts of a grid.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct GridStats {
    pub active_voxels: usize,
    pub upper_nodes: usize,
    pub lower_nodes: usize,
    pub leaf_nodes: usize,
    /// Accounted heap bytes of arenas, child tables, masks and values.
    pub memory_bytes: usize,
}

/// Sparse voxel grid over the signed 32-bit index space.
///
/// Every voxel is either *active* (explicitly stored) or *inactive*
/// (reads as the background value). Storage is allocated lazily, one
/// node per level at most per write, so memory grows with the number of
/// active leaves rather than with coordinate magnitude.
///
/// A grid accepts one mutating actor at a time or any number of
/// concurrent readers; the integrator upholds this by giving each
/// worker a private grid and serializing merges.
pub struct Grid<V: CellValue> {
    config: TreeConfig,
    layout: Layout,
    background: V,
    root: HashMap<Coord, u32>,
    uppers: Vec<InternalNode>,
    lowers: Vec<InternalNode>,
    leaves: Vec<LeafNode<V>>,
}

impl<V: CellValue> Clone for Grid<V> {
    fn clone(&self) -> Self {
        Self {
            config: self.config,
            layout: self.layout,
            background: self.background,
            root: self.root.clone(),
            uppers: self.uppers.clone(),
            lowers: self.lowers.clone(),
            leaves: self.leaves.clone(),
        }
    }
}

impl<V: CellValue> Grid<V> {
    /// Empty grid; every coordinate reads inactive with `background`.
    pub fn new(config: TreeConfig, background: V) -> Result<Self, GridError> {
        let layout = config.validate()?;
        Ok(Self {
            config,
            layout,
            background,
            root: HashMap::new(),
            uppers: Vec::new(),
            lowers: Vec::new(),
            leaves: Vec::new(),
        })
    }

    pub fn config(&self) -> &TreeConfig {
        &self.config
    }

    pub fn transform(&self) -> Transform {
        self.config.transform
    }

    pub fn background(&self) -> V {
        self.background
    }

    pub(crate) fn layout(&self) -> Layout {
        self.layout
    }

    /// New empty grid sharing this grid's origin and branching, with
    /// voxels `scale` times finer. `scale = 1` yields an exactly
    /// coaligned grid.
    pub fn coalign<W: CellValue>(&self, scale: u32, background: W) -> Result<Grid<W>, GridError> {
        let transform = self.config.transform.refined(scale)?;
        Grid::new(
            TreeConfig {
                log2_branch: self.config.log2_branch,
                transform,
            },
            background,
        )
    }

    pub fn is_coaligned_with<W: CellValue>(&self, other: &Grid<W>) -> bool {
        self.config == other.config
    }

    pub fn world_to_index(&self, p: Point3<f64>) -> Result<Coord, GridError> {
        self.config.transform.world_to_index(p)
    }

    pub fn index_to_world(&self, c: Coord) -> Point3<f64> {
        self.config.transform.index_to_world(c)
    }

    /// Uncached root-down read. Returns `(active, value)`; inactive
    /// voxels read as the background value.
    pub fn get(&self, c: Coord) -> (bool, V) {
        let inactive = (false, self.background);
        let Some(&ui) = self.root.get(&c.shr(self.layout.total_shift)) else {
            return inactive;
        };
        let li = self.uppers[ui as usize].children[self.layout.upper_offset(c)];
        if li == EMPTY {
            return inactive;
        }
        let fi = self.lowers[li as usize].children[self.layout.lower_offset(c)];
        if fi == EMPTY {
            return inactive;
        }
        let leaf = &self.leaves[fi as usize];
        let off = self.layout.leaf_offset(c);
        if leaf.active.get(off) {
            (true, V::load(&leaf.values, off))
        } else {
            inactive
        }
    }

    /// Cached accessor bound to this grid. One accessor per worker.
    pub fn accessor(&mut self) -> Accessor<'_, V> {
        Accessor::new(self)
    }

    /// Uncached write; allocates the node path on demand. Writing with
    /// `active = false` only clears the activity bit (the stored value,
    /// if any, is retained and masked by the background on read) and
    /// never allocates.
    pub fn set_state(&mut self, c: Coord, value: V, active: bool) {
        if active {
            let fi = self.locate_alloc(c);
            let off = self.layout.leaf_offset(c);
            let leaf = &mut self.leaves[fi as usize];
            V::store(&mut leaf.values, off, value);
            leaf.active.set(off);
        } else {
            self.deactivate(c);
        }
    }

    pub fn set(&mut self, c: Coord, value: V) {
        self.set_state(c, value, true);
    }

    /// Clears the activity bit. Cheap: no value write, no allocation.
    pub fn deactivate(&mut self, c: Coord) {
        if let Some(fi) = self.locate(c) {
            let off = self.layout.leaf_offset(c);
            self.leaves[fi as usize].active.clear(off);
        }
    }

    /// Leaf arena index covering `c`, if allocated.
    pub(crate) fn locate(&self, c: Coord) -> Option<u32> {
        let &ui = self.root.get(&c.shr(self.layout.total_shift))?;
        let li = self.uppers[ui as usize].children[self.layout.upper_offset(c)];
        if li == EMPTY {
            return None;
        }
        let fi = self.lowers[li as usize].children[self.layout.lower_offset(c)];
        (fi != EMPTY).then_some(fi)
    }

    pub(crate) fn locate_alloc(&mut self, c: Coord) -> u32 {
        let ui = self.upper_alloc(c.shr(self.layout.total_shift));
        let li = self.lower_alloc(ui, self.layout.upper_offset(c));
        self.leaf_alloc(li, self.layout.lower_offset(c))
    }

    pub(crate) fn upper_alloc(&mut self, key: Coord) -> u32 {
        if let Some(&ui) = self.root.get(&key) {
            return ui;
        }
        let ui = self.uppers.len() as u32;
        self.uppers.push(InternalNode::new(self.layout.upper_cells));
        self.root.insert(key, ui);
        ui
    }

    pub(crate) fn lower_alloc(&mut self, upper: u32, off: usize) -> u32 {
        let slot = self.uppers[upper as usize].children[off];
        if slot != EMPTY {
            return slot;
        }
        let li = self.lowers.len() as u32;
        self.lowers.push(InternalNode::new(self.layout.lower_cells));
        let node = &mut self.uppers[upper as usize];
        node.children[off] = li;
        node.child_mask.set(off);
        li
    }

    pub(crate) fn leaf_alloc(&mut self, lower: u32, off: usize) -> u32 {
        let slot = self.lowers[lower as usize].children[off];
        if slot != EMPTY {
            return slot;
        }
        let fi = self.leaves.len() as u32;
        self.leaves.push(LeafNode {
            active: Bitmask::new(self.layout.leaf_cells),
            values: V::new_store(self.layout.leaf_cells, self.background),
        });
        let node = &mut self.lowers[lower as usize];
        node.children[off] = fi;
        node.child_mask.set(off);
        fi
    }

    pub fn active_count(&self) -> usize {
        self.leaves.iter().map(|l| l.active.count_ones()).sum()
    }

    /// Active voxels in canonical order: root keys sorted, then in-node
    /// bit order (x major, z fastest) at every level. The cost is
    /// proportional to allocated nodes, not to the bounding volume.
    pub fn iter_active(&self) -> ActiveIter<'_, V> {
        ActiveIter::new(self)
    }

    pub fn stats(&self) -> GridStats {
        let mut memory_bytes = std::mem::size_of::<Self>()
            + self.root.capacity() * (std::mem::size_of::<(Coord, u32)>() + 8)
            + self.uppers.capacity() * std::mem::size_of::<InternalNode>()
            + self.lowers.capacity() * std::mem::size_of::<InternalNode>()
            + self.leaves.capacity() * std::mem::size_of::<LeafNode<V>>();
        for n in self.uppers.iter().chain(self.lowers.iter()) {
            memory_bytes += n.heap_bytes();
        }
        for l in &self.leaves {
            memory_bytes += l.active.byte_len() + V::store_bytes(&l.values);
        }
        GridStats {
            active_voxels: self.active_count(),
            upper_nodes: self.uppers.len(),
            lower_nodes: self.lowers.len(),
            leaf_nodes: self.leaves.len(),
            memory_bytes,
        }
    }

    /// Full-tree consistency audit: every child-present bit matches an
    /// occupied slot, internal tile masks are empty, and every node is
    /// referenced exactly once.
    pub fn audit(&self) -> Result<(), String> {
        let mut seen_lower = vec![false; self.lowers.len()];
        let mut seen_leaf = vec![false; self.leaves.len()];
        let mut seen_upper = vec![false; self.uppers.len()];
        for (key, &ui) in &self.root {
            let upper = self
                .uppers
                .get(ui as usize)
                .ok_or_else(|| format!("root key {key:?} points past upper arena"))?;
            if std::mem::replace(&mut seen_upper[ui as usize], true) {
                return Err(format!("upper node {ui} referenced twice"));
            }
            audit_internal(upper, "upper", &mut seen_lower)?;
            for &li in upper.children.iter().filter(|&&s| s != EMPTY) {
                let lower = &self.lowers[li as usize];
                audit_internal(lower, "lower", &mut seen_leaf)?;
            }
        }
        if seen_upper.iter().any(|s| !s)
            || seen_lower.iter().any(|s| !s)
            || seen_leaf.iter().any(|s| !s)
        {
            return Err("unreachable node in arena".to_string());
        }
        Ok(())
    }
}

fn audit_internal(node: &InternalNode, level: &str, seen: &mut [bool]) -> Result<(), String> {
    if !node.active_mask.is_empty() {
        return Err(format!("{level} node carries tile activity"));
    }
    for (off, &slot) in node.children.iter().enumerate() {
        let present = slot != EMPTY;
        if present != node.child_mask.get(off) {
            return Err(format!(
                "{level} node child mask disagrees with slot {off}"
            ));
        }
        if present {
            let idx = slot as usize;
            if idx >= seen.len() {
                return Err(format!("{level} node child {off} out of range"));
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(format!("child node {slot} referenced twice"));
            }
        }
    }
    Ok(())
}
