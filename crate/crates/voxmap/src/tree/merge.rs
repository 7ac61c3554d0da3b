//! Aggregation-grid merging.
//!
//! Hit and free observations form a small lattice per voxel:
//! `inactive < free < hit`. Merging two grids takes the join, which for
//! bit-stored [`AggValue`] leaves is a word-wise OR of the activity and
//! hit masks — a hit can never be demoted by a free observation from
//! another worker. Where the destination has no node at all, the source
//! node is adopted wholesale instead of being walked voxel by voxel.

use super::bitmask::Bitmask;
use super::{AggValue, Grid, InternalNode, LeafNode, EMPTY};
use crate::error::GridError;

impl Grid<AggValue> {
    /// Merges `src` into `self`, consuming it. Activity becomes the
    /// union; voxels active in both keep `hit OR hit`. Nodes missing in
    /// `self` are moved over without touching their contents.
    pub fn merge_from(&mut self, mut src: Grid<AggValue>) -> Result<(), GridError> {
        if !self.is_coaligned_with(&src) {
            return Err(GridError::ConfigMismatch);
        }
        let mut src_keys: Vec<_> = src.root.drain().collect();
        // Deterministic adoption order keeps arena layouts reproducible.
        src_keys.sort_unstable_by_key(|(k, _)| *k);
        for (key, sui) in src_keys {
            match self.root.get(&key).copied() {
                None => {
                    let moved = self.adopt_upper(&mut src, sui);
                    self.root.insert(key, moved);
                }
                Some(dui) => self.merge_upper(&mut src, dui, sui),
            }
        }
        Ok(())
    }

    /// Non-consuming merge; `src` is left unchanged.
    pub fn merge_or(&mut self, src: &Grid<AggValue>) -> Result<(), GridError> {
        self.merge_from(src.clone())
    }

    fn merge_upper(&mut self, src: &mut Grid<AggValue>, dui: u32, sui: u32) {
        let snode = take_internal(&mut src.uppers, sui);
        for off in snode.child_mask.iter_set() {
            let sli = snode.children[off];
            let dli = self.uppers[dui as usize].children[off];
            if dli == EMPTY {
                let moved = self.adopt_lower(src, sli);
                let dnode = &mut self.uppers[dui as usize];
                dnode.children[off] = moved;
                dnode.child_mask.set(off);
            } else {
                self.merge_lower(src, dli, sli);
            }
        }
    }

    fn merge_lower(&mut self, src: &mut Grid<AggValue>, dli: u32, sli: u32) {
        let snode = take_internal(&mut src.lowers, sli);
        for off in snode.child_mask.iter_set() {
            let sfi = snode.children[off];
            let dfi = self.lowers[dli as usize].children[off];
            if dfi == EMPTY {
                let moved = self.adopt_leaf(src, sfi);
                let dnode = &mut self.lowers[dli as usize];
                dnode.children[off] = moved;
                dnode.child_mask.set(off);
            } else {
                let sleaf = take_leaf(&mut src.leaves, sfi);
                let dleaf = &mut self.leaves[dfi as usize];
                dleaf.active.or_assign(&sleaf.active);
                dleaf.values.or_assign(&sleaf.values);
            }
        }
    }

    /// Moves an upper node and its subtree into `self`, rewriting child
    /// indices. The node payloads (masks, leaf bits) move untouched.
    fn adopt_upper(&mut self, src: &mut Grid<AggValue>, sui: u32) -> u32 {
        let mut node = take_internal(&mut src.uppers, sui);
        for off in node.child_mask.iter_set() {
            node.children[off] = self.adopt_lower(src, node.children[off]);
        }
        let idx = self.uppers.len() as u32;
        self.uppers.push(node);
        idx
    }

    fn adopt_lower(&mut self, src: &mut Grid<AggValue>, sli: u32) -> u32 {
        let mut node = take_internal(&mut src.lowers, sli);
        for off in node.child_mask.iter_set() {
            node.children[off] = self.adopt_leaf(src, node.children[off]);
        }
        let idx = self.lowers.len() as u32;
        self.lowers.push(node);
        idx
    }

    fn adopt_leaf(&mut self, src: &mut Grid<AggValue>, sfi: u32) -> u32 {
        let leaf = take_leaf(&mut src.leaves, sfi);
        let idx = self.leaves.len() as u32;
        self.leaves.push(leaf);
        idx
    }
}

fn take_internal(arena: &mut [InternalNode], idx: u32) -> InternalNode {
    std::mem::replace(
        &mut arena[idx as usize],
        InternalNode {
            child_mask: Bitmask::new(0),
            active_mask: Bitmask::new(0),
            children: Box::new([]),
        },
    )
}

fn take_leaf(arena: &mut [LeafNode<AggValue>], idx: u32) -> LeafNode<AggValue> {
    std::mem::replace(
        &mut arena[idx as usize],
        LeafNode {
            active: Bitmask::new(0),
            values: Bitmask::new(0),
        },
    )
}
