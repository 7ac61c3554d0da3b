use super::{AggValue, CellValue, Grid, EMPTY};
use crate::coord::Coord;

/// Cached grid access.
///
/// Remembers the arena index of the last node touched per level and
/// re-checks it with a single key comparison, so spatially coherent
/// access (ray marching, scan lines) skips the root hash lookup and the
/// internal descent almost always. Reads and writes are semantically
/// identical to [`Grid::get`] / [`Grid::set_state`]; only the cost
/// differs.
///
/// The accessor mutably borrows its grid, so it is bound to one worker
/// at a time by construction. Node arenas only ever grow, which keeps
/// cached indices valid for the accessor's whole lifetime.
pub struct Accessor<'g, V: CellValue> {
    grid: &'g mut Grid<V>,
    upper_key: Coord,
    lower_key: Coord,
    leaf_key: Coord,
    upper: u32,
    lower: u32,
    leaf: u32,
}

impl<'g, V: CellValue> Accessor<'g, V> {
    pub(super) fn new(grid: &'g mut Grid<V>) -> Self {
        Self {
            grid,
            upper_key: Coord::ZERO,
            lower_key: Coord::ZERO,
            leaf_key: Coord::ZERO,
            upper: EMPTY,
            lower: EMPTY,
            leaf: EMPTY,
        }
    }

    pub fn grid(&self) -> &Grid<V> {
        self.grid
    }

    /// Returns `(active, value)`; inactive voxels read as background.
    #[inline]
    pub fn get(&mut self, c: Coord) -> (bool, V) {
        match self.resolve::<false>(c) {
            Some(fi) => {
                let layout = self.grid.layout();
                let leaf = &self.grid.leaves[fi as usize];
                let off = layout.leaf_offset(c);
                if leaf.active.get(off) {
                    (true, V::load(&leaf.values, off))
                } else {
                    (false, self.grid.background())
                }
            }
            None => (false, self.grid.background()),
        }
    }

    /// Writes value and activity state. `active = false` only clears
    /// the activity bit and never allocates (see [`Grid::set_state`]).
    #[inline]
    pub fn set_state(&mut self, c: Coord, value: V, active: bool) {
        if active {
            let fi = self.resolve::<true>(c).expect("allocating resolve");
            let layout = self.grid.layout();
            let off = layout.leaf_offset(c);
            let leaf = &mut self.grid.leaves[fi as usize];
            V::store(&mut leaf.values, off, value);
            leaf.active.set(off);
        } else if let Some(fi) = self.resolve::<false>(c) {
            let off = self.grid.layout().leaf_offset(c);
            self.grid.leaves[fi as usize].active.clear(off);
        }
    }

    #[inline]
    pub fn set(&mut self, c: Coord, value: V) {
        self.set_state(c, value, true);
    }

    pub fn deactivate(&mut self, c: Coord) {
        if let Some(fi) = self.resolve::<false>(c) {
            let off = self.grid.layout().leaf_offset(c);
            self.grid.leaves[fi as usize].active.clear(off);
        }
    }

    /// Leaf arena index for `c`, descending from the innermost cached
    /// node that still covers it. With `ALLOC`, missing nodes are
    /// created and the result is always `Some`.
    #[inline]
    fn resolve<const ALLOC: bool>(&mut self, c: Coord) -> Option<u32> {
        let layout = self.grid.layout();
        let leaf_key = c.shr(layout.leaf_log2);
        if self.leaf != EMPTY && self.leaf_key == leaf_key {
            return Some(self.leaf);
        }

        let lower_key = c.shr(layout.lower_shift);
        let lower = if self.lower != EMPTY && self.lower_key == lower_key {
            self.lower
        } else {
            let upper_key = c.shr(layout.total_shift);
            let upper = if self.upper != EMPTY && self.upper_key == upper_key {
                self.upper
            } else {
                let ui = if ALLOC {
                    self.grid.upper_alloc(upper_key)
                } else {
                    *self.grid.root.get(&upper_key)?
                };
                self.upper_key = upper_key;
                self.upper = ui;
                ui
            };
            let off = layout.upper_offset(c);
            let li = {
                let slot = self.grid.uppers[upper as usize].children[off];
                if slot != EMPTY {
                    slot
                } else if ALLOC {
                    self.grid.lower_alloc(upper, off)
                } else {
                    return None;
                }
            };
            self.lower_key = lower_key;
            self.lower = li;
            li
        };

        let off = layout.lower_offset(c);
        let slot = self.grid.lowers[lower as usize].children[off];
        let fi = if slot != EMPTY {
            slot
        } else if ALLOC {
            self.grid.leaf_alloc(lower, off)
        } else {
            return None;
        };
        self.leaf_key = leaf_key;
        self.leaf = fi;
        Some(fi)
    }
}

impl Accessor<'_, AggValue> {
    /// Records a traversal observation: activates the voxel without
    /// touching its hit bit, so a hit recorded by an earlier ray of the
    /// same scan survives.
    #[inline]
    pub fn mark_free(&mut self, c: Coord) {
        let fi = self.resolve::<true>(c).expect("allocating resolve");
        let off = self.grid.layout().leaf_offset(c);
        self.grid.leaves[fi as usize].active.set(off);
    }

    /// Records an endpoint observation: activates the voxel and sets
    /// its hit bit. Hits dominate traversals within a scan.
    #[inline]
    pub fn mark_hit(&mut self, c: Coord) {
        let fi = self.resolve::<true>(c).expect("allocating resolve");
        let off = self.grid.layout().leaf_offset(c);
        let leaf = &mut self.grid.leaves[fi as usize];
        leaf.active.set(off);
        leaf.values.set(off);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::TreeConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Random set/get sequences behave identically through the cached
    /// accessor and through uncached traversal.
    #[test]
    fn accessor_equals_uncached_traversal() {
        let config = TreeConfig::with_resolution(0.1);
        let mut cached: Grid<f64> = Grid::new(config, 0.0).unwrap();
        let mut plain: Grid<f64> = Grid::new(config, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);

        let coords: Vec<Coord> = (0..4000)
            .map(|_| {
                Coord::new(
                    rng.random_range(-40..40),
                    rng.random_range(-40..40),
                    rng.random_range(-40..40),
                )
            })
            .collect();

        let mut acc = cached.accessor();
        for (i, &c) in coords.iter().enumerate() {
            match i % 4 {
                0 | 1 => {
                    let v = i as f64;
                    acc.set(c, v);
                    plain.set(c, v);
                }
                2 => {
                    acc.deactivate(c);
                    plain.deactivate(c);
                }
                _ => {
                    assert_eq!(acc.get(c), plain.get(c), "at {c:?}");
                }
            }
        }
        drop(acc);
        for &c in &coords {
            assert_eq!(cached.get(c), plain.get(c));
        }
        cached.audit().unwrap();
        plain.audit().unwrap();
    }

    #[test]
    fn cache_survives_cross_node_walks() {
        let mut g: Grid<bool> = Grid::new(TreeConfig::with_resolution(0.1), false).unwrap();
        let mut acc = g.accessor();
        // Walk a long x line crossing leaf, lower and upper boundaries.
        for x in -5000..5000 {
            acc.set(Coord::new(x, 3, -3), true);
        }
        for x in -5000..5000 {
            assert_eq!(acc.get(Coord::new(x, 3, -3)), (true, true));
        }
        drop(acc);
        assert_eq!(g.active_count(), 10_000);
        g.audit().unwrap();
    }
}
