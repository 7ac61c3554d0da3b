use super::bitmask::Bitmask;
use crate::occupancy::OccValue;

/// A per-scan observation for one voxel of an aggregation or temporary
/// grid. Active + `hit` means the voxel was an endpoint this scan,
/// active + `!hit` means a ray traversed it, inactive means unobserved.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct AggValue {
    pub hit: bool,
}

impl AggValue {
    pub const HIT: AggValue = AggValue { hit: true };
    pub const FREE: AggValue = AggValue { hit: false };
}

/// Voxel payload of a [`Grid`](super::Grid), together with the leaf
/// storage it selects. Bit-valued payloads pack 512 voxels into eight
/// words, which keeps temporary grids small and makes their merge a
/// word-wise OR.
pub trait CellValue: Copy + Send + Sync + 'static {
    type Store: Clone + Send + Sync;

    fn new_store(len: usize, background: Self) -> Self::Store;
    fn load(store: &Self::Store, idx: usize) -> Self;
    fn store(store: &mut Self::Store, idx: usize, v: Self);
    /// Heap bytes held by the store, for memory accounting.
    fn store_bytes(store: &Self::Store) -> usize;
}

macro_rules! slice_cell {
    ($t:ty) => {
        impl CellValue for $t {
            type Store = Box<[$t]>;

            fn new_store(len: usize, background: Self) -> Self::Store {
                vec![background; len].into_boxed_slice()
            }

            #[inline]
            fn load(store: &Self::Store, idx: usize) -> Self {
                store[idx]
            }

            #[inline]
            fn store(store: &mut Self::Store, idx: usize, v: Self) {
                store[idx] = v;
            }

            fn store_bytes(store: &Self::Store) -> usize {
                store.len() * std::mem::size_of::<$t>()
            }
        }
    };
}

slice_cell!(f32);
slice_cell!(f64);
slice_cell!(OccValue);

impl CellValue for bool {
    type Store = Bitmask;

    fn new_store(len: usize, background: Self) -> Self::Store {
        if background {
            Bitmask::filled(len)
        } else {
            Bitmask::new(len)
        }
    }

    #[inline]
    fn load(store: &Self::Store, idx: usize) -> Self {
        store.get(idx)
    }

    #[inline]
    fn store(store: &mut Self::Store, idx: usize, v: Self) {
        store.assign(idx, v);
    }

    fn store_bytes(store: &Self::Store) -> usize {
        store.byte_len()
    }
}

impl CellValue for AggValue {
    type Store = Bitmask;

    fn new_store(len: usize, background: Self) -> Self::Store {
        bool::new_store(len, background.hit)
    }

    #[inline]
    fn load(store: &Self::Store, idx: usize) -> Self {
        AggValue {
            hit: store.get(idx),
        }
    }

    #[inline]
    fn store(store: &mut Self::Store, idx: usize, v: Self) {
        store.assign(idx, v.hit);
    }

    fn store_bytes(store: &Self::Store) -> usize {
        store.byte_len()
    }
}
