/// A fixed-size bit array backed by `u64` words.
///
/// Used for node active masks and child-present masks, and as the leaf
/// value storage of bit-valued grids.
#[derive(Clone, PartialEq, Eq)]
pub struct Bitmask {
    words: Box<[u64]>,
}

impl Bitmask {
    /// All-zero mask covering `bits` bits (rounded up to whole words).
    pub fn new(bits: usize) -> Self {
        Self {
            words: vec![0u64; bits.div_ceil(64)].into_boxed_slice(),
        }
    }

    /// All-one mask covering exactly `bits` bits.
    pub fn filled(bits: usize) -> Self {
        let mut m = Self::new(bits);
        for (i, w) in m.words.iter_mut().enumerate() {
            let lo = i * 64;
            let n = bits.saturating_sub(lo).min(64);
            *w = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i >> 6] & (1u64 << (i & 63)) != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i >> 6] |= 1u64 << (i & 63);
    }

    #[inline]
    pub fn clear(&mut self, i: usize) {
        self.words[i >> 6] &= !(1u64 << (i & 63));
    }

    #[inline]
    pub fn assign(&mut self, i: usize, v: bool) {
        if v {
            self.set(i)
        } else {
            self.clear(i)
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// Word-wise OR of `other` into `self`. Both masks must have the
    /// same length.
    pub fn or_assign(&mut self, other: &Bitmask) {
        debug_assert_eq!(self.words.len(), other.words.len());
        for (a, b) in self.words.iter_mut().zip(other.words.iter()) {
            *a |= *b;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Indices of set bits, ascending.
    pub fn iter_set(&self) -> SetBits<'_> {
        SetBits {
            words: &self.words,
            word_idx: 0,
            current: self.words.first().copied().unwrap_or(0),
        }
    }

    pub fn byte_len(&self) -> usize {
        self.words.len() * 8
    }
}

pub struct SetBits<'a> {
    words: &'a [u64],
    word_idx: usize,
    current: u64,
}

impl Iterator for SetBits<'_> {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        loop {
            if self.current != 0 {
                let bit = self.current.trailing_zeros() as usize;
                self.current &= self.current - 1;
                return Some(self.word_idx * 64 + bit);
            }
            self.word_idx += 1;
            if self.word_idx >= self.words.len() {
                return None;
            }
            self.current = self.words[self.word_idx];
        }
    }
}
