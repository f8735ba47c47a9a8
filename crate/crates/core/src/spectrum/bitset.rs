//! Fixed-width block bitset over dense test indices.

const WORD_BITS: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BlockBitSet {
    words: Vec<u64>,
    len: usize,
}

impl BlockBitSet {
    pub fn new(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(WORD_BITS)],
            len,
        }
    }

    /// Number of addressable bits.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, bit: usize) {
        assert!(bit < self.len, "bit {bit} out of range {}", self.len);
        self.words[bit / WORD_BITS] |= 1 << (bit % WORD_BITS);
    }

    pub fn contains(&self, bit: usize) -> bool {
        bit < self.len && self.words[bit / WORD_BITS] & (1 << (bit % WORD_BITS)) != 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Popcount of `self & other`. Both sets must have the same width.
    pub fn intersection_count(&self, other: &Self) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Set bits in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(block, &word)| {
            let mut rest = word;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(block * WORD_BITS + bit)
            })
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_and_iterate_across_blocks() {
        let mut set = BlockBitSet::new(130);
        for bit in [0, 63, 64, 129] {
            set.insert(bit);
        }
        assert_eq!(set.iter().collect::<Vec<_>>(), vec![0, 63, 64, 129]);
        assert_eq!(set.count_ones(), 4);
        assert!(set.contains(64));
        assert!(!set.contains(65));
        assert!(!set.contains(500));
    }

    #[test]
    fn intersection_counts_shared_bits() {
        let mut a = BlockBitSet::new(70);
        let mut b = BlockBitSet::new(70);
        a.insert(1);
        a.insert(66);
        b.insert(66);
        b.insert(2);
        assert_eq!(a.intersection_count(&b), 1);
    }

    #[test]
    fn zero_width_set() {
        let set = BlockBitSet::new(0);
        assert!(set.is_empty());
        assert_eq!(set.iter().count(), 0);
    }
}
