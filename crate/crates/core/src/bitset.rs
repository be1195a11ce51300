/// Fixed-length bitset over `0..len`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct BitSet {
    words: Vec<u64>,
    len: usize,
}

impl BitSet {
    pub fn new(len: usize) -> Self {
        BitSet {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn full(len: usize) -> Self {
        let mut b = BitSet::new(len);
        for w in &mut b.words {
            *w = !0;
        }
        if !len.is_multiple_of(64) {
            if let Some(last) = b.words.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        b
    }

    pub fn insert(&mut self, k: usize) {
        debug_assert!(k < self.len);
        self.words[k / 64] |= 1 << (k % 64);
    }

    #[cfg(test)]
    pub fn contains(&self, k: usize) -> bool {
        k < self.len && self.words[k / 64] & (1 << (k % 64)) != 0
    }

    /// `self = a & b`; returns whether the result is non-empty.
    pub fn assign_and(&mut self, a: &BitSet, b: &BitSet) -> bool {
        let mut any = 0;
        for ((o, x), y) in self.words.iter_mut().zip(&a.words).zip(&b.words) {
            *o = x & y;
            any |= *o;
        }
        any != 0
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + t)
            })
        })
    }
}
