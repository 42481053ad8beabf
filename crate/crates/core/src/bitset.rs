//! Fixed-length bitset with the shift-or needed for Minkowski sums.

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

    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[cfg(test)]
    pub fn get(&self, i: usize) -> bool {
        i < self.len && self.words[i / 64] >> (i % 64) & 1 == 1
    }

    /// Sets every bit in `lo..=hi` (clamped to the length).
    pub fn set_range(&mut self, lo: usize, hi: usize) {
        let hi = hi.min(self.len.saturating_sub(1));
        if lo > hi {
            return;
        }
        let (wl, wh) = (lo / 64, hi / 64);
        let mask_from = |b: usize| !0u64 << b;
        let mask_to = |b: usize| if b == 63 { !0u64 } else { (1u64 << (b + 1)) - 1 };
        if wl == wh {
            self.words[wl] |= mask_from(lo % 64) & mask_to(hi % 64);
            return;
        }
        self.words[wl] |= mask_from(lo % 64);
        for w in &mut self.words[wl + 1..wh] {
            *w = !0;
        }
        self.words[wh] |= mask_to(hi % 64);
    }

    /// `self |= other << shift`, dropping bits past the end.
    pub fn or_shifted(&mut self, other: &BitSet, shift: usize) {
        let ws = shift / 64;
        let bs = shift % 64;
        let n = self.words.len();
        for (k, &w) in other.words.iter().enumerate() {
            if w == 0 {
                continue;
            }
            let dst = k + ws;
            if dst >= n {
                break;
            }
            if bs == 0 {
                self.words[dst] |= w;
            } else {
                self.words[dst] |= w << bs;
                if dst + 1 < n {
                    self.words[dst + 1] |= w >> (64 - bs);
                }
            }
        }
        self.clear_tail();
    }

    fn clear_tail(&mut self) {
        let r = self.len % 64;
        if r != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << r) - 1;
            }
        }
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + b)
            })
        })
    }

    #[cfg(test)]
    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}
