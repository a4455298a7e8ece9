//! Deterministic pairwise summation.
//!
//! Values are pushed in item order and combined like a binary counter: slot
//! `j` holds the sum of an aligned run of `2^j` consecutive items. The tree is
//! fixed by the item count alone, so a caller that sums aligned blocks of
//! `2^b` items elsewhere (on another thread, say) and feeds them in with
//! [`PairwiseSum::push_block`] gets bit-identical results.

const MAX_LEVELS: usize = 64;

#[derive(Debug, Clone)]
pub struct PairwiseSum {
    dim: usize,
    slots: Vec<f64>,
    occupied: u64,
    carry: Vec<f64>,
    count: u64,
}

impl PairwiseSum {
    pub fn new(dim: usize) -> Self {
        PairwiseSum {
            dim,
            slots: vec![0.0; dim * MAX_LEVELS],
            occupied: 0,
            carry: vec![0.0; dim],
            count: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of leaf items absorbed so far.
    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn push(&mut self, v: &[f64]) {
        self.push_block(0, v);
    }

    pub fn push_scalar(&mut self, v: f64) {
        debug_assert_eq!(self.dim, 1);
        self.push_block(0, &[v]);
    }

    /// Push the pairwise sum of `2^level` items. The items pushed so far must
    /// be a multiple of `2^level`.
    pub fn push_block(&mut self, level: usize, v: &[f64]) {
        debug_assert_eq!(v.len(), self.dim);
        debug_assert!(self.count % (1u64 << level) == 0, "unaligned block");
        if self.dim == 1 {
            let mut c = v[0];
            let mut j = level;
            while self.occupied & (1u64 << j) != 0 {
                c = self.slots[j] + c;
                self.occupied &= !(1u64 << j);
                j += 1;
            }
            self.slots[j] = c;
            self.occupied |= 1u64 << j;
            self.count += 1u64 << level;
            return;
        }
        self.carry.copy_from_slice(v);
        let mut j = level;
        while self.occupied & (1u64 << j) != 0 {
            let slot = &self.slots[j * self.dim..(j + 1) * self.dim];
            for (c, s) in self.carry.iter_mut().zip(slot) {
                *c = *s + *c;
            }
            self.occupied &= !(1u64 << j);
            j += 1;
        }
        self.slots[j * self.dim..(j + 1) * self.dim].copy_from_slice(&self.carry);
        self.occupied |= 1u64 << j;
        self.count += 1u64 << level;
    }

    /// Fold the remaining slots from the lowest level up. Zero when empty.
    pub fn total(&self) -> Vec<f64> {
        let mut acc: Option<Vec<f64>> = None;
        for j in 0..MAX_LEVELS {
            if self.occupied & (1u64 << j) == 0 {
                continue;
            }
            let slot = &self.slots[j * self.dim..(j + 1) * self.dim];
            acc = Some(match acc {
                None => slot.to_vec(),
                Some(lower) => slot.iter().zip(&lower).map(|(h, l)| h + l).collect(),
            });
        }
        acc.unwrap_or_else(|| vec![0.0; self.dim])
    }

    pub fn total_scalar(&self) -> f64 {
        self.total()[0]
    }
}

/// Pairwise sum of a scalar slice.
pub fn pairwise(values: &[f64]) -> f64 {
    let mut s = PairwiseSum::new(1);
    for &v in values {
        s.push_scalar(v);
    }
    s.total_scalar()
}
