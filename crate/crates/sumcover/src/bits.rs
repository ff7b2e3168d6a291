//! Windowed bitset over (z, h-rank) cells.
//!
//! A set over `Z + H` occupying z-values `[z_min, z_min + slices)` maps cell
//! `(z, r)` to bit `(z - z_min) * h_ord + r`. Bit index order equals the
//! canonical element order, so reading bits in ascending order yields a
//! canonical element list for free.

pub(crate) struct Window {
    z_min: i64,
    slices: usize,
    h_ord: usize,
    words: Vec<u64>,
}

impl Window {
    pub fn new(z_min: i64, slices: usize, h_ord: usize) -> Window {
        let bits = slices * h_ord;
        Window {
            z_min,
            slices,
            h_ord,
            words: vec![0u64; bits.div_ceil(64)],
        }
    }

    #[inline]
    fn idx(&self, z: i64, r: u32) -> usize {
        debug_assert!(z >= self.z_min && ((z - self.z_min) as usize) < self.slices);
        debug_assert!((r as usize) < self.h_ord);
        (z - self.z_min) as usize * self.h_ord + r as usize
    }

    #[inline]
    pub fn set(&mut self, z: i64, r: u32) {
        let i = self.idx(z, r);
        self.words[i / 64] |= 1u64 << (i % 64);
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Set cells in ascending canonical order.
    pub fn iter_set(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.words
            .iter()
            .enumerate()
            .flat_map(move |(wi, &w)| {
                let mut w = w;
                std::iter::from_fn(move || {
                    if w == 0 {
                        return None;
                    }
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                })
            })
            .map(move |i| {
                let z = self.z_min + (i / self.h_ord) as i64;
                let r = (i % self.h_ord) as u32;
                (z, r)
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_and_read_back_in_order() {
        let mut w = Window::new(-2, 5, 3);
        w.set(1, 2);
        w.set(-2, 0);
        w.set(0, 1);
        w.set(0, 1); // idempotent
        assert_eq!(w.count_ones(), 3);
        let cells: Vec<_> = w.iter_set().collect();
        assert_eq!(cells, vec![(-2, 0), (0, 1), (1, 2)]);
    }
}
