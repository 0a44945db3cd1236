//! Deterministic yards for the benchmarks.

use brp_core::instance::generate;
use brp_core::Yard;

/// A generated yard of `w` stacks, height `h` and `n` blocks.
pub fn fixture(w: usize, h: usize, n: usize) -> Yard {
    generate(w, h, n, 0xbe4c_0000 ^ (w * 100_000 + h * 10_000 + n) as u64)
        .expect("fixture dimensions fit")
}

/// Sizes used across the suite, smallest first.
pub const SIZES: [(usize, usize, usize); 4] =
    [(6, 5, 25), (10, 6, 54), (50, 7, 345), (1000, 10, 9995)];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_stable() {
        for (w, h, n) in SIZES {
            let a = fixture(w, h, n);
            assert_eq!(a, fixture(w, h, n));
            assert_eq!((a.width(), a.height(), a.len()), (w, h, n));
        }
    }
}
