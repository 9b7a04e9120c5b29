//! Block-parallel execution with a sequential fallback.
//!
//! Work is cut into fixed-size blocks whose boundaries depend only on the
//! problem size. Results come back in block order, so a caller that folds them
//! left to right gets bitwise identical output under either strategy and any
//! thread count.

use std::ops::Range;

/// Samples per reduction block.
pub const BLOCK_SIZE: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    #[cfg_attr(not(feature = "parallel"), default)]
    Sequential,
    #[cfg(feature = "parallel")]
    #[default]
    Parallel,
}

/// Block ranges covering `0..total`.
pub fn blocks(total: usize, block: usize) -> Vec<Range<usize>> {
    let block = block.max(1);
    (0..total.div_ceil(block))
        .map(|b| b * block..((b + 1) * block).min(total))
        .collect()
}

/// Applies `f` to each block of `0..total`, returning results in block order.
pub fn map_blocks<T, F>(strategy: Strategy, total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let ranges = blocks(total, BLOCK_SIZE);
    match strategy {
        Strategy::Sequential => ranges.into_iter().map(f).collect(),
        #[cfg(feature = "parallel")]
        Strategy::Parallel => {
            use rayon::prelude::*;
            ranges.into_par_iter().map(f).collect()
        }
    }
}

/// Applies `f` to every index in `0..total`, preserving index order.
pub fn map_indices<T, F>(strategy: Strategy, total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match strategy {
        Strategy::Sequential => (0..total).map(f).collect(),
        #[cfg(feature = "parallel")]
        Strategy::Parallel => {
            use rayon::prelude::*;
            (0..total).into_par_iter().map(f).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_range() {
        let b = blocks(10, 4);
        assert_eq!(b, vec![0..4, 4..8, 8..10]);
        assert!(blocks(0, 4).is_empty());
    }

    #[test]
    fn strategies_agree() {
        let f = |r: Range<usize>| r.map(|i| (i as f64).sqrt()).sum::<f64>();
        let seq = map_blocks(Strategy::Sequential, 50_000, f);
        let dflt = map_blocks(Strategy::default(), 50_000, f);
        assert_eq!(seq, dflt);
        let seq = map_indices(Strategy::Sequential, 100, |i| i * i);
        assert_eq!(seq, map_indices(Strategy::default(), 100, |i| i * i));
    }
}
