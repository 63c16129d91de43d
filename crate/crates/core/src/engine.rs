//! Deterministic parallel path loop.
//!
//! Paths are processed in fixed-size chunks; each chunk accumulates its
//! statistics sequentially in path order and the chunk results are merged in
//! chunk order. Every path draws from its own ChaCha stream derived from the
//! seed and the path index, so the output does not depend on the number of
//! worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const CHUNK: usize = 256;

/// Independent random stream for `(seed, path, tag)`.
pub fn path_rng(seed: u64, path: usize, tag: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((path as u64) << 4 | (tag & 0xf));
    rng
}

/// Running mean and variance (Welford), mergeable with Chan's formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Stat {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, o: &Stat) {
        if o.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *o;
            return;
        }
        let n = (self.count + o.count) as f64;
        let d = o.mean - self.mean;
        self.mean += d * o.count as f64 / n;
        self.m2 += o.m2 + d * d * self.count as f64 * o.count as f64 / n;
        self.count += o.count;
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Runs `f(scratch, path, out)` for every path; `out` has `width` slots which
/// are accumulated column by column.
pub fn run_paths<T, I, F>(paths: usize, width: usize, init: I, f: F) -> Vec<Stat>
where
    I: Fn() -> T + Sync,
    F: Fn(&mut T, usize, &mut [f64]) + Sync,
{
    let chunks = paths.div_ceil(CHUNK);
    let partial: Vec<Vec<Stat>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scratch = init();
            let mut stats = vec![Stat::default(); width];
            let mut out = vec![0.0; width];
            for p in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                f(&mut scratch, p, &mut out);
                for (s, x) in stats.iter_mut().zip(&out) {
                    s.push(*x);
                }
            }
            stats
        })
        .collect();
    let mut total = vec![Stat::default(); width];
    for part in &partial {
        for (t, s) in total.iter_mut().zip(part) {
            t.merge(s);
        }
    }
    total
}

/// Fallible variant of [`run_paths`]; the first error in path order wins.
pub fn try_run_paths<T, I, F, E>(paths: usize, width: usize, init: I, f: F) -> Result<Vec<Stat>, E>
where
    I: Fn() -> T + Sync,
    F: Fn(&mut T, usize, &mut [f64]) -> Result<(), E> + Sync,
    E: Send,
{
    let chunks = paths.div_ceil(CHUNK);
    let partial: Vec<Result<Vec<Stat>, E>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut scratch = init();
            let mut stats = vec![Stat::default(); width];
            let mut out = vec![0.0; width];
            for p in c * CHUNK..((c + 1) * CHUNK).min(paths) {
                f(&mut scratch, p, &mut out)?;
                for (s, x) in stats.iter_mut().zip(&out) {
                    s.push(*x);
                }
            }
            Ok(stats)
        })
        .collect();
    let mut total = vec![Stat::default(); width];
    for part in partial {
        for (t, s) in total.iter_mut().zip(&part?) {
            t.merge(s);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 3.0 + 1.0).collect();
        let mut a = Stat::default();
        xs.iter().for_each(|&x| a.push(x));
        let mut b = Stat::default();
        let mut c = Stat::default();
        xs[..300].iter().for_each(|&x| b.push(x));
        xs[300..].iter().for_each(|&x| c.push(x));
        b.merge(&c);
        assert!((a.mean - b.mean).abs() < 1e-14);
        assert!((a.variance() - b.variance()).abs() < 1e-12);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| {
                run_paths(3000, 1, || (), |_, p, out| {
                    let mut rng = path_rng(7, p, 0);
                    out[0] = rng.random::<f64>();
                })
            })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn streams_differ() {
        let a: u64 = path_rng(1, 0, 0).random();
        let b: u64 = path_rng(1, 1, 0).random();
        let c: u64 = path_rng(1, 0, 1).random();
        assert!(a != b && a != c && b != c);
    }
}
