//! Randomness sources for query generation.
//!
//! Schemes draw every internal coin through [`Coins::below`]. The seeded
//! source uses the SplitMix64 stream (64-bit state, golden-ratio increment,
//! two xor-shift-multiply mixing rounds) and maps a 64-bit word to `[0, n)`
//! by rejecting words at or above the largest multiple of `n`, then taking
//! the remainder. The enumerating source walks every coin path instead, so
//! the auditor can compute exact query distributions.

use crate::gf::{FieldCtx, FieldElem, Vec2};
use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

pub trait Coins {
    /// Uniform draw from `0..n`. `n` must be positive.
    fn below(&mut self, n: u32) -> u32;
}

pub struct SeededCoins {
    rng: SplitMix64,
}

impl SeededCoins {
    pub fn new(seed: u64) -> Self {
        SeededCoins {
            rng: SplitMix64::seed_from_u64(seed),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl Coins for SeededCoins {
    fn below(&mut self, n: u32) -> u32 {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let limit = u64::MAX - (u64::MAX % n + 1) % n;
        loop {
            let w = self.rng.next_u64();
            if w <= limit {
                return (w % n) as u32;
            }
        }
    }
}

pub fn uniform(c: &mut dyn Coins, f: &FieldCtx) -> FieldElem {
    FieldElem(c.below(f.order()))
}

/// Uniform over F^×, drawn by index so the coin space is exactly q − 1.
pub fn nonzero(c: &mut dyn Coins, f: &FieldCtx) -> FieldElem {
    FieldElem(1 + c.below(f.order() - 1))
}

/// Uniform over F_s^{1×2} ∖ {0}.
pub fn nonzero_pair(c: &mut dyn Coins, s: u32) -> Vec2 {
    let i = 1 + c.below(s * s - 1);
    [FieldElem(i % s), FieldElem(i / s)]
}

/// Uniform draw from a slice.
pub fn choose<T: Copy>(c: &mut dyn Coins, items: &[T]) -> T {
    items[c.below(items.len() as u32) as usize]
}

/// Coins replayed from a recorded prefix; fresh positions start at 0.
struct Replay {
    path: Vec<(u32, u32)>,
    pos: usize,
}

impl Coins for Replay {
    fn below(&mut self, n: u32) -> u32 {
        assert!(n > 0, "below(0)");
        let v = if self.pos < self.path.len() {
            let (v, radix) = self.path[self.pos];
            assert_eq!(radix, n, "coin radix depends on earlier coin values");
            v
        } else {
            self.path.push((0, n));
            0
        };
        self.pos += 1;
        v
    }
}

/// Runs `run` once for every distinct coin path, in odometer order, and
/// hands each result to `visit` with the path's probability denominator
/// (the product of all radices drawn along it).
pub fn for_each_path<T, E>(
    mut run: impl FnMut(&mut dyn Coins) -> Result<T, E>,
    mut visit: impl FnMut(T, u128) -> Result<(), E>,
) -> Result<(), E> {
    let mut r = Replay {
        path: Vec::new(),
        pos: 0,
    };
    loop {
        r.pos = 0;
        let out = run(&mut r)?;
        r.path.truncate(r.pos);
        let den = r.path.iter().map(|&(_, n)| n as u128).product();
        visit(out, den)?;
        loop {
            match r.path.pop() {
                None => return Ok(()),
                Some((v, n)) if v + 1 < n => {
                    r.path.push((v + 1, n));
                    break;
                }
                Some(_) => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_is_reproducible() {
        let a: Vec<u32> = {
            let mut c = SeededCoins::new(42);
            (0..32).map(|_| c.below(7)).collect()
        };
        let b: Vec<u32> = {
            let mut c = SeededCoins::new(42);
            (0..32).map(|_| c.below(7)).collect()
        };
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v < 7));
    }

    #[test]
    fn enumerates_every_path_once() {
        let mut seen = Vec::new();
        for_each_path::<_, ()>(
            |c| {
                let a = c.below(2);
                let b = if a == 0 { c.below(3) } else { 9 };
                Ok((a, b))
            },
            |v, den| {
                seen.push((v, den));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(
            seen,
            vec![((0, 0), 6), ((0, 1), 6), ((0, 2), 6), ((1, 9), 2)]
        );
    }

    #[test]
    fn coinless_run_visits_once() {
        let mut n = 0;
        for_each_path::<_, ()>(|_| Ok(()), |_, den| {
            assert_eq!(den, 1);
            n += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(n, 1);
    }
}
