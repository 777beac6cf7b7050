//! Fixtures shared by the benchmarks.

use eps_skyline::{gen_uniform_random, Instance};

/// Uniform random instance used across benchmark groups.
pub fn uniform(n: usize) -> Instance {
    gen_uniform_random(n, 0xBE7C).expect("n > 0")
}
