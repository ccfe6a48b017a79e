//! Accelerated stochastic gradient descent for streaming least squares.
//!
//! The crate is `no_std` (it needs `alloc`). It contains:
//!
//! * [`problem`]: synthetic least-squares distributions, exact excess risk and
//!   the moment constants (R², statistical condition number, kurtosis).
//! * [`oracles`]: rank-one, mini-batch, exact and running-average gradient
//!   estimates.
//! * [`algorithms`]: the three-sequence accelerated recursion with two step
//!   sizes, plain SGD, iterate averaging and the seeded run loop.
//! * [`operators`]: the covariance-operator algebra behind the convergence
//!   bounds, evaluated exactly on small instances so its inequalities can be
//!   certified numerically.
//!
//! IO, configuration and the CLI live in the `acls` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algorithms;
mod error;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod problem;

pub use error::{Error, Result};

/// Random stream used for every sampling path.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Seeds a [`Rng`] from a 64-bit integer.
pub fn rng_from_seed(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
