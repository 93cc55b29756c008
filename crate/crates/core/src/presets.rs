//! Reference configurations used by the examples, the CLI fixtures and the
//! regression tests.

use nalgebra::{dmatrix, DMatrix};

use crate::system::{DesignWeights, LinearSystem};

/// Double integrator with input `[1; 1]` observed through its first state,
/// weighted with `Q = 0.2 I`, `R = 1`, `V = I`, `epsilon = 1e-4`,
/// `delta = 1e-3` and a budget of `0.01`.
pub fn double_integrator() -> (LinearSystem, DesignWeights) {
    let sys = LinearSystem {
        a: dmatrix![0.0, 1.0; 0.0, 0.0],
        b: dmatrix![1.0; 1.0],
        c: dmatrix![1.0, 0.0],
    };
    let w = DesignWeights {
        q: DMatrix::identity(2, 2) * 0.2,
        r: dmatrix![1.0],
        v: DMatrix::identity(2, 2),
        lambda: 0.01,
        epsilon: 1e-4,
        delta: 1e-3,
    };
    (sys, w)
}

/// Scalar plant `a = b = c = 1` with unit weights and budget `1`; both
/// designers have closed-form answers here.
pub fn scalar_unit() -> (LinearSystem, DesignWeights) {
    scalar(1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
}

pub fn scalar(a: f64, b: f64, c: f64, q: f64, r: f64, v: f64, lambda: f64) -> (LinearSystem, DesignWeights) {
    let sys = LinearSystem {
        a: dmatrix![a],
        b: dmatrix![b],
        c: dmatrix![c],
    };
    let w = DesignWeights {
        q: dmatrix![q],
        r: dmatrix![r],
        v: dmatrix![v],
        lambda,
        epsilon: 1e-4,
        delta: 1e-3,
    };
    (sys, w)
}

/// Random five-state plant with seven inputs, observed through states 1, 3
/// and 5, weighted with `Q = I`, `R = 10 I`, `V = I`, `epsilon = 1e-5`,
/// `delta = 10` and a budget of `1`. Entries of `A` and `B` are uniform on
/// `[-1, 1)`.
pub fn five_state_surrogate(seed: u64) -> (LinearSystem, DesignWeights) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |r: usize, c: usize| DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0));
    let a = uniform(5, 5);
    let b = uniform(5, 7);
    let mut c = DMatrix::zeros(3, 5);
    for (row, state) in [0, 2, 4].into_iter().enumerate() {
        c[(row, state)] = 1.0;
    }
    let w = DesignWeights {
        q: DMatrix::identity(5, 5),
        r: DMatrix::identity(7, 7) * 10.0,
        v: DMatrix::identity(5, 5),
        lambda: 1.0,
        epsilon: 1e-5,
        delta: 10.0,
    };
    (LinearSystem { a, b, c }, w)
}
