//! Fixtures shared by the criterion benches in `benches/`.

use bpg_core::problems::make_cubic_finite_sum;
use bpg_core::solvers::SolverConfig;
use bpg_core::{Problem, RandomStream, Sample};

/// Cubic finite sum of `n` components in dimension 3 with a fixed seed.
pub fn cubic_instance(n: usize) -> Problem {
    make_cubic_finite_sum(n, 3, 11).expect("valid cubic instance")
}

/// Solver settings for a short fixed-length epoch run.
pub fn epoch_config(epochs: usize) -> SolverConfig {
    SolverConfig {
        epochs: Some(epochs),
        epsilon: 1e-2,
        keep_trace: false,
        ..SolverConfig::default()
    }
}

/// A batch of `b` uniformly drawn component indices.
pub fn batch(problem: &Problem, b: usize, seed: u64) -> Vec<Sample> {
    let mut stream = RandomStream::new(seed);
    (0..b).map(|_| problem.objective.draw(&mut stream)).collect()
}
