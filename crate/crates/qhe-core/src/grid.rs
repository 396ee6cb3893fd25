//! Deterministic grid evaluation for parameter sweeps.
//!
//! Every grid point is independent, so sweeps map over the inputs either on
//! the rayon pool (default `parallel` feature) or sequentially. Output order
//! always matches input order regardless of execution order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `f` over the inputs, in parallel when the `parallel` feature is
/// enabled. Results come back in input order.
pub fn run_grid<T, U, F>(inputs: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        inputs.par_iter().map(&f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        inputs.iter().map(&f).collect()
    }
}

/// Sequential reference path, kept available under every feature set for
/// benchmarking and for callers that need single-threaded execution.
pub fn run_grid_sequential<T, U, F>(inputs: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    inputs.iter().map(&f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let inputs: Vec<u64> = (0..64).collect();
        let f = |x: &u64| x * x + 1;
        assert_eq!(run_grid(&inputs, f), run_grid_sequential(&inputs, f));
    }
}
