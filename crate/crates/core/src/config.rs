//! Knobs shared by the search routines.

use serde::{Deserialize, Serialize};

/// Limits and semantic switches threaded through every bounded search.
///
/// The semantic switches change definitions, not just performance:
/// `irreducible_distinct_only` relaxes irreducibility to distinct pairs, and
/// `strict_type_vertex_repeats` forbids repeated type vertices in admissible
/// mixed tuples. Both default to the permissive readings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Hard cap on vertices of any structure a search is allowed to build.
    pub max_vertices: usize,
    /// Rough cap on the number of candidate objects a search may visit.
    pub budget: u64,
    /// Irreducibility: require only distinct pairs to co-occur in a tuple.
    pub irreducible_distinct_only: bool,
    /// Admissible mixed tuples: forbid repeated type vertices.
    pub strict_type_vertex_repeats: bool,
    /// Extension depth for bounded family-level type-respecting checks.
    pub depth: usize,
    /// Worker threads for parallel searches. `None` means rayon's default.
    pub jobs: Option<usize>,
    /// Seed for randomized generators; fixed so runs are replayable.
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            max_vertices: 64,
            budget: 1 << 26,
            irreducible_distinct_only: false,
            strict_type_vertex_repeats: false,
            depth: 3,
            jobs: None,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn with_depth(mut self, depth: usize) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Run a parallel section on a pool of the requested size, or on rayon's
/// global pool when no size was asked for.
pub fn run_with_jobs<R: Send>(
    jobs: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R, crate::error::CoreError> {
    match jobs {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| crate::error::CoreError::input(format!("could not build thread pool: {e}"))),
    }
}
