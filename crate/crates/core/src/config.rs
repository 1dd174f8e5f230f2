use thiserror::Error;

/// Limits and knobs shared by the executors and the analyses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Config {
    /// Maximum number of rule applications per run.
    pub step_limit: usize,
    /// Maximum number of states explored per exhaustive search.
    pub joinability_bound: usize,
    pub completion_iterations: usize,
    /// Guard residues are instantiated over `-sample_grid..=sample_grid`.
    pub sample_grid: i64,
    pub seed: u64,
    pub parallel_width: usize,
    /// Record a step-by-step trace.
    pub trace: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            step_limit: 100_000,
            joinability_bound: 1000,
            completion_iterations: 25,
            sample_grid: 10,
            seed: 0,
            parallel_width: 1,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("configuration value `{0}` must be strictly positive")]
pub struct ConfigError(pub &'static str);

impl Config {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let checks = [
            ("step_limit", self.step_limit > 0),
            ("joinability_bound", self.joinability_bound > 0),
            ("completion_iterations", self.completion_iterations > 0),
            ("sample_grid", self.sample_grid > 0),
            ("parallel_width", self.parallel_width > 0),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(ConfigError(name)),
            None => Ok(()),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_step_limit(mut self, limit: usize) -> Self {
        self.step_limit = limit;
        self
    }

    pub fn with_width(mut self, width: usize) -> Self {
        self.parallel_width = width;
        self
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }
}
