//! Metropolis-Hastings independence sampler with a uniform proposal over
//! the target support, plus the scenario grid runner.

use thiserror::Error;

use crate::density::SupportInterval;
use crate::rng::{derive_seed, SplitMix64};

/// Floor below which the current state's density is treated as zero when
/// forming the acceptance ratio.
pub const ZERO_DENSITY_FLOOR: f64 = 1e-300;

/// Grid resolution used to probe the target before starting a chain.
const PROBE_GRID: usize = 64;

pub const DEFAULT_BURN_IN: usize = 1000;
pub const DEFAULT_SIZES: [usize; 4] = [500, 1000, 5000, 10_000];
pub const DEFAULT_SCENARIOS: u32 = 10;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("target density is zero everywhere on the probe grid")]
    ZeroTarget,
    #[error("n_samples must be at least 1")]
    EmptyChain,
    #[error("scenario {scenario}, size {size}: {source}")]
    Scenario { scenario: u32, size: usize, source: Box<SamplerError> },
}

/// Chain start state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainInit {
    /// Start at the data median (value supplied by the caller). Falls back
    /// to the first probe-grid point with positive target when the median
    /// sits in a clamped region.
    DataMedian(f64),
    /// Draw the start uniformly over the support (consumes one RNG draw).
    UniformDraw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub init: ChainInit,
}

impl ChainConfig {
    pub fn new(n_samples: usize, burn_in: usize, seed: u64, init: ChainInit) -> Result<Self, SamplerError> {
        if n_samples == 0 {
            return Err(SamplerError::EmptyChain);
        }
        Ok(Self { n_samples, burn_in, seed, init })
    }
}

/// A completed run: post-burn-in states plus acceptance bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    states: Vec<f64>,
    accepted: usize,
    total_steps: usize,
    seed: u64,
}

impl Chain {
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn accepted(&self) -> usize {
        self.accepted
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Accepted proposals over all steps, burn-in included.
    pub fn acceptance_rate(&self) -> f64 {
        assert!(self.total_steps > 0);
        self.accepted as f64 / self.total_steps as f64
    }
}

/// One Metropolis-Hastings step. The uniform proposal density cancels, so
/// acceptance is min(1, target(y)/target(x)). Exactly two RNG draws per
/// step, the acceptance draw included even when the ratio is 1, so the
/// stream position depends only on the step count.
pub fn mh_step(
    current: f64,
    target: &dyn Fn(f64) -> f64,
    support: SupportInterval,
    rng: &mut SplitMix64,
) -> (f64, bool) {
    let proposal = support.lo + support.width() * rng.next_f64();
    let u = rng.next_f64();
    let t_cur = target(current);
    let t_prop = target(proposal);
    let accepted = if t_cur <= ZERO_DENSITY_FLOOR {
        t_prop > 0.0
    } else {
        u < (t_prop / t_cur).min(1.0)
    };
    if accepted {
        (proposal, true)
    } else {
        (current, false)
    }
}

/// Run a full chain: burn-in discarded, `n_samples` states recorded.
/// Deterministic in (target, support, config).
pub fn run_chain(
    target: &dyn Fn(f64) -> f64,
    support: SupportInterval,
    config: &ChainConfig,
) -> Result<Chain, SamplerError> {
    if config.n_samples == 0 {
        return Err(SamplerError::EmptyChain);
    }
    let probe: Vec<f64> = (0..PROBE_GRID)
        .map(|i| support.lo + (i as f64 + 0.5) * support.width() / PROBE_GRID as f64)
        .collect();
    if !probe.iter().any(|&x| target(x) > 0.0) {
        return Err(SamplerError::ZeroTarget);
    }

    let mut rng = SplitMix64::new(config.seed);
    let mut current = match config.init {
        ChainInit::DataMedian(median) => {
            if support.contains(median) && target(median) > 0.0 {
                median
            } else {
                *probe.iter().find(|&&x| target(x) > 0.0).unwrap()
            }
        }
        ChainInit::UniformDraw => support.lo + support.width() * rng.next_f64(),
    };

    let total_steps = config.burn_in + config.n_samples;
    let mut states = Vec::with_capacity(config.n_samples);
    let mut accepted = 0;
    for step in 0..total_steps {
        let (next, was_accepted) = mh_step(current, target, support, &mut rng);
        current = next;
        if was_accepted {
            accepted += 1;
        }
        if step >= config.burn_in {
            states.push(current);
        }
    }
    Ok(Chain { states, accepted, total_steps, seed: config.seed })
}

/// Chains for one scenario, one per sample size.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub id: u32,
    /// (sample size, chain), in the configured size order.
    pub chains: Vec<(usize, Chain)>,
}

/// The scenario x sample-size grid of Tables 1-10.
#[derive(Debug, Clone)]
pub struct ScenarioSet {
    pub base_seed: u64,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn chain(&self, scenario_id: u32, size: usize) -> Option<&Chain> {
        self.scenarios
            .iter()
            .find(|s| s.id == scenario_id)?
            .chains
            .iter()
            .find(|(n, _)| *n == size)
            .map(|(_, c)| c)
    }
}

/// Run every (scenario, size) chain. The seed for scenario `s` at size
/// index `k` is `mix(mix(base_seed, s), k)`, so chains are mutually
/// independent and the grid is reproducible from `base_seed` alone.
#[allow(clippy::too_many_arguments)]
pub fn run_scenarios(
    target: &dyn Fn(f64) -> f64,
    support: SupportInterval,
    base_seed: u64,
    n_scenarios: u32,
    sizes: &[usize],
    burn_in: usize,
    init: ChainInit,
) -> Result<ScenarioSet, SamplerError> {
    assert!(n_scenarios >= 1);
    assert!(!sizes.is_empty());
    let mut scenarios = Vec::with_capacity(n_scenarios as usize);
    for s in 1..=n_scenarios {
        let mut chains = Vec::with_capacity(sizes.len());
        for (k, &size) in sizes.iter().enumerate() {
            let seed = derive_seed(base_seed, s as u64, k as u64);
            let config = ChainConfig::new(size, burn_in, seed, init)
                .map_err(|e| SamplerError::Scenario { scenario: s, size, source: Box::new(e) })?;
            let chain = run_chain(target, support, &config)
                .map_err(|e| SamplerError::Scenario { scenario: s, size, source: Box::new(e) })?;
            chains.push((size, chain));
        }
        scenarios.push(Scenario { id: s, chains });
    }
    Ok(ScenarioSet { base_seed, scenarios })
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: SupportInterval = SupportInterval { lo: 0.0, hi: 1.0 };

    fn config(n: usize, burn_in: usize, seed: u64) -> ChainConfig {
        ChainConfig::new(n, burn_in, seed, ChainInit::DataMedian(0.5)).unwrap()
    }

    #[test]
    fn constant_target_always_accepts() {
        let target = |_: f64| 1.0;
        let chain = run_chain(&target, UNIT, &config(1000, 100, 1)).unwrap();
        assert_eq!(chain.accepted(), chain.total_steps());
        assert_eq!(chain.acceptance_rate(), 1.0);
    }

    #[test]
    fn zero_density_proposal_is_rejected() {
        // Positive only in a hair around 0.5; every proposal lands in the
        // zero region and must be rejected.
        let target = |x: f64| if (x - 0.5).abs() < 1e-12 { 1.0 } else { 0.0 };
        let mut rng = SplitMix64::new(3);
        for _ in 0..100 {
            let (next, accepted) = mh_step(0.5, &target, UNIT, &mut rng);
            assert!(!accepted);
            assert_eq!(next, 0.5);
        }
    }

    #[test]
    fn half_ratio_acceptance_frequency() {
        // target(current) = 0.2, target(proposal) = 0.1 everywhere else:
        // acceptance probability is exactly 0.5.
        let current = 0.25;
        let target = move |x: f64| if (x - current).abs() < 1e-12 { 0.2 } else { 0.1 };
        let mut rng = SplitMix64::new(9);
        let trials = 100_000;
        let mut accepted = 0;
        for _ in 0..trials {
            let (_, was) = mh_step(current, &target, UNIT, &mut rng);
            if was {
                accepted += 1;
            }
        }
        let freq = accepted as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.01, "freq {freq}");
    }

    #[test]
    fn step_consumes_exactly_two_draws() {
        let target = |_: f64| 1.0;
        let mut a = SplitMix64::new(5);
        let mut b = SplitMix64::new(5);
        for _ in 0..10 {
            mh_step(0.5, &target, UNIT, &mut a);
            b.next_f64();
            b.next_f64();
        }
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn zero_n_samples_rejected() {
        assert_eq!(
            ChainConfig::new(0, 10, 1, ChainInit::UniformDraw).unwrap_err(),
            SamplerError::EmptyChain
        );
    }

    #[test]
    fn all_zero_target_rejected() {
        let target = |_: f64| 0.0;
        assert_eq!(run_chain(&target, UNIT, &config(10, 0, 1)).unwrap_err(), SamplerError::ZeroTarget);
    }

    #[test]
    fn constant_target_mean_near_half() {
        let target = |_: f64| 1.0;
        let chain = run_chain(&target, UNIT, &config(10_000, 1000, 42)).unwrap();
        let mean: f64 = chain.states().iter().sum::<f64>() / chain.len() as f64;
        assert!((0.47..=0.53).contains(&mean), "mean {mean}");
    }

    #[test]
    fn chains_are_deterministic() {
        let target = |x: f64| 6.0 * x * (1.0 - x);
        let a = run_chain(&target, UNIT, &config(500, 100, 7)).unwrap();
        let b = run_chain(&target, UNIT, &config(500, 100, 7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn all_states_within_support() {
        let target = |x: f64| 6.0 * x * (1.0 - x);
        let chain = run_chain(&target, UNIT, &config(5000, 500, 11)).unwrap();
        assert!(chain.states().iter().all(|&x| UNIT.contains(x)));
        assert!(chain.accepted() <= chain.total_steps());
    }

    #[test]
    fn median_in_clamped_region_falls_back_to_grid() {
        // Zero density on the left half; DataMedian(0.1) cannot start
        // there.
        let target = |x: f64| if x >= 0.5 { 1.0 } else { 0.0 };
        let cfg = ChainConfig::new(100, 0, 3, ChainInit::DataMedian(0.1)).unwrap();
        let chain = run_chain(&target, UNIT, &cfg).unwrap();
        assert!(chain.states().iter().all(|&x| x >= 0.5));
    }

    #[test]
    fn uniform_draw_init_is_deterministic() {
        let target = |_: f64| 1.0;
        let cfg = ChainConfig::new(100, 10, 21, ChainInit::UniformDraw).unwrap();
        let a = run_chain(&target, UNIT, &cfg).unwrap();
        let b = run_chain(&target, UNIT, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scenario_grid_shape_and_seeds() {
        let target = |x: f64| 6.0 * x * (1.0 - x);
        let set = run_scenarios(&target, UNIT, 42, 10, &DEFAULT_SIZES, 50, ChainInit::DataMedian(0.5))
            .unwrap();
        assert_eq!(set.scenarios.len(), 10);
        let mut seeds = Vec::new();
        for s in &set.scenarios {
            assert_eq!(s.chains.len(), 4);
            for (size, chain) in &s.chains {
                assert_eq!(chain.len(), *size);
                seeds.push(chain.seed());
            }
        }
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 40, "derived seeds must be pairwise distinct");
    }

    #[test]
    fn single_scenario_single_size() {
        let target = |_: f64| 1.0;
        let set =
            run_scenarios(&target, UNIT, 1, 1, &[500], 10, ChainInit::UniformDraw).unwrap();
        assert_eq!(set.scenarios.len(), 1);
        assert_eq!(set.scenarios[0].chains.len(), 1);
        assert_eq!(set.chain(1, 500).unwrap().len(), 500);
    }

    #[test]
    fn scenario_errors_carry_coordinates() {
        let target = |_: f64| 0.0;
        let err = run_scenarios(&target, UNIT, 1, 2, &[500], 10, ChainInit::UniformDraw)
            .unwrap_err();
        match err {
            SamplerError::Scenario { scenario, size, source } => {
                assert_eq!((scenario, size), (1, 500));
                assert_eq!(*source, SamplerError::ZeroTarget);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn monte_carlo_error_shrinks_with_sample_size() {
        let target = |x: f64| 6.0 * x * (1.0 - x);
        let mean_of = |n: usize, seed: u64| {
            let cfg = ChainConfig::new(n, 500, seed, ChainInit::DataMedian(0.5)).unwrap();
            let chain = run_chain(&target, UNIT, &cfg).unwrap();
            chain.states().iter().sum::<f64>() / chain.len() as f64
        };
        let stdev = |xs: &[f64]| {
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
        };
        let small: Vec<f64> = (0..10).map(|s| mean_of(500, 100 + s)).collect();
        let large: Vec<f64> = (0..10).map(|s| mean_of(10_000, 200 + s)).collect();
        let ratio = stdev(&small) / stdev(&large);
        assert!((2.0..=10.0).contains(&ratio), "ratio {ratio}");
    }
}
