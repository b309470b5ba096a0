//! Band probabilities, histograms, KS statistics and the scenario report.

use thiserror::Error;

use crate::density::quantile_nearest_rank;
use crate::sampler::{Chain, ScenarioSet};

/// Bins never drop below this, whatever Freedman-Diaconis suggests.
pub const MIN_BINS: usize = 10;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("empty chain")]
    EmptyChain,
    #[error("empty sample list")]
    EmptySamples,
    #[error("degenerate range (min = max)")]
    DegenerateRange,
    #[error("need at least 2 scenarios at size {size}, got {got}")]
    TooFewScenarios { size: usize, got: usize },
}

/// Price band, inclusive on both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandQuery {
    pub lo: f64,
    pub hi: f64,
}

impl BandQuery {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "band requires lo <= hi");
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

impl Default for BandQuery {
    fn default() -> Self {
        Self { lo: 110.0, hi: 140.0 }
    }
}

/// Fraction of post-burn-in states inside the band.
pub fn band_probability(chain: &Chain, band: BandQuery) -> Result<f64, AnalysisError> {
    if chain.is_empty() {
        return Err(AnalysisError::EmptyChain);
    }
    let inside = chain.states().iter().filter(|&&x| band.contains(x)).count();
    Ok(inside as f64 / chain.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    /// Counts scaled so the histogram integrates to 1.
    pub density_heights: Vec<f64>,
}

/// Uniform bins over [min, max]; the right-most bin is closed on both
/// ends, the others half-open.
pub fn build_histogram(samples: &[f64], n_bins: usize) -> Result<Histogram, AnalysisError> {
    assert!(n_bins >= 1);
    if samples.is_empty() {
        return Err(AnalysisError::EmptySamples);
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo >= hi {
        return Err(AnalysisError::DegenerateRange);
    }
    let width = (hi - lo) / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| lo + i as f64 * width).collect();
    let mut counts = vec![0usize; n_bins];
    for &x in samples {
        let idx = (((x - lo) / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    let total = samples.len() as f64;
    let density_heights = counts.iter().map(|&c| c as f64 / (total * width)).collect();
    Ok(Histogram { edges, counts, density_heights })
}

/// Freedman-Diaconis bin count with a floor of MIN_BINS.
pub fn freedman_diaconis_bins(samples: &[f64]) -> usize {
    if samples.len() < 2 {
        return MIN_BINS;
    }
    let lo = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let iqr = quantile_nearest_rank(samples, 0.75) - quantile_nearest_rank(samples, 0.25);
    if iqr <= 0.0 || hi <= lo {
        return MIN_BINS;
    }
    let width = 2.0 * iqr * (samples.len() as f64).powf(-1.0 / 3.0);
    (((hi - lo) / width).ceil() as usize).max(MIN_BINS)
}

/// Kolmogorov-Smirnov statistic between the empirical CDF of `samples`
/// and a reference CDF.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    assert!(!samples.is_empty());
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let upper = ((i + 1) as f64 / n - f).abs();
        let lower = (i as f64 / n - f).abs();
        sup = sup.max(upper).max(lower);
    }
    sup
}

/// One (scenario, size, probability) row of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: u32,
    pub size: usize,
    pub probability: f64,
}

/// The Tables 1-10 shaped report plus the run parameters it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub rows: Vec<ReportRow>,
    pub base_seed: u64,
    pub band: BandQuery,
    pub burn_in: usize,
    pub degree: usize,
    pub bandwidth: f64,
}

/// One row per (scenario, size), ordered by scenario then size order.
pub fn summarize(
    set: &ScenarioSet,
    band: BandQuery,
    burn_in: usize,
    degree: usize,
    bandwidth: f64,
) -> Result<ScenarioReport, AnalysisError> {
    assert!(!set.scenarios.is_empty());
    let mut rows = Vec::new();
    for scenario in &set.scenarios {
        for (size, chain) in &scenario.chains {
            rows.push(ReportRow {
                scenario: scenario.id,
                size: *size,
                probability: band_probability(chain, band)?,
            });
        }
    }
    Ok(ScenarioReport { rows, base_seed: set.base_seed, band, burn_in, degree, bandwidth })
}

/// Spread of the probability column at one sample size across scenarios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadStatistics {
    pub min: f64,
    pub max: f64,
    pub stdev: f64,
}

pub fn spread_statistics(
    report: &ScenarioReport,
    size: usize,
) -> Result<SpreadStatistics, AnalysisError> {
    let probs: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.size == size)
        .map(|r| r.probability)
        .collect();
    if probs.len() < 2 {
        return Err(AnalysisError::TooFewScenarios { size, got: probs.len() });
    }
    let min = probs.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = probs.iter().sum::<f64>() / probs.len() as f64;
    let var = probs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (probs.len() - 1) as f64;
    Ok(SpreadStatistics { min, max, stdev: var.sqrt() })
}

/// Two-decimal percent with half-up rounding: 0.3086 -> "30.86%".
pub fn format_percent(p: f64) -> String {
    let hundredths = (p * 10_000.0 + 0.5).floor() as i64;
    format!("{}.{:02}%", hundredths / 100, hundredths % 100)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::SupportInterval;
    use crate::rng::SplitMix64;
    use crate::sampler::{run_chain, ChainConfig, ChainInit};

    const UNIT: SupportInterval = SupportInterval { lo: 0.0, hi: 1.0 };

    fn uniform_chain(n: usize, seed: u64) -> Chain {
        let target = |_: f64| 1.0;
        let cfg = ChainConfig::new(n, 100, seed, ChainInit::UniformDraw).unwrap();
        run_chain(&target, UNIT, &cfg).unwrap()
    }

    #[test]
    fn band_counts_closed_interval() {
        let states = [100.0, 110.0, 115.0, 120.0, 135.0, 139.0, 140.0, 141.0, 150.0, 90.0];
        let band = BandQuery::new(110.0, 140.0);
        let inside = states.iter().filter(|&&x| band.contains(x)).count();
        assert_eq!(inside, 6);
    }

    #[test]
    fn band_probability_full_support_is_one() {
        let chain = uniform_chain(500, 1);
        let p = band_probability(&chain, BandQuery::new(0.0, 1.0)).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn band_probability_monotone_under_inclusion() {
        let chain = uniform_chain(2000, 2);
        let mut rng = SplitMix64::new(77);
        for _ in 0..200 {
            let a = rng.next_f64();
            let b = rng.next_f64();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let inner = BandQuery::new(lo, hi);
            let pad_lo = rng.next_f64() * lo;
            let pad_hi = hi + rng.next_f64() * (1.0 - hi);
            let outer = BandQuery::new(pad_lo, pad_hi);
            let p_inner = band_probability(&chain, inner).unwrap();
            let p_outer = band_probability(&chain, outer).unwrap();
            assert!(p_inner <= p_outer);
            assert!((0.0..=1.0).contains(&p_inner));
        }
    }

    #[test]
    fn histogram_direct_binning() {
        // Bins [0.5,1.5) [1.5,2.5) [2.5,3.5]: set up via data spanning
        // exactly those edges.
        let samples = [0.5, 1.0, 2.0, 3.5];
        let h = build_histogram(&samples, 3).unwrap();
        assert_eq!(h.edges, vec![0.5, 1.5, 2.5, 3.5]);
        assert_eq!(h.counts, vec![2, 1, 1]);
    }

    #[test]
    fn histogram_rightmost_bin_closed() {
        let samples = [0.0, 1.0, 2.0];
        let h = build_histogram(&samples, 2).unwrap();
        // max lands in the last bin, not past it
        assert_eq!(h.counts, vec![1, 2]);
    }

    #[test]
    fn histogram_density_integrates_to_one() {
        let chain = uniform_chain(5000, 3);
        let h = build_histogram(chain.states(), 23).unwrap();
        assert_eq!(h.counts.iter().sum::<usize>(), chain.len());
        let integral: f64 = h
            .density_heights
            .iter()
            .enumerate()
            .map(|(i, &d)| d * (h.edges[i + 1] - h.edges[i]))
            .sum();
        assert!((integral - 1.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_degenerate_range_rejected() {
        assert_eq!(
            build_histogram(&[2.0, 2.0, 2.0], 4).unwrap_err(),
            AnalysisError::DegenerateRange
        );
    }

    #[test]
    fn histogram_empty_rejected() {
        assert_eq!(build_histogram(&[], 4).unwrap_err(), AnalysisError::EmptySamples);
    }

    #[test]
    fn freedman_diaconis_floor() {
        assert_eq!(freedman_diaconis_bins(&[1.0]), MIN_BINS);
        assert_eq!(freedman_diaconis_bins(&[1.0, 1.0, 1.0, 2.0]), MIN_BINS);
        let chain = uniform_chain(10_000, 4);
        assert!(freedman_diaconis_bins(chain.states()) >= MIN_BINS);
    }

    #[test]
    fn ks_zero_at_interleaved_quantiles() {
        // Samples at the (i - 0.5)/n quantiles of the uniform CDF.
        let n = 20;
        let samples: Vec<f64> = (1..=n).map(|i| (i as f64 - 0.5) / n as f64).collect();
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_single_sample_at_median() {
        let d = ks_distance(&[0.5], |x| x.clamp(0.0, 1.0));
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_uniform_variates_below_critical_value() {
        let mut rng = SplitMix64::new(12345);
        let samples: Vec<f64> = (0..1000).map(|_| rng.next_f64()).collect();
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        assert!(d < 0.06, "ks {d}");
    }

    #[test]
    fn ks_invariant_under_affine_map() {
        let mut rng = SplitMix64::new(8);
        let samples: Vec<f64> = (0..500).map(|_| rng.next_f64()).collect();
        let d1 = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        let mapped: Vec<f64> = samples.iter().map(|x| 30.0 * x + 110.0).collect();
        let d2 = ks_distance(&mapped, |y| ((y - 110.0) / 30.0).clamp(0.0, 1.0));
        assert!((d1 - d2).abs() < 1e-12);
    }

    #[test]
    fn summarize_shapes_rows() {
        let target = |x: f64| 6.0 * x * (1.0 - x);
        let set = crate::sampler::run_scenarios(
            &target,
            UNIT,
            42,
            10,
            &[500, 1000, 5000, 10_000],
            100,
            ChainInit::DataMedian(0.5),
        )
        .unwrap();
        let report = summarize(&set, BandQuery::new(0.0, 1.0), 100, 17, 1.0).unwrap();
        assert_eq!(report.rows.len(), 40);
        assert!(report.rows.iter().all(|r| r.probability == 1.0));
        // ordered by scenario then size position
        for w in report.rows.windows(2) {
            assert!(w[0].scenario <= w[1].scenario);
        }
    }

    #[test]
    fn spread_two_point_hand_values() {
        let report = ScenarioReport {
            rows: vec![
                ReportRow { scenario: 1, size: 500, probability: 0.2 },
                ReportRow { scenario: 2, size: 500, probability: 0.4 },
            ],
            base_seed: 0,
            band: BandQuery::default(),
            burn_in: 0,
            degree: 17,
            bandwidth: 1.0,
        };
        let s = spread_statistics(&report, 500).unwrap();
        assert_eq!(s.min, 0.2);
        assert_eq!(s.max, 0.4);
        assert!((s.stdev - 0.141_421_356_237).abs() < 1e-9);
        assert_eq!(
            spread_statistics(&report, 1000).unwrap_err(),
            AnalysisError::TooFewScenarios { size: 1000, got: 0 }
        );
    }

    #[test]
    fn spread_identical_probabilities_zero_stdev() {
        let report = ScenarioReport {
            rows: vec![
                ReportRow { scenario: 1, size: 500, probability: 0.3 },
                ReportRow { scenario: 2, size: 500, probability: 0.3 },
                ReportRow { scenario: 3, size: 500, probability: 0.3 },
            ],
            base_seed: 0,
            band: BandQuery::default(),
            burn_in: 0,
            degree: 17,
            bandwidth: 1.0,
        };
        assert_eq!(spread_statistics(&report, 500).unwrap().stdev, 0.0);
    }

    #[test]
    fn percent_formatting_half_up() {
        assert_eq!(format_percent(0.3086), "30.86%");
        assert_eq!(format_percent(0.278), "27.80%");
        assert_eq!(format_percent(1.0), "100.00%");
        assert_eq!(format_percent(0.0), "0.00%");
        assert_eq!(format_percent(0.12346), "12.35%");
        // exact binary tie: 9/32 * 10000 = 2812.5, half-up gives 28.13
        assert_eq!(format_percent(0.28125), "28.13%");
    }
}
