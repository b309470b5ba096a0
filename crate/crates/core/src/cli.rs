//! Pipeline orchestration behind the command-line interface: config
//! handling, the fit/simulate/validate/ingest commands and their file
//! outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{
    band_probability, build_histogram, format_percent, freedman_diaconis_bins, ks_distance,
    spread_statistics, summarize, BandQuery, ScenarioReport,
};
use crate::density::{
    approximation_error, fit_polynomial, simpson, uniform_grid, KdeModel, Kernel, PolyDensity,
    DEFAULT_DEGREE, DEFAULT_FIT_GRID, SIMPSON_SUBINTERVALS,
};
use crate::ingest::{adjust_for_inflation, parse_auction_csv, parse_deflator_csv, PriceSeries};
use crate::sampler::{
    run_scenarios, ChainInit, ScenarioSet, DEFAULT_BURN_IN, DEFAULT_SCENARIOS, DEFAULT_SIZES,
};

/// Exit codes: 0 success, 1 operational error, 2 validation failure.
#[derive(Debug)]
pub enum CliError {
    Operational(String),
    ValidationFailed,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Operational(msg) => write!(f, "{msg}"),
            CliError::ValidationFailed => write!(f, "validation failed"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Operational(_) => 1,
            CliError::ValidationFailed => 2,
        }
    }
}

fn op(msg: impl Into<String>) -> CliError {
    CliError::Operational(msg.into())
}

/// Full run configuration. Precedence: flag > config file > default.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_path: PathBuf,
    pub deflator_path: PathBuf,
    pub base_year: i32,
    pub kernel: Kernel,
    /// None = Silverman's rule.
    pub bandwidth: Option<f64>,
    pub degree: usize,
    pub fit_grid: usize,
    pub n_scenarios: u32,
    pub sizes: Vec<usize>,
    pub burn_in: usize,
    pub base_seed: u64,
    pub band_lo: f64,
    pub band_hi: f64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input_path: PathBuf::from("data/auction.csv"),
            deflator_path: PathBuf::from("data/deflator.csv"),
            base_year: 2014,
            kernel: Kernel::Gaussian,
            bandwidth: None,
            degree: DEFAULT_DEGREE,
            fit_grid: DEFAULT_FIT_GRID,
            n_scenarios: DEFAULT_SCENARIOS,
            sizes: DEFAULT_SIZES.to_vec(),
            burn_in: DEFAULT_BURN_IN,
            base_seed: 42,
            band_lo: 110.0,
            band_hi: 140.0,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn band(&self) -> BandQuery {
        BandQuery::new(self.band_lo, self.band_hi)
    }

    /// Apply `key = value` pairs from the flat config-file format.
    /// Unknown keys are errors; `#` starts a comment.
    pub fn apply_config_file(&mut self, text: &str, path: &Path) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| op(format!("{}:{}: expected key=value", path.display(), idx + 1)))?;
            self.apply_key(key.trim(), value.trim())
                .map_err(|e| op(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        }
        Ok(())
    }

    pub fn apply_key(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "input" => self.input_path = PathBuf::from(value),
            "deflator" => self.deflator_path = PathBuf::from(value),
            "base_year" => self.base_year = parse_num(key, value)?,
            "kernel" => self.kernel = value.parse()?,
            "bandwidth" => {
                self.bandwidth = if value == "auto" {
                    None
                } else {
                    let h: f64 = parse_num(key, value)?;
                    if h.is_nan() || h <= 0.0 {
                        return Err(format!("bandwidth must be positive, got {value}"));
                    }
                    Some(h)
                }
            }
            "degree" => self.degree = parse_num(key, value)?,
            "fit_grid" => self.fit_grid = parse_num(key, value)?,
            "scenarios" => self.n_scenarios = parse_num(key, value)?,
            "sizes" => self.sizes = parse_sizes(value)?,
            "burn_in" => self.burn_in = parse_num(key, value)?,
            "seed" => self.base_seed = parse_num(key, value)?,
            "band" => {
                let (lo, hi) = parse_band(value)?;
                self.band_lo = lo;
                self.band_hi = hi;
            }
            "out" => self.output_dir = PathBuf::from(value),
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("invalid value for {key}: `{value}`"))
}

pub fn parse_sizes(value: &str) -> Result<Vec<usize>, String> {
    let sizes: Result<Vec<usize>, String> = value
        .split(',')
        .map(|s| parse_num::<usize>("sizes", s.trim()))
        .collect();
    let sizes = sizes?;
    if sizes.is_empty() || sizes.contains(&0) {
        return Err("sizes must be a nonempty comma list of positive integers".into());
    }
    Ok(sizes)
}

pub fn parse_band(value: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = value
        .split_once(':')
        .ok_or_else(|| format!("band must be LO:HI, got `{value}`"))?;
    let lo: f64 = parse_num("band", lo.trim())?;
    let hi: f64 = parse_num("band", hi.trim())?;
    if lo > hi {
        return Err(format!("band lo {lo} exceeds hi {hi}"));
    }
    Ok((lo, hi))
}

/// The fitted front half of the pipeline.
pub struct Pipeline {
    pub series: PriceSeries,
    pub kde: KdeModel,
    pub poly: PolyDensity,
}

pub fn load_series(config: &RunConfig) -> Result<PriceSeries, CliError> {
    let auction_text = fs::read_to_string(&config.input_path)
        .map_err(|e| op(format!("cannot read {}: {e}", config.input_path.display())))?;
    let deflator_text = fs::read_to_string(&config.deflator_path)
        .map_err(|e| op(format!("cannot read {}: {e}", config.deflator_path.display())))?;
    let records = parse_auction_csv(&auction_text)
        .map_err(|e| op(format!("{}: {e}", config.input_path.display())))?;
    let table = parse_deflator_csv(&deflator_text)
        .map_err(|e| op(format!("{}: {e}", config.deflator_path.display())))?;
    adjust_for_inflation(&records, &table, config.base_year)
        .map_err(|e| op(format!("inflation adjustment: {e}")))
}

pub fn build_pipeline(config: &RunConfig) -> Result<Pipeline, CliError> {
    let series = load_series(config)?;
    let kde = KdeModel::from_series(&series, config.bandwidth, config.kernel)
        .map_err(|e| op(format!("kde: {e}")))?;
    let poly = fit_polynomial(&kde, config.degree, config.fit_grid)
        .map_err(|e| op(format!("fit: {e}")))?;
    Ok(Pipeline { series, kde, poly })
}

fn ensure_out_dir(config: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| op(format!("cannot create {}: {e}", config.output_dir.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| op(format!("cannot write {}: {e}", path.display())))
}

/// `fit`: write density.csv over the evaluation grid plus a diagnostics
/// line on stdout.
pub fn cmd_fit(config: &RunConfig) -> Result<(), CliError> {
    let pipeline = build_pipeline(config)?;
    ensure_out_dir(config)?;
    let grid = uniform_grid(pipeline.poly.support(), config.fit_grid);
    let mut out = String::from("x,kde,poly_target\n");
    for &x in &grid {
        writeln!(out, "{:.6},{:.9},{:.9}", x, pipeline.kde.eval(x), pipeline.poly.target(x))
            .unwrap();
    }
    write_file(&config.output_dir.join("density.csv"), &out)?;
    let (max_abs, rmse) = approximation_error(&pipeline.kde, &pipeline.poly, config.fit_grid);
    println!(
        "bandwidth={:.6} degree={} max_abs={:.9} rmse={:.9}",
        pipeline.kde.bandwidth(),
        config.degree,
        max_abs,
        rmse
    );
    Ok(())
}

pub fn samples_file_name(scenario: u32, size: usize) -> String {
    format!("samples_s{scenario}_n{size}.csv")
}

pub fn histogram_file_name(scenario: u32, size: usize) -> String {
    format!("histogram_s{scenario}_n{size}.csv")
}

pub fn run_simulation(config: &RunConfig, pipeline: &Pipeline) -> Result<ScenarioSet, CliError> {
    let target = |x: f64| pipeline.poly.target(x);
    run_scenarios(
        &target,
        pipeline.poly.support(),
        config.base_seed,
        config.n_scenarios,
        &config.sizes,
        config.burn_in,
        ChainInit::DataMedian(pipeline.series.median()),
    )
    .map_err(|e| op(format!("simulate: {e}")))
}

pub fn render_report_csv(report: &ScenarioReport) -> String {
    let mut out = String::from("scenario,size,probability\n");
    for row in &report.rows {
        writeln!(out, "{},{},{:.6}", row.scenario, row.size, row.probability).unwrap();
    }
    out
}

pub fn render_report_display(report: &ScenarioReport) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "Band [{:.2}, {:.2}] BRL/MWh, base_seed={}, burn_in={}, degree={}, bandwidth={:.6}",
        report.band.lo, report.band.hi, report.base_seed, report.burn_in, report.degree,
        report.bandwidth
    )
    .unwrap();
    let mut last_scenario = 0;
    for row in &report.rows {
        if row.scenario != last_scenario {
            writeln!(out, "\nScenario {}", row.scenario).unwrap();
            writeln!(out, "Size of sample\tProbability").unwrap();
            last_scenario = row.scenario;
        }
        writeln!(out, "{}\t{}", row.size, format_percent(row.probability)).unwrap();
    }
    out
}

/// `simulate`: run the full grid and write samples, histograms and the
/// report files.
pub fn cmd_simulate(config: &RunConfig) -> Result<ScenarioReport, CliError> {
    let pipeline = build_pipeline(config)?;
    let set = run_simulation(config, &pipeline)?;
    ensure_out_dir(config)?;

    for scenario in &set.scenarios {
        for (size, chain) in &scenario.chains {
            let mut samples = String::from("price\n");
            for &x in chain.states() {
                writeln!(samples, "{x:.6}").unwrap();
            }
            write_file(&config.output_dir.join(samples_file_name(scenario.id, *size)), &samples)?;

            let bins = freedman_diaconis_bins(chain.states());
            let hist = build_histogram(chain.states(), bins).map_err(|e| {
                op(format!("histogram: scenario {}, size {}: {e}", scenario.id, size))
            })?;
            let mut hist_csv = String::from("bin_lo,bin_hi,count,density\n");
            for i in 0..hist.counts.len() {
                writeln!(
                    hist_csv,
                    "{:.6},{:.6},{},{:.9}",
                    hist.edges[i],
                    hist.edges[i + 1],
                    hist.counts[i],
                    hist.density_heights[i]
                )
                .unwrap();
            }
            write_file(
                &config.output_dir.join(histogram_file_name(scenario.id, *size)),
                &hist_csv,
            )?;
        }
    }

    let report = summarize(
        &set,
        config.band(),
        config.burn_in,
        config.degree,
        pipeline.kde.bandwidth(),
    )
    .map_err(|e| op(format!("report: {e}")))?;
    write_file(&config.output_dir.join("report.csv"), &render_report_csv(&report))?;
    write_file(
        &config.output_dir.join("report_display.txt"),
        &render_report_display(&report),
    )?;
    Ok(report)
}

/// `ingest`: parse, deflate and echo series statistics.
pub fn cmd_ingest(config: &RunConfig) -> Result<(), CliError> {
    let series = load_series(config)?;
    let mean = series.prices().iter().sum::<f64>() / series.len() as f64;
    println!(
        "n={} base_year={} min={:.2} max={:.2} mean={:.2} median={:.2}",
        series.len(),
        series.base_year(),
        series.min(),
        series.max(),
        mean,
        series.median()
    );
    Ok(())
}

struct CheckList {
    lines: Vec<String>,
    all_pass: bool,
}

impl CheckList {
    fn new() -> Self {
        Self { lines: Vec::new(), all_pass: true }
    }

    fn record(&mut self, name: &str, pass: bool, detail: String) {
        if !pass {
            self.all_pass = false;
        }
        self.lines
            .push(format!("{} {name} {detail}", if pass { "PASS" } else { "FAIL" }));
    }
}

/// `validate`: rerun the pipeline deterministically, cross-check any
/// existing sample files and write PASS/FAIL lines to validation.txt.
pub fn cmd_validate(config: &RunConfig) -> Result<(), CliError> {
    let pipeline = build_pipeline(config)?;
    let set = run_simulation(config, &pipeline)?;
    ensure_out_dir(config)?;
    let mut checks = CheckList::new();

    // KDE mass over the support.
    let support = pipeline.poly.support();
    let integral =
        simpson(|x| pipeline.kde.eval(x), support.lo, support.hi, SIMPSON_SUBINTERVALS);
    checks.record(
        "kde_normalization",
        (integral - 1.0).abs() <= 1e-6,
        format!("integral={integral:.9}"),
    );

    let full_band = BandQuery::new(support.lo, support.hi);
    for scenario in &set.scenarios {
        for (size, chain) in &scenario.chains {
            let label = format!("s{}_n{}", scenario.id, size);

            // Existing sample files must parse and agree with the rerun.
            let path = config.output_dir.join(samples_file_name(scenario.id, *size));
            if path.exists() {
                let stored = read_samples_file(&path)?;
                let matches = stored.len() == chain.len()
                    && stored
                        .iter()
                        .zip(chain.states())
                        .all(|(a, b)| (a - b).abs() < 1e-6);
                checks.record(&format!("samples_match_{label}"), matches, format!("n={}", stored.len()));
            }

            let ks = ks_distance(chain.states(), |x| pipeline.poly.cdf(x));
            // 3.5x the 1%-level i.i.d. critical value. Acceptance rates
            // near 0.35 give an autocorrelation time around 4-5 steps,
            // which inflates the KS statistic by roughly its square root.
            let threshold = 3.5 * 1.63 / (*size as f64).sqrt();
            checks.record(
                &format!("ks_{label}"),
                ks < threshold,
                format!("ks={ks:.4} threshold={threshold:.4}"),
            );

            let rate = chain.acceptance_rate();
            checks.record(
                &format!("acceptance_{label}"),
                rate > 0.0 && rate <= 1.0,
                format!("rate={rate:.4}"),
            );

            let p_full = band_probability(chain, full_band)
                .map_err(|e| op(format!("validate: {e}")))?;
            checks.record(
                &format!("full_band_{label}"),
                p_full == 1.0,
                format!("probability={p_full}"),
            );
        }
    }

    // Monte Carlo scaling across scenarios. A stdev from fewer than 5
    // scenarios is too noisy to gate on.
    if set.scenarios.len() >= 5 && config.sizes.len() >= 2 {
        let report = summarize(
            &set,
            config.band(),
            config.burn_in,
            config.degree,
            pipeline.kde.bandwidth(),
        )
        .map_err(|e| op(format!("validate: {e}")))?;
        let smallest = *config.sizes.iter().min().unwrap();
        let largest = *config.sizes.iter().max().unwrap();
        let s_small = spread_statistics(&report, smallest)
            .map_err(|e| op(format!("validate: {e}")))?;
        let s_large = spread_statistics(&report, largest)
            .map_err(|e| op(format!("validate: {e}")))?;
        let ratio = s_small.stdev / s_large.stdev;
        checks.record(
            "mc_error_scaling",
            s_small.stdev > s_large.stdev,
            format!(
                "stdev_n{smallest}={:.6} stdev_n{largest}={:.6} ratio={ratio:.2}",
                s_small.stdev, s_large.stdev
            ),
        );
    }

    let mut out = checks.lines.join("\n");
    out.push('\n');
    write_file(&config.output_dir.join("validation.txt"), &out)?;
    print!("{out}");
    if checks.all_pass {
        Ok(())
    } else {
        Err(CliError::ValidationFailed)
    }
}

fn read_samples_file(path: &Path) -> Result<Vec<f64>, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| op(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some("price") => {}
        other => {
            return Err(op(format!(
                "{}: expected `price` header, got `{}`",
                path.display(),
                other.unwrap_or("")
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| {
                op(format!("{}: non-numeric price at line {}", path.display(), i + 2))
            })
        })
        .collect()
}
