//! Price density estimation: Gaussian/Epanechnikov KDE and a clamped
//! least-squares polynomial approximation used as the sampling target.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::ingest::PriceSeries;

/// Kernel cutoff, in bandwidths, past the data extremes. Wide enough that
/// the Gaussian tail mass outside the support stays below the 1e-6
/// normalization budget.
pub const SUPPORT_CUTOFF: f64 = 6.0;

/// Subintervals for the composite Simpson rule used for normalization and
/// the CDF.
pub const SIMPSON_SUBINTERVALS: usize = 4096;

pub const DEFAULT_DEGREE: usize = 17;
pub const DEFAULT_FIT_GRID: usize = 512;

#[derive(Debug, Error, PartialEq)]
pub enum DensityError {
    #[error("zero-variance series: bandwidth undefined")]
    ZeroVariance,
    #[error("fit grid must have more than degree + 1 points (degree {degree}, grid {grid})")]
    GridTooSmall { degree: usize, grid: usize },
    #[error("rank-deficient design: degree {degree} too high for the grid")]
    RankDeficient { degree: usize },
    #[error("clamped polynomial has non-positive mass over the support")]
    NonPositiveMass,
    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    Gaussian,
    Epanechnikov,
}

impl Kernel {
    fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Kernel::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }
}

impl std::str::FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(Kernel::Gaussian),
            "epanechnikov" => Ok(Kernel::Epanechnikov),
            other => Err(format!("unknown kernel `{other}` (expected gaussian|epanechnikov)")),
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Gaussian => write!(f, "gaussian"),
            Kernel::Epanechnikov => write!(f, "epanechnikov"),
        }
    }
}

/// Interval the fit, the uniform proposal and the CDF all live on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportInterval {
    pub lo: f64,
    pub hi: f64,
}

impl SupportInterval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo < hi, "support requires lo < hi");
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// Kernel density estimate over a set of observed prices.
#[derive(Debug, Clone)]
pub struct KdeModel {
    points: Vec<f64>,
    bandwidth: f64,
    kernel: Kernel,
}

impl KdeModel {
    pub fn new(points: Vec<f64>, bandwidth: f64, kernel: Kernel) -> Result<Self, DensityError> {
        assert!(!points.is_empty());
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(DensityError::NonPositiveBandwidth(bandwidth));
        }
        Ok(Self { points, bandwidth, kernel })
    }

    pub fn from_series(
        series: &PriceSeries,
        bandwidth: Option<f64>,
        kernel: Kernel,
    ) -> Result<Self, DensityError> {
        let h = match bandwidth {
            Some(h) => h,
            None => silverman_bandwidth(series.prices())?,
        };
        Self::new(series.prices().to_vec(), h, kernel)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    /// Density at `x`: (1/(n h)) sum_i K((x - x_i)/h).
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let sum: f64 = self.points.iter().map(|&xi| self.kernel.eval((x - xi) / h)).sum();
        sum / (self.points.len() as f64 * h)
    }

    /// [min - 6h, max + 6h]; covers the kernel tails so the truncated
    /// density still integrates to 1 within 1e-6.
    pub fn default_support(&self) -> SupportInterval {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &p in &self.points {
            lo = lo.min(p);
            hi = hi.max(p);
        }
        SupportInterval::new(lo - SUPPORT_CUTOFF * self.bandwidth, hi + SUPPORT_CUTOFF * self.bandwidth)
    }
}

/// Silverman's rule: 0.9 * min(sd, IQR/1.34) * n^(-1/5).
///
/// Quartiles use the nearest-rank convention (value at rank ceil(p*n)).
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64, DensityError> {
    let n = values.len() as f64;
    assert!(values.len() >= 2);
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if sd <= 0.0 {
        return Err(DensityError::ZeroVariance);
    }
    let iqr = quantile_nearest_rank(values, 0.75) - quantile_nearest_rank(values, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    Ok(0.9 * spread * n.powf(-0.2))
}

/// Nearest-rank quantile: sorted value at 1-based rank ceil(p * n).
pub fn quantile_nearest_rank(values: &[f64], p: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Least-squares polynomial in a Chebyshev basis over the support,
/// clamped at zero. The Metropolis-Hastings target.
#[derive(Debug, Clone)]
pub struct PolyDensity {
    /// Chebyshev coefficients c_0..c_d over the shifted-scaled support.
    coefficients: Vec<f64>,
    support: SupportInterval,
    /// Mass of the clamped polynomial over the support (Simpson).
    normalizer: f64,
    /// Cumulative Simpson mass at the quadrature nodes; increments are
    /// nonnegative, which keeps the CDF monotone.
    cumulative: Vec<f64>,
}

impl PolyDensity {
    pub fn from_coefficients(
        coefficients: Vec<f64>,
        support: SupportInterval,
    ) -> Result<Self, DensityError> {
        assert!(!coefficients.is_empty());
        let mut poly =
            Self { coefficients, support, normalizer: 1.0, cumulative: Vec::new() };
        // Each table interval spans two Simpson subintervals.
        let intervals = SIMPSON_SUBINTERVALS / 2;
        let h = support.width() / intervals as f64;
        let mut cumulative = Vec::with_capacity(intervals + 1);
        cumulative.push(0.0);
        let mut total = 0.0;
        for i in 0..intervals {
            let l = support.lo + i as f64 * h;
            total += h / 6.0 * (poly.target(l) + 4.0 * poly.target(l + 0.5 * h) + poly.target(l + h));
            cumulative.push(total);
        }
        if total.is_nan() || total <= 0.0 {
            return Err(DensityError::NonPositiveMass);
        }
        poly.normalizer = total;
        poly.cumulative = cumulative;
        Ok(poly)
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn support(&self) -> SupportInterval {
        self.support
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Raw polynomial value, no clamping, defined on the whole line.
    pub fn eval_raw(&self, x: f64) -> f64 {
        let t = 2.0 * (x - self.support.lo) / self.support.width() - 1.0;
        chebyshev_eval(&self.coefficients, t)
    }

    /// Unnormalized target: max(polynomial, 0) inside the support, 0
    /// outside.
    pub fn target(&self, x: f64) -> f64 {
        if !self.support.contains(x) {
            return 0.0;
        }
        self.eval_raw(x).max(0.0)
    }

    /// CDF of target/Z, by composite Simpson over [lo, x].
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.support.lo {
            return 0.0;
        }
        if x >= self.support.hi {
            return 1.0;
        }
        let intervals = self.cumulative.len() - 1;
        let h = self.support.width() / intervals as f64;
        let idx = (((x - self.support.lo) / h) as usize).min(intervals - 1);
        let l = self.support.lo + idx as f64 * h;
        let d = x - l;
        let partial =
            d / 6.0 * (self.target(l) + 4.0 * self.target(l + 0.5 * d) + self.target(x));
        ((self.cumulative[idx] + partial) / self.normalizer).clamp(0.0, 1.0)
    }
}

/// Clenshaw recurrence for sum c_k T_k(t).
fn chebyshev_eval(coefficients: &[f64], t: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coefficients.iter().skip(1).rev() {
        let b0 = 2.0 * t * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coefficients[0] + t * b1 - b2
}

/// Fit a degree-`degree` polynomial to the KDE on a uniform grid over its
/// default support.
pub fn fit_polynomial(
    model: &KdeModel,
    degree: usize,
    grid_size: usize,
) -> Result<PolyDensity, DensityError> {
    let support = model.default_support();
    fit_function(|x| model.eval(x), support, degree, grid_size)
}

/// Least squares against an arbitrary function sampled on the grid.
/// Solved by SVD rather than normal equations for conditioning.
pub fn fit_function(
    f: impl Fn(f64) -> f64,
    support: SupportInterval,
    degree: usize,
    grid_size: usize,
) -> Result<PolyDensity, DensityError> {
    if grid_size <= degree + 1 {
        return Err(DensityError::GridTooSmall { degree, grid: grid_size });
    }
    let xs = uniform_grid(support, grid_size);
    let mut design = DMatrix::zeros(grid_size, degree + 1);
    for (i, &x) in xs.iter().enumerate() {
        let t = 2.0 * (x - support.lo) / support.width() - 1.0;
        let mut t_prev = 1.0;
        let mut t_curr = t;
        design[(i, 0)] = 1.0;
        if degree >= 1 {
            design[(i, 1)] = t;
        }
        for k in 2..=degree {
            let t_next = 2.0 * t * t_curr - t_prev;
            design[(i, k)] = t_next;
            t_prev = t_curr;
            t_curr = t_next;
        }
    }
    let rhs = DVector::from_iterator(grid_size, xs.iter().map(|&x| f(x)));
    let svd = design.svd(true, true);
    let max_sv = svd.singular_values.max();
    if max_sv.is_nan() || max_sv <= 0.0 || svd.singular_values.min() / max_sv < 1e-12 {
        return Err(DensityError::RankDeficient { degree });
    }
    let coefficients = svd
        .solve(&rhs, 0.0)
        .map_err(|_| DensityError::RankDeficient { degree })?;
    PolyDensity::from_coefficients(coefficients.iter().copied().collect(), support)
}

/// Max and RMS deviation between the clamped polynomial and the KDE on a
/// uniform grid.
pub fn approximation_error(
    model: &KdeModel,
    poly: &PolyDensity,
    grid_size: usize,
) -> (f64, f64) {
    assert!(grid_size >= 2);
    let xs = uniform_grid(poly.support(), grid_size);
    let mut max_abs: f64 = 0.0;
    let mut sum_sq = 0.0;
    for &x in &xs {
        let d = (poly.target(x) - model.eval(x)).abs();
        max_abs = max_abs.max(d);
        sum_sq += d * d;
    }
    (max_abs, (sum_sq / grid_size as f64).sqrt())
}

/// Uniform grid with both endpoints included.
pub fn uniform_grid(support: SupportInterval, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = support.width() / (n - 1) as f64;
    (0..n).map(|i| support.lo + i as f64 * step).collect()
}

/// Composite Simpson rule with `subintervals` panels (rounded up to even).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, subintervals: usize) -> f64 {
    let n = subintervals + subintervals % 2;
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}
