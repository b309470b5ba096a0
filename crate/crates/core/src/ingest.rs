//! Auction price ingestion: CSV parsing, deflator tables and inflation
//! adjustment to a base year.

use std::collections::BTreeMap;

use thiserror::Error;

pub const AUCTION_HEADER: &str = "year,price_brl_mwh,auction_id";
pub const DEFLATOR_HEADER: &str = "year,factor";

const YEAR_MIN: i32 = 1990;
const YEAR_MAX: i32 = 2100;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("missing or wrong header: expected `{expected}`, got `{got}`")]
    BadHeader { expected: &'static str, got: String },
    #[error("wrong field count at line {line}: expected {expected}, got {got}")]
    FieldCount { line: usize, expected: usize, got: usize },
    #[error("non-numeric {field} at line {line}: `{value}`")]
    NonNumeric { line: usize, field: &'static str, value: String },
    #[error("non-positive price at line {line}")]
    NonPositivePrice { line: usize },
    #[error("non-positive factor at line {line}")]
    NonPositiveFactor { line: usize },
    #[error("year {year} out of range at line {line}")]
    YearOutOfRange { line: usize, year: i32 },
    #[error("duplicate year {year} at line {line}")]
    DuplicateYear { line: usize, year: i32 },
    #[error("year {year} missing from deflator table")]
    MissingYear { year: i32 },
    #[error("empty record list")]
    EmptyRecords,
    #[error("price series needs at least 2 observations, got {n}")]
    TooFewPrices { n: usize },
    #[error("price series is constant (min = max)")]
    ConstantSeries,
}

/// One raw auction price observation in nominal currency.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionRecord {
    pub year: i32,
    pub price_nominal: f64,
    pub auction_id: String,
}

/// Year -> multiplicative factor to a common currency index.
#[derive(Debug, Clone, Default)]
pub struct DeflatorTable {
    factors: BTreeMap<i32, f64>,
}

impl DeflatorTable {
    pub fn factor(&self, year: i32) -> Option<f64> {
        self.factors.get(&year).copied()
    }

    pub fn insert(&mut self, year: i32, factor: f64) -> Result<(), IngestError> {
        assert!(factor > 0.0);
        if self.factors.insert(year, factor).is_some() {
            return Err(IngestError::DuplicateYear { line: 0, year });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }
}

/// Inflation-adjusted prices, expressed in base-year currency.
#[derive(Debug, Clone)]
pub struct PriceSeries {
    prices: Vec<f64>,
    base_year: i32,
}

impl PriceSeries {
    /// Rejects series that are too short or constant: density estimation
    /// downstream is undefined for both.
    pub fn new(prices: Vec<f64>, base_year: i32) -> Result<Self, IngestError> {
        if prices.len() < 2 {
            return Err(IngestError::TooFewPrices { n: prices.len() });
        }
        assert!(prices.iter().all(|p| *p > 0.0 && p.is_finite()));
        let (lo, hi) = min_max(&prices);
        if lo >= hi {
            return Err(IngestError::ConstantSeries);
        }
        Ok(Self { prices, base_year })
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn base_year(&self) -> i32 {
        self.base_year
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn min(&self) -> f64 {
        min_max(&self.prices).0
    }

    pub fn max(&self) -> f64 {
        min_max(&self.prices).1
    }

    /// Median of the observations (midpoint of the two central order
    /// statistics for even length).
    pub fn median(&self) -> f64 {
        let mut sorted = self.prices.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len();
        if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        }
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Parse auction records from CSV text. Dialect: comma separator, `.`
/// decimal point, no quoting, mandatory header.
pub fn parse_auction_csv(text: &str) -> Result<Vec<AuctionRecord>, IngestError> {
    let mut lines = text.lines();
    check_header(lines.next(), AUCTION_HEADER)?;

    let mut records = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line = idx + 2; // 1-based, after the header
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 3 {
            return Err(IngestError::FieldCount { line, expected: 3, got: fields.len() });
        }
        let year = parse_year(fields[0], line)?;
        let price: f64 = fields[1].trim().parse().map_err(|_| IngestError::NonNumeric {
            line,
            field: "price",
            value: fields[1].to_string(),
        })?;
        if !price.is_finite() || price <= 0.0 {
            return Err(IngestError::NonPositivePrice { line });
        }
        records.push(AuctionRecord {
            year,
            price_nominal: price,
            auction_id: fields[2].trim().to_string(),
        });
    }
    Ok(records)
}

/// Parse a deflator table from CSV text. Duplicate years are an error.
pub fn parse_deflator_csv(text: &str) -> Result<DeflatorTable, IngestError> {
    let mut lines = text.lines();
    check_header(lines.next(), DEFLATOR_HEADER)?;

    let mut table = DeflatorTable::default();
    for (idx, raw) in lines.enumerate() {
        let line = idx + 2;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 2 {
            return Err(IngestError::FieldCount { line, expected: 2, got: fields.len() });
        }
        let year = parse_year(fields[0], line)?;
        let factor: f64 = fields[1].trim().parse().map_err(|_| IngestError::NonNumeric {
            line,
            field: "factor",
            value: fields[1].to_string(),
        })?;
        if !factor.is_finite() || factor <= 0.0 {
            return Err(IngestError::NonPositiveFactor { line });
        }
        table
            .insert(year, factor)
            .map_err(|_| IngestError::DuplicateYear { line, year })?;
    }
    Ok(table)
}

/// Convert nominal prices to base-year currency:
/// real = nominal * factor(year) / factor(base_year).
pub fn adjust_for_inflation(
    records: &[AuctionRecord],
    table: &DeflatorTable,
    base_year: i32,
) -> Result<PriceSeries, IngestError> {
    if records.is_empty() {
        return Err(IngestError::EmptyRecords);
    }
    let base = table
        .factor(base_year)
        .ok_or(IngestError::MissingYear { year: base_year })?;
    let mut prices = Vec::with_capacity(records.len());
    for r in records {
        let f = table
            .factor(r.year)
            .ok_or(IngestError::MissingYear { year: r.year })?;
        prices.push(r.price_nominal * f / base);
    }
    PriceSeries::new(prices, base_year)
}

/// Serialize records back to the canonical CSV dialect, prices with two
/// decimals.
pub fn records_to_csv(records: &[AuctionRecord]) -> String {
    let mut out = String::from(AUCTION_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!("{},{:.2},{}\n", r.year, r.price_nominal, r.auction_id));
    }
    out
}

fn check_header(line: Option<&str>, expected: &'static str) -> Result<(), IngestError> {
    match line {
        Some(h) if h.trim_end_matches('\r') == expected => Ok(()),
        other => Err(IngestError::BadHeader {
            expected,
            got: other.unwrap_or("").to_string(),
        }),
    }
}

fn parse_year(field: &str, line: usize) -> Result<i32, IngestError> {
    let year: i32 = field.trim().parse().map_err(|_| IngestError::NonNumeric {
        line,
        field: "year",
        value: field.to_string(),
    })?;
    if !(YEAR_MIN..=YEAR_MAX).contains(&year) {
        return Err(IngestError::YearOutOfRange { line, year });
    }
    Ok(year)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(entries: &[(i32, f64)]) -> DeflatorTable {
        let mut t = DeflatorTable::default();
        for &(y, f) in entries {
            t.insert(y, f).unwrap();
        }
        t
    }

    #[test]
    fn parses_single_record() {
        let text = "year,price_brl_mwh,auction_id\n2005,120.50,LEE-01\n";
        let records = parse_auction_csv(text).unwrap();
        assert_eq!(
            records,
            vec![AuctionRecord { year: 2005, price_nominal: 120.50, auction_id: "LEE-01".into() }]
        );
    }

    #[test]
    fn header_only_is_empty() {
        let records = parse_auction_csv("year,price_brl_mwh,auction_id\n").unwrap();
        assert!(records.is_empty());
    }

    #[test]
    fn rejects_non_positive_price_with_line_number() {
        let err = parse_auction_csv("year,price_brl_mwh,auction_id\n2005,-3,X\n").unwrap_err();
        assert_eq!(err, IngestError::NonPositivePrice { line: 2 });
        assert_eq!(err.to_string(), "non-positive price at line 2");
    }

    #[test]
    fn rejects_wrong_header() {
        let err = parse_auction_csv("year,price,auction_id\n").unwrap_err();
        assert!(matches!(err, IngestError::BadHeader { .. }));
    }

    #[test]
    fn rejects_wrong_field_count() {
        let err = parse_auction_csv("year,price_brl_mwh,auction_id\n2005,120.50\n").unwrap_err();
        assert_eq!(err, IngestError::FieldCount { line: 2, expected: 3, got: 2 });
    }

    #[test]
    fn rejects_non_numeric_year() {
        let err = parse_auction_csv("year,price_brl_mwh,auction_id\nxx,120.50,A\n").unwrap_err();
        assert!(matches!(err, IngestError::NonNumeric { line: 2, field: "year", .. }));
    }

    #[test]
    fn parses_deflator_table() {
        let t = parse_deflator_csv("year,factor\n2005,1.80\n2014,1.00\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.factor(2005), Some(1.80));
        assert_eq!(t.factor(2014), Some(1.00));
    }

    #[test]
    fn rejects_duplicate_year() {
        let err = parse_deflator_csv("year,factor\n2005,1.8\n2005,1.7\n").unwrap_err();
        assert_eq!(err, IngestError::DuplicateYear { line: 3, year: 2005 });
    }

    #[test]
    fn rejects_non_positive_factor() {
        let err = parse_deflator_csv("year,factor\n2010,0\n").unwrap_err();
        assert_eq!(err, IngestError::NonPositiveFactor { line: 2 });
    }

    #[test]
    fn identity_factor_keeps_price() {
        let records = vec![
            AuctionRecord { year: 2010, price_nominal: 100.0, auction_id: "A".into() },
            AuctionRecord { year: 2010, price_nominal: 90.0, auction_id: "B".into() },
        ];
        let t = table(&[(2010, 1.0)]);
        let series = adjust_for_inflation(&records, &t, 2010).unwrap();
        assert_eq!(series.prices(), &[100.0, 90.0]);
    }

    #[test]
    fn ratio_to_base_scales_price() {
        let records = vec![
            AuctionRecord { year: 2005, price_nominal: 100.0, auction_id: "A".into() },
            AuctionRecord { year: 2010, price_nominal: 50.0, auction_id: "B".into() },
        ];
        let t = table(&[(2005, 1.25), (2010, 1.0)]);
        let series = adjust_for_inflation(&records, &t, 2010).unwrap();
        assert_eq!(series.prices()[0], 125.0);
    }

    #[test]
    fn hand_computed_deflation() {
        // 120.50 * 1.80 / 1.20 = 120.50 * 1.5 = 180.75
        let records = vec![
            AuctionRecord { year: 2005, price_nominal: 120.50, auction_id: "A".into() },
            AuctionRecord { year: 2014, price_nominal: 100.0, auction_id: "B".into() },
        ];
        let t = table(&[(2005, 1.80), (2014, 1.20)]);
        let series = adjust_for_inflation(&records, &t, 2014).unwrap();
        assert!((series.prices()[0] - 180.75).abs() < 1e-12);
    }

    #[test]
    fn missing_year_names_the_year() {
        let records =
            vec![AuctionRecord { year: 2007, price_nominal: 10.0, auction_id: "A".into() }];
        let t = table(&[(2014, 1.0)]);
        let err = adjust_for_inflation(&records, &t, 2014).unwrap_err();
        assert_eq!(err, IngestError::MissingYear { year: 2007 });
    }

    #[test]
    fn empty_records_rejected() {
        let t = table(&[(2014, 1.0)]);
        assert_eq!(adjust_for_inflation(&[], &t, 2014).unwrap_err(), IngestError::EmptyRecords);
    }

    #[test]
    fn short_series_rejected() {
        assert!(matches!(
            PriceSeries::new(vec![100.0], 2014),
            Err(IngestError::TooFewPrices { n: 1 })
        ));
    }

    #[test]
    fn constant_series_rejected() {
        assert!(matches!(
            PriceSeries::new(vec![100.0, 100.0], 2014),
            Err(IngestError::ConstantSeries)
        ));
    }

    #[test]
    fn csv_round_trip_canonical() {
        let text = "year,price_brl_mwh,auction_id\n2005,120.50,LEE-01\n2006,99.00,LEE-02\n";
        let records = parse_auction_csv(text).unwrap();
        assert_eq!(records_to_csv(&records), text);
    }

    #[test]
    fn median_even_and_odd() {
        let s = PriceSeries::new(vec![3.0, 1.0, 2.0], 2014).unwrap();
        assert_eq!(s.median(), 2.0);
        let s = PriceSeries::new(vec![4.0, 1.0, 2.0, 3.0], 2014).unwrap();
        assert_eq!(s.median(), 2.5);
    }
}
