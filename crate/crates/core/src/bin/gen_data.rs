//! Regenerates the bundled synthetic dataset: 200 auction records with a
//! bimodal real-price distribution (modes near 105 and 145 BRL/MWh)
//! spread over 2005-2014, plus a matching deflator table with base year
//! 2014. Deterministic: rerunning produces identical files.

use std::fmt::Write as _;

use auctionsim::rng::SplitMix64;

const SEED: u64 = 20_050_214;
const N_RECORDS: usize = 200;
const YEARS: [i32; 10] = [2005, 2006, 2007, 2008, 2009, 2010, 2011, 2012, 2013, 2014];
const FACTORS: [f64; 10] = [1.80, 1.71, 1.62, 1.53, 1.45, 1.37, 1.29, 1.21, 1.12, 1.00];

fn standard_normal(rng: &mut SplitMix64) -> f64 {
    let u1 = rng.next_f64().max(1e-12);
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn main() {
    let mut rng = SplitMix64::new(SEED);
    let mut auction = String::from("year,price_brl_mwh,auction_id\n");
    for i in 0..N_RECORDS {
        let year_idx = i % YEARS.len();
        let year = YEARS[year_idx];
        // 60/40 mixture of the two price clusters, in real (2014) terms.
        let z = standard_normal(&mut rng);
        let real = if rng.next_f64() < 0.6 { 105.0 + 9.0 * z } else { 145.0 + 11.0 * z };
        let real = real.clamp(60.0, 200.0);
        // Stored prices are nominal for the auction year.
        let nominal = real / FACTORS[year_idx];
        writeln!(auction, "{year},{nominal:.2},LEE-{year}-{:02}", i / YEARS.len() + 1).unwrap();
    }
    std::fs::create_dir_all("data").expect("create data dir");
    std::fs::write("data/auction.csv", auction).expect("write auction.csv");

    let mut deflator = String::from("year,factor\n");
    for (year, factor) in YEARS.iter().zip(FACTORS.iter()) {
        writeln!(deflator, "{year},{factor:.2}").unwrap();
    }
    std::fs::write("data/deflator.csv", deflator).expect("write deflator.csv");
    println!("wrote data/auction.csv ({N_RECORDS} records) and data/deflator.csv");
}
