pub mod ingest;
pub mod rng;
pub mod density;
pub mod sampler;
pub mod analysis;
pub mod cli;
