//! A desk-scale laboratory for studying how small short-URL token spaces
//! expose the cloud resources behind them.
//!
//! Everything here is simulated: the crate builds synthetic URL-shortening
//! services, cloud-storage accounts, and mapping services, then runs
//! brute-force token scans, density estimation, capability-URL account
//! traversal, and mitigation analysis against them. No real service is ever
//! contacted.
//!
//! The primary interface is the `examples/` directory — one runnable example
//! per capability:
//!
//! ```bash
//! cargo run --example space_arithmetic    # token-space cardinalities and search bits
//! cargo run --example shorten_and_resolve # allocation strategies, redirects, analytics
//! cargo run --example rate_limits        # token-bucket throttling, bursts, CAPTCHAs
//! cargo run --example sample_density     # sampling without replacement, Wilson intervals
//! cargo run --example scan_service      # multi-worker budgeted scan with backoff
//! cargo run --example enumeration_cost   # full-enumeration cost projections
//! cargo run --example storage_traversal  # capability-URL account traversal
//! cargo run --example writable_folders   # unlocked-folder discovery and write audit
//! cargo run --example maps_privacy      # directions analysis and identity joins
//! cargo run --example defenses          # mitigation effectiveness comparison
//! cargo run --example http_facade       # loopback HTTP resolver facade
//! ```
//!
//! A thin `shortscan` binary wires the same library calls into reproducible
//! experiments (`populate`, `scan`, `estimate`, `traverse`, `inject-audit`,
//! `maps-analyze`, `mitigate`, `report`).
//!
//! All simulation time is virtual ([`clock::VirtualClock`]), all randomness
//! flows from a single experiment seed, and every run is deterministic.

pub mod clock;
pub mod cloudstore;
pub mod cloudurl;
pub mod config;
pub mod experiment;
pub mod http;
pub mod maps;
pub mod mitigation;
pub mod numeric;
pub mod permute;
pub mod report;
pub mod sampler;
pub mod scanner;
pub mod shortener;
pub mod space;

pub use clock::{VirtualClock, VirtualDuration, VirtualInstant};
pub use sampler::{DensityEstimate, SamplePlan};
pub use scanner::{ScanBudget, ScanPlan, ScanReport};
pub use shortener::{GenerationStrategy, RatePolicy, Resolution, ShortLink, ShortenerService};
pub use space::{SpaceFamily, TokenSpace};
