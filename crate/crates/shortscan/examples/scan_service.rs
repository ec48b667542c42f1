//! A full budgeted scan: multiple workers, pacing, backoff, progress, and
//! the classified report.
//!
//! ```bash
//! cargo run --example scan_service
//! ```

use shortscan::clock::{VirtualDuration, VirtualInstant};
use shortscan::sampler::SamplePlan;
use shortscan::scanner::{classify_hit, run_scan, ScanBudget, ScanPlan};
use shortscan::shortener::{GenerationStrategy, RatePolicy, ShortenerService};
use shortscan::space::{SpaceFamily, TokenSpace};
use shortscan::VirtualClock;

fn main() {
    // Target: a 62^3 service at ~42% density with a few branded links.
    let space = TokenSpace::base62(3);
    let service = ShortenerService::new(
        SpaceFamily::single(space.clone()),
        RatePolicy::default(),
        VirtualClock::new(),
    )
    .unwrap();
    let strategy = GenerationStrategy::Random { seed: 11 };
    for i in 0..100_000u32 {
        let url = match i % 500 {
            0 => format!(
                "https://onedrive.live.com/?cid=485bef1a8053{:04}&id=485BEF1A8053{:04}!115&ithint=folder,docx",
                i % 10_000,
                i % 10_000
            ),
            1 => format!("https://maps.example.com/dir/home-{i}/clinic-2-austin-tx/?rid=m{i}"),
            _ => format!("https://pages.example.org/article/{i}"),
        };
        service.shorten(&url, &strategy, "generic").unwrap();
    }
    println!(
        "target service: {} links, density {:.4}",
        service.issued_count(),
        service.density().as_f64()
    );

    let plan = ScanPlan::Sample(SamplePlan::new(space, 20_000, 21).unwrap());
    let budget = ScanBudget {
        max_queries: 20_000,
        max_wall_time: VirtualDuration::from_secs(4000),
        worker_count: 4,
        per_worker_rate: 2.6,
        ..ScanBudget::default()
    };
    let report = run_scan(
        &plan,
        &budget,
        &service,
        |url: &str| classify_hit(url).to_string(),
        VirtualInstant::ZERO,
    )
    .unwrap();

    println!(
        "\nscan: {} tried, {} hits, {} misses, {} unresolved ({} workers, {:.0} virtual s)",
        report.tokens_tried,
        report.hits,
        report.misses,
        report.unresolved,
        report.workers,
        report.elapsed.as_secs_f64()
    );
    println!(
        "rate-limit events: {}, blocked {:.1} s total, complete: {}",
        report.rate_limited_events,
        report.blocked_time.as_secs_f64(),
        report.complete
    );
    if let Some(density) = &report.density {
        println!(
            "density estimate {:.4} [{:.4}, {:.4}] -> {} mappings",
            density.point, density.ci_low, density.ci_high, density.extrapolated_total
        );
    }
    println!("breakdown:");
    for (label, count) in report.breakdown.counts() {
        println!("  {label:<16} {count}");
    }
    println!("progress records: {}", report.progress.len());
    for record in report.progress.iter().take(4) {
        println!(
            "  t={:>6.1}s worker {} tried {} hits {}",
            record.timestamp.as_secs_f64(),
            record.worker,
            record.tokens_tried,
            record.hits
        );
    }
}
