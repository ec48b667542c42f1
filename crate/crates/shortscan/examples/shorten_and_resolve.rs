//! A shortener in action: allocation strategies, redirects, and the
//! public per-link analytics that need no authorization.
//!
//! ```bash
//! cargo run --example shorten_and_resolve
//! ```

use shortscan::clock::VirtualDuration;
use shortscan::shortener::{GenerationStrategy, RatePolicy, Resolution, ShortenerService};
use shortscan::space::{SpaceFamily, TokenSpace};
use shortscan::VirtualClock;

fn main() {
    let clock = VirtualClock::new();
    let service = ShortenerService::new(
        SpaceFamily::single(TokenSpace::base62(6)),
        RatePolicy::default(),
        clock.clone(),
    )
    .unwrap();

    println!("sequential allocation counts up from the all-lowest token:");
    for i in 1..=3 {
        let link = service
            .shorten(
                &format!("https://docs.example.com/page/{i}"),
                &GenerationStrategy::Sequential,
                "generic",
            )
            .unwrap();
        println!("  call {i}: {}", link.token);
    }

    println!("\nrandom allocation draws uniformly among unissued tokens:");
    let random = GenerationStrategy::Random { seed: 7 };
    for i in 1..=3 {
        let link = service
            .shorten(
                &format!("https://files.example.com/doc/{i}"),
                &random,
                "storage",
            )
            .unwrap();
        println!("  call {i}: {}", link.token);
    }

    println!("\nhash allocation is a function of the long URL:");
    let hashed = service
        .shorten(
            "https://example.com/stable-input",
            &GenerationStrategy::Hash,
            "generic",
        )
        .unwrap();
    println!("  {} <- https://example.com/stable-input", hashed.token);

    // Resolve a few times, advancing simulated time between visits.
    let target = service
        .shorten(
            "https://maps.example.com/place/city-hall?rid=m0",
            &random,
            "maps",
        )
        .unwrap();
    for _ in 0..3 {
        clock.advance(VirtualDuration::from_secs(60));
        match service.resolve(&target.token, "visitor") {
            Resolution::Redirect(url) => println!("\n{} -> {url}", target.token),
            other => println!("unexpected outcome {other:?}"),
        }
    }

    // Anyone can read the analytics: creation time, visit count, recent
    // visit timestamps.
    let analytics = service.analytics(&target.token).unwrap();
    println!(
        "analytics for {}: created at t={}s, {} visits, recent at {:?} (seconds)",
        target.token,
        analytics.created_at.as_secs_f64(),
        analytics.visit_count,
        analytics
            .recent_visits
            .iter()
            .map(|t| t.as_secs_f64())
            .collect::<Vec<_>>()
    );

    let density = service.density();
    println!(
        "\nservice density: {} issued / {} tokens = {:.10}",
        density.issued,
        density.cardinality,
        density.as_f64()
    );
}
