//! Sampling without replacement and Wilson-interval density estimation.
//!
//! ```bash
//! cargo run --example sample_density
//! ```

use shortscan::sampler::{estimate_density, extrapolate_count, SamplePlan};
use shortscan::shortener::{GenerationStrategy, RatePolicy, ShortenerService};
use shortscan::space::{SpaceFamily, TokenSpace};
use shortscan::VirtualClock;

fn main() {
    // Seed a service at a known density, then estimate it from a sample.
    let space = TokenSpace::base62(3);
    let cardinality = space.cardinality();
    let issued = 100_098u64; // 42% of 62^3
    let service = ShortenerService::new(
        SpaceFamily::single(space.clone()),
        RatePolicy::default(),
        VirtualClock::new(),
    )
    .unwrap();
    let strategy = GenerationStrategy::Random { seed: 3 };
    for i in 0..issued {
        service
            .shorten(&format!("https://example.com/{i}"), &strategy, "generic")
            .unwrap();
    }
    println!(
        "seeded a 62^3 service with {issued} links: true density {:.6}",
        service.density().as_f64()
    );

    // The sample is a walk of a keyed permutation: distinct tokens, O(1)
    // memory, identical for the same seed.
    let plan = SamplePlan::new(space, 10_000, 99).unwrap();
    let hits = plan.tokens().filter(|t| service.has_token(t)).count() as u64;
    let estimate = estimate_density(plan.sample_size(), hits, &cardinality).unwrap();
    println!(
        "sample of {}: point {:.4}, 95% CI [{:.4}, {:.4}], extrapolating to {} mappings",
        plan.sample_size(),
        estimate.point,
        estimate.ci_low,
        estimate.ci_high,
        estimate.extrapolated_total
    );

    // Headline-scale replays: the published sample counts, estimated with
    // the same machinery.
    println!("\nheadline-scale estimates");
    let six = TokenSpace::base62(6).cardinality();
    for (label, sampled, hits, card) in [
        ("6-char space", 100_000_000u64, 42_229_055u64, &six),
        ("7-char space (effective 6)", 100_000_000, 29_331_099, &six),
        (
            "5-char maps space",
            63_970_000,
            23_965_718,
            &TokenSpace::base62(5).cardinality(),
        ),
    ] {
        let e = estimate_density(sampled, hits, card).unwrap();
        println!(
            "  {label}: density {:.4} [{:.6}, {:.6}], {} total mappings",
            e.point, e.ci_low, e.ci_high, e.extrapolated_total
        );
    }

    // Rare-category extrapolation: a tiny fraction of a huge space is
    // still millions of URLs.
    println!("\nrare-category projection over 62^6:");
    for (label, fraction) in [("0.003%", 0.00003), ("0.016%", 0.00016), ("0.025%", 0.00025)] {
        println!(
            "  {label} of the space -> {} URLs",
            extrapolate_count(&six, fraction)
        );
    }
}
