//! Mitigation effectiveness: token-length arithmetic, CAPTCHA and
//! hardened-API scans, and scan detection on an internal shortener.
//!
//! ```bash
//! cargo run --example defenses
//! ```

use num_traits::ToPrimitive;
use shortscan::clock::VirtualDuration;
use shortscan::cloudstore::ApiMode;
use shortscan::mitigation::{
    compare_defenses, internal_shortener_report, queries_per_valid, DefenseCase,
    DEFAULT_ANOMALY_THRESHOLD,
};
use shortscan::numeric::fmt_sig;
use shortscan::sampler::extrapolate_count;
use shortscan::scanner::ScanBudget;
use shortscan::shortener::{GenerationStrategy, RatePolicy, ShortenerService};
use shortscan::space::{SpaceFamily, TokenSpace};
use shortscan::clock::{VirtualInstant};
use shortscan::VirtualClock;

fn seeded(length: usize, links: u64, policy: RatePolicy) -> ShortenerService {
    let svc = ShortenerService::new(
        SpaceFamily::single(TokenSpace::base62(length)),
        policy,
        VirtualClock::new(),
    )
    .unwrap();
    let strategy = GenerationStrategy::Random { seed: 5 };
    for i in 0..links {
        svc.shorten(&format!("https://example.com/{i}"), &strategy, "generic")
            .unwrap();
    }
    svc
}

fn main() {
    // Token-length arithmetic: the same number of valid URLs, longer
    // tokens.
    let six = TokenSpace::base62(6).cardinality();
    let valid = extrapolate_count(&six, 0.42);
    println!("fixed valid-URL count: {valid} (42% of 62^6)");
    println!("{:<10} {:>22}", "length", "queries per valid URL");
    for length in [6usize, 7, 8, 10, 12] {
        let qpv = queries_per_valid(&TokenSpace::base62(length).cardinality(), &valid)
            .unwrap()
            .to_f64()
            .unwrap();
        println!("{length:<10} {:>22}", fmt_sig(qpv, 4));
    }

    // Empirical: identical scan budgets against three configurations.
    let baseline = seeded(2, 1614, RatePolicy::default());
    let with_captcha = seeded(
        2,
        1614,
        RatePolicy {
            captcha_after: Some(100),
            ..RatePolicy::default()
        },
    );
    let longer = seeded(3, 1614, RatePolicy::default());
    let cases = [
        DefenseCase {
            name: "baseline len-2".into(),
            service: &baseline,
            scan_space: TokenSpace::base62(2),
            store: None,
            api_mode: ApiMode::Legacy,
        },
        DefenseCase {
            name: "captcha every 100".into(),
            service: &with_captcha,
            scan_space: TokenSpace::base62(2),
            store: None,
            api_mode: ApiMode::Legacy,
        },
        DefenseCase {
            name: "len-3, same links".into(),
            service: &longer,
            scan_space: TokenSpace::base62(3),
            store: None,
            api_mode: ApiMode::Legacy,
        },
    ];
    let budget = ScanBudget {
        max_queries: 2000,
        max_wall_time: VirtualDuration::from_secs(10_000_000),
        ..ScanBudget::default()
    };
    println!("\nidentical 2,000-query budgets:");
    println!(
        "{:<20} {:>7} {:>6} {:>9} {:>9}",
        "scenario", "tried", "hits", "hit-rate", "captchas"
    );
    for outcome in compare_defenses(&cases, &budget, 1234).unwrap() {
        println!(
            "{:<20} {:>7} {:>6} {:>9.4} {:>9}",
            outcome.name, outcome.tokens_tried, outcome.hits, outcome.hit_rate,
            outcome.captcha_events
        );
    }

    // Scan detection on an internal shortener: organic clients vs one
    // scanner at the policy maximum.
    let internal = seeded(3, 5000, RatePolicy::default());
    let hour = VirtualDuration::from_secs(3600);
    for client in 0..12 {
        let name = format!("employee-{client:02}");
        let mut t = VirtualInstant::ZERO;
        for _ in 0..24 {
            for q in 0..(1 + client % 9) {
                internal.resolve_at("aaa", &name, t + VirtualDuration::from_secs(120 * (q as u64 + 1)));
            }
            t += hour;
        }
    }
    let mut t = VirtualInstant::ZERO;
    let step = VirtualDuration::from_secs_f64(1.0 / 2.6);
    while t < VirtualInstant::ZERO + hour {
        internal.resolve_at("aaa", "night-scanner", t);
        t += step;
    }
    let report = internal_shortener_report(&internal, DEFAULT_ANOMALY_THRESHOLD);
    println!(
        "\ninternal shortener: density {:.6}, median client rate {:.1} q/h, threshold {}x",
        report.density, report.median_rate_per_hour, report.threshold
    );
    for client in &report.clients {
        if client.flagged {
            println!(
                "  FLAGGED {} at {:.0} q/h ({}x the median)",
                client.client,
                client.rate_per_hour,
                fmt_sig(client.score, 3)
            );
        }
    }
}
