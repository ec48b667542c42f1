//! Resolver-side throttling on the virtual clock: sustained pace, burst
//! absorption, temporary blocks, connection caps, and CAPTCHA cadence.
//!
//! ```bash
//! cargo run --example rate_limits
//! ```

use shortscan::clock::{VirtualDuration, VirtualInstant};
use shortscan::shortener::{RatePolicy, Resolution, ShortenerService};
use shortscan::space::{SpaceFamily, TokenSpace};
use shortscan::VirtualClock;

fn service_with(policy: RatePolicy) -> ShortenerService {
    ShortenerService::new(
        SpaceFamily::single(TokenSpace::base62(3)),
        policy,
        VirtualClock::new(),
    )
    .unwrap()
}

fn main() {
    let policy = RatePolicy::default();
    println!(
        "default policy: {} concurrent connections, {} q/s sustained, {} q/s burst over {} s, {} s block",
        policy.max_concurrent,
        policy.sustained_rate,
        policy.burst_rate,
        policy.burst_window,
        policy.block_duration
    );

    // A paced client is never limited.
    let svc = service_with(policy.clone());
    let step = VirtualDuration::from_secs_f64(1.0 / policy.sustained_rate);
    let mut now = VirtualInstant::ZERO;
    let mut accepted = 0;
    for _ in 0..500 {
        if svc.resolve_at("aaa", "steady", now) != Resolution::RateLimited {
            accepted += 1;
        }
        now += step;
    }
    println!(
        "\nsteady client at {} q/s: {accepted}/500 accepted over {:.0} virtual seconds",
        policy.sustained_rate,
        now.as_secs_f64()
    );

    // A burst client gets the whole bucket, then a temporary block.
    let svc = service_with(policy.clone());
    let step = VirtualDuration::from_secs_f64(1.0 / policy.burst_rate);
    let mut now = VirtualInstant::ZERO;
    let mut accepted = 0u32;
    let blocked_at = loop {
        match svc.resolve_at("aaa", "burster", now) {
            Resolution::RateLimited => break now,
            _ => accepted += 1,
        }
        now += step;
    };
    println!(
        "\nburst client at {} q/s: {accepted} accepted in {:.2} s, then blocked",
        policy.burst_rate,
        blocked_at.as_secs_f64()
    );
    let retry = blocked_at + VirtualDuration::from_secs_f64(policy.block_duration + 1.0);
    println!(
        "  after the {} s block: {:?}",
        policy.block_duration,
        svc.resolve_at("aaa", "burster", retry)
    );

    // The sixth concurrent connection from one client is refused.
    let svc = service_with(policy.clone());
    let conns: Vec<_> = (0..5).map(|_| svc.try_connect("parallel").unwrap()).collect();
    println!(
        "\n5 connections open; a 6th resolve for the same client: {:?}",
        svc.resolve_over_new_connection("aaa", "parallel")
    );
    drop(conns);

    // CAPTCHA cadence: every nth accepted query is challenged.
    let svc = service_with(RatePolicy {
        captcha_after: Some(4),
        ..policy
    });
    let mut now = VirtualInstant::ZERO;
    print!("\ncaptcha_after = 4:");
    for _ in 1..=8 {
        let mark = match svc.resolve_at("aaa", "human?", now) {
            Resolution::CaptchaChallenge { .. } => "CAPTCHA",
            Resolution::NotFound => "ok",
            other => panic!("unexpected {other:?}"),
        };
        print!(" {mark}");
        now += VirtualDuration::from_secs(1);
    }
    println!();
}
