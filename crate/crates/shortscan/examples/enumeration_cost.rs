//! What full enumeration of a token space costs in compute-hours,
//! client-days, and dollars — exact arithmetic, rounded only for display.
//!
//! ```bash
//! cargo run --example enumeration_cost
//! ```

use shortscan::numeric::{decimal_ratio, fmt_sig};
use shortscan::scanner::{project_enumeration, QueryRate};
use shortscan::space::{SpaceFamily, TokenSpace};

fn main() {
    let rate = QueryRate::per_second_decimal("2.6").unwrap();
    let spot_price = decimal_ratio("0.003").unwrap();

    println!("exhaustive enumeration at 2.6 queries/second, $0.003 per compute-hour");
    println!(
        "{:<28} {:>16} {:>14} {:>12}",
        "space", "compute-hours", "client-days", "cost"
    );
    let family = SpaceFamily::bitly_family();
    for (label, tokens) in [
        ("62^4", TokenSpace::base62(4).cardinality()),
        ("62^5", TokenSpace::base62(5).cardinality()),
        ("62^6", TokenSpace::base62(6).cardinality()),
        ("4..7-char family", family.cardinality()),
        ("62^10", TokenSpace::base62(10).cardinality()),
    ] {
        let p = project_enumeration(&tokens, &rate, 1, Some(&spot_price));
        println!(
            "{:<28} {:>16} {:>14} {:>12}",
            label,
            fmt_sig(p.compute_hours_f64(), 3),
            fmt_sig(p.client_days_f64(), 3),
            format!("${}", fmt_sig(p.cost_f64().unwrap(), 3))
        );
    }

    // A quota-based service: 1,000,000 free queries per day.
    let five = TokenSpace::base62(5).cardinality();
    let quota = QueryRate::per_day(1_000_000);
    let p = project_enumeration(&five, &quota, 1, None);
    println!(
        "\n62^5 under a 1,000,000 queries/day quota: {} client-days",
        fmt_sig(p.client_days_f64(), 3)
    );

    // Wall-clock time divides across workers; total work does not.
    let p = project_enumeration(&family.cardinality(), &rate, 189, None);
    println!(
        "family with 189 clients: still {} client-days of work, {} days wall-clock",
        fmt_sig(p.client_days_f64(), 3),
        fmt_sig(p.wall_clock_days_f64(), 3)
    );
}
