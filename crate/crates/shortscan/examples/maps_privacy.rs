//! The maps privacy pipeline: endpoint flows, sensitive destinations,
//! identity joins against a public directory, and hub extraction.
//!
//! ```bash
//! cargo run --example maps_privacy
//! ```

use shortscan::maps::{
    self, classify_endpoints, correlate_identity, hub_report, sensitive_destination_counts,
    EndpointCategory, HubSeed, MapsPopulationSpec,
};
use shortscan::shortener::{GenerationStrategy, RatePolicy, ShortenerService};
use shortscan::space::{SpaceFamily, TokenSpace};
use shortscan::VirtualClock;

fn main() {
    let service = ShortenerService::new(
        SpaceFamily::single(TokenSpace::base62(4)),
        RatePolicy::default(),
        VirtualClock::new(),
    )
    .unwrap();
    let spec = MapsPopulationSpec {
        records: 20_000,
        hub: Some(HubSeed {
            focus_label: "dd-towing-inc-austin-tx".to_string(),
            focus_category: EndpointCategory::Business,
            spokes: 12,
        }),
        ..MapsPopulationSpec::default()
    };
    let world = maps::populate_maps(
        &spec,
        7,
        &service,
        &GenerationStrategy::Random { seed: 70 },
    )
    .unwrap();
    println!(
        "{} records ({} directions, {} locations), all short-linked",
        world.records.len(),
        world.directions_count(),
        world.locations_count()
    );

    // Flows between endpoint categories.
    let flows = classify_endpoints(&world.records);
    println!("\ndirections flows (top pairs):");
    let mut rows: Vec<_> = flows.iter().collect();
    rows.sort_by_key(|(_, n)| std::cmp::Reverse(**n));
    for ((from, to), n) in rows.iter().take(6) {
        println!("  {from:>11} -> {to:<11} {n}");
    }
    let hospital_home = flows
        .get(&(EndpointCategory::Hospital, EndpointCategory::Residential))
        .copied()
        .unwrap_or(0);
    let home_hospital = flows
        .get(&(EndpointCategory::Residential, EndpointCategory::Hospital))
        .copied()
        .unwrap_or(0);
    println!("  hospital->residential: {hospital_home}, residential->hospital: {home_hospital}");

    println!("\nsensitive destinations among shared directions:");
    for (kind, count) in sensitive_destination_counts(&world.records) {
        println!("  {kind:?}: {count}");
    }

    // Exact identity join against the synthetic public directory.
    let mut identified = 0;
    let mut example = None;
    for record in &world.records {
        let matches = correlate_identity(record, &world.directory);
        if example.is_none() && !matches.is_empty() && record.kind == maps::RecordKind::Directions
        {
            example = Some((record.id.clone(), matches[0].clone()));
        }
        identified += matches.len();
    }
    println!(
        "\n{} residential endpoints identified by exact address join ({} directory entries)",
        identified,
        world.directory.len()
    );
    if let Some((record_id, m)) = example {
        println!(
            "  e.g. record {record_id}: {} at {} (age {})",
            m.entry.resident, m.address, m.entry.age
        );
    }

    // Everything touching one business.
    let hub = hub_report(&world.records, "dd-towing-inc-austin-tx");
    println!(
        "\nhub {:?}: {} records, {} distinct counterpart endpoints",
        hub.focus,
        hub.record_count,
        hub.spokes.len()
    );
    for (other, records) in hub.spokes.iter().take(5) {
        println!("  {other} ({} records)", records.len());
    }
}
