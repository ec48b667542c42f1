//! Synthetic mapping-service backend and its privacy-analysis pipeline.
//!
//! Records are either a single shared location or directions between two
//! or more endpoints. Endpoints carry ground-truth category labels
//! (residential, hospital, clinic, ...) — the analyses here operate on
//! labels, not geography, because that is where the privacy exposure
//! lives: flows between endpoint categories, exact joins against a public
//! directory, and hub extraction around one focus address or business.
//!
//! Long URLs use an invented, URL-safe grammar:
//! `https://maps.example.com/place/<label>?rid=<id>` for locations and
//! `https://maps.example.com/dir/<from>/<to>[/...]?rid=<id>` for
//! directions. Labels are hyphenated and never need percent-encoding.

use crate::clock::{VirtualDuration, VirtualInstant};
use crate::shortener::{GenerationStrategy, ShortenError, ShortenerService};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, Write};
use thiserror::Error;

pub const MAPS_HOST: &str = "https://maps.example.com";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndpointCategory {
    Residential,
    Hospital,
    Clinic,
    Business,
    Poi,
    GpsOnly,
}

impl fmt::Display for EndpointCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EndpointCategory::Residential => "residential",
            EndpointCategory::Hospital => "hospital",
            EndpointCategory::Clinic => "clinic",
            EndpointCategory::Business => "business",
            EndpointCategory::Poi => "poi",
            EndpointCategory::GpsOnly => "gps-only",
        };
        f.write_str(s)
    }
}

/// The fixed taxonomy of sensitive destination kinds tracked by the
/// aggregation reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitiveKind {
    Clinic,
    AddictionTreatment,
    AbortionProvider,
    CorrectionalFacility,
    PaydayLender,
    PlaceOfWorship,
    GentlemensClub,
}

impl SensitiveKind {
    pub const ALL: [SensitiveKind; 7] = [
        SensitiveKind::Clinic,
        SensitiveKind::AddictionTreatment,
        SensitiveKind::AbortionProvider,
        SensitiveKind::CorrectionalFacility,
        SensitiveKind::PaydayLender,
        SensitiveKind::PlaceOfWorship,
        SensitiveKind::GentlemensClub,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    /// URL-safe address or place label; the join key for identity
    /// correlation.
    pub label: String,
    pub category: EndpointCategory,
    pub sensitive: Option<SensitiveKind>,
    /// Synthetic coordinates, only populated for gps-only endpoints.
    pub point: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    Location,
    Directions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapRecord {
    pub id: String,
    pub kind: RecordKind,
    pub endpoints: Vec<Endpoint>,
    pub created_at: VirtualInstant,
}

impl MapRecord {
    pub fn origin(&self) -> &Endpoint {
        &self.endpoints[0]
    }

    pub fn destination(&self) -> &Endpoint {
        self.endpoints.last().expect("records have endpoints")
    }

    pub fn long_url(&self) -> String {
        match self.kind {
            RecordKind::Location => {
                format!("{MAPS_HOST}/place/{}?rid={}", self.endpoints[0].label, self.id)
            }
            RecordKind::Directions => {
                let path: Vec<&str> = self.endpoints.iter().map(|e| e.label.as_str()).collect();
                format!("{MAPS_HOST}/dir/{}/?rid={}", path.join("/"), self.id)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectoryEntry {
    pub address: String,
    pub resident: String,
    pub age: u32,
}

/// Synthetic public directory; addresses are unique.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Directory {
    entries: BTreeMap<String, DirectoryEntry>,
}

impl Directory {
    pub fn insert(&mut self, entry: DirectoryEntry) -> bool {
        if self.entries.contains_key(&entry.address) {
            return false;
        }
        self.entries.insert(entry.address.clone(), entry);
        true
    }

    pub fn lookup(&self, address: &str) -> Option<&DirectoryEntry> {
        self.entries.get(address)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &DirectoryEntry> {
        self.entries.values()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for entry in self.entries.values() {
            serde_json::to_writer(&mut w, entry)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapsUrlKind {
    Location,
    Directions,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedMapsUrl {
    pub kind: MapsUrlKind,
    pub record_id: String,
    pub endpoint_labels: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MapsUrlError {
    #[error("URL does not start with the maps host")]
    WrongHost,
    #[error("unrecognized maps path {0:?}")]
    UnknownPath(String),
    #[error("missing rid parameter")]
    MissingRecordId,
    #[error("directions need at least two endpoints, got {0}")]
    TooFewEndpoints(usize),
}

pub fn is_maps_url(url: &str) -> bool {
    url.starts_with(MAPS_HOST)
}

pub fn parse_maps_url(url: &str) -> Result<ParsedMapsUrl, MapsUrlError> {
    let rest = url.strip_prefix(MAPS_HOST).ok_or(MapsUrlError::WrongHost)?;
    let (path, query) = rest.split_once('?').unwrap_or((rest, ""));
    let record_id = query
        .split('&')
        .find_map(|p| p.strip_prefix("rid="))
        .ok_or(MapsUrlError::MissingRecordId)?
        .to_string();
    if let Some(label) = path.strip_prefix("/place/") {
        let label = label.trim_end_matches('/');
        return Ok(ParsedMapsUrl {
            kind: MapsUrlKind::Location,
            record_id,
            endpoint_labels: vec![label.to_string()],
        });
    }
    if let Some(rest) = path.strip_prefix("/dir/") {
        let labels: Vec<String> = rest
            .split('/')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        if labels.len() < 2 {
            return Err(MapsUrlError::TooFewEndpoints(labels.len()));
        }
        return Ok(ParsedMapsUrl {
            kind: MapsUrlKind::Directions,
            record_id,
            endpoint_labels: labels,
        });
    }
    Err(MapsUrlError::UnknownPath(path.to_string()))
}

/// A deliberately over-shared hub to seed into the population: one focus
/// label connected to many spokes, like a business whose customers all
/// shared directions to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubSeed {
    pub focus_label: String,
    pub focus_category: EndpointCategory,
    pub spokes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MapsPopulationSpec {
    pub records: usize,
    /// Fraction of records that are directions (the rest are locations).
    pub directions_fraction: f64,
    /// Weights over endpoint categories for randomly drawn endpoints.
    pub category_weights: Vec<(EndpointCategory, f64)>,
    /// Chance that a clinic/poi endpoint carries a sensitive tag.
    pub sensitive_fraction: f64,
    /// Fraction of distinct residential addresses listed in the directory.
    pub directory_coverage: f64,
    /// Distinct residential addresses to draw from; reuse creates the
    /// per-address activity the hub analysis looks for.
    pub address_pool: usize,
    pub hub: Option<HubSeed>,
    pub domain_tag: String,
}

impl Default for MapsPopulationSpec {
    fn default() -> Self {
        Self {
            records: 5000,
            directions_fraction: 0.098,
            category_weights: vec![
                (EndpointCategory::Residential, 55.0),
                (EndpointCategory::Business, 18.0),
                (EndpointCategory::Poi, 12.0),
                (EndpointCategory::GpsOnly, 8.0),
                (EndpointCategory::Hospital, 4.0),
                (EndpointCategory::Clinic, 3.0),
            ],
            sensitive_fraction: 0.3,
            directory_coverage: 0.8,
            address_pool: 2000,
            hub: None,
            domain_tag: "maps".to_string(),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MapsError {
    #[error("{field} must be within [0, 1], got {value}")]
    FractionOutOfRange { field: &'static str, value: f64 },
    #[error("category_weights must be non-empty with positive weights")]
    BadCategoryWeights,
    #[error("address_pool must be positive when records > 0")]
    EmptyAddressPool,
    #[error("shortening a map record failed: {0}")]
    Shorten(#[from] ShortenError),
}

/// The populated mapping service: records, their short tokens, and the
/// public directory used for identity correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapsWorld {
    pub records: Vec<MapRecord>,
    pub directory: Directory,
    /// record id → short token issued for its long URL.
    pub short_tokens: BTreeMap<String, String>,
}

impl MapsWorld {
    pub fn record(&self, id: &str) -> Option<&MapRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn directions_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.kind == RecordKind::Directions)
            .count()
    }

    pub fn locations_count(&self) -> usize {
        self.records.len() - self.directions_count()
    }

    pub fn write_records_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for record in &self.records {
            serde_json::to_writer(&mut w, record)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn label_for(category: EndpointCategory, rng: &mut ChaCha8Rng, pool: usize) -> Endpoint {
    let cities = ["austin-tx", "springfield-il", "riverton-ny", "lakeside-ca"];
    let city = cities[rng.gen_range(0..cities.len())];
    match category {
        EndpointCategory::Residential => {
            let n = rng.gen_range(0..pool);
            Endpoint {
                label: format!("{}-maple-st-{}", 100 + n, city),
                category,
                sensitive: None,
                point: None,
            }
        }
        EndpointCategory::Hospital => Endpoint {
            label: format!("general-hospital-{}-{}", rng.gen_range(1..9), city),
            category,
            sensitive: None,
            point: None,
        },
        EndpointCategory::Clinic => Endpoint {
            label: format!("clinic-{}-{}", rng.gen_range(1..20), city),
            category,
            sensitive: Some(SensitiveKind::Clinic),
            point: None,
        },
        EndpointCategory::Business => Endpoint {
            label: format!("biz-{}-{}", rng.gen_range(1..200), city),
            category,
            sensitive: None,
            point: None,
        },
        EndpointCategory::Poi => Endpoint {
            label: format!("poi-{}-{}", rng.gen_range(1..100), city),
            category,
            sensitive: None,
            point: None,
        },
        EndpointCategory::GpsOnly => {
            let lat = 25.0 + rng.gen_range(0..20_000) as f64 / 1000.0;
            let lon = -120.0 + rng.gen_range(0..40_000) as f64 / 1000.0;
            Endpoint {
                label: format!("{lat:.3},{lon:.3}"),
                category,
                sensitive: None,
                point: Some((lat, lon)),
            }
        }
    }
}

fn draw_endpoint(
    spec: &MapsPopulationSpec,
    dist: &WeightedIndex<f64>,
    rng: &mut ChaCha8Rng,
) -> Endpoint {
    let category = spec.category_weights[dist.sample(rng)].0;
    let mut endpoint = label_for(category, rng, spec.address_pool);
    // Sensitive tags attach to clinics (always) and a slice of POIs.
    if category == EndpointCategory::Poi && rng.gen_bool(spec.sensitive_fraction) {
        let kinds = [
            SensitiveKind::AddictionTreatment,
            SensitiveKind::AbortionProvider,
            SensitiveKind::CorrectionalFacility,
            SensitiveKind::PaydayLender,
            SensitiveKind::PlaceOfWorship,
            SensitiveKind::GentlemensClub,
        ];
        endpoint.sensitive = Some(kinds[rng.gen_range(0..kinds.len())]);
    }
    endpoint
}

/// Deterministically build a synthetic record set, issuing a short URL for
/// every record through `shortener` under the given domain tag.
pub fn populate_maps(
    spec: &MapsPopulationSpec,
    seed: u64,
    shortener: &ShortenerService,
    strategy: &GenerationStrategy,
) -> Result<MapsWorld, MapsError> {
    if !(0.0..=1.0).contains(&spec.directions_fraction) {
        return Err(MapsError::FractionOutOfRange {
            field: "directions_fraction",
            value: spec.directions_fraction,
        });
    }
    for (field, value) in [
        ("sensitive_fraction", spec.sensitive_fraction),
        ("directory_coverage", spec.directory_coverage),
    ] {
        if !(0.0..=1.0).contains(&value) {
            return Err(MapsError::FractionOutOfRange { field, value });
        }
    }
    if spec.category_weights.is_empty()
        || spec.category_weights.iter().any(|(_, w)| *w < 0.0)
        || spec.category_weights.iter().map(|(_, w)| w).sum::<f64>() <= 0.0
    {
        return Err(MapsError::BadCategoryWeights);
    }
    if spec.records > 0 && spec.address_pool == 0 {
        return Err(MapsError::EmptyAddressPool);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = WeightedIndex::new(spec.category_weights.iter().map(|(_, w)| *w))
        .expect("weights validated");

    // Exact-count partition: round(fraction * records) directions, placed
    // deterministically, so the headcount is not subject to sampling noise.
    let n_directions = (spec.directions_fraction * spec.records as f64).round() as usize;
    let mut is_directions = vec![false; spec.records];
    for slot in is_directions.iter_mut().take(n_directions) {
        *slot = true;
    }
    // Deterministic shuffle of the kind slots.
    for i in (1..is_directions.len()).rev() {
        let j = rng.gen_range(0..=i);
        is_directions.swap(i, j);
    }

    let mut records = Vec::with_capacity(spec.records);
    let step = VirtualDuration::from_secs(1);
    for (i, directions) in is_directions.iter().enumerate() {
        let id = format!("m{i}");
        let created_at = shortener.clock().now();
        let record = if *directions {
            let origin = draw_endpoint(spec, &dist, &mut rng);
            let mut dest = draw_endpoint(spec, &dist, &mut rng);
            while dest.label == origin.label {
                dest = draw_endpoint(spec, &dist, &mut rng);
            }
            MapRecord {
                id,
                kind: RecordKind::Directions,
                endpoints: vec![origin, dest],
                created_at,
            }
        } else {
            MapRecord {
                id,
                kind: RecordKind::Location,
                endpoints: vec![draw_endpoint(spec, &dist, &mut rng)],
                created_at,
            }
        };
        records.push(record);
        shortener.clock().advance(step);
    }

    // Seeded hub: spokes-many directions records touching the focus.
    if let Some(hub) = &spec.hub {
        let focus = Endpoint {
            label: hub.focus_label.clone(),
            category: hub.focus_category,
            sensitive: None,
            point: None,
        };
        for s in 0..hub.spokes {
            let other = draw_endpoint(spec, &dist, &mut rng);
            let (origin, dest) = if s % 2 == 0 {
                (focus.clone(), other)
            } else {
                (other, focus.clone())
            };
            records.push(MapRecord {
                id: format!("hub{s}"),
                kind: RecordKind::Directions,
                endpoints: vec![origin, dest],
                created_at: shortener.clock().now(),
            });
            shortener.clock().advance(step);
        }
    }

    // Directory: exact-count coverage over the distinct residential
    // addresses appearing anywhere in the population.
    let mut residential: BTreeSet<String> = BTreeSet::new();
    for record in &records {
        for e in &record.endpoints {
            if e.category == EndpointCategory::Residential {
                residential.insert(e.label.clone());
            }
        }
    }
    let n_listed = (spec.directory_coverage * residential.len() as f64).round() as usize;
    let mut directory = Directory::default();
    let first_names = ["avery", "jordan", "casey", "riley", "morgan", "quinn"];
    let last_names = ["lee", "rivera", "chen", "okafor", "novak", "haas"];
    for address in residential.iter().take(n_listed) {
        let resident = format!(
            "{}-{}",
            first_names[rng.gen_range(0..first_names.len())],
            last_names[rng.gen_range(0..last_names.len())]
        );
        directory.insert(DirectoryEntry {
            address: address.clone(),
            resident,
            age: rng.gen_range(18..90),
        });
    }

    // Short URL for every record through the shared shortener.
    let mut short_tokens = BTreeMap::new();
    for record in &records {
        let link = shortener.shorten(&record.long_url(), strategy, &spec.domain_tag)?;
        short_tokens.insert(record.id.clone(), link.token);
    }

    Ok(MapsWorld {
        records,
        directory,
        short_tokens,
    })
}

/// Exact contingency table of directions flows: (origin category,
/// destination category) → count.
pub type FlowTable = BTreeMap<(EndpointCategory, EndpointCategory), u64>;

pub fn classify_endpoints(records: &[MapRecord]) -> FlowTable {
    let mut table = FlowTable::new();
    for record in records {
        if record.kind != RecordKind::Directions {
            continue;
        }
        let key = (record.origin().category, record.destination().category);
        *table.entry(key).or_insert(0) += 1;
    }
    table
}

/// Render the flow table with string keys for JSON export.
pub fn flow_table_labels(table: &FlowTable) -> BTreeMap<String, u64> {
    table
        .iter()
        .map(|((o, d), n)| (format!("{o}->{d}"), *n))
        .collect()
}

/// One identified residential endpoint of a record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityMatch {
    pub record_id: String,
    pub endpoint_index: usize,
    pub address: String,
    pub entry: DirectoryEntry,
}

/// Exact address-label join of a record's residential endpoints against
/// the directory. No fuzzy matching: an endpoint is identified iff its
/// label equals a directory address exactly.
pub fn correlate_identity(record: &MapRecord, directory: &Directory) -> Vec<IdentityMatch> {
    record
        .endpoints
        .iter()
        .enumerate()
        .filter(|(_, e)| e.category == EndpointCategory::Residential)
        .filter_map(|(i, e)| {
            directory.lookup(&e.label).map(|entry| IdentityMatch {
                record_id: record.id.clone(),
                endpoint_index: i,
                address: e.label.clone(),
                entry: entry.clone(),
            })
        })
        .collect()
}

/// Every record touching `focus`, grouped by the opposite endpoint — the
/// star graph around one address or business.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HubReport {
    pub focus: String,
    /// other endpoint label → record ids connecting it to the focus.
    pub spokes: BTreeMap<String, Vec<String>>,
    pub record_count: usize,
}

pub fn hub_report(records: &[MapRecord], focus: &str) -> HubReport {
    let mut spokes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut record_count = 0;
    for record in records {
        if !record.endpoints.iter().any(|e| e.label == focus) {
            continue;
        }
        record_count += 1;
        for endpoint in &record.endpoints {
            if endpoint.label != focus {
                spokes
                    .entry(endpoint.label.clone())
                    .or_default()
                    .push(record.id.clone());
            }
        }
        // A location record of the focus itself has no other endpoint.
        if record.endpoints.len() == 1 {
            spokes.entry(focus.to_string()).or_default().push(record.id.clone());
        }
    }
    HubReport {
        focus: focus.to_string(),
        spokes,
        record_count,
    }
}

/// Node/edge list of a hub for external plotting, one JSON object per line.
pub fn write_hub_edges_jsonl<W: Write>(report: &HubReport, mut w: W) -> io::Result<()> {
    for (other, records) in &report.spokes {
        for record_id in records {
            let edge = serde_json::json!({
                "from": report.focus,
                "to": other,
                "record": record_id,
            });
            serde_json::to_writer(&mut w, &edge)?;
            w.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Count of sensitive destinations among directions records, per kind.
pub fn sensitive_destination_counts(records: &[MapRecord]) -> BTreeMap<SensitiveKind, u64> {
    let mut counts = BTreeMap::new();
    for record in records {
        if record.kind != RecordKind::Directions {
            continue;
        }
        if let Some(kind) = record.destination().sensitive {
            *counts.entry(kind).or_insert(0) += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shortener::RatePolicy;
    use crate::space::{SpaceFamily, TokenSpace};
    use crate::VirtualClock;

    fn test_service() -> ShortenerService {
        ShortenerService::new(
            SpaceFamily::single(TokenSpace::base62(4)),
            RatePolicy::default(),
            VirtualClock::new(),
        )
        .unwrap()
    }

    fn small_world(records: usize, seed: u64) -> (MapsWorld, ShortenerService) {
        let svc = test_service();
        let spec = MapsPopulationSpec {
            records,
            address_pool: 200,
            ..MapsPopulationSpec::default()
        };
        let world =
            populate_maps(&spec, seed, &svc, &GenerationStrategy::Random { seed: 1 }).unwrap();
        (world, svc)
    }

    #[test]
    fn directions_fraction_is_exact_count() {
        let (world, _) = small_world(10_000, 3);
        assert_eq!(world.directions_count(), 980, "round(0.098 * 10000)");
        assert_eq!(world.locations_count() + world.directions_count(), 10_000);
    }

    #[test]
    fn zero_directions_fraction_gives_all_locations() {
        let svc = test_service();
        let spec = MapsPopulationSpec {
            records: 500,
            directions_fraction: 0.0,
            ..MapsPopulationSpec::default()
        };
        let world =
            populate_maps(&spec, 1, &svc, &GenerationStrategy::Sequential).unwrap();
        assert_eq!(world.directions_count(), 0);
        assert!(world
            .records
            .iter()
            .all(|r| r.kind == RecordKind::Location && r.endpoints.len() == 1));
    }

    #[test]
    fn population_is_deterministic() {
        let (a, _) = small_world(800, 9);
        let (b, _) = small_world(800, 9);
        assert_eq!(a, b);
        let (c, _) = small_world(800, 10);
        assert_ne!(a, c);
    }

    #[test]
    fn every_record_short_url_resolves_to_its_id() {
        let (world, svc) = small_world(300, 5);
        for record in &world.records {
            let token = world.short_tokens.get(&record.id).expect("token issued");
            match svc.resolve(token, "tester") {
                crate::shortener::Resolution::Redirect(url) => {
                    let parsed = parse_maps_url(&url).unwrap();
                    assert_eq!(parsed.record_id, record.id);
                    let expected_kind = match record.kind {
                        RecordKind::Location => MapsUrlKind::Location,
                        RecordKind::Directions => MapsUrlKind::Directions,
                    };
                    assert_eq!(parsed.kind, expected_kind);
                }
                other => panic!("expected redirect, got {other:?}"),
            }
        }
    }

    #[test]
    fn directions_records_have_at_least_two_endpoints() {
        let (world, _) = small_world(2000, 6);
        for record in &world.records {
            match record.kind {
                RecordKind::Directions => assert!(record.endpoints.len() >= 2),
                RecordKind::Location => assert_eq!(record.endpoints.len(), 1),
            }
        }
    }

    #[test]
    fn flow_table_counts_match_ground_truth() {
        let (world, _) = small_world(3000, 7);
        let table = classify_endpoints(&world.records);
        // Independent recount.
        let mut expected = 0u64;
        for record in &world.records {
            if record.kind == RecordKind::Directions
                && record.origin().category == EndpointCategory::Hospital
                && record.destination().category == EndpointCategory::Residential
            {
                expected += 1;
            }
        }
        let got = table
            .get(&(EndpointCategory::Hospital, EndpointCategory::Residential))
            .copied()
            .unwrap_or(0);
        assert_eq!(got, expected);
        let total: u64 = table.values().sum();
        assert_eq!(total, world.directions_count() as u64);
    }

    #[test]
    fn empty_record_set_gives_empty_table() {
        assert!(classify_endpoints(&[]).is_empty());
    }

    #[test]
    fn symmetric_seed_gives_symmetric_table() {
        let mk = |id: &str, from: EndpointCategory, to: EndpointCategory| MapRecord {
            id: id.to_string(),
            kind: RecordKind::Directions,
            endpoints: vec![
                Endpoint {
                    label: format!("a-{from}"),
                    category: from,
                    sensitive: None,
                    point: None,
                },
                Endpoint {
                    label: format!("b-{to}"),
                    category: to,
                    sensitive: None,
                    point: None,
                },
            ],
            created_at: VirtualInstant::ZERO,
        };
        let records = vec![
            mk("1", EndpointCategory::Hospital, EndpointCategory::Residential),
            mk("2", EndpointCategory::Residential, EndpointCategory::Hospital),
            mk("3", EndpointCategory::Business, EndpointCategory::Clinic),
            mk("4", EndpointCategory::Clinic, EndpointCategory::Business),
        ];
        let table = classify_endpoints(&records);
        for ((o, d), n) in &table {
            assert_eq!(table.get(&(*d, *o)), Some(n), "symmetry for {o}->{d}");
        }
    }

    #[test]
    fn identity_join_is_exact() {
        let (world, _) = small_world(2000, 8);
        let mut identified = 0;
        let mut residential_endpoints = 0;
        for record in &world.records {
            let matches = correlate_identity(record, &world.directory);
            for m in &matches {
                // Join correctness: returned entry's address equals the
                // endpoint label exactly.
                assert_eq!(m.entry.address, m.address);
                assert_eq!(record.endpoints[m.endpoint_index].label, m.address);
            }
            for e in &record.endpoints {
                if e.category == EndpointCategory::Residential {
                    residential_endpoints += 1;
                    if world.directory.lookup(&e.label).is_some() {
                        identified += 1;
                    }
                }
            }
            let expected: usize = record
                .endpoints
                .iter()
                .filter(|e| {
                    e.category == EndpointCategory::Residential
                        && world.directory.lookup(&e.label).is_some()
                })
                .count();
            assert_eq!(matches.len(), expected);
        }
        assert!(identified > 0);
        assert!(identified <= residential_endpoints);
        // GPS-only endpoints never match.
        for record in &world.records {
            for (i, e) in record.endpoints.iter().enumerate() {
                if e.category == EndpointCategory::GpsOnly {
                    assert!(!correlate_identity(record, &world.directory)
                        .iter()
                        .any(|m| m.endpoint_index == i));
                }
            }
        }
    }

    #[test]
    fn seeded_hub_appears_in_hub_report() {
        let svc = test_service();
        let spec = MapsPopulationSpec {
            records: 500,
            hub: Some(HubSeed {
                focus_label: "dd-autows-inc-austin-tx".to_string(),
                focus_category: EndpointCategory::Business,
                spokes: 12,
            }),
            ..MapsPopulationSpec::default()
        };
        let world =
            populate_maps(&spec, 4, &svc, &GenerationStrategy::Random { seed: 2 }).unwrap();
        let report = hub_report(&world.records, "dd-autows-inc-austin-tx");
        assert_eq!(report.record_count, 12);
        let spoke_records: usize = report.spokes.values().map(|v| v.len()).sum();
        assert_eq!(spoke_records, 12);
        // Absent focus: empty.
        let empty = hub_report(&world.records, "nowhere-special");
        assert_eq!(empty.record_count, 0);
        assert!(empty.spokes.is_empty());
        // Edge list export emits one line per spoke record.
        let mut buf = Vec::new();
        write_hub_edges_jsonl(&report, &mut buf).unwrap();
        assert_eq!(buf.split(|b| *b == b'\n').filter(|l| !l.is_empty()).count(), 12);
    }

    #[test]
    fn maps_url_parse_errors() {
        assert_eq!(
            parse_maps_url("https://elsewhere.example/dir/a/b?rid=1").unwrap_err(),
            MapsUrlError::WrongHost
        );
        assert_eq!(
            parse_maps_url("https://maps.example.com/dir/a/b/"),
            Err(MapsUrlError::MissingRecordId)
        );
        assert_eq!(
            parse_maps_url("https://maps.example.com/dir/a/?rid=1").unwrap_err(),
            MapsUrlError::TooFewEndpoints(1)
        );
        assert!(matches!(
            parse_maps_url("https://maps.example.com/nope?rid=1").unwrap_err(),
            MapsUrlError::UnknownPath(_)
        ));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let svc = test_service();
        let spec = MapsPopulationSpec {
            directions_fraction: 1.5,
            ..MapsPopulationSpec::default()
        };
        assert!(matches!(
            populate_maps(&spec, 1, &svc, &GenerationStrategy::Sequential).unwrap_err(),
            MapsError::FractionOutOfRange { field: "directions_fraction", .. }
        ));
        let spec = MapsPopulationSpec {
            category_weights: vec![],
            ..MapsPopulationSpec::default()
        };
        assert_eq!(
            populate_maps(&spec, 1, &svc, &GenerationStrategy::Sequential).unwrap_err(),
            MapsError::BadCategoryWeights
        );
        let spec = MapsPopulationSpec {
            address_pool: 0,
            ..MapsPopulationSpec::default()
        };
        assert_eq!(
            populate_maps(&spec, 1, &svc, &GenerationStrategy::Sequential).unwrap_err(),
            MapsError::EmptyAddressPool
        );
    }

    #[test]
    fn sensitive_destinations_are_tracked() {
        let (world, _) = small_world(5000, 11);
        let counts = sensitive_destination_counts(&world.records);
        let clinic_flows: u64 = world
            .records
            .iter()
            .filter(|r| {
                r.kind == RecordKind::Directions
                    && r.destination().sensitive == Some(SensitiveKind::Clinic)
            })
            .count() as u64;
        assert_eq!(counts.get(&SensitiveKind::Clinic).copied().unwrap_or(0), clinic_flows);
    }
}
