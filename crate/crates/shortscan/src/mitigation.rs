//! Quantifying defenses: token-length arithmetic, empirical scans against
//! hardened configurations, and scan-detection analysis for internal
//! shorteners.
//!
//! Effectiveness tables always pair the closed-form expectation with an
//! empirical scan result, so sampling error is visible instead of hidden.

use crate::cloudstore::{traverse_account, ApiMode, CloudStore};
use crate::sampler::SamplePlan;
use crate::scanner::{run_scan, ScanBudget, ScanPlan, ScanReport, UrlCategory};
use crate::shortener::{ClientStats, RatePolicy, ShortenerService};
use crate::space::TokenSpace;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MitigationError {
    #[error("queries-per-valid is undefined with zero valid URLs")]
    NoValidUrls,
    #[error("valid_url_count {valid} exceeds the space cardinality {cardinality}")]
    MoreValidThanSpace { valid: BigUint, cardinality: BigUint },
}

/// A token-length/defense configuration under analysis.
#[derive(Debug, Clone)]
pub struct MitigationScenario {
    pub name: String,
    pub space: TokenSpace,
    pub valid_url_count: BigUint,
    pub defense: Option<RatePolicy>,
    pub api_mode: ApiMode,
}

impl MitigationScenario {
    pub fn new(name: &str, space: TokenSpace, valid_url_count: BigUint) -> Result<Self, MitigationError> {
        let cardinality = space.cardinality();
        if valid_url_count > cardinality {
            return Err(MitigationError::MoreValidThanSpace {
                valid: valid_url_count,
                cardinality,
            });
        }
        Ok(Self {
            name: name.to_string(),
            space,
            valid_url_count,
            defense: None,
            api_mode: ApiMode::Legacy,
        })
    }

    /// Expected queries to discover one valid URL: cardinality over valid
    /// count, exact.
    pub fn queries_per_valid(&self) -> Result<BigRational, MitigationError> {
        queries_per_valid(&self.space.cardinality(), &self.valid_url_count)
    }
}

/// `cardinality / valid_url_count` as an exact reduced rational.
pub fn queries_per_valid(
    cardinality: &BigUint,
    valid_url_count: &BigUint,
) -> Result<BigRational, MitigationError> {
    if valid_url_count.is_zero() {
        return Err(MitigationError::NoValidUrls);
    }
    Ok(BigRational::new(
        cardinality.clone().into(),
        valid_url_count.clone().into(),
    ))
}

/// Factor by which density shrinks when the same link count moves from
/// `old_space` to `new_space`: `new_cardinality / old_cardinality`.
pub fn density_shrink_factor(old_space: &TokenSpace, new_space: &TokenSpace) -> BigRational {
    BigRational::new(
        new_space.cardinality().into(),
        old_space.cardinality().into(),
    )
}

/// One populated configuration for the empirical comparison.
pub struct DefenseCase<'a> {
    pub name: String,
    pub service: &'a ShortenerService,
    /// The member space the scanner samples.
    pub scan_space: TokenSpace,
    pub store: Option<&'a CloudStore>,
    pub api_mode: ApiMode,
}

/// Reachability totals when traversing the accounts behind discovered
/// storage URLs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraversalExposure {
    pub entries: u64,
    pub reachable_items: u64,
    /// Ground-truth mean items per capability over the same entries; for
    /// file entries this equals the legacy/hardened exposure ratio.
    pub mean_items_per_capability: f64,
}

/// One row of the effectiveness table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefenseOutcome {
    pub name: String,
    pub density: f64,
    /// Closed-form expectation: queries × density.
    pub expected_hits: f64,
    pub tokens_tried: u64,
    pub hits: u64,
    pub hit_rate: f64,
    pub rate_limited_events: u64,
    pub captcha_events: u64,
    pub complete: bool,
    pub traversal: Option<TraversalExposure>,
}

/// Run the identical scan budget against every case and tabulate
/// effectiveness. The same sample seed is used per case so differences
/// come from the defenses, not the draw.
pub fn compare_defenses(
    cases: &[DefenseCase<'_>],
    budget: &ScanBudget,
    sample_seed: u64,
) -> Result<Vec<DefenseOutcome>, crate::scanner::ScanError> {
    let mut outcomes = Vec::with_capacity(cases.len());
    for case in cases {
        let sample_size = case
            .scan_space
            .cardinality_u128()
            .map(|c| (c as u64).min(budget.max_queries))
            .unwrap_or(budget.max_queries);
        let plan = ScanPlan::Sample(SamplePlan::new(
            case.scan_space.clone(),
            sample_size,
            sample_seed,
        )?);
        let report = run_scan(
            &plan,
            budget,
            case.service,
            |url: &str| crate::scanner::classify_hit(url).to_string(),
            case.service.clock().now(),
        )?;
        let density = case.service.density().as_f64();
        let resolved = report.hits + report.misses;
        let traversal = case
            .store
            .map(|store| traversal_exposure(store, &report, case.api_mode));
        outcomes.push(DefenseOutcome {
            name: case.name.clone(),
            density,
            expected_hits: resolved as f64 * density,
            tokens_tried: report.tokens_tried,
            hits: report.hits,
            hit_rate: if report.tokens_tried == 0 {
                0.0
            } else {
                report.hits as f64 / report.tokens_tried as f64
            },
            rate_limited_events: report.rate_limited_events,
            captcha_events: report.captcha_events,
            complete: report.complete,
            traversal,
        });
    }
    Ok(outcomes)
}

fn traversal_exposure(store: &CloudStore, report: &ScanReport, mode: ApiMode) -> TraversalExposure {
    let mut entries = 0u64;
    let mut reachable_items = 0u64;
    let mut group_sizes = 0u64;
    for hit in &report.hit_records {
        let category: UrlCategory = crate::scanner::classify_hit(&hit.long_url);
        if !matches!(category, UrlCategory::StorageItem | UrlCategory::StorageFolder) {
            continue;
        }
        let Ok(reachable) = traverse_account(store, &hit.long_url, mode) else {
            continue; // dead link
        };
        entries += 1;
        reachable_items += reachable.len() as u64;
        // Ground truth for the same entry.
        if let Ok(parsed) = crate::cloudurl::parse_url(&hit.long_url) {
            if let Some(account) = store.account(&parsed.cid) {
                group_sizes += account
                    .items_shared_under(parsed.authkey.as_deref())
                    .len() as u64;
            }
        }
    }
    TraversalExposure {
        entries,
        reachable_items,
        mean_items_per_capability: if entries == 0 {
            0.0
        } else {
            group_sizes as f64 / entries as f64
        },
    }
}

/// Per-client anomaly row for the internal-shortener report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientAnomaly {
    pub client: String,
    pub accepted: u64,
    pub rate_per_hour: f64,
    /// Multiple of the population median rate.
    pub score: f64,
    pub flagged: bool,
}

/// Density plus scan-detection summary for a company-internal shortener.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalShortenerReport {
    pub issued: u64,
    pub density: f64,
    pub bits_of_search: f64,
    pub median_rate_per_hour: f64,
    /// Clients whose hourly rate exceeds `threshold` times the median.
    pub threshold: f64,
    pub clients: Vec<ClientAnomaly>,
}

impl InternalShortenerReport {
    pub fn flagged(&self) -> impl Iterator<Item = &ClientAnomaly> {
        self.clients.iter().filter(|c| c.flagged)
    }
}

fn hourly_rate(stats: &ClientStats) -> f64 {
    let span_hours = (stats.last_seen - stats.first_seen).as_secs_f64() / 3600.0;
    stats.accepted as f64 / span_hours.max(1.0)
}

/// Build the density + detection summary. A client is flagged when its
/// hourly accepted-query rate exceeds `threshold` (default 50) times the
/// population median.
pub fn internal_shortener_report(
    service: &ShortenerService,
    threshold: f64,
) -> InternalShortenerReport {
    let stats = service.client_stats();
    let mut rates: Vec<f64> = stats.iter().map(hourly_rate).collect();
    rates.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
    let median = if rates.is_empty() {
        0.0
    } else if rates.len() % 2 == 1 {
        rates[rates.len() / 2]
    } else {
        (rates[rates.len() / 2 - 1] + rates[rates.len() / 2]) / 2.0
    };
    let clients = stats
        .iter()
        .map(|s| {
            let rate = hourly_rate(s);
            let score = if median > 0.0 { rate / median } else { 0.0 };
            ClientAnomaly {
                client: s.client.clone(),
                accepted: s.accepted,
                rate_per_hour: rate,
                score,
                flagged: score > threshold,
            }
        })
        .collect();
    let density = service.density();
    InternalShortenerReport {
        issued: density.issued,
        density: density.as_f64(),
        bits_of_search: service.family().bits_of_search(),
        median_rate_per_hour: median,
        threshold,
        clients,
    }
}

pub const DEFAULT_ANOMALY_THRESHOLD: f64 = 50.0;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::{VirtualDuration, VirtualInstant};
    use crate::numeric::fmt_sig;
    use crate::shortener::GenerationStrategy;
    use crate::space::SpaceFamily;
    use crate::VirtualClock;
    use num_traits::ToPrimitive;

    #[test]
    fn queries_per_valid_headlines() {
        let six = TokenSpace::base62(6);
        // 42% of the 6-character space, rounded to a count.
        let valid = crate::sampler::extrapolate_count(&six.cardinality(), 0.42);
        let qpv6 = queries_per_valid(&six.cardinality(), &valid).unwrap();
        let qpv6_f = qpv6.to_f64().unwrap();
        assert_eq!(fmt_sig(qpv6_f, 3), "2.38", "about 2 queries per valid URL");

        // Same valid count in a 10-character space.
        let ten = TokenSpace::base62(10);
        let qpv10 = queries_per_valid(&ten.cardinality(), &valid).unwrap();
        let qpv10_f = qpv10.to_f64().unwrap();
        assert!(
            (qpv10_f - 35_181_752.0).abs() / 35_181_752.0 < 0.01,
            "35.18 million queries, got {qpv10_f}"
        );
        // Ratio between the two spaces is exactly 62^4.
        let ratio = &qpv10 / &qpv6;
        assert_eq!(
            ratio,
            BigRational::from_integer(14_776_336.into()),
            "hit ratio scales by 62^4"
        );

        // Full density means every query lands.
        let full = queries_per_valid(&six.cardinality(), &six.cardinality()).unwrap();
        assert_eq!(full, BigRational::from_integer(1.into()));

        assert_eq!(
            queries_per_valid(&six.cardinality(), &BigUint::zero()).unwrap_err(),
            MitigationError::NoValidUrls
        );
    }

    #[test]
    fn queries_per_valid_scaling_invariance() {
        let c = BigUint::from(1_000_000u64);
        let v = BigUint::from(420_000u64);
        let base = queries_per_valid(&c, &v).unwrap();
        let scaled = queries_per_valid(&(&c * 7u8), &(&v * 7u8)).unwrap();
        assert_eq!(base, scaled);
    }

    #[test]
    fn longer_tokens_never_reduce_queries_per_valid() {
        let valid = BigUint::from(1_000u32);
        let mut prev = BigRational::zero();
        for len in 2..=12 {
            let space = TokenSpace::base62(len);
            let qpv = queries_per_valid(&space.cardinality(), &valid).unwrap();
            assert!(qpv >= prev, "monotonic in length at fixed valid count");
            prev = qpv;
        }
    }

    #[test]
    fn scenario_validation() {
        let space = TokenSpace::base62(2);
        assert!(matches!(
            MitigationScenario::new("bad", space.clone(), BigUint::from(4000u32)).unwrap_err(),
            MitigationError::MoreValidThanSpace { .. }
        ));
        let ok = MitigationScenario::new("ok", space, BigUint::from(100u32)).unwrap();
        let qpv = ok.queries_per_valid().unwrap();
        assert_eq!(qpv, BigRational::new(3844.into(), 100.into()));
    }

    #[test]
    fn density_shrink_matches_length_arithmetic() {
        let factor = density_shrink_factor(&TokenSpace::base62(6), &TokenSpace::base62(10));
        assert_eq!(factor, BigRational::from_integer(14_776_336.into()));
    }

    fn populated_service(length: usize, links: u64, policy: RatePolicy) -> ShortenerService {
        let svc = ShortenerService::new(
            SpaceFamily::single(TokenSpace::base62(length)),
            policy,
            VirtualClock::new(),
        )
        .unwrap();
        let strategy = GenerationStrategy::Random { seed: 6 };
        for i in 0..links {
            svc.shorten(&format!("https://example.com/{i}"), &strategy, "generic")
                .unwrap();
        }
        svc
    }

    #[test]
    fn defense_comparison_shows_captcha_effectiveness() {
        let baseline = populated_service(2, 1614, RatePolicy::default());
        let captcha_policy = RatePolicy {
            captcha_after: Some(100),
            ..RatePolicy::default()
        };
        let hardened = populated_service(2, 1614, captcha_policy);
        let cases = [
            DefenseCase {
                name: "baseline".to_string(),
                service: &baseline,
                scan_space: TokenSpace::base62(2),
                store: None,
                api_mode: ApiMode::Legacy,
            },
            DefenseCase {
                name: "captcha-100".to_string(),
                service: &hardened,
                scan_space: TokenSpace::base62(2),
                store: None,
                api_mode: ApiMode::Legacy,
            },
        ];
        let budget = ScanBudget {
            max_queries: 2000,
            max_wall_time: VirtualDuration::from_secs(100_000),
            ..ScanBudget::default()
        };
        let outcomes = compare_defenses(&cases, &budget, 77).unwrap();
        assert_eq!(outcomes.len(), 2);
        let base = &outcomes[0];
        let capd = &outcomes[1];
        assert_eq!(base.captcha_events, 0);
        assert_eq!(capd.captcha_events, 1, "single worker, one terminal challenge");
        assert!(capd.tokens_tried <= 100, "worker stops within captcha_after");
        assert!(base.tokens_tried > capd.tokens_tried);
        // Empirical hit rate tracks the closed-form expectation.
        assert!((base.hit_rate - base.density).abs() < 0.05);
        // Same population density on both sides.
        assert_eq!(base.density, capd.density);
    }

    #[test]
    fn defense_comparison_shows_length_effectiveness() {
        // Same valid count, one extra character: hit rate drops by ~62x.
        let short = populated_service(2, 1614, RatePolicy::default());
        let long = populated_service(3, 1614, RatePolicy::default());
        let cases = [
            DefenseCase {
                name: "len2".to_string(),
                service: &short,
                scan_space: TokenSpace::base62(2),
                store: None,
                api_mode: ApiMode::Legacy,
            },
            DefenseCase {
                name: "len3".to_string(),
                service: &long,
                scan_space: TokenSpace::base62(3),
                store: None,
                api_mode: ApiMode::Legacy,
            },
        ];
        let budget = ScanBudget {
            max_queries: 3844,
            max_wall_time: VirtualDuration::from_secs(10_000_000),
            per_worker_rate: 2.6,
            ..ScanBudget::default()
        };
        let outcomes = compare_defenses(&cases, &budget, 99).unwrap();
        let qpv_ratio = outcomes[0].hit_rate / outcomes[1].hit_rate.max(1e-9);
        // Closed form says exactly 62; the sampled estimate is noisy but
        // must be the right order of magnitude.
        assert!(
            qpv_ratio > 30.0 && qpv_ratio < 130.0,
            "observed ratio {qpv_ratio}"
        );
        let expected_ratio = queries_per_valid(
            &TokenSpace::base62(3).cardinality(),
            &BigUint::from(1614u32),
        )
        .unwrap()
            / queries_per_valid(&TokenSpace::base62(2).cardinality(), &BigUint::from(1614u32))
                .unwrap();
        assert_eq!(expected_ratio, BigRational::from_integer(62.into()));
    }

    #[test]
    fn scanner_stands_out_against_organic_traffic() {
        let svc = populated_service(3, 1000, RatePolicy::default());
        // Organic clients: at most 10 queries/hour over a simulated day.
        let hour = VirtualDuration::from_secs(3600);
        for client in 0..20 {
            let name = format!("user-{client:02}");
            let mut t = VirtualInstant::ZERO;
            for _ in 0..24 {
                for q in 0..(2 + client % 8) {
                    let offset = VirtualDuration::from_secs(60 * (q as u64 + 1));
                    svc.resolve_at("aaa", &name, t + offset);
                }
                t += hour;
            }
        }
        // The scanner: policy-max pace for one hour.
        let mut t = VirtualInstant::ZERO;
        let step = VirtualDuration::from_secs_f64(1.0 / 2.6);
        while t < VirtualInstant::ZERO + hour {
            svc.resolve_at("aaa", "scanner-like", t);
            t += step;
        }
        let report = internal_shortener_report(&svc, DEFAULT_ANOMALY_THRESHOLD);
        let flagged: Vec<&str> = report.flagged().map(|c| c.client.as_str()).collect();
        assert_eq!(flagged, vec!["scanner-like"]);
        let scanner = report
            .clients
            .iter()
            .find(|c| c.client == "scanner-like")
            .unwrap();
        assert!(scanner.rate_per_hour > 9000.0);
        assert!(scanner.score > 500.0);
    }

    #[test]
    fn no_scanner_no_flags() {
        let svc = populated_service(3, 100, RatePolicy::default());
        let hour = VirtualDuration::from_secs(3600);
        for client in 0..10 {
            let name = format!("user-{client:02}");
            let mut t = VirtualInstant::ZERO;
            for _ in 0..12 {
                svc.resolve_at("aaa", &name, t);
                t += hour;
            }
        }
        let report = internal_shortener_report(&svc, DEFAULT_ANOMALY_THRESHOLD);
        assert_eq!(report.flagged().count(), 0);
        assert!(report.median_rate_per_hour > 0.0);
        // Empty service edge: no clients at all.
        let empty = populated_service(3, 0, RatePolicy::default());
        let report = internal_shortener_report(&empty, DEFAULT_ANOMALY_THRESHOLD);
        assert!(report.clients.is_empty());
        assert_eq!(report.median_rate_per_hour, 0.0);
    }
}
