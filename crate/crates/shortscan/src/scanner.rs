//! A budget-aware, rate-limit-respecting enumeration client.
//!
//! [`run_scan`] drives a sample or exhaustive plan against a resolver with
//! a bounded worker pool. Workers partition the plan's index range
//! contiguously (no work stealing) and each runs its own virtual timeline:
//! queries are paced at `per_worker_rate`, 403-style rate limits trigger
//! exponential backoff on the same token, and CAPTCHA challenges are
//! terminal for the worker. Budgets are split statically across workers, so
//! reports are exactly reproducible for a fixed plan and budget no matter
//! how threads interleave.

use crate::clock::{VirtualDuration, VirtualInstant};
use crate::cloudurl::{self, ItemKind, UrlKind};
use crate::maps::{self, MapsUrlKind};
use crate::sampler::{estimate_density, CategoryBreakdown, DensityEstimate, SampleError, SamplePlan};
use crate::shortener::{Resolution, ShortenerService};
use crate::space::TokenSpace;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Anything a scanner can point at: the in-process service, an HTTP
/// facade client, or a test fixture.
pub trait Resolver: Sync {
    fn query(
        &self,
        token: &str,
        client: &str,
        now: VirtualInstant,
    ) -> Result<Resolution, TransportError>;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("resolver unreachable: {0}")]
pub struct TransportError(pub String);

impl Resolver for ShortenerService {
    fn query(
        &self,
        token: &str,
        client: &str,
        now: VirtualInstant,
    ) -> Result<Resolution, TransportError> {
        Ok(self.resolve_at(token, client, now))
    }
}

/// Scanner-side resource limits and pacing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanBudget {
    pub max_queries: u64,
    pub max_wall_time: VirtualDuration,
    pub worker_count: usize,
    /// Self-imposed pacing per worker; defaults to the sustained rate the
    /// default resolver policy accepts indefinitely.
    pub per_worker_rate: f64,
    /// First backoff after a rate-limit response, seconds.
    pub backoff_base: f64,
    /// Backoff ceiling, seconds; matches the default block duration.
    pub backoff_cap: f64,
    /// Emit a progress record every this many tokens per worker.
    pub progress_every: u64,
}

impl Default for ScanBudget {
    fn default() -> Self {
        Self {
            max_queries: 10_000,
            max_wall_time: VirtualDuration::from_secs(3600),
            worker_count: 1,
            per_worker_rate: 2.6,
            backoff_base: 1.0,
            backoff_cap: 300.0,
            progress_every: 1000,
        }
    }
}

/// What to scan: a without-replacement sample or the entire space in index
/// order.
#[derive(Debug, Clone)]
pub enum ScanPlan {
    Sample(SamplePlan),
    Exhaustive(TokenSpace),
}

impl ScanPlan {
    fn len(&self) -> Result<u64, ScanError> {
        match self {
            ScanPlan::Sample(p) => Ok(p.sample_size()),
            ScanPlan::Exhaustive(space) => space
                .cardinality_u128()
                .and_then(|c| u64::try_from(c).ok())
                .ok_or_else(|| ScanError::ExhaustiveTooLarge(space.cardinality())),
        }
    }

    fn token_at(&self, i: u64) -> String {
        match self {
            ScanPlan::Sample(p) => p.token_at(i),
            ScanPlan::Exhaustive(space) => space
                .encode_u128(i as u128)
                .expect("index bounded by cardinality"),
        }
    }

    fn space_cardinality(&self) -> BigUint {
        match self {
            ScanPlan::Sample(p) => p.space().cardinality(),
            ScanPlan::Exhaustive(space) => space.cardinality(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("worker_count must be at least 1")]
    NoWorkers,
    #[error("per_worker_rate must be positive")]
    NonPositiveRate,
    #[error("exhaustive scan of a {0}-token space is not feasible")]
    ExhaustiveTooLarge(BigUint),
    #[error(transparent)]
    Plan(#[from] SampleError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

/// One resolved mapping discovered by a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HitRecord {
    pub token: String,
    pub long_url: String,
    pub category: String,
}

/// Cumulative per-worker progress, merged into virtual-time order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub timestamp: VirtualInstant,
    pub worker: usize,
    pub tokens_tried: u64,
    pub hits: u64,
}

/// Complete results of one scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub tokens_tried: u64,
    pub hits: u64,
    pub misses: u64,
    /// Tokens attempted but never definitively resolved (budget, wall time,
    /// or CAPTCHA cut the retry loop short).
    pub unresolved: u64,
    pub rate_limited_events: u64,
    pub captcha_events: u64,
    /// Total virtual time spent waiting in backoff across workers.
    pub blocked_time: VirtualDuration,
    pub elapsed: VirtualDuration,
    pub complete: bool,
    pub workers: usize,
    pub breakdown: CategoryBreakdown,
    pub density: Option<DensityEstimate>,
    pub hit_records: Vec<HitRecord>,
    pub progress: Vec<ProgressRecord>,
}

#[derive(Default)]
struct SubReport {
    tried: u64,
    hits: u64,
    misses: u64,
    unresolved: u64,
    rate_limited: u64,
    captcha: u64,
    blocked: VirtualDuration,
    last_time: VirtualInstant,
    breakdown: CategoryBreakdown,
    hit_records: Vec<HitRecord>,
    progress: Vec<ProgressRecord>,
    error: Option<TransportError>,
}

/// Run `plan` against `resolver` under `budget`, classifying every hit's
/// long URL with `classifier`. Deterministic for a fixed plan, budget, and
/// start instant.
pub fn run_scan<R, C>(
    plan: &ScanPlan,
    budget: &ScanBudget,
    resolver: &R,
    classifier: C,
    start_at: VirtualInstant,
) -> Result<ScanReport, ScanError>
where
    R: Resolver + ?Sized,
    C: Fn(&str) -> String + Sync,
{
    if budget.worker_count == 0 {
        return Err(ScanError::NoWorkers);
    }
    if budget.per_worker_rate <= 0.0 {
        return Err(ScanError::NonPositiveRate);
    }
    let plan_len = plan.len()?;
    let workers = budget.worker_count;
    let classifier = &classifier;

    // Static partition of both the index range and the query budget keeps
    // the report independent of thread scheduling.
    let chunk = plan_len / workers as u64;
    let chunk_rem = plan_len % workers as u64;
    let share = budget.max_queries / workers as u64;
    let share_rem = budget.max_queries % workers as u64;

    let mut subs: Vec<SubReport> = std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(workers);
        let mut lo = 0u64;
        for w in 0..workers {
            let extra = u64::from((w as u64) < chunk_rem);
            let hi = lo + chunk + extra;
            let my_budget = share + u64::from((w as u64) < share_rem);
            let range = lo..hi;
            lo = hi;
            handles.push(scope.spawn(move || {
                scan_worker(plan, budget, resolver, classifier, start_at, w, range, my_budget)
            }));
        }
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    for sub in &mut subs {
        if let Some(err) = sub.error.take() {
            return Err(err.into());
        }
    }

    let mut report = ScanReport {
        tokens_tried: 0,
        hits: 0,
        misses: 0,
        unresolved: 0,
        rate_limited_events: 0,
        captcha_events: 0,
        blocked_time: VirtualDuration::ZERO,
        elapsed: VirtualDuration::ZERO,
        complete: false,
        workers,
        breakdown: CategoryBreakdown::new(),
        density: None,
        hit_records: Vec::new(),
        progress: Vec::new(),
    };
    let mut last = start_at;
    for sub in subs {
        report.tokens_tried += sub.tried;
        report.hits += sub.hits;
        report.misses += sub.misses;
        report.unresolved += sub.unresolved;
        report.rate_limited_events += sub.rate_limited;
        report.captcha_events += sub.captcha;
        report.blocked_time += sub.blocked;
        report.breakdown.merge(&sub.breakdown);
        report.hit_records.extend(sub.hit_records);
        report.progress.extend(sub.progress);
        last = last.max(sub.last_time);
    }
    report.elapsed = last - start_at;
    report.complete = report.tokens_tried == plan_len && report.unresolved == 0;
    report
        .progress
        .sort_by_key(|p| (p.timestamp, p.worker, p.tokens_tried));
    let resolved = report.hits + report.misses;
    if resolved > 0 {
        report.density =
            Some(estimate_density(resolved, report.hits, &plan.space_cardinality()).expect("resolved >= 1"));
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn scan_worker<R, C>(
    plan: &ScanPlan,
    budget: &ScanBudget,
    resolver: &R,
    classifier: &C,
    start_at: VirtualInstant,
    worker: usize,
    range: std::ops::Range<u64>,
    my_budget: u64,
) -> SubReport
where
    R: Resolver + ?Sized,
    C: Fn(&str) -> String + Sync,
{
    let mut sub = SubReport {
        last_time: start_at,
        ..SubReport::default()
    };
    let client = format!("scan-worker-{worker}");
    let interval = VirtualDuration::from_secs_f64(1.0 / budget.per_worker_rate);
    let deadline = start_at + budget.max_wall_time;
    let mut now = start_at;

    'tokens: for i in range {
        if sub.tried >= my_budget || now > deadline {
            break;
        }
        let token = plan.token_at(i);
        sub.tried += 1;
        let mut backoff = VirtualDuration::from_secs_f64(budget.backoff_base);
        let backoff_cap = VirtualDuration::from_secs_f64(budget.backoff_cap);
        loop {
            let outcome = match resolver.query(&token, &client, now) {
                Ok(outcome) => outcome,
                Err(err) => {
                    sub.error = Some(err);
                    sub.unresolved += 1;
                    break 'tokens;
                }
            };
            sub.last_time = now;
            match outcome {
                Resolution::Redirect(long_url) => {
                    sub.hits += 1;
                    let category = classifier(&long_url);
                    sub.breakdown.increment(&category);
                    sub.hit_records.push(HitRecord {
                        token: token.clone(),
                        long_url,
                        category,
                    });
                    now += interval;
                    break;
                }
                Resolution::NotFound => {
                    sub.misses += 1;
                    now += interval;
                    break;
                }
                Resolution::RateLimited => {
                    // Exponential backoff, retrying the same token.
                    sub.rate_limited += 1;
                    sub.blocked += backoff;
                    now += backoff;
                    backoff = VirtualDuration::from_micros(
                        (backoff.micros() * 2).min(backoff_cap.micros()),
                    );
                    if now > deadline {
                        sub.unresolved += 1;
                        break 'tokens;
                    }
                }
                Resolution::CaptchaChallenge { .. } => {
                    // The scanner cannot solve challenges: terminal.
                    sub.captcha += 1;
                    sub.unresolved += 1;
                    break 'tokens;
                }
            }
        }
        if budget.progress_every > 0 && sub.tried.is_multiple_of(budget.progress_every) {
            sub.progress.push(ProgressRecord {
                timestamp: sub.last_time,
                worker,
                tokens_tried: sub.tried,
                hits: sub.hits,
            });
        }
    }
    sub.progress.push(ProgressRecord {
        timestamp: sub.last_time,
        worker,
        tokens_tried: sub.tried,
        hits: sub.hits,
    });
    sub
}

/// Grammar-level classification of a discovered long URL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UrlCategory {
    StorageItem,
    StorageFolder,
    MapsDirections,
    MapsLocation,
    Other,
}

impl fmt::Display for UrlCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            UrlCategory::StorageItem => "storage-item",
            UrlCategory::StorageFolder => "storage-folder",
            UrlCategory::MapsDirections => "maps-directions",
            UrlCategory::MapsLocation => "maps-location",
            UrlCategory::Other => "other",
        };
        f.write_str(s)
    }
}

/// Pattern-match a long URL into its grammar category. Liveness is a
/// separate question answered by the storage backend.
pub fn classify_hit(long_url: &str) -> UrlCategory {
    if cloudurl::is_storage_url(long_url) {
        return match cloudurl::parse_url(long_url) {
            Ok(parsed) => match parsed.kind {
                UrlKind::Item(ItemKind::Folder) | UrlKind::AccountRoot => {
                    UrlCategory::StorageFolder
                }
                UrlKind::Item(_) => UrlCategory::StorageItem,
            },
            Err(_) => UrlCategory::Other,
        };
    }
    if maps::is_maps_url(long_url) {
        return match maps::parse_maps_url(long_url) {
            Ok(parsed) => match parsed.kind {
                MapsUrlKind::Directions => UrlCategory::MapsDirections,
                MapsUrlKind::Location => UrlCategory::MapsLocation,
            },
            Err(_) => UrlCategory::Other,
        };
    }
    UrlCategory::Other
}

/// Cost of enumerating `tokens` tokens at `rate` queries/second, in exact
/// arithmetic rounded only for display.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationProjection {
    pub tokens: BigUint,
    pub rate_per_second: BigRational,
    pub compute_hours: BigRational,
    /// `compute_hours / 24`: single-client days of work.
    pub client_days: BigRational,
    /// Wall-clock days when split across `workers` clients.
    pub wall_clock_days: BigRational,
    pub cost: Option<BigRational>,
}

impl EnumerationProjection {
    pub fn compute_hours_f64(&self) -> f64 {
        self.compute_hours.to_f64().unwrap_or(f64::NAN)
    }

    pub fn client_days_f64(&self) -> f64 {
        self.client_days.to_f64().unwrap_or(f64::NAN)
    }

    pub fn wall_clock_days_f64(&self) -> f64 {
        self.wall_clock_days.to_f64().unwrap_or(f64::NAN)
    }

    pub fn cost_f64(&self) -> Option<f64> {
        self.cost.as_ref().map(|c| c.to_f64().unwrap_or(f64::NAN))
    }
}

/// A query rate as an exact rational number of queries per second.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRate(BigRational);

impl QueryRate {
    /// Exact decimal, e.g. `"2.6"` queries/second.
    pub fn per_second_decimal(s: &str) -> Result<Self, crate::numeric::DecimalParseError> {
        let r = crate::numeric::decimal_ratio(s)?;
        Ok(Self(r))
    }

    pub fn per_second(n: u64) -> Self {
        Self(BigRational::from_integer(n.into()))
    }

    /// A daily quota expressed as a rate, e.g. 1,000,000 queries/day.
    pub fn per_day(queries: u64) -> Self {
        Self(BigRational::new(queries.into(), 86_400.into()))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }
}

/// Project the cost of full enumeration. `price_per_hour` is an exact
/// decimal currency amount per compute-hour.
pub fn project_enumeration(
    tokens: &BigUint,
    rate: &QueryRate,
    workers: u64,
    price_per_hour: Option<&BigRational>,
) -> EnumerationProjection {
    assert!(!rate.0.is_zero(), "rate must be positive");
    let tokens_ratio = BigRational::from_integer(tokens.clone().into());
    let seconds = &tokens_ratio / &rate.0;
    let compute_hours = &seconds / BigRational::from_integer(3600.into());
    let client_days = &compute_hours / BigRational::from_integer(24.into());
    let wall_clock_days = &client_days / BigRational::from_integer(workers.max(1).into());
    let cost = price_per_hour.map(|p| &compute_hours * p);
    EnumerationProjection {
        tokens: tokens.clone(),
        rate_per_second: rate.0.clone(),
        compute_hours,
        client_days,
        wall_clock_days,
        cost,
    }
}
