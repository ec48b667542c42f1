//! A simulated URL-shortening service.
//!
//! The service allocates tokens from a [`SpaceFamily`] under a configurable
//! generation strategy, resolves them with redirect semantics, exposes the
//! (deliberately unauthenticated) per-link analytics that real shorteners
//! offer, and throttles clients with a token-bucket [`RatePolicy`]. All
//! timing runs on the virtual clock, so rate-limit behavior is exact and
//! reproducible.
//!
//! Resolution outcomes mirror what a scanner sees over HTTP: a redirect, a
//! not-found, a 403-style rate limit, or a CAPTCHA challenge.

use crate::clock::{VirtualClock, VirtualDuration, VirtualInstant};
use crate::permute::IndexPermutation;
use crate::space::SpaceFamily;
use dashmap::DashMap;
use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{HashMap, VecDeque};
use std::io::{self, BufRead, Write};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use thiserror::Error;

/// How new tokens are chosen from the unissued part of the space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GenerationStrategy {
    /// The nth call issues global index n-1.
    Sequential,
    /// Uniform draws without replacement, reproducible from the seed.
    Random { seed: u64 },
    /// Sequential high part with `random_bits` low bits drawn per call;
    /// models services that mix a counter with a random component.
    Hybrid { seed: u64, random_bits: u32 },
    /// Token derived from a truncated digest of the long URL, re-hashing
    /// until an unissued in-range token is found.
    Hash,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PolicyError {
    #[error("sustained_rate must be positive")]
    NonPositiveSustained,
    #[error("burst_rate must be at least sustained_rate")]
    BurstBelowSustained,
    #[error("burst_window must be positive")]
    NonPositiveWindow,
    #[error("max_concurrent must be at least 1")]
    ZeroConcurrent,
    #[error("captcha_after must be at least 1 when set")]
    ZeroCaptchaAfter,
    #[error("quota windows need a positive window and at least 1 query")]
    BadQuota,
}

/// Resolver-side throttling rules.
///
/// Defaults model the observed behavior of a large public shortener: five
/// concurrent connections per client, 2.6 accepted queries/second sustained,
/// bursts up to 227 queries/second for a short window, then a temporary
/// block. The mechanism is a per-client token bucket refilled at
/// `sustained_rate` with capacity `burst_rate * burst_window`; draining the
/// bucket triggers the block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RatePolicy {
    pub max_concurrent: u32,
    /// Accepted queries/second a client can sustain indefinitely.
    pub sustained_rate: f64,
    /// Peak queries/second accepted within the burst window.
    pub burst_rate: f64,
    /// Seconds of burst the bucket absorbs before the client is blocked.
    pub burst_window: f64,
    /// Seconds a client stays blocked after draining its bucket.
    pub block_duration: f64,
    /// When set, every nth accepted query is answered with a CAPTCHA
    /// challenge instead of data.
    pub captcha_after: Option<u64>,
    /// Additional fixed-window quotas (per-minute, per-hour, per-month
    /// style); all default off.
    pub quotas: Vec<QuotaWindow>,
}

/// A fixed-window query quota: at most `max_queries` accepted per
/// `window_secs`, counted per client in windows aligned to t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuotaWindow {
    pub max_queries: u64,
    pub window_secs: f64,
}

impl Default for RatePolicy {
    fn default() -> Self {
        Self {
            max_concurrent: 5,
            sustained_rate: 2.6,
            burst_rate: 227.0,
            burst_window: 5.0,
            block_duration: 300.0,
            captcha_after: None,
            quotas: Vec::new(),
        }
    }
}

impl RatePolicy {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.sustained_rate <= 0.0 {
            return Err(PolicyError::NonPositiveSustained);
        }
        if self.burst_rate < self.sustained_rate {
            return Err(PolicyError::BurstBelowSustained);
        }
        if self.burst_window <= 0.0 {
            return Err(PolicyError::NonPositiveWindow);
        }
        if self.max_concurrent == 0 {
            return Err(PolicyError::ZeroConcurrent);
        }
        if self.captcha_after == Some(0) {
            return Err(PolicyError::ZeroCaptchaAfter);
        }
        for quota in &self.quotas {
            if quota.window_secs <= 0.0 || quota.max_queries == 0 {
                return Err(PolicyError::BadQuota);
            }
        }
        Ok(())
    }

    /// Bucket capacity in queries.
    pub fn bucket_capacity(&self) -> f64 {
        self.burst_rate * self.burst_window
    }
}

/// One token → long-URL mapping, as persisted in snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShortLink {
    pub token: String,
    pub long_url: String,
    pub domain_tag: String,
    pub created_at: VirtualInstant,
    pub visit_count: u64,
}

/// Public analytics view of a link — no authorization required, matching
/// the real-world APIs this models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkAnalytics {
    pub token: String,
    pub created_at: VirtualInstant,
    pub visit_count: u64,
    pub recent_visits: Vec<VirtualInstant>,
}

/// Outcome of one resolution attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Resolution {
    /// 301 with the original long URL; the visit is recorded.
    Redirect(String),
    /// 404: unmapped or malformed token (a resolver does not distinguish).
    NotFound,
    /// 403: the client exceeded the rate policy or is blocked.
    RateLimited,
    /// 429: the client must solve a challenge before this query is served.
    CaptchaChallenge { nonce: String },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ShortenError {
    #[error("token space exhausted: all {0} tokens issued")]
    SpaceExhausted(u128),
    #[error("allocation gave up after {attempts} attempts ({strategy})")]
    AllocationFailed { strategy: String, attempts: u64 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ServiceError {
    #[error("family cardinality exceeds the 2^126 allocation limit")]
    FamilyTooLarge,
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("token {0:?} is not mapped")]
pub struct UnknownToken(pub String);

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: token {token:?} is not valid for the service's space family")]
    ForeignToken { line: usize, token: String },
    #[error("line {line}: token {token:?} appears twice")]
    DuplicateToken { line: usize, token: String },
}

struct LinkState {
    long_url: String,
    domain_tag: String,
    created_at: VirtualInstant,
    visit_count: AtomicU64,
    recent_visits: Mutex<VecDeque<VirtualInstant>>,
}

struct ClientState {
    tokens: f64,
    last_refill: VirtualInstant,
    blocked_until: Option<VirtualInstant>,
    accepted: u64,
    first_seen: VirtualInstant,
    last_seen: VirtualInstant,
    in_flight: u32,
    // (window index, accepted in window) per configured quota.
    quota_windows: Vec<(u64, u64)>,
}

impl ClientState {
    fn new(policy: &RatePolicy, now: VirtualInstant) -> Self {
        Self {
            tokens: policy.bucket_capacity(),
            last_refill: now,
            blocked_until: None,
            accepted: 0,
            first_seen: now,
            last_seen: now,
            in_flight: 0,
            quota_windows: vec![(0, 0); policy.quotas.len()],
        }
    }
}

enum Admit {
    Serve,
    RateLimited,
    Captcha { nth: u64 },
}

/// Per-client accepted-traffic accounting, for scan-detection analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientStats {
    pub client: String,
    pub accepted: u64,
    pub first_seen: VirtualInstant,
    pub last_seen: VirtualInstant,
}

/// Issued-token count over family cardinality, kept exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    pub issued: u64,
    pub cardinality: BigUint,
}

impl Density {
    pub fn as_ratio(&self) -> BigRational {
        BigRational::new(
            BigUint::from(self.issued).into(),
            self.cardinality.clone().into(),
        )
    }

    pub fn as_f64(&self) -> f64 {
        self.as_ratio().to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Default)]
struct AllocState {
    sequential_cursor: u128,
    random_walks: HashMap<u64, (IndexPermutation, u128)>,
    hybrid_cursors: HashMap<(u64, u32), u128>,
}

/// The simulated shortening service.
///
/// The mapping store takes concurrent readers with serialized writers;
/// `resolve_at` is safe to call from many scanner workers at once. Only the
/// harness controller advances the service clock.
pub struct ShortenerService {
    family: SpaceFamily,
    capacity: u128,
    policy: RatePolicy,
    clock: VirtualClock,
    recent_visits_cap: usize,
    links: DashMap<String, LinkState>,
    alloc: Mutex<AllocState>,
    clients: DashMap<String, Mutex<ClientState>>,
}

impl ShortenerService {
    pub fn new(
        family: SpaceFamily,
        policy: RatePolicy,
        clock: VirtualClock,
    ) -> Result<Self, ServiceError> {
        policy.validate()?;
        let capacity = family
            .cardinality_u128()
            .filter(|c| *c <= 1 << 126)
            .ok_or(ServiceError::FamilyTooLarge)?;
        Ok(Self {
            family,
            capacity,
            policy,
            clock,
            recent_visits_cap: 10,
            links: DashMap::new(),
            alloc: Mutex::new(AllocState::default()),
            clients: DashMap::new(),
        })
    }

    /// How many recent visit timestamps each link retains.
    pub fn with_recent_visits_cap(mut self, cap: usize) -> Self {
        self.recent_visits_cap = cap;
        self
    }

    pub fn family(&self) -> &SpaceFamily {
        &self.family
    }

    pub fn policy(&self) -> &RatePolicy {
        &self.policy
    }

    pub fn clock(&self) -> &VirtualClock {
        &self.clock
    }

    pub fn issued_count(&self) -> u64 {
        self.links.len() as u64
    }

    pub fn capacity(&self) -> u128 {
        self.capacity
    }

    /// Exact issued/cardinality density.
    pub fn density(&self) -> Density {
        Density {
            issued: self.issued_count(),
            cardinality: self.family.cardinality(),
        }
    }

    /// Allocate a fresh token for `long_url`. Every call issues a token
    /// never issued before; duplicate long URLs get new tokens.
    pub fn shorten(
        &self,
        long_url: &str,
        strategy: &GenerationStrategy,
        domain_tag: &str,
    ) -> Result<ShortLink, ShortenError> {
        let mut alloc = self.alloc.lock().expect("alloc lock");
        if self.links.len() as u128 >= self.capacity {
            return Err(ShortenError::SpaceExhausted(self.capacity));
        }
        let index = self.next_free_index(&mut alloc, strategy, long_url)?;
        let token = self
            .family
            .encode_global_u128(index)
            .expect("allocator stays in range");
        let created_at = self.clock.now();
        let state = LinkState {
            long_url: long_url.to_string(),
            domain_tag: domain_tag.to_string(),
            created_at,
            visit_count: AtomicU64::new(0),
            recent_visits: Mutex::new(VecDeque::new()),
        };
        let prior = self.links.insert(token.clone(), state);
        debug_assert!(prior.is_none(), "allocator proposed an issued token");
        Ok(ShortLink {
            token,
            long_url: long_url.to_string(),
            domain_tag: domain_tag.to_string(),
            created_at,
            visit_count: 0,
        })
    }

    fn next_free_index(
        &self,
        alloc: &mut AllocState,
        strategy: &GenerationStrategy,
        long_url: &str,
    ) -> Result<u128, ShortenError> {
        match strategy {
            GenerationStrategy::Sequential => {
                // Skips tokens another strategy already took.
                for _ in 0..self.capacity {
                    let idx = alloc.sequential_cursor % self.capacity;
                    alloc.sequential_cursor += 1;
                    if !self.index_taken(idx) {
                        return Ok(idx);
                    }
                }
                Err(ShortenError::SpaceExhausted(self.capacity))
            }
            GenerationStrategy::Random { seed } => {
                let capacity = self.capacity;
                let (perm, cursor) = alloc.random_walks.entry(*seed).or_insert_with(|| {
                    let perm = IndexPermutation::new(capacity, *seed)
                        .expect("capacity checked at construction");
                    (perm, 0)
                });
                // The permutation walk visits every index exactly once, so
                // running off its end means the space is exhausted.
                while *cursor < capacity {
                    let idx = perm.apply(*cursor);
                    *cursor += 1;
                    if !self.index_taken(idx) {
                        return Ok(idx);
                    }
                }
                Err(ShortenError::SpaceExhausted(self.capacity))
            }
            GenerationStrategy::Hybrid { seed, random_bits } => {
                let bits = (*random_bits).min(126);
                let mask = (1u128 << bits) - 1;
                let cursor = alloc.hybrid_cursors.entry((*seed, bits)).or_insert(0);
                let max_attempts = self.capacity.min(1 << 20) as u64;
                for _ in 0..max_attempts {
                    let high = *cursor;
                    *cursor += 1;
                    let Some(shifted) = high.checked_shl(bits) else {
                        break;
                    };
                    let low = hash_to_u128(&format!("hybrid:{seed}:{high}")) & mask;
                    let idx = shifted | low;
                    if idx >= self.capacity {
                        break;
                    }
                    if !self.index_taken(idx) {
                        return Ok(idx);
                    }
                }
                Err(ShortenError::AllocationFailed {
                    strategy: format!("hybrid/{bits} random bits"),
                    attempts: max_attempts,
                })
            }
            GenerationStrategy::Hash => {
                // Truncate a digest of the URL to the space width and
                // cycle-walk (re-hash) past out-of-range values and tokens
                // that are already taken.
                let width = 128 - (self.capacity - 1).leading_zeros().min(127);
                let mask = if width >= 128 {
                    u128::MAX
                } else {
                    (1u128 << width) - 1
                };
                const MAX_ATTEMPTS: u64 = 100_000;
                for attempt in 0..MAX_ATTEMPTS {
                    let idx = hash_to_u128(&format!("hash:{attempt}:{long_url}")) & mask;
                    if idx < self.capacity && !self.index_taken(idx) {
                        return Ok(idx);
                    }
                }
                Err(ShortenError::AllocationFailed {
                    strategy: "hash".to_string(),
                    attempts: MAX_ATTEMPTS,
                })
            }
        }
    }

    fn index_taken(&self, index: u128) -> bool {
        let token = self
            .family
            .encode_global_u128(index)
            .expect("index < capacity");
        self.links.contains_key(&token)
    }

    /// Whether `token` is currently mapped. Cheap membership check for
    /// harnesses that do not need rate-limit simulation.
    pub fn has_token(&self, token: &str) -> bool {
        self.links.contains_key(token)
    }

    pub fn long_url(&self, token: &str) -> Option<String> {
        self.links.get(token).map(|l| l.long_url.clone())
    }

    /// Resolve at the service clock's current time.
    pub fn resolve(&self, token: &str, client: &str) -> Resolution {
        self.resolve_at(token, client, self.clock.now())
    }

    /// Resolve a token on behalf of `client` at an explicit instant.
    /// Scanner workers drive their own per-worker timelines through this.
    pub fn resolve_at(&self, token: &str, client: &str, now: VirtualInstant) -> Resolution {
        match self.admit(client, now) {
            Admit::RateLimited => return Resolution::RateLimited,
            Admit::Captcha { nth } => {
                return Resolution::CaptchaChallenge {
                    nonce: challenge_nonce(client, nth),
                }
            }
            Admit::Serve => {}
        }
        self.lookup(token, now)
    }

    fn lookup(&self, token: &str, now: VirtualInstant) -> Resolution {
        // Malformed tokens are indistinguishable from unmapped ones.
        match self.links.get(token) {
            Some(link) => {
                link.visit_count.fetch_add(1, Ordering::Relaxed);
                if self.recent_visits_cap > 0 {
                    let mut recent = link.recent_visits.lock().expect("visit lock");
                    if recent.len() == self.recent_visits_cap {
                        recent.pop_front();
                    }
                    recent.push_back(now);
                }
                Resolution::Redirect(link.long_url.clone())
            }
            None => Resolution::NotFound,
        }
    }

    fn admit(&self, client: &str, now: VirtualInstant) -> Admit {
        let entry = self
            .clients
            .entry(client.to_string())
            .or_insert_with(|| Mutex::new(ClientState::new(&self.policy, now)));
        let mut state = entry.lock().expect("client lock");
        // Refill first; the bucket keeps filling while blocked.
        if now > state.last_refill {
            let elapsed = (now - state.last_refill).as_secs_f64();
            state.tokens = (state.tokens + elapsed * self.policy.sustained_rate)
                .min(self.policy.bucket_capacity());
            state.last_refill = now;
        }
        if let Some(until) = state.blocked_until {
            if now < until {
                return Admit::RateLimited;
            }
            state.blocked_until = None;
        }
        // Fixed-window quotas reject without consuming the bucket.
        for (i, quota) in self.policy.quotas.iter().enumerate() {
            let window = (now.as_secs_f64() / quota.window_secs) as u64;
            let slot = &mut state.quota_windows[i];
            if slot.0 != window {
                *slot = (window, 0);
            }
            if slot.1 >= quota.max_queries {
                return Admit::RateLimited;
            }
        }
        if state.tokens < 1.0 {
            state.blocked_until =
                Some(now + VirtualDuration::from_secs_f64(self.policy.block_duration));
            return Admit::RateLimited;
        }
        state.tokens -= 1.0;
        for slot in &mut state.quota_windows {
            slot.1 += 1;
        }
        state.accepted += 1;
        if state.accepted == 1 {
            state.first_seen = now;
        }
        state.last_seen = now;
        if let Some(every) = self.policy.captcha_after {
            if state.accepted.is_multiple_of(every) {
                return Admit::Captcha {
                    nth: state.accepted,
                };
            }
        }
        Admit::Serve
    }

    /// Open one of the client's `max_concurrent` connections. Returns
    /// `None` (modeling a 403) when the client is at its connection limit
    /// or currently blocked.
    pub fn try_connect(&self, client: &str) -> Option<ClientConnection<'_>> {
        let now = self.clock.now();
        let entry = self
            .clients
            .entry(client.to_string())
            .or_insert_with(|| Mutex::new(ClientState::new(&self.policy, now)));
        let mut state = entry.lock().expect("client lock");
        if let Some(until) = state.blocked_until {
            if now < until {
                return None;
            }
        }
        if state.in_flight >= self.policy.max_concurrent {
            return None;
        }
        state.in_flight += 1;
        drop(state);
        drop(entry);
        Some(ClientConnection {
            service: self,
            client: client.to_string(),
        })
    }

    fn release_connection(&self, client: &str) {
        if let Some(entry) = self.clients.get(client) {
            let mut state = entry.lock().expect("client lock");
            state.in_flight = state.in_flight.saturating_sub(1);
        }
    }

    fn connections_full(&self, client: &str) -> bool {
        self.clients
            .get(client)
            .map(|entry| {
                let state = entry.lock().expect("client lock");
                state.in_flight >= self.policy.max_concurrent
            })
            .unwrap_or(false)
    }

    /// One-shot resolve over an implicit new connection: rejected outright
    /// when the client already has `max_concurrent` connections open.
    pub fn resolve_over_new_connection(&self, token: &str, client: &str) -> Resolution {
        if self.connections_full(client) {
            return Resolution::RateLimited;
        }
        self.resolve(token, client)
    }

    /// Public analytics for a mapped token.
    pub fn analytics(&self, token: &str) -> Result<LinkAnalytics, UnknownToken> {
        let link = self
            .links
            .get(token)
            .ok_or_else(|| UnknownToken(token.to_string()))?;
        let recent = link.recent_visits.lock().expect("visit lock");
        Ok(LinkAnalytics {
            token: token.to_string(),
            created_at: link.created_at,
            visit_count: link.visit_count.load(Ordering::Relaxed),
            recent_visits: recent.iter().copied().collect(),
        })
    }

    /// All links, sorted by token for deterministic output.
    pub fn snapshot(&self) -> Vec<ShortLink> {
        let mut out: Vec<ShortLink> = self
            .links
            .iter()
            .map(|entry| ShortLink {
                token: entry.key().clone(),
                long_url: entry.long_url.clone(),
                domain_tag: entry.domain_tag.clone(),
                created_at: entry.created_at,
                visit_count: entry.visit_count.load(Ordering::Relaxed),
            })
            .collect();
        out.sort_by(|a, b| a.token.cmp(&b.token));
        out
    }

    /// Line-delimited JSON snapshot: one `ShortLink` record per line.
    pub fn write_snapshot_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for link in self.snapshot() {
            serde_json::to_writer(&mut w, &link)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rebuild a service from a snapshot. Allocation cursors restart from
    /// zero; the skip-if-taken rule keeps future allocations collision-free.
    pub fn from_snapshot_jsonl<R: BufRead>(
        family: SpaceFamily,
        policy: RatePolicy,
        clock: VirtualClock,
        reader: R,
    ) -> Result<Self, SnapshotError> {
        let service = Self::new(family, policy, clock)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))?;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ShortLink = serde_json::from_str(&line)
                .map_err(|source| SnapshotError::Parse { line: i + 1, source })?;
            if !service.family.contains(&record.token) {
                return Err(SnapshotError::ForeignToken {
                    line: i + 1,
                    token: record.token,
                });
            }
            let state = LinkState {
                long_url: record.long_url,
                domain_tag: record.domain_tag,
                created_at: record.created_at,
                visit_count: AtomicU64::new(record.visit_count),
                recent_visits: Mutex::new(VecDeque::new()),
            };
            if service.links.insert(record.token.clone(), state).is_some() {
                return Err(SnapshotError::DuplicateToken {
                    line: i + 1,
                    token: record.token,
                });
            }
        }
        Ok(service)
    }

    /// Accepted-traffic accounting per client, sorted by client id.
    pub fn client_stats(&self) -> Vec<ClientStats> {
        let mut out: Vec<ClientStats> = self
            .clients
            .iter()
            .map(|entry| {
                let state = entry.value().lock().expect("client lock");
                ClientStats {
                    client: entry.key().clone(),
                    accepted: state.accepted,
                    first_seen: state.first_seen,
                    last_seen: state.last_seen,
                }
            })
            .filter(|s| s.accepted > 0)
            .collect();
        out.sort_by(|a, b| a.client.cmp(&b.client));
        out
    }
}

/// RAII handle for one of a client's concurrent connections.
pub struct ClientConnection<'a> {
    service: &'a ShortenerService,
    client: String,
}

impl ClientConnection<'_> {
    pub fn resolve(&self, token: &str) -> Resolution {
        self.service.resolve(token, &self.client)
    }

    pub fn resolve_at(&self, token: &str, now: VirtualInstant) -> Resolution {
        self.service.resolve_at(token, &self.client, now)
    }
}

impl Drop for ClientConnection<'_> {
    fn drop(&mut self) {
        self.service.release_connection(&self.client);
    }
}

fn challenge_nonce(client: &str, nth: u64) -> String {
    let mut hasher = Sha256::new();
    hasher.update(client.as_bytes());
    hasher.update(nth.to_le_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_to_u128(input: &str) -> u128 {
    let mut hasher = Sha256::new();
    hasher.update(input.as_bytes());
    let digest = hasher.finalize();
    u128::from_le_bytes(digest[..16].try_into().expect("16 bytes"))
}

/// Derive an independent sub-seed from an experiment seed and a label, so
/// components can be re-run independently yet reproducibly.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}
