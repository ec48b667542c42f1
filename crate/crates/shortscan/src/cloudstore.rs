//! Synthetic cloud-storage backend with capability-keyed sharing.
//!
//! Accounts hold a tree of items; sharing is assigned per top-level group
//! (a loose file or a folder subtree under the account root), and every
//! item in a group carries the group's share mode and capability key. That
//! mirrors how folder shares cover their contents, and it makes the ground
//! truth for traversal exact: the items reachable from one shared URL are
//! precisely the items shared under the same capability key or without a
//! key.
//!
//! [`traverse_account`] implements the account-walking procedure a scanner
//! would run — build the account root URL from one discovered item's
//! `(cid, authkey)`, list the page, follow folder links with the same cid,
//! collect item links — and its hardened variant, where the root page no
//! longer reveals sibling items and only the entry's own subtree is
//! reachable.
//!
//! Writable-folder discovery works off the rendered page marker (the
//! "Upload" control a real page shows on edit-shared folders);
//! [`inject_file`] records simulated writes in an audit log. Payload
//! content is never real — writes carry a label only.

use crate::clock::VirtualInstant;
use crate::cloudurl::{
    self, parse_url, render_item_url, render_root_url, ItemKind, UrlKind, UrlParseError,
};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::LogNormal;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{self, Write};
use std::sync::Mutex;
use thiserror::Error;

/// Sharing regime for an account.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareScheme {
    /// One or more account-wide capability keys; a key discovered on any
    /// item opens everything shared under it.
    PerAccountCapability,
    /// Every shared item has its own capability key, so one discovered URL
    /// exposes nothing else.
    PerItemCapability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareMode {
    None,
    View,
    Edit,
}

/// One stored file or folder. The item id string is `CID!seq`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredItem {
    pub seq: u64,
    pub kind: ItemKind,
    pub name: String,
    pub share: ShareMode,
    /// Capability key; `None` on unkeyed (public) shares and unshared items.
    pub authkey: Option<String>,
    pub parent: Option<u64>,
    pub children: Vec<u64>,
}

impl StoredItem {
    pub fn is_shared(&self) -> bool {
        self.share != ShareMode::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Account {
    pub cid: String,
    pub scheme: ShareScheme,
    pub root_seq: u64,
    pub items: BTreeMap<u64, StoredItem>,
    /// Simulated devices that auto-sync this account.
    pub devices: Vec<String>,
}

impl Account {
    pub fn item(&self, seq: u64) -> Option<&StoredItem> {
        self.items.get(&seq)
    }

    /// File (non-folder) count.
    pub fn file_count(&self) -> usize {
        self.items
            .values()
            .filter(|i| !i.kind.is_folder())
            .count()
    }

    /// Every capability key in use on this account's shared items.
    pub fn capability_keys(&self) -> BTreeSet<&str> {
        self.items
            .values()
            .filter(|i| i.is_shared())
            .filter_map(|i| i.authkey.as_deref())
            .collect()
    }

    /// Ground truth: sequence numbers of items shared under `capability`
    /// (plus unkeyed shares). Used by effectiveness reports; tests keep
    /// their own independent filters.
    pub fn items_shared_under(&self, capability: Option<&str>) -> BTreeSet<u64> {
        self.items
            .values()
            .filter(|i| i.is_shared())
            .filter(|i| match (&i.authkey, capability) {
                (None, _) => true,
                (Some(k), Some(c)) => k == c,
                (Some(_), None) => false,
            })
            .map(|i| i.seq)
            .collect()
    }

    /// Canonical long URL of an item, carrying the item's own capability
    /// key when present.
    pub fn item_url(&self, seq: u64) -> Option<String> {
        let item = self.items.get(&seq)?;
        let ithint = self.folder_ithint(item);
        Some(render_item_url(
            &self.cid,
            seq,
            item.kind,
            ithint.as_deref(),
            item.share == ShareMode::Edit,
            item.authkey.as_deref(),
        ))
    }

    fn folder_ithint(&self, item: &StoredItem) -> Option<String> {
        if !item.kind.is_folder() {
            return None;
        }
        // Content-type hint: the most common child extension.
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for child in &item.children {
            if let Some(c) = self.items.get(child) {
                if !c.kind.is_folder() {
                    *counts.entry(c.kind.extension()).or_insert(0) += 1;
                }
            }
        }
        counts
            .into_iter()
            .max_by_key(|(ext, n)| (*n, std::cmp::Reverse(*ext)))
            .map(|(ext, _)| ext.to_string())
    }
}

/// A rendered account page: what a crawler sees when listing one folder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub cid: String,
    pub folder_seq: u64,
    pub url: String,
    /// The page-level "Upload" marker: present iff the folder is
    /// edit-shared, i.e. anyone with the URL can write into it.
    pub upload_enabled: bool,
    pub links: Vec<PageLink>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageLink {
    pub url: String,
    pub seq: u64,
    pub kind: ItemKind,
}

/// Simulated write recorded by [`inject_file`]. Payloads are labels, not
/// content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WriteAudit {
    pub cid: String,
    pub folder_seq: u64,
    pub payload_label: String,
    pub payload_kind: ItemKind,
    pub at: VirtualInstant,
    /// Devices that would auto-download the injected file.
    pub sync_targets: Vec<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraverseError {
    #[error("entry is not a storage URL: {0}")]
    BadUrl(#[from] UrlParseError),
    #[error("no account with cid {0}")]
    UnknownAccount(String),
    #[error("no item {seq} in account {cid}")]
    UnknownItem { cid: String, seq: u64 },
    #[error("authkey does not grant access to account {0}")]
    InvalidKey(String),
    #[error("item {cid}!{seq} is not shared")]
    NotShared { cid: String, seq: u64 },
    #[error("capability does not cover item {cid}!{seq}")]
    WrongCapability { cid: String, seq: u64 },
    #[error("item {cid}!{seq} is not a folder")]
    NotAFolder { cid: String, seq: u64 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InjectError {
    #[error(transparent)]
    Access(#[from] TraverseError),
    #[error("folder {cid}!{seq} is view-only")]
    ViewOnly { cid: String, seq: u64 },
    #[error("payload label {0:?} rejected by content screening")]
    PayloadScreened(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum PopulateError {
    #[error("{field} must be within [0, 1], got {value}")]
    FractionOutOfRange { field: &'static str, value: f64 },
    #[error("files_sigma must be non-negative")]
    NegativeSigma,
    #[error("max_authkeys_per_account must be at least 1")]
    ZeroKeys,
}

/// Parameters for building a synthetic storage population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StoragePopulationSpec {
    pub accounts: usize,
    /// Files per account are log-normal(mu, sigma), clipped to
    /// [0, files_max] — a heavy tail with mostly small accounts.
    pub files_mu: f64,
    pub files_sigma: f64,
    pub files_max: u64,
    /// Fraction of accounts that receive at least one edit-shared folder.
    pub edit_share_fraction: f64,
    /// Fraction of accounts using per-item capability keys.
    pub per_item_capability_fraction: f64,
    /// Fraction of shared groups published without any capability key.
    pub unkeyed_share_fraction: f64,
    /// Fraction of top-level groups that are not shared at all.
    pub unshared_group_fraction: f64,
    pub max_authkeys_per_account: usize,
    /// Payload labels the simulated content screening rejects.
    pub av_blacklist: Vec<String>,
}

impl Default for StoragePopulationSpec {
    fn default() -> Self {
        Self {
            accounts: 1000,
            files_mu: 3.0,
            files_sigma: 1.5,
            files_max: 31_000,
            edit_share_fraction: 0.07,
            per_item_capability_fraction: 0.0,
            unkeyed_share_fraction: 0.2,
            unshared_group_fraction: 0.25,
            max_authkeys_per_account: 3,
            av_blacklist: vec!["eicar-test-label".to_string()],
        }
    }
}

impl StoragePopulationSpec {
    pub fn validate(&self) -> Result<(), PopulateError> {
        for (field, value) in [
            ("edit_share_fraction", self.edit_share_fraction),
            (
                "per_item_capability_fraction",
                self.per_item_capability_fraction,
            ),
            ("unkeyed_share_fraction", self.unkeyed_share_fraction),
            ("unshared_group_fraction", self.unshared_group_fraction),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(PopulateError::FractionOutOfRange { field, value });
            }
        }
        if self.files_sigma < 0.0 {
            return Err(PopulateError::NegativeSigma);
        }
        if self.max_authkeys_per_account == 0 {
            return Err(PopulateError::ZeroKeys);
        }
        Ok(())
    }
}

/// The populated backend. Immutable after [`populate`] except for the
/// write-audit log.
#[derive(Debug)]
pub struct CloudStore {
    pub accounts: BTreeMap<String, Account>,
    av_blacklist: BTreeSet<String>,
    audit: Mutex<Vec<WriteAudit>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CloudStoreSnapshot {
    pub accounts: BTreeMap<String, Account>,
    pub av_blacklist: BTreeSet<String>,
    pub audit: Vec<WriteAudit>,
}

impl CloudStore {
    pub fn account(&self, cid: &str) -> Option<&Account> {
        self.accounts.get(&cid.to_ascii_uppercase())
    }

    pub fn account_count(&self) -> usize {
        self.accounts.len()
    }

    /// Whether a storage URL is "live": it parses, the account exists, and
    /// the capability actually grants access to the referenced page.
    pub fn is_live(&self, url: &str) -> bool {
        let Ok(parsed) = parse_url(url) else {
            return false;
        };
        let Some(account) = self.account(&parsed.cid) else {
            return false;
        };
        match parsed.kind {
            UrlKind::AccountRoot => match parsed.authkey.as_deref() {
                None => true,
                Some(k) => account.capability_keys().contains(k),
            },
            UrlKind::Item(_) => {
                let Some(seq) = parsed.seq else { return false };
                let Some(item) = account.item(seq) else {
                    return false;
                };
                item.is_shared() && item.authkey.as_deref() == parsed.authkey.as_deref()
            }
        }
    }

    pub fn audit_log(&self) -> Vec<WriteAudit> {
        self.audit.lock().expect("audit lock").clone()
    }

    pub fn write_audit_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for entry in self.audit_log() {
            serde_json::to_writer(&mut w, &entry)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_snapshot(&self) -> CloudStoreSnapshot {
        CloudStoreSnapshot {
            accounts: self.accounts.clone(),
            av_blacklist: self.av_blacklist.clone(),
            audit: self.audit_log(),
        }
    }

    pub fn from_snapshot(snapshot: CloudStoreSnapshot) -> Self {
        Self {
            accounts: snapshot.accounts,
            av_blacklist: snapshot.av_blacklist,
            audit: Mutex::new(snapshot.audit),
        }
    }
}

const AUTHKEY_ALPHABET: &str = crate::space::BASE62_ALPHABET;

fn random_authkey(rng: &mut ChaCha8Rng) -> String {
    let bytes = AUTHKEY_ALPHABET.as_bytes();
    let mut key = String::with_capacity(11);
    key.push('!');
    for _ in 0..10 {
        key.push(bytes[rng.gen_range(0..bytes.len())] as char);
    }
    key
}

fn random_cid(rng: &mut ChaCha8Rng) -> String {
    const HEX: &[u8] = b"0123456789ABCDEF";
    (0..16)
        .map(|_| HEX[rng.gen_range(0..16)] as char)
        .collect()
}

// File-kind mix for synthetic accounts: media dominates, with a long tail
// of documents, mirroring what public storage sweeps typically surface.
const KIND_WEIGHTS: [(ItemKind, f64); 8] = [
    (ItemKind::Media, 60.0),
    (ItemKind::Download, 12.0),
    (ItemKind::Pdf, 12.0),
    (ItemKind::Word, 8.0),
    (ItemKind::Excel, 4.0),
    (ItemKind::PowerPoint, 3.0),
    (ItemKind::OneNote, 0.7),
    (ItemKind::Survey, 0.3),
];

fn alloc_item(
    items: &mut BTreeMap<u64, StoredItem>,
    next_seq: &mut u64,
    kind: ItemKind,
    parent: Option<u64>,
) -> u64 {
    let seq = *next_seq;
    *next_seq += 1;
    let name = match (kind, parent) {
        (ItemKind::Folder, None) => "root".to_string(),
        (ItemKind::Folder, Some(_)) => format!("folder-{seq}"),
        (kind, _) => format!("item-{seq}.{}", kind.extension()),
    };
    items.insert(
        seq,
        StoredItem {
            seq,
            kind,
            name,
            share: ShareMode::None,
            authkey: None,
            parent,
            children: Vec::new(),
        },
    );
    if let Some(p) = parent {
        items.get_mut(&p).expect("parent exists").children.push(seq);
    }
    seq
}

/// Deterministically build a synthetic storage population.
pub fn populate(spec: &StoragePopulationSpec, seed: u64) -> Result<CloudStore, PopulateError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let files_dist = LogNormal::new(spec.files_mu, spec.files_sigma.max(f64::MIN_POSITIVE))
        .expect("sigma validated");
    let kind_dist = WeightedIndex::new(KIND_WEIGHTS.iter().map(|(_, w)| *w)).expect("weights");
    let device_pool = ["pc", "laptop", "phone", "tablet"];

    let mut accounts = BTreeMap::new();
    for _ in 0..spec.accounts {
        let mut cid = random_cid(&mut rng);
        while accounts.contains_key(&cid) {
            cid = random_cid(&mut rng);
        }
        let scheme = if rng.gen_bool(spec.per_item_capability_fraction) {
            ShareScheme::PerItemCapability
        } else {
            ShareScheme::PerAccountCapability
        };
        let n_files = (files_dist.sample(&mut rng).round() as u64).min(spec.files_max) as usize;
        let key_count = rng.gen_range(1..=spec.max_authkeys_per_account);
        let keys: Vec<String> = (0..key_count).map(|_| random_authkey(&mut rng)).collect();
        let device_count = rng.gen_range(1..=device_pool.len());
        let devices: Vec<String> = device_pool[..device_count]
            .iter()
            .map(|d| d.to_string())
            .collect();
        let is_edit_account = rng.gen_bool(spec.edit_share_fraction);

        let mut items: BTreeMap<u64, StoredItem> = BTreeMap::new();
        let mut next_seq = 100u64;

        let root_seq = alloc_item(&mut items, &mut next_seq, ItemKind::Folder, None);

        // Folders first, so files have somewhere to land. Roughly one
        // folder per dozen files, occasionally nested one level deeper.
        let n_folders = if n_files == 0 {
            0
        } else {
            rng.gen_range(1..=(n_files / 12 + 2).min(8))
        };
        let mut folders = vec![root_seq];
        for f in 0..n_folders {
            let parent = if f > 0 && rng.gen_bool(0.25) {
                folders[rng.gen_range(1..folders.len())]
            } else {
                root_seq
            };
            let seq = alloc_item(&mut items, &mut next_seq, ItemKind::Folder, Some(parent));
            let _ = f;
            folders.push(seq);
        }
        for _ in 0..n_files {
            let kind = KIND_WEIGHTS[kind_dist.sample(&mut rng)].0;
            let parent = folders[rng.gen_range(0..folders.len())];
            alloc_item(&mut items, &mut next_seq, kind, Some(parent));
        }

        // Share assignment per top-level group: every item under one root
        // child inherits that child's share mode and key.
        let top_level: Vec<u64> = items[&root_seq].children.clone();
        let mut edit_candidates: Vec<u64> = Vec::new();
        for &group_root in &top_level {
            let shared = !rng.gen_bool(spec.unshared_group_fraction);
            if !shared {
                continue;
            }
            let unkeyed = rng.gen_bool(spec.unkeyed_share_fraction);
            let group_key: Option<String> = if unkeyed {
                None
            } else {
                Some(keys[rng.gen_range(0..keys.len())].clone())
            };
            // Walk the subtree.
            let mut stack = vec![group_root];
            while let Some(seq) = stack.pop() {
                let children = items[&seq].children.clone();
                stack.extend(children);
                let per_item_key = if scheme == ShareScheme::PerItemCapability {
                    Some(random_authkey(&mut rng))
                } else {
                    group_key.clone()
                };
                let item = items.get_mut(&seq).expect("walked item");
                item.share = ShareMode::View;
                item.authkey = per_item_key;
            }
            if items[&group_root].kind.is_folder() {
                edit_candidates.push(group_root);
            }
        }

        if is_edit_account {
            // Guarantee at least one edit-shared folder, creating a shared
            // folder when the account has none.
            let group_root = if edit_candidates.is_empty() {
                let seq = alloc_item(&mut items, &mut next_seq, ItemKind::Folder, Some(root_seq));
                let key = if rng.gen_bool(spec.unkeyed_share_fraction) {
                    None
                } else if scheme == ShareScheme::PerItemCapability {
                    Some(random_authkey(&mut rng))
                } else {
                    Some(keys[rng.gen_range(0..keys.len())].clone())
                };
                let item = items.get_mut(&seq).expect("new folder");
                item.share = ShareMode::View;
                item.authkey = key;
                seq
            } else {
                edit_candidates[rng.gen_range(0..edit_candidates.len())]
            };
            let mut stack = vec![group_root];
            while let Some(seq) = stack.pop() {
                let children = items[&seq].children.clone();
                stack.extend(children);
                items.get_mut(&seq).expect("walked item").share = ShareMode::Edit;
            }
        }

        accounts.insert(
            cid.clone(),
            Account {
                cid,
                scheme,
                root_seq,
                items,
                devices,
            },
        );
    }

    Ok(CloudStore {
        accounts,
        av_blacklist: spec.av_blacklist.iter().cloned().collect(),
        audit: Mutex::new(Vec::new()),
    })
}

/// Render the listing page of one folder under a capability.
///
/// The page shows links to the children visible under that capability and
/// carries the upload marker when the folder itself is edit-shared.
pub fn render_page(
    store: &CloudStore,
    cid: &str,
    folder_seq: Option<u64>,
    capability: Option<&str>,
) -> Result<Page, TraverseError> {
    let account = store
        .account(cid)
        .ok_or_else(|| TraverseError::UnknownAccount(cid.to_string()))?;
    if let Some(k) = capability {
        if !account.capability_keys().contains(k) {
            return Err(TraverseError::InvalidKey(cid.to_string()));
        }
    }
    let seq = folder_seq.unwrap_or(account.root_seq);
    let folder = account.item(seq).ok_or(TraverseError::UnknownItem {
        cid: account.cid.clone(),
        seq,
    })?;
    if !folder.kind.is_folder() {
        return Err(TraverseError::NotAFolder {
            cid: account.cid.clone(),
            seq,
        });
    }
    // A non-root folder page requires its own capability to match.
    if seq != account.root_seq {
        if !folder.is_shared() {
            return Err(TraverseError::NotShared {
                cid: account.cid.clone(),
                seq,
            });
        }
        // Keyed folders need the matching capability; unkeyed shares are
        // public and listable under any capability.
        if folder.authkey.is_some() && folder.authkey.as_deref() != capability {
            return Err(TraverseError::WrongCapability {
                cid: account.cid.clone(),
                seq,
            });
        }
    }
    let visible = |item: &StoredItem| -> bool {
        item.is_shared()
            && match (&item.authkey, capability) {
                (None, _) => true,
                (Some(k), Some(c)) => k == c,
                (Some(_), None) => false,
            }
    };
    let links = folder
        .children
        .iter()
        .filter_map(|child_seq| account.item(*child_seq))
        .filter(|child| visible(child))
        .map(|child| PageLink {
            url: account.item_url(child.seq).expect("child exists"),
            seq: child.seq,
            kind: child.kind,
        })
        .collect();
    let url = if seq == account.root_seq {
        render_root_url(&account.cid, capability)
    } else {
        account.item_url(seq).expect("folder exists")
    };
    Ok(Page {
        cid: account.cid.clone(),
        folder_seq: seq,
        url,
        upload_enabled: folder.share == ShareMode::Edit,
        links,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApiMode {
    /// Root-URL listing reveals everything shared under the same
    /// capability; folder links are traversable account-wide.
    Legacy,
    /// The root URL reveals nothing; only the entry item's own subtree is
    /// reachable.
    Hardened,
}

/// Walk an account from one discovered URL and return every reachable item
/// URL.
pub fn traverse_account(
    store: &CloudStore,
    entry_url: &str,
    mode: ApiMode,
) -> Result<BTreeSet<String>, TraverseError> {
    let parsed = parse_url(entry_url)?;
    let account = store
        .account(&parsed.cid)
        .ok_or_else(|| TraverseError::UnknownAccount(parsed.cid.clone()))?;
    let capability = parsed.authkey.as_deref();
    if let Some(k) = capability {
        if !account.capability_keys().contains(k) {
            return Err(TraverseError::InvalidKey(parsed.cid.clone()));
        }
    }
    // Entry referencing a specific item: it must exist and the capability
    // must actually cover it.
    let entry_item = match parsed.kind {
        UrlKind::Item(_) => {
            let seq = parsed.seq.expect("item URLs carry a sequence");
            let item = account.item(seq).ok_or(TraverseError::UnknownItem {
                cid: account.cid.clone(),
                seq,
            })?;
            if !item.is_shared() {
                return Err(TraverseError::NotShared {
                    cid: account.cid.clone(),
                    seq,
                });
            }
            if item.authkey.as_deref() != capability {
                return Err(TraverseError::WrongCapability {
                    cid: account.cid.clone(),
                    seq,
                });
            }
            Some(item)
        }
        UrlKind::AccountRoot => None,
    };

    let mut reachable = BTreeSet::new();
    match mode {
        ApiMode::Legacy => {
            // The published procedure: construct the root URL from
            // (cid, authkey), list it, recurse into folder links.
            let mut queue: VecDeque<Option<u64>> = VecDeque::new();
            queue.push_back(None); // root page
            let mut listed = BTreeSet::new();
            while let Some(folder) = queue.pop_front() {
                let page = render_page(store, &account.cid, folder, capability)?;
                for link in page.links {
                    reachable.insert(link.url);
                    if link.kind.is_folder() && listed.insert(link.seq) {
                        queue.push_back(Some(link.seq));
                    }
                }
            }
        }
        ApiMode::Hardened => {
            let Some(entry) = entry_item else {
                // Root access reveals nothing in hardened mode.
                return Ok(reachable);
            };
            reachable.insert(account.item_url(entry.seq).expect("entry exists"));
            if entry.kind.is_folder() {
                let mut queue = VecDeque::from([entry.seq]);
                while let Some(folder) = queue.pop_front() {
                    let page = render_page(store, &account.cid, Some(folder), capability)?;
                    for link in page.links {
                        reachable.insert(link.url);
                        if link.kind.is_folder() {
                            queue.push_back(link.seq);
                        }
                    }
                }
            }
        }
    }
    Ok(reachable)
}

/// Folders whose pages carry the upload marker — the "unlocked" folders
/// anyone holding the URL can write into.
pub fn find_writable(pages: &[Page]) -> Vec<String> {
    pages
        .iter()
        .filter(|p| p.upload_enabled)
        .map(|p| p.url.clone())
        .collect()
}

/// Sweep the whole population through the page renderer and report the
/// accounts with at least one unlocked folder.
pub fn writable_accounts(store: &CloudStore) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for account in store.accounts.values() {
        let writable = account
            .items
            .values()
            .filter(|i| i.kind.is_folder() && i.is_shared() && i.seq != account.root_seq)
            .any(|folder| {
                render_page(store, &account.cid, Some(folder.seq), folder.authkey.as_deref())
                    .map(|page| page.upload_enabled)
                    .unwrap_or(false)
            });
        if writable {
            out.insert(account.cid.clone());
        }
    }
    out
}

/// What to write. Content is a label only; `kind` drives the simulated
/// file type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadDescriptor {
    pub label: String,
    pub kind: ItemKind,
}

/// Attempt a write into the folder behind `folder_url`. Succeeds iff the
/// folder is edit-shared and the URL carries its capability; successful
/// writes append an audit entry listing the devices that would sync the
/// file.
pub fn inject_file(
    store: &CloudStore,
    folder_url: &str,
    payload: &PayloadDescriptor,
    now: VirtualInstant,
) -> Result<WriteAudit, InjectError> {
    let parsed = parse_url(folder_url).map_err(TraverseError::BadUrl)?;
    let account = store
        .account(&parsed.cid)
        .ok_or_else(|| TraverseError::UnknownAccount(parsed.cid.clone()))?;
    let seq = match (parsed.kind, parsed.seq) {
        (UrlKind::Item(kind), Some(seq)) if kind.is_folder() => seq,
        _ => {
            return Err(TraverseError::NotAFolder {
                cid: account.cid.clone(),
                seq: parsed.seq.unwrap_or(0),
            }
            .into())
        }
    };
    let folder = account.item(seq).ok_or(TraverseError::UnknownItem {
        cid: account.cid.clone(),
        seq,
    })?;
    match folder.share {
        ShareMode::None => {
            return Err(TraverseError::NotShared {
                cid: account.cid.clone(),
                seq,
            }
            .into())
        }
        ShareMode::View => {
            return Err(InjectError::ViewOnly {
                cid: account.cid.clone(),
                seq,
            })
        }
        ShareMode::Edit => {}
    }
    if folder.authkey.as_deref() != parsed.authkey.as_deref() {
        return Err(TraverseError::WrongCapability {
            cid: account.cid.clone(),
            seq,
        }
        .into());
    }
    // Rudimentary content screening: exact label match only, trivially
    // evaded by renaming.
    if store.av_blacklist.contains(&payload.label) {
        return Err(InjectError::PayloadScreened(payload.label.clone()));
    }
    let entry = WriteAudit {
        cid: account.cid.clone(),
        folder_seq: seq,
        payload_label: payload.label.clone(),
        payload_kind: payload.kind,
        at: now,
        sync_targets: account.devices.clone(),
    };
    store.audit.lock().expect("audit lock").push(entry.clone());
    Ok(entry)
}

pub use cloudurl::STORAGE_HOST;

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(accounts: usize) -> StoragePopulationSpec {
        StoragePopulationSpec {
            accounts,
            files_mu: 2.0,
            files_sigma: 1.0,
            ..StoragePopulationSpec::default()
        }
    }

    // Independent oracle: flat filter of the ground-truth tree by
    // capability, no page machinery involved.
    fn oracle_filter(account: &Account, capability: Option<&str>) -> BTreeSet<String> {
        account
            .items
            .values()
            .filter(|i| i.is_shared())
            .filter(|i| match (&i.authkey, capability) {
                (None, _) => true,
                (Some(k), Some(c)) => k.as_str() == c,
                (Some(_), None) => false,
            })
            .map(|i| account.item_url(i.seq).unwrap())
            .collect()
    }

    #[test]
    fn populate_is_deterministic() {
        let spec = small_spec(40);
        let a = populate(&spec, 7).unwrap();
        let b = populate(&spec, 7).unwrap();
        let ja = serde_json::to_string(&a.to_snapshot()).unwrap();
        let jb = serde_json::to_string(&b.to_snapshot()).unwrap();
        assert_eq!(ja, jb, "same spec + seed gives byte-identical state");
        let c = populate(&spec, 8).unwrap();
        let jc = serde_json::to_string(&c.to_snapshot()).unwrap();
        assert_ne!(ja, jc);
    }

    #[test]
    fn zero_file_account_has_empty_root() {
        let spec = StoragePopulationSpec {
            accounts: 1,
            files_mu: -20.0, // log-normal mass at ~0, rounds to zero files
            files_sigma: 0.1,
            edit_share_fraction: 0.0,
            ..StoragePopulationSpec::default()
        };
        let store = populate(&spec, 3).unwrap();
        let account = store.accounts.values().next().unwrap();
        assert_eq!(account.file_count(), 0);
        assert_eq!(account.items[&account.root_seq].children.len(), 0);
    }

    #[test]
    fn sequence_numbers_start_at_100_and_are_unique() {
        let store = populate(&small_spec(10), 11).unwrap();
        for account in store.accounts.values() {
            assert_eq!(account.root_seq, 100);
            let mut prev = None;
            for seq in account.items.keys() {
                assert!(*seq >= 100);
                assert!(Some(*seq) > prev);
                prev = Some(*seq);
            }
            // Non-folders have no children.
            for item in account.items.values() {
                if !item.kind.is_folder() {
                    assert!(item.children.is_empty());
                }
            }
        }
    }

    #[test]
    fn legacy_traversal_matches_oracle_on_keyed_entry() {
        let store = populate(&small_spec(60), 21).unwrap();
        let mut checked = 0;
        for account in store.accounts.values() {
            // Entry: any keyed shared item.
            let Some(entry) = account
                .items
                .values()
                .find(|i| i.is_shared() && i.authkey.is_some())
            else {
                continue;
            };
            let entry_url = account.item_url(entry.seq).unwrap();
            let reachable = traverse_account(&store, &entry_url, ApiMode::Legacy).unwrap();
            let expected = oracle_filter(account, entry.authkey.as_deref());
            assert_eq!(reachable, expected, "account {}", account.cid);
            checked += 1;
        }
        assert!(checked > 10, "population too sparse to exercise traversal");
    }

    #[test]
    fn traversal_respects_capability_boundaries() {
        // Hand-built account with two keys and an unkeyed group.
        let mut items = BTreeMap::new();
        let mk = |seq, kind, share, key: Option<&str>, parent, children: Vec<u64>| StoredItem {
            seq,
            kind,
            name: format!("i{seq}"),
            share,
            authkey: key.map(String::from),
            parent,
            children,
        };
        items.insert(
            100,
            mk(
                100,
                ItemKind::Folder,
                ShareMode::None,
                None,
                None,
                vec![101, 102, 104, 105],
            ),
        );
        items.insert(
            101,
            mk(101, ItemKind::Folder, ShareMode::View, Some("!K1"), Some(100), vec![103]),
        );
        items.insert(
            102,
            mk(102, ItemKind::Word, ShareMode::View, Some("!K2"), Some(100), vec![]),
        );
        items.insert(
            103,
            mk(103, ItemKind::Pdf, ShareMode::View, Some("!K1"), Some(101), vec![]),
        );
        items.insert(
            104,
            mk(104, ItemKind::Media, ShareMode::View, None, Some(100), vec![]),
        );
        items.insert(
            105,
            mk(105, ItemKind::Excel, ShareMode::None, None, Some(100), vec![]),
        );
        let account = Account {
            cid: "AAAABBBBCCCCDDDD".to_string(),
            scheme: ShareScheme::PerAccountCapability,
            root_seq: 100,
            items,
            devices: vec!["pc".to_string()],
        };
        let store = CloudStore {
            accounts: BTreeMap::from([(account.cid.clone(), account.clone())]),
            av_blacklist: BTreeSet::new(),
            audit: Mutex::new(Vec::new()),
        };
        // Entry under K1: the K1 folder + its child + the unkeyed item.
        let entry = account.item_url(103).unwrap();
        let got = traverse_account(&store, &entry, ApiMode::Legacy).unwrap();
        let expected: BTreeSet<String> = [101u64, 103, 104]
            .iter()
            .map(|s| account.item_url(*s).unwrap())
            .collect();
        assert_eq!(got, expected, "K1 plus unkeyed items only");
        // Entry under K2: just the K2 item + unkeyed.
        let entry2 = account.item_url(102).unwrap();
        let got2 = traverse_account(&store, &entry2, ApiMode::Legacy).unwrap();
        let expected2: BTreeSet<String> = [102u64, 104]
            .iter()
            .map(|s| account.item_url(*s).unwrap())
            .collect();
        assert_eq!(got2, expected2);
        // Unkeyed entry: unkeyed shares only.
        let entry3 = account.item_url(104).unwrap();
        let got3 = traverse_account(&store, &entry3, ApiMode::Legacy).unwrap();
        let expected3: BTreeSet<String> =
            [104u64].iter().map(|s| account.item_url(*s).unwrap()).collect();
        assert_eq!(got3, expected3);
        // Root URL built from (cid, K1) works as an entry too.
        let root = render_root_url(&account.cid, Some("!K1"));
        assert_eq!(traverse_account(&store, &root, ApiMode::Legacy).unwrap(), expected);
        // Hardened: single file entry returns exactly that file.
        let hardened = traverse_account(&store, &entry2, ApiMode::Hardened).unwrap();
        let only_entry: BTreeSet<String> = [account.item_url(102).unwrap()].into_iter().collect();
        assert_eq!(hardened, only_entry);
        // Hardened folder entry exposes its subtree but not siblings.
        let hfolder = traverse_account(&store, &account.item_url(101).unwrap(), ApiMode::Hardened)
            .unwrap();
        let expected_subtree: BTreeSet<String> = [101u64, 103]
            .iter()
            .map(|s| account.item_url(*s).unwrap())
            .collect();
        assert_eq!(hfolder, expected_subtree);
        // Hardened root access reveals nothing.
        assert!(traverse_account(&store, &root, ApiMode::Hardened)
            .unwrap()
            .is_empty());
        // Errors: wrong key, unknown account, unshared item.
        let bad_key = render_root_url(&account.cid, Some("!WRONG"));
        assert_eq!(
            traverse_account(&store, &bad_key, ApiMode::Legacy).unwrap_err(),
            TraverseError::InvalidKey(account.cid.clone())
        );
        let ghost = render_root_url("0000000000000000", None);
        assert!(matches!(
            traverse_account(&store, &ghost, ApiMode::Legacy).unwrap_err(),
            TraverseError::UnknownAccount(_)
        ));
        let unshared = account.item_url(105).unwrap();
        assert!(matches!(
            traverse_account(&store, &unshared, ApiMode::Legacy).unwrap_err(),
            TraverseError::NotShared { .. }
        ));
        assert!(matches!(
            traverse_account(&store, "not a url", ApiMode::Legacy).unwrap_err(),
            TraverseError::BadUrl(_)
        ));
    }

    #[test]
    fn hardened_is_subset_of_legacy() {
        let store = populate(&small_spec(50), 33).unwrap();
        for account in store.accounts.values() {
            for item in account.items.values().filter(|i| i.is_shared()) {
                let url = account.item_url(item.seq).unwrap();
                let legacy = traverse_account(&store, &url, ApiMode::Legacy).unwrap();
                let hardened = traverse_account(&store, &url, ApiMode::Hardened).unwrap();
                assert!(
                    hardened.is_subset(&legacy),
                    "hardened ⊆ legacy violated for {url}"
                );
            }
        }
    }

    #[test]
    fn writable_detection_and_injection_agree() {
        let store = populate(&small_spec(200), 55).unwrap();
        let flagged = writable_accounts(&store);
        assert!(!flagged.is_empty(), "7% of 200 accounts should flag some");
        let payload = PayloadDescriptor {
            label: "sim-payload.docx".to_string(),
            kind: ItemKind::Word,
        };
        for account in store.accounts.values() {
            for folder in account
                .items
                .values()
                .filter(|i| i.kind.is_folder() && i.seq != account.root_seq && i.is_shared())
            {
                let url = account.item_url(folder.seq).unwrap();
                let page =
                    render_page(&store, &account.cid, Some(folder.seq), folder.authkey.as_deref())
                        .unwrap();
                let outcome = inject_file(&store, &url, &payload, VirtualInstant::ZERO);
                // Access monotonicity: injection succeeds exactly on
                // upload-marked folders.
                assert_eq!(outcome.is_ok(), page.upload_enabled, "folder {url}");
                assert_eq!(
                    outcome.is_ok(),
                    !find_writable(&[page]).is_empty(),
                    "marker and writable list agree"
                );
                if let Ok(audit) = outcome {
                    assert!(flagged.contains(&account.cid));
                    assert_eq!(audit.sync_targets, account.devices);
                }
            }
        }
    }

    #[test]
    fn view_only_and_unshared_folders_deny_writes() {
        let store = populate(&small_spec(100), 77).unwrap();
        let payload = PayloadDescriptor {
            label: "note.txt".to_string(),
            kind: ItemKind::Download,
        };
        let mut denied_view = 0;
        for account in store.accounts.values() {
            for folder in account.items.values().filter(|i| {
                i.kind.is_folder() && i.seq != account.root_seq && i.share == ShareMode::View
            }) {
                let url = account.item_url(folder.seq).unwrap();
                match inject_file(&store, &url, &payload, VirtualInstant::ZERO) {
                    Err(InjectError::ViewOnly { .. }) => denied_view += 1,
                    other => panic!("expected view-only denial, got {other:?}"),
                }
            }
        }
        assert!(denied_view > 0);
        assert!(store.audit_log().is_empty());
    }

    #[test]
    fn content_screening_blocks_exact_label_only() {
        let mut spec = small_spec(50);
        spec.edit_share_fraction = 1.0; // every account writable
        let store = populate(&spec, 88).unwrap();
        let account = store.accounts.values().next().unwrap();
        let folder = account
            .items
            .values()
            .find(|i| i.kind.is_folder() && i.share == ShareMode::Edit)
            .unwrap();
        let url = account.item_url(folder.seq).unwrap();
        let screened = PayloadDescriptor {
            label: "eicar-test-label".to_string(),
            kind: ItemKind::Download,
        };
        assert_eq!(
            inject_file(&store, &url, &screened, VirtualInstant::ZERO).unwrap_err(),
            InjectError::PayloadScreened("eicar-test-label".to_string())
        );
        // Trivially evaded by renaming.
        let renamed = PayloadDescriptor {
            label: "eicar-test-label.xz".to_string(),
            kind: ItemKind::Download,
        };
        assert!(inject_file(&store, &url, &renamed, VirtualInstant::ZERO).is_ok());
        assert_eq!(store.audit_log().len(), 1);
    }

    #[test]
    fn per_item_capability_accounts_leak_nothing_else() {
        let spec = StoragePopulationSpec {
            per_item_capability_fraction: 1.0,
            unkeyed_share_fraction: 0.0,
            accounts: 30,
            ..StoragePopulationSpec::default()
        };
        let store = populate(&spec, 99).unwrap();
        for account in store.accounts.values() {
            assert_eq!(account.scheme, ShareScheme::PerItemCapability);
            for item in account.items.values().filter(|i| i.is_shared()) {
                let url = account.item_url(item.seq).unwrap();
                let reachable = traverse_account(&store, &url, ApiMode::Legacy).unwrap();
                // Even legacy traversal under a per-item key reaches only
                // the entry's own subtree (each key covers one item).
                for r in &reachable {
                    let parsed = parse_url(r).unwrap();
                    assert_eq!(parsed.authkey, item.authkey, "{url} leaked {r}");
                }
            }
        }
    }

    #[test]
    fn snapshot_roundtrip() {
        let store = populate(&small_spec(20), 12).unwrap();
        let payload = PayloadDescriptor {
            label: "x.bin".to_string(),
            kind: ItemKind::Download,
        };
        for account in store.accounts.values() {
            for folder in account.items.values().filter(|i| i.share == ShareMode::Edit) {
                if folder.kind.is_folder() {
                    let url = account.item_url(folder.seq).unwrap();
                    let _ = inject_file(&store, &url, &payload, VirtualInstant::ZERO);
                }
            }
        }
        let json = serde_json::to_string(&store.to_snapshot()).unwrap();
        let restored = CloudStore::from_snapshot(serde_json::from_str(&json).unwrap());
        assert_eq!(restored.accounts, store.accounts);
        assert_eq!(restored.audit_log(), store.audit_log());
    }

    #[test]
    fn spec_validation() {
        let spec = StoragePopulationSpec {
            edit_share_fraction: 1.5,
            ..StoragePopulationSpec::default()
        };
        assert!(matches!(
            populate(&spec, 1).unwrap_err(),
            PopulateError::FractionOutOfRange { field: "edit_share_fraction", .. }
        ));
        let spec = StoragePopulationSpec {
            max_authkeys_per_account: 0,
            ..StoragePopulationSpec::default()
        };
        assert_eq!(populate(&spec, 1).unwrap_err(), PopulateError::ZeroKeys);
    }
}
