//! The simulated cloud-storage long-URL grammar.
//!
//! URLs follow the observed storage-service format: a fixed host, a
//! per-kind path, and query parameters whose presence depends on the item
//! kind. The full grammar (also documented in the README):
//!
//! | kind       | path             | cid | id | resid | app        | v | ithint | authkey  |
//! |------------|------------------|-----|----|-------|------------|---|--------|----------|
//! | word       | `/view`          | yes | -  | yes   | Word       | - | -      | optional |
//! | excel      | `/view`, `/edit` | yes | -  | yes   | Excel      | - | -      | optional |
//! | powerpoint | `/view`          | yes | -  | yes   | PowerPoint | - | -      | optional |
//! | onenote    | `/view`, `/edit` | yes | -  | yes   | OneNote    | - | -      | optional |
//! | pdf        | `/view`          | yes | -  | yes   | WordPdf    | - | -      | optional |
//! | survey     | `/survey`        | -   | -  | yes   | -          | - | -      | optional |
//! | media      | `/`              | yes | yes| -     | -          | 3 | -      | optional |
//! | download   | `/download.aspx` | yes | -  | yes   | -          | - | -      | optional |
//! | folder     | `/`              | yes | yes| -     | -          | - | folder | optional |
//!
//! The account root URL is `/?cid=...[&authkey=...]` with no item id.
//! `id` and `resid` values have the form `CID!sequence`, so a `cid` can
//! always be recovered from either. The `v` parameter is emitted as the
//! constant `3` — the only value ever observed for it.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub const STORAGE_HOST: &str = "https://onedrive.live.com";

/// Kinds of stored items, each with its own URL shape.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Word,
    Excel,
    PowerPoint,
    OneNote,
    Pdf,
    Survey,
    Media,
    Download,
    Folder,
}

impl ItemKind {
    pub const ALL: [ItemKind; 9] = [
        ItemKind::Word,
        ItemKind::Excel,
        ItemKind::PowerPoint,
        ItemKind::OneNote,
        ItemKind::Pdf,
        ItemKind::Survey,
        ItemKind::Media,
        ItemKind::Download,
        ItemKind::Folder,
    ];

    /// Value of the `app` query parameter, for kinds that carry one.
    pub fn app_param(self) -> Option<&'static str> {
        match self {
            ItemKind::Word => Some("Word"),
            ItemKind::Excel => Some("Excel"),
            ItemKind::PowerPoint => Some("PowerPoint"),
            ItemKind::OneNote => Some("OneNote"),
            ItemKind::Pdf => Some("WordPdf"),
            _ => None,
        }
    }

    fn from_app_param(app: &str) -> Option<Self> {
        match app {
            "Word" => Some(ItemKind::Word),
            "Excel" => Some(ItemKind::Excel),
            "PowerPoint" => Some(ItemKind::PowerPoint),
            "OneNote" => Some(ItemKind::OneNote),
            "WordPdf" => Some(ItemKind::Pdf),
            _ => None,
        }
    }

    /// A representative file extension, used for names and folder ithints.
    pub fn extension(self) -> &'static str {
        match self {
            ItemKind::Word => "docx",
            ItemKind::Excel => "xlsx",
            ItemKind::PowerPoint => "pptx",
            ItemKind::OneNote => "one",
            ItemKind::Pdf => "pdf",
            ItemKind::Survey => "survey",
            ItemKind::Media => "jpg",
            ItemKind::Download => "zip",
            ItemKind::Folder => "",
        }
    }

    pub fn is_folder(self) -> bool {
        self == ItemKind::Folder
    }
}

impl fmt::Display for ItemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ItemKind::Word => "word",
            ItemKind::Excel => "excel",
            ItemKind::PowerPoint => "powerpoint",
            ItemKind::OneNote => "onenote",
            ItemKind::Pdf => "pdf",
            ItemKind::Survey => "survey",
            ItemKind::Media => "media",
            ItemKind::Download => "download",
            ItemKind::Folder => "folder",
        };
        f.write_str(s)
    }
}

/// What a storage URL points at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrlKind {
    Item(ItemKind),
    AccountRoot,
}

/// Parameters extracted from a storage long URL.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedUrl {
    pub kind: UrlKind,
    /// Account id, recovered from `id`/`resid` when the `cid` parameter is
    /// absent.
    pub cid: String,
    /// Item sequence number, when the URL addresses a single item.
    pub seq: Option<u64>,
    pub authkey: Option<String>,
    /// Whether the `/edit` path variant was used.
    pub edit_path: bool,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UrlParseError {
    #[error("URL does not start with the storage host")]
    WrongHost,
    #[error("unrecognized path {0:?}")]
    UnknownPath(String),
    #[error("missing required parameter {0}")]
    MissingParam(&'static str),
    #[error("malformed item id {0:?} (expected CID!sequence)")]
    BadItemId(String),
    #[error("app parameter {0:?} is not a known application")]
    UnknownApp(String),
    #[error("cid {cid:?} disagrees with item id prefix {id_cid:?}")]
    CidMismatch { cid: String, id_cid: String },
}

/// Render an item URL. `seq`, `kind` and `share_edit` come from the item;
/// `authkey` is attached when the share is capability-keyed.
pub fn render_item_url(
    cid: &str,
    seq: u64,
    kind: ItemKind,
    ithint_ext: Option<&str>,
    share_edit: bool,
    authkey: Option<&str>,
) -> String {
    let cid_upper = cid.to_ascii_uppercase();
    let cid_lower = cid.to_ascii_lowercase();
    let item_id = format!("{cid_upper}!{seq}");
    let mut url = String::from(STORAGE_HOST);
    let mut params: Vec<(&str, String)> = Vec::new();
    match kind {
        ItemKind::Word | ItemKind::Excel | ItemKind::PowerPoint | ItemKind::OneNote
        | ItemKind::Pdf => {
            // Only Excel and OneNote expose an /edit path; Word, PowerPoint
            // and PDF stay on /view even when edit-shared.
            let editable_path = matches!(kind, ItemKind::Excel | ItemKind::OneNote);
            url.push_str(if share_edit && editable_path {
                "/edit"
            } else {
                "/view"
            });
            params.push(("cid", cid_lower));
            params.push(("resid", item_id));
            params.push(("app", kind.app_param().expect("office kinds").to_string()));
        }
        ItemKind::Survey => {
            url.push_str("/survey");
            params.push(("resid", item_id));
        }
        ItemKind::Media => {
            url.push('/');
            params.push(("cid", cid_lower));
            params.push(("id", item_id));
            params.push(("v", "3".to_string()));
        }
        ItemKind::Download => {
            url.push_str("/download.aspx");
            params.push(("cid", cid_lower));
            params.push(("resid", item_id));
        }
        ItemKind::Folder => {
            url.push('/');
            params.push(("cid", cid_lower));
            params.push(("id", item_id));
            let ithint = match ithint_ext {
                Some(ext) if !ext.is_empty() => format!("folder,{ext}"),
                _ => "folder".to_string(),
            };
            params.push(("ithint", ithint));
        }
    }
    if let Some(key) = authkey {
        params.push(("authkey", key.to_string()));
    }
    push_query(&mut url, &params);
    url
}

/// The account root URL constructed from a `(cid, authkey)` pair — the
/// entry point for account traversal.
pub fn render_root_url(cid: &str, authkey: Option<&str>) -> String {
    let mut url = format!("{STORAGE_HOST}/");
    let mut params: Vec<(&str, String)> = vec![("cid", cid.to_ascii_lowercase())];
    if let Some(key) = authkey {
        params.push(("authkey", key.to_string()));
    }
    push_query(&mut url, &params);
    url
}

fn push_query(url: &mut String, params: &[(&str, String)]) {
    for (i, (name, value)) in params.iter().enumerate() {
        url.push(if i == 0 { '?' } else { '&' });
        url.push_str(name);
        url.push('=');
        url.push_str(value);
    }
}

/// Parse a storage long URL back into its parameters.
pub fn parse_url(url: &str) -> Result<ParsedUrl, UrlParseError> {
    let rest = url.strip_prefix(STORAGE_HOST).ok_or(UrlParseError::WrongHost)?;
    let (path, query) = match rest.split_once('?') {
        Some((p, q)) => (p, q),
        None => (rest, ""),
    };
    let mut params: BTreeMap<&str, &str> = BTreeMap::new();
    for pair in query.split('&').filter(|p| !p.is_empty()) {
        let (name, value) = pair.split_once('=').unwrap_or((pair, ""));
        params.insert(name, value);
    }
    let authkey = params.get("authkey").map(|s| s.to_string());
    let id_param = params.get("id").or_else(|| params.get("resid")).copied();
    let split_item = |raw: &str| -> Result<(String, u64), UrlParseError> {
        let (cid, seq) = raw
            .split_once('!')
            .ok_or_else(|| UrlParseError::BadItemId(raw.to_string()))?;
        let seq: u64 = seq
            .parse()
            .map_err(|_| UrlParseError::BadItemId(raw.to_string()))?;
        if cid.is_empty() {
            return Err(UrlParseError::BadItemId(raw.to_string()));
        }
        Ok((cid.to_ascii_uppercase(), seq))
    };
    // cid is taken from the explicit parameter or recovered from id/resid.
    let explicit_cid = params.get("cid").map(|c| c.to_ascii_uppercase());
    let item = id_param.map(split_item).transpose()?;
    if let (Some(cid), Some((id_cid, _))) = (&explicit_cid, &item) {
        if cid != id_cid {
            return Err(UrlParseError::CidMismatch {
                cid: cid.clone(),
                id_cid: id_cid.clone(),
            });
        }
    }
    let edit_path = path == "/edit";
    match path {
        "/view" | "/edit" => {
            let app = params.get("app").ok_or(UrlParseError::MissingParam("app"))?;
            let kind = ItemKind::from_app_param(app)
                .ok_or_else(|| UrlParseError::UnknownApp(app.to_string()))?;
            let (cid, seq) = item.ok_or(UrlParseError::MissingParam("resid"))?;
            Ok(ParsedUrl {
                kind: UrlKind::Item(kind),
                cid,
                seq: Some(seq),
                authkey,
                edit_path,
            })
        }
        "/survey" => {
            let (cid, seq) = item.ok_or(UrlParseError::MissingParam("resid"))?;
            Ok(ParsedUrl {
                kind: UrlKind::Item(ItemKind::Survey),
                cid,
                seq: Some(seq),
                authkey,
                edit_path: false,
            })
        }
        "/download.aspx" => {
            let (cid, seq) = item.ok_or(UrlParseError::MissingParam("resid"))?;
            Ok(ParsedUrl {
                kind: UrlKind::Item(ItemKind::Download),
                cid,
                seq: Some(seq),
                authkey,
                edit_path: false,
            })
        }
        "/" | "" => {
            if let Some((cid, seq)) = item {
                let kind = if params
                    .get("ithint")
                    .map(|h| h.starts_with("folder"))
                    .unwrap_or(false)
                {
                    ItemKind::Folder
                } else if params.contains_key("v") {
                    ItemKind::Media
                } else {
                    return Err(UrlParseError::MissingParam("ithint or v"));
                };
                Ok(ParsedUrl {
                    kind: UrlKind::Item(kind),
                    cid,
                    seq: Some(seq),
                    authkey,
                    edit_path: false,
                })
            } else {
                let cid = explicit_cid.ok_or(UrlParseError::MissingParam("cid"))?;
                Ok(ParsedUrl {
                    kind: UrlKind::AccountRoot,
                    cid,
                    seq: None,
                    authkey,
                    edit_path: false,
                })
            }
        }
        other => Err(UrlParseError::UnknownPath(other.to_string())),
    }
}

/// Whether `url` is a storage long URL at all.
pub fn is_storage_url(url: &str) -> bool {
    url.starts_with(STORAGE_HOST)
}
