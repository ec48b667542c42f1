//! Capability-URL account traversal: from one discovered item URL to
//! everything shared under the same key — and how the hardened API stops
//! it.
//!
//! ```bash
//! cargo run --example storage_traversal
//! ```

use shortscan::cloudstore::{self, traverse_account, ApiMode, ShareMode, StoragePopulationSpec};
use shortscan::cloudurl::parse_url;

fn main() {
    let spec = StoragePopulationSpec {
        accounts: 50,
        files_mu: 2.5,
        files_sigma: 1.0,
        ..StoragePopulationSpec::default()
    };
    let store = cloudstore::populate(&spec, 2024).unwrap();
    println!("populated {} synthetic storage accounts", store.account_count());

    // Pick an account with a keyed multi-item share to demonstrate on.
    let (account, entry) = store
        .accounts
        .values()
        .find_map(|account| {
            account
                .items
                .values()
                .find(|i| {
                    i.share != ShareMode::None && i.authkey.is_some() && !i.kind.is_folder()
                })
                .filter(|entry| {
                    account
                        .items
                        .values()
                        .filter(|i| i.authkey == entry.authkey)
                        .count()
                        > 2
                })
                .map(|entry| (account, entry))
        })
        .expect("population has a keyed share");

    let entry_url = account.item_url(entry.seq).unwrap();
    println!("\na scan discovered one shared file:\n  {entry_url}");

    let parsed = parse_url(&entry_url).unwrap();
    println!(
        "\nparsed: cid = {}, item = {}!{}, authkey = {}",
        parsed.cid,
        parsed.cid,
        parsed.seq.unwrap(),
        parsed.authkey.as_deref().unwrap_or("-")
    );
    println!(
        "the account root URL is predictable from (cid, authkey):\n  {}",
        shortscan::cloudurl::render_root_url(&parsed.cid, parsed.authkey.as_deref())
    );

    let legacy = traverse_account(&store, &entry_url, ApiMode::Legacy).unwrap();
    println!(
        "\nlegacy API: listing the root page and following folder links with\nthe same cid reaches {} items:",
        legacy.len()
    );
    for url in legacy.iter().take(6) {
        println!("  {url}");
    }
    if legacy.len() > 6 {
        println!("  ... and {} more", legacy.len() - 6);
    }

    let hardened = traverse_account(&store, &entry_url, ApiMode::Hardened).unwrap();
    println!(
        "\nhardened API: the root page reveals nothing; the same entry now \
         reaches {} item(s):",
        hardened.len()
    );
    for url in &hardened {
        println!("  {url}");
    }
    println!(
        "\nexposure ratio for this entry: {}x",
        legacy.len() as f64 / hardened.len().max(1) as f64
    );
}
