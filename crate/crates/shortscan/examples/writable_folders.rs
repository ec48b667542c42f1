//! Unlocked-folder discovery via the page upload marker, and the
//! simulated write audit (payloads are labels, never content).
//!
//! ```bash
//! cargo run --example writable_folders
//! ```

use shortscan::clock::VirtualInstant;
use shortscan::cloudstore::{
    self, find_writable, inject_file, render_page, writable_accounts, PayloadDescriptor,
    ShareMode, StoragePopulationSpec,
};
use shortscan::cloudurl::ItemKind;

fn main() {
    let spec = StoragePopulationSpec {
        accounts: 2000,
        edit_share_fraction: 0.07,
        ..StoragePopulationSpec::default()
    };
    let store = cloudstore::populate(&spec, 4242).unwrap();

    // Sweep the population through the page renderer: a folder page with
    // the upload marker is writable by anyone who has its URL.
    let writable = writable_accounts(&store);
    println!(
        "{} of {} accounts ({:.2}%) expose at least one unlocked folder (configured 7%)",
        writable.len(),
        store.account_count(),
        writable.len() as f64 / store.account_count() as f64 * 100.0
    );

    // Walk one writable account and actually inject.
    let cid = writable.iter().next().expect("some account is writable");
    let account = store.account(cid).unwrap();
    let payload = PayloadDescriptor {
        label: "quarterly-report.docm".to_string(),
        kind: ItemKind::Word,
    };
    println!("\nprobing account {cid}:");
    let mut pages = Vec::new();
    for folder in account
        .items
        .values()
        .filter(|i| i.kind.is_folder() && i.seq != account.root_seq && i.share != ShareMode::None)
    {
        let page = render_page(&store, cid, Some(folder.seq), folder.authkey.as_deref()).unwrap();
        println!(
            "  folder {:>4}: upload marker {}",
            folder.seq,
            if page.upload_enabled { "PRESENT" } else { "absent" }
        );
        pages.push(page);
    }
    for url in find_writable(&pages) {
        match inject_file(&store, &url, &payload, VirtualInstant::ZERO) {
            Ok(audit) => println!(
                "  injected {:?} into folder {} -> syncs to {:?}",
                audit.payload_label, audit.folder_seq, audit.sync_targets
            ),
            Err(err) => println!("  injection refused: {err}"),
        }
    }

    // The content screening hook only matches exact labels, so renaming
    // evades it.
    let screened = PayloadDescriptor {
        label: "eicar-test-label".to_string(),
        kind: ItemKind::Download,
    };
    let renamed = PayloadDescriptor {
        label: "eicar-test-label.xz".to_string(),
        kind: ItemKind::Download,
    };
    if let Some(url) = find_writable(&pages).first() {
        println!("\ncontent screening:");
        println!(
            "  {:?}: {:?}",
            screened.label,
            inject_file(&store, url, &screened, VirtualInstant::ZERO).map(|_| "written")
        );
        println!(
            "  {:?}: {:?}",
            renamed.label,
            inject_file(&store, url, &renamed, VirtualInstant::ZERO).map(|_| "written")
        );
    }
    println!("\naudit log holds {} simulated writes", store.audit_log().len());
}
