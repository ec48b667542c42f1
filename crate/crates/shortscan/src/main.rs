//! Thin command-line wrapper over the library's experiment functions.
//!
//! Exit codes: 0 success (and all report rows pass), 1 runtime error,
//! 2 usage error, 3 headline-comparison failure.

use clap::{Args, Parser, Subcommand};
use shortscan::cloudstore::ApiMode;
use shortscan::config::ExperimentConfig;
use shortscan::experiment::{
    cmd_estimate, cmd_inject_audit, cmd_maps_analyze, cmd_mitigate, cmd_populate, cmd_scan,
    cmd_traverse, standalone_estimate, ExperimentError, SCAN_REPORT_FILE,
};
use shortscan::numeric::fmt_sig;
use shortscan::report::cmd_report;
use shortscan::space::TokenSpace;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "shortscan",
    about = "Desk-scale lab for short-URL token spaces: simulated shorteners, scanners, and mitigations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for state snapshots and reports.
    #[arg(long, default_value = "out", global = true)]
    out_dir: PathBuf,
    /// Override the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the synthetic services and persist their state.
    Populate {
        #[command(flatten)]
        common: CommonArgs,
        /// Override shortener.target_density.
        #[arg(long)]
        target_density: Option<f64>,
        /// Override storage.accounts.
        #[arg(long)]
        storage_accounts: Option<usize>,
        /// Override storage.edit_share_fraction.
        #[arg(long)]
        edit_share_fraction: Option<f64>,
        /// Override maps.records.
        #[arg(long)]
        maps_records: Option<usize>,
        /// Override maps.directions_fraction.
        #[arg(long)]
        directions_fraction: Option<f64>,
    },
    /// Run the configured token scan against the populated state.
    Scan {
        #[command(flatten)]
        common: CommonArgs,
        /// Override scan.sample_size.
        #[arg(long)]
        sample_size: Option<u64>,
        /// Override scan.workers.
        #[arg(long)]
        workers: Option<usize>,
        /// Override scan.max_queries.
        #[arg(long)]
        max_queries: Option<u64>,
        /// Scan every token of the target space instead of sampling.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Density estimate and category extrapolations.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Probes sent (standalone mode, with --hits and --length).
        #[arg(long, requires_all = ["hits", "length"])]
        sampled: Option<u64>,
        /// Mapped tokens found (standalone mode).
        #[arg(long)]
        hits: Option<u64>,
        /// Token length of the sampled space (standalone mode).
        #[arg(long)]
        length: Option<usize>,
    },
    /// Traverse accounts behind discovered storage links.
    Traverse {
        #[command(flatten)]
        common: CommonArgs,
        /// API mode: legacy (root URL lists the account) or hardened.
        #[arg(long, value_parser = parse_api_mode, default_value = "legacy")]
        api_mode: ApiMode,
    },
    /// Probe unlocked folders and record simulated writes.
    InjectAudit {
        #[command(flatten)]
        common: CommonArgs,
        /// Label for the simulated payload (never real content).
        #[arg(long, default_value = "sim-payload.bin")]
        payload_label: String,
    },
    /// Endpoint flows, identity joins, and hub extraction.
    MapsAnalyze {
        #[command(flatten)]
        common: CommonArgs,
        /// Focus address or business for the hub report.
        #[arg(long)]
        focus: Option<String>,
    },
    /// Mitigation effectiveness: token-length math plus hardened scans.
    Mitigate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Headline-comparison table; exit 3 when any row fails.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Specific report files (default: standard names under out dir).
        files: Vec<PathBuf>,
    },
}

fn parse_api_mode(s: &str) -> Result<ApiMode, String> {
    match s {
        "legacy" => Ok(ApiMode::Legacy),
        "hardened" => Ok(ApiMode::Hardened),
        other => Err(format!("unknown api mode {other:?} (use legacy|hardened)")),
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig, ExperimentError> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path).map_err(ExperimentError::Config)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run() -> Result<ExitCode, ExperimentError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Populate {
            common,
            target_density,
            storage_accounts,
            edit_share_fraction,
            maps_records,
            directions_fraction,
        } => {
            let mut config = load_config(&common)?;
            if let Some(v) = target_density {
                config.shortener.target_density = v;
            }
            if let Some(v) = storage_accounts {
                config.storage.population.accounts = v;
            }
            if let Some(v) = edit_share_fraction {
                config.storage.population.edit_share_fraction = v;
            }
            if let Some(v) = maps_records {
                config.maps.records = v;
            }
            if let Some(v) = directions_fraction {
                config.maps.directions_fraction = v;
            }
            let summary = cmd_populate(&config, &common.out_dir)?;
            println!(
                "populated {} links over a {}-token family (density {:.6})",
                summary.links_issued, summary.family_cardinality, summary.density
            );
            println!(
                "  storage: {} accounts, {} share links ({} dead), {:.2}% with an unlocked folder",
                summary.storage_accounts,
                summary.storage_links,
                summary.storage_dead_links,
                summary.writable_fraction * 100.0
            );
            println!(
                "  maps: {} records ({:.2}% directions), filler links: {}",
                summary.maps_records,
                summary.maps_directions_fraction * 100.0,
                summary.filler_links
            );
            println!("state written under {}", common.out_dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Scan {
            common,
            sample_size,
            workers,
            max_queries,
            exhaustive,
        } => {
            let mut config = load_config(&common)?;
            if let Some(v) = sample_size {
                config.scan.sample_size = v;
            }
            if let Some(v) = workers {
                config.scan.workers = v;
            }
            if let Some(v) = max_queries {
                config.scan.max_queries = v;
            }
            if exhaustive {
                config.scan.exhaustive = true;
            }
            let report = cmd_scan(&config, &common.out_dir)?;
            println!(
                "scanned {} tokens with {} workers in {:.1} virtual seconds: {} hits, {} misses",
                report.tokens_tried,
                report.workers,
                report.elapsed.as_secs_f64(),
                report.hits,
                report.misses
            );
            if let Some(density) = &report.density {
                println!(
                    "density estimate {:.4} [{:.4}, {:.4}], extrapolating to {} mappings",
                    density.point, density.ci_low, density.ci_high, density.extrapolated_total
                );
            }
            for (label, count) in report.breakdown.counts() {
                println!("  {label}: {count}");
            }
            if !report.complete {
                println!("note: scan incomplete (budget, wall time, or challenges)");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Estimate {
            common,
            sampled,
            hits,
            length,
        } => {
            if let (Some(sampled), Some(hits), Some(length)) = (sampled, hits, length) {
                let space = TokenSpace::base62(length);
                let estimate = standalone_estimate(sampled, hits, &space)?;
                println!(
                    "point {:.4} [{:.4}, {:.4}], extrapolated {} of {} tokens",
                    estimate.point,
                    estimate.ci_low,
                    estimate.ci_high,
                    estimate.extrapolated_total,
                    estimate.space_cardinality
                );
                return Ok(ExitCode::SUCCESS);
            }
            let config = load_config(&common)?;
            config.validate().map_err(ExperimentError::Config)?;
            let report_path = common.out_dir.join(SCAN_REPORT_FILE);
            if !report_path.exists() {
                return Err(ExperimentError::MissingState(report_path));
            }
            let report: shortscan::scanner::ScanReport = serde_json::from_reader(
                std::io::BufReader::new(std::fs::File::open(&report_path)?),
            )
            .map_err(|e| ExperimentError::Corrupt {
                path: report_path,
                message: e.to_string(),
            })?;
            let output = cmd_estimate(&report, &common.out_dir)?;
            println!(
                "density {:.4} [{:.4}, {:.4}] from {} samples",
                output.density.point,
                output.density.ci_low,
                output.density.ci_high,
                output.density.sampled
            );
            for category in &output.categories {
                println!(
                    "  {}: {} in sample ({:.5}%), extrapolating to {}",
                    category.label,
                    category.count,
                    category.fraction_of_sample * 100.0,
                    category.extrapolated_count
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Traverse { common, api_mode } => {
            let config = load_config(&common)?;
            let report = cmd_traverse(&config, &common.out_dir, api_mode)?;
            println!(
                "traversed {} of {} entries ({} dead): {} items reachable (mean {:.1}/entry)",
                report.entries_traversed,
                report.entries_attempted,
                report.dead_entries,
                report.total_reachable,
                report.mean_reachable_per_entry
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::InjectAudit {
            common,
            payload_label,
        } => {
            let config = load_config(&common)?;
            let summary = cmd_inject_audit(&config, &common.out_dir, &payload_label)?;
            println!(
                "probed {} shared folders across {} accounts: {} injections, {} view-only denials, {} screened",
                summary.folders_probed,
                summary.accounts,
                summary.injections,
                summary.denied_view_only,
                summary.screened
            );
            println!(
                "writable accounts: {} ({:.2}%)",
                summary.writable_accounts,
                summary.writable_fraction * 100.0
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::MapsAnalyze { common, focus } => {
            let config = load_config(&common)?;
            let analysis = cmd_maps_analyze(&config, &common.out_dir, focus.as_deref())?;
            println!(
                "{} records: {} directions ({:.2}%), {} locations",
                analysis.records,
                analysis.directions,
                analysis.directions_fraction * 100.0,
                analysis.locations
            );
            println!(
                "identified {} of {} residential endpoints via directory join",
                analysis.identified_endpoints, analysis.residential_endpoints
            );
            if let Some(hub) = &analysis.hub {
                println!(
                    "hub {:?}: {} records across {} spokes",
                    hub.focus,
                    hub.record_count,
                    hub.spokes.len()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Mitigate { common } => {
            let config = load_config(&common)?;
            let report = cmd_mitigate(&config, &common.out_dir)?;
            println!(
                "queries/valid: {} at 42% in 6 chars; {} with {}-char tokens",
                fmt_sig(report.qpv_6char_42pct, 3),
                fmt_sig(report.qpv_long_tokens, 4),
                report.long_token_length
            );
            for outcome in &report.defense_outcomes {
                println!(
                    "  {}: {} tried, {} hits, {} challenges",
                    outcome.name, outcome.tokens_tried, outcome.hits, outcome.captcha_events
                );
            }
            let flagged: Vec<&str> = report
                .internal_shortener
                .flagged()
                .map(|c| c.client.as_str())
                .collect();
            println!("internal shortener flagged clients: {flagged:?}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { common, files } => {
            let config = load_config(&common)?;
            let report = cmd_report(&config, &common.out_dir, &files)?;
            print!("{}", report.render_text());
            if report.all_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
