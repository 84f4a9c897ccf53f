//! fwdcheck: forwarding-table verification from the command line.
//!
//! Reads network documents, computes header classes, runs centralized and
//! simulated-local verification, maintains classes under rule edits, and
//! cross-checks everything against brute-force enumeration at small header
//! lengths. JSON reports go to stdout (or `-o`), human summaries to stderr.
//!
//! Exit codes: 0 all checks pass, 1 verification failure (witnesses in the
//! report), 2 input or usage error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use fwdcheck_core::algebra::WeakCompletion;
use fwdcheck_core::distributed::{
    check_more_specific, check_no_loop_more_specific, generate_proof_labels,
    local_check_no_blackhole, verify_proof_labels, DistributedError,
};
use fwdcheck_core::doc::{
    task_report_doc, to_json_pretty, AtomReportDocument, EditDoc, EditScriptDocument,
    LabelingDocument, LocalCheckDocument, OracleComparisonDocument, TraceDocument,
    UpdateReportDocument, VerdictDoc, VerifyDocument, DOC_VERSION,
};
use fwdcheck_core::network::{
    Action, ClassAnalysis, Fate, ForwardingRule, NetworkInstance, NodeId, UpdatableNetwork,
};
use fwdcheck_core::oracle::{self, gen};
use fwdcheck_core::HeaderSet;

const THREADS_ENV: &str = "FWDCHECK_THREADS";

#[derive(Parser)]
#[command(name = "fwdcheck", version, about = "Forwarding-table verification through representative header sets")]
struct Cli {
    /// Worker threads for per-class work (default: $FWDCHECK_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the report document to this file instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the header classes (atoms) of the network's rule collection.
    Classes { network: PathBuf },

    /// Run verification tasks; any failure exits 1 with witnesses.
    Verify {
        network: PathBuf,
        /// Comma-separated: loops, blackholes, reach:FROM:TO, consistency:A:B.
        #[arg(long, value_delimiter = ',', default_values_t = vec!["loops".to_owned(), "blackholes".to_owned()])]
        checks: Vec<String>,
        /// Drop fates must also match by location in consistency checks.
        #[arg(long)]
        strict_fate: bool,
    },

    /// Apply rule edits incrementally and print the updated atom report.
    Update {
        network: PathBuf,
        /// JSON edit script; omit when generating one with --random.
        edits: Option<PathBuf>,
        /// Generate this many random edits instead of reading a script.
        #[arg(long, conflicts_with = "edits")]
        random: Option<usize>,
        /// Seed for --random.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cross-check the incremental state against a fresh build after
        /// every edit.
        #[arg(long)]
        verify_against_rebuild: bool,
    },

    /// Simulated distributed checks (each node sees only its neighborhood).
    LocalCheck {
        network: PathBuf,
        #[arg(long, value_enum)]
        which: WhichLocal,
    },

    /// Generate or verify NO-LOOP proof labels.
    Label {
        network: PathBuf,
        #[command(subcommand)]
        action: LabelCommand,
    },

    /// Compare engine verdicts and classes against brute-force enumeration.
    Oracle {
        network: PathBuf,
        /// Strict drop-location fate equality for the consistency sweep.
        #[arg(long)]
        strict_fate: bool,
    },

    /// Trace one concrete header from a node (per-header simulation).
    Trace {
        network: PathBuf,
        node: String,
        /// Field constraints pinning a single header, e.g. dst=0110,port=3.
        header: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichLocal {
    Blackholes,
    MoreSpecific,
    LoopsMoreSpecific,
}

#[derive(Subcommand)]
enum LabelCommand {
    /// Compute honest labels; fails with the loop witness on looping nets.
    Gen,
    /// Verify a labeling file node-locally; rejection exits 1.
    Verify { labels: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(&cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::from(0)
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn init_threads(flag: Option<usize>) {
    let count = flag.or_else(|| {
        std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok())
    });
    if let Some(count) = count {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(count).build_global();
    }
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Classes { network } => cmd_classes(cli, network),
        Command::Verify { network, checks, strict_fate } => {
            cmd_verify(cli, network, checks, *strict_fate)
        }
        Command::Update { network, edits, random, seed, verify_against_rebuild } => {
            cmd_update(cli, network, edits.as_deref(), *random, *seed, *verify_against_rebuild)
        }
        Command::LocalCheck { network, which } => cmd_local_check(cli, network, *which),
        Command::Label { network, action } => cmd_label(cli, network, action),
        Command::Oracle { network, strict_fate } => cmd_oracle(cli, network, *strict_fate),
        Command::Trace { network, node, header } => cmd_trace(cli, network, node, header),
    }
}

fn load_network(path: &std::path::Path) -> Result<NetworkInstance> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    fwdcheck_core::doc::load_network(&text)
        .with_context(|| format!("parsing {}", path.display()))
}

fn emit(cli: &Cli, document: &impl serde::Serialize) -> Result<()> {
    let json = to_json_pretty(document);
    match &cli.output {
        Some(path) => fs::write(path, json + "\n")
            .with_context(|| format!("writing {}", path.display()))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_classes(cli: &Cli, network: &Path) -> Result<bool> {
    let net = load_network(network)?;
    let completion = WeakCompletion::build(&net.rule_collection());
    let report = completion.representatives();
    eprintln!(
        "{} atoms over {} distinct rules ({} table entries)",
        report.atoms.len(),
        completion.rule_count(),
        net.total_rule_count()
    );
    emit(cli, &AtomReportDocument::new(&net, &report))?;
    Ok(true)
}

enum CheckSpec {
    Loops,
    Blackholes,
    Reach(NodeId, NodeId),
    Consistency(NodeId, NodeId),
}

fn parse_checks(net: &NetworkInstance, checks: &[String]) -> Result<Vec<CheckSpec>> {
    let node = |name: &str| -> Result<NodeId> {
        net.node_by_name(name)
            .ok_or_else(|| anyhow!("unknown node {name:?} in --checks"))
    };
    checks
        .iter()
        .map(|check| {
            let parts: Vec<&str> = check.split(':').collect();
            match parts.as_slice() {
                ["loops"] => Ok(CheckSpec::Loops),
                ["blackholes"] => Ok(CheckSpec::Blackholes),
                ["reach", from, to] => Ok(CheckSpec::Reach(node(from)?, node(to)?)),
                ["consistency", a, b] => Ok(CheckSpec::Consistency(node(a)?, node(b)?)),
                _ => Err(anyhow!(
                    "unknown check {check:?} (expected loops, blackholes, reach:FROM:TO \
                     or consistency:A:B)"
                )),
            }
        })
        .collect()
}

fn cmd_verify(cli: &Cli, network: &Path, checks: &[String], strict_fate: bool) -> Result<bool> {
    let net = load_network(network)?;
    let specs = parse_checks(&net, checks)?;
    let analysis = ClassAnalysis::new(&net);
    let mut reports = Vec::new();
    for spec in &specs {
        let report = match spec {
            CheckSpec::Loops => analysis.no_loop(),
            CheckSpec::Blackholes => analysis.no_blackhole(),
            CheckSpec::Reach(u, v) => analysis.reachability(*u, *v),
            CheckSpec::Consistency(u, v) => analysis.consistency(*u, *v, strict_fate),
        };
        reports.push(report);
    }
    let all_passed = reports.iter().all(|r| r.passed());
    for report in &reports {
        let label = match &report.task {
            fwdcheck_core::network::Task::NoLoop => "no-loop".to_owned(),
            fwdcheck_core::network::Task::NoBlackhole => "no-blackhole".to_owned(),
            fwdcheck_core::network::Task::Reachability(u, v) => {
                format!("reachability {} -> {}", net.node_name(*u), net.node_name(*v))
            }
            fwdcheck_core::network::Task::Consistency(u, v) => {
                format!("consistency {} / {}", net.node_name(*u), net.node_name(*v))
            }
        };
        eprintln!(
            "{label}: {} ({} witnesses)",
            if report.passed() { "pass" } else { "FAIL" },
            report.witnesses.len()
        );
    }
    let doc = VerifyDocument {
        version: DOC_VERSION,
        verdict: if all_passed { VerdictDoc::Pass } else { VerdictDoc::Fail },
        checks: reports.iter().map(|r| task_report_doc(&net, r)).collect(),
    };
    emit(cli, &doc)?;
    Ok(all_passed)
}

fn parse_constraint_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for part in text.split(',') {
        let (field, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("bad field constraint {part:?} (expected name=value)"))?;
        map.insert(field.trim().to_owned(), value.trim().to_owned());
    }
    Ok(map)
}

fn action_from_doc(net: &NetworkInstance, action: &fwdcheck_core::doc::ActionDoc) -> Result<Action> {
    Ok(match action {
        fwdcheck_core::doc::ActionDoc::Forward(target) => Action::Forward(
            net.node_by_name(target)
                .ok_or_else(|| anyhow!("unknown forward target {target:?}"))?,
        ),
        fwdcheck_core::doc::ActionDoc::Drop => Action::Drop,
        fwdcheck_core::doc::ActionDoc::Deliver => Action::Deliver,
    })
}

fn edit_docs_from_script(script: &[gen::RuleEdit], net: &NetworkInstance) -> Vec<EditDoc> {
    script
        .iter()
        .map(|edit| match edit {
            gen::RuleEdit::Insert { node, index, rule } => EditDoc::Insert {
                node: net.node_name(*node).to_owned(),
                index: *index,
                match_map: rule.match_set.constraint_map(),
                action: match rule.action {
                    Action::Forward(t) => {
                        fwdcheck_core::doc::ActionDoc::Forward(net.node_name(t).to_owned())
                    }
                    Action::Drop => fwdcheck_core::doc::ActionDoc::Drop,
                    Action::Deliver => fwdcheck_core::doc::ActionDoc::Deliver,
                },
            },
            gen::RuleEdit::Delete { node, match_set } => EditDoc::Delete {
                node: net.node_name(*node).to_owned(),
                match_map: match_set.constraint_map(),
            },
        })
        .collect()
}

fn cmd_update(
    cli: &Cli,
    network: &Path,
    edits: Option<&std::path::Path>,
    random: Option<usize>,
    seed: u64,
    verify_against_rebuild: bool,
) -> Result<bool> {
    let net = load_network(network)?;
    let edit_docs: Vec<EditDoc> = match (edits, random) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let script: EditScriptDocument = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            if script.version != DOC_VERSION {
                return Err(anyhow!("unsupported edit script version {}", script.version));
            }
            script.edits
        }
        (None, Some(count)) => {
            let mut rng = gen::rng(seed);
            let script = gen::random_edit_script(&mut rng, &net, count, 0.5);
            edit_docs_from_script(&script, &net)
        }
        (None, None) => {
            return Err(anyhow!("provide an edit script file or --random N"))
        }
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };

    let layout = Arc::clone(net.layout());
    let mut updatable = UpdatableNetwork::new(net);
    let mut consistent = verify_against_rebuild.then_some(true);
    for (i, edit) in edit_docs.iter().enumerate() {
        let context = || format!("edit {i}");
        match edit {
            EditDoc::Insert { node, index, match_map, action } => {
                let node = updatable
                    .network()
                    .node_by_name(node)
                    .ok_or_else(|| anyhow!("{}: unknown node {node:?}", context()))?;
                let match_set = HeaderSet::parse(
                    &layout,
                    match_map.iter().map(|(k, v)| (k.as_str(), v.as_str())),
                )
                .map_err(|e| anyhow!("{}: {e}", context()))?;
                let action = action_from_doc(updatable.network(), action)?;
                updatable
                    .insert_rule(node, *index, ForwardingRule { match_set, action })
                    .map_err(|e| anyhow!("{}: {e}", context()))?;
            }
            EditDoc::Delete { node, match_map } => {
                let node = updatable
                    .network()
                    .node_by_name(node)
                    .ok_or_else(|| anyhow!("{}: unknown node {node:?}", context()))?;
                let match_set = HeaderSet::parse(
                    &layout,
                    match_map.iter().map(|(k, v)| (k.as_str(), v.as_str())),
                )
                .map_err(|e| anyhow!("{}: {e}", context()))?;
                updatable
                    .delete_rule(node, &match_set)
                    .map_err(|e| anyhow!("{}: {e}", context()))?;
            }
        }
        if verify_against_rebuild {
            let rebuilt = WeakCompletion::build(&updatable.network().rule_collection());
            if !updatable.completion().same_state(&rebuilt) {
                consistent = Some(false);
            }
        }
    }

    let report = updatable.completion().representatives();
    match consistent {
        Some(true) => eprintln!("applied {} edits, rebuild cross-check: consistent", edit_docs.len()),
        Some(false) => eprintln!("applied {} edits, rebuild cross-check: INCONSISTENT", edit_docs.len()),
        None => eprintln!("applied {} edits", edit_docs.len()),
    }
    let doc = UpdateReportDocument {
        version: DOC_VERSION,
        applied: edit_docs.len(),
        rebuild_consistent: consistent,
        edits: edit_docs,
        atoms: AtomReportDocument::new(updatable.network(), &report),
    };
    emit(cli, &doc)?;
    Ok(consistent != Some(false))
}

fn cmd_local_check(cli: &Cli, network: &Path, which: WhichLocal) -> Result<bool> {
    let net = load_network(network)?;
    let report = match which {
        WhichLocal::Blackholes => local_check_no_blackhole(&net),
        WhichLocal::MoreSpecific => check_more_specific(&net),
        WhichLocal::LoopsMoreSpecific => match check_no_loop_more_specific(&net) {
            Ok(report) => report,
            Err(DistributedError::PreconditionViolated(precondition)) => {
                // Report the violated precondition distinctly from a plain
                // verification failure.
                let doc = LocalCheckDocument::new(&net, &precondition);
                emit(cli, &doc)?;
                return Err(anyhow!(
                    "MORE-SPECIFIC does not hold ({} findings); \
                     loops-more-specific is not applicable",
                    precondition.findings.len()
                ));
            }
            Err(other) => return Err(anyhow!(other)),
        },
    };
    if report.component_count > 1 {
        eprintln!(
            "warning: the link graph has {} components; local arguments apply per component",
            report.component_count
        );
    }
    eprintln!(
        "{}: {} ({} findings)",
        report.check,
        if report.passed() { "pass" } else { "FAIL" },
        report.findings.len()
    );
    let passed = report.passed();
    emit(cli, &LocalCheckDocument::new(&net, &report))?;
    Ok(passed)
}

fn cmd_label(cli: &Cli, network: &Path, action: &LabelCommand) -> Result<bool> {
    let net = load_network(network)?;
    match action {
        LabelCommand::Gen => match generate_proof_labels(&net) {
            Ok(labeling) => {
                eprintln!(
                    "generated labels: {} members per node",
                    labeling.node_label(NodeId(0)).len()
                );
                emit(cli, &LabelingDocument::new(&net, &labeling))?;
                Ok(true)
            }
            Err(DistributedError::LoopExists(report)) => {
                eprintln!("cannot label a looping network");
                emit(cli, &task_report_doc(&net, &report))?;
                Ok(false)
            }
            Err(other) => Err(anyhow!(other)),
        },
        LabelCommand::Verify { labels } => {
            let text = fs::read_to_string(labels)
                .with_context(|| format!("reading {}", labels.display()))?;
            let doc: LabelingDocument = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", labels.display()))?;
            let labeling = doc.parse(&net)?;
            let report = verify_proof_labels(&net, &labeling);
            eprintln!(
                "labels {} ({} findings)",
                if report.passed() { "accepted" } else { "REJECTED" },
                report.findings.len()
            );
            let passed = report.passed();
            emit(cli, &LocalCheckDocument::new(&net, &report))?;
            Ok(passed)
        }
    }
}

fn cmd_oracle(cli: &Cli, network: &Path, strict_fate: bool) -> Result<bool> {
    let net = load_network(network)?;
    let rules = net.rule_collection();
    let completion = WeakCompletion::build(&rules);
    let mut divergences = Vec::new();

    let validation = oracle::validate_completion(&rules, &completion)?;
    if let Some(mismatch) = validation.mismatch {
        divergences.push(format!("classes: {mismatch}"));
    }

    let truth = oracle::exhaustive_verify(&net)?;
    let analysis = ClassAnalysis::with_completion(&net, completion);
    if analysis.no_loop().passed() != truth.no_loop() {
        divergences.push("no-loop verdicts differ".to_owned());
    }
    if analysis.no_blackhole().passed() != truth.no_blackhole() {
        divergences.push("no-blackhole verdicts differ".to_owned());
    }
    for u in net.node_ids() {
        for v in net.node_ids() {
            if u == v {
                continue;
            }
            if analysis.reachability(u, v).passed() != truth.reachability(u, v) {
                divergences.push(format!(
                    "reachability {} -> {} differs",
                    net.node_name(u),
                    net.node_name(v)
                ));
            }
            if analysis.consistency(u, v, strict_fate).passed()
                != truth.consistency(u, v, strict_fate)
            {
                divergences.push(format!(
                    "consistency {} / {} differs",
                    net.node_name(u),
                    net.node_name(v)
                ));
            }
        }
    }

    let matched = divergences.is_empty();
    eprintln!(
        "oracle comparison: {}",
        if matched { "match" } else { "DIVERGENCE" }
    );
    let doc = OracleComparisonDocument {
        version: DOC_VERSION,
        verdict: if matched { "match".to_owned() } else { "divergence".to_owned() },
        class_count: analysis.completion().atom_count(),
        divergences,
    };
    emit(cli, &doc)?;
    Ok(matched)
}

fn cmd_trace(cli: &Cli, network: &Path, node: &str, header: &str) -> Result<bool> {
    let net = load_network(network)?;
    let start = net
        .node_by_name(node)
        .ok_or_else(|| anyhow!("unknown node {node:?}"))?;
    let constraints = parse_constraint_text(header)?;
    let set = HeaderSet::parse(
        net.layout(),
        constraints.iter().map(|(k, v)| (k.as_str(), v.as_str())),
    )
    ?;
    let (fate, path) = fwdcheck_core::network::trace(&net, &set, start)?;
    let fate_text = match fate {
        Fate::Delivered(n) => format!("delivered at {}", net.node_name(n)),
        Fate::Dropped(n) => format!("dropped at {}", net.node_name(n)),
        Fate::Loops => "loops".to_owned(),
    };
    let path_names: Vec<String> =
        path.iter().map(|n| net.node_name(*n).to_owned()).collect();
    eprintln!("{}: {} (path {})", set.canonical_string(), fate_text, path_names.join(" -> "));
    let doc = TraceDocument {
        version: DOC_VERSION,
        start: node.to_owned(),
        header: set.constraint_map(),
        fate: match fate {
            Fate::Delivered(n) => {
                fwdcheck_core::doc::FateDoc::Delivered(net.node_name(n).to_owned())
            }
            Fate::Dropped(n) => {
                fwdcheck_core::doc::FateDoc::Dropped(net.node_name(n).to_owned())
            }
            Fate::Loops => fwdcheck_core::doc::FateDoc::Loops,
        },
        path: path_names,
    };
    emit(cli, &doc)?;
    Ok(true)
}
