//! Versioned JSON documents: networks, atom reports, verification reports,
//! local-check reports, proof labelings, edit scripts.
//!
//! One schema family, human-writable and machine-parsable, shared by the
//! CLI and the test harnesses. Output is deterministic: maps are ordered,
//! lists are sorted canonically by their producers.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{AtomReport, CompletenessViolation};
use crate::count::BigCount;
use crate::distributed::{LocalCheckReport, LocalFinding, ProofLabeling};
use crate::headerset::{FieldKind, FieldSpec, HeaderLayout, HeaderSet};
use crate::network::{
    Action, Fate, ForwardingRule, NetworkInstance, NodeId, Task, Verdict, VerificationReport,
    Witness,
};

pub const DOC_VERSION: u32 = 1;

fn default_version() -> u32 {
    DOC_VERSION
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DocError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("unsupported document version {0} (expected {DOC_VERSION})")]
    UnsupportedVersion(u32),
    #[error("{context}: {message}")]
    Invalid { context: String, message: String },
}

impl From<serde_json::Error> for DocError {
    fn from(err: serde_json::Error) -> DocError {
        DocError::Json(err.to_string())
    }
}

fn invalid(context: impl Into<String>, message: impl ToString) -> DocError {
    DocError::Invalid { context: context.into(), message: message.to_string() }
}

fn check_version(version: u32) -> Result<(), DocError> {
    if version != DOC_VERSION {
        return Err(DocError::UnsupportedVersion(version));
    }
    Ok(())
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("documents serialize")
}

// ---------------------------------------------------------------- networks

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldDoc {
    pub name: String,
    pub width: u32,
    pub kind: FieldKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutDoc {
    pub fields: Vec<FieldDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionDoc {
    Forward(String),
    Drop,
    Deliver,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleDoc {
    #[serde(rename = "match", default)]
    pub match_map: BTreeMap<String, String>,
    pub action: ActionDoc,
}

/// The on-disk form of a [`NetworkInstance`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub layout: LayoutDoc,
    pub nodes: Vec<String>,
    #[serde(default)]
    pub links: Vec<(String, String)>,
    #[serde(default)]
    pub tables: BTreeMap<String, Vec<RuleDoc>>,
}

impl NetworkDocument {
    pub fn from_network(net: &NetworkInstance) -> NetworkDocument {
        let layout = LayoutDoc {
            fields: net
                .layout()
                .fields()
                .iter()
                .map(|f| FieldDoc { name: f.name.clone(), width: f.width, kind: f.kind })
                .collect(),
        };
        let nodes: Vec<String> =
            net.node_ids().map(|n| net.node_name(n).to_owned()).collect();
        let links = net
            .links()
            .into_iter()
            .map(|(a, b)| (net.node_name(a).to_owned(), net.node_name(b).to_owned()))
            .collect();
        let mut tables = BTreeMap::new();
        for node in net.node_ids() {
            let rules: Vec<RuleDoc> = net
                .table(node)
                .iter()
                .map(|rule| RuleDoc {
                    match_map: rule.match_set.constraint_map(),
                    action: match rule.action {
                        Action::Forward(t) => ActionDoc::Forward(net.node_name(t).to_owned()),
                        Action::Drop => ActionDoc::Drop,
                        Action::Deliver => ActionDoc::Deliver,
                    },
                })
                .collect();
            if !rules.is_empty() {
                tables.insert(net.node_name(node).to_owned(), rules);
            }
        }
        NetworkDocument { version: DOC_VERSION, layout, nodes, links, tables }
    }

    /// Validates the document into a network instance, with field-precise
    /// errors naming the node, rule index and field at fault.
    pub fn parse(&self) -> Result<NetworkInstance, DocError> {
        check_version(self.version)?;
        let fields: Vec<FieldSpec> = self
            .layout
            .fields
            .iter()
            .map(|f| FieldSpec { name: f.name.clone(), width: f.width, kind: f.kind })
            .collect();
        let layout = Arc::new(HeaderLayout::new(fields).map_err(|e| invalid("layout", e))?);
        let mut net = NetworkInstance::new(Arc::clone(&layout));
        for name in &self.nodes {
            net.add_node(name.clone()).map_err(|e| invalid("nodes", e))?;
        }
        for (a, b) in &self.links {
            let from = net
                .node_by_name(a)
                .ok_or_else(|| invalid("links", format!("unknown node {a:?}")))?;
            let to = net
                .node_by_name(b)
                .ok_or_else(|| invalid("links", format!("unknown node {b:?}")))?;
            net.add_link(from, to).map_err(|e| invalid("links", e))?;
        }
        for (node_name, rules) in &self.tables {
            let node = net
                .node_by_name(node_name)
                .ok_or_else(|| invalid("tables", format!("unknown node {node_name:?}")))?;
            for (index, rule) in rules.iter().enumerate() {
                let context = format!("table {node_name:?} rule {index}");
                let match_set = HeaderSet::parse(
                    &layout,
                    rule.match_map.iter().map(|(k, v)| (k.as_str(), v.as_str())),
                )
                .map_err(|e| invalid(&context, e))?;
                let action = match &rule.action {
                    ActionDoc::Forward(target) => Action::Forward(
                        net.node_by_name(target).ok_or_else(|| {
                            invalid(&context, format!("unknown forward target {target:?}"))
                        })?,
                    ),
                    ActionDoc::Drop => Action::Drop,
                    ActionDoc::Deliver => Action::Deliver,
                };
                net.add_rule(node, ForwardingRule { match_set, action })
                    .map_err(|e| invalid(&context, e))?;
            }
        }
        Ok(net)
    }
}

pub fn load_network(json: &str) -> Result<NetworkInstance, DocError> {
    let doc: NetworkDocument = serde_json::from_str(json)?;
    doc.parse()
}

// ------------------------------------------------------------ atom reports

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleLocationsDoc {
    /// Canonical match text; the stable rule identifier in reports.
    pub id: String,
    /// (node, table index) occurrences of this rule value.
    pub locations: Vec<(String, usize)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomDoc {
    pub representative: BTreeMap<String, String>,
    pub cardinality: BigCount,
    pub matched_rules: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AtomReportDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub atom_count: usize,
    pub rules: Vec<RuleLocationsDoc>,
    pub atoms: Vec<AtomDoc>,
}

impl AtomReportDocument {
    pub fn new(net: &NetworkInstance, report: &AtomReport) -> AtomReportDocument {
        let mut locations: BTreeMap<String, Vec<(String, usize)>> = BTreeMap::new();
        for node in net.node_ids() {
            for (index, rule) in net.table(node).iter().enumerate() {
                locations
                    .entry(rule.match_set.canonical_string())
                    .or_default()
                    .push((net.node_name(node).to_owned(), index));
            }
        }
        AtomReportDocument {
            version: DOC_VERSION,
            atom_count: report.atoms.len(),
            rules: locations
                .into_iter()
                .map(|(id, locations)| RuleLocationsDoc { id, locations })
                .collect(),
            atoms: report
                .atoms
                .iter()
                .map(|atom| AtomDoc {
                    representative: atom.representative.constraint_map(),
                    cardinality: atom.cardinality,
                    matched_rules: atom
                        .matched_rules
                        .iter()
                        .map(HeaderSet::canonical_string)
                        .collect(),
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------- verification reports

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictDoc {
    Pass,
    Fail,
}

impl From<Verdict> for VerdictDoc {
    fn from(v: Verdict) -> VerdictDoc {
        match v {
            Verdict::Pass => VerdictDoc::Pass,
            Verdict::Fail => VerdictDoc::Fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FateDoc {
    Delivered(String),
    Dropped(String),
    Loops,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum TaskDoc {
    NoLoop,
    NoBlackhole,
    Reachability { from: String, to: String },
    Consistency { from: String, to: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WitnessDoc {
    Cycle {
        representative: BTreeMap<String, String>,
        nodes: Vec<String>,
    },
    Blackhole {
        representative: BTreeMap<String, String>,
        drop_node: String,
        active_node: String,
    },
    Path {
        representative: BTreeMap<String, String>,
        nodes: Vec<String>,
    },
    FateMismatch {
        representative: BTreeMap<String, String>,
        first: FateDoc,
        second: FateDoc,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskReportDoc {
    pub task: TaskDoc,
    pub verdict: VerdictDoc,
    pub witnesses: Vec<WitnessDoc>,
}

/// Output of the `verify` command: one entry per requested check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub verdict: VerdictDoc,
    pub checks: Vec<TaskReportDoc>,
}

fn fate_doc(net: &NetworkInstance, fate: Fate) -> FateDoc {
    match fate {
        Fate::Delivered(n) => FateDoc::Delivered(net.node_name(n).to_owned()),
        Fate::Dropped(n) => FateDoc::Dropped(net.node_name(n).to_owned()),
        Fate::Loops => FateDoc::Loops,
    }
}

fn names(net: &NetworkInstance, nodes: &[NodeId]) -> Vec<String> {
    nodes.iter().map(|n| net.node_name(*n).to_owned()).collect()
}

pub fn task_report_doc(net: &NetworkInstance, report: &VerificationReport) -> TaskReportDoc {
    let task = match &report.task {
        Task::NoLoop => TaskDoc::NoLoop,
        Task::NoBlackhole => TaskDoc::NoBlackhole,
        Task::Reachability(u, v) => TaskDoc::Reachability {
            from: net.node_name(*u).to_owned(),
            to: net.node_name(*v).to_owned(),
        },
        Task::Consistency(u, v) => TaskDoc::Consistency {
            from: net.node_name(*u).to_owned(),
            to: net.node_name(*v).to_owned(),
        },
    };
    let witnesses = report
        .witnesses
        .iter()
        .map(|w| match w {
            Witness::Cycle { representative, nodes } => WitnessDoc::Cycle {
                representative: representative.constraint_map(),
                nodes: names(net, nodes),
            },
            Witness::Blackhole { representative, drop_node, active_node } => {
                WitnessDoc::Blackhole {
                    representative: representative.constraint_map(),
                    drop_node: net.node_name(*drop_node).to_owned(),
                    active_node: net.node_name(*active_node).to_owned(),
                }
            }
            Witness::Path { representative, nodes } => WitnessDoc::Path {
                representative: representative.constraint_map(),
                nodes: names(net, nodes),
            },
            Witness::FateMismatch { representative, first, second } => {
                WitnessDoc::FateMismatch {
                    representative: representative.constraint_map(),
                    first: fate_doc(net, *first),
                    second: fate_doc(net, *second),
                }
            }
        })
        .collect();
    TaskReportDoc { task, verdict: report.verdict.into(), witnesses }
}

// -------------------------------------------------------- local-check docs

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ViolationDoc {
    UniverseNotCovered,
    UncoveredIntersection {
        left: BTreeMap<String, String>,
        right: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FindingDoc {
    EdgeBlackhole {
        dropping: String,
        serving: String,
        representative: BTreeMap<String, String>,
    },
    ShadowedRule {
        node: String,
        general_index: usize,
        specific_index: usize,
    },
    EdgeSpecificity {
        from: String,
        to: String,
        representative: BTreeMap<String, String>,
        from_rule_index: usize,
        to_rule_index: usize,
    },
    RuleValueCycle {
        rule: BTreeMap<String, String>,
        nodes: Vec<String>,
    },
    LabelMissing {
        node: String,
    },
    LabelNotWeaklyComplete {
        node: String,
        violation: Option<ViolationDoc>,
    },
    LabelMissesTable {
        node: String,
        rule_index: usize,
    },
    LabelNeighborMismatch {
        node: String,
        neighbor: String,
    },
    LabelDistanceNotDecreasing {
        node: String,
        neighbor: String,
        member: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalCheckDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub check: String,
    pub verdict: VerdictDoc,
    pub component_count: usize,
    pub findings: Vec<FindingDoc>,
}

impl LocalCheckDocument {
    pub fn new(net: &NetworkInstance, report: &LocalCheckReport) -> LocalCheckDocument {
        let name = |id: &NodeId| net.node_name(*id).to_owned();
        let findings = report
            .findings
            .iter()
            .map(|f| match f {
                LocalFinding::EdgeBlackhole { dropping, serving, representative } => {
                    FindingDoc::EdgeBlackhole {
                        dropping: name(dropping),
                        serving: name(serving),
                        representative: representative.constraint_map(),
                    }
                }
                LocalFinding::ShadowedRule { node, general_index, specific_index } => {
                    FindingDoc::ShadowedRule {
                        node: name(node),
                        general_index: *general_index,
                        specific_index: *specific_index,
                    }
                }
                LocalFinding::EdgeSpecificity {
                    from,
                    to,
                    representative,
                    from_rule_index,
                    to_rule_index,
                } => FindingDoc::EdgeSpecificity {
                    from: name(from),
                    to: name(to),
                    representative: representative.constraint_map(),
                    from_rule_index: *from_rule_index,
                    to_rule_index: *to_rule_index,
                },
                LocalFinding::RuleValueCycle { match_set, nodes } => {
                    FindingDoc::RuleValueCycle {
                        rule: match_set.constraint_map(),
                        nodes: names(net, nodes),
                    }
                }
                LocalFinding::LabelMissing { node } => {
                    FindingDoc::LabelMissing { node: name(node) }
                }
                LocalFinding::LabelNotWeaklyComplete { node, violation } => {
                    FindingDoc::LabelNotWeaklyComplete {
                        node: name(node),
                        violation: violation.as_ref().map(|v| match v {
                            CompletenessViolation::UniverseNotCovered => {
                                ViolationDoc::UniverseNotCovered
                            }
                            CompletenessViolation::UncoveredIntersection { left, right } => {
                                ViolationDoc::UncoveredIntersection {
                                    left: left.constraint_map(),
                                    right: right.constraint_map(),
                                }
                            }
                        }),
                    }
                }
                LocalFinding::LabelMissesTable { node, rule_index } => {
                    FindingDoc::LabelMissesTable { node: name(node), rule_index: *rule_index }
                }
                LocalFinding::LabelNeighborMismatch { node, neighbor } => {
                    FindingDoc::LabelNeighborMismatch {
                        node: name(node),
                        neighbor: name(neighbor),
                    }
                }
                LocalFinding::LabelDistanceNotDecreasing { node, neighbor, member } => {
                    FindingDoc::LabelDistanceNotDecreasing {
                        node: name(node),
                        neighbor: name(neighbor),
                        member: member.constraint_map(),
                    }
                }
            })
            .collect();
        LocalCheckDocument {
            version: DOC_VERSION,
            check: report.check.to_string(),
            verdict: report.verdict.into(),
            component_count: report.component_count,
            findings,
        }
    }
}

// ------------------------------------------------------------- label docs

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelEntryDoc {
    pub set: BTreeMap<String, String>,
    pub distance: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabelingDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub labels: BTreeMap<String, Vec<LabelEntryDoc>>,
}

impl LabelingDocument {
    pub fn new(net: &NetworkInstance, labeling: &ProofLabeling) -> LabelingDocument {
        let mut labels = BTreeMap::new();
        for node in net.node_ids() {
            let entries = labeling
                .node_label(node)
                .iter()
                .map(|(set, distance)| LabelEntryDoc {
                    set: set.constraint_map(),
                    distance: *distance,
                })
                .collect();
            labels.insert(net.node_name(node).to_owned(), entries);
        }
        LabelingDocument { version: DOC_VERSION, labels }
    }

    /// Resolves the document against a network. Unknown node names are
    /// errors; nodes without an entry get an empty label, which the
    /// verifier rejects on its own.
    pub fn parse(&self, net: &NetworkInstance) -> Result<ProofLabeling, DocError> {
        check_version(self.version)?;
        let mut labels: Vec<Vec<(HeaderSet, u64)>> = vec![Vec::new(); net.node_count()];
        for (node_name, entries) in &self.labels {
            let node = net
                .node_by_name(node_name)
                .ok_or_else(|| invalid("labels", format!("unknown node {node_name:?}")))?;
            let mut parsed = Vec::with_capacity(entries.len());
            for (i, entry) in entries.iter().enumerate() {
                let context = format!("labels {node_name:?} entry {i}");
                let set = HeaderSet::parse(
                    net.layout(),
                    entry.set.iter().map(|(k, v)| (k.as_str(), v.as_str())),
                )
                .map_err(|e| invalid(&context, e))?;
                parsed.push((set, entry.distance));
            }
            labels[node.0] = parsed;
        }
        Ok(ProofLabeling::from_labels(labels))
    }
}

// ------------------------------------------------------------- edit docs

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum EditDoc {
    Insert {
        node: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
        #[serde(rename = "match", default)]
        match_map: BTreeMap<String, String>,
        action: ActionDoc,
    },
    Delete {
        node: String,
        #[serde(rename = "match", default)]
        match_map: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EditScriptDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub edits: Vec<EditDoc>,
}

/// Output of the `update` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UpdateReportDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub applied: usize,
    /// Set when `--verify-against-rebuild` ran: whether every incremental
    /// state matched a fresh build.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rebuild_consistent: Option<bool>,
    /// The edits that were applied (useful with `--random`).
    pub edits: Vec<EditDoc>,
    pub atoms: AtomReportDocument,
}

// ------------------------------------------------------------- trace docs

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    pub start: String,
    pub header: BTreeMap<String, String>,
    pub fate: FateDoc,
    pub path: Vec<String>,
}

// ------------------------------------------------------------ oracle docs

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleComparisonDocument {
    #[serde(default = "default_version")]
    pub version: u32,
    /// `"match"` or `"divergence"`.
    pub verdict: String,
    pub class_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub divergences: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributed::generate_proof_labels;

    fn sample_network_json() -> String {
        r#"{
            "version": 1,
            "layout": { "fields": [ { "name": "dst", "width": 2, "kind": "mask" } ] },
            "nodes": ["u", "v"],
            "links": [["u", "v"]],
            "tables": {
                "u": [ { "match": { "dst": "0*" }, "action": { "forward": "v" } } ],
                "v": [ { "match": {}, "action": "deliver" } ]
            }
        }"#
        .to_owned()
    }

    #[test]
    fn network_round_trip() {
        let net = load_network(&sample_network_json()).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.total_rule_count(), 2);
        let doc = NetworkDocument::from_network(&net);
        let again = doc.parse().unwrap();
        assert_eq!(again.node_count(), net.node_count());
        for node in net.node_ids() {
            assert_eq!(again.table(node), net.table(node));
        }
        // Serialization is stable.
        assert_eq!(
            to_json_pretty(&doc),
            to_json_pretty(&NetworkDocument::from_network(&again))
        );
    }

    #[test]
    fn bad_documents_are_field_precise() {
        let mut doc: NetworkDocument =
            serde_json::from_str(&sample_network_json()).unwrap();
        doc.tables.get_mut("u").unwrap()[0]
            .match_map
            .insert("nope".into(), "01".into());
        let err = doc.parse().unwrap_err();
        assert!(
            matches!(&err, DocError::Invalid { context, .. } if context.contains("\"u\" rule 0")),
            "{err}"
        );

        let mut doc: NetworkDocument =
            serde_json::from_str(&sample_network_json()).unwrap();
        doc.version = 9;
        assert_eq!(doc.parse().unwrap_err(), DocError::UnsupportedVersion(9));

        let mut doc: NetworkDocument =
            serde_json::from_str(&sample_network_json()).unwrap();
        doc.links.push(("u".into(), "ghost".into()));
        let err = doc.parse().unwrap_err();
        assert!(matches!(&err, DocError::Invalid { context, .. } if context == "links"));
    }

    #[test]
    fn labeling_round_trip_is_semantically_exact() {
        // Labels survive serialize -> parse with semantic equality.
        let net = {
            let json = r#"{
                "version": 1,
                "layout": { "fields": [ { "name": "dst", "width": 3, "kind": "mask" } ] },
                "nodes": ["a", "b", "c"],
                "links": [["a", "b"], ["b", "c"]],
                "tables": {
                    "a": [ { "match": { "dst": "0**" }, "action": { "forward": "b" } } ],
                    "b": [ { "match": { "dst": "0**" }, "action": { "forward": "c" } } ],
                    "c": [ { "match": { "dst": "00*" }, "action": "deliver" },
                           { "match": { "dst": "0**" }, "action": "deliver" } ]
                }
            }"#;
            load_network(json).unwrap()
        };
        let labeling = generate_proof_labels(&net).unwrap();
        let doc = LabelingDocument::new(&net, &labeling);
        let json = to_json_pretty(&doc);
        let parsed_doc: LabelingDocument = serde_json::from_str(&json).unwrap();
        let parsed = parsed_doc.parse(&net).unwrap();
        assert_eq!(parsed, labeling);
    }

    #[test]
    fn action_encoding() {
        let drop: ActionDoc = serde_json::from_str("\"drop\"").unwrap();
        assert!(matches!(drop, ActionDoc::Drop));
        let fwd: ActionDoc = serde_json::from_str("{\"forward\":\"v\"}").unwrap();
        assert!(matches!(fwd, ActionDoc::Forward(v) if v == "v"));
        assert_eq!(serde_json::to_string(&ActionDoc::Deliver).unwrap(), "\"deliver\"");
    }

    #[test]
    fn edit_script_parses() {
        let json = r#"{
            "version": 1,
            "edits": [
                { "op": "insert", "node": "u", "match": { "dst": "00" }, "action": "drop" },
                { "op": "delete", "node": "u", "match": { "dst": "00" } }
            ]
        }"#;
        let doc: EditScriptDocument = serde_json::from_str(json).unwrap();
        assert_eq!(doc.edits.len(), 2);
        assert!(matches!(&doc.edits[0], EditDoc::Insert { index: None, .. }));
    }
}
