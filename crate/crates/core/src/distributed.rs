//! Simulated distributed verification.
//!
//! Each check here only ever looks at one node's table, its label, and what
//! its direct neighbors publish — the message exchange is simulated
//! in-process as a deterministic publish-then-check pass. Covered:
//!
//! - edge-local NO-BLACKHOLE (a node may not drop what a neighbor serves);
//! - the MORE-SPECIFIC discipline (more specific rules first, applied rules
//!   shrink along forwarding edges);
//! - a proof labeling scheme for NO-LOOP: every node carries a weakly
//!   complete collection covering its table plus per-member distances that
//!   must strictly decrease along forward edges;
//! - loop freedom under MORE-SPECIFIC via per-rule-value acyclicity, since
//!   a packet looping under MORE-SPECIFIC applies a single rule value all
//!   the way around.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::algebra::{
    check_weak_completeness, CompletenessViolation, CoverageChecker, RuleCollection,
    WeakCompletion,
};
use crate::headerset::HeaderSet;
use crate::network::{
    class_action, Action, ClassAnalysis, NetworkInstance, NodeId, Verdict, VerificationReport,
};

/// Per-node labels for the NO-LOOP proof labeling scheme: a collection of
/// header sets with a distance estimation per member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofLabeling {
    labels: Vec<Vec<(HeaderSet, u64)>>,
}

impl ProofLabeling {
    pub fn from_labels(labels: Vec<Vec<(HeaderSet, u64)>>) -> ProofLabeling {
        ProofLabeling { labels }
    }

    pub fn labels(&self) -> &[Vec<(HeaderSet, u64)>] {
        &self.labels
    }

    /// Mutable access, used by tampering harnesses.
    pub fn labels_mut(&mut self) -> &mut Vec<Vec<(HeaderSet, u64)>> {
        &mut self.labels
    }

    pub fn node_label(&self, node: NodeId) -> &[(HeaderSet, u64)] {
        &self.labels[node.0]
    }

    /// D(node, set); the smallest listed distance if a set appears twice.
    fn distance(&self, node: NodeId, set: &HeaderSet) -> Option<u64> {
        self.labels[node.0]
            .iter()
            .filter(|(s, _)| s == set)
            .map(|(_, d)| *d)
            .min()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalCheck {
    Blackholes,
    MoreSpecific,
    LoopFreedomMoreSpecific,
    ProofLabels,
}

impl fmt::Display for LocalCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LocalCheck::Blackholes => "local-blackholes",
            LocalCheck::MoreSpecific => "more-specific",
            LocalCheck::LoopFreedomMoreSpecific => "loops-more-specific",
            LocalCheck::ProofLabels => "proof-labels",
        })
    }
}

/// One locally detected violation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LocalFinding {
    /// `dropping` drops the class that its neighbor `serving` forwards or
    /// delivers.
    EdgeBlackhole { dropping: NodeId, serving: NodeId, representative: HeaderSet },
    /// A strictly more specific rule sits after a general one in a table.
    ShadowedRule { node: NodeId, general_index: usize, specific_index: usize },
    /// Along a forwarding edge, the downstream matched rule is not more
    /// specific than the upstream one.
    EdgeSpecificity {
        from: NodeId,
        to: NodeId,
        representative: HeaderSet,
        from_rule_index: usize,
        to_rule_index: usize,
    },
    /// A single rule value is forwarded around a cycle.
    RuleValueCycle { match_set: HeaderSet, nodes: Vec<NodeId> },
    /// The labeling has no entry list for this node.
    LabelMissing { node: NodeId },
    LabelNotWeaklyComplete { node: NodeId, violation: Option<CompletenessViolation> },
    /// The node's label does not cover this rule of its own table.
    LabelMissesTable { node: NodeId, rule_index: usize },
    /// Neighbor labels differ as collections.
    LabelNeighborMismatch { node: NodeId, neighbor: NodeId },
    /// A forward edge without strictly decreasing distance.
    LabelDistanceNotDecreasing { node: NodeId, neighbor: NodeId, member: HeaderSet },
}

/// Conjunction of per-node / per-edge verdicts, with every violation found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalCheckReport {
    pub check: LocalCheck,
    pub verdict: Verdict,
    pub findings: Vec<LocalFinding>,
    /// Connected components of the link graph; localized arguments need a
    /// connected network, so more than one is worth flagging.
    pub component_count: usize,
}

impl LocalCheckReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

fn local_report(
    check: LocalCheck,
    findings: Vec<LocalFinding>,
    component_count: usize,
) -> LocalCheckReport {
    let verdict = if findings.is_empty() { Verdict::Pass } else { Verdict::Fail };
    LocalCheckReport { check, verdict, findings, component_count }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DistributedError {
    #[error("the network contains a forwarding loop; labels cannot be generated")]
    LoopExists(VerificationReport),
    #[error("MORE-SPECIFIC does not hold, the per-rule acyclicity check is not sound here")]
    PreconditionViolated(LocalCheckReport),
}

/// Sorted atom representatives of the union of two tables.
fn edge_representatives(net: &NetworkInstance, u: NodeId, v: NodeId) -> Vec<HeaderSet> {
    let sets = net
        .table(u)
        .iter()
        .chain(net.table(v))
        .map(|rule| rule.match_set.clone());
    let rules = RuleCollection::from_sets(Arc::clone(net.layout()), sets)
        .expect("table rules are valid");
    let completion = WeakCompletion::build(&rules);
    let mut reps: Vec<HeaderSet> = completion.member_sets().cloned().collect();
    reps.sort();
    reps
}

/// Edge-local NO-BLACKHOLE: for both orientations of every link, each class
/// of the two tables' union that the neighbor forwards or delivers must not
/// be dropped here. Equivalent to the global check on connected networks.
pub fn local_check_no_blackhole(net: &NetworkInstance) -> LocalCheckReport {
    let components = net.connected_components().len();
    let mut findings = Vec::new();
    for (a, b) in net.links() {
        for (dropping, serving) in [(a, b), (b, a)] {
            for rep in edge_representatives(net, dropping, serving) {
                if class_action(net.table(serving), &rep).is_drop() {
                    continue;
                }
                if class_action(net.table(dropping), &rep).is_drop() {
                    findings.push(LocalFinding::EdgeBlackhole {
                        dropping,
                        serving,
                        representative: rep,
                    });
                }
            }
        }
    }
    local_report(LocalCheck::Blackholes, findings, components)
}

/// MORE-SPECIFIC: (a) within every table, a strictly more specific rule
/// precedes any rule containing it; (b) along every forwarding edge, the
/// rule matched downstream is contained in the rule matched upstream.
pub fn check_more_specific(net: &NetworkInstance) -> LocalCheckReport {
    let components = net.connected_components().len();
    let mut findings = Vec::new();
    for node in net.node_ids() {
        let table = net.table(node);
        for general in 0..table.len() {
            for specific in general + 1..table.len() {
                let earlier = &table[general].match_set;
                let later = &table[specific].match_set;
                if later.is_subset(earlier).expect("same layout") && later != earlier {
                    findings.push(LocalFinding::ShadowedRule {
                        node,
                        general_index: general,
                        specific_index: specific,
                    });
                }
            }
        }
    }
    for (a, b) in net.links() {
        for (from, to) in [(a, b), (b, a)] {
            for rep in edge_representatives(net, from, to) {
                let Some(from_idx) = net
                    .table(from)
                    .iter()
                    .position(|r| rep.is_subset(&r.match_set).expect("same layout"))
                else {
                    continue;
                };
                if net.table(from)[from_idx].action != Action::Forward(to) {
                    continue;
                }
                let Some(to_idx) = net
                    .table(to)
                    .iter()
                    .position(|r| rep.is_subset(&r.match_set).expect("same layout"))
                else {
                    continue;
                };
                let upstream = &net.table(from)[from_idx].match_set;
                let downstream = &net.table(to)[to_idx].match_set;
                if !downstream.is_subset(upstream).expect("same layout") {
                    findings.push(LocalFinding::EdgeSpecificity {
                        from,
                        to,
                        representative: rep,
                        from_rule_index: from_idx,
                        to_rule_index: to_idx,
                    });
                }
            }
        }
    }
    local_report(LocalCheck::MoreSpecific, findings, components)
}

/// Honest labels for a loop-free network: every node carries the minimal
/// weak completion of the global rule collection, and D(u,c) is the hop
/// count to the class's terminal (0 at drop/deliver nodes).
pub fn generate_proof_labels(net: &NetworkInstance) -> Result<ProofLabeling, DistributedError> {
    let analysis = ClassAnalysis::new(net);
    let loops = analysis.no_loop();
    if !loops.passed() {
        return Err(DistributedError::LoopExists(loops));
    }
    let nodes = net.node_count();
    let mut labels: Vec<Vec<(HeaderSet, u64)>> = vec![Vec::new(); nodes];
    for graph in analysis.class_graphs() {
        let mut dist: Vec<Option<u64>> = vec![None; nodes];
        for start in 0..nodes {
            if dist[start].is_some() {
                continue;
            }
            let mut path = Vec::new();
            let mut current = start;
            let base = loop {
                if let Some(d) = dist[current] {
                    break d;
                }
                match graph.actions[current] {
                    Action::Forward(next) => {
                        path.push(current);
                        current = next.0;
                    }
                    _ => {
                        dist[current] = Some(0);
                        break 0;
                    }
                }
            };
            for (hops, node) in path.iter().rev().enumerate() {
                dist[*node] = Some(base + hops as u64 + 1);
            }
        }
        for (node, label) in labels.iter_mut().enumerate() {
            label.push((graph.representative.clone(), dist[node].unwrap()));
        }
    }
    Ok(ProofLabeling::from_labels(labels))
}

/// Local verification of (possibly adversarial) labels. Every node checks:
/// its label is weakly complete, covers its own table, equals each
/// neighbor's label as a collection, and distances strictly decrease along
/// its forward edges. Universal acceptance implies NO-LOOP.
pub fn verify_proof_labels(net: &NetworkInstance, labeling: &ProofLabeling) -> LocalCheckReport {
    let components = net.connected_components().len();
    let mut findings = Vec::new();
    for node in net.node_ids() {
        if node.0 >= labeling.labels().len() {
            findings.push(LocalFinding::LabelMissing { node });
            continue;
        }
        let entries = labeling.node_label(node);
        let sets: Vec<HeaderSet> = entries.iter().map(|(s, _)| s.clone()).collect();

        let completeness = check_weak_completeness(&sets);
        if !completeness.complete {
            findings.push(LocalFinding::LabelNotWeaklyComplete {
                node,
                violation: completeness.violation,
            });
        }

        let coverage = CoverageChecker::new(&sets);
        for (rule_index, rule) in net.table(node).iter().enumerate() {
            if !coverage.covers(&rule.match_set) {
                findings.push(LocalFinding::LabelMissesTable { node, rule_index });
            }
        }

        for neighbor in net.neighbors(node) {
            if neighbor.0 >= labeling.labels().len() {
                continue; // reported at the neighbor itself
            }
            if node < neighbor {
                let mine: BTreeSet<&HeaderSet> = sets.iter().collect();
                let theirs: BTreeSet<&HeaderSet> =
                    labeling.node_label(neighbor).iter().map(|(s, _)| s).collect();
                if mine != theirs {
                    findings.push(LocalFinding::LabelNeighborMismatch { node, neighbor });
                }
            }
        }

        for (member, here) in entries {
            if let Action::Forward(next) = class_action(net.table(node), member) {
                let decreases = next.0 < labeling.labels().len()
                    && labeling.distance(next, member).is_some_and(|there| there < *here);
                if !decreases {
                    findings.push(LocalFinding::LabelDistanceNotDecreasing {
                        node,
                        neighbor: next,
                        member: member.clone(),
                    });
                }
            }
        }
    }
    local_report(LocalCheck::ProofLabels, findings, components)
}

/// NO-LOOP under MORE-SPECIFIC: build one graph per distinct rule value,
/// with an arc u→v for every table rule of that value forwarding to v, and
/// require every such graph to be acyclic. Errors when MORE-SPECIFIC does
/// not hold, since the reduction to single-value loops needs it.
pub fn check_no_loop_more_specific(
    net: &NetworkInstance,
) -> Result<LocalCheckReport, DistributedError> {
    let precondition = check_more_specific(net);
    if !precondition.passed() {
        return Err(DistributedError::PreconditionViolated(precondition));
    }
    let mut per_value: IndexMap<HeaderSet, Vec<Vec<usize>>> = IndexMap::new();
    for node in net.node_ids() {
        for rule in net.table(node) {
            if let Action::Forward(next) = rule.action {
                per_value
                    .entry(rule.match_set.clone())
                    .or_insert_with(|| vec![Vec::new(); net.node_count()])
                    [node.0]
                    .push(next.0);
            }
        }
    }
    per_value.sort_keys();
    let mut findings = Vec::new();
    for (match_set, adjacency) in per_value {
        if let Some(cycle) = digraph_cycle(&adjacency) {
            findings.push(LocalFinding::RuleValueCycle { match_set, nodes: cycle });
        }
    }
    Ok(local_report(
        LocalCheck::LoopFreedomMoreSpecific,
        findings,
        net.connected_components().len(),
    ))
}

/// Iterative DFS cycle search on a general digraph.
fn digraph_cycle(adjacency: &[Vec<usize>]) -> Option<Vec<NodeId>> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; adjacency.len()];
    for start in 0..adjacency.len() {
        if color[start] != WHITE {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        let mut path = vec![start];
        color[start] = GRAY;
        while let Some((node, child)) = stack.last_mut() {
            if let Some(&next) = adjacency[*node].get(*child) {
                *child += 1;
                match color[next] {
                    GRAY => {
                        let pos = path.iter().position(|&n| n == next).unwrap();
                        return Some(path[pos..].iter().map(|&n| NodeId(n)).collect());
                    }
                    WHITE => {
                        color[next] = GRAY;
                        stack.push((next, 0));
                        path.push(next);
                    }
                    _ => {}
                }
            } else {
                color[*node] = BLACK;
                stack.pop();
                path.pop();
            }
        }
    }
    None
}
