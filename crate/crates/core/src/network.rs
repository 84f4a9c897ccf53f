//! Network instances and centralized verification.
//!
//! A network instance is a graph plus one ordered forwarding table per node;
//! the first rule containing a header decides the action, and a header that
//! matches nothing is dropped. Verification computes the minimal weak
//! completion of the union of all match sets once, then checks each task
//! on the per-class graph induced by every atom representative: the action
//! a node takes on any header of an atom is the action of the first rule
//! containing the representative.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{AlgebraError, RuleCollection, WeakCompletion};
use crate::headerset::{HeaderLayout, HeaderSet};

/// Node index within one [`NetworkInstance`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Action {
    Forward(NodeId),
    Drop,
    Deliver,
}

impl Action {
    pub fn is_drop(&self) -> bool {
        matches!(self, Action::Drop)
    }
}

/// A match predicate plus the action applied on matching packets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForwardingRule {
    pub match_set: HeaderSet,
    pub action: Action,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetworkError {
    #[error("duplicate node {0:?}")]
    DuplicateNode(String),
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("link from {0:?} to itself")]
    SelfLink(String),
    #[error("node {node:?} rule {index}: forward target {target:?} is not adjacent")]
    NotAdjacent { node: String, index: usize, target: String },
    #[error("node {node:?} rule {index}: empty match set")]
    EmptyMatch { node: String, index: usize },
    #[error("node {node:?} rule {index}: match set uses a different layout")]
    RuleLayoutMismatch { node: String, index: usize },
    #[error("node {node:?}: rule index {index} out of bounds (table has {len} rules)")]
    RuleIndexOutOfBounds { node: String, index: usize, len: usize },
    #[error("node {node:?}: no rule with match {match_text}")]
    NoSuchRule { node: String, match_text: String },
    #[error("header {0} is not a single concrete header")]
    NotAHeader(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Graph, node names and ordered forwarding tables.
#[derive(Debug, Clone)]
pub struct NetworkInstance {
    layout: Arc<HeaderLayout>,
    names: Vec<String>,
    index: HashMap<String, NodeId>,
    adjacency: Vec<BTreeSet<NodeId>>,
    tables: Vec<Vec<ForwardingRule>>,
}

impl NetworkInstance {
    pub fn new(layout: Arc<HeaderLayout>) -> NetworkInstance {
        NetworkInstance {
            layout,
            names: Vec::new(),
            index: HashMap::new(),
            adjacency: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn layout(&self) -> &Arc<HeaderLayout> {
        &self.layout
    }

    pub fn add_node(&mut self, name: impl Into<String>) -> Result<NodeId, NetworkError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(NetworkError::DuplicateNode(name));
        }
        let id = NodeId(self.names.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.adjacency.push(BTreeSet::new());
        self.tables.push(Vec::new());
        Ok(id)
    }

    /// Adds an undirected link; adding it twice is a no-op.
    pub fn add_link(&mut self, a: NodeId, b: NodeId) -> Result<(), NetworkError> {
        if a == b {
            return Err(NetworkError::SelfLink(self.names[a.0].clone()));
        }
        self.adjacency[a.0].insert(b);
        self.adjacency[b.0].insert(a);
        Ok(())
    }

    /// Appends a rule to the node's table.
    pub fn add_rule(&mut self, node: NodeId, rule: ForwardingRule) -> Result<(), NetworkError> {
        let index = self.tables[node.0].len();
        self.insert_rule_at(node, index, rule)
    }

    /// Inserts a rule at a table position; later rules shift down.
    pub fn insert_rule_at(
        &mut self,
        node: NodeId,
        index: usize,
        rule: ForwardingRule,
    ) -> Result<(), NetworkError> {
        let name = || self.names[node.0].clone();
        let len = self.tables[node.0].len();
        if index > len {
            return Err(NetworkError::RuleIndexOutOfBounds { node: name(), index, len });
        }
        if rule.match_set.is_empty() {
            return Err(NetworkError::EmptyMatch { node: name(), index });
        }
        if **rule.match_set.layout() != *self.layout {
            return Err(NetworkError::RuleLayoutMismatch { node: name(), index });
        }
        if let Action::Forward(target) = rule.action {
            if !self.adjacency[node.0].contains(&target) {
                return Err(NetworkError::NotAdjacent {
                    node: name(),
                    index,
                    target: self.names[target.0].clone(),
                });
            }
        }
        self.tables[node.0].insert(index, rule);
        Ok(())
    }

    pub fn remove_rule_at(&mut self, node: NodeId, index: usize) -> Result<ForwardingRule, NetworkError> {
        let len = self.tables[node.0].len();
        if index >= len {
            return Err(NetworkError::RuleIndexOutOfBounds {
                node: self.names[node.0].clone(),
                index,
                len,
            });
        }
        Ok(self.tables[node.0].remove(index))
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.names.len()).map(NodeId)
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.names[id.0]
    }

    pub fn node_by_name(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    pub fn neighbors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.adjacency[id.0].iter().copied()
    }

    /// Undirected links, normalized with the smaller id first.
    pub fn links(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for u in self.node_ids() {
            for v in self.neighbors(u) {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn table(&self, node: NodeId) -> &[ForwardingRule] {
        &self.tables[node.0]
    }

    /// Total rule count across all tables.
    pub fn total_rule_count(&self) -> usize {
        self.tables.iter().map(Vec::len).sum()
    }

    /// The deduplicated collection of every match set in the network.
    pub fn rule_collection(&self) -> RuleCollection {
        let sets = self.tables.iter().flatten().map(|r| r.match_set.clone());
        RuleCollection::from_sets(Arc::clone(&self.layout), sets)
            .expect("table rules are validated on insertion")
    }

    /// Connected components of the link graph, each sorted by node id.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let mut seen = vec![false; self.node_count()];
        let mut components = Vec::new();
        for start in self.node_ids() {
            if seen[start.0] {
                continue;
            }
            let mut stack = vec![start];
            let mut component = Vec::new();
            seen[start.0] = true;
            while let Some(u) = stack.pop() {
                component.push(u);
                for v in self.neighbors(u) {
                    if !seen[v.0] {
                        seen[v.0] = true;
                        stack.push(v);
                    }
                }
            }
            component.sort();
            components.push(component);
        }
        components
    }
}

/// The action a table takes on every header of the atom represented by `s`:
/// the action of the first rule containing `s`, or drop when none does.
pub fn class_action(table: &[ForwardingRule], representative: &HeaderSet) -> Action {
    table
        .iter()
        .find(|rule| representative.is_subset(&rule.match_set).expect("same layout"))
        .map(|rule| rule.action)
        .unwrap_or(Action::Drop)
}

/// Forwarding decisions of one header class: per-node labels; arcs are the
/// forward labels, so every node has out-degree at most one.
#[derive(Debug, Clone)]
pub struct ClassGraph {
    pub representative: HeaderSet,
    pub actions: Vec<Action>,
}

/// Where a packet ends up when injected somewhere.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fate {
    Delivered(NodeId),
    Dropped(NodeId),
    Loops,
}

/// Fate equality for CONSISTENCY. Loops compare equal; deliveries must end
/// at the same node; drop locations are ignored unless `strict_drops`.
pub fn fates_equal(a: Fate, b: Fate, strict_drops: bool) -> bool {
    match (a, b) {
        (Fate::Delivered(x), Fate::Delivered(y)) => x == y,
        (Fate::Dropped(x), Fate::Dropped(y)) => !strict_drops || x == y,
        (Fate::Loops, Fate::Loops) => true,
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Task {
    NoLoop,
    NoBlackhole,
    Reachability(NodeId, NodeId),
    Consistency(NodeId, NodeId),
}

/// Evidence attached to a verdict; always re-checkable with [`trace`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Cycle { representative: HeaderSet, nodes: Vec<NodeId> },
    Blackhole { representative: HeaderSet, drop_node: NodeId, active_node: NodeId },
    Path { representative: HeaderSet, nodes: Vec<NodeId> },
    FateMismatch { representative: HeaderSet, first: Fate, second: Fate },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerificationReport {
    pub task: Task,
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Follows the unique out-edges from `start` until a non-forward label or a
/// revisited node. Returns the fate and the node path; a looping walk ends
/// with the first repeated node.
pub(crate) fn walk(action_at: impl Fn(NodeId) -> Action, start: NodeId) -> (Fate, Vec<NodeId>) {
    let mut path = vec![start];
    let mut visited = BTreeSet::from([start]);
    let mut current = start;
    loop {
        match action_at(current) {
            Action::Drop => return (Fate::Dropped(current), path),
            Action::Deliver => return (Fate::Delivered(current), path),
            Action::Forward(next) => {
                path.push(next);
                if !visited.insert(next) {
                    return (Fate::Loops, path);
                }
                current = next;
            }
        }
    }
}

/// Per-header forwarding simulation: membership tests against the actual
/// tables, no class machinery. Ground truth for all class-based verdicts.
pub fn trace(
    net: &NetworkInstance,
    header: &HeaderSet,
    start: NodeId,
) -> Result<(Fate, Vec<NodeId>), NetworkError> {
    if header.cardinality() != crate::count::BigCount::ONE
        || **header.layout() != *net.layout
    {
        return Err(NetworkError::NotAHeader(header.canonical_string()));
    }
    Ok(walk(
        |node| {
            net.table(node)
                .iter()
                .find(|rule| header.is_subset(&rule.match_set).expect("same layout"))
                .map(|rule| rule.action)
                .unwrap_or(Action::Drop)
        },
        start,
    ))
}

/// The completion of a network's rule collection plus one [`ClassGraph`]
/// per atom, in canonical representative order. Built once and shared by
/// all verification tasks.
pub struct ClassAnalysis<'n> {
    net: &'n NetworkInstance,
    completion: WeakCompletion,
    graphs: Vec<ClassGraph>,
}

impl<'n> ClassAnalysis<'n> {
    pub fn new(net: &'n NetworkInstance) -> ClassAnalysis<'n> {
        let completion = WeakCompletion::build(&net.rule_collection());
        Self::with_completion(net, completion)
    }

    /// Builds the class graphs for an already-computed completion.
    pub fn with_completion(net: &'n NetworkInstance, completion: WeakCompletion) -> ClassAnalysis<'n> {
        let mut reps: Vec<HeaderSet> = completion.member_sets().cloned().collect();
        reps.sort();
        let graphs: Vec<ClassGraph> = reps
            .into_par_iter()
            .map(|rep| {
                let actions = net
                    .node_ids()
                    .map(|u| class_action(net.table(u), &rep))
                    .collect();
                ClassGraph { representative: rep, actions }
            })
            .collect();
        ClassAnalysis { net, completion, graphs }
    }

    pub fn network(&self) -> &NetworkInstance {
        self.net
    }

    pub fn completion(&self) -> &WeakCompletion {
        &self.completion
    }

    pub fn class_graphs(&self) -> &[ClassGraph] {
        &self.graphs
    }

    /// Fate of a packet of this class injected at `start`.
    pub fn class_fate(&self, graph: &ClassGraph, start: NodeId) -> (Fate, Vec<NodeId>) {
        walk(|node| graph.actions[node.0], start)
    }

    /// NO-LOOP: no class graph contains a directed cycle.
    pub fn no_loop(&self) -> VerificationReport {
        let mut witnesses = Vec::new();
        for graph in &self.graphs {
            if let Some(nodes) = find_cycle(&graph.actions) {
                witnesses.push(Witness::Cycle {
                    representative: graph.representative.clone(),
                    nodes,
                });
            }
        }
        report(Task::NoLoop, witnesses)
    }

    /// NO-BLACKHOLE: within each class, either every node drops or none does.
    pub fn no_blackhole(&self) -> VerificationReport {
        let mut witnesses = Vec::new();
        for graph in &self.graphs {
            let drop_node = graph.actions.iter().position(Action::is_drop);
            let active_node = graph.actions.iter().position(|a| !a.is_drop());
            if let (Some(d), Some(a)) = (drop_node, active_node) {
                witnesses.push(Witness::Blackhole {
                    representative: graph.representative.clone(),
                    drop_node: NodeId(d),
                    active_node: NodeId(a),
                });
            }
        }
        report(Task::NoBlackhole, witnesses)
    }

    /// REACHABILITY(u,v): some class graph has a directed path from u to v.
    /// A pass carries the witness path; a failure has nothing to show.
    pub fn reachability(&self, from: NodeId, to: NodeId) -> VerificationReport {
        for graph in &self.graphs {
            let (_, path) = self.class_fate(graph, from);
            if let Some(pos) = path.iter().position(|&n| n == to) {
                return VerificationReport {
                    task: Task::Reachability(from, to),
                    verdict: Verdict::Pass,
                    witnesses: vec![Witness::Path {
                        representative: graph.representative.clone(),
                        nodes: path[..=pos].to_vec(),
                    }],
                };
            }
        }
        VerificationReport {
            task: Task::Reachability(from, to),
            verdict: Verdict::Fail,
            witnesses: Vec::new(),
        }
    }

    /// CONSISTENCY(u,v): every class has the same fate from u and from v.
    pub fn consistency(&self, u: NodeId, v: NodeId, strict_drops: bool) -> VerificationReport {
        let mut witnesses = Vec::new();
        for graph in &self.graphs {
            let (fate_u, _) = self.class_fate(graph, u);
            let (fate_v, _) = self.class_fate(graph, v);
            if !fates_equal(fate_u, fate_v, strict_drops) {
                witnesses.push(Witness::FateMismatch {
                    representative: graph.representative.clone(),
                    first: fate_u,
                    second: fate_v,
                });
            }
        }
        report(Task::Consistency(u, v), witnesses)
    }
}

fn report(task: Task, witnesses: Vec<Witness>) -> VerificationReport {
    let verdict = if witnesses.is_empty() { Verdict::Pass } else { Verdict::Fail };
    VerificationReport { task, verdict, witnesses }
}

/// Cycle detection on a functional graph (out-degree ≤ 1): follow the
/// forward edges from each unvisited node; a walk that re-enters itself
/// found a cycle. O(|V|) overall.
fn find_cycle(actions: &[Action]) -> Option<Vec<NodeId>> {
    const WHITE: u8 = 0;
    const GRAY: u8 = 1;
    const BLACK: u8 = 2;
    let mut color = vec![WHITE; actions.len()];
    for start in 0..actions.len() {
        if color[start] != WHITE {
            continue;
        }
        let mut path = Vec::new();
        let mut current = start;
        let cycle = loop {
            color[current] = GRAY;
            path.push(NodeId(current));
            match actions[current] {
                Action::Forward(NodeId(next)) if color[next] == GRAY => {
                    let pos = path.iter().position(|&n| n == NodeId(next)).unwrap();
                    break Some(path[pos..].to_vec());
                }
                Action::Forward(NodeId(next)) if color[next] == WHITE => current = next,
                _ => break None,
            }
        };
        for NodeId(n) in &path {
            color[*n] = BLACK;
        }
        if cycle.is_some() {
            return cycle;
        }
    }
    None
}

pub fn check_no_loop(net: &NetworkInstance) -> VerificationReport {
    ClassAnalysis::new(net).no_loop()
}

pub fn check_no_blackhole(net: &NetworkInstance) -> VerificationReport {
    ClassAnalysis::new(net).no_blackhole()
}

pub fn check_reachability(net: &NetworkInstance, from: NodeId, to: NodeId) -> VerificationReport {
    ClassAnalysis::new(net).reachability(from, to)
}

pub fn check_consistency(
    net: &NetworkInstance,
    u: NodeId,
    v: NodeId,
    strict_drops: bool,
) -> VerificationReport {
    ClassAnalysis::new(net).consistency(u, v, strict_drops)
}

/// A network plus its live completion, kept in sync under table edits.
/// Rule values are deduplicated across tables, so the completion changes
/// only when the first occurrence appears or the last occurrence goes.
pub struct UpdatableNetwork {
    net: NetworkInstance,
    completion: WeakCompletion,
    multiplicity: HashMap<HeaderSet, usize>,
}

impl UpdatableNetwork {
    pub fn new(net: NetworkInstance) -> UpdatableNetwork {
        let completion = WeakCompletion::build(&net.rule_collection());
        let mut multiplicity: HashMap<HeaderSet, usize> = HashMap::new();
        for node in net.node_ids() {
            for rule in net.table(node) {
                *multiplicity.entry(rule.match_set.clone()).or_default() += 1;
            }
        }
        UpdatableNetwork { net, completion, multiplicity }
    }

    pub fn network(&self) -> &NetworkInstance {
        &self.net
    }

    pub fn completion(&self) -> &WeakCompletion {
        &self.completion
    }

    /// Inserts a rule into a table (at `index`, or appended) and updates the
    /// completion incrementally.
    pub fn insert_rule(
        &mut self,
        node: NodeId,
        index: Option<usize>,
        rule: ForwardingRule,
    ) -> Result<(), NetworkError> {
        let index = index.unwrap_or(self.net.table(node).len());
        let match_set = rule.match_set.clone();
        self.net.insert_rule_at(node, index, rule)?;
        let count = self.multiplicity.entry(match_set.clone()).or_default();
        *count += 1;
        if *count == 1 {
            self.completion.insert_rule(&match_set)?;
        }
        Ok(())
    }

    /// Removes the first rule of the node's table whose match set equals
    /// `match_set`, updating the completion when the last occurrence of the
    /// value disappears.
    pub fn delete_rule(
        &mut self,
        node: NodeId,
        match_set: &HeaderSet,
    ) -> Result<(), NetworkError> {
        let index = self
            .net
            .table(node)
            .iter()
            .position(|rule| rule.match_set == *match_set)
            .ok_or_else(|| NetworkError::NoSuchRule {
                node: self.net.node_name(node).to_owned(),
                match_text: match_set.canonical_string(),
            })?;
        self.net.remove_rule_at(node, index)?;
        let count = self
            .multiplicity
            .get_mut(match_set)
            .expect("multiplicity tracked for every table rule");
        *count -= 1;
        if *count == 0 {
            self.multiplicity.remove(match_set);
            self.completion.delete_rule(match_set)?;
        }
        Ok(())
    }
}
