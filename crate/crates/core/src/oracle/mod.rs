//! Brute-force ground truth for small header lengths.
//!
//! Everything here enumerates all 2^ℓ headers directly: classes are grouped
//! by the exact set of rules each header matches, and network verdicts come
//! from per-header traces. Deliberately independent of the completion
//! machinery, so it can validate it.

pub mod gen;

use std::collections::BTreeSet;

use indexmap::IndexMap;

use crate::algebra::{RuleCollection, WeakCompletion};
use crate::count::BigCount;
use crate::headerset::HeaderSet;
use crate::network::{
    fates_equal, walk, Action, Fate, NetworkInstance, NodeId,
};

/// Hard cap on enumerable header lengths; 2^20 headers is where exhaustion
/// stops being the cheap option.
pub const ENUMERATION_CAP_BITS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("header length {bits} exceeds the enumeration cap of {cap} bits")]
    CapExceeded { bits: u32, cap: u32 },
}

fn check_cap(bits: u32) -> Result<(), OracleError> {
    if bits > ENUMERATION_CAP_BITS {
        Err(OracleError::CapExceeded { bits, cap: ENUMERATION_CAP_BITS })
    } else {
        Ok(())
    }
}

/// One header class: the rules its headers match (as indices into the
/// collection's iteration order) and the concrete headers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeaderClass {
    pub signature: BTreeSet<usize>,
    pub headers: Vec<u128>,
}

impl HeaderClass {
    pub fn size(&self) -> usize {
        self.headers.len()
    }
}

/// All header classes of a rule collection; sizes sum to 2^ℓ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassPartition {
    pub classes: Vec<HeaderClass>,
}

impl ClassPartition {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of(&self, signature: &BTreeSet<usize>) -> Option<&HeaderClass> {
        self.classes.iter().find(|c| c.signature == *signature)
    }
}

/// Groups every header by the exact set of rules it matches.
pub fn enumerate_classes(rules: &RuleCollection) -> Result<ClassPartition, OracleError> {
    let bits = rules.layout().total_width();
    check_cap(bits)?;
    let sets: Vec<&HeaderSet> = rules.iter().collect();
    let mut classes: IndexMap<BTreeSet<usize>, Vec<u128>> = IndexMap::new();
    for header in 0..(1u128 << bits) {
        let signature: BTreeSet<usize> = sets
            .iter()
            .enumerate()
            .filter(|(_, set)| set.contains_header(header))
            .map(|(i, _)| i)
            .collect();
        classes.entry(signature).or_default().push(header);
    }
    Ok(ClassPartition {
        classes: classes
            .into_iter()
            .map(|(signature, headers)| HeaderClass { signature, headers })
            .collect(),
    })
}

/// Outcome of checking a completion against enumerated classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletionValidation {
    pub valid: bool,
    /// Human-readable description of the first divergence.
    pub mismatch: Option<String>,
}

impl CompletionValidation {
    fn ok() -> CompletionValidation {
        CompletionValidation { valid: true, mismatch: None }
    }

    fn fail(mismatch: String) -> CompletionValidation {
        CompletionValidation { valid: false, mismatch: Some(mismatch) }
    }
}

/// Checks a completion exactly against brute force: member count equals the
/// class count, each member's atom (the member minus its strict sub-members)
/// is exactly one class, R(c) equals that class's signature, and the stored
/// atom cardinality equals the class size.
pub fn validate_completion(
    rules: &RuleCollection,
    completion: &WeakCompletion,
) -> Result<CompletionValidation, OracleError> {
    let bits = rules.layout().total_width();
    check_cap(bits)?;
    let partition = enumerate_classes(rules)?;

    // Members sorted by cardinality: the first member containing a header is
    // its atom representative.
    let mut members: Vec<&HeaderSet> = completion.member_sets().collect();
    members.sort_by_key(|m| (m.cardinality(), m.canonical_string()));

    if members.len() != partition.class_count() {
        return Ok(CompletionValidation::fail(format!(
            "completion has {} members but brute force finds {} classes",
            members.len(),
            partition.class_count()
        )));
    }

    let mut atom_headers: Vec<Vec<u128>> = vec![Vec::new(); members.len()];
    for header in 0..(1u128 << bits) {
        match members.iter().position(|m| m.contains_header(header)) {
            Some(idx) => atom_headers[idx].push(header),
            None => {
                return Ok(CompletionValidation::fail(format!(
                    "header {header:0width$b} is not covered by any member",
                    width = bits as usize
                )))
            }
        }
    }

    let mut used = vec![false; partition.class_count()];
    for (idx, member) in members.iter().enumerate() {
        let containing = completion
            .rules_containing(member)
            .expect("member belongs to the completion");
        let signature: BTreeSet<usize> = containing
            .iter()
            .map(|set| rules.index_of(set).expect("rule belongs to the collection"))
            .collect();
        let Some(class_pos) = partition
            .classes
            .iter()
            .position(|c| c.signature == signature)
        else {
            return Ok(CompletionValidation::fail(format!(
                "member {member} has matched-rule signature {signature:?} \
                 which is not a brute-force class"
            )));
        };
        if used[class_pos] {
            return Ok(CompletionValidation::fail(format!(
                "two members map to the class with signature {signature:?}"
            )));
        }
        used[class_pos] = true;
        let class = &partition.classes[class_pos];
        if atom_headers[idx] != class.headers {
            return Ok(CompletionValidation::fail(format!(
                "atom of member {member} has {} headers, class {signature:?} has {}",
                atom_headers[idx].len(),
                class.size()
            )));
        }
        let stored = completion
            .member_cards()
            .find(|(set, _)| *set == *member)
            .map(|(_, card)| card)
            .expect("member belongs to the completion");
        if stored != BigCount::from(class.size() as u64) {
            return Ok(CompletionValidation::fail(format!(
                "member {member} stores cardinality {stored}, class has {}",
                class.size()
            )));
        }
    }
    Ok(CompletionValidation::ok())
}

// Per-(header, node) actions packed into a u32 each; enumeration at the
// 20-bit cap over a few dozen nodes stays in tens of megabytes.
const ACT_DROP: u32 = u32::MAX;
const ACT_DELIVER: u32 = u32::MAX - 1;

/// Per-header, per-node first-match actions for a whole network, from which
/// all four task verdicts are derived by per-header walks.
pub struct ExhaustiveVerdicts {
    bits: u32,
    nodes: usize,
    actions: Vec<u32>,
}

impl ExhaustiveVerdicts {
    fn action(&self, header: u128, node: NodeId) -> Action {
        match self.actions[header as usize * self.nodes + node.0] {
            ACT_DROP => Action::Drop,
            ACT_DELIVER => Action::Deliver,
            target => Action::Forward(NodeId(target as usize)),
        }
    }

    fn fate(&self, header: u128, node: NodeId) -> Fate {
        walk(|n| self.action(header, n), node).0
    }

    pub fn headers(&self) -> impl Iterator<Item = u128> {
        0..(1u128 << self.bits)
    }

    pub fn no_loop(&self) -> bool {
        self.headers().all(|h| {
            (0..self.nodes).all(|node| !matches!(self.fate(h, NodeId(node)), Fate::Loops))
        })
    }

    pub fn no_blackhole(&self) -> bool {
        self.headers().all(|h| {
            let mut any_drop = false;
            let mut any_active = false;
            for node in 0..self.nodes {
                match self.action(h, NodeId(node)) {
                    Action::Drop => any_drop = true,
                    _ => any_active = true,
                }
            }
            !(any_drop && any_active)
        })
    }

    pub fn reachability(&self, from: NodeId, to: NodeId) -> bool {
        self.headers().any(|h| {
            let (_, path) = walk(|node| self.action(h, node), from);
            path.contains(&to)
        })
    }

    pub fn consistency(&self, u: NodeId, v: NodeId, strict_drops: bool) -> bool {
        self.headers().all(|h| fates_equal(self.fate(h, u), self.fate(h, v), strict_drops))
    }
}

/// Ground-truth verdicts by simulating every (header, node) pair.
pub fn exhaustive_verify(net: &NetworkInstance) -> Result<ExhaustiveVerdicts, OracleError> {
    let bits = net.layout().total_width();
    check_cap(bits)?;
    let nodes = net.node_count();
    let header_count = 1usize << bits;
    let mut actions = Vec::with_capacity(header_count * nodes);
    for header in 0..header_count as u128 {
        for node in net.node_ids() {
            let action = net
                .table(node)
                .iter()
                .find(|rule| rule.match_set.contains_header(header))
                .map(|rule| rule.action)
                .unwrap_or(Action::Drop);
            actions.push(match action {
                Action::Drop => ACT_DROP,
                Action::Deliver => ACT_DELIVER,
                Action::Forward(NodeId(target)) => target as u32,
            });
        }
    }
    Ok(ExhaustiveVerdicts { bits, nodes, actions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::headerset::HeaderLayout;
    use crate::network::ForwardingRule;
    use std::sync::Arc;

    fn mask(layout: &Arc<HeaderLayout>, text: &str) -> HeaderSet {
        HeaderSet::parse(layout, [("dst", text)]).unwrap()
    }

    #[test]
    fn enumerate_two_rule_example() {
        let layout = HeaderLayout::single_mask("dst", 2);
        let rules = RuleCollection::from_sets(
            Arc::clone(&layout),
            [mask(&layout, "0*"), mask(&layout, "*0")],
        )
        .unwrap();
        let partition = enumerate_classes(&rules).unwrap();
        assert_eq!(partition.class_count(), 4);
        let class = |sig: &[usize]| {
            partition
                .class_of(&sig.iter().copied().collect())
                .unwrap_or_else(|| panic!("missing class {sig:?}"))
        };
        assert_eq!(class(&[0, 1]).headers, vec![0b00]);
        assert_eq!(class(&[0]).headers, vec![0b01]);
        assert_eq!(class(&[1]).headers, vec![0b10]);
        assert_eq!(class(&[]).headers, vec![0b11]);
        let total: usize = partition.classes.iter().map(HeaderClass::size).sum();
        assert_eq!(total, 4);
    }

    #[test]
    fn enumerate_empty_collection() {
        let layout = HeaderLayout::single_mask("dst", 3);
        let rules = RuleCollection::new(Arc::clone(&layout));
        let partition = enumerate_classes(&rules).unwrap();
        assert_eq!(partition.class_count(), 1);
        assert_eq!(partition.classes[0].size(), 8);
    }

    #[test]
    fn enumerate_shifted_ranges() {
        let layout = HeaderLayout::single_range("dst", 4);
        let rules = RuleCollection::from_sets(
            Arc::clone(&layout),
            (1u32..=3).map(|i| {
                HeaderSet::parse(&layout, [("dst", format!("{}-{}", i, i + 3).as_str())])
                    .unwrap()
            }),
        )
        .unwrap();
        let partition = enumerate_classes(&rules).unwrap();
        assert_eq!(partition.class_count(), 6);
    }

    #[test]
    fn cap_enforced() {
        let layout = HeaderLayout::single_mask("dst", 24);
        let rules = RuleCollection::new(Arc::clone(&layout));
        assert_eq!(
            enumerate_classes(&rules),
            Err(OracleError::CapExceeded { bits: 24, cap: ENUMERATION_CAP_BITS })
        );
    }

    #[test]
    fn validates_correct_completion() {
        let layout = HeaderLayout::single_mask("dst", 2);
        let rules = RuleCollection::from_sets(
            Arc::clone(&layout),
            [mask(&layout, "0*"), mask(&layout, "*0")],
        )
        .unwrap();
        let completion = WeakCompletion::build(&rules);
        let validation = validate_completion(&rules, &completion).unwrap();
        assert!(validation.valid, "{:?}", validation.mismatch);
    }

    #[test]
    fn flags_member_removed() {
        let layout = HeaderLayout::single_mask("dst", 2);
        let rules = RuleCollection::from_sets(
            Arc::clone(&layout),
            [mask(&layout, "0*"), mask(&layout, "*0")],
        )
        .unwrap();
        // A completion of a smaller collection misses members.
        let smaller = RuleCollection::from_sets(
            Arc::clone(&layout),
            [mask(&layout, "0*")],
        )
        .unwrap();
        let wrong = WeakCompletion::build(&smaller);
        let validation = validate_completion(&rules, &wrong).unwrap();
        assert!(!validation.valid);
    }

    #[test]
    fn trace_agrees_with_class_fates() {
        // Per-header trace fates equal the fate read off the class graph of
        // the header's atom, for every (header, node) pair.
        use crate::network::{trace, ClassAnalysis};
        use crate::oracle::gen::{self, LayoutFlavor, NetworkParams};
        for seed in 0..10u64 {
            let mut rng = gen::rng(seed);
            let layout = gen::layout(LayoutFlavor::SingleMask { width: 6 });
            let net = gen::random_network(
                &mut rng,
                &layout,
                NetworkParams {
                    nodes: 4,
                    extra_links: 2,
                    max_rules_per_table: 3,
                    wildcard_density: 0.5,
                },
            );
            let analysis = ClassAnalysis::new(&net);
            let mut graphs: Vec<&crate::network::ClassGraph> =
                analysis.class_graphs().iter().collect();
            graphs.sort_by_key(|g| g.representative.cardinality());
            for header in 0..(1u128 << 6) {
                // The atom representative is the minimal member containing
                // the header.
                let graph = graphs
                    .iter()
                    .find(|g| g.representative.contains_header(header))
                    .expect("members cover H");
                let singleton = HeaderSet::singleton(net.layout(), header);
                for node in net.node_ids() {
                    let (traced, _) = trace(&net, &singleton, node).unwrap();
                    let (classed, _) = analysis.class_fate(graph, node);
                    assert_eq!(
                        traced, classed,
                        "seed {seed}, header {header:06b}, node {node:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn exhaustive_verdicts_examples() {
        let layout = HeaderLayout::single_mask("dst", 2);

        let mut looping = NetworkInstance::new(Arc::clone(&layout));
        let u = looping.add_node("u").unwrap();
        let v = looping.add_node("v").unwrap();
        looping.add_link(u, v).unwrap();
        looping
            .add_rule(u, ForwardingRule { match_set: mask(&layout, "**"), action: Action::Forward(v) })
            .unwrap();
        looping
            .add_rule(v, ForwardingRule { match_set: mask(&layout, "**"), action: Action::Forward(u) })
            .unwrap();
        let verdicts = exhaustive_verify(&looping).unwrap();
        assert!(!verdicts.no_loop());
        assert!(verdicts.no_blackhole());
        assert!(verdicts.reachability(u, v));
        assert!(verdicts.consistency(u, v, false));

        let mut all_drop = NetworkInstance::new(Arc::clone(&layout));
        all_drop.add_node("u").unwrap();
        all_drop.add_node("v").unwrap();
        let verdicts = exhaustive_verify(&all_drop).unwrap();
        assert!(verdicts.no_loop());
        assert!(verdicts.no_blackhole());

        // The §-style blackhole network: u forwards 0* to v, v delivers all.
        let mut bh = NetworkInstance::new(Arc::clone(&layout));
        let u = bh.add_node("u").unwrap();
        let v = bh.add_node("v").unwrap();
        bh.add_link(u, v).unwrap();
        bh.add_rule(u, ForwardingRule { match_set: mask(&layout, "0*"), action: Action::Forward(v) })
            .unwrap();
        bh.add_rule(v, ForwardingRule { match_set: mask(&layout, "**"), action: Action::Deliver })
            .unwrap();
        let verdicts = exhaustive_verify(&bh).unwrap();
        assert!(!verdicts.no_blackhole());
        assert!(verdicts.no_loop());
    }
}
