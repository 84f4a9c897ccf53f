//! Seeded random instances for tests and the oracle harness.
//!
//! All generators draw from a [`GenRng`] created from an explicit seed, so
//! every failure can be reproduced from the seed and parameters alone.

use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::algebra::RuleCollection;
use crate::headerset::{FieldKind, FieldSpec, HeaderLayout, HeaderSet};
use crate::network::{Action, ForwardingRule, NetworkInstance, NodeId};

pub type GenRng = ChaCha8Rng;

pub fn rng(seed: u64) -> GenRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The layout families exercised by the test corpus.
#[derive(Clone, Copy, Debug)]
pub enum LayoutFlavor {
    SingleMask { width: u32 },
    SingleRange { width: u32 },
    /// Two fields: a mask and a range, splitting the width.
    MaskRangeProduct { mask_width: u32, range_width: u32 },
}

pub fn layout(flavor: LayoutFlavor) -> Arc<HeaderLayout> {
    let fields = match flavor {
        LayoutFlavor::SingleMask { width } => vec![FieldSpec::mask("dst", width)],
        LayoutFlavor::SingleRange { width } => vec![FieldSpec::range("dst", width)],
        LayoutFlavor::MaskRangeProduct { mask_width, range_width } => vec![
            FieldSpec::mask("dst", mask_width),
            FieldSpec::range("port", range_width),
        ],
    };
    Arc::new(HeaderLayout::new(fields).expect("generator layouts are valid"))
}

/// A random non-empty set: each mask bit is a wildcard with probability
/// `wildcard_density`, ranges are random non-empty intervals.
pub fn random_set(rng: &mut GenRng, layout: &Arc<HeaderLayout>, wildcard_density: f64) -> HeaderSet {
    let constraints: Vec<(String, String)> = layout
        .fields()
        .iter()
        .map(|field| {
            let text = match field.kind {
                FieldKind::Mask => (0..field.width)
                    .map(|_| {
                        if rng.gen_bool(wildcard_density) {
                            '*'
                        } else if rng.gen_bool(0.5) {
                            '1'
                        } else {
                            '0'
                        }
                    })
                    .collect::<String>(),
                FieldKind::Range => {
                    let max = if field.width >= 128 {
                        u128::MAX
                    } else {
                        (1u128 << field.width) - 1
                    };
                    let a = rng.gen_range(0..=max);
                    let b = rng.gen_range(0..=max);
                    format!("{}-{}", a.min(b), a.max(b))
                }
            };
            (field.name.clone(), text)
        })
        .collect();
    HeaderSet::parse(layout, constraints.iter().map(|(n, t)| (n.as_str(), t.as_str())))
        .expect("generated constraints are valid")
}

/// Up to `n` random rules (duplicates collapse).
pub fn random_rules(
    rng: &mut GenRng,
    layout: &Arc<HeaderLayout>,
    n: usize,
    wildcard_density: f64,
) -> RuleCollection {
    let mut rules = RuleCollection::new(Arc::clone(layout));
    for _ in 0..n {
        rules
            .insert(random_set(rng, layout, wildcard_density))
            .expect("generated sets are non-empty");
    }
    rules
}

#[derive(Clone, Copy, Debug)]
pub struct NetworkParams {
    pub nodes: usize,
    /// Links beyond the random spanning tree (which keeps the graph connected).
    pub extra_links: usize,
    pub max_rules_per_table: usize,
    pub wildcard_density: f64,
}

impl Default for NetworkParams {
    fn default() -> NetworkParams {
        NetworkParams {
            nodes: 4,
            extra_links: 2,
            max_rules_per_table: 3,
            wildcard_density: 0.5,
        }
    }
}

/// A random connected network: spanning tree plus extra links, and random
/// tables mixing forward/drop/deliver actions.
pub fn random_network(
    rng: &mut GenRng,
    layout: &Arc<HeaderLayout>,
    params: NetworkParams,
) -> NetworkInstance {
    let mut net = NetworkInstance::new(Arc::clone(layout));
    for i in 0..params.nodes {
        net.add_node(format!("n{i}")).unwrap();
    }
    for i in 1..params.nodes {
        let parent = NodeId(rng.gen_range(0..i));
        net.add_link(NodeId(i), parent).unwrap();
    }
    for _ in 0..params.extra_links {
        if params.nodes < 2 {
            break;
        }
        let a = rng.gen_range(0..params.nodes);
        let b = rng.gen_range(0..params.nodes);
        if a != b {
            net.add_link(NodeId(a), NodeId(b)).unwrap();
        }
    }
    for node in 0..params.nodes {
        let node = NodeId(node);
        let neighbors: Vec<NodeId> = net.neighbors(node).collect();
        let rules = rng.gen_range(0..=params.max_rules_per_table);
        for _ in 0..rules {
            let match_set = random_set(rng, layout, params.wildcard_density);
            let action = match rng.gen_range(0..4) {
                0 | 1 if !neighbors.is_empty() => {
                    Action::Forward(*neighbors.choose(rng).unwrap())
                }
                2 => Action::Deliver,
                _ => Action::Drop,
            };
            net.add_rule(node, ForwardingRule { match_set, action }).unwrap();
        }
    }
    net
}

#[derive(Clone, Copy, Debug)]
pub struct HierarchicalParams {
    pub nodes: usize,
    /// Mask width of the single field; prefix lengths stay within it.
    pub width: u32,
    /// Probability of adding a more-specific drop/deliver rule per node.
    pub junk_probability: f64,
    /// Probability of wiring a same-value forwarding cycle into the network.
    pub loop_probability: f64,
}

impl Default for HierarchicalParams {
    fn default() -> HierarchicalParams {
        HierarchicalParams { nodes: 5, width: 8, junk_probability: 0.5, loop_probability: 0.3 }
    }
}

/// A hierarchical, MORE-SPECIFIC network: a routing tree where every table
/// matches nested prefixes of one destination address, more specific first,
/// and prefixes lengthen toward the delivering root. With probability
/// `loop_probability` a forwarding cycle on a single disjoint rule value is
/// wired in, which makes the network loop without breaking MORE-SPECIFIC.
pub fn hierarchical_network(
    rng: &mut GenRng,
    params: HierarchicalParams,
) -> NetworkInstance {
    let width = params.width;
    let layout = layout(LayoutFlavor::SingleMask { width });
    let mut net = NetworkInstance::new(Arc::clone(&layout));
    for i in 0..params.nodes {
        net.add_node(format!("n{i}")).unwrap();
    }
    let mut parent = vec![NodeId(0); params.nodes];
    let mut depth = vec![0usize; params.nodes];
    for i in 1..params.nodes {
        let p = NodeId(rng.gen_range(0..i));
        net.add_link(NodeId(i), p).unwrap();
        parent[i] = p;
        depth[i] = depth[p.0] + 1;
    }
    let max_depth = depth.iter().copied().max().unwrap_or(0) as u32;

    // Destination address in the 0-half of the space; node at depth d uses
    // the prefix of length base - d, so applied rules shrink toward the root.
    debug_assert!(width >= 2);
    let address: u128 = rng.gen_range(0..(1u128 << (width - 1)));
    let min_base = (max_depth + 1).min(width - 1);
    let base = rng.gen_range(min_base..=width - 1);
    let prefix = |len: u32| -> HeaderSet {
        let text: String = (0..width)
            .map(|bit| {
                if bit < len {
                    if address >> (width - 1 - bit) & 1 == 1 {
                        '1'
                    } else {
                        '0'
                    }
                } else {
                    '*'
                }
            })
            .collect();
        HeaderSet::parse(&layout, [("dst", text.as_str())]).unwrap()
    };

    // Per-node staged rules as (specificity, rule); longer prefixes first.
    let mut staged: Vec<Vec<(u32, ForwardingRule)>> = vec![Vec::new(); params.nodes];
    for i in 0..params.nodes {
        let len = base.saturating_sub(depth[i] as u32).max(1);
        let action = if i == 0 { Action::Deliver } else { Action::Forward(parent[i]) };
        staged[i].push((len, ForwardingRule { match_set: prefix(len), action }));
        if rng.gen_bool(params.junk_probability) && len < width {
            let junk_len = rng.gen_range(len + 1..=width);
            let action = if rng.gen_bool(0.5) { Action::Drop } else { Action::Deliver };
            staged[i].push((junk_len, ForwardingRule { match_set: prefix(junk_len), action }));
        }
    }

    // Optional loop: a cycle of nodes forwarding one shared rule value in
    // the 1-half of the space, disjoint from everything above.
    if params.nodes >= 2 && rng.gen_bool(params.loop_probability) {
        let size = rng.gen_range(2..=params.nodes.min(4));
        let mut cycle: Vec<usize> = (0..params.nodes).collect();
        cycle.shuffle(rng);
        cycle.truncate(size);
        let loop_len = rng.gen_range(1..=width);
        let loop_bits: u128 = (1 << (width - 1)) | rng.gen_range(0..(1u128 << (width - 1)));
        let loop_set = {
            let text: String = (0..width)
                .map(|bit| {
                    if bit < loop_len {
                        if loop_bits >> (width - 1 - bit) & 1 == 1 {
                            '1'
                        } else {
                            '0'
                        }
                    } else {
                        '*'
                    }
                })
                .collect();
            HeaderSet::parse(&layout, [("dst", text.as_str())]).unwrap()
        };
        for pos in 0..size {
            let here = cycle[pos];
            let next = cycle[(pos + 1) % size];
            net.add_link(NodeId(here), NodeId(next)).ok();
            staged[here].push((
                loop_len,
                ForwardingRule { match_set: loop_set.clone(), action: Action::Forward(NodeId(next)) },
            ));
        }
    }

    for (i, mut rules) in staged.into_iter().enumerate() {
        rules.sort_by_key(|(len, _)| std::cmp::Reverse(*len));
        for (_, rule) in rules {
            net.add_rule(NodeId(i), rule).unwrap();
        }
    }
    net
}

/// A random table edit, used by the incremental-update harness.
#[derive(Clone, Debug)]
pub enum RuleEdit {
    Insert { node: NodeId, index: Option<usize>, rule: ForwardingRule },
    Delete { node: NodeId, match_set: HeaderSet },
}

/// A script of random inserts and deletes against an existing network.
/// Deletes always reference a live rule; inserts draw fresh random sets or
/// reuse existing values to exercise the multiplicity tracking.
pub fn random_edit_script(
    rng: &mut GenRng,
    net: &NetworkInstance,
    count: usize,
    wildcard_density: f64,
) -> Vec<RuleEdit> {
    let layout = Arc::clone(net.layout());
    let mut tables: Vec<Vec<HeaderSet>> = net
        .node_ids()
        .map(|n| net.table(n).iter().map(|r| r.match_set.clone()).collect())
        .collect();
    let mut edits = Vec::with_capacity(count);
    for _ in 0..count {
        let occupied: Vec<usize> =
            (0..tables.len()).filter(|n| !tables[*n].is_empty()).collect();
        let delete = !occupied.is_empty() && rng.gen_bool(0.4);
        if delete {
            let node = *occupied.choose(rng).unwrap();
            let pos = rng.gen_range(0..tables[node].len());
            let match_set = tables[node].remove(pos);
            edits.push(RuleEdit::Delete { node: NodeId(node), match_set });
        } else {
            let node = rng.gen_range(0..tables.len());
            let reuse = tables.iter().flatten().collect::<Vec<_>>();
            let match_set = if !reuse.is_empty() && rng.gen_bool(0.3) {
                (*reuse.choose(rng).unwrap()).clone()
            } else {
                random_set(rng, &layout, wildcard_density)
            };
            let neighbors: Vec<NodeId> = net.neighbors(NodeId(node)).collect();
            let action = match rng.gen_range(0..4) {
                0 | 1 if !neighbors.is_empty() => {
                    Action::Forward(*neighbors.choose(rng).unwrap())
                }
                2 => Action::Deliver,
                _ => Action::Drop,
            };
            let index = if tables[node].is_empty() {
                None
            } else {
                Some(rng.gen_range(0..=tables[node].len()))
            };
            match index {
                Some(i) => tables[node].insert(i, match_set.clone()),
                None => tables[node].push(match_set.clone()),
            }
            edits.push(RuleEdit::Insert {
                node: NodeId(node),
                index,
                rule: ForwardingRule { match_set, action },
            });
        }
    }
    edits
}
