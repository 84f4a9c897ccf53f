//! Minimal weak completion of a rule collection.
//!
//! A collection is weakly complete when the universe is the union of its
//! members and every pairwise intersection of members is the union of the
//! members it contains. The minimal weak completion of a rule collection is
//! unique, and its members are exactly one representative set per header
//! class (atom): a rule contains the class iff it contains the member. This
//! module builds that completion one rule at a time, maintains it under rule
//! deletion, and derives atom cardinalities with the subtraction recurrence
//! `|a(c)| = |c| - Σ |a(c')| over strict sub-members c'`.
//!
//! Everything here runs on intersections, inclusion tests and cardinalities
//! alone; no set differences are ever computed.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use indexmap::{IndexMap, IndexSet};

use crate::count::{BigCount, SignedCount};
use crate::headerset::{HeaderLayout, HeaderSet, LayoutMismatch};

/// Identifier of a distinct rule value within one [`WeakCompletion`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(u32);

/// Identifier of a completion member. Ids are not reused while the member
/// is alive but may be recycled after removal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MemberId(u32);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlgebraError {
    #[error("rules must be non-empty header sets")]
    EmptyRule,
    #[error(transparent)]
    LayoutMismatch(#[from] LayoutMismatch),
    #[error("unknown rule {0}")]
    UnknownRule(String),
    #[error("duplicate member {0}")]
    DuplicateMember(String),
    #[error("collection is not weakly complete: atom cardinality of {0} is negative")]
    NotWeaklyComplete(String),
}

/// The deduplicated set of rule values under verification.
#[derive(Debug, Clone)]
pub struct RuleCollection {
    layout: Arc<HeaderLayout>,
    rules: IndexSet<HeaderSet>,
}

impl RuleCollection {
    pub fn new(layout: Arc<HeaderLayout>) -> RuleCollection {
        RuleCollection { layout, rules: IndexSet::new() }
    }

    pub fn from_sets<I>(layout: Arc<HeaderLayout>, sets: I) -> Result<RuleCollection, AlgebraError>
    where
        I: IntoIterator<Item = HeaderSet>,
    {
        let mut collection = RuleCollection::new(layout);
        for set in sets {
            collection.insert(set)?;
        }
        Ok(collection)
    }

    /// Adds a rule value; returns `false` if it was already present.
    pub fn insert(&mut self, set: HeaderSet) -> Result<bool, AlgebraError> {
        if set.is_empty() {
            return Err(AlgebraError::EmptyRule);
        }
        if **set.layout() != *self.layout {
            return Err(AlgebraError::LayoutMismatch(LayoutMismatch));
        }
        Ok(self.rules.insert(set))
    }

    pub fn layout(&self) -> &Arc<HeaderLayout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn contains(&self, set: &HeaderSet) -> bool {
        self.rules.contains(set)
    }

    /// Position of a rule value in iteration order.
    pub fn index_of(&self, set: &HeaderSet) -> Option<usize> {
        self.rules.get_index_of(set)
    }

    pub fn iter(&self) -> impl Iterator<Item = &HeaderSet> {
        self.rules.iter()
    }
}

#[derive(Debug, Clone)]
struct RuleState {
    set: HeaderSet,
    /// C(r): members whose defining intersection includes this rule.
    combos: BTreeSet<MemberId>,
}

#[derive(Debug, Clone)]
struct MemberState {
    set: HeaderSet,
    /// R(c): all rules containing this member.
    rules: BTreeSet<RuleId>,
    atom_card: BigCount,
}

/// One entry of an [`AtomReport`]: a representative set, the exact size of
/// its atom, and the rules matched by every header of the atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomEntry {
    pub representative: HeaderSet,
    pub cardinality: BigCount,
    pub matched_rules: Vec<HeaderSet>,
}

/// The atoms of a rule collection, one entry per class, sorted canonically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomReport {
    pub atoms: Vec<AtomEntry>,
}

/// The minimal weak completion of a rule collection, with per-member atom
/// cardinalities and the R(c)/C(r) bookkeeping used by incremental updates.
///
/// Reads are safe to share; `insert_rule`/`delete_rule` take `&mut self` and
/// leave the structure consistent before returning.
#[derive(Debug, Clone)]
pub struct WeakCompletion {
    layout: Arc<HeaderLayout>,
    rules: Vec<Option<RuleState>>,
    rule_ids: HashMap<HeaderSet, RuleId>,
    free_rules: Vec<RuleId>,
    members: Vec<Option<MemberState>>,
    member_ids: HashMap<HeaderSet, MemberId>,
    free_members: Vec<MemberId>,
}

impl WeakCompletion {
    /// Completion of the empty collection: the single member `H`.
    pub fn new(layout: Arc<HeaderLayout>) -> WeakCompletion {
        let universe = HeaderSet::universe(&layout);
        let card = universe.cardinality();
        let mut completion = WeakCompletion {
            layout,
            rules: Vec::new(),
            rule_ids: HashMap::new(),
            free_rules: Vec::new(),
            members: Vec::new(),
            member_ids: HashMap::new(),
            free_members: Vec::new(),
        };
        completion.alloc_member(universe, BTreeSet::new(), card);
        completion
    }

    /// Builds the minimal weak completion of `rules` by inserting each rule
    /// in turn. The result is independent of the iteration order.
    pub fn build(rules: &RuleCollection) -> WeakCompletion {
        let mut completion = WeakCompletion::new(Arc::clone(rules.layout()));
        for rule in rules.iter() {
            completion.insert_rule(rule).expect("collection rules are valid");
        }
        completion
    }

    pub fn layout(&self) -> &Arc<HeaderLayout> {
        &self.layout
    }

    /// Number of members, which equals the number of atoms.
    pub fn atom_count(&self) -> usize {
        self.members.iter().flatten().count()
    }

    pub fn rule_count(&self) -> usize {
        self.rule_ids.len()
    }

    pub fn rule_id(&self, set: &HeaderSet) -> Option<RuleId> {
        self.rule_ids.get(set).copied()
    }

    pub fn rule_set(&self, id: RuleId) -> Option<&HeaderSet> {
        self.rules.get(id.0 as usize)?.as_ref().map(|r| &r.set)
    }

    pub fn contains_member(&self, set: &HeaderSet) -> bool {
        self.member_ids.contains_key(set)
    }

    /// Member sets in deterministic (allocation) order.
    pub fn member_sets(&self) -> impl Iterator<Item = &HeaderSet> {
        self.members.iter().flatten().map(|m| &m.set)
    }

    /// (member set, atom cardinality) pairs.
    pub fn member_cards(&self) -> impl Iterator<Item = (&HeaderSet, BigCount)> {
        self.members.iter().flatten().map(|m| (&m.set, m.atom_card))
    }

    /// R(c) for a member, as rule values.
    pub fn rules_containing(&self, member: &HeaderSet) -> Option<Vec<&HeaderSet>> {
        let id = self.member_ids.get(member)?;
        let state = self.member(*id);
        Some(state.rules.iter().map(|r| &self.rule(*r).set).collect())
    }

    fn member(&self, id: MemberId) -> &MemberState {
        self.members[id.0 as usize].as_ref().expect("live member")
    }

    fn rule(&self, id: RuleId) -> &RuleState {
        self.rules[id.0 as usize].as_ref().expect("live rule")
    }

    fn live_member_ids(&self) -> Vec<MemberId> {
        (0..self.members.len() as u32)
            .map(MemberId)
            .filter(|id| self.members[id.0 as usize].is_some())
            .collect()
    }

    fn alloc_member(
        &mut self,
        set: HeaderSet,
        rules: BTreeSet<RuleId>,
        atom_card: BigCount,
    ) -> MemberId {
        debug_assert!(!self.member_ids.contains_key(&set));
        let id = match self.free_members.pop() {
            Some(id) => id,
            None => {
                self.members.push(None);
                MemberId(self.members.len() as u32 - 1)
            }
        };
        for rule in &rules {
            self.rules[rule.0 as usize]
                .as_mut()
                .expect("live rule")
                .combos
                .insert(id);
        }
        self.member_ids.insert(set.clone(), id);
        self.members[id.0 as usize] = Some(MemberState { set, rules, atom_card });
        id
    }

    fn remove_member(&mut self, id: MemberId) {
        let state = self.members[id.0 as usize].take().expect("live member");
        self.member_ids.remove(&state.set);
        for rule in &state.rules {
            if let Some(r) = self.rules[rule.0 as usize].as_mut() {
                r.combos.remove(&id);
            }
        }
        self.free_members.push(id);
    }

    /// Inserts a rule value. Inserting a value already present is a no-op
    /// (rules are deduplicated by set value). The result equals a fresh
    /// build over the extended collection.
    pub fn insert_rule(&mut self, rule: &HeaderSet) -> Result<RuleId, AlgebraError> {
        if rule.is_empty() {
            return Err(AlgebraError::EmptyRule);
        }
        if **rule.layout() != *self.layout {
            return Err(AlgebraError::LayoutMismatch(LayoutMismatch));
        }
        if let Some(&id) = self.rule_ids.get(rule) {
            return Ok(id);
        }
        let rid = match self.free_rules.pop() {
            Some(id) => id,
            None => {
                self.rules.push(None);
                RuleId(self.rules.len() as u32 - 1)
            }
        };
        self.rules[rid.0 as usize] =
            Some(RuleState { set: rule.clone(), combos: BTreeSet::new() });
        self.rule_ids.insert(rule.clone(), rid);

        // Intersect the new rule with every current member. Merging the R
        // sets of all members producing the same intersection yields exactly
        // the rules containing the new member.
        let snapshot = self.live_member_ids();
        let mut staged: IndexMap<HeaderSet, BTreeSet<RuleId>> = IndexMap::new();
        for mid in snapshot {
            let state = self.member(mid);
            let cut = state.set.intersect(rule).expect("same layout");
            if cut.is_empty() {
                continue;
            }
            staged.entry(cut).or_default().extend(state.rules.iter().copied());
        }
        for (set, mut containing) in staged {
            containing.insert(rid);
            match self.member_ids.get(&set) {
                Some(&mid) => {
                    // Existing member included in the new rule: R(c) gains r.
                    debug_assert!(containing.is_superset(&self.member(mid).rules));
                    self.members[mid.0 as usize]
                        .as_mut()
                        .expect("live member")
                        .rules
                        .insert(rid);
                    self.rules[rid.0 as usize]
                        .as_mut()
                        .expect("live rule")
                        .combos
                        .insert(mid);
                }
                None => {
                    self.alloc_member(set, containing, BigCount::ZERO);
                }
            }
        }
        self.refresh_atom_cards();
        Ok(rid)
    }

    /// Deletes a rule value. Every member whose defining intersection used
    /// the rule is replaced by the intersection of its remaining rules
    /// (`H` for the empty intersection); members collapsing to the same set
    /// merge their R lists. The result equals a fresh build without the rule.
    pub fn delete_rule(&mut self, rule: &HeaderSet) -> Result<(), AlgebraError> {
        let rid = self
            .rule_ids
            .remove(rule)
            .ok_or_else(|| AlgebraError::UnknownRule(rule.canonical_string()))?;
        let state = self.rules[rid.0 as usize].take().expect("live rule");
        self.free_rules.push(rid);

        for mid in state.combos {
            let member = self.members[mid.0 as usize].as_mut().expect("live member");
            member.rules.remove(&rid);
            let remaining = member.rules.clone();
            let replacement = remaining
                .iter()
                .fold(HeaderSet::universe(&self.layout), |acc, r| {
                    acc.intersect(&self.rule(*r).set).expect("same layout")
                });
            let old_set = self.member(mid).set.clone();
            if replacement == old_set {
                continue;
            }
            self.member_ids.remove(&old_set);
            match self.member_ids.get(&replacement) {
                Some(&target) => {
                    // Two members collapsed to one set: union their R lists.
                    let moved = self.members[mid.0 as usize].take().expect("live member");
                    self.free_members.push(mid);
                    for r in &moved.rules {
                        if let Some(rs) = self.rules[r.0 as usize].as_mut() {
                            rs.combos.remove(&mid);
                            rs.combos.insert(target);
                        }
                    }
                    self.members[target.0 as usize]
                        .as_mut()
                        .expect("live member")
                        .rules
                        .extend(moved.rules);
                }
                None => {
                    self.member_ids.insert(replacement.clone(), mid);
                    self.members[mid.0 as usize].as_mut().expect("live member").set =
                        replacement;
                }
            }
        }
        self.refresh_atom_cards();
        Ok(())
    }

    /// Recomputes every |a(c)| and drops members whose atom became empty.
    fn refresh_atom_cards(&mut self) {
        let live = self.live_member_ids();
        let sets: Vec<&HeaderSet> = live.iter().map(|id| &self.member(*id).set).collect();
        let cards = atom_dp(&sets);
        let mut dead = Vec::new();
        let mut computed = Vec::with_capacity(live.len());
        for (mid, card) in live.iter().zip(cards) {
            let card = card
                .to_unsigned()
                .expect("completion invariant: atom cardinalities are non-negative");
            if card.is_zero() {
                dead.push(*mid);
            } else {
                computed.push((*mid, card));
            }
        }
        for (mid, card) in computed {
            self.members[mid.0 as usize].as_mut().expect("live member").atom_card = card;
        }
        for mid in dead {
            self.remove_member(mid);
        }
    }

    /// The optimal representative collection: one entry per atom with the
    /// atom size and the rules matched by every header of the atom.
    pub fn representatives(&self) -> AtomReport {
        let mut atoms: Vec<AtomEntry> = self
            .members
            .iter()
            .flatten()
            .map(|m| {
                let mut matched: Vec<HeaderSet> =
                    m.rules.iter().map(|r| self.rule(*r).set.clone()).collect();
                matched.sort();
                AtomEntry {
                    representative: m.set.clone(),
                    cardinality: m.atom_card,
                    matched_rules: matched,
                }
            })
            .collect();
        atoms.sort_by(|a, b| a.representative.cmp(&b.representative));
        AtomReport { atoms }
    }

    /// Structural consistency check used by tests: bookkeeping links agree,
    /// every member is the intersection of its R list, rules are covered,
    /// and atom cardinalities sum to 2^ℓ.
    pub fn self_check(&self) -> Result<(), String> {
        let mut total = BigCount::ZERO;
        for (idx, member) in self.members.iter().enumerate() {
            let Some(member) = member else { continue };
            let mid = MemberId(idx as u32);
            if self.member_ids.get(&member.set) != Some(&mid) {
                return Err(format!("member index out of sync for {}", member.set));
            }
            if member.atom_card.is_zero() {
                return Err(format!("member {} has an empty atom", member.set));
            }
            total += member.atom_card;
            let derived = member
                .rules
                .iter()
                .fold(HeaderSet::universe(&self.layout), |acc, r| {
                    acc.intersect(&self.rule(*r).set).expect("same layout")
                });
            if derived != member.set {
                return Err(format!(
                    "member {} is not the intersection of its rule list",
                    member.set
                ));
            }
            for (rid, rule) in self.rules.iter().enumerate() {
                let Some(rule) = rule else { continue };
                let contains = member.set.is_subset(&rule.set).expect("same layout");
                let listed = member.rules.contains(&RuleId(rid as u32));
                if contains != listed {
                    return Err(format!(
                        "R({}) disagrees with inclusion for rule {}",
                        member.set, rule.set
                    ));
                }
                if listed != rule.combos.contains(&mid) {
                    return Err(format!("C(r) out of sync for rule {}", rule.set));
                }
            }
        }
        let universe = BigCount::pow2(self.layout.total_width());
        if total != universe {
            return Err(format!("atom cardinalities sum to {total}, expected {universe}"));
        }
        for rule in self.rules.iter().flatten() {
            let covered: BigCount = self
                .members
                .iter()
                .flatten()
                .filter(|m| m.set.is_subset(&rule.set).expect("same layout"))
                .map(|m| m.atom_card)
                .sum();
            if covered != rule.set.cardinality() {
                return Err(format!("rule {} is not covered", rule.set));
            }
        }
        let members: Vec<HeaderSet> = self.member_sets().cloned().collect();
        let check = check_weak_completeness(&members);
        if !check.complete {
            return Err(format!("completion is not weakly complete: {:?}", check.violation));
        }
        Ok(())
    }

    /// Semantic equality of completion states: same members, cardinalities
    /// and R lists, regardless of internal id assignment.
    pub fn same_state(&self, other: &WeakCompletion) -> bool {
        if *self.layout != *other.layout || self.atom_count() != other.atom_count() {
            return false;
        }
        self.members.iter().flatten().all(|m| {
            let Some(&oid) = other.member_ids.get(&m.set) else { return false };
            let om = other.member(oid);
            if om.atom_card != m.atom_card {
                return false;
            }
            let mine: BTreeSet<&HeaderSet> =
                m.rules.iter().map(|r| &self.rule(*r).set).collect();
            let theirs: BTreeSet<&HeaderSet> =
                om.rules.iter().map(|r| &other.rule(*r).set).collect();
            mine == theirs
        })
    }
}

/// Atom-cardinality recurrence over an arbitrary duplicate-free family,
/// processed in cardinality order (a strict subset is strictly smaller, so
/// this is a topological order of the inclusion DAG). Values may be negative
/// when the family is not weakly complete.
fn atom_dp(sets: &[&HeaderSet]) -> Vec<SignedCount> {
    let mut order: Vec<(BigCount, usize)> =
        sets.iter().enumerate().map(|(i, s)| (s.cardinality(), i)).collect();
    order.sort();
    let mut cards = vec![SignedCount::ZERO; sets.len()];
    for (pos, &(card, i)) in order.iter().enumerate() {
        let mut acc = SignedCount::positive(card);
        for &(smaller_card, j) in &order[..pos] {
            if smaller_card == card {
                continue; // equal cardinality cannot be a strict subset
            }
            if sets[j].is_subset(sets[i]).expect("same layout") {
                acc = acc.sub(&cards[j]);
            }
        }
        cards[i] = acc;
    }
    cards
}

/// |a(c)| for every member of a weakly complete collection, in input order.
///
/// The caller is responsible for weak completeness (the recurrence is used
/// mid-build where it holds by construction); a violated precondition is
/// reported as an error when it surfaces as a negative cardinality.
pub fn atom_cardinalities(members: &[HeaderSet]) -> Result<Vec<BigCount>, AlgebraError> {
    let mut seen: IndexSet<&HeaderSet> = IndexSet::new();
    for set in members {
        if !seen.insert(set) {
            return Err(AlgebraError::DuplicateMember(set.canonical_string()));
        }
    }
    let refs: Vec<&HeaderSet> = members.iter().collect();
    atom_dp(&refs)
        .into_iter()
        .zip(members)
        .map(|(card, set)| {
            card.to_unsigned()
                .ok_or_else(|| AlgebraError::NotWeaklyComplete(set.canonical_string()))
        })
        .collect()
}

/// Precomputed a(·) values of a fixed collection, for coverage queries.
///
/// `covers` answers whether a target set equals the union of the collection
/// members it contains, by comparing `Σ_{x ⊆ target} a(x)` with the target
/// cardinality. Exact when the collection is weakly complete; callers check
/// that first.
pub struct CoverageChecker {
    sets: Vec<HeaderSet>,
    cards: Vec<SignedCount>,
}

impl CoverageChecker {
    pub fn new(members: &[HeaderSet]) -> CoverageChecker {
        let mut sets: Vec<HeaderSet> = Vec::new();
        let mut seen: IndexSet<&HeaderSet> = IndexSet::new();
        for set in members {
            if !set.is_empty() && seen.insert(set) {
                sets.push(set.clone());
            }
        }
        let refs: Vec<&HeaderSet> = sets.iter().collect();
        let cards = atom_dp(&refs);
        CoverageChecker { sets, cards }
    }

    pub fn covers(&self, target: &HeaderSet) -> bool {
        let mut sum = SignedCount::ZERO;
        for (set, card) in self.sets.iter().zip(&self.cards) {
            if set.is_subset(target).expect("same layout") {
                sum = sum.add(card);
            }
        }
        sum == SignedCount::positive(target.cardinality())
    }
}

/// Why a collection failed the weak-completeness check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompletenessViolation {
    /// The members do not union to the full header space.
    UniverseNotCovered,
    /// `left ∩ right` is not the union of the members it contains.
    UncoveredIntersection { left: HeaderSet, right: HeaderSet },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompletenessCheck {
    pub complete: bool,
    pub violation: Option<CompletenessViolation>,
}

impl CompletenessCheck {
    fn pass() -> CompletenessCheck {
        CompletenessCheck { complete: true, violation: None }
    }

    fn fail(violation: CompletenessViolation) -> CompletenessCheck {
        CompletenessCheck { complete: false, violation: Some(violation) }
    }
}

/// Tests whether a collection is weakly complete, by the cardinality-sum
/// technique: compute the a(·) values of the collection augmented with `H`
/// and compare `Σ_{x ⊆ c∩c'} a(x)` against `|c∩c'|` for every pair.
///
/// Empty sets and duplicates are ignored. Returns the first violating pair
/// in canonical order.
pub fn check_weak_completeness(members: &[HeaderSet]) -> CompletenessCheck {
    let mut sets: Vec<&HeaderSet> = Vec::new();
    let mut seen: IndexSet<&HeaderSet> = IndexSet::new();
    for set in members {
        if !set.is_empty() && seen.insert(set) {
            sets.push(set);
        }
    }
    let Some(first) = sets.first() else {
        return CompletenessCheck::fail(CompletenessViolation::UniverseNotCovered);
    };
    let layout = Arc::clone(first.layout());
    sets.sort();

    let universe = HeaderSet::universe(&layout);
    let has_universe = sets.iter().any(|s| **s == universe);
    let mut dp_sets = sets.clone();
    if !has_universe {
        dp_sets.push(&universe);
    }
    let cards = atom_dp(&dp_sets);

    if !has_universe && cards[dp_sets.len() - 1] != SignedCount::ZERO {
        return CompletenessCheck::fail(CompletenessViolation::UniverseNotCovered);
    }

    let member_count = sets.len();
    for i in 0..member_count {
        for j in (i + 1)..member_count {
            let (a, b) = (sets[i], sets[j]);
            // A pair where one side contains the other is covered trivially.
            if a.is_subset(b).expect("same layout") || b.is_subset(a).expect("same layout") {
                continue;
            }
            let cut = a.intersect(b).expect("same layout");
            if cut.is_empty() {
                continue;
            }
            let mut sum = SignedCount::ZERO;
            for (k, set) in sets.iter().enumerate() {
                if set.is_subset(&cut).expect("same layout") {
                    sum = sum.add(&cards[k]);
                }
            }
            if sum != SignedCount::positive(cut.cardinality()) {
                return CompletenessCheck::fail(CompletenessViolation::UncoveredIntersection {
                    left: a.clone(),
                    right: b.clone(),
                });
            }
        }
    }
    CompletenessCheck::pass()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::headerset::FieldSpec;
    use proptest::prelude::*;

    fn mask_layout(width: u32) -> Arc<HeaderLayout> {
        HeaderLayout::single_mask("dst", width)
    }

    fn mask(layout: &Arc<HeaderLayout>, text: &str) -> HeaderSet {
        HeaderSet::parse(layout, [("dst", text)]).unwrap()
    }

    fn range(layout: &Arc<HeaderLayout>, lo: u32, hi: u32) -> HeaderSet {
        HeaderSet::parse(layout, [("dst", format!("{lo}-{hi}").as_str())]).unwrap()
    }

    fn collection(layout: &Arc<HeaderLayout>, texts: &[&str]) -> RuleCollection {
        RuleCollection::from_sets(
            Arc::clone(layout),
            texts.iter().map(|t| mask(layout, t)),
        )
        .unwrap()
    }

    fn member_strings(completion: &WeakCompletion) -> Vec<String> {
        let mut out: Vec<String> =
            completion.member_sets().map(|s| s.canonical_string()).collect();
        out.sort();
        out
    }

    #[test]
    fn build_empty_collection() {
        let layout = mask_layout(2);
        let completion = WeakCompletion::build(&RuleCollection::new(Arc::clone(&layout)));
        assert_eq!(completion.atom_count(), 1);
        let (set, card) = completion.member_cards().next().unwrap();
        assert!(set.is_universe());
        assert_eq!(card, BigCount::from(4u64));
        completion.self_check().unwrap();
    }

    #[test]
    fn build_two_overlapping_masks() {
        let layout = mask_layout(2);
        let completion = WeakCompletion::build(&collection(&layout, &["0*", "*0"]));
        assert_eq!(
            member_strings(&completion),
            vec!["*", "dst=*0", "dst=0*", "dst=00"]
        );
        for (_, card) in completion.member_cards() {
            assert_eq!(card, BigCount::ONE);
        }
        completion.self_check().unwrap();
    }

    #[test]
    fn build_three_shifted_ranges() {
        // Atoms of {[1,4],[2,5],[3,6]} over a 4-bit range field:
        // {1},{2},{3,4},{5},{6} and the unmatched rest — six in total,
        // within the 2n+1 = 7 bound for ranges.
        let layout = HeaderLayout::single_range("dst", 4);
        let rules = RuleCollection::from_sets(
            Arc::clone(&layout),
            [range(&layout, 1, 4), range(&layout, 2, 5), range(&layout, 3, 6)],
        )
        .unwrap();
        let completion = WeakCompletion::build(&rules);
        assert_eq!(completion.atom_count(), 6);
        assert!(completion.atom_count() <= 2 * rules.len() + 1);
        // Each member is the intersection of the rules its atom matches:
        // H for {0,7..15}, [1,4] for {1}, [2,4] for {2}, [3,4] for {3,4},
        // [3,5] for {5}, [3,6] for {6}.
        let mut cards: Vec<(String, BigCount)> = completion
            .member_cards()
            .map(|(s, c)| (s.canonical_string(), c))
            .collect();
        cards.sort();
        assert_eq!(
            cards,
            vec![
                ("*".to_owned(), BigCount::from(10u64)),
                ("dst=1-4".to_owned(), BigCount::ONE),
                ("dst=2-4".to_owned(), BigCount::ONE),
                ("dst=3-4".to_owned(), BigCount::from(2u64)),
                ("dst=3-5".to_owned(), BigCount::ONE),
                ("dst=3-6".to_owned(), BigCount::ONE),
            ]
        );
        completion.self_check().unwrap();
    }

    #[test]
    fn atom_cardinalities_chain() {
        let layout = mask_layout(2);
        let members = vec![
            HeaderSet::universe(&layout),
            mask(&layout, "0*"),
            mask(&layout, "00"),
        ];
        let cards = atom_cardinalities(&members).unwrap();
        assert_eq!(cards, vec![BigCount::from(2u64), BigCount::ONE, BigCount::ONE]);
    }

    #[test]
    fn atom_cardinalities_universe_only() {
        let layout = mask_layout(8);
        let members = vec![HeaderSet::universe(&layout)];
        assert_eq!(atom_cardinalities(&members).unwrap(), vec![BigCount::from(256u64)]);
    }

    #[test]
    fn atom_cardinalities_partition() {
        let layout = mask_layout(2);
        let members = vec![
            HeaderSet::universe(&layout),
            mask(&layout, "0*"),
            mask(&layout, "*0"),
            mask(&layout, "00"),
        ];
        let cards = atom_cardinalities(&members).unwrap();
        assert_eq!(cards, vec![BigCount::ONE; 4]);
    }

    #[test]
    fn atom_cardinalities_rejects_duplicates_and_incomplete_input() {
        let layout = HeaderLayout::single_range("dst", 2);
        let dup = vec![range(&layout, 0, 1), range(&layout, 0, 1)];
        assert!(matches!(
            atom_cardinalities(&dup),
            Err(AlgebraError::DuplicateMember(_))
        ));
        // [0,1], [1,2] and [0,2] are not weakly complete: the recurrence
        // drives a([0,2]) negative.
        let bad = vec![
            range(&layout, 0, 1),
            range(&layout, 1, 2),
            range(&layout, 0, 2),
        ];
        assert!(matches!(
            atom_cardinalities(&bad),
            Err(AlgebraError::NotWeaklyComplete(_))
        ));
    }

    #[test]
    fn insert_into_empty() {
        let layout = mask_layout(2);
        let mut completion = WeakCompletion::new(Arc::clone(&layout));
        completion.insert_rule(&mask(&layout, "0*")).unwrap();
        assert_eq!(member_strings(&completion), vec!["*", "dst=0*"]);
        let cards: Vec<BigCount> = completion.member_cards().map(|(_, c)| c).collect();
        assert_eq!(cards, vec![BigCount::from(2u64); 2]);
        completion.self_check().unwrap();
    }

    #[test]
    fn insert_existing_member_as_rule() {
        let layout = mask_layout(2);
        let mut completion = WeakCompletion::build(&collection(&layout, &["0*", "*0"]));
        let before = member_strings(&completion);
        completion.insert_rule(&mask(&layout, "00")).unwrap();
        assert_eq!(member_strings(&completion), before);
        let containing = completion.rules_containing(&mask(&layout, "00")).unwrap();
        assert_eq!(containing.len(), 3);
        completion.self_check().unwrap();
    }

    #[test]
    fn insert_second_rule_matches_batch_build() {
        let layout = mask_layout(2);
        let mut incremental = WeakCompletion::new(Arc::clone(&layout));
        incremental.insert_rule(&mask(&layout, "0*")).unwrap();
        incremental.insert_rule(&mask(&layout, "*0")).unwrap();
        let batch = WeakCompletion::build(&collection(&layout, &["0*", "*0"]));
        assert!(incremental.same_state(&batch));
    }

    #[test]
    fn insert_rejects_empty_and_mismatched() {
        let layout = mask_layout(2);
        let mut completion = WeakCompletion::new(Arc::clone(&layout));
        assert_eq!(
            completion.insert_rule(&HeaderSet::empty(&layout)),
            Err(AlgebraError::EmptyRule)
        );
        let other = mask_layout(3);
        assert!(matches!(
            completion.insert_rule(&mask(&other, "0**")),
            Err(AlgebraError::LayoutMismatch(_))
        ));
    }

    #[test]
    fn delete_rule_examples() {
        let layout = mask_layout(2);
        let mut completion = WeakCompletion::build(&collection(&layout, &["0*", "*0"]));
        completion.delete_rule(&mask(&layout, "*0")).unwrap();
        assert_eq!(member_strings(&completion), vec!["*", "dst=0*"]);
        assert!(completion.same_state(&WeakCompletion::build(&collection(&layout, &["0*"]))));

        completion.delete_rule(&mask(&layout, "0*")).unwrap();
        assert_eq!(member_strings(&completion), vec!["*"]);
        completion.self_check().unwrap();

        assert!(matches!(
            completion.delete_rule(&mask(&layout, "0*")),
            Err(AlgebraError::UnknownRule(_))
        ));
    }

    #[test]
    fn insert_then_delete_is_identity() {
        let layout = mask_layout(3);
        let base = collection(&layout, &["0**", "*01", "11*"]);
        let mut completion = WeakCompletion::build(&base);
        let reference = completion.clone();
        let extra = mask(&layout, "0*1");
        completion.insert_rule(&extra).unwrap();
        completion.delete_rule(&extra).unwrap();
        assert!(completion.same_state(&reference));
        completion.self_check().unwrap();
    }

    #[test]
    fn delete_restores_universe_member() {
        // {00, 01, 1*} partitions H, so H is not a member; deleting 1*
        // must bring H back.
        let layout = mask_layout(2);
        let mut completion = WeakCompletion::build(&collection(&layout, &["00", "01", "1*"]));
        assert!(!completion.contains_member(&HeaderSet::universe(&layout)));
        completion.delete_rule(&mask(&layout, "1*")).unwrap();
        assert!(completion.contains_member(&HeaderSet::universe(&layout)));
        assert!(completion.same_state(&WeakCompletion::build(&collection(&layout, &["00", "01"]))));
    }

    #[test]
    fn representatives_report() {
        let layout = mask_layout(2);
        let completion = WeakCompletion::build(&collection(&layout, &["0*", "*0"]));
        let report = completion.representatives();
        assert_eq!(report.atoms.len(), 4);
        let find = |text: &str| {
            report
                .atoms
                .iter()
                .find(|a| a.representative.canonical_string() == text)
                .unwrap()
        };
        let both = find("dst=00");
        let matched: Vec<String> =
            both.matched_rules.iter().map(|r| r.canonical_string()).collect();
        assert_eq!(matched, vec!["dst=*0", "dst=0*"]);
        assert!(find("*").matched_rules.is_empty());
        let left = find("dst=0*");
        assert_eq!(left.matched_rules.len(), 1);
        assert_eq!(left.matched_rules[0].canonical_string(), "dst=0*");
        let total: BigCount = report.atoms.iter().map(|a| a.cardinality).sum();
        assert_eq!(total, BigCount::from(4u64));
    }

    #[test]
    fn weak_completeness_examples() {
        let layout = mask_layout(2);
        let complete = vec![
            HeaderSet::universe(&layout),
            mask(&layout, "0*"),
            mask(&layout, "*0"),
            mask(&layout, "00"),
        ];
        assert!(check_weak_completeness(&complete).complete);

        let incomplete = vec![mask(&layout, "0*"), mask(&layout, "*0")];
        let check = check_weak_completeness(&incomplete);
        assert!(!check.complete);
        assert!(check.violation.is_some());

        let universe_only = vec![HeaderSet::universe(&layout)];
        assert!(check_weak_completeness(&universe_only).complete);

        assert!(!check_weak_completeness(&[]).complete);
    }

    #[test]
    fn weak_completeness_detects_uncovered_universe() {
        let layout = mask_layout(2);
        // {00, 01} unions to 0*, not H.
        let partial = vec![mask(&layout, "00"), mask(&layout, "01")];
        let check = check_weak_completeness(&partial);
        assert_eq!(check.violation, Some(CompletenessViolation::UniverseNotCovered));
    }

    #[test]
    fn weak_completeness_via_union_without_universe_member() {
        let layout = mask_layout(2);
        // {0*, 1*} partitions H without containing it.
        let split = vec![mask(&layout, "0*"), mask(&layout, "1*")];
        assert!(check_weak_completeness(&split).complete);
    }

    // Random small rule collections over a 2-field product layout.
    fn product_layout() -> Arc<HeaderLayout> {
        Arc::new(
            HeaderLayout::new(vec![FieldSpec::mask("m", 3), FieldSpec::range("r", 2)]).unwrap(),
        )
    }

    prop_compose! {
        fn arb_rule()(value in 0u128..8, care in 0u128..8, a in 0u128..4, b in 0u128..4)
            -> (u128, u128, u128, u128)
        {
            (value & care, care, a.min(b), a.max(b))
        }
    }

    fn rule_from_parts(layout: &Arc<HeaderLayout>, parts: (u128, u128, u128, u128)) -> HeaderSet {
        let (value, care, lo, hi) = parts;
        let mask_text: String = (0..3u32)
            .rev()
            .map(|bit| match (care >> bit & 1, value >> bit & 1) {
                (0, _) => '*',
                (_, 0) => '0',
                _ => '1',
            })
            .collect();
        HeaderSet::parse(
            layout,
            [("m", mask_text.as_str()), ("r", format!("{lo}-{hi}").as_str())],
        )
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn build_is_order_invariant(
            parts in prop::collection::vec(arb_rule(), 0..6),
            seed in 0u64..1000,
        ) {
            let layout = product_layout();
            let sets: Vec<HeaderSet> =
                parts.iter().map(|p| rule_from_parts(&layout, *p)).collect();
            let forward =
                RuleCollection::from_sets(Arc::clone(&layout), sets.clone()).unwrap();
            let mut shuffled = sets;
            // Cheap deterministic shuffle.
            let n = shuffled.len();
            for i in (1..n).rev() {
                let j = (seed as usize).wrapping_mul(31).wrapping_add(i) % (i + 1);
                shuffled.swap(i, j);
            }
            let backward =
                RuleCollection::from_sets(Arc::clone(&layout), shuffled).unwrap();
            let a = WeakCompletion::build(&forward);
            let b = WeakCompletion::build(&backward);
            prop_assert!(a.same_state(&b));
        }

        #[test]
        fn completion_invariants_hold(parts in prop::collection::vec(arb_rule(), 0..6)) {
            let layout = product_layout();
            let rules = RuleCollection::from_sets(
                Arc::clone(&layout),
                parts.iter().map(|p| rule_from_parts(&layout, *p)),
            )
            .unwrap();
            let completion = WeakCompletion::build(&rules);
            prop_assert!(completion.self_check().is_ok(), "{:?}", completion.self_check());
        }

        #[test]
        fn interleaved_edits_match_batch_build(
            parts in prop::collection::vec(arb_rule(), 1..8),
            script in prop::collection::vec((any::<bool>(), 0usize..8), 1..12),
        ) {
            let layout = product_layout();
            let pool: Vec<HeaderSet> =
                parts.iter().map(|p| rule_from_parts(&layout, *p)).collect();
            let mut live: IndexSet<HeaderSet> = IndexSet::new();
            let mut completion = WeakCompletion::new(Arc::clone(&layout));
            for (insert, pick) in script {
                if insert || live.is_empty() {
                    let rule = pool[pick % pool.len()].clone();
                    completion.insert_rule(&rule).unwrap();
                    live.insert(rule);
                } else {
                    let rule = live.shift_remove_index(pick % live.len()).unwrap();
                    completion.delete_rule(&rule).unwrap();
                }
                let batch = WeakCompletion::build(
                    &RuleCollection::from_sets(
                        Arc::clone(&layout),
                        live.iter().cloned(),
                    )
                    .unwrap(),
                );
                prop_assert!(completion.same_state(&batch));
            }
            prop_assert!(completion.self_check().is_ok());
        }
    }
}
