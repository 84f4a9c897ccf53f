//! Header layouts and header-set values.
//!
//! A header is a fixed-length bit string split into named fields. A
//! [`HeaderSet`] constrains each field with either a ternary mask (`01**`)
//! or a closed integer range (`2-5`), and denotes the product of the
//! per-field sets. Both constraint families are closed under intersection,
//! so the three primitive operations the verification engine is built on —
//! intersection, inclusion and exact cardinality — all stay within the
//! representation and run in time linear in the header length.
//!
//! Set difference and complement are intentionally absent.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::count::BigCount;

/// Widest supported header, in bits.
pub const MAX_TOTAL_WIDTH: u32 = 128;

/// How a field is matched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    /// Ternary string over `{0,1,*}`.
    Mask,
    /// Closed integer interval `[lo, hi]`.
    Range,
}

/// One named field of a header layout.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldSpec {
    pub name: String,
    pub width: u32,
    pub kind: FieldKind,
}

impl FieldSpec {
    pub fn mask(name: impl Into<String>, width: u32) -> FieldSpec {
        FieldSpec { name: name.into(), width, kind: FieldKind::Mask }
    }

    pub fn range(name: impl Into<String>, width: u32) -> FieldSpec {
        FieldSpec { name: name.into(), width, kind: FieldKind::Range }
    }

    fn domain_mask(&self) -> u128 {
        width_mask(self.width)
    }
}

fn width_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// An ordered list of fields; total width is the header bit-length.
#[derive(Debug, PartialEq, Eq)]
pub struct HeaderLayout {
    fields: Vec<FieldSpec>,
    total_width: u32,
}

/// Invalid layout description.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LayoutError {
    #[error("layout has no fields")]
    Empty,
    #[error("field {0:?} has zero width")]
    ZeroWidth(String),
    #[error("duplicate field name {0:?}")]
    DuplicateField(String),
    #[error("total width {0} exceeds the supported maximum of {MAX_TOTAL_WIDTH} bits")]
    TooWide(u32),
}

impl HeaderLayout {
    pub fn new(fields: Vec<FieldSpec>) -> Result<HeaderLayout, LayoutError> {
        if fields.is_empty() {
            return Err(LayoutError::Empty);
        }
        let mut total = 0u32;
        for (i, f) in fields.iter().enumerate() {
            if f.width == 0 {
                return Err(LayoutError::ZeroWidth(f.name.clone()));
            }
            if fields[..i].iter().any(|g| g.name == f.name) {
                return Err(LayoutError::DuplicateField(f.name.clone()));
            }
            total += f.width;
        }
        if total > MAX_TOTAL_WIDTH {
            return Err(LayoutError::TooWide(total));
        }
        Ok(HeaderLayout { fields, total_width: total })
    }

    /// Single ternary-mask field, the common case in tests and examples.
    pub fn single_mask(name: impl Into<String>, width: u32) -> Arc<HeaderLayout> {
        Arc::new(HeaderLayout::new(vec![FieldSpec::mask(name, width)]).unwrap())
    }

    pub fn single_range(name: impl Into<String>, width: u32) -> Arc<HeaderLayout> {
        Arc::new(HeaderLayout::new(vec![FieldSpec::range(name, width)]).unwrap())
    }

    pub fn fields(&self) -> &[FieldSpec] {
        &self.fields
    }

    /// Header bit-length, usually written `ℓ`.
    pub fn total_width(&self) -> u32 {
        self.total_width
    }

    pub fn field_index(&self, name: &str) -> Option<usize> {
        self.fields.iter().position(|f| f.name == name)
    }
}

/// Two sets from different layouts were combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("header sets belong to different layouts")]
pub struct LayoutMismatch;

/// Invalid field-constraint text.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseSetError {
    #[error("unknown field {0:?}")]
    UnknownField(String),
    #[error("field {field:?}: mask {text:?} has {got} characters, field is {expected} bits wide")]
    MaskWidth { field: String, text: String, expected: u32, got: usize },
    #[error("field {field:?}: invalid mask character {ch:?} (expected 0, 1 or *)")]
    MaskChar { field: String, ch: char },
    #[error("field {field:?}: invalid range {text:?} (expected lo-hi, [lo,hi] or a single value)")]
    RangeSyntax { field: String, text: String },
    #[error("field {field:?}: empty range {lo}-{hi}")]
    EmptyRange { field: String, lo: u128, hi: u128 },
    #[error("field {field:?}: value {value} does not fit in {width} bits")]
    OutOfDomain { field: String, value: u128, width: u32 },
    #[error("field {field:?}: a {expected:?} field takes {expected_syntax}")]
    KindMismatch { field: String, expected: FieldKind, expected_syntax: &'static str },
}

/// Per-field constraint. Kept canonical: mask value bits are zero wherever
/// the care bit is zero, and all bits above the field width are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum FieldConstraint {
    Mask { value: u128, care: u128 },
    Range { lo: u128, hi: u128 },
}

impl FieldConstraint {
    fn full(kind: FieldKind, width: u32) -> FieldConstraint {
        match kind {
            FieldKind::Mask => FieldConstraint::Mask { value: 0, care: 0 },
            FieldKind::Range => FieldConstraint::Range { lo: 0, hi: width_mask(width) },
        }
    }

    fn is_full(&self, width: u32) -> bool {
        *self == FieldConstraint::full(self.kind(), width)
    }

    fn kind(&self) -> FieldKind {
        match self {
            FieldConstraint::Mask { .. } => FieldKind::Mask,
            FieldConstraint::Range { .. } => FieldKind::Range,
        }
    }

    /// `None` when the intersection is empty.
    fn intersect(&self, other: &FieldConstraint) -> Option<FieldConstraint> {
        match (self, other) {
            (
                FieldConstraint::Mask { value: va, care: ca },
                FieldConstraint::Mask { value: vb, care: cb },
            ) => {
                if (va ^ vb) & (ca & cb) != 0 {
                    None
                } else {
                    FieldConstraint::Mask { value: va | vb, care: ca | cb }.into()
                }
            }
            (
                FieldConstraint::Range { lo: la, hi: ha },
                FieldConstraint::Range { lo: lb, hi: hb },
            ) => {
                let lo = *la.max(lb);
                let hi = *ha.min(hb);
                (lo <= hi).then_some(FieldConstraint::Range { lo, hi })
            }
            _ => unreachable!("constraint kind fixed by the layout"),
        }
    }

    fn is_subset(&self, other: &FieldConstraint) -> bool {
        match (self, other) {
            (
                FieldConstraint::Mask { value: va, care: ca },
                FieldConstraint::Mask { value: vb, care: cb },
            ) => ca & cb == *cb && (va ^ vb) & cb == 0,
            (
                FieldConstraint::Range { lo: la, hi: ha },
                FieldConstraint::Range { lo: lb, hi: hb },
            ) => la >= lb && ha <= hb,
            _ => unreachable!("constraint kind fixed by the layout"),
        }
    }

    fn count(&self, width: u32) -> BigCount {
        match self {
            FieldConstraint::Mask { care, .. } => {
                BigCount::pow2(width - care.count_ones())
            }
            FieldConstraint::Range { lo, hi } => match hi.checked_sub(*lo).unwrap().checked_add(1) {
                Some(n) => BigCount::from_u128(n),
                None => BigCount::pow2(128), // the full 128-bit domain
            },
        }
    }

    fn contains_bits(&self, bits: u128) -> bool {
        match self {
            FieldConstraint::Mask { value, care } => (bits ^ value) & care == 0,
            FieldConstraint::Range { lo, hi } => *lo <= bits && bits <= *hi,
        }
    }

    fn singleton(kind: FieldKind, bits: u128, width: u32) -> FieldConstraint {
        match kind {
            FieldKind::Mask => FieldConstraint::Mask { value: bits, care: width_mask(width) },
            FieldKind::Range => FieldConstraint::Range { lo: bits, hi: bits },
        }
    }

    fn parse(spec: &FieldSpec, text: &str) -> Result<FieldConstraint, ParseSetError> {
        let field = || spec.name.clone();
        match spec.kind {
            FieldKind::Mask => {
                let text = text.trim();
                if text.chars().count() != spec.width as usize {
                    return Err(ParseSetError::MaskWidth {
                        field: field(),
                        text: text.to_owned(),
                        expected: spec.width,
                        got: text.chars().count(),
                    });
                }
                let mut value = 0u128;
                let mut care = 0u128;
                for ch in text.chars() {
                    value <<= 1;
                    care <<= 1;
                    match ch {
                        '0' => care |= 1,
                        '1' => {
                            value |= 1;
                            care |= 1;
                        }
                        '*' => {}
                        other => {
                            return Err(ParseSetError::MaskChar { field: field(), ch: other })
                        }
                    }
                }
                Ok(FieldConstraint::Mask { value, care })
            }
            FieldKind::Range => {
                let text = text.trim();
                let parse_int = |s: &str| -> Result<u128, ParseSetError> {
                    let v: u128 = s.trim().parse().map_err(|_| ParseSetError::RangeSyntax {
                        field: field(),
                        text: text.to_owned(),
                    })?;
                    if v > spec.domain_mask() {
                        return Err(ParseSetError::OutOfDomain {
                            field: field(),
                            value: v,
                            width: spec.width,
                        });
                    }
                    Ok(v)
                };
                let (lo, hi) = if let Some(inner) =
                    text.strip_prefix('[').and_then(|t| t.strip_suffix(']'))
                {
                    let (a, b) = inner.split_once(',').ok_or_else(|| {
                        ParseSetError::RangeSyntax { field: field(), text: text.to_owned() }
                    })?;
                    (parse_int(a)?, parse_int(b)?)
                } else if let Some((a, b)) = text.split_once('-') {
                    (parse_int(a)?, parse_int(b)?)
                } else {
                    let v = parse_int(text)?;
                    (v, v)
                };
                if lo > hi {
                    return Err(ParseSetError::EmptyRange { field: field(), lo, hi });
                }
                Ok(FieldConstraint::Range { lo, hi })
            }
        }
    }

    fn text(&self, width: u32) -> String {
        match self {
            FieldConstraint::Mask { value, care } => (0..width)
                .rev()
                .map(|bit| match (care >> bit & 1, value >> bit & 1) {
                    (0, _) => '*',
                    (_, 0) => '0',
                    _ => '1',
                })
                .collect(),
            FieldConstraint::Range { lo, hi } => {
                if lo == hi {
                    format!("{lo}")
                } else {
                    format!("{lo}-{hi}")
                }
            }
        }
    }
}

/// A set of headers: per-field constraints, or the empty set.
///
/// Values are immutable and cheap to clone; all operations are pure.
/// Semantic equality coincides with structural equality because every
/// constructor normalizes to canonical form (mask value bits cleared at
/// don't-care positions, all empties collapsed to one marker), so `Eq` and
/// `Hash` can be used directly for deduplication.
#[derive(Clone)]
pub struct HeaderSet {
    layout: Arc<HeaderLayout>,
    // `None` is the empty set.
    fields: Option<Arc<[FieldConstraint]>>,
}

impl HeaderSet {
    /// The set of all headers, usually written `H`.
    pub fn universe(layout: &Arc<HeaderLayout>) -> HeaderSet {
        let fields = layout.fields().iter().map(|f| FieldConstraint::full(f.kind, f.width));
        HeaderSet { layout: Arc::clone(layout), fields: Some(fields.collect()) }
    }

    pub fn empty(layout: &Arc<HeaderLayout>) -> HeaderSet {
        HeaderSet { layout: Arc::clone(layout), fields: None }
    }

    /// Builds a set from textual field constraints; fields not mentioned
    /// default to full wildcard.
    pub fn parse<'a, I, S>(layout: &Arc<HeaderLayout>, constraints: I) -> Result<HeaderSet, ParseSetError>
    where
        I: IntoIterator<Item = (&'a str, S)>,
        S: AsRef<str>,
    {
        let mut fields: Vec<FieldConstraint> = layout
            .fields()
            .iter()
            .map(|f| FieldConstraint::full(f.kind, f.width))
            .collect();
        for (name, text) in constraints {
            let idx = layout
                .field_index(name)
                .ok_or_else(|| ParseSetError::UnknownField(name.to_owned()))?;
            fields[idx] = FieldConstraint::parse(&layout.fields()[idx], text.as_ref())?;
        }
        Ok(HeaderSet { layout: Arc::clone(layout), fields: Some(fields.into()) })
    }

    pub fn layout(&self) -> &Arc<HeaderLayout> {
        &self.layout
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_none()
    }

    pub fn is_universe(&self) -> bool {
        match &self.fields {
            None => false,
            Some(fields) => fields
                .iter()
                .zip(self.layout.fields())
                .all(|(c, f)| c.is_full(f.width)),
        }
    }

    fn same_layout(&self, other: &HeaderSet) -> bool {
        Arc::ptr_eq(&self.layout, &other.layout) || self.layout == other.layout
    }

    /// `self ∩ other`. Field-wise; empty as soon as one field is empty.
    pub fn intersect(&self, other: &HeaderSet) -> Result<HeaderSet, LayoutMismatch> {
        if !self.same_layout(other) {
            return Err(LayoutMismatch);
        }
        let (a, b) = match (&self.fields, &other.fields) {
            (Some(a), Some(b)) => (a, b),
            _ => return Ok(HeaderSet::empty(&self.layout)),
        };
        let mut fields = Vec::with_capacity(a.len());
        for (ca, cb) in a.iter().zip(b.iter()) {
            match ca.intersect(cb) {
                Some(c) => fields.push(c),
                None => return Ok(HeaderSet::empty(&self.layout)),
            }
        }
        Ok(HeaderSet { layout: Arc::clone(&self.layout), fields: Some(fields.into()) })
    }

    /// True iff every header in `self` is in `other`. The empty set is a
    /// subset of everything.
    pub fn is_subset(&self, other: &HeaderSet) -> Result<bool, LayoutMismatch> {
        if !self.same_layout(other) {
            return Err(LayoutMismatch);
        }
        Ok(match (&self.fields, &other.fields) {
            (None, _) => true,
            (Some(_), None) => false,
            (Some(a), Some(b)) => a.iter().zip(b.iter()).all(|(ca, cb)| ca.is_subset(cb)),
        })
    }

    /// Semantic equality; `==` gives the same answer without the layout check.
    pub fn equals(&self, other: &HeaderSet) -> Result<bool, LayoutMismatch> {
        if !self.same_layout(other) {
            return Err(LayoutMismatch);
        }
        Ok(self.fields == other.fields)
    }

    /// Exact number of headers in the set.
    pub fn cardinality(&self) -> BigCount {
        match &self.fields {
            None => BigCount::ZERO,
            Some(fields) => fields
                .iter()
                .zip(self.layout.fields())
                .map(|(c, f)| c.count(f.width))
                .fold(BigCount::ONE, |acc, n| {
                    acc.checked_mul(&n).expect("cardinality bounded by 2^128")
                }),
        }
    }

    /// The singleton set holding the header with the given bits. Fields take
    /// consecutive bit blocks, first field most significant.
    pub fn singleton(layout: &Arc<HeaderLayout>, header_bits: u128) -> HeaderSet {
        let mut fields = Vec::with_capacity(layout.fields().len());
        let mut remaining = layout.total_width();
        for f in layout.fields() {
            remaining -= f.width;
            let bits = (header_bits >> remaining) & f.domain_mask();
            fields.push(FieldConstraint::singleton(f.kind, bits, f.width));
        }
        HeaderSet { layout: Arc::clone(layout), fields: Some(fields.into()) }
    }

    /// Membership test for a concrete header, bit-packed as in [`Self::singleton`].
    pub fn contains_header(&self, header_bits: u128) -> bool {
        let Some(fields) = &self.fields else { return false };
        let mut remaining = self.layout.total_width();
        fields.iter().zip(self.layout.fields()).all(|(c, f)| {
            remaining -= f.width;
            c.contains_bits((header_bits >> remaining) & f.domain_mask())
        })
    }

    /// Constraint texts per field, omitting full-wildcard fields.
    pub fn constraint_map(&self) -> BTreeMap<String, String> {
        let mut map = BTreeMap::new();
        if let Some(fields) = &self.fields {
            for (c, f) in fields.iter().zip(self.layout.fields()) {
                if !c.is_full(f.width) {
                    map.insert(f.name.clone(), c.text(f.width));
                }
            }
        }
        map
    }

    /// Canonical one-line form, e.g. `dst=01**,port=2-5`; `*` for the
    /// universe and `empty` for the empty set. Used as the stable rule
    /// identifier in reports.
    pub fn canonical_string(&self) -> String {
        match &self.fields {
            None => "empty".to_owned(),
            Some(fields) => {
                let parts: Vec<String> = fields
                    .iter()
                    .zip(self.layout.fields())
                    .filter(|(c, f)| !c.is_full(f.width))
                    .map(|(c, f)| format!("{}={}", f.name, c.text(f.width)))
                    .collect();
                if parts.is_empty() {
                    "*".to_owned()
                } else {
                    parts.join(",")
                }
            }
        }
    }
}

impl PartialEq for HeaderSet {
    fn eq(&self, other: &HeaderSet) -> bool {
        self.same_layout(other) && self.fields == other.fields
    }
}

impl Eq for HeaderSet {}

impl Hash for HeaderSet {
    fn hash<H: Hasher>(&self, state: &mut H) {
        // Layout omitted: sets are only ever pooled per layout.
        self.fields.hash(state);
    }
}

impl PartialOrd for HeaderSet {
    fn partial_cmp(&self, other: &HeaderSet) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Canonical total order used for deterministic report output; compares
/// constraint data only, so it is meaningful within one layout.
impl Ord for HeaderSet {
    fn cmp(&self, other: &HeaderSet) -> Ordering {
        match (&self.fields, &other.fields) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for HeaderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_string())
    }
}

impl fmt::Debug for HeaderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HeaderSet({})", self.canonical_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mask_layout(width: u32) -> Arc<HeaderLayout> {
        HeaderLayout::single_mask("dst", width)
    }

    fn mask(layout: &Arc<HeaderLayout>, text: &str) -> HeaderSet {
        HeaderSet::parse(layout, [("dst", text)]).unwrap()
    }

    #[test]
    fn layout_validation() {
        assert_eq!(HeaderLayout::new(vec![]), Err(LayoutError::Empty));
        assert_eq!(
            HeaderLayout::new(vec![FieldSpec::mask("a", 0)]),
            Err(LayoutError::ZeroWidth("a".into()))
        );
        assert_eq!(
            HeaderLayout::new(vec![FieldSpec::mask("a", 1), FieldSpec::range("a", 2)]),
            Err(LayoutError::DuplicateField("a".into()))
        );
        assert_eq!(
            HeaderLayout::new(vec![FieldSpec::mask("a", 100), FieldSpec::mask("b", 29)]),
            Err(LayoutError::TooWide(129))
        );
        let full = HeaderLayout::new(vec![FieldSpec::mask("a", 128)]).unwrap();
        assert_eq!(full.total_width(), 128);
    }

    #[test]
    fn parse_mask_expansion() {
        let layout = mask_layout(3);
        let s = mask(&layout, "0*1");
        assert_eq!(s.cardinality(), BigCount::from(2u64));
        assert!(s.contains_header(0b001));
        assert!(s.contains_header(0b011));
        assert!(!s.contains_header(0b000));
        assert!(!s.contains_header(0b101));
    }

    #[test]
    fn parse_range_expansion() {
        let layout = HeaderLayout::single_range("dst", 4);
        let s = HeaderSet::parse(&layout, [("dst", "[2,5]")]).unwrap();
        assert_eq!(s.cardinality(), BigCount::from(4u64));
        for v in 2..=5u128 {
            assert!(s.contains_header(v));
        }
        assert!(!s.contains_header(1));
        assert!(!s.contains_header(6));
        let dash = HeaderSet::parse(&layout, [("dst", "2-5")]).unwrap();
        assert_eq!(s, dash);
    }

    #[test]
    fn parse_empty_constraint_is_universe() {
        let layout = Arc::new(
            HeaderLayout::new(vec![FieldSpec::mask("a", 2), FieldSpec::range("b", 4)]).unwrap(),
        );
        let s = HeaderSet::parse(&layout, std::iter::empty::<(&str, &str)>()).unwrap();
        assert!(s.is_universe());
        assert_eq!(s.cardinality(), BigCount::from(64u64));
        assert_eq!(s, HeaderSet::universe(&layout));
    }

    #[test]
    fn parse_errors() {
        let layout = mask_layout(4);
        assert!(matches!(
            HeaderSet::parse(&layout, [("nope", "0***")]),
            Err(ParseSetError::UnknownField(_))
        ));
        assert!(matches!(
            HeaderSet::parse(&layout, [("dst", "0**")]),
            Err(ParseSetError::MaskWidth { .. })
        ));
        assert!(matches!(
            HeaderSet::parse(&layout, [("dst", "0x**")]),
            Err(ParseSetError::MaskChar { ch: 'x', .. })
        ));
        let rl = HeaderLayout::single_range("p", 4);
        assert!(matches!(
            HeaderSet::parse(&rl, [("p", "5-2")]),
            Err(ParseSetError::EmptyRange { lo: 5, hi: 2, .. })
        ));
        assert!(matches!(
            HeaderSet::parse(&rl, [("p", "3-17")]),
            Err(ParseSetError::OutOfDomain { value: 17, .. })
        ));
        assert!(matches!(
            HeaderSet::parse(&rl, [("p", "abc")]),
            Err(ParseSetError::RangeSyntax { .. })
        ));
    }

    #[test]
    fn intersect_masks() {
        let layout = mask_layout(4);
        let a = mask(&layout, "0*1*");
        let b = mask(&layout, "01**");
        assert_eq!(a.intersect(&b).unwrap(), mask(&layout, "011*"));

        let layout2 = mask_layout(2);
        let x = mask(&layout2, "1*");
        let y = mask(&layout2, "0*");
        assert!(x.intersect(&y).unwrap().is_empty());
    }

    #[test]
    fn intersect_ranges() {
        let layout = HeaderLayout::single_range("p", 4);
        let a = HeaderSet::parse(&layout, [("p", "2-5")]).unwrap();
        let b = HeaderSet::parse(&layout, [("p", "4-9")]).unwrap();
        let c = a.intersect(&b).unwrap();
        assert_eq!(c, HeaderSet::parse(&layout, [("p", "4-5")]).unwrap());
        let d = HeaderSet::parse(&layout, [("p", "7-9")]).unwrap();
        assert!(a.intersect(&d).unwrap().is_empty());
    }

    #[test]
    fn subset_examples() {
        let l3 = mask_layout(3);
        assert!(mask(&l3, "011").is_subset(&mask(&l3, "0*1")).unwrap());
        let l2 = mask_layout(2);
        assert!(!mask(&l2, "0*").is_subset(&mask(&l2, "00")).unwrap());
        let rl = HeaderLayout::single_range("p", 4);
        let inner = HeaderSet::parse(&rl, [("p", "3-4")]).unwrap();
        let outer = HeaderSet::parse(&rl, [("p", "1-6")]).unwrap();
        assert!(inner.is_subset(&outer).unwrap());
        assert!(HeaderSet::empty(&rl).is_subset(&inner).unwrap());
        assert!(!inner.is_subset(&HeaderSet::empty(&rl)).unwrap());
    }

    #[test]
    fn cardinality_examples() {
        let l3 = mask_layout(3);
        assert_eq!(mask(&l3, "0**").cardinality(), BigCount::from(4u64));
        let rl = HeaderLayout::single_range("p", 4);
        let r = HeaderSet::parse(&rl, [("p", "2-5")]).unwrap();
        assert_eq!(r.cardinality(), BigCount::from(4u64));
        let product = Arc::new(
            HeaderLayout::new(vec![FieldSpec::mask("a", 2), FieldSpec::range("b", 4)]).unwrap(),
        );
        let s = HeaderSet::parse(&product, [("a", "0*"), ("b", "0-2")]).unwrap();
        assert_eq!(s.cardinality(), BigCount::from(6u64));
    }

    #[test]
    fn full_width_cardinality() {
        let layout = mask_layout(128);
        assert_eq!(HeaderSet::universe(&layout).cardinality(), BigCount::pow2(128));
        let rl = HeaderLayout::single_range("p", 128);
        assert_eq!(HeaderSet::universe(&rl).cardinality(), BigCount::pow2(128));
    }

    #[test]
    fn equality_and_empties() {
        let l2 = mask_layout(2);
        assert_eq!(mask(&l2, "0*"), mask(&l2, "0*"));
        assert_ne!(mask(&l2, "0*"), mask(&l2, "*0"));
        // All empties are equal, whatever produced them.
        let via_mask = mask(&l2, "0*").intersect(&mask(&l2, "1*")).unwrap();
        assert_eq!(via_mask, HeaderSet::empty(&l2));
        let rl = HeaderLayout::single_range("p", 2);
        let a = HeaderSet::parse(&rl, [("p", "0-0")]).unwrap();
        let b = HeaderSet::parse(&rl, [("p", "3-3")]).unwrap();
        assert_eq!(a.intersect(&b).unwrap(), HeaderSet::empty(&rl));
        // equals() rejects mismatched layouts.
        assert_eq!(mask(&l2, "0*").equals(&HeaderSet::universe(&rl)), Err(LayoutMismatch));
    }

    #[test]
    fn canonical_text_round_trip() {
        let layout = Arc::new(
            HeaderLayout::new(vec![FieldSpec::mask("dst", 4), FieldSpec::range("port", 4)])
                .unwrap(),
        );
        let s = HeaderSet::parse(&layout, [("dst", "01**"), ("port", "2-5")]).unwrap();
        assert_eq!(s.canonical_string(), "dst=01**,port=2-5");
        assert_eq!(HeaderSet::universe(&layout).canonical_string(), "*");
        assert_eq!(HeaderSet::empty(&layout).canonical_string(), "empty");
        let map = s.constraint_map();
        let back = HeaderSet::parse(&layout, map.iter().map(|(k, v)| (k.as_str(), v))).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn singleton_bit_packing() {
        let layout = Arc::new(
            HeaderLayout::new(vec![FieldSpec::mask("a", 2), FieldSpec::range("b", 3)]).unwrap(),
        );
        // Header bits: a = 0b10 (most significant), b = 0b011.
        let h = HeaderSet::singleton(&layout, 0b10_011);
        assert_eq!(h.cardinality(), BigCount::ONE);
        assert_eq!(h.canonical_string(), "a=10,b=3");
        assert!(h.contains_header(0b10_011));
        assert!(!h.contains_header(0b10_010));
    }

    #[test]
    fn sixteen_bit_enumeration_agreement() {
        // Full enumeration of a 16-bit product layout against the three
        // primitives, on a fixed family of sets.
        let layout = Arc::new(
            HeaderLayout::new(vec![FieldSpec::mask("m", 8), FieldSpec::range("r", 8)]).unwrap(),
        );
        let sets: Vec<HeaderSet> = [
            vec![("m", "01**10**"), ("r", "0-255")],
            vec![("m", "0*******"), ("r", "17-200")],
            vec![("m", "********"), ("r", "64-64")],
            vec![("m", "1100****"), ("r", "[0,31]")],
            vec![("m", "01**1***"), ("r", "100-140")],
        ]
        .iter()
        .map(|pairs| HeaderSet::parse(&layout, pairs.iter().copied()).unwrap())
        .collect();
        let enumerate = |s: &HeaderSet| -> Vec<u128> {
            (0u128..1 << 16).filter(|h| s.contains_header(*h)).collect()
        };
        for a in &sets {
            assert_eq!(a.cardinality(), BigCount::from(enumerate(a).len() as u64));
            for b in &sets {
                let both = a.intersect(b).unwrap();
                let expected: Vec<u128> = enumerate(a)
                    .into_iter()
                    .filter(|h| b.contains_header(*h))
                    .collect();
                assert_eq!(enumerate(&both), expected);
                let subset = enumerate(a).iter().all(|h| b.contains_header(*h));
                assert_eq!(a.is_subset(b).unwrap(), subset);
            }
        }
    }

    // Strategies for property tests: arbitrary constraints over a fixed
    // small product layout, so enumeration stays cheap.
    fn small_layout() -> Arc<HeaderLayout> {
        Arc::new(
            HeaderLayout::new(vec![FieldSpec::mask("m", 3), FieldSpec::range("r", 3)]).unwrap(),
        )
    }

    prop_compose! {
        fn arb_set()(value in 0u128..8, care in 0u128..8, a in 0u128..8, b in 0u128..8) -> HeaderSet {
            let layout = small_layout();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            HeaderSet {
                layout,
                fields: Some(vec![
                    FieldConstraint::Mask { value: value & care, care },
                    FieldConstraint::Range { lo, hi },
                ].into()),
            }
        }
    }

    fn enumerate(s: &HeaderSet) -> Vec<u128> {
        let bits = s.layout().total_width();
        (0u128..(1 << bits)).filter(|h| s.contains_header(*h)).collect()
    }

    proptest! {
        #[test]
        fn intersection_agrees_with_enumeration(a in arb_set(), b in arb_set()) {
            let both = a.intersect(&b).unwrap();
            let expect: Vec<u128> = enumerate(&a)
                .into_iter()
                .filter(|h| b.contains_header(*h))
                .collect();
            prop_assert_eq!(enumerate(&both), expect);
        }

        #[test]
        fn subset_agrees_with_enumeration(a in arb_set(), b in arb_set()) {
            let expect = enumerate(&a).iter().all(|h| b.contains_header(*h));
            prop_assert_eq!(a.is_subset(&b).unwrap(), expect);
        }

        #[test]
        fn cardinality_agrees_with_enumeration(a in arb_set()) {
            prop_assert_eq!(a.cardinality(), BigCount::from(enumerate(&a).len() as u64));
        }

        #[test]
        fn intersection_cardinality_bounded(a in arb_set(), b in arb_set()) {
            let both = a.intersect(&b).unwrap();
            prop_assert!(both.cardinality() <= a.cardinality().min(b.cardinality()));
        }

        #[test]
        fn subset_iff_intersection_fixpoint(a in arb_set(), b in arb_set()) {
            let both = a.intersect(&b).unwrap();
            prop_assert_eq!(a.is_subset(&b).unwrap(), both == a);
        }

        #[test]
        fn intersect_commutative_associative_idempotent(
            a in arb_set(), b in arb_set(), c in arb_set()
        ) {
            prop_assert_eq!(a.intersect(&b).unwrap(), b.intersect(&a).unwrap());
            let ab_c = a.intersect(&b).unwrap().intersect(&c).unwrap();
            let a_bc = a.intersect(&b.intersect(&c).unwrap()).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            prop_assert_eq!(a.intersect(&a).unwrap(), a);
        }
    }
}
