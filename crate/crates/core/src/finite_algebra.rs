//! Exhaustive set-system algebra on small finite universes.
//!
//! A [`FiniteFamily`] is a non-empty, upward-closed collection of non-empty
//! subsets of `{1, …, n}` with `n <= 6`. Subsets are element bitmasks
//! (element `i` is bit `i-1`), and a whole collection fits in one `u64`
//! membership word: bit `s` is set when the subset with mask `s` belongs to
//! the collection. That makes duality, products, and closure checks pure
//! bit arithmetic, so every collection on a universe of up to five points can
//! be enumerated and checked exhaustively.
//!
//! The point of the module is [`verify_lemma23`]: an exhaustive machine check
//! that partition regularity of a collection, the product rule `F · F* ⊆ F`,
//! and "the dual is a filter" are equivalent, together with the double-dual
//! identity and the ultrafilter fixed-point property `F = F*`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest universe the representation supports (64 subsets = one u64 word).
pub const MAX_UNIVERSE: u8 = 6;
/// Largest universe for exhaustive enumeration (counts follow the Dedekind
/// numbers: 18, 166, 7579 valid collections for n = 3, 4, 5).
pub const MAX_EXHAUSTIVE: u8 = 5;

fn subset_count(n: u8) -> usize {
    1usize << n
}

/// Membership word with every subset of `{1..n}` present.
fn all_subsets_word(n: u8) -> u64 {
    if subset_count(n) == 64 {
        u64::MAX
    } else {
        (1u64 << subset_count(n)) - 1
    }
}

fn is_upward_closed(n: u8, members: u64) -> bool {
    for s in 0..subset_count(n) {
        if members & (1u64 << s) == 0 {
            continue;
        }
        for e in 0..n {
            let sup = s | (1usize << e);
            if members & (1u64 << sup) == 0 {
                return false;
            }
        }
    }
    true
}

/// Non-empty upward-closed collection of non-empty subsets of `{1, …, n}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteFamily {
    n: u8,
    /// Minimal members (an antichain of element bitmasks), sorted.
    minimal: Vec<u32>,
    /// Full membership word (bit per subset index).
    members: u64,
}

impl FiniteFamily {
    /// Builds a family as the upward closure of the given generator sets.
    pub fn from_minimal_sets(n: u8, sets: &[u32]) -> Result<Self> {
        if n == 0 || n > MAX_UNIVERSE {
            return Err(Error::config(format!("universe size must be 1..={MAX_UNIVERSE}")));
        }
        if sets.is_empty() {
            return Err(Error::domain("a family must have at least one member"));
        }
        let full = (1u32 << n) - 1;
        let mut members = 0u64;
        for &g in sets {
            if g == 0 {
                return Err(Error::domain("the empty set cannot be a family member"));
            }
            if g & !full != 0 {
                return Err(Error::domain("generator set uses elements outside the universe"));
            }
            for s in 0..subset_count(n) {
                if s as u32 & g == g {
                    members |= 1u64 << s;
                }
            }
        }
        Self::from_members_word(n, members)
    }

    /// Builds a family from a raw membership word, validating the invariants.
    pub fn from_members_word(n: u8, members: u64) -> Result<Self> {
        if n == 0 || n > MAX_UNIVERSE {
            return Err(Error::config(format!("universe size must be 1..={MAX_UNIVERSE}")));
        }
        if members & !all_subsets_word(n) != 0 {
            return Err(Error::domain("membership word has bits beyond the universe"));
        }
        if members == 0 {
            return Err(Error::domain("a family must have at least one member"));
        }
        if members & 1 != 0 {
            return Err(Error::domain("the empty set cannot be a family member"));
        }
        if !is_upward_closed(n, members) {
            return Err(Error::domain("collection is not upward closed"));
        }
        let minimal = minimal_antichain(n, members);
        Ok(FiniteFamily { n, minimal, members })
    }

    pub fn universe_size(&self) -> u8 {
        self.n
    }

    pub fn minimal_sets(&self) -> &[u32] {
        &self.minimal
    }

    pub fn members_word(&self) -> u64 {
        self.members
    }

    pub fn member_count(&self) -> u32 {
        self.members.count_ones()
    }

    pub fn contains(&self, set: u32) -> bool {
        self.members & (1u64 << set) != 0
    }

    /// The dual collection: all sets meeting every member. For upward-closed
    /// families this is exactly `{A : complement(A) ∉ F}`.
    pub fn dual(&self) -> Result<FiniteFamily> {
        let full = (1u32 << self.n) - 1;
        let mut members = 0u64;
        for s in 0..subset_count(self.n) {
            let comp = full & !(s as u32);
            if !self.contains(comp) {
                members |= 1u64 << s;
            }
        }
        FiniteFamily::from_members_word(self.n, members)
            .map_err(|e| Error::invariant(format!("dual of a valid family must be valid: {e}")))
    }

    /// Raw collection `{A ∩ B : A ∈ self, B ∈ other}`: may contain the empty
    /// set and need not be upward closed, so it is returned as a plain
    /// subset collection rather than a family.
    pub fn product(&self, other: &FiniteFamily) -> Result<SubsetCollection> {
        if self.n != other.n {
            return Err(Error::domain("family product needs a shared universe"));
        }
        let mut word = 0u64;
        for a in 0..subset_count(self.n) {
            if !self.contains(a as u32) {
                continue;
            }
            for b in 0..subset_count(self.n) {
                if other.contains(b as u32) {
                    word |= 1u64 << (a & b);
                }
            }
        }
        Ok(SubsetCollection { n: self.n, word })
    }

    /// Filter / partition-regularity / ultrafilter status.
    ///
    /// Partition regularity is checked over all two-colourings of every
    /// member; two colour classes suffice because an n-cell partition can be
    /// split off one cell at a time.
    pub fn structure(&self) -> Structure {
        let mut is_filter = true;
        'filter: for a in 0..subset_count(self.n) {
            if !self.contains(a as u32) {
                continue;
            }
            for b in 0..subset_count(self.n) {
                if self.contains(b as u32) && !self.contains((a & b) as u32) {
                    is_filter = false;
                    break 'filter;
                }
            }
        }

        let mut is_partition_regular = true;
        'pr: for a in 0..subset_count(self.n) {
            let a = a as u32;
            if !self.contains(a) {
                continue;
            }
            // enumerate submasks s of a; the split is (s, a \ s)
            let mut s = a;
            loop {
                if !self.contains(s) && !self.contains(a & !s) {
                    is_partition_regular = false;
                    break 'pr;
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & a;
            }
        }

        Structure {
            is_filter,
            is_partition_regular,
            is_ultrafilter: is_filter && is_partition_regular,
        }
    }

    /// Human-readable members as element lists, for reports.
    pub fn minimal_sets_elements(&self) -> Vec<Vec<u8>> {
        self.minimal
            .iter()
            .map(|&mask| (0..self.n).filter(|e| mask & (1 << e) != 0).map(|e| e + 1).collect())
            .collect()
    }
}

fn minimal_antichain(n: u8, members: u64) -> Vec<u32> {
    let mut minimal = Vec::new();
    for s in 0..subset_count(n) {
        if members & (1u64 << s) == 0 {
            continue;
        }
        let mut is_min = true;
        for e in 0..n {
            if s & (1usize << e) != 0 {
                let sub = s & !(1usize << e);
                if members & (1u64 << sub) != 0 {
                    is_min = false;
                    break;
                }
            }
        }
        if is_min {
            minimal.push(s as u32);
        }
    }
    minimal
}

/// Raw collection of subsets (no family invariants), used for products.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetCollection {
    n: u8,
    word: u64,
}

impl SubsetCollection {
    pub fn contains(&self, set: u32) -> bool {
        self.word & (1u64 << set) != 0
    }

    pub fn contains_empty_set(&self) -> bool {
        self.word & 1 != 0
    }

    /// True when every subset in the collection belongs to the family.
    pub fn contained_in(&self, family: &FiniteFamily) -> bool {
        self.n == family.n && self.word & !family.members == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Structure {
    pub is_filter: bool,
    pub is_partition_regular: bool,
    pub is_ultrafilter: bool,
}

/// Every valid family on `{1..n}`, exactly once.
///
/// Uses the monotone-pair recursion: a monotone collection on `{1..k}` is a
/// pair of monotone collections on `{1..k-1}` (the members without element k,
/// and the members with it stripped of k), with the first contained in the
/// second. Total counts follow the Dedekind numbers; the two trivial
/// collections (empty, full powerset) are dropped at the end.
pub fn enumerate_families(n: u8) -> Result<Vec<FiniteFamily>> {
    if n == 0 || n > MAX_EXHAUSTIVE {
        return Err(Error::config(format!(
            "exhaustive enumeration supports 1..={MAX_EXHAUSTIVE} (counts grow as Dedekind numbers); \
             build specific larger families with from_minimal_sets instead"
        )));
    }
    // monotone membership words on a universe of size k, including the two
    // trivial ones; level 0 is {no subsets, just-the-empty-set}
    let mut level: Vec<u64> = vec![0b0, 0b1];
    for k in 1..=n {
        let half = subset_count(k - 1);
        let mut next = Vec::new();
        for &with in &level {
            for &without in &level {
                if without & with == without {
                    next.push(without | (with << half));
                }
            }
        }
        level = next;
    }
    let all = all_subsets_word(n);
    let mut out = Vec::with_capacity(level.len().saturating_sub(2));
    for word in level {
        if word == 0 || word == all {
            continue;
        }
        let fam = FiniteFamily::from_members_word(n, word)
            .map_err(|e| Error::invariant(format!("enumeration produced invalid family: {e}")))?;
        out.push(fam);
    }
    Ok(out)
}

/// A family together with the name of the equivalence that broke on it.
#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub minimal_sets: Vec<Vec<u8>>,
    pub failed_check: String,
}

/// Outcome of the exhaustive equivalence check on universe size `n`.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub universe_size: u8,
    pub families_checked: u64,
    pub filters: u64,
    pub partition_regular: u64,
    pub ultrafilters: u64,
    /// First family violating any checked identity; must be `None`.
    pub counterexample: Option<Counterexample>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Exhaustively verifies, for every family on `{1..n}`:
///
/// 1. partition regularity ⟺ `A ∩ A' ∈ F` for all `A ∈ F`, `A' ∈ F*`
///    ⟺ the dual is a filter;
/// 2. the double dual is the family itself;
/// 3. duality bridges: `F` partition regular ⟺ `F*` filter, and symmetrically;
/// 4. ultrafamilies (filter + partition regular) satisfy `F = F*`.
pub fn verify_lemma23(n: u8) -> Result<EquivalenceReport> {
    let families = enumerate_families(n)?;
    let mut report = EquivalenceReport {
        universe_size: n,
        families_checked: 0,
        filters: 0,
        partition_regular: 0,
        ultrafilters: 0,
        counterexample: None,
    };

    for fam in &families {
        report.families_checked += 1;
        let structure = fam.structure();
        let dual = fam.dual()?;
        let dual_structure = dual.structure();

        if structure.is_filter {
            report.filters += 1;
        }
        if structure.is_partition_regular {
            report.partition_regular += 1;
        }
        if structure.is_ultrafilter {
            report.ultrafilters += 1;
        }

        let fail = |which: &str, report: &mut EquivalenceReport| {
            if report.counterexample.is_none() {
                report.counterexample = Some(Counterexample {
                    minimal_sets: fam.minimal_sets_elements(),
                    failed_check: which.to_string(),
                });
            }
        };

        // (I) ⟺ (II): partition regular iff F · F* ⊆ F
        let mut product_in_family = true;
        'product: for a in 0..subset_count(n) {
            if !fam.contains(a as u32) {
                continue;
            }
            for b in 0..subset_count(n) {
                if dual.contains(b as u32) && !fam.contains((a & b) as u32) {
                    product_in_family = false;
                    break 'product;
                }
            }
        }
        if structure.is_partition_regular != product_in_family {
            fail("partition-regular vs product-absorption", &mut report);
        }

        // (I) ⟺ (III): partition regular iff dual is a filter
        if structure.is_partition_regular != dual_structure.is_filter {
            fail("partition-regular vs dual-filter", &mut report);
        }

        // symmetric bridge: filter iff dual partition regular
        if structure.is_filter != dual_structure.is_partition_regular {
            fail("filter vs dual-partition-regular", &mut report);
        }

        // double dual identity
        if dual.dual()? != *fam {
            fail("double-dual identity", &mut report);
        }

        // ultrafamilies are self-dual
        if structure.is_ultrafilter && dual != *fam {
            fail("ultrafilter self-duality", &mut report);
        }
    }
    Ok(report)
}
