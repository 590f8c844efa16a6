//! Canonical run-length sets over the positive integers.
//!
//! A [`RunSet`] stores a subset of `{1, 2, 3, ...}` as sorted, disjoint,
//! non-adjacent half-open runs `[a, b)` with arbitrary-precision endpoints.
//! The representation is canonical: two values are equal as sets exactly when
//! their run lists are identical, so derived `PartialEq` is set equality.
//!
//! Complements are only defined relative to an explicit horizon; there is no
//! lazy or implicit "rest of the integers". Operations cost `O(runs)` (or
//! `O(runs log runs)` where a sort is involved), never `O(elements)`, except
//! for the few operations whose output is inherently element-sized
//! ([`RunSet::scale`], [`RunSet::self_difference`]); those carry an explicit
//! materialisation guard.

use std::fmt;

use num::{CheckedSub, One, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{nat, Nat};

/// Upper bound on the number of elements an element-sized operation is
/// willing to materialise.
const MAX_MATERIALIZE: u64 = 8_000_000;

/// Gap query result: a set with fewer than two elements has no consecutive
/// pair, which we report as an unbounded gap rather than a magic number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GapBound {
    Infinite,
    Finite(Nat),
}

impl GapBound {
    pub fn finite(&self) -> Option<&Nat> {
        match self {
            GapBound::Infinite => None,
            GapBound::Finite(g) => Some(g),
        }
    }
}

/// Exact min/max of window counts `|A ∩ [k+1, k+s]|` over a range of `k`,
/// together with positions attaining them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowExtrema {
    pub min: Nat,
    pub max: Nat,
    pub argmin_k: Nat,
    pub argmax_k: Nat,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RunSet {
    runs: Vec<(Nat, Nat)>,
}

impl RunSet {
    pub fn empty() -> Self {
        RunSet { runs: Vec::new() }
    }

    /// Single half-open run `[a, b)`; requires `1 <= a < b`.
    pub fn interval(a: Nat, b: Nat) -> Result<Self> {
        Self::from_runs(vec![(a, b)])
    }

    pub fn singleton(x: Nat) -> Result<Self> {
        let succ = &x + 1u8;
        Self::interval(x, succ)
    }

    /// Builds a set from an arbitrary run list: validates endpoints, sorts,
    /// and merges overlapping or adjacent runs into the canonical form.
    pub fn from_runs(mut runs: Vec<(Nat, Nat)>) -> Result<Self> {
        for (a, b) in &runs {
            if a.is_zero() {
                return Err(Error::domain("run start must be >= 1 (ground set is the positive integers)"));
            }
            if a >= b {
                return Err(Error::domain(format!("empty or reversed run [{a}, {b})")));
            }
        }
        runs.sort();
        let mut out: Vec<(Nat, Nat)> = Vec::with_capacity(runs.len());
        for (a, b) in runs {
            match out.last_mut() {
                Some((_, cur_b)) if a <= *cur_b => {
                    if b > *cur_b {
                        *cur_b = b;
                    }
                }
                _ => out.push((a, b)),
            }
        }
        Ok(RunSet { runs: out })
    }

    /// Fast-path constructor for runs that are already sorted, disjoint, and
    /// non-adjacent (as produced by ordered left-to-right sweeps).  Debug
    /// builds still verify the canonical-form invariant.
    pub(crate) fn from_sorted_runs_unchecked(runs: Vec<(Nat, Nat)>) -> Self {
        debug_assert!(runs.iter().all(|(a, b)| !a.is_zero() && a < b));
        debug_assert!(runs.windows(2).all(|w| w[0].1 < w[1].0));
        RunSet { runs }
    }

    pub fn from_elements<I: IntoIterator<Item = Nat>>(elems: I) -> Result<Self> {
        let runs = elems
            .into_iter()
            .map(|x| {
                let succ = &x + 1u8;
                (x, succ)
            })
            .collect();
        Self::from_runs(runs)
    }

    pub fn runs(&self) -> &[(Nat, Nat)] {
        &self.runs
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    /// Number of elements.
    pub fn cardinality(&self) -> Nat {
        let mut total = Nat::zero();
        for (a, b) in &self.runs {
            total += b - a;
        }
        total
    }

    pub fn first(&self) -> Option<Nat> {
        self.runs.first().map(|(a, _)| a.clone())
    }

    pub fn last(&self) -> Option<Nat> {
        self.runs.last().map(|(_, b)| b - 1u8)
    }

    pub fn contains(&self, x: &Nat) -> bool {
        let idx = self.runs.partition_point(|(a, _)| a <= x);
        idx > 0 && self.runs[idx - 1].1 > *x
    }

    /// Materialises all elements up to `bound` (inclusive). Test/diagnostic
    /// helper; guarded like the other element-sized operations.
    pub fn elements_up_to(&self, bound: &Nat) -> Result<Vec<Nat>> {
        let clipped = self.clip(bound);
        let card = clipped.cardinality();
        if card > nat(MAX_MATERIALIZE) {
            return Err(Error::domain(format!("refusing to materialise {card} elements")));
        }
        let mut out = Vec::new();
        for (a, b) in &clipped.runs {
            let mut x = a.clone();
            while x < *b {
                out.push(x.clone());
                x += 1u8;
            }
        }
        Ok(out)
    }

    /// Restriction to `[1, bound]`.
    pub fn clip(&self, bound: &Nat) -> RunSet {
        let mut out = Vec::new();
        for (a, b) in &self.runs {
            if *a > *bound {
                break;
            }
            let end = b.min(&(bound + 1u8)).clone();
            if *a < end {
                out.push((a.clone(), end));
            }
        }
        RunSet { runs: out }
    }

    pub fn union(&self, other: &RunSet) -> RunSet {
        let mut merged: Vec<(Nat, Nat)> = Vec::with_capacity(self.runs.len() + other.runs.len());
        let mut i = 0;
        let mut j = 0;
        let push = |run: (Nat, Nat), merged: &mut Vec<(Nat, Nat)>| match merged.last_mut() {
            Some((_, cur_b)) if run.0 <= *cur_b => {
                if run.1 > *cur_b {
                    *cur_b = run.1;
                }
            }
            _ => merged.push(run),
        };
        while i < self.runs.len() && j < other.runs.len() {
            if self.runs[i].0 <= other.runs[j].0 {
                push(self.runs[i].clone(), &mut merged);
                i += 1;
            } else {
                push(other.runs[j].clone(), &mut merged);
                j += 1;
            }
        }
        for run in &self.runs[i..] {
            push(run.clone(), &mut merged);
        }
        for run in &other.runs[j..] {
            push(run.clone(), &mut merged);
        }
        RunSet { runs: merged }
    }

    pub fn intersect(&self, other: &RunSet) -> RunSet {
        let mut out = Vec::new();
        let mut i = 0;
        let mut j = 0;
        while i < self.runs.len() && j < other.runs.len() {
            let (a1, b1) = &self.runs[i];
            let (a2, b2) = &other.runs[j];
            let lo = a1.max(a2);
            let hi = b1.min(b2);
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if b1 <= b2 {
                i += 1;
            } else {
                j += 1;
            }
        }
        RunSet { runs: out }
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &RunSet) -> RunSet {
        let mut out = Vec::new();
        let mut j = 0;
        for (a, b) in &self.runs {
            let mut cursor = a.clone();
            while j < other.runs.len() && other.runs[j].1 <= cursor {
                j += 1;
            }
            let mut k = j;
            while cursor < *b {
                if k >= other.runs.len() || other.runs[k].0 >= *b {
                    out.push((cursor, b.clone()));
                    break;
                }
                let (oa, ob) = &other.runs[k];
                if *oa > cursor {
                    out.push((cursor.clone(), oa.clone()));
                }
                if ob >= b {
                    break;
                }
                cursor = ob.clone();
                k += 1;
            }
        }
        RunSet { runs: out }
    }

    /// Complement within `[1, horizon]`. The horizon is mandatory: the
    /// representation has no notion of an unbounded complement.
    pub fn complement(&self, horizon: &Nat) -> RunSet {
        let mut out = Vec::new();
        let mut cursor = Nat::one();
        let end = horizon + 1u8;
        for (a, b) in &self.runs {
            if *a >= end {
                break;
            }
            if *a > cursor {
                out.push((cursor.clone(), a.clone()));
            }
            if *b > cursor {
                cursor = b.clone();
            }
            if cursor >= end {
                break;
            }
        }
        if cursor < end {
            out.push((cursor, end));
        }
        RunSet { runs: out }
    }

    /// `{x + i : x ∈ A}`.
    pub fn shift_plus(&self, i: &Nat) -> RunSet {
        let runs = self.runs.iter().map(|(a, b)| (a + i, b + i)).collect();
        RunSet { runs }
    }

    /// `{x - i : x ∈ A, x > i}` (shifts left, clipping at the ground set).
    pub fn shift_minus(&self, i: &Nat) -> RunSet {
        let mut out: Vec<(Nat, Nat)> = Vec::new();
        for (a, b) in &self.runs {
            if *b <= i + 1u8 {
                continue;
            }
            let new_a = if *a > *i { a - i } else { Nat::one() };
            let new_b = b - i;
            match out.last_mut() {
                Some((_, cur_b)) if new_a <= *cur_b => {
                    if new_b > *cur_b {
                        *cur_b = new_b;
                    }
                }
                _ => out.push((new_a, new_b)),
            }
        }
        RunSet { runs: out }
    }

    /// `{n·x : x ∈ A}` for `n >= 1`. Element-sized for `n >= 2`, hence
    /// guarded by the materialisation cap.
    pub fn scale(&self, n: &Nat) -> Result<RunSet> {
        if n.is_zero() {
            return Err(Error::domain("scale factor must be >= 1"));
        }
        if n.is_one() {
            return Ok(self.clone());
        }
        let card = self.cardinality();
        if card > nat(MAX_MATERIALIZE) {
            return Err(Error::domain(format!(
                "scale would materialise {card} singleton runs (cap {MAX_MATERIALIZE})"
            )));
        }
        let mut runs = Vec::new();
        for (a, b) in &self.runs {
            let mut x = a.clone();
            while x < *b {
                let y = &x * n;
                let succ = &y + 1u8;
                runs.push((y, succ));
                x += 1u8;
            }
        }
        Ok(RunSet { runs })
    }

    /// `{x : n·x ∈ A}` for `n >= 1`: selects the multiples of `n` and divides.
    pub fn contract(&self, n: &Nat) -> Result<RunSet> {
        if n.is_zero() {
            return Err(Error::domain("contraction factor must be >= 1"));
        }
        if n.is_one() {
            return Ok(self.clone());
        }
        let mut runs = Vec::new();
        for (a, b) in &self.runs {
            // smallest multiple of n in [a, b), largest multiple below b
            let lo = (a + n - 1u8) / n; // ceil(a / n)
            let hi_incl = (b - 1u8) / n; // floor((b-1) / n)
            if lo <= hi_incl && !lo.is_zero() {
                let end = &hi_incl + 1u8;
                runs.push((lo, end));
            }
        }
        Self::from_runs(runs)
    }

    /// `|A ∩ [1, x]|`.
    pub fn prefix_count(&self, x: &Nat) -> Nat {
        let mut total = Nat::zero();
        for (a, b) in &self.runs {
            if *a > *x {
                break;
            }
            let end = b.min(&(x + 1u8)).clone();
            total += &end - a;
        }
        total
    }

    /// Prefix counts for an ascending list of cut points, computed in one
    /// pass over the runs.
    fn prefix_counts_sorted(&self, points: &[Nat]) -> Vec<Nat> {
        let mut out = Vec::with_capacity(points.len());
        let mut idx = 0;
        let mut passed = Nat::zero();
        for x in points {
            let bound = x + 1u8;
            while idx < self.runs.len() && self.runs[idx].1 <= bound {
                passed += &self.runs[idx].1 - &self.runs[idx].0;
                idx += 1;
            }
            let mut count = passed.clone();
            if idx < self.runs.len() && self.runs[idx].0 < bound {
                count += &bound - &self.runs[idx].0;
            }
            out.push(count);
        }
        out
    }

    /// Largest difference between consecutive elements of `A ∩ [1, bound]`,
    /// or [`GapBound::Infinite`] when fewer than two elements exist.
    pub fn max_gap(&self, bound: &Nat) -> GapBound {
        let clipped = self.clip(bound);
        if clipped.cardinality() < nat(2) {
            return GapBound::Infinite;
        }
        let mut best = Nat::one(); // within-run consecutive elements differ by 1
        for pair in clipped.runs.windows(2) {
            let prev_last = &pair[0].1 - 1u8;
            let gap = &pair[1].0 - &prev_last;
            if gap > best {
                best = gap;
            }
        }
        GapBound::Finite(best)
    }

    /// Length of the longest run of `A ∩ [1, bound]`.
    pub fn max_run(&self, bound: &Nat) -> Nat {
        let clipped = self.clip(bound);
        let mut best = Nat::zero();
        for (a, b) in &clipped.runs {
            let len = b - a;
            if len > best {
                best = len;
            }
        }
        best
    }

    /// Position (start) of the longest run of `A ∩ [1, bound]`.
    pub fn longest_run(&self, bound: &Nat) -> Option<(Nat, Nat)> {
        let clipped = self.clip(bound);
        let mut best: Option<(Nat, Nat)> = None;
        for (a, b) in &clipped.runs {
            let len = b - a;
            match &best {
                Some((_, blen)) if *blen >= len => {}
                _ => best = Some((a.clone(), len)),
            }
        }
        best
    }

    /// Exact min and max of `|A ∩ [k+1, k+s]|` over `k ∈ [k_lo, k_hi]`,
    /// computed by evaluating the window count at every slope breakpoint
    /// rather than sweeping `k` element-wise.
    pub fn window_extrema(&self, s: &Nat, k_lo: &Nat, k_hi: &Nat) -> Result<WindowExtrema> {
        if s.is_zero() {
            return Err(Error::domain("window length must be >= 1"));
        }
        if k_lo > k_hi {
            return Err(Error::domain("empty window range"));
        }
        // Candidate k values: range ends plus every k where the indicator of
        // k or k+s (membership in A) can change, padded one step each side.
        let mut cands: Vec<Nat> = vec![k_lo.clone(), k_hi.clone()];
        let push_cand = |v: Nat, cands: &mut Vec<Nat>| {
            if v >= *k_lo && v <= *k_hi {
                cands.push(v);
            }
        };
        for (a, b) in &self.runs {
            for base in [a, b] {
                // k near base and k near base - s (so that k+s crosses base)
                for delta_down in 0u8..=1 {
                    if *base > nat(delta_down as u64) {
                        push_cand(base - delta_down, &mut cands);
                    }
                    let shifted = base.checked_sub(&(s + delta_down)).unwrap_or_default();
                    if !shifted.is_zero() {
                        push_cand(shifted, &mut cands);
                    }
                }
            }
        }
        cands.sort();
        cands.dedup();

        // Two monotone sweeps (window starts, then window ends) keep the
        // whole evaluation linear in the number of runs, instead of paying a
        // full prefix count per candidate.
        let ends: Vec<Nat> = cands.iter().map(|k| k + s).collect();
        let start_counts = self.prefix_counts_sorted(&cands);
        let end_counts = self.prefix_counts_sorted(&ends);
        let mut min_v: Option<(Nat, Nat)> = None;
        let mut max_v: Option<(Nat, Nat)> = None;
        for ((k, lo), hi) in cands.iter().zip(&start_counts).zip(&end_counts) {
            let c = hi - lo;
            match &min_v {
                Some((m, _)) if *m <= c => {}
                _ => min_v = Some((c.clone(), k.clone())),
            }
            match &max_v {
                Some((m, _)) if *m >= c => {}
                _ => max_v = Some((c, k.clone())),
            }
        }
        let (min, argmin_k) = min_v.ok_or_else(|| Error::invariant("no window candidates"))?;
        let (max, argmax_k) = max_v.ok_or_else(|| Error::invariant("no window candidates"))?;
        Ok(WindowExtrema { min, max, argmin_k, argmax_k })
    }

    /// `{m ∈ [1, horizon] : [m-n, m+n] ∩ Z+ ⊆ A}`, the n-fold interior of A,
    /// with the window clipped at the lower edge of the ground set.
    pub fn shrink(&self, n: &Nat, horizon: &Nat) -> RunSet {
        let mut runs = Vec::new();
        for (a, b) in &self.runs {
            // m + n <= b - 1, i.e. m < b - n
            if *b <= *n {
                continue;
            }
            let end_excl = (b - n).min(horizon + 1u8);
            let start = if a.is_one() { Nat::one() } else { a + n };
            if start < end_excl {
                runs.push((start, end_excl));
            }
        }
        RunSet { runs }
    }

    /// Number of x with `x ∈ A`, `x + v ∈ A`, and `x + v <= horizon`.
    /// Computed run-pair-wise via shift and intersection.
    pub fn difference_multiplicity(&self, v: &Nat, horizon: &Nat) -> Result<Nat> {
        if v.is_zero() {
            return Err(Error::domain("difference value must be >= 1"));
        }
        if *horizon <= *v {
            return Ok(Nat::zero());
        }
        let shifted = self.shift_minus(v); // A - v
        let both = self.intersect(&shifted);
        Ok(both.prefix_count(&(horizon - v)))
    }

    /// `(A - A) ∩ [1, cap]`: all positive differences of element pairs.
    /// Costs `O(runs^2 log runs)`.
    pub fn self_difference(&self, cap: &Nat) -> Result<RunSet> {
        if self.runs.len() as u64 > 20_000 {
            return Err(Error::domain("too many runs for pairwise difference"));
        }
        let mut runs: Vec<(Nat, Nat)> = Vec::new();
        for (i, (a1, b1)) in self.runs.iter().enumerate() {
            for (a2, b2) in &self.runs[i..] {
                // differences (elements of [a2,b2)) - (elements of [a1,b1)),
                // intersected with [1, cap]
                let hi_excl = b2 - a1; // max difference + 1
                let lo = if *a2 > (b1 - 1u8) { a2 - (b1 - 1u8) } else { Nat::one() };
                let hi_excl = hi_excl.min(cap + 1u8);
                if lo < hi_excl && !lo.is_zero() {
                    runs.push((lo, hi_excl));
                }
            }
        }
        // within-run differences of the diagonal pairs are already covered
        // (i == j case above yields [1, b-a)).
        Self::from_runs(runs)
    }

    /// True when every element of `self` lies in `other`.
    pub fn subset_of(&self, other: &RunSet) -> bool {
        let mut j = 0;
        for (a, b) in &self.runs {
            while j < other.runs.len() && other.runs[j].1 < *b {
                j += 1;
            }
            if j >= other.runs.len() {
                return false;
            }
            let (oa, ob) = &other.runs[j];
            if oa > a || ob < b {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for RunSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (a, b)) in self.runs.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "[{a},{b})")?;
        }
        write!(f, "}}")
    }
}

impl Serialize for RunSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            runs: Vec<[String; 2]>,
        }
        let runs = self
            .runs
            .iter()
            .map(|(a, b)| [a.to_string(), b.to_string()])
            .collect();
        Repr { runs }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RunSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            runs: Vec<[String; 2]>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let mut runs = Vec::with_capacity(repr.runs.len());
        for [a, b] in repr.runs {
            let a = a.parse::<Nat>().map_err(D::Error::custom)?;
            let b = b.parse::<Nat>().map_err(D::Error::custom)?;
            runs.push((a, b));
        }
        RunSet::from_runs(runs).map_err(D::Error::custom)
    }
}

/// Reproducible pseudo-random run set: alternating gap/run lengths drawn
/// uniformly from `0..=max_gap` and `1..=max_run`, walked out to the horizon.
pub fn random_runset(seed: u64, horizon: &Nat, max_run: u64, max_gap: u64) -> RunSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut runs = Vec::new();
    let mut pos = Nat::one();
    let end = horizon + 1u8;
    loop {
        let gap = rng.gen_range(0..=max_gap);
        pos += nat(gap);
        if pos >= end {
            break;
        }
        let len = rng.gen_range(1..=max_run);
        let run_end = (&pos + nat(len)).min(end.clone());
        runs.push((pos.clone(), run_end.clone()));
        pos = &run_end + 1u8;
        if pos >= end {
            break;
        }
    }
    RunSet { runs }
}
