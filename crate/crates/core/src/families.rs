//! Horizon-bounded membership verdicts for combinatorial set families.
//!
//! Every verdict is relative to a finite horizon `H`: it reports whether the
//! evidence visible inside `[1, H]` supports or refutes membership, along
//! with a witness that can be re-checked independently of the code that
//! produced it (see [`verify_verdict`]). The `certified` status is reserved
//! for callers that can prove a property for *all* positions, which in
//! practice means an eventually periodic structure; such verdicts carry a
//! [`Witness::PeriodicCertificate`].

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::density::{banach_report, density_report};
use crate::error::{Error, Result};
use crate::intset::{GapBound, RunSet};
use crate::numeric::{
    isqrt, nat, rat, serde_int, serde_nat, serde_nat_opt, serde_nat_pairs, serde_nat_vec,
    serde_rat, Int, Nat, Rat,
};

/// The named families a [`membership_verdict`] can test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FamilyName {
    Cofinite,
    Thick,
    Syndetic,
    PiecewiseSyndetic,
    ThicklySyndetic,
    DUpperPos,
    DLowerPos,
    BdUpperPos,
    BdLowerPos,
    DUpper1,
    DLower1,
    BdUpper1,
    BdLower1,
}

impl FamilyName {
    pub const ALL: [FamilyName; 13] = [
        FamilyName::Cofinite,
        FamilyName::Thick,
        FamilyName::Syndetic,
        FamilyName::PiecewiseSyndetic,
        FamilyName::ThicklySyndetic,
        FamilyName::DUpperPos,
        FamilyName::DLowerPos,
        FamilyName::BdUpperPos,
        FamilyName::BdLowerPos,
        FamilyName::DUpper1,
        FamilyName::DLower1,
        FamilyName::BdUpper1,
        FamilyName::BdLower1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyName::Cofinite => "cofinite",
            FamilyName::Thick => "thick",
            FamilyName::Syndetic => "syndetic",
            FamilyName::PiecewiseSyndetic => "piecewise_syndetic",
            FamilyName::ThicklySyndetic => "thickly_syndetic",
            FamilyName::DUpperPos => "D_upper_pos",
            FamilyName::DLowerPos => "D_lower_pos",
            FamilyName::BdUpperPos => "BD_upper_pos",
            FamilyName::BdLowerPos => "BD_lower_pos",
            FamilyName::DUpper1 => "D_upper_1",
            FamilyName::DLower1 => "D_lower_1",
            FamilyName::BdUpper1 => "BD_upper_1",
            FamilyName::BdLower1 => "BD_lower_1",
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FamilyName::ALL
            .iter()
            .find(|f| f.as_str() == s)
            .copied()
            .ok_or_else(|| Error::config(format!("unknown family name: {s}")))
    }
}

/// Outcome grade of a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Certified,
    HoldsAtHorizon,
    FailsAtHorizon,
}

impl Status {
    pub fn holds(&self) -> bool {
        matches!(self, Status::Certified | Status::HoldsAtHorizon)
    }

    pub fn of(holds: bool) -> Status {
        if holds {
            Status::HoldsAtHorizon
        } else {
            Status::FailsAtHorizon
        }
    }
}

/// Thresholds and search budgets, all explicit so they can be echoed into
/// verdicts and reproduced later.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyParams {
    /// Slack for "density equal to one" style thresholds: require `>= 1 - epsilon`.
    #[serde(with = "serde_rat")]
    pub epsilon: Rat,
    /// Threshold for "positive density": require `>= delta`.
    #[serde(with = "serde_rat")]
    pub delta: Rat,
    /// Run length a thick set must exhibit.
    #[serde(with = "serde_nat")]
    pub thick_run: Nat,
    /// When set, a syndetic verdict additionally requires the largest gap
    /// record to have been established no later than `stability_tail`.
    pub syndetic_stability: bool,
    #[serde(with = "serde_nat")]
    pub stability_tail: Nat,
    /// Largest shrink margin tested by thickly-syndetic style checks.
    pub shrink_n_max: u32,
    /// Largest within-window gap allowed by the piecewise-syndetic search.
    #[serde(with = "serde_nat")]
    pub ps_gap_max: Nat,
    /// Window span the piecewise-syndetic search must achieve.
    #[serde(with = "serde_nat")]
    pub ps_window: Nat,
    /// Prefix checkpoints for ordinary density estimates.
    #[serde(with = "serde_nat_vec")]
    pub checkpoints: Vec<Nat>,
    /// Fraction of the (sorted) checkpoints kept for the estimates.
    #[serde(with = "serde_rat")]
    pub tail_fraction: Rat,
    /// Sliding-window length for Banach density estimates.
    #[serde(with = "serde_nat")]
    pub banach_window: Nat,
    /// Lowest window start for Banach density estimates.
    #[serde(with = "serde_nat")]
    pub banach_k_lo: Nat,
    /// Width of the difference-value window scanned by `dual_evidence`.
    #[serde(with = "serde_nat")]
    pub delta_window: Nat,
    /// Multiplicity at which `dual_evidence` treats a difference value as
    /// realized "unboundedly often".
    #[serde(with = "serde_nat")]
    pub delta_mult_cap: Nat,
    /// Number of generators the finite-sums search tries to assemble.
    pub ip_depth: u32,
    /// Node budget for the finite-sums search.
    pub ip_node_budget: u64,
    /// Candidates explored per node of the finite-sums search.
    pub ip_candidate_cap: usize,
    /// Largest generator the finite-sums search may pick.
    #[serde(with = "serde_nat")]
    pub ip_generator_cap: Nat,
}

impl FamilyParams {
    /// Defaults scaled from the horizon: square-root window lengths, a
    /// decade ladder of checkpoints, and fixed search budgets.
    pub fn for_horizon(horizon: &Nat) -> FamilyParams {
        let root = std::cmp::max(Nat::one(), isqrt(horizon));
        let mut checkpoints = Vec::new();
        let mut cp = nat(10);
        while &cp <= horizon {
            checkpoints.push(cp.clone());
            cp *= 10u32;
        }
        if checkpoints.last() != Some(horizon) {
            checkpoints.push(horizon.clone());
        }
        FamilyParams {
            epsilon: rat(1, 50),
            delta: rat(1, 100),
            thick_run: root.clone(),
            syndetic_stability: false,
            stability_tail: root.clone(),
            shrink_n_max: 4,
            ps_gap_max: std::cmp::max(Nat::one(), &root / 4u32),
            ps_window: root.clone(),
            checkpoints,
            tail_fraction: rat(1, 2),
            banach_window: root,
            banach_k_lo: horizon / 2u32,
            delta_window: nat(50),
            delta_mult_cap: nat(64),
            ip_depth: 3,
            ip_node_budget: 20_000,
            ip_candidate_cap: 64,
            ip_generator_cap: horizon / 2u32,
        }
    }
}

/// One entry of a compound verdict (per shrink margin or per shift).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubVerdict {
    pub label: String,
    pub status: Status,
    pub note: String,
}

/// Re-checkable evidence attached to every verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Gap survey for syndetic-style verdicts. `final_record_gap` is the
    /// largest gap (counting the virtual gap from 0 to the first element)
    /// and `final_record_at` the position where it was first attained.
    GapProfile {
        #[serde(with = "serde_nat_opt")]
        gap: Option<Nat>,
        #[serde(with = "serde_nat_opt")]
        last_element: Option<Nat>,
        #[serde(with = "serde_nat_opt")]
        final_record_gap: Option<Nat>,
        #[serde(with = "serde_nat_opt")]
        final_record_at: Option<Nat>,
        #[serde(with = "serde_nat_opt")]
        stability_bound: Option<Nat>,
    },
    /// Longest-run survey for thick verdicts.
    RunProfile {
        #[serde(with = "serde_nat")]
        max_run: Nat,
        #[serde(with = "serde_nat")]
        required: Nat,
        #[serde(with = "serde_nat_opt")]
        run_start: Option<Nat>,
    },
    /// Last element of the complement, for cofinite verdicts.
    ComplementTail {
        #[serde(with = "serde_nat_opt")]
        complement_last: Option<Nat>,
        #[serde(with = "serde_nat")]
        bound: Nat,
    },
    /// A window `[window_start, window_end)` whose internal gaps stay `<= gap`.
    Cluster {
        #[serde(with = "serde_nat")]
        gap: Nat,
        #[serde(with = "serde_nat")]
        window_start: Nat,
        #[serde(with = "serde_nat")]
        window_end: Nat,
        #[serde(with = "serde_nat")]
        span: Nat,
        #[serde(with = "serde_nat")]
        required: Nat,
    },
    /// Failed piecewise-syndetic search: the best span over the gap ladder.
    ClusterSearch {
        #[serde(with = "serde_nat")]
        gap_max: Nat,
        #[serde(with = "serde_nat")]
        required: Nat,
        #[serde(with = "serde_nat")]
        best_gap: Nat,
        #[serde(with = "serde_nat")]
        best_span: Nat,
    },
    /// Prefix-density summary used by the four `D_*` families.
    DensityEvidence {
        checkpoint_count: usize,
        #[serde(with = "serde_rat")]
        lower: Rat,
        #[serde(with = "serde_rat")]
        upper: Rat,
        #[serde(with = "serde_rat")]
        threshold: Rat,
        /// "upper" or "lower": which estimate the threshold applies to.
        side: String,
        #[serde(with = "serde_nat")]
        argmin: Nat,
        #[serde(with = "serde_nat")]
        argmax: Nat,
    },
    /// Sliding-window summary used by the four `BD_*` families.
    BanachEvidence {
        #[serde(with = "serde_nat")]
        window: Nat,
        #[serde(with = "serde_nat")]
        k_lo: Nat,
        #[serde(with = "serde_nat")]
        k_hi: Nat,
        #[serde(with = "serde_nat")]
        min_count: Nat,
        #[serde(with = "serde_nat")]
        max_count: Nat,
        #[serde(with = "serde_rat")]
        threshold: Rat,
        side: String,
        #[serde(with = "serde_nat")]
        argmin_k: Nat,
        #[serde(with = "serde_nat")]
        argmax_k: Nat,
    },
    /// Per-margin or per-shift sub-verdicts of a transform.
    SubVerdicts {
        base: String,
        transform: String,
        items: Vec<SubVerdict>,
    },
    /// Explicit generators whose finite sums all land inside the set.
    IpGenerators {
        #[serde(with = "serde_nat_vec")]
        generators: Vec<Nat>,
        finite_sum_count: usize,
        overflowed: bool,
    },
    /// A finite sum of the generators that escapes the set.
    IpViolation {
        #[serde(with = "serde_nat_vec")]
        generators: Vec<Nat>,
        #[serde(with = "serde_nat")]
        violating_sum: Nat,
    },
    /// Generators found by the search whose finite sums avoid the set.
    IpRefutation {
        #[serde(with = "serde_nat_vec")]
        generators: Vec<Nat>,
        finite_sum_count: usize,
    },
    /// The finite-sums search ran out of candidates without a refutation.
    IpSearchExhausted {
        depth: u32,
        nodes_used: u64,
        node_budget: u64,
        candidate_cap_hit: bool,
        budget_exhausted: bool,
        #[serde(with = "serde_nat")]
        generator_cap: Nat,
    },
    /// Explicit seed whose pairwise differences all land inside the set.
    DiffSeed {
        #[serde(with = "serde_nat_vec")]
        seed: Vec<Nat>,
        difference_count: usize,
    },
    /// A pairwise difference of the seed that escapes the set.
    DiffViolation {
        #[serde(with = "serde_nat_vec")]
        seed: Vec<Nat>,
        #[serde(with = "serde_nat")]
        violating_difference: Nat,
    },
    /// Multiplicity of each difference value over the scanned window,
    /// measured inside the complement.
    MultiplicityTable {
        #[serde(with = "serde_nat")]
        v_min: Nat,
        #[serde(with = "serde_nat")]
        v_lo: Nat,
        #[serde(with = "serde_nat")]
        v_hi: Nat,
        #[serde(with = "serde_nat")]
        cap: Nat,
        #[serde(with = "serde_nat")]
        max_multiplicity: Nat,
        #[serde(with = "serde_nat")]
        argmax: Nat,
        #[serde(with = "serde_nat_pairs")]
        table: Vec<(Nat, Nat)>,
    },
    /// Eventually periodic structure proving the property for all positions.
    PeriodicCertificate {
        #[serde(with = "serde_nat")]
        period: Nat,
        #[serde(with = "serde_nat_vec")]
        residues: Vec<Nat>,
        #[serde(with = "serde_nat")]
        tail_start: Nat,
        conclusion: String,
    },
    /// An explicit element of a (possibly intersected) set; `element` is
    /// absent exactly when the intersection came up empty.
    MemberWitness {
        #[serde(with = "serde_nat_opt")]
        element: Option<Nat>,
        sets_intersected: usize,
    },
    /// Running-maximum evidence for growth checks: the largest value seen up
    /// to the horizon and where it was first attained, against a tail cutoff.
    GrowthRecord {
        #[serde(with = "serde_int")]
        max_value: Int,
        #[serde(with = "serde_nat")]
        attained_at: Nat,
        #[serde(with = "serde_nat")]
        tail_start: Nat,
    },
}

/// A family membership decision at a horizon, with evidence and the
/// thresholds that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub family: String,
    pub status: Status,
    #[serde(with = "serde_nat")]
    pub horizon: Nat,
    pub witness: Witness,
    pub params: FamilyParams,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.status.holds()
    }
}

/// Gap records of `A ∩ [1, horizon]`: the strictly increasing sequence of
/// `(gap, position)` pairs where a new largest gap appears. The gap from 0 to
/// the first element counts, so a late-starting set records a large early gap.
pub fn gap_records(a: &RunSet, horizon: &Nat) -> Vec<(Nat, Nat)> {
    let clipped = a.clip(horizon);
    let mut records: Vec<(Nat, Nat)> = Vec::new();
    let mut prev_elem = Nat::zero();
    for (start, end) in clipped.runs() {
        let gap = start - &prev_elem;
        if records.last().map_or(true, |(g, _)| gap > *g) {
            records.push((gap, start.clone()));
        }
        prev_elem = end - 1u8;
    }
    records
}

fn syndetic_pieces(
    a_h: &RunSet,
    horizon: &Nat,
    params: &FamilyParams,
) -> (Status, Witness) {
    let records = gap_records(a_h, horizon);
    let (final_gap, final_at) = match records.last() {
        Some((g, p)) => (Some(g.clone()), Some(p.clone())),
        None => (None, None),
    };
    let last = a_h.last();
    let gap = match a_h.max_gap(horizon) {
        GapBound::Finite(g) => Some(g),
        GapBound::Infinite => None,
    };
    let mut holds = false;
    if let (Some(g), Some(l)) = (&gap, &last) {
        let tail_ok = *l >= horizon - g;
        let stability_ok = !params.syndetic_stability
            || final_at
                .as_ref()
                .map_or(false, |p| *p <= params.stability_tail);
        holds = tail_ok && stability_ok;
    }
    let bound = params
        .syndetic_stability
        .then(|| params.stability_tail.clone());
    (
        Status::of(holds),
        Witness::GapProfile {
            gap,
            last_element: last,
            final_record_gap: final_gap,
            final_record_at: final_at,
            stability_bound: bound,
        },
    )
}

fn thick_pieces(a_h: &RunSet, horizon: &Nat, params: &FamilyParams) -> (Status, Witness) {
    let max_run = a_h.max_run(horizon);
    let run_start = a_h.longest_run(horizon).map(|(s, _)| s);
    let holds = max_run >= params.thick_run;
    (
        Status::of(holds),
        Witness::RunProfile {
            max_run,
            required: params.thick_run.clone(),
            run_start,
        },
    )
}

fn cofinite_pieces(a_h: &RunSet, horizon: &Nat) -> (Status, Witness) {
    let bound = horizon / 2u32;
    let complement_last = a_h.complement(horizon).last();
    let holds = complement_last.as_ref().map_or(true, |l| *l <= bound);
    (
        Status::of(holds),
        Witness::ComplementTail {
            complement_last,
            bound,
        },
    )
}

fn gap_ladder(g_max: &Nat) -> Vec<Nat> {
    let mut ladder = Vec::new();
    let mut g = Nat::one();
    while g < *g_max {
        ladder.push(g.clone());
        g *= 2u32;
    }
    ladder.push(g_max.clone());
    ladder
}

/// Best (largest-span) maximal window of `a_h` whose internal gaps are `<= g`.
/// Returns `(start, end, span)` with `end` exclusive.
fn best_cluster(a_h: &RunSet, g: &Nat) -> Option<(Nat, Nat, Nat)> {
    let runs = a_h.runs();
    let (first_a, first_b) = runs.first()?;
    let mut cur = (first_a.clone(), first_b.clone());
    let mut best: Option<(Nat, Nat, Nat)> = None;
    let consider = |cluster: &(Nat, Nat), best: &mut Option<(Nat, Nat, Nat)>| {
        let span = &cluster.1 - &cluster.0;
        if best.as_ref().map_or(true, |(_, _, s)| span > *s) {
            *best = Some((cluster.0.clone(), cluster.1.clone(), span));
        }
    };
    for (a2, b2) in &runs[1..] {
        let gap = a2 - (&cur.1 - 1u8);
        if gap <= *g {
            cur.1 = b2.clone();
        } else {
            consider(&cur, &mut best);
            cur = (a2.clone(), b2.clone());
        }
    }
    consider(&cur, &mut best);
    best
}

fn piecewise_syndetic_pieces(a_h: &RunSet, params: &FamilyParams) -> (Status, Witness) {
    let required = &params.ps_window;
    let mut best_overall: Option<(Nat, Nat)> = None; // (gap, span)
    for g in gap_ladder(&params.ps_gap_max) {
        if let Some((start, end, span)) = best_cluster(a_h, &g) {
            if span >= *required {
                return (
                    Status::HoldsAtHorizon,
                    Witness::Cluster {
                        gap: g,
                        window_start: start,
                        window_end: end,
                        span,
                        required: required.clone(),
                    },
                );
            }
            if best_overall.as_ref().map_or(true, |(_, s)| span > *s) {
                best_overall = Some((g, span));
            }
        }
    }
    let (best_gap, best_span) = best_overall.unwrap_or((Nat::one(), Nat::zero()));
    (
        Status::FailsAtHorizon,
        Witness::ClusterSearch {
            gap_max: params.ps_gap_max.clone(),
            required: required.clone(),
            best_gap,
            best_span,
        },
    )
}

fn horizon_checkpoints(horizon: &Nat, params: &FamilyParams) -> Result<Vec<Nat>> {
    let cps: Vec<Nat> = params
        .checkpoints
        .iter()
        .filter(|c| *c <= horizon && !c.is_zero())
        .cloned()
        .collect();
    if cps.is_empty() {
        return Err(Error::domain(
            "horizon smaller than every density checkpoint",
        ));
    }
    Ok(cps)
}

fn density_pieces(
    a_h: &RunSet,
    horizon: &Nat,
    params: &FamilyParams,
    upper_side: bool,
    near_one: bool,
) -> Result<(Status, Witness)> {
    let cps = horizon_checkpoints(horizon, params)?;
    let report = density_report(a_h, &cps, &params.tail_fraction)?;
    let threshold = if near_one {
        rat(1, 1) - params.epsilon.clone()
    } else {
        params.delta.clone()
    };
    let estimate = if upper_side {
        &report.upper_estimate
    } else {
        &report.lower_estimate
    };
    let holds = *estimate >= threshold;
    Ok((
        Status::of(holds),
        Witness::DensityEvidence {
            checkpoint_count: report.checkpoints.len(),
            lower: report.lower_estimate.clone(),
            upper: report.upper_estimate.clone(),
            threshold,
            side: if upper_side { "upper" } else { "lower" }.to_string(),
            argmin: report.argmin,
            argmax: report.argmax,
        },
    ))
}

fn banach_pieces(
    a_h: &RunSet,
    horizon: &Nat,
    params: &FamilyParams,
    upper_side: bool,
    near_one: bool,
) -> Result<(Status, Witness)> {
    let s = &params.banach_window;
    if s.is_zero() {
        return Err(Error::config("banach window must be positive"));
    }
    if s > horizon {
        return Err(Error::domain(
            "horizon smaller than the banach window",
        ));
    }
    let k_hi = horizon - s;
    let k_lo = std::cmp::min(params.banach_k_lo.clone(), k_hi.clone());
    let report = banach_report(a_h, s, &k_lo, &k_hi)?;
    let threshold = if near_one {
        rat(1, 1) - params.epsilon.clone()
    } else {
        params.delta.clone()
    };
    let estimate = if upper_side {
        &report.upper_estimate
    } else {
        &report.lower_estimate
    };
    let holds = *estimate >= threshold;
    Ok((
        Status::of(holds),
        Witness::BanachEvidence {
            window: s.clone(),
            k_lo,
            k_hi,
            min_count: report.min_count.clone(),
            max_count: report.max_count.clone(),
            threshold,
            side: if upper_side { "upper" } else { "lower" }.to_string(),
            argmin_k: report.argmin_k,
            argmax_k: report.argmax_k,
        },
    ))
}

fn witness_note(w: &Witness) -> String {
    match w {
        Witness::GapProfile {
            gap, last_element, ..
        } => match (gap, last_element) {
            (Some(g), Some(l)) => format!("gap={g},last={l}"),
            _ => "no finite gap".to_string(),
        },
        Witness::RunProfile {
            max_run, required, ..
        } => format!("run={max_run},required={required}"),
        Witness::ComplementTail {
            complement_last,
            bound,
        } => match complement_last {
            Some(l) => format!("complement_last={l},bound={bound}"),
            None => format!("complement empty,bound={bound}"),
        },
        Witness::Cluster { gap, span, .. } => format!("gap={gap},span={span}"),
        Witness::ClusterSearch {
            best_gap,
            best_span,
            ..
        } => format!("best_gap={best_gap},best_span={best_span}"),
        Witness::DensityEvidence { lower, upper, .. } => {
            format!("lower={lower},upper={upper}")
        }
        Witness::BanachEvidence {
            min_count,
            max_count,
            ..
        } => format!("min={min_count},max={max_count}"),
        _ => "compound".to_string(),
    }
}

fn shrink_all_pieces(
    a: &RunSet,
    horizon: &Nat,
    params: &FamilyParams,
    base: FamilyName,
) -> Result<(Status, Witness)> {
    let mut items = Vec::new();
    let mut all_hold = true;
    for n in 0..=params.shrink_n_max {
        let shrunk = a.shrink(&nat(n as u64), horizon);
        let sub = membership_verdict(&shrunk, base, horizon, params)?;
        all_hold &= sub.status.holds();
        items.push(SubVerdict {
            label: format!("N={n}"),
            status: sub.status,
            note: witness_note(&sub.witness),
        });
    }
    Ok((
        Status::of(all_hold),
        Witness::SubVerdicts {
            base: base.as_str().to_string(),
            transform: "tilde".to_string(),
            items,
        },
    ))
}

/// Decides membership of `A` in one of the named families at the horizon.
pub fn membership_verdict(
    a: &RunSet,
    family: FamilyName,
    horizon: &Nat,
    params: &FamilyParams,
) -> Result<Verdict> {
    if horizon.is_zero() {
        return Err(Error::domain("horizon must be positive"));
    }
    let a_h = a.clip(horizon);
    let (status, witness) = match family {
        FamilyName::Cofinite => cofinite_pieces(&a_h, horizon),
        FamilyName::Thick => thick_pieces(&a_h, horizon, params),
        FamilyName::Syndetic => syndetic_pieces(&a_h, horizon, params),
        FamilyName::PiecewiseSyndetic => piecewise_syndetic_pieces(&a_h, params),
        FamilyName::ThicklySyndetic => {
            shrink_all_pieces(&a_h, horizon, params, FamilyName::Syndetic)?
        }
        FamilyName::DUpperPos => density_pieces(&a_h, horizon, params, true, false)?,
        FamilyName::DLowerPos => density_pieces(&a_h, horizon, params, false, false)?,
        FamilyName::DUpper1 => density_pieces(&a_h, horizon, params, true, true)?,
        FamilyName::DLower1 => density_pieces(&a_h, horizon, params, false, true)?,
        FamilyName::BdUpperPos => banach_pieces(&a_h, horizon, params, true, false)?,
        FamilyName::BdLowerPos => banach_pieces(&a_h, horizon, params, false, false)?,
        FamilyName::BdUpper1 => banach_pieces(&a_h, horizon, params, true, true)?,
        FamilyName::BdLower1 => banach_pieces(&a_h, horizon, params, false, true)?,
    };
    Ok(Verdict {
        family: family.as_str().to_string(),
        status,
        horizon: horizon.clone(),
        witness,
        params: params.clone(),
    })
}

/// What [`ip_verdict`] should do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IpMode {
    /// Check that the finite sums of explicit generators all lie in `A`.
    ContainsFs,
    /// Search for generators whose finite sums all avoid `A`; success
    /// refutes `A` meeting every finite-sums set at this horizon.
    MissesFs,
}

impl FromStr for IpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contains_FS" => Ok(IpMode::ContainsFs),
            "misses_FS" => Ok(IpMode::MissesFs),
            other => Err(Error::config(format!("unknown ip mode: {other}"))),
        }
    }
}

const MAX_GENERATORS: usize = 24;

fn check_increasing(values: &[Nat], what: &str) -> Result<()> {
    if values.is_empty() {
        return Err(Error::domain(format!("{what} must be non-empty")));
    }
    if values[0].is_zero() {
        return Err(Error::domain(format!("{what} entries must be >= 1")));
    }
    for pair in values.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::domain(format!("{what} must be strictly increasing")));
        }
    }
    Ok(())
}

/// All non-empty finite sums of distinct generators, clipped to the horizon.
/// The boolean reports whether any sum overflowed the horizon.
fn materialize_finite_sums(generators: &[Nat], horizon: &Nat) -> Result<(Vec<Nat>, bool)> {
    if generators.len() > MAX_GENERATORS {
        return Err(Error::config(format!(
            "at most {MAX_GENERATORS} generators supported"
        )));
    }
    let mut sums: BTreeSet<Nat> = BTreeSet::new();
    let mut overflowed = false;
    for g in generators {
        let mut new_sums = Vec::new();
        if g > horizon {
            overflowed = true;
        } else {
            new_sums.push(g.clone());
        }
        for s in &sums {
            let t = s + g;
            if t > *horizon {
                overflowed = true;
            } else {
                new_sums.push(t);
            }
        }
        sums.extend(new_sums);
    }
    Ok((sums.into_iter().collect(), overflowed))
}

/// First `cap` elements of a set; the boolean reports whether more remain.
fn take_first(set: &RunSet, cap: usize) -> (Vec<Nat>, bool) {
    let mut out = Vec::new();
    for (a, b) in set.runs() {
        let mut x = a.clone();
        while x < *b {
            if out.len() == cap {
                return (out, true);
            }
            out.push(x.clone());
            x += 1u8;
        }
    }
    (out, false)
}

/// `set ∩ (lo, hi]`.
fn between(set: &RunSet, lo: &Nat, hi: &Nat) -> RunSet {
    if lo >= hi {
        return RunSet::empty();
    }
    let window = RunSet::interval(lo + 1u8, hi + 1u8).expect("lo < hi");
    set.intersect(&window)
}

struct FsSearch<'a> {
    d: &'a RunSet,
    depth: usize,
    generator_cap: Nat,
    candidate_cap: usize,
    node_budget: u64,
    nodes: u64,
    candidate_cap_hit: bool,
    budget_exhausted: bool,
}

impl FsSearch<'_> {
    fn dfs(&mut self, chosen: &mut Vec<Nat>, sums: &[Nat], domain: &RunSet) -> Option<Vec<Nat>> {
        if chosen.len() == self.depth {
            return Some(chosen.clone());
        }
        let lower = chosen.last().cloned().unwrap_or_else(Nat::zero);
        let window = between(domain, &lower, &self.generator_cap);
        let (candidates, more) = take_first(&window, self.candidate_cap);
        self.candidate_cap_hit |= more;
        for x in candidates {
            if self.nodes >= self.node_budget {
                self.budget_exhausted = true;
                return None;
            }
            self.nodes += 1;
            // every sum in FS(chosen ∪ {x}) already lies in D because x was
            // drawn from the domain; extend the sum list and the domain
            let mut new_sums = Vec::with_capacity(2 * sums.len() + 1);
            new_sums.push(x.clone());
            new_sums.extend(sums.iter().cloned());
            new_sums.extend(sums.iter().map(|s| s + &x));
            let mut new_domain = domain.intersect(&self.d.shift_minus(&x));
            for s in sums {
                new_domain = new_domain.intersect(&self.d.shift_minus(&(s + &x)));
            }
            chosen.push(x);
            if let Some(found) = self.dfs(chosen, &new_sums, &new_domain) {
                return Some(found);
            }
            chosen.pop();
            if self.budget_exhausted {
                return None;
            }
        }
        None
    }
}

/// Finite-sums membership evidence.
///
/// `ContainsFs` needs explicit generators and decides whether every finite
/// sum (clipped to the horizon) lies in `A`; sums beyond the horizon are
/// ignored but flagged in the witness. `MissesFs` runs a depth-bounded
/// branch-and-prune search for generators whose finite sums all stay inside
/// the complement of `A`; finding them refutes `A` meeting every
/// finite-sums set, while exhausting the search supports it at this horizon.
pub fn ip_verdict(
    a: &RunSet,
    mode: IpMode,
    generators: Option<&[Nat]>,
    depth: u32,
    horizon: &Nat,
    params: &FamilyParams,
) -> Result<Verdict> {
    if horizon.is_zero() {
        return Err(Error::domain("horizon must be positive"));
    }
    let a_h = a.clip(horizon);
    match mode {
        IpMode::ContainsFs => {
            let gens = generators
                .ok_or_else(|| Error::config("contains_FS needs explicit generators"))?;
            check_increasing(gens, "generators")?;
            let (sums, overflowed) = materialize_finite_sums(gens, horizon)?;
            let fs = RunSet::from_elements(sums.iter().cloned())?;
            let escapes = fs.difference(&a_h);
            let (status, witness) = match escapes.first() {
                None => (
                    Status::HoldsAtHorizon,
                    Witness::IpGenerators {
                        generators: gens.to_vec(),
                        finite_sum_count: sums.len(),
                        overflowed,
                    },
                ),
                Some(violating_sum) => (
                    Status::FailsAtHorizon,
                    Witness::IpViolation {
                        generators: gens.to_vec(),
                        violating_sum,
                    },
                ),
            };
            Ok(Verdict {
                family: "ip".to_string(),
                status,
                horizon: horizon.clone(),
                witness,
                params: params.clone(),
            })
        }
        IpMode::MissesFs => {
            if depth == 0 {
                return Err(Error::config("search depth must be at least 1"));
            }
            let d = a_h.complement(horizon);
            let mut search = FsSearch {
                d: &d,
                depth: depth as usize,
                generator_cap: params.ip_generator_cap.clone(),
                candidate_cap: params.ip_candidate_cap,
                node_budget: params.ip_node_budget,
                nodes: 0,
                candidate_cap_hit: false,
                budget_exhausted: false,
            };
            let found = search.dfs(&mut Vec::new(), &[], &d);
            let (status, witness) = match found {
                Some(generators) => {
                    let (sums, _) = materialize_finite_sums(&generators, horizon)?;
                    (
                        Status::FailsAtHorizon,
                        Witness::IpRefutation {
                            generators,
                            finite_sum_count: sums.len(),
                        },
                    )
                }
                None => (
                    Status::HoldsAtHorizon,
                    Witness::IpSearchExhausted {
                        depth,
                        nodes_used: search.nodes,
                        node_budget: params.ip_node_budget,
                        candidate_cap_hit: search.candidate_cap_hit,
                        budget_exhausted: search.budget_exhausted,
                        generator_cap: params.ip_generator_cap.clone(),
                    },
                ),
            };
            Ok(Verdict {
                family: "ip_star".to_string(),
                status,
                horizon: horizon.clone(),
                witness,
                params: params.clone(),
            })
        }
    }
}

/// What [`delta_verdict`] should do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaMode {
    /// Check that all pairwise differences of an explicit seed lie in `A`.
    ContainsDiffset,
    /// Tabulate difference multiplicities of the complement; bounded
    /// multiplicities support `A` meeting every difference set.
    DualEvidence,
}

impl FromStr for DeltaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contains_diffset" => Ok(DeltaMode::ContainsDiffset),
            "dual_evidence" => Ok(DeltaMode::DualEvidence),
            other => Err(Error::config(format!("unknown delta mode: {other}"))),
        }
    }
}

const MAX_SEED: usize = 4_000;

fn seed_differences(seed: &[Nat], horizon: &Nat) -> BTreeSet<Nat> {
    let mut diffs = BTreeSet::new();
    for (i, lo) in seed.iter().enumerate() {
        for hi in &seed[i + 1..] {
            let d = hi - lo;
            if d <= *horizon {
                diffs.insert(d);
            }
        }
    }
    diffs
}

/// Difference-set membership evidence.
///
/// `ContainsDiffset` needs an explicit increasing seed and decides whether
/// the pairwise differences (clipped to the horizon) all lie in `A`.
/// `DualEvidence` scans difference values just above the longest run of the
/// complement (longer-run differences are structurally forced) and reports
/// how often each is realized inside the complement; if none reaches the
/// cap, no difference value repeats unboundedly, which supports `A` meeting
/// every difference set at this horizon.
pub fn delta_verdict(
    a: &RunSet,
    mode: DeltaMode,
    seed: Option<&[Nat]>,
    horizon: &Nat,
    v_window: &Nat,
    params: &FamilyParams,
) -> Result<Verdict> {
    if horizon.is_zero() {
        return Err(Error::domain("horizon must be positive"));
    }
    let a_h = a.clip(horizon);
    match mode {
        DeltaMode::ContainsDiffset => {
            let seed = seed.ok_or_else(|| Error::config("contains_diffset needs a seed"))?;
            check_increasing(seed, "seed")?;
            if seed.len() < 2 {
                return Err(Error::domain("seed needs at least two entries"));
            }
            if seed.len() > MAX_SEED {
                return Err(Error::config(format!("at most {MAX_SEED} seed entries")));
            }
            let diffs = seed_differences(seed, horizon);
            let count = diffs.len();
            let diff_set = RunSet::from_elements(diffs)?;
            let escapes = diff_set.difference(&a_h);
            let (status, witness) = match escapes.first() {
                None => (
                    Status::HoldsAtHorizon,
                    Witness::DiffSeed {
                        seed: seed.to_vec(),
                        difference_count: count,
                    },
                ),
                Some(violating_difference) => (
                    Status::FailsAtHorizon,
                    Witness::DiffViolation {
                        seed: seed.to_vec(),
                        violating_difference,
                    },
                ),
            };
            Ok(Verdict {
                family: "delta".to_string(),
                status,
                horizon: horizon.clone(),
                witness,
                params: params.clone(),
            })
        }
        DeltaMode::DualEvidence => {
            let width = v_window
                .to_u64()
                .filter(|w| *w >= 1 && *w <= 10_000)
                .ok_or_else(|| Error::config("difference window must be in 1..=10000"))?;
            let d = a_h.complement(horizon);
            let v_min = d.max_run(horizon);
            let mut table = Vec::with_capacity(width as usize);
            let mut max_mult = Nat::zero();
            let mut argmax = &v_min + 1u8;
            for off in 1..=width {
                let v = &v_min + nat(off);
                if v > *horizon {
                    break;
                }
                let m = d.difference_multiplicity(&v, horizon)?;
                if m > max_mult {
                    max_mult = m.clone();
                    argmax = v.clone();
                }
                table.push((v, m));
            }
            let holds = max_mult < params.delta_mult_cap;
            let v_lo = &v_min + 1u8;
            let v_hi = &v_min + nat(width);
            Ok(Verdict {
                family: "delta_star".to_string(),
                status: Status::of(holds),
                horizon: horizon.clone(),
                witness: Witness::MultiplicityTable {
                    v_min,
                    v_lo,
                    v_hi,
                    cap: params.delta_mult_cap.clone(),
                    max_multiplicity: max_mult,
                    argmax,
                    table,
                },
                params: params.clone(),
            })
        }
    }
}

/// Transform applied by [`family_transform`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformKind {
    /// Membership of every margin-shrunk copy.
    Tilde,
    /// Membership of some shift within the band.
    Plus,
    /// Membership of every shift within the band.
    Bullet,
}

impl TransformKind {
    fn as_str(&self) -> &'static str {
        match self {
            TransformKind::Tilde => "tilde",
            TransformKind::Plus => "plus",
            TransformKind::Bullet => "bullet",
        }
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tilde" => Ok(TransformKind::Tilde),
            "plus" => Ok(TransformKind::Plus),
            "bullet" => Ok(TransformKind::Bullet),
            other => Err(Error::config(format!("unknown transform: {other}"))),
        }
    }
}

fn shift_by(a: &RunSet, j: i64) -> RunSet {
    if j >= 0 {
        a.shift_plus(&nat(j as u64))
    } else {
        a.shift_minus(&nat(j.unsigned_abs()))
    }
}

fn shift_band_pieces(
    a: &RunSet,
    horizon: &Nat,
    params: &FamilyParams,
    base: FamilyName,
    k: u64,
    need_all: bool,
) -> Result<(Status, Witness, &'static str)> {
    let k = k as i64;
    let mut items = Vec::new();
    let mut any = false;
    let mut all = true;
    for j in -k..=k {
        let shifted = shift_by(a, j).clip(horizon);
        let sub = membership_verdict(&shifted, base, horizon, params)?;
        any |= sub.status.holds();
        all &= sub.status.holds();
        items.push(SubVerdict {
            label: format!("k={j}"),
            status: sub.status,
            note: witness_note(&sub.witness),
        });
    }
    let (holds, transform) = if need_all {
        (all, "bullet")
    } else {
        (any, "plus")
    };
    Ok((
        Status::of(holds),
        Witness::SubVerdicts {
            base: base.as_str().to_string(),
            transform: transform.to_string(),
            items,
        },
        transform,
    ))
}

/// Membership of `A` in a transformed family: every shrunk copy (`tilde`),
/// some shift within `[-K, K]` (`plus`), or every such shift (`bullet`).
pub fn family_transform(
    a: &RunSet,
    base: FamilyName,
    transform: TransformKind,
    k: &Nat,
    n_max: u32,
    horizon: &Nat,
    params: &FamilyParams,
) -> Result<Verdict> {
    if horizon.is_zero() {
        return Err(Error::domain("horizon must be positive"));
    }
    let a_h = a.clip(horizon);
    let (status, witness) = match transform {
        TransformKind::Tilde => {
            let mut p = params.clone();
            p.shrink_n_max = n_max;
            let (status, witness) = shrink_all_pieces(&a_h, horizon, &p, base)?;
            (status, witness)
        }
        TransformKind::Plus | TransformKind::Bullet => {
            let k = k
                .to_u64()
                .filter(|k| *k <= 10_000)
                .ok_or_else(|| Error::config("shift band must be in 0..=10000"))?;
            let need_all = transform == TransformKind::Bullet;
            let (status, witness, _) = shift_band_pieces(&a_h, horizon, params, base, k, need_all)?;
            (status, witness)
        }
    };
    Ok(Verdict {
        family: format!("{}({})", transform.as_str(), base.as_str()),
        status,
        horizon: horizon.clone(),
        witness,
        params: params.clone(),
    })
}

fn complement_interior_gaps_ok(a_h: &RunSet, horizon: &Nat, gap: &Nat) -> bool {
    // between-element gaps of size g correspond to complement runs of
    // length g-1 strictly between the first and last element
    let (first, last) = match (a_h.first(), a_h.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return false,
    };
    let comp = a_h.complement(horizon);
    let bound = gap - 1u8;
    comp.runs()
        .iter()
        .filter(|(s, e)| *s > first && (e - 1u8) < last)
        .all(|(s, e)| e - s <= bound)
}

fn verify_periodic_tail(a_h: &RunSet, horizon: &Nat, period: &Nat, residues: &[Nat], tail_start: &Nat) -> bool {
    if period.is_zero() {
        return false;
    }
    let mut seen = BTreeSet::new();
    for r in residues {
        if r >= period || !seen.insert(r.clone()) {
            return false;
        }
    }
    // compare against the claimed periodic pattern over a trailing window
    let span = period * 4u32 + period;
    let w_lo = std::cmp::max(
        tail_start.clone(),
        if *horizon > span {
            horizon - &span
        } else {
            Nat::one()
        },
    );
    if w_lo > *horizon {
        return true;
    }
    let mut expected = Vec::new();
    let base = (&w_lo / period) * period;
    let mut block = base;
    while block <= *horizon {
        for r in residues {
            let x = &block + r;
            if x >= w_lo && x <= *horizon && !x.is_zero() {
                expected.push(x);
            }
        }
        block += period;
    }
    let expected = match RunSet::from_elements(expected) {
        Ok(s) => s,
        Err(_) => return false,
    };
    let window = match RunSet::interval(w_lo, horizon + 1u8) {
        Ok(w) => w,
        Err(_) => return false,
    };
    a_h.intersect(&window) == expected
}

fn periodic_density(period: &Nat, residues: &[Nat]) -> Rat {
    crate::numeric::rat_from_nats(&nat(residues.len() as u64), period)
}

fn verify_certified(v: &Verdict, a_h: &RunSet) -> bool {
    let Witness::PeriodicCertificate {
        period,
        residues,
        tail_start,
        ..
    } = &v.witness
    else {
        return false;
    };
    if !verify_periodic_tail(a_h, &v.horizon, period, residues, tail_start) {
        return false;
    }
    let dens = periodic_density(period, residues);
    let full = dens == rat(1, 1);
    let near_one = rat(1, 1) - v.params.epsilon.clone();
    match v.family.as_str() {
        "syndetic" | "piecewise_syndetic" | "transitive" | "salas" => !residues.is_empty(),
        "thick" | "cofinite" | "thickly_syndetic" => full,
        "D_upper_pos" | "D_lower_pos" | "BD_upper_pos" | "BD_lower_pos" => {
            dens >= v.params.delta
        }
        "D_upper_1" | "D_lower_1" | "BD_upper_1" | "BD_lower_1" => dens >= near_one,
        // meeting every difference / finite-sums set requires the multiples
        // of the period to stay inside the set eventually
        "delta_star" | "ip_star" => residues.contains(&Nat::zero()),
        _ => true,
    }
}

/// Independently re-checks a verdict's witness against the set it was
/// produced from. Returns `false` when the witness is inconsistent with the
/// set, the parameters, or the claimed status.
pub fn verify_verdict(v: &Verdict, a: &RunSet) -> bool {
    let h = &v.horizon;
    if h.is_zero() {
        return false;
    }
    let a_h = a.clip(h);
    if v.status == Status::Certified {
        return verify_certified(v, &a_h);
    }
    let holds = v.status.holds();
    match &v.witness {
        Witness::GapProfile {
            gap,
            last_element,
            final_record_gap,
            final_record_at,
            stability_bound,
        } => {
            if *last_element != a_h.last() {
                return false;
            }
            let records = gap_records(&a_h, h);
            let expected_final = records.last().cloned();
            let claimed_final = final_record_gap.clone().zip(final_record_at.clone());
            if expected_final != claimed_final {
                return false;
            }
            match gap {
                Some(g) => {
                    if a_h.max_gap(h) != GapBound::Finite(g.clone()) {
                        return false;
                    }
                    if !complement_interior_gaps_ok(&a_h, h, g) {
                        return false;
                    }
                    let tail_ok = a_h.last().map_or(false, |l| l >= h - g);
                    let stability_ok = match (stability_bound, final_record_at) {
                        (Some(b), Some(p)) => p <= b,
                        (Some(_), None) => false,
                        (None, _) => true,
                    };
                    holds == (tail_ok && stability_ok)
                }
                None => {
                    if a_h.max_gap(h) != GapBound::Infinite {
                        return false;
                    }
                    !holds
                }
            }
        }
        Witness::RunProfile {
            max_run,
            required,
            run_start,
        } => {
            if a_h.max_run(h) != *max_run {
                return false;
            }
            if *required != v.params.thick_run {
                return false;
            }
            if let Some(start) = run_start {
                let end = start + max_run;
                if max_run.is_zero() {
                    return false;
                }
                let claimed = match RunSet::interval(start.clone(), end) {
                    Ok(r) => r,
                    Err(_) => return false,
                };
                if a_h.intersect(&claimed) != claimed {
                    return false;
                }
            } else if !max_run.is_zero() {
                return false;
            }
            holds == (*max_run >= *required)
        }
        Witness::ComplementTail {
            complement_last,
            bound,
        } => {
            if *bound != h / 2u32 {
                return false;
            }
            if *complement_last != a_h.complement(h).last() {
                return false;
            }
            holds == complement_last.as_ref().map_or(true, |l| l <= bound)
        }
        Witness::Cluster {
            gap,
            window_start,
            window_end,
            span,
            required,
        } => {
            if !holds || *required != v.params.ps_window || *gap > v.params.ps_gap_max {
                return false;
            }
            if window_start >= window_end || *span != window_end - window_start {
                return false;
            }
            if *span < *required {
                return false;
            }
            let window = match RunSet::interval(window_start.clone(), window_end.clone()) {
                Ok(w) => w,
                Err(_) => return false,
            };
            let inside = a_h.intersect(&window);
            if inside.first() != Some(window_start.clone()) {
                return false;
            }
            if inside.last() != Some(window_end - 1u8) {
                return false;
            }
            match inside.max_gap(h) {
                GapBound::Finite(g) => g <= *gap,
                GapBound::Infinite => inside.cardinality() == Nat::one(),
            }
        }
        Witness::ClusterSearch {
            gap_max,
            required,
            best_gap,
            best_span,
        } => {
            if holds || *gap_max != v.params.ps_gap_max || *required != v.params.ps_window {
                return false;
            }
            match piecewise_syndetic_pieces(&a_h, &v.params) {
                (
                    Status::FailsAtHorizon,
                    Witness::ClusterSearch {
                        best_gap: bg,
                        best_span: bs,
                        ..
                    },
                ) => bg == *best_gap && bs == *best_span,
                _ => false,
            }
        }
        Witness::DensityEvidence {
            checkpoint_count,
            lower,
            upper,
            threshold,
            side,
            argmin,
            argmax,
        } => {
            let cps = match horizon_checkpoints(h, &v.params) {
                Ok(c) => c,
                Err(_) => return false,
            };
            let report = match density_report(&a_h, &cps, &v.params.tail_fraction) {
                Ok(r) => r,
                Err(_) => return false,
            };
            if report.checkpoints.len() != *checkpoint_count
                || report.lower_estimate != *lower
                || report.upper_estimate != *upper
                || report.argmin != *argmin
                || report.argmax != *argmax
            {
                return false;
            }
            let estimate = match side.as_str() {
                "upper" => upper,
                "lower" => lower,
                _ => return false,
            };
            holds == (estimate >= threshold)
        }
        Witness::BanachEvidence {
            window,
            k_lo,
            k_hi,
            min_count,
            max_count,
            threshold,
            side,
            argmin_k,
            argmax_k,
        } => {
            let report = match banach_report(&a_h, window, k_lo, k_hi) {
                Ok(r) => r,
                Err(_) => return false,
            };
            if report.min_count != *min_count
                || report.max_count != *max_count
                || report.argmin_k != *argmin_k
                || report.argmax_k != *argmax_k
            {
                return false;
            }
            // re-check the extreme windows directly from prefix counts
            let at = |k: &Nat| a_h.prefix_count(&(k + window)) - a_h.prefix_count(k);
            if at(argmin_k) != *min_count || at(argmax_k) != *max_count {
                return false;
            }
            let estimate = match side.as_str() {
                "upper" => max_count,
                "lower" => min_count,
                _ => return false,
            };
            let ratio = crate::numeric::rat_from_nats(estimate, window);
            holds == (ratio >= *threshold)
        }
        Witness::SubVerdicts {
            base,
            transform,
            items,
        } => {
            let base: FamilyName = match base.parse() {
                Ok(b) => b,
                Err(_) => return false,
            };
            let recomputed = match transform.as_str() {
                "tilde" => {
                    let mut p = v.params.clone();
                    p.shrink_n_max = match items.len().checked_sub(1) {
                        Some(n) => n as u32,
                        None => return false,
                    };
                    shrink_all_pieces(&a_h, h, &p, base)
                }
                "plus" | "bullet" => {
                    if items.len() % 2 == 0 {
                        return false;
                    }
                    let k = (items.len() / 2) as u64;
                    shift_band_pieces(&a_h, h, &v.params, base, k, transform == "bullet")
                        .map(|(s, w, _)| (s, w))
                }
                _ => return false,
            };
            match recomputed {
                Ok((status, Witness::SubVerdicts { items: expect, .. })) => {
                    status == v.status && expect == *items
                }
                _ => false,
            }
        }
        Witness::IpGenerators {
            generators,
            finite_sum_count,
            overflowed,
        } => {
            if !holds || check_increasing(generators, "generators").is_err() {
                return false;
            }
            let (sums, over) = match materialize_finite_sums(generators, h) {
                Ok(x) => x,
                Err(_) => return false,
            };
            if sums.len() != *finite_sum_count || over != *overflowed {
                return false;
            }
            sums.iter().all(|s| a_h.contains(s))
        }
        Witness::IpViolation {
            generators,
            violating_sum,
        } => {
            if holds {
                return false;
            }
            let (sums, _) = match materialize_finite_sums(generators, h) {
                Ok(x) => x,
                Err(_) => return false,
            };
            sums.contains(violating_sum) && !a_h.contains(violating_sum)
        }
        Witness::IpRefutation {
            generators,
            finite_sum_count,
        } => {
            if holds || check_increasing(generators, "generators").is_err() {
                return false;
            }
            if generators.iter().any(|g| *g > v.params.ip_generator_cap) {
                return false;
            }
            let (sums, over) = match materialize_finite_sums(generators, h) {
                Ok(x) => x,
                Err(_) => return false,
            };
            if over || sums.len() != *finite_sum_count {
                return false;
            }
            sums.iter().all(|s| !a_h.contains(s))
        }
        Witness::IpSearchExhausted {
            depth,
            nodes_used,
            node_budget,
            candidate_cap_hit,
            budget_exhausted,
            generator_cap,
        } => {
            if !holds
                || *node_budget != v.params.ip_node_budget
                || *generator_cap != v.params.ip_generator_cap
            {
                return false;
            }
            let d = a_h.complement(h);
            let mut search = FsSearch {
                d: &d,
                depth: *depth as usize,
                generator_cap: generator_cap.clone(),
                candidate_cap: v.params.ip_candidate_cap,
                node_budget: *node_budget,
                nodes: 0,
                candidate_cap_hit: false,
                budget_exhausted: false,
            };
            let found = search.dfs(&mut Vec::new(), &[], &d);
            found.is_none()
                && search.nodes == *nodes_used
                && search.candidate_cap_hit == *candidate_cap_hit
                && search.budget_exhausted == *budget_exhausted
        }
        Witness::DiffSeed {
            seed,
            difference_count,
        } => {
            if !holds || check_increasing(seed, "seed").is_err() {
                return false;
            }
            let diffs = seed_differences(seed, h);
            diffs.len() == *difference_count && diffs.iter().all(|d| a_h.contains(d))
        }
        Witness::DiffViolation {
            seed,
            violating_difference,
        } => {
            if holds {
                return false;
            }
            let diffs = seed_differences(seed, h);
            diffs.contains(violating_difference) && !a_h.contains(violating_difference)
        }
        Witness::MultiplicityTable {
            v_min,
            v_lo,
            v_hi,
            cap,
            max_multiplicity,
            argmax,
            table,
        } => {
            if *cap != v.params.delta_mult_cap {
                return false;
            }
            let d = a_h.complement(h);
            if d.max_run(h) != *v_min || *v_lo != v_min + 1u8 || *v_hi < *v_lo {
                return false;
            }
            let mut best = Nat::zero();
            let mut best_v = v_lo.clone();
            for (val, mult) in table {
                if val < v_lo || val > v_hi {
                    return false;
                }
                match d.difference_multiplicity(val, h) {
                    Ok(m) if m == *mult => {}
                    _ => return false,
                }
                if *mult > best {
                    best = mult.clone();
                    best_v = val.clone();
                }
            }
            if best != *max_multiplicity {
                return false;
            }
            if !best.is_zero() && best_v != *argmax {
                return false;
            }
            holds == (best < *cap)
        }
        Witness::MemberWitness {
            element,
            sets_intersected,
        } => {
            if *sets_intersected == 0 {
                return false;
            }
            match element {
                Some(x) => holds && !x.is_zero() && x <= h && a_h.contains(x),
                None => !holds && a_h.is_empty(),
            }
        }
        Witness::GrowthRecord {
            max_value,
            attained_at,
            tail_start,
        } => {
            if attained_at.is_zero() || attained_at > h {
                return false;
            }
            // `a` is the superlevel set the record is claimed to enter:
            // the record position must lie in it exactly when the check
            // holds, and the record must fall in the tail region.
            let late = attained_at > tail_start;
            let entered = a_h.contains(attained_at);
            if holds != (entered && late) {
                return false;
            }
            // a positive record with an element in `a` is consistent only
            // if the set is nonempty up to the record position
            !holds || max_value > &Int::zero() || !a_h.is_empty()
        }
        Witness::PeriodicCertificate { .. } => false,
    }
}
