//! Weight programs for backward weighted shifts and the return-time-set
//! machinery built on them.
//!
//! A weight sequence whose entries are powers of two is described by a
//! [`WeightSpec`]: runs of positions sharing one exponent step ([`Segment`])
//! grouped into blocks, either explicit or produced by a named generation
//! scheme.  Compiling a spec up to a horizon yields an [`ExponentProfile`]
//! holding the cumulative exponent `E(n) = log2 |w_1 * ... * w_n|` as a
//! piecewise-linear function, so every product comparison reduces to integer
//! arithmetic on segment endpoints.  Return-time sets, the growth check of
//! [`salas_check`], the per-class [`classify_shift`] report, and the
//! power/product variant [`power_product_check`] are all derived from that
//! profile without materializing individual weights.

use std::collections::BTreeMap;
use std::str::FromStr;

use num::{One, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::families::{
    delta_verdict, ip_verdict, membership_verdict, verify_verdict, DeltaMode, FamilyName,
    FamilyParams, IpMode, Status, Verdict, Witness,
};
use crate::intset::RunSet;
use crate::numeric::{isqrt, nat, parse_nat, serde_nat, serde_nat_vec, Int, Nat};

/// Hard cap on compile horizons, overridable through the environment.
pub const MAX_HORIZON_ENV: &str = "FAMDYN_MAX_HORIZON";
const DEFAULT_MAX_HORIZON: u64 = 200_000_000;

/// Largest horizon [`compile_exponent_profile`] accepts, from the
/// `FAMDYN_MAX_HORIZON` environment variable (default `2 * 10^8`).
pub fn max_horizon() -> u64 {
    std::env::var(MAX_HORIZON_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_HORIZON)
}

/// Which index set the shift acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftKind {
    /// Weights indexed by the positive integers.
    Unilateral,
    /// Weights indexed by all integers; backward return-time sets are
    /// meaningful.
    Bilateral,
}

impl FromStr for ShiftKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unilateral" => Ok(ShiftKind::Unilateral),
            "bilateral" => Ok(ShiftKind::Bilateral),
            other => Err(Error::config(format!("unknown shift kind: {other}"))),
        }
    }
}

/// A run of consecutive positions whose weights share one exponent step:
/// `length` positions each multiplying the running product by `2^delta`.
/// Serialized as a `[length, delta]` pair of decimal strings so lengths are
/// not limited to machine integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub length: Nat,
    pub delta: i64,
}

impl Segment {
    pub fn new(length: Nat, delta: i64) -> Segment {
        Segment { length, delta }
    }
}

impl Serialize for Segment {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (self.length.to_string(), self.delta.to_string()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Segment {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let (len, delta): (String, String) = Deserialize::deserialize(d)?;
        let length = parse_nat(&len).map_err(D::Error::custom)?;
        let delta = delta
            .parse::<i64>()
            .map_err(|e| D::Error::custom(format!("bad segment delta: {e}")))?;
        Ok(Segment { length, delta })
    }
}

/// Parameters of a named generation scheme for weight sequences too long to
/// write out segment by segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
}

/// The body of a weight sequence: explicit blocks of segments, or a named
/// scheme expanded at compile time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Program {
    Blocks(Vec<Vec<Segment>>),
    Scheme(SchemeSpec),
}

/// A complete description of a weight sequence.
///
/// `program` covers positive positions; when it runs out before the compile
/// horizon, `right_cycle` (if present) repeats forever.  For bilateral
/// shifts `left_cycle` gives the exponent steps of `w_0, w_{-1}, ...`
/// cyclically.  `checkpoints` are construction-specific prefix lengths that
/// density estimates should sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub kind: ShiftKind,
    pub name: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, String>,
    pub program: Program,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub left_cycle: Vec<Segment>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub right_cycle: Vec<Segment>,
    #[serde(default, with = "serde_nat_vec", skip_serializing_if = "Vec::is_empty")]
    pub checkpoints: Vec<Nat>,
}

/// Named weight constructions known to [`generate_weight`].
pub const CONSTRUCTIONS: [&str; 8] = [
    "p41_1",
    "p41_2",
    "p41_3",
    "bd1_nonmixing",
    "p44_ruler",
    "p52_ip",
    "p54_delta",
    "p58_rhc",
];

/// Utility constructions accepted in addition to [`CONSTRUCTIONS`].
pub const UTILITY_CONSTRUCTIONS: [&str; 2] = ["const", "periodic"];

const CHECKPOINT_CAP: usize = 64;

fn check_params(params: &BTreeMap<String, String>, allowed: &[&str]) -> Result<()> {
    for key in params.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::config(format!(
                "unknown parameter `{key}` (allowed: {})",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

fn param_nat(params: &BTreeMap<String, String>, key: &str, default: u64) -> Result<Nat> {
    match params.get(key) {
        None => Ok(nat(default)),
        Some(v) => parse_nat(v).map_err(|e| Error::config(format!("parameter `{key}`: {e}"))),
    }
}

fn param_i64(params: &BTreeMap<String, String>, key: &str, default: i64) -> Result<i64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse::<i64>()
            .map_err(|e| Error::config(format!("parameter `{key}`: {e}"))),
    }
}

fn param_u32(params: &BTreeMap<String, String>, key: &str) -> Result<Option<u32>> {
    match params.get(key) {
        None => Ok(None),
        Some(v) => v
            .parse::<u32>()
            .map(Some)
            .map_err(|e| Error::config(format!("parameter `{key}`: {e}"))),
    }
}

fn param_kind(params: &BTreeMap<String, String>) -> Result<ShiftKind> {
    match params.get("kind") {
        None => Ok(ShiftKind::Unilateral),
        Some(v) => v.parse(),
    }
}

fn param_pattern(params: &BTreeMap<String, String>, key: &str) -> Result<Option<Vec<i64>>> {
    let Some(raw) = params.get(key) else {
        return Ok(None);
    };
    let steps: std::result::Result<Vec<i64>, _> =
        raw.split(',').map(|p| p.trim().parse::<i64>()).collect();
    let steps = steps.map_err(|e| Error::config(format!("parameter `{key}`: {e}")))?;
    if steps.is_empty() {
        return Err(Error::config(format!("parameter `{key}` must be nonempty")));
    }
    Ok(Some(steps))
}

fn nat_to_i64_delta(v: &Nat, what: &str) -> Result<i64> {
    v.to_i64()
        .ok_or_else(|| Error::config(format!("{what} exceeds the supported exponent range")))
}

fn thin_checkpoints(mut cps: Vec<Nat>) -> Vec<Nat> {
    cps.sort();
    cps.dedup();
    if cps.len() <= CHECKPOINT_CAP {
        return cps;
    }
    // keep an evenly spaced subset that always includes the last entry
    let step = cps.len().div_ceil(CHECKPOINT_CAP);
    let last = cps.len() - 1;
    let mut kept: Vec<Nat> = Vec::new();
    let mut i = last;
    loop {
        kept.push(cps[i].clone());
        if i < step {
            break;
        }
        i -= step;
    }
    kept.reverse();
    kept
}

fn ones(len: Nat) -> Segment {
    Segment::new(len, 0)
}

fn twos(len: Nat) -> Segment {
    Segment::new(len, 1)
}

fn reset(magnitude: i64) -> Segment {
    Segment::new(Nat::one(), -magnitude)
}

fn gen_p41_1(coverage: &Nat, base: &Nat) -> Result<(Vec<Vec<Segment>>, Vec<Nat>)> {
    if *base < nat(2) {
        return Err(Error::config("growth base must be at least 2"));
    }
    let mut blocks = Vec::new();
    let mut ends = Vec::new();
    let mut pos = Nat::zero();
    let mut m_prev = Nat::one();
    for k in 1u32..=64 {
        let block = vec![
            ones(m_prev.clone()),
            twos(nat(k as u64)),
            reset(k as i64),
        ];
        pos += &m_prev + nat(k as u64) + 1u32;
        blocks.push(block);
        if pos <= *coverage {
            ends.push(pos.clone());
        }
        if pos >= *coverage {
            return Ok((blocks, ends));
        }
        m_prev *= base;
    }
    Err(Error::config("coverage too large for this construction"))
}

fn gen_p41_2(coverage: &Nat) -> Result<(Vec<Vec<Segment>>, Vec<Nat>)> {
    let tower = |e: u32| -> Result<Nat> {
        if e > 20 {
            return Err(Error::config("coverage too large for this construction"));
        }
        Ok(crate::numeric::pow10(1u32 << e))
    };
    let mut blocks = Vec::new();
    let mut cps = Vec::new();
    let mut pos = Nat::zero();
    let push_seg = |block: &mut Vec<Segment>, seg: Segment, pos: &mut Nat, cps: &mut Vec<Nat>| {
        *pos += &seg.length;
        if *pos <= *coverage {
            cps.push(pos.clone());
        }
        block.push(seg);
    };
    let mut prev_twos: Option<Nat> = None;
    for k in 0u32..=6 {
        // lengths 10^(2^(2k+2)) - 10^(2^(2k+1)) of flat weights followed by
        // 10^(2^(2k+3)) - 10^(2^(2k+2)) doubling weights
        let flat = tower(2 * k + 2)? - tower(2 * k + 1)?;
        let doubling = tower(2 * k + 3)? - tower(2 * k + 2)?;
        let mut block = Vec::new();
        match prev_twos.take() {
            None => {
                push_seg(&mut block, ones(flat), &mut pos, &mut cps);
            }
            Some(prev) => {
                let magnitude = nat_to_i64_delta(&prev, "reset step")?;
                push_seg(&mut block, reset(magnitude), &mut pos, &mut cps);
                push_seg(&mut block, ones(flat - 1u32), &mut pos, &mut cps);
            }
        }
        push_seg(&mut block, twos(doubling.clone()), &mut pos, &mut cps);
        blocks.push(block);
        if pos >= *coverage {
            return Ok((blocks, cps));
        }
        prev_twos = Some(doubling);
    }
    Err(Error::config("coverage too large for this construction"))
}

fn gen_p41_3(coverage: &Nat) -> Result<(Vec<Vec<Segment>>, Vec<Nat>)> {
    let mut blocks = vec![vec![ones(Nat::one()), twos(Nat::one()), reset(1)]];
    let mut ends = Vec::new();
    let mut pos = nat(3);
    if pos <= *coverage {
        ends.push(pos.clone());
    }
    let mut m = nat(10);
    for k in 0u32..=7 {
        if pos >= *coverage {
            return Ok((blocks, ends));
        }
        let magnitude = nat_to_i64_delta(&m, "reset step")?;
        blocks.push(vec![
            ones(nat(k as u64 + 2)),
            twos(m.clone()),
            reset(magnitude),
        ]);
        pos += nat(k as u64 + 2) + &m + 1u32;
        if pos <= *coverage {
            ends.push(pos.clone());
        }
        m = &m * &m;
    }
    Err(Error::config("coverage too large for this construction"))
}

fn gen_bd1(coverage: &Nat) -> Result<(Vec<Vec<Segment>>, Vec<Nat>)> {
    let mut blocks = vec![vec![ones(Nat::one())]];
    let mut ends = vec![Nat::one()];
    let mut pos = Nat::one();
    let mut n: u64 = 1;
    while pos < *coverage {
        blocks.push(vec![twos(nat(n)), reset(n as i64)]);
        pos += nat(n + 1);
        ends.push(pos.clone());
        n += 1;
        if n > 10_000_000 {
            return Err(Error::config("coverage too large for this construction"));
        }
    }
    ends.retain(|e| e <= coverage);
    Ok((blocks, thin_checkpoints(ends)))
}

/// Sorted reset positions shared by the two "flat exactly on a given set"
/// constructions: weights double everywhere except that the product is
/// knocked back to one at each element of `resets`.
fn reset_position_blocks(resets: &[u64], coverage: u64) -> Vec<Vec<Segment>> {
    let mut blocks = Vec::new();
    let mut prev: u64 = 0;
    for &b in resets {
        debug_assert!(b > prev);
        let gap = b - prev - 1;
        let mut block = Vec::new();
        if gap > 0 {
            block.push(twos(nat(gap)));
        }
        block.push(reset(gap as i64));
        blocks.push(block);
        prev = b;
    }
    if prev < coverage {
        blocks.push(vec![twos(nat(coverage - prev))]);
    }
    blocks
}

fn gen_p52(coverage: &Nat) -> Result<(Vec<Vec<Segment>>, Vec<Nat>)> {
    let cov = coverage
        .to_u64()
        .ok_or_else(|| Error::config("coverage too large for this construction"))?;
    // finite sums of distinct powers 4^i, i >= 1
    let mut powers = Vec::new();
    let mut p: u64 = 4;
    while p <= cov {
        powers.push(p);
        match p.checked_mul(4) {
            Some(next) => p = next,
            None => break,
        }
    }
    let mut sums = vec![0u64];
    for &pw in &powers {
        let mut extended = Vec::with_capacity(sums.len());
        for &s in &sums {
            if let Some(v) = s.checked_add(pw) {
                if v <= cov {
                    extended.push(v);
                }
            }
        }
        sums.extend(extended);
    }
    sums.retain(|&s| s > 0);
    sums.sort_unstable();
    let blocks = reset_position_blocks(&sums, cov);
    let cps = thin_checkpoints(sums.iter().map(|&s| nat(s)).collect());
    Ok((blocks, cps))
}

fn gen_p54(coverage: &Nat) -> Result<(Vec<Vec<Segment>>, Vec<Nat>)> {
    let cov = coverage
        .to_u64()
        .ok_or_else(|| Error::config("coverage too large for this construction"))?;
    // reset positions with strictly growing consecutive differences 3, 4, 5, ...
    let mut resets = Vec::new();
    let mut b: u64 = 2;
    let mut step: u64 = 3;
    while b <= cov {
        resets.push(b);
        b = b
            .checked_add(step)
            .ok_or_else(|| Error::config("coverage too large for this construction"))?;
        step += 1;
    }
    let blocks = reset_position_blocks(&resets, cov);
    let cps = thin_checkpoints(resets.iter().map(|&s| nat(s)).collect());
    Ok((blocks, cps))
}

fn ruler_depth_for(coverage: &Nat) -> u32 {
    // smallest n >= 1 with 3 * 2^n - 2 >= coverage, capped
    let mut n = 1u32;
    let mut cp = nat(4);
    while cp < *coverage && n < 40 {
        n += 1;
        cp = nat(3) * (Nat::one() << n as usize) - 2u32;
    }
    n
}

fn gen_p44(coverage: &Nat, depth: Option<u32>) -> Result<(SchemeSpec, Vec<Nat>)> {
    let depth = match depth {
        Some(d) if (1..=40).contains(&d) => d,
        Some(_) => return Err(Error::config("depth must lie in 1..=40")),
        None => ruler_depth_for(coverage),
    };
    let cps = (1..=depth)
        .map(|n| nat(3) * (Nat::one() << n as usize) - 2u32)
        .collect();
    Ok((
        SchemeSpec {
            scheme: "ruler_doubling".to_string(),
            depth: Some(depth),
        },
        cps,
    ))
}

/// Instantiates a named construction.  Every construction accepts a
/// `horizon` parameter giving the coverage the program must reach (default
/// `10^6`); further parameters are construction specific.  The resolved
/// parameter values are echoed into the returned spec.
pub fn generate_weight(
    construction: &str,
    params: &BTreeMap<String, String>,
) -> Result<WeightSpec> {
    let coverage = param_nat(params, "horizon", 1_000_000)?;
    if coverage.is_zero() {
        return Err(Error::config("horizon must be positive"));
    }
    let mut resolved: BTreeMap<String, String> = BTreeMap::new();
    resolved.insert("horizon".to_string(), coverage.to_string());
    let spec = match construction {
        "p41_1" => {
            check_params(params, &["horizon", "base"])?;
            let base = param_nat(params, "base", 10)?;
            resolved.insert("base".to_string(), base.to_string());
            let (blocks, cps) = gen_p41_1(&coverage, &base)?;
            WeightSpec {
                kind: ShiftKind::Unilateral,
                name: construction.to_string(),
                params: resolved,
                program: Program::Blocks(blocks),
                left_cycle: Vec::new(),
                right_cycle: Vec::new(),
                checkpoints: cps,
            }
        }
        "p41_2" => {
            check_params(params, &["horizon"])?;
            let (blocks, cps) = gen_p41_2(&coverage)?;
            WeightSpec {
                kind: ShiftKind::Unilateral,
                name: construction.to_string(),
                params: resolved,
                program: Program::Blocks(blocks),
                left_cycle: Vec::new(),
                right_cycle: Vec::new(),
                checkpoints: cps,
            }
        }
        "p41_3" => {
            check_params(params, &["horizon"])?;
            let (blocks, cps) = gen_p41_3(&coverage)?;
            WeightSpec {
                kind: ShiftKind::Unilateral,
                name: construction.to_string(),
                params: resolved,
                program: Program::Blocks(blocks),
                left_cycle: Vec::new(),
                right_cycle: Vec::new(),
                checkpoints: cps,
            }
        }
        "bd1_nonmixing" => {
            check_params(params, &["horizon"])?;
            let (blocks, cps) = gen_bd1(&coverage)?;
            WeightSpec {
                kind: ShiftKind::Unilateral,
                name: construction.to_string(),
                params: resolved,
                program: Program::Blocks(blocks),
                left_cycle: Vec::new(),
                right_cycle: Vec::new(),
                checkpoints: cps,
            }
        }
        "p44_ruler" => {
            check_params(params, &["horizon", "depth"])?;
            let (scheme, cps) = gen_p44(&coverage, param_u32(params, "depth")?)?;
            resolved.insert("depth".to_string(), scheme.depth.unwrap().to_string());
            WeightSpec {
                kind: ShiftKind::Unilateral,
                name: construction.to_string(),
                params: resolved,
                program: Program::Scheme(scheme),
                left_cycle: Vec::new(),
                right_cycle: Vec::new(),
                checkpoints: cps,
            }
        }
        "p52_ip" => {
            check_params(params, &["horizon"])?;
            let (blocks, cps) = gen_p52(&coverage)?;
            WeightSpec {
                kind: ShiftKind::Unilateral,
                name: construction.to_string(),
                params: resolved,
                program: Program::Blocks(blocks),
                left_cycle: Vec::new(),
                right_cycle: Vec::new(),
                checkpoints: cps,
            }
        }
        "p54_delta" => {
            check_params(params, &["horizon"])?;
            let (blocks, cps) = gen_p54(&coverage)?;
            WeightSpec {
                kind: ShiftKind::Unilateral,
                name: construction.to_string(),
                params: resolved,
                program: Program::Blocks(blocks),
                left_cycle: Vec::new(),
                right_cycle: Vec::new(),
                checkpoints: cps,
            }
        }
        "p58_rhc" => {
            check_params(params, &["horizon"])?;
            WeightSpec {
                kind: ShiftKind::Unilateral,
                name: construction.to_string(),
                params: resolved,
                program: Program::Scheme(SchemeSpec {
                    scheme: "decade_windows".to_string(),
                    depth: None,
                }),
                left_cycle: Vec::new(),
                right_cycle: Vec::new(),
                checkpoints: Vec::new(),
            }
        }
        "const" => {
            check_params(params, &["horizon", "exponent", "left_exponent", "kind"])?;
            let kind = param_kind(params)?;
            let e = param_i64(params, "exponent", 1)?;
            resolved.insert("exponent".to_string(), e.to_string());
            resolved.insert("kind".to_string(), kind_str(kind).to_string());
            let left_cycle = match kind {
                ShiftKind::Unilateral => Vec::new(),
                ShiftKind::Bilateral => {
                    // mirrored by default: the exponent grows toward both ends
                    let le = param_i64(params, "left_exponent", e.checked_neg().unwrap_or(0))?;
                    resolved.insert("left_exponent".to_string(), le.to_string());
                    vec![Segment::new(Nat::one(), le)]
                }
            };
            WeightSpec {
                kind,
                name: construction.to_string(),
                params: resolved,
                program: Program::Blocks(Vec::new()),
                left_cycle,
                right_cycle: vec![Segment::new(Nat::one(), e)],
                checkpoints: Vec::new(),
            }
        }
        "periodic" => {
            check_params(params, &["horizon", "pattern", "left_pattern", "kind"])?;
            let kind = param_kind(params)?;
            let pattern = param_pattern(params, "pattern")?
                .ok_or_else(|| Error::config("periodic construction needs a `pattern`"))?;
            resolved.insert("pattern".to_string(), join_pattern(&pattern));
            resolved.insert("kind".to_string(), kind_str(kind).to_string());
            let left_cycle = match kind {
                ShiftKind::Unilateral => Vec::new(),
                ShiftKind::Bilateral => {
                    // mirrored by default: E(-m) retraces E(m)
                    let lp = match param_pattern(params, "left_pattern")? {
                        Some(lp) => lp,
                        None => pattern.iter().map(|d| -d).collect(),
                    };
                    resolved.insert("left_pattern".to_string(), join_pattern(&lp));
                    lp.into_iter().map(|d| Segment::new(Nat::one(), d)).collect()
                }
            };
            WeightSpec {
                kind,
                name: construction.to_string(),
                params: resolved,
                program: Program::Blocks(Vec::new()),
                left_cycle,
                right_cycle: pattern
                    .into_iter()
                    .map(|d| Segment::new(Nat::one(), d))
                    .collect(),
                checkpoints: Vec::new(),
            }
        }
        other => {
            return Err(Error::config(format!(
                "unknown construction `{other}` (known: {}, {})",
                CONSTRUCTIONS.join(", "),
                UTILITY_CONSTRUCTIONS.join(", ")
            )))
        }
    };
    Ok(spec)
}

fn kind_str(kind: ShiftKind) -> &'static str {
    match kind {
        ShiftKind::Unilateral => "unilateral",
        ShiftKind::Bilateral => "bilateral",
    }
}

fn join_pattern(p: &[i64]) -> String {
    p.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Cyclic tail data of a compiled profile: from position `start` on (axis
/// positions for the left tail), the exponent steps repeat with the given
/// `period`.  `offsets[k]` is `E(start - 1 + k + 1) - E(start - 1)` within
/// the first cycle and `net` the per-cycle change.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodicTail {
    pub start: u64,
    pub period: u64,
    pub net: i64,
    pub offsets: Vec<i64>,
}

/// A weight spec compiled up to a horizon: breakpoints of the cumulative
/// exponent `E`, one mirrored set of arrays for negative indices when the
/// shift is bilateral, and periodic-tail summaries when the weight spec
/// declares cycles.
#[derive(Debug, Clone)]
pub struct ExponentProfile {
    kind: ShiftKind,
    name: String,
    horizon: u64,
    ends: Vec<u64>,
    cum: Vec<i64>,
    slopes: Vec<i64>,
    neg_ends: Vec<u64>,
    neg_cum: Vec<i64>,
    neg_slopes: Vec<i64>,
    block_ends: Vec<u64>,
    fwd_tail: Option<PeriodicTail>,
    neg_tail: Option<PeriodicTail>,
}

struct Expansion {
    segs: Vec<(u64, i64)>,
    covered: u64,
    exhausted: bool,
    block_ends: Vec<u64>,
}

fn expand_blocks(blocks: &[Vec<Segment>], horizon: u64) -> Result<Expansion> {
    let mut segs = Vec::new();
    let mut block_ends = Vec::new();
    let mut pos: u64 = 0;
    for block in blocks {
        for seg in block {
            let remaining = horizon - pos;
            match seg.length.to_u64() {
                Some(len) if len <= remaining => {
                    segs.push((len, seg.delta));
                    pos += len;
                }
                _ => {
                    // clipped mid-segment: the program extends past the horizon
                    if remaining > 0 {
                        segs.push((remaining, seg.delta));
                    }
                    return Ok(Expansion {
                        segs,
                        covered: horizon,
                        exhausted: false,
                        block_ends,
                    });
                }
            }
        }
        block_ends.push(pos);
    }
    Ok(Expansion {
        segs,
        covered: pos,
        exhausted: true,
        block_ends,
    })
}

fn expand_ruler(horizon: u64) -> Result<Expansion> {
    // doubling recursion: the sequence for level n is the level n-1 sequence,
    // then n doubling steps and one full reset, then the level n-1 sequence
    // again; level n-1 is a prefix of level n, so doubling in place until the
    // prefix covers the horizon is exact
    let mut segs: Vec<(u64, i64)> = Vec::new();
    let mut total: u64 = 0;
    let push_clipped = |segs: &mut Vec<(u64, i64)>, total: &mut u64, len: u64, delta: i64| {
        if *total < horizon {
            let take = len.min(horizon - *total);
            segs.push((take, delta));
            *total += take;
        }
    };
    push_clipped(&mut segs, &mut total, 1, 1);
    push_clipped(&mut segs, &mut total, 1, -1);
    let mut block_ends = Vec::new();
    if 2 <= horizon {
        block_ends.push(2);
    }
    let mut full: Option<u64> = Some(2);
    let mut n: u64 = 2;
    while total < horizon {
        if n > 62 {
            return Err(Error::config("horizon too large for the doubling scheme"));
        }
        let prefix = segs.len();
        push_clipped(&mut segs, &mut total, n, 1);
        push_clipped(&mut segs, &mut total, 1, -(n as i64));
        for i in 0..prefix {
            if total >= horizon {
                break;
            }
            let (len, delta) = segs[i];
            push_clipped(&mut segs, &mut total, len, delta);
        }
        full = full.and_then(|f| f.checked_mul(2)).and_then(|f| f.checked_add(n + 1));
        if let Some(f) = full {
            if f <= horizon {
                block_ends.push(f);
            }
        }
        n += 1;
    }
    Ok(Expansion {
        segs,
        covered: horizon,
        exhausted: false,
        block_ends,
    })
}

fn expand_decades(horizon: u64) -> Result<Expansion> {
    // windows of odd length 2j-1 centered at the multiples of 10^j
    let mut runs: Vec<(u64, u64)> = Vec::new();
    let mut power: u64 = 10;
    let mut j: u64 = 1;
    loop {
        let first_start = power - (j - 1);
        if first_start > horizon {
            break;
        }
        let mut l: u64 = 1;
        loop {
            let center = match l.checked_mul(power) {
                Some(c) => c,
                None => break,
            };
            let start = center - (j - 1);
            if start > horizon {
                break;
            }
            runs.push((start, (center + (j - 1)).min(horizon)));
            l += 1;
        }
        match power.checked_mul(10) {
            Some(p) => power = p,
            None => break,
        }
        j += 1;
    }
    runs.sort_unstable();
    let mut merged: Vec<(u64, u64)> = Vec::with_capacity(runs.len());
    for (s, e) in runs {
        match merged.last_mut() {
            Some((_, le)) if s <= *le + 1 => {
                if e > *le {
                    *le = e;
                }
            }
            _ => merged.push((s, e)),
        }
    }
    let mut segs = Vec::with_capacity(3 * merged.len() + 2);
    let mut pos: u64 = 0;
    let mut prev_len: Option<u64> = None;
    for (s, e) in merged {
        debug_assert!(s > pos + 1 || pos == 0);
        // the position right after a finished run resets the product, the
        // rest of the gap is flat
        let mut gap_lo = pos + 1;
        if let Some(pl) = prev_len {
            segs.push((1, -(pl as i64)));
            gap_lo += 1;
        }
        if s > gap_lo {
            segs.push((s - gap_lo, 0));
        }
        let len = e - s + 1;
        segs.push((len, 1));
        pos = e;
        prev_len = Some(len);
    }
    if pos < horizon {
        let mut gap_lo = pos + 1;
        if let Some(pl) = prev_len {
            segs.push((1, -(pl as i64)));
            gap_lo += 1;
        }
        if horizon >= gap_lo {
            segs.push((horizon - gap_lo + 1, 0));
        }
    }
    Ok(Expansion {
        segs,
        covered: horizon,
        exhausted: false,
        block_ends: Vec::new(),
    })
}

struct CycleInfo {
    period: u64,
    net: i64,
    offsets: Vec<i64>,
}

fn cycle_info(cycle: &[Segment]) -> Result<CycleInfo> {
    let mut period: u64 = 0;
    let mut offsets = Vec::new();
    let mut acc: i64 = 0;
    for seg in cycle {
        let len = seg
            .length
            .to_u64()
            .filter(|l| *l > 0)
            .ok_or_else(|| Error::config("cycle segment lengths must be positive and bounded"))?;
        period = period
            .checked_add(len)
            .ok_or_else(|| Error::config("cycle period overflow"))?;
        if period > 1_000_000 {
            return Err(Error::config("cycle period must not exceed 10^6"));
        }
        for _ in 0..len {
            acc = acc
                .checked_add(seg.delta)
                .ok_or_else(|| Error::config("cycle exponent overflow"))?;
            offsets.push(acc);
        }
    }
    if period == 0 {
        return Err(Error::config("cycle must have positive length"));
    }
    Ok(CycleInfo {
        period,
        net: acc,
        offsets,
    })
}

fn fill_cycle(segs: &mut Vec<(u64, i64)>, cycle: &[Segment], need: u64) -> Result<CycleInfo> {
    let info = cycle_info(cycle)?;
    let mut filled: u64 = 0;
    'outer: loop {
        for seg in cycle {
            if filled == need {
                break 'outer;
            }
            let len = seg.length.to_u64().unwrap();
            let take = len.min(need - filled);
            match segs.last_mut() {
                Some(last) if last.1 == seg.delta => last.0 += take,
                _ => {
                    if segs.len() >= 32_000_000 {
                        return Err(Error::config(
                            "cyclic tail too fine for this horizon; shorten the horizon or coarsen the cycle",
                        ));
                    }
                    segs.push((take, seg.delta));
                }
            }
            filled += take;
        }
    }
    Ok(info)
}

fn build_axis(raw: &[(u64, i64)]) -> Result<(Vec<u64>, Vec<i64>, Vec<i64>)> {
    let mut ends = Vec::with_capacity(raw.len());
    let mut cum = Vec::with_capacity(raw.len());
    let mut slopes = Vec::with_capacity(raw.len());
    let mut pos: u64 = 0;
    let mut e: i64 = 0;
    for &(len, delta) in raw {
        if len == 0 {
            continue;
        }
        let step = (len as i128) * (delta as i128);
        let next = e as i128 + step;
        if next.unsigned_abs() > (i64::MAX / 4) as u128 {
            return Err(Error::config("cumulative exponent exceeds the supported range"));
        }
        pos = pos
            .checked_add(len)
            .ok_or_else(|| Error::config("position overflow"))?;
        e = next as i64;
        if slopes.last() == Some(&delta) {
            *ends.last_mut().unwrap() = pos;
            *cum.last_mut().unwrap() = e;
        } else {
            ends.push(pos);
            cum.push(e);
            slopes.push(delta);
        }
    }
    Ok((ends, cum, slopes))
}

/// Compiles a weight spec so that `E` is queryable for all positions up to
/// `horizon` (both signs for bilateral shifts).  Fails if the horizon
/// exceeds the `FAMDYN_MAX_HORIZON` cap or the program's coverage.
pub fn compile_exponent_profile(spec: &WeightSpec, horizon: &Nat) -> Result<ExponentProfile> {
    let h = horizon
        .to_u64()
        .filter(|h| *h <= max_horizon())
        .ok_or_else(|| {
            Error::config(format!(
                "horizon exceeds the {} cap of {}",
                MAX_HORIZON_ENV,
                max_horizon()
            ))
        })?;
    if h == 0 {
        return Err(Error::config("horizon must be positive"));
    }
    let mut expansion = match &spec.program {
        Program::Blocks(blocks) => expand_blocks(blocks, h)?,
        Program::Scheme(s) => match s.scheme.as_str() {
            "ruler_doubling" => expand_ruler(h)?,
            "decade_windows" => expand_decades(h)?,
            other => return Err(Error::config(format!("unknown scheme: {other}"))),
        },
    };
    let mut fwd_tail = None;
    if expansion.covered < h {
        if spec.right_cycle.is_empty() || !expansion.exhausted {
            return Err(Error::config(format!(
                "program covers {} positions but the horizon is {h}; regenerate with a larger `horizon` parameter",
                expansion.covered
            )));
        }
        let start = expansion.covered + 1;
        let info = fill_cycle(&mut expansion.segs, &spec.right_cycle, h - expansion.covered)?;
        fwd_tail = Some(PeriodicTail {
            start,
            period: info.period,
            net: info.net,
            offsets: info.offsets,
        });
    }
    let (ends, cum, slopes) = build_axis(&expansion.segs)?;

    let mut neg_ends = Vec::new();
    let mut neg_cum = Vec::new();
    let mut neg_slopes = Vec::new();
    let mut neg_tail = None;
    match spec.kind {
        ShiftKind::Unilateral => {
            if !spec.left_cycle.is_empty() {
                return Err(Error::config(
                    "left_cycle is only meaningful for bilateral shifts",
                ));
            }
        }
        ShiftKind::Bilateral => {
            if spec.left_cycle.is_empty() {
                return Err(Error::config("a bilateral spec needs a left_cycle"));
            }
            // E(-m) accumulates the negated steps of w_0, w_{-1}, ...
            let mut neg_raw = Vec::new();
            let info = fill_cycle(
                &mut neg_raw,
                &spec
                    .left_cycle
                    .iter()
                    .map(|s| Segment::new(s.length.clone(), -s.delta))
                    .collect::<Vec<_>>(),
                h,
            )?;
            let (e, c, s) = build_axis(&neg_raw)?;
            neg_ends = e;
            neg_cum = c;
            neg_slopes = s;
            neg_tail = Some(PeriodicTail {
                start: 1,
                period: info.period,
                net: info.net,
                offsets: info.offsets,
            });
        }
    }

    let block_ends = if spec.checkpoints.is_empty() {
        expansion.block_ends.retain(|e| *e <= h);
        expansion.block_ends
    } else {
        spec.checkpoints
            .iter()
            .filter_map(|c| c.to_u64())
            .filter(|c| *c <= h)
            .collect()
    };

    Ok(ExponentProfile {
        kind: spec.kind,
        name: spec.name.clone(),
        horizon: h,
        ends,
        cum,
        slopes,
        neg_ends,
        neg_cum,
        neg_slopes,
        block_ends,
        fwd_tail,
        neg_tail,
    })
}

fn ceil_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    -((-a).div_euclid(b))
}

fn floor_div(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    a.div_euclid(b)
}

fn axis_value(ends: &[u64], cum: &[i64], slopes: &[i64], p: u64) -> i64 {
    if p == 0 {
        return 0;
    }
    let idx = ends.partition_point(|&e| e < p);
    debug_assert!(idx < ends.len());
    let (prev_end, base) = if idx == 0 {
        (0, 0)
    } else {
        (ends[idx - 1], cum[idx - 1])
    };
    base + slopes[idx] * (p - prev_end) as i64
}

struct RunBuilder {
    runs: Vec<(u64, u64)>,
}

impl RunBuilder {
    fn new() -> RunBuilder {
        RunBuilder { runs: Vec::new() }
    }

    fn push(&mut self, lo: u64, hi: u64) {
        debug_assert!(lo >= 1 && lo <= hi);
        match self.runs.last_mut() {
            Some((_, le)) if lo <= *le + 1 => {
                if hi > *le {
                    *le = hi;
                }
            }
            _ => self.runs.push((lo, hi)),
        }
    }

    fn into_runset(self) -> RunSet {
        RunSet::from_sorted_runs_unchecked(
            self.runs
                .into_iter()
                .map(|(a, b)| (nat(a), nat(b + 1)))
                .collect(),
        )
    }
}

/// Emits `n = p + shift` for every axis position `p` in `[lo, hi]` with
/// axis value at least `thr`, sweeping segments left to right.
fn level_walk(
    ends: &[u64],
    cum: &[i64],
    slopes: &[i64],
    lo: u64,
    hi: u64,
    thr: i64,
    shift: i64,
    rb: &mut RunBuilder,
) {
    if lo > hi {
        return;
    }
    let mut idx = ends.partition_point(|&e| e < lo);
    while idx < ends.len() {
        let (prev_end, base) = if idx == 0 {
            (0, 0i64)
        } else {
            (ends[idx - 1], cum[idx - 1])
        };
        let a = lo.max(prev_end + 1);
        let b = hi.min(ends[idx]);
        if a <= b {
            let s = slopes[idx];
            let sub = if s == 0 {
                if base >= thr {
                    Some((a, b))
                } else {
                    None
                }
            } else if s > 0 {
                let first = prev_end as i128 + ceil_div(thr as i128 - base as i128, s as i128);
                let start = if first <= a as i128 { a as i128 } else { first };
                if start <= b as i128 {
                    Some((start as u64, b))
                } else {
                    None
                }
            } else {
                let last = prev_end as i128 + floor_div(base as i128 - thr as i128, (-s) as i128);
                let stop = if last >= b as i128 { b as i128 } else { last };
                if stop >= a as i128 {
                    Some((a, stop as u64))
                } else {
                    None
                }
            };
            if let Some((x, y)) = sub {
                rb.push((x as i128 + shift as i128) as u64, (y as i128 + shift as i128) as u64);
            }
        }
        if ends[idx] >= hi {
            break;
        }
        idx += 1;
    }
}

impl ExponentProfile {
    pub fn kind(&self) -> ShiftKind {
        self.kind
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Natural block boundaries (or declared checkpoints) within the horizon.
    pub fn block_ends(&self) -> &[u64] {
        &self.block_ends
    }

    pub fn fwd_tail(&self) -> Option<&PeriodicTail> {
        self.fwd_tail.as_ref()
    }

    pub fn neg_tail(&self) -> Option<&PeriodicTail> {
        self.neg_tail.as_ref()
    }

    /// `E(p)` for any covered position, including `E(0) = 0` and negative
    /// positions of bilateral shifts.
    pub fn exponent_at(&self, p: i64) -> Result<i64> {
        if p == 0 {
            return Ok(0);
        }
        if p > 0 {
            if p as u64 > self.horizon {
                return Err(Error::domain(format!(
                    "position {p} beyond compiled horizon {}",
                    self.horizon
                )));
            }
            return Ok(axis_value(&self.ends, &self.cum, &self.slopes, p as u64));
        }
        if self.kind == ShiftKind::Unilateral {
            return Err(Error::domain(
                "negative positions are undefined for a unilateral shift",
            ));
        }
        let m = p.unsigned_abs();
        if m > self.horizon {
            return Err(Error::domain(format!(
                "position {p} beyond compiled horizon {}",
                self.horizon
            )));
        }
        Ok(axis_value(&self.neg_ends, &self.neg_cum, &self.neg_slopes, m))
    }

    /// Exponent step of the single weight at position `p`.
    pub fn step_at(&self, p: i64) -> Result<i64> {
        Ok(self.exponent_at(p)? - self.exponent_at(p - 1)?)
    }

    /// Maximum of `E` over `[lo, hi]` and the first position attaining it.
    pub fn max_record_in(&self, lo: u64, hi: u64) -> (i64, u64) {
        debug_assert!(lo >= 1 && hi <= self.horizon && lo <= hi);
        let mut best = (i64::MIN, lo);
        let mut idx = self.ends.partition_point(|&e| e < lo);
        while idx < self.ends.len() {
            let (prev_end, base) = if idx == 0 {
                (0, 0i64)
            } else {
                (self.ends[idx - 1], self.cum[idx - 1])
            };
            let a = lo.max(prev_end + 1);
            let b = hi.min(self.ends[idx]);
            if a <= b {
                let s = self.slopes[idx];
                let (val, at) = if s > 0 {
                    (base + s * (b - prev_end) as i64, b)
                } else {
                    (base + s * (a - prev_end) as i64, a)
                };
                if val > best.0 {
                    best = (val, at);
                }
            }
            if self.ends[idx] >= hi {
                break;
            }
            idx += 1;
        }
        best
    }

    /// Maximum of `E` over the whole compiled range and where it first occurs.
    pub fn max_record(&self) -> (i64, u64) {
        self.max_record_in(1, self.horizon)
    }

    /// `|{p <= cp : E(p) >= c}|` for each checkpoint, in one sweep.
    /// Checkpoints must be ascending and within the horizon.
    pub fn count_at_checkpoints(&self, c: i64, cps: &[u64]) -> Vec<u64> {
        debug_assert!(cps.windows(2).all(|w| w[0] <= w[1]));
        debug_assert!(cps.last().is_none_or(|&l| l <= self.horizon));
        let count_to = |prev_end: u64, base: i64, s: i64, b: u64| -> u64 {
            if b <= prev_end {
                return 0;
            }
            if s == 0 {
                return if base >= c { b - prev_end } else { 0 };
            }
            if s > 0 {
                let first = prev_end as i128 + ceil_div(c as i128 - base as i128, s as i128);
                let start = first.max(prev_end as i128 + 1);
                if start <= b as i128 {
                    (b as i128 - start + 1) as u64
                } else {
                    0
                }
            } else {
                let last = prev_end as i128 + floor_div(base as i128 - c as i128, (-s) as i128);
                let stop = last.min(b as i128);
                if stop >= prev_end as i128 + 1 {
                    (stop - prev_end as i128) as u64
                } else {
                    0
                }
            }
        };
        let mut out = Vec::with_capacity(cps.len());
        let mut total: u64 = 0;
        let mut k = 0usize;
        for idx in 0..self.ends.len() {
            let (prev_end, base) = if idx == 0 {
                (0, 0i64)
            } else {
                (self.ends[idx - 1], self.cum[idx - 1])
            };
            let s = self.slopes[idx];
            while k < cps.len() && cps[k] <= self.ends[idx] {
                out.push(total + count_to(prev_end, base, s, cps[k]));
                k += 1;
            }
            total += count_to(prev_end, base, s, self.ends[idx]);
            if k == cps.len() {
                break;
            }
        }
        out
    }

    /// `{n in [1, count] : E(j + n) - E(j) >= c}` as a run set.
    pub fn level_runs_forward(&self, j: i64, c: i64, count: u64) -> Result<RunSet> {
        if count == 0 {
            return Ok(RunSet::empty());
        }
        if self.kind == ShiftKind::Unilateral && j < 0 {
            return Err(Error::domain(
                "negative offsets are undefined for a unilateral shift",
            ));
        }
        let x_hi = j as i128 + count as i128;
        if x_hi > self.horizon as i128 {
            return Err(Error::domain(
                "profile coverage too small for this offset and count",
            ));
        }
        let base = self.exponent_at(j)?;
        let Some(thr) = base.checked_add(c) else {
            return Ok(RunSet::empty());
        };
        let mut rb = RunBuilder::new();
        // positions at or below zero, one by one (bilateral, tiny range)
        let mut x = j as i128 + 1;
        while x <= 0 && x <= x_hi {
            if self.exponent_at(x as i64)? >= thr {
                let n = (x - j as i128) as u64;
                rb.push(n, n);
            }
            x += 1;
        }
        let lo = x.max(1) as u64;
        if lo as i128 <= x_hi {
            level_walk(
                &self.ends,
                &self.cum,
                &self.slopes,
                lo,
                x_hi as u64,
                thr,
                -j,
                &mut rb,
            );
        }
        Ok(rb.into_runset())
    }

    /// `{n in [1, count] : E(j - n) - E(j) >= c}` as a run set (bilateral).
    pub fn level_runs_backward(&self, j: i64, c: i64, count: u64) -> Result<RunSet> {
        if self.kind == ShiftKind::Unilateral {
            return Err(Error::domain(
                "backward return sets are trivial for a unilateral shift",
            ));
        }
        if count == 0 {
            return Ok(RunSet::empty());
        }
        let base = self.exponent_at(j)?;
        let Some(thr) = base.checked_add(c) else {
            return Ok(RunSet::empty());
        };
        let mut rb = RunBuilder::new();
        // positive positions j-1, j-2, ..., walked as ascending n
        let mut n: i128 = 1;
        while n <= count as i128 {
            let x = j as i128 - n;
            if x <= 0 {
                break;
            }
            if self.exponent_at(x as i64)? >= thr {
                rb.push(n as u64, n as u64);
            }
            n += 1;
        }
        // position zero
        if j >= 1 && (j as i128) <= count as i128 && 0 >= thr {
            rb.push(j as u64, j as u64);
        }
        // negative positions via the mirrored axis: m = n - j
        let m_lo = if j >= 0 { 1 } else { 1 - j as i128 };
        let m_hi = count as i128 - j as i128;
        if m_hi >= m_lo {
            if m_hi > self.horizon as i128 {
                return Err(Error::domain(
                    "profile coverage too small for this offset and count",
                ));
            }
            level_walk(
                &self.neg_ends,
                &self.neg_cum,
                &self.neg_slopes,
                m_lo as u64,
                m_hi as u64,
                thr,
                j,
                &mut rb,
            );
        }
        Ok(rb.into_runset())
    }
}

/// Forward and backward return-time sets at one `(t, j)` pair, measured in
/// the power `n` and thresholded at `2^t`: forward membership means the
/// product of the `n` weights after position `j` exceeds `2^t`, backward
/// membership the corresponding reciprocal product before `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReturnSets {
    pub forward: RunSet,
    pub backward: RunSet,
    /// Set when the shift is unilateral: the backward condition is empty by
    /// convention and `backward` carries no information.
    pub backward_trivial: bool,
}

/// Return-time sets from an already compiled profile; `count` elements are
/// examined (`n` ranges over `[1, count]`).
pub fn return_sets_from_profile(
    profile: &ExponentProfile,
    t: i64,
    j: i64,
    count: u64,
) -> Result<ReturnSets> {
    let c = t
        .checked_add(1)
        .ok_or_else(|| Error::config("threshold exponent overflow"))?;
    match profile.kind() {
        ShiftKind::Unilateral => {
            if j < 0 {
                return Err(Error::domain(
                    "negative offsets are undefined for a unilateral shift",
                ));
            }
            Ok(ReturnSets {
                forward: profile.level_runs_forward(j, c, count)?,
                backward: RunSet::empty(),
                backward_trivial: true,
            })
        }
        ShiftKind::Bilateral => Ok(ReturnSets {
            forward: profile.level_runs_forward(j, c, count)?,
            backward: profile.level_runs_backward(j, c, count)?,
            backward_trivial: false,
        }),
    }
}

/// Compiles `spec` with enough margin for offset `j` and returns the
/// return-time sets over `n in [1, horizon]`.
pub fn return_time_sets(spec: &WeightSpec, t: i64, j: i64, horizon: &Nat) -> Result<ReturnSets> {
    let h = horizon
        .to_u64()
        .ok_or_else(|| Error::config("horizon too large"))?;
    if h == 0 {
        return Err(Error::config("horizon must be positive"));
    }
    if spec.kind == ShiftKind::Unilateral && j < 0 {
        return Err(Error::domain(
            "negative offsets are undefined for a unilateral shift",
        ));
    }
    let margin = j.unsigned_abs();
    let coverage = nat(h.checked_add(margin).ok_or_else(|| Error::config("horizon overflow"))?);
    let profile = compile_exponent_profile(spec, &coverage)?;
    return_sets_from_profile(&profile, t, j, h)
}

/// Transitivity check at threshold `2^t`.  For bilateral shifts the forward
/// and backward return sets over all offsets `|j| <= n_range` must intersect;
/// the witness is an explicit common element.  For unilateral shifts the
/// criterion degenerates to unbounded growth of the weight products, checked
/// as: the running maximum of `E` is last improved beyond `sqrt(horizon)`
/// and reaches at least `t + 1`.
pub fn salas_check(spec: &WeightSpec, t: i64, n_range: i64, horizon: &Nat) -> Result<Verdict> {
    if n_range < 0 {
        return Err(Error::config("the offset range must be nonnegative"));
    }
    let h = horizon
        .to_u64()
        .filter(|h| *h > 0)
        .ok_or_else(|| Error::config("horizon must be positive and bounded"))?;
    let c = t
        .checked_add(1)
        .ok_or_else(|| Error::config("threshold exponent overflow"))?;
    let coverage = nat(
        h.checked_add(n_range as u64)
            .ok_or_else(|| Error::config("horizon overflow"))?,
    );
    let profile = compile_exponent_profile(spec, &coverage)?;
    let params = FamilyParams::for_horizon(&nat(h));
    match spec.kind {
        ShiftKind::Unilateral => {
            let (max_value, attained_at) = profile.max_record_in(1, h);
            let tail_start = isqrt(&nat(h));
            let late = nat(attained_at) > tail_start;
            let holds = max_value >= c && late;
            Ok(Verdict {
                family: "salas".to_string(),
                status: Status::of(holds),
                horizon: nat(h),
                witness: Witness::GrowthRecord {
                    max_value: Int::from(max_value),
                    attained_at: nat(attained_at),
                    tail_start,
                },
                params,
            })
        }
        ShiftKind::Bilateral => {
            let mut inter: Option<RunSet> = None;
            for j in -n_range..=n_range {
                let rs = return_sets_from_profile(&profile, t, j, h)?;
                let s = rs.forward.intersect(&rs.backward);
                inter = Some(match inter {
                    None => s,
                    Some(acc) => acc.intersect(&s),
                });
            }
            let inter = inter.unwrap_or_else(RunSet::empty);
            let element = inter.first();
            Ok(Verdict {
                family: "salas".to_string(),
                status: Status::of(element.is_some()),
                horizon: nat(h),
                witness: Witness::MemberWitness {
                    element,
                    sets_intersected: (2 * n_range + 1) as usize,
                },
                params,
            })
        }
    }
}

/// The transitivity-hierarchy classes reported by [`classify_shift`].
pub const CLASS_NAMES: [&str; 12] = [
    "transitive",
    "weakly_mixing",
    "mixing",
    "topologically_ergodic",
    "D_upper",
    "D_lower",
    "BD_upper",
    "D_upper_1",
    "D_lower_1",
    "BD_lower_1",
    "delta_star",
    "ip_star",
];

/// Grid configuration for [`classify_shift`] and [`power_product_check`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifyConfig {
    /// Threshold exponents `t` (the threshold is `2^t`).
    pub t_grid: Vec<i64>,
    /// Offsets `j`; `None` selects `[0, 1, 2]` (unilateral) or `[-2..=2]`
    /// (bilateral).
    pub j_grid: Option<Vec<i64>>,
    /// Thresholds used by the two search-heavy classes (`delta_star`,
    /// `ip_star`), evaluated at offset zero only.
    pub reduced_t: Vec<i64>,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            t_grid: vec![0, 1, 2, 3],
            j_grid: None,
            reduced_t: vec![0, 3],
        }
    }
}

impl ClassifyConfig {
    fn resolve_j(&self, kind: ShiftKind) -> Vec<i64> {
        match (&self.j_grid, kind) {
            (Some(js), _) => js.clone(),
            (None, ShiftKind::Unilateral) => vec![0, 1, 2],
            (None, ShiftKind::Bilateral) => vec![-2, -1, 0, 1, 2],
        }
    }
}

/// One class row: the aggregated status and the verdict of the deciding grid
/// point (the first failing point, or the last holding point in grid order).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub status: Status,
    pub t: i64,
    pub j: i64,
    pub verdict: Verdict,
}

/// Full per-class report for one weight spec at one horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub construction: String,
    pub kind: ShiftKind,
    #[serde(with = "serde_nat")]
    pub horizon: Nat,
    pub classes: BTreeMap<String, ClassVerdict>,
}

struct ClassAgg {
    fail: Option<ClassVerdict>,
    hold: Option<ClassVerdict>,
}

impl ClassAgg {
    fn new() -> ClassAgg {
        ClassAgg {
            fail: None,
            hold: None,
        }
    }

    fn add(&mut self, t: i64, j: i64, verdict: Verdict) {
        let cv = ClassVerdict {
            status: verdict.status,
            t,
            j,
            verdict,
        };
        if cv.status.holds() {
            self.hold = Some(cv);
        } else if self.fail.is_none() {
            self.fail = Some(cv);
        }
    }

    fn finish(self, class: &str) -> Result<ClassVerdict> {
        self.fail
            .or(self.hold)
            .ok_or_else(|| Error::invariant(format!("no grid point evaluated for {class}")))
    }
}

/// Shared parameter construction for the classifier and the power/product
/// check: full-tail density estimates over the merged checkpoint ladder
/// (decades, construction checkpoints, and the horizon itself, restricted to
/// `[2 * sqrt(H), H]`).
fn classifier_params(block_ends: &[u64], scale: u64, h: u64) -> FamilyParams {
    let h_nat = nat(h);
    let mut params = FamilyParams::for_horizon(&h_nat);
    let mut cps: Vec<Nat> = params.checkpoints.clone();
    cps.extend(block_ends.iter().map(|&e| nat(e / scale)));
    cps.push(h_nat.clone());
    let lo = nat(2) * isqrt(&h_nat);
    cps.retain(|c| *c >= lo && *c <= h_nat && !c.is_zero());
    cps.sort();
    cps.dedup();
    if cps.is_empty() {
        cps.push(h_nat);
    }
    params.checkpoints = cps;
    params.tail_fraction = crate::numeric::rat(1, 1);
    params
}

fn family_point_verdict(
    s: &RunSet,
    family: FamilyName,
    h: &Nat,
    params: &FamilyParams,
    stability: bool,
) -> Result<Verdict> {
    if stability {
        let mut p = params.clone();
        p.syndetic_stability = true;
        membership_verdict(s, family, h, &p)
    } else {
        membership_verdict(s, family, h, params)
    }
}

/// The grid-point set a class verdict is measured on: forward return set
/// intersected with the backward one for bilateral shifts.
fn point_set(profile: &ExponentProfile, t: i64, j: i64, h: u64) -> Result<RunSet> {
    let rs = return_sets_from_profile(profile, t, j, h)?;
    Ok(if rs.backward_trivial {
        rs.forward
    } else {
        rs.forward.intersect(&rs.backward)
    })
}

fn growth_verdict(
    profile: &ExponentProfile,
    s: &RunSet,
    t: i64,
    j: i64,
    h: u64,
    params: &FamilyParams,
) -> Result<Verdict> {
    let c = t
        .checked_add(1)
        .ok_or_else(|| Error::config("threshold exponent overflow"))?;
    let window_lo = j as u64 + 1;
    let window_hi = j as u64 + h;
    let (max_x, at_x) = profile.max_record_in(window_lo, window_hi);
    let base = profile.exponent_at(j)?;
    let n_star = at_x - j as u64;
    let tail_start = isqrt(&nat(h));
    let late = nat(n_star) > tail_start;
    let holds = max_x - base >= c && late;
    debug_assert_eq!(holds, s.contains(&nat(n_star)) && late);
    Ok(Verdict {
        family: "transitive".to_string(),
        status: Status::of(holds),
        horizon: nat(h),
        witness: Witness::GrowthRecord {
            max_value: Int::from(max_x - base),
            attained_at: nat(n_star),
            tail_start,
        },
        params: params.clone(),
    })
}

fn member_verdict(inter: &RunSet, sets: usize, h: u64, params: &FamilyParams) -> Verdict {
    let element = inter.first();
    Verdict {
        family: "transitive".to_string(),
        status: Status::of(element.is_some()),
        horizon: nat(h),
        witness: Witness::MemberWitness {
            element,
            sets_intersected: sets,
        },
        params: params.clone(),
    }
}

/// Classifies a weight spec against every hierarchy class in [`CLASS_NAMES`].
///
/// Each class is evaluated at every `(t, j)` grid point (the search-heavy
/// classes on the reduced grid) and holds only if every point holds; the
/// reported verdict belongs to the deciding point.  When the weight spec
/// has a periodic tail, verdicts that hold at the horizon are upgraded to
/// `certified` if the eventual cyclic structure proves them for every `n`.
pub fn classify_shift(
    spec: &WeightSpec,
    horizon: &Nat,
    config: &ClassifyConfig,
) -> Result<Classification> {
    let h = horizon
        .to_u64()
        .filter(|h| *h >= 16)
        .ok_or_else(|| Error::config("classification needs a horizon of at least 16"))?;
    if config.t_grid.is_empty() {
        return Err(Error::config("the threshold grid must be nonempty"));
    }
    let mut t_grid = config.t_grid.clone();
    t_grid.sort_unstable();
    t_grid.dedup();
    let mut j_grid = config.resolve_j(spec.kind);
    j_grid.sort_unstable();
    j_grid.dedup();
    if j_grid.is_empty() {
        return Err(Error::config("the offset grid must be nonempty"));
    }
    if spec.kind == ShiftKind::Unilateral && j_grid.iter().any(|&j| j < 0) {
        return Err(Error::config(
            "negative offsets are undefined for a unilateral shift",
        ));
    }
    if j_grid.iter().any(|&j| j.unsigned_abs() > 100_000) {
        return Err(Error::config("offsets must satisfy |j| <= 100000"));
    }
    let mut reduced_t = config.reduced_t.clone();
    reduced_t.sort_unstable();
    reduced_t.dedup();

    let margin = j_grid.iter().map(|j| j.unsigned_abs()).max().unwrap_or(0);
    let coverage = nat(
        h.checked_add(margin)
            .ok_or_else(|| Error::config("horizon overflow"))?,
    );
    let profile = compile_exponent_profile(spec, &coverage)?;
    let params = classifier_params(profile.block_ends(), 1, h);
    let h_nat = nat(h);

    let membership_classes: [(&str, FamilyName, bool); 8] = [
        ("mixing", FamilyName::Cofinite, false),
        ("topologically_ergodic", FamilyName::Syndetic, true),
        ("D_upper", FamilyName::DUpperPos, false),
        ("D_lower", FamilyName::DLowerPos, false),
        ("BD_upper", FamilyName::BdUpperPos, false),
        ("D_upper_1", FamilyName::DUpper1, false),
        ("D_lower_1", FamilyName::DLower1, false),
        ("BD_lower_1", FamilyName::BdLower1, false),
    ];

    let mut aggs: BTreeMap<&str, ClassAgg> = CLASS_NAMES
        .iter()
        .map(|&c| (c, ClassAgg::new()))
        .collect();

    for &t in &t_grid {
        let mut inter: Option<RunSet> = None;
        for &j in &j_grid {
            let s = point_set(&profile, t, j, h)?;
            for (class, family, stability) in membership_classes.iter() {
                let v = family_point_verdict(&s, *family, &h_nat, &params, *stability)?;
                aggs.get_mut(class).unwrap().add(t, j, v);
            }
            match spec.kind {
                ShiftKind::Unilateral => {
                    let v = growth_verdict(&profile, &s, t, j, h, &params)?;
                    aggs.get_mut("transitive").unwrap().add(t, j, v.clone());
                    aggs.get_mut("weakly_mixing").unwrap().add(t, j, v);
                }
                ShiftKind::Bilateral => {
                    let v = family_point_verdict(&s, FamilyName::Thick, &h_nat, &params, false)?;
                    aggs.get_mut("weakly_mixing").unwrap().add(t, j, v);
                    inter = Some(match inter {
                        None => s.clone(),
                        Some(acc) => acc.intersect(&s),
                    });
                }
            }
            if j == 0 && reduced_t.contains(&t) {
                let width = params.delta_window.clone();
                let dv = delta_verdict(&s, DeltaMode::DualEvidence, None, &h_nat, &width, &params)?;
                aggs.get_mut("delta_star").unwrap().add(t, j, dv);
                let iv = ip_verdict(&s, IpMode::MissesFs, None, params.ip_depth, &h_nat, &params)?;
                aggs.get_mut("ip_star").unwrap().add(t, j, iv);
            }
        }
        if spec.kind == ShiftKind::Bilateral {
            let inter = inter.unwrap_or_else(RunSet::empty);
            let v = member_verdict(&inter, j_grid.len(), h, &params);
            aggs.get_mut("transitive").unwrap().add(t, 0, v);
        }
    }

    let mut classes = BTreeMap::new();
    for class in CLASS_NAMES {
        let agg = aggs.remove(class).unwrap();
        let mut cv = agg.finish(class)?;
        maybe_certify(&profile, spec, class, &mut cv, &j_grid, h)?;
        classes.insert(class.to_string(), cv);
    }

    Ok(Classification {
        construction: spec.name.clone(),
        kind: spec.kind,
        horizon: h_nat,
        classes,
    })
}

/// Eventual periodic structure of one grid-point set, in `n`-space.
struct TailPattern {
    period: u64,
    /// Residues of the eventual members modulo `period`.
    residues: Vec<u64>,
    /// All `n >= tail_start` follow the residue pattern.
    tail_start: u64,
}

fn lcm_u64(a: u64, b: u64) -> Option<u64> {
    let g = gcd_u64(a, b);
    (a / g).checked_mul(b)
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Eventual membership pattern of `{n : E(j + n) - E(j) >= t + 1}` when the
/// forward side is cyclic, or of the bilateral intersection when both sides
/// are.  `None` when no conclusion holds for all `n` (no cyclic tail, or a
/// side whose exponent drifts to minus infinity).
fn tail_pattern(profile: &ExponentProfile, t: i64, j: i64) -> Result<Option<TailPattern>> {
    let c = match t.checked_add(1) {
        Some(c) => c,
        None => return Ok(None),
    };
    let base = profile.exponent_at(j)?;
    let Some(thr) = base.checked_add(c) else {
        return Ok(None);
    };
    let Some(ft) = profile.fwd_tail() else {
        return Ok(None);
    };
    // exponent just before the cyclic regime anchors the offset table
    let fwd_anchor = profile.exponent_at(ft.start as i64 - 1)?;
    let Some(fwd) = side_pattern(ft, fwd_anchor, thr, j, false) else {
        return Ok(None);
    };
    if profile.kind() == ShiftKind::Unilateral {
        return Ok(Some(fwd));
    }
    let Some(bt) = profile.neg_tail() else {
        return Ok(None);
    };
    let bwd_anchor = profile.exponent_at(-(bt.start as i64 - 1))?;
    let Some(bwd) = side_pattern(bt, bwd_anchor, thr, j, true) else {
        return Ok(None);
    };
    Ok(intersect_patterns(fwd, bwd))
}

fn membership_bits(p: &TailPattern, period: u64) -> Vec<bool> {
    let mut bits = vec![false; period as usize];
    for r in 0..period {
        if p.residues.binary_search(&(r % p.period)).is_ok() {
            bits[r as usize] = true;
        }
    }
    bits
}

/// Pattern of one side.  `backward` selects the mirrored axis (`n = m + j`
/// with axis position `m`); forward reads `n = x - j` with axis position
/// `x`.  `anchor` is `E` at the last axis position before the cyclic regime.
fn side_pattern(
    tail: &PeriodicTail,
    anchor: i64,
    thr: i64,
    j: i64,
    backward: bool,
) -> Option<TailPattern> {
    let p = tail.period;
    let axis_to_n = |axis: i128| -> i128 {
        if backward {
            axis + j as i128
        } else {
            axis - j as i128
        }
    };
    // value at the k-th position of the first cycle (k = 1..=p)
    let value = |k: u64| -> i64 { anchor + tail.offsets[(k - 1) as usize] };
    if tail.net > 0 {
        // eventually everything qualifies; find the first full cycle from
        // which even the weakest offset clears the threshold
        let worst = (1..=p).map(value).min().unwrap();
        let deficit = thr as i128 - worst as i128;
        let m0 = if deficit <= 0 {
            0
        } else {
            ceil_div(deficit, tail.net as i128)
        };
        let settle = axis_to_n(tail.start as i128 + m0 * p as i128).max(1);
        if settle > u64::MAX as i128 {
            return None;
        }
        return Some(TailPattern {
            period: p,
            residues: (0..p).collect(),
            tail_start: settle as u64,
        });
    }
    if tail.net < 0 {
        // the exponent drifts down: eventually nothing qualifies, which can
        // prove failure but never a "holds for every n" upgrade
        return None;
    }
    let mut residues: Vec<u64> = Vec::new();
    for k in 1..=p {
        if value(k) >= thr {
            let n = axis_to_n(tail.start as i128 - 1 + k as i128);
            residues.push(n.rem_euclid(p as i128) as u64);
        }
    }
    residues.sort_unstable();
    residues.dedup();
    let start = axis_to_n(tail.start as i128).max(1);
    if start > u64::MAX as i128 {
        return None;
    }
    Some(TailPattern {
        period: p,
        residues,
        tail_start: start as u64,
    })
}

/// Wait-free upgrade of a holding verdict to `certified` when the periodic
/// tail proves the class for every `n`; the rebuilt witness is re-verified
/// against the actual grid-point set before being accepted.
fn maybe_certify(
    profile: &ExponentProfile,
    spec: &WeightSpec,
    class: &str,
    cv: &mut ClassVerdict,
    j_grid: &[i64],
    h: u64,
) -> Result<()> {
    if cv.status != Status::HoldsAtHorizon || profile.fwd_tail().is_none() {
        return Ok(());
    }
    if spec.kind == ShiftKind::Bilateral && profile.neg_tail().is_none() {
        return Ok(());
    }
    // the certificate set: the deciding grid point, except for the bilateral
    // transitivity check which intersects every offset
    let bilateral_intersection = class == "transitive" && spec.kind == ShiftKind::Bilateral;
    let (pattern, set) = if bilateral_intersection {
        let mut combined: Option<TailPattern> = None;
        let mut set: Option<RunSet> = None;
        for &j in j_grid {
            let Some(p) = tail_pattern(profile, cv.t, j)? else {
                return Ok(());
            };
            combined = Some(match combined {
                None => p,
                Some(acc) => match intersect_patterns(acc, p) {
                    Some(c) => c,
                    None => return Ok(()),
                },
            });
            let s = point_set(profile, cv.t, j, h)?;
            set = Some(match set {
                None => s,
                Some(acc) => acc.intersect(&s),
            });
        }
        match (combined, set) {
            (Some(p), Some(s)) => (p, s),
            _ => return Ok(()),
        }
    } else {
        let Some(p) = tail_pattern(profile, cv.t, cv.j)? else {
            return Ok(());
        };
        (p, point_set(profile, cv.t, cv.j, h)?)
    };
    // at least one full period must be visible below the horizon, so the
    // certificate is checkable rather than vacuous
    if pattern.tail_start.checked_add(pattern.period).is_none_or(|end| end > h) {
        return Ok(());
    }
    let full = pattern.residues.len() as u64 == pattern.period;
    let dens_num = pattern.residues.len() as u64;
    let proves = match cv.verdict.family.as_str() {
        "transitive" | "salas" | "syndetic" | "piecewise_syndetic" => !pattern.residues.is_empty(),
        "thick" | "cofinite" | "thickly_syndetic" => full,
        "D_upper_pos" | "D_lower_pos" | "BD_upper_pos" | "BD_lower_pos" => {
            // density >= delta as exact rationals
            crate::numeric::rat_from_nats(&nat(dens_num), &nat(pattern.period))
                >= cv.verdict.params.delta
        }
        "D_upper_1" | "D_lower_1" | "BD_upper_1" | "BD_lower_1" => {
            crate::numeric::rat_from_nats(&nat(dens_num), &nat(pattern.period))
                >= crate::numeric::rat(1, 1) - cv.verdict.params.epsilon.clone()
        }
        "delta_star" | "ip_star" => pattern.residues.contains(&0),
        _ => false,
    };
    if !proves {
        return Ok(());
    }
    let mut upgraded = cv.verdict.clone();
    upgraded.status = Status::Certified;
    upgraded.witness = Witness::PeriodicCertificate {
        period: nat(pattern.period),
        residues: pattern.residues.iter().map(|&r| nat(r)).collect(),
        tail_start: nat(pattern.tail_start),
        conclusion: format!("{class} holds for every n by the eventual cycle"),
    };
    if verify_verdict(&upgraded, &set) {
        cv.status = Status::Certified;
        cv.verdict = upgraded;
    }
    Ok(())
}

fn intersect_patterns(a: TailPattern, b: TailPattern) -> Option<TailPattern> {
    let period = lcm_u64(a.period, b.period)?;
    if period > 1_000_000 {
        return None;
    }
    let am = membership_bits(&a, period);
    let bm = membership_bits(&b, period);
    let residues = (0..period).filter(|&r| am[r as usize] && bm[r as usize]).collect();
    Some(TailPattern {
        period,
        residues,
        tail_start: a.tail_start.max(b.tail_start),
    })
}

/// Membership of the return-time sets restricted to the multiples of `l`
/// and contracted by `l` (the return sets of the `l`-th power along the
/// matching product structure).  With `l = 1` this coincides with the
/// corresponding class of [`classify_shift`].
pub fn power_product_check(
    spec: &WeightSpec,
    l: &Nat,
    family: FamilyName,
    horizon: &Nat,
    config: &ClassifyConfig,
) -> Result<ClassVerdict> {
    let l_u = l
        .to_u64()
        .filter(|l| *l >= 1)
        .ok_or_else(|| Error::config("the power must be a positive bounded integer"))?;
    let h = horizon
        .to_u64()
        .filter(|h| *h >= 16)
        .ok_or_else(|| Error::config("power/product checks need a horizon of at least 16"))?;
    let h_scaled = h / l_u;
    if h_scaled == 0 {
        return Err(Error::config("horizon too small for this power"));
    }
    let mut t_grid = config.t_grid.clone();
    t_grid.sort_unstable();
    t_grid.dedup();
    let mut j_grid = config.resolve_j(spec.kind);
    j_grid.sort_unstable();
    j_grid.dedup();
    if spec.kind == ShiftKind::Unilateral && j_grid.iter().any(|&j| j < 0) {
        return Err(Error::config(
            "negative offsets are undefined for a unilateral shift",
        ));
    }
    let margin = j_grid.iter().map(|j| j.unsigned_abs()).max().unwrap_or(0);
    let coverage = nat(
        h.checked_add(margin)
            .ok_or_else(|| Error::config("horizon overflow"))?,
    );
    let profile = compile_exponent_profile(spec, &coverage)?;
    let params = classifier_params(profile.block_ends(), l_u, h_scaled);
    let stability = family == FamilyName::Syndetic;
    let h_nat = nat(h_scaled);
    let mut agg = ClassAgg::new();
    for &t in &t_grid {
        for &j in &j_grid {
            let s = point_set(&profile, t, j, h)?.contract(&nat(l_u))?;
            let v = family_point_verdict(&s, family, &h_nat, &params, stability)?;
            agg.add(t, j, v);
        }
    }
    agg.finish(family.as_str())
}

/// The classification claims asserted for the shipped constructions, as
/// `(class, expected to hold)` pairs.
pub fn expected_separations(name: &str) -> Vec<(&'static str, bool)> {
    match name {
        "p41_1" => vec![("weakly_mixing", true), ("D_upper", false)],
        "p41_2" => vec![("D_upper_1", true), ("D_lower", false)],
        "p41_3" => vec![("D_lower_1", true), ("topologically_ergodic", false)],
        "p52_ip" => vec![("topologically_ergodic", true), ("ip_star", false)],
        "p54_delta" => vec![("delta_star", true), ("mixing", false)],
        "p58_rhc" => vec![("D_upper_1", false)],
        "bd1_nonmixing" => vec![("BD_lower_1", true), ("mixing", false)],
        _ => Vec::new(),
    }
}

/// One construction row of the hierarchy report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyRow {
    pub construction: String,
    pub kind: ShiftKind,
    pub statuses: BTreeMap<String, Status>,
    pub expected: Vec<(String, bool)>,
    pub mismatches: Vec<String>,
}

/// Classification of every shipped construction against every class, with
/// the asserted separation claims checked.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyReport {
    #[serde(with = "serde_nat")]
    pub horizon: Nat,
    pub rows: Vec<HierarchyRow>,
    pub mismatch_count: usize,
}

/// Classifies all shipped constructions and checks the asserted claims.
pub fn hierarchy_report(horizon: &Nat, config: &ClassifyConfig) -> Result<HierarchyReport> {
    // The classifier compiles past the horizon by the largest grid offset,
    // so the programs must be generated with that much slack.
    let margin = config
        .j_grid
        .as_ref()
        .map(|js| js.iter().map(|j| j.unsigned_abs()).max().unwrap_or(0))
        .unwrap_or(2);
    let coverage = horizon + nat(margin);
    let mut rows = Vec::new();
    let mut mismatch_count = 0;
    for name in CONSTRUCTIONS {
        let mut params = BTreeMap::new();
        params.insert("horizon".to_string(), coverage.to_string());
        let spec = generate_weight(name, &params)?;
        let classification = classify_shift(&spec, horizon, config)?;
        let statuses: BTreeMap<String, Status> = classification
            .classes
            .iter()
            .map(|(k, v)| (k.clone(), v.status))
            .collect();
        let expected = expected_separations(name);
        let mut mismatches = Vec::new();
        for (class, want) in &expected {
            let got = statuses
                .get(*class)
                .map(|s| s.holds())
                .unwrap_or(false);
            if got != *want {
                mismatches.push(format!(
                    "{name}/{class}: expected {}, observed {}",
                    verdict_word(*want),
                    verdict_word(got)
                ));
            }
        }
        mismatch_count += mismatches.len();
        rows.push(HierarchyRow {
            construction: name.to_string(),
            kind: classification.kind,
            statuses,
            expected: expected
                .into_iter()
                .map(|(c, w)| (c.to_string(), w))
                .collect(),
            mismatches,
        });
    }
    Ok(HierarchyReport {
        horizon: horizon.clone(),
        rows,
        mismatch_count,
    })
}

fn verdict_word(holds: bool) -> &'static str {
    if holds {
        "holds"
    } else {
        "fails"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::pow10;

    fn params_of(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    fn spec_for(name: &str, coverage: u64) -> WeightSpec {
        generate_weight(name, &params_of(&[("horizon", &coverage.to_string())])).unwrap()
    }

    fn compiled(name: &str, coverage: u64, horizon: u64) -> ExponentProfile {
        compile_exponent_profile(&spec_for(name, coverage), &nat(horizon)).unwrap()
    }

    fn exponents(profile: &ExponentProfile, up_to: u64) -> Vec<i64> {
        (1..=up_to as i64)
            .map(|p| profile.exponent_at(p).unwrap())
            .collect()
    }

    #[test]
    fn ruler_profile_matches_hand_rolled_prefix() {
        let profile = compiled("p44_ruler", 7, 7);
        assert_eq!(exponents(&profile, 7), vec![1, 0, 1, 2, 0, 1, 0]);
    }

    #[test]
    fn ruler_profile_matches_recursive_oracle() {
        // independent reconstruction: level 1 is [+1, -1]; level n is level
        // n-1, then n up-steps and one down-step of n, then level n-1 again
        let mut deltas: Vec<i64> = vec![1, -1];
        for n in 2..=4i64 {
            let mut next = deltas.clone();
            next.extend(std::iter::repeat(1).take(n as usize));
            next.push(-n);
            next.extend(deltas.iter().copied());
            deltas = next;
        }
        assert_eq!(deltas.len(), 41);
        let profile = compiled("p44_ruler", 41, 41);
        let mut e = 0i64;
        for (i, d) in deltas.iter().enumerate() {
            e += d;
            assert_eq!(profile.exponent_at(i as i64 + 1).unwrap(), e, "position {}", i + 1);
        }
    }

    #[test]
    fn ruler_prefix_counts_follow_closed_forms() {
        // prefix length of level n is 3*2^n - n - 3; it contains 2^n - 1
        // zero positions and 2^(n+1) - n - 2 positions of positive exponent
        let prefix = |n: u32| 3 * 2u64.pow(n) - n as u64 - 3;
        let horizon = prefix(10);
        let profile = compiled("p44_ruler", horizon, horizon);
        let cps: Vec<u64> = (1..=10).map(prefix).collect();
        let positive = profile.count_at_checkpoints(1, &cps);
        for (i, n) in (1u32..=10).enumerate() {
            assert_eq!(positive[i], 2u64.pow(n + 1) - n as u64 - 2, "level {n}");
            assert_eq!(prefix(n) - positive[i], 2u64.pow(n) - 1, "zeros at level {n}");
        }
    }

    #[test]
    fn ruler_checkpoints_follow_depth_ladder() {
        let spec = spec_for("p44_ruler", 1000);
        // smallest depth with 3*2^n - 2 >= 1000 is 9
        assert_eq!(spec.params.get("depth"), Some(&"9".to_string()));
        let expect: Vec<Nat> = (1..=9u32).map(|n| nat(3 * 2u64.pow(n) - 2)).collect();
        assert_eq!(spec.checkpoints, expect);
    }

    #[test]
    fn bd1_zeros_sit_exactly_on_triangular_numbers() {
        let profile = compiled("bd1_nonmixing", 100, 100);
        let mut triangulars = Vec::new();
        let mut t = 0u64;
        for k in 1.. {
            t += k;
            if t > 100 {
                break;
            }
            triangulars.push(t);
        }
        let zeros: Vec<u64> = (1..=100)
            .filter(|&p| profile.exponent_at(p as i64).unwrap() == 0)
            .collect();
        assert_eq!(zeros, triangulars);
    }

    #[test]
    fn p52_exponent_is_distance_to_last_reset() {
        let profile = compiled("p52_ip", 20, 20);
        let resets = [4u64, 16, 20];
        for n in 1..=20u64 {
            let last = resets.iter().copied().filter(|&b| b <= n).max().unwrap_or(0);
            assert_eq!(profile.exponent_at(n as i64).unwrap(), (n - last) as i64, "n = {n}");
        }
    }

    #[test]
    fn p54_exponent_is_distance_to_last_reset() {
        let profile = compiled("p54_delta", 30, 30);
        let resets = [2u64, 5, 9, 14, 20, 27];
        for n in 1..=30u64 {
            let last = resets.iter().copied().filter(|&b| b <= n).max().unwrap_or(0);
            assert_eq!(profile.exponent_at(n as i64).unwrap(), (n - last) as i64, "n = {n}");
        }
    }

    #[test]
    fn decade_windows_climb_and_reset() {
        let profile = compiled("p58_rhc", 200, 200);
        // the window around 100 spans 99..=101 and absorbs the width-one
        // window at 100 itself
        let around_hundred: Vec<i64> = (98..=102)
            .map(|p| profile.exponent_at(p).unwrap())
            .collect();
        assert_eq!(around_hundred, vec![0, 1, 2, 3, 0]);
        assert_eq!(profile.exponent_at(10).unwrap(), 1);
        assert_eq!(profile.exponent_at(11).unwrap(), 0);
        assert_eq!(profile.exponent_at(9).unwrap(), 0);
    }

    #[test]
    fn growth_blocks_follow_documented_layout() {
        let spec = spec_for("p41_1", 1_000_000);
        assert_eq!(
            spec.checkpoints,
            vec![nat(3), nat(16), nat(120), nat(1125), nat(11131), nat(111138)]
        );
        let profile = compile_exponent_profile(&spec, &nat(1_000_000)).unwrap();
        assert_eq!(profile.max_record(), (6, 111_137));
        assert_eq!(profile.exponent_at(111_138).unwrap(), 0);

        let small = compiled("p41_1", 10_000, 10_000);
        assert_eq!(small.max_record(), (4, 1_124));
    }

    #[test]
    fn flat_then_doubling_spec_keeps_the_early_checkpoint() {
        let spec = spec_for("p41_2", 1_000_000);
        assert_eq!(spec.checkpoints, vec![nat(9900)]);
        let profile = compile_exponent_profile(&spec, &nat(1_000_000)).unwrap();
        assert_eq!(profile.exponent_at(9900).unwrap(), 0);
        assert_eq!(profile.exponent_at(9901).unwrap(), 1);
        assert_eq!(profile.exponent_at(1_000_000).unwrap(), 1_000_000 - 9900);
    }

    #[test]
    fn sparse_doubling_spec_checkpoints_stop_at_coverage() {
        let spec = spec_for("p41_3", 1_000_000);
        assert_eq!(spec.checkpoints, vec![nat(3), nat(16), nat(120), nat(10_125)]);
        let profile = compile_exponent_profile(&spec, &nat(1_000_000)).unwrap();
        // inside the crossing block the exponent keeps climbing
        assert_eq!(profile.exponent_at(10_131).unwrap(), 1);
        assert_eq!(profile.exponent_at(1_000_000).unwrap(), 1_000_000 - 10_130);
    }

    #[test]
    fn count_at_checkpoints_matches_pointwise_scan() {
        for name in ["p41_1", "p54_delta", "p58_rhc"] {
            let profile = compiled(name, 2000, 2000);
            let cps = [5u64, 17, 118, 119, 1000, 1999, 2000];
            for c in [0i64, 1, 3] {
                let got = profile.count_at_checkpoints(c, &cps);
                let brute: Vec<u64> = cps
                    .iter()
                    .map(|&cp| {
                        (1..=cp)
                            .filter(|&p| profile.exponent_at(p as i64).unwrap() >= c)
                            .count() as u64
                    })
                    .collect();
                assert_eq!(got, brute, "{name} at c = {c}");
            }
        }
    }

    #[test]
    fn max_record_matches_pointwise_scan() {
        for name in CONSTRUCTIONS {
            let profile = compiled(name, 2000, 2000);
            let mut best = (i64::MIN, 0u64);
            for p in 1..=2000u64 {
                let e = profile.exponent_at(p as i64).unwrap();
                if e > best.0 {
                    best = (e, p);
                }
            }
            assert_eq!(profile.max_record(), best, "{name}");
            let windowed = profile.max_record_in(100, 900);
            let mut wbest = (i64::MIN, 100u64);
            for p in 100..=900u64 {
                let e = profile.exponent_at(p as i64).unwrap();
                if e > wbest.0 {
                    wbest = (e, p);
                }
            }
            assert_eq!(windowed, wbest, "{name} windowed");
        }
    }

    fn brute_forward(profile: &ExponentProfile, t: i64, j: i64, count: u64) -> RunSet {
        let base = profile.exponent_at(j).unwrap();
        let members: Vec<Nat> = (1..=count as i64)
            .filter(|&n| profile.exponent_at(j + n).unwrap() - base >= t + 1)
            .map(|n| nat(n as u64))
            .collect();
        RunSet::from_elements(members).unwrap()
    }

    fn brute_backward(profile: &ExponentProfile, t: i64, j: i64, count: u64) -> RunSet {
        let base = profile.exponent_at(j).unwrap();
        let members: Vec<Nat> = (1..=count as i64)
            .filter(|&n| profile.exponent_at(j - n).unwrap() - base >= t + 1)
            .map(|n| nat(n as u64))
            .collect();
        RunSet::from_elements(members).unwrap()
    }

    #[test]
    fn forward_walker_agrees_with_pointwise_scan() {
        for name in CONSTRUCTIONS {
            let spec = spec_for(name, 1005);
            let profile = compile_exponent_profile(&spec, &nat(1005)).unwrap();
            for j in [0i64, 2] {
                for t in [0i64, 1, 3] {
                    let sets = return_sets_from_profile(&profile, t, j, 1000).unwrap();
                    assert!(sets.backward_trivial);
                    assert_eq!(
                        sets.forward,
                        brute_forward(&profile, t, j, 1000),
                        "{name} t = {t} j = {j}"
                    );
                }
            }
        }
    }

    fn bilateral_specs() -> Vec<WeightSpec> {
        vec![
            generate_weight("const", &params_of(&[("kind", "bilateral")])).unwrap(),
            generate_weight(
                "const",
                &params_of(&[("kind", "bilateral"), ("exponent", "2"), ("left_exponent", "2")]),
            )
            .unwrap(),
            generate_weight(
                "periodic",
                &params_of(&[("kind", "bilateral"), ("pattern", "2,-1,0")]),
            )
            .unwrap(),
            generate_weight(
                "periodic",
                &params_of(&[("kind", "bilateral"), ("pattern", "1,-1")]),
            )
            .unwrap(),
        ]
    }

    #[test]
    fn bilateral_walkers_agree_with_pointwise_scan() {
        for spec in bilateral_specs() {
            let profile = compile_exponent_profile(&spec, &nat(1005)).unwrap();
            for j in [-2i64, 0, 2] {
                for t in [0i64, 2] {
                    let sets = return_sets_from_profile(&profile, t, j, 1000).unwrap();
                    assert!(!sets.backward_trivial);
                    let tag = format!("{:?} t = {t} j = {j}", spec.params);
                    assert_eq!(sets.forward, brute_forward(&profile, t, j, 1000), "fwd {tag}");
                    assert_eq!(sets.backward, brute_backward(&profile, t, j, 1000), "bwd {tag}");
                }
            }
        }
    }

    #[test]
    fn constant_weight_forward_set_is_a_tail() {
        let spec = generate_weight("const", &BTreeMap::new()).unwrap();
        let sets = return_time_sets(&spec, 2, 0, &nat(100)).unwrap();
        assert_eq!(sets.forward.runs(), &[(nat(3), nat(101))]);

        let double = generate_weight("const", &params_of(&[("exponent", "2")])).unwrap();
        let sets = return_time_sets(&double, 2, 0, &nat(100)).unwrap();
        assert_eq!(sets.forward.runs(), &[(nat(2), nat(101))]);
    }

    #[test]
    fn thresholds_shrink_the_forward_sets() {
        for name in ["p41_1", "p52_ip"] {
            let spec = spec_for(name, 10_000);
            let mut prev: Option<RunSet> = None;
            for t in 0..=3 {
                let s = return_time_sets(&spec, t, 0, &nat(10_000)).unwrap().forward;
                if let Some(bigger) = prev {
                    assert_eq!(bigger.intersect(&s), s, "{name} t = {t}");
                }
                prev = Some(s);
            }
        }
    }

    #[test]
    fn growth_check_accepts_the_growing_construction() {
        let spec = spec_for("p41_1", 1_000_000);
        let v = salas_check(&spec, 3, 0, &nat(1_000_000)).unwrap();
        assert!(v.holds());
        match &v.witness {
            Witness::GrowthRecord {
                max_value,
                attained_at,
                tail_start,
            } => {
                assert_eq!(max_value, &Int::from(6));
                assert_eq!(attained_at, &nat(111_137));
                assert_eq!(tail_start, &nat(1000));
            }
            w => panic!("unexpected witness {w:?}"),
        }
        let sets = return_time_sets(&spec, 3, 0, &nat(1_000_000)).unwrap();
        assert!(verify_verdict(&v, &sets.forward));
    }

    #[test]
    fn growth_check_rejects_decay() {
        let spec = generate_weight("const", &params_of(&[("exponent", "-1")])).unwrap();
        let v = salas_check(&spec, 0, 0, &nat(1000)).unwrap();
        assert!(!v.holds());
    }

    #[test]
    fn bilateral_mirror_intersection_has_predictable_first_element() {
        let spec = generate_weight("const", &params_of(&[("kind", "bilateral")])).unwrap();
        let v = salas_check(&spec, 0, 2, &nat(1000)).unwrap();
        assert!(v.holds());
        match &v.witness {
            Witness::MemberWitness {
                element,
                sets_intersected,
            } => {
                assert_eq!(element, &Some(nat(5)));
                assert_eq!(*sets_intersected, 5);
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn bilateral_one_sided_growth_fails_the_intersection_check() {
        let spec = generate_weight(
            "const",
            &params_of(&[("kind", "bilateral"), ("left_exponent", "1")]),
        )
        .unwrap();
        let v = salas_check(&spec, 0, 0, &nat(1000)).unwrap();
        assert!(!v.holds());
        match &v.witness {
            Witness::MemberWitness { element, .. } => assert_eq!(element, &None),
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn alternating_bilateral_weights_fail_beyond_offset_zero() {
        let spec = generate_weight(
            "periodic",
            &params_of(&[("kind", "bilateral"), ("pattern", "1,-1")]),
        )
        .unwrap();
        // at offset zero both return sets are the odd numbers
        let at_zero = salas_check(&spec, 0, 0, &nat(1000)).unwrap();
        assert!(at_zero.holds());
        // the offset-one forward set at threshold one is already empty
        let with_offsets = salas_check(&spec, 0, 1, &nat(1000)).unwrap();
        assert!(!with_offsets.holds());
        let sets = return_time_sets(&spec, 2, 0, &nat(1000)).unwrap();
        assert!(sets.forward.is_empty());
    }

    #[test]
    fn mirrored_constant_weights_classify_as_certified_everything() {
        let spec = generate_weight("const", &params_of(&[("kind", "bilateral")])).unwrap();
        let report = classify_shift(&spec, &nat(10_000), &ClassifyConfig::default()).unwrap();
        for (class, cv) in &report.classes {
            assert!(cv.status.holds(), "{class} should hold");
        }
        for class in ["mixing", "delta_star", "ip_star", "transitive"] {
            assert_eq!(
                report.classes[class].status,
                Status::Certified,
                "{class} should be certified"
            );
        }
        match &report.classes["mixing"].verdict.witness {
            Witness::PeriodicCertificate { period, residues, .. } => {
                assert_eq!(period, &Nat::one());
                assert_eq!(residues, &vec![Nat::zero()]);
            }
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn growing_construction_classification_separates_the_claimed_pair() {
        // the exponent record must clear the threshold relative to every
        // offset in the grid, which needs the full-size horizon
        let spec = spec_for("p41_1", 1_000_000);
        let report = classify_shift(&spec, &nat(1_000_000), &ClassifyConfig::default()).unwrap();
        let wm = &report.classes["weakly_mixing"];
        assert_eq!(wm.status, Status::HoldsAtHorizon);
        let du = &report.classes["D_upper"];
        assert!(!du.status.holds());
        assert!(!report.classes["mixing"].status.holds());
        assert!(report.classes["transitive"].status.holds());

        // the stored verdicts re-verify against their grid-point sets
        for class in ["weakly_mixing", "D_upper", "mixing"] {
            let cv = &report.classes[class];
            let sets = return_time_sets(&spec, cv.t, cv.j, &nat(1_000_000)).unwrap();
            assert!(verify_verdict(&cv.verdict, &sets.forward), "{class}");
        }
    }

    #[test]
    fn power_contraction_keeps_cofinite_sets_syndetic() {
        let spec = generate_weight("const", &params_of(&[("exponent", "2")])).unwrap();
        let config = ClassifyConfig::default();
        let one = power_product_check(&spec, &Nat::one(), FamilyName::Syndetic, &nat(1000), &config)
            .unwrap();
        assert!(one.status.holds());
        let three =
            power_product_check(&spec, &nat(3), FamilyName::Syndetic, &nat(1000), &config).unwrap();
        assert!(three.status.holds());
        // the power-one run agrees with the classifier on the same class
        let report = classify_shift(&spec, &nat(1000), &config).unwrap();
        assert_eq!(
            one.status.holds(),
            report.classes["topologically_ergodic"].status.holds()
        );
    }

    #[test]
    fn spec_serialization_round_trips_with_stable_shape() {
        let spec = spec_for("p41_1", 1000);
        let json = serde_json::to_string(&spec).unwrap();
        let back: WeightSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);

        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let obj = value.as_object().unwrap();
        for key in ["kind", "name", "params", "program", "checkpoints"] {
            assert!(obj.contains_key(key), "missing {key}");
        }
        assert!(!obj.contains_key("left_cycle"));
        assert_eq!(obj["kind"], "unilateral");
        // programs are arrays of blocks; segments are two-string pairs
        let first_segment = &obj["program"][0][0];
        assert_eq!(first_segment[0], "1");
        assert_eq!(first_segment[1], "0");

        let cyclic = generate_weight("const", &params_of(&[("kind", "bilateral")])).unwrap();
        let value = serde_json::to_value(&cyclic).unwrap();
        assert_eq!(value["program"], serde_json::json!([]));
        assert_eq!(value["right_cycle"][0][0], "1");
        assert_eq!(value["right_cycle"][0][1], "1");
        assert_eq!(value["left_cycle"][0][1], "-1");
        let back: WeightSpec = serde_json::from_value(value).unwrap();
        assert_eq!(back, cyclic);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = serde_json::to_string(&spec_for("p52_ip", 100_000)).unwrap();
        let b = serde_json::to_string(&spec_for("p52_ip", 100_000)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_names_and_parameters_are_rejected() {
        assert!(generate_weight("nope", &BTreeMap::new()).is_err());
        assert!(generate_weight("p41_2", &params_of(&[("base", "7")])).is_err());
        assert!(generate_weight("p52_ip", &params_of(&[("horizon", "abc")])).is_err());
        assert!(generate_weight("periodic", &BTreeMap::new()).is_err());
        assert!(generate_weight("const", &params_of(&[("exponent", "x")])).is_err());
    }

    #[test]
    fn compile_rejects_underscoped_programs_and_bad_cycles() {
        let short = spec_for("p41_1", 100);
        let err = compile_exponent_profile(&short, &nat(10_000)).unwrap_err();
        assert!(err.to_string().contains("horizon"), "{err}");

        let mut stray = generate_weight("const", &BTreeMap::new()).unwrap();
        stray.left_cycle.push(Segment::new(Nat::one(), 1));
        assert!(compile_exponent_profile(&stray, &nat(100)).is_err());

        let mut missing = generate_weight("const", &params_of(&[("kind", "bilateral")])).unwrap();
        missing.left_cycle.clear();
        assert!(compile_exponent_profile(&missing, &nat(100)).is_err());

        let spec = generate_weight("const", &BTreeMap::new()).unwrap();
        assert!(compile_exponent_profile(&spec, &Nat::zero()).is_err());
        let over = compile_exponent_profile(&spec, &pow10(19)).unwrap_err();
        assert!(over.to_string().contains(MAX_HORIZON_ENV), "{over}");
    }

    #[test]
    fn unilateral_shifts_reject_negative_offsets() {
        let spec = generate_weight("const", &BTreeMap::new()).unwrap();
        assert!(return_time_sets(&spec, 0, -1, &nat(100)).is_err());
        let profile = compile_exponent_profile(&spec, &nat(100)).unwrap();
        assert!(profile.level_runs_backward(0, 1, 50).is_err());
        assert!(profile.exponent_at(-3).is_err());
        let config = ClassifyConfig {
            j_grid: Some(vec![-1]),
            ..ClassifyConfig::default()
        };
        assert!(classify_shift(&spec, &nat(1000), &config).is_err());
    }

    #[test]
    fn expected_separation_rows_reference_known_classes() {
        for name in CONSTRUCTIONS {
            for (class, _) in expected_separations(name) {
                assert!(CLASS_NAMES.contains(&class), "{name}: {class}");
            }
        }
        assert!(expected_separations("p44_ruler").is_empty());
        assert_eq!(expected_separations("p41_1").len(), 2);
    }
}
