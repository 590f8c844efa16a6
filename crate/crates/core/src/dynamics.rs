//! Exact orbit simulation for the weighted backward shift on finitely
//! supported vectors, and two-sided bounds on its return-time sets.
//!
//! Coefficients are dyadic rationals ([`Dyadic`]), so every weight product,
//! norm, and open-set membership test is decided exactly in integer
//! arithmetic.  [`apply_power`] and [`apply_right_inverse`] move a
//! [`DyadicVector`] along the orbit using only cumulative-exponent lookups
//! from a compiled [`ExponentProfile`]; no individual weight is ever
//! materialized.  [`return_set_bounds`] encloses the set of powers carrying
//! one open region into another between an explicit witness-based lower
//! bound and a product-threshold upper bound, and [`criterion_check`]
//! verifies that the product level sets force the forward orbit and the
//! right-inverse orbit of a vector into arbitrarily small balls.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::intset::RunSet;
use crate::numeric::{floor_log2_rat, int, nat, serde_int, serde_nat, serde_rat, Int, Nat, Rat};
use crate::shifts::{
    compile_exponent_profile, return_sets_from_profile, ExponentProfile, ShiftKind, WeightSpec,
};

/// Exact dyadic rational `num * 2^exp`, kept in the unique normal form where
/// `num` is odd (zero is stored as `0 * 2^0`).
///
/// The exponent is signed and never expanded: multiplying by a power of two
/// is a constant-time exponent shift, so coefficients like `2^(-1000000)`
/// cost no more than `1/2`.  Only additions and near-tie comparisons align
/// numerators, and the alignment distance is bounded by the numerator bit
/// lengths involved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dyadic {
    num: Int,
    exp: i64,
}

impl Dyadic {
    /// Builds `num * 2^exp` and normalizes the representation.
    pub fn new(num: Int, exp: i64) -> Dyadic {
        if num.is_zero() {
            return Dyadic { num, exp: 0 };
        }
        let tz = num.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            return Dyadic {
                num: num >> tz,
                exp: exp + tz as i64,
            };
        }
        Dyadic { num, exp }
    }

    pub fn from_int(v: i64) -> Dyadic {
        Dyadic::new(int(v), 0)
    }

    pub fn zero() -> Dyadic {
        Dyadic {
            num: Int::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Dyadic {
        Dyadic {
            num: int(1),
            exp: 0,
        }
    }

    pub fn numerator(&self) -> &Int {
        &self.num
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic {
            num: self.num.abs(),
            exp: self.exp,
        }
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic {
            num: -self.num.clone(),
            exp: self.exp,
        }
    }

    /// `self * 2^k` in constant time.
    pub fn mul_pow2(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return Dyadic::zero();
        }
        Dyadic {
            num: self.num.clone(),
            exp: self.exp + k,
        }
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(other.exp);
        let a = &self.num << (self.exp - e) as u64;
        let b = &other.num << (other.exp - e) as u64;
        Dyadic::new(a + b, e)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() || other.is_zero() {
            return Dyadic::zero();
        }
        Dyadic::new(&self.num * &other.num, self.exp + other.exp)
    }

    /// Orders `|self|` against `|other|` without materializing exponents:
    /// the magnitude intervals `[bits(num) - 1 + exp, bits(num) + exp)`
    /// decide all but near-ties, which are settled by one bounded shift.
    pub fn cmp_magnitude(&self, other: &Dyadic) -> Ordering {
        match (self.is_zero(), other.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            (false, false) => {}
        }
        let top_a = self.num.magnitude().bits() as i64 + self.exp;
        let top_b = other.num.magnitude().bits() as i64 + other.exp;
        if top_a != top_b {
            return top_a.cmp(&top_b);
        }
        // Equal tops force |exp difference| = |bit-length difference|.
        let d = self.exp - other.exp;
        if d >= 0 {
            (self.num.magnitude() << d as u64).cmp(other.num.magnitude())
        } else {
            self.num
                .magnitude()
                .cmp(&(other.num.magnitude() << (-d) as u64))
        }
    }

    /// Exact rational value.  Materializes `2^|exp|`, so it is intended for
    /// coefficients with small exponents (inputs and reports), not for orbit
    /// intermediates.
    pub fn to_rat(&self) -> Rat {
        if self.exp >= 0 {
            Rat::from_integer(&self.num << self.exp as u64)
        } else {
            Rat::new(self.num.clone(), Int::from(1u8) << (-self.exp) as u64)
        }
    }

    fn sign_i8(&self) -> i8 {
        if self.num.is_zero() {
            0
        } else if self.num.is_negative() {
            -1
        } else {
            1
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Dyadic) -> Ordering {
        let sa = self.sign_i8();
        let sb = other.sign_i8();
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == 0 {
            return Ordering::Equal;
        }
        let mag = self.cmp_magnitude(other);
        if sa > 0 {
            mag
        } else {
            mag.reverse()
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Dyadic) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exp == 0 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}*2^{}", self.num, self.exp)
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DyadicRepr {
    #[serde(with = "serde_int")]
    num: Int,
    exp: i64,
}

impl Serialize for Dyadic {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DyadicRepr {
            num: self.num.clone(),
            exp: self.exp,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Dyadic {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Dyadic, D::Error> {
        let repr = DyadicRepr::deserialize(d)?;
        Ok(Dyadic::new(repr.num, repr.exp))
    }
}

/// Finitely supported vector with dyadic coefficients, indexed by integers
/// (bilateral) or non-negative integers (unilateral).  Zero coefficients are
/// never stored, so equality is structural.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DyadicVector {
    entries: BTreeMap<i64, Dyadic>,
}

impl DyadicVector {
    pub fn zero() -> DyadicVector {
        DyadicVector::default()
    }

    /// The basis vector at `index`.
    pub fn unit(index: i64) -> DyadicVector {
        DyadicVector::from_entries([(index, Dyadic::one())])
    }

    /// Builds a vector from coefficient pairs, summing duplicates and
    /// dropping exact zeros.
    pub fn from_entries<I: IntoIterator<Item = (i64, Dyadic)>>(pairs: I) -> DyadicVector {
        let mut entries: BTreeMap<i64, Dyadic> = BTreeMap::new();
        for (index, value) in pairs {
            let merged = match entries.remove(&index) {
                Some(existing) => existing.add(&value),
                None => value,
            };
            if !merged.is_zero() {
                entries.insert(index, merged);
            }
        }
        DyadicVector { entries }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&i64, &Dyadic)> {
        self.entries.iter()
    }

    /// Coefficient at `index` (zero when the index is unsupported).
    pub fn coefficient(&self, index: i64) -> Dyadic {
        self.entries.get(&index).cloned().unwrap_or_else(Dyadic::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn min_index(&self) -> Option<i64> {
        self.entries.keys().next().copied()
    }

    pub fn max_index(&self) -> Option<i64> {
        self.entries.keys().next_back().copied()
    }

    /// Largest absolute supported index (`0` for the zero vector).
    pub fn support_radius(&self) -> u64 {
        self.entries
            .keys()
            .map(|k| k.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: &Dyadic) -> DyadicVector {
        if c.is_zero() {
            return DyadicVector::zero();
        }
        DyadicVector {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (*k, v.mul(c)))
                .collect(),
        }
    }

    pub fn add(&self, other: &DyadicVector) -> DyadicVector {
        let mut entries = self.entries.clone();
        for (k, v) in &other.entries {
            let merged = match entries.remove(k) {
                Some(existing) => existing.add(v),
                None => v.clone(),
            };
            if !merged.is_zero() {
                entries.insert(*k, merged);
            }
        }
        DyadicVector { entries }
    }

    pub fn sub(&self, other: &DyadicVector) -> DyadicVector {
        self.add(&other.scale(&Dyadic::from_int(-1)))
    }

    /// Exact norm; the supremum norm is a magnitude maximum and the `l1`
    /// norm an exact dyadic sum.
    pub fn norm(&self, kind: NormKind) -> Dyadic {
        match kind {
            NormKind::Sup => self
                .entries
                .values()
                .max_by(|a, b| a.cmp_magnitude(b))
                .map(Dyadic::abs)
                .unwrap_or_else(Dyadic::zero),
            NormKind::L1 => self
                .entries
                .values()
                .fold(Dyadic::zero(), |acc, v| acc.add(&v.abs())),
        }
    }
}

impl Serialize for DyadicVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<(i64, &Dyadic)> = self.entries.iter().map(|(k, v)| (*k, v)).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DyadicVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<DyadicVector, D::Error> {
        let pairs = Vec::<(i64, Dyadic)>::deserialize(d)?;
        Ok(DyadicVector::from_entries(pairs))
    }
}

/// Norm used for membership tests: coordinate supremum or absolute sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Sup,
    L1,
}

/// Open region with exactly decidable membership for dyadic vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CylinderOpen {
    /// `{x : |x_index| > bound} ∩ {x : ‖x‖ < cap}`.
    CoordLowerBoundWithNormCap {
        index: i64,
        bound: Dyadic,
        cap: Dyadic,
        norm: NormKind,
    },
    /// `{x : ‖x - center‖ < radius}`.
    Ball {
        center: DyadicVector,
        radius: Dyadic,
        norm: NormKind,
    },
}

impl CylinderOpen {
    /// The region `{x : |x_index| > 1/aperture, ‖x‖_sup < 1}`; the aperture
    /// must be a power of two so the bound is dyadic.
    pub fn coordinate_window(index: i64, aperture: u64) -> Result<CylinderOpen> {
        let r = aperture_log2(aperture)?;
        Ok(CylinderOpen::CoordLowerBoundWithNormCap {
            index,
            bound: Dyadic::new(int(1), -(r as i64)),
            cap: Dyadic::one(),
            norm: NormKind::Sup,
        })
    }

    /// The ball of radius `1/aperture^2` around `(level + 1) e_index` in the
    /// supremum norm.
    pub fn target_ball(index: i64, level: u64, aperture: u64) -> Result<CylinderOpen> {
        let r = aperture_log2(aperture)?;
        let height = i64::try_from(level.checked_add(1).ok_or_else(|| {
            Error::domain("level out of range")
        })?)
        .map_err(|_| Error::domain("level out of range"))?;
        Ok(CylinderOpen::Ball {
            center: DyadicVector::from_entries([(index, Dyadic::from_int(height))]),
            radius: Dyadic::new(int(1), -2 * r as i64),
            norm: NormKind::Sup,
        })
    }

    /// Exact membership test.
    pub fn contains(&self, x: &DyadicVector) -> bool {
        match self {
            CylinderOpen::CoordLowerBoundWithNormCap {
                index,
                bound,
                cap,
                norm,
            } => x.coefficient(*index).abs() > *bound && x.norm(*norm) < *cap,
            CylinderOpen::Ball {
                center,
                radius,
                norm,
            } => x.sub(center).norm(*norm) < *radius,
        }
    }
}

fn aperture_log2(aperture: u64) -> Result<u32> {
    if aperture < 2 || !aperture.is_power_of_two() {
        return Err(Error::domain(
            "apertures must be powers of two of at least 2 so the window bounds stay dyadic",
        ));
    }
    Ok(aperture.trailing_zeros())
}

fn check_support(kind: ShiftKind, x: &DyadicVector) -> Result<()> {
    if kind == ShiftKind::Unilateral {
        if let Some(min) = x.min_index() {
            if min < 0 {
                return Err(Error::domain(
                    "unilateral vectors must be supported on non-negative indices",
                ));
            }
        }
    }
    Ok(())
}

/// Moves every coefficient of `x` by `step` positions, scaling by the exact
/// weight product read off the exponent profile.  A negative step is the
/// backward shift direction (coefficients pushed below index zero vanish on
/// a unilateral axis); a positive step is the right-inverse direction.
fn carried(profile: &ExponentProfile, x: &DyadicVector, step: i128) -> Result<DyadicVector> {
    let mut moved = Vec::with_capacity(x.support_len());
    for (&s, c) in x.entries() {
        let target = s as i128 + step;
        if profile.kind() == ShiftKind::Unilateral && target < 0 {
            continue;
        }
        let target = i64::try_from(target)
            .map_err(|_| Error::domain("shifted index out of range"))?;
        let delta = profile.exponent_at(s)? - profile.exponent_at(target)?;
        moved.push((target, c.mul_pow2(delta)));
    }
    Ok(DyadicVector::from_entries(moved))
}

/// `m`-th power of the backward shift applied to `x`, using an already
/// compiled profile.  Coordinate `k` of the result is the product of the `m`
/// weights above position `k` times coordinate `k + m` of `x`.
pub fn apply_power_profiled(
    profile: &ExponentProfile,
    x: &DyadicVector,
    m: u64,
) -> Result<DyadicVector> {
    check_support(profile.kind(), x)?;
    carried(profile, x, -(m as i128))
}

/// `m`-th power of the right inverse (the forward shift weighted by
/// reciprocals, defined on finite supports) applied to `x`.
pub fn apply_right_inverse_profiled(
    profile: &ExponentProfile,
    x: &DyadicVector,
    m: u64,
) -> Result<DyadicVector> {
    check_support(profile.kind(), x)?;
    carried(profile, x, m as i128)
}

fn orbit_profile(spec: &WeightSpec, x: &DyadicVector, m: &Nat) -> Result<(ExponentProfile, u64)> {
    check_support(spec.kind, x)?;
    let m = m
        .to_u64()
        .ok_or_else(|| Error::config("power too large for simulation"))?;
    let coverage = x
        .support_radius()
        .checked_add(m)
        .ok_or_else(|| Error::config("power too large for simulation"))?
        .max(1);
    let profile = compile_exponent_profile(spec, &nat(coverage))?;
    Ok((profile, m))
}

/// `m`-th power of the backward shift, compiling just enough of the weight
/// program to cover the support of `x`.
pub fn apply_power(spec: &WeightSpec, x: &DyadicVector, m: &Nat) -> Result<DyadicVector> {
    let (profile, m) = orbit_profile(spec, x, m)?;
    apply_power_profiled(&profile, x, m)
}

/// `m`-th power of the right inverse of the backward shift.
pub fn apply_right_inverse(spec: &WeightSpec, x: &DyadicVector, m: &Nat) -> Result<DyadicVector> {
    let (profile, m) = orbit_profile(spec, x, m)?;
    apply_right_inverse_profiled(&profile, x, m)
}

/// Two-sided enclosure of the powers that carry the coordinate window
/// `U = {x : |x_index| > 1/aperture, ‖x‖ < 1}` into the ball
/// `V = {x : ‖x - (level+1) e_index‖ < 1/aperture²}`.
///
/// `upper` is the product-threshold necessary condition; `lower` collects the
/// powers where the canonical two-coordinate witness is verified, member by
/// member, through exact simulation, so `lower ⊆ {m : B^m(U) ∩ V ≠ ∅} ⊆
/// upper`.  `recheck_failures` must be empty; it is part of the report so the
/// verification is visible downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSetBounds {
    pub construction: String,
    pub kind: ShiftKind,
    pub index: i64,
    pub level: u64,
    pub aperture: u64,
    #[serde(with = "serde_nat")]
    pub horizon: Nat,
    /// Fixed first witness coordinate, a dyadic strictly between
    /// `1/aperture` and `1`.
    pub coefficient: Dyadic,
    pub u_window: CylinderOpen,
    pub v_ball: CylinderOpen,
    pub lower: RunSet,
    pub upper: RunSet,
    /// Product level set above `index` (the forward factor of `upper`).
    pub forward: RunSet,
    /// Reciprocal product level set below `index`; empty and flagged trivial
    /// on a unilateral axis.
    pub backward: RunSet,
    pub backward_trivial: bool,
    /// Lower-bound members whose witness failed re-simulation (always empty
    /// unless the profile arithmetic and the simulation disagree).
    pub recheck_failures: RunSet,
}

/// Default parameter grid for enclosure sweeps: offsets near the origin and
/// the two `(level, aperture)` pairs `(1, 4)` and `(3, 16)`.
pub fn default_bounds_grid(kind: ShiftKind) -> (Vec<i64>, Vec<(u64, u64)>) {
    let offsets = match kind {
        ShiftKind::Unilateral => vec![0, 1, 2],
        ShiftKind::Bilateral => vec![-2, -1, 0, 1, 2],
    };
    (offsets, vec![(1, 4), (3, 16)])
}

/// Computes the enclosure for one `(index, level, aperture)` triple.
///
/// The aperture must be a power of two exceeding `level`, which must be at
/// least `1`.  The upper bound is exact for power-of-two weights: a product
/// exceeds `level` exactly when its exponent reaches
/// `floor(log2 level) + 1`.  The lower bound keeps a power `m` when the
/// witness `a e_index + b e_{index+m}` (with `b` chosen so the image hits
/// the ball center exactly) lands in the window and its image in the ball;
/// both conditions reduce to exponent comparisons and are then re-verified
/// by simulation.
pub fn return_set_bounds(
    spec: &WeightSpec,
    index: i64,
    level: u64,
    aperture: u64,
    horizon: &Nat,
) -> Result<ReturnSetBounds> {
    if level < 1 {
        return Err(Error::domain("level must be at least 1"));
    }
    if aperture <= level {
        return Err(Error::domain("aperture must exceed the level"));
    }
    let r = aperture_log2(aperture)?;
    let h = horizon
        .to_u64()
        .ok_or_else(|| Error::config("horizon too large"))?;
    if h == 0 {
        return Err(Error::config("horizon must be positive"));
    }
    if spec.kind == ShiftKind::Unilateral && index < 0 {
        return Err(Error::domain(
            "negative offsets are undefined for a unilateral shift",
        ));
    }
    let coverage = h
        .checked_add(index.unsigned_abs())
        .ok_or_else(|| Error::config("horizon overflow"))?;
    let profile = compile_exponent_profile(spec, &nat(coverage))?;

    // Upper bound: the level sets at threshold floor(log2 level) + 1.
    let t = 63 - i64::from(level.leading_zeros());
    let sets = return_sets_from_profile(&profile, t, index, h)?;
    let upper = if sets.backward_trivial {
        sets.forward.clone()
    } else {
        sets.forward.intersect(&sets.backward)
    };

    // Witness coordinate a = round_8bits((aperture+1) / (2*aperture)), the
    // dyadic midpoint of (1/aperture, 1) at 8 fractional bits.
    let p = {
        let ap = aperture as u128;
        ((512 * (ap + 1) + 2 * ap) / (4 * ap)) as u64
    };
    let coefficient = Dyadic::new(int(p as i64), -8);
    let one = Dyadic::one();
    let inv_aperture = Dyadic::new(int(1), -(r as i64));
    if !(coefficient > inv_aperture && coefficient < one) {
        return Err(Error::invariant(
            "witness coordinate escaped the coordinate window",
        ));
    }

    // Largest backward exponent x with a * 2^x < 1/aperture^2, i.e. with
    // p * 2^(x + 2r) < 2^8.
    let mut y: i64 = 9;
    while !pow2_scaled_below(p, y, 8) {
        y -= 1;
    }
    let x_max = y - 2 * r as i64;

    // Forward witness condition: the product above `index` must exceed
    // level + 1, pushing the second coordinate strictly inside the norm cap.
    let c1 = 64 - i64::from((level + 1).leading_zeros());
    let lower_fwd = profile.level_runs_forward(index, c1, h)?;

    // Backward witness condition: the carried first coordinate must fall
    // inside the ball radius.
    let bwd_ok = match spec.kind {
        ShiftKind::Bilateral => profile.level_runs_backward(index, -x_max, h)?,
        ShiftKind::Unilateral => {
            let head = index.unsigned_abs().min(h);
            let base = profile.exponent_at(index)?;
            let mut kept: Vec<Nat> = Vec::new();
            for m in 1..=head {
                if base - profile.exponent_at(index - m as i64)? <= x_max {
                    kept.push(nat(m));
                }
            }
            let head_set = RunSet::from_elements(kept)?;
            if head < h {
                head_set.union(&RunSet::interval(nat(head + 1), nat(h) + 1u8)?)
            } else {
                head_set
            }
        }
    };
    let lower = lower_fwd.intersect(&bwd_ok);
    if !lower.subset_of(&upper) {
        return Err(Error::invariant(
            "witness lower bound escaped the product upper bound",
        ));
    }

    let u_window = CylinderOpen::coordinate_window(index, aperture)?;
    let v_ball = CylinderOpen::target_ball(index, level, aperture)?;
    let height = (level + 1) as i64;
    let base = profile.exponent_at(index)?;
    let mut failures: Vec<Nat> = Vec::new();
    for (a, b) in lower.runs() {
        let lo = a.to_u64().expect("lower endpoints fit the horizon");
        let hi = b.to_u64().expect("lower endpoints fit the horizon");
        for m in lo..hi {
            let growth = profile.exponent_at(index + m as i64)? - base;
            let witness = DyadicVector::from_entries([
                (index, coefficient.clone()),
                (index + m as i64, Dyadic::new(int(height), -growth)),
            ]);
            let image = apply_power_profiled(&profile, &witness, m)?;
            if !(u_window.contains(&witness) && v_ball.contains(&image)) {
                failures.push(nat(m));
            }
        }
    }
    let recheck_failures = RunSet::from_elements(failures)?;

    Ok(ReturnSetBounds {
        construction: spec.name.clone(),
        kind: spec.kind,
        index,
        level,
        aperture,
        horizon: nat(h),
        coefficient,
        u_window,
        v_ball,
        lower,
        upper,
        forward: sets.forward,
        backward: sets.backward,
        backward_trivial: sets.backward_trivial,
        recheck_failures,
    })
}

/// `true` when `p * 2^y < 2^cap_bits` for a positive integer `p`.
fn pow2_scaled_below(p: u64, y: i64, cap_bits: u32) -> bool {
    let p = p as u128;
    let cap = 1u128 << cap_bits;
    if y >= 0 {
        if y >= 127 {
            return false;
        }
        p.checked_shl(y as u32).map(|v| v < cap).unwrap_or(false)
    } else {
        let shift = (-y).min(127) as u32;
        p < cap.checked_shl(shift).unwrap_or(u128::MAX)
    }
}

/// One diagnostic row of a [`CriterionReport`]: the same two containments
/// evaluated with the product threshold `2^threshold_exp` instead of the
/// derived scale.  The row is `asserted` when `2^threshold_exp` is at least
/// the derived scale, which makes both containments guaranteed; other rows
/// are observational.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriterionRow {
    pub threshold_exp: i64,
    pub asserted: bool,
    pub backward_holds: bool,
    pub forward_holds: bool,
}

/// Report of [`criterion_check`]: the exact sets of powers sending the
/// vector (forward orbit and right-inverse orbit) into the open `epsilon`
/// ball, the product level-set cores that must be contained in them, and the
/// members violating either containment (necessarily none when the cores use
/// the derived scale).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub construction: String,
    pub kind: ShiftKind,
    #[serde(with = "serde_nat")]
    pub horizon: Nat,
    pub support_radius: u64,
    pub epsilon: Dyadic,
    /// Derived product scale `‖x‖_sup * max(2 * support_radius, 1) / epsilon`;
    /// zero for the zero vector.
    #[serde(with = "serde_rat")]
    pub scale: Rat,
    /// Smallest exponent whose power of two exceeds `scale` (0 for the zero
    /// vector, where no level set is consulted).
    pub threshold: i64,
    /// `{n ≤ horizon : ‖B^n x‖_sup < epsilon}`.
    pub forward_small: RunSet,
    /// `{n ≤ horizon : ‖S^n x‖_sup < epsilon}` for the right inverse `S`.
    pub inverse_small: RunSet,
    /// Powers where every reciprocal product across the support hull clears
    /// the scale; must be contained in `forward_small`.  On a unilateral
    /// axis this is the tail beyond the largest supported index, where the
    /// forward orbit vanishes identically.
    pub backward_core: RunSet,
    /// Powers where every forward product across the support hull clears the
    /// scale; must be contained in `inverse_small`.
    pub forward_core: RunSet,
    pub backward_violations: RunSet,
    pub forward_violations: RunSet,
    pub rows: Vec<CriterionRow>,
}

/// Verifies that the product level sets of the weight sequence force both
/// orbits of `x` into the `epsilon` ball, exactly and at every power up to
/// the horizon.
///
/// The containments are evaluated at the derived scale
/// `‖x‖_sup * max(2m, 1) / epsilon` (with `m` the support radius), for which
/// they are guaranteed; violations are reported, never asserted away.
/// `t_grid` adds diagnostic rows at alternative scales `2^t`, and `j_grid`
/// widens the intersection hull for those rows (the support hull is always
/// included, so asserted rows stay sound).
pub fn criterion_check(
    spec: &WeightSpec,
    x: &DyadicVector,
    epsilon: &Dyadic,
    horizon: &Nat,
    t_grid: &[i64],
    j_grid: &[i64],
) -> Result<CriterionReport> {
    if epsilon <= &Dyadic::zero() {
        return Err(Error::domain("epsilon must be positive"));
    }
    let h = horizon
        .to_u64()
        .ok_or_else(|| Error::config("horizon too large"))?;
    if h == 0 {
        return Err(Error::config("horizon must be positive"));
    }
    check_support(spec.kind, x)?;
    if spec.kind == ShiftKind::Unilateral && j_grid.iter().any(|&j| j < 0) {
        return Err(Error::domain(
            "negative offsets are undefined for a unilateral shift",
        ));
    }
    if j_grid.iter().any(|&j| j.unsigned_abs() > 100_000) {
        return Err(Error::domain("offset grid too wide"));
    }
    if t_grid.iter().any(|&t| t.unsigned_abs() > 4096) {
        return Err(Error::domain("threshold exponent out of range"));
    }

    let radius = x.support_radius();
    let widest = j_grid
        .iter()
        .map(|j| j.unsigned_abs())
        .max()
        .unwrap_or(0)
        .max(radius);
    let coverage = h
        .checked_add(widest)
        .ok_or_else(|| Error::config("horizon overflow"))?
        .max(1);
    let profile = compile_exponent_profile(spec, &nat(coverage))?;

    // Exact orbit sweeps in the supremum norm.
    let mut fwd_small = SpanCollector::default();
    let mut inv_small = SpanCollector::default();
    let exponents: Vec<(i64, i64, Dyadic)> = x
        .entries()
        .map(|(&s, c)| Ok((s, profile.exponent_at(s)?, c.clone())))
        .collect::<Result<_>>()?;
    for n in 1..=h {
        let mut fwd_ok = true;
        let mut inv_ok = true;
        for (s, es, c) in &exponents {
            if inv_ok {
                let carried = c.mul_pow2(es - profile.exponent_at(s + n as i64)?);
                if carried.abs() >= *epsilon {
                    inv_ok = false;
                }
            }
            if fwd_ok {
                let target = *s as i128 - n as i128;
                if !(spec.kind == ShiftKind::Unilateral && target < 0) {
                    let carried = c.mul_pow2(es - profile.exponent_at(target as i64)?);
                    if carried.abs() >= *epsilon {
                        fwd_ok = false;
                    }
                }
            }
            if !fwd_ok && !inv_ok {
                break;
            }
        }
        if fwd_ok {
            fwd_small.push(n);
        }
        if inv_ok {
            inv_small.push(n);
        }
    }
    let forward_small = fwd_small.into_runset();
    let inverse_small = inv_small.into_runset();

    // Derived scale and its power-of-two threshold.
    let sup = x.norm(NormKind::Sup);
    let width = int(2 * radius as i64).max(int(1));
    let scale = if sup.is_zero() {
        Rat::zero()
    } else {
        sup.to_rat() * Rat::from_integer(width) / epsilon.to_rat()
    };
    let threshold = if scale.is_zero() {
        0
    } else {
        floor_log2_rat(&scale)?
            .checked_add(1)
            .ok_or_else(|| Error::invariant("threshold exponent overflow"))?
    };

    let hull: Vec<i64> = match (x.min_index(), x.max_index()) {
        (Some(_), Some(hi)) => match spec.kind {
            ShiftKind::Unilateral => (0..=hi).collect(),
            ShiftKind::Bilateral => (-(radius as i64)..=radius as i64).collect(),
        },
        _ => Vec::new(),
    };
    let full = RunSet::interval(nat(1), nat(h) + 1u8)?;
    let forward_core = core_of(&profile, &hull, threshold, h, false, &full)?;
    let backward_core = match spec.kind {
        ShiftKind::Bilateral => core_of(&profile, &hull, threshold, h, true, &full)?,
        ShiftKind::Unilateral => {
            // The forward orbit vanishes beyond the largest supported index.
            let tail_from = x.max_index().map(|hi| hi as u64 + 1).unwrap_or(1);
            if tail_from > h {
                RunSet::empty()
            } else {
                RunSet::interval(nat(tail_from), nat(h) + 1u8)?
            }
        }
    };
    let backward_violations = backward_core.difference(&forward_small);
    let forward_violations = forward_core.difference(&inverse_small);

    // Diagnostic rows at alternative power-of-two scales.
    let mut row_hull = hull.clone();
    row_hull.extend_from_slice(j_grid);
    row_hull.sort_unstable();
    row_hull.dedup();
    let mut ts: Vec<i64> = t_grid.to_vec();
    ts.sort_unstable();
    ts.dedup();
    let mut rows = Vec::with_capacity(ts.len());
    for t in ts {
        let row_threshold = t
            .checked_add(1)
            .ok_or_else(|| Error::domain("threshold exponent out of range"))?;
        let fc = core_of(&profile, &row_hull, row_threshold, h, false, &full)?;
        let bc = match spec.kind {
            ShiftKind::Bilateral => core_of(&profile, &row_hull, row_threshold, h, true, &full)?,
            ShiftKind::Unilateral => backward_core.clone(),
        };
        rows.push(CriterionRow {
            threshold_exp: t,
            asserted: pow2_ge_rat(t, &scale),
            backward_holds: bc.subset_of(&forward_small),
            forward_holds: fc.subset_of(&inverse_small),
        });
    }

    Ok(CriterionReport {
        construction: spec.name.clone(),
        kind: spec.kind,
        horizon: nat(h),
        support_radius: radius,
        epsilon: epsilon.clone(),
        scale,
        threshold,
        forward_small,
        inverse_small,
        backward_core,
        forward_core,
        backward_violations,
        forward_violations,
        rows,
    })
}

/// Intersection of the product level sets at `threshold` across `hull`
/// offsets; `backward` selects the reciprocal-product direction.  The empty
/// hull yields the full range.
fn core_of(
    profile: &ExponentProfile,
    hull: &[i64],
    threshold: i64,
    h: u64,
    backward: bool,
    full: &RunSet,
) -> Result<RunSet> {
    let mut core = full.clone();
    for &j in hull {
        let level_set = if backward {
            profile.level_runs_backward(j, threshold, h)?
        } else {
            profile.level_runs_forward(j, threshold, h)?
        };
        core = core.intersect(&level_set);
        if core.is_empty() {
            break;
        }
    }
    Ok(core)
}

/// `true` when `2^t >= v` for a non-negative rational `v`.
fn pow2_ge_rat(t: i64, v: &Rat) -> bool {
    if v.is_zero() {
        return true;
    }
    let n = v.numer().magnitude();
    let d = v.denom().magnitude();
    if t >= 0 {
        (d << t as u64) >= *n
    } else {
        *d >= (n << (-t) as u64)
    }
}

/// Ascending run accumulator over machine-sized elements.
#[derive(Default)]
struct SpanCollector {
    spans: Vec<(u64, u64)>,
}

impl SpanCollector {
    fn push(&mut self, x: u64) {
        match self.spans.last_mut() {
            Some((_, b)) if *b == x => *b += 1,
            _ => self.spans.push((x, x + 1)),
        }
    }

    fn into_runset(self) -> RunSet {
        RunSet::from_runs(
            self.spans
                .into_iter()
                .map(|(a, b)| (nat(a), nat(b)))
                .collect(),
        )
        .expect("ascending spans are canonical")
    }
}
