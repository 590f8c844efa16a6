//! Shared numeric aliases and helpers.
//!
//! All set endpoints are arbitrary-precision naturals (`Nat`), profile
//! positions and exponent values are arbitrary-precision signed integers
//! (`Int`), and every ratio is an exact big rational (`Rat`). Floating point
//! appears only in CSV rendering, via [`rat_to_f64_string`].

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, FromPrimitive, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Nat = BigUint;
pub type Int = BigInt;
pub type Rat = BigRational;

/// Shorthand constructor for small naturals.
pub fn nat(v: u64) -> Nat {
    Nat::from_u64(v).expect("u64 always fits")
}

/// Shorthand constructor for small signed integers.
pub fn int(v: i64) -> Int {
    Int::from_i64(v).expect("i64 always fits")
}

/// Exact rational from a small numerator/denominator pair.
pub fn rat(numer: i64, denom: i64) -> Rat {
    Rat::new(int(numer), int(denom))
}

/// Exact rational `count / total` from naturals. `total` must be non-zero.
pub fn rat_from_nats(count: &Nat, total: &Nat) -> Rat {
    Rat::new(nat_to_int(count), nat_to_int(total))
}

pub fn nat_to_int(v: &Nat) -> Int {
    Int::from_biguint(Sign::Plus, v.clone())
}

/// Converts a signed integer to a natural, failing on negatives.
pub fn int_to_nat(v: &Int) -> Result<Nat> {
    if v.is_negative() {
        return Err(Error::domain(format!("expected a non-negative value, got {v}")));
    }
    Ok(v.magnitude().clone())
}

pub fn parse_nat(s: &str) -> Result<Nat> {
    s.parse::<Nat>()
        .map_err(|e| Error::config(format!("bad decimal natural {s:?}: {e}")))
}

pub fn parse_int(s: &str) -> Result<Int> {
    s.parse::<Int>()
        .map_err(|e| Error::config(format!("bad decimal integer {s:?}: {e}")))
}

/// `10^e` as a natural.
pub fn pow10(e: u32) -> Nat {
    nat(10).pow(e)
}

/// Integer square root (floor).
pub fn isqrt(v: &Nat) -> Nat {
    v.sqrt()
}

/// Renders an exact rational as a decimal float with 15 significant digits.
///
/// Only used at the CSV boundary; everything upstream stays exact.
pub fn rat_to_f64_string(r: &Rat) -> String {
    let v = r.to_f64().unwrap_or(f64::NAN);
    if v == 0.0 {
        return "0".to_string();
    }
    format!("{v:.14e}")
}

/// Compares `2^e` with the positive integer `a` without materialising huge
/// powers: returns the ordering of `2^e` relative to `a`.
pub fn cmp_pow2_with(e: i64, a: &Nat) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    if a.is_zero() {
        return Ordering::Greater;
    }
    if e < 0 {
        // 2^e < 1 <= a
        return Ordering::Less;
    }
    let bits = a.bits();
    // 2^e has e+1 bits.
    let e_bits = e as u64 + 1;
    match e_bits.cmp(&bits) {
        Ordering::Less => Ordering::Less,
        Ordering::Greater => Ordering::Greater,
        Ordering::Equal => {
            let pow = Nat::from(1u8) << (e as u64);
            pow.cmp(a)
        }
    }
}

/// Floor of `log2` of a positive natural.
pub fn floor_log2(v: &Nat) -> Result<i64> {
    if v.is_zero() {
        return Err(Error::domain("log2 of zero"));
    }
    Ok(v.bits() as i64 - 1)
}

/// Floor of `log2` of a positive rational, computed from the bit lengths of
/// numerator and denominator plus one exact comparison.
pub fn floor_log2_rat(v: &Rat) -> Result<i64> {
    if !v.is_positive() {
        return Err(Error::domain(format!("log2 of a non-positive rational {v}")));
    }
    let n = v.numer().magnitude();
    let d = v.denom().magnitude();
    // log2(n/d) lies in (e - 1, e + 1) for e = bits(n) - bits(d), so the
    // floor is e when 2^e <= n/d and e - 1 otherwise.
    let e = n.bits() as i64 - d.bits() as i64;
    let pow_le = if e >= 0 {
        (d << e as u64) <= *n
    } else {
        *d <= (n << (-e) as u64)
    };
    Ok(if pow_le { e } else { e - 1 })
}

pub mod serde_nat {
    //! Serde adapter encoding a `Nat` as a decimal string.

    use super::Nat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Nat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Nat, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse::<Nat>().map_err(serde::de::Error::custom)
    }
}

pub mod serde_int {
    //! Serde adapter encoding an `Int` as a decimal string.

    use super::Int;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Int, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Int, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse::<Int>().map_err(serde::de::Error::custom)
    }
}

pub mod serde_nat_vec {
    //! Serde adapter encoding a `Vec<Nat>` as decimal strings.

    use super::Nat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Nat], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|n| n.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Nat>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.into_iter()
            .map(|s| s.parse::<Nat>().map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_nat_opt {
    //! Serde adapter encoding an `Option<Nat>` as a decimal string or null.

    use super::Nat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Nat>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(n) => s.serialize_some(&n.to_string()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Option<Nat>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        raw.map(|s| s.parse::<Nat>().map_err(serde::de::Error::custom))
            .transpose()
    }
}

pub mod serde_nat_pairs {
    //! Serde adapter encoding a `Vec<(Nat, Nat)>` as pairs of decimal strings.

    use super::Nat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        v: &[(Nat, Nat)],
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|(a, b)| [a.to_string(), b.to_string()]))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<(Nat, Nat)>, D::Error> {
        let raw = Vec::<[String; 2]>::deserialize(d)?;
        raw.into_iter()
            .map(|[a, b]| {
                let a = a.parse::<Nat>().map_err(serde::de::Error::custom)?;
                let b = b.parse::<Nat>().map_err(serde::de::Error::custom)?;
                Ok((a, b))
            })
            .collect()
    }
}

pub mod serde_rat {
    //! Serde adapter encoding a `Rat` as a `"numer/denom"` string.

    use super::Rat;
    use num::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{}/{}", v.numer(), v.denom()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        let raw = String::deserialize(d)?;
        let (n, d_) = raw
            .split_once('/')
            .ok_or_else(|| serde::de::Error::custom("expected numer/denom"))?;
        let numer = n.parse::<BigInt>().map_err(serde::de::Error::custom)?;
        let denom = d_.parse::<BigInt>().map_err(serde::de::Error::custom)?;
        if denom == BigInt::from(0) {
            return Err(serde::de::Error::custom("zero denominator"));
        }
        Ok(Rat::new(numer, denom))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cmp::Ordering;

    #[test]
    fn decimal_round_trip_survives_200_digits() {
        let big = pow10(200) + nat(7);
        let s = big.to_string();
        assert_eq!(s.len(), 201);
        assert_eq!(parse_nat(&s).unwrap(), big);
    }

    #[test]
    fn pow2_comparison_is_exact() {
        assert_eq!(cmp_pow2_with(3, &nat(8)), Ordering::Equal);
        assert_eq!(cmp_pow2_with(3, &nat(9)), Ordering::Less);
        assert_eq!(cmp_pow2_with(3, &nat(7)), Ordering::Greater);
        assert_eq!(cmp_pow2_with(-1, &nat(1)), Ordering::Less);
        assert_eq!(cmp_pow2_with(200, &(pow10(60))), Ordering::Greater);
        assert_eq!(cmp_pow2_with(199, &(Nat::from(1u8) << 199u32)), Ordering::Equal);
    }

    #[test]
    fn floor_log2_matches_bit_length() {
        assert_eq!(floor_log2(&nat(1)).unwrap(), 0);
        assert_eq!(floor_log2(&nat(2)).unwrap(), 1);
        assert_eq!(floor_log2(&nat(3)).unwrap(), 1);
        assert_eq!(floor_log2(&nat(1024)).unwrap(), 10);
        assert!(floor_log2(&nat(0)).is_err());
    }

    #[test]
    fn rational_floor_log2_handles_both_sides_of_one() {
        assert_eq!(floor_log2_rat(&rat(1, 1)).unwrap(), 0);
        assert_eq!(floor_log2_rat(&rat(8, 1)).unwrap(), 3);
        assert_eq!(floor_log2_rat(&rat(9, 1)).unwrap(), 3);
        assert_eq!(floor_log2_rat(&rat(7, 1)).unwrap(), 2);
        assert_eq!(floor_log2_rat(&rat(1, 2)).unwrap(), -1);
        assert_eq!(floor_log2_rat(&rat(1, 3)).unwrap(), -2);
        assert_eq!(floor_log2_rat(&rat(3, 2)).unwrap(), 0);
        assert_eq!(floor_log2_rat(&rat(255, 128)).unwrap(), 0);
        assert_eq!(floor_log2_rat(&rat(256, 128)).unwrap(), 1);
        assert_eq!(floor_log2_rat(&rat(129, 256)).unwrap(), -1);
        assert!(floor_log2_rat(&rat(0, 5)).is_err());
        assert!(floor_log2_rat(&rat(-3, 5)).is_err());
    }

    #[test]
    fn float_rendering_keeps_15_significant_digits() {
        assert_eq!(rat_to_f64_string(&rat(2, 3)), "6.66666666666667e-1");
        assert_eq!(rat_to_f64_string(&rat(1, 2)), "5.00000000000000e-1");
        assert_eq!(rat_to_f64_string(&rat(0, 5)), "0");
    }
}
