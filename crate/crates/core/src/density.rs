//! Exact rational density statistics for run sets.
//!
//! Everything here is computed with arbitrary-precision rationals; no floats
//! enter any comparison. Natural-density estimates sample the counting ratio
//! `|A ∩ [1, n]| / n` at caller-supplied checkpoints and report the extreme
//! ratios over a configurable tail of that checkpoint list. Banach-density
//! estimates are exact window-count extrema over a sliding window, computed
//! from run boundaries rather than by stepping the window element-wise.

use num::Zero;

use crate::error::{Error, Result};
use crate::intset::RunSet;
use crate::numeric::{rat_from_nats, Nat, Rat};

/// Counting ratio `|A ∩ [1, n]| / n`.
pub fn ratio_at(a: &RunSet, n: &Nat) -> Result<Rat> {
    if n.is_zero() {
        return Err(Error::domain("density ratio needs n >= 1"));
    }
    Ok(rat_from_nats(&a.prefix_count(n), n))
}

/// Checkpointed estimates of lower and upper natural density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DensityReport {
    /// Checkpoints actually used (the configured tail of the input list).
    pub checkpoints: Vec<Nat>,
    /// Counting ratio at each used checkpoint, same order.
    pub ratios: Vec<Rat>,
    /// Minimum tail ratio: certifies an upper bound pattern for lower density.
    pub lower_estimate: Rat,
    /// Maximum tail ratio: certifies a lower bound pattern for upper density.
    pub upper_estimate: Rat,
    /// Checkpoints attaining the extremes.
    pub argmin: Nat,
    pub argmax: Nat,
}

/// Evaluates counting ratios at the given checkpoints and keeps the extreme
/// values over the final `tail_fraction` of the (sorted, deduplicated) list.
///
/// `tail_fraction` must lie in `(0, 1]`; `1` means every checkpoint counts.
pub fn density_report(a: &RunSet, checkpoints: &[Nat], tail_fraction: &Rat) -> Result<DensityReport> {
    if checkpoints.is_empty() {
        return Err(Error::config("no density checkpoints supplied"));
    }
    if *tail_fraction <= Rat::zero() || *tail_fraction > Rat::from_integer(1.into()) {
        return Err(Error::config("tail fraction must lie in (0, 1]"));
    }
    let mut points: Vec<Nat> = checkpoints.to_vec();
    points.sort();
    points.dedup();
    if points.first().map(Nat::is_zero).unwrap_or(false) {
        return Err(Error::domain("density checkpoints must be >= 1"));
    }
    // keep the last ceil(len * tail_fraction) checkpoints
    let len = points.len() as i64;
    let scaled = tail_fraction * Rat::from_integer(len.into());
    let keep = scaled.ceil().to_integer();
    let keep: usize = keep
        .try_into()
        .map_err(|_| Error::config("tail fraction overflow"))?;
    let keep = keep.clamp(1, points.len());
    let tail = points.split_off(points.len() - keep);

    let mut ratios = Vec::with_capacity(tail.len());
    let mut min_v: Option<(Rat, Nat)> = None;
    let mut max_v: Option<(Rat, Nat)> = None;
    for n in &tail {
        let r = ratio_at(a, n)?;
        match &min_v {
            Some((m, _)) if *m <= r => {}
            _ => min_v = Some((r.clone(), n.clone())),
        }
        match &max_v {
            Some((m, _)) if *m >= r => {}
            _ => max_v = Some((r.clone(), n.clone())),
        }
        ratios.push(r);
    }
    let (lower_estimate, argmin) = min_v.ok_or_else(|| Error::invariant("empty checkpoint tail"))?;
    let (upper_estimate, argmax) = max_v.ok_or_else(|| Error::invariant("empty checkpoint tail"))?;
    Ok(DensityReport {
        checkpoints: tail,
        ratios,
        lower_estimate,
        upper_estimate,
        argmin,
        argmax,
    })
}

/// Exact sliding-window statistics for Banach density estimation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BanachReport {
    pub window: Nat,
    pub k_lo: Nat,
    pub k_hi: Nat,
    pub min_count: Nat,
    pub max_count: Nat,
    /// `min_count / window`: estimate of the lower Banach density.
    pub lower_estimate: Rat,
    /// `max_count / window`: estimate of the upper Banach density.
    pub upper_estimate: Rat,
    pub argmin_k: Nat,
    pub argmax_k: Nat,
}

/// Exact extrema of `|A ∩ [k+1, k+s]|` over `k ∈ [k_lo, k_hi]`, as counts and
/// as ratios against the window length `s`.
pub fn banach_report(a: &RunSet, s: &Nat, k_lo: &Nat, k_hi: &Nat) -> Result<BanachReport> {
    let ext = a.window_extrema(s, k_lo, k_hi)?;
    Ok(BanachReport {
        window: s.clone(),
        k_lo: k_lo.clone(),
        k_hi: k_hi.clone(),
        lower_estimate: rat_from_nats(&ext.min, s),
        upper_estimate: rat_from_nats(&ext.max, s),
        min_count: ext.min,
        max_count: ext.max,
        argmin_k: ext.argmin_k,
        argmax_k: ext.argmax_k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{nat, rat};

    fn evens_to(n: u64) -> RunSet {
        RunSet::from_elements((1..=n / 2).map(|k| nat(2 * k))).unwrap()
    }

    #[test]
    fn ratio_of_evens_is_half() {
        let evens = evens_to(1000);
        assert_eq!(ratio_at(&evens, &nat(100)).unwrap(), rat(1, 2));
        assert_eq!(ratio_at(&evens, &nat(7)).unwrap(), rat(3, 7));
        assert!(ratio_at(&evens, &nat(0)).is_err());
    }

    #[test]
    fn density_report_on_evens_is_tight() {
        let evens = evens_to(2000);
        let cps = [nat(10), nat(100), nat(1000)];
        let rep = density_report(&evens, &cps, &rat(1, 1)).unwrap();
        assert_eq!(rep.lower_estimate, rat(1, 2));
        assert_eq!(rep.upper_estimate, rat(1, 2));
        assert_eq!(rep.checkpoints.len(), 3);
    }

    #[test]
    fn tail_fraction_drops_early_checkpoints() {
        // first half of [1,100] present, nothing afterwards: early checkpoint
        // sees ratio 1, late ones see decay
        let a = RunSet::interval(nat(1), nat(51)).unwrap();
        let cps = [nat(50), nat(100), nat(1000)];
        let full = density_report(&a, &cps, &rat(1, 1)).unwrap();
        assert_eq!(full.upper_estimate, rat(1, 1));
        assert_eq!(full.lower_estimate, rat(50, 1000));
        let tail = density_report(&a, &cps, &rat(1, 2)).unwrap();
        // ceil(3 * 1/2) = 2 checkpoints kept: 100 and 1000
        assert_eq!(tail.checkpoints, vec![nat(100), nat(1000)]);
        assert_eq!(tail.upper_estimate, rat(1, 2));
        assert!(density_report(&a, &cps, &rat(0, 1)).is_err());
        assert!(density_report(&a, &cps, &rat(3, 2)).is_err());
        assert!(density_report(&a, &[], &rat(1, 1)).is_err());
    }

    #[test]
    fn banach_window_sees_the_long_run() {
        // evens up to 200, then a solid block [201, 301)
        let a = evens_to(200).union(&RunSet::interval(nat(201), nat(301)).unwrap());
        let rep = banach_report(&a, &nat(50), &nat(0), &nat(400)).unwrap();
        assert_eq!(rep.max_count, nat(50));
        assert_eq!(rep.upper_estimate, rat(1, 1));
        // windows past the block are empty
        assert_eq!(rep.min_count, nat(0));
        assert_eq!(rep.lower_estimate, rat(0, 1));
    }

    #[test]
    fn banach_on_evens_is_half_everywhere() {
        let evens = evens_to(2000);
        let rep = banach_report(&evens, &nat(10), &nat(0), &nat(1500)).unwrap();
        assert_eq!(rep.min_count, nat(5));
        assert_eq!(rep.max_count, nat(5));
        assert_eq!(rep.lower_estimate, rat(1, 2));
    }
}
