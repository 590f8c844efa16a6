//! Command implementations.  Every function returns `Outcome::Clean` when
//! the artifact was produced and every asserted invariant held, and
//! `Outcome::InvariantViolated` when the artifact documents a violation;
//! operational problems surface as errors.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context};
use num::ToPrimitive;
use serde::Serialize;

use famdyn::dynamics::{
    criterion_check, default_bounds_grid, return_set_bounds, Dyadic, DyadicVector,
    ReturnSetBounds,
};
use famdyn::families::{membership_verdict, verify_verdict, FamilyName, FamilyParams, Verdict};
use famdyn::finite_algebra::verify_lemma23;
use famdyn::numeric::{int, nat, rat_from_nats, rat_to_f64_string, Nat};
use famdyn::shifts::{
    classify_shift, compile_exponent_profile, generate_weight, hierarchy_report, ClassifyConfig,
    WeightSpec,
};

use crate::{
    artifact, AlgebraCommand, ClassifyArgs, Command, CriterionArgs, DensityArgs, FamiliesArgs,
    GenerateArgs, HierarchyArgs, ReportCommand, SandwichArgs, SimulateCommand, VerifyLemmaArgs,
};

pub enum Outcome {
    Clean,
    InvariantViolated,
}

pub fn dispatch(command: Command) -> anyhow::Result<Outcome> {
    match command {
        Command::Generate(args) => generate(args),
        Command::Classify(args) => classify(args),
        Command::Density(args) => density(args),
        Command::Families(args) => families(args),
        Command::Algebra(AlgebraCommand::VerifyLemma23(args)) => verify_lemma(args),
        Command::Simulate(SimulateCommand::Sandwich(args)) => sandwich(args),
        Command::Simulate(SimulateCommand::Criterion(args)) => criterion(args),
        Command::Report(ReportCommand::Hierarchy(args)) => hierarchy(args),
    }
}

const DEFAULT_HORIZON_CAP: u64 = 100_000_000;

/// Largest horizon any subcommand accepts; `FAMDYN_MAX_HORIZON` overrides
/// the built-in cap in either direction.
fn horizon_cap() -> anyhow::Result<u64> {
    match std::env::var("FAMDYN_MAX_HORIZON") {
        Ok(raw) => raw
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|cap| *cap > 0)
            .ok_or_else(|| anyhow!("FAMDYN_MAX_HORIZON must be a positive integer, found `{raw}`")),
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_HORIZON_CAP),
        Err(err) => Err(anyhow!("FAMDYN_MAX_HORIZON is unreadable: {err}")),
    }
}

fn checked_horizon(h: u64) -> anyhow::Result<Nat> {
    if h == 0 {
        bail!("the horizon must be positive");
    }
    let cap = horizon_cap()?;
    if h > cap {
        bail!("horizon {h} exceeds the cap {cap}; raise FAMDYN_MAX_HORIZON to allow it");
    }
    Ok(nat(h))
}

fn nat_to_u64(value: &Nat) -> anyhow::Result<u64> {
    value
        .to_u64()
        .ok_or_else(|| anyhow!("{value} does not fit the supported integer range"))
}

fn build_params(pairs: &[String], coverage: u64) -> anyhow::Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    map.insert("horizon".to_string(), coverage.to_string());
    for pair in pairs {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("parameter `{pair}` is not of the form key=value"))?;
        if key.trim() == "horizon" {
            bail!("pass the horizon through --horizon, not --param");
        }
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn spec_for(construction: &str, pairs: &[String], coverage: u64) -> anyhow::Result<WeightSpec> {
    let params = build_params(pairs, coverage)?;
    generate_weight(construction, &params)
        .with_context(|| format!("generating construction `{construction}`"))
}

fn parse_list(raw: &str, flag: &str) -> anyhow::Result<Vec<i64>> {
    let mut values = Vec::new();
    for part in raw.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        values.push(
            part.parse::<i64>()
                .map_err(|_| anyhow!("{flag} entry `{part}` is not an integer"))?,
        );
    }
    if values.is_empty() {
        bail!("{flag} must list at least one integer");
    }
    Ok(values)
}

fn parse_grid(raw: &Option<String>, flag: &str) -> anyhow::Result<Option<Vec<i64>>> {
    raw.as_deref().map(|r| parse_list(r, flag)).transpose()
}

fn classify_config(
    t_grid: &Option<String>,
    j_grid: &Option<String>,
) -> anyhow::Result<ClassifyConfig> {
    let mut config = ClassifyConfig::default();
    if let Some(ts) = parse_grid(t_grid, "--t-grid")? {
        config.t_grid = ts;
    }
    config.j_grid = parse_grid(j_grid, "--j-grid")?;
    Ok(config)
}

fn grid_margin(config: &ClassifyConfig) -> u64 {
    config
        .j_grid
        .as_ref()
        .map(|js| js.iter().map(|j| j.unsigned_abs()).max().unwrap_or(0))
        .unwrap_or(2)
}

fn generate(args: GenerateArgs) -> anyhow::Result<Outcome> {
    checked_horizon(args.horizon)?;
    let spec = spec_for(&args.construction, &args.params, args.horizon)?;
    artifact::write_json(&args.output, &spec)?;
    Ok(Outcome::Clean)
}

fn classify(args: ClassifyArgs) -> anyhow::Result<Outcome> {
    let horizon = checked_horizon(args.horizon)?;
    let config = classify_config(&args.t_grid, &args.j_grid)?;
    let coverage = args
        .horizon
        .checked_add(grid_margin(&config))
        .ok_or_else(|| anyhow!("horizon overflow"))?;
    let spec = spec_for(&args.construction, &args.params, coverage)?;
    let report = classify_shift(&spec, &horizon, &config)?;
    artifact::write_json(&args.output, &report)?;
    Ok(Outcome::Clean)
}

/// Published checkpoints of the construction, regenerating at growing
/// coverage until at least `blocks` of them exist (or the cap rules that
/// out).
fn checkpoints_for_blocks(
    construction: &str,
    pairs: &[String],
    blocks: usize,
) -> anyhow::Result<Vec<Nat>> {
    if blocks == 0 {
        bail!("--blocks must be positive");
    }
    let cap = horizon_cap()?;
    let mut coverage = 1024u64.min(cap);
    loop {
        let spec = spec_for(construction, pairs, coverage)?;
        if spec.checkpoints.len() >= blocks {
            return Ok(spec.checkpoints.into_iter().take(blocks).collect());
        }
        if coverage >= cap {
            bail!(
                "construction `{construction}` publishes only {} checkpoints within the \
                 horizon cap {cap}, but --blocks asks for {blocks}",
                spec.checkpoints.len()
            );
        }
        coverage = coverage.saturating_mul(2).min(cap);
    }
}

fn density(args: DensityArgs) -> anyhow::Result<Outcome> {
    let level = args
        .t
        .checked_add(1)
        .ok_or_else(|| anyhow!("threshold exponent overflow"))?;
    let (checkpoints, h) = match args.blocks {
        Some(blocks) => {
            let cps = checkpoints_for_blocks(&args.construction, &args.params, blocks)?;
            let last = nat_to_u64(cps.last().expect("at least one checkpoint"))?;
            checked_horizon(last)?;
            (cps, last)
        }
        None => {
            let h = args.horizon.unwrap_or(1_000_000);
            let horizon = checked_horizon(h)?;
            (FamilyParams::for_horizon(&horizon).checkpoints, h)
        }
    };
    let coverage = h
        .checked_add(args.j.unsigned_abs())
        .ok_or_else(|| anyhow!("horizon overflow"))?;
    let spec = spec_for(&args.construction, &args.params, coverage)?;
    let profile = compile_exponent_profile(&spec, &nat(coverage))?;

    let cps: Vec<u64> = checkpoints
        .iter()
        .map(nat_to_u64)
        .collect::<anyhow::Result<_>>()?;
    let counts: Vec<u64> = if args.j == 0 {
        // pure segment arithmetic: no element enumeration
        profile.count_at_checkpoints(level, &cps)
    } else {
        let set = profile.level_runs_forward(args.j, level, h)?;
        cps.iter()
            .map(|c| nat_to_u64(&set.prefix_count(&nat(*c))))
            .collect::<anyhow::Result<_>>()?
    };

    let mut rows = Vec::with_capacity(counts.len());
    for (cp, count) in cps.iter().zip(&counts) {
        let ratio = rat_from_nats(&nat(*count), &nat(*cp));
        rows.push(format!(
            "{cp},{count},{},{},{}",
            ratio.numer(),
            ratio.denom(),
            rat_to_f64_string(&ratio)
        ));
    }
    artifact::write_csv(&args.output, "n,count,ratio_num,ratio_den,ratio_float", &rows)?;
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct FamilySweep {
    construction: String,
    threshold_exp: i64,
    offset: i64,
    horizon: String,
    verdicts: Vec<Verdict>,
}

fn families(args: FamiliesArgs) -> anyhow::Result<Outcome> {
    let horizon = checked_horizon(args.horizon)?;
    let level = args
        .t
        .checked_add(1)
        .ok_or_else(|| anyhow!("threshold exponent overflow"))?;
    let coverage = args
        .horizon
        .checked_add(args.j.unsigned_abs())
        .ok_or_else(|| anyhow!("horizon overflow"))?;
    let spec = spec_for(&args.construction, &args.params, coverage)?;
    let profile = compile_exponent_profile(&spec, &nat(coverage))?;
    let set = profile.level_runs_forward(args.j, level, args.horizon)?;

    let selected: Vec<FamilyName> = if args.family == "all" {
        FamilyName::ALL.to_vec()
    } else {
        vec![args.family.parse().map_err(|_| {
            anyhow!(
                "unknown family `{}` (known: all, {})",
                args.family,
                FamilyName::ALL.map(|f| f.as_str()).join(", ")
            )
        })?]
    };

    let params = FamilyParams::for_horizon(&horizon);
    let mut verdicts = Vec::with_capacity(selected.len());
    let mut violated = false;
    for family in selected {
        let verdict = membership_verdict(&set, family, &horizon, &params)?;
        if !verify_verdict(&verdict, &set) {
            eprintln!(
                "invariant violated: the {} verdict fails its own witness check",
                verdict.family
            );
            violated = true;
        }
        verdicts.push(verdict);
    }
    let sweep = FamilySweep {
        construction: args.construction,
        threshold_exp: args.t,
        offset: args.j,
        horizon: horizon.to_string(),
        verdicts,
    };
    artifact::write_json(&args.output, &sweep)?;
    Ok(if violated {
        Outcome::InvariantViolated
    } else {
        Outcome::Clean
    })
}

fn verify_lemma(args: VerifyLemmaArgs) -> anyhow::Result<Outcome> {
    let report = verify_lemma23(args.n)?;
    artifact::write_json(&args.output, &report)?;
    if report.passed() {
        Ok(Outcome::Clean)
    } else {
        eprintln!(
            "invariant violated: universe {} has a family breaking a duality identity",
            args.n
        );
        Ok(Outcome::InvariantViolated)
    }
}

#[derive(Serialize)]
struct SandwichSweep {
    construction: String,
    horizon: String,
    reports: Vec<ReturnSetBounds>,
}

fn sandwich(args: SandwichArgs) -> anyhow::Result<Outcome> {
    let horizon = checked_horizon(args.horizon)?;
    let margin = args.index.map(|i| i.unsigned_abs()).unwrap_or(2);
    let coverage = args
        .horizon
        .checked_add(margin)
        .ok_or_else(|| anyhow!("horizon overflow"))?;
    let spec = spec_for(&args.construction, &args.params, coverage)?;

    let grid: Vec<(i64, u64, u64)> = match (args.index, args.level, args.aperture) {
        (Some(index), Some(level), Some(aperture)) => vec![(index, level, aperture)],
        _ => {
            let (offsets, pairs) = default_bounds_grid(spec.kind);
            offsets
                .into_iter()
                .flat_map(|index| pairs.iter().map(move |&(l, r)| (index, l, r)))
                .collect()
        }
    };

    let mut reports = Vec::with_capacity(grid.len());
    let mut violated = false;
    for (index, level, aperture) in grid {
        let bounds = return_set_bounds(&spec, index, level, aperture, &horizon)?;
        if !bounds.lower.subset_of(&bounds.upper) {
            eprintln!(
                "invariant violated: lower bound escapes the upper bound at \
                 index={index} level={level} aperture={aperture}"
            );
            violated = true;
        }
        if !bounds.recheck_failures.is_empty() {
            eprintln!(
                "invariant violated: lower members fail exact re-simulation at \
                 index={index} level={level} aperture={aperture}"
            );
            violated = true;
        }
        reports.push(bounds);
    }
    let sweep = SandwichSweep {
        construction: args.construction,
        horizon: horizon.to_string(),
        reports,
    };
    artifact::write_json(&args.output, &sweep)?;
    Ok(if violated {
        Outcome::InvariantViolated
    } else {
        Outcome::Clean
    })
}

fn criterion(args: CriterionArgs) -> anyhow::Result<Outcome> {
    let horizon = checked_horizon(args.horizon)?;
    let support = parse_list(&args.support, "--support")?;
    let t_grid = parse_grid(&args.t_grid, "--t-grid")?.unwrap_or_else(|| vec![0, 1, 2, 3]);
    let j_grid = parse_grid(&args.j_grid, "--j-grid")?.unwrap_or_default();
    let radius = support
        .iter()
        .chain(j_grid.iter())
        .map(|v| v.unsigned_abs())
        .max()
        .unwrap_or(0);
    let coverage = args
        .horizon
        .checked_add(radius)
        .ok_or_else(|| anyhow!("horizon overflow"))?;
    let spec = spec_for(&args.construction, &args.params, coverage)?;

    let vector =
        DyadicVector::from_entries(support.iter().map(|&i| (i, Dyadic::new(int(1), 0))));
    let epsilon = Dyadic::new(int(1), -(args.epsilon_exp as i64));
    let report = criterion_check(&spec, &vector, &epsilon, &horizon, &t_grid, &j_grid)?;

    let mut violated = false;
    if !report.backward_violations.is_empty() || !report.forward_violations.is_empty() {
        eprintln!("invariant violated: a level-set core member escapes the epsilon ball");
        violated = true;
    }
    for row in &report.rows {
        if row.asserted && !(row.backward_holds && row.forward_holds) {
            eprintln!(
                "invariant violated: the asserted containment fails at threshold 2^{}",
                row.threshold_exp
            );
            violated = true;
        }
    }
    artifact::write_json(&args.output, &report)?;
    Ok(if violated {
        Outcome::InvariantViolated
    } else {
        Outcome::Clean
    })
}

fn hierarchy(args: HierarchyArgs) -> anyhow::Result<Outcome> {
    let horizon = checked_horizon(args.horizon)?;
    let config = classify_config(&args.t_grid, &args.j_grid)?;
    let report = hierarchy_report(&horizon, &config)?;
    artifact::write_json(&args.output, &report)?;
    if report.mismatch_count == 0 {
        Ok(Outcome::Clean)
    } else {
        for row in &report.rows {
            for mismatch in &row.mismatches {
                eprintln!("claim mismatch: {mismatch}");
            }
        }
        Ok(Outcome::InvariantViolated)
    }
}
