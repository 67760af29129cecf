//! The benchmark plan file: a small `key=value` grid, one key per line,
//! comma-separated lists, `#` comments.
//!
//! ```text
//! algos=mp,seq            # required
//! sizes=10000,100000      # required
//! workers=1,2,4           # default 1
//! ranks=1,2               # default 1 (mpi only; powers of two)
//! seeds=42                # default 42
//! reps=3                  # default 3
//! subsorts=sorted,mp      # default sorted (mpi only)
//! cutoff=32               # default 32 (cutoff algorithm only)
//! user=alex               # default $USER
//! node=carbonate          # default "local"
//! ```
//!
//! Each algorithm (and, for mpi, each subsort) expands into one
//! [`RunPlan`]. Sizes in mpi plans are rounded up to a multiple of the
//! largest rank count so that every (size, ranks) cell divides evenly;
//! the adjustment is reported before the run.

use std::collections::HashMap;
use std::time::Duration;

use sortbench::bench::{RunPlan, SortId, SubsortId};
use sortbench::sort::CutoffThreshold;
use sortbench::transport::Backend;

fn parse_list<T: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|e| format!("{key}: bad value `{s}`: {e}"))
        })
        .collect()
}

/// Plans expanded from one plan file, plus human-readable notes about
/// any mpi sizes that were rounded up.
pub struct ParsedPlans {
    pub plans: Vec<RunPlan>,
    pub notes: Vec<String>,
}

pub fn parse_plan(
    text: &str,
    backend: Backend,
    timeout: Duration,
    port: Option<u16>,
) -> Result<ParsedPlans, String> {
    let mut keys: HashMap<&str, &str> = HashMap::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value", number + 1))?;
        keys.insert(key.trim(), value.trim());
    }

    let algos_raw = keys.remove("algos").ok_or("missing required key `algos`")?;
    let algos: Vec<SortId> = parse_list("algos", algos_raw)?;
    let sizes_raw = keys.remove("sizes").ok_or("missing required key `sizes`")?;
    let sizes: Vec<usize> = parse_list("sizes", sizes_raw)?;
    let workers: Vec<usize> = match keys.remove("workers") {
        Some(raw) => parse_list("workers", raw)?,
        None => vec![1],
    };
    let ranks: Vec<usize> = match keys.remove("ranks") {
        Some(raw) => parse_list("ranks", raw)?,
        None => vec![1],
    };
    let seeds: Vec<u64> = match keys.remove("seeds") {
        Some(raw) => parse_list("seeds", raw)?,
        None => vec![42],
    };
    let repetitions: usize = match keys.remove("reps") {
        Some(raw) => raw.parse().map_err(|e| format!("reps: {e}"))?,
        None => 3,
    };
    let subsorts: Vec<SubsortId> = match keys.remove("subsorts") {
        Some(raw) => parse_list("subsorts", raw)?,
        None => vec![SubsortId::Sorted],
    };
    let cutoff = match keys.remove("cutoff") {
        Some(raw) => {
            let value: usize = raw.parse().map_err(|e| format!("cutoff: {e}"))?;
            CutoffThreshold::new(value).ok_or("cutoff must be at least 1")?
        }
        None => CutoffThreshold::default(),
    };
    let user = keys
        .remove("user")
        .map(str::to_string)
        .or_else(|| std::env::var("USER").ok())
        .unwrap_or_else(|| "user".into());
    let node = keys.remove("node").unwrap_or("local").to_string();

    if let Some(unknown) = keys.keys().next() {
        return Err(format!("unknown key `{unknown}`"));
    }
    if algos.is_empty() {
        return Err("algos must not be empty".into());
    }
    if sizes.is_empty() {
        return Err("sizes must not be empty".into());
    }
    if subsorts.contains(&SubsortId::None) {
        return Err("subsorts: use `sorted` or `mp`".into());
    }

    let mut plans = Vec::new();
    let mut notes = Vec::new();
    for &algo in &algos {
        let expanded_subsorts: &[SubsortId] = if algo == SortId::Mpi {
            &subsorts
        } else {
            &[SubsortId::None]
        };
        for &subsort in expanded_subsorts {
            let mut plan = RunPlan::new(algo, sizes.clone());
            plan.subsort = subsort;
            plan.workers = workers.clone();
            plan.ranks = ranks.clone();
            plan.seeds = seeds.clone();
            plan.repetitions = repetitions;
            plan.cutoff = cutoff;
            plan.backend = backend;
            plan.timeout = timeout;
            plan.port = port;
            plan.user = user.clone();
            plan.node = node.clone();
            if algo == SortId::Mpi {
                let max_ranks = plan.ranks.iter().copied().max().unwrap_or(1);
                plan.sizes = plan
                    .sizes
                    .iter()
                    .map(|&size| {
                        let adjusted = crate::round_up_to_multiple(size, max_ranks);
                        if adjusted != size {
                            notes.push(format!(
                                "mpi size {size} rounded up to {adjusted} (multiple of {max_ranks} ranks)"
                            ));
                        }
                        adjusted
                    })
                    .collect();
            }
            plan.validate().map_err(|e| e.to_string())?;
            plans.push(plan);
        }
    }
    notes.dedup();
    Ok(ParsedPlans { plans, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<RunPlan>, String> {
        parse_plan(text, Backend::InProcess, Duration::from_secs(30), None).map(|parsed| parsed.plans)
    }

    #[test]
    fn minimal_plan_uses_defaults() {
        let plans = parse("algos=mp\nsizes=1000\n").unwrap();
        assert_eq!(plans.len(), 1);
        let plan = &plans[0];
        assert_eq!(plan.algo, SortId::Mp);
        assert_eq!(plan.sizes, vec![1000]);
        assert_eq!(plan.workers, vec![1]);
        assert_eq!(plan.seeds, vec![42]);
        assert_eq!(plan.repetitions, 3);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let plans = parse("# a comment\n\nalgos=seq # trailing\nsizes=10\n").unwrap();
        assert_eq!(plans[0].algo, SortId::Seq);
    }

    #[test]
    fn mpi_expands_per_subsort_and_rounds_sizes() {
        let text = "algos=mpi\nsizes=10\nranks=1,2,4\nsubsorts=sorted,mp\nworkers=2\n";
        let parsed = parse_plan(text, Backend::InProcess, Duration::from_secs(30), None).unwrap();
        assert_eq!(parsed.plans.len(), 2);
        for plan in &parsed.plans {
            // 10 rounded up to a multiple of 4.
            assert_eq!(plan.sizes, vec![12]);
        }
        assert_eq!(parsed.plans[0].subsort, SubsortId::Sorted);
        assert_eq!(parsed.plans[1].subsort, SubsortId::Mp);
        assert!(parsed.notes.iter().any(|n| n.contains("rounded up to 12")));
    }

    #[test]
    fn malformed_plans_are_rejected() {
        assert!(parse("sizes=10\n").is_err());
        assert!(parse("algos=seq\n").is_err());
        assert!(parse("algos=seq\nsizes=10\nnope\n").is_err());
        assert!(parse("algos=warp\nsizes=10\n").is_err());
        assert!(parse("algos=seq\nsizes=10\nmystery=1\n").is_err());
        assert!(parse("algos=mpi\nsizes=8\nranks=3\n").is_err());
        assert!(parse("algos=seq\nsizes=10\nreps=0\n").is_err());
    }

    #[test]
    fn multiple_algos_expand_to_multiple_plans() {
        let plans = parse("algos=seq,sorted,mp\nsizes=100\nworkers=1,2\n").unwrap();
        assert_eq!(plans.len(), 3);
        assert!(plans.iter().all(|p| p.subsort != SubsortId::Mp));
    }
}
