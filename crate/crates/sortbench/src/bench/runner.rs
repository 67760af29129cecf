//! Executes benchmark cells and whole run plans.
//!
//! A cell is one (algorithm, size, workers, ranks, seed) combination.
//! `run_cell` generates the input deterministically, times exactly one
//! sort with the stopwatch, and refuses to report a time unless the
//! output matches the native sort of the same input. `run_plan` sweeps a
//! grid of cells, keeps the minimum time across repetitions, and fills
//! in self-relative speedup/efficiency for the worker-pool sort.

use std::time::Duration;

use crate::bench::{
    efficiency, speedup, BenchError, BenchRecord, SortId, StopWatch, SubsortId,
};
use crate::distributed::{mp_mergesort, SubsortKind};
use crate::pool::pool_mergesort;
use crate::sort::{
    baseline_sort, generate_array, mergesort_classic, mergesort_cutoff, CutoffThreshold,
};
use crate::transport::{Backend, WorldConfig};
use crate::Element;

/// One benchmark cell, fully specifying a single timed sort.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub algo: SortId,
    pub subsort: SubsortId,
    pub size: usize,
    pub workers: usize,
    pub ranks: usize,
    pub seed: u64,
    pub cutoff: CutoffThreshold,
    pub backend: Backend,
    pub timeout: Duration,
    /// Rendezvous port for socket-backend worlds; `None` is ephemeral.
    pub port: Option<u16>,
}

impl CellSpec {
    pub fn new(algo: SortId, size: usize, seed: u64) -> Self {
        CellSpec {
            algo,
            subsort: SubsortId::None,
            size,
            workers: 1,
            ranks: 1,
            seed,
            cutoff: CutoffThreshold::default(),
            backend: Backend::InProcess,
            timeout: Duration::from_secs(30),
            port: None,
        }
    }

    /// Short cell description used in diagnostics:
    /// `algo=mpi subsort=mp size=10000 workers=2 ranks=4 seed=42`.
    pub fn describe(&self) -> String {
        format!(
            "algo={} subsort={} size={} workers={} ranks={} seed={}",
            self.algo, self.subsort, self.size, self.workers, self.ranks, self.seed
        )
    }

    fn effective_subsort(&self) -> SubsortKind {
        match self.subsort {
            SubsortId::Mp => SubsortKind::Pool {
                workers: self.workers,
            },
            SubsortId::Sorted | SubsortId::None => SubsortKind::Baseline,
        }
    }
}

fn check_output(cell: &CellSpec, input: &[Element], output: &[Element]) -> Result<(), BenchError> {
    if output != baseline_sort(input) {
        return Err(BenchError::VerificationFailed {
            cell: cell.describe(),
        });
    }
    Ok(())
}

/// Runs one cell once: generate, sort, verify, return the measured
/// seconds of the sort alone.
pub fn run_cell(spec: &CellSpec) -> Result<f64, BenchError> {
    let cell = spec.describe();
    let input = generate_array(spec.size, spec.seed);
    let mut watch = StopWatch::new();

    let output = match spec.algo {
        SortId::Seq => {
            watch.start(&cell)?;
            let out = mergesort_classic(&input);
            watch.stop(&cell)?;
            out
        }
        SortId::Cutoff => {
            watch.start(&cell)?;
            let out = mergesort_cutoff(&input, spec.cutoff);
            watch.stop(&cell)?;
            out
        }
        SortId::Sorted => {
            watch.start(&cell)?;
            let out = baseline_sort(&input);
            watch.stop(&cell)?;
            out
        }
        SortId::Mp => {
            watch.start(&cell)?;
            let out = pool_mergesort(&input, spec.workers).map_err(|e| BenchError::CellFailed {
                cell: cell.clone(),
                message: e.to_string(),
            })?;
            watch.stop(&cell)?;
            out
        }
        SortId::Mpi => {
            let mut config = WorldConfig::new(spec.ranks, spec.backend).with_timeout(spec.timeout);
            if let Some(port) = spec.port {
                config = config.with_port(port);
            }
            watch.start(&cell)?;
            let out = mp_mergesort(&config, spec.size, spec.seed, spec.effective_subsort())
                .map_err(|e| BenchError::CellFailed {
                    cell: cell.clone(),
                    message: e.to_string(),
                })?;
            watch.stop(&cell)?;
            out
        }
    };

    check_output(spec, &input, &output)?;
    watch.elapsed(&cell)
}

/// A sweep over one algorithm: the sizes, worker counts, rank counts and
/// seeds to combine, with `repetitions` timed runs per cell (minimum
/// reported).
#[derive(Debug, Clone)]
pub struct RunPlan {
    pub algo: SortId,
    pub subsort: SubsortId,
    pub sizes: Vec<usize>,
    pub workers: Vec<usize>,
    pub ranks: Vec<usize>,
    pub seeds: Vec<u64>,
    pub repetitions: usize,
    pub cutoff: CutoffThreshold,
    pub backend: Backend,
    pub timeout: Duration,
    pub port: Option<u16>,
    pub user: String,
    pub node: String,
}

impl RunPlan {
    pub fn new(algo: SortId, sizes: Vec<usize>) -> Self {
        RunPlan {
            algo,
            subsort: if algo == SortId::Mpi {
                SubsortId::Sorted
            } else {
                SubsortId::None
            },
            sizes,
            workers: vec![1],
            ranks: vec![1],
            seeds: vec![42],
            repetitions: 3,
            cutoff: CutoffThreshold::default(),
            backend: Backend::InProcess,
            timeout: Duration::from_secs(30),
            port: None,
            user: "user".into(),
            node: "local".into(),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |message: String| Err(BenchError::InvalidPlan { message });
        if self.repetitions == 0 {
            return fail("repetitions must be at least 1".into());
        }
        if self.sizes.is_empty() {
            return fail("sizes must not be empty".into());
        }
        if self.seeds.is_empty() {
            return fail("seeds must not be empty".into());
        }
        if self.workers.is_empty() || self.workers.contains(&0) {
            return fail("workers must be non-empty and positive".into());
        }
        if self.ranks.is_empty() || self.ranks.contains(&0) {
            return fail("ranks must be non-empty and positive".into());
        }
        if self.algo == SortId::Mpi {
            if let Some(bad) = self.ranks.iter().find(|r| !r.is_power_of_two()) {
                return fail(format!("mpi rank count {bad} is not a power of two"));
            }
            for size in &self.sizes {
                if let Some(ranks) = self.ranks.iter().find(|r| size % **r != 0) {
                    return fail(format!("size {size} is not divisible by {ranks} ranks"));
                }
            }
        }
        Ok(())
    }

    /// Expands the grid into concrete cells. Dimensions irrelevant to
    /// the algorithm collapse: only `mp` sweeps workers, only `mpi`
    /// sweeps ranks (plus workers when its subsort is the pool sort).
    fn cells(&self) -> Vec<CellSpec> {
        let one = vec![1usize];
        let (workers, ranks): (&[usize], &[usize]) = match (self.algo, self.subsort) {
            (SortId::Mp, _) => (&self.workers, &one),
            (SortId::Mpi, SubsortId::Mp) => (&self.workers, &self.ranks),
            (SortId::Mpi, _) => (&one, &self.ranks),
            _ => (&one, &one),
        };
        let mut cells = Vec::new();
        for &size in &self.sizes {
            for &rank_count in ranks {
                for &worker_count in workers {
                    for &seed in &self.seeds {
                        cells.push(CellSpec {
                            algo: self.algo,
                            subsort: if self.algo == SortId::Mpi {
                                self.subsort
                            } else {
                                SubsortId::None
                            },
                            size,
                            workers: worker_count,
                            ranks: rank_count,
                            seed,
                            cutoff: self.cutoff,
                            backend: self.backend,
                            timeout: self.timeout,
                            port: self.port,
                        });
                    }
                }
            }
        }
        cells
    }
}

pub(crate) trait CellRunner {
    fn run_once(&self, spec: &CellSpec) -> Result<f64, BenchError>;
}

struct RealRunner;

impl CellRunner for RealRunner {
    fn run_once(&self, spec: &CellSpec) -> Result<f64, BenchError> {
        run_cell(spec)
    }
}

/// Executes every cell of the plan, `repetitions` times each, recording
/// the minimum time. Any verification failure aborts the whole plan.
///
/// Speedup and efficiency are filled in for the worker-pool sort
/// relative to its own 1-worker cell at the same size and seed, when
/// the plan includes one; other algorithms carry empty ratio fields.
pub fn run_plan(plan: &RunPlan) -> Result<Vec<BenchRecord>, BenchError> {
    execute_plan(plan, &RealRunner)
}

pub(crate) fn execute_plan(
    plan: &RunPlan,
    runner: &dyn CellRunner,
) -> Result<Vec<BenchRecord>, BenchError> {
    plan.validate()?;
    let mut measured = Vec::new();
    for cell in plan.cells() {
        let mut best = f64::INFINITY;
        for _ in 0..plan.repetitions {
            best = best.min(runner.run_once(&cell)?);
        }
        measured.push((cell, best));
    }

    let mut records = Vec::with_capacity(measured.len());
    for (cell, time) in &measured {
        let mut record = BenchRecord {
            p: cell.ranks,
            c: cell.workers,
            size: cell.size,
            sort: cell.algo,
            subsort: cell.subsort,
            time: *time,
            speedup: None,
            efficiency: None,
            user: plan.user.clone(),
            node: plan.node.clone(),
        };
        if cell.algo == SortId::Mp {
            let reference = measured.iter().find(|(other, _)| {
                other.workers == 1 && other.size == cell.size && other.seed == cell.seed
            });
            if let Some((_, reference_time)) = reference {
                // Zero times happen only for degenerate inputs that sort
                // faster than the clock tick; leave the ratios absent.
                if *reference_time > 0.0 && *time > 0.0 {
                    let s = speedup(*reference_time, *time)?;
                    record.speedup = Some(s);
                    record.efficiency = Some(efficiency(s, cell.workers)?);
                }
            }
        }
        records.push(record);
    }
    Ok(records)
}
