//! End-to-end command tests, mostly through the library entry points
//! (which the binary merely dispatches to), plus one smoke test of the
//! compiled binary itself.

use std::fs;
use std::process::Command;

use sortbench_cli::{
    cmd_bench, cmd_report, cmd_run, cmd_verify, BenchArgs, ReportArgs, RunArgs, VerifyArgs,
    WorldArgs, EXIT_FAILURE, EXIT_OK, EXIT_USAGE,
};

fn world_args() -> WorldArgs {
    WorldArgs {
        backend: "in-process".into(),
        timeout: 20,
        port: None,
    }
}

fn run_args(algo: &str, size: usize) -> RunArgs {
    RunArgs {
        algo: algo.into(),
        size,
        seed: 42,
        workers: 1,
        ranks: 1,
        subsort: "sorted".into(),
        cutoff: 32,
        world: world_args(),
    }
}

#[test]
fn run_seq_verifies_and_exits_zero() {
    assert_eq!(cmd_run(&run_args("seq", 1000)), EXIT_OK);
}

#[test]
fn run_rejects_unknown_algorithm_and_backend() {
    assert_eq!(cmd_run(&run_args("warp", 10)), EXIT_USAGE);
    let mut args = run_args("seq", 10);
    args.world.backend = "pigeon".into();
    assert_eq!(cmd_run(&args), EXIT_USAGE);
    let mut args = run_args("mp", 10);
    args.workers = 0;
    assert_eq!(cmd_run(&args), EXIT_USAGE);
}

#[test]
fn run_mpi_requires_power_of_two_ranks() {
    let mut args = run_args("mpi", 1000);
    args.ranks = 3;
    assert_eq!(cmd_run(&args), EXIT_USAGE);
}

#[test]
fn run_hybrid_mpi_verifies_against_oracle() {
    let mut args = run_args("mpi", 10_000);
    args.ranks = 4;
    args.workers = 2;
    args.subsort = "mp".into();
    assert_eq!(cmd_run(&args), EXIT_OK);
}

#[test]
fn run_mpi_rounds_size_up_to_rank_multiple() {
    let mut args = run_args("mpi", 10);
    args.ranks = 4;
    assert_eq!(cmd_run(&args), EXIT_OK);
}

#[test]
fn bench_writes_csv_and_report_derives_series() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.txt");
    fs::write(
        &plan_path,
        "algos=mp,seq\nsizes=2000,4000\nworkers=1,2\nseeds=42\nreps=2\nnode=testnode\n",
    )
    .unwrap();
    let csv_path = dir.path().join("out.csv");
    let bench = BenchArgs {
        plan: plan_path,
        output: csv_path.clone(),
        world: world_args(),
    };
    assert_eq!(cmd_bench(&bench), EXIT_OK);

    let records = sortbench::bench::parse_csv(fs::File::open(&csv_path).unwrap()).unwrap();
    // mp sweeps 2 sizes x 2 worker counts, seq adds 2 sizes.
    assert_eq!(records.len(), 6);
    assert!(records.iter().all(|r| r.node == "testnode"));
    assert!(records
        .iter()
        .filter(|r| r.sort == sortbench::bench::SortId::Mp && r.c == 1)
        .all(|r| r.speedup == Some(1.0)));

    let report_dir = dir.path().join("report");
    let report = ReportArgs {
        input: csv_path,
        out_dir: report_dir.clone(),
    };
    assert_eq!(cmd_report(&report), EXIT_OK);
    let mut names: Vec<String> = fs::read_dir(&report_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        vec![
            "speedup_by_size_workers_1.dat",
            "speedup_by_size_workers_2.dat",
            "time_by_workers_size_2000.dat",
            "time_by_workers_size_4000.dat",
        ]
    );
}

#[test]
fn bench_rejects_malformed_plan_without_writing_csv() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.txt");
    fs::write(&plan_path, "sizes=100\n").unwrap(); // missing algos
    let csv_path = dir.path().join("never.csv");
    let bench = BenchArgs {
        plan: plan_path,
        output: csv_path.clone(),
        world: world_args(),
    };
    assert_eq!(cmd_bench(&bench), EXIT_USAGE);
    assert!(!csv_path.exists());
}

#[test]
fn bench_mirrors_published_grid_shape() {
    let dir = tempfile::tempdir().unwrap();
    let plan_path = dir.path().join("plan.txt");
    // The two-level structure: p x subsort for the distributed sort.
    fs::write(
        &plan_path,
        "algos=mpi\nsizes=4000\nranks=1,2,4\nsubsorts=sorted,mp\nworkers=2\nreps=1\n",
    )
    .unwrap();
    let csv_path = dir.path().join("out.csv");
    let bench = BenchArgs {
        plan: plan_path,
        output: csv_path.clone(),
        world: world_args(),
    };
    assert_eq!(cmd_bench(&bench), EXIT_OK);
    let records = sortbench::bench::parse_csv(fs::File::open(&csv_path).unwrap()).unwrap();
    assert_eq!(records.len(), 6);
    let shapes: Vec<(usize, usize, &str)> = records
        .iter()
        .map(|r| (r.p, r.c, r.subsort.as_str()))
        .collect();
    assert_eq!(
        shapes,
        vec![
            (1, 1, "sorted"),
            (2, 1, "sorted"),
            (4, 1, "sorted"),
            (1, 2, "mp"),
            (2, 2, "mp"),
            (4, 2, "mp"),
        ]
    );
}

#[test]
fn report_turns_published_table_into_a_seven_point_series() {
    // The published one-node table: seven worker-pool rows plus the
    // sequential and native-sort baselines.
    let csv = "\
p,c,size,sort,subsort,time,speedup,efficiency,user,node
1,1,10000000,mp,none,7.724,1.000,1.000,alex,v100
1,4,10000000,mp,none,3.474,2.223,0.556,alex,v100
1,8,10000000,mp,none,3.164,2.441,0.305,alex,v100
1,12,10000000,mp,none,2.487,3.106,0.259,alex,v100
1,16,10000000,mp,none,2.820,2.739,0.171,alex,v100
1,20,10000000,mp,none,2.858,2.703,0.135,alex,v100
1,24,10000000,mp,none,2.830,2.730,0.114,alex,v100
1,1,10000000,seq,none,85.611,,,alex,v100
1,1,10000000,sorted,none,3.860,,,alex,v100
";
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("published.csv");
    fs::write(&csv_path, csv).unwrap();
    let report_dir = dir.path().join("report");
    let report = ReportArgs {
        input: csv_path,
        out_dir: report_dir.clone(),
    };
    assert_eq!(cmd_report(&report), EXIT_OK);
    let series =
        fs::read_to_string(report_dir.join("time_by_workers_size_10000000.dat")).unwrap();
    // Header line plus one point per worker count.
    assert_eq!(series.lines().count(), 8);
    assert!(series.lines().nth(4).unwrap().starts_with("12 2.487"));
}

#[test]
fn report_of_header_only_csv_is_empty_and_ok() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("empty.csv");
    fs::write(
        &csv_path,
        "p,c,size,sort,subsort,time,speedup,efficiency,user,node\n",
    )
    .unwrap();
    let report = ReportArgs {
        input: csv_path,
        out_dir: dir.path().join("report"),
    };
    assert_eq!(cmd_report(&report), EXIT_OK);
}

#[test]
fn report_rejects_garbage_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("bad.csv");
    fs::write(&csv_path, "not,a,bench\n1,2,3\n").unwrap();
    let report = ReportArgs {
        input: csv_path,
        out_dir: dir.path().join("report"),
    };
    assert_eq!(cmd_report(&report), EXIT_FAILURE);
}

#[test]
fn verify_quick_passes_on_a_correct_build() {
    let args = VerifyArgs {
        quick: true,
        world: world_args(),
    };
    assert_eq!(cmd_verify(&args), EXIT_OK);
}

#[test]
fn compiled_binary_runs_and_reports_usage() {
    let binary = env!("CARGO_BIN_EXE_sortbench");
    let ok = Command::new(binary)
        .args(["run", "--algo", "seq", "--size", "500"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("verified=yes"));

    let usage = Command::new(binary)
        .args(["run", "--algo", "mpi", "--ranks", "3", "--size", "100"])
        .output()
        .unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_USAGE));

    let help = Command::new(binary).arg("--help").output().unwrap();
    assert!(help.status.success());
}
