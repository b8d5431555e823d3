use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use stencilbench::io::read_fields;

fn stencilbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stencilbench"))
        .args(args)
        .env("STENCILBENCH_THREADS", "2")
        .output()
        .unwrap()
}

fn portlint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_portlint"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn every_subcommand_has_help() {
    for sub in [
        "simulate",
        "bench",
        "autotune",
        "energy",
        "occupancy",
        "mandelbrot",
        "portlint",
    ] {
        let o = stencilbench(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        assert!(stdout(&o).contains("Usage:"), "{sub}");
    }
    let o = stencilbench(&["simulate", "--help"]);
    assert!(stdout(&o).contains("[bathymetry]"));
    assert_eq!(portlint(&["--help"]).status.code(), Some(0));
}

#[test]
fn bad_flags_are_one_line_usage_errors() {
    for args in [
        &["--frobnicate"][..],
        &["simulate", "--steps", "many"],
        &["mandelbrot", "--block", "16"],
    ] {
        let o = stencilbench(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "), "{err}");
    }
}

#[test]
fn lake_at_rest_stays_at_rest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lake.ini");
    fs::write(
        &cfg,
        "[scheme]\nname = hires\nvariant = stage6\n[domain]\nnx = 24\nny = 20\nboundary = closed_wall\n\
         [bathymetry]\nkind = random\ndepth = 40\namplitude = 8\nseed = 5\n[initial]\nkind = lake_at_rest\n\
         [run]\nsteps = 40\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = stencilbench(&["simulate", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = read_fields(&out.join("initial.swf")).unwrap();
    let b = read_fields(&out.join("final.swf")).unwrap();
    assert_eq!(a, b);
    assert!(b.fields.iter().flatten().all(|&v| v == 0.0));
}

#[test]
fn run_log_reproduces_the_run_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let o = stencilbench(&[
        "simulate",
        "--scheme",
        "nonlinear",
        "--nx",
        "24",
        "--ny",
        "16",
        "--steps",
        "15",
        "--block",
        "8x4",
        "--out",
        p(&first),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let second = dir.path().join("second");
    let log = first.join("run.log");
    let o = stencilbench(&[
        "simulate",
        "--config",
        p(&log),
        "--out",
        p(&second),
        "--format",
        "csv",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = read_fields(&first.join("final.swf")).unwrap();
    let b = read_fields(&second.join("final.csv")).unwrap();
    assert_eq!(a.names, b.names);
    for (x, y) in a.fields.iter().zip(&b.fields) {
        assert!(x.iter().zip(y).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
}

#[test]
fn cfl_violation_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("fast.ini");
    fs::write(
        &cfg,
        "[scheme]\nname = linear\n[physics]\ndt = 1e6\n[run]\nsteps = 2\n",
    )
    .unwrap();
    let o = stencilbench(&["simulate", "--config", p(&cfg), "--out", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error: cfl: "), "{err}");
}

#[test]
fn missing_config_is_a_config_error() {
    let o = stencilbench(&["simulate", "--config", "/no/such/file.ini"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr(&o).lines().count(), 1);
}

#[test]
fn autotune_writes_sweep_and_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let o = stencilbench(&[
        "autotune",
        "--scheme",
        "hires",
        "--variant",
        "stage0",
        "--nx",
        "32",
        "--ny",
        "32",
        "--steps",
        "1",
        "--sizes",
        "4,16,32",
        "--warmup",
        "0",
        "--reps",
        "1",
        "--watts",
        "100",
        "--metric",
        "efficiency",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("best: "));
    let sweep = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows = sweep.lines().count() - 1;
    assert!((1..9).contains(&rows), "{sweep}");
    let heat = fs::read_to_string(dir.path().join("heatmap.csv")).unwrap();
    assert_eq!(heat.lines().count(), 4);
    assert!(fs::read_to_string(dir.path().join("heatmap.svg"))
        .unwrap()
        .starts_with("<svg"));
    // wide stage-0 tiles do not fit the shared-memory budget
    assert_eq!(
        stderr(&o)
            .lines()
            .filter(|l| l.starts_with("skipped"))
            .count(),
        9 - rows
    );
}

#[test]
fn bench_writes_one_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results.csv");
    let o = stencilbench(&[
        "bench",
        "--nx",
        "32",
        "--ny",
        "32",
        "--steps",
        "3",
        "--warmup",
        "1",
        "--reps",
        "3",
        "--watts",
        "40",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("linear,fused,16,16,32,32,3,"));
}

#[test]
fn energy_of_the_ramp_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("ramp.csv");
    let mut text = String::from("t_ms,watts\n");
    for ms in 0..=16_000 {
        let t = ms as f64 / 1e3;
        let w = if (3.0..13.0).contains(&t) {
            20.0 + 10.0 * (t - 3.0)
        } else {
            20.0
        };
        text.push_str(&format!("{ms},{w}\n"));
    }
    fs::write(&trace, text).unwrap();
    let metrics = dir.path().join("energy.csv");
    let o = stencilbench(&["energy", "--trace", p(&trace), "--out", p(&metrics)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("net energy: "))
        .unwrap()
        .to_owned();
    let joules: f64 = line
        .trim_start_matches("net energy: ")
        .trim_end_matches(" J")
        .parse()
        .unwrap();
    assert!((joules / 500.0 - 1.0).abs() <= 1e-3, "{line}");
    assert!(stdout(&o).contains("idle baseline: 20 W"));
    assert_eq!(fs::read_to_string(&metrics).unwrap().lines().count(), 2);
}

#[test]
fn coarse_meter_readings_warn() {
    let o = stencilbench(&[
        "energy",
        "--meter-wh",
        "0.5",
        "--duration",
        "60",
        "--idle-before",
        "20",
        "--idle-after",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("warning: "));
    let o = stencilbench(&[
        "energy",
        "--meter-wh",
        "100",
        "--duration",
        "3600",
        "--idle-before",
        "20",
        "--idle-after",
        "20",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("net energy: 288000 J"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn occupancy_reports_the_limit() {
    let o = stencilbench(&[
        "occupancy",
        "--threads",
        "256",
        "--registers",
        "40",
        "--shared",
        "8192",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(
        stdout(&o).contains("occupancy 75.0%, limited by shared"),
        "{}",
        stdout(&o)
    );
    let o = stencilbench(&["occupancy", "--block", "32x33"]);
    assert_eq!(o.status.code(), Some(2));
    let o = stencilbench(&["occupancy", "--threads", "64", "--device", "nonesuch"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&stencilbench(&["occupancy", "--list"])).contains("K20"));
}

#[test]
fn mandelbrot_frames() {
    let dir = tempfile::tempdir().unwrap();
    let o = stencilbench(&[
        "mandelbrot",
        "--nx",
        "40",
        "--ny",
        "30",
        "--zooms",
        "3",
        "--iterations",
        "300",
        "--center",
        "-0.75,0.1",
        "--block",
        "8x8",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for k in 0..3 {
        let pgm = fs::read(dir.path().join(format!("frame_{k:03}.pgm"))).unwrap();
        assert!(pgm.starts_with(b"P5\n40 30\n"));
        let csv = fs::read_to_string(dir.path().join(format!("frame_{k:03}.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 1 + 40 * 30);
    }
}

const KERNEL: &str = "__global__ void scale(float* __restrict__ p, float a, int n)\n{\n    \
                      int i = blockIdx.x * blockDim.x + threadIdx.x;\n    if (i < n) p[i] *= a;\n}\n";

#[test]
fn portlint_round_trip_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cu = dir.path().join("scale.cu");
    fs::write(&cu, KERNEL).unwrap();
    let o = portlint(&["--to", "opencl", p(&cu)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cl = stdout(&o);
    assert!(
        cl.contains("__kernel") && cl.contains("get_local_id(0)"),
        "{cl}"
    );
    let ocl = dir.path().join("scale.cl");
    fs::write(&ocl, &cl).unwrap();
    let back = stencilbench(&["portlint", "--to", "cuda", p(&ocl)]);
    assert_eq!(back.status.code(), Some(0));
    assert_eq!(stdout(&back), KERNEL);

    let fenced = dir.path().join("fence.cu");
    fs::write(
        &fenced,
        "__global__ void k(float* p)\n{\n    __threadfence();\n}\n",
    )
    .unwrap();
    let o = portlint(&["--to", "opencl", p(&fenced)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("fence.cu:3"), "{}", stderr(&o));

    let o = portlint(&["--to", "opencl", "--check-only", p(&cu)]);
    assert!(stdout(&o).is_empty());
    assert_eq!(
        portlint(&["--to", "opencl", "/no/such.cu"]).status.code(),
        Some(2)
    );
    assert_eq!(
        portlint(&["--to", "fortran", p(&cu)]).status.code(),
        Some(2)
    );
}
