//! Command-line front end: argument parsing, report emission and exit codes.
//!
//! Exit codes: 0 success, 1 completed with warnings, 2 usage or configuration
//! error, 3 numerical failure (CFL or positivity). Errors are printed as a
//! single line, `error: <kind>: <message>`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use stencilbench::config::{OutputFormat, RunConfig, KEYS};
use stencilbench::energy::{
    self, autotune, idle_baseline, net_energy, parse_power_trace, square_sweep, wattmeter_energy,
    BenchRecord, Heatmap, Metric, PowerSource, TuneOptions, WattMeterReading,
};
use stencilbench::io::{write_fields, FieldSet};
use stencilbench::mandelbrot::{self, ComplexExtent};
use stencilbench::occupancy::{
    builtin_presets, find_preset, limits_table, load_presets, occupancy, KernelResources,
};
use stencilbench::portlint::{checklist_diagnostics, translate, Direction};
use stencilbench::{BlockConfig, Error, Executor, MathMode, SchemeKind, Variant};

pub const OK: i32 = 0;
pub const WARN: i32 = 1;
pub const USAGE: i32 = 2;
pub const NUMERICAL: i32 = 3;

/// Failure of a subcommand, already classified for the exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: USAGE,
            kind: "usage",
            message: message.into(),
        }
    }

    /// The single-line form printed on standard error.
    pub fn line(&self) -> String {
        let msg: String = self
            .message
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        format!("error: {}: {msg}", self.kind)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Cfl { .. } => (NUMERICAL, "cfl"),
            Error::NonPositiveDepth { .. } => (NUMERICAL, "positivity"),
            Error::Block(_) | Error::LaunchRejected(_) => (USAGE, "block"),
            Error::Parse { .. } | Error::EmptyTrace | Error::Csv(_) => (USAGE, "parse"),
            Error::Io(_) => (USAGE, "io"),
            Error::Measurement(_) => (USAGE, "measurement"),
            _ => (USAGE, "config"),
        };
        let message = match e {
            Error::Config(m) => m,
            e => e.to_string(),
        };
        Self {
            code,
            kind,
            message,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

type Outcome = Result<i32, Failure>;

fn parse_block(s: &str) -> Result<BlockConfig, String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
    let p = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad block side '{v}'"))
    };
    Ok(BlockConfig::new(p(w)?, p(h)?))
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("expected RE,IM, got '{s}'"))?;
    let p = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| format!("bad number '{v}'"))
    };
    Ok(Complex64::new(p(re)?, p(im)?))
}

fn keys_help() -> String {
    let mut s = String::from("Configuration keys (INI, [section] then key = value):\n");
    for (section, key, doc) in KEYS {
        let _ = writeln!(s, "  [{section}] {key:<10} {doc}");
    }
    let _ = write!(
        s,
        "\nThe environment variable {} caps the worker threads.",
        stencilbench::exec::THREADS_ENV
    );
    s
}

#[derive(Parser, Debug)]
#[command(
    name = "stencilbench",
    version,
    about = "Shallow-water stencil benchmarks on a modelled GPU execution substrate"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a simulation and write the initial and final fields plus a run log
    #[command(after_help = keys_help())]
    Simulate(SimulateArgs),
    /// Time one configuration and write a results CSV
    #[command(after_help = keys_help())]
    Bench(BenchArgs),
    /// Sweep block sizes, write the sweep CSV and heatmaps, report the best configuration
    #[command(after_help = keys_help())]
    Autotune(AutotuneArgs),
    /// Net energy from a power trace or a watt-meter reading
    Energy(EnergyArgs),
    /// Analytic occupancy and the limiting resource
    Occupancy(OccupancyArgs),
    /// Render Mandelbrot frames to PGM and CSV
    Mandelbrot(MandelbrotArgs),
    /// Translate kernel source between CUDA and OpenCL
    Portlint(PortlintArgs),
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    /// INI configuration file
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// linear | nonlinear | hires
    #[arg(long)]
    scheme: Option<SchemeKind>,
    /// three_kernel | fused | stage0..stage6
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    steps: Option<u64>,
    /// Block size as WxH
    #[arg(long, value_parser = parse_block)]
    block: Option<BlockConfig>,
    /// precise | fast
    #[arg(long)]
    math_mode: Option<MathMode>,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(k) = self.scheme {
            c.scheme = k;
            c.variant = Variant::default_for(k);
        }
        if let Some(v) = self.variant {
            c.variant = v;
        }
        c.nx = self.nx.unwrap_or(c.nx);
        c.ny = self.ny.unwrap_or(c.ny);
        c.steps = self.steps.unwrap_or(c.steps);
        c.block = self.block.unwrap_or(c.block);
        c.math_mode = self.math_mode.unwrap_or(c.math_mode);
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Output directory (overrides [output] dir)
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// swf | csv
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct PowerArgs {
    /// Constant net power in watts attributed to the run
    #[arg(long, conflicts_with = "trace")]
    watts: Option<f64>,
    /// Power trace CSV (t_ms,watts) recorded around the run
    #[arg(long)]
    trace: Option<PathBuf>,
}

impl PowerArgs {
    fn source(&self) -> Result<Option<PowerSource>, Failure> {
        Ok(match (&self.watts, &self.trace) {
            (Some(w), _) => Some(PowerSource::Constant(*w)),
            (None, Some(p)) => Some(PowerSource::Trace(parse_power_trace(&fs::read_to_string(
                p,
            )?)?)),
            (None, None) => None,
        })
    }
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    power: PowerArgs,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Results CSV
    #[arg(short, long, default_value = "results.csv")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AutotuneArgs {
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    power: PowerArgs,
    /// Square sweep over these side lengths
    #[arg(long, value_delimiter = ',', default_value = "4,8,12,16,24,32")]
    sizes: Vec<usize>,
    /// throughput | efficiency
    #[arg(long, default_value = "throughput")]
    metric: Metric,
    #[arg(long, default_value_t = 3)]
    warmup: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Directory for sweep.csv, heatmap.csv and heatmap.svg
    #[arg(short, long, default_value = "autotune")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EnergyArgs {
    /// Power trace CSV with header t_ms,watts
    #[arg(long, required_unless_present = "meter_wh")]
    trace: Option<PathBuf>,
    /// Leading idle window in seconds
    #[arg(long, default_value_t = energy::DEFAULT_IDLE_S)]
    lead: f64,
    /// Trailing idle window in seconds
    #[arg(long, default_value_t = energy::DEFAULT_IDLE_S)]
    tail: f64,
    /// Use this idle baseline instead of measuring it from the idle windows
    #[arg(long)]
    baseline: Option<f64>,
    /// Watt-meter total in Wh
    #[arg(long, conflicts_with = "trace", requires_all = ["duration", "idle_before", "idle_after"])]
    meter_wh: Option<f64>,
    /// Watt-meter run duration in seconds
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    idle_before: Option<f64>,
    #[arg(long)]
    idle_after: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    max_watts: f64,
    /// Write the metrics as CSV
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OccupancyArgs {
    /// Threads per block
    #[arg(long, required_unless_present_any = ["block", "list"])]
    threads: Option<usize>,
    /// Block size as WxH, instead of --threads
    #[arg(long, value_parser = parse_block, conflicts_with = "threads")]
    block: Option<BlockConfig>,
    /// Registers per thread
    #[arg(long, default_value_t = 0)]
    registers: usize,
    /// Shared memory bytes per block
    #[arg(long, default_value_t = 0)]
    shared: usize,
    /// Device preset name
    #[arg(long, default_value = "generic")]
    device: String,
    /// Preset file replacing the bundled presets
    #[arg(long)]
    presets: Option<PathBuf>,
    /// List the available presets
    #[arg(long)]
    list: bool,
}

#[derive(Args, Debug)]
struct MandelbrotArgs {
    #[arg(long, default_value_t = 512)]
    nx: usize,
    #[arg(long, default_value_t = 512)]
    ny: usize,
    /// Zoom centre as RE,IM
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    center: Option<Complex64>,
    /// Number of frames, each half the size of the previous one
    #[arg(long, default_value_t = 1)]
    zooms: usize,
    #[arg(long, default_value_t = mandelbrot::DEFAULT_ITERATIONS)]
    iterations: u32,
    /// The full benchmark workload (50 zooms, 5000 iterations)
    #[arg(long, conflicts_with_all = ["zooms", "iterations", "center"])]
    full_workload: bool,
    #[arg(long, value_parser = parse_block, default_value = "16x16")]
    block: BlockConfig,
    /// pgm | csv | both
    #[arg(long, default_value = "both")]
    format: String,
    #[arg(short, long, default_value = "mandelbrot")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PortlintArgs {
    /// Target dialect: opencl | cuda
    #[arg(long)]
    to: Direction,
    /// Kernel source file
    file: PathBuf,
    /// Only report the porting checklist; do not print the translation
    #[arg(long)]
    check_only: bool,
}

fn exec() -> Executor {
    Executor::default()
}

fn simulate(a: SimulateArgs) -> Outcome {
    let mut c = a.run.resolve()?;
    if let Some(o) = a.out {
        c.output_dir = o;
    }
    if let Some(f) = a.format {
        c.output_format = match f.as_str() {
            "swf" => OutputFormat::Swf,
            "csv" => OutputFormat::Csv,
            _ => return Err(Failure::usage(format!("unknown format '{f}' (swf, csv)"))),
        };
    }
    let mut s = c.setup::<f32>()?;
    fs::create_dir_all(&c.output_dir)?;
    let ext = c.output_format.extension();
    write_fields(
        &c.output_dir.join(format!("initial.{ext}")),
        &FieldSet::from_state(&s.state),
    )?;
    fs::write(c.output_dir.join("run.log"), c.to_log(s.params.dt))?;
    let start = Instant::now();
    let stats = s
        .scheme
        .run(&mut s.state, &s.params, &s.bathy, &s.spec, &exec(), c.steps)?;
    let wall = start.elapsed().as_secs_f64();
    write_fields(
        &c.output_dir.join(format!("final.{ext}")),
        &FieldSet::from_state(&s.state),
    )?;
    println!(
        "{} {}: {} steps of {} s on {}x{}, t = {} s, {:.3} s wall",
        c.scheme, c.variant, c.steps, s.params.dt, c.nx, c.ny, s.state.t, wall
    );
    println!("{}", TrafficStatsLine(&stats));
    println!("wrote {}", c.output_dir.display());
    Ok(OK)
}

struct TrafficStatsLine<'a>(&'a stencilbench::TrafficStats);

impl std::fmt::Display for TrafficStatsLine<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}\n{}",
            stencilbench::TrafficStats::CSV_HEADER,
            self.0.csv_row()
        )
    }
}

/// Times `c.steps` steps from a fresh state; setup is excluded from the clock.
fn timed_run(
    c: &RunConfig,
    block: BlockConfig,
) -> stencilbench::Result<stencilbench::TrafficStats> {
    let mut c = c.clone();
    c.block = block;
    let mut s = c.setup::<f32>()?;
    s.scheme
        .run(&mut s.state, &s.params, &s.bathy, &s.spec, &exec(), c.steps)
}

fn workload(c: &RunConfig) -> energy::Workload {
    energy::Workload {
        scheme: c.scheme.to_string(),
        variant: c.variant.to_string(),
        nx: c.nx,
        ny: c.ny,
        steps: c.steps,
    }
}

fn bench(a: BenchArgs) -> Outcome {
    let c = a.run.resolve()?;
    let power = a.power.source()?;
    let opts = TuneOptions {
        warmup: a.warmup,
        reps: a.reps,
        metric: Metric::Throughput,
    };
    let result = autotune(&workload(&c), &[c.block], opts, power.as_ref(), |b| {
        timed_run(&c, b)
    })?;
    let entry = &result.entries[0];
    let Some(rec) = &entry.record else {
        return Err(Error::LaunchRejected(entry.reason.clone().unwrap_or_default()).into());
    };
    let mut f = fs::File::create(&a.out)?;
    energy::write_results_csv(&mut f, std::slice::from_ref(rec))?;
    println!(
        "{} {} {}: {:.3} Mcells/s over {} reps (median {:.6} s)",
        rec.scheme, rec.variant, rec.block, rec.megacells_per_s, a.reps, rec.wall_seconds
    );
    if let Some(e) = rec.megacells_per_joule {
        println!("{e:.6} Mcells/J");
    }
    Ok(OK)
}

fn tune(a: AutotuneArgs) -> Outcome {
    let c = a.run.resolve()?;
    let power = a.power.source()?;
    let opts = TuneOptions {
        warmup: a.warmup,
        reps: a.reps,
        metric: a.metric,
    };
    let configs = square_sweep(&a.sizes);
    let result = autotune(&workload(&c), &configs, opts, power.as_ref(), |b| {
        timed_run(&c, b)
    })?;
    fs::create_dir_all(&a.out)?;
    let feasible: Vec<BenchRecord> = result
        .entries
        .iter()
        .filter_map(|e| e.record.clone())
        .collect();
    let mut f = fs::File::create(a.out.join("sweep.csv"))?;
    energy::write_results_csv(&mut f, &feasible)?;
    let heat = Heatmap::from_tune(&result)?;
    fs::write(a.out.join("heatmap.csv"), heat.to_csv())?;
    let title = format!("{} {} {}x{}, {}", c.scheme, c.variant, c.nx, c.ny, a.metric);
    fs::write(a.out.join("heatmap.svg"), heat.to_svg(&title))?;
    for e in result.entries.iter().filter(|e| e.record.is_none()) {
        eprintln!(
            "skipped {}: {}",
            e.block,
            e.reason.as_deref().unwrap_or("infeasible")
        );
    }
    match result.best {
        Some(b) => {
            let v = result
                .entries
                .iter()
                .find(|e| e.block == b)
                .and_then(|e| e.value(a.metric))
                .unwrap_or(f64::NAN);
            println!("best: {}x{} {}={v}", b.width, b.height, a.metric);
            Ok(OK)
        }
        None => Err(Failure::usage(
            "no feasible block configuration in the sweep",
        )),
    }
}

fn energy_cmd(a: EnergyArgs) -> Outcome {
    let mut csv = String::from("source,baseline_w,net_j,span_s,mean_net_w,low_resolution\n");
    let mut code = OK;
    if let Some(wh) = a.meter_wh {
        let r = WattMeterReading {
            total_wh: wh,
            duration_s: a.duration.unwrap_or_default(),
            idle_watts_before: a.idle_before.unwrap_or_default(),
            idle_watts_after: a.idle_after.unwrap_or_default(),
            max_watts: a.max_watts,
        };
        let m = wattmeter_energy(&r)?;
        println!("idle baseline: {} W", m.idle_watts);
        println!("net energy: {} J", m.net_joules);
        println!("mean net power: {} W", m.net_joules / r.duration_s);
        if m.low_resolution {
            eprintln!("warning: reading below 100 meter quanta; energy resolution is poor");
            code = WARN;
        }
        let _ = writeln!(
            csv,
            "wattmeter,{},{},{},{},{}",
            m.idle_watts,
            m.net_joules,
            r.duration_s,
            m.net_joules / r.duration_s,
            m.low_resolution
        );
    } else {
        let path = a
            .trace
            .expect("clap requires --trace without a meter reading");
        let trace = parse_power_trace(&fs::read_to_string(&path)?)?.with_idle(a.lead, a.tail);
        let baseline = match a.baseline {
            Some(b) => b,
            None => idle_baseline(&trace)?,
        };
        let joules = net_energy(&trace, baseline)?;
        let (t0, t1) = trace.active_span_ms()?;
        let span = (t1 - t0) / 1e3;
        println!("idle baseline: {baseline} W");
        println!("net energy: {:.1} J", joules);
        println!("active span: {span} s");
        println!("mean net power: {} W", joules / span);
        let _ = writeln!(
            csv,
            "trace,{baseline},{joules},{span},{},false",
            joules / span
        );
    }
    if let Some(out) = a.out {
        fs::write(out, csv)?;
    }
    Ok(code)
}

fn occupancy_cmd(a: OccupancyArgs) -> Outcome {
    let presets = match &a.presets {
        Some(p) => load_presets(p)?,
        None => builtin_presets(),
    };
    if a.list {
        for p in &presets {
            println!(
                "{:<10} {} threads/block, {} warps/SM, {} blocks/SM, {} registers/SM, {} shared B/SM",
                p.name, p.max_threads_per_block, p.max_warps_per_sm, p.max_blocks_per_sm, p.registers_per_sm, p.shared_per_sm_bytes
            );
        }
        return Ok(OK);
    }
    let preset = find_preset(&presets, &a.device)?;
    let threads = a
        .block
        .map(|b| b.threads())
        .or(a.threads)
        .unwrap_or_default();
    let res = KernelResources::new(threads, a.registers, a.shared);
    let occ = occupancy(&res, preset)?;
    print!("{}", limits_table(&res, preset, &occ));
    Ok(OK)
}

fn mandelbrot_cmd(a: MandelbrotArgs) -> Outcome {
    let (pgm, csv) = match a.format.as_str() {
        "pgm" => (true, false),
        "csv" => (false, true),
        "both" => (true, true),
        f => {
            return Err(Failure::usage(format!(
                "unknown format '{f}' (pgm, csv, both)"
            )))
        }
    };
    let work = if a.full_workload {
        mandelbrot::default_workload(a.nx, a.ny)?
    } else {
        match a.center {
            Some(c) => mandelbrot::zoom_workload(c, a.zooms, a.iterations, a.nx, a.ny)?,
            None if a.zooms == 1 => mandelbrot::Workload {
                frames: vec![ComplexExtent::overview(a.nx, a.ny)?],
                max_iterations: a.iterations,
            },
            None => mandelbrot::zoom_workload(
                mandelbrot::DEFAULT_CENTER,
                a.zooms,
                a.iterations,
                a.nx,
                a.ny,
            )?,
        }
    };
    fs::create_dir_all(&a.out)?;
    let ex = exec();
    let start = Instant::now();
    let mut total = 0u64;
    for (k, frame) in work.frames.iter().enumerate() {
        let (r, _) = mandelbrot::render(frame, work.max_iterations, a.block, &ex)?;
        total += r.total_iterations();
        if pgm {
            r.write_pgm(std::io::BufWriter::new(fs::File::create(
                a.out.join(format!("frame_{k:03}.pgm")),
            )?))?;
        }
        if csv {
            r.write_csv(std::io::BufWriter::new(fs::File::create(
                a.out.join(format!("frame_{k:03}.csv")),
            )?))?;
        }
    }
    let wall = start.elapsed().as_secs_f64();
    println!(
        "{} frames of {}x{}, {} iterations max, {} iterations total, {:.3} s ({:.3} Mpixels/s)",
        work.frames.len(),
        a.nx,
        a.ny,
        work.max_iterations,
        total,
        wall,
        (a.nx * a.ny * work.frames.len()) as f64 / wall.max(1e-9) / 1e6
    );
    Ok(OK)
}

fn portlint_cmd(a: PortlintArgs) -> Outcome {
    let src = fs::read_to_string(&a.file)?;
    let name = a.file.display().to_string();
    let t = translate(&src, a.to);
    let stderr = std::io::stderr();
    let mut err = stderr.lock();
    if a.check_only {
        for d in checklist_diagnostics(&src, a.to) {
            let _ = writeln!(err, "{}", d.render(&name));
        }
    } else {
        print!("{}", t.text);
        let _ = std::io::stdout().flush();
        for d in &t.diagnostics {
            let _ = writeln!(err, "{}", d.render(&name));
        }
    }
    Ok(t.exit_code())
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Simulate(a) => simulate(a),
        Command::Bench(a) => bench(a),
        Command::Autotune(a) => tune(a),
        Command::Energy(a) => energy_cmd(a),
        Command::Occupancy(a) => occupancy_cmd(a),
        Command::Mandelbrot(a) => mandelbrot_cmd(a),
        Command::Portlint(a) => portlint_cmd(a),
    }
}

fn finish(r: Outcome) -> i32 {
    match r {
        Ok(code) => code,
        Err(f) => {
            eprintln!("{}", f.line());
            f.code
        }
    }
}

/// Help and version requests exit 0; every other parse error is one line and exit 2.
fn parse_or_exit<P: Parser>(args: Vec<OsString>) -> Result<P, i32> {
    P::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                let _ = e.print();
                OK
            }
            _ => {
                let text = e.to_string();
                let first = text.lines().next().unwrap_or("invalid arguments");
                eprintln!(
                    "{}",
                    Failure::usage(first.trim_start_matches("error: ")).line()
                );
                USAGE
            }
        }
    })
}

/// Entry point of the `stencilbench` binary.
pub fn main_with(args: impl IntoIterator<Item = OsString>) -> i32 {
    match parse_or_exit::<Cli>(args.into_iter().collect()) {
        Ok(cli) => finish(dispatch(cli.command)),
        Err(code) => code,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "portlint",
    version,
    about = "Translate kernel source between CUDA and OpenCL"
)]
struct PortlintCli {
    #[command(flatten)]
    args: PortlintArgs,
}

/// Entry point of the standalone `portlint` binary.
pub fn portlint_main(args: impl IntoIterator<Item = OsString>) -> i32 {
    match parse_or_exit::<PortlintCli>(args.into_iter().collect()) {
        Ok(cli) => finish(portlint_cmd(cli.args)),
        Err(code) => code,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_syntax() {
        assert_eq!(parse_block("16x8").unwrap(), BlockConfig::new(16, 8));
        assert!(parse_block("16").is_err());
        assert!(parse_block("ax8").is_err());
    }

    #[test]
    fn error_lines_are_single_line() {
        let f: Failure = Error::Config("a\nb".into()).into();
        assert_eq!(f.line(), "error: config: a b");
        assert_eq!(
            Failure::from(Error::Cfl {
                dt: 2.0,
                max_dt: 1.0
            })
            .code,
            NUMERICAL
        );
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
        PortlintCli::command().debug_assert();
    }

    #[test]
    fn help_mentions_every_key() {
        let h = keys_help();
        assert!(KEYS
            .iter()
            .all(|(s, k, _)| h.contains(&format!("[{s}] {k}"))));
    }
}
