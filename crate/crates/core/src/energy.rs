//! Benchmark records, power-trace and watt-meter energy accounting, block
//! size autotuning and heatmap output.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::exec::{BlockConfig, TrafficStats};

pub const TRACE_HEADER: &str = "t_ms,watts";
pub const DEFAULT_IDLE_S: f64 = 3.0;
/// One watt-hour in joules, the watt meter's resolution.
pub const WH: f64 = 3600.0;
pub const RESULTS_HEADER: [&str; 11] = [
    "scheme", "variant", "block_w", "block_h", "nx", "ny", "steps", "wall_s", "mcells_s", "mean_w",
    "mcells_j",
];

#[derive(Clone, Debug, PartialEq)]
pub struct PowerTrace {
    /// `(t_ms, watts)`, strictly increasing in time.
    pub samples: Vec<(f64, f64)>,
    pub lead_idle_s: f64,
    pub tail_idle_s: f64,
    /// Median spacing between samples.
    pub spacing_ms: f64,
}

impl PowerTrace {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTrace);
        }
        for (k, w) in samples.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::Parse {
                    line: k + 2,
                    message: "timestamps must be strictly increasing".into(),
                });
            }
        }
        if let Some(k) = samples
            .iter()
            .position(|s| !(s.1 >= 0.0) || !s.0.is_finite())
        {
            return Err(Error::Parse {
                line: k + 1,
                message: "negative or non-finite sample".into(),
            });
        }
        let mut gaps: Vec<f64> = samples.windows(2).map(|w| w[1].0 - w[0].0).collect();
        gaps.sort_by(f64::total_cmp);
        let spacing_ms = gaps.get(gaps.len() / 2).copied().unwrap_or(0.0);
        Ok(Self {
            samples,
            lead_idle_s: DEFAULT_IDLE_S,
            tail_idle_s: DEFAULT_IDLE_S,
            spacing_ms,
        })
    }

    pub fn with_idle(mut self, lead_s: f64, tail_s: f64) -> Self {
        self.lead_idle_s = lead_s;
        self.tail_idle_s = tail_s;
        self
    }

    pub fn start_ms(&self) -> f64 {
        self.samples[0].0
    }

    pub fn end_ms(&self) -> f64 {
        self.samples[self.samples.len() - 1].0
    }

    /// The `[start, end]` span in milliseconds between the idle windows.
    pub fn active_span_ms(&self) -> Result<(f64, f64)> {
        let a = self.start_ms() + self.lead_idle_s * 1e3;
        let b = self.end_ms() - self.tail_idle_s * 1e3;
        if b <= a {
            return Err(Error::Measurement(format!(
                "trace of {:.3} s is not longer than its idle windows ({} s + {} s)",
                (self.end_ms() - self.start_ms()) / 1e3,
                self.lead_idle_s,
                self.tail_idle_s
            )));
        }
        Ok((a, b))
    }

    /// Linear interpolation of the power at `t_ms` inside the trace.
    fn watts_at(&self, t: f64) -> f64 {
        let k = self.samples.partition_point(|s| s.0 <= t);
        if k == 0 {
            return self.samples[0].1;
        }
        if k == self.samples.len() {
            return self.samples[k - 1].1;
        }
        let ((t0, w0), (t1, w1)) = (self.samples[k - 1], self.samples[k]);
        if t == t0 {
            return w0;
        }
        w0 + (w1 - w0) * ((t - t0) / (t1 - t0))
    }

    /// Mean of the samples inside the active span.
    pub fn active_mean_watts(&self) -> Result<f64> {
        let (a, b) = self.active_span_ms()?;
        let inside: Vec<f64> = self
            .samples
            .iter()
            .filter(|s| s.0 >= a && s.0 <= b)
            .map(|s| s.1)
            .collect();
        if inside.is_empty() {
            return Ok(self.watts_at(0.5 * (a + b)));
        }
        Ok(inside.iter().sum::<f64>() / inside.len() as f64)
    }
}

/// Parses a `t_ms,watts` CSV trace; errors carry 1-based line numbers.
pub fn parse_power_trace(text: &str) -> Result<PowerTrace> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        None => return Err(Error::EmptyTrace),
        Some((_, h)) if h.trim().replace(' ', "") == TRACE_HEADER => {}
        Some((n, _)) => {
            return Err(Error::Parse {
                line: n + 1,
                message: format!("expected header '{TRACE_HEADER}'"),
            })
        }
    }
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for (n, l) in lines {
        let line = n + 1;
        let err = |message: String| Error::Parse { line, message };
        let mut parts = l.split(',').map(str::trim);
        let (Some(t), Some(w), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err(format!("expected two columns, got '{l}'")));
        };
        let t: f64 = t.parse().map_err(|_| err(format!("bad timestamp '{t}'")))?;
        let w: f64 = w
            .parse()
            .map_err(|_| err(format!("bad power value '{w}'")))?;
        if !t.is_finite() || !w.is_finite() || w < 0.0 {
            return Err(err(format!("invalid sample ({t}, {w})")));
        }
        if samples.last().is_some_and(|&(prev, _)| t <= prev) {
            return Err(err(format!(
                "timestamp {t} is not after the previous sample"
            )));
        }
        samples.push((t, w));
    }
    PowerTrace::new(samples)
}

pub fn read_power_trace(r: impl Read) -> Result<PowerTrace> {
    let mut text = String::new();
    std::io::BufReader::new(r).read_to_string(&mut text)?;
    parse_power_trace(&text)
}

/// Mean power over the leading and trailing idle windows.
pub fn idle_baseline(trace: &PowerTrace) -> Result<f64> {
    let (a, b) = trace.active_span_ms()?;
    let idle: Vec<f64> = trace
        .samples
        .iter()
        .filter(|s| s.0 <= a || s.0 >= b)
        .map(|s| s.1)
        .collect();
    if idle.is_empty() {
        return Err(Error::Measurement(
            "no samples inside the idle windows".into(),
        ));
    }
    Ok(idle.iter().sum::<f64>() / idle.len() as f64)
}

/// Trapezoidal integral of `watts - baseline` over the active span, in joules.
///
/// The span ends are interpolated, so edges between idle and load that fall
/// inside the idle windows do not leak into the result.
pub fn net_energy(trace: &PowerTrace, baseline: f64) -> Result<f64> {
    let (a, b) = trace.active_span_ms()?;
    let mut pts = vec![(a, trace.watts_at(a))];
    pts.extend(trace.samples.iter().copied().filter(|s| s.0 > a && s.0 < b));
    pts.push((b, trace.watts_at(b)));
    let mw_ms: f64 = pts
        .windows(2)
        .map(|w| ((w[0].1 - baseline) + (w[1].1 - baseline)) * 0.5 * (w[1].0 - w[0].0))
        .sum();
    Ok(mw_ms / 1e3)
}

/// Mean net power over the active span.
pub fn mean_net_watts(trace: &PowerTrace, baseline: f64) -> Result<f64> {
    let (a, b) = trace.active_span_ms()?;
    Ok(net_energy(trace, baseline)? / ((b - a) / 1e3))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WattMeterReading {
    pub total_wh: f64,
    pub duration_s: f64,
    pub idle_watts_before: f64,
    pub idle_watts_after: f64,
    pub max_watts: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WattMeterEnergy {
    pub net_joules: f64,
    pub idle_watts: f64,
    /// Set when the reading spans fewer than 100 meter quanta.
    pub low_resolution: bool,
}

pub fn wattmeter_energy(r: &WattMeterReading) -> Result<WattMeterEnergy> {
    if !(r.duration_s > 0.0) {
        return Err(Error::Measurement(format!(
            "duration {} s must be positive",
            r.duration_s
        )));
    }
    if !(r.total_wh >= 0.0) {
        return Err(Error::Measurement(format!(
            "negative meter total {} Wh",
            r.total_wh
        )));
    }
    let idle_watts = (r.idle_watts_before + r.idle_watts_after) / 2.0;
    let gross = r.total_wh * WH;
    let net_joules = gross - idle_watts * r.duration_s;
    if net_joules < 0.0 {
        return Err(Error::Measurement(format!(
            "idle draw {idle_watts} W over {} s exceeds the metered {gross} J",
            r.duration_s
        )));
    }
    Ok(WattMeterEnergy {
        net_joules,
        idle_watts,
        low_resolution: gross < 100.0 * WH,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRecord {
    pub scheme: String,
    pub variant: String,
    pub block: BlockConfig,
    pub nx: usize,
    pub ny: usize,
    pub steps: u64,
    pub wall_seconds: f64,
    pub megacells_per_s: f64,
    /// Mean net (idle-subtracted) power.
    pub mean_watts: Option<f64>,
    pub megacells_per_joule: Option<f64>,
    pub traffic: TrafficStats,
}

impl BenchRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        scheme: impl Into<String>,
        variant: impl Into<String>,
        block: BlockConfig,
        nx: usize,
        ny: usize,
        steps: u64,
        wall_seconds: f64,
        traffic: TrafficStats,
    ) -> Result<Self> {
        if !(wall_seconds > 0.0) || steps == 0 {
            return Err(Error::Measurement(format!(
                "{steps} steps in {wall_seconds} s"
            )));
        }
        let megacells_per_s = (nx * ny) as f64 * steps as f64 / wall_seconds / 1e6;
        Ok(Self {
            scheme: scheme.into(),
            variant: variant.into(),
            block,
            nx,
            ny,
            steps,
            wall_seconds,
            megacells_per_s,
            mean_watts: None,
            megacells_per_joule: None,
            traffic,
        })
    }

    pub fn megacells(&self) -> f64 {
        (self.nx * self.ny) as f64 * self.steps as f64 / 1e6
    }

    /// Attaches the net energy used by the run.
    pub fn with_energy(mut self, net_joules: f64) -> Result<Self> {
        if !(net_joules > 0.0) {
            return Err(Error::Measurement(format!(
                "net energy {net_joules} J must be positive"
            )));
        }
        self.mean_watts = Some(net_joules / self.wall_seconds);
        self.megacells_per_joule = Some(self.megacells() / net_joules);
        Ok(self)
    }

    pub fn metric(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Throughput => Some(self.megacells_per_s),
            Metric::Efficiency => self.megacells_per_joule,
        }
    }
}

pub fn write_results_csv(w: impl Write, records: &[BenchRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULTS_HEADER)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:?}"));
    for r in records {
        out.write_record([
            r.scheme.clone(),
            r.variant.clone(),
            r.block.width.to_string(),
            r.block.height.to_string(),
            r.nx.to_string(),
            r.ny.to_string(),
            r.steps.to_string(),
            format!("{:?}", r.wall_seconds),
            format!("{:?}", r.megacells_per_s),
            opt(r.mean_watts),
            opt(r.megacells_per_joule),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Metric {
    #[default]
    Throughput,
    Efficiency,
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "throughput" => Ok(Self::Throughput),
            "efficiency" => Ok(Self::Efficiency),
            _ => Err(Error::Config(format!(
                "unknown metric '{s}' (throughput, efficiency)"
            ))),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Throughput => "throughput",
            Self::Efficiency => "efficiency",
        })
    }
}

/// Where the net power of a tuning run comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum PowerSource {
    /// The same net draw for every configuration.
    Constant(f64),
    /// Mean net power of a recorded trace, idle baseline removed.
    Trace(PowerTrace),
}

impl PowerSource {
    pub fn net_watts(&self) -> Result<f64> {
        match self {
            PowerSource::Constant(w) => Ok(*w),
            PowerSource::Trace(t) => mean_net_watts(t, idle_baseline(t)?),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TuneOptions {
    pub warmup: usize,
    pub reps: usize,
    pub metric: Metric,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            warmup: 3,
            reps: 10,
            metric: Metric::Throughput,
        }
    }
}

/// One row of a sweep; `record` is `None` for configurations the launch gate rejected.
#[derive(Clone, Debug, PartialEq)]
pub struct TuneEntry {
    pub block: BlockConfig,
    pub record: Option<BenchRecord>,
    pub reason: Option<String>,
}

impl TuneEntry {
    pub fn value(&self, metric: Metric) -> Option<f64> {
        self.record.as_ref().and_then(|r| r.metric(metric))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneResult {
    pub entries: Vec<TuneEntry>,
    pub metric: Metric,
    pub best: Option<BlockConfig>,
}

/// Workload description used to label the records of a sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Workload {
    pub scheme: String,
    pub variant: String,
    pub nx: usize,
    pub ny: usize,
    pub steps: u64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs every configuration `warmup + reps` times and keeps the median wall
/// time. `run` performs one repetition and returns its traffic; launch
/// rejections mark the configuration infeasible, other errors abort.
pub fn autotune(
    workload: &Workload,
    configs: &[BlockConfig],
    opts: TuneOptions,
    power: Option<&PowerSource>,
    mut run: impl FnMut(BlockConfig) -> Result<TrafficStats>,
) -> Result<TuneResult> {
    if opts.reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let watts = match (opts.metric, power) {
        (_, Some(p)) => Some(p.net_watts()?),
        (Metric::Efficiency, None) => {
            return Err(Error::Config(
                "the efficiency metric needs a power source".into(),
            ))
        }
        (Metric::Throughput, None) => None,
    };
    let mut entries = Vec::with_capacity(configs.len());
    'configs: for &block in configs {
        let mut times = Vec::with_capacity(opts.reps);
        let mut traffic = TrafficStats::default();
        for rep in 0..opts.warmup + opts.reps {
            let start = Instant::now();
            match run(block) {
                Ok(t) => traffic = t,
                Err(e @ (Error::LaunchRejected(_) | Error::Block(_))) => {
                    entries.push(TuneEntry {
                        block,
                        record: None,
                        reason: Some(e.to_string()),
                    });
                    continue 'configs;
                }
                Err(e) => return Err(e),
            }
            if rep >= opts.warmup {
                times.push(start.elapsed().as_secs_f64().max(1e-9));
            }
        }
        let wall = median(times);
        let mut rec = BenchRecord::new(
            &workload.scheme,
            &workload.variant,
            block,
            workload.nx,
            workload.ny,
            workload.steps,
            wall,
            traffic,
        )?;
        if let Some(w) = watts {
            rec = rec.with_energy(w * wall)?;
        }
        entries.push(TuneEntry {
            block,
            record: Some(rec),
            reason: None,
        });
    }
    let best = best_config(entries.iter().map(|e| (e.block, e.value(opts.metric))));
    Ok(TuneResult {
        entries,
        metric: opts.metric,
        best,
    })
}

/// Argmax of the metric; ties go to the smaller block area, then the smaller width.
pub fn best_config(
    table: impl IntoIterator<Item = (BlockConfig, Option<f64>)>,
) -> Option<BlockConfig> {
    let better = |a: (BlockConfig, f64), b: (BlockConfig, f64)| {
        let key = |c: BlockConfig| (c.width * c.height, c.width, c.height);
        a.1 > b.1 || (a.1 == b.1 && key(a.0) < key(b.0))
    };
    table
        .into_iter()
        .filter_map(|(c, v)| v.filter(|v| !v.is_nan()).map(|v| (c, v)))
        .fold(None, |best, cand| match best {
            Some(b) if !better(cand, b) => Some(b),
            _ => Some(cand),
        })
        .map(|(c, _)| c)
}

/// The square sweep `{sizes} x {sizes}`.
pub fn square_sweep(sizes: &[usize]) -> Vec<BlockConfig> {
    sizes
        .iter()
        .flat_map(|&h| sizes.iter().map(move |&w| BlockConfig::new(w, h)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Value(f64),
    Masked,
    Missing,
}

/// Dense width x height grid of a metric.
#[derive(Clone, Debug, PartialEq)]
pub struct Heatmap {
    pub widths: Vec<usize>,
    pub heights: Vec<usize>,
    /// `cells[row][col]`, rows by height.
    pub cells: Vec<Vec<Cell>>,
}

impl Heatmap {
    /// `None` values mark infeasible configurations.
    pub fn from_table(table: &[(BlockConfig, Option<f64>)]) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::Config("heatmap of an empty table".into()));
        }
        let widths: Vec<usize> = table
            .iter()
            .map(|e| e.0.width)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let heights: Vec<usize> = table
            .iter()
            .map(|e| e.0.height)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut cells = vec![vec![Cell::Missing; widths.len()]; heights.len()];
        for (c, v) in table {
            let col = widths.binary_search(&c.width).unwrap();
            let row = heights.binary_search(&c.height).unwrap();
            cells[row][col] = v.map_or(Cell::Masked, Cell::Value);
        }
        Ok(Self {
            widths,
            heights,
            cells,
        })
    }

    pub fn from_tune(result: &TuneResult) -> Result<Self> {
        let table: Vec<_> = result
            .entries
            .iter()
            .map(|e| (e.block, e.value(result.metric)))
            .collect();
        Self::from_table(&table)
    }

    pub fn get(&self, block: BlockConfig) -> Option<Cell> {
        let col = self.widths.binary_search(&block.width).ok()?;
        let row = self.heights.binary_search(&block.height).ok()?;
        Some(self.cells[row][col])
    }

    /// Header `height\width,w1,w2,...`, one row per height; `NA` marks masked
    /// cells and an empty field an unmeasured one.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("height\\width");
        for w in &self.widths {
            let _ = write!(s, ",{w}");
        }
        s.push('\n');
        for (h, row) in self.heights.iter().zip(&self.cells) {
            let _ = write!(s, "{h}");
            for c in row {
                match c {
                    Cell::Value(v) => {
                        let _ = write!(s, ",{v:?}");
                    }
                    Cell::Masked => s.push_str(",NA"),
                    Cell::Missing => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty heatmap".into(),
        })?;
        let widths = header
            .split(',')
            .skip(1)
            .map(|w| {
                w.trim().parse::<usize>().map_err(|_| Error::Parse {
                    line: 1,
                    message: format!("bad width '{w}'"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut heights = Vec::new();
        let mut cells = Vec::new();
        for (n, l) in lines.filter(|(_, l)| !l.trim().is_empty()) {
            let err = |message: String| Error::Parse {
                line: n + 1,
                message,
            };
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != widths.len() + 1 {
                return Err(err(format!(
                    "{} fields, expected {}",
                    fields.len(),
                    widths.len() + 1
                )));
            }
            heights.push(
                fields[0]
                    .parse::<usize>()
                    .map_err(|_| err(format!("bad height '{}'", fields[0])))?,
            );
            let row = fields[1..]
                .iter()
                .map(|f| match *f {
                    "NA" => Ok(Cell::Masked),
                    "" => Ok(Cell::Missing),
                    v => v
                        .parse()
                        .map(Cell::Value)
                        .map_err(|_| err(format!("bad value '{v}'"))),
                })
                .collect::<Result<Vec<_>>>()?;
            cells.push(row);
        }
        Ok(Self {
            widths,
            heights,
            cells,
        })
    }

    /// One rect per configuration on a viridis scale; masked cells hatched.
    pub fn to_svg(&self, title: &str) -> String {
        const CELL: usize = 48;
        const LEFT: usize = 56;
        const TOP: usize = 40;
        let values: Vec<f64> = self
            .cells
            .iter()
            .flatten()
            .filter_map(|c| {
                if let Cell::Value(v) = c {
                    Some(*v)
                } else {
                    None
                }
            })
            .collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (w, h) = (
            LEFT + CELL * self.widths.len() + 16,
            TOP + CELL * self.heights.len() + 48,
        );
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="11">"#
        );
        s.push_str(concat!(
            r#"<defs><pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" patternTransform="rotate(45)">"#,
            r##"<rect width="6" height="6" fill="#eeeeee"/><line x1="0" y1="0" x2="0" y2="6" stroke="#888888" stroke-width="2"/>"##,
            "</pattern></defs>\n"
        ));
        let _ = writeln!(
            s,
            r#"<text x="{LEFT}" y="20" font-size="13">{}</text>"#,
            xml_escape(title)
        );
        // largest height on top
        for (r, (bh, row)) in self.heights.iter().zip(&self.cells).enumerate() {
            let y = TOP + CELL * (self.heights.len() - 1 - r);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="end">{bh}</text>"#,
                LEFT - 6,
                y + CELL / 2 + 4
            );
            for (c, (bw, cell)) in self.widths.iter().zip(row).enumerate() {
                let x = LEFT + CELL * c;
                let (fill, label) = match cell {
                    Cell::Value(v) => {
                        let t = if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
                        (viridis(t), format!("{v:.3}"))
                    }
                    Cell::Masked => ("url(#hatch)".to_string(), "infeasible".to_string()),
                    Cell::Missing => continue,
                };
                let _ = writeln!(
                    s,
                    r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="white"><title>{bw}x{bh}: {label}</title></rect>"#
                );
            }
        }
        let base = TOP + CELL * self.heights.len();
        for (c, bw) in self.widths.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" text-anchor="middle">{bw}</text>"#,
                LEFT + CELL * c + CELL / 2,
                base + 16
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle">block width</text>"#,
            LEFT + CELL * self.widths.len() / 2,
            base + 36
        );
        s.push_str("</svg>\n");
        s
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Piecewise-linear viridis colour for `t` in `[0, 1]`.
pub fn viridis(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 9] = [
        (68.0, 1.0, 84.0),
        (71.0, 44.0, 122.0),
        (59.0, 81.0, 139.0),
        (44.0, 113.0, 142.0),
        (33.0, 144.0, 141.0),
        (39.0, 173.0, 129.0),
        (92.0, 200.0, 99.0),
        (170.0, 220.0, 50.0),
        (253.0, 231.0, 37.0),
    ];
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let x = t * (STOPS.len() - 1) as f64;
    let k = (x.floor() as usize).min(STOPS.len() - 2);
    let f = x - k as f64;
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * f).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        mix(a.0, b.0),
        mix(a.1, b.1),
        mix(a.2, b.2)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(samples: impl IntoIterator<Item = (f64, f64)>) -> PowerTrace {
        PowerTrace::new(samples.into_iter().collect()).unwrap()
    }

    #[test]
    fn parses_twenty_ms_trace() {
        let mut text = String::from("t_ms,watts\n");
        for k in 0..10 {
            text.push_str(&format!("{},50\n", k * 20));
        }
        let t = parse_power_trace(&text).unwrap();
        assert_eq!(t.samples.len(), 10);
        assert_eq!(t.spacing_ms, 20.0);
        assert_eq!((t.lead_idle_s, t.tail_idle_s), (3.0, 3.0));
    }

    #[test]
    fn out_of_order_line_reported() {
        let text = "t_ms,watts\n0,1\n20,1\n40,1\n30,1\n";
        match parse_power_trace(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_and_headerless() {
        assert!(matches!(parse_power_trace(""), Err(Error::EmptyTrace)));
        assert!(matches!(
            parse_power_trace("t_ms,watts\n"),
            Err(Error::EmptyTrace)
        ));
        assert!(matches!(
            parse_power_trace("0,1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn baseline_separates_windows() {
        // 3 s idle at 18 W, 4 s at 100 W, 3 s idle at 22 W, 20 ms spacing
        let t = trace((0..=500).map(|k| {
            let ms = 20.0 * k as f64;
            (
                ms,
                if ms <= 3000.0 {
                    18.0
                } else if ms < 7000.0 {
                    100.0
                } else {
                    22.0
                },
            )
        }));
        assert_eq!(idle_baseline(&t).unwrap(), 20.0);
    }

    #[test]
    fn short_trace_rejected() {
        let t = trace([(0.0, 1.0), (1000.0, 1.0)]);
        assert!(idle_baseline(&t).is_err());
    }

    #[test]
    fn rectangle_energy() {
        let t = trace((0..=500).map(|k| (20.0 * k as f64, 100.0))).with_idle(0.0, 0.0);
        assert_eq!(net_energy(&t, 20.0).unwrap(), 800.0);
        assert_eq!(net_energy(&t, 100.0).unwrap(), 0.0);
    }

    #[test]
    fn idle_edges_are_clipped() {
        // load from 3 s to 13 s, falling back to idle one sample later
        let t = trace((0..=800).map(|k| {
            let ms = 20.0 * k as f64;
            (
                ms,
                if (3000.0..=13000.0).contains(&ms) {
                    70.0
                } else {
                    20.0
                },
            )
        }));
        assert_eq!(net_energy(&t, 20.0).unwrap(), 500.0);
    }

    #[test]
    fn meter_examples() {
        let r = WattMeterReading {
            total_wh: 100.0,
            duration_s: 3600.0,
            idle_watts_before: 49.0,
            idle_watts_after: 51.0,
            max_watts: 0.0,
        };
        let e = wattmeter_energy(&r).unwrap();
        assert_eq!(
            (e.net_joules, e.idle_watts, e.low_resolution),
            (180000.0, 50.0, false)
        );
        let small = WattMeterReading {
            total_wh: 1.0,
            duration_s: 60.0,
            idle_watts_before: 0.0,
            idle_watts_after: 0.0,
            max_watts: 0.0,
        };
        let e = wattmeter_energy(&small).unwrap();
        assert_eq!((e.net_joules, e.low_resolution), (3600.0, true));
        let bad = WattMeterReading {
            idle_watts_before: 100.0,
            idle_watts_after: 100.0,
            ..small
        };
        assert!(matches!(wattmeter_energy(&bad), Err(Error::Measurement(_))));
    }

    #[test]
    fn tie_breaks() {
        let c = BlockConfig::new;
        assert_eq!(
            best_config([
                (c(8, 8), Some(100.0)),
                (c(16, 16), Some(200.0)),
                (c(32, 8), Some(150.0))
            ]),
            Some(c(16, 16))
        );
        assert_eq!(
            best_config([(c(16, 4), Some(100.0)), (c(8, 8), Some(100.0))]),
            Some(c(8, 8))
        );
        assert_eq!(best_config([(c(4, 4), None)]), None);
    }

    #[test]
    fn heatmap_masks_infeasible() {
        let table = [
            (BlockConfig::new(8, 8), Some(1.5)),
            (BlockConfig::new(32, 32), None),
        ];
        let h = Heatmap::from_table(&table).unwrap();
        assert_eq!(h.get(BlockConfig::new(32, 32)), Some(Cell::Masked));
        assert_eq!(h.get(BlockConfig::new(8, 32)), Some(Cell::Missing));
        assert_eq!(Heatmap::parse_csv(&h.to_csv()).unwrap(), h);
        let svg = h.to_svg("t");
        assert_eq!(svg.matches("<rect x=").count(), 2);
        assert!(svg.contains("url(#hatch)"));
    }

    #[test]
    fn single_entry_heatmap() {
        let h = Heatmap::from_table(&[(BlockConfig::new(16, 16), Some(3.0))]).unwrap();
        assert_eq!(h.cells, vec![vec![Cell::Value(3.0)]]);
        assert!(Heatmap::from_table(&[]).is_err());
    }

    #[test]
    fn viridis_ends() {
        assert_eq!(viridis(0.0), "#440154");
        assert_eq!(viridis(1.0), "#fde725");
    }

    #[test]
    fn infeasible_configs_are_recorded() {
        let w = Workload {
            scheme: "linear".into(),
            variant: "fused".into(),
            nx: 8,
            ny: 8,
            steps: 1,
        };
        let configs = [BlockConfig::new(4, 4), BlockConfig::new(64, 64)];
        let opts = TuneOptions {
            warmup: 1,
            reps: 3,
            metric: Metric::Throughput,
        };
        let res = autotune(&w, &configs, opts, None, |b| {
            if b.threads() > 1024 {
                Err(Error::Block("too many threads".into()))
            } else {
                Ok(TrafficStats::default())
            }
        })
        .unwrap();
        assert!(res.entries[0].record.is_some());
        assert!(res.entries[1].record.is_none());
        assert_eq!(res.best, Some(BlockConfig::new(4, 4)));
    }

    #[test]
    fn efficiency_needs_power() {
        let w = Workload {
            scheme: "x".into(),
            variant: "y".into(),
            nx: 1,
            ny: 1,
            steps: 1,
        };
        let opts = TuneOptions {
            metric: Metric::Efficiency,
            ..Default::default()
        };
        assert!(autotune(&w, &[BlockConfig::new(1, 1)], opts, None, |_| Ok(
            TrafficStats::default()
        ))
        .is_err());
    }
}
