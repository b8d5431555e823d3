//! Host-side model of a GPU launch.
//!
//! A launch splits the output domain into equally sized blocks. Every block
//! runs independently with private shared tiles, may read global inputs only
//! within its declared stencil radius, and writes only the cells it owns.
//! Blocks at the domain edge are clipped: threads outside the domain are
//! masked. Global traffic, shared footprint and FLOPs are counted per block
//! and reduced in block-index order, so statistics and outputs are identical
//! for every schedule.

use std::cell::Cell;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::num::Real;

/// Threads per block along x and y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BlockConfig {
    pub width: usize,
    pub height: usize,
}

impl BlockConfig {
    pub const fn new(width: usize, height: usize) -> Self {
        Self { width, height }
    }

    pub fn threads(&self) -> usize {
        self.width * self.height
    }

    pub fn validate(&self, preset: &DevicePreset) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Block(format!(
                "{}x{} has an empty side",
                self.width, self.height
            )));
        }
        if self.threads() > preset.max_threads_per_block {
            return Err(Error::Block(format!(
                "{}x{} = {} threads exceeds the {} limit of {}",
                self.width,
                self.height,
                self.threads(),
                preset.name,
                preset.max_threads_per_block
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for BlockConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.width, self.height)
    }
}

/// Selects precise or approximate square root and reciprocal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MathMode {
    #[default]
    Precise,
    Fast,
}

impl std::str::FromStr for MathMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "precise" => Ok(Self::Precise),
            "fast" => Ok(Self::Fast),
            _ => Err(Error::Config(format!("unknown math mode '{s}'"))),
        }
    }
}

impl std::fmt::Display for MathMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Precise => "precise",
            Self::Fast => "fast",
        })
    }
}

/// Flushes subnormal inputs to zero, as fast-math hardware paths do.
#[inline]
fn ftz<T: Real>(x: T) -> T {
    if x != T::zero() && x.abs() < T::min_normal() {
        T::zero()
    } else {
        x
    }
}

/// Approximate `1/sqrt(x)`; relative error at most 2^-21 for normal inputs.
#[inline]
pub fn rsqrt_fast<T: Real>(x: T) -> T {
    let x = ftz(x);
    if x == T::zero() {
        return T::infinity();
    }
    if x < T::zero() || x.is_nan() {
        return T::nan();
    }
    if x.is_infinite() {
        return T::zero();
    }
    x.rsqrt_approx()
}

/// Approximate `sqrt(x)` as `x * rsqrt(x)`.
#[inline]
pub fn sqrt_fast<T: Real>(x: T) -> T {
    let x = ftz(x);
    if x == T::zero() {
        return T::zero();
    }
    if x.is_infinite() && x > T::zero() {
        return x;
    }
    x * rsqrt_fast(x)
}

/// Approximate `1/x` as `sign(x) * rsqrt(|x|)^2`.
#[inline]
pub fn recip_fast<T: Real>(x: T) -> T {
    if ftz(x) == T::zero() {
        return T::infinity().copysign(x);
    }
    let r = rsqrt_fast(x.abs());
    (r * r).copysign(x)
}

impl MathMode {
    #[inline]
    pub fn sqrt<T: Real>(self, x: T) -> T {
        match self {
            MathMode::Precise => x.sqrt(),
            MathMode::Fast => sqrt_fast(x),
        }
    }

    #[inline]
    pub fn rsqrt<T: Real>(self, x: T) -> T {
        match self {
            MathMode::Precise => T::one() / x.sqrt(),
            MathMode::Fast => rsqrt_fast(x),
        }
    }

    #[inline]
    pub fn recip<T: Real>(self, x: T) -> T {
        match self {
            MathMode::Precise => T::one() / x,
            MathMode::Fast => recip_fast(x),
        }
    }

    /// `a / b`, as a multiply by the approximate reciprocal in fast mode.
    #[inline]
    pub fn div<T: Real>(self, a: T, b: T) -> T {
        match self {
            MathMode::Precise => a / b,
            MathMode::Fast => a * recip_fast(b),
        }
    }
}

/// One shared-memory buffer of a kernel's per-block plan.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedBuffer {
    pub name: String,
    pub floats_per_cell: usize,
    pub halo: usize,
}

impl SharedBuffer {
    pub fn new(name: impl Into<String>, floats_per_cell: usize, halo: usize) -> Self {
        Self {
            name: name.into(),
            floats_per_cell,
            halo,
        }
    }

    pub fn bytes(&self, block: BlockConfig) -> usize {
        4 * self.floats_per_cell * (block.width + 2 * self.halo) * (block.height + 2 * self.halo)
    }
}

/// Block shape, grid extent, shared inventory and math mode of a launch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaunchSpec {
    pub block: BlockConfig,
    pub nx: usize,
    pub ny: usize,
    pub grid_w: usize,
    pub grid_h: usize,
    pub shared_inventory: Vec<SharedBuffer>,
    pub math_mode: MathMode,
}

impl LaunchSpec {
    pub fn new(
        block: BlockConfig,
        nx: usize,
        ny: usize,
        shared_inventory: Vec<SharedBuffer>,
        math_mode: MathMode,
    ) -> Self {
        Self {
            block,
            nx,
            ny,
            grid_w: nx.div_ceil(block.width.max(1)),
            grid_h: ny.div_ceil(block.height.max(1)),
            shared_inventory,
            math_mode,
        }
    }

    /// Same launch geometry with a different shared plan.
    pub fn with_inventory(&self, shared_inventory: Vec<SharedBuffer>) -> Self {
        Self {
            shared_inventory,
            ..self.clone()
        }
    }

    pub fn shared_floats_per_cell(&self) -> usize {
        self.shared_inventory
            .iter()
            .map(|b| b.floats_per_cell)
            .sum()
    }
}

/// Shared bytes per block: `sum 4 * floats * (w + 2 halo) * (h + 2 halo)`.
pub fn shared_accounting(spec: &LaunchSpec) -> usize {
    spec.shared_inventory
        .iter()
        .map(|b| b.bytes(spec.block))
        .sum()
}

/// Per-multiprocessor resource limits of a GPU model.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DevicePreset {
    pub name: String,
    pub max_threads_per_block: usize,
    pub warp_size: usize,
    pub max_warps_per_sm: usize,
    pub max_blocks_per_sm: usize,
    pub registers_per_sm: usize,
    pub register_alloc_granularity: usize,
    pub shared_per_sm_bytes: usize,
    pub shared_alloc_granularity_bytes: usize,
    pub shared_per_block_limit_bytes: usize,
}

impl Default for DevicePreset {
    /// A generic 48 KiB / 1024-thread device.
    fn default() -> Self {
        Self {
            name: "generic".into(),
            max_threads_per_block: 1024,
            warp_size: 32,
            max_warps_per_sm: 64,
            max_blocks_per_sm: 16,
            registers_per_sm: 65536,
            register_alloc_granularity: 256,
            shared_per_sm_bytes: 49152,
            shared_alloc_granularity_bytes: 256,
            shared_per_block_limit_bytes: 49152,
        }
    }
}

impl DevicePreset {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.max_threads_per_block,
            self.warp_size,
            self.max_warps_per_sm,
            self.max_blocks_per_sm,
            self.registers_per_sm,
            self.register_alloc_granularity,
            self.shared_per_sm_bytes,
            self.shared_alloc_granularity_bytes,
            self.shared_per_block_limit_bytes,
        ];
        if fields.iter().any(|&v| v == 0) {
            return Err(Error::Config(format!(
                "device preset '{}' has a zero field",
                self.name
            )));
        }
        Ok(())
    }
}

/// Instrumentation collected from one or more launches.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrafficStats {
    pub kernel: String,
    pub block_w: usize,
    pub block_h: usize,
    /// Distinct global arrays read (counted once per launch).
    pub streams_read: u64,
    /// Distinct global arrays written (counted once per launch).
    pub streams_written: u64,
    /// Individual global loads, including halo re-reads.
    pub cell_reads: u64,
    pub cell_writes: u64,
    pub flops: u64,
    pub shared_floats_per_cell: usize,
    pub shared_bytes_per_block: usize,
    pub launches: u64,
}

impl TrafficStats {
    pub const CSV_HEADER: &'static str =
        "kernel,block_w,block_h,streams_read,streams_written,flops,shared_bytes";

    pub fn stream_total(&self) -> u64 {
        self.streams_read + self.streams_written
    }

    /// Folds `other` into `self`; shared figures keep the largest footprint.
    pub fn absorb(&mut self, other: &TrafficStats) {
        self.streams_read += other.streams_read;
        self.streams_written += other.streams_written;
        self.cell_reads += other.cell_reads;
        self.cell_writes += other.cell_writes;
        self.flops += other.flops;
        self.launches += other.launches;
        self.shared_floats_per_cell = self
            .shared_floats_per_cell
            .max(other.shared_floats_per_cell);
        self.shared_bytes_per_block = self
            .shared_bytes_per_block
            .max(other.shared_bytes_per_block);
        if self.block_w == 0 {
            self.block_w = other.block_w;
            self.block_h = other.block_h;
        }
    }

    pub fn combined<'a>(
        name: &str,
        parts: impl IntoIterator<Item = &'a TrafficStats>,
    ) -> TrafficStats {
        let mut out = TrafficStats {
            kernel: name.to_string(),
            ..Default::default()
        };
        for p in parts {
            out.absorb(p);
        }
        out
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.kernel,
            self.block_w,
            self.block_h,
            self.streams_read,
            self.streams_written,
            self.flops,
            self.shared_bytes_per_block
        )
    }
}

/// A global input as seen by a kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InputDecl {
    pub name: &'static str,
    /// Largest offset from an owned cell at which the kernel reads this input.
    pub radius: usize,
    /// Whether reads of this input count as a global stream (broadcast data does not).
    pub counted: bool,
}

impl InputDecl {
    pub const fn new(name: &'static str, radius: usize) -> Self {
        Self {
            name,
            radius,
            counted: true,
        }
    }

    pub const fn broadcast(name: &'static str, radius: usize) -> Self {
        Self {
            name,
            radius,
            counted: false,
        }
    }
}

/// A stencil kernel executed once per block.
pub trait Kernel<T: Real>: Sync {
    fn name(&self) -> &str;
    fn inputs(&self) -> Vec<InputDecl>;
    fn outputs(&self) -> Vec<&'static str>;
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>);
}

/// Counted, radius-checked read access to the launch inputs.
pub struct GlobalView<'a, T> {
    inputs: &'a [&'a Field<T>],
    radii: &'a [usize],
    x0: isize,
    y0: isize,
    x1: isize,
    y1: isize,
    reads: Cell<u64>,
    touched: Cell<u64>,
}

impl<T: Real> GlobalView<'_, T> {
    /// Loads input `k` at global cell `(i, j)`.
    #[inline]
    pub fn load(&self, k: usize, i: isize, j: isize) -> T {
        let r = self.radii[k] as isize;
        debug_assert!(
            i >= self.x0 - r && i < self.x1 + r && j >= self.y0 - r && j < self.y1 + r,
            "read of input {k} at ({i}, {j}) beyond declared radius {r}"
        );
        self.reads.set(self.reads.get() + 1);
        self.touched.set(self.touched.get() | (1 << k));
        self.inputs[k].get(i, j)
    }
}

/// Private per-block shared tile addressed in block-local coordinates.
#[derive(Clone, Debug)]
pub struct SharedTile<T> {
    floats_per_cell: usize,
    halo: isize,
    pitch: usize,
    rows: usize,
    data: Vec<T>,
}

impl<T: Real> SharedTile<T> {
    fn new(buffer: &SharedBuffer, block: BlockConfig) -> Self {
        let pitch = block.width + 2 * buffer.halo;
        let rows = block.height + 2 * buffer.halo;
        Self {
            floats_per_cell: buffer.floats_per_cell,
            halo: buffer.halo as isize,
            pitch,
            rows,
            data: vec![T::nan(); buffer.floats_per_cell * pitch * rows],
        }
    }

    #[inline]
    fn index(&self, c: usize, a: isize, b: isize) -> usize {
        debug_assert!(c < self.floats_per_cell);
        debug_assert!(
            a >= -self.halo
                && b >= -self.halo
                && ((a + self.halo) as usize) < self.pitch
                && ((b + self.halo) as usize) < self.rows,
            "tile access ({a}, {b}) outside halo {}",
            self.halo
        );
        (c * self.rows + (b + self.halo) as usize) * self.pitch + (a + self.halo) as usize
    }

    #[inline]
    pub fn get(&self, c: usize, a: isize, b: isize) -> T {
        self.data[self.index(c, a, b)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, a: isize, b: isize, v: T) {
        let k = self.index(c, a, b);
        self.data[k] = v;
    }

    /// Read-only view of component `c` addressed in global cell indices.
    pub fn view(&self, c: usize, x0: isize, y0: isize) -> TileView<'_, T> {
        TileView {
            tile: self,
            c,
            x0,
            y0,
        }
    }
}

/// Component of a shared tile addressed by global cell index.
#[derive(Clone, Copy)]
pub struct TileView<'a, T> {
    tile: &'a SharedTile<T>,
    c: usize,
    x0: isize,
    y0: isize,
}

impl<T: Real> TileView<'_, T> {
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> T {
        self.tile.get(self.c, i - self.x0, j - self.y0)
    }
}

/// Owned-cell output staging of one block.
pub struct BlockOutput<T> {
    x0: isize,
    y0: isize,
    w: usize,
    h: usize,
    data: Vec<Vec<T>>,
    written: u64,
    writes: u64,
}

impl<T: Real> BlockOutput<T> {
    /// Stores output `k` at owned global cell `(i, j)`.
    #[inline]
    pub fn store(&mut self, k: usize, i: isize, j: isize, v: T) {
        let (a, b) = (i - self.x0, j - self.y0);
        assert!(
            a >= 0 && b >= 0 && (a as usize) < self.w && (b as usize) < self.h,
            "write to ({i}, {j}) outside the block's owned cells"
        );
        self.data[k][b as usize * self.w + a as usize] = v;
        self.written |= 1 << k;
        self.writes += 1;
    }
}

/// Everything a kernel sees while executing one block.
pub struct BlockCtx<'a, T> {
    /// Global index of the first owned cell.
    pub x0: isize,
    pub y0: isize,
    /// Owned extent after clipping at the domain edge.
    pub w: usize,
    pub h: usize,
    pub block: BlockConfig,
    pub math: MathMode,
    pub global: GlobalView<'a, T>,
    pub shared: Vec<SharedTile<T>>,
    pub out: BlockOutput<T>,
    pub flops: u64,
}

impl<T> BlockCtx<'_, T> {
    /// Half-open owned ranges in global coordinates.
    pub fn owned(&self) -> (std::ops::Range<isize>, std::ops::Range<isize>) {
        (
            self.x0..self.x0 + self.w as isize,
            self.y0..self.y0 + self.h as isize,
        )
    }
}

/// Order in which blocks are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schedule {
    Sequential,
    Reverse,
    /// Deterministic pseudo-random permutation.
    Shuffled(u64),
    /// Concurrent execution on the thread pool.
    Parallel,
}

struct BlockResult<T> {
    data: Vec<Vec<T>>,
    x0: isize,
    y0: isize,
    w: usize,
    h: usize,
    reads: u64,
    read_mask: u64,
    writes: u64,
    write_mask: u64,
    flops: u64,
}

/// Runs kernels under a device preset and block schedule.
#[derive(Clone)]
pub struct Executor {
    pub preset: DevicePreset,
    pub schedule: Schedule,
    pool: Option<Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Executor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Executor")
            .field("preset", &self.preset.name)
            .field("schedule", &self.schedule)
            .finish()
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::new(DevicePreset::default(), Schedule::Parallel)
    }
}

/// Environment variable capping block-level parallelism.
pub const THREADS_ENV: &str = "STENCILBENCH_THREADS";

impl Executor {
    pub fn new(preset: DevicePreset, schedule: Schedule) -> Self {
        let pool = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok())
            .map(Arc::new);
        Self {
            preset,
            schedule,
            pool,
        }
    }

    pub fn with_schedule(&self, schedule: Schedule) -> Self {
        Self {
            schedule,
            ..self.clone()
        }
    }

    /// Rejects launches the device could not run.
    pub fn check_resources(&self, spec: &LaunchSpec) -> Result<()> {
        spec.block.validate(&self.preset)?;
        let bytes = shared_accounting(spec);
        if bytes > self.preset.shared_per_block_limit_bytes {
            return Err(Error::LaunchRejected(format!(
                "{bytes} shared bytes per block exceeds the {} limit of {}",
                self.preset.name, self.preset.shared_per_block_limit_bytes
            )));
        }
        Ok(())
    }

    /// Executes `kernel` over the interior of `outputs`.
    pub fn launch<T: Real, K: Kernel<T> + ?Sized>(
        &self,
        kernel: &K,
        spec: &LaunchSpec,
        inputs: &[&Field<T>],
        outputs: &mut [&mut Field<T>],
    ) -> Result<TrafficStats> {
        self.check_resources(spec)?;
        let decls = kernel.inputs();
        let out_names = kernel.outputs();
        if decls.len() != inputs.len() || out_names.len() != outputs.len() {
            return Err(Error::LaunchRejected(format!(
                "kernel {} expects {} inputs and {} outputs, got {} and {}",
                kernel.name(),
                decls.len(),
                out_names.len(),
                inputs.len(),
                outputs.len()
            )));
        }
        if decls.len() > 64 || out_names.len() > 64 {
            return Err(Error::LaunchRejected(
                "more than 64 arrays in one launch".into(),
            ));
        }
        let (nx, ny) = (spec.nx, spec.ny);
        if outputs.iter().any(|o| o.nx() != nx || o.ny() != ny) {
            return Err(Error::LaunchRejected(
                "output extent differs from the launch domain".into(),
            ));
        }
        for (d, f) in decls.iter().zip(inputs) {
            if f.nx() != nx || f.ny() != ny {
                return Err(Error::LaunchRejected(format!(
                    "input {} extent differs from the launch domain",
                    d.name
                )));
            }
            if d.radius > f.halo() {
                return Err(Error::LaunchRejected(format!(
                    "stencil radius {} of input {} exceeds its halo {}",
                    d.radius,
                    d.name,
                    f.halo()
                )));
            }
        }
        let radii: Vec<usize> = decls.iter().map(|d| d.radius).collect();
        let block = spec.block;
        let n_blocks = spec.grid_w * spec.grid_h;
        let run = |idx: usize| -> BlockResult<T> {
            let (bx, by) = (idx % spec.grid_w, idx / spec.grid_w);
            let x0 = bx * block.width;
            let y0 = by * block.height;
            let w = block.width.min(nx - x0);
            let h = block.height.min(ny - y0);
            let (x0, y0) = (x0 as isize, y0 as isize);
            let mut ctx = BlockCtx {
                x0,
                y0,
                w,
                h,
                block,
                math: spec.math_mode,
                global: GlobalView {
                    inputs,
                    radii: &radii,
                    x0,
                    y0,
                    x1: x0 + w as isize,
                    y1: y0 + h as isize,
                    reads: Cell::new(0),
                    touched: Cell::new(0),
                },
                shared: spec
                    .shared_inventory
                    .iter()
                    .map(|b| SharedTile::new(b, block))
                    .collect(),
                out: BlockOutput {
                    x0,
                    y0,
                    w,
                    h,
                    data: vec![vec![T::nan(); w * h]; out_names.len()],
                    written: 0,
                    writes: 0,
                },
                flops: 0,
            };
            kernel.run_block(&mut ctx);
            BlockResult {
                data: ctx.out.data,
                x0,
                y0,
                w,
                h,
                reads: ctx.global.reads.get(),
                read_mask: ctx.global.touched.get(),
                writes: ctx.out.writes,
                write_mask: ctx.out.written,
                flops: ctx.flops,
            }
        };

        let mut results: Vec<Option<BlockResult<T>>> = (0..n_blocks).map(|_| None).collect();
        match self.schedule {
            Schedule::Sequential => {
                for idx in 0..n_blocks {
                    results[idx] = Some(run(idx));
                }
            }
            Schedule::Reverse => {
                for idx in (0..n_blocks).rev() {
                    results[idx] = Some(run(idx));
                }
            }
            Schedule::Shuffled(seed) => {
                let mut order: Vec<usize> = (0..n_blocks).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                for idx in order {
                    results[idx] = Some(run(idx));
                }
            }
            Schedule::Parallel => {
                let par = || {
                    (0..n_blocks)
                        .into_par_iter()
                        .map(|i| Some(run(i)))
                        .collect::<Vec<_>>()
                };
                results = match &self.pool {
                    Some(pool) => pool.install(par),
                    None => par(),
                };
            }
        }

        let mut stats = TrafficStats {
            kernel: kernel.name().to_string(),
            block_w: block.width,
            block_h: block.height,
            shared_floats_per_cell: spec.shared_floats_per_cell(),
            shared_bytes_per_block: shared_accounting(spec),
            launches: 1,
            ..Default::default()
        };
        let (mut read_mask, mut write_mask) = (0u64, 0u64);
        for r in results
            .into_iter()
            .map(|r| r.expect("every block executed"))
        {
            for (k, out) in outputs.iter_mut().enumerate() {
                for b in 0..r.h {
                    for a in 0..r.w {
                        let v = r.data[k][b * r.w + a];
                        if !v.is_nan() || r.write_mask & (1 << k) != 0 {
                            out.set(r.x0 + a as isize, r.y0 + b as isize, v);
                        }
                    }
                }
            }
            stats.cell_reads += r.reads;
            stats.cell_writes += r.writes;
            stats.flops += r.flops;
            read_mask |= r.read_mask;
            write_mask |= r.write_mask;
        }
        stats.streams_read = decls
            .iter()
            .enumerate()
            .filter(|(k, d)| d.counted && read_mask & (1 << k) != 0)
            .count() as u64;
        stats.streams_written = write_mask.count_ones() as u64;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    struct Copy;
    impl<T: Real> Kernel<T> for Copy {
        fn name(&self) -> &str {
            "copy"
        }
        fn inputs(&self) -> Vec<InputDecl> {
            vec![InputDecl::new("src", 0)]
        }
        fn outputs(&self) -> Vec<&'static str> {
            vec!["dst"]
        }
        fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
            let (xs, ys) = ctx.owned();
            for j in ys {
                for i in xs.clone() {
                    let v = ctx.global.load(0, i, j);
                    ctx.out.store(0, i, j, v);
                }
            }
        }
    }

    struct Laplacian;
    impl<T: Real> Kernel<T> for Laplacian {
        fn name(&self) -> &str {
            "laplacian"
        }
        fn inputs(&self) -> Vec<InputDecl> {
            vec![InputDecl::new("u", 1)]
        }
        fn outputs(&self) -> Vec<&'static str> {
            vec!["lap"]
        }
        fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
            // stage the block plus a one-cell ring in the shared tile
            let (xs, ys) = ctx.owned();
            let (w, h) = (ctx.w as isize, ctx.h as isize);
            for b in -1..h + 1 {
                for a in -1..w + 1 {
                    let v = ctx.global.load(0, ctx.x0 + a, ctx.y0 + b);
                    ctx.shared[0].set(0, a, b, v);
                }
            }
            let t = &ctx.shared[0];
            for j in ys {
                for i in xs.clone() {
                    let (a, b) = (i - ctx.x0, j - ctx.y0);
                    let v = t.get(0, a - 1, b)
                        + t.get(0, a + 1, b)
                        + t.get(0, a, b - 1)
                        + t.get(0, a, b + 1)
                        - T::lit(4.0) * t.get(0, a, b);
                    ctx.flops += 5;
                    ctx.out.store(0, i, j, v);
                }
            }
        }
    }

    fn spec(n: usize, block: BlockConfig, inv: Vec<SharedBuffer>) -> LaunchSpec {
        LaunchSpec::new(block, n, n, inv, MathMode::Precise)
    }

    fn random_field(n: usize, halo: usize, seed: u64) -> Field<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = Field::zeros(n, n, halo);
        let h = halo as isize;
        for j in -h..n as isize + h {
            for i in -h..n as isize + h {
                f.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        f
    }

    #[test]
    fn copy_kernel_counts_one_stream_each_way() {
        let src = random_field(8, 1, 1);
        let mut dst = Field::zeros(8, 8, 1);
        let st = Executor::default()
            .launch(
                &Copy,
                &spec(8, BlockConfig::new(4, 4), vec![]),
                &[&src],
                &mut [&mut dst],
            )
            .unwrap();
        assert_eq!(dst.interior(), src.interior());
        assert_eq!((st.streams_read, st.streams_written), (1, 1));
        assert_eq!(st.cell_reads, 64);
    }

    #[test]
    fn partial_edge_blocks_are_masked() {
        let src = random_field(8, 1, 2);
        let mut dst = Field::zeros(8, 8, 1);
        let st = Executor::default()
            .launch(
                &Copy,
                &spec(8, BlockConfig::new(3, 3), vec![]),
                &[&src],
                &mut [&mut dst],
            )
            .unwrap();
        assert!(dst.interior_bits_eq(&src));
        assert_eq!(st.cell_writes, 64);
        assert_eq!(st.cell_reads, 64);
    }

    #[test]
    fn laplacian_matches_nested_loop_for_any_block() {
        let u = random_field(16, 1, 3);
        let mut oracle = vec![0.0f32; 256];
        for j in 0..16isize {
            for i in 0..16isize {
                oracle[(j * 16 + i) as usize] =
                    u.get(i - 1, j) + u.get(i + 1, j) + u.get(i, j - 1) + u.get(i, j + 1)
                        - 4.0 * u.get(i, j);
            }
        }
        for block in [
            BlockConfig::new(8, 2),
            BlockConfig::new(16, 16),
            BlockConfig::new(5, 3),
        ] {
            for schedule in [
                Schedule::Sequential,
                Schedule::Reverse,
                Schedule::Parallel,
                Schedule::Shuffled(7),
            ] {
                let mut out = Field::zeros(16, 16, 1);
                let inv = vec![SharedBuffer::new("u", 1, 1)];
                Executor::new(DevicePreset::default(), schedule)
                    .launch(&Laplacian, &spec(16, block, inv), &[&u], &mut [&mut out])
                    .unwrap();
                let got = out.interior();
                assert!(
                    got.iter()
                        .zip(&oracle)
                        .all(|(a, b)| a.to_bits() == b.to_bits()),
                    "{block:?} {schedule:?}"
                );
            }
        }
    }

    #[test]
    fn radius_beyond_halo_rejected() {
        let u = random_field(8, 0, 1);
        let mut out = Field::zeros(8, 8, 0);
        let err = Executor::default()
            .launch(
                &Laplacian,
                &spec(8, BlockConfig::new(4, 4), vec![]),
                &[&u],
                &mut [&mut out],
            )
            .unwrap_err();
        assert!(matches!(err, Error::LaunchRejected(_)));
    }

    #[test]
    fn oversized_shared_plan_rejected() {
        let u = random_field(8, 1, 1);
        let mut out = Field::zeros(8, 8, 1);
        let inv = vec![SharedBuffer::new("big", 64, 2)];
        let err = Executor::default()
            .launch(
                &Laplacian,
                &spec(8, BlockConfig::new(32, 32), inv),
                &[&u],
                &mut [&mut out],
            )
            .unwrap_err();
        assert!(matches!(err, Error::LaunchRejected(_)));
        assert!(
            out.interior().iter().all(|&v| v == 0.0),
            "rejected launch must not write"
        );
    }

    #[test]
    fn too_many_threads_rejected() {
        let b = BlockConfig::new(64, 32);
        assert!(b.validate(&DevicePreset::default()).is_err());
    }

    #[test]
    fn shared_accounting_examples() {
        let b = BlockConfig::new(16, 16);
        assert_eq!(shared_accounting(&spec(64, b, vec![])), 0);
        assert_eq!(
            shared_accounting(&spec(64, b, vec![SharedBuffer::new("a", 1, 0)])),
            1024
        );
        assert_eq!(
            shared_accounting(&spec(64, b, vec![SharedBuffer::new("a", 3, 2)])),
            4 * 3 * 20 * 20
        );
    }

    #[test]
    fn precise_mode_is_std() {
        for x in [0.5f32, 2.0, 3.7, 1e-20, 1e20] {
            assert_eq!(MathMode::Precise.sqrt(x).to_bits(), x.sqrt().to_bits());
            assert_eq!(MathMode::Precise.recip(x).to_bits(), (1.0 / x).to_bits());
        }
    }

    #[test]
    fn fast_sqrt_of_four() {
        let v = sqrt_fast(4.0f32);
        assert!((v - 2.0).abs() <= 2.0 * 2f32.powi(-21));
    }

    #[test]
    fn fast_paths_flush_denormals() {
        let d = f32::MIN_POSITIVE / 4.0;
        assert_eq!(sqrt_fast(d), 0.0);
        assert!(rsqrt_fast(d).is_infinite());
        assert!(recip_fast(-d).is_infinite() && recip_fast(-d) < 0.0);
    }
}
