//! Escape-time Mandelbrot renderer: a compute-bound kernel whose per-pixel
//! work varies wildly across a block.

use std::io::Write;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exec::{
    BlockConfig, BlockCtx, Executor, InputDecl, Kernel, LaunchSpec, MathMode, TrafficStats,
};
use crate::grid::Field;

pub const DEFAULT_CENTER: Complex64 = Complex64::new(-0.75, 0.1);
pub const DEFAULT_ZOOMS: usize = 50;
pub const DEFAULT_ITERATIONS: u32 = 5000;
/// Width and height of the first frame, `[-2, 1] x [-1.5, 1.5]`.
pub const START_EXTENT: f64 = 3.0;
pub const ZOOM_FACTOR: f64 = 0.5;

/// Multiply-adds and the magnitude test of one iteration.
const FLOPS_PER_ITERATION: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexExtent {
    pub center: Complex64,
    pub width: f64,
    pub height: f64,
    pub nx: usize,
    pub ny: usize,
}

impl ComplexExtent {
    pub fn new(center: Complex64, width: f64, height: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) || nx == 0 || ny == 0 {
            return Err(Error::Geometry(format!(
                "invalid extent {width}x{height} at {nx}x{ny} pixels"
            )));
        }
        Ok(Self {
            center,
            width,
            height,
            nx,
            ny,
        })
    }

    /// The `[-2, 1] x [-1.5, 1.5]` overview.
    pub fn overview(nx: usize, ny: usize) -> Result<Self> {
        Self::new(
            Complex64::new(-0.5, 0.0),
            START_EXTENT,
            START_EXTENT,
            nx,
            ny,
        )
    }

    /// Centre of pixel `(i, j)`; row 0 is the lowest imaginary part.
    ///
    /// Offsets are formed from an exact odd integer so that mirrored pixels
    /// get exactly negated offsets.
    pub fn pixel(&self, i: usize, j: usize) -> Complex64 {
        let ox = (2.0 * i as f64 + 1.0 - self.nx as f64) / (2.0 * self.nx as f64) * self.width;
        let oy = (2.0 * j as f64 + 1.0 - self.ny as f64) / (2.0 * self.ny as f64) * self.height;
        Complex64::new(self.center.re + ox, self.center.im + oy)
    }

    pub fn conj(&self) -> Self {
        Self {
            center: self.center.conj(),
            ..*self
        }
    }
}

/// Iterates `z <- z^2 + c` from zero while `|z| < 2` and `n < max_iterations`.
pub fn escape(c: Complex64, max_iterations: u32) -> (u32, Complex64) {
    let mut z = Complex64::new(0.0, 0.0);
    let mut n = 0;
    while z.norm_sqr() < 4.0 && n < max_iterations {
        z = z * z + c;
        n += 1;
    }
    (n, z)
}

/// Continuous escape index `n + 1 - log2(ln |z|)`; interior points keep `n`.
pub fn smooth_index(n: u32, z: Complex64, max_iterations: u32) -> f64 {
    if n >= max_iterations {
        return n as f64;
    }
    n as f64 + 1.0 - z.norm().ln().log2()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeResult {
    pub nx: usize,
    pub ny: usize,
    pub max_iterations: u32,
    pub iterations: Vec<u32>,
    pub smooth: Vec<f64>,
}

impl EscapeResult {
    pub fn total_iterations(&self) -> u64 {
        self.iterations.iter().map(|&n| n as u64).sum()
    }

    /// Binary greymap of the iteration counts, top row first.
    pub fn write_pgm(&self, mut w: impl Write) -> Result<()> {
        let maxval = self.max_iterations.clamp(1, 65535);
        write!(w, "P5\n{} {}\n{}\n", self.nx, self.ny, maxval)?;
        let mut bytes = Vec::with_capacity(self.nx * self.ny * 2);
        for j in (0..self.ny).rev() {
            for &n in &self.iterations[j * self.nx..(j + 1) * self.nx] {
                let v = n.min(maxval);
                if maxval < 256 {
                    bytes.push(v as u8);
                } else {
                    bytes.extend_from_slice(&(v as u16).to_be_bytes());
                }
            }
        }
        w.write_all(&bytes)?;
        Ok(())
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["i", "j", "iterations", "smooth"])?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = j * self.nx + i;
                out.write_record([
                    i.to_string(),
                    j.to_string(),
                    self.iterations[k].to_string(),
                    format!("{:?}", self.smooth[k]),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

struct EscapeKernel {
    extent: ComplexExtent,
    max_iterations: u32,
}

impl Kernel<f64> for EscapeKernel {
    fn name(&self) -> &str {
        "mandelbrot"
    }

    fn inputs(&self) -> Vec<InputDecl> {
        Vec::new()
    }

    fn outputs(&self) -> Vec<&'static str> {
        vec!["iterations", "smooth"]
    }

    fn run_block(&self, ctx: &mut BlockCtx<'_, f64>) {
        let (xs, ys) = ctx.owned();
        for j in ys {
            for i in xs.clone() {
                let c = self.extent.pixel(i as usize, j as usize);
                let (n, z) = escape(c, self.max_iterations);
                ctx.flops += FLOPS_PER_ITERATION * n as u64;
                ctx.out.store(0, i, j, n as f64);
                ctx.out
                    .store(1, i, j, smooth_index(n, z, self.max_iterations));
            }
        }
    }
}

/// Renders one frame with one thread per pixel.
pub fn render(
    extent: &ComplexExtent,
    max_iterations: u32,
    block: BlockConfig,
    exec: &Executor,
) -> Result<(EscapeResult, TrafficStats)> {
    if max_iterations == 0 {
        return Err(Error::Config("max_iterations must be at least 1".into()));
    }
    let (nx, ny) = (extent.nx, extent.ny);
    let spec = LaunchSpec::new(block, nx, ny, Vec::new(), MathMode::Precise);
    let kernel = EscapeKernel {
        extent: *extent,
        max_iterations,
    };
    let mut iters = Field::<f64>::zeros(nx, ny, 0);
    let mut smooth = Field::<f64>::zeros(nx, ny, 0);
    let stats = exec.launch(&kernel, &spec, &[], &mut [&mut iters, &mut smooth])?;
    let result = EscapeResult {
        nx,
        ny,
        max_iterations,
        iterations: iters.interior().into_iter().map(|v| v as u32).collect(),
        smooth: smooth.interior(),
    };
    Ok((result, stats))
}

/// Frames of a geometric zoom onto `center`, starting at the overview size.
#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub frames: Vec<ComplexExtent>,
    pub max_iterations: u32,
}

pub fn zoom_workload(
    center: Complex64,
    zooms: usize,
    max_iterations: u32,
    nx: usize,
    ny: usize,
) -> Result<Workload> {
    if zooms == 0 {
        return Err(Error::Config("at least one zoom is required".into()));
    }
    let mut frames = Vec::with_capacity(zooms);
    let mut size = START_EXTENT;
    for _ in 0..zooms {
        frames.push(ComplexExtent::new(center, size, size, nx, ny)?);
        size *= ZOOM_FACTOR;
    }
    Ok(Workload {
        frames,
        max_iterations,
    })
}

pub fn default_workload(nx: usize, ny: usize) -> Result<Workload> {
    zoom_workload(DEFAULT_CENTER, DEFAULT_ZOOMS, DEFAULT_ITERATIONS, nx, ny)
}
