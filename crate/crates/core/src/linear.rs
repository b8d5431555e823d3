//! Linearised shallow-water equations, forward-backward in time on the C-grid.
//!
//! One step updates `hu`, then `hv` from the new `hu`, then `eta` from both
//! new transports:
//!
//! ```text
//! hu' = hu + dt (f avg4(hv)  - g H_e (eta[i+1] - eta[i]) / dx)
//! hv' = hv - dt (f avg4(hu') + g H_n (eta[j+1] - eta[j]) / dy)
//! eta' = eta - dt ((hu'[i] - hu'[i-1]) / dx + (hv'[j] - hv'[j-1]) / dy)
//! ```
//!
//! The three-kernel variant launches one kernel per line with a boundary
//! fill in between. The fused variant does all three in one launch: each
//! block recomputes the `hu'`/`hv'` ring its `eta'` stencil needs, which is
//! why the scheme carries a two-cell halo. The depth `H` is constant and
//! treated as broadcast data, so it is not counted as a stream.

use crate::error::{Error, Result};
use crate::exec::{BlockCtx, Executor, InputDecl, Kernel, LaunchSpec, SharedBuffer, TrafficStats};
use crate::grid::{face_depth, Bathymetry, Field, FieldKind, SchemeKind, SimParams, SimState};
use crate::num::Real;
use crate::scheme::{check_step, Coef, Variant};

pub const HU_FLOPS: u64 = 14;
pub const HV_FLOPS: u64 = 14;
pub const ETA_FLOPS: u64 = 7;

#[inline]
fn avg4<T: Real>(a: T, b: T, c: T, d: T) -> T {
    ((a + b) + (c + d)) * T::lit(0.25)
}

/// `hu` update at an east face; `hv4` are the four surrounding north faces.
#[inline]
pub fn hu_update<T: Real>(c: &Coef<T>, hu: T, hv4: [T; 4], eta_w: T, eta_e: T, h_face: T) -> T {
    let cor = c.f * avg4(hv4[0], hv4[1], hv4[2], hv4[3]);
    hu + c.dt * (cor - c.g * h_face * (eta_e - eta_w) / c.dx)
}

/// `hv` update at a north face; `hu4` are the four surrounding (new) east faces.
#[inline]
pub fn hv_update<T: Real>(c: &Coef<T>, hv: T, hu4: [T; 4], eta_s: T, eta_n: T, h_face: T) -> T {
    let cor = c.f * avg4(hu4[0], hu4[1], hu4[2], hu4[3]);
    hv - c.dt * (cor + c.g * h_face * (eta_n - eta_s) / c.dy)
}

/// `eta` update from the (new) transports on the four cell faces.
#[inline]
pub fn eta_update<T: Real>(c: &Coef<T>, eta: T, hu_w: T, hu_e: T, hv_s: T, hv_n: T) -> T {
    eta - c.dt * ((hu_e - hu_w) / c.dx + (hv_n - hv_s) / c.dy)
}

/// Evaluates the `hu` line at face `(i, j)` through the accessors.
#[inline]
fn hu_at<T: Real>(
    c: &Coef<T>,
    eta: impl Fn(isize, isize) -> T,
    hu: impl Fn(isize, isize) -> T,
    hv: impl Fn(isize, isize) -> T,
    h_int: impl Fn(isize, isize) -> T,
    i: isize,
    j: isize,
) -> T {
    let hv4 = [hv(i, j), hv(i + 1, j), hv(i, j - 1), hv(i + 1, j - 1)];
    let h = face_depth(h_int(i, j), h_int(i, j - 1));
    hu_update(c, hu(i, j), hv4, eta(i, j), eta(i + 1, j), h)
}

#[inline]
fn hv_at<T: Real>(
    c: &Coef<T>,
    eta: impl Fn(isize, isize) -> T,
    hv: impl Fn(isize, isize) -> T,
    hu_new: impl Fn(isize, isize) -> T,
    h_int: impl Fn(isize, isize) -> T,
    i: isize,
    j: isize,
) -> T {
    let hu4 = [
        hu_new(i, j),
        hu_new(i - 1, j),
        hu_new(i, j + 1),
        hu_new(i - 1, j + 1),
    ];
    let h = face_depth(h_int(i, j), h_int(i - 1, j));
    hv_update(c, hv(i, j), hu4, eta(i, j), eta(i, j + 1), h)
}

struct HuKernel<T>(Coef<T>);
struct HvKernel<T>(Coef<T>);
struct EtaKernel<T>(Coef<T>);
struct FusedKernel<T>(Coef<T>);

impl<T: Real> Kernel<T> for HuKernel<T> {
    fn name(&self) -> &str {
        "linear_hu"
    }
    fn inputs(&self) -> Vec<InputDecl> {
        vec![
            InputDecl::new("eta", 1),
            InputDecl::new("hu", 0),
            InputDecl::new("hv", 1),
            InputDecl::broadcast("H", 1),
        ]
    }
    fn outputs(&self) -> Vec<&'static str> {
        vec!["hu"]
    }
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        let c = &self.0;
        let (xs, ys) = ctx.owned();
        let g = &ctx.global;
        for j in ys {
            for i in xs.clone() {
                let v = if c.wall_x(i) {
                    T::zero()
                } else {
                    ctx.flops += HU_FLOPS;
                    hu_at(
                        c,
                        |a, b| g.load(0, a, b),
                        |a, b| g.load(1, a, b),
                        |a, b| g.load(2, a, b),
                        |a, b| g.load(3, a, b),
                        i,
                        j,
                    )
                };
                ctx.out.store(0, i, j, v);
            }
        }
    }
}

impl<T: Real> Kernel<T> for HvKernel<T> {
    fn name(&self) -> &str {
        "linear_hv"
    }
    fn inputs(&self) -> Vec<InputDecl> {
        vec![
            InputDecl::new("eta", 1),
            InputDecl::new("hv", 0),
            InputDecl::new("hu", 1),
            InputDecl::broadcast("H", 1),
        ]
    }
    fn outputs(&self) -> Vec<&'static str> {
        vec!["hv"]
    }
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        let c = &self.0;
        let (xs, ys) = ctx.owned();
        let g = &ctx.global;
        for j in ys {
            for i in xs.clone() {
                let v = if c.wall_y(j) {
                    T::zero()
                } else {
                    ctx.flops += HV_FLOPS;
                    hv_at(
                        c,
                        |a, b| g.load(0, a, b),
                        |a, b| g.load(1, a, b),
                        |a, b| g.load(2, a, b),
                        |a, b| g.load(3, a, b),
                        i,
                        j,
                    )
                };
                ctx.out.store(0, i, j, v);
            }
        }
    }
}

impl<T: Real> Kernel<T> for EtaKernel<T> {
    fn name(&self) -> &str {
        "linear_eta"
    }
    fn inputs(&self) -> Vec<InputDecl> {
        vec![
            InputDecl::new("eta", 0),
            InputDecl::new("hu", 1),
            InputDecl::new("hv", 1),
        ]
    }
    fn outputs(&self) -> Vec<&'static str> {
        vec!["eta"]
    }
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        let c = &self.0;
        let (xs, ys) = ctx.owned();
        let g = &ctx.global;
        for j in ys {
            for i in xs.clone() {
                let v = eta_update(
                    c,
                    g.load(0, i, j),
                    g.load(1, i - 1, j),
                    g.load(1, i, j),
                    g.load(2, i, j - 1),
                    g.load(2, i, j),
                );
                ctx.flops += ETA_FLOPS;
                ctx.out.store(0, i, j, v);
            }
        }
    }
}

/// Shared tiles of the fused kernel: the three inputs with a two-cell ring
/// and the intermediate transports with a one-cell ring.
pub fn linear_shared_plan() -> Vec<SharedBuffer> {
    vec![
        SharedBuffer::new("eta_n", 1, 2),
        SharedBuffer::new("hu_n", 1, 2),
        SharedBuffer::new("hv_n", 1, 2),
        SharedBuffer::new("hu_new", 1, 1),
        SharedBuffer::new("hv_new", 1, 1),
    ]
}

/// Source row for a centred-in-y ghost row behind a closed wall.
#[inline]
fn mirror_row(j: isize, n: isize) -> isize {
    if j < 0 {
        -1 - j
    } else if j >= n {
        2 * n - 1 - j
    } else {
        j
    }
}

impl<T: Real> Kernel<T> for FusedKernel<T> {
    fn name(&self) -> &str {
        "linear_fused"
    }
    fn inputs(&self) -> Vec<InputDecl> {
        vec![
            InputDecl::new("eta", 2),
            InputDecl::new("hu", 2),
            InputDecl::new("hv", 2),
            InputDecl::broadcast("H", 2),
        ]
    }
    fn outputs(&self) -> Vec<&'static str> {
        vec!["eta", "hu", "hv"]
    }
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        let c = &self.0;
        let (x0, y0, w, h) = (ctx.x0, ctx.y0, ctx.w as isize, ctx.h as isize);
        let BlockCtx {
            global: g,
            shared,
            out,
            flops,
            ..
        } = ctx;
        let (inp, mid) = shared.split_at_mut(3);
        for b in -2..h + 2 {
            for a in -2..w + 2 {
                for k in 0..3 {
                    inp[k].set(0, a, b, g.load(k, x0 + a, y0 + b));
                }
            }
        }
        let (te, tu, tv) = (&inp[0], &inp[1], &inp[2]);
        let eta = |i: isize, j: isize| te.get(0, i - x0, j - y0);
        let hu = |i: isize, j: isize| tu.get(0, i - x0, j - y0);
        let hv = |i: isize, j: isize| tv.get(0, i - x0, j - y0);
        let h_int = |i: isize, j: isize| g.load(3, i, j);

        // hu' on the faces west of, inside and one row beyond the block
        let (hu_t, hv_t) = mid.split_at_mut(1);
        let (hu_t, hv_t) = (&mut hu_t[0], &mut hv_t[0]);
        for b in -1..=h {
            for a in -1..w {
                let (i, j) = (x0 + a, y0 + b);
                let v = if c.wall_x(i) {
                    T::zero()
                } else {
                    // behind a closed wall the ghost row is the mirror of the interior row
                    let jj = if c.closed { mirror_row(j, c.ny) } else { j };
                    *flops += HU_FLOPS;
                    hu_at(c, eta, hu, hv, h_int, i, jj)
                };
                hu_t.set(0, a, b, v);
                if a >= 0 && b >= 0 && b < h {
                    out.store(1, i, j, v);
                }
            }
        }
        let hu_new = |i: isize, j: isize| hu_t.get(0, i - x0, j - y0);
        for b in -1..h {
            for a in 0..w {
                let (i, j) = (x0 + a, y0 + b);
                let v = if c.wall_y(j) {
                    T::zero()
                } else {
                    *flops += HV_FLOPS;
                    hv_at(c, eta, hv, hu_new, h_int, i, j)
                };
                hv_t.set(0, a, b, v);
                if b >= 0 {
                    out.store(2, i, j, v);
                }
            }
        }
        for b in 0..h {
            for a in 0..w {
                let (i, j) = (x0 + a, y0 + b);
                let v = eta_update(
                    c,
                    eta(i, j),
                    hu_t.get(0, a - 1, b),
                    hu_t.get(0, a, b),
                    hv_t.get(0, a, b - 1),
                    hv_t.get(0, a, b),
                );
                *flops += ETA_FLOPS;
                out.store(0, i, j, v);
            }
        }
    }
}

/// Advances a linear-scheme state by one forward-backward step.
pub fn step_linear<T: Real>(
    state: &mut SimState<T>,
    params: &SimParams,
    bathy: &Bathymetry<T>,
    spec: &LaunchSpec,
    variant: Variant,
    exec: &Executor,
) -> Result<TrafficStats> {
    check_step(SchemeKind::Linear, state, params, bathy)?;
    let c = Coef::new(state, params, params.dt);
    let stag = state.staggering;
    let bc = params.boundary;
    let name = format!("linear-{variant}");
    let stats = match variant {
        Variant::ThreeKernel => {
            let spec = spec.with_inventory(vec![]);
            let mut hu: Field<T> = state.hu.clone();
            let s1 = exec.launch(
                &HuKernel(c),
                &spec,
                &[&state.eta, &state.hu, &state.hv, &bathy.h_int],
                &mut [&mut hu],
            )?;
            hu.fill_ghosts(FieldKind::Hu, stag, bc);
            let mut hv = state.hv.clone();
            let s2 = exec.launch(
                &HvKernel(c),
                &spec,
                &[&state.eta, &state.hv, &hu, &bathy.h_int],
                &mut [&mut hv],
            )?;
            hv.fill_ghosts(FieldKind::Hv, stag, bc);
            let mut eta = state.eta.clone();
            let s3 = exec.launch(
                &EtaKernel(c),
                &spec,
                &[&state.eta, &hu, &hv],
                &mut [&mut eta],
            )?;
            state.eta = eta;
            state.hu = hu;
            state.hv = hv;
            TrafficStats::combined(&name, [&s1, &s2, &s3])
        }
        Variant::Fused => {
            let spec = spec.with_inventory(linear_shared_plan());
            let (mut eta, mut hu, mut hv) = (state.eta.clone(), state.hu.clone(), state.hv.clone());
            let s = exec.launch(
                &FusedKernel(c),
                &spec,
                &[&state.eta, &state.hu, &state.hv, &bathy.h_int],
                &mut [&mut eta, &mut hu, &mut hv],
            )?;
            state.eta = eta;
            state.hu = hu;
            state.hv = hv;
            TrafficStats::combined(&name, [&s])
        }
        Variant::Stage(_) => {
            return Err(Error::Config(format!(
                "variant {variant} does not apply to the linear scheme"
            )))
        }
    };
    state.fill_ghosts(bc);
    state.t += params.dt;
    state.step_count += 1;
    Ok(stats)
}
