//! Nonlinear shallow-water equations, leapfrog (centred in time and space)
//! on the C-grid.
//!
//! Level `n+1` is computed from level `n-1` over `2 dt` with every spatial
//! operator evaluated at level `n`:
//!
//! ```text
//! eta' = eta_p - 2dt (dx(hu) + dy(hv))
//! hu'  = hu_p  - 2dt (dx(hu hu / h) + dy(hu hv / h) - f avg4(hv) + g (H_e + avg(eta)) dx(eta))
//! hv'  = hv_p  - 2dt (dx(hu hv / h) + dy(hv hv / h) + f avg4(hu) + g (H_n + avg(eta)) dy(eta))
//! ```
//!
//! Momentum fluxes `hu hu / h` live at cell centres (transport averaged from
//! the two faces), the cross flux `hu hv / h` at cell corners, where the
//! depth is the corner bathymetry plus the 4-cell average of `eta`. The first
//! step bootstraps with a forward-Euler step of length `dt`; there is no time
//! filter, so the scheme is exactly reversible up to rounding.

use crate::error::{Error, Result};
use crate::exec::{
    BlockCtx, Executor, InputDecl, Kernel, LaunchSpec, SharedBuffer, SharedTile, TileView,
    TrafficStats,
};
use crate::grid::{face_depth, mid_depth, Bathymetry, SchemeKind, SimParams, SimState};
use crate::num::Real;
use crate::scheme::{check_step, Coef, Variant};

pub const ETA_FLOPS: u64 = 7;
pub const HU_FLOPS: u64 = 63;
pub const HV_FLOPS: u64 = 63;

/// Four shared buffers: the three level-`n` variables and the depth.
pub fn ctcs_shared_plan() -> Vec<SharedBuffer> {
    vec![
        SharedBuffer::new("eta_n", 1, 1),
        SharedBuffer::new("hu_n", 1, 1),
        SharedBuffer::new("hv_n", 1, 1),
        SharedBuffer::new("H", 1, 1),
    ]
}

/// Level-`n` neighbourhood seen through the shared tiles.
#[derive(Clone, Copy)]
struct Level<'a, T> {
    eta: TileView<'a, T>,
    hu: TileView<'a, T>,
    hv: TileView<'a, T>,
    h_int: TileView<'a, T>,
}

impl<T: Real> Level<'_, T> {
    /// Total depth at the centre of cell `(i, j)`.
    #[inline]
    fn depth_centre(&self, i: isize, j: isize) -> T {
        let h = &self.h_int;
        mid_depth(
            h.at(i, j),
            h.at(i - 1, j),
            h.at(i, j - 1),
            h.at(i - 1, j - 1),
        ) + self.eta.at(i, j)
    }

    /// `hu hu / h` at the centre of cell `(i, j)`.
    #[inline]
    fn flux_xx(&self, i: isize, j: isize) -> T {
        let u = (self.hu.at(i - 1, j) + self.hu.at(i, j)) * T::lit(0.5);
        u * u / self.depth_centre(i, j)
    }

    /// `hv hv / h` at the centre of cell `(i, j)`.
    #[inline]
    fn flux_yy(&self, i: isize, j: isize) -> T {
        let v = (self.hv.at(i, j - 1) + self.hv.at(i, j)) * T::lit(0.5);
        v * v / self.depth_centre(i, j)
    }

    /// `hu hv / h` at the north-east corner of cell `(i, j)`.
    #[inline]
    fn flux_corner(&self, i: isize, j: isize) -> T {
        let e = &self.eta;
        let v = (self.hv.at(i, j) + self.hv.at(i + 1, j)) * T::lit(0.5);
        let u = (self.hu.at(i, j) + self.hu.at(i, j + 1)) * T::lit(0.5);
        let eta =
            ((e.at(i, j) + e.at(i + 1, j)) + (e.at(i, j + 1) + e.at(i + 1, j + 1))) * T::lit(0.25);
        v * u / (self.h_int.at(i, j) + eta)
    }

    fn eta_next(&self, c: &Coef<T>, eta_p: T, i: isize, j: isize) -> T {
        let div = (self.hu.at(i, j) - self.hu.at(i - 1, j)) / c.dx
            + (self.hv.at(i, j) - self.hv.at(i, j - 1)) / c.dy;
        eta_p - c.dt * div
    }

    fn hu_next(&self, c: &Coef<T>, hu_p: T, i: isize, j: isize) -> T {
        let (e, hv, h) = (&self.eta, &self.hv, &self.h_int);
        let adv_x = (self.flux_xx(i + 1, j) - self.flux_xx(i, j)) / c.dx;
        let adv_y = (self.flux_corner(i, j) - self.flux_corner(i, j - 1)) / c.dy;
        let cor = c.f
            * (((hv.at(i, j) + hv.at(i + 1, j)) + (hv.at(i, j - 1) + hv.at(i + 1, j - 1)))
                * T::lit(0.25));
        let depth =
            face_depth(h.at(i, j), h.at(i, j - 1)) + (e.at(i, j) + e.at(i + 1, j)) * T::lit(0.5);
        let press = c.g * depth * (e.at(i + 1, j) - e.at(i, j)) / c.dx;
        hu_p - c.dt * ((adv_x + adv_y) - cor + press)
    }

    fn hv_next(&self, c: &Coef<T>, hv_p: T, i: isize, j: isize) -> T {
        let (e, hu, h) = (&self.eta, &self.hu, &self.h_int);
        let adv_x = (self.flux_corner(i, j) - self.flux_corner(i - 1, j)) / c.dx;
        let adv_y = (self.flux_yy(i, j + 1) - self.flux_yy(i, j)) / c.dy;
        let cor = c.f
            * (((hu.at(i, j) + hu.at(i - 1, j)) + (hu.at(i, j + 1) + hu.at(i - 1, j + 1)))
                * T::lit(0.25));
        let depth =
            face_depth(h.at(i, j), h.at(i - 1, j)) + (e.at(i, j) + e.at(i, j + 1)) * T::lit(0.5);
        let press = c.g * depth * (e.at(i, j + 1) - e.at(i, j)) / c.dy;
        hv_p - c.dt * ((adv_x + adv_y) + cor + press)
    }
}

/// Copies inputs `src` into tiles `dst` over the block plus a one-cell ring.
fn stage_tiles<T: Real>(ctx: &mut BlockCtx<'_, T>, pairs: &[(usize, usize)]) {
    let (x0, y0, w, h) = (ctx.x0, ctx.y0, ctx.w as isize, ctx.h as isize);
    for &(src, dst) in pairs {
        for b in -1..h + 1 {
            for a in -1..w + 1 {
                let v = ctx.global.load(src, x0 + a, y0 + b);
                ctx.shared[dst].set(0, a, b, v);
            }
        }
    }
}

fn level<'a, T: Real>(tiles: &'a [SharedTile<T>], x0: isize, y0: isize) -> Level<'a, T> {
    Level {
        eta: tiles[0].view(0, x0, y0),
        hu: tiles[1].view(0, x0, y0),
        hv: tiles[2].view(0, x0, y0),
        h_int: tiles[3].view(0, x0, y0),
    }
}

struct EtaKernel<T>(Coef<T>);
struct HuKernel<T>(Coef<T>);
struct HvKernel<T>(Coef<T>);
struct FusedKernel<T>(Coef<T>);

impl<T: Real> Kernel<T> for EtaKernel<T> {
    fn name(&self) -> &str {
        "ctcs_eta"
    }
    fn inputs(&self) -> Vec<InputDecl> {
        vec![
            InputDecl::new("eta_p", 0),
            InputDecl::new("hu", 1),
            InputDecl::new("hv", 1),
        ]
    }
    fn outputs(&self) -> Vec<&'static str> {
        vec!["eta"]
    }
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        stage_tiles(ctx, &[(1, 0), (2, 1)]);
        let c = &self.0;
        let (xs, ys) = ctx.owned();
        let (hu, hv) = (
            ctx.shared[0].view(0, ctx.x0, ctx.y0),
            ctx.shared[1].view(0, ctx.x0, ctx.y0),
        );
        for j in ys {
            for i in xs.clone() {
                let div =
                    (hu.at(i, j) - hu.at(i - 1, j)) / c.dx + (hv.at(i, j) - hv.at(i, j - 1)) / c.dy;
                let v = ctx.global.load(0, i, j) - c.dt * div;
                ctx.flops += ETA_FLOPS;
                ctx.out.store(0, i, j, v);
            }
        }
    }
}

fn momentum_inputs(prev: &'static str) -> Vec<InputDecl> {
    vec![
        InputDecl::new(prev, 0),
        InputDecl::new("eta", 1),
        InputDecl::new("hu", 1),
        InputDecl::new("hv", 1),
        InputDecl::new("H", 1),
    ]
}

impl<T: Real> Kernel<T> for HuKernel<T> {
    fn name(&self) -> &str {
        "ctcs_hu"
    }
    fn inputs(&self) -> Vec<InputDecl> {
        momentum_inputs("hu_p")
    }
    fn outputs(&self) -> Vec<&'static str> {
        vec!["hu"]
    }
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        stage_tiles(ctx, &[(1, 0), (2, 1), (3, 2), (4, 3)]);
        let c = &self.0;
        let (xs, ys) = ctx.owned();
        let lv = level(&ctx.shared, ctx.x0, ctx.y0);
        for j in ys {
            for i in xs.clone() {
                let v = if c.wall_x(i) {
                    T::zero()
                } else {
                    ctx.flops += HU_FLOPS;
                    lv.hu_next(c, ctx.global.load(0, i, j), i, j)
                };
                ctx.out.store(0, i, j, v);
            }
        }
    }
}

impl<T: Real> Kernel<T> for HvKernel<T> {
    fn name(&self) -> &str {
        "ctcs_hv"
    }
    fn inputs(&self) -> Vec<InputDecl> {
        momentum_inputs("hv_p")
    }
    fn outputs(&self) -> Vec<&'static str> {
        vec!["hv"]
    }
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        stage_tiles(ctx, &[(1, 0), (2, 1), (3, 2), (4, 3)]);
        let c = &self.0;
        let (xs, ys) = ctx.owned();
        let lv = level(&ctx.shared, ctx.x0, ctx.y0);
        for j in ys {
            for i in xs.clone() {
                let v = if c.wall_y(j) {
                    T::zero()
                } else {
                    ctx.flops += HV_FLOPS;
                    lv.hv_next(c, ctx.global.load(0, i, j), i, j)
                };
                ctx.out.store(0, i, j, v);
            }
        }
    }
}

impl<T: Real> Kernel<T> for FusedKernel<T> {
    fn name(&self) -> &str {
        "ctcs_fused"
    }
    fn inputs(&self) -> Vec<InputDecl> {
        vec![
            InputDecl::new("eta_p", 0),
            InputDecl::new("hu_p", 0),
            InputDecl::new("hv_p", 0),
            InputDecl::new("eta", 1),
            InputDecl::new("hu", 1),
            InputDecl::new("hv", 1),
            InputDecl::new("H", 1),
        ]
    }
    fn outputs(&self) -> Vec<&'static str> {
        vec!["eta", "hu", "hv"]
    }
    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        stage_tiles(ctx, &[(3, 0), (4, 1), (5, 2), (6, 3)]);
        let c = &self.0;
        let (xs, ys) = ctx.owned();
        let lv = level(&ctx.shared, ctx.x0, ctx.y0);
        for j in ys {
            for i in xs.clone() {
                let g = &ctx.global;
                let eta = lv.eta_next(c, g.load(0, i, j), i, j);
                ctx.flops += ETA_FLOPS;
                let hu = if c.wall_x(i) {
                    T::zero()
                } else {
                    ctx.flops += HU_FLOPS;
                    lv.hu_next(c, g.load(1, i, j), i, j)
                };
                let hv = if c.wall_y(j) {
                    T::zero()
                } else {
                    ctx.flops += HV_FLOPS;
                    lv.hv_next(c, g.load(2, i, j), i, j)
                };
                ctx.out.store(0, i, j, eta);
                ctx.out.store(1, i, j, hu);
                ctx.out.store(2, i, j, hv);
            }
        }
    }
}

/// Swaps levels `n` and `n-1`; with a negated `dt` the next step runs backwards.
pub fn swap_levels<T: Real>(state: &mut SimState<T>) -> Result<()> {
    let prev = state
        .prev
        .take()
        .ok_or_else(|| Error::State("leapfrog state has no previous level".into()))?;
    let cur = state.levels();
    state.set_levels(prev);
    state.prev = Some(cur);
    Ok(())
}

/// Advances a two-level state by one leapfrog step.
pub fn step_ctcs<T: Real>(
    state: &mut SimState<T>,
    params: &SimParams,
    bathy: &Bathymetry<T>,
    spec: &LaunchSpec,
    variant: Variant,
    exec: &Executor,
) -> Result<TrafficStats> {
    check_step(SchemeKind::Nonlinear, state, params, bathy)?;
    let Some(prev) = state.prev.as_ref() else {
        return Err(Error::State("leapfrog step needs two time levels".into()));
    };
    // first step: forward Euler from the initial level over dt
    let bootstrap = state.step_count == 0;
    let (prev, span) = if bootstrap {
        (state.levels(), params.dt)
    } else {
        (prev.clone(), 2.0 * params.dt)
    };
    let c = Coef::new(state, params, span);
    let name = format!("nonlinear-{variant}");
    let (mut eta, mut hu, mut hv) = (state.eta.clone(), state.hu.clone(), state.hv.clone());
    let (en, un, vn, h) = (&state.eta, &state.hu, &state.hv, &bathy.h_int);
    let stats = match variant {
        Variant::ThreeKernel => {
            let s1 = exec.launch(
                &EtaKernel(c),
                &spec.with_inventory(ctcs_shared_plan()[1..3].to_vec()),
                &[&prev.eta, un, vn],
                &mut [&mut eta],
            )?;
            let plan = spec.with_inventory(ctcs_shared_plan());
            let s2 = exec.launch(
                &HuKernel(c),
                &plan,
                &[&prev.hu, en, un, vn, h],
                &mut [&mut hu],
            )?;
            let s3 = exec.launch(
                &HvKernel(c),
                &plan,
                &[&prev.hv, en, un, vn, h],
                &mut [&mut hv],
            )?;
            TrafficStats::combined(&name, [&s1, &s2, &s3])
        }
        Variant::Fused => {
            let plan = spec.with_inventory(ctcs_shared_plan());
            let s = exec.launch(
                &FusedKernel(c),
                &plan,
                &[&prev.eta, &prev.hu, &prev.hv, en, un, vn, h],
                &mut [&mut eta, &mut hu, &mut hv],
            )?;
            TrafficStats::combined(&name, [&s])
        }
        Variant::Stage(_) => {
            return Err(Error::Config(format!(
                "variant {variant} does not apply to the nonlinear scheme"
            )))
        }
    };
    let cur = state.levels();
    state.eta = eta;
    state.hu = hu;
    state.hv = hv;
    state.prev = Some(cur);
    state.fill_ghosts(params.boundary);
    state.t += params.dt;
    state.step_count += 1;
    Ok(stats)
}
