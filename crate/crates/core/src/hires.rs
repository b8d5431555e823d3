//! Well-balanced central-upwind finite-volume scheme with second-order
//! strong-stability-preserving Runge-Kutta time stepping.
//!
//! All variables are cell averages. Fluxes are written in terms of the
//! surface deviation so that the pressure term balances the bathymetry
//! source exactly:
//!
//! ```text
//! F(U) = (hu, hu u + g (eta^2 / 2 + H_face eta), hu v)
//! S    = (0, g eta (H_e - H_w) / dx + f h v, g eta (H_n - H_s) / dy - f h u)
//! ```
//!
//! Each cell is turned into reconstruction variables `R = (eta, u, v, h)`.
//! Face values come from limited slopes (generalised minmod, theta = 1.3) of
//! the geostrophic potentials `K = g eta - f int v dx` and
//! `L = g eta + f int u dy` and of the velocities, so a state in geostrophic
//! balance reconstructs without jumps. Fluxes are central-upwind.
//!
//! One kernel evaluates `Q + dt L(Q)` (and the RK2 average in the second
//! launch). Its per-block pipeline is load, reconstruct, slope, flux, sum.
//! The seven stages are storage plans for that pipeline: each drops a shared
//! buffer and either recomputes its contents where they are needed or
//! reuses another buffer. They never change the arithmetic, so all stages
//! produce bitwise identical results.

use crate::error::{Error, Result};
use crate::exec::{
    BlockCtx, Executor, InputDecl, Kernel, LaunchSpec, MathMode, SharedBuffer, TrafficStats,
};
use crate::grid::{
    face_depth, mid_depth, Bathymetry, Field, FieldKind, SchemeKind, SimParams, SimState,
};
use crate::num::Real;
use crate::scheme::{check_step, Coef};

pub const MAX_STAGE: u8 = 6;
pub const THETA: f64 = 1.3;

const FACE_DEPTH_FLOPS: u64 = 2;
const MID_DEPTH_FLOPS: u64 = 4;
const RECON_FLOPS: u64 = 3;
const SLOPE_FLOPS: u64 = 28;
const FLUX_FLOPS: u64 = 72;
const SOURCE_FLOPS: u64 = 14;
const SUM_FLOPS: u64 = 12 + 6;

// global inputs
const ETA: usize = 0;
const H_INT: usize = 3;
const H_MID: usize = 4;
const QN: usize = 5;

/// Shared-tile slots of a stage; equal indices mean a reused buffer.
#[derive(Clone, Copy, Debug)]
struct Slots {
    q: usize,
    r: usize,
    hm: Option<usize>,
    rhx: Option<usize>,
    rhy: Option<usize>,
    f: Option<usize>,
    g: Option<usize>,
    qx: usize,
    qy: usize,
}

impl Slots {
    fn q_reused(&self) -> bool {
        self.q == self.r
    }
}

fn layout(stage: u8) -> Result<(Vec<SharedBuffer>, Slots)> {
    if stage > MAX_STAGE {
        return Err(Error::Stage(stage as usize));
    }
    let mut inv = Vec::new();
    let mut push = |name: &str, floats: usize, halo: usize| {
        inv.push(SharedBuffer::new(name, floats, halo));
        inv.len() - 1
    };
    let (q, r) = if stage < 3 {
        let q = push("Q", 3, 2);
        (q, push("R", 4, 2))
    } else {
        let r = push("R", 4, 2);
        (r, r)
    };
    let hm = (stage < 1).then(|| push("Hm", 1, 2));
    let (rhx, rhy) = if stage < 2 {
        (Some(push("RHx", 1, 1)), Some(push("RHy", 1, 1)))
    } else {
        (None, None)
    };
    let f = (stage < 4).then(|| push("F", 3, 1));
    let g = (stage < 5).then(|| push("G", 3, 1));
    let (qx, qy) = if stage < 6 {
        let qx = push("Qx", 3, 1);
        (qx, push("Qy", 3, 1))
    } else {
        let qxy = push("Qxy", 3, 1);
        (qxy, qxy)
    };
    Ok((
        inv,
        Slots {
            q,
            r,
            hm,
            rhx,
            rhy,
            f,
            g,
            qx,
            qy,
        },
    ))
}

/// Shared-buffer inventory of `stage`; each stage drops one more buffer.
pub fn hires_shared_plan(stage: u8) -> Result<Vec<SharedBuffer>> {
    layout(stage).map(|(inv, _)| inv)
}

pub fn floats_per_cell(stage: u8) -> Result<usize> {
    Ok(hires_shared_plan(stage)?
        .iter()
        .map(|b| b.floats_per_cell)
        .sum())
}

/// FLOPs of the stage-6 run relative to stage 0.
pub fn recompute_overhead(stage0: &TrafficStats, stage6: &TrafficStats) -> Result<f64> {
    if stage0.launches != stage6.launches
        || stage0.cell_writes != stage6.cell_writes
        || stage0.flops == 0
    {
        return Err(Error::Measurement(
            "statistics come from different runs".into(),
        ));
    }
    Ok(stage6.flops as f64 / stage0.flops as f64)
}

/// Generalised minmod of the two one-sided differences.
#[inline]
pub fn minmod<T: Real>(theta: T, a: T, b: T) -> T {
    let (x, y, z) = (theta * a, (a + b) * T::lit(0.5), theta * b);
    let zero = T::zero();
    if x > zero && y > zero && z > zero {
        x.min(y).min(z)
    } else if x < zero && y < zero && z < zero {
        x.max(y).max(z)
    } else {
        zero
    }
}

/// Reconstructed state on one side of a face: surface, normal and tangential velocity.
#[derive(Clone, Copy, Debug)]
struct Side<T> {
    eta: T,
    un: T,
    ut: T,
}

struct HiResKernel<T> {
    c: Coef<T>,
    math: MathMode,
    theta: T,
    half: T,
    fdx: T,
    fdy: T,
    rg: T,
    slots: Slots,
    second: bool,
}

impl<T: Real> HiResKernel<T> {
    /// Central-upwind flux `(mass, normal momentum, tangential momentum)` through a face of depth `hf`.
    #[inline]
    fn flux(&self, hf: T, l: Side<T>, r: Side<T>, wall: bool) -> [T; 3] {
        let (g, m, half) = (self.c.g, self.math, self.half);
        let (hl, hr) = (l.eta + hf, r.eta + hf);
        let (hnl, htl) = (hl * l.un, hl * l.ut);
        let (hnr, htr) = (hr * r.un, hr * r.ut);
        let (cl, cr) = (m.sqrt(g * hl), m.sqrt(g * hr));
        let zero = T::zero();
        let ap = (l.un + cl).max(r.un + cr).max(zero);
        let am = (l.un - cl).min(r.un - cr).min(zero);
        let fl = [
            hnl,
            hnl * l.un + g * (half * (l.eta * l.eta) + hf * l.eta),
            hnl * l.ut,
        ];
        let fr = [
            hnr,
            hnr * r.un + g * (half * (r.eta * r.eta) + hf * r.eta),
            hnr * r.ut,
        ];
        let ul = [l.eta, hnl, htl];
        let ur = [r.eta, hnr, htr];
        let d = ap - am;
        if d == zero {
            return [zero; 3];
        }
        let inv = m.recip(d);
        let ab = ap * am;
        let mut out = [zero; 3];
        for k in 0..3 {
            out[k] = ((ap * fl[k] - am * fr[k]) + ab * (ur[k] - ul[k])) * inv;
        }
        if wall {
            out[0] = zero;
        }
        out
    }
}

/// Mutable pipeline state of one block.
struct Block<'c, 'a, T> {
    k: &'c HiResKernel<T>,
    ctx: &'c mut BlockCtx<'a, T>,
    w: isize,
    h: isize,
}

impl<T: Real> Block<'_, '_, T> {
    #[inline]
    fn gi(&self, a: isize) -> isize {
        self.ctx.x0 + a
    }

    #[inline]
    fn gj(&self, b: isize) -> isize {
        self.ctx.y0 + b
    }

    fn tile(&self, slot: usize, c: usize, a: isize, b: isize) -> T {
        self.ctx.shared[slot].get(c, a, b)
    }

    fn load(&mut self) {
        let s = self.k.slots;
        for b in -2..self.h + 2 {
            for a in -2..self.w + 2 {
                let (i, j) = (self.gi(a), self.gj(b));
                for c in 0..3 {
                    let v = self.ctx.global.load(ETA + c, i, j);
                    self.ctx.shared[s.q].set(c, a, b, v);
                }
                if let Some(hm) = s.hm {
                    let v = self.ctx.global.load(H_MID, i, j);
                    self.ctx.shared[hm].set(0, a, b, v);
                }
            }
        }
        if let Some(rhx) = s.rhx {
            for b in 0..self.h {
                for a in -1..self.w {
                    let v = self.face_x_depth(a, b);
                    self.ctx.shared[rhx].set(0, a, b, v);
                }
            }
        }
        if let Some(rhy) = s.rhy {
            for b in -1..self.h {
                for a in 0..self.w {
                    let v = self.face_y_depth(a, b);
                    self.ctx.shared[rhy].set(0, a, b, v);
                }
            }
        }
    }

    fn face_x_depth(&mut self, a: isize, b: isize) -> T {
        let (i, j) = (self.gi(a), self.gj(b));
        let g = &self.ctx.global;
        self.ctx.flops += FACE_DEPTH_FLOPS;
        face_depth(g.load(H_INT, i, j), g.load(H_INT, i, j - 1))
    }

    fn face_y_depth(&mut self, a: isize, b: isize) -> T {
        let (i, j) = (self.gi(a), self.gj(b));
        let g = &self.ctx.global;
        self.ctx.flops += FACE_DEPTH_FLOPS;
        face_depth(g.load(H_INT, i, j), g.load(H_INT, i - 1, j))
    }

    /// Depth of the east face of local cell `(a, b)`, stored or recomputed.
    fn rh_x(&mut self, a: isize, b: isize) -> T {
        match self.k.slots.rhx {
            Some(s) => self.tile(s, 0, a, b),
            None => self.face_x_depth(a, b),
        }
    }

    fn rh_y(&mut self, a: isize, b: isize) -> T {
        match self.k.slots.rhy {
            Some(s) => self.tile(s, 0, a, b),
            None => self.face_y_depth(a, b),
        }
    }

    fn reconstruct(&mut self) {
        let s = self.k.slots;
        let m = self.k.math;
        for b in -2..self.h + 2 {
            for a in -2..self.w + 2 {
                let hm = match s.hm {
                    Some(hm) => self.tile(hm, 0, a, b),
                    None => {
                        let (i, j) = (self.gi(a), self.gj(b));
                        let g = &self.ctx.global;
                        self.ctx.flops += MID_DEPTH_FLOPS;
                        mid_depth(
                            g.load(H_INT, i, j),
                            g.load(H_INT, i - 1, j),
                            g.load(H_INT, i, j - 1),
                            g.load(H_INT, i - 1, j - 1),
                        )
                    }
                };
                let (eta, hu, hv) = (
                    self.tile(s.q, 0, a, b),
                    self.tile(s.q, 1, a, b),
                    self.tile(s.q, 2, a, b),
                );
                let h = eta + hm;
                let r = [eta, m.div(hu, h), m.div(hv, h), h];
                self.ctx.flops += RECON_FLOPS;
                for (c, v) in r.into_iter().enumerate() {
                    self.ctx.shared[s.r].set(c, a, b, v);
                }
            }
        }
    }

    /// Limited slopes `(K, u, v)` along x for cells `-1..=w` of the owned rows.
    fn slopes_x(&mut self) {
        let (s, k) = (self.k.slots, self.k);
        let kdiff = |l: [T; 4], r: [T; 4]| k.c.g * (r[0] - l[0]) - k.fdx * ((l[2] + r[2]) * k.half);
        for b in 0..self.h {
            for a in -1..self.w + 1 {
                let (w, c, e) = (self.r(a - 1, b), self.r(a, b), self.r(a + 1, b));
                let sk = minmod(k.theta, kdiff(w, c), kdiff(c, e));
                let su = minmod(k.theta, c[1] - w[1], e[1] - c[1]);
                let sv = minmod(k.theta, c[2] - w[2], e[2] - c[2]);
                self.ctx.flops += SLOPE_FLOPS;
                for (comp, v) in [sk, su, sv].into_iter().enumerate() {
                    self.ctx.shared[s.qx].set(comp, a, b, v);
                }
            }
        }
    }

    /// Limited slopes `(L, u, v)` along y for rows `-1..=h` of the owned columns.
    fn slopes_y(&mut self) {
        let (s, k) = (self.k.slots, self.k);
        let ldiff = |l: [T; 4], r: [T; 4]| k.c.g * (r[0] - l[0]) + k.fdy * ((l[1] + r[1]) * k.half);
        for b in -1..self.h + 1 {
            for a in 0..self.w {
                let (so, c, n) = (self.r(a, b - 1), self.r(a, b), self.r(a, b + 1));
                let sl = minmod(k.theta, ldiff(so, c), ldiff(c, n));
                let su = minmod(k.theta, c[1] - so[1], n[1] - c[1]);
                let sv = minmod(k.theta, c[2] - so[2], n[2] - c[2]);
                self.ctx.flops += SLOPE_FLOPS;
                for (comp, v) in [sl, su, sv].into_iter().enumerate() {
                    self.ctx.shared[s.qy].set(comp, a, b, v);
                }
            }
        }
    }

    fn r(&self, a: isize, b: isize) -> [T; 4] {
        let s = self.k.slots.r;
        [
            self.tile(s, 0, a, b),
            self.tile(s, 1, a, b),
            self.tile(s, 2, a, b),
            self.tile(s, 3, a, b),
        ]
    }

    /// Face value on the east (`east`) or west side of cell `(a, b)` along x.
    fn side_x(&self, a: isize, b: isize, east: bool) -> Side<T> {
        let k = self.k;
        let [eta, u, v, _] = self.r(a, b);
        let q = self.k.slots.qx;
        let (sk, su, sv) = (
            self.tile(q, 0, a, b),
            self.tile(q, 1, a, b),
            self.tile(q, 2, a, b),
        );
        let d = k.half * ((sk + k.fdx * v) * k.rg);
        let (du, dv) = (k.half * su, k.half * sv);
        if east {
            Side {
                eta: eta + d,
                un: u + du,
                ut: v + dv,
            }
        } else {
            Side {
                eta: eta - d,
                un: u - du,
                ut: v - dv,
            }
        }
    }

    fn side_y(&self, a: isize, b: isize, north: bool) -> Side<T> {
        let k = self.k;
        let [eta, u, v, _] = self.r(a, b);
        let q = self.k.slots.qy;
        let (sl, su, sv) = (
            self.tile(q, 0, a, b),
            self.tile(q, 1, a, b),
            self.tile(q, 2, a, b),
        );
        let d = k.half * ((sl - k.fdy * u) * k.rg);
        let (du, dv) = (k.half * su, k.half * sv);
        if north {
            Side {
                eta: eta + d,
                un: v + dv,
                ut: u + du,
            }
        } else {
            Side {
                eta: eta - d,
                un: v - dv,
                ut: u - du,
            }
        }
    }

    /// Flux through the east face of local cell `(a, b)`, as `(eta, hu, hv)` components.
    fn flux_x(&mut self, a: isize, b: isize) -> [T; 3] {
        let hf = self.rh_x(a, b);
        let (l, r) = (self.side_x(a, b, true), self.side_x(a + 1, b, false));
        let wall = self.k.c.wall_x(self.gi(a));
        self.ctx.flops += FLUX_FLOPS;
        self.k.flux(hf, l, r, wall)
    }

    /// Flux through the north face of local cell `(a, b)`, as `(eta, hu, hv)` components.
    fn flux_y(&mut self, a: isize, b: isize) -> [T; 3] {
        let hf = self.rh_y(a, b);
        let (l, r) = (self.side_y(a, b, true), self.side_y(a, b + 1, false));
        let wall = self.k.c.wall_y(self.gj(b));
        self.ctx.flops += FLUX_FLOPS;
        let [mass, normal, tangential] = self.k.flux(hf, l, r, wall);
        [mass, tangential, normal]
    }

    fn stored_or_x(&mut self, a: isize, b: isize) -> [T; 3] {
        match self.k.slots.f {
            Some(s) => [
                self.tile(s, 0, a, b),
                self.tile(s, 1, a, b),
                self.tile(s, 2, a, b),
            ],
            None => self.flux_x(a, b),
        }
    }

    fn stored_or_y(&mut self, a: isize, b: isize) -> [T; 3] {
        match self.k.slots.g {
            Some(s) => [
                self.tile(s, 0, a, b),
                self.tile(s, 1, a, b),
                self.tile(s, 2, a, b),
            ],
            None => self.flux_y(a, b),
        }
    }

    fn run(&mut self) {
        let k = self.k;
        let s = k.slots;
        let (w, h) = (self.w, self.h);
        self.load();
        self.reconstruct();

        self.slopes_x();
        if let Some(f) = s.f {
            for b in 0..h {
                for a in -1..w {
                    let v = self.flux_x(a, b);
                    for (c, x) in v.into_iter().enumerate() {
                        self.ctx.shared[f].set(c, a, b, x);
                    }
                }
            }
        }
        // x flux differences stay in registers while the slope buffer may be reused
        let mut dfx = Vec::with_capacity((w * h) as usize);
        for b in 0..h {
            for a in 0..w {
                let (fe, fw) = (self.stored_or_x(a, b), self.stored_or_x(a - 1, b));
                dfx.push([fe[0] - fw[0], fe[1] - fw[1], fe[2] - fw[2]]);
            }
        }

        self.slopes_y();
        if let Some(g) = s.g {
            for b in -1..h {
                for a in 0..w {
                    let v = self.flux_y(a, b);
                    for (c, x) in v.into_iter().enumerate() {
                        self.ctx.shared[g].set(c, a, b, x);
                    }
                }
            }
        }

        let c = &k.c;
        for b in 0..h {
            for a in 0..w {
                let (gn, gs) = (self.stored_or_y(a, b), self.stored_or_y(a, b - 1));
                let dgy = [gn[0] - gs[0], gn[1] - gs[1], gn[2] - gs[2]];
                let (he, hw) = (self.rh_x(a, b), self.rh_x(a - 1, b));
                let (hn, hs) = (self.rh_y(a, b), self.rh_y(a, b - 1));
                let [eta, u, v, depth] = self.r(a, b);
                let src = [
                    T::zero(),
                    c.g * eta * (he - hw) / c.dx + c.f * (depth * v),
                    c.g * eta * (hn - hs) / c.dy - c.f * (depth * u),
                ];
                let (i, j) = (self.gi(a), self.gj(b));
                let q = if s.q_reused() {
                    let g = &self.ctx.global;
                    [
                        g.load(ETA, i, j),
                        g.load(ETA + 1, i, j),
                        g.load(ETA + 2, i, j),
                    ]
                } else {
                    [
                        self.tile(s.q, 0, a, b),
                        self.tile(s.q, 1, a, b),
                        self.tile(s.q, 2, a, b),
                    ]
                };
                let d = dfx[(b * w + a) as usize];
                for comp in 0..3 {
                    let l = (src[comp] - d[comp] / c.dx) - dgy[comp] / c.dy;
                    let next = q[comp] + c.dt * l;
                    let v = if k.second {
                        let qn = self.ctx.global.load(QN + comp, i, j);
                        k.half * qn + k.half * next
                    } else {
                        next
                    };
                    self.ctx.out.store(comp, i, j, v);
                }
                self.ctx.flops += SOURCE_FLOPS + SUM_FLOPS + if k.second { 9 } else { 0 };
            }
        }
    }
}

impl<T: Real> Kernel<T> for HiResKernel<T> {
    fn name(&self) -> &str {
        if self.second {
            "hires_rk2"
        } else {
            "hires_rk1"
        }
    }

    fn inputs(&self) -> Vec<InputDecl> {
        let mut v = vec![
            InputDecl::new("eta", 2),
            InputDecl::new("hu", 2),
            InputDecl::new("hv", 2),
            InputDecl::new("H_int", 3),
            InputDecl::new("H_mid", 2),
        ];
        if self.second {
            v.extend([
                InputDecl::new("eta_n", 0),
                InputDecl::new("hu_n", 0),
                InputDecl::new("hv_n", 0),
            ]);
        }
        v
    }

    fn outputs(&self) -> Vec<&'static str> {
        vec!["eta", "hu", "hv"]
    }

    fn run_block(&self, ctx: &mut BlockCtx<'_, T>) {
        let (w, h) = (ctx.w as isize, ctx.h as isize);
        Block { k: self, ctx, w, h }.run();
    }
}

/// One RK2 step: `Q* = Q + dt L(Q)`, then `Q' = Q/2 + (Q* + dt L(Q*))/2`.
pub fn rk2_step<T: Real>(
    state: &mut SimState<T>,
    params: &SimParams,
    bathy: &Bathymetry<T>,
    spec: &LaunchSpec,
    stage: u8,
    exec: &Executor,
) -> Result<TrafficStats> {
    let (inventory, slots) = layout(stage)?;
    check_step(SchemeKind::HiRes, state, params, bathy)?;
    let c = Coef::new(state, params, params.dt);
    let mut kernel = HiResKernel {
        c,
        math: spec.math_mode,
        theta: T::lit(THETA),
        half: T::lit(0.5),
        fdx: c.f * c.dx,
        fdy: c.f * c.dy,
        rg: T::one() / c.g,
        slots,
        second: false,
    };
    let spec = spec.with_inventory(inventory);
    let stag = state.staggering;
    let bc = params.boundary;

    let mut star: [Field<T>; 3] = [state.eta.clone(), state.hu.clone(), state.hv.clone()];
    let s1 = {
        let [e, u, v] = &mut star;
        exec.launch(
            &kernel,
            &spec,
            &[&state.eta, &state.hu, &state.hv, &bathy.h_int, &bathy.h_mid],
            &mut [e, u, v],
        )?
    };
    for (f, kind) in star
        .iter_mut()
        .zip([FieldKind::Eta, FieldKind::Hu, FieldKind::Hv])
    {
        f.fill_ghosts(kind, stag, bc);
    }
    kernel.second = true;
    let mut next = star.clone();
    let s2 = {
        let [e, u, v] = &mut next;
        exec.launch(
            &kernel,
            &spec,
            &[
                &star[0],
                &star[1],
                &star[2],
                &bathy.h_int,
                &bathy.h_mid,
                &state.eta,
                &state.hu,
                &state.hv,
            ],
            &mut [e, u, v],
        )?
    };
    let [e, u, v] = next;
    state.eta = e;
    state.hu = u;
    state.hv = v;
    state.fill_ghosts(bc);
    state.t += params.dt;
    state.step_count += 1;
    state.check_depth(bathy)?;
    Ok(TrafficStats::combined(
        &format!("hires-stage{stage}"),
        [&s1, &s2],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::{shared_accounting, BlockConfig};
    use crate::grid::{Boundary, GridGeometry};
    use crate::init::random_smooth_state;

    #[test]
    fn ladder_floats_per_cell() {
        let got: Vec<usize> = (0..=6).map(|s| floats_per_cell(s).unwrap()).collect();
        assert_eq!(got, vec![22, 21, 19, 16, 13, 10, 7]);
        assert!(matches!(hires_shared_plan(7), Err(Error::Stage(7))));
    }

    #[test]
    fn stage_three_reuses_q_for_r() {
        let plan = hires_shared_plan(3).unwrap();
        assert!(plan.iter().all(|b| b.name != "Q"));
        assert!(plan.iter().any(|b| b.name == "R" && b.floats_per_cell == 4));
    }

    #[test]
    fn stage_zero_bytes_at_16x16() {
        let spec = LaunchSpec::new(
            BlockConfig::new(16, 16),
            64,
            64,
            hires_shared_plan(0).unwrap(),
            MathMode::Precise,
        );
        // 8 floats with a two-cell ring, 14 with a one-cell ring
        assert_eq!(shared_accounting(&spec), 4 * (8 * 20 * 20 + 14 * 18 * 18));
    }

    #[test]
    fn minmod_cases() {
        assert_eq!(minmod(1.3, 1.0, 2.0), 1.3);
        assert_eq!(minmod(1.3, -1.0, -2.0), -1.3);
        assert_eq!(minmod(1.3, 1.0, -1.0), 0.0);
        assert_eq!(minmod(1.3, 0.0, 5.0), 0.0);
    }

    #[test]
    fn identical_stats_ratio_is_one() {
        let s = TrafficStats {
            flops: 100,
            launches: 2,
            cell_writes: 10,
            ..Default::default()
        };
        assert_eq!(recompute_overhead(&s, &s).unwrap(), 1.0);
        let other = TrafficStats {
            launches: 4,
            ..s.clone()
        };
        assert!(recompute_overhead(&s, &other).is_err());
    }

    fn setup(
        boundary: Boundary,
        n: usize,
        seed: u64,
    ) -> (SimState<f32>, Bathymetry<f32>, SimParams) {
        let geom = GridGeometry::new(n, n, 100.0, 100.0, 2).unwrap();
        let bathy = Bathymetry::random_smooth(&geom, boundary, seed, 20.0, 5.0).unwrap();
        let state =
            random_smooth_state(&geom, &bathy, SchemeKind::HiRes, boundary, seed, 0.2).unwrap();
        let dt =
            0.8 * crate::grid::max_stable_dt(SchemeKind::HiRes, &geom, bathy.max_depth(), 9.81);
        (
            state,
            bathy,
            SimParams::new(9.81, 1e-4, dt, boundary).unwrap(),
        )
    }

    #[test]
    fn stages_agree_bitwise() {
        for boundary in [Boundary::Periodic, Boundary::ClosedWall] {
            let (s0, bathy, params) = setup(boundary, 24, 3);
            let spec = LaunchSpec::new(BlockConfig::new(8, 8), 24, 24, vec![], MathMode::Precise);
            let exec = Executor::default();
            let mut reference = s0.clone();
            rk2_step(&mut reference, &params, &bathy, &spec, 0, &exec).unwrap();
            for stage in 1..=6 {
                let mut s = s0.clone();
                let st = rk2_step(&mut s, &params, &bathy, &spec, stage, &exec).unwrap();
                assert_eq!(st.launches, 2);
                assert!(
                    s.levels().bits_eq(&reference.levels()),
                    "stage {stage} {boundary}"
                );
            }
        }
    }

    #[test]
    fn recompute_never_reduces_flops() {
        let (s0, bathy, params) = setup(Boundary::Periodic, 16, 1);
        let spec = LaunchSpec::new(BlockConfig::new(16, 16), 16, 16, vec![], MathMode::Precise);
        let flops: Vec<u64> = (0..=6)
            .map(|stage| {
                rk2_step(
                    &mut s0.clone(),
                    &params,
                    &bathy,
                    &spec,
                    stage,
                    &Executor::default(),
                )
                .unwrap()
                .flops
            })
            .collect();
        assert!(flops.windows(2).all(|p| p[1] >= p[0]), "{flops:?}");
    }

    #[test]
    fn lake_at_rest_is_exact() {
        let geom = GridGeometry::new(16, 16, 100.0, 100.0, 2).unwrap();
        let bathy =
            Bathymetry::<f32>::random_smooth(&geom, Boundary::ClosedWall, 9, 30.0, 10.0).unwrap();
        let mut s =
            SimState::lake_at_rest(geom, &bathy, SchemeKind::HiRes, Boundary::ClosedWall).unwrap();
        let start = s.clone();
        let dt = crate::grid::max_stable_dt(SchemeKind::HiRes, &geom, bathy.max_depth(), 9.81);
        let params = SimParams::new(9.81, 0.0, dt, Boundary::ClosedWall).unwrap();
        let spec = LaunchSpec::new(BlockConfig::new(8, 8), 16, 16, vec![], MathMode::Precise);
        for _ in 0..20 {
            rk2_step(&mut s, &params, &bathy, &spec, 6, &Executor::default()).unwrap();
        }
        assert!(s.levels().bits_eq(&start.levels()));
    }

    #[test]
    fn small_halo_rejected() {
        let geom = GridGeometry::new(8, 8, 100.0, 100.0, 1).unwrap();
        let bathy = Bathymetry::<f32>::flat(&geom, Boundary::Periodic, 10.0).unwrap();
        let mut s =
            SimState::lake_at_rest(geom, &bathy, SchemeKind::HiRes, Boundary::Periodic).unwrap();
        let params = SimParams::new(9.81, 0.0, 1.0, Boundary::Periodic).unwrap();
        let spec = LaunchSpec::new(BlockConfig::new(8, 8), 8, 8, vec![], MathMode::Precise);
        assert!(matches!(
            rk2_step(&mut s, &params, &bathy, &spec, 0, &Executor::default()),
            Err(Error::Halo { .. })
        ));
    }
}
