//! Common stepping interface over the three discretisations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Executor, LaunchSpec, TrafficStats};
use crate::grid::{Bathymetry, Boundary, SchemeKind, SimParams, SimState};
use crate::num::Real;
use crate::{ctcs, hires, linear};

/// Kernel organisation of a step: separate or fused kernels for the
/// finite-difference schemes, or a shared-memory stage for the
/// high-resolution scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    ThreeKernel,
    Fused,
    Stage(u8),
}

impl Variant {
    pub fn default_for(kind: SchemeKind) -> Self {
        match kind {
            SchemeKind::HiRes => Variant::Stage(6),
            _ => Variant::Fused,
        }
    }

    pub fn check(self, kind: SchemeKind) -> Result<()> {
        match (kind, self) {
            (SchemeKind::HiRes, Variant::Stage(s)) if s <= 6 => Ok(()),
            (SchemeKind::HiRes, Variant::Stage(s)) => Err(Error::Stage(s as usize)),
            (SchemeKind::HiRes, v) => Err(Error::Config(format!(
                "variant {v} does not apply to the hires scheme"
            ))),
            (k, Variant::Stage(_)) => Err(Error::Config(format!(
                "stages only apply to the hires scheme, not {k}"
            ))),
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "three_kernel" | "three-kernel" | "unfused" => Ok(Self::ThreeKernel),
            "fused" => Ok(Self::Fused),
            _ => {
                let digits = s.strip_prefix("stage").unwrap_or(s);
                digits
                    .parse::<u8>()
                    .ok()
                    .filter(|&n| n <= 6)
                    .map(Self::Stage)
                    .ok_or_else(|| Error::Config(format!("unknown variant '{s}'")))
            }
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::ThreeKernel => f.write_str("three_kernel"),
            Variant::Fused => f.write_str("fused"),
            Variant::Stage(s) => write!(f, "stage{s}"),
        }
    }
}

/// A scheme together with its kernel organisation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scheme {
    pub kind: SchemeKind,
    pub variant: Variant,
}

impl Scheme {
    pub fn new(kind: SchemeKind, variant: Variant) -> Result<Self> {
        variant.check(kind)?;
        Ok(Self { kind, variant })
    }

    /// Advances `state` by one time step.
    pub fn step<T: Real>(
        &self,
        state: &mut SimState<T>,
        params: &SimParams,
        bathy: &Bathymetry<T>,
        spec: &LaunchSpec,
        exec: &Executor,
    ) -> Result<TrafficStats> {
        match (self.kind, self.variant) {
            (SchemeKind::Linear, v) => linear::step_linear(state, params, bathy, spec, v, exec),
            (SchemeKind::Nonlinear, v) => ctcs::step_ctcs(state, params, bathy, spec, v, exec),
            (SchemeKind::HiRes, Variant::Stage(s)) => {
                hires::rk2_step(state, params, bathy, spec, s, exec)
            }
            (SchemeKind::HiRes, v) => Err(Error::Config(format!(
                "variant {v} does not apply to the hires scheme"
            ))),
        }
    }

    /// Runs `steps` steps and returns the accumulated statistics.
    pub fn run<T: Real>(
        &self,
        state: &mut SimState<T>,
        params: &SimParams,
        bathy: &Bathymetry<T>,
        spec: &LaunchSpec,
        exec: &Executor,
        steps: u64,
    ) -> Result<TrafficStats> {
        let mut total = TrafficStats {
            kernel: format!("{}-{}", self.kind, self.variant),
            ..Default::default()
        };
        for _ in 0..steps {
            total.absorb(&self.step(state, params, bathy, spec, exec)?);
        }
        Ok(total)
    }
}

/// Physical constants and mesh spacing in the field scalar type.
#[derive(Clone, Copy, Debug)]
pub struct Coef<T> {
    pub g: T,
    pub f: T,
    pub dt: T,
    pub dx: T,
    pub dy: T,
    pub nx: isize,
    pub ny: isize,
    pub closed: bool,
}

impl<T: Real> Coef<T> {
    pub fn new(state: &SimState<T>, params: &SimParams, dt: f64) -> Self {
        let g = &state.geometry;
        Self {
            g: T::lit(params.g),
            f: T::lit(params.f),
            dt: T::lit(dt),
            dx: T::lit(g.dx),
            dy: T::lit(g.dy),
            nx: g.nx as isize,
            ny: g.ny as isize,
            closed: params.boundary == Boundary::ClosedWall,
        }
    }

    /// East-face index `i` is a closed wall.
    #[inline]
    pub fn wall_x(&self, i: isize) -> bool {
        self.closed && (i == -1 || i == self.nx - 1)
    }

    /// North-face index `j` is a closed wall.
    #[inline]
    pub fn wall_y(&self, j: isize) -> bool {
        self.closed && (j == -1 || j == self.ny - 1)
    }
}

/// Shared precondition checks of every step.
pub(crate) fn check_step<T: Real>(
    kind: SchemeKind,
    state: &SimState<T>,
    params: &SimParams,
    bathy: &Bathymetry<T>,
) -> Result<()> {
    if state.geometry.halo < kind.halo() {
        return Err(Error::Halo {
            required: kind.halo(),
            available: state.geometry.halo,
        });
    }
    if bathy.h_int.halo() < state.geometry.halo + 1 {
        return Err(Error::Halo {
            required: state.geometry.halo + 1,
            available: bathy.h_int.halo(),
        });
    }
    if state.staggering != kind.staggering() {
        return Err(Error::State(format!(
            "state layout {:?} does not match the {kind} scheme",
            state.staggering
        )));
    }
    crate::grid::check_cfl(kind, state, bathy, params)
}
