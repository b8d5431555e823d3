#![allow(dead_code)]

use stencilbench::config::{BathymetrySpec, InitialSpec, RunConfig, Setup};
use stencilbench::init::InitialCondition;
use stencilbench::{BlockConfig, Boundary, SchemeKind, SimState, Variant};

pub fn config(kind: SchemeKind, variant: Variant, n: usize, boundary: Boundary) -> RunConfig {
    RunConfig {
        scheme: kind,
        variant,
        nx: n,
        ny: n,
        boundary,
        bathymetry: BathymetrySpec::Random {
            mean: 50.0,
            amplitude: 10.0,
            seed: 7,
        },
        initial: InitialSpec::Named(InitialCondition::Random { amplitude: 0.2 }),
        seed: 3,
        ..RunConfig::default()
    }
}

pub fn setup(
    kind: SchemeKind,
    variant: Variant,
    n: usize,
    boundary: Boundary,
    block: BlockConfig,
) -> Setup<f32> {
    let mut c = config(kind, variant, n, boundary);
    c.block = block;
    c.setup().unwrap()
}

/// Total water volume `sum(eta + H) dx dy`, in double precision.
pub fn volume(s: &Setup<f32>) -> f64 {
    let g = &s.geometry;
    let mut v = 0.0;
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            v += (s.state.eta.get(i, j) as f64 + s.bathy.h_mid.get(i, j) as f64) * g.dx * g.dy;
        }
    }
    v
}

pub fn fields_bits_eq(a: &SimState<f32>, b: &SimState<f32>) -> bool {
    a.eta.interior_bits_eq(&b.eta) && a.hu.interior_bits_eq(&b.hu) && a.hv.interior_bits_eq(&b.hv)
}
