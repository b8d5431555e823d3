mod common;

use stencilbench::config::{BathymetrySpec, InitialSpec};
use stencilbench::ctcs::swap_levels;
use stencilbench::grid::{check_cfl, max_stable_dt, total_mass};
use stencilbench::init::InitialCondition;
use stencilbench::{
    Bathymetry, BlockConfig, Boundary, Error, Executor, GridGeometry, LaunchSpec, MathMode, Scheme, SchemeKind,
    SimParams, SimState, Variant,
};

fn block() -> BlockConfig {
    BlockConfig::new(16, 16)
}

/// Surface `A cos(kx)` balanced by `hv` so that the C-grid Coriolis average
/// of `hv` cancels the discrete pressure gradient exactly in exact arithmetic.
#[test]
fn linear_geostrophic_balance_is_steady() {
    let (n, dx, depth, g, f, amp) = (32usize, 2000.0, 40.0, 9.81, 1e-4, 0.05);
    let geometry = GridGeometry::new(n, n, dx, dx, 2).unwrap();
    let bathy = Bathymetry::<f32>::flat(&geometry, Boundary::Periodic, depth).unwrap();
    let k = std::f64::consts::TAU / (n as f64 * dx);
    let x = |i: usize| (i as f64 + 0.5) * dx;
    let mut eta = Vec::new();
    let mut hv = Vec::new();
    for _ in 0..n {
        for i in 0..n {
            eta.push((amp * (k * x(i)).cos()) as f32);
            let grad = -(g * depth / f) * (2.0 / dx) * (k * dx / 2.0).tan() * amp * (k * x(i)).sin();
            hv.push(grad as f32);
        }
    }
    let hu = vec![0.0f32; n * n];
    let mut state = SimState::new(
        geometry,
        &bathy,
        SchemeKind::Linear.staggering(),
        Boundary::Periodic,
        1,
        &eta,
        &hu,
        &hv,
    )
    .unwrap();
    let dt = max_stable_dt(SchemeKind::Linear, &geometry, depth, g);
    let params = SimParams::new(g, f, dt, Boundary::Periodic).unwrap();
    let spec = LaunchSpec::new(block(), n, n, Vec::new(), MathMode::Precise);
    let scheme = Scheme::new(SchemeKind::Linear, Variant::Fused).unwrap();
    let scale_eta = state.eta.max_abs();
    let scale_q = state.hv.max_abs();
    for _ in 0..10 {
        let before = state.clone();
        scheme.step(&mut state, &params, &bathy, &spec, &Executor::default()).unwrap();
        assert!(state.eta.max_abs_diff(&before.eta) <= 1e-6 * scale_eta);
        assert!(state.hu.max_abs_diff(&before.hu) <= 1e-6 * scale_q);
        assert!(state.hv.max_abs_diff(&before.hv) <= 1e-6 * scale_q);
    }
}

#[test]
fn ctcs_runs_backwards() {
    let mut s = common::setup(SchemeKind::Nonlinear, Variant::Fused, 32, Boundary::Periodic, block());
    let exec = Executor::default();
    // leave the forward-Euler bootstrap behind first
    for _ in 0..3 {
        s.scheme.step(&mut s.state, &s.params, &s.bathy, &s.spec, &exec).unwrap();
    }
    let start = s.state.prev.clone().unwrap();
    s.scheme.step(&mut s.state, &s.params, &s.bathy, &s.spec, &exec).unwrap();
    swap_levels(&mut s.state).unwrap();
    let back = SimParams { dt: -s.params.dt, ..s.params };
    s.scheme.step(&mut s.state, &back, &s.bathy, &s.spec, &exec).unwrap();
    let scale = start.eta.max_abs().max(start.hu.max_abs()).max(start.hv.max_abs());
    let diff = s.state.levels().max_abs_diff(&start);
    assert!(diff <= 1e-6 * scale, "{diff} vs scale {scale}");
}

#[test]
fn linear_and_ctcs_agree_on_small_waves() {
    // at small amplitude the nonlinear terms are negligible
    let run = |kind| {
        let mut c = common::config(kind, Variant::Fused, 32, Boundary::Periodic);
        c.initial = InitialSpec::Named(InitialCondition::Bump { amplitude: 1e-3, radius: 0.15 });
        c.bathymetry = BathymetrySpec::Flat { depth: 50.0 };
        c.dt = stencilbench::config::TimeStep::Fixed(5.0);
        let mut s = c.setup::<f64>().unwrap();
        s.scheme.run(&mut s.state, &s.params, &s.bathy, &s.spec, &Executor::default(), 100).unwrap();
        s.state.eta
    };
    let a = run(SchemeKind::Linear);
    let b = run(SchemeKind::Nonlinear);
    assert!(a.max_abs_diff(&b) <= 0.05 * a.max_abs(), "{} vs {}", a.max_abs_diff(&b), a.max_abs());
}

#[test]
fn lake_at_rest_exact_for_all_schemes() {
    for kind in SchemeKind::ALL {
        for boundary in [Boundary::Periodic, Boundary::ClosedWall] {
            let mut c = common::config(kind, Variant::default_for(kind), 24, boundary);
            c.initial = InitialSpec::Named(InitialCondition::LakeAtRest);
            let mut s = c.setup::<f32>().unwrap();
            s.scheme.run(&mut s.state, &s.params, &s.bathy, &s.spec, &Executor::default(), 50).unwrap();
            assert_eq!(s.state.eta.max_abs(), 0.0, "{kind} {boundary}");
            assert_eq!(s.state.hu.max_abs(), 0.0, "{kind} {boundary}");
        }
    }
}

#[test]
fn hires_dam_break_conserves_mass_and_stays_wet() {
    let mut c = common::config(SchemeKind::HiRes, Variant::Stage(6), 64, Boundary::ClosedWall);
    c.initial = InitialSpec::Named(InitialCondition::Bump { amplitude: 5.0, radius: 0.1 });
    let mut s = c.setup::<f32>().unwrap();
    let v0 = common::volume(&s);
    let exec = Executor::default();
    for _ in 0..500 {
        s.scheme.step(&mut s.state, &s.params, &s.bathy, &s.spec, &exec).unwrap();
        assert!(s.state.min_depth(&s.bathy) > 0.0);
    }
    assert!((common::volume(&s) - v0).abs() / v0 <= 1e-5);
}

#[test]
fn deviation_mass_is_preserved_in_double_precision() {
    let mut c = common::config(SchemeKind::Linear, Variant::ThreeKernel, 32, Boundary::ClosedWall);
    c.initial = InitialSpec::Named(InitialCondition::Bump { amplitude: 1.0, radius: 0.2 });
    let mut s = c.setup::<f64>().unwrap();
    let m0 = total_mass(&s.state);
    s.scheme.run(&mut s.state, &s.params, &s.bathy, &s.spec, &Executor::default(), 200).unwrap();
    assert!((total_mass(&s.state) - m0).abs() <= 1e-9 * m0.abs());
}

#[test]
fn oversized_step_is_a_cfl_error() {
    let mut c = common::config(SchemeKind::Linear, Variant::Fused, 16, Boundary::Periodic);
    let s = c.setup::<f32>().unwrap();
    let limit = max_stable_dt(SchemeKind::Linear, &s.geometry, s.bathy.max_depth(), c.g);
    c.dt = stencilbench::config::TimeStep::Fixed(2.0 * limit);
    let mut s = c.setup::<f32>().unwrap();
    match check_cfl(SchemeKind::Linear, &s.state, &s.bathy, &s.params) {
        Err(Error::Cfl { max_dt, .. }) => assert_eq!(max_dt, limit),
        other => panic!("{other:?}"),
    }
    let r = s.scheme.step(&mut s.state, &s.params, &s.bathy, &s.spec, &Executor::default());
    assert!(matches!(r, Err(Error::Cfl { .. })));
}

#[test]
fn traffic_counts_ignore_block_shape() {
    for kind in SchemeKind::ALL {
        let totals: Vec<(u64, u64)> = [BlockConfig::new(16, 16), BlockConfig::new(8, 4), BlockConfig::new(24, 8)]
            .into_iter()
            .map(|b| {
                let mut s = common::setup(kind, Variant::default_for(kind), 32, Boundary::Periodic, b);
                let t = s.scheme.step(&mut s.state, &s.params, &s.bathy, &s.spec, &Executor::default()).unwrap();
                (t.streams_read, t.streams_written)
            })
            .collect();
        assert!(totals.windows(2).all(|w| w[0] == w[1]), "{kind}: {totals:?}");
    }
}

#[test]
fn hires_fast_math_stays_close_to_precise() {
    let run = |stage, math| {
        let mut s = common::setup(SchemeKind::HiRes, Variant::Stage(stage), 32, Boundary::Periodic, block());
        s.spec.math_mode = math;
        s.scheme.run(&mut s.state, &s.params, &s.bathy, &s.spec, &Executor::default(), 5).unwrap();
        s.state
    };
    let precise = run(0, MathMode::Precise);
    for stage in [0, 3, 6] {
        let fast = run(stage, MathMode::Fast);
        let scale = precise.eta.max_abs().max(precise.hu.max_abs()).max(precise.hv.max_abs());
        assert!(fast.levels().max_abs_diff(&precise.levels()) <= 1e-5 * scale);
    }
}
