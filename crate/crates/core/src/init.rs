//! Initial conditions.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Bathymetry, Boundary, GridGeometry, SchemeKind, SimState};
use crate::num::Real;

/// Named initial states selectable from a run configuration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum InitialCondition {
    /// Flat surface, no transport.
    LakeAtRest,
    /// Gaussian surface bump of the given height, radius as a fraction of the domain width.
    Bump { amplitude: f64, radius: f64 },
    /// Smooth random surface and velocity modes.
    Random { amplitude: f64 },
    /// Standing wave `A cos(2 pi m x / L)` along x.
    Wave { amplitude: f64, modes: u32 },
}

impl InitialCondition {
    pub fn parse(name: &str, amplitude: f64) -> Result<Self> {
        match name {
            "lake_at_rest" | "lake-at-rest" | "rest" => Ok(Self::LakeAtRest),
            "bump" | "dam_break" | "dam-break" => Ok(Self::Bump {
                amplitude,
                radius: 0.1,
            }),
            "random" => Ok(Self::Random { amplitude }),
            "wave" => Ok(Self::Wave {
                amplitude,
                modes: 1,
            }),
            _ => Err(Error::Config(format!("unknown initial condition '{name}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::LakeAtRest => "lake_at_rest",
            Self::Bump { .. } => "bump",
            Self::Random { .. } => "random",
            Self::Wave { .. } => "wave",
        }
    }

    pub fn build<T: Real>(
        &self,
        geometry: &GridGeometry,
        bathy: &Bathymetry<T>,
        scheme: SchemeKind,
        boundary: Boundary,
        seed: u64,
    ) -> Result<SimState<T>> {
        let (nx, ny) = (geometry.nx, geometry.ny);
        let lx = nx as f64 * geometry.dx;
        let ly = ny as f64 * geometry.dy;
        let zeros = vec![T::zero(); nx * ny];
        let eta: Vec<T> = match *self {
            Self::LakeAtRest => zeros.clone(),
            Self::Bump { amplitude, radius } => {
                let r = radius * lx;
                cell_centres(geometry)
                    .map(|(x, y)| {
                        let d2 = (x - lx / 2.0).powi(2) + (y - ly / 2.0).powi(2);
                        T::lit(amplitude * (-d2 / (r * r)).exp())
                    })
                    .collect()
            }
            Self::Random { amplitude } => {
                return random_smooth_state(geometry, bathy, scheme, boundary, seed, amplitude);
            }
            Self::Wave { amplitude, modes } => {
                let k = TAU * modes as f64 / lx;
                cell_centres(geometry)
                    .map(|(x, _)| T::lit(amplitude * (k * x).cos()))
                    .collect()
            }
        };
        SimState::new(
            *geometry,
            bathy,
            scheme.staggering(),
            boundary,
            scheme.time_levels(),
            &eta,
            &zeros,
            &zeros,
        )
    }
}

fn cell_centres(g: &GridGeometry) -> impl Iterator<Item = (f64, f64)> + '_ {
    (0..g.ny).flat_map(move |j| {
        (0..g.nx).map(move |i| ((i as f64 + 0.5) * g.dx, (j as f64 + 0.5) * g.dy))
    })
}

/// Independent uniform noise per sample: surface in `[-eta_amp, eta_amp]`,
/// transport in `[-vel_amp, vel_amp] * H`.
pub fn random_state<T: Real>(
    geometry: &GridGeometry,
    bathy: &Bathymetry<T>,
    scheme: SchemeKind,
    boundary: Boundary,
    seed: u64,
    eta_amp: f64,
    vel_amp: f64,
) -> Result<SimState<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = geometry.cells();
    let depth: Vec<f64> = (0..n)
        .map(|k| {
            bathy
                .h_mid
                .get((k % geometry.nx) as isize, (k / geometry.nx) as isize)
                .as_f64()
        })
        .collect();
    let eta: Vec<T> = (0..n)
        .map(|_| T::lit(rng.gen_range(-eta_amp..=eta_amp)))
        .collect();
    let hu: Vec<T> = depth
        .iter()
        .map(|h| T::lit(h * rng.gen_range(-vel_amp..=vel_amp)))
        .collect();
    let hv: Vec<T> = depth
        .iter()
        .map(|h| T::lit(h * rng.gen_range(-vel_amp..=vel_amp)))
        .collect();
    SimState::new(
        *geometry,
        bathy,
        scheme.staggering(),
        boundary,
        scheme.time_levels(),
        &eta,
        &hu,
        &hv,
    )
}

/// A few random low-order Fourier modes in every field, periodic over the
/// domain; velocities are `amplitude * sqrt(g / H)`-scaled so the flow stays
/// subcritical.
pub fn random_smooth_state<T: Real>(
    geometry: &GridGeometry,
    bathy: &Bathymetry<T>,
    scheme: SchemeKind,
    boundary: Boundary,
    seed: u64,
    amplitude: f64,
) -> Result<SimState<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lx = geometry.nx as f64 * geometry.dx;
    let ly = geometry.ny as f64 * geometry.dy;
    let modes = |rng: &mut ChaCha8Rng| -> Vec<(f64, f64, f64, f64)> {
        (0..3)
            .map(|_| {
                (
                    rng.gen_range(1..4) as f64,
                    rng.gen_range(0..4) as f64,
                    rng.gen_range(-1.0..1.0) / 3.0,
                    rng.gen_range(0.0..TAU),
                )
            })
            .collect()
    };
    let (me, mu, mv) = (modes(&mut rng), modes(&mut rng), modes(&mut rng));
    let eval = |m: &[(f64, f64, f64, f64)], x: f64, y: f64| {
        m.iter()
            .map(|&(kx, ky, a, ph)| a * (TAU * (kx * x / lx + ky * y / ly) + ph).cos())
            .sum::<f64>()
    };
    let g = 9.81;
    let mut eta = Vec::with_capacity(geometry.cells());
    let mut hu = Vec::with_capacity(geometry.cells());
    let mut hv = Vec::with_capacity(geometry.cells());
    for (k, (x, y)) in cell_centres(geometry).enumerate() {
        let h = bathy
            .h_mid
            .get((k % geometry.nx) as isize, (k / geometry.nx) as isize)
            .as_f64();
        let speed = amplitude * (g / h).sqrt();
        eta.push(T::lit(amplitude * eval(&me, x, y)));
        hu.push(T::lit(h * speed * eval(&mu, x, y)));
        hv.push(T::lit(h * speed * eval(&mv, x, y)));
    }
    SimState::new(
        *geometry,
        bathy,
        scheme.staggering(),
        boundary,
        scheme.time_levels(),
        &eta,
        &hu,
        &hv,
    )
}
