//! Grid geometry, halo-padded fields, bathymetry and boundary handling.
//!
//! Index convention: interior cells are `0..nx` by `0..ny`, ghost cells use
//! negative indices or indices past the interior. Cell `(i, j)` covers
//! `[i, i+1] x [j, j+1]` in grid units. On the staggered C-grid `hu[i, j]`
//! lives on the east face of cell `(i, j)` and `hv[i, j]` on its north face;
//! bathymetry intersections `h_int[i, j]` sit at the north-east corner.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Interior extent, cell size and ghost width of a simulation grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub halo: usize,
}

impl GridGeometry {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, halo: usize) -> Result<Self> {
        let g = Self {
            nx,
            ny,
            dx,
            dy,
            halo,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Geometry(format!(
                "empty grid {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.dx > 0.0 && self.dy > 0.0) {
            return Err(Error::Geometry(format!(
                "cell size {}x{} must be positive",
                self.dx, self.dy
            )));
        }
        if !(1..=2).contains(&self.halo) {
            return Err(Error::Geometry(format!(
                "halo {} not in {{1, 2}}",
                self.halo
            )));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Samples per field including ghost cells.
    pub fn padded_len(&self) -> usize {
        (self.nx + 2 * self.halo) * (self.ny + 2 * self.halo)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    ClosedWall,
}

impl std::str::FromStr for Boundary {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "closed" | "closed_wall" | "closed-wall" | "wall" => Ok(Self::ClosedWall),
            _ => Err(Error::Config(format!("unknown boundary '{s}'"))),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Periodic => "periodic",
            Self::ClosedWall => "closed_wall",
        })
    }
}

/// Where the transport components live relative to the cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Staggering {
    /// Arakawa C-grid: `hu` on east faces, `hv` on north faces.
    CGrid,
    /// All variables are cell averages (finite-volume layout).
    CellCentered,
}

/// Position of samples along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum AxisLoc {
    /// Sample at the cell midpoint (`i + 1/2`); walls sit between samples.
    Centered,
    /// Sample at the upper face (`i + 1`); indices `-1` and `n - 1` are walls.
    Staggered,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parity {
    Even,
    Odd,
}

#[derive(Clone, Copy, Debug)]
struct AxisRule {
    loc: AxisLoc,
    parity: Parity,
    zero_wall: bool,
}

impl AxisRule {
    const CENTER_EVEN: Self = Self {
        loc: AxisLoc::Centered,
        parity: Parity::Even,
        zero_wall: false,
    };
    const CENTER_ODD: Self = Self {
        loc: AxisLoc::Centered,
        parity: Parity::Odd,
        zero_wall: false,
    };
    const FACE_NORMAL: Self = Self {
        loc: AxisLoc::Staggered,
        parity: Parity::Odd,
        zero_wall: true,
    };
    const FACE_EVEN: Self = Self {
        loc: AxisLoc::Staggered,
        parity: Parity::Even,
        zero_wall: false,
    };

    /// Source index and sign for a closed-wall ghost index, `None` for interior
    /// samples. Halos wider than the grid reflect repeatedly until they land inside.
    fn mirror(&self, mut i: isize, n: isize) -> Option<(isize, bool)> {
        let odd = self.parity == Parity::Odd;
        let (mut neg, mut moved) = (false, false);
        loop {
            i = match self.loc {
                AxisLoc::Centered if i < 0 => -1 - i,
                AxisLoc::Centered if i >= n => 2 * n - 1 - i,
                AxisLoc::Staggered if i < -1 => -i - 2,
                AxisLoc::Staggered if i > n - 1 => 2 * n - i - 2,
                _ => break,
            };
            neg ^= odd;
            moved = true;
        }
        moved.then_some((i, neg))
    }
}

/// Which variable a field holds, used to pick its boundary rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldKind {
    Eta,
    Hu,
    Hv,
    Intersection,
    Midpoint,
}

impl FieldKind {
    fn rules(self, staggering: Staggering) -> (AxisRule, AxisRule) {
        use AxisRule as R;
        match (self, staggering) {
            (FieldKind::Eta | FieldKind::Midpoint, _) => (R::CENTER_EVEN, R::CENTER_EVEN),
            (FieldKind::Intersection, _) => (R::FACE_EVEN, R::FACE_EVEN),
            (FieldKind::Hu, Staggering::CGrid) => (R::FACE_NORMAL, R::CENTER_EVEN),
            (FieldKind::Hv, Staggering::CGrid) => (R::CENTER_EVEN, R::FACE_NORMAL),
            (FieldKind::Hu, Staggering::CellCentered) => (R::CENTER_ODD, R::CENTER_EVEN),
            (FieldKind::Hv, Staggering::CellCentered) => (R::CENTER_EVEN, R::CENTER_ODD),
        }
    }
}

/// Row-major 2-D array with a ghost ring of `halo` cells on every side.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    nx: usize,
    ny: usize,
    halo: usize,
    data: Vec<T>,
}

impl<T: Real> Field<T> {
    pub fn zeros(nx: usize, ny: usize, halo: usize) -> Self {
        Self::filled(nx, ny, halo, T::zero())
    }

    pub fn filled(nx: usize, ny: usize, halo: usize, value: T) -> Self {
        Self {
            nx,
            ny,
            halo,
            data: vec![value; (nx + 2 * halo) * (ny + 2 * halo)],
        }
    }

    /// Builds a field from row-major interior samples; ghosts start at zero.
    pub fn from_interior(nx: usize, ny: usize, halo: usize, interior: &[T]) -> Result<Self> {
        if interior.len() != nx * ny {
            return Err(Error::Dimension(format!(
                "expected {} interior samples ({}x{}), got {}",
                nx * ny,
                nx,
                ny,
                interior.len()
            )));
        }
        let mut f = Self::zeros(nx, ny, halo);
        for j in 0..ny {
            for i in 0..nx {
                f.set(i as isize, j as isize, interior[j * nx + i]);
            }
        }
        Ok(f)
    }

    pub fn from_fn(
        nx: usize,
        ny: usize,
        halo: usize,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Self {
        let mut out = Self::zeros(nx, ny, halo);
        for j in 0..ny {
            for i in 0..nx {
                out.set(i as isize, j as isize, f(i, j));
            }
        }
        out
    }
}

impl<T: Copy> Field<T> {
    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn halo(&self) -> usize {
        self.halo
    }

    pub fn stride(&self) -> usize {
        self.nx + 2 * self.halo
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn contains(&self, i: isize, j: isize) -> bool {
        let h = self.halo as isize;
        i >= -h && j >= -h && i < self.nx as isize + h && j < self.ny as isize + h
    }

    #[inline]
    fn index(&self, i: isize, j: isize) -> usize {
        debug_assert!(
            self.contains(i, j),
            "({i}, {j}) outside field with halo {}",
            self.halo
        );
        let h = self.halo as isize;
        ((j + h) as usize) * self.stride() + (i + h) as usize
    }

    #[inline]
    pub fn get(&self, i: isize, j: isize) -> T {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: isize, j: isize, v: T) {
        let k = self.index(i, j);
        self.data[k] = v;
    }

    /// All samples including ghosts, row-major.
    pub fn raw(&self) -> &[T] {
        &self.data
    }

    pub fn interior(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.nx * self.ny);
        for j in 0..self.ny as isize {
            for i in 0..self.nx as isize {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn same_shape<U>(&self, other: &Field<U>) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.halo == other.halo
    }
}

impl<T: Real> Field<T> {
    /// Bit-level equality of every interior sample.
    pub fn interior_bits_eq(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self
                .interior()
                .iter()
                .zip(other.interior())
                .all(|(a, b)| a.as_f64().to_bits() == b.as_f64().to_bits())
    }

    /// Largest absolute interior difference, in double precision.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.interior()
            .iter()
            .zip(other.interior())
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.interior()
            .iter()
            .map(|a| a.as_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Fills ghost samples according to `boundary` for a field of kind `kind`.
    pub fn fill_ghosts(&mut self, kind: FieldKind, staggering: Staggering, boundary: Boundary) {
        let (rx, ry) = kind.rules(staggering);
        let (nx, ny, h) = (self.nx as isize, self.ny as isize, self.halo as isize);
        match boundary {
            Boundary::Periodic => {
                for j in 0..ny {
                    for i in (-h..0).chain(nx..nx + h) {
                        let v = self.get(i.rem_euclid(nx), j);
                        self.set(i, j, v);
                    }
                }
                for j in (-h..0).chain(ny..ny + h) {
                    for i in -h..nx + h {
                        let v = self.get(i, j.rem_euclid(ny));
                        self.set(i, j, v);
                    }
                }
            }
            Boundary::ClosedWall => {
                if rx.zero_wall {
                    for j in 0..ny {
                        self.set(-1, j, T::zero());
                        self.set(nx - 1, j, T::zero());
                    }
                }
                // rows are interior down to the wall line for staggered y samples
                let j0 = if ry.loc == AxisLoc::Staggered { -1 } else { 0 };
                for j in j0..ny {
                    for i in (-h..0).chain(nx..nx + h) {
                        if let Some((src, neg)) = rx.mirror(i, nx) {
                            let v = self.get(src, j);
                            self.set(i, j, if neg { -v } else { v });
                        }
                    }
                }
                if ry.zero_wall {
                    for i in -h..nx + h {
                        self.set(i, -1, T::zero());
                        self.set(i, ny - 1, T::zero());
                    }
                }
                for j in (-h..0).chain(ny..ny + h) {
                    for i in -h..nx + h {
                        if let Some((src, neg)) = ry.mirror(j, ny) {
                            let v = self.get(i, src);
                            self.set(i, j, if neg { -v } else { v });
                        }
                    }
                }
            }
        }
    }
}

/// 4-point average used for midpoint depth; kernels that recompute it call
/// this same function so stored and recomputed values agree bitwise.
#[inline]
pub fn mid_depth<T: Real>(ne: T, nw: T, se: T, sw: T) -> T {
    ((ne + nw) + (se + sw)) * T::lit(0.25)
}

/// 2-point average used for face depth.
#[inline]
pub fn face_depth<T: Real>(a: T, b: T) -> T {
    (a + b) * T::lit(0.5)
}

/// Equilibrium depth at cell intersections and midpoints.
///
/// Bathymetry carries one more ghost ring than the state it accompanies,
/// since midpoint depth at the outermost state ghost needs intersections
/// one cell further out.
#[derive(Clone, Debug, PartialEq)]
pub struct Bathymetry<T> {
    pub h_int: Field<T>,
    pub h_mid: Field<T>,
}

impl<T: Real> Bathymetry<T> {
    pub fn flat(geometry: &GridGeometry, boundary: Boundary, depth: f64) -> Result<Self> {
        Self::from_fn(geometry, boundary, |_, _| depth)
    }

    /// Samples `depth(x, y)` (metres, physical coordinates) at the intersections.
    pub fn from_fn(
        geometry: &GridGeometry,
        boundary: Boundary,
        depth: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let halo = geometry.halo + 1;
        let (nx, ny) = (geometry.nx as isize, geometry.ny as isize);
        let mut h_int = Field::zeros(geometry.nx, geometry.ny, halo);
        // closed walls also need the wall line at index -1
        let lo = if boundary == Boundary::Periodic {
            0
        } else {
            -1
        };
        for j in lo..ny {
            for i in lo..nx {
                let x = (i + 1) as f64 * geometry.dx;
                let y = (j + 1) as f64 * geometry.dy;
                h_int.set(i, j, T::lit(depth(x, y)));
            }
        }
        Self::from_intersections(h_int, boundary)
    }

    /// Smooth positive bathymetry made of a few random low-order Fourier modes,
    /// periodic over the domain so it suits either boundary type.
    pub fn random_smooth(
        geometry: &GridGeometry,
        boundary: Boundary,
        seed: u64,
        mean: f64,
        amplitude: f64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lx = geometry.nx as f64 * geometry.dx;
        let ly = geometry.ny as f64 * geometry.dy;
        let modes: Vec<(f64, f64, f64, f64)> = (0..4)
            .map(|_| {
                let kx = rng.gen_range(0..3) as f64;
                let ky = rng.gen_range(0..3) as f64;
                (
                    kx,
                    ky,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        let norm: f64 = modes.iter().map(|m| m.2.abs()).sum::<f64>().max(1e-12);
        Self::from_fn(geometry, boundary, |x, y| {
            let s: f64 = modes
                .iter()
                .map(|&(kx, ky, a, ph)| {
                    a * (std::f64::consts::TAU * (kx * x / lx + ky * y / ly) + ph).cos()
                })
                .sum();
            mean + amplitude * s / norm
        })
    }

    /// Completes a bathymetry from intersection depths whose interior
    /// samples (and, for closed walls, the wall lines at index -1) are set.
    pub fn from_intersections(mut h_int: Field<T>, boundary: Boundary) -> Result<Self> {
        h_int.fill_ghosts(FieldKind::Intersection, Staggering::CGrid, boundary);
        let (nx, ny, h) = (
            h_int.nx() as isize,
            h_int.ny() as isize,
            h_int.halo() as isize,
        );
        let mut h_mid = Field::zeros(h_int.nx(), h_int.ny(), h_int.halo());
        for j in (-h + 1)..(ny + h) {
            for i in (-h + 1)..(nx + h) {
                let v = mid_depth(
                    h_int.get(i, j),
                    h_int.get(i - 1, j),
                    h_int.get(i, j - 1),
                    h_int.get(i - 1, j - 1),
                );
                h_mid.set(i, j, v);
            }
        }
        // outermost ring has no full set of corners
        h_mid.fill_ghosts(FieldKind::Midpoint, Staggering::CGrid, boundary);
        for j in -h..ny + h {
            for i in -h..nx + h {
                let d = h_int.get(i, j).as_f64();
                if !(d > 0.0) {
                    return Err(Error::Geometry(format!(
                        "non-positive depth {d} at intersection ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { h_int, h_mid })
    }

    pub fn max_depth(&self) -> f64 {
        self.h_int
            .raw()
            .iter()
            .map(|v| v.as_f64())
            .fold(0.0, f64::max)
    }

    /// Depth at the east face of cell `(i, j)`.
    #[inline]
    pub fn east_face(&self, i: isize, j: isize) -> T {
        face_depth(self.h_int.get(i, j), self.h_int.get(i, j - 1))
    }

    /// Depth at the north face of cell `(i, j)`.
    #[inline]
    pub fn north_face(&self, i: isize, j: isize) -> T {
        face_depth(self.h_int.get(i, j), self.h_int.get(i - 1, j))
    }
}

/// Physical and numerical parameters of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub g: f64,
    pub f: f64,
    pub dt: f64,
    pub boundary: Boundary,
}

impl SimParams {
    pub fn new(g: f64, f: f64, dt: f64, boundary: Boundary) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::Config(format!("gravity {g} must be positive")));
        }
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::Config(format!(
                "time step {dt} must be non-zero and finite"
            )));
        }
        Ok(Self { g, f, dt, boundary })
    }
}

/// The three shallow-water discretisations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    /// Forward-backward linear finite differences.
    Linear,
    /// Leapfrog (CTCS) nonlinear finite differences.
    Nonlinear,
    /// Well-balanced central-upwind finite volumes with RK2.
    HiRes,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 3] = [SchemeKind::Linear, SchemeKind::Nonlinear, SchemeKind::HiRes];

    /// Courant number used for the stable time step.
    pub fn courant(self) -> f64 {
        match self {
            SchemeKind::Linear => 0.5,
            SchemeKind::Nonlinear => 0.25,
            SchemeKind::HiRes => 0.25,
        }
    }

    /// Ghost width the scheme's kernels need.
    pub fn halo(self) -> usize {
        match self {
            SchemeKind::Linear => 2,
            SchemeKind::Nonlinear => 1,
            SchemeKind::HiRes => 2,
        }
    }

    pub fn staggering(self) -> Staggering {
        match self {
            SchemeKind::HiRes => Staggering::CellCentered,
            _ => Staggering::CGrid,
        }
    }

    pub fn time_levels(self) -> usize {
        match self {
            SchemeKind::Nonlinear => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Linear => "linear",
            SchemeKind::Nonlinear => "nonlinear",
            SchemeKind::HiRes => "hires",
        }
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" | "fbl" => Ok(Self::Linear),
            "nonlinear" | "ctcs" => Ok(Self::Nonlinear),
            "hires" | "cdklm" | "high-resolution" => Ok(Self::HiRes),
            _ => Err(Error::Config(format!("unknown scheme '{s}'"))),
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Largest stable time step: `C * min(dx, dy) / sqrt(g * max H)`.
pub fn max_stable_dt(scheme: SchemeKind, geometry: &GridGeometry, max_depth: f64, g: f64) -> f64 {
    scheme.courant() * geometry.dx.min(geometry.dy) / (g * max_depth).sqrt()
}

pub fn check_cfl<T: Real>(
    scheme: SchemeKind,
    state: &SimState<T>,
    bathy: &Bathymetry<T>,
    params: &SimParams,
) -> Result<()> {
    let max_dt = max_stable_dt(scheme, &state.geometry, bathy.max_depth(), params.g);
    if params.dt.abs() > max_dt {
        return Err(Error::Cfl {
            dt: params.dt,
            max_dt,
        });
    }
    Ok(())
}

/// Prognostic variables at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct Levels<T> {
    pub eta: Field<T>,
    pub hu: Field<T>,
    pub hv: Field<T>,
}

impl<T: Real> Levels<T> {
    pub fn fill_ghosts(&mut self, staggering: Staggering, boundary: Boundary) {
        self.eta.fill_ghosts(FieldKind::Eta, staggering, boundary);
        self.hu.fill_ghosts(FieldKind::Hu, staggering, boundary);
        self.hv.fill_ghosts(FieldKind::Hv, staggering, boundary);
    }

    pub fn bits_eq(&self, other: &Self) -> bool {
        self.eta.interior_bits_eq(&other.eta)
            && self.hu.interior_bits_eq(&other.hu)
            && self.hv.interior_bits_eq(&other.hv)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.eta
            .max_abs_diff(&other.eta)
            .max(self.hu.max_abs_diff(&other.hu))
            .max(self.hv.max_abs_diff(&other.hv))
    }
}

/// Simulation state: surface deviation and volume transports with halos.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState<T> {
    pub geometry: GridGeometry,
    pub staggering: Staggering,
    pub eta: Field<T>,
    pub hu: Field<T>,
    pub hv: Field<T>,
    /// Previous time level for two-level schemes.
    pub prev: Option<Levels<T>>,
    pub t: f64,
    pub step_count: u64,
}

impl<T: Real> SimState<T> {
    /// Builds a state from interior initial fields and fills its ghosts.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        geometry: GridGeometry,
        bathy: &Bathymetry<T>,
        staggering: Staggering,
        boundary: Boundary,
        time_levels: usize,
        eta0: &[T],
        hu0: &[T],
        hv0: &[T],
    ) -> Result<Self> {
        geometry.validate()?;
        if bathy.h_mid.nx() != geometry.nx || bathy.h_mid.ny() != geometry.ny {
            return Err(Error::Dimension(format!(
                "bathymetry is {}x{}, grid is {}x{}",
                bathy.h_mid.nx(),
                bathy.h_mid.ny(),
                geometry.nx,
                geometry.ny
            )));
        }
        if bathy.h_mid.halo() < geometry.halo + 1 {
            return Err(Error::Halo {
                required: geometry.halo + 1,
                available: bathy.h_mid.halo(),
            });
        }
        let (nx, ny, h) = (geometry.nx, geometry.ny, geometry.halo);
        let eta = Field::from_interior(nx, ny, h, eta0)?;
        let hu = Field::from_interior(nx, ny, h, hu0)?;
        let hv = Field::from_interior(nx, ny, h, hv0)?;
        for j in 0..ny {
            for i in 0..nx {
                let depth =
                    eta0[j * nx + i].as_f64() + bathy.h_mid.get(i as isize, j as isize).as_f64();
                if !(depth > 0.0) {
                    return Err(Error::NonPositiveDepth { i, j, depth });
                }
            }
        }
        let mut state = Self {
            geometry,
            staggering,
            eta,
            hu,
            hv,
            prev: None,
            t: 0.0,
            step_count: 0,
        };
        state.fill_ghosts(boundary);
        if time_levels >= 2 {
            state.prev = Some(state.levels());
        }
        Ok(state)
    }

    /// Flat surface, zero transport.
    pub fn lake_at_rest(
        geometry: GridGeometry,
        bathy: &Bathymetry<T>,
        scheme: SchemeKind,
        boundary: Boundary,
    ) -> Result<Self> {
        let zeros = vec![T::zero(); geometry.cells()];
        Self::new(
            geometry,
            bathy,
            scheme.staggering(),
            boundary,
            scheme.time_levels(),
            &zeros,
            &zeros,
            &zeros,
        )
    }

    pub fn levels(&self) -> Levels<T> {
        Levels {
            eta: self.eta.clone(),
            hu: self.hu.clone(),
            hv: self.hv.clone(),
        }
    }

    pub fn set_levels(&mut self, l: Levels<T>) {
        self.eta = l.eta;
        self.hu = l.hu;
        self.hv = l.hv;
    }

    pub fn fill_ghosts(&mut self, boundary: Boundary) {
        let s = self.staggering;
        self.eta.fill_ghosts(FieldKind::Eta, s, boundary);
        self.hu.fill_ghosts(FieldKind::Hu, s, boundary);
        self.hv.fill_ghosts(FieldKind::Hv, s, boundary);
        if let Some(p) = self.prev.as_mut() {
            p.fill_ghosts(s, boundary);
        }
    }

    /// Smallest total depth `eta + H` over the interior.
    pub fn min_depth(&self, bathy: &Bathymetry<T>) -> f64 {
        let mut m = f64::INFINITY;
        for j in 0..self.geometry.ny as isize {
            for i in 0..self.geometry.nx as isize {
                m = m.min(self.eta.get(i, j).as_f64() + bathy.h_mid.get(i, j).as_f64());
            }
        }
        m
    }

    /// Fails on the first interior cell whose total depth is not positive (or NaN).
    pub fn check_depth(&self, bathy: &Bathymetry<T>) -> Result<()> {
        for j in 0..self.geometry.ny {
            for i in 0..self.geometry.nx {
                let (a, b) = (i as isize, j as isize);
                let depth = self.eta.get(a, b).as_f64() + bathy.h_mid.get(a, b).as_f64();
                if !(depth > 0.0) {
                    return Err(Error::NonPositiveDepth { i, j, depth });
                }
            }
        }
        Ok(())
    }

    /// Interior samples shifted by `(kx, ky)` cells with wrap-around.
    pub fn translated(&self, kx: isize, ky: isize, boundary: Boundary) -> Self {
        let shift = |f: &Field<T>| {
            let (nx, ny) = (f.nx() as isize, f.ny() as isize);
            let mut out = f.clone();
            for j in 0..ny {
                for i in 0..nx {
                    out.set(
                        (i + kx).rem_euclid(nx),
                        (j + ky).rem_euclid(ny),
                        f.get(i, j),
                    );
                }
            }
            out
        };
        let mut s = self.clone();
        s.eta = shift(&self.eta);
        s.hu = shift(&self.hu);
        s.hv = shift(&self.hv);
        if let Some(p) = &self.prev {
            s.prev = Some(Levels {
                eta: shift(&p.eta),
                hu: shift(&p.hu),
                hv: shift(&p.hv),
            });
        }
        s.fill_ghosts(boundary);
        s
    }
}

/// Re-fills every ghost sample of `state` for the given boundary rule.
pub fn apply_boundary<T: Real>(state: &mut SimState<T>, params: &SimParams) {
    state.fill_ghosts(params.boundary);
}

/// Deviation volume `sum(eta) * dx * dy` over the interior, in double precision.
pub fn total_mass<T: Real>(state: &SimState<T>) -> f64 {
    let g = &state.geometry;
    let mut sum = 0.0;
    for j in 0..g.ny as isize {
        for i in 0..g.nx as isize {
            sum += state.eta.get(i, j).as_f64() * g.dx * g.dy;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn geom(n: usize, halo: usize) -> GridGeometry {
        GridGeometry::new(n, n, 1.0, 1.0, halo).unwrap()
    }

    #[test]
    fn lake_at_rest_has_zero_ghosts() {
        let g = geom(4, 1);
        let b = Bathymetry::<f32>::flat(&g, Boundary::Periodic, 10.0).unwrap();
        let s = SimState::lake_at_rest(g, &b, SchemeKind::Nonlinear, Boundary::Periodic).unwrap();
        assert!(s.eta.raw().iter().all(|&v| v == 0.0));
        assert!(s.prev.is_some());
    }

    #[test]
    fn large_grid_allocation() {
        let g = GridGeometry::new(1550, 950, 400.0, 400.0, 2).unwrap();
        let b = Bathymetry::<f32>::flat(&g, Boundary::ClosedWall, 50.0).unwrap();
        let s = SimState::lake_at_rest(g, &b, SchemeKind::HiRes, Boundary::ClosedWall).unwrap();
        assert_eq!(s.eta.len(), (1550 + 4) * (950 + 4));
        assert_eq!(s.hu.len(), g.padded_len());
    }

    #[test]
    fn dry_cell_rejected() {
        let g = geom(4, 1);
        let b = Bathymetry::<f32>::flat(&g, Boundary::Periodic, 5.0).unwrap();
        let eta = vec![-10.0f32; 16];
        let z = vec![0.0f32; 16];
        let err = SimState::new(
            g,
            &b,
            Staggering::CGrid,
            Boundary::Periodic,
            1,
            &eta,
            &z,
            &z,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NonPositiveDepth { .. }));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = geom(4, 1);
        let b = Bathymetry::<f32>::flat(&g, Boundary::Periodic, 5.0).unwrap();
        let z = vec![0.0f32; 15];
        assert!(matches!(
            SimState::new(g, &b, Staggering::CGrid, Boundary::Periodic, 1, &z, &z, &z),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn periodic_wraps_interior() {
        let g = geom(4, 1);
        let b = Bathymetry::<f32>::flat(&g, Boundary::Periodic, 10.0).unwrap();
        let mut eta = vec![0.0f32; 16];
        for j in 0..4 {
            eta[j * 4] = 7.0;
        }
        let z = vec![0.0f32; 16];
        let s = SimState::new(
            g,
            &b,
            Staggering::CGrid,
            Boundary::Periodic,
            1,
            &eta,
            &z,
            &z,
        )
        .unwrap();
        for j in 0..4 {
            assert_eq!(s.eta.get(4, j), 7.0);
        }
    }

    #[test]
    fn closed_wall_zeroes_normal_transport() {
        let g = geom(4, 1);
        let b = Bathymetry::<f32>::flat(&g, Boundary::ClosedWall, 10.0).unwrap();
        let hu = vec![3.0f32; 16];
        let z = vec![0.0f32; 16];
        let s = SimState::new(
            g,
            &b,
            Staggering::CGrid,
            Boundary::ClosedWall,
            1,
            &z,
            &hu,
            &z,
        )
        .unwrap();
        for j in 0..4 {
            assert_eq!(s.hu.get(-1, j), 0.0);
            assert_eq!(s.hu.get(3, j), 0.0);
        }
    }

    #[test]
    fn closed_wall_mirror_matches_index_oracle() {
        let g = geom(8, 2);
        let b = Bathymetry::<f32>::flat(&g, Boundary::ClosedWall, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eta: Vec<f32> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = vec![0.0f32; 64];
        let s = SimState::new(
            g,
            &b,
            Staggering::CGrid,
            Boundary::ClosedWall,
            1,
            &eta,
            &z,
            &z,
        )
        .unwrap();
        let n = 8isize;
        let reflect = |k: isize| {
            if k < 0 {
                -1 - k
            } else if k >= n {
                2 * n - 1 - k
            } else {
                k
            }
        };
        for j in -2..n + 2 {
            for i in -2..n + 2 {
                let (si, sj) = (reflect(i), reflect(j));
                assert_eq!(
                    s.eta.get(i, j),
                    eta[(sj * n + si) as usize],
                    "cell ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn boundary_fill_is_idempotent() {
        for boundary in [Boundary::Periodic, Boundary::ClosedWall] {
            for stag in [Staggering::CGrid, Staggering::CellCentered] {
                let g = geom(6, 2);
                let b = Bathymetry::<f32>::flat(&g, boundary, 10.0).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(9);
                let mut r = || {
                    (0..36)
                        .map(|_| rng.gen_range(-1.0f32..1.0))
                        .collect::<Vec<_>>()
                };
                let (e, u, v) = (r(), r(), r());
                let mut s = SimState::new(g, &b, stag, boundary, 2, &e, &u, &v).unwrap();
                let once = s.clone();
                s.fill_ghosts(boundary);
                assert_eq!(s, once);
            }
        }
    }

    #[test]
    fn mass_of_single_cell() {
        let g = GridGeometry::new(1, 1, 3.0, 3.0, 1).unwrap();
        let b = Bathymetry::<f64>::flat(&g, Boundary::Periodic, 10.0).unwrap();
        let s = SimState::new(
            g,
            &b,
            Staggering::CGrid,
            Boundary::Periodic,
            1,
            &[2.0],
            &[0.0],
            &[0.0],
        )
        .unwrap();
        assert_eq!(total_mass(&s), 18.0);
    }

    #[test]
    fn mass_matches_nested_loop() {
        let g = GridGeometry::new(16, 16, 0.7, 1.3, 1).unwrap();
        let b = Bathymetry::<f32>::flat(&g, Boundary::Periodic, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let eta: Vec<f32> = (0..256).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = vec![0.0f32; 256];
        let s = SimState::new(
            g,
            &b,
            Staggering::CGrid,
            Boundary::Periodic,
            1,
            &eta,
            &z,
            &z,
        )
        .unwrap();
        let mut oracle = 0.0f64;
        for v in &eta {
            oracle += *v as f64 * 0.7 * 1.3;
        }
        let got = total_mass(&s);
        assert!(
            (got - oracle).abs() <= oracle.abs() * f64::EPSILON,
            "{got} vs {oracle}"
        );
    }

    #[test]
    fn midpoint_depth_is_corner_average() {
        let g = geom(5, 2);
        let b = Bathymetry::<f64>::random_smooth(&g, Boundary::ClosedWall, 4, 20.0, 5.0).unwrap();
        for j in -2..7 {
            for i in -2..7 {
                let avg = (b.h_int.get(i, j)
                    + b.h_int.get(i - 1, j)
                    + b.h_int.get(i, j - 1)
                    + b.h_int.get(i - 1, j - 1))
                    / 4.0;
                assert!((b.h_mid.get(i, j) - avg).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn geometry_invariants() {
        assert!(GridGeometry::new(0, 4, 1.0, 1.0, 1).is_err());
        assert!(GridGeometry::new(4, 4, 0.0, 1.0, 1).is_err());
        assert!(GridGeometry::new(4, 4, 1.0, 1.0, 3).is_err());
    }
}
