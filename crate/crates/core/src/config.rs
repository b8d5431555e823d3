//! Run configuration: an INI file with bracketed sections. A run log is the
//! same format with the resolved time step filled in, so it can be fed back
//! in to reproduce a run exactly.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::error::{Error, Result};
use crate::exec::{BlockConfig, LaunchSpec, MathMode};
use crate::grid::{
    max_stable_dt, Bathymetry, Boundary, GridGeometry, SchemeKind, SimParams, SimState,
};
use crate::init::InitialCondition;
use crate::io;
use crate::num::Real;
use crate::scheme::{Scheme, Variant};

/// Every recognised key as `(section, key, description)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("scheme", "name", "linear | nonlinear | hires"),
    (
        "scheme",
        "variant",
        "three_kernel | fused | stage0..stage6 (default: fused, stage6 for hires)",
    ),
    ("domain", "nx", "interior cells along x"),
    ("domain", "ny", "interior cells along y"),
    ("domain", "dx", "cell width in metres"),
    ("domain", "dy", "cell height in metres"),
    ("domain", "boundary", "periodic | closed_wall"),
    ("physics", "g", "gravitational acceleration (default 9.81)"),
    ("physics", "f", "Coriolis parameter (default 0)"),
    (
        "physics",
        "dt",
        "time step in seconds, or auto for the largest stable step",
    ),
    ("bathymetry", "kind", "flat | random"),
    ("bathymetry", "depth", "(mean) equilibrium depth in metres"),
    (
        "bathymetry",
        "amplitude",
        "random bathymetry amplitude in metres",
    ),
    ("bathymetry", "seed", "random bathymetry seed"),
    (
        "initial",
        "kind",
        "lake_at_rest | bump | random | wave | file",
    ),
    ("initial", "amplitude", "surface amplitude in metres"),
    (
        "initial",
        "seed",
        "seed for random initial states (default 0)",
    ),
    (
        "initial",
        "file",
        "SWF1 or CSV file with eta, hu, hv when kind = file",
    ),
    ("launch", "block_w", "block width in cells"),
    ("launch", "block_h", "block height in cells"),
    ("launch", "math_mode", "precise | fast"),
    ("run", "steps", "number of time steps"),
    ("output", "dir", "directory for field files and the run log"),
    ("output", "format", "swf | csv"),
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BathymetrySpec {
    Flat {
        depth: f64,
    },
    Random {
        mean: f64,
        amplitude: f64,
        seed: u64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Named(InitialCondition),
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Swf,
    Csv,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Swf => "swf",
            Self::Csv => "csv",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scheme: SchemeKind,
    pub variant: Variant,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub boundary: Boundary,
    pub g: f64,
    pub f: f64,
    pub dt: TimeStep,
    pub bathymetry: BathymetrySpec,
    pub initial: InitialSpec,
    pub initial_amplitude: f64,
    pub seed: u64,
    pub block: BlockConfig,
    pub math_mode: MathMode,
    pub steps: u64,
    pub output_dir: PathBuf,
    pub output_format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Linear,
            variant: Variant::Fused,
            nx: 64,
            ny: 64,
            dx: 1000.0,
            dy: 1000.0,
            boundary: Boundary::Periodic,
            g: 9.81,
            f: 0.0,
            dt: TimeStep::Auto,
            bathymetry: BathymetrySpec::Flat { depth: 50.0 },
            initial: InitialSpec::Named(InitialCondition::LakeAtRest),
            initial_amplitude: 0.0,
            seed: 0,
            block: BlockConfig::new(16, 16),
            math_mode: MathMode::Precise,
            steps: 100,
            output_dir: PathBuf::from("out"),
            output_format: OutputFormat::Swf,
        }
    }
}

/// A ready-to-run simulation.
pub struct Setup<T> {
    pub geometry: GridGeometry,
    pub bathy: Bathymetry<T>,
    pub state: SimState<T>,
    pub params: SimParams,
    pub scheme: Scheme,
    pub spec: LaunchSpec,
}

fn parse<V: FromStr>(section: &str, key: &str, v: &str) -> Result<V> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse '{v}'")))
}

impl RunConfig {
    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_ini(&ini, None)
    }

    /// Loads a file; relative `initial.file` paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let ini = Ini::load_from_file(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_ini(&ini, path.parent())
    }

    fn from_ini(ini: &Ini, base: Option<&Path>) -> Result<Self> {
        for (section, props) in ini.iter() {
            for (key, _) in props.iter() {
                let sec = section.unwrap_or("");
                if !KEYS.iter().any(|(s, k, _)| *s == sec && *k == key) {
                    return Err(Error::Config(format!("unknown key [{sec}] {key}")));
                }
            }
        }
        let get = |s: &str, k: &str| ini.section(Some(s)).and_then(|p| p.get(k));
        let mut c = Self::default();
        macro_rules! set {
            ($field:expr, $s:literal, $k:literal) => {
                if let Some(v) = get($s, $k) {
                    $field = parse($s, $k, v)?;
                }
            };
        }
        set!(c.scheme, "scheme", "name");
        c.variant = Variant::default_for(c.scheme);
        set!(c.variant, "scheme", "variant");
        set!(c.nx, "domain", "nx");
        set!(c.ny, "domain", "ny");
        set!(c.dx, "domain", "dx");
        set!(c.dy, "domain", "dy");
        set!(c.boundary, "domain", "boundary");
        set!(c.g, "physics", "g");
        set!(c.f, "physics", "f");
        if let Some(v) = get("physics", "dt") {
            c.dt = if v.trim() == "auto" {
                TimeStep::Auto
            } else {
                TimeStep::Fixed(parse("physics", "dt", v)?)
            };
        }
        let mut depth = 50.0;
        set!(depth, "bathymetry", "depth");
        c.bathymetry = match get("bathymetry", "kind").map(str::trim).unwrap_or("flat") {
            "flat" => BathymetrySpec::Flat { depth },
            "random" => {
                let mut amplitude = 0.1 * depth;
                let mut seed = 0u64;
                set!(amplitude, "bathymetry", "amplitude");
                set!(seed, "bathymetry", "seed");
                BathymetrySpec::Random {
                    mean: depth,
                    amplitude,
                    seed,
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "[bathymetry] kind: unknown '{other}'"
                )))
            }
        };
        set!(c.initial_amplitude, "initial", "amplitude");
        set!(c.seed, "initial", "seed");
        c.initial = match get("initial", "kind")
            .map(str::trim)
            .unwrap_or("lake_at_rest")
        {
            "file" => {
                let f = get("initial", "file").ok_or_else(|| {
                    Error::Config("[initial] kind = file needs a file key".into())
                })?;
                let p = PathBuf::from(f.trim());
                let p = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p,
                };
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "[initial] file {} does not exist",
                        p.display()
                    )));
                }
                InitialSpec::File(p)
            }
            name => InitialSpec::Named(InitialCondition::parse(name, c.initial_amplitude)?),
        };
        let (mut bw, mut bh) = (c.block.width, c.block.height);
        set!(bw, "launch", "block_w");
        set!(bh, "launch", "block_h");
        c.block = BlockConfig::new(bw, bh);
        set!(c.math_mode, "launch", "math_mode");
        set!(c.steps, "run", "steps");
        if let Some(d) = get("output", "dir") {
            c.output_dir = PathBuf::from(d.trim());
        }
        c.output_format = match get("output", "format").map(str::trim).unwrap_or("swf") {
            "swf" => OutputFormat::Swf,
            "csv" => OutputFormat::Csv,
            other => return Err(Error::Config(format!("[output] format: unknown '{other}'"))),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.variant.check(self.scheme)?;
        GridGeometry::new(self.nx, self.ny, self.dx, self.dy, self.scheme.halo())?;
        if !(self.g > 0.0) {
            return Err(Error::Config(format!("g = {} must be positive", self.g)));
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("dt = {dt} must be positive")));
            }
        }
        if self.block.width == 0 || self.block.height == 0 {
            return Err(Error::Block(format!(
                "block {} has a zero side",
                self.block
            )));
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<GridGeometry> {
        GridGeometry::new(self.nx, self.ny, self.dx, self.dy, self.scheme.halo())
    }

    pub fn build_bathymetry<T: Real>(&self, geometry: &GridGeometry) -> Result<Bathymetry<T>> {
        match self.bathymetry {
            BathymetrySpec::Flat { depth } => Bathymetry::flat(geometry, self.boundary, depth),
            BathymetrySpec::Random {
                mean,
                amplitude,
                seed,
            } => Bathymetry::random_smooth(geometry, self.boundary, seed, mean, amplitude),
        }
    }

    /// The configured step, or the CFL-limited one for `dt = auto`.
    pub fn resolve_dt(&self, geometry: &GridGeometry, max_depth: f64) -> f64 {
        match self.dt {
            TimeStep::Fixed(dt) => dt,
            TimeStep::Auto => max_stable_dt(self.scheme, geometry, max_depth, self.g),
        }
    }

    pub fn setup<T: Real>(&self) -> Result<Setup<T>> {
        self.validate()?;
        let geometry = self.geometry()?;
        let bathy = self.build_bathymetry::<T>(&geometry)?;
        let state = match &self.initial {
            InitialSpec::Named(ic) => {
                ic.build(&geometry, &bathy, self.scheme, self.boundary, self.seed)?
            }
            InitialSpec::File(path) => {
                let set = io::read_fields(path)?;
                if (set.nx, set.ny) != (self.nx, self.ny) || set.fields.len() < 3 {
                    return Err(Error::Dimension(format!(
                        "{} holds {} fields on {}x{}, expected eta, hu, hv on {}x{}",
                        path.display(),
                        set.fields.len(),
                        set.nx,
                        set.ny,
                        self.nx,
                        self.ny
                    )));
                }
                let cast = |k: usize| {
                    set.fields[k]
                        .iter()
                        .map(|&v| T::lit(v as f64))
                        .collect::<Vec<T>>()
                };
                SimState::new(
                    geometry,
                    &bathy,
                    self.scheme.staggering(),
                    self.boundary,
                    self.scheme.time_levels(),
                    &cast(0),
                    &cast(1),
                    &cast(2),
                )?
            }
        };
        let dt = self.resolve_dt(&geometry, bathy.max_depth());
        let params = SimParams::new(self.g, self.f, dt, self.boundary)?;
        let scheme = Scheme::new(self.scheme, self.variant)?;
        let spec = LaunchSpec::new(self.block, self.nx, self.ny, Vec::new(), self.math_mode);
        Ok(Setup {
            geometry,
            bathy,
            state,
            params,
            scheme,
            spec,
        })
    }

    /// INI text of this configuration with `dt` fixed to `resolved_dt`.
    pub fn to_log(&self, resolved_dt: f64) -> String {
        let mut c = self.clone();
        c.dt = TimeStep::Fixed(resolved_dt);
        c.to_ini_string()
    }

    pub fn to_ini_string(&self) -> String {
        let mut ini = Ini::new();
        // `{:?}` keeps floats exact through a round trip
        let num = |v: f64| format!("{v:?}");
        ini.with_section(Some("scheme"))
            .set("name", self.scheme.name())
            .set("variant", self.variant.to_string());
        ini.with_section(Some("domain"))
            .set("nx", self.nx.to_string())
            .set("ny", self.ny.to_string())
            .set("dx", num(self.dx))
            .set("dy", num(self.dy))
            .set("boundary", self.boundary.to_string());
        ini.with_section(Some("physics"))
            .set("g", num(self.g))
            .set("f", num(self.f))
            .set(
                "dt",
                match self.dt {
                    TimeStep::Auto => "auto".to_string(),
                    TimeStep::Fixed(dt) => num(dt),
                },
            );
        match self.bathymetry {
            BathymetrySpec::Flat { depth } => {
                ini.with_section(Some("bathymetry"))
                    .set("kind", "flat")
                    .set("depth", num(depth));
            }
            BathymetrySpec::Random {
                mean,
                amplitude,
                seed,
            } => {
                ini.with_section(Some("bathymetry"))
                    .set("kind", "random")
                    .set("depth", num(mean))
                    .set("amplitude", num(amplitude))
                    .set("seed", seed.to_string());
            }
        }
        {
            let mut s = ini.with_section(Some("initial"));
            match &self.initial {
                InitialSpec::Named(ic) => s.set("kind", ic.name()),
                InitialSpec::File(p) => s.set("kind", "file").set("file", p.display().to_string()),
            };
        }
        ini.with_section(Some("initial"))
            .set("amplitude", num(self.initial_amplitude))
            .set("seed", self.seed.to_string());
        ini.with_section(Some("launch"))
            .set("block_w", self.block.width.to_string())
            .set("block_h", self.block.height.to_string())
            .set("math_mode", self.math_mode.to_string());
        ini.with_section(Some("run"))
            .set("steps", self.steps.to_string());
        ini.with_section(Some("output"))
            .set("dir", self.output_dir.display().to_string())
            .set("format", self.output_format.extension());
        let mut buf = Vec::new();
        ini.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ini output is utf-8")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_file() {
        assert_eq!(RunConfig::from_ini_str("").unwrap(), RunConfig::default());
    }

    #[test]
    fn hires_defaults_to_stage_six() {
        let c = RunConfig::from_ini_str("[scheme]\nname = hires\n").unwrap();
        assert_eq!(c.variant, Variant::Stage(6));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_ini_str("[domain]\nnz = 4\n").is_err());
        assert!(RunConfig::from_ini_str("[scheme]\nname = hires\nvariant = fused\n").is_err());
    }

    #[test]
    fn ini_round_trip() {
        let c = RunConfig {
            scheme: SchemeKind::Nonlinear,
            variant: Variant::ThreeKernel,
            dt: TimeStep::Fixed(0.1 + 0.2),
            bathymetry: BathymetrySpec::Random {
                mean: 30.0,
                amplitude: 4.5,
                seed: 7,
            },
            initial: InitialSpec::Named(InitialCondition::Random { amplitude: 0.25 }),
            initial_amplitude: 0.25,
            boundary: Boundary::ClosedWall,
            ..Default::default()
        };
        assert_eq!(RunConfig::from_ini_str(&c.to_ini_string()).unwrap(), c);
    }

    #[test]
    fn log_records_resolved_dt() {
        let c = RunConfig::default();
        let s = c.setup::<f32>().unwrap();
        let log = RunConfig::from_ini_str(&c.to_log(s.params.dt)).unwrap();
        assert_eq!(log.dt, TimeStep::Fixed(s.params.dt));
    }
}
