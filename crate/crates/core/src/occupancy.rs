//! Analytic occupancy: how many blocks of a kernel fit on one
//! multiprocessor, and which resource runs out first.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exec::DevicePreset;

const BUILTIN: &str = include_str!("../data/devices.toml");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct KernelResources {
    pub threads_per_block: usize,
    pub registers_per_thread: usize,
    pub shared_bytes_per_block: usize,
}

impl KernelResources {
    pub fn new(
        threads_per_block: usize,
        registers_per_thread: usize,
        shared_bytes_per_block: usize,
    ) -> Self {
        Self {
            threads_per_block,
            registers_per_thread,
            shared_bytes_per_block,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LimitingFactor {
    SharedMemory,
    Registers,
    Warps,
    Blocks,
}

impl fmt::Display for LimitingFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::SharedMemory => "shared",
            Self::Registers => "registers",
            Self::Warps => "warps",
            Self::Blocks => "blocks",
        })
    }
}

/// Blocks-per-SM bound imposed by each resource; `None` means unlimited.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub warps: usize,
    pub blocks: usize,
    pub registers: Option<usize>,
    pub shared: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Occupancy {
    pub warps_per_block: usize,
    pub limits: Limits,
    pub resident_blocks: usize,
    pub active_warps: usize,
    pub fraction: f64,
    pub limiting_factor: LimitingFactor,
}

fn round_up(v: usize, unit: usize) -> usize {
    v.div_ceil(unit) * unit
}

pub fn occupancy(res: &KernelResources, preset: &DevicePreset) -> Result<Occupancy> {
    preset.validate()?;
    let threads = res.threads_per_block;
    if threads == 0 || threads > preset.max_threads_per_block {
        return Err(Error::Block(format!(
            "{threads} threads per block outside 1..={} on {}",
            preset.max_threads_per_block, preset.name
        )));
    }
    if res.shared_bytes_per_block > preset.shared_per_block_limit_bytes {
        return Err(Error::LaunchRejected(format!(
            "{} shared bytes exceed the per-block limit {} on {}",
            res.shared_bytes_per_block, preset.shared_per_block_limit_bytes, preset.name
        )));
    }
    let warps_per_block = threads.div_ceil(preset.warp_size);
    let limits = Limits {
        warps: preset.max_warps_per_sm / warps_per_block,
        blocks: preset.max_blocks_per_sm,
        registers: (res.registers_per_thread > 0).then(|| {
            preset.registers_per_sm
                / round_up(
                    res.registers_per_thread * threads,
                    preset.register_alloc_granularity,
                )
        }),
        shared: (res.shared_bytes_per_block > 0).then(|| {
            preset.shared_per_sm_bytes
                / round_up(
                    res.shared_bytes_per_block,
                    preset.shared_alloc_granularity_bytes,
                )
        }),
    };
    // ties go to the first entry
    let candidates = [
        (limits.shared, LimitingFactor::SharedMemory),
        (limits.registers, LimitingFactor::Registers),
        (Some(limits.warps), LimitingFactor::Warps),
        (Some(limits.blocks), LimitingFactor::Blocks),
    ];
    let (resident_blocks, limiting_factor) = candidates
        .iter()
        .filter_map(|&(l, f)| l.map(|l| (l, f)))
        .fold(None::<(usize, LimitingFactor)>, |best, (l, f)| match best {
            Some((b, _)) if b <= l => best,
            _ => Some((l, f)),
        })
        .expect("warp and block limits always apply");
    if resident_blocks == 0 {
        return Err(Error::LaunchRejected(format!(
            "a single block does not fit on {} ({limiting_factor})",
            preset.name
        )));
    }
    let active_warps = resident_blocks * warps_per_block;
    Ok(Occupancy {
        warps_per_block,
        limits,
        resident_blocks,
        active_warps,
        fraction: active_warps as f64 / preset.max_warps_per_sm as f64,
        limiting_factor,
    })
}

#[derive(Deserialize)]
struct PresetFile {
    device: Vec<DevicePreset>,
}

pub fn parse_presets(text: &str) -> Result<Vec<DevicePreset>> {
    let file: PresetFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("device presets: {e}")))?;
    for p in &file.device {
        p.validate()?;
    }
    Ok(file.device)
}

/// Presets shipped with the crate.
pub fn builtin_presets() -> Vec<DevicePreset> {
    parse_presets(BUILTIN).expect("bundled preset file is valid")
}

pub fn load_presets(path: &Path) -> Result<Vec<DevicePreset>> {
    parse_presets(&std::fs::read_to_string(path)?)
}

/// Looks a preset up by case-insensitive name.
pub fn find_preset<'a>(presets: &'a [DevicePreset], name: &str) -> Result<&'a DevicePreset> {
    presets
        .iter()
        .find(|p| p.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownDevice(name.to_string()))
}

/// Plain-text table of the per-resource limits and the binding one.
pub fn limits_table(res: &KernelResources, preset: &DevicePreset, occ: &Occupancy) -> String {
    let show = |v: Option<usize>| v.map_or("unlimited".to_string(), |v| v.to_string());
    let mut s = String::new();
    s.push_str(&format!(
        "device {}: {} threads, {} registers/thread, {} shared bytes/block\n",
        preset.name, res.threads_per_block, res.registers_per_thread, res.shared_bytes_per_block
    ));
    s.push_str(&format!("{:<10} {:>12}\n", "resource", "blocks/SM"));
    for (name, v) in [
        ("warps", Some(occ.limits.warps)),
        ("blocks", Some(occ.limits.blocks)),
        ("registers", occ.limits.registers),
        ("shared", occ.limits.shared),
    ] {
        s.push_str(&format!("{:<10} {:>12}\n", name, show(v)));
    }
    s.push_str(&format!(
        "resident blocks {}, active warps {}/{}, occupancy {:.1}%, limited by {}\n",
        occ.resident_blocks,
        occ.active_warps,
        preset.max_warps_per_sm,
        occ.fraction * 100.0,
        occ.limiting_factor
    ));
    s
}
