//! Hardware abstraction: discrete frequency levels, micro-benchmarked
//! performance/bandwidth/voltage tables, switching latency and thermal
//! constants.
//!
//! Profiles are exact lookup tables keyed by discrete levels. There is no
//! interpolation: asking for a frequency that is not a table level is an
//! error.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A hardware component whose frequency the governor controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Cpu,
    Gpu,
    Mem,
}

impl Component {
    pub fn name(self) -> &'static str {
        match self {
            Component::Cpu => "cpu",
            Component::Gpu => "gpu",
            Component::Mem => "mem",
        }
    }
}

/// The coupled `(f_cpu, f_gpu, f_mem)` vector, the unit of unified scaling.
/// Each component must be a member of its profile level table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequencyTriplet {
    pub f_cpu: u64,
    pub f_gpu: u64,
    pub f_mem: u64,
}

impl FrequencyTriplet {
    pub fn new(f_cpu: u64, f_gpu: u64, f_mem: u64) -> Self {
        FrequencyTriplet { f_cpu, f_gpu, f_mem }
    }

    pub fn get(&self, c: Component) -> u64 {
        match c {
            Component::Cpu => self.f_cpu,
            Component::Gpu => self.f_gpu,
            Component::Mem => self.f_mem,
        }
    }

    /// Componentwise maximum of two triplets.
    pub fn max(&self, other: &FrequencyTriplet) -> FrequencyTriplet {
        FrequencyTriplet {
            f_cpu: self.f_cpu.max(other.f_cpu),
            f_gpu: self.f_gpu.max(other.f_gpu),
            f_mem: self.f_mem.max(other.f_mem),
        }
    }
}

impl std::fmt::Display for FrequencyTriplet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({:.1}/{:.1}/{:.1} MHz)",
            self.f_cpu as f64 / 1e6,
            self.f_gpu as f64 / 1e6,
            self.f_mem as f64 / 1e6
        )
    }
}

/// Per-component effective switched capacitance bounds, farads.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AlphaRange {
    pub alpha_max: f64,
    pub alpha_min: f64,
}

/// Raw on-disk profile schema. Tables are maps keyed by decimal Hz strings
/// ("f_cpu/f_gpu" for the peak-performance table).
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProfileFile {
    name: String,
    cpu_levels: Vec<u64>,
    gpu_levels: Vec<u64>,
    mem_levels: Vec<u64>,
    peak_perf: BTreeMap<String, f64>,
    mem_bandwidth: BTreeMap<String, f64>,
    voltage_cpu: BTreeMap<String, f64>,
    voltage_gpu: BTreeMap<String, f64>,
    voltage_mem: BTreeMap<String, f64>,
    t_overhead: f64,
    t_switch_base: f64,
    #[serde(default)]
    t_switch_penalty: BTreeMap<String, f64>,
    /// Optional full transition-latency matrix keyed by "from/to" GPU
    /// levels. When present for a pair it overrides base + penalty.
    #[serde(default)]
    t_switch_matrix: BTreeMap<String, f64>,
    alpha_cpu: AlphaRange,
    alpha_gpu: AlphaRange,
    alpha_mem: AlphaRange,
    k1: f64,
    k2: f64,
    r_th: f64,
    tau_th: f64,
    t_ambient: f64,
    t_prefill: f64,
}

/// A validated device profile. Immutable after load; share freely.
#[derive(Debug, Clone)]
pub struct DeviceProfile {
    pub name: String,
    pub cpu_levels: Vec<u64>,
    pub gpu_levels: Vec<u64>,
    pub mem_levels: Vec<u64>,
    peak_perf: BTreeMap<(u64, u64), f64>,
    mem_bandwidth: BTreeMap<u64, f64>,
    voltage_cpu: BTreeMap<u64, f64>,
    voltage_gpu: BTreeMap<u64, f64>,
    voltage_mem: BTreeMap<u64, f64>,
    pub t_overhead: f64,
    pub t_switch_base: f64,
    t_switch_penalty: BTreeMap<u64, f64>,
    t_switch_matrix: BTreeMap<(u64, u64), f64>,
    pub alpha_cpu: AlphaRange,
    pub alpha_gpu: AlphaRange,
    pub alpha_mem: AlphaRange,
    pub k1: f64,
    pub k2: f64,
    pub r_th: f64,
    pub tau_th: f64,
    pub t_ambient: f64,
    pub t_prefill: f64,
}

fn parse_hz(key: &str, table: &str) -> Result<u64> {
    key.trim().parse::<u64>().map_err(|_| Error::InvalidProfile {
        message: format!("table {table}: key {key:?} is not a Hz integer"),
    })
}

fn parse_pair(key: &str, table: &str) -> Result<(u64, u64)> {
    let (a, b) = key.split_once('/').ok_or_else(|| Error::InvalidProfile {
        message: format!("table {table}: key {key:?} is not of the form \"a/b\""),
    })?;
    Ok((parse_hz(a, table)?, parse_hz(b, table)?))
}

fn check_levels(levels: &[u64], which: &str) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidProfile {
            message: format!("{which} level table is empty"),
        });
    }
    if levels[0] == 0 {
        return Err(Error::InvalidProfile {
            message: format!("{which} levels must be positive"),
        });
    }
    if !levels.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidProfile {
            message: format!("{which} levels must be strictly increasing"),
        });
    }
    Ok(())
}

impl DeviceProfile {
    fn from_file(file: ProfileFile) -> Result<Self> {
        check_levels(&file.cpu_levels, "cpu")?;
        check_levels(&file.gpu_levels, "gpu")?;
        check_levels(&file.mem_levels, "mem")?;

        let mut peak_perf = BTreeMap::new();
        for (k, v) in &file.peak_perf {
            peak_perf.insert(parse_pair(k, "peak_perf")?, *v);
        }
        let mut mem_bandwidth = BTreeMap::new();
        for (k, v) in &file.mem_bandwidth {
            mem_bandwidth.insert(parse_hz(k, "mem_bandwidth")?, *v);
        }
        let volt = |raw: &BTreeMap<String, f64>, name: &str| -> Result<BTreeMap<u64, f64>> {
            let mut out = BTreeMap::new();
            for (k, v) in raw {
                out.insert(parse_hz(k, name)?, *v);
            }
            Ok(out)
        };
        let voltage_cpu = volt(&file.voltage_cpu, "voltage_cpu")?;
        let voltage_gpu = volt(&file.voltage_gpu, "voltage_gpu")?;
        let voltage_mem = volt(&file.voltage_mem, "voltage_mem")?;
        let mut t_switch_penalty = BTreeMap::new();
        for (k, v) in &file.t_switch_penalty {
            t_switch_penalty.insert(parse_hz(k, "t_switch_penalty")?, *v);
        }
        let mut t_switch_matrix = BTreeMap::new();
        for (k, v) in &file.t_switch_matrix {
            t_switch_matrix.insert(parse_pair(k, "t_switch_matrix")?, *v);
        }

        let profile = DeviceProfile {
            name: file.name,
            cpu_levels: file.cpu_levels,
            gpu_levels: file.gpu_levels,
            mem_levels: file.mem_levels,
            peak_perf,
            mem_bandwidth,
            voltage_cpu,
            voltage_gpu,
            voltage_mem,
            t_overhead: file.t_overhead,
            t_switch_base: file.t_switch_base,
            t_switch_penalty,
            t_switch_matrix,
            alpha_cpu: file.alpha_cpu,
            alpha_gpu: file.alpha_gpu,
            alpha_mem: file.alpha_mem,
            k1: file.k1,
            k2: file.k2,
            r_th: file.r_th,
            tau_th: file.tau_th,
            t_ambient: file.t_ambient,
            t_prefill: file.t_prefill,
        };
        profile.validate()?;
        Ok(profile)
    }

    fn validate(&self) -> Result<()> {
        let fail = |message: String| Err(Error::InvalidProfile { message });

        // Completeness and positivity of the performance grid.
        for &fc in &self.cpu_levels {
            for &fg in &self.gpu_levels {
                match self.peak_perf.get(&(fc, fg)) {
                    None => return fail(format!("peak_perf missing entry for {fc}/{fg}")),
                    Some(&p) if !(p > 0.0) => {
                        return fail(format!("peak_perf entry {fc}/{fg} must be > 0, got {p}"))
                    }
                    _ => {}
                }
            }
        }
        // Monotone non-decreasing along each frequency axis, checked
        // exhaustively over the table.
        for w in self.cpu_levels.windows(2) {
            for &fg in &self.gpu_levels {
                if self.peak_perf[&(w[0], fg)] > self.peak_perf[&(w[1], fg)] {
                    return fail(format!(
                        "peak_perf decreasing in f_cpu at ({} -> {})/{fg}",
                        w[0], w[1]
                    ));
                }
            }
        }
        for &fc in &self.cpu_levels {
            for w in self.gpu_levels.windows(2) {
                if self.peak_perf[&(fc, w[0])] > self.peak_perf[&(fc, w[1])] {
                    return fail(format!(
                        "peak_perf decreasing in f_gpu at {fc}/({} -> {})",
                        w[0], w[1]
                    ));
                }
            }
        }
        for &fm in &self.mem_levels {
            match self.mem_bandwidth.get(&fm) {
                None => return fail(format!("mem_bandwidth missing entry for {fm}")),
                Some(&b) if !(b > 0.0) => {
                    return fail(format!("mem_bandwidth entry {fm} must be > 0, got {b}"))
                }
                _ => {}
            }
        }
        for w in self.mem_levels.windows(2) {
            if self.mem_bandwidth[&w[0]] > self.mem_bandwidth[&w[1]] {
                return fail(format!("mem_bandwidth decreasing at {} -> {}", w[0], w[1]));
            }
        }

        let check_voltage =
            |levels: &[u64], table: &BTreeMap<u64, f64>, name: &str| -> Result<()> {
                let mut prev = 0.0f64;
                for &f in levels {
                    let &v = table.get(&f).ok_or_else(|| Error::InvalidProfile {
                        message: format!("{name} missing entry for level {f}"),
                    })?;
                    if !(v > 0.0) {
                        return Err(Error::InvalidProfile {
                            message: format!("{name} entry {f} must be > 0, got {v}"),
                        });
                    }
                    if v < prev {
                        return Err(Error::InvalidProfile {
                            message: format!("{name} decreasing at level {f}"),
                        });
                    }
                    prev = v;
                }
                Ok(())
            };
        check_voltage(&self.cpu_levels, &self.voltage_cpu, "voltage_cpu")?;
        check_voltage(&self.gpu_levels, &self.voltage_gpu, "voltage_gpu")?;
        check_voltage(&self.mem_levels, &self.voltage_mem, "voltage_mem")?;

        if !(self.t_switch_base > 0.0) {
            return fail(format!("t_switch_base must be > 0, got {}", self.t_switch_base));
        }
        for (&level, &p) in &self.t_switch_penalty {
            if !self.gpu_levels.contains(&level) {
                return fail(format!("t_switch_penalty keyed by unknown gpu level {level}"));
            }
            if p < 0.0 {
                return fail(format!("t_switch_penalty for {level} must be >= 0"));
            }
        }
        for (&(from, to), &v) in &self.t_switch_matrix {
            if !self.gpu_levels.contains(&from) || !self.gpu_levels.contains(&to) {
                return fail(format!("t_switch_matrix keyed by unknown gpu pair {from}/{to}"));
            }
            if !(v > 0.0) {
                return fail(format!("t_switch_matrix entry {from}/{to} must be > 0"));
            }
        }
        for (range, name) in [
            (self.alpha_cpu, "alpha_cpu"),
            (self.alpha_gpu, "alpha_gpu"),
            (self.alpha_mem, "alpha_mem"),
        ] {
            if !(range.alpha_min > 0.0) || range.alpha_min > range.alpha_max {
                return fail(format!(
                    "{name}: need 0 < alpha_min <= alpha_max, got [{}, {}]",
                    range.alpha_min, range.alpha_max
                ));
            }
        }
        if self.k1 < 0.0 {
            return fail(format!("k1 must be >= 0, got {}", self.k1));
        }
        if self.t_overhead < 0.0 || self.t_prefill < 0.0 {
            return fail("t_overhead and t_prefill must be >= 0".to_string());
        }
        if !(self.tau_th > 0.0) || self.r_th < 0.0 {
            return fail("need tau_th > 0 and r_th >= 0".to_string());
        }
        Ok(())
    }

    fn level_index(levels: &[u64], hz: u64, component: &'static str) -> Result<usize> {
        levels
            .binary_search(&hz)
            .map_err(|_| Error::UnknownLevel { component, hz })
    }

    pub fn cpu_index(&self, hz: u64) -> Result<usize> {
        Self::level_index(&self.cpu_levels, hz, "cpu")
    }

    pub fn gpu_index(&self, hz: u64) -> Result<usize> {
        Self::level_index(&self.gpu_levels, hz, "gpu")
    }

    pub fn mem_index(&self, hz: u64) -> Result<usize> {
        Self::level_index(&self.mem_levels, hz, "mem")
    }

    /// Check that every component of the triplet is a table level.
    pub fn validate_triplet(&self, f: &FrequencyTriplet) -> Result<()> {
        self.cpu_index(f.f_cpu)?;
        self.gpu_index(f.f_gpu)?;
        self.mem_index(f.f_mem)?;
        Ok(())
    }

    pub fn levels(&self, c: Component) -> &[u64] {
        match c {
            Component::Cpu => &self.cpu_levels,
            Component::Gpu => &self.gpu_levels,
            Component::Mem => &self.mem_levels,
        }
    }

    /// All-minimum triplet (the throttled state).
    pub fn min_triplet(&self) -> FrequencyTriplet {
        FrequencyTriplet::new(self.cpu_levels[0], self.gpu_levels[0], self.mem_levels[0])
    }

    /// All-maximum triplet (the performance-ceiling state).
    pub fn max_triplet(&self) -> FrequencyTriplet {
        FrequencyTriplet::new(
            *self.cpu_levels.last().unwrap(),
            *self.gpu_levels.last().unwrap(),
            *self.mem_levels.last().unwrap(),
        )
    }

    /// Iterate the full discrete triplet grid in table order.
    pub fn triplets(&self) -> impl Iterator<Item = FrequencyTriplet> + '_ {
        self.cpu_levels.iter().flat_map(move |&fc| {
            self.gpu_levels.iter().flat_map(move |&fg| {
                self.mem_levels
                    .iter()
                    .map(move |&fm| FrequencyTriplet::new(fc, fg, fm))
            })
        })
    }

    pub fn grid_size(&self) -> usize {
        self.cpu_levels.len() * self.gpu_levels.len() * self.mem_levels.len()
    }

    /// Peak achievable performance at a CPU/GPU level pair, FLOP/s.
    /// Exact table lookup, no interpolation.
    pub fn peak_perf(&self, f_cpu: u64, f_gpu: u64) -> Result<f64> {
        self.cpu_index(f_cpu)?;
        self.gpu_index(f_gpu)?;
        Ok(self.peak_perf[&(f_cpu, f_gpu)])
    }

    /// Memory bandwidth at an EMC level, bytes/s.
    pub fn mem_bandwidth(&self, f_mem: u64) -> Result<f64> {
        self.mem_index(f_mem)?;
        Ok(self.mem_bandwidth[&f_mem])
    }

    /// Supply voltage of a component at one of its levels, volts.
    pub fn voltage_of(&self, component: Component, f: u64) -> Result<f64> {
        let table = match component {
            Component::Cpu => {
                self.cpu_index(f)?;
                &self.voltage_cpu
            }
            Component::Gpu => {
                self.gpu_index(f)?;
                &self.voltage_gpu
            }
            Component::Mem => {
                self.mem_index(f)?;
                &self.voltage_mem
            }
        };
        Ok(table[&f])
    }

    /// Latency of a transition between two triplets, seconds.
    ///
    /// Zero when nothing changes. Otherwise the calibrated matrix entry for
    /// the GPU level pair when present, else the base latency plus the
    /// destination GPU level's low-frequency penalty.
    pub fn switch_latency(&self, from: &FrequencyTriplet, to: &FrequencyTriplet) -> Result<f64> {
        self.validate_triplet(from)?;
        self.validate_triplet(to)?;
        if from == to {
            return Ok(0.0);
        }
        if let Some(&v) = self.t_switch_matrix.get(&(from.f_gpu, to.f_gpu)) {
            return Ok(v);
        }
        Ok(self.t_switch_base + self.t_switch_penalty.get(&to.f_gpu).copied().unwrap_or(0.0))
    }

    pub fn to_json(&self) -> String {
        let file = ProfileFile {
            name: self.name.clone(),
            cpu_levels: self.cpu_levels.clone(),
            gpu_levels: self.gpu_levels.clone(),
            mem_levels: self.mem_levels.clone(),
            peak_perf: self
                .peak_perf
                .iter()
                .map(|(&(a, b), &v)| (format!("{a}/{b}"), v))
                .collect(),
            mem_bandwidth: self
                .mem_bandwidth
                .iter()
                .map(|(&k, &v)| (k.to_string(), v))
                .collect(),
            voltage_cpu: self
                .voltage_cpu
                .iter()
                .map(|(&k, &v)| (k.to_string(), v))
                .collect(),
            voltage_gpu: self
                .voltage_gpu
                .iter()
                .map(|(&k, &v)| (k.to_string(), v))
                .collect(),
            voltage_mem: self
                .voltage_mem
                .iter()
                .map(|(&k, &v)| (k.to_string(), v))
                .collect(),
            t_overhead: self.t_overhead,
            t_switch_base: self.t_switch_base,
            t_switch_penalty: self
                .t_switch_penalty
                .iter()
                .map(|(&k, &v)| (k.to_string(), v))
                .collect(),
            t_switch_matrix: self
                .t_switch_matrix
                .iter()
                .map(|(&(a, b), &v)| (format!("{a}/{b}"), v))
                .collect(),
            alpha_cpu: self.alpha_cpu,
            alpha_gpu: self.alpha_gpu,
            alpha_mem: self.alpha_mem,
            k1: self.k1,
            k2: self.k2,
            r_th: self.r_th,
            tau_th: self.tau_th,
            t_ambient: self.t_ambient,
            t_prefill: self.t_prefill,
        };
        serde_json::to_string_pretty(&file).expect("profile serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Load and validate a device profile file.
pub fn load_profile(path: impl AsRef<Path>) -> Result<DeviceProfile> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_profile(&text, &path.display().to_string())
}

/// Parse a profile from JSON text. `origin` is used in error messages.
pub fn parse_profile(text: &str, origin: &str) -> Result<DeviceProfile> {
    let file: ProfileFile = serde_json::from_str(text).map_err(|e| Error::parse(origin, e))?;
    DeviceProfile::from_file(file)
}

/// Builder for profiles constructed in code (tests, calibration).
#[derive(Debug, Clone)]
pub struct ProfileBuilder {
    pub name: String,
    pub cpu_levels: Vec<u64>,
    pub gpu_levels: Vec<u64>,
    pub mem_levels: Vec<u64>,
    pub peak_perf: BTreeMap<(u64, u64), f64>,
    pub mem_bandwidth: BTreeMap<u64, f64>,
    pub voltage_cpu: BTreeMap<u64, f64>,
    pub voltage_gpu: BTreeMap<u64, f64>,
    pub voltage_mem: BTreeMap<u64, f64>,
    pub t_overhead: f64,
    pub t_switch_base: f64,
    pub t_switch_penalty: BTreeMap<u64, f64>,
    pub t_switch_matrix: BTreeMap<(u64, u64), f64>,
    pub alpha_cpu: AlphaRange,
    pub alpha_gpu: AlphaRange,
    pub alpha_mem: AlphaRange,
    pub k1: f64,
    pub k2: f64,
    pub r_th: f64,
    pub tau_th: f64,
    pub t_ambient: f64,
    pub t_prefill: f64,
}

impl ProfileBuilder {
    pub fn build(self) -> Result<DeviceProfile> {
        let profile = DeviceProfile {
            name: self.name,
            cpu_levels: self.cpu_levels,
            gpu_levels: self.gpu_levels,
            mem_levels: self.mem_levels,
            peak_perf: self.peak_perf,
            mem_bandwidth: self.mem_bandwidth,
            voltage_cpu: self.voltage_cpu,
            voltage_gpu: self.voltage_gpu,
            voltage_mem: self.voltage_mem,
            t_overhead: self.t_overhead,
            t_switch_base: self.t_switch_base,
            t_switch_penalty: self.t_switch_penalty,
            t_switch_matrix: self.t_switch_matrix,
            alpha_cpu: self.alpha_cpu,
            alpha_gpu: self.alpha_gpu,
            alpha_mem: self.alpha_mem,
            k1: self.k1,
            k2: self.k2,
            r_th: self.r_th,
            tau_th: self.tau_th,
            t_ambient: self.t_ambient,
            t_prefill: self.t_prefill,
        };
        profile.validate()?;
        Ok(profile)
    }
}


#[cfg(test)]
mod tests {
    use super::test_profiles::{degenerate, small};
    use super::*;

    #[test]
    fn lookup_and_unknown_levels() {
        let p = small();
        assert_eq!(p.peak_perf(1_000_000_000, 600_000_000).unwrap(), 6e9);
        assert!(matches!(
            p.peak_perf(999, 600_000_000),
            Err(Error::UnknownLevel { component: "cpu", .. })
        ));
        assert!(matches!(
            p.voltage_of(Component::Gpu, 999),
            Err(Error::UnknownLevel { component: "gpu", .. })
        ));
    }

    #[test]
    fn voltage_endpoints_are_monotone_extremes() {
        let p = small();
        let lo = p.voltage_of(Component::Cpu, p.cpu_levels[0]).unwrap();
        let hi = p
            .voltage_of(Component::Cpu, *p.cpu_levels.last().unwrap())
            .unwrap();
        assert!(lo <= hi);
        let ghi = p
            .voltage_of(Component::Gpu, *p.gpu_levels.last().unwrap())
            .unwrap();
        assert_eq!(ghi, 0.8);
        for c in [Component::Cpu, Component::Gpu, Component::Mem] {
            for &f in p.levels(c).to_vec().iter() {
                assert!(p.voltage_of(c, f).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn switch_latency_identity_base_and_penalty() {
        let p = small();
        let hi = p.max_triplet();
        let mid = FrequencyTriplet::new(600_000_000, 600_000_000, 1_000_000_000);
        let low_gpu = FrequencyTriplet::new(200_000_000, 300_000_000, 1_000_000_000);
        assert_eq!(p.switch_latency(&hi, &hi).unwrap(), 0.0);
        // base 7 ms, destination gpu not penalized
        assert!((p.switch_latency(&hi, &mid).unwrap() - 0.007).abs() < 1e-15);
        // +15 ms penalty at the lowest gpu level
        assert!((p.switch_latency(&hi, &low_gpu).unwrap() - 0.022).abs() < 1e-15);
    }

    #[test]
    fn switch_latency_symmetric_without_penalty() {
        let p = small();
        let a = FrequencyTriplet::new(200_000_000, 600_000_000, 1_000_000_000);
        let b = FrequencyTriplet::new(1_000_000_000, 600_000_000, 2_000_000_000);
        assert_eq!(
            p.switch_latency(&a, &b).unwrap(),
            p.switch_latency(&b, &a).unwrap()
        );
    }

    #[test]
    fn matrix_overrides_base_plus_penalty() {
        let mut b = ProfileBuilder {
            name: small().name,
            cpu_levels: small().cpu_levels,
            gpu_levels: small().gpu_levels,
            mem_levels: small().mem_levels,
            peak_perf: (0..3)
                .flat_map(|ci| {
                    let cl = small().cpu_levels.clone();
                    let gl = small().gpu_levels.clone();
                    (0..2).map(move |gi| {
                        ((cl[ci], gl[gi]), 1e9 * (1.0 + ci as f64) * (1.0 + gi as f64))
                    })
                })
                .collect(),
            mem_bandwidth: [(1_000_000_000u64, 10e9), (2_000_000_000u64, 20e9)]
                .into_iter()
                .collect(),
            voltage_cpu: small().cpu_levels.iter().map(|&f| (f, 0.7)).collect(),
            voltage_gpu: small().gpu_levels.iter().map(|&f| (f, 0.8)).collect(),
            voltage_mem: small().mem_levels.iter().map(|&f| (f, 0.9)).collect(),
            t_overhead: 0.0,
            t_switch_base: 0.007,
            t_switch_penalty: [(300_000_000u64, 0.015)].into_iter().collect(),
            t_switch_matrix: BTreeMap::new(),
            alpha_cpu: AlphaRange { alpha_max: 1e-9, alpha_min: 1e-9 },
            alpha_gpu: AlphaRange { alpha_max: 1e-9, alpha_min: 1e-9 },
            alpha_mem: AlphaRange { alpha_max: 1e-9, alpha_min: 1e-9 },
            k1: 0.0,
            k2: 0.4,
            r_th: 1.0,
            tau_th: 1.0,
            t_ambient: 25.0,
            t_prefill: 0.0,
        };
        b.t_switch_matrix
            .insert((600_000_000, 300_000_000), 0.00123);
        let p = b.build().unwrap();
        let from = FrequencyTriplet::new(200_000_000, 600_000_000, 1_000_000_000);
        let to = FrequencyTriplet::new(200_000_000, 300_000_000, 1_000_000_000);
        assert_eq!(p.switch_latency(&from, &to).unwrap(), 0.00123);
        // reverse pair has no matrix entry: base, no penalty at 600 MHz
        assert_eq!(p.switch_latency(&to, &from).unwrap(), 0.007);
    }

    #[test]
    fn decreasing_bandwidth_rejected() {
        let p = small();
        let mut text = p.to_json();
        // swap the two bandwidth values to violate monotonicity
        text = text.replace("10000000000.0", "XX").replace("20000000000.0", "10000000000.0");
        text = text.replace("XX", "20000000000.0");
        let err = parse_profile(&text, "inline").unwrap_err();
        assert!(matches!(err, Error::InvalidProfile { .. }), "{err}");
    }

    #[test]
    fn degenerate_single_level_profile_is_legal() {
        let p = degenerate();
        assert_eq!(p.min_triplet(), p.max_triplet());
        assert_eq!(p.peak_perf(1_000_000_000, 500_000_000).unwrap(), 5e9);
        assert_eq!(p.grid_size(), 1);
    }

    #[test]
    fn profile_roundtrips_through_json() {
        let p = small();
        let p2 = parse_profile(&p.to_json(), "roundtrip").unwrap();
        assert_eq!(p.cpu_levels, p2.cpu_levels);
        assert_eq!(
            p.peak_perf(600_000_000, 300_000_000).unwrap(),
            p2.peak_perf(600_000_000, 300_000_000).unwrap()
        );
        assert_eq!(p.t_switch_base, p2.t_switch_base);
    }
}
