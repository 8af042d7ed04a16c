//! Unified co-governor policies: coupled-vector scaling with CPU boost
//! windows at block boundaries, memory-controller coordination, pipelined
//! look-ahead frequency switching, a reactive per-component baseline, and
//! the first-order thermal model feeding the leakage term.

use serde::{Deserialize, Serialize};

use crate::device::{Component, DeviceProfile, FrequencyTriplet};
use crate::error::{Error, Result};
use crate::graph::ComputationGraph;
use crate::modeler::{compute_term, memory_term};
use crate::partitioner::{Schedule, SuperBlock};

/// Throttle release hysteresis, degrees C below the limit.
pub const THROTTLE_HYSTERESIS_C: f64 = 5.0;

/// Governor policy selector, as named in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Block-level schedule, coupled scaling, pipelined look-ahead switches.
    SparseDvfsLookahead,
    /// Same schedule, but every switch stalls the pipeline.
    SparseDvfsSerial,
    /// All clocks pinned to their maximum levels.
    MaxStatic,
    /// One whole-graph optimal triplet for the entire inference.
    ModelLevelStatic,
    /// Per-operator optimal triplets with serial switches.
    OperatorLevelSerial,
    /// Emulation of independent reactive per-component governors.
    ReactiveDefault,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::SparseDvfsLookahead,
        PolicyKind::SparseDvfsSerial,
        PolicyKind::MaxStatic,
        PolicyKind::ModelLevelStatic,
        PolicyKind::OperatorLevelSerial,
        PolicyKind::ReactiveDefault,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::SparseDvfsLookahead => "sparse_dvfs_lookahead",
            PolicyKind::SparseDvfsSerial => "sparse_dvfs_serial",
            PolicyKind::MaxStatic => "max_static",
            PolicyKind::ModelLevelStatic => "model_level_static",
            PolicyKind::OperatorLevelSerial => "operator_level_serial",
            PolicyKind::ReactiveDefault => "reactive_default",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::UnknownPolicy {
                name: name.to_string(),
            })
    }
}

/// Reactive baseline knobs: step up above `up_threshold` utilization, step
/// down below `down_threshold`, re-evaluated every `period_s`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ReactiveParams {
    pub up_threshold: f64,
    pub down_threshold: f64,
    pub period_s: f64,
}

impl Default for ReactiveParams {
    fn default() -> Self {
        ReactiveParams {
            up_threshold: 0.8,
            down_threshold: 0.3,
            period_s: 0.010,
        }
    }
}

/// A governor policy with its knobs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GovernorPolicy {
    pub kind: PolicyKind,
    /// Look-ahead lead time in seconds. `None` issues the next switch at
    /// the start of the current block, which masks as much latency as the
    /// block duration allows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lookahead_lead: Option<f64>,
    #[serde(default)]
    pub reactive: ReactiveParams,
}

impl GovernorPolicy {
    pub fn new(kind: PolicyKind) -> Self {
        GovernorPolicy {
            kind,
            lookahead_lead: None,
            reactive: ReactiveParams::default(),
        }
    }

    pub fn with_lead(kind: PolicyKind, lead: Option<f64>) -> Self {
        GovernorPolicy {
            kind,
            lookahead_lead: lead,
            ..GovernorPolicy::new(kind)
        }
    }
}

/// A CPU boost window pinned to a block boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostWindow {
    pub block_index: usize,
    /// Start offset on the bare (stall-free) schedule timeline, seconds.
    pub start: f64,
    pub duration: f64,
    /// Vector in effect during the window: CPU pinned to its maximum
    /// level, GPU and memory at the block's planned levels.
    pub triplet: FrequencyTriplet,
}

/// Insert a CPU boost window at the start of every block: the CPU races at
/// its top level for the prefill window so kernel launches never starve
/// the GPU, then drops to the block's planned level. GPU and memory are
/// set per block as one atomic vector.
pub fn plan_fuse(schedule: &Schedule, profile: &DeviceProfile) -> Vec<BoostWindow> {
    let cpu_max = *profile.cpu_levels.last().unwrap();
    let mut out = Vec::new();
    if profile.t_prefill <= 0.0 {
        return out;
    }
    let mut t = 0.0;
    for (i, block) in schedule.blocks.iter().enumerate() {
        out.push(BoostWindow {
            block_index: i,
            start: t,
            duration: profile.t_prefill.min(block.t_block),
            triplet: FrequencyTriplet::new(cpu_max, block.f_block.f_gpu, block.f_block.f_mem),
        });
        t += block.t_block;
    }
    out
}

/// Memory-coordination outcome for one block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryCoordination {
    pub triplet: FrequencyTriplet,
    /// Set when no GPU level could keep the compute path under the memory
    /// path; the nearest extreme level was kept instead.
    pub flagged: bool,
}

/// Re-balance one block's triplet from its Roofline classification.
///
/// Memory-bound blocks pin the memory controller to its top level and drop
/// the GPU to the smallest level that keeps the block's aggregate compute
/// path no slower than its memory path (the GPU was stalling on memory).
/// Compute-bound blocks keep the GPU and drop the memory controller to the
/// smallest level that still feeds it. The CPU level is never touched.
pub fn coordinate_memory(
    block: &SuperBlock,
    graph: &ComputationGraph,
    profile: &DeviceProfile,
) -> Result<MemoryCoordination> {
    let ops: Vec<_> = block.ops(graph).iter().collect();
    let f = block.f_block;
    let mut tc = 0.0;
    let mut tm = 0.0;
    for op in &ops {
        tc += compute_term(op, &f, profile)?;
        tm += memory_term(op, &f, profile)?;
    }
    let t_now = crate::modeler::block_exec_time(&ops, &f, profile)?;
    // A candidate is acceptable only if it also keeps the block time from
    // growing: aggregate-term feasibility alone can hide per-operator
    // stretching under the elementwise max.
    let no_slower = |cand: &FrequencyTriplet| -> Result<bool> {
        Ok(crate::modeler::block_exec_time(&ops, cand, profile)? <= t_now)
    };

    if tm >= tc {
        // Memory-bound (ties included): max out bandwidth, shed GPU clock.
        let f_mem = *profile.mem_levels.last().unwrap();
        let mut tm_max = 0.0;
        for op in &ops {
            tm_max += memory_term(op, &FrequencyTriplet::new(f.f_cpu, f.f_gpu, f_mem), profile)?;
        }
        for &g in &profile.gpu_levels {
            let cand = FrequencyTriplet::new(f.f_cpu, g, f_mem);
            let mut tc_g = 0.0;
            for op in &ops {
                tc_g += compute_term(op, &cand, profile)?;
            }
            if tc_g <= tm_max && no_slower(&cand)? {
                return Ok(MemoryCoordination {
                    triplet: cand,
                    flagged: false,
                });
            }
        }
        // No level satisfies both conditions: keep the nearest extreme that
        // does not slow the block down, and flag it.
        let extreme =
            FrequencyTriplet::new(f.f_cpu, *profile.gpu_levels.last().unwrap(), f_mem);
        Ok(MemoryCoordination {
            triplet: if no_slower(&extreme)? { extreme } else { f },
            flagged: true,
        })
    } else {
        // Compute-bound: scale the memory controller down to the minimum
        // level whose transfer path still hides behind compute. The current
        // level satisfies both conditions, so a feasible level always
        // exists.
        for &m in &profile.mem_levels {
            let cand = FrequencyTriplet::new(f.f_cpu, f.f_gpu, m);
            let mut tm_m = 0.0;
            for op in &ops {
                tm_m += memory_term(op, &cand, profile)?;
            }
            if tm_m <= tc && no_slower(&cand)? {
                return Ok(MemoryCoordination {
                    triplet: cand,
                    flagged: false,
                });
            }
        }
        Ok(MemoryCoordination {
            triplet: f,
            flagged: false,
        })
    }
}

/// One planned frequency transition between consecutive blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedSwitch {
    /// Index of the block before the transition.
    pub after_block: usize,
    pub from: FrequencyTriplet,
    pub to: FrequencyTriplet,
    /// Hardware transition latency.
    pub latency: f64,
    /// Portion of the latency overlapped with the preceding block.
    pub masked: f64,
    /// Unmasked stall charged between the blocks.
    pub residual_stall: f64,
}

/// The full event plan for a schedule's transitions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SwitchPlan {
    pub switches: Vec<PlannedSwitch>,
}

impl SwitchPlan {
    pub fn total_stall(&self) -> f64 {
        self.switches.iter().map(|s| s.residual_stall).sum()
    }

    pub fn total_latency(&self) -> f64 {
        self.switches.iter().map(|s| s.latency).sum()
    }
}

/// Plan the transitions of a schedule with a pipelined look-ahead of
/// `lead` seconds.
///
/// The switch command for block `i+1` is issued at
/// `max(start_i, end_i - lead)` and completes one transition latency
/// later; whatever fraction does not overlap block `i`'s execution stalls
/// the pipeline. Execution proceeds at the old vector until the switch
/// completes. `lead = 0` degenerates to fully serial switching;
/// `lead = infinity` issues at block start.
pub fn plan_lookahead(
    schedule: &Schedule,
    profile: &DeviceProfile,
    lead: f64,
) -> Result<SwitchPlan> {
    if !(lead >= 0.0) {
        return Err(Error::Invalid {
            message: format!("look-ahead lead must be >= 0, got {lead}"),
        });
    }
    let mut switches = Vec::new();
    for (i, pair) in schedule.blocks.windows(2).enumerate() {
        let latency = profile.switch_latency(&pair[0].f_block, &pair[1].f_block)?;
        let overlap = lead.min(pair[0].t_block);
        let masked = latency.min(overlap);
        switches.push(PlannedSwitch {
            after_block: i,
            from: pair[0].f_block,
            to: pair[1].f_block,
            latency,
            masked,
            residual_stall: latency - masked,
        });
    }
    Ok(SwitchPlan { switches })
}

/// Per-component utilization sample driving the reactive baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Utilization {
    pub cpu: f64,
    pub gpu: f64,
    pub mem: f64,
}

impl Utilization {
    pub fn get(&self, c: Component) -> f64 {
        match c {
            Component::Cpu => self.cpu,
            Component::Gpu => self.gpu,
            Component::Mem => self.mem,
        }
    }
}

fn step_level(levels: &[u64], current: u64, util: f64, params: &ReactiveParams) -> u64 {
    let idx = levels
        .iter()
        .position(|&l| l == current)
        .expect("current level is a table level");
    if util > params.up_threshold {
        levels[(idx + 1).min(levels.len() - 1)]
    } else if util < params.down_threshold {
        levels[idx.saturating_sub(1)]
    } else {
        current
    }
}

/// One reactive governor step: each component independently moves one
/// level up or down against its own utilization thresholds, clamped to
/// the level tables. Components never see each other's utilization; this
/// independence is what lets the CPU sag while the GPU is busy.
pub fn reactive_step(
    utilization: &Utilization,
    current: &FrequencyTriplet,
    params: &ReactiveParams,
    profile: &DeviceProfile,
) -> Result<FrequencyTriplet> {
    profile.validate_triplet(current)?;
    for c in [Component::Cpu, Component::Gpu, Component::Mem] {
        let u = utilization.get(c);
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Invalid {
                message: format!("{} utilization {u} outside [0, 1]", c.name()),
            });
        }
    }
    Ok(FrequencyTriplet::new(
        step_level(&profile.cpu_levels, current.f_cpu, utilization.cpu, params),
        step_level(&profile.gpu_levels, current.f_gpu, utilization.gpu, params),
        step_level(&profile.mem_levels, current.f_mem, utilization.mem, params),
    ))
}

/// Junction temperature state for the leakage model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub temp_c: f64,
}

impl ThermalState {
    pub fn ambient(profile: &DeviceProfile) -> Self {
        ThermalState {
            temp_c: profile.t_ambient,
        }
    }
}

/// Advance the first-order RC thermal model by `dt` seconds under constant
/// power. Steady state under constant power is `t_ambient + r_th * p`.
pub fn thermal_update(
    state: &ThermalState,
    p_total: f64,
    dt: f64,
    profile: &DeviceProfile,
) -> Result<ThermalState> {
    if !(dt > 0.0) {
        return Err(Error::Invalid {
            message: format!("thermal step dt must be > 0, got {dt}"),
        });
    }
    let decay = (-dt / profile.tau_th).exp();
    Ok(ThermalState {
        temp_c: profile.t_ambient
            + (state.temp_c - profile.t_ambient) * decay
            + profile.r_th * p_total * (1.0 - decay),
    })
}

/// When the junction temperature has reached the limit, the forced
/// minimum triplet to apply until it cools below `limit -
/// THROTTLE_HYSTERESIS_C`.
pub fn throttle_check(
    state: &ThermalState,
    profile: &DeviceProfile,
    limit_c: f64,
) -> Option<FrequencyTriplet> {
    if state.temp_c >= limit_c {
        Some(profile.min_triplet())
    } else {
        None
    }
}

/// Throttle latch used by the simulator: engages at the limit, releases
/// only after the hysteresis band is cleared.
#[derive(Debug, Clone, Copy)]
pub struct ThrottleLatch {
    pub limit_c: f64,
    engaged: bool,
}

impl ThrottleLatch {
    pub fn new(limit_c: f64) -> Self {
        ThrottleLatch {
            limit_c,
            engaged: false,
        }
    }

    /// Update with the current temperature; returns the forced triplet
    /// while throttling is engaged.
    pub fn update(
        &mut self,
        state: &ThermalState,
        profile: &DeviceProfile,
    ) -> Option<FrequencyTriplet> {
        if self.engaged {
            if state.temp_c < self.limit_c - THROTTLE_HYSTERESIS_C {
                self.engaged = false;
            }
        } else if throttle_check(state, profile, self.limit_c).is_some() {
            self.engaged = true;
        }
        self.engaged.then(|| profile.min_triplet())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::test_profiles::small;
    use crate::graph::{ComputationGraph, Operator, OperatorKind};
    use crate::partitioner::{partition, PartitionConfig};

    fn op(id: &str, w: f64, d: f64, s_comp: f64, s_mem: Option<f64>) -> Operator {
        Operator {
            id: id.to_string(),
            kind: OperatorKind::Other,
            w_comp: w,
            d_mem: d,
            s_comp,
            s_mem,
            structured: false,
        }
    }

    fn two_block_setup() -> (ComputationGraph, Schedule, crate::device::DeviceProfile) {
        let p = small();
        let g = ComputationGraph::chain(
            "t",
            vec![op("a", 20e9, 1e3, 0.0, None), op("b", 1e5, 40e9, 0.9, Some(0.0))],
        )
        .unwrap();
        let s = partition(&g, &p, &PartitionConfig::default(), 25.0).unwrap();
        assert_eq!(s.block_count(), 2);
        (g, s, p)
    }

    #[test]
    fn fuse_boost_windows_count_and_offsets() {
        let (_, s, p) = two_block_setup();
        let boosts = plan_fuse(&s, &p);
        assert_eq!(boosts.len(), 2);
        assert_eq!(boosts[0].start, 0.0);
        assert!((boosts[1].start - s.blocks[0].t_block).abs() < 1e-12);
        assert_eq!(boosts[0].triplet.f_cpu, *p.cpu_levels.last().unwrap());
        assert_eq!(boosts[0].triplet.f_gpu, s.blocks[0].f_block.f_gpu);
        for b in &boosts {
            assert!((b.duration - p.t_prefill).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_prefill_means_no_annotation() {
        let (_, s, p) = two_block_setup();
        let mut text = p.to_json();
        text = text.replace("\"t_prefill\": 0.0005", "\"t_prefill\": 0.0");
        let p0 = crate::device::parse_profile(&text, "inline").unwrap();
        assert!(plan_fuse(&s, &p0).is_empty());
    }

    #[test]
    fn lookahead_zero_lead_is_fully_serial() {
        let (_, s, p) = two_block_setup();
        let plan = plan_lookahead(&s, &p, 0.0).unwrap();
        assert_eq!(plan.switches.len(), 1);
        assert_eq!(plan.switches[0].residual_stall, plan.switches[0].latency);
        assert!(plan.switches[0].latency > 0.0);
    }

    #[test]
    fn lookahead_full_overlap_masks_everything() {
        let (_, s, p) = two_block_setup();
        // first block runs for seconds, far beyond any switch latency
        let plan = plan_lookahead(&s, &p, f64::INFINITY).unwrap();
        assert_eq!(plan.total_stall(), 0.0);
    }

    #[test]
    fn lookahead_stall_non_increasing_in_lead() {
        let p = small();
        let mut rng = crate::synth::TestRng::seeded(11);
        for i in 0..25 {
            let (_, s) = crate::synth::random_schedule(&mut rng, &p, 10, &format!("s{i}"));
            let mut prev = f64::INFINITY;
            for lead in [0.0, 0.001, 0.005, 0.02, 0.1, f64::INFINITY] {
                let stall = plan_lookahead(&s, &p, lead).unwrap().total_stall();
                assert!(stall <= prev + 1e-15);
                prev = stall;
            }
        }
    }

    #[test]
    fn coordinate_memory_never_slows_fixture_like_blocks() {
        let p = small();
        let g = ComputationGraph::chain(
            "t",
            vec![
                op("a", 20e9, 1e3, 0.0, None),
                op("b", 1e5, 40e9, 0.9, Some(0.0)),
                op("c", 10e9, 5e9, 0.3, None),
            ],
        )
        .unwrap();
        let s = partition(&g, &p, &PartitionConfig::default(), 25.0).unwrap();
        for b in &s.blocks {
            let coord = coordinate_memory(b, &g, &p).unwrap();
            let t_new = crate::modeler::block_exec_time(
                &b.ops(&g).iter().collect::<Vec<_>>(),
                &coord.triplet,
                &p,
            )
            .unwrap();
            assert!(t_new <= b.t_block + 1e-12);
            assert_eq!(coord.triplet.f_cpu, b.f_block.f_cpu);
        }
    }

    #[test]
    fn coordinate_memory_memory_bound_maxes_emc_and_sheds_gpu() {
        let p = small();
        // strongly memory-bound block at a needlessly high triplet
        let g = ComputationGraph::chain("t", vec![op("b", 1e6, 40e9, 0.9, Some(0.0))]).unwrap();
        let f = p.max_triplet();
        let block = SuperBlock {
            start: 0,
            end: 1,
            f_block: f,
            t_block: crate::modeler::block_exec_time(
                &[&g.operators[0]],
                &f,
                &p,
            )
            .unwrap(),
        };
        let coord = coordinate_memory(&block, &g, &p).unwrap();
        assert!(!coord.flagged);
        assert_eq!(coord.triplet.f_mem, *p.mem_levels.last().unwrap());
        assert_eq!(coord.triplet.f_gpu, p.gpu_levels[0]);
    }

    #[test]
    fn coordinate_memory_compute_bound_lowers_emc_only_while_safe() {
        let p = small();
        let g = ComputationGraph::chain("t", vec![op("a", 20e9, 1e3, 0.0, None)]).unwrap();
        let f = p.max_triplet();
        let block = SuperBlock {
            start: 0,
            end: 1,
            f_block: f,
            t_block: crate::modeler::block_exec_time(&[&g.operators[0]], &f, &p).unwrap(),
        };
        let coord = coordinate_memory(&block, &g, &p).unwrap();
        assert_eq!(coord.triplet.f_gpu, f.f_gpu);
        assert_eq!(coord.triplet.f_mem, p.mem_levels[0]);
        let t_new =
            crate::modeler::block_exec_time(&[&g.operators[0]], &coord.triplet, &p).unwrap();
        assert!(t_new <= block.t_block + 1e-15);
    }

    #[test]
    fn ridge_point_counts_as_memory_bound() {
        let p = small();
        // compute term == memory term at the max triplet:
        // w/6e9 == d/20e9 with w = 6e9, d = 20e9
        let g = ComputationGraph::chain("t", vec![op("r", 6e9, 20e9, 0.0, None)]).unwrap();
        let f = p.max_triplet();
        let block = SuperBlock {
            start: 0,
            end: 1,
            f_block: f,
            t_block: crate::modeler::block_exec_time(&[&g.operators[0]], &f, &p).unwrap(),
        };
        let coord = coordinate_memory(&block, &g, &p).unwrap();
        assert_eq!(coord.triplet.f_mem, *p.mem_levels.last().unwrap());
    }

    #[test]
    fn reactive_saturates_up_and_holds_in_band() {
        let p = small();
        let params = ReactiveParams::default();
        let mut f = p.min_triplet();
        let full = Utilization {
            cpu: 1.0,
            gpu: 1.0,
            mem: 1.0,
        };
        // longest table has 3 levels: 2 steps to saturate
        for _ in 0..2 {
            f = reactive_step(&full, &f, &params, &p).unwrap();
        }
        assert_eq!(f, p.max_triplet());
        let banded = Utilization {
            cpu: 0.5,
            gpu: 0.5,
            mem: 0.5,
        };
        assert_eq!(reactive_step(&banded, &f, &params, &p).unwrap(), f);
    }

    #[test]
    fn reactive_components_are_independent() {
        let p = small();
        let params = ReactiveParams::default();
        let mid = FrequencyTriplet::new(600_000_000, 300_000_000, 1_000_000_000);
        let base = Utilization {
            cpu: 0.1,
            gpu: 0.9,
            mem: 0.5,
        };
        let cpu_decision = reactive_step(&base, &mid, &params, &p).unwrap().f_cpu;
        for gpu_util in [0.0, 0.2, 0.5, 0.95, 1.0] {
            let u = Utilization {
                gpu: gpu_util,
                ..base
            };
            assert_eq!(reactive_step(&u, &mid, &params, &p).unwrap().f_cpu, cpu_decision);
        }
    }

    #[test]
    fn thermal_equilibrium_and_steady_state() {
        let p = small();
        let amb = ThermalState { temp_c: p.t_ambient };
        let stayed = thermal_update(&amb, 0.0, 1.0, &p).unwrap();
        assert!((stayed.temp_c - p.t_ambient).abs() < 1e-12);
        // dt >> tau: steady state t_ambient + r_th * P
        let hot = thermal_update(&amb, 10.0, 1e6, &p).unwrap();
        assert!((hot.temp_c - (p.t_ambient + p.r_th * 10.0)).abs() < 1e-9);
    }

    #[test]
    fn thermal_half_steps_compose() {
        let p = small();
        let s0 = ThermalState { temp_c: 40.0 };
        let full = thermal_update(&s0, 8.0, 0.5, &p).unwrap();
        let half = thermal_update(&s0, 8.0, 0.25, &p).unwrap();
        let two = thermal_update(&half, 8.0, 0.25, &p).unwrap();
        assert!(((two.temp_c - full.temp_c) / full.temp_c).abs() < 1e-9);
    }

    #[test]
    fn thermal_monotone_in_power() {
        let p = small();
        let s0 = ThermalState { temp_c: 30.0 };
        let mut prev = f64::NEG_INFINITY;
        for power in [0.0, 2.0, 5.0, 12.0] {
            let mut s = s0;
            for _ in 0..20 {
                s = thermal_update(&s, power, 0.1, &p).unwrap();
            }
            assert!(s.temp_c > prev);
            prev = s.temp_c;
        }
    }

    #[test]
    fn throttle_boundary_and_latch() {
        let p = small();
        assert!(throttle_check(&ThermalState { temp_c: 59.9 }, &p, 60.0).is_none());
        assert_eq!(
            throttle_check(&ThermalState { temp_c: 60.0 }, &p, 60.0),
            Some(p.min_triplet())
        );
        let mut latch = ThrottleLatch::new(60.0);
        assert!(latch.update(&ThermalState { temp_c: 59.0 }, &p).is_none());
        assert!(latch.update(&ThermalState { temp_c: 60.5 }, &p).is_some());
        // still engaged inside the hysteresis band
        assert!(latch.update(&ThermalState { temp_c: 56.0 }, &p).is_some());
        assert!(latch.update(&ThermalState { temp_c: 54.9 }, &p).is_none());
    }

    #[test]
    fn policy_kind_names_roundtrip() {
        for k in PolicyKind::ALL {
            assert_eq!(PolicyKind::parse(k.name()).unwrap(), k);
        }
        assert!(matches!(
            PolicyKind::parse("nope"),
            Err(Error::UnknownPolicy { .. })
        ));
    }
}
