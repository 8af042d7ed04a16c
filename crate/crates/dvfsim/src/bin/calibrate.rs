//! Fixture generator and calibration driver.
//!
//! Builds the reference device profile and the four bundled model graphs,
//! sizes every operator class so the greedy partitioner reproduces the
//! target block structure at N = 5, back-solves the transition-latency
//! matrix and per-model look-ahead leads from the target switching totals,
//! and verifies the full acceptance-facing behavior before writing the
//! fixture files. Run from the repo root:
//!
//! ```text
//! cargo run -p dvfsim --bin calibrate
//! ```
//!
//! The printed report documents every derived constant. See
//! `fixtures/README.md` for the procedure in prose.

use std::collections::BTreeMap;
use std::path::PathBuf;

use dvfsim::device::{AlphaRange, DeviceProfile, FrequencyTriplet, ProfileBuilder};
use dvfsim::governor::{GovernorPolicy, PolicyKind, ThermalState};
use dvfsim::graph::{ComputationGraph, Operator, OperatorKind};
use dvfsim::modeler::{optimal_triplet, predict_exec_time};
use dvfsim::partitioner::{
    operator_level_schedule, partition, switching_totals, PartitionConfig, Schedule,
};
use dvfsim::sim::{simulate, sweep_n, SimOptions};

const TEMP: f64 = 25.0;
const N_FACTOR: f64 = 5.0;
const EPS: f64 = 0.05;

// Profile grid constants. CPU levels follow the platform's 20-step table,
// GPU levels its five clocks (624 per the frequency table; one source
// lists 624.75), EMC levels are four representative steps.
const CPU_LEVELS: [u64; 20] = [
    115_200_000,
    192_000_000,
    268_800_000,
    345_600_000,
    422_400_000,
    499_200_000,
    576_000_000,
    652_800_000,
    729_600_000,
    806_400_000,
    883_200_000,
    960_000_000,
    1_036_800_000,
    1_113_600_000,
    1_190_400_000,
    1_267_200_000,
    1_344_000_000,
    1_420_800_000,
    1_497_600_000,
    1_510_400_000,
];
const GPU_LEVELS: [u64; 5] = [306_000_000, 408_000_000, 510_000_000, 612_000_000, 624_000_000];
const MEM_LEVELS: [u64; 4] = [204_000_000, 665_600_000, 2_133_000_000, 3_199_000_000];

const P0: f64 = 42e9; // peak FLOP/s at all-max clocks
const FEED_FLOOR: f64 = 0.25; // CPU feed factor at the lowest CPU clock
const BW_TABLE: [f64; 4] = [1.2e9, 2.4e9, 4.8e9, 8.0e9]; // achieved bytes/s per EMC level
const T_OVERHEAD: f64 = 1e-4;
const T_SWITCH_BASE: f64 = 5.6e-3;
const LOW_GPU_PENALTY: f64 = 16.5e-3; // uncalibrated transitions into 306 MHz
const V_GPU: [f64; 5] = [0.55, 0.64, 0.74, 0.88, 0.92];
const V_MEM: [f64; 4] = [0.55, 0.62, 0.78, 0.88];
const K1: f64 = 0.012;
const K2: f64 = 0.08;
const R_TH: f64 = 3.0;
const TAU_TH: f64 = 2.0;
const T_AMBIENT: f64 = 25.0;
const T_PREFILL: f64 = 0.25e-3;

fn feed(fc: u64) -> f64 {
    FEED_FLOOR + (1.0 - FEED_FLOOR) * fc as f64 / CPU_LEVELS[19] as f64
}

fn peak(fc: u64, fg: u64) -> f64 {
    P0 * (fg as f64 / GPU_LEVELS[4] as f64) * feed(fc)
}

fn bandwidth(fm: u64) -> f64 {
    BW_TABLE[MEM_LEVELS.iter().position(|&f| f == fm).unwrap()]
}

fn profile_builder(matrix: BTreeMap<(u64, u64), f64>) -> ProfileBuilder {
    let mut peak_perf = BTreeMap::new();
    for &fc in &CPU_LEVELS {
        for &fg in &GPU_LEVELS {
            peak_perf.insert((fc, fg), peak(fc, fg));
        }
    }
    ProfileBuilder {
        name: "orin-nano-reference".to_string(),
        cpu_levels: CPU_LEVELS.to_vec(),
        gpu_levels: GPU_LEVELS.to_vec(),
        mem_levels: MEM_LEVELS.to_vec(),
        peak_perf,
        mem_bandwidth: MEM_LEVELS.iter().map(|&f| (f, bandwidth(f))).collect(),
        voltage_cpu: CPU_LEVELS
            .iter()
            .enumerate()
            .map(|(i, &f)| (f, 0.50 + 0.55 * i as f64 / 19.0))
            .collect(),
        voltage_gpu: GPU_LEVELS
            .iter()
            .zip(V_GPU)
            .map(|(&f, v)| (f, v))
            .collect(),
        voltage_mem: MEM_LEVELS
            .iter()
            .zip(V_MEM)
            .map(|(&f, v)| (f, v))
            .collect(),
        t_overhead: T_OVERHEAD,
        t_switch_base: T_SWITCH_BASE,
        t_switch_penalty: [(GPU_LEVELS[0], LOW_GPU_PENALTY)].into_iter().collect(),
        t_switch_matrix: matrix,
        alpha_cpu: AlphaRange { alpha_max: 1.5e-9, alpha_min: 0.66e-9 },
        alpha_gpu: AlphaRange { alpha_max: 11e-9, alpha_min: 6.0e-9 },
        alpha_mem: AlphaRange { alpha_max: 1.3e-9, alpha_min: 0.54e-9 },
        k1: K1,
        k2: K2,
        r_th: R_TH,
        tau_th: TAU_TH,
        t_ambient: T_AMBIENT,
        t_prefill: T_PREFILL,
    }
}

/// The calibrated transition-latency matrix, back-solved from the target
/// cumulative switching totals of the four fixture schedules. Block-level
/// transitions pin the cheap entries; operator-level transitions between
/// interleaved classes carry full-scale switch costs.
fn switch_matrix() -> BTreeMap<(u64, u64), f64> {
    let g = GPU_LEVELS;
    [
        // resnet18: one dense(510) -> sparse(306) block transition = 7.23 ms
        ((g[2], g[0]), 7.23e-3),
        // resnet101 head and vit_l16 dense(612) -> sparse(306); shared
        ((g[3], g[0]), 0.92e-3),
        // vit_l16 sparse -> dense: 6*0.92 + 5*y = 7.92 -> y = 0.48
        ((g[0], g[3]), 0.48e-3),
        // resnet101 low-CPU/mid-CPU stage alternation at 306 MHz:
        // 0.92 + 14*z = 10.81 -> z = 9.89/14
        ((g[0], g[0]), 9.89e-3 / 14.0),
        // vit_b16 dense(624) <-> sparse(306): 4x + 3y = 5.44
        ((g[4], g[0]), 0.86e-3),
        ((g[0], g[4]), 2.0e-3 / 3.0),
        // operator-level transitions between interleaved classes
        ((g[0], g[2]), 7.0e-3),
        ((g[4], g[1]), 7.0e-3),
        ((g[1], g[4]), 7.0e-3),
    ]
    .into_iter()
    .collect()
}

#[derive(Debug, Clone)]
struct Class {
    name: &'static str,
    kind: OperatorKind,
    w: f64,
    d: f64,
    s_comp: f64,
    s_mem: Option<f64>,
    structured: bool,
}

impl Class {
    fn op(&self, index: usize) -> Operator {
        Operator {
            id: format!("{}{index:02}", self.name),
            kind: self.kind,
            w_comp: self.w,
            d_mem: self.d,
            s_comp: self.s_comp,
            s_mem: self.s_mem,
            structured: self.structured,
        }
    }

    fn w_eff(&self) -> f64 {
        self.w * (1.0 - self.s_comp)
    }

    fn with_padded_nominal(&self, w_nominal: f64) -> Class {
        let mut c = self.clone();
        assert!(
            w_nominal >= c.w_eff(),
            "{}: padding target {w_nominal} below effective {}",
            c.name,
            c.w_eff()
        );
        let s = 1.0 - c.w_eff() / w_nominal;
        c.w = w_nominal;
        c.s_comp = s;
        if c.structured {
            // keep the structured invariant s_mem <= s_comp
            if let Some(sm) = c.s_mem {
                c.s_mem = Some(sm.min(s));
            }
        }
        c
    }
}

fn land(
    class: &Class,
    profile: &DeviceProfile,
    budget: Option<f64>,
) -> (FrequencyTriplet, f64, dvfsim::Bound) {
    let op = class.op(0);
    let f = optimal_triplet(&op, TEMP, profile, budget).expect("class has a feasible triplet");
    let est = predict_exec_time(&op, &f, profile).expect("estimate");
    (f, est.t_exe, est.bound)
}

fn gpu_index(f: &FrequencyTriplet) -> usize {
    GPU_LEVELS.iter().position(|&g| g == f.f_gpu).unwrap()
}

/// Dense class pinned by the latency budget: the workload is sized so the
/// target time is met exactly at full CPU clock and the target GPU level,
/// and the budget sits 0.5% above, which rules out every slower grid
/// point. The energy search then lands on the pinned corner (or the same
/// level at full clock), never on a lower GPU level.
fn derive_dense(
    name: &'static str,
    kind: OperatorKind,
    s_comp: f64,
    target_t: f64,
    target_gpu: usize,
    profile: &DeviceProfile,
) -> (Class, f64) {
    let w_eff = (target_t - T_OVERHEAD) * peak(CPU_LEVELS[19], GPU_LEVELS[target_gpu]);
    let class = Class {
        name,
        kind,
        w: w_eff / (1.0 - s_comp),
        d: 2e6,
        s_comp,
        s_mem: Some(s_comp),
        structured: true,
    };
    let budget = target_t * 1.005;
    let (f, t, bound) = land(&class, profile, Some(budget));
    assert_eq!(
        gpu_index(&f),
        target_gpu,
        "{name}: expected gpu level {target_gpu}, landed {f} (t={t:.6}, {bound:?})"
    );
    assert!(t <= budget, "{name}: landing time {t} exceeds budget {budget}");
    assert!(
        (t - target_t).abs() < 0.006 * target_t,
        "{name}: landed t={:.4} ms vs target {:.4} ms",
        t * 1e3,
        target_t * 1e3
    );
    (class, budget)
}

/// Dense class left to the natural (unbudgeted) optimum; asserts the
/// landing GPU level and iterates the workload against the landed point.
fn derive_dense_natural(
    name: &'static str,
    kind: OperatorKind,
    s_comp: f64,
    target_t: f64,
    target_gpu: usize,
    profile: &DeviceProfile,
) -> Class {
    let mut class = Class {
        name,
        kind,
        w: (target_t - T_OVERHEAD) * peak(CPU_LEVELS[14], GPU_LEVELS[target_gpu])
            / (1.0 - s_comp),
        d: 1e6,
        s_comp,
        s_mem: Some(s_comp),
        structured: true,
    };
    for _ in 0..4 {
        let (f, _, _) = land(&class, profile, None);
        class.w = (target_t - T_OVERHEAD) * peak(f.f_cpu, f.f_gpu) / (1.0 - s_comp);
    }
    let (f, t, bound) = land(&class, profile, None);
    assert_eq!(
        gpu_index(&f),
        target_gpu,
        "{name}: expected natural gpu level {target_gpu}, landed {f} (t={t:.6}, {bound:?})"
    );
    assert!(
        (t - target_t).abs() < 0.02 * target_t,
        "{name}: landed {f} with t={:.4} ms (target {:.4} ms)",
        t * 1e3,
        target_t * 1e3
    );
    class
}

/// Memory-ridge class: the memory path at the top EMC level floors the
/// execution time, so no clock above the pin buys speed. `pin_cpu` is the
/// smallest CPU level whose compute path ducks under that floor; the
/// energy optimum sits exactly there, at the lowest GPU level.
fn derive_ridge(
    name: &'static str,
    kind: OperatorKind,
    s_comp: f64,
    target_t: f64,
    pin_cpu: usize,
    profile: &DeviceProfile,
) -> Class {
    let tm = target_t - T_OVERHEAD;
    let tc_pin = tm / 1.02;
    let class = Class {
        name,
        kind,
        w: tc_pin * peak(CPU_LEVELS[pin_cpu], GPU_LEVELS[0]) / (1.0 - s_comp),
        d: tm * bandwidth(MEM_LEVELS[3]),
        s_comp,
        s_mem: Some(0.0),
        structured: false,
    };
    let (f, t, bound) = land(&class, profile, None);
    assert_eq!(gpu_index(&f), 0, "{name}: ridge class escaped to {f}");
    assert_eq!(
        f.f_mem, MEM_LEVELS[3],
        "{name}: ridge class left the top EMC level: {f}"
    );
    assert_eq!(
        f.f_cpu, CPU_LEVELS[pin_cpu],
        "{name}: expected cpu pin at level {pin_cpu}, landed {f} (t={:.4} ms, {bound:?})",
        t * 1e3
    );
    assert_eq!(bound, dvfsim::Bound::Memory, "{name}: expected memory-bound at {f}");
    assert!(
        (t - target_t).abs() < 0.02 * target_t,
        "{name}: landed {f} with t={:.4} ms (target {:.4} ms)",
        t * 1e3,
        target_t * 1e3
    );
    class
}

/// Launch-dominated micro class (activation style): the per-operator
/// system overhead dominates, so no clock buys meaningful speed and the
/// optimum is the global power minimum.
fn derive_oh_micro(
    name: &'static str,
    kind: OperatorKind,
    s_comp: f64,
    target_t: f64,
    profile: &DeviceProfile,
) -> Class {
    let tc = target_t - T_OVERHEAD;
    assert!(tc <= T_OVERHEAD, "{name}: micro class must be overhead-dominated");
    let mut class = Class {
        name,
        kind,
        w: tc * peak(CPU_LEVELS[0], GPU_LEVELS[0]) / (1.0 - s_comp),
        d: 5e4,
        s_comp,
        s_mem: Some(0.0),
        structured: false,
    };
    for _ in 0..6 {
        let (f, _, _) = land(&class, profile, None);
        class.w = tc * peak(f.f_cpu, GPU_LEVELS[0]) / (1.0 - s_comp);
    }
    let (f, t, bound) = land(&class, profile, None);
    assert_eq!(gpu_index(&f), 0, "{name}: micro class escaped to {f} ({bound:?})");
    assert_eq!(
        f.f_mem, MEM_LEVELS[0],
        "{name}: micro class should keep the lowest EMC level, landed {f}"
    );
    assert!(
        (t - target_t).abs() < 0.02 * target_t,
        "{name}: landed {f} with t={:.4} ms vs target {:.4} ms",
        t * 1e3,
        target_t * 1e3
    );
    class
}

/// One fixture blueprint: interleave patterns of classes.
struct Blueprint {
    name: &'static str,
    /// segments as (pattern, class index per symbol)
    segments: Vec<Vec<usize>>,
    classes: Vec<Class>,
    budget: Option<f64>,
    target_blocks: usize,
    target_serial_ms: f64,
    target_residual_ms: f64,
    lead: f64,
    total_flops: f64,
    /// class index absorbing the nominal-FLOPs padding
    padder: usize,
}

impl Blueprint {
    fn build_graph(&self) -> ComputationGraph {
        let mut counters = vec![0usize; self.classes.len()];
        let mut ops = Vec::new();
        for seg in &self.segments {
            for &ci in seg {
                ops.push(self.classes[ci].op(counters[ci]));
                counters[ci] += 1;
            }
        }
        ComputationGraph::chain(self.name, ops).expect("fixture graph is valid")
    }

    fn op_count(&self) -> usize {
        self.segments.iter().map(|s| s.len()).sum()
    }

    fn pad_to_flops(&mut self) {
        let counts: Vec<usize> = (0..self.classes.len())
            .map(|ci| self.segments.iter().flatten().filter(|&&x| x == ci).count())
            .collect();
        let others: f64 = self
            .classes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != self.padder)
            .map(|(i, c)| counts[i] as f64 * c.w)
            .sum();
        let pad_count = counts[self.padder] as f64;
        let w_nominal = (self.total_flops - others) / pad_count;
        self.classes[self.padder] = self.classes[self.padder].with_padded_nominal(w_nominal);
        assert!(
            self.classes[self.padder].s_comp < 0.985,
            "{}: padding sparsity {:.4} implausibly high",
            self.name,
            self.classes[self.padder].s_comp
        );
    }
}

fn seg(pattern: &[usize], reps: usize) -> Vec<usize> {
    pattern.iter().copied().cycle().take(reps).collect()
}

fn blueprint_resnet18(profile: &DeviceProfile) -> Blueprint {
    // classes: 0 = conv (dense, 510 MHz), 1 = relu (memory-bound micro),
    // 2 = tail sparse conv (ridge, padder)
    let (conv, budget) = derive_dense("conv", OperatorKind::Conv, 0.20, 4.75e-3, 2, profile);
    let relu = derive_oh_micro("relu", OperatorKind::Activation, 0.90, 0.2e-3, profile);
    let tail = derive_ridge("sconv", OperatorKind::Conv, 0.90, 1.8e-3, 2, profile);
    Blueprint {
        name: "resnet18",
        // head: conv/relu interleave crossing the threshold at its last op;
        // tail: ten floor-class sparse convolutions
        segments: vec![
            vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0],
            seg(&[2], 10),
        ],
        classes: vec![conv, relu, tail],
        budget: Some(budget),
        target_blocks: 2,
        target_serial_ms: 7.23,
        target_residual_ms: 0.12,
        lead: 7.11e-3,
        total_flops: 1.82e9,
        padder: 2,
    }
}

fn blueprint_resnet101(profile: &DeviceProfile) -> Blueprint {
    // classes: 0 = head conv (dense, 612 MHz), 1 = relu, 2 = ridge-pinned
    // sparse stage (low CPU), 3 = floor sparse stage (mid CPU, padder)
    let (conv, budget) = derive_dense("conv", OperatorKind::Conv, 0.35, 7.1e-3, 3, profile);
    let relu = derive_oh_micro("relu", OperatorKind::Activation, 0.90, 0.2e-3, profile);
    let stage_a = derive_ridge("sa", OperatorKind::Conv, 0.35, 4.28e-3, 2, profile);
    let stage_b = derive_ridge("sb", OperatorKind::Conv, 0.60, 5.05e-3, 8, profile);
    let mut segments = vec![vec![0, 1, 0, 1, 0, 1, 0]];
    for _ in 0..7 {
        segments.push(seg(&[2], 7));
        segments.push(seg(&[3], 6));
    }
    segments.push(seg(&[2], 7));
    Blueprint {
        name: "resnet101",
        segments,
        classes: vec![conv, relu, stage_a, stage_b],
        budget: Some(budget),
        target_blocks: 16,
        target_serial_ms: 10.81,
        target_residual_ms: 1.45,
        lead: 0.624e-3,
        total_flops: 7.87e9,
        padder: 3,
    }
}

fn blueprint_vit_b16(profile: &DeviceProfile) -> Blueprint {
    // classes: 0 = attention (dense, 624 MHz), 1 = mlp (dense, natural
    // mid-grid optimum), 2 = sparse linear (floor, padder)
    let (attn, budget) = derive_dense("attn", OperatorKind::Attention, 0.35, 8.9e-3, 4, profile);
    let mlp = derive_dense_natural("mlp", OperatorKind::Linear, 0.0, 3.2e-3, 1, profile);
    let slin = derive_ridge("slin", OperatorKind::Linear, 0.60, 7.45e-3, 2, profile);
    let mut segments = Vec::new();
    for i in 0..4 {
        segments.push(vec![0, 1, 0, 1, 0]);
        segments.push(seg(&[2], if i == 3 { 6 } else { 4 }));
    }
    Blueprint {
        name: "vit_b16",
        segments,
        classes: vec![attn, mlp, slin],
        budget: Some(budget),
        target_blocks: 8,
        target_serial_ms: 5.44,
        target_residual_ms: 0.72,
        lead: 0.68e-3,
        total_flops: 11.29e9,
        padder: 2,
    }
}

fn blueprint_vit_l16(profile: &DeviceProfile) -> Blueprint {
    // classes: 0 = attention (dense, 612 MHz), 1 = gelu (launch micro),
    // 2/3 = sparse linear variants at two CPU pins (padder = 2). The
    // within-segment alternation is what lets small N split the sparse
    // stages, producing the energy U-shape over the N sweep.
    let (attn, budget) = derive_dense("attn", OperatorKind::Attention, 0.35, 9.7e-3, 3, profile);
    let gelu = derive_oh_micro("gelu", OperatorKind::Activation, 0.90, 0.2e-3, profile);
    let slin_a = derive_ridge("slina", OperatorKind::Linear, 0.60, 4.3e-3, 2, profile);
    let slin_b = derive_ridge("slinb", OperatorKind::Linear, 0.90, 4.3e-3, 8, profile);
    let mut segments = Vec::new();
    for i in 0..6 {
        // two layers carry an extra activation pair; the threshold
        // crossing stays on the closing attention either way
        if i < 2 {
            segments.push(vec![0, 1, 0, 1, 1, 0]);
        } else {
            segments.push(vec![0, 1, 0, 1, 0]);
        }
        segments.push(seg(&[2, 3], 7));
    }
    Blueprint {
        name: "vit_l16",
        segments,
        classes: vec![attn, gelu, slin_a, slin_b],
        budget: Some(budget),
        target_blocks: 12,
        target_serial_ms: 7.92,
        target_residual_ms: 1.08,
        lead: 0.74e-3,
        total_flops: 39.86e9,
        padder: 2,
    }
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn describe_schedule(s: &Schedule, graph: &ComputationGraph, profile: &DeviceProfile) {
    for (i, b) in s.blocks.iter().enumerate() {
        let ids = b.ops(graph);
        println!(
            "    block {i}: ops {}..{} ({} ops) f={} t_block={:.3} ms [{}..{}]",
            b.start,
            b.end,
            b.len(),
            b.f_block,
            b.t_block * 1e3,
            ids.first().unwrap().id,
            ids.last().unwrap().id
        );
    }
    let total = switching_totals(s, profile).unwrap();
    println!("    block-level switching total: {:.4} ms", total * 1e3);
}

fn scenario_json(bp: &Blueprint) -> String {
    serde_json::json!({
        "graph": format!("../{}.json", bp.name),
        "profile": "../orin_nano.json",
        "policy": {
            "kind": "sparse_dvfs_lookahead",
            "lookahead_lead": bp.lead,
            "reactive": { "up_threshold": 0.8, "down_threshold": 0.3, "period_s": 0.01 }
        },
        "partition": { "n": N_FACTOR, "eps": EPS, "budget": bp.budget },
        "thermal": { "t0": TEMP }
    })
    .to_string()
}

fn check_blueprint(bp: &mut Blueprint, profile: &DeviceProfile) -> ComputationGraph {
    println!("== {} ==", bp.name);
    bp.pad_to_flops();
    let graph = bp.build_graph();
    assert_eq!(graph.len(), bp.op_count());
    let flops = graph.total_flops();
    assert!(
        ((flops - bp.total_flops) / bp.total_flops).abs() < 1e-9,
        "{}: total FLOPs {flops} vs target {}",
        bp.name,
        bp.total_flops
    );
    println!(
        "  {} operators, {:.3} GFLOPs nominal",
        graph.len(),
        flops / 1e9
    );
    for c in &bp.classes {
        let (f, t, bound) = land(c, profile, bp.budget);
        println!(
            "  class {:6} w={:.4e} d={:.4e} s_comp={:.3} -> {} t={:.3} ms {bound:?}",
            c.name, c.w, c.d, c.s_comp, f, t * 1e3
        );
    }

    let cfg = PartitionConfig {
        n_factor: N_FACTOR,
        similarity_eps: EPS,
        latency_budget: bp.budget,
    };
    let schedule = partition(&graph, profile, &cfg, TEMP).unwrap();
    describe_schedule(&schedule, &graph, profile);
    assert_eq!(
        schedule.block_count(),
        bp.target_blocks,
        "{}: expected {} blocks",
        bp.name,
        bp.target_blocks
    );
    // amortization margins
    let threshold = N_FACTOR * profile.t_switch_base;
    for (i, b) in schedule.blocks.iter().enumerate() {
        if i + 1 < schedule.block_count() {
            let margin = b.t_block - threshold;
            assert!(
                margin >= 0.0,
                "{}: interior block {i} below threshold",
                bp.name
            );
            assert!(
                margin >= 0.8e-3,
                "{}: interior block {i} margin {:.3} ms too thin",
                bp.name,
                margin * 1e3
            );
        }
    }
    graph
}

fn verify_switching(
    bp: &Blueprint,
    graph: &ComputationGraph,
    profile: &DeviceProfile,
) -> (f64, f64) {
    let cfg = PartitionConfig {
        n_factor: N_FACTOR,
        similarity_eps: EPS,
        latency_budget: bp.budget,
    };
    // the simulator's planned schedule includes memory coordination
    let schedule = dvfsim::sim::plan_sparse_schedule(graph, profile, &cfg, TEMP).unwrap();
    let serial = switching_totals(&schedule, profile).unwrap();
    let plan = dvfsim::governor::plan_lookahead(&schedule, profile, bp.lead).unwrap();
    let residual = plan.total_stall();
    println!(
        "  serial switching {:.4} ms (target {:.2}), look-ahead residual {:.4} ms (target {:.2})",
        serial * 1e3,
        bp.target_serial_ms,
        residual * 1e3,
        bp.target_residual_ms
    );
    let within = |value: f64, target_ms: f64| {
        (value * 1e3 - target_ms).abs() <= 0.05 * target_ms
    };
    assert!(within(serial, bp.target_serial_ms), "{}: serial off target", bp.name);
    assert!(within(residual, bp.target_residual_ms), "{}: residual off target", bp.name);

    let op_schedule = operator_level_schedule(graph, profile, &cfg, TEMP).unwrap();
    let op_total = switching_totals(&op_schedule, profile).unwrap();
    let ratio = op_total / serial;
    println!(
        "  operator-level switching {:.3} ms -> reduction {:.2}x",
        op_total * 1e3,
        ratio
    );
    (serial, ratio)
}

fn verify_policies(bp: &Blueprint, graph: &ComputationGraph, profile: &DeviceProfile) {
    let cfg = PartitionConfig {
        n_factor: N_FACTOR,
        similarity_eps: EPS,
        latency_budget: bp.budget,
    };
    let opts = SimOptions::default();
    let init = ThermalState { temp_c: TEMP };
    let mut results = BTreeMap::new();
    for kind in PolicyKind::ALL {
        let policy = GovernorPolicy {
            kind,
            lookahead_lead: Some(bp.lead),
            ..GovernorPolicy::new(kind)
        };
        let trace = simulate(graph, profile, &policy, &cfg, init, &opts).unwrap();
        println!(
            "  {:24} makespan {:8.3} ms energy {:8.4} J stall {:7.3} ms blocks {}",
            kind.name(),
            trace.makespan * 1e3,
            trace.total_energy,
            trace.total_switch_stall * 1e3,
            trace.block_count
        );
        results.insert(kind.name(), trace);
    }
    let e = |k: &str| results[k].total_energy;
    let m = |k: &str| results[k].makespan;
    assert!(e("sparse_dvfs_lookahead") < e("reactive_default"), "{}: vs reactive", bp.name);
    assert!(e("sparse_dvfs_lookahead") < e("max_static"), "{}: vs max_static", bp.name);
    assert!(
        e("sparse_dvfs_lookahead") < e("operator_level_serial"),
        "{}: lookahead gain must exceed the operator-level gain",
        bp.name
    );
    assert!(m("max_static") <= m("sparse_dvfs_lookahead"), "{}: makespan order", bp.name);
    assert!(
        m("sparse_dvfs_lookahead") <= m("sparse_dvfs_serial"),
        "{}: lookahead vs serial",
        bp.name
    );
    // cost-gain ordering vs the reactive baseline
    let base = &results["reactive_default"];
    let cg = |k: &str| dvfsim::sim::cost_gain_ratio(&results[k], base).unwrap();
    let cg_look = cg("sparse_dvfs_lookahead");
    let cg_serial_ops = cg("operator_level_serial");
    println!(
        "  cost-gain: lookahead {:.2}% vs operator-serial {:.2}%",
        cg_look, cg_serial_ops
    );
    assert!(cg_look < cg_serial_ops, "{}: cost-gain ordering", bp.name);
}

fn verify_sweep(bp: &Blueprint, graph: &ComputationGraph, profile: &DeviceProfile) {
    let cfg = PartitionConfig {
        n_factor: N_FACTOR,
        similarity_eps: EPS,
        latency_budget: bp.budget,
    };
    let policy = GovernorPolicy {
        kind: PolicyKind::SparseDvfsLookahead,
        lookahead_lead: Some(bp.lead),
        ..GovernorPolicy::new(PolicyKind::SparseDvfsLookahead)
    };
    let rows = sweep_n(
        graph,
        profile,
        &policy,
        &cfg,
        ThermalState { temp_c: TEMP },
        &SimOptions::default(),
        &[1.0, 2.0, 5.0, 10.0],
    )
    .unwrap();
    print!("  N sweep blocks:");
    for r in &rows {
        print!(" {}:{}", r.n, r.block_count);
    }
    println!();
    for pair in rows.windows(2) {
        assert!(
            pair[0].block_count >= pair[1].block_count,
            "{}: block counts not monotone over N",
            bp.name
        );
    }
}

fn verify_ushape(bp: &Blueprint, graph: &ComputationGraph, profile: &DeviceProfile) {
    let cfg = PartitionConfig {
        n_factor: N_FACTOR,
        similarity_eps: EPS,
        latency_budget: bp.budget,
    };
    let policy = GovernorPolicy {
        kind: PolicyKind::SparseDvfsLookahead,
        lookahead_lead: Some(bp.lead),
        ..GovernorPolicy::new(PolicyKind::SparseDvfsLookahead)
    };
    let ns = [1.0, 2.0, 3.0, 5.0, 8.0, 10.0, 20.0];
    let rows = sweep_n(
        graph,
        profile,
        &policy,
        &cfg,
        ThermalState { temp_c: TEMP },
        &SimOptions::default(),
        &ns,
    )
    .unwrap();
    println!("  energy vs N:");
    for r in &rows {
        println!(
            "    N={:4} blocks {:3} energy {:.6} J stall {:.3} ms",
            r.n,
            r.block_count,
            r.total_energy,
            r.total_switch_stall * 1e3
        );
    }
    let min_idx = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_energy.partial_cmp(&b.1.total_energy).unwrap())
        .unwrap()
        .0;
    assert!(
        min_idx > 0 && min_idx + 1 < rows.len(),
        "{}: energy minimum at sweep edge (index {min_idx})",
        bp.name
    );
    let e_min = rows[min_idx].total_energy;
    assert!(
        rows.first().unwrap().total_energy > e_min + 1e-3
            && rows.last().unwrap().total_energy > e_min + 1e-3,
        "{}: flat U-shape edges",
        bp.name
    );
    println!("  energy minimum at N={} (interior)", ns[min_idx]);
}

fn verify_throttle(graph: &ComputationGraph, profile: &DeviceProfile, bp: &Blueprint) {
    let cfg = PartitionConfig {
        n_factor: N_FACTOR,
        similarity_eps: EPS,
        latency_budget: bp.budget,
    };
    let opts = SimOptions {
        thermal_limit: Some(55.0),
        repeat: 60,
        ..SimOptions::default()
    };
    let init = ThermalState { temp_c: TEMP };
    let max_trace = simulate(
        graph,
        profile,
        &GovernorPolicy::new(PolicyKind::MaxStatic),
        &cfg,
        init,
        &opts,
    )
    .unwrap();
    let look_trace = simulate(
        graph,
        profile,
        &GovernorPolicy::with_lead(PolicyKind::SparseDvfsLookahead, Some(bp.lead)),
        &cfg,
        init,
        &opts,
    )
    .unwrap();
    let max_cross = max_trace.first_crossing(55.0);
    let look_cross = look_trace.first_crossing(55.0);
    println!(
        "  sustained load: max_static crosses 55C at {:?} s (peak {:.2}), lookahead {:?} (peak {:.2})",
        max_cross, max_trace.peak_temp_c, look_cross, look_trace.peak_temp_c
    );
    let max_t = max_cross.expect("max_static must cross the thermal limit");
    match look_cross {
        None => {}
        Some(t) => assert!(max_t < t, "lookahead crossed before max_static"),
    }
}

fn antagonistic_fixture() -> ComputationGraph {
    // alternating GPU-heavy (long, launch share ~ 0) and CPU-heavy
    // (launch-dominated) phases for the reactive-governor study
    let long = Class {
        name: "heavy",
        kind: OperatorKind::Conv,
        w: 1.65e9,
        d: 2e6,
        s_comp: 0.0,
        s_mem: None,
        structured: false,
    };
    let tiny = Class {
        name: "launch",
        kind: OperatorKind::Other,
        w: 2e5,
        d: 1e4,
        s_comp: 0.0,
        s_mem: None,
        structured: false,
    };
    let mut ops = Vec::new();
    let mut li = 0;
    let mut ti = 0;
    for _ in 0..2 {
        for _ in 0..3 {
            ops.push(long.op(li));
            li += 1;
        }
        for _ in 0..5 {
            ops.push(tiny.op(ti));
            ti += 1;
        }
    }
    ComputationGraph::chain("antagonistic", ops).unwrap()
}

fn write_fixture_files(
    profile: &DeviceProfile,
    graphs: &[(&Blueprint, &ComputationGraph)],
) -> std::io::Result<()> {
    let dir = fixtures_dir();
    std::fs::create_dir_all(dir.join("scenarios"))?;
    std::fs::write(dir.join("orin_nano.json"), profile.to_json())?;
    for (bp, graph) in graphs {
        std::fs::write(dir.join(format!("{}.json", bp.name)), graph.to_json())?;
        std::fs::write(
            dir.join("scenarios").join(format!("{}.json", bp.name)),
            scenario_json(bp),
        )?;
    }
    // per-input sparsity trace example for resnet18
    let trace = serde_json::json!([
        {},
        { "relu00": [0.98, 0.0], "relu01": [0.98, 0.0] },
        { "conv00": [0.30, 0.30], "sconv00": [0.50, 0.0] }
    ]);
    std::fs::write(dir.join("resnet18_trace.json"), trace.to_string())?;

    let anta = antagonistic_fixture();
    std::fs::write(dir.join("antagonistic.json"), anta.to_json())?;
    let anta_scenario = serde_json::json!({
        "graph": "../antagonistic.json",
        "profile": "../orin_nano.json",
        "policy": { "kind": "reactive_default",
                    "reactive": { "up_threshold": 0.8, "down_threshold": 0.3, "period_s": 0.01 } },
        "partition": { "n": N_FACTOR, "eps": EPS },
        "thermal": { "t0": TEMP }
    });
    std::fs::write(
        dir.join("scenarios").join("antagonistic.json"),
        anta_scenario.to_string(),
    )?;
    let sustained = serde_json::json!({
        "graph": "../vit_b16.json",
        "profile": "../orin_nano.json",
        "policy": { "kind": "max_static" },
        "partition": { "n": N_FACTOR, "eps": EPS },
        "thermal": { "t0": TEMP, "limit": 55.0 },
        "repeat": 60
    });
    std::fs::write(
        dir.join("scenarios").join("sustained_vit_b16.json"),
        sustained.to_string(),
    )?;
    Ok(())
}

fn main() {
    let profile = profile_builder(switch_matrix()).build().expect("profile valid");
    println!(
        "profile: {} cpu x {} gpu x {} mem levels, base switch {:.1} ms",
        profile.cpu_levels.len(),
        profile.gpu_levels.len(),
        profile.mem_levels.len(),
        profile.t_switch_base * 1e3
    );
    let max_power =
        dvfsim::modeler::predict_power(&profile.max_triplet(), 45.0, 0.0, &profile).unwrap();
    println!("max-clock power at 45C: {:.2} W", max_power.p_total);

    let mut bps = vec![
        blueprint_resnet18(&profile),
        blueprint_resnet101(&profile),
        blueprint_vit_b16(&profile),
        blueprint_vit_l16(&profile),
    ];
    let mut graphs = Vec::new();
    for bp in &mut bps {
        let g = check_blueprint(bp, &profile);
        graphs.push(g);
    }
    println!("\n-- switching calibration --");
    let mut ratios = Vec::new();
    for (bp, g) in bps.iter().zip(&graphs) {
        println!("== {} ==", bp.name);
        let (_, ratio) = verify_switching(bp, g, &profile);
        ratios.push(ratio);
    }
    assert!(ratios[0] >= 7.0, "resnet18 reduction ratio {:.2} < 7.0", ratios[0]);
    assert!(ratios[2] >= 8.5, "vit_b16 reduction ratio {:.2} < 8.5", ratios[2]);

    println!("\n-- policy comparison --");
    for (bp, g) in bps.iter().zip(&graphs) {
        println!("== {} ==", bp.name);
        verify_policies(bp, g, &profile);
    }

    println!("\n-- N sweeps --");
    for (bp, g) in bps.iter().zip(&graphs) {
        println!("== {} ==", bp.name);
        verify_sweep(bp, g, &profile);
    }

    println!("\n-- energy U-shape (vit_l16) --");
    verify_ushape(&bps[3], &graphs[3], &profile);

    println!("\n-- thermal study (vit_b16) --");
    verify_throttle(&graphs[2], &profile, &bps[2]);

    write_fixture_files(&profile, &bps.iter().zip(graphs.iter()).collect::<Vec<_>>())
        .expect("fixture files written");
    println!("\nfixtures written to {}", fixtures_dir().display());
}
