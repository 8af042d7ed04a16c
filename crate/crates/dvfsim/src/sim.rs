//! Deterministic event-timeline simulator: executes a schedule under a
//! governor policy and the thermal model, producing a trace from which all
//! reported metrics derive.

use serde::{Deserialize, Serialize};

use crate::device::{DeviceProfile, FrequencyTriplet};
use crate::error::{Error, Result};
use crate::graph::{apply_trace, ComputationGraph, SparsityTrace};
use crate::governor::{
    coordinate_memory, plan_fuse, plan_lookahead, reactive_step, thermal_update, GovernorPolicy,
    PolicyKind, ThermalState, ThrottleLatch, Utilization,
};
use crate::modeler::{
    block_exec_time, compute_term, memory_term, predict_energy, predict_exec_time, predict_power,
};
use crate::partitioner::{
    operator_level_schedule, partition, PartitionConfig, Schedule, SuperBlock,
};

/// Timeline event classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    BlockExec,
    SwitchStall,
    CpuBoost,
    Throttle,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::BlockExec => "block_exec",
            EventKind::SwitchStall => "switch_stall",
            EventKind::CpuBoost => "cpu_boost",
            EventKind::Throttle => "throttle",
        }
    }
}

/// One contiguous span of the simulated timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub t_start: f64,
    pub t_end: f64,
    pub kind: EventKind,
    pub triplet: FrequencyTriplet,
    /// Mean power over the event, watts.
    pub power_w: f64,
    /// Junction temperature at the end of the event, degrees C.
    pub temp_end_c: f64,
    pub block_index: Option<usize>,
    pub op_id: Option<String>,
}

/// Time-ordered record of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub policy: PolicyKind,
    pub graph_name: String,
    pub events: Vec<TimelineEvent>,
    pub makespan: f64,
    pub total_energy: f64,
    pub total_switch_stall: f64,
    pub peak_temp_c: f64,
    pub final_temp_c: f64,
    pub block_count: usize,
    /// Execution energy attributed to each block (stalls excluded).
    pub per_block_energy: Vec<f64>,
}

impl ExecutionTrace {
    pub fn mean_power(&self) -> f64 {
        if self.makespan > 0.0 {
            self.total_energy / self.makespan
        } else {
            0.0
        }
    }

    /// End time of the first event that reaches `limit_c`, if any.
    pub fn first_crossing(&self, limit_c: f64) -> Option<f64> {
        self.events
            .iter()
            .find(|e| e.temp_end_c >= limit_c)
            .map(|e| e.t_end)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }

    /// Flat CSV: one row per event.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "# dvfsim trace v1\nt_start,t_end,kind,f_cpu,f_gpu,f_mem,power_w,temp_end_c,block_index,op_id\n",
        );
        for e in &self.events {
            out.push_str(&format!(
                "{:.9},{:.9},{},{},{},{},{:.6},{:.4},{},{}\n",
                e.t_start,
                e.t_end,
                e.kind.name(),
                e.triplet.f_cpu,
                e.triplet.f_gpu,
                e.triplet.f_mem,
                e.power_w,
                e.temp_end_c,
                e.block_index.map_or(String::new(), |i| i.to_string()),
                e.op_id.as_deref().unwrap_or(""),
            ));
        }
        out
    }
}

/// Simulation controls that live outside the policy.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimOptions {
    /// Optional fixed thermal tick: execution events are split at this
    /// granularity so long events integrate temperature more finely.
    pub tick: Option<f64>,
    /// Optional junction temperature limit engaging the throttle latch.
    pub thermal_limit: Option<f64>,
    /// Number of back-to-back repetitions of the workload (sustained load).
    pub repeat: usize,
}

impl SimOptions {
    fn repeats(&self) -> usize {
        self.repeat.max(1)
    }
}

/// Event accumulator: owns the clock, the thermal state and the invariants
/// (ordered, gap-free events; energy as the power-duration sum).
struct Timeline<'p> {
    profile: &'p DeviceProfile,
    tick: Option<f64>,
    t: f64,
    thermal: ThermalState,
    peak_temp: f64,
    events: Vec<TimelineEvent>,
    total_energy: f64,
    total_switch_stall: f64,
    per_block_energy: Vec<f64>,
}

impl<'p> Timeline<'p> {
    fn new(profile: &'p DeviceProfile, init: ThermalState, opts: &SimOptions) -> Self {
        Timeline {
            profile,
            tick: opts.tick,
            t: 0.0,
            thermal: init,
            peak_temp: init.temp_c,
            events: Vec::new(),
            total_energy: 0.0,
            total_switch_stall: 0.0,
            per_block_energy: Vec::new(),
        }
    }

    fn ensure_block(&mut self, block_index: usize) {
        if self.per_block_energy.len() <= block_index {
            self.per_block_energy.resize(block_index + 1, 0.0);
        }
    }

    fn push(
        &mut self,
        duration: f64,
        kind: EventKind,
        triplet: FrequencyTriplet,
        s_comp: f64,
        block_index: Option<usize>,
        op_id: Option<&str>,
    ) -> Result<()> {
        if duration <= 0.0 {
            return Ok(());
        }
        let mut remaining = duration;
        while remaining > 0.0 {
            let span = match self.tick {
                Some(tick) if tick > 0.0 && remaining > tick => tick,
                _ => remaining,
            };
            let estimate = predict_power(&triplet, self.thermal.temp_c, s_comp, self.profile)?;
            // While a switch stalls the pipeline the datapath is idle
            // (clocks gated, PLLs relocking): only leakage flows.
            let power_w = if kind == EventKind::SwitchStall {
                estimate.p_static
            } else {
                estimate.p_total
            };
            self.thermal = thermal_update(&self.thermal, power_w, span, self.profile)?;
            self.peak_temp = self.peak_temp.max(self.thermal.temp_c);
            let energy = power_w * span;
            self.total_energy += energy;
            if kind == EventKind::SwitchStall {
                self.total_switch_stall += span;
            } else if let Some(b) = block_index {
                self.ensure_block(b);
                self.per_block_energy[b] += energy;
            }
            self.events.push(TimelineEvent {
                t_start: self.t,
                t_end: self.t + span,
                kind,
                triplet,
                power_w,
                temp_end_c: self.thermal.temp_c,
                block_index,
                op_id: op_id.map(str::to_string),
            });
            self.t += span;
            remaining -= span;
        }
        Ok(())
    }

    fn finish(self, policy: PolicyKind, graph_name: &str, block_count: usize) -> ExecutionTrace {
        ExecutionTrace {
            policy,
            graph_name: graph_name.to_string(),
            makespan: self.t,
            total_energy: self.total_energy,
            total_switch_stall: self.total_switch_stall,
            peak_temp_c: self.peak_temp,
            final_temp_c: self.thermal.temp_c,
            block_count,
            per_block_energy: self.per_block_energy,
            events: self.events,
        }
    }
}

/// Whole-graph energy-optimal triplet (the model-level static policy).
pub fn whole_graph_optimal(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    temp_c: f64,
) -> Result<FrequencyTriplet> {
    let mut best: Option<(f64, FrequencyTriplet)> = None;
    for f in profile.triplets() {
        let mut e = 0.0;
        for op in &graph.operators {
            e += predict_energy(op, &f, temp_c, profile)?;
        }
        best = match best {
            None => Some((e, f)),
            Some((be, bf)) => {
                if e < be
                    || (e == be && (f.f_gpu, f.f_cpu, f.f_mem) < (bf.f_gpu, bf.f_cpu, bf.f_mem))
                {
                    Some((e, f))
                } else {
                    Some((be, bf))
                }
            }
        };
    }
    Ok(best.expect("profile grid is nonempty").1)
}

/// Build the block schedule a sparse-DVFS policy executes: greedy
/// partition, then per-block memory coordination.
pub fn plan_sparse_schedule(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    cfg: &PartitionConfig,
    temp_c: f64,
) -> Result<Schedule> {
    let mut schedule = partition(graph, profile, cfg, temp_c)?;
    for block in &mut schedule.blocks {
        let coord = coordinate_memory(block, graph, profile)?;
        block.f_block = coord.triplet;
        let ops: Vec<_> = block.ops(graph).iter().collect();
        block.t_block = block_exec_time(&ops, &block.f_block, profile)?;
    }
    Ok(schedule)
}

fn emit_block_events(
    tl: &mut Timeline,
    graph: &ComputationGraph,
    block: &SuperBlock,
    block_index: usize,
    boost: Option<(f64, FrequencyTriplet)>,
    latch: &mut Option<ThrottleLatch>,
) -> Result<()> {
    let mut pos = 0.0; // execution offset within the block
    for op in block.ops(graph) {
        let forced = latch
            .as_mut()
            .and_then(|l| l.update(&tl.thermal, tl.profile));
        if let Some(min_triplet) = forced {
            let t_op = predict_exec_time(op, &min_triplet, tl.profile)?.t_exe;
            tl.push(
                t_op,
                EventKind::Throttle,
                min_triplet,
                op.s_comp,
                Some(block_index),
                Some(&op.id),
            )?;
            pos += t_op;
            continue;
        }
        let t_op = predict_exec_time(op, &block.f_block, tl.profile)?.t_exe;
        let mut emitted = 0.0;
        if let Some((boost_len, boost_triplet)) = boost {
            if pos < boost_len {
                let span = (boost_len - pos).min(t_op);
                tl.push(
                    span,
                    EventKind::CpuBoost,
                    boost_triplet,
                    op.s_comp,
                    Some(block_index),
                    Some(&op.id),
                )?;
                emitted = span;
            }
        }
        if t_op > emitted {
            tl.push(
                t_op - emitted,
                EventKind::BlockExec,
                block.f_block,
                op.s_comp,
                Some(block_index),
                Some(&op.id),
            )?;
        }
        pos += t_op;
    }
    Ok(())
}

fn simulate_block_policy(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    policy: &GovernorPolicy,
    cfg: &PartitionConfig,
    thermal_init: ThermalState,
    opts: &SimOptions,
) -> Result<ExecutionTrace> {
    let schedule = plan_sparse_schedule(graph, profile, cfg, thermal_init.temp_c)?;
    let lead = match policy.kind {
        PolicyKind::SparseDvfsSerial => 0.0,
        _ => policy.lookahead_lead.unwrap_or(f64::INFINITY),
    };
    let switch_plan = plan_lookahead(&schedule, profile, lead)?;
    let boosts = plan_fuse(&schedule, profile);

    let mut tl = Timeline::new(profile, thermal_init, opts);
    let mut latch = opts.thermal_limit.map(ThrottleLatch::new);
    for rep in 0..opts.repeats() {
        for (i, block) in schedule.blocks.iter().enumerate() {
            if i > 0 {
                let sw = &switch_plan.switches[i - 1];
                tl.push(
                    sw.residual_stall,
                    EventKind::SwitchStall,
                    sw.from,
                    0.0,
                    Some(rep * schedule.blocks.len() + i),
                    None,
                )?;
            }
            let boost = boosts
                .iter()
                .find(|b| b.block_index == i)
                .map(|b| (b.duration, b.triplet));
            emit_block_events(
                &mut tl,
                graph,
                block,
                rep * schedule.blocks.len() + i,
                boost,
                &mut latch,
            )?;
        }
    }
    Ok(tl.finish(policy.kind, &graph.name, schedule.block_count()))
}

fn simulate_static(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    policy: &GovernorPolicy,
    triplet: FrequencyTriplet,
    thermal_init: ThermalState,
    opts: &SimOptions,
) -> Result<ExecutionTrace> {
    let mut tl = Timeline::new(profile, thermal_init, opts);
    let mut latch = opts.thermal_limit.map(ThrottleLatch::new);
    for _ in 0..opts.repeats() {
        for op in &graph.operators {
            let forced = latch.as_mut().and_then(|l| l.update(&tl.thermal, profile));
            let (f, kind) = match forced {
                Some(min) => (min, EventKind::Throttle),
                None => (triplet, EventKind::BlockExec),
            };
            let t_op = predict_exec_time(op, &f, profile)?.t_exe;
            tl.push(t_op, kind, f, op.s_comp, Some(0), Some(&op.id))?;
        }
    }
    Ok(tl.finish(policy.kind, &graph.name, 1))
}

fn simulate_operator_serial(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    policy: &GovernorPolicy,
    cfg: &PartitionConfig,
    thermal_init: ThermalState,
    opts: &SimOptions,
) -> Result<ExecutionTrace> {
    let schedule = operator_level_schedule(graph, profile, cfg, thermal_init.temp_c)?;
    let mut tl = Timeline::new(profile, thermal_init, opts);
    let mut latch = opts.thermal_limit.map(ThrottleLatch::new);
    for rep in 0..opts.repeats() {
        let mut prev: Option<FrequencyTriplet> = None;
        for (i, block) in schedule.blocks.iter().enumerate() {
            if let Some(prev) = prev {
                let stall = profile.switch_latency(&prev, &block.f_block)?;
                tl.push(
                    stall,
                    EventKind::SwitchStall,
                    prev,
                    0.0,
                    Some(rep * schedule.blocks.len() + i),
                    None,
                )?;
            }
            emit_block_events(
                &mut tl,
                graph,
                block,
                rep * schedule.blocks.len() + i,
                None,
                &mut latch,
            )?;
            prev = Some(block.f_block);
        }
    }
    Ok(tl.finish(policy.kind, &graph.name, schedule.block_count()))
}

/// Utilization proxy for the reactive baseline, derived from the timeline
/// model because the simulator has no real counters: the GPU and memory
/// see their own path's share of the dominating path, the CPU sees the
/// launch-overhead share of the operator's total time.
fn modeled_utilization(
    op: &crate::graph::Operator,
    f: &FrequencyTriplet,
    profile: &DeviceProfile,
) -> Result<Utilization> {
    let tc = compute_term(op, f, profile)?;
    let tm = memory_term(op, f, profile)?;
    let dominant = tc.max(tm);
    let t_exe = dominant + profile.t_overhead;
    let frac = |num: f64, den: f64| {
        if den > 0.0 {
            (num / den).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    Ok(Utilization {
        cpu: frac(profile.t_overhead, t_exe),
        gpu: frac(tc, dominant),
        mem: frac(tm, dominant),
    })
}

fn simulate_reactive(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    policy: &GovernorPolicy,
    thermal_init: ThermalState,
    opts: &SimOptions,
) -> Result<ExecutionTrace> {
    let params = policy.reactive;
    if !(params.period_s > 0.0) {
        return Err(Error::Invalid {
            message: format!("reactive period must be > 0, got {}", params.period_s),
        });
    }
    let mut tl = Timeline::new(profile, thermal_init, opts);
    let mut latch = opts.thermal_limit.map(ThrottleLatch::new);
    // Reactive governors start from the device's boot state: all clocks up.
    let mut current = profile.max_triplet();
    let mut next_tick = params.period_s;
    for rep in 0..opts.repeats() {
        for op in &graph.operators {
            let block_index = Some(rep * graph.len() + 0);
            let mut remaining = 1.0f64; // fraction of the operator left
            while remaining > 1e-12 {
                let forced = latch.as_mut().and_then(|l| l.update(&tl.thermal, profile));
                let f = forced.unwrap_or(current);
                let kind = if forced.is_some() {
                    EventKind::Throttle
                } else {
                    EventKind::BlockExec
                };
                let t_full = predict_exec_time(op, &f, profile)?.t_exe;
                let span_left = remaining * t_full;
                let to_tick = next_tick - tl.t;
                let span = span_left.min(to_tick.max(0.0));
                if span <= 0.0 {
                    // Tick boundary reached: sample utilization and step.
                    let u = modeled_utilization(op, &current, profile)?;
                    current = reactive_step(&u, &current, &params, profile)?;
                    next_tick += params.period_s;
                    continue;
                }
                tl.push(span, kind, f, op.s_comp, block_index, Some(&op.id))?;
                remaining -= span / t_full;
                if (tl.t - next_tick).abs() < 1e-15 || tl.t > next_tick {
                    let u = modeled_utilization(op, &current, profile)?;
                    current = reactive_step(&u, &current, &params, profile)?;
                    next_tick += params.period_s;
                }
            }
        }
    }
    Ok(tl.finish(policy.kind, &graph.name, graph.len()))
}

/// Run one policy over one graph, producing a full execution trace.
pub fn simulate(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    policy: &GovernorPolicy,
    cfg: &PartitionConfig,
    thermal_init: ThermalState,
    opts: &SimOptions,
) -> Result<ExecutionTrace> {
    match policy.kind {
        PolicyKind::SparseDvfsLookahead | PolicyKind::SparseDvfsSerial => {
            simulate_block_policy(graph, profile, policy, cfg, thermal_init, opts)
        }
        PolicyKind::MaxStatic => {
            simulate_static(graph, profile, policy, profile.max_triplet(), thermal_init, opts)
        }
        PolicyKind::ModelLevelStatic => {
            let f = whole_graph_optimal(graph, profile, thermal_init.temp_c)?;
            simulate_static(graph, profile, policy, f, thermal_init, opts)
        }
        PolicyKind::OperatorLevelSerial => {
            simulate_operator_serial(graph, profile, policy, cfg, thermal_init, opts)
        }
        PolicyKind::ReactiveDefault => {
            simulate_reactive(graph, profile, policy, thermal_init, opts)
        }
    }
}

/// Run one policy per trace sample. Unless `amortized` is set, the
/// partition is re-run on every sample's sparsities; amortized mode plans
/// once on the static graph and only the execution sees the per-sample
/// sparsities (per-op times and powers at the static schedule's triplets).
pub fn simulate_samples(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    policy: &GovernorPolicy,
    cfg: &PartitionConfig,
    thermal_init: ThermalState,
    opts: &SimOptions,
    samples: &SparsityTrace,
    amortized: bool,
) -> Result<Vec<ExecutionTrace>> {
    let mut out = Vec::with_capacity(samples.len());
    for i in 0..samples.len() {
        let sampled = apply_trace(graph, samples, i)?;
        if amortized
            && matches!(
                policy.kind,
                PolicyKind::SparseDvfsLookahead | PolicyKind::SparseDvfsSerial
            )
        {
            // Plan on static sparsity, execute with the sampled one.
            let mut schedule = plan_sparse_schedule(graph, profile, cfg, thermal_init.temp_c)?;
            for block in &mut schedule.blocks {
                let ops: Vec<_> = block.ops(&sampled).iter().collect();
                block.t_block = block_exec_time(&ops, &block.f_block, profile)?;
            }
            let lead = match policy.kind {
                PolicyKind::SparseDvfsSerial => 0.0,
                _ => policy.lookahead_lead.unwrap_or(f64::INFINITY),
            };
            let switch_plan = plan_lookahead(&schedule, profile, lead)?;
            let boosts = plan_fuse(&schedule, profile);
            let mut tl = Timeline::new(profile, thermal_init, opts);
            let mut latch = opts.thermal_limit.map(ThrottleLatch::new);
            for (k, block) in schedule.blocks.iter().enumerate() {
                if k > 0 {
                    let sw = &switch_plan.switches[k - 1];
                    tl.push(sw.residual_stall, EventKind::SwitchStall, sw.from, 0.0, Some(k), None)?;
                }
                let boost = boosts
                    .iter()
                    .find(|b| b.block_index == k)
                    .map(|b| (b.duration, b.triplet));
                emit_block_events(&mut tl, &sampled, block, k, boost, &mut latch)?;
            }
            out.push(tl.finish(policy.kind, &graph.name, schedule.block_count()));
        } else {
            out.push(simulate(&sampled, profile, policy, cfg, thermal_init, opts)?);
        }
    }
    Ok(out)
}

/// Percentage reduction in total energy relative to a baseline trace.
pub fn energy_efficiency_gain(trace: &ExecutionTrace, baseline: &ExecutionTrace) -> Result<f64> {
    if baseline.total_energy == 0.0 {
        return Err(Error::ZeroBaselineEnergy);
    }
    Ok(100.0 * (baseline.total_energy - trace.total_energy) / baseline.total_energy)
}

/// Latency cost per unit of energy gain, percent; lower is better.
pub fn cost_gain_ratio(trace: &ExecutionTrace, baseline: &ExecutionTrace) -> Result<f64> {
    if baseline.total_energy == 0.0 {
        return Err(Error::ZeroBaselineEnergy);
    }
    let gain = (baseline.total_energy - trace.total_energy) / baseline.total_energy;
    if gain <= 0.0 {
        return Err(Error::NonPositiveGain {
            trace_j: trace.total_energy,
            baseline_j: baseline.total_energy,
        });
    }
    let latency_cost = (trace.makespan - baseline.makespan) / baseline.makespan;
    Ok(100.0 * latency_cost / gain)
}

/// One row of an amortization-factor sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub n: f64,
    pub block_count: usize,
    pub makespan: f64,
    pub total_switch_stall: f64,
    pub total_energy: f64,
}

/// Partition and simulate once per amortization factor.
pub fn sweep_n(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    policy: &GovernorPolicy,
    cfg: &PartitionConfig,
    thermal_init: ThermalState,
    opts: &SimOptions,
    n_values: &[f64],
) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() {
        return Err(Error::Invalid {
            message: "sweep requires at least one N value".to_string(),
        });
    }
    let mut rows = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let cfg_n = PartitionConfig {
            n_factor: n,
            ..*cfg
        };
        cfg_n.validate()?;
        let trace = simulate(graph, profile, policy, &cfg_n, thermal_init, opts)?;
        rows.push(SweepRow {
            n,
            block_count: trace.block_count,
            makespan: trace.makespan,
            total_switch_stall: trace.total_switch_stall,
            total_energy: trace.total_energy,
        });
    }
    Ok(rows)
}

/// Verify the timeline invariants of a trace: ordered, non-overlapping,
/// gap-free events covering `[0, makespan]`, and energy consistent with an
/// independent re-integration. Used by tests and the validate command.
pub fn check_trace_invariants(trace: &ExecutionTrace) -> Result<()> {
    let mut t = 0.0;
    let mut energy = 0.0;
    let mut stall = 0.0;
    for e in &trace.events {
        if (e.t_start - t).abs() > 1e-9 {
            return Err(Error::Invalid {
                message: format!("event gap/overlap at t={t}: event starts at {}", e.t_start),
            });
        }
        if e.t_end < e.t_start {
            return Err(Error::Invalid {
                message: format!("event ends before it starts at t={}", e.t_start),
            });
        }
        energy += e.power_w * (e.t_end - e.t_start);
        if e.kind == EventKind::SwitchStall {
            stall += e.t_end - e.t_start;
        }
        t = e.t_end;
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()));
    if !close(t, trace.makespan) {
        return Err(Error::Invalid {
            message: format!("makespan {} != last event end {t}", trace.makespan),
        });
    }
    if !close(energy, trace.total_energy) {
        return Err(Error::Invalid {
            message: format!(
                "total energy {} != re-integrated {energy}",
                trace.total_energy
            ),
        });
    }
    if !close(stall, trace.total_switch_stall) {
        return Err(Error::Invalid {
            message: format!(
                "switch stall {} != re-summed {stall}",
                trace.total_switch_stall
            ),
        });
    }
    Ok(())
}
