//! Command implementations behind the `dvfsim` binary: scenario loading,
//! policy comparison reports, sweeps, and input validation.
//!
//! Commands only write the declared output files; diagnostics go to the
//! error stream, data to the output stream or files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::device::{load_profile, DeviceProfile};
use crate::error::{Error, Result};
use crate::governor::{GovernorPolicy, PolicyKind, ThermalState};
use crate::graph::{load_graph, load_trace, ComputationGraph};
use crate::partitioner::{
    operator_level_schedule, partition, switching_totals, PartitionConfig,
};
use crate::sim::{
    check_trace_invariants, cost_gain_ratio, energy_efficiency_gain, simulate, simulate_samples,
    sweep_n, ExecutionTrace, SimOptions, SweepRow,
};

/// Amortization factor field accepting a number or the string "inf".
fn de_n_factor<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(de)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => parse_n(&s).map_err(serde::de::Error::custom),
    }
}

/// Parse an amortization factor from CLI text ("inf" allowed).
pub fn parse_n(text: &str) -> std::result::Result<f64, String> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    t.parse::<f64>().map_err(|e| format!("invalid N {t:?}: {e}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionSpec {
    #[serde(deserialize_with = "de_n_factor")]
    pub n: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
}

fn default_eps() -> f64 {
    0.05
}

impl Default for PartitionSpec {
    fn default() -> Self {
        PartitionSpec {
            n: 5.0,
            eps: default_eps(),
            budget: None,
        }
    }
}

impl PartitionSpec {
    pub fn to_config(&self) -> PartitionConfig {
        PartitionConfig {
            n_factor: self.n,
            similarity_eps: self.eps,
            latency_budget: self.budget,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThermalSpec {
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tick: Option<f64>,
}

impl Default for ThermalSpec {
    fn default() -> Self {
        ThermalSpec {
            t0: None,
            limit: None,
            tick: None,
        }
    }
}

/// One experiment description: inputs, policy, partitioning and thermal
/// settings, optional per-input sparsity trace and sweep axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub graph: PathBuf,
    pub profile: PathBuf,
    #[serde(default = "default_policy")]
    pub policy: GovernorPolicy,
    #[serde(default)]
    pub partition: PartitionSpec,
    #[serde(default)]
    pub thermal: ThermalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<PathBuf>,
    #[serde(default)]
    pub amortized: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repeat: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_policy() -> GovernorPolicy {
    GovernorPolicy::new(PolicyKind::SparseDvfsLookahead)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSpec {
    pub n_values: Vec<serde_json::Value>,
}

impl SweepSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        self.n_values
            .iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => Ok(n.as_f64().unwrap()),
                serde_json::Value::String(s) => parse_n(s).map_err(|message| Error::InvalidScenario { message }),
                other => Err(Error::InvalidScenario {
                    message: format!("sweep n_values entry {other} is not a number or \"inf\""),
                }),
            })
            .collect()
    }
}

/// A loaded scenario with its inputs resolved and parsed.
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub graph: ComputationGraph,
    pub profile: DeviceProfile,
    pub samples: Option<crate::graph::SparsityTrace>,
}

impl LoadedScenario {
    pub fn thermal_init(&self) -> ThermalState {
        ThermalState {
            temp_c: self
                .scenario
                .thermal
                .t0
                .unwrap_or(self.profile.t_ambient),
        }
    }

    pub fn sim_options(&self) -> SimOptions {
        SimOptions {
            tick: self.scenario.thermal.tick,
            thermal_limit: self.scenario.thermal.limit,
            repeat: self.scenario.repeat.unwrap_or(1),
        }
    }

    pub fn partition_config(&self) -> PartitionConfig {
        self.scenario.partition.to_config()
    }
}

/// Load a scenario file, resolving relative input paths against the
/// scenario's own directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut scenario: Scenario =
        serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &PathBuf| {
        if p.is_relative() {
            base.join(p)
        } else {
            p.clone()
        }
    };
    scenario.graph = resolve(&scenario.graph);
    scenario.profile = resolve(&scenario.profile);
    scenario.trace = scenario.trace.as_ref().map(resolve);
    let graph = load_graph(&scenario.graph)?;
    let profile = load_profile(&scenario.profile)?;
    let samples = match &scenario.trace {
        Some(p) => Some(load_trace(p)?),
        None => None,
    };
    Ok(LoadedScenario {
        scenario,
        graph,
        profile,
        samples,
    })
}

/// Write a file in one atomic step (temp file + rename).
pub fn write_atomic(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().unwrap_or_default().to_string_lossy()
        )),
        None => PathBuf::from(format!(".{}.tmp", path.display())),
    };
    std::fs::write(&tmp, contents).map_err(|e| Error::io(tmp.display().to_string(), e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path.display().to_string(), e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Invalid {
                message: format!("unknown format {other:?} (expected json or csv)"),
            }),
        }
    }
}

/// Per-policy summary row of a comparison run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    pub makespan_s: f64,
    pub total_energy_j: f64,
    pub mean_power_w: f64,
    pub switch_stall_s: f64,
    pub block_count: usize,
    pub peak_temp_c: f64,
}

impl PolicySummary {
    fn from_trace(trace: &ExecutionTrace) -> Self {
        PolicySummary {
            policy: trace.policy.name().to_string(),
            makespan_s: trace.makespan,
            total_energy_j: trace.total_energy,
            mean_power_w: trace.mean_power(),
            switch_stall_s: trace.total_switch_stall,
            block_count: trace.block_count,
            peak_temp_c: trace.peak_temp_c,
        }
    }
}

/// Derived metrics of one policy against the named baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DerivedRow {
    pub policy: String,
    pub efficiency_gain_pct: f64,
    /// Undefined when the energy gain is not positive.
    pub cost_gain_ratio_pct: Option<f64>,
}

/// Comparison report: the scenario echo, per-policy summaries, and derived
/// metrics against the baseline. Derived values are recomputable from the
/// summary rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: serde_json::Value,
    pub baseline: String,
    pub summaries: Vec<PolicySummary>,
    pub derived: Vec<DerivedRow>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat CSV: one row per policy carrying summary and derived columns.
    /// Floats print in shortest round-trip form, so re-parsing recovers the
    /// exact values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "# dvfsim compare v1\npolicy,makespan_s,total_energy_j,mean_power_w,switch_stall_s,block_count,peak_temp_c,efficiency_gain_pct,cost_gain_ratio_pct\n",
        );
        for s in &self.summaries {
            let (gain, ratio) = if s.policy == self.baseline {
                (0.0, None)
            } else {
                let d = self
                    .derived
                    .iter()
                    .find(|d| d.policy == s.policy)
                    .expect("derived row per non-baseline policy");
                (d.efficiency_gain_pct, d.cost_gain_ratio_pct)
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                s.policy,
                s.makespan_s,
                s.total_energy_j,
                s.mean_power_w,
                s.switch_stall_s,
                s.block_count,
                s.peak_temp_c,
                gain,
                ratio.map_or(String::new(), |r| r.to_string()),
            ));
        }
        out
    }
}

fn print_or_write(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, contents),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

/// Partition a graph and report block structure and switching totals.
pub fn cmd_partition(
    graph_path: &Path,
    profile_path: &Path,
    n: f64,
    eps: f64,
    budget: Option<f64>,
    temp_c: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    let graph = load_graph(graph_path)?;
    let profile = load_profile(profile_path)?;
    let cfg = PartitionConfig {
        n_factor: n,
        similarity_eps: eps,
        latency_budget: budget,
    };
    let temp = temp_c.unwrap_or(profile.t_ambient);
    let schedule = partition(&graph, &profile, &cfg, temp)?;
    let block_total = switching_totals(&schedule, &profile)?;
    let op_schedule = operator_level_schedule(&graph, &profile, &cfg, temp)?;
    let op_total = switching_totals(&op_schedule, &profile)?;
    if let Some(path) = out {
        write_atomic(path, &schedule.to_json(&graph))?;
    }
    println!("blocks: {}", schedule.block_count());
    println!("operators: {}", graph.len());
    println!("switching_total_block_s: {block_total}");
    println!("switching_total_operator_s: {op_total}");
    if block_total > 0.0 {
        println!("switching_reduction: {:.2}x", op_total / block_total);
    }
    Ok(())
}

fn run_policy(loaded: &LoadedScenario, policy: &GovernorPolicy) -> Result<ExecutionTrace> {
    simulate(
        &loaded.graph,
        &loaded.profile,
        policy,
        &loaded.partition_config(),
        loaded.thermal_init(),
        &loaded.sim_options(),
    )
}

/// Simulate the scenario's policy; write the trace (JSON or event CSV).
pub fn cmd_simulate(scenario_path: &Path, out: Option<&Path>, format: OutputFormat) -> Result<()> {
    let loaded = load_scenario(scenario_path)?;
    if let Some(samples) = &loaded.samples {
        let traces = simulate_samples(
            &loaded.graph,
            &loaded.profile,
            &loaded.scenario.policy,
            &loaded.partition_config(),
            loaded.thermal_init(),
            &loaded.sim_options(),
            samples,
            loaded.scenario.amortized,
        )?;
        for t in &traces {
            check_trace_invariants(t)?;
        }
        let contents = match format {
            OutputFormat::Json => serde_json::to_string_pretty(&traces).expect("traces serialize"),
            OutputFormat::Csv => {
                let mut s = String::new();
                for t in &traces {
                    s.push_str(&t.to_csv());
                }
                s
            }
        };
        print_or_write(out, &contents)?;
        for (i, t) in traces.iter().enumerate() {
            eprintln!(
                "sample {i}: makespan {:.6} s, energy {:.6} J, stall {:.6} s",
                t.makespan, t.total_energy, t.total_switch_stall
            );
        }
        return Ok(());
    }
    let trace = run_policy(&loaded, &loaded.scenario.policy)?;
    check_trace_invariants(&trace)?;
    let contents = match format {
        OutputFormat::Json => trace.to_json(),
        OutputFormat::Csv => trace.to_csv(),
    };
    print_or_write(out, &contents)?;
    eprintln!(
        "makespan {:.6} s, energy {:.6} J, stall {:.6} s, peak temp {:.2} C",
        trace.makespan, trace.total_energy, trace.total_switch_stall, trace.peak_temp_c
    );
    Ok(())
}

/// Run a set of policies over one scenario and derive gains against the
/// baseline.
pub fn compare(
    loaded: &LoadedScenario,
    policies: &[PolicyKind],
    baseline: PolicyKind,
) -> Result<RunReport> {
    if !policies.contains(&baseline) {
        return Err(Error::InvalidScenario {
            message: format!("baseline {} not among the compared policies", baseline.name()),
        });
    }
    let mut traces = Vec::new();
    for &kind in policies {
        let policy = GovernorPolicy {
            kind,
            ..loaded.scenario.policy
        };
        traces.push(run_policy(loaded, &policy)?);
    }
    let base_trace = traces
        .iter()
        .find(|t| t.policy == baseline)
        .expect("baseline among policies");
    let mut derived = Vec::new();
    for t in &traces {
        if t.policy == baseline {
            continue;
        }
        let gain = energy_efficiency_gain(t, base_trace)?;
        let ratio = match cost_gain_ratio(t, base_trace) {
            Ok(r) => Some(r),
            Err(Error::NonPositiveGain { .. }) => None,
            Err(e) => return Err(e),
        };
        derived.push(DerivedRow {
            policy: t.policy.name().to_string(),
            efficiency_gain_pct: gain,
            cost_gain_ratio_pct: ratio,
        });
    }
    Ok(RunReport {
        scenario: serde_json::to_value(&loaded.scenario).expect("scenario serializes"),
        baseline: baseline.name().to_string(),
        summaries: traces.iter().map(PolicySummary::from_trace).collect(),
        derived,
    })
}

/// CLI wrapper over [`compare`].
pub fn cmd_compare(
    scenario_path: &Path,
    policy_names: &[String],
    baseline_name: &str,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<()> {
    let loaded = load_scenario(scenario_path)?;
    let policies = policy_names
        .iter()
        .map(|s| PolicyKind::parse(s))
        .collect::<Result<Vec<_>>>()?;
    let baseline = PolicyKind::parse(baseline_name)?;
    let report = compare(&loaded, &policies, baseline)?;
    let contents = match format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    };
    print_or_write(out, &contents)?;
    Ok(())
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "# dvfsim sweep v1\nn,block_count,makespan_s,switch_stall_s,total_energy_j\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n, r.block_count, r.makespan, r.total_switch_stall, r.total_energy
        ));
    }
    out
}

/// Sweep the amortization factor and report per-N rows.
pub fn cmd_sweep(
    scenario_path: &Path,
    n_values: Option<Vec<f64>>,
    out: Option<&Path>,
    format: OutputFormat,
) -> Result<()> {
    let loaded = load_scenario(scenario_path)?;
    let values = match n_values {
        Some(v) => v,
        None => match &loaded.scenario.sweep {
            Some(spec) => spec.values()?,
            None => {
                return Err(Error::InvalidScenario {
                    message: "no N values given and scenario has no sweep section".to_string(),
                })
            }
        },
    };
    for &n in &values {
        if !(n > 0.0) {
            return Err(Error::InvalidPartitionConfig {
                message: format!("sweep N values must be > 0, got {n}"),
            });
        }
    }
    let rows = sweep_n(
        &loaded.graph,
        &loaded.profile,
        &loaded.scenario.policy,
        &loaded.partition_config(),
        loaded.thermal_init(),
        &loaded.sim_options(),
        &values,
    )?;
    let contents = match format {
        OutputFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize"),
        OutputFormat::Csv => sweep_csv(&rows),
    };
    print_or_write(out, &contents)?;
    Ok(())
}

/// Validate input files, or run the seeded random self-check suite.
pub fn cmd_validate(
    graph: Option<&Path>,
    profile: Option<&Path>,
    scenario: Option<&Path>,
    random: Option<usize>,
    seed: u64,
) -> Result<()> {
    let mut checked = false;
    if let Some(p) = graph {
        let g = load_graph(p)?;
        println!(
            "graph ok: {} ({} operators, {:.4} GFLOPs)",
            g.name,
            g.len(),
            g.total_flops() / 1e9
        );
        checked = true;
    }
    if let Some(p) = profile {
        let prof = load_profile(p)?;
        println!(
            "profile ok: {} ({} cpu x {} gpu x {} mem levels)",
            prof.name,
            prof.cpu_levels.len(),
            prof.gpu_levels.len(),
            prof.mem_levels.len()
        );
        checked = true;
    }
    if let Some(p) = scenario {
        let loaded = load_scenario(p)?;
        println!(
            "scenario ok: graph {} over profile {} under {}",
            loaded.graph.name,
            loaded.profile.name,
            loaded.scenario.policy.kind.name()
        );
        checked = true;
    }
    if let Some(count) = random {
        run_random_self_check(count, seed, profile)?;
        checked = true;
    }
    if !checked {
        return Err(Error::Invalid {
            message: "nothing to validate: pass --graph/--profile/--scenario or --random".into(),
        });
    }
    Ok(())
}

/// Random self-check: partition invariants and oracle dominance on seeded
/// random instances against the given (or built-in) profile.
fn run_random_self_check(count: usize, seed: u64, profile: Option<&Path>) -> Result<()> {
    use crate::partitioner::{dp_optimal_partition, schedule_energy_estimate};

    let profile = match profile {
        Some(p) => load_profile(p)?,
        None => crate::fixtures::reference_profile()?,
    };
    let mut rng = crate::synth::TestRng::seeded(seed);
    let cfg = PartitionConfig::default();
    for i in 0..count {
        let g = crate::synth::random_graph(&mut rng, 24, &format!("check{i}"));
        let s = partition(&g, &profile, &cfg, profile.t_ambient)?;
        if s.op_count() != g.len() {
            return Err(Error::Invalid {
                message: format!("self-check {i}: schedule does not cover the graph"),
            });
        }
        for b in &s.blocks[..s.block_count() - 1] {
            if b.t_block < cfg.n_factor * profile.t_switch_base {
                return Err(Error::Invalid {
                    message: format!("self-check {i}: interior block below amortization bound"),
                });
            }
        }
        if g.len() <= 8 {
            let dp = dp_optimal_partition(&g, &profile, &cfg, profile.t_ambient)?;
            let e_dp = schedule_energy_estimate(&dp, &g, &profile, profile.t_ambient)?;
            let e_greedy = schedule_energy_estimate(&s, &g, &profile, profile.t_ambient)?;
            if e_dp > e_greedy + 1e-9 {
                return Err(Error::Invalid {
                    message: format!("self-check {i}: oracle worse than greedy"),
                });
            }
        }
    }
    println!("self-check ok: {count} random instances (seed {seed})");
    Ok(())
}
