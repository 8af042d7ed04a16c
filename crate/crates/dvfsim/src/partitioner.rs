//! Greedy aggregation of the operator sequence into super-blocks under the
//! switch-latency amortization constraint, plus a dynamic-programming
//! oracle used as a lower-bound reference in evaluation.

use serde::Serialize;

use crate::device::{DeviceProfile, FrequencyTriplet};
use crate::error::{Error, Result};
use crate::graph::{ComputationGraph, Operator};
use crate::modeler::{block_exec_time, optimal_triplet, predict_energy, predict_power};

/// Operator count limit for the `O(n^2)` partition oracle.
pub const DP_ORACLE_LIMIT: usize = 512;

/// Partitioning knobs.
#[derive(Debug, Clone, Copy)]
pub struct PartitionConfig {
    /// Amortization granularity factor. A block boundary may only form once
    /// the running block's estimated time reaches `n_factor *
    /// t_switch_base`. `f64::INFINITY` collapses the graph to one block.
    pub n_factor: f64,
    /// Per-component relative tolerance under which two triplets count as
    /// similar.
    pub similarity_eps: f64,
    /// Optional per-operator latency budget forwarded to the triplet search.
    pub latency_budget: Option<f64>,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            n_factor: 5.0,
            similarity_eps: 0.05,
            latency_budget: None,
        }
    }
}

impl PartitionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_factor > 0.0) {
            return Err(Error::InvalidPartitionConfig {
                message: format!("n_factor must be > 0, got {}", self.n_factor),
            });
        }
        if !(self.similarity_eps >= 0.0) {
            return Err(Error::InvalidPartitionConfig {
                message: format!("similarity_eps must be >= 0, got {}", self.similarity_eps),
            });
        }
        Ok(())
    }
}

/// A contiguous run of operators executed under one frequency triplet.
/// `start..end` indexes the graph's topological order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperBlock {
    pub start: usize,
    pub end: usize,
    pub f_block: FrequencyTriplet,
    /// Estimated execution time of the member operators at `f_block`.
    pub t_block: f64,
}

impl SuperBlock {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn ops<'g>(&self, graph: &'g ComputationGraph) -> &'g [Operator] {
        &graph.operators[self.start..self.end]
    }
}

/// An ordered, gap-free cover of the operator sequence by super-blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub graph_name: String,
    pub blocks: Vec<SuperBlock>,
}

impl Schedule {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Total operator count covered.
    pub fn op_count(&self) -> usize {
        self.blocks.iter().map(SuperBlock::len).sum()
    }

    /// Serialize under the schedule file schema.
    pub fn to_json(&self, graph: &ComputationGraph) -> String {
        #[derive(Serialize)]
        struct BlockRow<'a> {
            op_ids: Vec<&'a str>,
            f_cpu: u64,
            f_gpu: u64,
            f_mem: u64,
            t_block: f64,
        }
        #[derive(Serialize)]
        struct ScheduleFile<'a> {
            graph: &'a str,
            blocks: Vec<BlockRow<'a>>,
        }
        let file = ScheduleFile {
            graph: &self.graph_name,
            blocks: self
                .blocks
                .iter()
                .map(|b| BlockRow {
                    op_ids: b.ops(graph).iter().map(|o| o.id.as_str()).collect(),
                    f_cpu: b.f_block.f_cpu,
                    f_gpu: b.f_block.f_gpu,
                    f_mem: b.f_block.f_mem,
                    t_block: b.t_block,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("schedule serializes")
    }
}

/// True iff every component of `a` lies within `eps` relative tolerance of
/// the corresponding component of `b`.
pub fn similar(a: &FrequencyTriplet, b: &FrequencyTriplet, eps: f64) -> bool {
    let close = |x: u64, y: u64| (x as f64 - y as f64).abs() <= eps * y as f64;
    close(a.f_cpu, b.f_cpu) && close(a.f_gpu, b.f_gpu) && close(a.f_mem, b.f_mem)
}

fn op_refs(graph: &ComputationGraph, start: usize, end: usize) -> Vec<&Operator> {
    graph.operators[start..end].iter().collect()
}

/// Per-operator optimal triplets over the topological order.
pub fn per_operator_optima(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    cfg: &PartitionConfig,
    temp_c: f64,
) -> Result<Vec<FrequencyTriplet>> {
    graph
        .operators
        .iter()
        .map(|op| optimal_triplet(op, temp_c, profile, cfg.latency_budget))
        .collect()
}

/// Greedy sparse-aware partitioning.
///
/// Walks the topological order keeping a running block and its triplet.
/// The next operator merges in while the running block is still too short
/// to amortize a frequency switch, or while its own optimum is similar to
/// the running triplet; merging takes the componentwise triplet maximum.
/// Otherwise the block is emitted and a new one starts.
pub fn partition(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    cfg: &PartitionConfig,
    temp_c: f64,
) -> Result<Schedule> {
    cfg.validate()?;
    let optima = per_operator_optima(graph, profile, cfg, temp_c)?;
    partition_with_optima(graph, profile, cfg, &optima)
}

/// Greedy partitioning with precomputed per-operator optima.
pub fn partition_with_optima(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    cfg: &PartitionConfig,
    optima: &[FrequencyTriplet],
) -> Result<Schedule> {
    cfg.validate()?;
    assert_eq!(optima.len(), graph.len());
    let threshold = cfg.n_factor * profile.t_switch_base;

    let mut blocks = Vec::new();
    let mut start = 0usize;
    let mut f_curr = optima[0];
    for i in 1..graph.len() {
        let f_next = optima[i];
        let t_est = block_exec_time(&op_refs(graph, start, i), &f_curr, profile)?;
        if t_est < threshold || similar(&f_next, &f_curr, cfg.similarity_eps) {
            f_curr = f_curr.max(&f_next);
        } else {
            blocks.push(SuperBlock {
                start,
                end: i,
                f_block: f_curr,
                t_block: t_est,
            });
            start = i;
            f_curr = f_next;
        }
    }
    let t_block = block_exec_time(&op_refs(graph, start, graph.len()), &f_curr, profile)?;
    blocks.push(SuperBlock {
        start,
        end: graph.len(),
        f_block: f_curr,
        t_block,
    });
    Ok(Schedule {
        graph_name: graph.name.clone(),
        blocks,
    })
}

/// The operator-level schedule: every operator is its own block at its own
/// optimal triplet. This is the fine-grained baseline the block-level
/// schedule is compared against.
pub fn operator_level_schedule(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    cfg: &PartitionConfig,
    temp_c: f64,
) -> Result<Schedule> {
    let optima = per_operator_optima(graph, profile, cfg, temp_c)?;
    let mut blocks = Vec::with_capacity(graph.len());
    for (i, f) in optima.iter().enumerate() {
        let t_block = block_exec_time(&op_refs(graph, i, i + 1), f, profile)?;
        blocks.push(SuperBlock {
            start: i,
            end: i + 1,
            f_block: *f,
            t_block,
        });
    }
    Ok(Schedule {
        graph_name: graph.name.clone(),
        blocks,
    })
}

/// Cumulative switching latency across consecutive block transitions.
pub fn switching_totals(schedule: &Schedule, profile: &DeviceProfile) -> Result<f64> {
    let mut total = 0.0;
    for pair in schedule.blocks.windows(2) {
        total += profile.switch_latency(&pair[0].f_block, &pair[1].f_block)?;
    }
    Ok(total)
}

/// Planning-time energy estimate of a schedule: per-block energies at the
/// block triplets plus one switch-energy charge per interior boundary
/// (base switch latency times total power at the destination triplet).
///
/// Boundaries are charged unconditionally, matching the partition oracle's
/// objective; this is a planning metric, not the simulator's accounting.
pub fn schedule_energy_estimate(
    schedule: &Schedule,
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    temp_c: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (k, block) in schedule.blocks.iter().enumerate() {
        for op in block.ops(graph) {
            total += predict_energy(op, &block.f_block, temp_c, profile)?;
        }
        if k > 0 {
            let p = predict_power(&block.f_block, temp_c, 0.0, profile)?.p_total;
            total += profile.t_switch_base * p;
        }
    }
    Ok(total)
}

/// Minimum-energy contiguous partition by dynamic programming over
/// segments. Each segment is assigned the triplet minimizing its energy
/// plus (for non-initial segments) the boundary switch-energy charge, so
/// the result lower-bounds `schedule_energy_estimate` over all schedules.
///
/// Guarded to `DP_ORACLE_LIMIT` operators; the table is quadratic.
pub fn dp_optimal_partition(
    graph: &ComputationGraph,
    profile: &DeviceProfile,
    cfg: &PartitionConfig,
    temp_c: f64,
) -> Result<Schedule> {
    cfg.validate()?;
    let n = graph.len();
    if n > DP_ORACLE_LIMIT {
        return Err(Error::PartitionOracleTooLarge {
            count: n,
            limit: DP_ORACLE_LIMIT,
        });
    }

    let grid: Vec<FrequencyTriplet> = profile.triplets().collect();
    // prefix[f][i] = energy of operators [0, i) at triplet f
    let mut prefix = vec![vec![0.0f64; n + 1]; grid.len()];
    let mut switch_power = vec![0.0f64; grid.len()];
    for (fi, f) in grid.iter().enumerate() {
        for (i, op) in graph.operators.iter().enumerate() {
            prefix[fi][i + 1] = prefix[fi][i] + predict_energy(op, f, temp_c, profile)?;
        }
        switch_power[fi] = predict_power(f, temp_c, 0.0, profile)?.p_total;
    }

    let seg_cost = |start: usize, end: usize, initial: bool| -> (f64, usize) {
        let mut best = (f64::INFINITY, 0usize);
        for (fi, f) in grid.iter().enumerate() {
            let mut cost = prefix[fi][end] - prefix[fi][start];
            if !initial {
                cost += profile.t_switch_base * switch_power[fi];
            }
            let better = cost < best.0
                || (cost == best.0 && {
                    let b = &grid[best.1];
                    (f.f_gpu, f.f_cpu, f.f_mem) < (b.f_gpu, b.f_cpu, b.f_mem)
                });
            if better {
                best = (cost, fi);
            }
        }
        best
    };

    // dp[j] = minimum cost of covering [0, j)
    let mut dp = vec![f64::INFINITY; n + 1];
    let mut choice = vec![(0usize, 0usize); n + 1]; // (segment start, triplet index)
    dp[0] = 0.0;
    for j in 1..=n {
        for i in 0..j {
            if !dp[i].is_finite() {
                continue;
            }
            let (cost, fi) = seg_cost(i, j, i == 0);
            let total = dp[i] + cost;
            if total < dp[j] {
                dp[j] = total;
                choice[j] = (i, fi);
            }
        }
    }

    let mut blocks = Vec::new();
    let mut j = n;
    while j > 0 {
        let (i, fi) = choice[j];
        let f_block = grid[fi];
        let t_block = block_exec_time(&op_refs(graph, i, j), &f_block, profile)?;
        blocks.push(SuperBlock {
            start: i,
            end: j,
            f_block,
            t_block,
        });
        j = i;
    }
    blocks.reverse();
    Ok(Schedule {
        graph_name: graph.name.clone(),
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::test_profiles::small;
    use crate::graph::{ComputationGraph, Operator, OperatorKind};

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

    /// Compute-heavy dense operator; under the small test profile its
    /// optimum sits at high CPU/GPU with low memory.
    fn dense(id: &str, w: f64) -> Operator {
        op(id, w, 1e3, 0.0, None)
    }

    /// Memory-heavy sparse operator; optimum sits at low CPU/GPU.
    fn sparse(id: &str, d: f64) -> Operator {
        op(id, 1e5, d, 0.9, Some(0.0))
    }

    fn cfg(n: f64) -> PartitionConfig {
        PartitionConfig {
            n_factor: n,
            similarity_eps: 0.05,
            latency_budget: None,
        }
    }

    #[test]
    fn similarity_basics() {
        let a = FrequencyTriplet::new(100, 200, 300);
        assert!(similar(&a, &a, 0.0));
        let b = FrequencyTriplet::new(100, 202, 300);
        assert!(!similar(&b, &a, 0.0));
        // 612 vs 624 MHz within 2% of 624
        let x = FrequencyTriplet::new(100, 612_000_000, 300);
        let y = FrequencyTriplet::new(100, 624_000_000, 300);
        assert!(similar(&x, &y, 0.02));
    }

    #[test]
    fn single_operator_one_block_at_its_optimum() {
        let p = small();
        let g = ComputationGraph::chain("t", vec![dense("a", 20e9)]).unwrap();
        let s = partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        assert_eq!(s.block_count(), 1);
        let expect = crate::modeler::optimal_triplet(&g.operators[0], 25.0, &p, None).unwrap();
        assert_eq!(s.blocks[0].f_block, expect);
    }

    #[test]
    fn shared_optimum_collapses_to_one_block() {
        let p = small();
        let ops = (0..6).map(|i| dense(&format!("c{i}"), 20e9)).collect();
        let g = ComputationGraph::chain("t", ops).unwrap();
        let s = partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        assert_eq!(s.block_count(), 1);
    }

    #[test]
    fn two_long_divergent_operators_split() {
        let p = small();
        // both operators individually exceed N * t_switch_base
        let g = ComputationGraph::chain("t", vec![dense("a", 20e9), sparse("b", 40e9)]).unwrap();
        let s = partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        assert_eq!(s.block_count(), 2);
        assert_ne!(s.blocks[0].f_block, s.blocks[1].f_block);
    }

    #[test]
    fn short_middle_operator_absorbed_with_componentwise_max() {
        let p = small();
        // First operator just below the 7 ms amortization threshold, the
        // short divergent middle gets absorbed, then the third forces a cut.
        // dense 6 ms at its optimum (c3,g2): w = 0.006 * 6e9
        let w_first = 0.006 * 6e9;
        let g = ComputationGraph::chain(
            "t",
            vec![
                dense("a", w_first),
                sparse("s", 20e6),
                dense("b", 20e9),
            ],
        )
        .unwrap();
        let optima = per_operator_optima(&g, &p, &cfg(1.0), 25.0).unwrap();
        let s = partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        assert_eq!(s.block_count(), 2, "schedule: {s:?}");
        assert_eq!(s.blocks[0].len(), 2);
        // conservative merge: the absorbed pair runs at the componentwise max
        assert_eq!(s.blocks[0].f_block, optima[0].max(&optima[1]));
        assert_eq!(s.blocks[1].f_block, optima[2]);
    }

    #[test]
    fn infinite_n_collapses_to_one_block() {
        let p = small();
        let mut ops: Vec<Operator> = (0..5).map(|i| dense(&format!("c{i}"), 20e9)).collect();
        ops.push(sparse("s", 40e9));
        let g = ComputationGraph::chain("t", ops).unwrap();
        let s = partition(&g, &p, &cfg(f64::INFINITY), 25.0).unwrap();
        assert_eq!(s.block_count(), 1);
    }

    #[test]
    fn coverage_and_amortization_invariants() {
        let p = small();
        let mut ops = Vec::new();
        for i in 0..4 {
            ops.push(dense(&format!("c{i}"), 25e9));
            ops.push(sparse(&format!("s{i}"), 30e9));
        }
        let g = ComputationGraph::chain("t", ops).unwrap();
        let n = 2.0;
        let s = partition(&g, &p, &cfg(n), 25.0).unwrap();
        // coverage: concatenation equals the topological order
        assert_eq!(s.op_count(), g.len());
        let mut next = 0;
        for b in &s.blocks {
            assert_eq!(b.start, next);
            next = b.end;
        }
        assert_eq!(next, g.len());
        // every non-final block amortizes the switch
        for b in &s.blocks[..s.block_count() - 1] {
            assert!(b.t_block >= n * p.t_switch_base);
        }
        // determinism
        let s2 = partition(&g, &p, &cfg(n), 25.0).unwrap();
        assert_eq!(s, s2);
    }

    #[test]
    fn switching_totals_counting() {
        let p = small();
        let g = ComputationGraph::chain(
            "t",
            vec![dense("a", 20e9), sparse("b", 40e9), dense("c", 20e9)],
        )
        .unwrap();
        let s = partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        assert_eq!(s.block_count(), 3);
        let total = switching_totals(&s, &p).unwrap();
        // transitions: ->sparse (dest gpu lowest: base+penalty), ->dense (base)
        assert!((total - (0.022 + 0.007)).abs() < 1e-12);
        let one = Schedule {
            graph_name: "t".into(),
            blocks: vec![s.blocks[0]],
        };
        assert_eq!(switching_totals(&one, &p).unwrap(), 0.0);
    }

    #[test]
    fn dp_single_operator_equals_greedy() {
        let p = small();
        let g = ComputationGraph::chain("t", vec![dense("a", 20e9)]).unwrap();
        let dp = dp_optimal_partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        let greedy = partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        assert_eq!(dp.block_count(), 1);
        assert_eq!(dp.blocks[0].f_block, greedy.blocks[0].f_block);
    }

    #[test]
    fn dp_uniform_operators_one_block() {
        let p = small();
        let ops = (0..5).map(|i| dense(&format!("c{i}"), 20e9)).collect();
        let g = ComputationGraph::chain("t", ops).unwrap();
        let dp = dp_optimal_partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        assert_eq!(dp.block_count(), 1);
    }

    #[test]
    fn dp_never_loses_to_greedy_on_random_instances() {
        let p = small();
        let mut rng = crate::synth::TestRng::seeded(7);
        for case in 0..20 {
            let g = crate::synth::random_graph(&mut rng, 8, &format!("rand{case}"));
            let c = cfg(1.0);
            let greedy = partition(&g, &p, &c, 25.0).unwrap();
            let dp = dp_optimal_partition(&g, &p, &c, 25.0).unwrap();
            let e_greedy = schedule_energy_estimate(&greedy, &g, &p, 25.0).unwrap();
            let e_dp = schedule_energy_estimate(&dp, &g, &p, 25.0).unwrap();
            assert!(
                e_dp <= e_greedy + 1e-12,
                "case {case}: dp {e_dp} > greedy {e_greedy}"
            );
        }
    }

    #[test]
    fn dp_size_guard() {
        let p = small();
        let ops = (0..(DP_ORACLE_LIMIT + 1))
            .map(|i| dense(&format!("c{i}"), 1e9))
            .collect();
        let g = ComputationGraph::chain("t", ops).unwrap();
        assert!(matches!(
            dp_optimal_partition(&g, &p, &cfg(1.0), 25.0),
            Err(Error::PartitionOracleTooLarge { .. })
        ));
    }

    #[test]
    fn schedule_serializes_to_expected_shape() {
        let p = small();
        let g = ComputationGraph::chain("t", vec![dense("a", 20e9), sparse("b", 40e9)]).unwrap();
        let s = partition(&g, &p, &cfg(1.0), 25.0).unwrap();
        let json = s.to_json(&g);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["graph"], "t");
        assert!(v["blocks"][0]["op_ids"].is_array());
        assert!(v["blocks"][0]["f_gpu"].is_u64());
    }
}
