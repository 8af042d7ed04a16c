//! Seeded random instance generators for self-checks and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::device::{DeviceProfile, FrequencyTriplet};
use crate::graph::{ComputationGraph, Operator, OperatorKind};
use crate::partitioner::{Schedule, SuperBlock};

/// Deterministic RNG used by every random-instance generator.
pub struct TestRng(ChaCha8Rng);

impl TestRng {
    pub fn seeded(seed: u64) -> Self {
        TestRng(ChaCha8Rng::seed_from_u64(seed))
    }
}

impl rand::RngCore for TestRng {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }
    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

const KINDS: [OperatorKind; 6] = [
    OperatorKind::Conv,
    OperatorKind::Linear,
    OperatorKind::Activation,
    OperatorKind::Normalization,
    OperatorKind::Attention,
    OperatorKind::Other,
];

/// A random valid operator with log-uniform workloads and mixed sparsity
/// patterns.
pub fn random_operator(rng: &mut TestRng, id: String) -> Operator {
    let w_comp = 10f64.powf(rng.gen_range(6.0..9.5));
    let d_mem = 10f64.powf(rng.gen_range(5.0..9.0));
    let s_comp: f64 = rng.gen_range(0.0..1.0);
    let structured = rng.gen_bool(0.5);
    // explicit override on a third of the operators, otherwise defaulted
    let s_mem = if rng.gen_bool(0.33) {
        let cap = if structured { s_comp } else { 1.0 };
        Some(rng.gen_range(0.0..=cap))
    } else {
        None
    };
    Operator {
        id,
        kind: KINDS[rng.gen_range(0..KINDS.len())],
        w_comp,
        d_mem,
        s_comp,
        s_mem,
        structured,
    }
}

/// A random DAG with `1..=max_ops` operators: a chain backbone plus random
/// forward skip edges.
pub fn random_graph(rng: &mut TestRng, max_ops: usize, name: &str) -> ComputationGraph {
    let n = rng.gen_range(1..=max_ops.max(1));
    let ops: Vec<Operator> = (0..n)
        .map(|i| random_operator(rng, format!("op{i}")))
        .collect();
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((format!("op{}", i - 1), format!("op{i}")));
    }
    for _ in 0..n / 3 {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a + 1 < b {
            edges.push((format!("op{a}"), format!("op{b}")));
        }
    }
    ComputationGraph::new(name, ops, edges).expect("generated graph is valid")
}

/// A random triplet drawn from the profile's level tables.
pub fn random_triplet(rng: &mut TestRng, profile: &DeviceProfile) -> FrequencyTriplet {
    FrequencyTriplet::new(
        profile.cpu_levels[rng.gen_range(0..profile.cpu_levels.len())],
        profile.gpu_levels[rng.gen_range(0..profile.gpu_levels.len())],
        profile.mem_levels[rng.gen_range(0..profile.mem_levels.len())],
    )
}

/// A random well-formed schedule over a fresh synthetic graph: random
/// block boundaries, random triplets, block times made consistent.
pub fn random_schedule(
    rng: &mut TestRng,
    profile: &DeviceProfile,
    max_ops: usize,
    name: &str,
) -> (ComputationGraph, Schedule) {
    let graph = random_graph(rng, max_ops, name);
    let n = graph.len();
    let mut blocks = Vec::new();
    let mut start = 0;
    while start < n {
        let len = rng.gen_range(1..=(n - start).min(6));
        let f_block = random_triplet(rng, profile);
        let ops: Vec<&Operator> = graph.operators[start..start + len].iter().collect();
        let t_block = crate::modeler::block_exec_time(&ops, &f_block, profile)
            .expect("nonempty block");
        blocks.push(SuperBlock {
            start,
            end: start + len,
            f_block,
            t_block,
        });
        start += len;
    }
    (
        graph,
        Schedule {
            graph_name: name.to_string(),
            blocks,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_deterministic() {
        let g1 = random_graph(&mut TestRng::seeded(42), 16, "g");
        let g2 = random_graph(&mut TestRng::seeded(42), 16, "g");
        assert_eq!(g1.len(), g2.len());
        let a: Vec<_> = g1.operators.iter().map(|o| o.w_comp).collect();
        let b: Vec<_> = g2.operators.iter().map(|o| o.w_comp).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn random_schedules_cover_their_graphs() {
        let p = crate::device::test_profiles::small();
        let mut rng = TestRng::seeded(3);
        for i in 0..10 {
            let (g, s) = random_schedule(&mut rng, &p, 12, &format!("s{i}"));
            assert_eq!(s.op_count(), g.len());
        }
    }
}
