//! Annotated DNN computation graphs.
//!
//! A graph is a flat list of operators plus an explicit edge list forming a
//! DAG. After loading, operators are stored in a deterministic topological
//! order (ties broken by input file order) so downstream passes can walk a
//! plain sequence.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Operator class. Metadata only; the models read the numeric annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Conv,
    Linear,
    Activation,
    Normalization,
    Attention,
    #[default]
    Other,
}

/// One graph node with its workload and sparsity annotations.
///
/// `w_comp` is the theoretical compute workload in FLOPs, `d_mem` the total
/// data volume moved in bytes. `s_comp` and `s_mem` are the fractions of
/// compute and memory traffic that the hardware can skip.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Operator {
    pub id: String,
    #[serde(default)]
    pub kind: OperatorKind,
    pub w_comp: f64,
    pub d_mem: f64,
    #[serde(default)]
    pub s_comp: f64,
    /// Storage sparsity. When omitted it defaults from the `structured`
    /// flag: structured sparsity saves bandwidth (`s_mem = s_comp`),
    /// unstructured sparsity does not (`s_mem = 0`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_mem: Option<f64>,
    #[serde(default)]
    pub structured: bool,
}

impl Operator {
    /// Storage sparsity after applying the structured/unstructured default.
    pub fn s_mem(&self) -> f64 {
        match self.s_mem {
            Some(v) => v,
            None if self.structured => self.s_comp,
            None => 0.0,
        }
    }

    /// Effective compute workload in FLOPs: `w_comp * (1 - s_comp)`.
    pub fn effective_flops(&self) -> f64 {
        self.w_comp * (1.0 - self.s_comp)
    }

    /// Effective data volume in bytes: `d_mem * (1 - s_mem)`.
    pub fn effective_bytes(&self) -> f64 {
        self.d_mem * (1.0 - self.s_mem())
    }

    fn validate(&self) -> Result<()> {
        let fail = |message: String| {
            Err(Error::InvalidOperator {
                id: self.id.clone(),
                message,
            })
        };
        if !(0.0..=1.0).contains(&self.s_comp) || !self.s_comp.is_finite() {
            return fail(format!("s_comp {} outside [0, 1]", self.s_comp));
        }
        let s_mem = self.s_mem();
        if !(0.0..=1.0).contains(&s_mem) || !s_mem.is_finite() {
            return fail(format!("s_mem {s_mem} outside [0, 1]"));
        }
        if !(self.w_comp >= 0.0 && self.w_comp.is_finite()) {
            return fail(format!("w_comp {} must be finite and >= 0", self.w_comp));
        }
        if !(self.d_mem >= 0.0 && self.d_mem.is_finite()) {
            return fail(format!("d_mem {} must be finite and >= 0", self.d_mem));
        }
        if self.w_comp == 0.0 && self.d_mem == 0.0 {
            return fail("w_comp and d_mem must not both be zero".to_string());
        }
        if self.structured && s_mem > self.s_comp {
            return fail(format!(
                "structured operator has s_mem {} > s_comp {} (bandwidth savings cannot exceed compute savings)",
                s_mem, self.s_comp
            ));
        }
        Ok(())
    }
}

/// Effective arithmetic intensity of an operator, in FLOPs per byte.
///
/// Errors when the effective data volume is zero, where the ratio is
/// undefined.
pub fn arithmetic_intensity(op: &Operator) -> Result<f64> {
    let bytes = op.effective_bytes();
    if bytes <= 0.0 {
        return Err(Error::UndefinedIntensity { id: op.id.clone() });
    }
    Ok(op.effective_flops() / bytes)
}

/// A validated computation graph. Operators are stored in topological order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComputationGraph {
    pub name: String,
    pub operators: Vec<Operator>,
    /// Directed edges as `(from_id, to_id)` pairs.
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

impl ComputationGraph {
    /// Build and validate a graph from parts. Operators end up stored in
    /// topological order, ties broken by the given input order.
    pub fn new(
        name: impl Into<String>,
        operators: Vec<Operator>,
        edges: Vec<(String, String)>,
    ) -> Result<Self> {
        let mut graph = ComputationGraph {
            name: name.into(),
            operators,
            edges,
        };
        graph.validate_and_sort()?;
        Ok(graph)
    }

    /// A linear chain in the given order, with chain edges.
    pub fn chain(name: impl Into<String>, operators: Vec<Operator>) -> Result<Self> {
        let edges = operators
            .windows(2)
            .map(|w| (w[0].id.clone(), w[1].id.clone()))
            .collect();
        Self::new(name, operators, edges)
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Total nominal compute workload over all operators, FLOPs.
    pub fn total_flops(&self) -> f64 {
        self.operators.iter().map(|op| op.w_comp).sum()
    }

    pub fn operator(&self, id: &str) -> Option<&Operator> {
        self.operators.iter().find(|op| op.id == id)
    }

    fn validate_and_sort(&mut self) -> Result<()> {
        if self.operators.is_empty() {
            return Err(Error::Invalid {
                message: format!("graph {}: no operators", self.name),
            });
        }
        let mut index_of: HashMap<&str, usize> = HashMap::new();
        for (i, op) in self.operators.iter().enumerate() {
            op.validate()?;
            if index_of.insert(op.id.as_str(), i).is_some() {
                return Err(Error::DuplicateOperator {
                    graph: self.name.clone(),
                    id: op.id.clone(),
                });
            }
        }

        let n = self.operators.len();
        let mut successors: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indegree = vec![0usize; n];
        for (from, to) in &self.edges {
            let &u = index_of.get(from.as_str()).ok_or_else(|| Error::DanglingEdge {
                graph: self.name.clone(),
                id: from.clone(),
            })?;
            let &v = index_of.get(to.as_str()).ok_or_else(|| Error::DanglingEdge {
                graph: self.name.clone(),
                id: to.clone(),
            })?;
            successors[u].push(v);
            indegree[v] += 1;
        }

        // Kahn's algorithm; among ready nodes always pick the smallest input
        // index so the result is deterministic and respects file order.
        let mut ready: std::collections::BTreeSet<usize> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| i)
            .collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&u) = ready.iter().next() {
            ready.remove(&u);
            order.push(u);
            for &v in &successors[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.insert(v);
                }
            }
        }
        if order.len() != n {
            // Some node still has positive indegree: part of a cycle.
            let stuck = indegree
                .iter()
                .position(|&d| d > 0)
                .expect("cycle implies a node with positive indegree");
            return Err(Error::CycleDetected {
                graph: self.name.clone(),
                id: self.operators[stuck].id.clone(),
            });
        }

        let mut sorted = Vec::with_capacity(n);
        for &i in &order {
            sorted.push(self.operators[i].clone());
        }
        self.operators = sorted;
        Ok(())
    }

    /// Serialize to pretty JSON under the graph file schema.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Load and validate a graph file.
pub fn load_graph(path: impl AsRef<Path>) -> Result<ComputationGraph> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_graph(&text, &path.display().to_string())
}

/// Parse a graph from JSON text. `origin` is used in error messages.
pub fn parse_graph(text: &str, origin: &str) -> Result<ComputationGraph> {
    let mut graph: ComputationGraph =
        serde_json::from_str(text).map_err(|e| Error::parse(origin, e))?;
    graph.validate_and_sort()?;
    Ok(graph)
}

/// Deterministic topological order of the graph's operators.
///
/// The stored order already is one (established at load); this returns it.
pub fn topo_order(graph: &ComputationGraph) -> Vec<&Operator> {
    graph.operators.iter().collect()
}

/// Per-input sparsity overrides: one record per input sample, each mapping
/// operator id to an `(s_comp, s_mem)` pair.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparsityTrace {
    pub records: Vec<HashMap<String, (f64, f64)>>,
}

impl SparsityTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Load a sparsity trace file (JSON array of `{id: [s_comp, s_mem]}` maps).
pub fn load_trace(path: impl AsRef<Path>) -> Result<SparsityTrace> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path.display().to_string(), e))
}

/// Return a copy of the graph with sparsities overridden by the indexed
/// trace record. Operators absent from the record keep their static values.
/// Workload annotations (`w_comp`, `d_mem`) are never altered.
pub fn apply_trace(
    graph: &ComputationGraph,
    trace: &SparsityTrace,
    sample_index: usize,
) -> Result<ComputationGraph> {
    let record = trace
        .records
        .get(sample_index)
        .ok_or(Error::TraceIndexOutOfRange {
            index: sample_index,
            len: trace.records.len(),
        })?;
    let mut out = graph.clone();
    for (id, &(s_comp, s_mem)) in record {
        if !(0.0..=1.0).contains(&s_comp) || !(0.0..=1.0).contains(&s_mem) {
            return Err(Error::InvalidTraceValue {
                index: sample_index,
                id: id.clone(),
                message: format!("sparsity pair ({s_comp}, {s_mem}) outside [0, 1]"),
            });
        }
        let op = out
            .operators
            .iter_mut()
            .find(|op| &op.id == id)
            .ok_or_else(|| Error::UnknownTraceOperator {
                index: sample_index,
                id: id.clone(),
            })?;
        op.s_comp = s_comp;
        op.s_mem = Some(s_mem);
    }
    for op in &out.operators {
        op.validate()?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn op(id: &str, w: f64, d: f64, s: f64) -> Operator {
        Operator {
            id: id.to_string(),
            kind: OperatorKind::Other,
            w_comp: w,
            d_mem: d,
            s_comp: s,
            s_mem: None,
            structured: false,
        }
    }

    #[test]
    fn one_operator_file_loads() {
        let text = r#"{"name":"t","operators":[{"id":"a","w_comp":1e9,"d_mem":1e6,"s_comp":0}],"edges":[]}"#;
        let g = parse_graph(text, "inline").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.operators[0].id, "a");
    }

    #[test]
    fn dangling_edge_names_the_id() {
        let text = r#"{"name":"t","operators":[{"id":"a","w_comp":1,"d_mem":1,"s_comp":0}],"edges":[["a","zz"]]}"#;
        let err = parse_graph(text, "inline").unwrap_err();
        match err {
            Error::DanglingEdge { id, .. } => assert_eq!(id, "zz"),
            other => panic!("expected dangling edge, got {other}"),
        }
    }

    #[test]
    fn cycle_is_rejected() {
        let ops = vec![op("a", 1.0, 1.0, 0.0), op("b", 1.0, 1.0, 0.0)];
        let edges = vec![
            ("a".to_string(), "b".to_string()),
            ("b".to_string(), "a".to_string()),
        ];
        let err = ComputationGraph::new("t", ops, edges).unwrap_err();
        assert!(matches!(err, Error::CycleDetected { .. }));
    }

    #[test]
    fn chain_topo_order() {
        let g = ComputationGraph::chain(
            "t",
            vec![op("a", 1.0, 1.0, 0.0), op("b", 1.0, 1.0, 0.0), op("c", 1.0, 1.0, 0.0)],
        )
        .unwrap();
        let ids: Vec<_> = topo_order(&g).iter().map(|o| o.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c"]);
    }

    #[test]
    fn diamond_ties_break_by_file_order() {
        // a -> {b, c} -> d with b before c in the file.
        let ops = vec![
            op("a", 1.0, 1.0, 0.0),
            op("b", 1.0, 1.0, 0.0),
            op("c", 1.0, 1.0, 0.0),
            op("d", 1.0, 1.0, 0.0),
        ];
        let edges = vec![
            ("a".to_string(), "b".to_string()),
            ("a".to_string(), "c".to_string()),
            ("b".to_string(), "d".to_string()),
            ("c".to_string(), "d".to_string()),
        ];
        let g = ComputationGraph::new("t", ops, edges).unwrap();
        let ids: Vec<_> = g.operators.iter().map(|o| o.id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "c", "d"]);
    }

    #[test]
    fn topo_order_respects_every_edge() {
        let ops = vec![
            op("d", 1.0, 1.0, 0.0),
            op("b", 1.0, 1.0, 0.0),
            op("a", 1.0, 1.0, 0.0),
            op("c", 1.0, 1.0, 0.0),
        ];
        let edges = vec![
            ("a".to_string(), "b".to_string()),
            ("a".to_string(), "c".to_string()),
            ("b".to_string(), "d".to_string()),
            ("c".to_string(), "d".to_string()),
        ];
        let g = ComputationGraph::new("t", ops, edges).unwrap();
        let pos: HashMap<&str, usize> = g
            .operators
            .iter()
            .enumerate()
            .map(|(i, o)| (o.id.as_str(), i))
            .collect();
        for (u, v) in &g.edges {
            assert!(pos[u.as_str()] < pos[v.as_str()], "edge {u}->{v} violated");
        }
    }

    #[test]
    fn structured_defaults_s_mem_to_s_comp() {
        let mut o = op("a", 10.0, 10.0, 0.4);
        o.structured = true;
        assert_eq!(o.s_mem(), 0.4);
        o.structured = false;
        assert_eq!(o.s_mem(), 0.0);
        o.s_mem = Some(0.25);
        assert_eq!(o.s_mem(), 0.25);
    }

    #[test]
    fn structured_s_mem_above_s_comp_rejected() {
        let mut o = op("a", 10.0, 10.0, 0.2);
        o.structured = true;
        o.s_mem = Some(0.5);
        let err = ComputationGraph::new("t", vec![o], vec![]).unwrap_err();
        assert!(matches!(err, Error::InvalidOperator { .. }));
    }

    #[test]
    fn both_zero_workloads_rejected() {
        let err = ComputationGraph::new("t", vec![op("a", 0.0, 0.0, 0.0)], vec![]).unwrap_err();
        assert!(matches!(err, Error::InvalidOperator { .. }));
    }

    #[test]
    fn intensity_direct_ratio_and_sparsity() {
        assert_eq!(arithmetic_intensity(&op("a", 200.0, 100.0, 0.0)).unwrap(), 2.0);
        assert_eq!(arithmetic_intensity(&op("a", 200.0, 100.0, 0.5)).unwrap(), 1.0);
        assert_eq!(arithmetic_intensity(&op("a", 0.0, 100.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn intensity_undefined_on_zero_effective_bytes() {
        let mut o = op("a", 10.0, 100.0, 0.0);
        o.s_mem = Some(1.0);
        assert!(matches!(
            arithmetic_intensity(&o),
            Err(Error::UndefinedIntensity { .. })
        ));
    }

    #[test]
    fn apply_trace_empty_record_is_identity() {
        let g = ComputationGraph::chain("t", vec![op("a", 1.0, 1.0, 0.1)]).unwrap();
        let trace = SparsityTrace {
            records: vec![HashMap::new()],
        };
        let g2 = apply_trace(&g, &trace, 0).unwrap();
        assert_eq!(g2.operators[0].s_comp, 0.1);
    }

    #[test]
    fn apply_trace_substitutes_sparsity_only() {
        let g = ComputationGraph::chain("t", vec![op("a", 7.0, 3.0, 0.1)]).unwrap();
        let mut rec = HashMap::new();
        rec.insert("a".to_string(), (0.9, 0.9));
        let trace = SparsityTrace { records: vec![rec] };
        let g2 = apply_trace(&g, &trace, 0).unwrap();
        assert_eq!(g2.operators[0].s_comp, 0.9);
        assert_eq!(g2.operators[0].s_mem(), 0.9);
        assert_eq!(g2.operators[0].w_comp, 7.0);
        assert_eq!(g2.operators[0].d_mem, 3.0);
    }

    #[test]
    fn apply_trace_unknown_id_errors() {
        let g = ComputationGraph::chain("t", vec![op("a", 1.0, 1.0, 0.0)]).unwrap();
        let mut rec = HashMap::new();
        rec.insert("nope".to_string(), (0.5, 0.5));
        let trace = SparsityTrace { records: vec![rec] };
        match apply_trace(&g, &trace, 0).unwrap_err() {
            Error::UnknownTraceOperator { id, .. } => assert_eq!(id, "nope"),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn apply_trace_index_out_of_range() {
        let g = ComputationGraph::chain("t", vec![op("a", 1.0, 1.0, 0.0)]).unwrap();
        let trace = SparsityTrace::default();
        assert!(matches!(
            apply_trace(&g, &trace, 0),
            Err(Error::TraceIndexOutOfRange { .. })
        ));
    }

    #[test]
    fn serialize_roundtrip_identity() {
        let ops = vec![op("x", 5.0, 2.0, 0.3), op("y", 1.0, 9.0, 0.0)];
        let g = ComputationGraph::chain("rt", ops).unwrap();
        let g2 = parse_graph(&g.to_json(), "roundtrip").unwrap();
        assert_eq!(g.name, g2.name);
        assert_eq!(g.edges, g2.edges);
        let a: Vec<_> = g.operators.iter().map(|o| (&o.id, o.w_comp)).collect();
        let b: Vec<_> = g2.operators.iter().map(|o| (&o.id, o.w_comp)).collect();
        assert_eq!(a, b);
    }
}
