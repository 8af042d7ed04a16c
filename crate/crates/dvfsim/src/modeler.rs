//! Offline model: sparsity-aware execution-time prediction, thermal-aware
//! power prediction, per-operator energy, and exhaustive search for the
//! energy-optimal frequency triplet.

use serde::{Deserialize, Serialize};

use crate::device::{Component, DeviceProfile, FrequencyTriplet};
use crate::error::{Error, Result};
use crate::graph::Operator;

/// Which resource bounded an execution-time prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Compute,
    Memory,
    /// Both effective terms are zero; only the constant overhead remains.
    Overhead,
}

/// Predicted execution time of one operator at one frequency configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfEstimate {
    pub t_exe: f64,
    pub bound: Bound,
}

/// Predicted power split into dynamic and static components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub p_total: f64,
    pub p_dynamic: f64,
    pub p_static: f64,
}

/// Compute-path term of the timeline model: effective FLOPs over peak
/// performance at the CPU/GPU pair, seconds.
pub fn compute_term(op: &Operator, f: &FrequencyTriplet, profile: &DeviceProfile) -> Result<f64> {
    Ok(op.effective_flops() / profile.peak_perf(f.f_cpu, f.f_gpu)?)
}

/// Memory-path term of the timeline model: effective bytes over bandwidth
/// at the EMC level, seconds.
pub fn memory_term(op: &Operator, f: &FrequencyTriplet, profile: &DeviceProfile) -> Result<f64> {
    Ok(op.effective_bytes() / profile.mem_bandwidth(f.f_mem)?)
}

/// Predict the execution time of an operator under a frequency triplet.
///
/// The slower of the compute path and the memory path wins, plus the
/// constant per-operator system overhead. Ties classify as memory-bound
/// (the ridge point belongs to the memory regime).
pub fn predict_exec_time(
    op: &Operator,
    f: &FrequencyTriplet,
    profile: &DeviceProfile,
) -> Result<PerfEstimate> {
    let tc = compute_term(op, f, profile)?;
    let tm = memory_term(op, f, profile)?;
    let bound = if tc == 0.0 && tm == 0.0 {
        Bound::Overhead
    } else if tm >= tc {
        Bound::Memory
    } else {
        Bound::Compute
    };
    Ok(PerfEstimate {
        t_exe: tc.max(tm) + profile.t_overhead,
        bound,
    })
}

/// Effective switched capacitance of a component at a given compute
/// sparsity: affine between the profile's bounds, decreasing in sparsity.
pub fn activity_factor(s_comp: f64, component: Component, profile: &DeviceProfile) -> Result<f64> {
    if !(0.0..=1.0).contains(&s_comp) || !s_comp.is_finite() {
        return Err(Error::SparsityOutOfRange { value: s_comp });
    }
    let range = match component {
        Component::Cpu => profile.alpha_cpu,
        Component::Gpu => profile.alpha_gpu,
        Component::Mem => profile.alpha_mem,
    };
    // affine in s_comp, written so the endpoints are exact
    Ok(range.alpha_max * (1.0 - s_comp) + range.alpha_min * s_comp)
}

/// Predict total power at a frequency triplet, temperature and compute
/// sparsity. Dynamic and temperature-dependent static leakage terms are
/// summed over the CPU, GPU and memory components.
pub fn predict_power(
    f: &FrequencyTriplet,
    temp_c: f64,
    s_comp: f64,
    profile: &DeviceProfile,
) -> Result<PowerEstimate> {
    profile.validate_triplet(f)?;
    let mut p_dynamic = 0.0;
    let mut p_static = 0.0;
    for c in [Component::Cpu, Component::Gpu, Component::Mem] {
        let v = profile.voltage_of(c, f.get(c))?;
        let alpha = activity_factor(s_comp, c, profile)?;
        p_dynamic += alpha * v * v * f.get(c) as f64;
        p_static += (profile.k1 * temp_c + profile.k2) * v;
    }
    Ok(PowerEstimate {
        p_total: p_dynamic + p_static,
        p_dynamic,
        p_static,
    })
}

/// Predicted energy of one operator execution: power at the operator's
/// sparsity times predicted execution time, joules.
pub fn predict_energy(
    op: &Operator,
    f: &FrequencyTriplet,
    temp_c: f64,
    profile: &DeviceProfile,
) -> Result<f64> {
    let perf = predict_exec_time(op, f, profile)?;
    let power = predict_power(f, temp_c, op.s_comp, profile)?;
    Ok(power.p_total * perf.t_exe)
}

/// Exhaustively search the discrete triplet grid for the energy-optimal
/// configuration, optionally under a latency budget.
///
/// Ties break toward lower GPU, then CPU, then memory frequency: raising
/// the GPU clock on a memory-bound operator only raises power.
pub fn optimal_triplet(
    op: &Operator,
    temp_c: f64,
    profile: &DeviceProfile,
    latency_budget: Option<f64>,
) -> Result<FrequencyTriplet> {
    // Per-level power terms hoisted out of the grid loop. The arithmetic
    // mirrors predict_power/predict_exec_time operation for operation, so
    // the selected energies are bit-identical to the public path.
    let w_eff = op.effective_flops();
    let d_eff = op.effective_bytes();
    let level_terms = |c: Component| -> Result<Vec<(u64, f64, f64)>> {
        let alpha = activity_factor(op.s_comp, c, profile)?;
        profile
            .levels(c)
            .iter()
            .map(|&f| {
                let v = profile.voltage_of(c, f)?;
                Ok((f, alpha * v * v * f as f64, (profile.k1 * temp_c + profile.k2) * v))
            })
            .collect()
    };
    let cpu = level_terms(Component::Cpu)?;
    let gpu = level_terms(Component::Gpu)?;
    let mem: Vec<(u64, f64, f64, f64)> = level_terms(Component::Mem)?
        .into_iter()
        .map(|(f, dyn_w, static_w)| {
            let bandwidth = profile.mem_bandwidth(f).expect("level from table");
            (f, dyn_w, static_w, d_eff / bandwidth)
        })
        .collect();

    let mut best: Option<(f64, FrequencyTriplet)> = None;
    let mut min_t_exe = f64::INFINITY;
    for &(fc, cpu_dyn, cpu_static) in &cpu {
        for &(fg, gpu_dyn, gpu_static) in &gpu {
            let tc = w_eff / profile.peak_perf(fc, fg)?;
            for &(fm, mem_dyn, mem_static, tm) in &mem {
                let t_exe = tc.max(tm) + profile.t_overhead;
                min_t_exe = min_t_exe.min(t_exe);
                if let Some(budget) = latency_budget {
                    if t_exe > budget {
                        continue;
                    }
                }
                let p_total =
                    (cpu_dyn + gpu_dyn + mem_dyn) + (cpu_static + gpu_static + mem_static);
                let energy = p_total * t_exe;
                let f = FrequencyTriplet::new(fc, fg, fm);
                best = match best {
                    None => Some((energy, f)),
                    Some((e, b)) if better(energy, &f, e, &b) => Some((energy, f)),
                    keep => keep,
                };
            }
        }
    }
    match best {
        Some((_, f)) => Ok(f),
        None => Err(Error::InfeasibleBudget {
            budget_s: latency_budget.unwrap_or(f64::INFINITY),
            min_t_exe_s: min_t_exe,
        }),
    }
}

/// Strict "candidate beats incumbent" order: lower energy first, then the
/// tie-break (lower f_gpu, then f_cpu, then f_mem).
fn better(e_new: f64, f_new: &FrequencyTriplet, e_old: f64, f_old: &FrequencyTriplet) -> bool {
    if e_new != e_old {
        return e_new < e_old;
    }
    let key_new = (f_new.f_gpu, f_new.f_cpu, f_new.f_mem);
    let key_old = (f_old.f_gpu, f_old.f_cpu, f_old.f_mem);
    key_new < key_old
}

/// Predicted execution time of a run of operators at one shared triplet:
/// the sum of per-operator predictions, seconds.
pub fn block_exec_time(
    ops: &[&Operator],
    f: &FrequencyTriplet,
    profile: &DeviceProfile,
) -> Result<f64> {
    if ops.is_empty() {
        return Err(Error::EmptyBlock);
    }
    let mut total = 0.0;
    for op in ops {
        total += predict_exec_time(op, f, profile)?.t_exe;
    }
    Ok(total)
}
