//! Formula versus measured cost for the three storage and retrieval methods.
//!
//! Formula values (at `n = 2^m`):
//!
//! | method | gates                                   | rotations | oracle calls      |
//! |--------|-----------------------------------------|-----------|-------------------|
//! | VM     | `U: k-1`, `CCX: k m`, `MCX: 2(k-1)`     | `sqrt(n)` | `(sqrt(n)-1)k + 1`|
//! | PT     | `H: k`, `MCX: 2k`                       | `sqrt(k)` | `sqrt(k) k 2`     |
//!
//! The measured columns come from the circuits this crate builds and from
//! running the retrievals, and are reported alongside rather than reconciled.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::circuit::GateCounts;
use crate::encode_pt::{build_pt_encoding, AddressMap, PtEncoding, PtOptions};
use crate::encode_vm::{build_vm_circuit, VmLayout};
use crate::error::Result;
use crate::pattern::PatternSet;
use crate::reduce::{build_reduced_encoding, plan_reduction};
use crate::retrieval::{pt_retrieve, vm_retrieve, OracleSpec, Readout};

/// Gate counts given by the cost formulas; `None` where a formula names no count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PredictedGates {
    pub h: Option<u64>,
    pub cu: Option<u64>,
    pub ccx: Option<u64>,
    pub mcx: Option<u64>,
}

impl PredictedGates {
    pub fn vm(k: u64, m: u64) -> Self {
        Self {
            h: None,
            cu: Some(k.saturating_sub(1)),
            ccx: Some(k * m),
            mcx: Some(2 * k.saturating_sub(1)),
        }
    }

    pub fn pt(k: u64) -> Self {
        Self {
            h: Some(k),
            cu: None,
            ccx: None,
            mcx: Some(2 * k),
        }
    }
}

/// Signed `actual - predicted` for each gate the formula covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateDelta {
    pub h: Option<i64>,
    pub cu: Option<i64>,
    pub ccx: Option<i64>,
    pub mcx: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateBudget {
    pub predicted: PredictedGates,
    pub actual: GateCounts,
}

impl GateBudget {
    pub fn delta(&self) -> GateDelta {
        let d = |p: Option<u64>, a: u64| p.map(|p| a as i64 - p as i64);
        GateDelta {
            h: d(self.predicted.h, self.actual.h),
            cu: d(self.predicted.cu, self.actual.cu),
            ccx: d(self.predicted.ccx, self.actual.ccx),
            mcx: d(self.predicted.mcx, self.actual.mcx),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "VM")]
    Vm,
    #[serde(rename = "PT")]
    Pt,
    #[serde(rename = "PT-reduced")]
    PtReduced,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vm => "VM",
            Method::Pt => "PT",
            Method::PtReduced => "PT-reduced",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageFlags {
    /// `sqrt(n) < k`.
    pub sqrt_n_lt_k: bool,
    /// `sqrt(k) p < k` with `p` the MCX count of the method's write network; PT methods only.
    pub sqrt_k_p_lt_k: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCost {
    pub method: Method,
    /// Register width in qubits.
    pub width: usize,
    pub predicted_gates: PredictedGates,
    pub predicted_rotations: f64,
    pub predicted_oracle_calls: f64,
    pub actual_gates: GateCounts,
    pub actual_rotations: usize,
    pub actual_oracle_calls: u64,
    pub gate_delta: GateDelta,
    pub advantage_flags: AdvantageFlags,
    pub success_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub k: usize,
    pub m: usize,
    pub n: u64,
    pub query: String,
    pub epsilon: u32,
    /// `sqrt(n - 1) k + 1`, the other reading of the VM oracle-call formula.
    pub vm_oracle_calls_alt: f64,
    pub methods: Vec<MethodCost>,
}

pub fn predicted_rotations(method: Method, k: usize, m: usize) -> f64 {
    match method {
        Method::Vm => ((1u64 << m) as f64).sqrt(),
        Method::Pt | Method::PtReduced => (k as f64).sqrt(),
    }
}

pub fn predicted_oracle_calls(method: Method, k: usize, m: usize) -> f64 {
    let k_f = k as f64;
    match method {
        Method::Vm => (((1u64 << m) as f64).sqrt() - 1.0) * k_f + 1.0,
        Method::Pt | Method::PtReduced => k_f.sqrt() * k_f * 2.0,
    }
}

fn sqrt_n_lt_k(k: usize, m: usize) -> bool {
    ((1u64 << m) as f64).sqrt() < k as f64
}

fn pt_cost(method: Method, enc: &PtEncoding, oracle: &OracleSpec) -> Result<MethodCost> {
    let (k, m) = (enc.map.k(), enc.map.dim());
    let budget = GateBudget {
        predicted: PredictedGates::pt(k as u64),
        actual: enc.circuit().count_gates(),
    };
    let retrieval = pt_retrieve(enc, oracle, None, Readout::Argmax)?;
    let p = enc.write_network.count_gates().mcx as f64;
    Ok(MethodCost {
        method,
        width: m + 1,
        predicted_gates: budget.predicted,
        predicted_rotations: predicted_rotations(method, k, m),
        predicted_oracle_calls: predicted_oracle_calls(method, k, m),
        actual_gates: budget.actual,
        actual_rotations: retrieval.trace.rotations,
        actual_oracle_calls: retrieval.trace.oracle_calls,
        gate_delta: budget.delta(),
        advantage_flags: AdvantageFlags {
            sqrt_n_lt_k: sqrt_n_lt_k(k, m),
            sqrt_k_p_lt_k: Some((k as f64).sqrt() * p < k as f64),
        },
        success_probability: retrieval.success_probability,
    })
}

/// Builds every encoding, runs every retrieval and tabulates the costs.
///
/// The PT row uses the input-order address map, the PT-reduced row the
/// greedy assignment with cluster writes.
pub fn compare(patterns: &PatternSet, oracle: &OracleSpec) -> Result<CostReport> {
    let (k, m) = (patterns.len(), patterns.dim());
    let layout = VmLayout::new(m)?;
    let vm_budget = GateBudget {
        predicted: PredictedGates::vm(k as u64, m as u64),
        actual: build_vm_circuit(patterns)?.count_gates(),
    };
    let vm = vm_retrieve(patterns, oracle, None, Readout::Argmax)?;
    let vm_row = MethodCost {
        method: Method::Vm,
        width: layout.width(),
        predicted_gates: vm_budget.predicted,
        predicted_rotations: predicted_rotations(Method::Vm, k, m),
        predicted_oracle_calls: predicted_oracle_calls(Method::Vm, k, m),
        actual_gates: vm_budget.actual,
        actual_rotations: vm.trace.rotations,
        actual_oracle_calls: vm.trace.oracle_calls,
        gate_delta: vm_budget.delta(),
        advantage_flags: AdvantageFlags {
            sqrt_n_lt_k: sqrt_n_lt_k(k, m),
            sqrt_k_p_lt_k: None,
        },
        success_probability: vm.success_probability,
    };

    let naive = build_pt_encoding(&AddressMap::naive(patterns)?, PtOptions::default())?;
    let reduced = build_reduced_encoding(&plan_reduction(patterns)?)?;
    let methods = vec![
        vm_row,
        pt_cost(Method::Pt, &naive, oracle)?,
        pt_cost(Method::PtReduced, &reduced, oracle)?,
    ];
    let n = 1u64 << m;
    Ok(CostReport {
        k,
        m,
        n,
        query: oracle.query.to_string(),
        epsilon: oracle.epsilon,
        vm_oracle_calls_alt: ((n - 1) as f64).sqrt() * k as f64 + 1.0,
        methods,
    })
}

impl CostReport {
    pub fn method(&self, method: Method) -> Option<&MethodCost> {
        self.methods.iter().find(|c| c.method == method)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> String {
        fn opt<T: ToString>(v: Option<T>) -> String {
            v.map(|v| v.to_string()).unwrap_or_default()
        }
        let mut out = String::from(
            "method,k,m,width,pred_h,pred_cu,pred_ccx,pred_mcx,\
             act_h,act_x,act_cx,act_ccx,act_mcx,act_cu,\
             delta_h,delta_cu,delta_ccx,delta_mcx,\
             pred_rotations,act_rotations,pred_oracle_calls,act_oracle_calls,\
             sqrt_n_lt_k,sqrt_k_p_lt_k,success_probability\n",
        );
        for c in &self.methods {
            let (p, a, d) = (c.predicted_gates, c.actual_gates, c.gate_delta);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.method.name(),
                self.k,
                self.m,
                c.width,
                opt(p.h),
                opt(p.cu),
                opt(p.ccx),
                opt(p.mcx),
                a.h,
                a.x,
                a.cx,
                a.ccx,
                a.mcx,
                a.cu,
                opt(d.h),
                opt(d.cu),
                opt(d.ccx),
                opt(d.mcx),
                c.predicted_rotations,
                c.actual_rotations,
                c.predicted_oracle_calls,
                c.actual_oracle_calls,
                c.advantage_flags.sqrt_n_lt_k,
                opt(c.advantage_flags.sqrt_k_p_lt_k),
                c.success_probability,
            )
            .expect("writing to a String");
        }
        out
    }
}
