//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

use std::f64::consts::PI;
use std::panic::{self, AssertUnwindSafe};

use num_complex::Complex64;
use num_rational::Ratio;
use rand::Rng;

use qam_core::analysis::{compare, Method};
use qam_core::encode_pt::{build_pt_circuit, build_pt_encoding, AddressMap, PtOptions};
use qam_core::encode_vm::{build_vm_circuit, memory_register, VmLayout};
use qam_core::reduce::{build_reduced_circuit, build_reduced_encoding, plan_reduction};
use qam_core::retrieval::{
    build_oracle, grover_success_probability, pt_retrieve, standard_grover, vm_retrieve, Readout,
};
use qam_core::sweep::{self, Execution};
use qam_core::{BinaryPattern, Control, Gate, PatternSet, StateVector};

const EXACT: f64 = 1e-12;
const MARGINAL: f64 = 1e-10;
const SUCCESS: f64 = 1e-9;
const DRIFT: f64 = 1e-9;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn p(s: &str) -> BinaryPattern {
    s.parse().unwrap()
}

fn example_set() -> PatternSet {
    PatternSet::parse(&["0011", "1001", "1111", "0110"]).unwrap()
}

/// 0000 -> 0110, 0001 -> 1001, 0010 -> 1111, 0011 -> 0011
fn input_map() -> AddressMap {
    AddressMap::new(vec![p("0110"), p("1001"), p("1111"), p("0011")]).unwrap()
}

fn uniform_over(state: &StateVector, stored: &[usize], tol: f64) -> Check {
    let a = 1.0 / (stored.len() as f64).sqrt();
    for i in 0..state.len() {
        let want = if stored.contains(&i) { a } else { 0.0 };
        let got = state.amplitude(i);
        ensure((got.re - want).abs() <= tol && got.im.abs() <= tol, || {
            format!("amplitude {i}: got {got}, want {want}")
        })?;
    }
    Ok(())
}

fn approx_vec(state: &StateVector, want: &[f64], tol: f64, what: &str) -> Check {
    for (i, w) in want.iter().enumerate() {
        let got = state.amplitude(i);
        ensure((got.re - w).abs() <= tol && got.im.abs() <= tol, || {
            format!("{what}: amplitude {i} is {got}, want {w}")
        })?;
    }
    Ok(())
}

fn pt_encoding_exactness() -> Check {
    let state = build_pt_circuit(&input_map()).map_err(|e| e.to_string())?.run().unwrap();
    ensure(state.num_qubits() == 5, || "register is not m + 1 = 5 qubits".into())?;
    ensure(state.leakage(1 << 4, 0) <= EXACT, || "flag wire not at ground".into())?;
    uniform_over(&state, &[3, 6, 9, 15], EXACT)
}

fn vm_encoding_exactness() -> Check {
    let set = example_set();
    let full = build_vm_circuit(&set).map_err(|e| e.to_string())?.run().unwrap();
    let layout = VmLayout::new(4).unwrap();
    // load wires and both controls are the low m + 2 wires
    let ancillae = (1usize << (layout.dim() + 2)) - 1;
    ensure(full.leakage(ancillae, 0) <= MARGINAL, || {
        format!("load/control leakage {:.3e}", full.leakage(ancillae, 0))
    })?;
    let memory = memory_register(&full, layout, MARGINAL).map_err(|e| e.to_string())?;
    let pt = build_pt_encoding(&input_map(), PtOptions::default())
        .unwrap()
        .data_state()
        .unwrap();
    ensure(memory.max_abs_diff(&pt) <= MARGINAL, || {
        format!("VM and PT marginals differ by {:.3e}", memory.max_abs_diff(&pt))
    })
}

fn reduce_fidelity() -> Check {
    let naive = build_pt_circuit(&input_map()).unwrap();
    let nc = naive.count_gates();
    ensure((nc.mcx, nc.cx) == (6, 6), || format!("naive network has {nc}"))?;
    let plan = plan_reduction(&example_set()).map_err(|e| e.to_string())?;
    let reduced = build_reduced_circuit(&plan).map_err(|e| e.to_string())?;
    let rc = reduced.count_gates();
    ensure((rc.mcx, rc.cx) == (4, 4), || format!("reduced network has {rc}"))?;
    let diff = reduced.run().unwrap().max_abs_diff(&naive.run().unwrap());
    ensure(diff <= EXACT, || format!("statevectors differ by {diff:.3e}"))
}

type Q = Ratio<i64>;

/// Mark-and-reflect in exact rational arithmetic.
fn rational_grover(initial: &[Q], marked: &[usize], rotations: usize) -> Vec<Vec<Q>> {
    let mut v = initial.to_vec();
    let n = Q::from_integer(v.len() as i64);
    let mut out = Vec::new();
    for _ in 0..rotations {
        for &i in marked {
            v[i] = -v[i];
        }
        let mean = v.iter().copied().sum::<Q>() / n;
        for a in &mut v {
            *a -= mean * 2;
        }
        out.push(v.clone());
    }
    out
}

fn standard_grover_trace() -> Check {
    let stored = [3usize, 6, 9, 15];
    let mut initial = vec![Q::from_integer(0); 16];
    for &i in &stored {
        initial[i] = Q::new(1, 2);
    }
    let exact = rational_grover(&initial, &[6], 3);

    let fill = |other: Q, stored_value: Q, target: Q| -> Vec<Q> {
        (0..16)
            .map(|i| match i {
                6 => target,
                3 | 9 | 15 => stored_value,
                _ => other,
            })
            .collect()
    };
    let reference = [
        fill(Q::new(-1, 8), Q::new(3, 8), Q::new(-5, 8)),
        fill(Q::new(-5, 32), Q::new(11, 32), Q::new(19, 32)),
        fill(Q::new(3, 128), Q::new(67, 128), Q::new(-53, 128)),
    ];
    ensure(exact[..] == reference[..], || "rational oracle disagrees with the expected fractions".into())?;

    let rounded = |q: Q, places: i32| {
        let x = *q.numer() as f64 / *q.denom() as f64;
        (x * 10f64.powi(places)).round() / 10f64.powi(places)
    };
    let decimals = [
        (rounded(Q::new(-5, 32), 1), -0.2),
        (rounded(Q::new(11, 32), 1), 0.3),
        (rounded(Q::new(19, 32), 1), 0.6),
        (rounded(Q::new(3, 128), 2), 0.02),
        (rounded(Q::new(67, 128), 1), 0.5),
        (rounded(Q::new(-53, 128), 1), -0.4),
    ];
    for (got, want) in decimals {
        ensure((got - want).abs() < 1e-12, || format!("rounds to {got}, expected {want}"))?;
    }

    let set = example_set();
    let state = memory_register(
        &build_vm_circuit(&set).unwrap().run().unwrap(),
        VmLayout::new(4).unwrap(),
        MARGINAL,
    )
    .unwrap();
    let oracle = build_oracle(&set, p("0110"), 0).unwrap();
    let trace = standard_grover(&state, &oracle, 3).map_err(|e| e.to_string())?;
    for (r, want) in exact.iter().enumerate() {
        let want: Vec<f64> = want
            .iter()
            .map(|q| *q.numer() as f64 / *q.denom() as f64)
            .collect();
        approx_vec(&trace.snapshots[r + 1], &want, EXACT, &format!("rotation {}", r + 1))?;
    }
    Ok(())
}

fn vm_trick_trace() -> Check {
    let set = example_set();
    let oracle = build_oracle(&set, p("0110"), 0).unwrap();
    let report = vm_retrieve(&set, &oracle, None, Readout::Argmax).map_err(|e| e.to_string())?;
    ensure(report.trace.rotations == 3, || format!("{} rotations", report.trace.rotations))?;
    let want: Vec<f64> = [1, 1, 1, -1, 1, 1, 7, 1, 1, -1, 1, 1, 1, 1, 1, -1]
        .iter()
        .map(|&v| v as f64 / 8.0)
        .collect();
    approx_vec(&report.trace.snapshots[2], &want, EXACT, "rotation 2")?;
    let p6 = report.trace.snapshots[3].probability(6);
    ensure((p6 - 1.0).abs() <= MARGINAL, || format!("P(0110) = {p6}"))?;
    ensure(report.outcome_pattern == p("0110"), || {
        format!("outcome {}", report.outcome_pattern)
    })
}

fn pt_trick_trace() -> Check {
    // reduced map: 0011 -> 0011, 0001 -> 1001, 0010 -> 0110, 0000 -> 1111
    let plan = plan_reduction(&example_set()).unwrap();
    let want_map = AddressMap::new(vec![p("1111"), p("1001"), p("0110"), p("0011")]).unwrap();
    ensure(plan.assignment == want_map, || format!("assignment is\n{}", plan.assignment))?;
    let enc = build_reduced_encoding(&plan).unwrap();
    let oracle = build_oracle(&example_set(), p("0110"), 0).unwrap();
    let report = pt_retrieve(&enc, &oracle, None, Readout::Argmax).map_err(|e| e.to_string())?;
    ensure(report.trace.rotations == 1, || format!("{} rotations", report.trace.rotations))?;
    approx_vec(&report.trace.address_snapshots[0], &[0.5, 0.5, -0.5, 0.5], EXACT, "|gamma>")?;
    ensure(report.outcome_pattern == p("0110"), || {
        format!("outcome {}", report.outcome_pattern)
    })?;
    let prob = report.outcome.probability;
    ensure((prob - 1.0).abs() <= EXACT, || format!("P(0110) = {prob}"))
}

fn encoder_properties() -> Check {
    let seeds: Vec<u64> = (0..200).collect();
    let results = sweep::run(&seeds, Execution::Parallel, |seed| -> Check {
        let mut rng = sweep::rng(seed);
        let k = [2usize, 4, 8][rng.random_range(0..3)];
        let m = rng.random_range(3..=8);
        let set = sweep::random_patterns(&mut rng, m, k).map_err(|e| e.to_string())?;
        let stored = set.indices();
        let tag = |e: String| format!("seed {seed} (m={m}, k={k}): {e}");

        let vm = memory_register(
            &build_vm_circuit(&set).unwrap().run().unwrap(),
            VmLayout::new(m).unwrap(),
            MARGINAL,
        )
        .map_err(|e| tag(e.to_string()))?;
        uniform_over(&vm, &stored, MARGINAL).map_err(tag)?;

        let naive = build_pt_encoding(&AddressMap::naive(&set).unwrap(), PtOptions::default())
            .unwrap()
            .prepare()
            .unwrap();
        let data = naive.restrict(&(0..m).collect::<Vec<_>>(), 0, MARGINAL).map_err(|e| tag(e.to_string()))?;
        uniform_over(&data, &stored, MARGINAL).map_err(tag)?;

        let plan = plan_reduction(&set).map_err(|e| tag(e.to_string()))?;
        let reduced = build_reduced_circuit(&plan).unwrap().run().unwrap();
        let naive_same_map = build_pt_circuit(&plan.assignment).unwrap().run().unwrap();
        let d = reduced.max_abs_diff(&naive_same_map);
        ensure(d <= EXACT, || tag(format!("reduced differs from naive by {d:.3e}")))?;
        let d = reduced.max_abs_diff(&naive);
        ensure(d <= EXACT, || tag(format!("reduced differs from input-order encoding by {d:.3e}")))
    });
    results.into_iter().collect()
}

fn pt_retrieval_properties() -> Check {
    let seeds: Vec<u64> = (0..100).collect();
    let results = sweep::run(&seeds, Execution::Parallel, |seed| -> Check {
        let mut rng = sweep::rng(1_000 + seed);
        let k = [2usize, 4, 8, 16][rng.random_range(0..4)];
        let m = rng.random_range(4..=8);
        let set = sweep::random_patterns(&mut rng, m, k).unwrap();
        let target = set.patterns()[rng.random_range(0..k)];
        let oracle = build_oracle(&set, target, 0).unwrap();
        let enc = if seed % 2 == 0 {
            build_pt_encoding(&AddressMap::naive(&set).unwrap(), PtOptions::default()).unwrap()
        } else {
            build_reduced_encoding(&plan_reduction(&set).unwrap()).unwrap()
        };
        let report = pt_retrieve(&enc, &oracle, None, Readout::Argmax).map_err(|e| e.to_string())?;
        let want = grover_success_probability(k, 1, report.trace.rotations);
        let got = report.success_probability;
        ensure((got - want).abs() <= SUCCESS, || {
            format!("seed {seed} (m={m}, k={k}, tau={}): P = {got}, formula {want}", report.trace.rotations)
        })
    });
    let mut failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();

    for (k, tau) in [(4usize, 1usize), (16, 3)] {
        let mut rng = sweep::rng(77 + k as u64);
        let set = sweep::random_patterns(&mut rng, 6, k).unwrap();
        let target = set.patterns()[k / 2];
        let oracle = build_oracle(&set, target, 0).unwrap();
        let enc = build_reduced_encoding(&plan_reduction(&set).unwrap()).unwrap();
        let report = pt_retrieve(&enc, &oracle, Some(tau), Readout::Argmax).map_err(|e| e.to_string())?;
        let got = report.success_probability;
        if (got - 1.0).abs() > SUCCESS {
            failures.push(format!(
                "k={k}, tau={tau}: success probability {got:.12} (closed form {:.12}), want 1",
                grover_success_probability(k, 1, tau)
            ));
        }
    }
    ensure(failures.is_empty(), || failures.join("; "))
}

fn cost_report_golden() -> Check {
    let set = example_set();
    let oracle = build_oracle(&set, p("0110"), 0).unwrap();
    let report = compare(&set, &oracle).map_err(|e| e.to_string())?;
    let vm = report.method(Method::Vm).unwrap();
    let pt = report.method(Method::Pt).unwrap();
    let red = report.method(Method::PtReduced).unwrap();
    let g = vm.predicted_gates;
    ensure((g.cu, g.ccx, g.mcx) == (Some(3), Some(16), Some(6)), || format!("VM predicted {g:?}"))?;
    for c in [pt, red] {
        let g = c.predicted_gates;
        ensure((g.h, g.mcx) == (Some(4), Some(8)), || format!("PT predicted {g:?}"))?;
        ensure(c.actual_rotations == 1, || format!("PT rotations {}", c.actual_rotations))?;
        ensure(c.width == 5, || format!("PT width {}", c.width))?;
        ensure(c.gate_delta.h.is_some() && c.gate_delta.mcx.is_some(), || {
            "PT discrepancy columns empty".into()
        })?;
    }
    ensure(vm.actual_rotations == 3, || format!("VM rotations {}", vm.actual_rotations))?;
    ensure(vm.width == 10, || format!("VM width {}", vm.width))?;
    let d = vm.gate_delta;
    ensure(d.cu.is_some() && d.ccx.is_some() && d.mcx.is_some(), || "VM discrepancy columns empty".into())?;
    ensure(vm.predicted_rotations == 4.0, || format!("VM formula rotations {}", vm.predicted_rotations))
}

fn random_gate(rng: &mut impl Rng, n: usize) -> Gate {
    let mut wires: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        wires.swap(i, rng.random_range(0..=i));
    }
    let ctrl = |w: usize, rng: &mut dyn rand::RngCore| Control::new(w, rng.random_bool(0.5));
    match rng.random_range(0..6) {
        0 => Gate::h(wires[0]),
        1 => Gate::x(wires[0]),
        2 => Gate::cx(ctrl(wires[1], rng), wires[0]),
        3 => Gate::ccx(ctrl(wires[1], rng), ctrl(wires[2], rng), wires[0]),
        4 => {
            let c = rng.random_range(1..n);
            Gate::mcx((1..=c).map(|i| ctrl(wires[i], rng)).collect(), wires[0])
        }
        _ => Gate::cu(
            ctrl(wires[1], rng),
            wires[0],
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
            rng.random_range(-PI..PI),
        ),
    }
}

fn unitarity_regression() -> Check {
    let mut rng = sweep::rng(10);
    let n = 6;
    let mut applied = 0;
    let mut worst = 0.0f64;
    while applied < 1_000 {
        let raw: Vec<Complex64> = (0..1 << n)
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let norm = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let mut state = StateVector::from_amplitudes(raw.into_iter().map(|a| a / norm).collect()).unwrap();
        for _ in 0..100 {
            random_gate(&mut rng, n).apply(&mut state).map_err(|e| e.to_string())?;
            applied += 1;
            worst = worst.max((state.norm_sqr() - 1.0).abs());
        }
    }
    ensure(worst <= DRIFT, || format!("norm drift {worst:.3e}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("PT encoding exactness", pt_encoding_exactness),
        ("VM encoding exactness", vm_encoding_exactness),
        ("reduce pass fidelity and savings", reduce_fidelity),
        ("standard Grover failure trace", standard_grover_trace),
        ("VM trick trace", vm_trick_trace),
        ("permutation trick trace", pt_trick_trace),
        ("encoder properties (200 random instances)", encoder_properties),
        ("PT retrieval properties (100 random instances)", pt_retrieval_properties),
        ("cost report golden values", cost_report_golden),
        ("unitarity regression (1000 random gates)", unitarity_regression),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|e| Err(e.downcast_ref::<String>().cloned().unwrap_or_else(|| "panicked".into())));
        match outcome {
            Ok(()) => println!("criterion {:>2}: PASS  {name}", n + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why}", n + 1);
            }
        }
    }
    let _ = panic::take_hook();
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
