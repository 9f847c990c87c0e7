//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use datainv::experiment::{
    is_persistently_exciting, min_samples, random_controllable_plant, run_experiment, sample_disturbance, seeded_rng,
    theta_has_full_row_rank, uniform_inputs, ExperimentData, PlantModel,
};
use datainv::lp::{self, LinearProgram, LpStatus};
use datainv::polytope::{box_h_matrix, enumerate_vertices, DisturbanceSet, InputPolytope, PolyhedralCSet};
use datainv::synthesis::{
    build_robust_lp, minimize_lambda, synthesize, Certificate, LambdaSpec, Source, SynthesisError, SynthesisProblem,
};
use datainv::verification::{
    check_admissibility, check_decay_along_trajectory, check_fact1_certificate, check_robust_invariance,
    check_vertex_contractivity, closed_loop_trajectory, find_fact1_certificate, verify_certificate, DEFAULT_TOL,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn reference_set() -> PolyhedralCSet {
    PolyhedralCSet::new(DMatrix::from_row_slice(
        4,
        2,
        &[0.2, 0.4, -0.2, -0.4, -0.15, 0.2, 0.15, -0.2],
    ))
    .unwrap()
}

fn reference_inputs() -> InputPolytope {
    InputPolytope::new(DMatrix::from_row_slice(2, 1, &[1.0 / 7.0, -1.0 / 7.0])).unwrap()
}

fn reference_plant() -> PlantModel {
    PlantModel::new(
        DMatrix::from_row_slice(2, 2, &[0.8, 0.5, -0.4, 1.2]),
        DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
    )
    .unwrap()
}

const REFERENCE_SEED: u64 = 7;

fn reference_data() -> (Vec<DVector<f64>>, ExperimentData) {
    let mut rng = seeded_rng(REFERENCE_SEED);
    let inputs = uniform_inputs(&mut rng, 1, 20, -1.0, 1.0);
    let (data, _) = run_experiment(&reference_plant(), &DVector::zeros(2), &inputs, None).unwrap();
    (inputs, data)
}

fn reference_problem(lambda: LambdaSpec, source: Source) -> SynthesisProblem {
    SynthesisProblem {
        state_set: reference_set(),
        input_set: reference_inputs(),
        lambda,
        source,
        disturbance: None,
    }
}

fn criterion_1() -> Outcome {
    let (inputs, data) = reference_data();
    ensure(is_persistently_exciting(&inputs, 3), || "input is not persistently exciting of order 3".into())?;
    let data_cert = minimize_lambda(&reference_problem(LambdaSpec::Minimize, Source::Data(data.clone())))
        .map_err(|e| format!("data-based program: {e}"))?;
    let plant = reference_plant();
    let model_cert = minimize_lambda(&reference_problem(LambdaSpec::Minimize, Source::Model(plant.clone())))
        .map_err(|e| format!("model-based program: {e}"))?;
    ensure((data_cert.lambda - 0.758).abs() <= 1e-3, || {
        format!("data-based minimum {} is not 0.758 +- 1e-3", data_cert.lambda)
    })?;
    ensure((model_cert.lambda - data_cert.lambda).abs() <= 1e-6, || {
        format!("model-based minimum {} differs from data-based {}", model_cert.lambda, data_cert.lambda)
    })?;
    for (name, cert) in [("data", &data_cert), ("model", &model_cert)] {
        let report = verify_certificate(
            cert,
            &plant.closed_loop(&cert.gain),
            &reference_set(),
            &reference_inputs(),
            None,
            None,
            DEFAULT_TOL,
        );
        ensure(report.passed(), || format!("{name}-based minimizer fails verification: {report:?}"))?;
    }
    Ok(format!(
        "lambda* data {:.9}, model {:.9}",
        data_cert.lambda, model_cert.lambda
    ))
}

fn criterion_2() -> Outcome {
    let (_, data) = reference_data();
    let cert = synthesize(&reference_problem(LambdaSpec::Fixed(0.84), Source::Data(data)))
        .map_err(|e| format!("lambda = 0.84: {e}"))?;
    let s = reference_set();
    let u = reference_inputs();
    let f = reference_plant().closed_loop(&cert.gain);
    let p = cert.p_matrix.as_ref().ok_or("certificate has no P")?;
    ensure(check_fact1_certificate(&f, &s, p, 0.84, DEFAULT_TOL), || "P certificate check fails".into())?;
    let (contractive, gauge) = check_vertex_contractivity(&f, &s, 0.84, DEFAULT_TOL);
    ensure(contractive, || format!("worst vertex gauge {gauge}"))?;
    let (admissible, violation) = check_admissibility(&cert.gain, &s, &u, DEFAULT_TOL);
    ensure(admissible, || format!("input violation {violation}"))?;
    for v in s.vertices() {
        let states = closed_loop_trajectory(&f, v, 50);
        let (decays, margin) = check_decay_along_trajectory(&s, &states, 0.84, 1e-6);
        ensure(decays, || format!("decay margin {margin} from vertex {:?}", v.as_slice()))?;
        for x in &states {
            let input = (&cert.gain * x)[0];
            ensure(input.abs() <= 7.0 + 1e-6, || format!("|u| = {} exceeds 7", input.abs()))?;
        }
    }
    Ok(format!("K = {:?}, worst vertex gauge {gauge:.9}", cert.gain.as_slice()))
}

/// A validated C-set with `dim + 1 ..= 2 dim + 2` random rows.
fn random_cset<R: Rng>(rng: &mut R, dim: usize) -> PolyhedralCSet {
    loop {
        let rows = rng.gen_range(dim + 1..=2 * dim + 2);
        let mut h = DMatrix::zeros(rows, dim);
        for r in 0..rows {
            let dir = DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..=1.0));
            let norm = dir.norm();
            if norm < 1e-3 {
                continue;
            }
            let radius = rng.gen_range(0.5..=2.0);
            for c in 0..dim {
                h[(r, c)] = dir[c] / (norm * radius);
            }
        }
        if let Ok(set) = PolyhedralCSet::new(h) {
            return set;
        }
    }
}

struct Trial {
    plant: PlantModel,
    inputs: Vec<DVector<f64>>,
    data: ExperimentData,
    state_set: PolyhedralCSet,
    input_set: InputPolytope,
}

fn random_trials() -> Vec<Trial> {
    (0..50u64)
        .map(|seed| {
            let mut rng = seeded_rng(1000 + seed);
            let n = 2 + (seed as usize % 2);
            let m = 1 + (seed as usize / 2 % 2);
            let plant = random_controllable_plant(&mut rng, n, m, 1.0);
            let t = min_samples(n, m) + 5;
            let inputs = uniform_inputs(&mut rng, m, t, -1.0, 1.0);
            let x0 = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0));
            let (data, _) = run_experiment(&plant, &x0, &inputs, None).unwrap();
            let state_set = random_cset(&mut rng, n);
            let bound = rng.gen_range(0.5..=3.0);
            let input_set = InputPolytope::new(box_h_matrix(m, bound)).unwrap();
            Trial {
                plant,
                inputs,
                data,
                state_set,
                input_set,
            }
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let (mut feasible, mut infeasible) = (0, 0);
    for (i, trial) in random_trials().iter().enumerate() {
        let n = trial.plant.n();
        ensure(is_persistently_exciting(&trial.inputs, n + 1), || format!("trial {i}: input not PE"))?;
        ensure(theta_has_full_row_rank(&trial.data), || format!("trial {i}: rank deficient"))?;
        let problem = |source| SynthesisProblem {
            state_set: trial.state_set.clone(),
            input_set: trial.input_set.clone(),
            lambda: LambdaSpec::Fixed(0.9),
            source,
            disturbance: None,
        };
        let classify = |r: Result<Certificate, SynthesisError>| match r {
            Ok(c) => Ok(Some(c)),
            Err(SynthesisError::InfeasibleProblem) => Ok(None),
            Err(e) => Err(format!("trial {i}: {e}")),
        };
        let model = classify(synthesize(&problem(Source::Model(trial.plant.clone()))))?;
        let data = classify(synthesize(&problem(Source::Data(trial.data.clone()))))?;
        match (model, data) {
            (Some(mc), Some(dc)) => {
                for (name, cert) in [("model", mc), ("data", dc)] {
                    let report = verify_certificate(
                        &cert,
                        &trial.plant.closed_loop(&cert.gain),
                        &trial.state_set,
                        &trial.input_set,
                        None,
                        None,
                        DEFAULT_TOL,
                    );
                    ensure(report.passed(), || format!("trial {i}: {name} certificate fails: {report:?}"))?;
                }
                feasible += 1;
            }
            (None, None) => infeasible += 1,
            (m, d) => {
                return Err(format!(
                    "trial {i}: model feasible {}, data feasible {}",
                    m.is_some(),
                    d.is_some()
                ))
            }
        }
    }
    Ok(format!("50/50 agree ({feasible} feasible, {infeasible} infeasible)"))
}

fn criterion_4() -> Outcome {
    let mut rank_checked = 0;
    for (i, trial) in random_trials().iter().enumerate() {
        let (n, m) = (trial.plant.n(), trial.plant.m());
        ensure(is_persistently_exciting(&trial.inputs, n + 1), || format!("trial {i}: input not PE"))?;
        ensure(theta_has_full_row_rank(&trial.data), || format!("trial {i}: PE input but rank deficient"))?;

        let t = trial.inputs.len();
        let mut rng = seeded_rng(2000 + i as u64);
        let level = DVector::from_fn(m, |_, _| rng.gen_range(0.5..=1.0));
        let constant = vec![level; t];
        ensure(!is_persistently_exciting(&constant, n + 1), || format!("trial {i}: constant input is PE"))?;
        let (data, _) = run_experiment(&trial.plant, &DVector::zeros(n), &constant, None).unwrap();
        if m >= 2 {
            ensure(!theta_has_full_row_rank(&data), || format!("trial {i}: constant input gives full rank"))?;
            rank_checked += 1;
        }
        let zero = vec![DVector::zeros(m); t];
        ensure(!is_persistently_exciting(&zero, n + 1), || format!("trial {i}: zero input is PE"))?;
        let (data, _) = run_experiment(&trial.plant, &DVector::zeros(n), &zero, None).unwrap();
        ensure(!theta_has_full_row_rank(&data), || format!("trial {i}: zero input gives full rank"))?;
        rank_checked += 1;
    }
    Ok(format!("50/50 PE inputs give full rank; {rank_checked} constant-input rank failures confirmed"))
}

/// Next state under the disturbance vertex that pushes it furthest out.
fn worst_step(f: &DMatrix<f64>, s: &PolyhedralCSet, d: &DisturbanceSet, x: &DVector<f64>) -> DVector<f64> {
    let fx = f * x;
    d.vertices()
        .iter()
        .map(|w| &fx + w)
        .max_by(|a, b| s.gauge(a).total_cmp(&s.gauge(b)))
        .unwrap()
}

fn criterion_5() -> Outcome {
    let s = PolyhedralCSet::new(box_h_matrix(2, 1.0)).unwrap();
    let d = DisturbanceSet::boxed(2, 0.05).unwrap();
    let (mut feasible, mut infeasible) = (0, 0);
    for seed in 0..20u64 {
        let mut rng = seeded_rng(3000 + seed);
        let m = 1 + (seed as usize % 2);
        let plant = random_controllable_plant(&mut rng, 2, m, 1.0);
        let t = min_samples(2, m) + 2;
        let inputs = uniform_inputs(&mut rng, m, t, -5.0, 5.0);
        let noise: Vec<DVector<f64>> = (0..t).map(|_| sample_disturbance(&mut rng, &d)).collect();
        let x0 = DVector::from_fn(2, |_, _| rng.gen_range(-1.0..=1.0));
        let (data, _) = run_experiment(&plant, &x0, &inputs, Some(&noise)).unwrap();
        let u = InputPolytope::new(box_h_matrix(m, 5.0)).unwrap();
        build_robust_lp(&data, &s, &u, &d).map_err(|e| format!("seed {seed}: {e}"))?;
        let problem = SynthesisProblem {
            state_set: s.clone(),
            input_set: u.clone(),
            lambda: LambdaSpec::Fixed(0.0),
            source: Source::Data(data),
            disturbance: Some(d.clone()),
        };
        let cert = match synthesize(&problem) {
            Ok(c) => c,
            Err(SynthesisError::InfeasibleProblem) => {
                infeasible += 1;
                continue;
            }
            Err(e) => return Err(format!("seed {seed}: {e}")),
        };
        feasible += 1;
        let f = plant.closed_loop(&cert.gain);
        ensure(check_robust_invariance(&f, &s, &d, 1e-6), || format!("seed {seed}: vertex-pair test fails"))?;
        ensure(check_admissibility(&cert.gain, &s, &u, 1e-6).0, || format!("seed {seed}: inadmissible gain"))?;
        for v in s.vertices() {
            let mut x = v.clone();
            for step in 0..100 {
                x = worst_step(&f, &s, &d, &x);
                ensure(s.gauge(&x) <= 1.0 + 1e-6, || {
                    format!("seed {seed}: left S at step {step} from {:?}", v.as_slice())
                })?;
            }
        }
    }
    ensure(feasible > 0, || "no feasible instance among 20".into())?;
    Ok(format!("{feasible} feasible certificates sound, {infeasible} infeasible reported"))
}

/// Classification from exhaustive enumeration of basic points.
#[derive(Debug, Clone, Copy, PartialEq)]
enum OracleResult {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

const ORACLE_BOX: f64 = 1e4;

/// Minimum of the objective over the points where `num_vars` linearly
/// independent constraints are active, with every variable boxed by `radius`.
fn oracle_min(lp: &LinearProgram, radius: f64) -> Option<f64> {
    let nv = lp.num_vars();
    let mut planes: Vec<(DVector<f64>, f64)> = Vec::new();
    for r in 0..lp.num_eq() {
        planes.push((lp.eq_lhs().row(r).transpose(), lp.eq_rhs()[r]));
    }
    for r in 0..lp.num_ineq() {
        planes.push((lp.ineq_lhs().row(r).transpose(), lp.ineq_rhs()[r]));
    }
    for j in 0..nv {
        let unit = DVector::from_fn(nv, |i, _| if i == j { 1.0 } else { 0.0 });
        for bound in [lp.lower_bounds()[j], lp.upper_bounds()[j], -radius, radius] {
            if bound.is_finite() {
                planes.push((unit.clone(), bound));
            }
        }
    }
    let mut best: Option<f64> = None;
    for combo in (0..planes.len()).combinations(nv) {
        let a = DMatrix::from_fn(nv, nv, |r, c| planes[combo[r]].0[c]);
        let b = DVector::from_fn(nv, |r, _| planes[combo[r]].1);
        let lu = a.lu();
        if lu.determinant().abs() < 1e-10 {
            continue;
        }
        let Some(x) = lu.solve(&b) else { continue };
        let inside = x.iter().all(|v| v.abs() <= radius * (1.0 + 1e-12));
        if !inside || lp.max_violation(x.as_slice()) > 1e-9 {
            continue;
        }
        let value = lp.objective_at(x.as_slice());
        best = Some(best.map_or(value, |b: f64| b.min(value)));
    }
    best
}

fn oracle(lp: &LinearProgram) -> OracleResult {
    match (oracle_min(lp, ORACLE_BOX), oracle_min(lp, 2.0 * ORACLE_BOX)) {
        (_, None) => OracleResult::Infeasible,
        (None, Some(_)) => OracleResult::Unbounded,
        (Some(a), Some(b)) if b < a - 1e-6 * (1.0 + a.abs()) => OracleResult::Unbounded,
        (Some(a), Some(_)) => OracleResult::Optimal(a),
    }
}

fn random_lp<R: Rng>(rng: &mut R) -> LinearProgram {
    let nv = rng.gen_range(1..=4);
    let rows = rng.gen_range(1..=8);
    let neq = rng.gen_range(0..=rows.min(nv).min(2));
    let nin = rows - neq;
    let coeff = |rng: &mut R| (rng.gen_range(-10..=10) as f64) / 2.0;
    let objective = DVector::from_fn(nv, |_, _| coeff(rng));
    let eq_lhs = DMatrix::from_fn(neq, nv, |_, _| coeff(rng));
    let eq_rhs = DVector::from_fn(neq, |_, _| coeff(rng));
    let ineq_lhs = DMatrix::from_fn(nin, nv, |_, _| coeff(rng));
    let ineq_rhs = DVector::from_fn(nin, |_, _| coeff(rng) + 2.0);
    let mut lower = Vec::with_capacity(nv);
    let mut upper = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (lo, hi) = match rng.gen_range(0..4) {
            0 => (0.0, f64::INFINITY),
            1 => (-3.0, 3.0),
            2 => (f64::NEG_INFINITY, 2.0),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        };
        lower.push(lo);
        upper.push(hi);
    }
    LinearProgram::new(objective, eq_lhs, eq_rhs, ineq_lhs, ineq_rhs, lower, upper).unwrap()
}

fn criterion_6() -> Outcome {
    let mut counts = [0usize; 3];
    for seed in 0..200u64 {
        let mut rng = seeded_rng(4000 + seed);
        let lp = random_lp(&mut rng);
        let expected = oracle(&lp);
        let sol = lp::solve(&lp);
        match (expected, sol.status) {
            (OracleResult::Optimal(v), LpStatus::Optimal) => {
                let got = sol.objective_value.unwrap();
                ensure((got - v).abs() <= 1e-6, || format!("seed {seed}: objective {got} vs oracle {v}\n{lp}"))?;
                let x = sol.primal.unwrap();
                ensure(lp::check_feasible(&lp, &x, 1e-7), || format!("seed {seed}: infeasible primal"))?;
                counts[0] += 1;
            }
            (OracleResult::Infeasible, LpStatus::Infeasible) => counts[1] += 1,
            (OracleResult::Unbounded, LpStatus::Unbounded) => counts[2] += 1,
            (e, s) => return Err(format!("seed {seed}: oracle {e:?}, solver {s:?}\n{lp}")),
        }
    }
    Ok(format!(
        "200/200 match ({} optimal, {} infeasible, {} unbounded)",
        counts[0], counts[1], counts[2]
    ))
}

fn oracle_vertices(h: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for (i, j) in (0..h.nrows()).tuple_combinations() {
        let a = DMatrix::from_row_slice(2, 2, &[h[(i, 0)], h[(i, 1)], h[(j, 0)], h[(j, 1)]]);
        let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
        if det.abs() < 1e-12 {
            continue;
        }
        let x = DVector::from_vec(vec![(a[(1, 1)] - a[(0, 1)]) / det, (a[(0, 0)] - a[(1, 0)]) / det]);
        if (h * &x).iter().all(|&v| v <= 1.0 + 1e-9) && !out.iter().any(|y| (y - &x).norm() <= 1e-7) {
            out.push(x);
        }
    }
    out
}

fn same_point_set(a: &[DVector<f64>], b: &[DVector<f64>]) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| b.iter().any(|y| (x - y).norm() <= 1e-7))
        && b.iter().all(|y| a.iter().any(|x| (x - y).norm() <= 1e-7))
}

/// Rows at evenly jittered angles so the polytope is bounded, with
/// occasional redundant rows through an existing vertex.
fn random_polygon<R: Rng>(rng: &mut R) -> DMatrix<f64> {
    let k = rng.gen_range(3..=9);
    let mut rows: Vec<[f64; 2]> = (0..k)
        .map(|i| {
            let angle = (i as f64 + rng.gen_range(-0.3..=0.3)) * std::f64::consts::TAU / k as f64;
            let scale = rng.gen_range(0.3..=2.0);
            [scale * angle.cos(), scale * angle.sin()]
        })
        .collect();
    if rng.gen_bool(0.3) {
        let h = DMatrix::from_fn(k, 2, |r, c| rows[r][c]);
        let verts = oracle_vertices(&h);
        let v = &verts[rng.gen_range(0..verts.len())];
        // A row active at an existing vertex.
        let dir = v / v.norm_squared();
        rows.push([dir[0], dir[1]]);
    }
    if rng.gen_bool(0.2) {
        rows.push(rows[0]);
    }
    DMatrix::from_fn(rows.len(), 2, |r, c| rows[r][c])
}

fn criterion_7() -> Outcome {
    for seed in 0..100u64 {
        let mut rng = seeded_rng(5000 + seed);
        let h = random_polygon(&mut rng);
        let got = enumerate_vertices(&h).map_err(|e| format!("seed {seed}: {e}"))?;
        let expected = oracle_vertices(&h);
        ensure(same_point_set(&got, &expected), || {
            format!("seed {seed}: {} vertices vs oracle {}", got.len(), expected.len())
        })?;
    }
    let reference: Vec<DVector<f64>> = [[6.0, -0.5], [-6.0, 0.5], [-2.0, 3.5], [2.0, -3.5]]
        .iter()
        .map(|p| DVector::from_row_slice(p))
        .collect();
    ensure(same_point_set(reference_set().vertices(), &reference), || {
        "reference set vertices differ".into()
    })?;
    Ok("100/100 match; reference set has the 4 expected vertices".into())
}

fn criterion_8() -> Outcome {
    let (mut yes, mut no) = (0, 0);
    for seed in 0..100u64 {
        let mut rng = seeded_rng(6000 + seed);
        let s = random_cset(&mut rng, 2);
        let scale = rng.gen_range(0.2..=1.2);
        let f = DMatrix::from_fn(2, 2, |_, _| scale * rng.gen_range(-1.0..=1.0));
        let lambda = rng.gen_range(0.1..=1.0);
        let by_vertex = check_vertex_contractivity(&f, &s, lambda, 1e-6).0;
        let p = find_fact1_certificate(&f, &s, lambda);
        if let Some(p) = &p {
            ensure(check_fact1_certificate(&f, &s, p, lambda, 1e-6), || {
                format!("seed {seed}: returned P does not certify")
            })?;
        }
        ensure(by_vertex == p.is_some(), || {
            format!("seed {seed}: vertex test {by_vertex}, P found {}", p.is_some())
        })?;
        if by_vertex {
            yes += 1;
        } else {
            no += 1;
        }
    }
    Ok(format!("100/100 agree ({yes} contractive, {no} not)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("reference example, minimum contractivity", criterion_1, Duration::from_secs(5)),
        ("reference example, lambda = 0.84", criterion_2, Duration::from_secs(5)),
        ("model/data feasibility equivalence", criterion_3, Duration::from_secs(60)),
        ("persistent excitation and rank", criterion_4, Duration::from_secs(10)),
        ("robust synthesis soundness", criterion_5, Duration::from_secs(60)),
        ("LP solver vs enumeration oracle", criterion_6, Duration::from_secs(10)),
        ("vertex enumeration vs oracle", criterion_7, Duration::from_secs(5)),
        ("P certificate vs vertex test", criterion_8, Duration::from_secs(30)),
    ];
    let mut failures = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed <= *limit {
                Ok(msg)
            } else {
                Err(format!("took {elapsed:.2?}, limit {limit:?}"))
            }
        });
        match outcome {
            Ok(msg) => println!("criterion {} PASS  {name}: {msg} [{elapsed:.2?}]", i + 1),
            Err(msg) => {
                failures += 1;
                println!("criterion {} FAIL  {name}: {msg} [{elapsed:.2?}]", i + 1);
            }
        }
    }
    println!("acceptance: {}/8 criteria passed", 8 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
