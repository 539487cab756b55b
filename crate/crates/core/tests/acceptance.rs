//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{random_memory, random_point, random_problem, rel_err};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vbb_core::dynamics::{
    characteristic_constant, characteristic_roots, classify_stability, criterion_value,
    eigenvalues_2x2, fixed_points, iterate_map, numerical_jacobian, simulate, RecurrenceConfig,
    RecurrenceKind, StabilityLabel,
};
use vbb_core::problem::{make_log_spectrum_problem, QuadraticProblem};
use vbb_core::solver::{solve, SolveStatus, SolveTrace, StepPolicy};
use vbb_core::stepsize::{
    bb_scalars, extreme_m, left_right_scalars, phi_residual, vbb_scalar, StepMemory,
};

// Tolerances as stated by the acceptance criteria.
const PAPER_ABS: f64 = 1e-4;
const DERIVED_REL: f64 = 1e-9;
const PRODUCT_REL: f64 = 1e-10;
const PHI_SCALED: f64 = 1e-8;
const CONTAINMENT_SLACK: f64 = 1e-10;
const BENCH_TOL: f64 = 1e-9;
const BENCH_ITER_BOUND: usize = 500;
const SWEEP_MAXIT: usize = 100_000;
const INCREASE_FRACTION: f64 = 0.2;
const FIXED_POINT_RESIDUAL: f64 = 1e-12;
const EIGEN_MATCH: f64 = 1e-5;
const SIM_STEPS: usize = 5000;
const ASYMPTOTIC_Q: f64 = 1e-3;
const ASYMPTOTIC_EPS: f64 = 1e-6;

/// Outcome of one sub-check.
struct Check {
    name: String,
    ok: bool,
    detail: String,
}

fn check(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        ok,
        detail: detail.into(),
    }
}

fn worked_memory() -> StepMemory {
    StepMemory::from_products(2.0, 3.0, 9.0).unwrap()
}

fn criterion_1() -> Vec<Check> {
    let mem = worked_memory();
    let (bb1, bb2) = bb_scalars(&mem);
    let (m1, m2) = extreme_m(&mem).unwrap();
    let (l, r) = left_right_scalars(&mem).unwrap();

    // oracle: double root of φ at the extreme m, found as the parabola
    // vertex (2m − 1) sᵀy / (2 m sᵀs)
    let vertex = |m: f64| (2.0 * m - 1.0) * 3.0 / (2.0 * m * 2.0);
    let disc = |m: f64| ((2.0 * m - 1.0) * 3.0).powi(2) - 4.0 * m * (m - 1.0) * 2.0 * 9.0;
    let (m1_ref, m2_ref) = ((1.0 + 2f64.sqrt()) / 2.0, (1.0 - 2f64.sqrt()) / 2.0);
    let l_ref = vertex(m1_ref);
    let r_ref = vertex(m2_ref);

    vec![
        check(
            "BB1 = 1.5",
            (bb1 - 1.5).abs() <= PAPER_ABS,
            format!("{bb1}"),
        ),
        check(
            "BB2 = 3.0",
            (bb2 - 3.0).abs() <= PAPER_ABS,
            format!("{bb2}"),
        ),
        check(
            "m1 = 1.2071",
            (m1 - 1.2071).abs() <= PAPER_ABS,
            format!("{m1}"),
        ),
        check(
            "m2 = -0.2071",
            (m2 + 0.2071).abs() <= PAPER_ABS,
            format!("{m2}"),
        ),
        check(
            "discriminant vanishes at m1, m2",
            disc(m1).abs() < 1e-12 && disc(m2).abs() < 1e-12,
            format!("{:e} {:e}", disc(m1), disc(m2)),
        ),
        check(
            "alpha_L ~ 0.87868",
            rel_err(l, l_ref) <= DERIVED_REL,
            format!("{l} vs {l_ref}"),
        ),
        check(
            "alpha_R ~ 5.12132",
            rel_err(r, r_ref) <= DERIVED_REL,
            format!("{r} vs {r_ref}"),
        ),
        check(
            "alpha_L * alpha_R = 4.5",
            rel_err(l * r, 4.5) <= PRODUCT_REL,
            format!("{}", l * r),
        ),
    ]
}

fn criterion_2() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ms: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
    let (mut order_fail, mut mono_fail, mut phi_fail) = (0, 0, 0);
    let mut worst_phi = 0.0f64;
    for _ in 0..1000 {
        let mem = random_memory(&mut rng);
        let (bb1, bb2) = bb_scalars(&mem);
        let (l, r) = left_right_scalars(&mem).unwrap();
        let vbb: Vec<f64> = ms.iter().map(|&m| vbb_scalar(&mem, m).unwrap()).collect();
        if !(l <= bb1 && bb2 <= r && vbb.iter().all(|&v| bb1 <= v && v <= bb2)) {
            order_fail += 1;
        }
        if vbb.windows(2).any(|w| w[1] > w[0]) {
            mono_fail += 1;
        }
        for (&m, &v) in ms.iter().zip(&vbb) {
            let scale = m * mem.ss() * v * v
                + ((2.0 * m - 1.0) * mem.sy() * v).abs()
                + (1.0 - m) * mem.yy();
            let res = phi_residual(&mem, m, v).abs() / scale;
            worst_phi = worst_phi.max(res);
            if res > PHI_SCALED {
                phi_fail += 1;
            }
        }
    }
    vec![
        check(
            "alpha_L <= BB1 <= VBB <= BB2 <= alpha_R",
            order_fail == 0,
            format!("{order_fail} violations"),
        ),
        check(
            "VBB nonincreasing in m",
            mono_fail == 0,
            format!("{mono_fail} violations"),
        ),
        check(
            "phi residual at VBB roots",
            phi_fail == 0,
            format!("worst scaled residual {worst_phi:e}"),
        ),
    ]
}

const CONTAINMENT_POLICIES: [StepPolicy; 7] = [
    StepPolicy::Bb1,
    StepPolicy::Bb2,
    StepPolicy::Vbb { m: 0.5 },
    StepPolicy::Left,
    StepPolicy::Right,
    StepPolicy::ModifiedLeft,
    StepPolicy::ModifiedRight,
];

fn criterion_3() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lo = |x: f64| x * (1.0 - CONTAINMENT_SLACK);
    let hi = |x: f64| x * (1.0 + CONTAINMENT_SLACK);
    let (mut left_bad, mut right_bad, mut other_bad, mut breakdowns) = (0, 0, 0, 0);
    let mut examples = Vec::new();
    let mut scalars = 0usize;
    for i in 0..200 {
        let n = rng.gen_range(2..=50);
        let log_kappa = rng.gen_range(0.0..=6.0);
        let problem = random_problem(&mut rng, n, log_kappa, i % 2 == 1);
        let (lmin, lmax) = (problem.lambda_min(), problem.lambda_max());
        let x1 = random_point(&mut rng, n);
        let m = rng.gen_range(0.0..=1.0);
        for policy in CONTAINMENT_POLICIES {
            let policy = match policy {
                StepPolicy::Vbb { .. } => StepPolicy::Vbb { m },
                p => p,
            };
            let trace = solve(&problem, policy, &x1, 1e-9, 2000).unwrap();
            if trace.status == SolveStatus::NumericalBreakdown {
                breakdowns += 1;
            }
            for rec in &trace.records {
                // every memory along the trace, whichever scalar was used
                if let (Some(bb1), Some(bb2)) = (rec.bb1, rec.bb2) {
                    let sin = (1.0 - (bb1 / bb2).min(1.0)).sqrt();
                    let (l, r) = (bb1 / (1.0 + sin), bb2 * (1.0 + sin));
                    scalars += 4;
                    if !(l > lmin / 2.0 && l <= hi(lmax)) {
                        left_bad += 1;
                    }
                    if !(r >= lo(lmin) && r < 2.0 * lmax) {
                        right_bad += 1;
                    }
                    for v in [bb1, bb2] {
                        if !(v >= lo(lmin) && v <= hi(lmax)) {
                            other_bad += 1;
                            if examples.len() < 3 {
                                examples.push(format!(
                                    "n={n} κ=1e{log_kappa:.2} {v} ∉ [{lmin}, {lmax}]"
                                ));
                            }
                        }
                    }
                }
                let Some(alpha) = rec.alpha else { continue };
                if rec.k == 1 {
                    continue;
                }
                scalars += 1;
                let ok = match policy {
                    StepPolicy::Left => alpha > lmin / 2.0 && alpha <= hi(lmax),
                    StepPolicy::Right => alpha >= lo(lmin) && alpha < 2.0 * lmax,
                    _ => alpha >= lo(lmin) && alpha <= hi(lmax),
                };
                if !ok {
                    match policy {
                        StepPolicy::Left => left_bad += 1,
                        StepPolicy::Right => right_bad += 1,
                        _ => other_bad += 1,
                    }
                    if examples.len() < 3 {
                        examples.push(format!(
                            "{policy} n={n} κ=1e{log_kappa:.2} {alpha} vs [{lmin}, {lmax}]"
                        ));
                    }
                }
            }
        }
    }
    vec![
        check(
            "alpha_L in (l_n/2, l_1]",
            left_bad == 0,
            format!("{left_bad} violations"),
        ),
        check(
            "alpha_R in [l_n, 2 l_1)",
            right_bad == 0,
            format!("{right_bad} violations"),
        ),
        check(
            "BB/VBB/ML/MR in [l_n, l_1]",
            other_bad == 0,
            format!("{other_bad} violations of {scalars} scalars {examples:?}"),
        ),
        check("no breakdowns", breakdowns == 0, format!("{breakdowns}")),
    ]
}

fn benchmark_run(policy: StepPolicy) -> SolveTrace {
    let problem = make_log_spectrum_problem(10, 4.0).unwrap();
    solve(&problem, policy, &[0.0; 10], BENCH_TOL, 10_000).unwrap()
}

fn criterion_4() -> Vec<Check> {
    let runs: Vec<(StepPolicy, SolveTrace)> = [
        StepPolicy::Bb1,
        StepPolicy::Bb2,
        StepPolicy::ModifiedLeft,
        StepPolicy::ModifiedRight,
        StepPolicy::Right,
    ]
    .into_iter()
    .map(|p| (p, benchmark_run(p)))
    .collect();
    let it = |i: usize| runs[i].1.iterations;
    let mut checks: Vec<Check> = runs[..4]
        .iter()
        .map(|(p, t)| {
            check(
                format!("{p} converged within {BENCH_ITER_BOUND}"),
                t.status == SolveStatus::Converged && t.iterations <= BENCH_ITER_BOUND,
                format!("{} after {}", t.status, t.iterations),
            )
        })
        .collect();
    checks.push(check(
        "iter(MR) <= iter(BB1)",
        it(3) <= it(0),
        format!("{} vs {}", it(3), it(0)),
    ));
    checks.push(check(
        "iter(MR) <= iter(BB2)",
        it(3) <= it(1),
        format!("{} vs {}", it(3), it(1)),
    ));
    checks.push(check(
        "iter(RIGHT) > iter(BB2)",
        it(4) > it(1),
        format!("{} vs {}", it(4), it(1)),
    ));
    checks
}

fn criterion_5() -> Vec<Check> {
    let problem = QuadraticProblem::new(vec![1e4, 1.0], vec![1.0, 1.0]).unwrap();
    let run = |p: f64| {
        solve(
            &problem,
            StepPolicy::ConstPLeft { p },
            &[0.0, 0.0],
            BENCH_TOL,
            SWEEP_MAXIT,
        )
        .unwrap()
    };
    let mut checks = Vec::new();
    for p in [1.5, 1.98] {
        let t = run(p);
        checks.push(check(
            format!("p={p} converged"),
            t.status == SolveStatus::Converged,
            format!("{} after {}", t.status, t.iterations),
        ));
    }
    let t = run(2.0);
    checks.push(check(
        "p=2 not converged",
        matches!(
            t.status,
            SolveStatus::MaxIterations | SolveStatus::NumericalBreakdown
        ),
        format!("{} after {}", t.status, t.iterations),
    ));
    for p in [1.05, 1.1, 1.2] {
        let t = run(p);
        let g: Vec<f64> = t.records.iter().map(|r| r.gnorm).collect();
        let ups = g.windows(2).filter(|w| w[1] > w[0]).count();
        let frac = ups as f64 / (g.len() - 1) as f64;
        checks.push(check(
            format!("p={p} nonmonotone"),
            frac >= INCREASE_FRACTION,
            format!("{:.1}% increases", 100.0 * frac),
        ));
    }
    checks
}

/// Distance between two unordered eigenvalue pairs.
fn pair_distance(a: [Complex64; 2], b: [Complex64; 2]) -> f64 {
    let straight = (a[0] - b[0]).norm().max((a[1] - b[1]).norm());
    let crossed = (a[0] - b[1]).norm().max((a[1] - b[0]).norm());
    straight.min(crossed)
}

fn criterion_6() -> Vec<Check> {
    let lambdas = [2.0, 5.0, 10.0, 100.0, 1e4];
    let ps = [1.1, 1.3, 1.5, 1.7, 1.9];
    let (mut residual_bad, mut eigen_bad, mut stable_bad, mut unstable_bad) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut cells, mut stable, mut unstable) = (0, 0, 0);
    for kind in [RecurrenceKind::Left, RecurrenceKind::Right] {
        for lambda in lambdas {
            for p in ps {
                let cfg = RecurrenceConfig::new(lambda, p, kind).unwrap();
                let fp = fixed_points(&cfg)[1];
                if !fp.exists {
                    continue;
                }
                cells += 1;
                let e = fp.epsilon;
                let tag = format!("{kind} λ={lambda} p={p}");

                let res = (iterate_map(&cfg, e, e).unwrap() - e).abs();
                if res > FIXED_POINT_RESIDUAL * e.max(1.0) {
                    residual_bad.push(format!("{tag}: {res:e}"));
                }

                let roots = characteristic_roots(characteristic_constant(&cfg));
                match numerical_jacobian(&cfg, (e, e)) {
                    Ok(j) => {
                        let d = pair_distance(roots, eigenvalues_2x2(&j));
                        if d > EIGEN_MATCH {
                            eigen_bad.push(format!("{tag}: {d:e}"));
                        }
                    }
                    Err(err) => eigen_bad.push(format!("{tag}: {err}")),
                }

                let report = classify_stability(&cfg);
                let sim = simulate(&cfg, 1.1 * e, 0.9 * e, SIM_STEPS).unwrap();
                let hit = sim.label.converged_to(e);
                match report.positive.label {
                    StabilityLabel::Stable => {
                        stable += 1;
                        if !hit {
                            stable_bad.push(format!(
                                "{tag} (q-like {:.5}, |mu| {:.5}): {}",
                                criterion_value(&cfg),
                                report.positive.spectral_radius.unwrap(),
                                sim.label
                            ));
                        }
                    }
                    StabilityLabel::Unstable => {
                        unstable += 1;
                        if hit {
                            unstable_bad.push(tag);
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    vec![
        check(
            "(a) fixed-point residual",
            residual_bad.is_empty(),
            format!("{cells} cells {residual_bad:?}"),
        ),
        check(
            "(b) roots match Jacobian eigenvalues",
            eigen_bad.is_empty(),
            format!("{eigen_bad:?}"),
        ),
        check(
            "(c) Stable cells converge to eps*",
            stable_bad.is_empty(),
            format!("{} of {stable} failed {stable_bad:?}", stable_bad.len()),
        ),
        check(
            "(c) Unstable cells do not",
            unstable_bad.is_empty(),
            format!(
                "{} of {unstable} failed {unstable_bad:?}",
                unstable_bad.len()
            ),
        ),
    ]
}

fn criterion_7() -> Vec<Check> {
    let lambda = 1e6;
    let ps: Vec<f64> = (1..=9).map(|i| 1.0 + i as f64 / 10.0).collect();
    let mut worst_q = 0.0f64;
    let mut worst_eps = 0.0f64;
    for &p in &ps {
        let q = criterion_value(&RecurrenceConfig::left(lambda, p).unwrap());
        worst_q = worst_q.max((q - 2.0 * (2.0 - p)).abs());
        let e = fixed_points(&RecurrenceConfig::right(lambda, p).unwrap())[1].epsilon;
        worst_eps = worst_eps.max((e - 1.0 / (lambda * (2.0 * p - 1.0))).abs());
    }
    vec![
        check(
            "|q - 2(2-p)|",
            worst_q <= ASYMPTOTIC_Q,
            format!("worst {worst_q:e}"),
        ),
        check(
            "RIGHT eps* ~ 1/(lambda(2p-1))",
            worst_eps <= ASYMPTOTIC_EPS,
            format!("worst {worst_eps:e}"),
        ),
    ]
}

fn criterion_8() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut one_d_bad = Vec::new();
    for lambda in [1e-3, 0.5, 2.0, 1e4] {
        let problem = QuadraticProblem::new(vec![lambda], vec![rng.gen_range(-5.0..5.0)]).unwrap();
        for policy in CONTAINMENT_POLICIES {
            let t = solve(&problem, policy, &[7.0], BENCH_TOL, 10).unwrap();
            if !(t.status == SolveStatus::Converged && t.iterations == 1) {
                one_d_bad.push(format!(
                    "{policy} λ={lambda}: {} in {}",
                    t.status, t.iterations
                ));
            }
        }
    }

    let mut aligned_bad = Vec::new();
    for (i, rotate) in [(0, false), (4, false), (2, true), (5, true)] {
        let problem = random_problem(&mut rng, 6, 3.0, rotate);
        let dir: Vec<f64> = match problem.dense_hessian() {
            None => (0..6).map(|j| if j == i { 1.0 } else { 0.0 }).collect(),
            Some(a) => {
                let eig = a.clone().symmetric_eigen();
                eig.eigenvectors.column(i).iter().copied().collect()
            }
        };
        let x1: Vec<f64> = problem
            .x_star()
            .iter()
            .zip(&dir)
            .map(|(x, d)| x + 3.0 * d)
            .collect();
        for policy in CONTAINMENT_POLICIES {
            let t = solve(&problem, policy, &x1, BENCH_TOL, 10).unwrap();
            if !(t.status == SolveStatus::Converged && t.iterations == 1) {
                aligned_bad.push(format!(
                    "{policy} rotate={rotate}: {} in {}",
                    t.status, t.iterations
                ));
            }
        }
    }

    // s = (1, 2, 3), y = 2.5 s: every product is exact
    let exact = StepMemory::from_products(14.0, 35.0, 87.5).unwrap();
    let collapse = |mem: &StepMemory| -> [f64; 4] {
        let (bb1, bb2) = bb_scalars(mem);
        let (l, r) = left_right_scalars(mem).unwrap();
        [bb1, bb2, l, r]
    };
    let vals = collapse(&exact);
    let exact_ok = vals.iter().all(|&v| v == 2.5);
    // random parallel pairs: sinθ is the square root of a rounding-level
    // quantity, so agreement is to √ε
    let mut spread = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(2..20);
        let c = 10f64.powf(rng.gen_range(-3.0..3.0));
        let s: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = s.iter().map(|v| c * v).collect();
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mem = StepMemory::from_products(dot(&s, &s), dot(&s, &y), dot(&y, &y)).unwrap();
        for v in collapse(&mem) {
            spread = spread.max(rel_err(v, c));
        }
    }
    vec![
        check(
            "1-D problems in one iteration",
            one_d_bad.is_empty(),
            format!("{one_d_bad:?}"),
        ),
        check(
            "eigenvector starts in one iteration",
            aligned_bad.is_empty(),
            format!("{aligned_bad:?}"),
        ),
        check(
            "parallel s, y collapse (exact)",
            exact_ok,
            format!("{vals:?}"),
        ),
        check(
            "parallel s, y collapse (random)",
            spread <= 1e-7,
            format!("worst rel {spread:e}"),
        ),
    ]
}

type Criterion = (&'static str, fn() -> Vec<Check>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 worked configuration", criterion_1),
        ("2 ordering and monotonicity", criterion_2),
        ("3 spectral containment", criterion_3),
        ("4 benchmark ordering", criterion_4),
        ("5 constant-p LEFT sweep", criterion_5),
        ("6 dynamics oracles", criterion_6),
        ("7 large-lambda asymptotics", criterion_7),
        ("8 degenerate and exact cases", criterion_8),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let checks = run();
        let ok = checks.iter().all(|c| c.ok);
        println!(
            "{} criterion {name} ({:.2?})",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed()
        );
        for c in &checks {
            println!(
                "    [{}] {}: {}",
                if c.ok { "ok" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        if !ok {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
