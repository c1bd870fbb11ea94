//! Acceptance checks. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::time::{Duration, Instant};

use perceptron::oracle::{cluster_census, enumerate_solutions};
use perceptron::schedule::PsiVariant;
use perceptron::stats::{abp_tail_bound, capacity_sbp, sbp_tail_bound, tail_checks};
use perceptron::{
    hamming, sample_instance, sample_with_rows, solve, verify_path, wide_web_path, GenConfig, ModelKind, PathCursor,
    PathSample, Schedule, StartPolicy,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn gen(model: ModelKind, n: usize, alpha: f64, kappa: f64, seed: u64) -> perceptron::Instance {
    sample_instance(&GenConfig { model, n, alpha, kappa, seed }).unwrap()
}

fn schedule_for(inst: &perceptron::Instance) -> Schedule {
    Schedule::build(inst.model(), inst.n(), inst.m(), inst.kappa(), PsiVariant::StdNormalTail).unwrap()
}

fn solver_validity() -> Outcome {
    let mut runs = 0;
    let mut successes = 0;
    let mut violations = 0;
    for (model, kappa) in [(ModelKind::Sbp, 1.0), (ModelKind::Abp, 0.0)] {
        for (n, m) in [(50_000, 5), (100_000, 11)] {
            for seed in 0..50 {
                let inst = sample_with_rows(model, m, n, kappa, seed).unwrap();
                let sched = schedule_for(&inst);
                let out = solve(&inst, &sched, &StartPolicy::SeededRandom(seed)).unwrap();
                runs += 1;
                let fresh = inst.is_solution(&out.x).unwrap();
                if out.success {
                    successes += 1;
                }
                if out.success != fresh || out.x.len() != n {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("{runs} runs, {successes} successes, {violations} violations"))
}

/// Smallest `n ≥ target` whose SBP schedule has an odd first block.
fn odd_n0(target: usize, m: usize, kappa: f64) -> (usize, Schedule) {
    (target..target + 8)
        .map(|n| (n, Schedule::build(ModelKind::Sbp, n, m, kappa, PsiVariant::StdNormalTail).unwrap()))
        .find(|(_, s)| s.n0() % 2 == 1)
        .unwrap()
}

fn sbp_equivariance() -> Outcome {
    let m = 11;
    let (n, sched) = odd_n0(100_000, m, 1.0);
    let mut violations = 0;
    for seed in 0..50 {
        let inst = sample_with_rows(ModelKind::Sbp, m, n, 1.0, seed).unwrap();
        let v = StartPolicy::SeededRandom(seed).start_vector(sched.n0()).unwrap();
        let a = solve(&inst, &sched, &StartPolicy::Given(v.clone())).unwrap().x;
        let b = solve(&inst, &sched, &StartPolicy::Given(-&v)).unwrap().x;
        if a != -&b || hamming(&a, &b).unwrap() != n {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("n={n} m={m} n0={}, 50 seeds, {violations} violations", sched.n0()))
}

fn monte_carlo_success() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (model, kappa) in [(ModelKind::Sbp, 1.0), (ModelKind::Abp, 0.0)] {
        let mut ok = 0;
        let mut worst = Duration::ZERO;
        for seed in 0..50 {
            let inst = gen(model, 100_000, 1e-4, kappa, seed);
            let sched = schedule_for(&inst);
            let t = Instant::now();
            let out = solve(&inst, &sched, &StartPolicy::AllPlus).unwrap();
            worst = worst.max(t.elapsed());
            ok += usize::from(out.success);
        }
        let rate = ok as f64 / 50.0;
        pass &= rate >= 0.9 && worst <= Duration::from_secs(10);
        parts.push(format!("{model} rate {rate:.2} (max {:.1} ms)", worst.as_secs_f64() * 1e3));
    }
    outcome(pass, parts.join("; "))
}

fn median_solve_time(model: ModelKind, kappa: f64, n: usize) -> f64 {
    let mut times = Vec::new();
    for seed in 0..3 {
        let inst = gen(model, n, 1e-4, kappa, seed);
        let sched = schedule_for(&inst);
        solve(&inst, &sched, &StartPolicy::AllPlus).unwrap();
        for _ in 0..5 {
            let t = Instant::now();
            std::hint::black_box(solve(&inst, &sched, &StartPolicy::AllPlus).unwrap());
            times.push(t.elapsed().as_secs_f64());
        }
    }
    times.sort_by(f64::total_cmp);
    times[times.len() / 2]
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn quadratic_runtime() -> Outcome {
    let ns = [25_000usize, 50_000, 100_000, 200_000];
    let mut pass = true;
    let mut parts = Vec::new();
    for (model, kappa) in [(ModelKind::Sbp, 1.0), (ModelKind::Abp, 0.0)] {
        let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = ns.iter().map(|&n| median_solve_time(model, kappa, n).ln()).collect();
        let s = slope(&xs, &ys);
        pass &= (1.6..=2.3).contains(&s);
        parts.push(format!("{model} slope {s:.2}"));
    }
    outcome(pass, parts.join("; "))
}

/// All tuples reachable by expanding each prefix over the ranges the cursor declares for it.
fn declared_tuples(cursor: &mut PathCursor<'_>) -> Vec<Vec<usize>> {
    fn expand(cursor: &mut PathCursor<'_>, prefix: &mut Vec<usize>, depth: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == depth {
            out.push(prefix.clone());
            return;
        }
        let mut probe = prefix.clone();
        probe.resize(depth, 0);
        cursor.seek(&probe).unwrap();
        let bound = cursor.bounds()[prefix.len()];
        for h in 0..=bound {
            prefix.push(h);
            expand(cursor, prefix, depth, out);
            prefix.pop();
        }
    }
    let depth = cursor.depth();
    let mut out = Vec::new();
    expand(cursor, &mut Vec::new(), depth, &mut out);
    out
}

fn path_structure() -> Outcome {
    let mut violations = 0;
    let mut pairs = 0;
    for seed in 0..2 {
        let inst = gen(ModelKind::Sbp, 100_000, 1e-4, 1.0, seed);
        let sched = schedule_for(&inst);
        let v = StartPolicy::SeededRandom(seed).start_vector(sched.n0()).unwrap();
        let mut cursor = wide_web_path(&inst, &sched, &v).unwrap();
        let rep = verify_path(&mut cursor, &PathSample::Random { count: 5_000, seed });
        pairs += rep.length;
        violations += rep.adjacency_failures as usize;
        violations += usize::from(rep.first != solve(&inst, &sched, &StartPolicy::Given(v.clone())).unwrap().x);
        violations += usize::from(rep.last != solve(&inst, &sched, &StartPolicy::Given(-&v)).unwrap().x);
    }
    let mut exhaustive = 0;
    for (model, kappa) in [(ModelKind::Sbp, 4.0), (ModelKind::Abp, -4.0)] {
        let sched =
            Schedule::from_blocks(model, 5, kappa, vec![5, 4, 2, 2], vec![5, 3, 1], PsiVariant::default()).unwrap();
        for seed in 0..20 {
            let inst = sample_with_rows(model, 5, 13, kappa, seed).unwrap();
            let v = StartPolicy::SeededRandom(seed).start_vector(5).unwrap();
            let mut cursor = wide_web_path(&inst, &sched, &v).unwrap();
            let declared = declared_tuples(&mut cursor);
            cursor.rewind();
            let mut visited = vec![cursor.tuple()];
            while cursor.advance() {
                visited.push(cursor.tuple());
            }
            let rep = verify_path(&mut cursor, &PathSample::All);
            exhaustive += 1;
            if visited != declared || !rep.adjacency_ok || rep.solution_fraction != 1.0 {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("{pairs} sampled pairs at n=1e5, {exhaustive} exhaustive paths at n=13, {violations} violations"),
    )
}

fn path_density() -> Outcome {
    let mut total = 0u64;
    let mut good = 0u64;
    let mut endpoint_ok = 0;
    for seed in 0..20 {
        let inst = gen(ModelKind::Sbp, 100_000, 1e-4, 1.0, seed);
        let sched = schedule_for(&inst);
        let v = StartPolicy::SeededRandom(seed).start_vector(sched.n0()).unwrap();
        let mut cursor = wide_web_path(&inst, &sched, &v).unwrap();
        let rep = verify_path(&mut cursor, &PathSample::Random { count: 1_000, seed });
        total += rep.length;
        good += rep.length - rep.failures;
        endpoint_ok += usize::from(inst.is_solution(&rep.first).unwrap());
    }
    let frac = good as f64 / total as f64;
    outcome(
        frac >= 0.99,
        format!("{good}/{total} = {frac:.4} sampled vertices are solutions ({endpoint_ok}/20 start vectors are)"),
    )
}

fn bfs_component(start: &[i8], set: &HashSet<Vec<i8>>) -> Vec<Vec<i8>> {
    let mut seen: HashSet<Vec<i8>> = HashSet::from([start.to_vec()]);
    let mut queue = VecDeque::from([start.to_vec()]);
    while let Some(x) = queue.pop_front() {
        for i in 0..x.len() {
            let mut y = x.clone();
            y[i] = -y[i];
            if set.contains(&y) && seen.insert(y.clone()) {
                queue.push_back(y);
            }
        }
    }
    seen.into_iter().collect()
}

fn oracle_cross_checks() -> Outcome {
    let mut violations = 0;
    let mut solver_hits = 0;
    for (model, kappa) in [(ModelKind::Sbp, 1.0), (ModelKind::Abp, 0.0)] {
        let sched =
            Schedule::from_blocks(model, 5, kappa, vec![5, 4, 2, 2], vec![5, 3, 1], PsiVariant::default()).unwrap();
        for seed in 0..100 {
            let inst = sample_with_rows(model, 5, 13, kappa, seed).unwrap();
            let sols = enumerate_solutions(&inst).unwrap();
            let set: HashSet<Vec<i8>> = sols.iter().map(|s| s.to_vec()).collect();
            // (a)
            for p in 0..5 {
                let out = solve(&inst, &sched, &StartPolicy::SeededRandom(seed * 8 + p)).unwrap();
                if out.success {
                    solver_hits += 1;
                    violations += usize::from(!set.contains(out.x.as_slice()));
                }
            }
            // (b)
            if model == ModelKind::Sbp {
                violations += sols.iter().filter(|s| !set.contains((-*s).as_slice())).count();
            }
            // (c)
            let census = cluster_census(&inst, &sols).unwrap();
            let mut covered: BTreeSet<Vec<i8>> = BTreeSet::new();
            for comp in &census.components {
                let members = bfs_component(&comp.representative, &set);
                let diam =
                    members.iter().flat_map(|a| members.iter().map(move |b| hamming(a, b).unwrap())).max().unwrap_or(0);
                if members.len() != comp.size || diam != comp.diameter || !comp.diameter_exact {
                    violations += 1;
                }
                for mbr in members {
                    violations += usize::from(!covered.insert(mbr));
                }
            }
            if covered.len() != sols.len() || census.total_solutions != sols.len() {
                violations += 1;
            }
            if census.isolated_count != census.components.iter().filter(|c| c.size == 1).count() {
                violations += 1;
            }
        }
    }
    outcome(
        violations == 0,
        format!("200 instances at n=13, {solver_hits} solver successes checked, {violations} violations"),
    )
}

/// Adaptive Simpson integration.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, eps: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, eps, 50)
}

fn capacity_calculator() -> Outcome {
    let density = |u: f64| (-u * u / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for (kappa, quoted) in [(1.0, 1.816), (0.5, 0.722)] {
        let p = 2.0 * simpson(&density, 0.0, kappa, 1e-14);
        let oracle = -std::f64::consts::LN_2 / p.ln();
        let got = capacity_sbp(kappa).unwrap();
        pass &= (got - oracle).abs() <= 1e-3 && (quoted - oracle).abs() <= 1e-3;
        parts.push(format!("kappa={kappa}: {got:.6} (oracle {oracle:.6})"));
    }
    outcome(pass, parts.join("; "))
}

fn bound_caps() -> Outcome {
    let mut checked = 0;
    let mut over = Vec::new();
    let mut literal_over = 0;
    for n in [25_000usize, 50_000, 100_000, 200_000] {
        let m = (1e-4 * n as f64).floor() as usize;
        for (model, kappa) in [(ModelKind::Sbp, 1.0), (ModelKind::Abp, 0.0)] {
            for variant in [PsiVariant::StdNormalTail, PsiVariant::Literal] {
                let Ok(s) = Schedule::build(model, n, m, kappa, variant) else { continue };
                let first = if model == ModelKind::Sbp { 1 } else { 0 };
                for k in first..s.rounds {
                    let cap = s.row_budgets[k + 1] as f64 / m as f64;
                    let b = match model {
                        ModelKind::Sbp => sbp_tail_bound(&s, k, s.thresholds[k]).unwrap(),
                        ModelKind::Abp => abp_tail_bound(&s, k, s.thresholds[k]).unwrap(),
                    };
                    if variant == PsiVariant::StdNormalTail {
                        checked += 1;
                        if b > cap {
                            over.push(format!("{model} n={n} k={k}: {b:.3} > {cap:.3}"));
                        }
                    } else if b > cap {
                        literal_over += 1;
                    }
                }
            }
        }
    }
    let mut pairs = 0;
    let mut within = 0;
    for (model, kappa) in [(ModelKind::Sbp, 1.0), (ModelKind::Abp, 0.0)] {
        for seed in 0..50 {
            let inst = gen(model, 100_000, 1e-4, kappa, seed);
            let sched = schedule_for(&inst);
            let out = solve(&inst, &sched, &StartPolicy::AllPlus).unwrap();
            for c in tail_checks(&sched, &out.round_sums).unwrap() {
                pairs += 1;
                within += usize::from(c.empirical_within_cap());
            }
        }
    }
    let frac = within as f64 / pairs as f64;
    let shown: Vec<&str> = over.iter().take(3).map(String::as_str).collect();
    outcome(
        over.is_empty() && frac >= 0.9,
        format!(
            "analytic: {}/{checked} over cap [{}] (literal variant: {literal_over} over); empirical within cap {within}/{pairs} = {frac:.2}",
            over.len(),
            shown.join(", ")
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 9] = [
        ("solver validity", solver_validity),
        ("SBP equivariance", sbp_equivariance),
        ("Monte Carlo success", monte_carlo_success),
        ("quadratic runtime", quadratic_runtime),
        ("path structure", path_structure),
        ("path solution density", path_density),
        ("oracle cross-checks", oracle_cross_checks),
        ("capacity calculator", capacity_calculator),
        ("bound caps", bound_caps),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!(
            "criterion {} {} {name}: {} ({:.1}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
