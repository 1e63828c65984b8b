//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line to stderr
//! (uncaptured, so it shows in plain `cargo test` output) and then asserts.
//!
//! Criteria run one at a time behind a lock so that wall-clock limits are not
//! inflated by other criteria sharing the CPU.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Mutex;
use std::time::Instant;

use lceopt_bench::config::{BenchConfig, ScenarioConfig, TimingSection};
use lceopt_bench::timing::measure_timing;
use lceopt_bench::{registry, run_batch, BatchStats};
use lceopt_core::cross_entropy::fit_marginals;
use lceopt_core::pomdp::SirSettings;
use lceopt_core::rng::{purpose, stream, substream};
use lceopt_core::scenarios::{conttag_heuristic, ContTag, OneStepToy, SyntheticConfig, SyntheticHighDim, TwoStateToy};
use lceopt_core::{
    node_count, plan_step, select_elites, sir_update, update_basic, update_lazy, Budget, DiagonalGaussian, NodeIndex,
    ParticleBelief, PolicyTreeShape, Scenario, ScoredSample, SolverConfig, Variant,
};
use rand::Rng;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> std::sync::MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "[acceptance] criterion {id}: {verdict} -- {detail}");
}

fn desk_config() -> BenchConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/conttag_desk.json");
    BenchConfig::load(&path).expect("desk config loads")
}

// ---------------------------------------------------------------------------
// 1. Marginal maximum likelihood of the lazy update
// ---------------------------------------------------------------------------

/// Summed Gaussian log-likelihood of `xs` under `N(mu, s2)`. Zero variance is
/// a point mass: `+inf` when every entry equals `mu`, `-inf` otherwise.
fn log_likelihood(xs: &[f64], mu: f64, s2: f64) -> f64 {
    if s2 == 0.0 {
        return if xs.iter().all(|&x| x == mu) { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    xs.iter().map(|&x| -0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + (x - mu).powi(2) / s2)).sum()
}

#[test]
fn criterion_1_lazy_update_is_marginal_mle() {
    let _g = serial();
    let start = Instant::now();
    let eps = 1e-3;
    let mut rng = stream(0xC1);
    let mut violations = Vec::new();
    let mut checked = 0usize;
    for instance in 0..200 {
        let dim = rng.random_range(1..=20);
        let count = rng.random_range(1..=10);
        let presence = rng.random_range(0.2..1.0);
        let mut vectors: Vec<Vec<Option<f64>>> = (0..count)
            .map(|_| (0..dim).map(|_| rng.random_bool(presence).then(|| rng.random_range(-3.0..3.0))).collect())
            .collect();
        // At least one entry somewhere.
        vectors[0][0] = Some(rng.random_range(-3.0..3.0));
        let dist = DiagonalGaussian::new(
            (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            (0..dim).map(|_| rng.random_range(0.1..2.0)).collect(),
        )
        .unwrap();
        let batch = vectors.iter().cloned().map(|v| ScoredSample::new(v, 0.0).unwrap()).collect();
        let elites = select_elites(batch, count).unwrap();
        let fit = fit_marginals(&dist, &elites).unwrap();
        for i in 0..dim {
            if fit.counts[i] == 0 {
                continue;
            }
            let xs: Vec<f64> = vectors.iter().filter_map(|v| v[i]).collect();
            let best = log_likelihood(&xs, fit.mu[i], fit.sigma2[i]);
            for (dm, ds) in [(eps, 0.0), (-eps, 0.0), (0.0, eps), (0.0, -eps)] {
                let s2 = fit.sigma2[i] + ds;
                if s2 < 0.0 {
                    continue;
                }
                let perturbed = log_likelihood(&xs, fit.mu[i] + dm, s2);
                if perturbed > best {
                    violations.push((instance, i, dm, ds, best, perturbed));
                }
            }
            checked += 1;
        }
    }

    let mut unequal = 0;
    for _ in 0..100 {
        let dim = rng.random_range(1..=20);
        let count = rng.random_range(1..=10);
        let vectors: Vec<Vec<f64>> = (0..count).map(|_| (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
        let dist = DiagonalGaussian::new(vec![0.1; dim], vec![0.7; dim]).unwrap();
        let alpha = rng.random_range(0.05..=1.0);
        let batch: Vec<ScoredSample<Vec<f64>>> =
            vectors.iter().cloned().enumerate().map(|(j, v)| ScoredSample::new(v, j as f64).unwrap()).collect();
        let elites = select_elites(batch, count).unwrap();
        let lazy = update_lazy(&dist, &elites, alpha).unwrap();
        let basic = update_basic(&dist, &elites, alpha).unwrap();
        let same = lazy.mu().iter().zip(basic.mu()).chain(lazy.sigma2().iter().zip(basic.sigma2())).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            unequal += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = violations.is_empty() && unequal == 0 && secs < 10.0;
    report(
        1,
        pass,
        &format!(
            "200 instances, {checked} fitted dims, {} improving perturbations; {unequal}/100 lazy!=basic; {secs:.2}s (limit 10s)",
            violations.len()
        ),
    );
    assert!(pass, "violations {:?}", &violations[..violations.len().min(5)]);
}

// ---------------------------------------------------------------------------
// 2. Tree size and indexing against an explicit BFS construction
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_tree_indexing_matches_bfs() {
    let _g = serial();
    let start = Instant::now();
    let mut mismatches = Vec::new();
    for obs in [1usize, 2, 3, 8] {
        for depth in 1..=5usize {
            // children[n][o] by explicit breadth-first expansion.
            let mut children: Vec<Vec<usize>> = Vec::new();
            let mut depths = vec![0usize];
            let mut queue = std::collections::VecDeque::from([0usize]);
            let mut next = 1usize;
            while let Some(n) = queue.pop_front() {
                if children.len() <= n {
                    children.resize(n + 1, Vec::new());
                }
                if depths[n] == depth {
                    continue;
                }
                for _ in 0..obs {
                    children[n].push(next);
                    depths.push(depths[n] + 1);
                    queue.push_back(next);
                    next += 1;
                }
            }
            let total = next;
            if node_count(depth, obs).unwrap() != total {
                mismatches.push(format!("node_count({depth}, {obs})"));
                continue;
            }
            let shape = PolicyTreeShape::new(depth, obs, 1).unwrap();
            for (n, kids) in children.iter().enumerate() {
                if shape.is_leaf(NodeIndex(n)) != kids.is_empty() || shape.depth_of(NodeIndex(n)) != depths[n] {
                    mismatches.push(format!("node {n} at |O|={obs}, M={depth}"));
                }
                for (o, &c) in kids.iter().enumerate() {
                    if shape.child(NodeIndex(n), o).map(|x| x.0) != Ok(c) || shape.parent(NodeIndex(c)) != Some(NodeIndex(n)) {
                        mismatches.push(format!("child({n}, {o}) at |O|={obs}, M={depth}"));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = mismatches.is_empty() && secs < 1.0;
    report(2, pass, &format!("20 (|O|, M) pairs, {} mismatches; {secs:.3}s (limit 1s)", mismatches.len()));
    assert!(pass, "{mismatches:?}");
}

// ---------------------------------------------------------------------------
// 3. SIR against exact Bayes
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_sir_matches_exact_bayes() {
    let _g = serial();
    let start = Instant::now();
    let toy = TwoStateToy::default();
    let particles = 10_000;
    let settings = SirSettings { target_count: particles, max_rounds: 10 };
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut env = substream(seed, &[purpose::ENVIRONMENT]);
        let mut filt = substream(seed, &[purpose::BELIEF_UPDATE]);
        let mut state = toy.sample_initial_state(&mut env);
        let mut belief = toy.initial_belief(&state, particles, &mut filt);
        let mut exact = toy.config().prior;
        for _ in 0..5 {
            let out = toy.generate(&state, &[0.0], &mut env);
            belief = sir_update(&toy, &belief, &[0.0], out.observation, &mut filt, settings).unwrap();
            exact = toy.exact_update(exact, out.observation).unwrap();
            // Total variation on two states is the gap on either one.
            worst = worst.max((belief.mass_where(|s| *s == 0) - exact[0]).abs());
            state = out.next_state;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 0.02 && secs < 30.0;
    report(3, pass, &format!("20 seeds x 5 updates, worst TV {worst:.4} (limit 0.02); {secs:.2}s (limit 30s)"));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 4. CE convergence on the one-step toy
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_ce_converges_on_toy() {
    let _g = serial();
    let start = Instant::now();
    let toy = OneStepToy::default();
    let config = SolverConfig {
        candidates: 100,
        trajectories: 1,
        elites: 10,
        depth: 1,
        alpha: 0.8,
        budget: Budget::CeIterations(50),
        particle_count: 1,
        ..Default::default()
    };
    let belief = ParticleBelief::uniform(vec![()]).unwrap();
    let mut within = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let r = plan_step(&toy, &belief, &config, &mut stream(seed)).unwrap();
        let err = r.chosen_action.iter().zip(toy.optimum()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst = worst.max(err);
        if err <= 0.05 {
            within += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = within >= 95 && secs < 60.0;
    report(4, pass, &format!("{within}/100 seeds within 0.05 of a* (need 95), worst {worst:.2e}; {secs:.2}s (limit 60s)"));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 5. Lazy against basic CPU time
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_lazy_versus_basic_timing() {
    let _g = serial();
    let section = TimingSection { depths: vec![1, 2, 3, 4, 5], iterations: 50, steps: 20 };

    let synthetic = SyntheticHighDim::default();
    let synth_cfg = SolverConfig { candidates: 496, trajectories: 11, elites: 50, ..SolverConfig::default() };
    let high = measure_timing(&synthetic, &synth_cfg, &section, 0).unwrap();

    let conttag = ContTag::new(Default::default()).unwrap();
    let tag_cfg = SolverConfig { candidates: 493, trajectories: 103, elites: 49, ..SolverConfig::default() };
    let low = measure_timing(&conttag, &tag_cfg, &section, 0).unwrap();

    let fmt = |r: &lceopt_bench::TimingReport| {
        section
            .depths
            .iter()
            .map(|&m| {
                let l = r.cell(Variant::Lazy, m).unwrap().mean_cpu_seconds;
                let b = r.cell(Variant::Basic, m).unwrap().mean_cpu_seconds;
                format!("M={m}: lazy {l:.4}s basic {b:.4}s ratio {:.2}", b / l)
            })
            .collect::<Vec<_>>()
            .join("; ")
    };
    let _ = writeln!(std::io::stderr(), "[acceptance] criterion 5 synthetic-12D: {}", fmt(&high));
    let _ = writeln!(std::io::stderr(), "[acceptance] criterion 5 conttag: {}", fmt(&low));

    // Not a criterion: the same study with eight observations, where the
    // tree is wide enough for lazy sampling to skip most of it.
    let wide = SyntheticHighDim::new(SyntheticConfig { observation_count: 8, ..Default::default() }).unwrap();
    let wide_section = TimingSection { depths: vec![1, 2, 3], iterations: 50, steps: 2 };
    let wide_report = measure_timing(&wide, &synth_cfg, &wide_section, 0).unwrap();
    let wide_ratios: Vec<String> =
        wide_section.depths.iter().map(|&m| format!("M={m}: {:.2}", wide_report.ratio(m).unwrap())).collect();
    let _ = writeln!(
        std::io::stderr(),
        "[acceptance] criterion 5 supplementary, synthetic-12D with |O|=8, basic/lazy: {}",
        wide_ratios.join("; ")
    );

    let r3 = high.ratio(3).unwrap();
    let r5 = high.ratio(5).unwrap();
    let low_max = section.depths.iter().map(|&m| low.ratio(m).unwrap()).fold(f64::MIN, f64::max);
    let high_ok = r3 >= 10.0 && r5 >= 50.0;
    let low_ok = low_max <= 2.0;
    report(
        5,
        high_ok && low_ok,
        &format!(
            "synthetic basic/lazy {r3:.2} at M=3 (need >= 10), {r5:.2} at M=5 (need >= 50); conttag max ratio {low_max:.2} (need <= 2)"
        ),
    );
    assert!(low_ok, "conttag ratio {low_max}");
    assert!(high_ok, "synthetic ratios {r3} (M=3), {r5} (M=5)");
}

// ---------------------------------------------------------------------------
// 6. ContTag end to end with the desk configuration
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_conttag_desk_return() {
    let _g = serial();
    let start = Instant::now();
    let config = desk_config();
    assert_eq!(config.solver.depth, 2);
    assert_eq!(config.solver.budget, Budget::CpuSeconds(0.5));
    assert_eq!(config.run.episodes, 200);
    let built = registry::build(&config.scenario).unwrap();
    let registry::BuiltScenario::ContTag(scenario) = &built else { panic!("desk config must be conttag") };
    let records = run_batch(scenario, &config.solver, config.run.base_seed, config.run.episodes, config.run.workers, |_| Ok(())).unwrap();
    let stats = BatchStats::from_records(&records);
    let secs = start.elapsed().as_secs_f64();
    let pass = stats.mean_return > -1.5 && secs < 45.0 * 60.0;
    report(
        6,
        pass,
        &format!(
            "mean return {:.3} +- {:.3} over {} episodes (need > -1.5), mean steps {:.1}; {:.0}s (limit 2700s)",
            stats.mean_return,
            stats.ci95_halfwidth.unwrap_or(f64::NAN),
            stats.n,
            stats.mean_steps,
            secs
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 7. ContTag heuristic values
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_conttag_heuristic_values() {
    let _g = serial();
    let start = Instant::now();
    let h = |l: usize| conttag_heuristic(l as f64, 0.95, -1.0, 10.0);
    let at0 = h(0);
    let at1 = h(1);
    let monotone = (0..50).all(|l| h(l + 1) < h(l));
    let secs = start.elapsed().as_secs_f64();
    let pass = at0 == 10.0 && at1 == 8.5 && monotone && secs < 1.0;
    report(7, pass, &format!("h(0)={at0}, h(1)={at1}, strictly decreasing on [0,50]: {monotone}; {secs:.4}s (limit 1s)"));
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 8. Lazy and basic behave alike
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_lazy_basic_parity() {
    let _g = serial();
    let start = Instant::now();
    let config = desk_config();
    let built = registry::build(&config.scenario).unwrap();
    let registry::BuiltScenario::ContTag(scenario) = &built else { panic!("desk config must be conttag") };
    let stats = |variant| {
        let solver = SolverConfig { variant, budget: Budget::CeIterations(50), ..config.solver.clone() };
        let records = run_batch(scenario, &solver, config.run.base_seed, 200, config.run.workers, |_| Ok(())).unwrap();
        BatchStats::from_records(&records)
    };
    let lazy = stats(Variant::Lazy);
    let basic = stats(Variant::Basic);
    let gap = (lazy.mean_return - basic.mean_return).abs();
    let allowed = lazy.ci95_halfwidth.unwrap() + basic.ci95_halfwidth.unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = gap < allowed && secs < 90.0 * 60.0;
    report(
        8,
        pass,
        &format!(
            "lazy {:.3} +- {:.3}, basic {:.3} +- {:.3}, gap {gap:.3} (need < {allowed:.3}); {secs:.0}s (limit 5400s)",
            lazy.mean_return,
            lazy.ci95_halfwidth.unwrap(),
            basic.mean_return,
            basic.ci95_halfwidth.unwrap()
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------------------
// 9. Byte-identical output across repeats and worker counts
// ---------------------------------------------------------------------------

fn run_cli(config: &Path, workers: usize, out: &Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_lceopt-bench"))
        .args(["run", "--config"])
        .arg(config)
        .args(["--workers", &workers.to_string(), "--output"])
        .arg(out)
        .env_remove("LCEOPT_SEED")
        .output()
        .expect("binary runs");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out.join("episodes.csv")).unwrap()
}

#[test]
fn criterion_9_determinism() {
    let _g = serial();
    let dir = tempfile::tempdir().unwrap();
    let mut configs: Vec<(&str, BenchConfig)> = Vec::new();
    let mut tag = BenchConfig::for_scenario(ScenarioConfig::Conttag(Default::default()));
    tag.solver = SolverConfig { candidates: 12, trajectories: 6, elites: 3, depth: 2, budget: Budget::CeIterations(4), particle_count: 500, ..Default::default() };
    tag.run.episodes = 8;
    tag.run.base_seed = 77;
    configs.push(("conttag", tag));
    let mut toy = BenchConfig::for_scenario(ScenarioConfig::Toy(Default::default()));
    toy.solver = SolverConfig { candidates: 20, trajectories: 1, elites: 4, depth: 1, budget: Budget::CeIterations(10), particle_count: 1, ..Default::default() };
    toy.run.episodes = 16;
    configs.push(("toy", toy));

    let mut failures = Vec::new();
    for (name, cfg) in &configs {
        let path: PathBuf = dir.path().join(format!("{name}.json"));
        std::fs::write(&path, serde_json::to_string(cfg).unwrap()).unwrap();
        let outputs: Vec<Vec<u8>> = [(1, "a"), (1, "b"), (8, "a"), (8, "b")]
            .iter()
            .map(|(w, tag)| run_cli(&path, *w, &dir.path().join(format!("{name}-w{w}-{tag}"))))
            .collect();
        if outputs.iter().any(|o| o != &outputs[0]) {
            failures.push(*name);
        }
        if outputs[0].is_empty() {
            failures.push("empty output");
        }
    }
    let pass = failures.is_empty();
    report(9, pass, &format!("2 configs x (workers 1, 8) x 2 repeats, differing: {failures:?}"));
    assert!(pass);
}
