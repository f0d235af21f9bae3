//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use imbal_core::dataset::{synthesize, write_csv};
use imbal_core::imbalance::information_imbalance_by_sorting;
use imbal_core::select::{default_scale_grid, random_baseline};
use imbal_core::{
    classify, exhaustive_best_subsets, greedy_forward, information_imbalance, lag_scan, native_order, plane_point,
    scale_optimize, Dataset, DistanceSpec, ImbalanceOptions, LagSpec, ObjectiveMode, Relationship, SelectionObjective,
    SynthKind, SynthSpec, Thresholds,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

struct Suite {
    failed: usize,
}

impl Suite {
    fn check(&mut self, id: &str, title: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => {
                Err(format!("runtime {:.2} s exceeds {:.0} s", elapsed.as_secs_f64(), limit.as_secs_f64()))
            }
            (o, _) => o,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                self.failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>3} {title}: {detail} [{:.2} s]", elapsed.as_secs_f64());
    }
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn gaussian(n: usize, cols: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let values = (0..n * cols).map(|_| rng.sample(StandardNormal)).collect();
    Dataset::new((0..cols).map(|j| format!("c{j}")).collect(), values).unwrap()
}

fn all_columns(ds: &Dataset) -> DistanceSpec {
    DistanceSpec::new((0..ds.n_cols()).collect()).unwrap()
}

/// A random non-empty subset of `0..d`.
fn random_subset(d: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    loop {
        let s: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

fn spec(ds: &Dataset, names: &[&str]) -> DistanceSpec {
    DistanceSpec::from_names(ds, names).unwrap()
}

fn opts() -> ImbalanceOptions {
    ImbalanceOptions::default()
}

fn identity_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for trial in 0..20 {
        let n = [10, 100, 1000][trial % 3];
        let ds = gaussian(n, 1 + trial % 4, &mut rng);
        let a = all_columns(&ds);
        let d = information_imbalance(&ds, &a, &a, &opts()).map_err(|e| e.to_string())?.delta;
        ensure(d.to_bits() == (2.0 / n as f64).to_bits(), format!("trial {trial}: N={n} gave {d}"))?;
    }
    Ok("20/20 datasets give exactly 2/N".into())
}

fn independence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let ds = gaussian(1000, 2, &mut ChaCha8Rng::seed_from_u64(100 + seed));
        let (x, y) = (spec(&ds, &["c0"]), spec(&ds, &["c1"]));
        for (a, b) in [(&x, &y), (&y, &x)] {
            let d = information_imbalance(&ds, a, b, &opts()).map_err(|e| e.to_string())?.delta;
            ensure((0.9..=1.1).contains(&d), format!("seed {seed}: {d:.4} outside [0.9, 1.1]"))?;
            worst = worst.max((d - 1.0).abs());
        }
    }
    Ok(format!("all 20 estimates in [0.9, 1.1], max |Δ-1| = {worst:.4}"))
}

fn aniso() -> Dataset {
    let kind = SynthKind::GaussAniso3d { sigmas: [1.0, 1.0, 0.1] };
    synthesize(&SynthSpec { kind, n: 1000, seed: 7 }).unwrap()
}

fn plane_case(ds: &Dataset, a: &[&str], b: &[&str]) -> Result<(f64, f64, Relationship), String> {
    let pp = plane_point(ds, &spec(ds, a), &spec(ds, b), &opts(), "").map_err(|e| e.to_string())?;
    Ok((pp.delta_ab, pp.delta_ba, classify(&pp, Thresholds::default()).class))
}

fn fig_equivalent() -> Outcome {
    let (ab, ba, class) = plane_case(&aniso(), &["x", "y", "z"], &["x", "y"])?;
    let detail = format!("Δ(xyz→xy) {ab:.4}, Δ(xy→xyz) {ba:.4}, class {class}");
    ensure(ab < 0.1 && ba < 0.1 && class == Relationship::Equivalent, detail.clone())?;
    Ok(detail)
}

fn fig_contained() -> Outcome {
    let (ab, ba, class) = plane_case(&aniso(), &["x", "y", "z"], &["x"])?;
    let detail = format!("Δ(xyz→x) {ab:.4} (< 0.3), Δ(x→xyz) {ba:.4} (> 0.6), class {class} (a_contains_b)");
    ensure(ab < 0.3 && ba > 0.6 && class == Relationship::AContainsB, detail.clone())?;
    Ok(detail)
}

fn fig_independent() -> Outcome {
    let (ab, ba, class) = plane_case(&aniso(), &["x"], &["y"])?;
    let detail = format!("Δ(x→y) {ab:.4}, Δ(y→x) {ba:.4}, class {class}");
    ensure(class == Relationship::Independent, detail.clone())?;
    Ok(detail)
}

fn symmetric_sharing() -> Outcome {
    let ds = synthesize(&SynthSpec { kind: SynthKind::GaussIso4d, n: 1000, seed: 7 }).unwrap();
    let (ab, ba, class) = plane_case(&ds, &["x", "y", "z"], &["y", "z", "w"])?;
    let detail = format!("Δ(xyz→yzw) {ab:.4}, Δ(yzw→xyz) {ba:.4}, class {class}");
    ensure(class == Relationship::SymmetricShared && (ab - ba).abs() < 0.1, detail.clone())?;
    Ok(detail)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut with_ties = 0;
    for trial in 0..100 {
        let n = rng.random_range(5..=200);
        let d = rng.random_range(1..=5);
        let mut ds = gaussian(n, d, &mut rng);
        // Every fourth dataset is quantized so that exact distance ties occur.
        if trial % 4 == 0 {
            let q: Vec<f64> = ds.values().iter().map(|v| (v * 4.0).round() / 4.0).collect();
            ds = Dataset::new(ds.column_names().to_vec(), q).unwrap();
            with_ties += 1;
        }
        let a = DistanceSpec::new(random_subset(d, &mut rng)).unwrap();
        let b = DistanceSpec::new(random_subset(d, &mut rng)).unwrap();
        let k = rng.random_range(1..=3.min(n - 2));
        let o = ImbalanceOptions::with_k(k);
        let fast = information_imbalance(&ds, &a, &b, &o);
        let slow = information_imbalance_by_sorting(&ds, &a, &b, k);
        match (fast, slow) {
            (Ok(f), Ok(s)) => ensure(
                f.delta.to_bits() == s.delta.to_bits(),
                format!("trial {trial}: fast {} vs oracle {}", f.delta, s.delta),
            )?,
            (Err(f), Err(s)) => ensure(f.to_string() == s.to_string(), format!("trial {trial}: {f} vs {s}"))?,
            (f, s) => return Err(format!("trial {trial}: routes disagree: {f:?} vs {s:?}")),
        }
    }
    Ok(format!("100/100 trials bit-identical ({with_ties} with quantized values)"))
}

fn scale_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..50 {
        let n = rng.random_range(20..=300);
        let d = rng.random_range(1..=4);
        let ds = gaussian(n, d, &mut rng);
        let a = DistanceSpec::new(random_subset(d, &mut rng)).unwrap();
        let b = DistanceSpec::new(random_subset(d, &mut rng)).unwrap();
        let base = information_imbalance(&ds, &a, &b, &opts()).map_err(|e| e.to_string())?.delta;
        for alpha in [1e-3, 1.0, 1e3] {
            let on_a =
                information_imbalance(&ds, &a.rescaled(alpha).unwrap(), &b, &opts()).map_err(|e| e.to_string())?;
            let on_b =
                information_imbalance(&ds, &a, &b.rescaled(alpha).unwrap(), &opts()).map_err(|e| e.to_string())?;
            ensure(
                on_a.delta.to_bits() == base.to_bits() && on_b.delta.to_bits() == base.to_bits(),
                format!("trial {trial}, alpha {alpha}: {base} vs {} / {}", on_a.delta, on_b.delta),
            )?;
        }
    }
    Ok("50/50 trials bit-identical under alpha in {1e-3, 1, 1e3}".into())
}

/// `y = x1 + x2 + 0.01·noise` with distractors `n1..n5` and a `dummy` column.
fn additive(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut col = || (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>();
    let (x1, x2, e) = (col(), col(), col());
    let y = (0..n).map(|i| x1[i] + x2[i] + 0.01 * e[i]).collect();
    let mut cols = vec![("x1".to_string(), x1), ("x2".to_string(), x2)];
    for j in 1..=5 {
        cols.push((format!("n{j}"), col()));
    }
    cols.push(("dummy".into(), col()));
    cols.push(("y".into(), y));
    Dataset::from_columns(cols).unwrap()
}

fn selection_recovery() -> Outcome {
    let pool = ["x1", "x2", "n1", "n2", "n3", "n4", "n5"];
    let ds = additive(1000, 70);
    let obj = SelectionObjective::new(spec(&ds, &["y"]), ObjectiveMode::Forward);
    let ex = exhaustive_best_subsets(&ds, &pool, &obj, 2, 1_000_000).map_err(|e| e.to_string())?;
    let gr = greedy_forward(&ds, &pool, &obj, 2).map_err(|e| e.to_string())?;
    let sorted = |v: &[String]| {
        let mut v = v.to_vec();
        v.sort();
        v
    };
    let best = sorted(&ex.steps[1].subset);
    ensure(best == ["x1", "x2"], format!("exhaustive d=2 picked {best:?}"))?;
    for d in 0..2 {
        ensure(
            sorted(&ex.steps[d].subset) == sorted(&gr.steps[d].subset)
                && ex.steps[d].eval.objective == gr.steps[d].eval.objective,
            format!("greedy {:?} differs from exhaustive {:?} at d={}", gr.steps[d].subset, ex.steps[d].subset, d + 1),
        )?;
    }
    let with_dummy = ["x1", "x2", "n1", "n2", "n3", "n4", "n5", "dummy"];
    for seed in 0..10 {
        let ds = additive(1000, 700 + seed);
        let obj = SelectionObjective::new(spec(&ds, &["y"]), ObjectiveMode::Forward);
        let first = greedy_forward(&ds, &with_dummy, &obj, 1).map_err(|e| e.to_string())?;
        ensure(first.steps[0].subset != ["dummy"], format!("seed {seed}: dummy picked first"))?;
    }
    Ok(format!(
        "exhaustive d=2 {{x1, x2}} at Δ {:.4}; greedy agrees for d ≤ 2; dummy never first in 10 seeds",
        ex.steps[1].eval.objective
    ))
}

/// 30 columns; the informative ones sit at native positions 5, 10, ..., 30.
fn descriptor(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cols = (1..=30)
        .map(|p| {
            let sigma = if p % 5 == 0 { 3.0 } else { 0.5 };
            (format!("f{p:02}"), (0..n).map(|_| sigma * rng.sample::<f64, _>(StandardNormal)).collect())
        })
        .collect();
    Dataset::from_columns(cols).unwrap()
}

fn compression_curve() -> Outcome {
    let ds = descriptor(500, 8);
    let pool: Vec<String> = ds.column_names().to_vec();
    let obj = SelectionObjective::new(all_columns(&ds), ObjectiveMode::Symmetric);
    let greedy = greedy_forward(&ds, &pool, &obj, 10).map_err(|e| e.to_string())?;
    let native = native_order(&ds, &pool, &obj, 10).map_err(|e| e.to_string())?;
    let mut summary = Vec::new();
    for d in 1..=10 {
        let random = random_baseline(&ds, &pool, &obj, d, 20, 800 + d as u64).map_err(|e| e.to_string())?;
        let g = greedy.steps[d - 1].eval.objective;
        let nat = native.steps[d - 1].eval.objective;
        ensure(
            g <= random.median && g <= nat,
            format!("d={d}: greedy {g:.4}, random median {:.4}, native {nat:.4}", random.median),
        )?;
        summary.push(format!("{g:.3}/{:.3}/{nat:.3}", random.median));
    }
    Ok(format!("greedy/random-median/native per d: {}", summary.join(" ")))
}

/// `y_{t+1} = 0.9·x_t + 0.1·e` with a persistent AR(1) driver `x`.
fn causal_panel(groups: usize, steps: usize, phi: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y, mut g, mut t) = (vec![], vec![], vec![], vec![]);
    for gi in 0..groups {
        let mut prev: f64 = 0.0;
        for step in 0..steps {
            let e: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.sample(StandardNormal);
            y.push(if step == 0 { e } else { 0.9 * prev + 0.1 * e });
            let xt = if step == 0 { u } else { phi * prev + (1.0 - phi * phi).sqrt() * u };
            x.push(xt);
            g.push(format!("g{gi:02}"));
            t.push(step as i64);
            prev = xt;
        }
    }
    Dataset::from_columns(vec![("x".into(), x), ("y".into(), y)])
        .unwrap()
        .with_groups("region", g)
        .unwrap()
        .with_time("t", t)
        .unwrap()
}

fn lag_asymmetry() -> Outcome {
    let ds = causal_panel(20, 60, 0.8, 9);
    let spec = LagSpec {
        group_col: Some("region".into()),
        time_col: "t".into(),
        source_cols: vec!["x".into()],
        target_cols: vec!["y".into()],
        lags: (-3..=3).collect(),
    };
    let res = lag_scan(&ds, &spec, &opts()).map_err(|e| e.to_string())?;
    ensure(res.best_forward_lag == Some(1), format!("forward argmin at {:?}", res.best_forward_lag))?;
    let mut pairs = Vec::new();
    for d in 1..=3 {
        let (fwd, bwd) = (res.forward(d).unwrap(), res.forward(-d).unwrap());
        ensure(fwd < bwd, format!("δ={d}: Δ(x→y(t+δ)) {fwd:.4} ≥ Δ(x→y(t-δ)) {bwd:.4}"))?;
        pairs.push(format!("{fwd:.3}<{bwd:.3}"));
    }
    Ok(format!("argmin at +1 ({:.4}); δ=1,2,3: {}", res.forward(1).unwrap(), pairs.join(" ")))
}

fn scale_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 1000;
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let u = x.iter().map(|v| 100.0 * v).collect();
    let ds = Dataset::from_columns(vec![("x".into(), x), ("y".into(), y), ("u".into(), u)]).unwrap();
    let obj = SelectionObjective::new(spec(&ds, &["x", "y"]), ObjectiveMode::Forward);
    let grid = default_scale_grid();
    let step = (grid[1] / grid[0]).log10();
    let res = scale_optimize(&ds, &["u"], "y", &obj, &grid, 1).map_err(|e| e.to_string())?;
    let lambda = res.scales[0];
    let detail = format!("λ = {lambda:.6}, Δ = {} (2/N = {})", res.eval.delta_forward, 2.0 / n as f64);
    ensure((lambda.log10() + 2.0).abs() <= step + 1e-9, detail.clone())?;
    ensure(res.eval.delta_forward.to_bits() == (2.0 / n as f64).to_bits(), detail.clone())?;
    Ok(detail)
}

fn write_dataset(ds: &Dataset, path: &Path) {
    let file = std::fs::File::create(path).unwrap();
    write_csv(ds, file).unwrap();
}

/// Run `imbal` in `dir` and return its stdout plus every file it wrote.
fn run_cli(dir: &Path, args: &[String]) -> Result<Vec<(String, Vec<u8>)>, String> {
    std::fs::create_dir_all(dir).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_imbal"))
        .args(args)
        .current_dir(dir)
        .env_remove("IMBAL_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let mut artifacts = vec![("<stdout>".to_string(), out.stdout)];
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    entries.sort();
    for p in entries {
        artifacts.push((p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()));
    }
    Ok(artifacts)
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = root.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    let g3 = data.join("g3.csv");
    let panel = data.join("panel.csv");
    let sel = data.join("sel.csv");
    write_dataset(&aniso(), &g3);
    write_dataset(&causal_panel(10, 40, 0.8, 11), &panel);
    write_dataset(&additive(300, 12), &sel);
    let (g3, panel, sel) = (g3.display().to_string(), panel.display().to_string(), sel.display().to_string());

    let commands: Vec<Vec<String>> = [
        vec!["synth", "--kind", "spiral", "--n", "500", "--seed", "7", "--out", "spiral.csv"],
        vec!["imbalance", "--data", &g3, "--space-a", "x,y,z", "--space-b", "x,y", "--out", "rec.jsonl"],
        vec!["imbalance", "--data", &g3, "--space-a", "x", "--space-b", "y:z", "--subsample", "200", "--seed", "3"],
        vec!["plane", "--data", &g3, "--pairs", "x,y,z|x,y;x,y|x;x|y", "--svg", "plane.svg", "--out", "plane.jsonl"],
        vec!["hist", "--data", &g3, "--space-a", "x", "--space-b", "x,y,z", "--bins", "10", "--out", "hist.jsonl"],
        vec![
            "select",
            "--data",
            &sel,
            "--pool",
            "x1:dummy",
            "--target",
            "y",
            "--strategy",
            "greedy",
            "--d-max",
            "3",
            "--svg",
            "sel.svg",
            "--out",
            "sel.jsonl",
        ],
        vec![
            "select",
            "--data",
            &sel,
            "--pool",
            "x1:dummy",
            "--target",
            "y",
            "--strategy",
            "random",
            "--d-max",
            "2",
            "--trials",
            "5",
            "--seed",
            "4",
            "--out",
            "rand.jsonl",
        ],
        vec![
            "scale",
            "--data",
            &sel,
            "--features",
            "x2",
            "--anchor",
            "x1",
            "--target",
            "x1,x2",
            "--profiles",
            "--out",
            "scale.jsonl",
        ],
        vec![
            "lag",
            "--data",
            &panel,
            "--group-col",
            "region",
            "--time-col",
            "t",
            "--source",
            "x",
            "--target",
            "y",
            "--lags",
            "-2:2",
            "--out",
            "lag.jsonl",
        ],
    ]
    .iter()
    .map(|c| c.iter().map(|s| s.to_string()).collect())
    .collect();

    let mut compared = 0;
    for (ci, cmd) in commands.iter().enumerate() {
        let mut runs = Vec::new();
        for (rep, threads) in ["8", "8", "8", "1"].iter().enumerate() {
            for format in ["table", "json"] {
                let mut args = cmd.clone();
                args.extend(["--threads".to_string(), threads.to_string(), "--format".into(), format.into()]);
                let dir = root.path().join(format!("c{ci}-r{rep}-{format}"));
                runs.push((format, run_cli(&dir, &args)?));
            }
        }
        for format in ["table", "json"] {
            let same: Vec<_> = runs.iter().filter(|(f, _)| *f == format).map(|(_, a)| a).collect();
            for other in &same[1..] {
                ensure(*other == same[0], format!("{} ({format}) output differs between runs", cmd[0]))?;
                compared += 1;
            }
        }
    }
    Ok(format!(
        "{} commands, {compared} run comparisons byte-identical (3 reps at 8 threads, 1 at 1 thread)",
        commands.len()
    ))
}

fn main() {
    let mut suite = Suite { failed: 0 };
    let s = Duration::from_secs;
    suite.check("1", "identity law", Some(s(5)), identity_law);
    suite.check("2", "independence calibration", Some(s(10)), independence);
    suite.check("3a", "aniso-3d (xyz, xy) equivalent", Some(s(10)), fig_equivalent);
    suite.check("3b", "aniso-3d (xyz, x) contained", Some(s(10)), fig_contained);
    suite.check("3c", "aniso-3d (x, y) independent", Some(s(10)), fig_independent);
    suite.check("4", "iso-4d symmetric sharing", Some(s(10)), symmetric_sharing);
    suite.check("5", "oracle equivalence", Some(s(30)), oracle_equivalence);
    suite.check("6", "scale invariance", None, scale_invariance);
    suite.check("7", "selection recovery", Some(s(60)), selection_recovery);
    suite.check("8", "compression curve", Some(s(120)), compression_curve);
    suite.check("9", "lag asymmetry", Some(s(30)), lag_asymmetry);
    suite.check("10", "scale recovery", Some(s(30)), scale_recovery);
    suite.check("11", "CLI determinism", None, determinism);
    println!("{} criteria failed", suite.failed);
    if suite.failed > 0 {
        std::process::exit(1);
    }
}
