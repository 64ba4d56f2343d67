//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use varitree::geometry::{self, PolygonalCurve};
use varitree::inference::{self, RecoveryConfig};
use varitree::similarity::{self, SimilarityMatrix};
use varitree::tree::{self, EmbedConfig, EmbeddedTree, RootedTree};
use varitree::varifold::{self, Deformation};
use varitree::velocity::{self, PipelineConfig};
use varitree::{Exec, KernelParams};

const LADDER: [f64; 5] = [0.4, 0.2, 0.1, 0.05, 0.025];

/// Rounding floor below which consecutive rungs are compared as equal.
const ROUNDING_FLOOR: f64 = 1e-12;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

/// Non-increasing with 5% slack between consecutive rungs.
fn monotone(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] <= w[0] + 0.05 * w[0].abs() + ROUNDING_FLOOR)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Smoothly turning random polyline starting at `start` in direction
/// `heading`, with `segments` segments of lengths drawn from `h`.
fn random_walk(
    rng: &mut ChaCha8Rng,
    start: Vec<f64>,
    heading: Vec<f64>,
    segments: (usize, usize),
    h: (f64, f64),
) -> PolygonalCurve {
    let dim = start.len();
    let segments = rng.random_range(segments.0..=segments.1);
    let mut p = start;
    let mut d = unit(heading);
    let mut rows = vec![p.clone()];
    for _ in 0..segments {
        let g = gauss(rng, dim);
        d = unit(d.iter().zip(&g).map(|(a, b)| a + 0.3 * b).collect());
        let len = rng.random_range(h.0..h.1);
        p = p.iter().zip(&d).map(|(a, b)| a + len * b).collect();
        rows.push(p.clone());
    }
    PolygonalCurve::from_rows(dim, &rows).unwrap()
}

fn gauss(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn random_curve(rng: &mut ChaCha8Rng, dim: usize, segments: (usize, usize), h: (f64, f64)) -> PolygonalCurve {
    let start = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
    let heading = gauss(rng, dim);
    random_walk(rng, start, heading, segments, h)
}

/// Composite midpoint rule: every segment split into `sub` pieces, kernel
/// written out directly.
fn quadrature_inner(a: &PolygonalCurve, b: &PolygonalCurve, sx: f64, st: f64, sub: usize) -> f64 {
    let nodes = |c: &PolygonalCurve| {
        let mut out: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
        for w in c.rows().windows(2) {
            let d: Vec<f64> = w[1].iter().zip(&w[0]).map(|(x, y)| x - y).collect();
            let len = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let t: Vec<f64> = d.iter().map(|x| x / len).collect();
            for q in 0..sub {
                let f = (q as f64 + 0.5) / sub as f64;
                let x: Vec<f64> = w[0].iter().zip(&d).map(|(p, v)| p + f * v).collect();
                out.push((x, t.clone(), len / sub as f64));
            }
        }
        out
    };
    let (na, nb) = (nodes(a), nodes(b));
    let mut sum = 0.0;
    for (x, tx, wx) in &na {
        for (y, ty, wy) in &nb {
            let dx: f64 = x.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum();
            let dt: f64 = tx.iter().zip(ty).map(|(p, q)| (p - q) * (p - q)).sum();
            sum += wx * wy * (-dx / (sx * sx) - dt / (st * st)).exp();
        }
    }
    sum
}

fn criterion_1() -> Outcome {
    // Pairs start close together with similar headings so that cross terms
    // are not far kernel tails. Midpoint atoms differ from the continuum by
    // O((h/σ)²); segments stay below σ/50.
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let dim = rng.random_range(2..=5);
        let k = KernelParams::new(rng.random_range(0.25..0.5), rng.random_range(0.3..1.0)).unwrap();
        let start: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
        let heading = gauss(&mut rng, dim);
        let offset: Vec<f64> = gauss(&mut rng, dim).iter().map(|x| 0.05 * x).collect();
        let start_b: Vec<f64> = start.iter().zip(&offset).map(|(a, b)| a + b).collect();
        let heading_b: Vec<f64> = heading.iter().zip(gauss(&mut rng, dim)).map(|(a, b)| a + 0.3 * b).collect();
        let a = random_walk(&mut rng, start, heading, (20, 200), (0.002, 0.005));
        let b = random_walk(&mut rng, start_b, heading_b, (20, 200), (0.002, 0.005));
        let (va, vb) = (a.to_varifold(), b.to_varifold());
        let q = |x: &PolygonalCurve, y: &PolygonalCurve| quadrature_inner(x, y, k.sigma_x(), k.sigma_t(), 10);
        let (qaa, qbb, qab) = (q(&a, &a), q(&b, &b), q(&a, &b));
        let cross = varifold::inner(&va, &vb, &k).unwrap();
        let dist = varifold::distance_sq(&va, &vb, &k).unwrap();
        worst = worst
            .max(rel(cross, qab))
            .max(rel(varifold::norm_sq(&va, &k), qaa))
            .max(rel(varifold::norm_sq(&vb, &k), qbb))
            .max(rel(dist, qaa + qbb - 2.0 * qab));
    }
    outcome(worst <= 1e-4, format!("20 pairs, worst relative gap {worst:.2e} (tol 1e-4)"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst_eig_ratio = f64::INFINITY;
    let mut worst_asym: f64 = 0.0;
    let mut worst_add: f64 = 0.0;
    for _ in 0..50 {
        let dim = rng.random_range(2..=4);
        let count = rng.random_range(3..=8);
        let k = KernelParams::new(rng.random_range(0.05..0.5), rng.random_range(0.1..1.0)).unwrap();
        let curves: Vec<PolygonalCurve> = (0..count)
            .map(|_| random_curve(&mut rng, dim, (5, 60), (0.01, 0.05)))
            .collect();
        let vars: Vec<_> = curves.iter().map(PolygonalCurve::to_varifold).collect();
        let g = varifold::gram(&vars, &k, Exec::Parallel).unwrap();
        let trace: f64 = (0..count).map(|i| g[i][i]).sum();
        for i in 0..count {
            for j in 0..count {
                worst_asym = worst_asym.max((g[i][j] - g[j][i]).abs());
            }
        }
        let m = DMatrix::from_fn(count, count, |i, j| g[i][j]);
        let min_eig = m.symmetric_eigen().eigenvalues.min();
        worst_eig_ratio = worst_eig_ratio.min(min_eig / trace);

        // Split the first curve at an interior vertex and rejoin.
        let c = &curves[0];
        let cut = c.stations()[rng.random_range(1..c.len() - 1)];
        let (head, tail) = (c.subcurve(0.0, cut).unwrap(), c.subcurve(cut, c.arc_length()).unwrap());
        let joined = head.concat(&tail).unwrap();
        for other in &vars[1..] {
            let whole = varifold::inner(&joined.to_varifold(), other, &k).unwrap();
            let parts = varifold::inner(&head.to_varifold(), other, &k).unwrap()
                + varifold::inner(&tail.to_varifold(), other, &k).unwrap();
            worst_add = worst_add.max(rel(parts, whole));
        }
    }
    let ok = worst_asym == 0.0 && worst_eig_ratio >= -1e-9 && worst_add <= 1e-12;
    outcome(
        ok,
        format!(
            "max asymmetry {worst_asym:e}, min eigenvalue/trace {worst_eig_ratio:.2e}, additivity gap {worst_add:.2e}"
        ),
    )
}

fn straight_tree(parent: Vec<Option<usize>>, positions: Vec<Vec<f64>>, step: f64) -> EmbeddedTree {
    let t = RootedTree::new(parent).unwrap();
    let dim = positions[0].len();
    let edges = (0..t.node_count())
        .map(|c| {
            t.parent(c).map(|p| {
                PolygonalCurve::from_rows(dim, &[positions[p].clone(), positions[c].clone()])
                    .unwrap()
                    .resample(step)
                    .unwrap()
            })
        })
        .collect();
    EmbeddedTree::from_parts(t, dim, positions, edges).unwrap()
}

fn criterion_3() -> Outcome {
    let configs = [
        (
            "chain",
            vec![None, Some(0), Some(1)],
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]],
        ),
        (
            "branching",
            vec![None, Some(0), Some(0)],
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
        ),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, parent, pos) in configs {
        let ratios: Vec<f64> = LADDER
            .iter()
            .map(|&s| {
                let emb = straight_tree(parent.clone(), pos.clone(), s / 5.0);
                let k = KernelParams::new(s, s).unwrap();
                similarity::lemma_probe(&emb, 0, 1, 2, &k).unwrap().ratio
            })
            .collect();
        let last = *ratios.last().unwrap();
        ok &= monotone(&ratios) && last < 0.01;
        detail.push(format!("{name} {:.2e} → {last:.2e}", ratios[0]));
    }
    outcome(ok, detail.join(", "))
}

fn acceptance_trees() -> Vec<EmbeddedTree> {
    let cfg = EmbedConfig {
        clearance: Some(0.1),
        step: 0.005,
        ..Default::default()
    };
    (0..5u64)
        .map(|i| {
            let nodes = 8 + (i as usize % 5);
            let dim = 2 + (i as usize % 3);
            let t = tree::random_tree(nodes, 3, 1000 + i).unwrap();
            tree::embed(&t, dim, &cfg, 1000 + i).unwrap()
        })
        .collect()
}

fn criterion_4(sweeps: &[Vec<similarity::SweepRow>]) -> Outcome {
    let mut ok = true;
    let mut worst_final: f64 = 0.0;
    for rows in sweeps {
        let errs: Vec<f64> = rows.iter().map(|r| r.max_decomp_err).collect();
        ok &= monotone(&errs);
        worst_final = worst_final.max(*errs.last().unwrap());
    }
    ok &= worst_final < 0.05;
    let first: Vec<String> = sweeps[0].iter().map(|r| format!("{:.1e}", r.max_decomp_err)).collect();
    outcome(
        ok,
        format!("worst error at σ = 0.025: {worst_final:.2e}; tree 0 ladder [{}]", first.join(", ")),
    )
}

fn tree_metric(t: &RootedTree, w: &[f64]) -> SimilarityMatrix {
    let n = t.node_count();
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                rows[i][j] = t
                    .tree_path(i, j)
                    .windows(2)
                    .map(|e| if t.parent(e[0]) == Some(e[1]) { w[e[0]] } else { w[e[1]] })
                    .sum();
            }
        }
    }
    SimilarityMatrix::from_rows(similarity::node_ids(n), &rows, None).unwrap()
}

fn criterion_5(sweeps: &[Vec<similarity::SweepRow>]) -> Outcome {
    let mut worst_tri = f64::NEG_INFINITY;
    let mut worst_four = f64::NEG_INFINITY;
    for rows in sweeps {
        let last = rows.last().unwrap();
        worst_tri = worst_tri.max(last.triangle_defect);
        worst_four = worst_four.max(last.four_point_defect);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let mut exact_worst = f64::NEG_INFINITY;
    for s in 0..30 {
        let t = tree::random_tree(rng.random_range(4..=12), 3, s).unwrap();
        let w: Vec<f64> = (0..t.node_count()).map(|_| rng.random_range(1..=20) as f64).collect();
        let m = tree_metric(&t, &w);
        let edges = t.edges();
        exact_worst = exact_worst
            .max(similarity::triangle_defect(&m, Some(&edges)))
            .max(similarity::four_point_defect(&m, Some(&edges)))
            .max(similarity::four_point_defect(&m, None));
    }
    let ok = worst_tri <= 0.05 && worst_four <= 0.05 && exact_worst <= 0.0;
    outcome(
        ok,
        format!(
            "at σ = 0.025: triangle {worst_tri:.2e}, four-point {worst_four:.2e}; exact tree metrics worst {exact_worst:.1e}"
        ),
    )
}

/// Decodes a Prüfer sequence into an edge list.
fn prufer_edges(seq: &[usize], n: usize) -> Vec<(usize, usize)> {
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    for &x in seq {
        let leaf = (0..n).find(|&v| degree[v] == 1).unwrap();
        edges.push((leaf, x));
        degree[leaf] -= 1;
        degree[x] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    edges.push((rest[0], rest[1]));
    edges
}

fn criterion_6() -> Outcome {
    let cfg = RecoveryConfig {
        trees: 20,
        nodes: 10,
        dim: 3,
        sigmas: vec![0.05],
        seed: 606,
        ..Default::default()
    };
    let rows = inference::recovery_experiment(&cfg, Exec::Parallel).unwrap();
    let rate = inference::success_rates(&rows)[0].1;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut trees = 0usize;
    let mut recovered = 0usize;
    for n in 2..=6usize {
        for code in 0..n.pow(n as u32 - 2) {
            let mut c = code;
            let seq: Vec<usize> = (0..n - 2)
                .map(|_| {
                    let d = c % n;
                    c /= n;
                    d
                })
                .collect();
            let edges = prufer_edges(&seq, n);
            let want: BTreeSet<(usize, usize)> = edges.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
            let mut adj = vec![Vec::new(); n];
            for &(a, b) in &edges {
                adj[a].push(b);
                adj[b].push(a);
            }
            // Orient from node 0 to get a parent array.
            let mut parent = vec![None; n];
            let mut stack = vec![0usize];
            let mut seen = vec![false; n];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for &u in &adj[v] {
                    if !seen[u] {
                        seen[u] = true;
                        parent[u] = Some(v);
                        stack.push(u);
                    }
                }
            }
            let t = RootedTree::new(parent).unwrap();
            let mut all = true;
            for w in [vec![1.0; n], (0..n).map(|_| rng.random_range(1..=9) as f64).collect()] {
                let m = tree_metric(&t, &w);
                let got: BTreeSet<(usize, usize)> = inference::reconstruct(&m, "0")
                    .unwrap()
                    .edges()
                    .iter()
                    .map(|&(a, b, _)| (a.min(b), a.max(b)))
                    .collect();
                all &= got == want;
            }
            trees += 1;
            recovered += all as usize;
        }
    }
    let ok = rate >= 0.95 && recovered == trees;
    outcome(
        ok,
        format!("success rate {rate:.2} at σ = 0.05; exact MST recovery {recovered}/{trees} labeled trees ≤ 6 nodes"),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let k = KernelParams::new(0.2, 0.5).unwrap();
    let mut ok = true;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..10 {
        let dim = rng.random_range(2..=4);
        let x = random_curve(&mut rng, dim, (80, 80), (0.01, 0.02));
        let y = random_curve(&mut rng, dim, (80, 80), (0.01, 0.02));
        let dir: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let phi = Deformation::sinusoidal(0.0, 0.5, &dir).unwrap();
        let gaps: Vec<f64> = [10.0, 20.0, 40.0]
            .iter()
            .map(|div| {
                let (moved, base) = varifold::robustness_probe(&x, &y, &phi.with_amplitude(k.sigma_x() / div), &k).unwrap();
                (moved - base).abs()
            })
            .collect();
        ok &= gaps.windows(2).all(|w| w[1] < w[0]);
        worst_ratio = worst_ratio.max(gaps[2] / gaps[0]);
    }
    outcome(ok, format!("10 curve pairs, worst gap(σ/40) / gap(σ/10) = {worst_ratio:.3}"))
}

fn criterion_8() -> Outcome {
    let cfg = PipelineConfig::default();
    let step = cfg.integration.step;
    let k = KernelParams::new(0.05, 0.05).unwrap();
    let mut ok = true;
    let mut worst_h: f64 = 0.0;
    for seed in [3u64, 17, 29] {
        let t = tree::random_tree(6, 3, seed).unwrap();
        let emb = tree::embed(&t, 2, &EmbedConfig { step, ..Default::default() }, seed).unwrap();
        let out = velocity::velocity_pipeline(&emb, &PipelineConfig { seed, ..cfg.clone() }, &k, Exec::Parallel).unwrap();
        for c in &out.traced {
            let v = c.node.unwrap();
            if v == t.root() {
                continue;
            }
            let truth = emb.path_curve(v).unwrap();
            let h = geometry::hausdorff(c.trace.curve.as_ref().unwrap(), &truth, step / 10.0).unwrap();
            worst_h = worst_h.max(h);
        }
        let ids = similarity::node_ids(6);
        ok &= inference::is_isomorphic(&out.inferred, &t, &ids, inference::IsoMode::Strict).unwrap();
    }
    ok &= worst_h <= 2.0 * step;
    outcome(ok, format!("3 trees, worst Hausdorff {worst_h:.4} (bound {}), all isomorphic: {ok}", 2.0 * step))
}

fn run_cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_varitree"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Every number in two text files agrees to 1e-10 relative and every other
/// token matches exactly.
fn numerically_equal(a: &Path, b: &Path) -> bool {
    let (sa, sb) = match (std::fs::read_to_string(a), std::fs::read_to_string(b)) {
        (Ok(x), Ok(y)) => (x, y),
        _ => return false,
    };
    let split = |s: &str| -> Vec<String> {
        s.split(|c: char| c == ',' || c == '\n' || c == ' ' || c == '[' || c == ']' || c == ':')
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty())
            .collect()
    };
    let (ta, tb) = (split(&sa), split(&sb));
    ta.len() == tb.len()
        && ta.iter().zip(&tb).all(|(x, y)| match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(p), Ok(q)) => p == q || (p - q).abs() <= 1e-10 * p.abs().max(q.abs()),
            _ => x == y,
        })
}

fn criterion_9() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let tree = d("tree.json");
    if !run_cli(&["--threads", "1", "generate", "--nodes", "10", "--dim", "3", "--seed", "7", "-o", &tree]) {
        return outcome(false, "generate failed");
    }
    // (subcommand arguments, output files relative to the output path)
    let runs: Vec<(Vec<String>, Vec<&str>)> = vec![
        (
            vec!["generate", "--nodes", "10", "--dim", "3", "--seed", "7"].into_iter().map(String::from).collect(),
            vec![""],
        ),
        (
            vec!["distances", "--tree", &tree, "--sigma-x", "0.05"].into_iter().map(String::from).collect(),
            vec![""],
        ),
        (
            vec!["infer", "--tree", &tree, "--sigma-x", "0.05"].into_iter().map(String::from).collect(),
            vec![""],
        ),
        (
            vec!["convergence", "--tree", &tree].into_iter().map(String::from).collect(),
            vec![""],
        ),
        (
            vec!["experiment", "--trees", "4", "--nodes", "6", "--seed", "3", "--sigmas", "0.1,0.05"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec![""],
        ),
        (
            vec!["velocity-demo", "--nodes", "6", "--seed", "3", "--noise-pos", "0.002", "--noise-vel", "0.05"]
                .into_iter()
                .map(String::from)
                .collect(),
            vec!["/cells.json", "/matrix.csv", "/inferred.json"],
        ),
    ];
    let mut failures = Vec::new();
    for (i, (args, files)) in runs.iter().enumerate() {
        let outs: Vec<String> = ["a", "b", "c"].iter().map(|tag| d(&format!("run{i}{tag}"))).collect();
        let threads = ["1", "1", "4"];
        let mut ran = true;
        for (out, th) in outs.iter().zip(threads) {
            let mut full: Vec<&str> = vec!["--threads", th];
            full.extend(args.iter().map(String::as_str));
            full.extend(["-o", out.as_str()]);
            ran &= run_cli(&full);
        }
        if !ran {
            failures.push(format!("{} did not run", args[0]));
            continue;
        }
        for f in files {
            let [a, b, c] = [0, 1, 2].map(|k| format!("{}{f}", outs[k]));
            let same = std::fs::read(&a).ok().zip(std::fs::read(&b).ok()).is_some_and(|(x, y)| x == y);
            if !same {
                failures.push(format!("{}{f}: sequential reruns differ", args[0]));
            }
            if !numerically_equal(Path::new(&a), Path::new(&c)) {
                failures.push(format!("{}{f}: threaded run differs", args[0]));
            }
        }
    }
    let n = runs.len();
    if failures.is_empty() {
        outcome(true, format!("{n} subcommands byte-identical at --threads 1, equal at --threads 4"))
    } else {
        outcome(false, failures.join("; "))
    }
}

fn main() {
    let total = Instant::now();
    let mut all_ok = true;
    let mut report = |id: usize, name: &str, budget: Duration, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let within = elapsed <= budget;
        let ok = result.ok && within;
        all_ok &= ok;
        println!(
            "criterion {id} [{}] {name}: {} ({:.1}s of {}s budget)",
            if ok { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    };

    report(1, "oracle equivalence", Duration::from_secs(10), &mut criterion_1);
    report(2, "kernel properties", Duration::from_secs(30), &mut criterion_2);
    report(3, "chain and branching cross terms vanish", Duration::from_secs(60), &mut criterion_3);

    let start = Instant::now();
    let trees = acceptance_trees();
    let sweeps: Vec<_> = trees
        .iter()
        .map(|emb| similarity::convergence_sweep(emb, &LADDER, 1.0, Exec::Parallel).unwrap())
        .collect();
    let sweep_time = start.elapsed();
    report(4, "path decomposition converges", Duration::from_secs(300), &mut || {
        let r = criterion_4(&sweeps);
        Outcome { detail: format!("{} [sweeps {:.1}s]", r.detail, sweep_time.as_secs_f64()), ..r }
    });
    report(5, "metric diagnostics", Duration::from_secs(120), &mut || criterion_5(&sweeps));
    report(6, "topology recovery", Duration::from_secs(300), &mut criterion_6);
    report(7, "robustness to small deformations", Duration::from_secs(30), &mut criterion_7);
    report(8, "velocity pipeline", Duration::from_secs(120), &mut criterion_8);
    report(9, "CLI determinism", Duration::from_secs(300), &mut criterion_9);

    println!("acceptance: {} in {:.1}s", if all_ok { "PASS" } else { "FAIL" }, total.elapsed().as_secs_f64());
    if !all_ok {
        std::process::exit(1);
    }
}
