//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test -p seedwalk-cli --test acceptance`. The process
//! exits non-zero if any criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seedwalk::walker::DEFAULT_STEP_CAP;
use seedwalk::{
    detect_multi, estimate_affinity, generate, load_edge_list, run_sweep, run_walks, sample_seeds,
    AbsorbingChain, DetectOptions, Graph, LfrParams, SeedSet, SolverMode, SweepCell,
};

const FIGURE: &str =
    "s1 a\na v\nv b\nb s2\nv va\nb ba\ns2 sa\nv vb\nb bb\ns2 sb\nva ba\nba sa\nvb bb\nbb sb\n";

type Check = fn() -> Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {:.1?}, limit {:?}", elapsed, limit)
    })
}

fn figure_example() -> Result<String, String> {
    let started = Instant::now();
    let (g, _) = load_edge_list(FIGURE.as_bytes()).map_err(|e| e.to_string())?;
    let id = |l: &str| g.node_id(l).unwrap();
    let seeds = SeedSet::indicators([(id("s1"), 0), (id("s2"), 1)], 2).unwrap();
    let det = detect_multi(&g, &seeds, &DetectOptions::default()).map_err(|e| e.to_string())?;
    let row = det.affinities.row_of(id("v")).unwrap().to_vec();
    let elapsed = started.elapsed();
    let gap = (row[0] - 1.0 / 3.0).abs().max((row[1] - 2.0 / 3.0).abs());
    ensure(gap <= 1e-9, || format!("beta(v) = {row:?}, gap {gap:e}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "beta(v) = ({:.12}, {:.12}), gap {gap:.1e}, {elapsed:.1?}",
        row[0], row[1]
    ))
}

fn gamblers_ruin() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for k in 1..=100 {
        let edges: Vec<(usize, usize)> = (0..=k).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(k + 2, &edges).unwrap();
        let mut seeds = SeedSet::new(1).unwrap();
        seeds.insert(0, vec![1.0]).unwrap();
        seeds.insert(k + 1, vec![0.0]).unwrap();
        for mode in [SolverMode::Auto, SolverMode::Direct, SolverMode::Iterative] {
            let det = detect_multi(&g, &seeds, &DetectOptions::with_mode(mode))
                .map_err(|e| format!("k = {k}, {mode}: {e}"))?;
            for i in 1..=k {
                let want = 1.0 - i as f64 / (k + 1) as f64;
                worst = worst.max((det.affinities.row_of(i).unwrap()[0] - want).abs());
            }
        }
    }
    ensure(worst <= 1e-8, || format!("largest deviation {worst:e}"))?;
    Ok(format!(
        "k = 1..100, all solver modes, largest deviation {worst:.1e}"
    ))
}

fn connected_graph(n: usize, extra: usize, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn random_seeds(
    n: usize,
    count: usize,
    rows: impl Fn(&mut ChaCha8Rng) -> Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> SeedSet {
    let nodes = rand::seq::index::sample(rng, n, count).into_vec();
    let first = rows(rng);
    let mut seeds = SeedSet::new(first.len()).unwrap();
    for (i, v) in nodes.into_iter().enumerate() {
        let row = if i == 0 { first.clone() } else { rows(rng) };
        seeds.insert(v, row).unwrap();
    }
    seeds
}

fn oracle_equivalence() -> Result<String, String> {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut cg_gap, mut walk_gap): (f64, f64) = (0.0, 0.0);
    let mut sizes = (usize::MAX, 0);
    for graph in 0..50 {
        let n = rng.random_range(20..=200);
        sizes = (sizes.0.min(n), sizes.1.max(n));
        let g = connected_graph(n, rng.random_range(n / 2..=3 * n), &mut rng);
        let count = rng.random_range((n / 20).max(2)..=n / 4);
        let l = rng.random_range(1..=4);
        let seeds = random_seeds(
            n,
            count,
            |r| (0..l).map(|_| r.random_range(0.0..=1.0)).collect(),
            &mut rng,
        );

        let direct = detect_multi(&g, &seeds, &DetectOptions::with_mode(SolverMode::Direct))
            .map_err(|e| format!("graph {graph}: {e}"))?
            .affinities;
        let cg = detect_multi(&g, &seeds, &DetectOptions::with_mode(SolverMode::Iterative))
            .map_err(|e| format!("graph {graph}: {e}"))?
            .affinities;
        for i in 0..direct.len() {
            for (a, b) in direct.row(i).iter().zip(cg.row(i)) {
                cg_gap = cg_gap.max((a - b).abs());
            }
        }

        let chain = AbsorbingChain::new(&g, &seeds.nodes()).unwrap();
        let picks = rand::seq::index::sample(&mut rng, direct.len(), 10.min(direct.len()));
        for i in picks {
            let v = direct.nodes()[i];
            let stats = run_walks(
                &chain,
                v,
                100_000,
                graph as u64 * 1000 + i as u64,
                DEFAULT_STEP_CAP,
            )
            .map_err(|e| e.to_string())?;
            for c in 0..l {
                let est = estimate_affinity(&stats, &seeds, c);
                walk_gap = walk_gap
                    .max((est - direct.row(i)[c]).abs())
                    .max((est - cg.row(i)[c]).abs());
            }
        }
    }
    let elapsed = started.elapsed();
    ensure(cg_gap <= 1e-6, || format!("CG vs direct {cg_gap:e}"))?;
    ensure(walk_gap <= 0.01, || format!("walker vs solvers {walk_gap}"))?;
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!(
        "50 graphs, n in [{}, {}]: CG vs direct {cg_gap:.1e}, walker vs solvers {walk_gap:.4}, {elapsed:.1?}",
        sizes.0, sizes.1
    ))
}

/// Random row with entries in `[0, 1]` summing to `c` (requires `c <= l`).
fn row_summing_to(c: f64, l: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let mut row: Vec<f64> = (0..l).map(|_| rng.random_range(0.0..1.0)).collect();
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x *= c / total);
        if row.iter().all(|&x| x <= 1.0) {
            return row;
        }
    }
}

fn conservation() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for graph in 0..20 {
        let n = rng.random_range(20..=300);
        let g = connected_graph(n, 2 * n, &mut rng);
        let count = rng.random_range(2..=n / 3);
        for c in [0.5, 1.0, 2.0] {
            let seeds = random_seeds(n, count, |r| row_summing_to(c, 4, r), &mut rng);
            let det = detect_multi(&g, &seeds, &DetectOptions::default())
                .map_err(|e| format!("graph {graph}: {e}"))?;
            for (_, row) in det.affinities.rows() {
                worst = worst.max((row.iter().sum::<f64>() - c).abs());
            }
        }
    }
    ensure(worst <= 1e-6, || {
        format!("largest row-sum deviation {worst:e}")
    })?;
    Ok(format!(
        "20 graphs x c in {{0.5, 1, 2}}, largest row-sum deviation {worst:.1e}"
    ))
}

fn benchmark_shape() -> Result<String, String> {
    let started = Instant::now();
    let cells = [
        (0.2, 0.0),
        (0.2, 0.3),
        (0.05, 0.3),
        (0.1, 0.1),
        (0.1, 0.4),
        (0.1, 0.8),
    ];
    let grid: Vec<SweepCell> = cells
        .iter()
        .map(|&(sigma, mu)| SweepCell {
            params: LfrParams::new(500, 20.0, 2.0, 2.0, mu),
            sigma,
        })
        .collect();
    let out =
        run_sweep(&grid, 100, 20_240_601, &DetectOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(out.failures.is_empty(), || {
        format!(
            "{} trial(s) failed: {}",
            out.failures.len(),
            out.failures[0].reason
        )
    })?;
    let q: Vec<f64> = out.cells.iter().map(|c| c.q_mean).collect();
    let summary = format!(
        "Q(0.2, 0) = {:.3}, Q(0.2, 0.3) = {:.3}, Q(0.05, 0.3) = {:.3}, \
         Q(0.1; 0.1, 0.4, 0.8) = {:.3} > {:.3} > {:.3}, {elapsed:.1?}",
        q[0], q[1], q[2], q[3], q[4], q[5]
    );
    ensure(q[0] >= 0.99, || format!("sigma 0.2, mu 0: {summary}"))?;
    ensure((0.82..=1.0).contains(&q[1]), || {
        format!("sigma 0.2, mu 0.3: {summary}")
    })?;
    ensure(q[2] <= 0.60, || format!("sigma 0.05, mu 0.3: {summary}"))?;
    ensure(q[3] > q[4] && q[4] > q[5], || {
        format!("not decreasing in mu: {summary}")
    })?;
    within(elapsed, Duration::from_secs(30 * 60))?;
    Ok(summary)
}

fn scale() -> Result<String, String> {
    // 200 communities of 50 nodes; mean degree 30 gives ~1.5e5 edges. The
    // degree cap keeps the largest internal degree below the community size.
    let mut params = LfrParams::new(10_000, 30.0, 2.0, 2.0, 0.3).with_seed(6);
    params.k_max = Some(70);
    params.s_min = Some(50);
    params.s_max = Some(50);
    let planted = generate(&params).map_err(|e| e.to_string())?;
    let m = planted.graph.edge_count();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let sample = sample_seeds(&planted, 0.1, &mut rng).map_err(|e| e.to_string())?;

    let started = Instant::now();
    let det = detect_multi(&planted.graph, &sample.seeds, &DetectOptions::default())
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let iterations: usize = det.reports.iter().map(|r| r.iterations).sum();

    ensure(planted.communities() == 200, || {
        format!("{} communities", planted.communities())
    })?;
    ensure((140_000..=160_000).contains(&m), || format!("{m} edges"))?;
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "N = 10000, m = {m}, 200 communities, {} seeds: detect {elapsed:.1?} ({iterations} CG iterations)",
        sample.seeds.len()
    ))
}

fn seedwalk(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_seedwalk"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "seedwalk {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out.stdout)
}

fn same_files(a: &Path, b: &Path, names: &[&str]) -> Result<(), String> {
    for name in names {
        let x = fs::read(a.join(name)).map_err(|e| format!("{name}: {e}"))?;
        let y = fs::read(b.join(name)).map_err(|e| format!("{name}: {e}"))?;
        ensure(x == y, || format!("{name} differs between runs"))?;
    }
    Ok(())
}

fn cli_determinism() -> Result<String, String> {
    let tmp = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let root = tmp.path();
    let p = |s: &str| root.join(s).to_str().unwrap().to_string();

    for run in ["g1", "g2"] {
        seedwalk(&[
            "generate",
            "--n",
            "500",
            "--avg-k",
            "20",
            "--mu",
            "0.3",
            "--rng-seed",
            "9",
            "--out",
            &p(run),
        ])?;
    }
    same_files(
        &root.join("g1"),
        &root.join("g2"),
        &["graph.txt", "truth.txt"],
    )?;

    let graph = p("g1/graph.txt");
    let truth = p("g1/truth.txt");
    let (g, _) = load_edge_list(fs::read(&graph).unwrap().as_slice()).unwrap();
    let seeds: String = (0..g.node_count())
        .step_by(10)
        .map(|v| format!("{} {} 1\n", g.label(v), v % 3))
        .collect();
    fs::write(root.join("seeds.txt"), seeds).unwrap();
    let seeds = p("seeds.txt");

    for run in ["d1", "d2"] {
        seedwalk(&[
            "detect",
            "--graph",
            &graph,
            "--seeds",
            &seeds,
            "--out",
            &p(run),
        ])?;
    }
    same_files(
        &root.join("d1"),
        &root.join("d2"),
        &["affinities.csv", "crisp.csv"],
    )?;

    let node = g.label(1).to_string();
    let verify = |_: ()| {
        seedwalk(&[
            "verify",
            "--graph",
            &graph,
            "--seeds",
            &seeds,
            "--node",
            &node,
            "--walks",
            "20000",
            "--rng-seed",
            "3",
        ])
    };
    ensure(verify(())? == verify(())?, || {
        "verify output differs".into()
    })?;

    for run in ["s1", "s2"] {
        seedwalk(&[
            "sweep",
            "--n",
            "300",
            "--avg-k",
            "15",
            "--mu",
            "0.1,0.4",
            "--sigma",
            "0.1",
            "--trials",
            "5",
            "--rng-seed",
            "4",
            "--out",
            &p(run),
        ])?;
    }
    same_files(
        &root.join("s1"),
        &root.join("s2"),
        &["results.csv", "trials.csv"],
    )?;

    for run in ["h1", "h2"] {
        seedwalk(&[
            "histogram",
            "--graph",
            &graph,
            "--truth",
            &truth,
            "--sigma",
            "0.1",
            "--runs",
            "30",
            "--rng-seed",
            "5",
            "--out",
            &p(run),
        ])?;
    }
    same_files(
        &root.join("h1"),
        &root.join("h2"),
        &["histogram.csv", "qualities.csv"],
    )?;

    Ok("generate, detect, verify, sweep and histogram outputs identical across two runs".into())
}

fn main() {
    let criteria: [(&str, Check); 7] = [
        ("1 figure example", figure_example),
        ("2 gambler's ruin profile", gamblers_ruin),
        ("3 oracle equivalence", oracle_equivalence),
        ("4 conservation", conservation),
        ("5 benchmark shape", benchmark_shape),
        ("6 scale", scale),
        ("7 CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS [{name}] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{name}] {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", 7 - failed, 7);
    if failed > 0 {
        std::process::exit(1);
    }
}
