use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use seedwalk::eval::seed_resampling;
use seedwalk::formats::{
    format_sig, read_seeds, read_truth, write_affinity_csv, write_crisp_csv, write_histogram_csv,
    write_results_csv, write_truth,
};
use seedwalk::walker::run_walks;
use seedwalk::{
    crisp_membership, detect_multi, estimate_affinity, generate, histogram, load_edge_list,
    run_sweep, AbsorbingChain, DetectOptions, Error, Graph, PlantedGraph, SeedSet, SweepCell,
};

use crate::cli::{DetectArgs, GenerateArgs, HistogramArgs, SolverArgs, SweepArgs, VerifyArgs};
use crate::manifest::RunManifest;

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    Usage(String),
    Io(PathBuf, std::io::Error),
    Gap(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Core(Error::Unreachable { .. }) => 2,
            Failure::Core(Error::NotConverged { .. }) => 3,
            Failure::Core(Error::Infeasible(_)) => 4,
            Failure::Core(_) | Failure::Io(..) => 1,
            Failure::Gap(_) => 5,
            Failure::Usage(_) => 64,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(msg) | Failure::Gap(msg) => f.write_str(msg),
            Failure::Io(path, e) => write!(f, "{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Io(path.to_path_buf(), e))
}

/// Errors raised while reading a file are reported against that file.
fn in_file<T>(path: &Path, r: seedwalk::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| match e {
        Error::Io(io) => Failure::Io(path.to_path_buf(), io),
        Error::Parse { line, reason } => Failure::Core(Error::Parse {
            line,
            reason: format!("{}: {reason}", path.display()),
        }),
        other => Failure::Core(other),
    })
}

fn load_graph(path: &Path) -> Result<Graph, Failure> {
    let (graph, report) = in_file(path, load_edge_list(open(path)?))?;
    if report.duplicate_edges > 0 {
        eprintln!(
            "note: {} duplicate edge line(s) in {} merged",
            report.duplicate_edges,
            path.display()
        );
    }
    Ok(graph)
}

fn load_seeds(path: &Path, graph: &Graph) -> Result<SeedSet, Failure> {
    in_file(path, read_seeds(open(path)?, graph))
}

fn create_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(dir.to_path_buf(), e))
}

/// Writes one output file through `fill` and records it.
fn emit<F>(dir: &Path, name: &str, outputs: &mut Vec<PathBuf>, fill: F) -> Outcome
where
    F: FnOnce(&mut BufWriter<File>) -> seedwalk::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| Failure::Io(path.clone(), e))?;
    let mut w = BufWriter::new(file);
    in_file(&path, fill(&mut w))?;
    w.flush().map_err(|e| Failure::Io(path.clone(), e))?;
    outputs.push(path);
    Ok(())
}

fn write_manifest<T: serde::Serialize>(m: &RunManifest<'_, T>, dir: &Path) -> Outcome {
    m.write(dir)
        .map_err(|e| Failure::Io(dir.join("manifest.json"), e))
}

fn options(args: &SolverArgs) -> Result<DetectOptions, Failure> {
    if args.tol.is_nan() || args.tol <= 0.0 {
        return Err(usage(format!("--tol must be positive, got {}", args.tol)));
    }
    Ok(DetectOptions {
        mode: args.solver,
        tolerance: args.tol,
        max_iter: args.max_iter,
        ..DetectOptions::default()
    })
}

fn check_sigma(sigma: f64) -> Outcome {
    if sigma > 0.0 && sigma <= 1.0 {
        Ok(())
    } else {
        Err(usage(format!(
            "--sigma values must lie in (0, 1], got {sigma}"
        )))
    }
}

fn report_unreachable(graph: &Graph, e: Error) -> Failure {
    if let Error::Unreachable { nodes } = &e {
        eprintln!("nodes that cannot reach any seed:");
        for &v in nodes {
            eprintln!("  {}", graph.label(v));
        }
    }
    Failure::Core(e)
}

pub fn generate_cmd(args: &GenerateArgs, jobs: Option<usize>) -> Outcome {
    let params = args.model.params(args.mu).with_seed(args.rng_seed);
    let planted = generate(&params)?;
    create_dir(&args.out)?;

    let mut manifest = RunManifest::new("generate", args, jobs);
    manifest.rng_seed = Some(args.rng_seed);
    emit(&args.out, "graph.txt", &mut manifest.outputs, |w| {
        Ok(planted.graph.write_edge_list(w)?)
    })?;
    emit(&args.out, "truth.txt", &mut manifest.outputs, |w| {
        write_truth(w, &planted.graph, &planted.membership)
    })?;
    write_manifest(&manifest, &args.out)?;

    let r = &planted.report;
    eprintln!(
        "{} nodes, {} edges, {} communities, realized mixing {:.4} \
         ({} attempt(s), {} edge(s) and {} stub(s) dropped)",
        planted.graph.node_count(),
        planted.graph.edge_count(),
        planted.communities(),
        planted.mixing_fraction(),
        r.attempts,
        r.dropped_edges,
        r.dropped_stubs
    );
    Ok(())
}

pub fn detect_cmd(args: &DetectArgs, jobs: Option<usize>) -> Outcome {
    let opts = options(&args.solver)?;
    let graph = load_graph(&args.graph)?;
    let seeds = load_seeds(&args.seeds, &graph)?;
    let detection =
        detect_multi(&graph, &seeds, &opts).map_err(|e| report_unreachable(&graph, e))?;
    let crisp = crisp_membership(graph.node_count(), &detection.affinities, &seeds);

    create_dir(&args.out)?;
    let mut manifest = RunManifest::new("detect", args, jobs);
    manifest.inputs = vec![args.graph.clone(), args.seeds.clone()];
    emit(&args.out, "affinities.csv", &mut manifest.outputs, |w| {
        write_affinity_csv(w, &graph, &detection.affinities, &seeds)
    })?;
    emit(&args.out, "crisp.csv", &mut manifest.outputs, |w| {
        write_crisp_csv(w, &graph, &crisp)
    })?;
    write_manifest(&manifest, &args.out)?;

    let iterations: usize = detection.reports.iter().map(|r| r.iterations).sum();
    eprintln!(
        "{} nodes, {} seeds, {} communities; {} CG iteration(s)",
        graph.node_count(),
        seeds.len(),
        seeds.communities(),
        iterations
    );
    Ok(())
}

pub fn verify_cmd(args: &VerifyArgs) -> Outcome {
    if args.walks == 0 {
        return Err(usage("--walks must be at least 1"));
    }
    let opts = options(&args.solver)?;
    let graph = load_graph(&args.graph)?;
    let seeds = load_seeds(&args.seeds, &graph)?;
    let v = graph
        .node_id(&args.node)
        .ok_or_else(|| usage(format!("node {:?} is not in the graph", args.node)))?;
    if seeds.contains(v) {
        return Err(usage(format!(
            "node {:?} is a seed; its affinities are given, not computed",
            args.node
        )));
    }

    let detection =
        detect_multi(&graph, &seeds, &opts).map_err(|e| report_unreachable(&graph, e))?;
    let solved = detection
        .affinities
        .row_of(v)
        .expect("non-seed node has a row");
    let chain = AbsorbingChain::new(&graph, &seeds.nodes())?;
    let stats = run_walks(&chain, v, args.walks, args.rng_seed, args.step_cap)?;

    let bound = 4.0 * (0.25 / args.walks as f64).sqrt() + 1e-6;
    let mut table = String::from("community,solver,walker,gap\n");
    let mut worst: f64 = 0.0;
    for (c, &x) in solved.iter().enumerate() {
        let est = estimate_affinity(&stats, &seeds, c);
        let gap = (x - est).abs();
        worst = worst.max(gap);
        let _ = writeln!(
            table,
            "{c},{},{},{}",
            format_sig(x),
            format_sig(est),
            format_sig(gap)
        );
    }
    print!("{table}");
    eprintln!(
        "{} walks from {:?}: largest gap {} (allowed {})",
        args.walks,
        args.node,
        format_sig(worst),
        format_sig(bound)
    );
    if worst > bound {
        return Err(Failure::Gap(format!(
            "walker disagrees with solver by {} > {}",
            format_sig(worst),
            format_sig(bound)
        )));
    }
    Ok(())
}

pub fn sweep_cmd(args: &SweepArgs, jobs: Option<usize>) -> Outcome {
    if args.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    for &s in &args.sigma {
        check_sigma(s)?;
    }
    let opts = options(&args.solver)?;
    let grid: Vec<SweepCell> = args
        .mu
        .iter()
        .flat_map(|&mu| {
            args.sigma.iter().map(move |&sigma| SweepCell {
                params: args.model.params(mu),
                sigma,
            })
        })
        .collect();
    let outcome = run_sweep(&grid, args.trials, args.rng_seed, &opts)?;

    create_dir(&args.out)?;
    let mut manifest = RunManifest::new("sweep", args, jobs);
    manifest.rng_seed = Some(args.rng_seed);
    emit(&args.out, "results.csv", &mut manifest.outputs, |w| {
        write_results_csv(w, &outcome.cells, args.timing)
    })?;
    emit(&args.out, "trials.csv", &mut manifest.outputs, |w| {
        writeln!(w, "mu,sigma,trial,rng_seed,q,unseeded_communities")?;
        for t in &outcome.trials {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                format_sig(t.params.mu),
                format_sig(t.sigma),
                t.trial,
                t.rng_seed,
                format_sig(t.q),
                t.unseeded_communities
            )?;
        }
        Ok(())
    })?;
    if !outcome.failures.is_empty() {
        emit(&args.out, "failures.csv", &mut manifest.outputs, |w| {
            writeln!(w, "mu,sigma,trial,rng_seed,reason")?;
            for f in &outcome.failures {
                let cell = &grid[f.cell];
                writeln!(
                    w,
                    "{},{},{},{},\"{}\"",
                    format_sig(cell.params.mu),
                    format_sig(cell.sigma),
                    f.trial,
                    f.rng_seed,
                    f.reason.replace('"', "\"\"")
                )?;
            }
            Ok(())
        })?;
    }
    write_manifest(&manifest, &args.out)?;

    for c in &outcome.cells {
        eprintln!(
            "mu {} sigma {}: Q = {} ± {} over {} trial(s){}",
            format_sig(c.cell.params.mu),
            format_sig(c.cell.sigma),
            format_sig(c.q_mean),
            format_sig(c.q_std),
            c.completed,
            if c.failed > 0 {
                format!(", {} failed", c.failed)
            } else {
                String::new()
            }
        );
    }
    if let Some(f) = outcome.failures.first() {
        return Err(Failure::Core(Error::Infeasible(format!(
            "{} trial(s) failed, first: {}",
            outcome.failures.len(),
            f.reason
        ))));
    }
    Ok(())
}

pub fn histogram_cmd(args: &HistogramArgs, jobs: Option<usize>) -> Outcome {
    if args.runs == 0 {
        return Err(usage("--runs must be at least 1"));
    }
    if args.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    check_sigma(args.sigma)?;
    let opts = options(&args.solver)?;
    let graph = load_graph(&args.graph)?;
    let truth = in_file(&args.truth, read_truth(open(&args.truth)?, &graph))?;
    let planted = PlantedGraph::from_parts(graph, truth)?;
    let qs = seed_resampling(&planted, args.sigma, args.runs, args.rng_seed, &opts)?;
    let bins = histogram(&qs, args.bins)?;

    create_dir(&args.out)?;
    let mut manifest = RunManifest::new("histogram", args, jobs);
    manifest.rng_seed = Some(args.rng_seed);
    manifest.inputs = vec![args.graph.clone(), args.truth.clone()];
    emit(&args.out, "histogram.csv", &mut manifest.outputs, |w| {
        write_histogram_csv(w, &bins)
    })?;
    emit(&args.out, "qualities.csv", &mut manifest.outputs, |w| {
        writeln!(w, "run,q")?;
        for (r, q) in qs.iter().enumerate() {
            writeln!(w, "{r},{}", format_sig(*q))?;
        }
        Ok(())
    })?;
    write_manifest(&manifest, &args.out)?;

    let mean = qs.iter().sum::<f64>() / qs.len() as f64;
    eprintln!("{} runs, mean Q {}", qs.len(), format_sig(mean));
    Ok(())
}
