//! Command-line front end. Output is `key=value` lines.
//!
//! Exit codes: 0 success, 1 domain error or failed check, 2 usage error,
//! 3 time budget exceeded (partial results are still printed).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camd::{format_molecule, parse_molecule, Dataset, DesignSpace};
use crate::enumerator::{brute_optimize, count_feasible_with, for_each_feasible, ConstraintLevel, EnumOptions};
use crate::error::{Error, Result};
use crate::gnn::{random_model, GnnModel};
use crate::graph::{connected_graphs, parse_graph_fixture};
use crate::indexing::{check_s1, check_s3, count_indexings, example_graph, index_graph, IndexConstraints};
use crate::milp::{build, check_assignment, embed_solution, emit_lp, emit_mps, Assignment, BuildOptions, MilpModel, Variant};

pub const THREADS_ENV: &str = "MOLMIP_THREADS";

#[derive(Parser, Debug)]
#[command(name = "molmip", version, about = "Molecular design over trained GNNs with symmetry breaking")]
struct Cli {
    /// Worker threads (falls back to MOLMIP_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct SpaceArgs {
    #[arg(long, default_value = "qm7")]
    dataset: Dataset,
    #[arg(long)]
    n: usize,
}

impl SpaceArgs {
    fn space(&self) -> Result<DesignSpace> {
        self.dataset.space(self.n)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count feasible molecular structures.
    Count {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value = "s3")]
        level: ConstraintLevel,
        /// Also count isomorphism classes.
        #[arg(long)]
        classes: bool,
        /// Write every structure to this file, blank-line separated.
        #[arg(long)]
        emit_structures: Option<PathBuf>,
        /// Time budget in seconds.
        #[arg(long)]
        budget: Option<f64>,
        /// Skip a bound family: c22, c23, c24 or c25 (repeatable).
        #[arg(long = "skip", value_name = "FAMILY")]
        skip: Vec<String>,
    },
    /// Count labelings of a graph under indexing constraints.
    CountIndexings {
        /// Graph fixture; the built-in example graph when omitted.
        #[arg(long)]
        fixture: Option<PathBuf>,
        /// Comma-separated subset of s1, root, s3, or `none`.
        #[arg(long, default_value = "none")]
        constraints: String,
        #[arg(long, default_value_t = 0)]
        root: usize,
    },
    /// Index a graph with the lexicographic procedure.
    Index {
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        root: usize,
        /// Print per-iteration temporary indexes.
        #[arg(long)]
        trace: bool,
    },
    /// Evaluate a model on a molecule.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        molecule: PathBuf,
    },
    /// Minimize a model over all feasible structures by enumeration.
    BruteOpt {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "s3")]
        level: ConstraintLevel,
    },
    /// Write the mixed-integer model as LP (and optionally MPS).
    BuildMilp {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value = "bigm")]
        variant: Variant,
        #[arg(long, default_value = "on", value_parser = parse_switch, action = clap::ArgAction::Set)]
        symmetry: bool,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        mps: Option<PathBuf>,
    },
    /// Check a solution file against a model written by build-milp.
    Verify {
        /// The `.meta` file written next to the LP file.
        #[arg(long)]
        model_file: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Run the built-in golden checks.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn parse_switch(s: &str) -> std::result::Result<bool, String> {
    match s {
        "on" | "true" | "yes" => Ok(true),
        "off" | "false" | "no" => Ok(false),
        other => Err(format!("expected on or off, found `{other}`")),
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BudgetExceeded { .. } => 3,
        _ => 1,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let threads = cli.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|s| s.parse().ok()));
    match dispatch(cli.command, threads, out) {
        Ok(code) => code,
        Err(e) => {
            if let Error::BudgetExceeded { partial } = &e {
                let _ = writeln!(out, "count={partial}\nexact=false");
            }
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn read_graph(fixture: &Option<PathBuf>) -> Result<crate::graph::UndirectedGraph> {
    match fixture {
        Some(p) => parse_graph_fixture(&std::fs::read_to_string(p)?),
        None => Ok(example_graph()),
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn dispatch(cmd: Command, threads: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Count { space, level, classes, emit_structures, budget, skip } => {
            let sp = space.space()?;
            let mut opts = EnumOptions::new(level);
            opts.threads = threads;
            opts.classes = classes;
            if let Some(b) = budget {
                if b <= 0.0 || !b.is_finite() {
                    return Err(Error::domain("budget must be positive"));
                }
                opts.time_budget = Some(Duration::from_secs_f64(b));
            }
            for s in skip {
                match s.to_ascii_lowercase().as_str() {
                    "c22" => opts.bounds.atom_counts = false,
                    "c23" => opts.bounds.double_bonds = false,
                    "c24" => opts.bounds.triple_bonds = false,
                    "c25" => opts.bounds.rings = false,
                    other => return Err(Error::domain(format!("cannot skip `{other}` (expected c22..c25)"))),
                }
            }
            writeln!(out, "dataset={}\nn={}\nlevel={level}", space.dataset, space.n)?;
            if let Some(path) = emit_structures {
                let mut file = std::io::BufWriter::new(std::fs::File::create(&path)?);
                let mut io_err = None;
                let count = for_each_feasible(&sp, &opts, |m| {
                    let r = writeln!(file, "{}", format_molecule(m));
                    match r {
                        Ok(()) => std::ops::ControlFlow::Continue(()),
                        Err(e) => {
                            io_err = Some(e);
                            std::ops::ControlFlow::Break(())
                        }
                    }
                })?;
                if let Some(e) = io_err {
                    return Err(e.into());
                }
                file.flush()?;
                writeln!(out, "count={count}\nexact=true\nstructures={}", path.display())?;
            } else {
                let r = count_feasible_with(&sp, &opts)?;
                writeln!(out, "count={}\nexact=true", r.count)?;
                if let Some(c) = r.classes {
                    writeln!(out, "classes={c}")?;
                }
            }
            Ok(0)
        }
        Command::CountIndexings { fixture, constraints, root } => {
            let g = read_graph(&fixture)?;
            let c = IndexConstraints::parse(&constraints, root)?;
            writeln!(out, "n={}\nconstraints={constraints}\ncount={}", g.n(), count_indexings(&g, c)?)?;
            Ok(0)
        }
        Command::Index { fixture, root, trace } => {
            let g = read_graph(&fixture)?;
            let (idx, tr) = index_graph(&g, root)?;
            writeln!(out, "index_of={}\norder={}", join(idx.as_slice()), join(&idx.order()))?;
            writeln!(out, "s1={}\ns3={}", check_s1(&g, &idx), check_s3(&g, &idx))?;
            if trace {
                for it in &tr.iterations {
                    writeln!(out, "iteration.{}.temp_index={}", it.s, join(&it.temp_index))?;
                    writeln!(out, "iteration.{}.chosen={}", it.s, it.chosen)?;
                }
            }
            Ok(0)
        }
        Command::Eval { model, molecule } => {
            let g = GnnModel::load(&model)?;
            let mol = parse_molecule(&std::fs::read_to_string(&molecule)?)?;
            writeln!(out, "output={}", g.forward(&mol)?)?;
            Ok(0)
        }
        Command::BruteOpt { space, model, level } => {
            let sp = space.space()?;
            let g = GnnModel::load(&model)?;
            let mut opts = EnumOptions::new(level);
            opts.threads = threads;
            let (mol, y) = brute_optimize(&sp, &g, &opts)?;
            writeln!(out, "objective={y}\nmolecule={}", mol.describe(&sp))?;
            write!(out, "{}", format_molecule(&mol))?;
            Ok(0)
        }
        Command::BuildMilp { space, model, variant, symmetry, output, mps } => {
            let sp = space.space()?;
            let g = GnnModel::load(&model)?;
            let m = build(&sp, &g, BuildOptions { variant, symmetry })?;
            std::fs::write(&output, emit_lp(&m))?;
            let mut meta = output.clone().into_os_string();
            meta.push(".meta");
            let meta = PathBuf::from(meta);
            std::fs::write(&meta, m.to_meta_json())?;
            if let Some(p) = &mps {
                std::fs::write(p, emit_mps(&m)?)?;
            }
            writeln!(out, "variables={}\nbinaries={}\nconstraints={}", m.variables().len(), m.num_binaries(), m.constraints().len())?;
            writeln!(out, "lp={}\nmeta={}", output.display(), meta.display())?;
            if let Some(p) = mps {
                writeln!(out, "mps={}", p.display())?;
            }
            Ok(0)
        }
        Command::Verify { model_file, solution } => {
            let m = MilpModel::load_meta(&model_file)?;
            let a = Assignment::parse(&std::fs::read_to_string(&solution)?)?;
            let r = check_assignment(&m, &a)?;
            write!(out, "{r}")?;
            Ok(if r.passed() { 0 } else { 1 })
        }
        Command::Selftest { seed } => selftest(seed, threads, out),
    }
}

struct Report<'a> {
    out: &'a mut dyn Write,
    failed: usize,
    total: usize,
}

impl Report<'_> {
    fn check(&mut self, name: &str, got: impl std::fmt::Display, expected: impl std::fmt::Display) -> Result<()> {
        let (g, e) = (got.to_string(), expected.to_string());
        let ok = g == e;
        self.total += 1;
        self.failed += usize::from(!ok);
        writeln!(self.out, "{name} got={g} expected={e} status={}", if ok { "PASS" } else { "FAIL" })?;
        Ok(())
    }
}

const FEASIBLE_COUNTS: [(Dataset, usize, [u64; 3]); 8] = [
    (Dataset::Qm7, 2, [17, 10, 10]),
    (Dataset::Qm7, 3, [112, 37, 37]),
    (Dataset::Qm7, 4, [3323, 726, 416]),
    (Dataset::Qm7, 5, [67020, 11747, 3003]),
    (Dataset::Qm9, 2, [15, 9, 9]),
    (Dataset::Qm9, 3, [175, 54, 54]),
    (Dataset::Qm9, 4, [4536, 1077, 631]),
    (Dataset::Qm9, 5, [117188, 21441, 5860]),
];

/// Deterministic report: no timings, fixed seeds.
fn selftest(seed: u64, threads: Option<usize>, out: &mut dyn Write) -> Result<i32> {
    let mut rep = Report { out, failed: 0, total: 0 };
    for (ds, n, expected) in FEASIBLE_COUNTS {
        let sp = ds.space(n)?;
        for (level, e) in ConstraintLevel::ALL.into_iter().zip(expected) {
            let mut opts = EnumOptions::new(level);
            opts.threads = threads;
            rep.check(&format!("counts.{ds}.n{n}.{level}"), count_feasible_with(&sp, &opts)?.count, e)?;
        }
    }

    let g = example_graph();
    for (spec, e) in [("none", 720), ("s1", 636), ("root", 120), ("root,s3", 4)] {
        let c = IndexConstraints::parse(spec, 0)?;
        rep.check(&format!("indexings.{}", spec.replace(',', "+")), count_indexings(&g, c)?, e)?;
    }
    let (idx, _) = index_graph(&g, 0)?;
    rep.check("indexing.golden", join(idx.as_slice()), "0,1,4,2,3,5")?;

    let mut bad = 0;
    let mut cases = 0;
    for n in 1..=6 {
        for h in connected_graphs(n)? {
            for root in 0..n {
                let (idx, _) = index_graph(&h, root)?;
                cases += 1;
                bad += usize::from(!(check_s1(&h, &idx) && check_s3(&h, &idx)));
            }
        }
    }
    writeln!(rep.out, "indexing.cases={cases}")?;
    rep.check("indexing.failures", bad, 0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in [2, 3] {
        let sp = DesignSpace::qm7(n)?;
        let model = random_model(&mut rng, sp.num_features(), &[3], &[2]);
        let mut opts = EnumOptions::new(ConstraintLevel::S3);
        opts.threads = threads;
        let (_, best) = brute_optimize(&sp, &model, &opts)?;
        let (_, best_s1) = brute_optimize(&sp, &model, &EnumOptions { level: ConstraintLevel::S1, ..opts.clone() })?;
        rep.check(&format!("optimum.qm7.n{n}.levels_agree"), best == best_s1, true)?;
        for variant in [Variant::Bigm, Variant::Bilinear] {
            let m = build(&sp, &model, BuildOptions { variant, symmetry: true })?;
            let mut failures = 0;
            let mut min_obj = f64::INFINITY;
            for_each_feasible(&sp, &opts, |mol| {
                let ok = embed_solution(&m, &sp, mol, &model)
                    .and_then(|a| check_assignment(&m, &a))
                    .map(|r| {
                        min_obj = min_obj.min(r.objective);
                        r.passed() && (r.objective - model.forward(mol).unwrap_or(f64::NAN)).abs() <= 1e-9
                    })
                    .unwrap_or(false);
                failures += usize::from(!ok);
                std::ops::ControlFlow::Continue(())
            })?;
            rep.check(&format!("embedding.qm7.n{n}.{variant}.failures"), failures, 0)?;
            rep.check(&format!("embedding.qm7.n{n}.{variant}.optimum_matches"), min_obj == best, true)?;
        }
    }

    let (total, failed) = (rep.total, rep.failed);
    writeln!(rep.out, "checks={total}\nfailed={failed}\nstatus={}", if failed == 0 { "PASS" } else { "FAIL" })?;
    Ok(if failed == 0 { 0 } else { 1 })
}
