use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use dcdc::closure::{explore_closure, relevantize};
use dcdc::ear::{find_super_robust, SearchOutcome as EarSearch};
use dcdc::gadget::{build_h, expected_h0_len, TrigraphConstruction};
use dcdc::graph::VertexId;
use dcdc::io::{
    document_dot, ConstructionJson, DartJson, DcdcJson, Document, EarDecompositionJson,
    MixedGraphJson,
};
use dcdc::pipeline::extract_lockstep;
use dcdc::reduce::{apply, enumerate_correct_reductions, extract_dcdc, verify_dcdc};
use dcdc::search::{gadget_joints, planar_ccr, superb_search, SearchConfig, SearchStatus};
use dcdc::toroidal::{toroidal_demo, Matching};

/// Directed cycle double covers of cubic graphs through mixed-graph reductions.
/// Exit code 0 means success or true, 1 false or stuck, 2 an error.
#[derive(Parser)]
#[command(name = "dcdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find a super robust ear decomposition of a 3-edge-connected cubic graph.
    Eardecomp {
        graph: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
    },
    /// Build the trigraph H and its canonical decomposition; prints a construction dump.
    BuildH { graph: PathBuf, ed: PathBuf },
    /// Search for a superb reduction process. With a construction dump as `h`,
    /// a complete process is turned into a verified cover of G.
    Search {
        h: PathBuf,
        ed: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Reduce a planar trigraph along the faces of a rotation system.
    Planar { h: PathBuf, ed: PathBuf, rot: PathBuf },
    /// List every correct reduction of a vertex set of a mixed graph.
    Reduce {
        mixed: PathBuf,
        /// Comma-separated vertex ids.
        #[arg(long, value_delimiter = ',', required = true)]
        u: Vec<u32>,
    },
    /// Explore the closure from a construction dump; one JSON line per member.
    Closure {
        h: PathBuf,
        ed: PathBuf,
        #[arg(long, default_value_t = 100)]
        budget: usize,
        #[arg(long, default_value_t = 3)]
        redecompositions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check that a family of directed cycles is a directed cycle double cover.
    VerifyDcdc { graph: PathBuf, dcdc: PathBuf },
    /// Run the toroidal grid example.
    ToroidalDemo {
        #[arg(long, default_value_t = 4)]
        rows: usize,
        #[arg(long, default_value_t = 4)]
        cols: usize,
        /// Random matching offsets; alternating offsets without a seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 2_000_000)]
        budget: u64,
    },
    /// Write any supported JSON document as Graphviz DOT.
    ExportDot { file: PathBuf },
}

fn read(path: &Path) -> Result<Document> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Document::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print(v: &impl serde::Serialize) -> Result<()> {
    emit(&serde_json::to_string_pretty(v)?)
}

fn verdict(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn construction_of(doc: &Document) -> Result<Option<TrigraphConstruction>> {
    match doc {
        Document::Construction(c) => Ok(Some(c.construction()?)),
        _ => Ok(None),
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Eardecomp { graph, budget } => {
            let (g, _) = read(&graph)?.graph()?;
            match find_super_robust(&g, budget)? {
                EarSearch::Found(ed) => {
                    print(&EarDecompositionJson::from_decomposition(&ed))?;
                    Ok(ExitCode::SUCCESS)
                }
                other => {
                    eprintln!("{other:?}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::BuildH { graph, ed } => {
            let (g, _) = read(&graph)?.graph()?;
            let ed = read(&ed)?.decomposition(&g)?;
            let tc = build_h(&g, &ed)?;
            let dump = ConstructionJson::from_construction(&tc)?;
            if dump.n_g != expected_h0_len(tc.gadgets.len()) {
                eprintln!(
                    "initial cycle has {} vertices, the per-gadget count gives {}",
                    dump.n_g, dump.expected_h0
                );
            }
            print(&dump)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Search {
            h,
            ed,
            budget,
            seed,
        } => {
            let hdoc = read(&h)?;
            let (hg, _) = hdoc.graph()?;
            let ed = read(&ed)?.decomposition(&hg)?;
            let tc = construction_of(&hdoc)?;
            let config = SearchConfig {
                budget,
                seed,
                joints: tc
                    .as_ref()
                    .map(|tc| gadget_joints(tc, &ed))
                    .unwrap_or_default(),
            };
            let out = superb_search(&hg, &ed, &config)?;
            let mut report = json!({ "stats": out.stats });
            let code = match &out.status {
                SearchStatus::Superb { trace, j } => {
                    report["status"] = json!("superb");
                    report["j"] = json!(j);
                    match (&tc, *j == 1) {
                        (Some(tc), true) => {
                            let r = relevantize(tc, &hg, &ed, Some(trace))?;
                            report["relevantize"] = json!(r.steps);
                            let t = r.trace.context("relevantize returned no trace")?;
                            let ex = extract_lockstep(tc, &r.ed, &t)?;
                            report["verdict"] = json!(ex.verdict);
                            report["dcdc"] = json!(DcdcJson::from_family(&ex.g_family));
                            verdict(ex.verdict.ok)
                        }
                        (None, true) => {
                            let mut trace = trace.clone();
                            let last = enumerate_correct_reductions(&trace.last, &ed.h0)?
                                .into_iter()
                                .next()
                                .context("the initial cycle has no correct reduction")?;
                            trace.push(last)?;
                            let fam = extract_dcdc(&trace)?;
                            let v = verify_dcdc(&hg, &fam);
                            report["verdict"] = json!(v);
                            report["dcdc"] = json!(DcdcJson::from_family(&fam));
                            verdict(v.ok)
                        }
                        (_, false) => ExitCode::from(1),
                    }
                }
                SearchStatus::Stuck { j, ear, witness } => {
                    report["status"] = json!("stuck");
                    report["j"] = json!(j);
                    report["ear"] = json!(ear);
                    report["witness_checks"] = json!(witness.check(&hg, &ed)?);
                    report["witness"] = json!(witness);
                    ExitCode::from(1)
                }
                SearchStatus::BudgetExhausted => {
                    report["status"] = json!("budget_exhausted");
                    ExitCode::from(1)
                }
            };
            print(&report)?;
            Ok(code)
        }
        Command::Planar { h, ed, rot } => {
            let (hg, _) = read(&h)?.graph()?;
            let ed = read(&ed)?.decomposition(&hg)?;
            let (_, rot) = read(&rot)?.graph()?;
            let rot = rot.context("rotation file has no rotation")?;
            let trace = planar_ccr(&hg, &ed, &rot)?;
            let fam = extract_dcdc(&trace)?;
            let v = verify_dcdc(&hg, &fam);
            print(&json!({ "verdict": v, "dcdc": DcdcJson::from_family(&fam) }))?;
            Ok(verdict(v.ok))
        }
        Command::Reduce { mixed, u } => {
            let Document::Mixed(mj) = read(&mixed)? else {
                bail!("expected a mixed graph");
            };
            let m = mj.mixed()?;
            let u: Vec<VertexId> = u.into_iter().map(VertexId).collect();
            let choices = enumerate_correct_reductions(&m, &u)?;
            let mut out = Vec::new();
            for c in &choices {
                let a = apply(&m, c)?;
                a.graph.check_degree_discipline()?;
                let cycles: Vec<Vec<DartJson>> = a
                    .cycles
                    .iter()
                    .map(|c| c.iter().map(|&d| DartJson::from_dart(d)).collect())
                    .collect();
                out.push(json!({
                    "paths": c.path_vertices(&m)
                        .iter()
                        .map(|p| p.iter().map(|v| v.0).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                    "cycles": cycles,
                    "result": MixedGraphJson::from_mixed(&a.graph),
                }));
            }
            print(&Value::Array(out))?;
            Ok(verdict(!choices.is_empty()))
        }
        Command::Closure {
            h,
            ed,
            budget,
            redecompositions,
            seed,
        } => {
            let hdoc = read(&h)?;
            let tc = construction_of(&hdoc)?
                .context("closure needs a construction dump from build-h as its first file")?;
            let ed = read(&ed)?.decomposition(&tc.h)?;
            let c = explore_closure(&tc, &tc.h, &ed, budget, redecompositions, seed)?;
            for line in c.log_lines() {
                emit(&line)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyDcdc { graph, dcdc } => {
            let (g, _) = read(&graph)?.graph()?;
            let Document::Dcdc(d) = read(&dcdc)? else {
                bail!("expected a cover with a cycles list");
            };
            let v = verify_dcdc(&g, &d.family(&g)?);
            print(&v)?;
            Ok(verdict(v.ok))
        }
        Command::ToroidalDemo {
            rows,
            cols,
            seed,
            budget,
        } => {
            let matching = seed.map_or(Matching::Alternating, Matching::Seeded);
            let report = toroidal_demo(rows, cols, &matching, budget)?;
            print(&report)?;
            Ok(verdict(report.succeeded()))
        }
        Command::ExportDot { file } => {
            emit(document_dot(&read(&file)?)?.trim_end())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
