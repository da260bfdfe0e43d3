//! `dirtyfcm`: diagnostics, flaw injection, classification, solves and
//! studies on triangle-facet models.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dirtyfcm_core::flaws::{apply_script, FlawScript};
use dirtyfcm_core::mesh_io::{default_weld_tol, index_mesh, load_stl_file, save_stl_file, topology_report, StlFormat, TriangleSoup};
use dirtyfcm_core::pmc::{classification_csv, PmcEngine, Policy};
use dirtyfcm_core::post::export_vtk;
use dirtyfcm_core::problem::{Model, Problem};
use dirtyfcm_core::spacetree::{auto_depth, flood_fill_default, SpaceTree};
use dirtyfcm_core::studies::{cube_gap_study, plate_study, CubeStudyConfig, PlateStudyConfig};
use dirtyfcm_core::Point;

#[derive(Parser)]
#[command(name = "dirtyfcm", version, about = "Finite cell analysis on flawed STL geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Topology report of an STL file as JSON.
    Inspect {
        stl: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Apply a flaw script; writes dirty.stl and ledger.json.
    Inject {
        stl: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[command(flatten)]
        out: OutArg,
    },
    /// Classify points (CSV x,y,z) against an STL model.
    Pmc {
        stl: PathBuf,
        #[arg(long)]
        points: PathBuf,
        #[command(flatten)]
        policy: PolicyArg,
        /// Fixed tree depth; chosen automatically if absent.
        #[arg(long)]
        depth: Option<u32>,
        /// Largest depth tried by the automatic choice.
        #[arg(long, default_value_t = 7)]
        depth_cap: u32,
        /// Tree box margin relative to the model's largest extent.
        #[arg(long, default_value_t = 0.3)]
        padding: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Solve a problem file; writes result.json and solution.vtk.
    Solve {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        policy: PolicyArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Solve a problem file under all three policies; writes bracket.json.
    Bracket {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        out: OutArg,
    },
    /// Gap-width sweep on the clamped cube; writes cube_gap.csv.
    StudyCube {
        #[command(flatten)]
        study: StudyArgs,
    },
    /// p-sweep and bracketing on the plate with a hole; writes
    /// plate_energy.csv and plate_summary.csv.
    StudyPlate {
        #[command(flatten)]
        study: StudyArgs,
    },
}

#[derive(Args)]
struct OutArg {
    /// Output directory; results go to stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArg {
    /// Problem JSON; geometry paths are relative to its directory.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct PolicyArg {
    #[arg(long, value_enum)]
    policy: Option<PolicyName>,
}

#[derive(Args)]
struct StudyArgs {
    /// Study settings as JSON; unset fields take the reduced defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Desk-scale settings (the default).
    #[arg(long, conflicts_with = "full")]
    reduced: bool,
    /// Full-scale settings; fields from --config still apply on top.
    #[arg(long)]
    full: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyName {
    Majority,
    BracketIn,
    BracketOut,
}

impl PolicyArg {
    fn resolve(&self, default: Policy) -> Policy {
        match self.policy {
            None => default,
            Some(PolicyName::Majority) => match default {
                p @ Policy::Majority { .. } => p,
                _ => Policy::default(),
            },
            Some(PolicyName::BracketIn) => Policy::BracketInside,
            Some(PolicyName::BracketOut) => Policy::BracketOutside,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let chain: Vec<String> = e.chain().map(ToString::to_string).collect();
            eprintln!("{}", serde_json::json!({ "error": chain[0], "causes": &chain[1..] }));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Inspect { stl, out } => {
            let soup = load(&stl)?;
            let report = topology_report(&index_mesh(&soup, default_weld_tol(&soup)));
            emit(&out, "report.json", &json(&report)?)
        }
        Command::Inject { stl, script, out } => {
            let soup = load(&stl)?;
            let script = read_script(&script)?;
            let (dirty, ledger) = apply_script(&index_mesh(&soup, default_weld_tol(&soup)), &script)?;
            match &out.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    save_stl_file(&dirty, StlFormat::Binary, dir.join("dirty.stl"))?;
                    write(&dir.join("ledger.json"), &json(&ledger)?)
                }
                None => {
                    println!("{}", json(&ledger)?);
                    Ok(())
                }
            }
        }
        Command::Pmc {
            stl,
            points,
            policy,
            depth,
            depth_cap,
            padding,
            out,
        } => {
            let soup = load(&stl)?;
            let pts = read_points(&points)?;
            let bounds = soup.tight_bounds().context("model has no facets")?;
            let domain = bounds.inflated(padding.max(1e-6) * bounds.max_edge());
            let filled = match depth {
                Some(d) => flood_fill_default(SpaceTree::build(&soup, domain, d)?)?,
                None => auto_depth(&soup, domain, depth_cap)?.1,
            };
            let engine = PmcEngine::new(filled, &soup);
            let records = engine.vote_batch(&pts);
            emit(&out, "labels.csv", &classification_csv(&pts, &records, policy.resolve(Policy::default())))
        }
        Command::Solve { config, policy, out } => {
            let (problem, soup) = load_problem(&config.config)?;
            let policy = policy.resolve(problem.policy);
            let model = Model::new(problem, &soup)?;
            let result = model.run(policy)?;
            let summary = SolveSummary {
                result: &result,
                model: model.report(),
            };
            if let Some(dir) = &out.out {
                fs::create_dir_all(dir)?;
                export_vtk(&model.grid, &result.u, &model.problem.material, &model.engine, model.problem.q, policy, dir.join("solution.vtk"))?;
            }
            emit(&out, "result.json", &json(&summary)?)
        }
        Command::Bracket { config, out } => {
            let (problem, soup) = load_problem(&config.config)?;
            let model = Model::new(problem, &soup)?;
            let bracket = model.bracket()?;
            emit(
                &out,
                "bracket.json",
                &json(&BracketSummary {
                    bracket: &bracket,
                    model: model.report(),
                })?,
            )
        }
        Command::StudyCube { study } => {
            let base = if study.full { CubeStudyConfig::full() } else { CubeStudyConfig::reduced() };
            let config: CubeStudyConfig = study_config(&study, base)?;
            let s = cube_gap_study(&config)?;
            fs::create_dir_all(&study.out)?;
            write(&study.out.join("cube_gap.csv"), &s.csv())?;
            write(&study.out.join("cube_gap.json"), &json(&s)?)?;
            print!("{}", s.csv());
            Ok(())
        }
        Command::StudyPlate { study } => {
            let base = if study.full { PlateStudyConfig::full() } else { PlateStudyConfig::reduced() };
            let config: PlateStudyConfig = study_config(&study, base)?;
            let s = plate_study(&config)?;
            fs::create_dir_all(&study.out)?;
            write(&study.out.join("plate_energy.csv"), &s.energy_csv())?;
            write(&study.out.join("plate_summary.csv"), &s.csv())?;
            write(&study.out.join("plate.json"), &json(&s)?)?;
            print!("{}", s.csv());
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    result: &'a dirtyfcm_core::problem::RunResult,
    model: dirtyfcm_core::problem::ModelReport,
}

#[derive(Serialize)]
struct BracketSummary<'a> {
    bracket: &'a dirtyfcm_core::problem::BracketResult,
    model: dirtyfcm_core::problem::ModelReport,
}

fn load(path: &Path) -> Result<TriangleSoup> {
    load_stl_file(path).with_context(|| format!("reading {}", path.display()))
}

fn read_script(path: &Path) -> Result<FlawScript> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FlawScript::from_json(&text)?)
}

fn load_problem(path: &Path) -> Result<(Problem, TriangleSoup)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let problem = Problem::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let Some(geometry) = &problem.geometry else {
        bail!("{} has no geometry.stl entry", path.display());
    };
    let base = path.parent().unwrap_or(Path::new("."));
    let soup = load(&base.join(&geometry.stl))?;
    let soup = match &geometry.script {
        Some(script) => apply_script(&index_mesh(&soup, default_weld_tol(&soup)), &read_script(&base.join(script))?)?.0,
        None => soup,
    };
    Ok((problem, soup))
}

/// Overlays the JSON object in `--config` on `base`.
fn study_config<T: Serialize + serde::de::DeserializeOwned>(study: &StudyArgs, base: T) -> Result<T> {
    let Some(path) = &study.config else {
        return Ok(base);
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let overlay: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let mut merged = serde_json::to_value(base)?;
    match (merged.as_object_mut(), overlay) {
        (Some(m), serde_json::Value::Object(o)) => m.extend(o),
        _ => bail!("{} must hold a JSON object", path.display()),
    }
    Ok(serde_json::from_value(merged).with_context(|| format!("parsing {}", path.display()))?)
}

/// Points from CSV lines `x,y,z`; a non-numeric first line is a header.
fn read_points(path: &Path) -> Result<Vec<Point>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let vals: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        match vals {
            Ok(v) if v.len() >= 3 => out.push(Point::new(v[0], v[1], v[2])),
            Err(_) if i == 0 => continue,
            _ => bail!("{}:{}: expected x,y,z", path.display(), i + 1),
        }
    }
    Ok(out)
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit(out: &OutArg, name: &str, text: &str) -> Result<()> {
    match &out.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            write(&dir.join(name), text)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

