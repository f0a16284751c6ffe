//! Command-line front end: mesh generation, morphing, subspace angles, pROM
//! construction and prediction, and the experiment runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use pmorph::harness::{self, Experiment, FrequencyGrid};
use pmorph::mesh::{generate_structured_beam, generate_unstructured_hole, read_mesh, write_mesh, GeometryCase, GeometryParams};
use pmorph::mor::RomSample;
use pmorph::morph::{morph, MorphMethod, MorphSpec};
use pmorph::pmor::{principal_angles, PromModel};
use serde_json::json;

#[derive(Parser)]
#[command(name = "pmorph", version, about = "Parametric reduced-order models over morphed finite-element meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Case {
    Beam,
    Circular,
    Elliptic,
}

impl From<Case> for GeometryCase {
    fn from(c: Case) -> Self {
        match c {
            Case::Beam => GeometryCase::BeamPlate,
            Case::Circular => GeometryCase::CircularHole,
            Case::Elliptic => GeometryCase::EllipticHole,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MorphKind {
    Saeh,
    Rbf,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a TRI6 mesh and write it as JSON.
    MeshGen {
        #[arg(long, value_enum)]
        case: Case,
        /// Comma-separated geometry parameters in metres.
        #[arg(long)]
        params: String,
        /// Element size in metres.
        #[arg(long)]
        size: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Morph a mesh with prescribed boundary displacements; prints the quality report.
    Morph {
        #[arg(long = "ref")]
        reference: PathBuf,
        /// Morph specification JSON.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum)]
        method: MorphKind,
        /// SAEH increments, or the RBF kernel order.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the sampled ROM of an experiment at one parameter point.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        params: String,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Principal angles in degrees between the bases of two ROM files.
    Angles { a: PathBuf, b: PathBuf },
    /// Run adaptive sampling for one morph method and write the pROM.
    BuildProm {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        method: MorphKind,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict the reduced FRF at a parameter point; writes freq,re,im CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        params: String,
        #[arg(long, default_value_t = 1.0)]
        fmin: f64,
        #[arg(long, default_value_t = 5000.0)]
        fmax: f64,
        #[arg(long, default_value_t = 5000)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment and write results.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of saeh,rbf,zero-pad.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Exit with a nonzero status if any configured threshold is breached.
        #[arg(long)]
        check: bool,
    },
    /// Time RBF morphing, SAEH morphing and basis interpolation.
    Timing {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scale: Option<f64>,
    },
}

fn parse_params(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("invalid parameter `{t}`")))
        .collect()
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn load_experiment(path: &Path, scale: Option<f64>) -> Result<Experiment> {
    let mut exp = Experiment::load(path)?;
    if let Some(s) = scale {
        exp.scale = s;
    }
    exp.validate()?;
    Ok(exp)
}

fn morph_method(kind: MorphKind, steps: Option<usize>) -> MorphMethod {
    match kind {
        MorphKind::Saeh => MorphMethod::Saeh {
            steps: steps.unwrap_or(10),
        },
        MorphKind::Rbf => MorphMethod::Rbf {
            order: steps.unwrap_or(1) as u32,
        },
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::MeshGen {
            case,
            params,
            size,
            seed,
            out,
        } => {
            let params = GeometryParams::new(case.into(), parse_params(&params)?)?;
            let mesh = match params.case {
                GeometryCase::BeamPlate => generate_structured_beam(&params, size)?,
                _ => generate_unstructured_hole(&params, size, seed)?,
            };
            write_mesh(&mesh, &out)?;
            println!("{}", json!({ "nodes": mesh.n_nodes(), "elements": mesh.elements.len(), "dofs": mesh.n_dofs() }));
        }
        Command::Morph {
            reference,
            spec,
            method,
            steps,
            out,
        } => {
            let mesh = read_mesh(&reference)?;
            let spec: MorphSpec = read_json(&spec)?;
            let field = morph(&mesh, &spec, morph_method(method, steps))?;
            write_mesh(&field.mesh, &out)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "method": field.method,
                    "residual": field.residual,
                    "quality": field.quality,
                    "rbf_system_sizes": field.rbf_system_sizes,
                }))?
            );
        }
        Command::Sample {
            config,
            params,
            scale,
            out,
        } => {
            let exp = load_experiment(&config, scale)?;
            let p = parse_params(&params)?;
            let mut store = harness::SampleStore::new(&exp);
            let rom = store.get(&p)?.rom.clone();
            write_text(&out, &serde_json::to_string(&rom)?)?;
        }
        Command::Angles { a, b } => {
            let a: RomSample = read_json(&a)?;
            let b: RomSample = read_json(&b)?;
            if a.mesh_id != b.mesh_id {
                bail!("bases live on different meshes ({} vs {}); transfer them first", a.mesh_id, b.mesh_id);
            }
            let theta = principal_angles(a.basis.as_ref(), b.basis.as_ref())?;
            println!("{}", serde_json::to_string(&theta)?);
        }
        Command::BuildProm {
            config,
            method,
            scale,
            out,
        } => {
            let mut exp = load_experiment(&config, scale)?;
            exp.methods = vec![match method {
                MorphKind::Saeh => harness::Method::Saeh,
                MorphKind::Rbf => harness::Method::Rbf,
            }];
            exp.test_grid = vec![0; exp.case.dim()];
            exp.extra_test_points.clear();
            let result = harness::run_experiment(&exp)?;
            let summary = &result.methods[0];
            if let Some(e) = &summary.error {
                bail!("{} failed: {e}", summary.method);
            }
            let model = &result.models[&summary.method];
            write_text(&out, &model.to_json()?)?;
            println!("{}", serde_json::to_string_pretty(summary)?);
        }
        Command::Predict {
            model,
            params,
            fmin,
            fmax,
            count,
            out,
        } => {
            let text = fs::read_to_string(&model).with_context(|| format!("reading {}", model.display()))?;
            let model = PromModel::from_json(&text)?;
            let freqs = FrequencyGrid::Linspace {
                start: fmin,
                stop: fmax,
                count,
            }
            .values()?;
            let frf = model.predict(&parse_params(&params)?)?.frf(&freqs);
            let mut csv = String::from("freq,re,im\n");
            for (f, y) in freqs.iter().zip(&frf.y) {
                csv.push_str(&format!("{f},{},{}\n", y.re, y.im));
            }
            write_text(&out, &csv)?;
            if !frf.singular.is_empty() {
                eprintln!("warning: {} frequencies hit a singular reduced system", frf.singular.len());
            }
        }
        Command::Run {
            config,
            methods,
            scale,
            out,
            check,
        } => {
            let mut exp = load_experiment(&config, scale)?;
            if let Some(m) = methods {
                exp.methods = harness::parse_methods(&m)?;
            }
            let result = harness::run_experiment(&exp)?;
            harness::write_outputs(&exp, &result, &out)?;
            for s in &result.methods {
                match &s.error {
                    Some(e) => println!("{}: failed: {e}", s.method),
                    None => println!(
                        "{}: {} samples, {} clusters, mean MRE {:.4}, max MRE {:.4}",
                        s.method, s.samples, s.clusters, s.mean_mre, s.max_mre
                    ),
                }
            }
            if check {
                let breaches = harness::evaluate_checks(&exp, &result);
                for b in &breaches {
                    eprintln!("check failed: {b}");
                }
                if !breaches.is_empty() {
                    return Ok(ExitCode::from(2));
                }
            }
        }
        Command::Timing { config, scale } => {
            let exp = load_experiment(&config, scale)?;
            let report = harness::timing_report(&exp)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
