//! `hypnets`: synthesize A-nets, extend them to hyperbolic nets, build
//! Weingarten transforms, verify artifacts and export meshes.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration or input
//! error, 3 solver error.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hypnets::anet::ANet;
use hypnets::hypnet::{solve_rho_cauchy, HyperbolicNet, RhoSeeds};
use hypnets::io::{stack_doc, Artifact};
use hypnets::meshout::tessellate;
use hypnets::synth;
use hypnets::verify::{verify_artifact, Report};
use hypnets::weingarten::{backlund_rho, iterate_weingarten, normalize_lambda, weingarten_transform, WeingartenPair};
use hypnets::{Error, Tolerances};
use rand::Rng;

use config::SynthConfig;

#[derive(Parser)]
#[command(name = "hypnets", version, about = "Discrete A-nets, hyperbolic nets and Weingarten transforms")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed of the ChaCha8 generator; recorded in every output.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tol_incidence: Option<f64>,
    #[arg(long, global = true)]
    tol_genericity: Option<f64>,
    /// Output path; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Cauchy problem for an A-net.
    Synth {
        /// JSON config; flags below are used when absent.
        config: Option<PathBuf>,
        /// Vertex counts, e.g. `10,10` or `8,8,2`.
        #[arg(long, value_delimiter = ',', default_values_t = [10usize, 10])]
        extent: Vec<usize>,
        /// Two-layer net from the Φ construction.
        #[arg(long)]
        equi_twisted: bool,
    },
    /// Solve for ρ on a net (the bottom layer of a 3D net).
    Extend {
        net: PathBuf,
        /// JSON `{"axis1": [...], "axis2": [...], "rho11": x}`.
        #[arg(long, conflicts_with = "rho_range")]
        seeds: Option<PathBuf>,
        /// Uniform random seeds in `[lo, hi)`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [0.5, 2.0])]
        rho_range: Vec<f64>,
    },
    /// Weingarten (or Bäcklund) transform of a hyperbolic net.
    Transform {
        hypnet: PathBuf,
        /// 3D net whose bottom layer is the input surface; the embedded one by default.
        #[arg(long)]
        support: Option<PathBuf>,
        /// Iterate through `K` layers of the support.
        #[arg(long, value_name = "K", conflicts_with = "backlund")]
        layers: Option<i64>,
        #[arg(long, requires = "seeds")]
        backlund: bool,
        /// ρ̃ at (0,0),(1,0),(0,1),(1,1), or `random`.
        #[arg(long)]
        seeds: Option<String>,
        /// Embed a verification report.
        #[arg(long)]
        verify: bool,
    },
    /// Run every applicable check on an artifact.
    Verify { file: PathBuf },
    /// Tessellate a hyperbolic net into an OBJ mesh.
    Export {
        hypnet: PathBuf,
        #[arg(long, default_value_t = 16)]
        resolution: usize,
    },
}

enum Failure {
    Verification,
    Config(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_solver_failure() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn config_err(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> std::result::Result<Artifact, Failure> {
    Ok(Artifact::from_json(&read(path)?)?)
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => fs::write(p, bytes).map_err(|e| config_err(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| config_err(e.to_string())),
    }
}

fn tolerances(g: &Global) -> std::result::Result<Tolerances, Failure> {
    let d = Tolerances::default();
    Ok(Tolerances::new(g.tol_incidence.unwrap_or(d.incidence_rel), g.tol_genericity.unwrap_or(d.genericity_rel))?)
}

fn support_of(a: &Artifact, path: Option<&PathBuf>) -> std::result::Result<ANet, Failure> {
    if let Some(p) = path {
        return Ok(load(p)?.net()?);
    }
    match a {
        Artifact::Hypnet(d) => match &d.support {
            Some(s) => Ok(s.to_net()?),
            None => Err(config_err("no support net: pass --support or extend a 3D net")),
        },
        _ => Err(config_err("expected a hypnet file")),
    }
}

fn parse_seeds(s: &str, rng: &mut synth::SynthRng) -> std::result::Result<[f64; 4], Failure> {
    if s == "random" {
        return Ok(std::array::from_fn(|_| rng.gen_range(0.5..2.0)));
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| config_err(format!("--seeds: {e}")))?;
    v.try_into().map_err(|_| config_err("--seeds needs four values or \"random\""))
}

fn with_report(mut a: Artifact, verify: bool, tol: &Tolerances) -> (Artifact, Option<Report>) {
    if !verify {
        return (a, None);
    }
    let report = verify_artifact(&a, tol);
    match &mut a {
        Artifact::WeingartenPair(d) => d.verification = Some(report.clone()),
        Artifact::WeingartenStack(d) => d.verification = Some(report.clone()),
        _ => {}
    }
    (a, Some(report))
}

fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    let tol = tolerances(g)?;
    match cli.command {
        Command::Synth { config, extent, equi_twisted } => {
            let cfg = match config {
                Some(p) => SynthConfig::parse(&read(&p)?)?,
                None => SynthConfig {
                    extent,
                    normals: None,
                    coefficients: None,
                    x0: None,
                    equi_twisted,
                    seed: None,
                },
            };
            let seed = g.seed.or(cfg.seed).unwrap_or(0);
            let net = cfg.build(&mut synth::rng(seed), &tol)?;
            emit(&g.out, Artifact::anet(&net, None, Some(seed))?.to_json().as_bytes())
        }
        Command::Extend { net, seeds, rho_range } => {
            let input = load(&net)?;
            let seed = g.seed.or(input.seed()).unwrap_or(0);
            let full = input.net()?;
            let (surface, support) = if full.dim() == 3 { (full.layer(0)?, Some(full)) } else { (full, None) };
            let w = surface.window();
            let seeds: RhoSeeds = match seeds {
                Some(p) => serde_json::from_str(&read(&p)?).map_err(|e| config_err(format!("bad seeds file: {e}")))?,
                None => {
                    let [lo, hi] = rho_range[..] else {
                        return Err(config_err("--rho-range needs two values"));
                    };
                    if !(lo < hi) {
                        return Err(config_err("--rho-range needs lo < hi"));
                    }
                    synth::rho_seeds(&mut synth::rng(seed), w.extent(1), w.extent(2), lo, hi)
                }
            };
            let h = solve_rho_cauchy(&surface, &seeds, &tol)?;
            eprintln!("status: {}", h.status);
            if !h.offending.is_empty() {
                let cells: Vec<String> = h.offending.iter().map(ToString::to_string).collect();
                eprintln!("offending cells: {}", cells.join(" "));
            }
            emit(&g.out, Artifact::hypnet(&h, support.as_ref(), Some(seed))?.to_json().as_bytes())
        }
        Command::Transform { hypnet, support, layers, backlund, seeds, verify } => {
            let input = load(&hypnet)?;
            let seed = g.seed.or(input.seed()).unwrap_or(0);
            let f: HyperbolicNet = input.to_hypnet(&tol)?;
            let support = support_of(&input, support.as_ref())?;
            let art = if let Some(k) = layers {
                if k < 1 {
                    return Err(config_err("--layers needs K >= 1"));
                }
                let stack = support.layers(0, k)?;
                let r = iterate_weingarten(&f, &stack, &tol)?;
                eprintln!("max dBKP residual: {:.3e}", r.max_dbkp);
                stack_doc(&stack, r.rho.field(), r.lambdas, r.statuses, r.max_dbkp, None, Some(seed))?
            } else {
                let pair_net = support.layers(0, 1)?;
                let pair = if backlund {
                    let s = parse_seeds(seeds.as_deref().unwrap_or("random"), &mut synth::rng(seed))?;
                    let rho = backlund_rho(&f, &pair_net, s, &tol)?;
                    WeingartenPair::from_parts(pair_net, rho, &tol)?
                } else {
                    let p = weingarten_transform(&f, &pair_net, Default::default(), &tol)?;
                    let (lambda, p) = normalize_lambda(&p, &tol)?;
                    eprintln!("lambda: {lambda:e}");
                    p
                };
                eprintln!("status: {}", pair.status);
                Artifact::pair(&pair, None, Some(seed))?
            };
            let (art, report) = with_report(art, verify, &tol);
            emit(&g.out, art.to_json().as_bytes())?;
            match report {
                Some(r) if !r.passed() => {
                    eprint!("{}", r.summary());
                    Err(Failure::Verification)
                }
                _ => Ok(()),
            }
        }
        Command::Verify { file } => {
            let a = load(&file)?;
            let report = verify_artifact(&a, &tol);
            let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
            json.push('\n');
            emit(&g.out, json.as_bytes())?;
            eprint!("{}", report.summary());
            let failed = report.failures().count();
            eprintln!("{} checks, {} failed", report.checks.len(), failed);
            if failed > 0 {
                Err(Failure::Verification)
            } else {
                Ok(())
            }
        }
        Command::Export { hypnet, resolution } => {
            let h = load(&hypnet)?.to_hypnet(&tol)?;
            let mesh = tessellate(&h, resolution).map_err(|e| match e {
                Error::NotHyperbolic(_) => config_err(format!("refusing to export: {e}")),
                e => e.into(),
            })?;
            let mut obj = Vec::new();
            mesh.write_obj(&mut obj).map_err(|e| config_err(e.to_string()))?;
            emit(&g.out, &obj)?;
            let w = h.surface.window();
            let st = mesh.stats();
            eprintln!(
                "{} vertices, {} triangles, {} patches, watertight: {}, max seam dihedral: {:.3} deg (unoriented {:.3} deg)",
                mesh.vertices.len(),
                mesh.triangles.len(),
                mesh.groups.len(),
                st.watertight(w.extent(1), w.extent(2), resolution),
                mesh.max_seam_dihedral(),
                mesh.max_seam_plane_angle()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver error: {m}");
            ExitCode::from(3)
        }
    }
}
