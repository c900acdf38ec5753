use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use potts_cli::formats::{
    parse_instance, parse_labeling, parse_pgm, serialize_instance, DEFAULT_BIG_M,
};
use potts_cli::reports::{self, render};
use potts_cli::stereo::{build_stereo_instance, StereoConfig};
use potts_core::instance::{brute_force_map, energy, Instance, Labeling};
use potts_core::lp::Tolerances;
use potts_core::{bounds, expansion, locallp, noise, repair, stability};
use rand::{Rng, SeedableRng};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "potts",
    about = "MAP inference toolkit for ferromagnetic Potts models: local LP relaxation, expansion-stability checking, nearest-stable-instance repair, recovery bounds, and noise experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Report format (only "json" is supported)
    #[arg(long, global = true, default_value = "json")]
    format: String,
    /// Append coarse wall-clock timing to the report
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Brute,
    Expansion,
}

#[derive(Args)]
struct InstanceArg {
    /// Instance file (POTTS 1 format)
    #[arg(long)]
    input: PathBuf,
    /// Substitution value for "inf" cost tokens
    #[arg(long, default_value_t = DEFAULT_BIG_M)]
    big_m: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the MAP problem by brute force or expansion-move search
    Solve {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, value_enum, default_value = "brute")]
        method: Method,
        /// Seed for the random initial labeling of the expansion search
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve the local LP relaxation
    Lp {
        #[command(flatten)]
        inst: InstanceArg,
        /// Also dump the LP in fixed-format MPS for external cross-checks
        #[arg(long)]
        dump_mps: Option<PathBuf>,
    },
    /// Check (2,1,psi)-expansion stability of a candidate MAP labeling
    Check {
        #[command(flatten)]
        inst: InstanceArg,
        /// Labeling file (1-indexed); default: brute-force MAP
        #[arg(long)]
        labeling: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        psi: f64,
    },
    /// Find the nearest (L1) expansion-stable instance with a given MAP
    Repair {
        #[command(flatten)]
        inst: InstanceArg,
        /// Target labeling file; default: computed by --method
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "expansion")]
        method: Method,
        #[arg(long, conflicts_with = "psi_grid")]
        psi: Option<f64>,
        /// Comma-separated psi values to sweep (reports one summary per value)
        #[arg(long)]
        psi_grid: Option<String>,
        /// Write the repaired instance here (single-psi mode)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate recovery bounds of an observed instance against a stable one
    Bounds {
        /// Observed instance file
        #[arg(long)]
        observed: PathBuf,
        /// Stable instance file (e.g. repair output)
        #[arg(long)]
        stable: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BIG_M)]
        big_m: f64,
        /// Target labeling file; default: computed on the observed instance
        #[arg(long)]
        target: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "expansion")]
        method: Method,
        #[arg(long)]
        psi: f64,
        /// Skip the deviation LPs (d_up, unconditional, symmetric)
        #[arg(long)]
        skip_deviation: bool,
        /// Embed the bundled published full-scale reference results
        #[arg(long)]
        reference: bool,
    },
    /// Build a stereo instance from a rectified grayscale pair
    StereoBuild {
        /// Left image (PGM, P2 or P5)
        #[arg(long)]
        left: PathBuf,
        /// Right image (PGM, P2 or P5)
        #[arg(long)]
        right: PathBuf,
        /// Number of disparity labels
        #[arg(short = 'k', long)]
        disparities: usize,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 50.0)]
        t: f64,
        #[arg(long, default_value_t = 4.0)]
        s: f64,
        /// Crop rectangle "x,y,w,h" in left-image pixels
        #[arg(long)]
        crop: Option<String>,
        /// Matching-cost cap for out-of-bounds disparities
        #[arg(long)]
        cap: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample noisy instances or run the model validators
    Noise {
        #[command(flatten)]
        inst: InstanceArg,
        #[arg(long, value_enum)]
        mode: NoiseMode,
        /// NoiseSpec as a JSON file (overrides the flag-based spec)
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Stability margin of the latent instance (validate-apmap)
        #[arg(long, default_value_t = 1.0)]
        psi: f64,
        /// Universal constant in the deviation bounds
        #[arg(long, default_value_t = 1.0)]
        c_const: f64,
        /// Latent MAP labeling file (validate-apmap); default: brute force
        #[arg(long)]
        labeling: Option<PathBuf>,
        /// Output file for the sampled instance (mode=sample)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NoiseMode {
    Sample,
    ValidateDswhp,
    ValidateApmap,
}

fn load_instance(arg: &InstanceArg) -> Result<Instance> {
    load_instance_path(&arg.input, arg.big_m)
}

fn load_instance_path(path: &Path, big_m: f64) -> Result<Instance> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_instance(&text, big_m)?)
}

fn load_labeling(path: &Path, inst: &Instance) -> Result<Labeling> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_labeling(&text, inst)?)
}

fn one_indexed(x: &Labeling) -> Vec<usize> {
    x.as_slice().iter().map(|l| l + 1).collect()
}

fn map_labeling(inst: &Instance, method: Method, seed: Option<u64>) -> Result<Labeling> {
    match method {
        Method::Brute => Ok(brute_force_map(inst).map(|(x, _)| x)?),
        Method::Expansion => {
            let init = match seed {
                None => Labeling::new(vec![0; inst.node_count()]),
                Some(s) => {
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
                    Labeling::new(
                        (0..inst.node_count())
                            .map(|_| rng.gen_range(0..inst.label_count()))
                            .collect(),
                    )
                }
            };
            Ok(expansion::alpha_expansion_search(inst, &init)?)
        }
    }
}

fn parse_crop(text: &str) -> Result<(usize, usize, usize, usize)> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| anyhow!("crop must be \"x,y,w,h\", got {text:?}"))?;
    if parts.len() != 4 {
        bail!("crop must be \"x,y,w,h\", got {text:?}");
    }
    Ok((parts[0], parts[1], parts[2], parts[3]))
}

fn run(cli: &Cli) -> Result<String> {
    if cli.format != "json" {
        bail!(
            "unsupported --format {:?}: only json is available",
            cli.format
        );
    }
    let start = Instant::now();
    let timings = |start: Instant| {
        if cli.timings {
            Some(start.elapsed().as_secs_f64() * 1e3)
        } else {
            None
        }
    };

    match &cli.command {
        Command::Solve { inst, method, seed } => {
            let instance = load_instance(inst)?;
            let (x, e, name) = match method {
                Method::Brute => {
                    let (x, e) = brute_force_map(&instance)?;
                    (x, e, "brute")
                }
                Method::Expansion => {
                    let x = map_labeling(&instance, Method::Expansion, *seed)?;
                    let e = energy(&instance, &x)?;
                    (x, e, "expansion")
                }
            };
            Ok(render(
                "solve",
                reports::SolveBody {
                    method: name.to_string(),
                    labels: one_indexed(&x),
                    energy: e,
                },
                timings(start),
            ))
        }

        Command::Lp { inst, dump_mps } => {
            let instance = load_instance(inst)?;
            let mps_dumped_to = match dump_mps {
                Some(path) => {
                    let program = locallp::build_local_lp(&instance);
                    std::fs::write(path, potts_core::lp::write_mps(&program, "LOCALLP"))
                        .with_context(|| format!("writing {}", path.display()))?;
                    Some(path.display().to_string())
                }
                None => None,
            };
            let sol = locallp::solve_local_lp(&instance)?;
            Ok(render(
                "lp",
                reports::LpBody {
                    objective: locallp::lp_objective(&instance, &sol),
                    integral: sol.is_integral(),
                    provenance: sol.provenance(),
                    labels: sol.to_labeling().map(|x| one_indexed(&x)),
                    mps_dumped_to,
                },
                timings(start),
            ))
        }

        Command::Check {
            inst,
            labeling,
            psi,
        } => {
            let instance = load_instance(inst)?;
            let (x, source) = match labeling {
                Some(path) => (load_labeling(path, &instance)?, "file"),
                None => (map_labeling(&instance, Method::Brute, None)?, "brute"),
            };
            let report = stability::check_expansion_stability(&instance, &x, *psi)?;
            Ok(render(
                "check",
                reports::CheckBody {
                    labels: one_indexed(&x),
                    labeling_source: source.to_string(),
                    report,
                },
                timings(start),
            ))
        }

        Command::Repair {
            inst,
            target,
            method,
            psi,
            psi_grid,
            out,
        } => {
            let instance = load_instance(inst)?;
            let x_t = match target {
                Some(path) => load_labeling(path, &instance)?,
                None => map_labeling(&instance, *method, None)?,
            };
            let tol = Tolerances::default();
            if let Some(grid) = psi_grid {
                let psis: Vec<f64> = grid
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| anyhow!("bad --psi-grid {grid:?}"))?;
                let mut entries = Vec::new();
                for &psi in &psis {
                    let r = repair::solve_repair_with(&instance, &x_t, psi, &tol)?;
                    entries.push(reports::RepairGridEntry {
                        psi,
                        objective: r.objective,
                        cost_changed_fraction: r.cost_changed_fraction,
                        weight_changed_fraction: r.weight_changed_fraction,
                        post_verdict: r.post_check.verdict,
                    });
                }
                return Ok(render(
                    "repair",
                    reports::RepairGridBody {
                        target: one_indexed(&x_t),
                        grid: entries,
                    },
                    timings(start),
                ));
            }
            let psi = psi.ok_or_else(|| anyhow!("--psi (or --psi-grid) is required"))?;
            let result = repair::solve_repair_with(&instance, &x_t, psi, &tol)?;
            let wrote = match out {
                Some(path) => {
                    let repaired =
                        instance.with_parameters(result.costs.clone(), result.weights.clone())?;
                    std::fs::write(path, serialize_instance(&repaired))
                        .with_context(|| format!("writing {}", path.display()))?;
                    Some(path.display().to_string())
                }
                None => None,
            };
            Ok(render(
                "repair",
                reports::RepairBody {
                    target: one_indexed(&x_t),
                    result,
                    wrote,
                },
                timings(start),
            ))
        }

        Command::Bounds {
            observed,
            stable,
            big_m,
            target,
            method,
            psi,
            skip_deviation,
            reference,
        } => {
            let observed_inst = load_instance_path(observed, *big_m)?;
            let stable_inst = load_instance_path(stable, *big_m)?;
            let x_t = match target {
                Some(path) => load_labeling(path, &observed_inst)?,
                None => map_labeling(&observed_inst, *method, None)?,
            };
            let report = bounds::evaluate_bounds(
                &observed_inst,
                &stable_inst,
                &x_t,
                *psi,
                !skip_deviation,
            )?;
            let reference = if *reference {
                Some(serde_json::from_str(potts_cli::REFERENCE_RESULTS)?)
            } else {
                None
            };
            Ok(render(
                "bounds",
                reports::BoundsBody {
                    target: one_indexed(&x_t),
                    report,
                    reference,
                },
                timings(start),
            ))
        }

        Command::StereoBuild {
            left,
            right,
            disparities,
            p,
            t,
            s,
            crop,
            cap,
            out,
        } => {
            let left_img = parse_pgm(
                &std::fs::read(left).with_context(|| format!("reading {}", left.display()))?,
            )?;
            let right_img = parse_pgm(
                &std::fs::read(right).with_context(|| format!("reading {}", right.display()))?,
            )?;
            let cfg = StereoConfig {
                disparities: *disparities,
                penalty_factor: *p,
                gradient_threshold: *t,
                smoothness: *s,
                crop: crop.as_deref().map(parse_crop).transpose()?,
                bt_cap: *cap,
            };
            let instance = build_stereo_instance(&left_img, &right_img, &cfg)?;
            std::fs::write(out, serialize_instance(&instance))
                .with_context(|| format!("writing {}", out.display()))?;
            Ok(render(
                "stereo-build",
                reports::StereoBody {
                    nodes: instance.node_count(),
                    edges: instance.edge_count(),
                    labels: instance.label_count(),
                    wrote: out.display().to_string(),
                },
                timings(start),
            ))
        }

        Command::Noise {
            inst,
            mode,
            spec,
            sigma,
            gamma,
            rho,
            eta,
            seed,
            trials,
            psi,
            c_const,
            labeling,
            out,
        } => {
            let instance = load_instance(inst)?;
            let spec = match spec {
                Some(path) => {
                    let text = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str::<noise::NoiseSpec>(&text)?
                }
                None => noise::NoiseSpec::uniform(&instance, *sigma, *gamma, *rho, *eta, *seed),
            };
            match mode {
                NoiseMode::Sample => {
                    let sample = noise::sample_noisy_instance(&instance, &spec)?;
                    let wrote = match out {
                        Some(path) => {
                            std::fs::write(path, serialize_instance(&sample.instance))
                                .with_context(|| format!("writing {}", path.display()))?;
                            Some(path.display().to_string())
                        }
                        None => None,
                    };
                    Ok(render(
                        "noise",
                        reports::NoiseSampleBody {
                            active_nodes: sample.active_nodes.len(),
                            active_edges: sample.active_edges.len(),
                            max_residual_bias: sample
                                .residual_bias
                                .iter()
                                .fold(0.0f64, |a, b| a.max(b.abs())),
                            wrote,
                        },
                        timings(start),
                    ))
                }
                NoiseMode::ValidateDswhp => {
                    let stats = noise::validate_dswhp(&instance, &spec, *trials, *c_const)?;
                    Ok(render("noise", stats, timings(start)))
                }
                NoiseMode::ValidateApmap => {
                    let xbar = match labeling {
                        Some(path) => load_labeling(path, &instance)?,
                        None => map_labeling(&instance, Method::Brute, None)?,
                    };
                    let stats =
                        noise::validate_apmap(&instance, &xbar, &spec, *psi, *trials, *c_const)?;
                    Ok(render("noise", stats, timings(start)))
                }
            }
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => print!("{report}"),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
