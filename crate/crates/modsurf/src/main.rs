//! Command-line front end: build zoo surfaces, compute moduli, potentials,
//! level curves, and run the verification suites.
//!
//! Exit codes: 0 when every checked condition passed, 1 when a check failed,
//! 2 for configuration or usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use modsurf::analysis::{
    coarea_check, coarea_u_check, kappa_conjectured, kappa_improved, kappa_proved,
    reciprocality_report, ring_probe, Flag, ReportOptions,
};
use modsurf::io::{fmt_modulus, fmt_sig12, read_mesh, write_mesh};
use modsurf::level::{level_mass, level_set};
use modsurf::modulus::{solve_modulus, SolveOptions};
use modsurf::potential::build_potential;
use modsurf::runner::{
    build_surface, random_lipschitz_field, run, zoo_names, ExperimentConfig, Suite,
};
use modsurf::surface::{Arc, FamilySpec, MetricMesh, QuadFrame};
use modsurf::{Error, Result};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(
    name = "modsurf",
    about = "Discrete conformal modulus of conjugate curve families on meshed surfaces",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Mesh source shared by the per-surface commands.
#[derive(Args)]
struct InputArgs {
    /// Mesh document to load (JSON written by `build` or by hand).
    #[arg(long, conflicts_with = "surface")]
    mesh: Option<PathBuf>,
    /// Built-in surface to construct instead of loading a file.
    #[arg(long)]
    surface: Option<String>,
    /// Grid resolution (cells per unit length) for --surface.
    #[arg(long, default_value_t = 32)]
    n: usize,
}

impl InputArgs {
    fn load(&self) -> Result<(MetricMesh<f64>, QuadFrame)> {
        match (&self.mesh, &self.surface) {
            (Some(path), None) => {
                let (mesh, frame) = read_mesh(path)?;
                let frame = frame.ok_or_else(|| {
                    Error::Config(format!(
                        "{}: mesh document has no frame; this command needs the four marked arcs",
                        path.display()
                    ))
                })?;
                Ok((mesh, frame))
            }
            (None, Some(name)) => build_surface(name, self.n),
            _ => Err(Error::Config(
                "provide exactly one of --mesh FILE or --surface NAME".into(),
            )),
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Admissibility residual tolerance for certificates.
    #[arg(long = "eps-adm", default_value_t = 1e-6)]
    eps_adm: f64,
    /// Relative duality-gap tolerance for certificates.
    #[arg(long = "eps-gap", default_value_t = 1e-6)]
    eps_gap: f64,
}

impl SolveArgs {
    fn options(&self) -> SolveOptions<f64> {
        SolveOptions {
            eps_admissibility: self.eps_adm,
            eps_gap: self.eps_gap,
            max_iterations: None,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a built-in surface and write it as a mesh document.
    Build {
        /// Surface name: square, rect2, rect3, conformal_poly, conformal_sine,
        /// collapsed_disk.
        surface: String,
        /// Grid resolution (cells per unit length).
        #[arg(long, default_value_t = 32)]
        n: usize,
        /// Output path for the mesh document.
        #[arg(long)]
        out: PathBuf,
    },
    /// Modulus of one of the two conjugate curve families.
    Modulus {
        #[command(flatten)]
        input: InputArgs,
        /// Family to solve: gamma1 (ζ₁→ζ₃) or gamma2 (ζ₂→ζ₄).
        #[arg(long, default_value = "gamma1")]
        family: String,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Potential of the ζ₁→ζ₃ family: boundary values, gradient exactness.
    Potential {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Write per-vertex potential values as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Level curves of the potential at chosen thresholds.
    Levelsets {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Thresholds in (0, 1).
        #[arg(long, value_delimiter = ',', default_value = "0.25,0.5,0.75")]
        levels: Vec<f64>,
    },
    /// Coarea checks for random Lipschitz fields and the extremal potential.
    Coarea {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Number of quadrature levels.
        #[arg(long, default_value_t = 64)]
        levels: usize,
        /// Number of random fields to test.
        #[arg(long, default_value_t = 20)]
        fields: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Mesh-scale tolerance; defaults to 1.6/n.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Ring moduli on shrinking concentric balls.
    Ring {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Center vertex id; defaults to the deepest interior vertex.
        #[arg(long)]
        center: Option<usize>,
        /// Outer radius; defaults to min(diam ζ₁, diam ζ₃)/4.
        #[arg(long)]
        outer: Option<f64>,
    },
    /// Conjugate product report: both moduli, κ verdicts, ring decay.
    Reciprocality {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        solve: SolveArgs,
        /// Skip the ring probe (its flag comes out indeterminate).
        #[arg(long)]
        skip_ring: bool,
    },
    /// Run the verification suites over the surface zoo and write reports.
    Suite {
        /// Configuration file (`key = value` lines); flags below override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "eps-adm")]
        eps_adm: Option<f64>,
        #[arg(long = "eps-gap")]
        eps_gap: Option<f64>,
        /// Quadrature levels for the coarea suite.
        #[arg(long)]
        levels: Option<usize>,
        /// Comma-separated resolutions, strictly increasing.
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<usize>>,
        /// Comma-separated surface names, or `all`.
        #[arg(long, value_delimiter = ',')]
        surfaces: Option<Vec<String>>,
        /// Comma-separated suites (modulus, reciprocality, coarea, ring), or `all`.
        #[arg(long, value_delimiter = ',')]
        suites: Option<Vec<String>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Build { surface, n, out } => {
            let (mesh, frame) = build_surface(&surface, n)?;
            write_mesh(&out, &mesh, Some(&frame))?;
            println!(
                "wrote {} ({} vertices, {} edges, {} faces)",
                out.display(),
                mesh.vertex_count(),
                mesh.edge_count(),
                mesh.face_count()
            );
            Ok(true)
        }
        Command::Modulus {
            input,
            family,
            solve,
        } => {
            let (mesh, frame) = input.load()?;
            let spec = match family.as_str() {
                "gamma1" => FamilySpec::gamma1(),
                "gamma2" => FamilySpec::gamma2(),
                other => {
                    return Err(Error::Config(format!(
                        "unknown family '{other}'; expected gamma1 or gamma2"
                    )))
                }
            };
            let result = solve_modulus(&mesh, &spec, Some(&frame), &solve.options())?;
            println!("modulus = {}", fmt_modulus(&result.value));
            println!(
                "primal = {}, dual = {}",
                fmt_sig12(result.primal_value),
                fmt_sig12(result.dual_value)
            );
            println!(
                "iterations = {}, active paths = {}",
                result.iterations,
                result.active_paths.len()
            );
            println!("certified = {}", result.certified);
            Ok(result.certified)
        }
        Command::Potential { input, solve, out } => {
            let (mesh, frame) = input.load()?;
            let g1 = solve_modulus(&mesh, &FamilySpec::gamma1(), Some(&frame), &solve.options())?;
            let field = build_potential(&mesh, &frame, &g1.density)?;
            let u = field.values();
            let z1_max = frame
                .arc(Arc::Zeta1)
                .iter()
                .map(|&v| u[v].abs())
                .fold(0.0f64, f64::max);
            let z3_min = frame
                .arc(Arc::Zeta3)
                .iter()
                .map(|&v| u[v])
                .fold(f64::INFINITY, f64::min);
            let violations = field.upper_gradient_violations(&mesh);
            println!(
                "potential range = [{}, {}]",
                fmt_sig12(u.iter().cloned().fold(f64::INFINITY, f64::min)),
                fmt_sig12(u.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
            );
            println!("max |u| on zeta1 = {}", fmt_sig12(z1_max));
            println!("min u on zeta3 = {}", fmt_sig12(z3_min));
            println!("upper-gradient violations = {}", violations.len());
            if let Some(path) = out {
                let mut csv = String::from("vertex,x,y,u\n");
                for v in 0..mesh.vertex_count() {
                    let p = mesh.position(v);
                    csv.push_str(&format!(
                        "{v},{},{},{}\n",
                        fmt_sig12(p[0]),
                        fmt_sig12(p[1]),
                        fmt_sig12(u[v])
                    ));
                }
                std::fs::write(&path, csv)?;
                println!("wrote {}", path.display());
            }
            Ok(violations.is_empty() && z1_max == 0.0 && z3_min == 1.0)
        }
        Command::Levelsets {
            input,
            solve,
            levels,
        } => {
            let (mesh, frame) = input.load()?;
            let g1 = solve_modulus(&mesh, &FamilySpec::gamma1(), Some(&frame), &solve.options())?;
            let field = build_potential(&mesh, &frame, &g1.density)?;
            let mut ok = true;
            for &t in &levels {
                let curve = level_set(&mesh, &frame, &field, t)?;
                let mass = level_mass(&mesh, &curve, &|e| field.density().value(e));
                let single = curve.connected();
                let meets = curve.meets_arc(Arc::Zeta2) && curve.meets_arc(Arc::Zeta4);
                ok = ok && single && meets && !curve.degenerate;
                println!(
                    "t = {}: {} edges, components = {}, meets zeta2/zeta4 = {}/{}, rho-mass = {}",
                    fmt_sig12(curve.level),
                    curve.edges.len(),
                    curve.chain.components.len(),
                    curve.meets_arc(Arc::Zeta2),
                    curve.meets_arc(Arc::Zeta4),
                    fmt_sig12(mass)
                );
            }
            Ok(ok)
        }
        Command::Coarea {
            input,
            solve,
            levels,
            fields,
            seed,
            tolerance,
        } => {
            let (mesh, frame) = input.load()?;
            let tol = tolerance.unwrap_or(1.6 / input.n as f64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut ok = true;
            for k in 0..fields {
                let m = random_lipschitz_field(&mesh, 1.0, &mut rng);
                let g: Vec<f64> = if k % 2 == 0 {
                    vec![1.0; mesh.edge_count()]
                } else {
                    (0..mesh.edge_count())
                        .map(|_| rng.gen_range(0.1..1.1))
                        .collect()
                };
                let rep = coarea_check(&mesh, &m, 1.0, &g, levels, tol)?;
                ok = ok && rep.pass;
                println!(
                    "field {k:02}: lhs = {}, rhs = {}, pass = {}",
                    fmt_sig12(rep.lhs),
                    fmt_sig12(rep.rhs),
                    rep.pass
                );
            }
            let g1 = solve_modulus(&mesh, &FamilySpec::gamma1(), Some(&frame), &solve.options())?;
            let field = build_potential(&mesh, &frame, &g1.density)?;
            let ones = vec![1.0; mesh.edge_count()];
            let rep = coarea_u_check(&mesh, &field, &ones, levels, tol)?;
            ok = ok && rep.pass;
            println!(
                "potential: lhs = {}, rhs = {}, empirical constant = {}, pass = {}",
                fmt_sig12(rep.lhs),
                fmt_sig12(rep.rhs),
                fmt_sig12(rep.empirical_constant.unwrap_or(0.0)),
                rep.pass
            );
            Ok(ok)
        }
        Command::Ring {
            input,
            solve,
            center,
            outer,
        } => {
            let (mesh, frame) = input.load()?;
            let probe = ring_probe(&mesh, &frame, &solve.options(), center, outer)?;
            println!(
                "center = v{} {:?}, outer = {}",
                probe.center,
                mesh.position(probe.center),
                fmt_sig12(probe.outer)
            );
            for &(r, v) in &probe.values {
                println!(
                    "r = {}: ring modulus = {}",
                    fmt_sig12(r),
                    if v.is_finite() {
                        fmt_sig12(v)
                    } else {
                        "inf".into()
                    }
                );
            }
            println!("decay flag = {:?}, certified = {}", probe.flag, probe.certified);
            Ok(probe.certified)
        }
        Command::Reciprocality {
            input,
            solve,
            skip_ring,
        } => {
            let (mesh, frame) = input.load()?;
            let opts = ReportOptions {
                solve: solve.options(),
                ring_center: None,
                ring_outer: None,
                skip_ring,
            };
            let report = reciprocality_report(&mesh, &frame, &opts)?;
            println!("mod_gamma1 = {}", fmt_modulus(&report.mod_gamma1));
            println!("mod_gamma2 = {}", fmt_modulus(&report.mod_gamma2));
            let product = match report.product.finite() {
                Some(v) => fmt_sig12(v),
                None => report.product.to_string(),
            };
            println!("product = {product}");
            let names = ["proved", "improved", "conjectured"];
            let kappas: [f64; 3] = [kappa_proved(), kappa_improved(), kappa_conjectured()];
            for ((name, v), kappa) in names.iter().zip(report.verdicts.iter()).zip(kappas) {
                println!(
                    "kappa_{name} = {}: lower (>= 1/kappa) {:?}, upper (<= kappa) {:?}",
                    fmt_sig12(kappa),
                    v.lower,
                    v.upper
                );
            }
            if let Some(chain) = &report.chain {
                println!(
                    "chain: cross term = {}, factor = {}, step1 = {}, step2 = {}",
                    fmt_sig12(chain.cross_term),
                    fmt_sig12(chain.factor),
                    chain.step1_ok,
                    chain.step2_ok
                );
            }
            println!("ring decay = {:?}", report.ring);
            println!("certified = {}", report.certified);
            let lower_ok = report.verdicts[0].lower != Flag::Fail;
            Ok(report.certified && lower_ok)
        }
        Command::Suite {
            config,
            out,
            seed,
            eps_adm,
            eps_gap,
            levels,
            resolutions,
            surfaces,
            suites,
        } => {
            let mut cfg = match config {
                Some(path) => ExperimentConfig::from_file(&path)?,
                None => ExperimentConfig::default(),
            };
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(eps) = eps_adm {
                cfg.eps_admissibility = eps;
            }
            if let Some(eps) = eps_gap {
                cfg.eps_gap = eps;
            }
            if let Some(levels) = levels {
                cfg.levels = levels;
            }
            if let Some(res) = resolutions {
                cfg.resolutions = res;
            }
            if let Some(named) = surfaces {
                cfg.surfaces = if named.len() == 1 && named[0] == "all" {
                    zoo_names().iter().map(|s| s.to_string()).collect()
                } else {
                    named
                };
            }
            if let Some(named) = suites {
                cfg.suites = if named.len() == 1 && named[0] == "all" {
                    Suite::ALL.to_vec()
                } else {
                    named
                        .iter()
                        .map(|s| Suite::parse(s))
                        .collect::<Result<_>>()?
                };
            }
            let outcome = run(&cfg)?;
            for file in &outcome.files {
                println!("wrote {}", file.display());
            }
            println!(
                "rows = {}, failed rows = {}, hard failures = {}",
                outcome.rows,
                outcome.failed_rows,
                outcome.hard_failures.len()
            );
            for h in &outcome.hard_failures {
                println!("hard failure: {h}");
            }
            Ok(outcome.hard_failures.is_empty())
        }
    }
}
