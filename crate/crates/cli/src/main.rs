use std::path::PathBuf;
use std::process::ExitCode;

use bgk_hybrid::benchmarks::{
    apply_overrides, build_problem, convergence_csv, emit, l1_error, l2_error, linf_error, load_config, run, self_convergence,
    write_convergence, ConfigOverrides, Scheme, StoredRun,
};
use bgk_hybrid::hybrid::PredictorFlux;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bgk-hybrid", version, about = "Hybrid DG solver for the 1D BGK equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one benchmark problem and write profile.csv, steps.csv, manifest.json.
    Solve {
        /// asymptotic, accuracy, sod, lax, shu-osher or gas-injection
        #[arg(long, required_unless_present = "config")]
        problem: Option<String>,
        /// TOML problem description; flags given alongside override it.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        params: Params,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Density self-convergence study over degrees and Knudsen numbers.
    Converge {
        #[arg(long, default_value = "accuracy")]
        problem: String,
        /// Polynomial degrees N (DG N+1).
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        orders: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,1e-1,1e-2,1e-6")]
        eps_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
        nx_list: Vec<usize>,
        #[arg(long)]
        scheme: Option<Scheme>,
        #[arg(long)]
        nv: Option<usize>,
        #[arg(long)]
        tfinal: Option<f64>,
        /// Directory for one `N_x,error,order` table per (degree, ε).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Difference between two stored runs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = Norm::L2)]
        norm: Norm,
        #[arg(long, default_value = "rho")]
        field: String,
    },
}

#[derive(clap::Args)]
struct Params {
    #[arg(long)]
    scheme: Option<Scheme>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    nv: Option<usize>,
    /// Polynomial degree N (DG N+1).
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    tfinal: Option<f64>,
    #[arg(long)]
    vmax: Option<f64>,
    /// TVB constant M, or `off`.
    #[arg(long)]
    limiter: Option<String>,
    #[arg(long, value_enum)]
    predictor: Option<Predictor>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    L1,
    L2,
    Linf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Predictor {
    Literal,
    Buildup,
}

impl Params {
    fn overrides(&self) -> Result<ConfigOverrides, String> {
        let limiter = match self.limiter.as_deref() {
            None => None,
            Some("off" | "none") => Some(None),
            Some(m) => Some(Some(
                m.parse::<f64>()
                    .map_err(|_| format!("--limiter expects a number or 'off', got '{m}'"))?,
            )),
        };
        Ok(ConfigOverrides {
            nx: self.nx,
            nv: self.nv,
            degree: self.order,
            epsilon: self.eps,
            cfl: self.cfl,
            t_final: self.tfinal,
            v_max: self.vmax,
            scheme: self.scheme,
            limiter,
            predictor: self.predictor.map(|p| match p {
                Predictor::Literal => PredictorFlux::Literal,
                Predictor::Buildup => PredictorFlux::Buildup,
            }),
        })
    }
}

fn solve(
    problem: Option<String>,
    config: Option<PathBuf>,
    params: &Params,
    out: Option<PathBuf>,
) -> Result<(), String> {
    let overrides = params.overrides()?;
    let cfg = match (config, problem) {
        (Some(path), _) => {
            let mut cfg = load_config(&path).map_err(|e| e.to_string())?;
            apply_overrides(&mut cfg, &overrides);
            cfg.validate().map_err(|e| e.to_string())?;
            cfg
        }
        (None, Some(name)) => build_problem(&name, &overrides).map_err(|e| e.to_string())?,
        (None, None) => return Err("either --problem or --config is required".into()),
    };
    let result = run(&cfg).map_err(|e| format!("{}: {e}", cfg.name))?;
    println!(
        "{} {:?}: {} steps to t = {}, Λ ∈ [{:.4}, {:.4}], {:.2} s",
        cfg.name,
        cfg.scheme,
        result.steps,
        result.final_time,
        result.lambda_range.0,
        result.lambda_range.1,
        result.wall_time.as_secs_f64()
    );
    if let Some(dir) = out {
        emit(&result, &dir).map_err(|e| e.to_string())?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn converge(
    problem: &str,
    degrees: &[usize],
    eps_list: &[f64],
    nx_list: &[usize],
    base: ConfigOverrides,
    out: Option<PathBuf>,
) -> Result<(), String> {
    for &degree in degrees {
        for &eps in eps_list {
            let overrides = ConfigOverrides {
                degree: Some(degree),
                epsilon: Some(eps),
                ..base.clone()
            };
            let cfg = build_problem(problem, &overrides).map_err(|e| e.to_string())?;
            let rows = self_convergence(&cfg, nx_list).map_err(|e| e.to_string())?;
            println!("# DG{} eps={eps:e}", degree + 1);
            print!("{}", convergence_csv(&rows));
            if let Some(dir) = &out {
                let path = dir.join(format!("{problem}_dg{}_eps{eps:e}.csv", degree + 1));
                write_convergence(&rows, &path).map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(())
}

fn compare(a: &PathBuf, b: &PathBuf, norm: Norm, field: &str) -> Result<(), String> {
    let ra = StoredRun::load(a).map_err(|e| e.to_string())?;
    let rb = StoredRun::load(b).map_err(|e| e.to_string())?;
    let fa = ra.field(field).map_err(|e| e.to_string())?;
    let fb = rb.field(field).map_err(|e| e.to_string())?;
    let d = match norm {
        Norm::L1 => l1_error(&fa, &fb),
        Norm::L2 => l2_error(&fa, &fb),
        Norm::Linf => linf_error(&fa, &fb),
    }
    .map_err(|e| e.to_string())?;
    println!("{d:.11e}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve {
            problem,
            config,
            params,
            out,
        } => solve(problem, config, &params, out),
        Command::Converge {
            problem,
            orders,
            eps_list,
            nx_list,
            scheme,
            nv,
            tfinal,
            out,
        } => converge(
            &problem,
            &orders,
            &eps_list,
            &nx_list,
            ConfigOverrides {
                scheme,
                nv,
                t_final: tfinal,
                ..Default::default()
            },
            out,
        ),
        Command::Compare { a, b, norm, field } => compare(&a, &b, norm, &field),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
