use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lp_resolvent::config::{parse_config, CheckName, Checks, Format, RunConfig, SpaceConfig, OUTPUT_DIR_ENV};
use lp_resolvent::geometry::moduli::{modulus_convexity_estimate, modulus_smoothness_estimate, rho_ceiling};
use lp_resolvent::harness::SearchTarget;
use lp_resolvent::operators::OperatorDecl;
use lp_resolvent::resolvent::{solve_resolvent, ResolventProblem};
use lp_resolvent::run::{fmt_f64, run, RunOptions, RunOutcome, EXIT_ERROR};
use lp_resolvent::{Error, Exec, MonotoneOperatorSpec, Result, SamplerConfig, SpaceDescriptor};

/// Geometry, resolvents and inequality verification in finite-dimensional ℓ_p.
#[derive(Parser)]
#[command(name = "lpres", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification harness.
    Verify(RunArgs),
    /// Hölder fits for J and the resolvent, with plot data.
    Fit(RunArgs),
    /// Adversarial search on the bounds.
    Search {
        #[command(flatten)]
        run: RunArgs,
        /// Search targets (theorem_main1, normalization_inequality, estimate_mu, keylem1). Default: all applicable.
        #[arg(long = "target", value_delimiter = ',')]
        targets: Vec<SearchTarget>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Solve a single resolvent problem and print z and the residual.
    Resolve(ResolveArgs),
    /// Table of estimated moduli of smoothness and convexity.
    Moduli(ModuliArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; takes precedence over LPRES_OUTPUT_DIR and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    jobs: Option<usize>,
    /// Exponent when no config is given.
    #[arg(long)]
    p: Option<f64>,
    /// Dimension when no config is given.
    #[arg(long)]
    dim: Option<usize>,
    /// Overrides the sample count.
    #[arg(long)]
    count: Option<usize>,
    /// Checks to run, overriding the config.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<CheckName>,
    #[arg(long, hide = true)]
    main1_constant: Option<f64>,
}

#[derive(Args)]
struct ResolveArgs {
    #[arg(long)]
    p: f64,
    /// Operator as inline TOML, e.g. `kind = "subgrad_l1"` and `gamma = 0.5`.
    #[arg(long, default_value = "kind = \"zero\"")]
    operator: String,
    #[arg(long)]
    r: f64,
    /// Comma-separated coordinates of x.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
}

#[derive(Args)]
struct ModuliArgs {
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    count: usize,
    /// Values of τ (for ρ) and ε (for δ, clipped to (0, 2]).
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.1, 0.5, 1.0, 2.0])]
    taus: Vec<f64>,
    #[arg(long)]
    jobs: Option<usize>,
}

fn set_jobs(jobs: Option<usize>, sampler: &mut SamplerConfig) -> Result<()> {
    match jobs {
        Some(0) => Err(Error::Parameter("--jobs must be positive".into())),
        Some(1) => {
            sampler.exec = Exec::Sequential;
            Ok(())
        }
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Parameter(e.to_string())),
        None => Ok(()),
    }
}

fn load_config(args: &RunArgs) -> Result<RunConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut c = parse_config(&text).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
                other => other,
            })?;
            if args.p.is_some() || args.dim.is_some() {
                c.space = SpaceConfig { dim: args.dim.unwrap_or(c.space.dim), p: args.p.unwrap_or(c.space.p) };
            }
            c
        }
        None => RunConfig::new(SpaceConfig { dim: args.dim.unwrap_or(2), p: args.p.unwrap_or(1.5) }, Checks::All),
    };
    if let Some(seed) = args.seed {
        config.sampler.seed = seed;
    }
    if let Some(count) = args.count {
        config.sampler.count = count;
    }
    if let Some(format) = args.format {
        config.format = format;
    }
    if !args.checks.is_empty() {
        config.checks = Checks::List(args.checks.clone());
    }
    if let Some(out) = &args.out {
        config.output_dir = out.clone();
    } else if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|d| !d.is_empty()) {
        config.output_dir = PathBuf::from(dir);
    }
    set_jobs(args.jobs, &mut config.sampler)?;
    config.validate()?;
    Ok(config)
}

fn print_outcome(config: &RunConfig, outcome: &RunOutcome) {
    for note in &outcome.notes {
        println!("note: {note}");
    }
    if let Some(mu) = outcome.mu_hat {
        println!("mu_hat {}", fmt_f64(mu));
    }
    for r in &outcome.reports {
        let status = if r.passed { "PASS" } else { "FAIL" };
        let constant = r.estimated_constant.map(|c| format!(" constant={}", fmt_f64(c))).unwrap_or_default();
        println!(
            "{status} {} samples={} violations={} worst_margin={}{constant}",
            r.check_name,
            r.samples,
            r.violations,
            fmt_f64(r.worst_margin)
        );
    }
    for f in &outcome.fits {
        println!(
            "fit {} slope={} intercept={} r_squared={} pairs={}",
            f.name,
            fmt_f64(f.fit.slope),
            fmt_f64(f.fit.intercept),
            fmt_f64(f.fit.r_squared),
            f.fit.n_pairs
        );
    }
    println!("reports written to {}", config.output_dir.display());
}

fn execute_run(config: RunConfig, args: &RunArgs, targets: Option<Vec<SearchTarget>>) -> Result<i32> {
    config.validate()?;
    let opts = RunOptions { m_override: args.main1_constant, targets };
    let outcome = run(&config, &opts)?;
    print_outcome(&config, &outcome);
    Ok(outcome.exit_code())
}

fn resolve(args: &ResolveArgs) -> Result<i32> {
    let space = SpaceDescriptor::new(args.x.len(), args.p)?;
    let decl: OperatorDecl = toml::from_str(&args.operator).map_err(|e| Error::Config(e.to_string()))?;
    let op = MonotoneOperatorSpec::try_from(decl)?;
    let problem = ResolventProblem::new(&space, &op, args.r, args.x.clone());
    let sol = solve_resolvent(&problem)?;
    let z: Vec<String> = sol.z.coords().iter().map(|v| fmt_f64(*v)).collect();
    println!("z = [{}]", z.join(", "));
    println!("residual = {}", fmt_f64(sol.residual));
    println!("method = {}", sol.method.as_str());
    println!("iterations = {}", sol.iterations);
    Ok(0)
}

fn moduli(args: &ModuliArgs) -> Result<i32> {
    let space = SpaceDescriptor::new(args.dim, args.p)?;
    let mut sampler = SamplerConfig::with_seed(args.seed, args.count);
    set_jobs(args.jobs, &mut sampler)?;
    println!("tau,rho_estimate,rho_ceiling,eps,delta_estimate");
    for &tau in &args.taus {
        let rho = modulus_smoothness_estimate(&space, tau, &sampler)?;
        let eps = tau.min(2.0);
        let delta = modulus_convexity_estimate(&space, eps, &sampler)?;
        println!(
            "{},{},{},{},{}",
            fmt_f64(tau),
            fmt_f64(rho),
            fmt_f64(rho_ceiling(&space, tau)),
            fmt_f64(eps),
            fmt_f64(delta)
        );
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Verify(args) => {
            let config = load_config(&args)?;
            execute_run(config, &args, None)
        }
        Command::Fit(args) => {
            let mut config = load_config(&args)?;
            config.checks = Checks::List(vec![CheckName::HolderFit]);
            execute_run(config, &args, None)
        }
        Command::Search { run, targets, restarts, steps } => {
            let mut config = load_config(&run)?;
            config.checks = Checks::List(vec![CheckName::Adversarial]);
            if let Some(r) = restarts {
                config.search.restarts = r;
            }
            if let Some(s) = steps {
                config.search.steps = s;
            }
            let targets = (!targets.is_empty()).then_some(targets);
            execute_run(config, &run, targets)
        }
        Command::Resolve(args) => resolve(&args),
        Command::Moduli(args) => moduli(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_ERROR as u8) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
