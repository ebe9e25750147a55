use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gasket_bvp::extension::{growth_csv, obstruction_experiment, OBSTRUCTION_MAX_N};
use gasket_bvp::flux::normal_derivative;
use gasket_bvp::greens::{solution_flux, GreenKernel};
use gasket_bvp::ratios::{ratio_triple, sweep};
use gasket_bvp::verify::{self, Group, VerifyConfig};
use gasket_bvp::{DomainMask, DyadicSequence, GasketError, GasketMesh, HaarSpectrum, HarmonicBasis, MeshFunction, RatioTable};

#[derive(Parser)]
#[command(name = "gasket-bvp", version, about = "Boundary value problems on slices of the Sierpinski gasket")]
struct Cli {
    /// Worker threads for parallel sections (0 = all cores).
    #[arg(long, global = true, env = "GASKET_BVP_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ratios m0, m1, m2 per level, or an (x, m0) sweep as CSV.
    Ratios(RatiosArgs),
    /// Harmonic synthesis, Green's solve or Dirichlet-to-Neumann flux.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Run numerical check groups.
    Verify(VerifyArgs),
    /// Export the level-L graph as JSON.
    Mesh(MeshArgs),
    /// Minimal extension energies for n_j = j, j <= N, as CSV.
    Growth(GrowthArgs),
}

/// Which point `x` to work with.
#[derive(Args, Clone)]
#[group(required = false, multiple = false)]
struct XSpec {
    /// Decimal in (0, 1], or any pattern accepted by --pattern.
    #[arg(long)]
    x: Option<String>,
    /// Explicit increasing exponents, e.g. 1,3,5,7.
    #[arg(long)]
    seq: Option<String>,
    /// arith:a,d or periodic:p1,...,pr.
    #[arg(long)]
    pattern: Option<String>,
}

impl XSpec {
    fn resolve(&self, depth: Option<usize>) -> Result<DyadicSequence, CliError> {
        let spec = match (&self.x, &self.seq, &self.pattern) {
            (Some(x), _, _) => x.clone(),
            (_, Some(s), _) => format!("seq:{s}"),
            (_, _, Some(p)) => p.clone(),
            _ => return Err(CliError::Usage("one of --x, --seq or --pattern is required".into())),
        };
        Ok(DyadicSequence::parse_spec(&spec, depth)?)
    }
}

#[derive(Args)]
struct RatiosArgs {
    #[command(flatten)]
    x: XSpec,
    /// Truncation depth K.
    #[arg(long)]
    depth: Option<usize>,
    /// a:b:n sweeps n evenly spaced x in [a, b].
    #[arg(long, conflicts_with_all = ["x", "seq", "pattern"])]
    sweep: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SolveCommand {
    /// Harmonic function with the given spectrum, as mesh CSV on the domain.
    Harmonic(HarmonicArgs),
    /// -Δu = F with zero boundary values through the truncated Green's kernel.
    Green(GreenArgs),
    /// Normal derivative on the slice for the given spectrum, as JSON.
    Dtn(DtnArgs),
}

#[derive(Args)]
struct HarmonicArgs {
    #[command(flatten)]
    x: XSpec,
    #[arg(long)]
    depth: Option<usize>,
    /// Spectrum JSON: {"a":..,"b":..,"coeffs":[{"word":"12","c":..}]}.
    #[arg(long)]
    spectrum: PathBuf,
    #[arg(long, default_value_t = 8)]
    level: u32,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GreenArgs {
    #[command(flatten)]
    x: XSpec,
    /// const:c, or a mesh CSV file csv:path at the solve level.
    #[arg(long, default_value = "const:1")]
    forcing: String,
    /// Kernel truncation m.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Mesh level; defaults to n_m + 3.
    #[arg(long)]
    level: Option<u32>,
    /// Also write the boundary flux as JSON.
    #[arg(long)]
    flux_out: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DtnArgs {
    #[command(flatten)]
    x: XSpec,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    spectrum: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Group to run; repeatable.
    #[arg(long = "group", value_enum, required_unless_present = "all")]
    groups: Vec<GroupArg>,
    #[arg(long, conflicts_with = "groups")]
    all: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Write the reports as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GroupArg {
    Ratios,
    Golden,
    Oracle,
    Energies,
    Dtn,
    Glue,
    Extension,
    Hausdorff,
    Green,
}

impl From<GroupArg> for Group {
    fn from(g: GroupArg) -> Self {
        match g {
            GroupArg::Ratios => Group::Ratios,
            GroupArg::Golden => Group::Golden,
            GroupArg::Oracle => Group::Oracle,
            GroupArg::Energies => Group::Energies,
            GroupArg::Dtn => Group::Dtn,
            GroupArg::Glue => Group::Glue,
            GroupArg::Extension => Group::Extension,
            GroupArg::Hausdorff => Group::Hausdorff,
            GroupArg::Green => Group::Green,
        }
    }
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long)]
    level: u32,
    /// Adds per-vertex domain flags for this x.
    #[command(flatten)]
    x: XSpec,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GrowthArgs {
    #[arg(long, default_value_t = 2)]
    n_min: u32,
    #[arg(long, default_value_t = 7)]
    n_max: u32,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Lib(GasketError),
    Io(String),
}

impl From<GasketError> for CliError {
    fn from(e: GasketError) -> Self {
        CliError::Lib(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Io(s) => f.write_str(s),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Caps the depth at the number of exponents visible at `level`.
fn fit_to_level(seq: DyadicSequence, level: u32) -> Result<DyadicSequence, CliError> {
    let k = (1..=seq.depth()).take_while(|&k| seq.n(k) <= level).count();
    if k == 0 {
        return Err(CliError::Usage(format!("level {level} is below n_1 = {}", seq.n(1))));
    }
    Ok(seq.with_depth(k)?)
}

fn cmd_ratios(a: &RatiosArgs) -> Result<(), CliError> {
    if let Some(sw) = &a.sweep {
        let parts: Vec<&str> = sw.split(':').collect();
        let bad = || CliError::Usage(format!("--sweep expects a:b:n, got '{sw}'"));
        let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let n: usize = n.parse().map_err(|_| bad())?;
        let mut csv = String::from("x,m0\n");
        for (x, m0) in sweep(lo, hi, n, a.depth.unwrap_or(gasket_bvp::dyadic::DEFAULT_DEPTH))? {
            csv.push_str(&format!("{x:.17e},{m0:.17e}\n"));
        }
        return emit(a.out.as_deref(), &csv);
    }
    let seq = a.x.resolve(a.depth)?;
    let table = RatioTable::compute(&seq)?;
    let t = ratio_triple(&seq)?;
    let mut j = table.to_json();
    j["exponents"] = serde_json::json!(seq.exponents());
    j["periodic"] = serde_json::json!(seq.is_periodic());
    j["m0"] = serde_json::json!(t.m0);
    j["m1"] = serde_json::json!(t.m1);
    j["m2"] = serde_json::json!(t.m2);
    emit(a.out.as_deref(), &pretty(&j))
}

fn cmd_harmonic(a: &HarmonicArgs) -> Result<(), CliError> {
    let seq = fit_to_level(a.x.resolve(a.depth)?, a.level)?;
    let spectrum = HaarSpectrum::from_json(&read(&a.spectrum)?)?;
    let mesh = GasketMesh::shared(a.level)?;
    let f = HarmonicBasis::new(&seq)?.synthesize(&mesh, &spectrum)?;
    emit(a.out.as_deref(), &f.to_csv(&mesh))
}

fn forcing(spec: &str, mesh: &GasketMesh) -> Result<MeshFunction, CliError> {
    if let Some(c) = spec.strip_prefix("const:") {
        let c: f64 = c.parse().map_err(|_| CliError::Usage(format!("bad constant in '{spec}'")))?;
        Ok(MeshFunction::constant(mesh, c))
    } else if let Some(p) = spec.strip_prefix("csv:") {
        Ok(MeshFunction::from_csv(mesh, &read(Path::new(p))?)?)
    } else {
        Err(CliError::Usage(format!("--forcing expects const:c or csv:path, got '{spec}'")))
    }
}

fn cmd_green(a: &GreenArgs) -> Result<(), CliError> {
    if a.m == 0 {
        return Err(CliError::Usage("--m must be at least 1".into()));
    }
    let seq = a.x.resolve(Some(a.m + 1))?.truncated();
    if seq.depth() < a.m + 1 {
        return Err(CliError::Usage(format!("x has only {} exponents; --m must be below that", seq.depth())));
    }
    let level = a.level.unwrap_or(seq.n(a.m) + 3);
    let mesh = GasketMesh::shared(level)?;
    let f = forcing(&a.forcing, &mesh)?;
    let kernel = GreenKernel::new(&seq, a.m, mesh.clone())?;
    let u = kernel.solve(&f)?;
    if let Some(p) = &a.flux_out {
        let flux = solution_flux(&kernel, &f)?;
        emit(Some(p), &pretty(&serde_json::to_value(&flux).expect("serializable")))?;
    }
    emit(a.out.as_deref(), &u.to_csv(&mesh))
}

fn cmd_dtn(a: &DtnArgs) -> Result<(), CliError> {
    let seq = a.x.resolve(a.depth)?;
    let spectrum = HaarSpectrum::from_json(&read(&a.spectrum)?)?;
    let flux = normal_derivative(&seq, &spectrum)?;
    emit(a.out.as_deref(), &pretty(&flux.to_json()))
}

/// Exit code 1 if any check failed.
fn cmd_verify(a: &VerifyArgs) -> Result<bool, CliError> {
    let cfg = VerifyConfig { seed: a.seed, trials: a.trials, x: a.x, m: a.m };
    let groups: Vec<Group> = if a.all { Group::ALL.to_vec() } else { a.groups.iter().map(|&g| g.into()).collect() };
    let mut reports = Vec::new();
    for g in groups {
        let r = verify::run(g, &cfg)?;
        print!("{r}");
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed);
    println!("{}", if passed { "all checks passed" } else { "some checks FAILED" });
    if let Some(p) = &a.json {
        emit(Some(p), &pretty(&serde_json::to_value(&reports).expect("serializable")))?;
    }
    Ok(passed)
}

fn cmd_mesh(a: &MeshArgs) -> Result<(), CliError> {
    let mesh = GasketMesh::shared(a.level)?;
    let mut j = mesh.to_json();
    if a.x.x.is_some() || a.x.seq.is_some() || a.x.pattern.is_some() {
        let seq = fit_to_level(a.x.resolve(a.depth)?, a.level)?;
        let mask = DomainMask::omega(&mesh, &seq, seq.depth())?;
        j["depth"] = serde_json::json!(seq.depth());
        j["flags"] = serde_json::to_value(mask.flags()).expect("serializable");
    }
    emit(a.out.as_deref(), &(j.to_string() + "\n"))
}

fn cmd_growth(a: &GrowthArgs) -> Result<(), CliError> {
    if a.n_min < 2 || a.n_max > OBSTRUCTION_MAX_N || a.n_min > a.n_max {
        return Err(CliError::Usage(format!("need 2 <= n-min <= n-max <= {OBSTRUCTION_MAX_N}")));
    }
    let rows = obstruction_experiment(a.n_min..=a.n_max)?;
    emit(a.out.as_deref(), &growth_csv(&rows))
}

fn run(cli: Cli) -> Result<bool, CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Ratios(a) => cmd_ratios(a)?,
        Command::Solve(SolveCommand::Harmonic(a)) => cmd_harmonic(a)?,
        Command::Solve(SolveCommand::Green(a)) => cmd_green(a)?,
        Command::Solve(SolveCommand::Dtn(a)) => cmd_dtn(a)?,
        Command::Verify(a) => return cmd_verify(a),
        Command::Mesh(a) => cmd_mesh(a)?,
        Command::Growth(a) => cmd_growth(a)?,
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
