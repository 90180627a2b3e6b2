//! `willmore`: evaluation, constructions, constrained flow and sweeps.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use willmore::axisym::{axisym_functionals, make_hump_stack_curve};
use willmore::constructions::{build_gamma_t, build_sigma_g, catenoid_bridge_params, ConstructionError, SigmaConfig, SigmaVariant};
use willmore::functionals::{self, fmt_sig, FunctionalReport};
use willmore::mesh::{revolve_profile, validate, TriangleMesh};
use willmore::mobius::{blow_down_sweep, blow_up_sweep, default_ray_vertex, BlowUpConfig, SweepSeries};
use willmore::obj::{parse_obj, write_obj};
use willmore::optimizer::{estimate_beta0, run_flow, FlowConfig, OptimizerError};
use willmore::{Vec3, VERSION};

const OUT_DIR_ENV: &str = "WILLMORE_OUT_DIR";

#[derive(Parser, Serialize)]
#[command(name = "willmore", version, about = "Willmore energy and total mean curvature ratio experiments")]
struct Cli {
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory (default: $WILLMORE_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Print W, T, A, V, iso and ∫H of an OBJ mesh.
    Eval {
        mesh: PathBuf,
        /// Also write the report as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Build an explicit surface and write OBJ plus a JSON report.
    Construct {
        #[command(subcommand)]
        kind: Construct,
    },
    /// Run the constrained flow from an OBJ mesh.
    Flow(FlowArgs),
    /// Parameter sweeps written as CSV.
    Sweep {
        #[command(subcommand)]
        kind: Sweep,
    },
}

#[derive(Subcommand, Serialize)]
enum Construct {
    /// Two spheres joined by a catenoidal bridge.
    Bridge {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 96)]
        n_phi: usize,
    },
    /// Genus-g surfaces built from the bridged spheres.
    Sigma {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1)]
        genus: usize,
        #[arg(long, value_enum, default_value_t = Variant::One)]
        variant: Variant,
        #[arg(long, default_value_t = 96)]
        n_phi: usize,
        /// Angular radius of each handle cut.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Axisymmetric stack of humps with negative total mean curvature.
    Humps {
        #[arg(long)]
        n: usize,
        #[arg(long = "R")]
        r: f64,
        #[arg(long, default_value_t = 0.05)]
        max_ds: f64,
        #[arg(long, default_value_t = 64)]
        n_phi: usize,
    },
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
enum Variant {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
}

#[derive(Args, Serialize)]
struct FlowArgs {
    mesh: PathBuf,
    /// JSON file with FlowConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "R")]
    target_r: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    constraint_tolerance: Option<f64>,
    #[arg(long)]
    residual_tolerance: Option<f64>,
}

#[derive(Subcommand, Serialize)]
enum Sweep {
    /// T of sphere inversions with centers receding along a ray.
    Blowdown {
        #[arg(long)]
        mesh: PathBuf,
        /// `start:end:geom[:count]`, `start:end:lin[:count]` or a comma list.
        #[arg(long, default_value = "8:256:geom")]
        radii: String,
        #[arg(long, default_value = "1,0.3,0.2")]
        direction: String,
    },
    /// T of inversions centered ever closer to a surface point.
    Blowup {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long, default_value = "0.5:0.02:geom")]
        t_values: String,
        #[arg(long)]
        vertex: Option<usize>,
    },
    /// Best constrained minimum of W over seeds for each ratio R.
    Beta0 {
        #[arg(long, default_value = "7.2,7.6,8.0,8.5")]
        grid: String,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long, default_value_t = 3)]
        subdivisions: usize,
    },
}

#[derive(Debug, thiserror::Error)]
enum Failure {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validate(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    NotConverged(String),
    #[error("{0}")]
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Parse(_) => 2,
            Self::Validate(_) => 3,
            Self::Precondition(_) | Self::Io(_) => 4,
            Self::NotConverged(_) => 5,
        }
    }
}

impl From<ConstructionError> for Failure {
    fn from(e: ConstructionError) -> Self {
        Self::Precondition(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

struct Ctx {
    out_dir: PathBuf,
    comment: String,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
        Ok(p)
    }

    fn write_mesh(&self, name: &str, mesh: &TriangleMesh) -> Result<PathBuf, Failure> {
        let p = self.path(name);
        write_obj(mesh, &p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
        Ok(p)
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<PathBuf, Failure> {
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        self.write(name, &(text + "\n"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir).map_err(|e| Failure::Io(format!("{}: {e}", out_dir.display())))?;
    let config = serde_json::to_string(&cli.command).map_err(|e| Failure::Io(e.to_string()))?;
    let ctx = Ctx { out_dir, comment: format!("willmore {VERSION} config={config}") };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(Failure::Precondition("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| Failure::Io(e.to_string()))?;
    pool.install(|| match &cli.command {
        Command::Eval { mesh, csv } => cmd_eval(&ctx, mesh, csv.as_deref()),
        Command::Construct { kind } => cmd_construct(&ctx, kind),
        Command::Flow(args) => cmd_flow(&ctx, args),
        Command::Sweep { kind } => cmd_sweep(&ctx, kind),
    })
}

fn load_mesh(path: &Path) -> Result<TriangleMesh, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    let mesh = parse_obj(&text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
    let diag = validate(&mesh);
    let ok = diag.closed_manifold && diag.orientation_coherent && diag.no_isolated_vertices && diag.no_degenerate_faces;
    if !ok {
        eprintln!("{}", serde_json::to_string(&diag).unwrap_or_default());
        return Err(Failure::Validate(format!("{} is not a valid closed oriented surface", path.display())));
    }
    Ok(mesh)
}

fn evaluate(mesh: &TriangleMesh) -> Result<FunctionalReport, Failure> {
    functionals::evaluate(mesh).map_err(|e| Failure::Validate(e.to_string()))
}

fn report_json(rep: &FunctionalReport) -> serde_json::Value {
    json!({ "W": rep.w, "T": rep.t, "A": rep.a, "V": rep.v, "iso": rep.iso, "intH": rep.total_mean_curvature })
}

fn cmd_eval(ctx: &Ctx, mesh: &Path, csv: Option<&Path>) -> Result<(), Failure> {
    let rep = evaluate(&load_mesh(mesh)?)?;
    let names = ["W", "T", "A", "V", "iso", "intH"];
    let values = [rep.w, rep.t, rep.a, rep.v, rep.iso, rep.total_mean_curvature];
    for (n, v) in names.iter().zip(values) {
        println!("{n} = {}", fmt_sig(v));
    }
    if let Some(p) = csv {
        let text = format!("# {}\n{}\n{}\n", ctx.comment, FunctionalReport::CSV_HEADER, rep.csv_row());
        std::fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn cmd_construct(ctx: &Ctx, kind: &Construct) -> Result<(), Failure> {
    match *kind {
        Construct::Bridge { t, n_phi } => {
            let params = catenoid_bridge_params(t)?;
            let mesh = build_gamma_t(t, n_phi)?;
            let rep = evaluate(&mesh)?;
            let obj = ctx.write_mesh(&format!("bridge_t{t}.obj"), &mesh)?;
            let value = json!({
                "config": ctx.comment,
                "kind": "bridge",
                "t": t,
                "predicted_W": params.gamma_energy(),
                "discrete": report_json(&rep),
                "params": params,
                "mesh": obj,
            });
            ctx.write_json(&format!("bridge_t{t}.json"), &value)?;
            println!("W = {} (predicted {})", fmt_sig(rep.w), fmt_sig(params.gamma_energy()));
        }
        Construct::Sigma { t, genus, variant, n_phi, eps } => {
            let params = catenoid_bridge_params(t)?;
            let cfg = SigmaConfig { n_phi, eps_handle: eps, ..Default::default() };
            let (v, tag) = match variant {
                Variant::One => (SigmaVariant::One, 1),
                Variant::Two => (SigmaVariant::Two, 2),
            };
            let mesh = build_sigma_g(t, genus, v, &cfg)?;
            let rep = evaluate(&mesh)?;
            let diag = validate(&mesh);
            let stem = format!("sigma{tag}_g{genus}_t{t}");
            let obj = ctx.write_mesh(&format!("{stem}.obj"), &mesh)?;
            let value = json!({
                "config": ctx.comment,
                "kind": "sigma",
                "variant": tag,
                "t": t,
                "genus": diag.genus,
                "predicted_W": params.sigma_energy(genus),
                "sqrt_32pi": (32.0 * PI).sqrt(),
                "discrete": report_json(&rep),
                "mesh": obj,
            });
            ctx.write_json(&format!("{stem}.json"), &value)?;
            println!("genus = {:?} W = {} T = {}", diag.genus, fmt_sig(rep.w), fmt_sig(rep.t));
        }
        Construct::Humps { n, r, max_ds, n_phi } => {
            let curve = make_hump_stack_curve(n, r, max_ds).map_err(|e| Failure::Precondition(e.to_string()))?;
            let rep = axisym_functionals(&curve).map_err(|e| Failure::Precondition(e.to_string()))?;
            let mesh = revolve_profile(&curve, n_phi).map_err(|e| Failure::Precondition(e.to_string()))?;
            let stem = format!("humps_n{n}_R{r}");
            ctx.write(&format!("{stem}.csv"), &format!("# {}\n{}", ctx.comment, curve.to_csv()))?;
            let obj = ctx.write_mesh(&format!("{stem}.obj"), &mesh)?;
            let value = json!({
                "config": ctx.comment,
                "kind": "humps",
                "n": n,
                "R": r,
                "predicted_intH_slope_per_hump": -2.0 * PI * PI * r,
                "profile": rep,
                "mesh": obj,
            });
            ctx.write_json(&format!("{stem}.json"), &value)?;
            println!("intH = {} W = {}", fmt_sig(rep.int_h), fmt_sig(rep.w));
        }
    }
    Ok(())
}

fn flow_config(args: &FlowArgs) -> Result<FlowConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Parse(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<FlowConfig>(&text).map_err(|e| Failure::Parse(format!("{}: {e}", p.display())))?
        }
        None => FlowConfig::default(),
    };
    if let Some(v) = args.target_r {
        cfg.target_r = v;
    }
    if let Some(v) = args.step {
        cfg.step = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iters = v;
    }
    if let Some(v) = args.constraint_tolerance {
        cfg.constraint_tolerance = v;
    }
    if let Some(v) = args.residual_tolerance {
        cfg.residual_tolerance = v;
    }
    cfg.validate().map_err(|e| Failure::Precondition(e.to_string()))?;
    Ok(cfg)
}

fn cmd_flow(ctx: &Ctx, args: &FlowArgs) -> Result<(), Failure> {
    let cfg = flow_config(args)?;
    let mesh = load_mesh(&args.mesh)?;
    let comment = format!("{} flow={}", ctx.comment, serde_json::to_string(&cfg).unwrap_or_default());
    let (outcome, failure) = match run_flow(&mesh, &cfg) {
        Ok(o) => (o, None),
        Err(e) => match e.partial() {
            Some(p) => (p.clone(), Some(Failure::NotConverged(e.to_string()))),
            None => {
                return Err(match e {
                    OptimizerError::Config(m) => Failure::Precondition(m),
                    OptimizerError::SphereDegenerate(_) => Failure::Precondition(e.to_string()),
                    other => Failure::NotConverged(other.to_string()),
                })
            }
        },
    };
    ctx.write("flow_trace.csv", &outcome.trace.to_csv(&comment))?;
    ctx.write_mesh("flow_final.obj", &outcome.mesh)?;
    if let Some(last) = outcome.trace.last() {
        println!(
            "iterations = {} W = {} T = {} lambda = {} residual = {}",
            outcome.trace.records.len(),
            fmt_sig(last.w),
            fmt_sig(last.t),
            fmt_sig(last.lambda),
            fmt_sig(last.residual)
        );
    }
    failure.map_or(Ok(()), Err)
}

fn parse_list(text: &str) -> Result<Vec<f64>, Failure> {
    let bad = |m: String| Failure::Parse(format!("bad list {text:?}: {m}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() >= 3 {
        let a: f64 = parts[0].trim().parse().map_err(|e| bad(format!("{e}")))?;
        let b: f64 = parts[1].trim().parse().map_err(|e| bad(format!("{e}")))?;
        let n: usize = match parts.get(3) {
            Some(s) => s.trim().parse().map_err(|e| bad(format!("{e}")))?,
            None => 8,
        };
        if n < 2 {
            return Err(bad("need at least two points".into()));
        }
        let f = |k: usize| k as f64 / (n - 1) as f64;
        return match parts[2].trim() {
            "geom" if a > 0.0 && b > 0.0 => Ok((0..n).map(|k| a * (b / a).powf(f(k))).collect()),
            "geom" => Err(bad("geometric ends must be positive".into())),
            "lin" => Ok((0..n).map(|k| a + (b - a) * f(k)).collect()),
            other => Err(bad(format!("unknown spacing {other:?}"))),
        };
    }
    text.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| bad(format!("{e}")))).collect()
}

fn write_series(ctx: &Ctx, name: &str, series: &SweepSeries) -> Result<(), Failure> {
    ctx.write(name, &series.to_csv(&ctx.comment))?;
    if let Some(p) = series.fitted_exponent {
        println!("fitted exponent = {}", fmt_sig(p));
    }
    if let Some((param, t, _)) = series.last_valid() {
        println!("last valid: param = {} T = {}", fmt_sig(param), fmt_sig(t));
    }
    if series.errors.iter().all(|e| e.is_some()) {
        return Err(Failure::NotConverged("every sweep row failed".into()));
    }
    Ok(())
}

fn cmd_sweep(ctx: &Ctx, kind: &Sweep) -> Result<(), Failure> {
    match kind {
        Sweep::Blowdown { mesh, radii, direction } => {
            let radii = parse_list(radii)?;
            let d = parse_list(direction)?;
            if d.len() != 3 {
                return Err(Failure::Parse("direction needs three components".into()));
            }
            let mesh = load_mesh(mesh)?;
            let series = blow_down_sweep(&mesh, Vec3::new(d[0], d[1], d[2]), &radii)
                .map_err(|e| Failure::Precondition(e.to_string()))?;
            write_series(ctx, "blowdown.csv", &series)
        }
        Sweep::Blowup { mesh, t_values, vertex } => {
            let ts = parse_list(t_values)?;
            let mesh = load_mesh(mesh)?;
            let v = vertex.unwrap_or_else(|| default_ray_vertex(&mesh));
            let series = blow_up_sweep(&mesh, v, &ts, &BlowUpConfig::default())
                .map_err(|e| Failure::Precondition(e.to_string()))?;
            write_series(ctx, "blowup.csv", &series)
        }
        Sweep::Beta0 { grid, seeds, subdivisions } => {
            let grid = parse_list(grid)?;
            if grid.iter().any(|r| !(r.is_finite() && *r > 0.0 && *r < (32.0 * PI).sqrt())) {
                return Err(Failure::Precondition("every R must lie in (0, √(32π))".into()));
            }
            let table = estimate_beta0(&grid, *seeds, *subdivisions, &FlowConfig::default());
            ctx.write("beta0.csv", &table.to_csv(&ctx.comment))?;
            println!("monotone = {} below_8pi = {}", table.monotone, table.below_8pi);
            if table.rows.iter().all(|r| r.error.is_some()) {
                return Err(Failure::NotConverged("every grid cell failed".into()));
            }
            Ok(())
        }
    }
}
