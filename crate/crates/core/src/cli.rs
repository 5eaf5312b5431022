//! Command-line front end for the `llg` binary.
//!
//! Every option can come from an INI-style `key = value` file (`--config`)
//! or from a flag of the same name; flags win. Exit codes: 0 success,
//! 1 numerical or I/O failure, 2 usage error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::Error;
use crate::grid::{self, Dim, Grid, VectorField};
use crate::harness::{self, ConvergenceTable, NormStudy, NormTable};
use crate::manufactured::{initial_profile, InitialProfile};
use crate::rotation;
use crate::schemes::{self, ForcingMode, ForcingTime, Scheme, SchemeConfig};
use crate::solvers::{SolverConfig, SolverMethod};
use crate::vec3::{self, Vec3};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    #[value(name = "accuracy-time-1d")]
    AccuracyTime1d,
    #[value(name = "accuracy-space-1d")]
    AccuracySpace1d,
    #[value(name = "accuracy-3d")]
    Accuracy3d,
    #[value(name = "norm-1d")]
    Norm1d,
    #[value(name = "norm-3d")]
    Norm3d,
    Evolve,
    Compare,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::AccuracyTime1d => "accuracy-time-1d",
            Self::AccuracySpace1d => "accuracy-space-1d",
            Self::Accuracy3d => "accuracy-3d",
            Self::Norm1d => "norm-1d",
            Self::Norm3d => "norm-3d",
            Self::Evolve => "evolve",
            Self::Compare => "compare",
            Self::Selftest => "selftest",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub scheme: Scheme,
    pub alpha: f64,
    /// Time steps: one per row for the 1D temporal and norm studies, a
    /// single entry otherwise.
    pub ks: Vec<f64>,
    /// Cells per axis: one per row for the 1D spatial study.
    pub cells: Vec<usize>,
    /// `(steps to T, cells per axis)` for the 3D studies.
    pub levels: Vec<(usize, usize)>,
    /// Step count for `evolve` and `compare`; overrides `ks`.
    pub steps: Option<usize>,
    pub t_end: f64,
    pub t0: f64,
    pub profile: InitialProfile,
    pub forcing_mode: ForcingMode,
    pub forcing_time: ForcingTime,
    pub record_every: usize,
    pub solver: SolverConfig,
    pub out: PathBuf,
    pub finest: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

const KEYS: &[&str] = &[
    "scheme",
    "alpha",
    "k",
    "ks",
    "n",
    "nt",
    "levels",
    "t-end",
    "t0",
    "profile",
    "forcing",
    "forcing-time",
    "record-every",
    "solver",
    "rel-tol",
    "out",
    "finest",
];

#[derive(Debug, Parser)]
#[command(
    name = "llg",
    version,
    allow_negative_numbers = true,
    about = "Norm-preserving LLG solver and convergence studies"
)]
struct Args {
    command: Command,
    /// INI-style `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// proposed, scheme1, scheme3 or bdf1-projection.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// A single time step.
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated time steps.
    #[arg(long)]
    ks: Option<String>,
    /// Cells per axis (comma-separated for accuracy-space-1d).
    #[arg(long)]
    n: Option<String>,
    /// Number of time steps to reach t-end.
    #[arg(long)]
    nt: Option<String>,
    /// Comma-separated `steps:cells` pairs for the 3D studies.
    #[arg(long)]
    levels: Option<String>,
    #[arg(long = "t-end")]
    t_end: Option<String>,
    /// Time argument of the initial profile.
    #[arg(long)]
    t0: Option<String>,
    #[arg(long)]
    profile: Option<String>,
    /// none, direct or rotational.
    #[arg(long)]
    forcing: Option<String>,
    /// start or end of the step.
    #[arg(long = "forcing-time")]
    forcing_time: Option<String>,
    #[arg(long = "record-every")]
    record_every: Option<String>,
    /// auto, direct, cg, gmres or bicgstab.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long = "rel-tol")]
    rel_tol: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Include the 32³ level in the 3D studies.
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    finest: Option<String>,
}

impl Args {
    fn flag_values(&self) -> BTreeMap<&'static str, String> {
        let pairs = [
            ("scheme", &self.scheme),
            ("alpha", &self.alpha),
            ("k", &self.k),
            ("ks", &self.ks),
            ("n", &self.n),
            ("nt", &self.nt),
            ("levels", &self.levels),
            ("t-end", &self.t_end),
            ("t0", &self.t0),
            ("profile", &self.profile),
            ("forcing", &self.forcing),
            ("forcing-time", &self.forcing_time),
            ("record-every", &self.record_every),
            ("solver", &self.solver),
            ("rel-tol", &self.rel_tol),
            ("out", &self.out),
            ("finest", &self.finest),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect()
    }
}

/// Reads a config file into raw key/value strings, rejecting unknown keys
/// and named sections.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, UsageError> {
    let ini = ini::Ini::load_from_file(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (section, props) in ini.iter() {
        if let Some(name) = section {
            return Err(UsageError(format!(
                "config sections are not supported (found [{name}])"
            )));
        }
        for (key, value) in props.iter() {
            let key = key.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(UsageError(format!("unknown config key '{key}'")));
            }
            out.insert(key, value.trim().to_string());
        }
    }
    Ok(out)
}

/// Parses `args` (including the program name) into a validated config.
///
/// Help and version requests come back as `Err` carrying clap's rendered
/// text and exit code 0.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, (String, i32)>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = Args::try_parse_from(args).map_err(|e| {
        let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        (e.render().to_string(), code)
    })?;
    let mut values = match &parsed.config {
        Some(path) => read_config_file(path).map_err(|e| (e.0, EXIT_USAGE))?,
        None => BTreeMap::new(),
    };
    for (k, v) in parsed.flag_values() {
        values.insert(k.to_string(), v);
    }
    resolve(parsed.command, &values).map_err(|e| (e.0, EXIT_USAGE))
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, UsageError>
where
    T::Err: fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| UsageError(format!("invalid value '{raw}' for {key}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, raw: &str) -> Result<Vec<T>, UsageError>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_value(key, s))
        .collect::<Result<_, _>>()?;
    if items.is_empty() {
        return Err(UsageError(format!("{key} needs at least one value")));
    }
    Ok(items)
}

fn parse_levels(raw: &str) -> Result<Vec<(usize, usize)>, UsageError> {
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let (steps, cells) = pair
                .split_once(':')
                .ok_or_else(|| UsageError(format!("level '{pair}' is not steps:cells")))?;
            Ok((parse_value("levels", steps)?, parse_value("levels", cells)?))
        })
        .collect()
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, UsageError> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(UsageError(format!(
            "invalid value '{raw}' for {key}: expected a boolean"
        ))),
    }
}

fn defaults(command: Command) -> RunConfig {
    let base = RunConfig {
        command,
        scheme: Scheme::Proposed,
        alpha: 0.01,
        ks: vec![1e-3],
        cells: vec![2000],
        levels: Vec::new(),
        steps: None,
        t_end: 0.1,
        t0: 0.01,
        profile: InitialProfile::Cosine1d,
        forcing_mode: ForcingMode::Direct,
        forcing_time: ForcingTime::Start,
        record_every: 1,
        solver: SolverConfig::default(),
        out: PathBuf::from("out"),
        finest: false,
    };
    match command {
        Command::AccuracyTime1d | Command::Norm1d => RunConfig {
            ks: harness::TEMPORAL_KS_1D.to_vec(),
            ..base
        },
        Command::AccuracySpace1d => RunConfig {
            ks: vec![1e-6],
            cells: harness::SPATIAL_CELLS_1D.to_vec(),
            ..base
        },
        Command::Accuracy3d | Command::Norm3d => RunConfig {
            levels: harness::COUPLED_LEVELS_3D[..4].to_vec(),
            profile: InitialProfile::Xyz3d,
            ..base
        },
        Command::Evolve => RunConfig {
            cells: vec![20],
            steps: Some(40),
            profile: InitialProfile::Xyz3d,
            ..base
        },
        Command::Compare => RunConfig {
            cells: vec![2000],
            steps: Some(5),
            ..base
        },
        Command::Selftest => base,
    }
}

/// Applies raw key/value overrides to the per-command defaults and validates.
pub fn resolve(
    command: Command,
    values: &BTreeMap<String, String>,
) -> Result<RunConfig, UsageError> {
    let mut cfg = defaults(command);
    for (key, raw) in values {
        match key.as_str() {
            "scheme" => cfg.scheme = parse_value(key, raw)?,
            "alpha" => cfg.alpha = parse_value(key, raw)?,
            "k" => {
                cfg.ks = vec![parse_value(key, raw)?];
                if !values.contains_key("nt") {
                    cfg.steps = None;
                }
            }
            "ks" => cfg.ks = parse_list(key, raw)?,
            "n" => cfg.cells = parse_list(key, raw)?,
            "nt" => cfg.steps = Some(parse_value(key, raw)?),
            "levels" => cfg.levels = parse_levels(raw)?,
            "t-end" => cfg.t_end = parse_value(key, raw)?,
            "t0" => cfg.t0 = parse_value(key, raw)?,
            "profile" => cfg.profile = parse_value(key, raw)?,
            "forcing" => cfg.forcing_mode = parse_value(key, raw)?,
            "forcing-time" => cfg.forcing_time = parse_value(key, raw)?,
            "record-every" => cfg.record_every = parse_value(key, raw)?,
            "solver" => cfg.solver.method = parse_value::<SolverMethod>(key, raw)?,
            "rel-tol" => cfg.solver.rel_tol = parse_value(key, raw)?,
            "out" => cfg.out = PathBuf::from(raw),
            "finest" => cfg.finest = parse_bool(key, raw)?,
            other => return Err(UsageError(format!("unknown option '{other}'"))),
        }
    }
    if cfg.finest && !values.contains_key("levels") {
        cfg.levels = harness::COUPLED_LEVELS_3D.to_vec();
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<(), UsageError> {
    let bad = |msg: String| Err(UsageError(msg));
    if !(cfg.alpha >= 0.0) || !cfg.alpha.is_finite() {
        return bad(format!("alpha must be >= 0, got {}", cfg.alpha));
    }
    if !(cfg.t_end > 0.0) || !cfg.t_end.is_finite() {
        return bad(format!("t-end must be > 0, got {}", cfg.t_end));
    }
    if !cfg.t0.is_finite() {
        return bad("t0 must be finite".into());
    }
    if let Some(k) = cfg.ks.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
        return bad(format!("time steps must be > 0, got {k}"));
    }
    if cfg.cells.iter().any(|&n| n < 2) {
        return bad("grids need at least 2 cells per axis".into());
    }
    if cfg.levels.iter().any(|&(s, n)| s == 0 || n < 2) {
        return bad("levels need steps >= 1 and cells >= 2".into());
    }
    if cfg.steps == Some(0) {
        return bad("nt must be >= 1".into());
    }
    if cfg.record_every == 0 {
        return bad("record-every must be >= 1".into());
    }
    cfg.solver
        .validate()
        .map_err(|e| UsageError(e.to_string()))?;
    let single = |what: &str, n: usize| {
        if n == 1 {
            Ok(())
        } else {
            Err(UsageError(format!("{} takes a single {what}", cfg.command)))
        }
    };
    match cfg.command {
        Command::AccuracyTime1d | Command::Norm1d => single("grid size", cfg.cells.len())?,
        Command::AccuracySpace1d => single("time step", cfg.ks.len())?,
        Command::Evolve | Command::Compare => {
            single("grid size", cfg.cells.len())?;
            if cfg.steps.is_none() {
                single("time step", cfg.ks.len())?;
            }
        }
        _ => {}
    }
    let needs_levels = matches!(cfg.command, Command::Accuracy3d | Command::Norm3d);
    if needs_levels && cfg.levels.is_empty() {
        return bad("3D studies need at least one level".into());
    }
    let table_rows = match cfg.command {
        Command::AccuracyTime1d => cfg.ks.len(),
        Command::AccuracySpace1d => cfg.cells.len(),
        Command::Accuracy3d => cfg.levels.len(),
        _ => 2,
    };
    if table_rows < 2 {
        return bad(format!(
            "{} needs at least two refinement levels",
            cfg.command
        ));
    }
    match cfg.command {
        Command::Norm1d | Command::Compare if cfg.profile.dim() != Dim::One => bad(format!(
            "{} needs a 1D profile, got {}",
            cfg.command, cfg.profile
        )),
        Command::Norm3d if cfg.profile.dim() != Dim::Three => bad(format!(
            "{} needs a 3D profile, got {}",
            cfg.command, cfg.profile
        )),
        _ => Ok(()),
    }
}

/// Parses and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_config(args) {
        Ok(cfg) => run(&cfg),
        Err((msg, code)) => {
            if code == EXIT_OK {
                print!("{msg}");
            } else {
                eprintln!("{}", msg.trim_end());
            }
            code
        }
    }
}

/// Executes a resolved config, writing CSVs under `cfg.out`.
pub fn run(cfg: &RunConfig) -> i32 {
    if cfg.command == Command::Selftest {
        return run_selftest();
    }
    if let Err(source) = std::fs::create_dir_all(&cfg.out) {
        eprintln!("error: cannot create {}: {source}", cfg.out.display());
        return EXIT_FAILURE;
    }
    let result = match cfg.command {
        Command::AccuracyTime1d | Command::AccuracySpace1d | Command::Accuracy3d => {
            run_accuracy(cfg)
        }
        Command::Norm1d | Command::Norm3d => run_norm(cfg),
        Command::Evolve => run_evolve(cfg),
        Command::Compare => run_compare(cfg),
        Command::Selftest => unreachable!(),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidConfig(_)
        | Error::InvalidGrid(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidOrderInput(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

fn output_path(cfg: &RunConfig, name: &str) -> PathBuf {
    cfg.out.join(name)
}

fn run_accuracy(cfg: &RunConfig) -> crate::Result<()> {
    let table: crate::Result<ConvergenceTable> = match cfg.command {
        Command::AccuracyTime1d => harness::run_temporal_study_1d(&harness::TemporalStudy1d {
            cells: cfg.cells[0],
            alpha: cfg.alpha,
            t_end: cfg.t_end,
            ks: cfg.ks.clone(),
            forcing_mode: cfg.forcing_mode,
            forcing_time: cfg.forcing_time,
            solver: cfg.solver.clone(),
        }),
        Command::AccuracySpace1d => harness::run_spatial_study_1d(&harness::SpatialStudy1d {
            k: cfg.ks[0],
            alpha: cfg.alpha,
            t_end: cfg.t_end,
            cells: cfg.cells.clone(),
            forcing_mode: cfg.forcing_mode,
            forcing_time: cfg.forcing_time,
            solver: cfg.solver.clone(),
        }),
        _ => harness::run_coupled_study_3d(&harness::CoupledStudy3d {
            alpha: cfg.alpha,
            t_end: cfg.t_end,
            levels: cfg.levels.clone(),
            forcing_mode: cfg.forcing_mode,
            forcing_time: cfg.forcing_time,
            solver: cfg.solver.clone(),
        }),
    };
    let table = match table {
        Ok(t) => t,
        Err(Error::StudyAborted { partial, source }) => {
            for r in &partial.rows {
                eprintln!(
                    "completed row: k={:e} h={:e} linf={:e}",
                    r.k, r.h, r.err_linf
                );
            }
            return Err(Error::StudyAborted { partial, source });
        }
        Err(e) => return Err(e),
    };
    let path = output_path(
        cfg,
        &format!("{}.csv", cfg.command.name().replace('-', "_")),
    );
    harness::write_table_csv(&table, &path)?;
    harness::write_table(&table, std::io::stdout().lock(), false)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run_norm(cfg: &RunConfig) -> crate::Result<()> {
    let levels = match cfg.command {
        Command::Norm1d => cfg.ks.iter().map(|&k| (k, cfg.cells[0])).collect(),
        _ => cfg
            .levels
            .iter()
            .map(|&(steps, n)| (cfg.t_end / steps as f64, n))
            .collect(),
    };
    let dim = if cfg.command == Command::Norm1d {
        Dim::One
    } else {
        Dim::Three
    };
    let study = NormStudy {
        dim,
        scheme: cfg.scheme,
        alpha: cfg.alpha,
        t_end: cfg.t_end,
        levels,
        profile: cfg.profile,
        profile_t0: cfg.t0,
        record_every: cfg.record_every,
        solver: cfg.solver.clone(),
    };
    let table: NormTable = harness::run_norm_study(&study)?;
    let path = output_path(
        cfg,
        &format!("{}.csv", cfg.command.name().replace('-', "_")),
    );
    harness::write_norm_table_csv(&table, &path)?;
    harness::write_norm_table(&table, std::io::stdout().lock()).map_err(|source| Error::Io {
        path: "<stdout>".into(),
        source,
    })?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn profile_grid(cfg: &RunConfig) -> crate::Result<Grid> {
    match cfg.profile.dim() {
        Dim::One => Grid::new_1d(cfg.cells[0]),
        Dim::Three => Grid::cube(cfg.cells[0]),
    }
}

fn step_size(cfg: &RunConfig) -> f64 {
    match cfg.steps {
        Some(n) => cfg.t_end / n as f64,
        None => cfg.ks[0],
    }
}

fn evolve_profile(cfg: &RunConfig, scheme: Scheme) -> crate::Result<VectorField> {
    let grid = profile_grid(cfg)?;
    let m0 = initial_profile(cfg.profile, &grid, cfg.t0)?;
    let scfg = SchemeConfig {
        scheme,
        alpha: cfg.alpha,
        k: step_size(cfg),
        forcing_mode: ForcingMode::None,
        forcing_time: cfg.forcing_time,
        solver: cfg.solver.clone(),
    };
    let (m, traj) = schemes::evolve(&m0, 0.0, cfg.t_end, &scfg, None, &mut [])?;
    eprintln!(
        "{scheme}: {} steps, max unit deviation {:.3e}, exchange energy {:.6e}",
        traj.steps(),
        traj.max_unit_deviation(),
        grid::exchange_energy(&m)
    );
    Ok(m)
}

fn run_evolve(cfg: &RunConfig) -> crate::Result<()> {
    let m = evolve_profile(cfg, cfg.scheme)?;
    let path = output_path(cfg, &format!("evolve_{}_{}.csv", cfg.profile, cfg.scheme));
    m.write_csv_file(&path)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn run_compare(cfg: &RunConfig) -> crate::Result<()> {
    let a = evolve_profile(cfg, Scheme::Proposed)?;
    let b = evolve_profile(cfg, Scheme::Bdf1Projection)?;
    for (scheme, m) in [(Scheme::Proposed, &a), (Scheme::Bdf1Projection, &b)] {
        let path = output_path(cfg, &format!("compare_{scheme}.csv"));
        m.write_csv_file(&path)?;
        eprintln!("wrote {}", path.display());
    }
    println!(
        "max difference (linf): {:.6e}",
        grid::norm_linf(&a.sub(&b)?)
    );
    Ok(())
}

/// One line of the self-test report.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub worst: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.worst <= self.tolerance
    }
}

fn random_vec(rng: &mut StdRng, scale: f64) -> Vec3 {
    [
        scale * rng.gen_range(-1.0..1.0),
        scale * rng.gen_range(-1.0..1.0),
        scale * rng.gen_range(-1.0..1.0),
    ]
}

/// Rotation-kernel and Laplacian property checks on seeded random data.
pub fn selftest_checks(samples: usize, seed: u64) -> Vec<Check> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut norm = 0.0f64;
    let mut ortho = 0.0f64;
    let mut agree = 0.0f64;
    let mut reverse = 0.0f64;
    for _ in 0..samples {
        let m = random_vec(&mut rng, 1.0);
        let scale = 10f64.powf(rng.gen_range(-2.0..6.0));
        let a = random_vec(&mut rng, scale);
        let dt = 10f64.powf(rng.gen_range(-4.0..0.0));
        let y = rotation::cn_rotate(m, a, dt);
        let len = vec3::norm(m);
        norm = norm.max((vec3::norm(y) - len).abs() / len);
        let c = rotation::cayley_matrix(a, dt);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|r| c[r][i] * c[r][j]).sum();
                let id = if i == j { 1.0 } else { 0.0 };
                ortho = ortho.max((dot - id).abs());
            }
        }
        let cy = rotation::mat_vec(&c, m);
        agree = agree.max(vec3::norm(vec3::sub(cy, y)) / len);
        let back = rotation::cn_rotate(y, vec3::scale(-1.0, a), dt);
        reverse = reverse.max(vec3::norm(vec3::sub(back, m)) / len);
    }

    let mut sym = 0.0f64;
    let mut semidef = 0.0f64;
    let mut constant = 0.0f64;
    for grid in [Grid::new_1d(37).unwrap(), Grid::new_3d(5, 4, 6).unwrap()] {
        let u = VectorField::from_fn(grid, |_| random_vec(&mut rng, 1.0));
        let v = VectorField::from_fn(grid, |_| random_vec(&mut rng, 1.0));
        let lu = grid::laplacian_neumann(&u);
        let lv = grid::laplacian_neumann(&v);
        let a = grid::inner(&u, &lv);
        let b = grid::inner(&lu, &v);
        sym = sym.max((a - b).abs() / a.abs().max(b.abs()).max(1.0));
        semidef = semidef.max(grid::inner(&u, &lu).max(0.0));
        let c = VectorField::constant(grid, random_vec(&mut rng, 1.0));
        constant = constant.max(grid::norm_linf(&grid::laplacian_neumann(&c)));
    }

    vec![
        Check {
            name: "rotation preserves length",
            worst: norm,
            tolerance: 1e-14,
        },
        Check {
            name: "Cayley matrix is orthogonal",
            worst: ortho,
            tolerance: 1e-14,
        },
        Check {
            name: "closed form matches Cayley matrix",
            worst: agree,
            tolerance: 1e-13,
        },
        Check {
            name: "rotation is reversible",
            worst: reverse,
            tolerance: 1e-12,
        },
        Check {
            name: "Laplacian is symmetric",
            worst: sym,
            tolerance: 1e-12,
        },
        Check {
            name: "Laplacian is negative semidefinite",
            worst: semidef,
            tolerance: 1e-12,
        },
        Check {
            name: "Laplacian annihilates constants",
            worst: constant,
            tolerance: 1e-12,
        },
    ]
}

fn run_selftest() -> i32 {
    let checks = selftest_checks(100_000, 2024);
    let mut ok = true;
    for c in &checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        println!(
            "{tag} {} (worst {:.3e}, tolerance {:.0e})",
            c.name, c.worst, c.tolerance
        );
        ok &= c.passed();
    }
    if ok {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}
