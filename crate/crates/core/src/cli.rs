//! Command line front end. Every command produces
//! `{command, config, rows, diagnostics}` as JSON, or the rows as CSV.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::catalog::{bifurcation_record, catalog, enumerate_families, isolated_orbit, FamilyId, OrbitKind};
use crate::error::{Error, Result};
use crate::index::{numeric_cz, rs_family, NumericConfig};
use crate::integrate::IntegratorConfig;
use crate::ledger::compare_with_reference;
use crate::math::gcd;
use crate::moduli::{classify_point, from_sphere_pair, morse_data, to_sphere_pair, level_set_sample, ModuliFunction, SpherePair};
use crate::verify::{run_suite, Suite, VerifyOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Resolved settings of one run; also the schema of `--config` files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    pub jacobi: f64,
    /// Largest cover listed by `catalog`.
    pub covers: u32,
    pub kmax: u64,
    /// Degree cap of `ledger`.
    pub cap: i64,
    pub rtol: f64,
    pub atol: f64,
    pub seed: u64,
    pub format: Format,
    pub output: Option<PathBuf>,
    pub orbit: Option<String>,
    pub cover: u32,
    pub family: Option<String>,
    pub numeric: bool,
    pub suite: Option<String>,
    pub samples: usize,
    pub energy: f64,
    pub point: Option<Vec<f64>>,
    pub invariants: Option<Vec<f64>>,
    pub level: Option<f64>,
    pub morse: Option<ModuliFunction>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            jacobi: -2.1,
            covers: 3,
            kmax: 11,
            cap: 10,
            rtol: 1e-10,
            atol: 1e-10,
            seed: 0,
            format: Format::Json,
            output: None,
            orbit: None,
            cover: 1,
            family: None,
            numeric: false,
            suite: None,
            samples: 100,
            energy: -0.5,
            point: None,
            invariants: None,
            level: None,
            morse: None,
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.covers < 1 || self.kmax < 1 || self.cap < 1 || self.cover < 1 || self.samples < 1 {
            return Err(Error::InvalidArgument("caps, covers and sample counts must be at least 1".into()));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if !self.jacobi.is_finite() || !self.energy.is_finite() {
            return Err(Error::InvalidArgument("energies must be finite".into()));
        }
        Ok(())
    }

    fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::adaptive(self.rtol, self.atol)
    }
}

#[derive(Debug, Parser)]
#[command(name = "kepler-cz", version, about = "Periodic orbits and Conley-Zehnder indices of the rotating Kepler problem")]
pub struct Cli {
    /// Jacobi constant c.
    #[arg(long, global = true, allow_negative_numbers = true)]
    jacobi: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// JSON file with the same fields as the `config` block of the output.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    rtol: Option<f64>,
    #[arg(long, global = true)]
    atol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Isolated orbits and torus families below the critical value.
    Catalog {
        /// Largest cover of the isolated orbits.
        #[arg(long)]
        covers: Option<u32>,
        /// Largest k of the families.
        #[arg(long)]
        kmax: Option<u64>,
    },
    /// Index of one orbit, optionally recomputed from the linearized flow.
    Index {
        /// retrograde | direct | collision+ | collision- | family
        #[arg(long)]
        orbit: Option<String>,
        #[arg(long)]
        cover: Option<u32>,
        /// Family as `k,l`.
        #[arg(long)]
        family: Option<String>,
        /// Integrate the linearized flow and compare with the closed form.
        #[arg(long)]
        numeric: bool,
    },
    /// Points of the moduli space `S^2 x S^2`.
    Moduli {
        /// Kepler energy.
        #[arg(long, allow_negative_numbers = true)]
        energy: Option<f64>,
        /// Classify `x1,x2,x3,y1,y2,y3`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        point: Option<Vec<f64>>,
        /// Map `L1,L2,L3,A1,A2,A3` to the moduli space.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        invariants: Option<Vec<f64>>,
        /// Sample the level set `L3 = value`.
        #[arg(long, allow_negative_numbers = true)]
        level: Option<f64>,
        #[arg(long)]
        samples: Option<usize>,
        /// Critical points of `l3` or `a3`.
        #[arg(long, value_enum)]
        morse: Option<ModuliFunction>,
    },
    /// Birth and death of torus families.
    Bifurcation {
        /// Family as `k,l`; without it all families with `l < k <= kmax`.
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        kmax: Option<u64>,
    },
    /// Generator degrees compared with the reference ranks.
    Ledger {
        #[arg(long)]
        cap: Option<i64>,
        #[arg(long)]
        covers: Option<u32>,
        #[arg(long)]
        kmax: Option<u64>,
    },
    /// Run a property suite.
    Verify {
        /// conservation | poisson | regularization | index-agreement | morse-bott | ledger
        #[arg(long)]
        suite: String,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        covers: Option<u32>,
    },
}

macro_rules! overlay {
    ($cfg:ident, $($field:ident),*) => {
        $(if let Some(v) = $field { $cfg.$field = v.into(); })*
    };
}

impl Cli {
    /// Defaults, then the config file, then explicit flags.
    pub fn resolve(self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("bad config {}: {e}", path.display())))?
            }
            None => RunConfig::default(),
        };
        let Cli { jacobi, format, output, rtol, atol, seed, command, .. } = self;
        overlay!(cfg, jacobi, format, rtol, atol, seed);
        if output.is_some() {
            cfg.output = output;
        }
        match command {
            Command::Catalog { covers, kmax } => {
                cfg.command = "catalog".into();
                overlay!(cfg, covers, kmax);
            }
            Command::Index { orbit, cover, family, numeric } => {
                cfg.command = "index".into();
                overlay!(cfg, cover);
                if orbit.is_some() {
                    cfg.orbit = orbit;
                }
                if family.is_some() {
                    cfg.family = family;
                }
                cfg.numeric |= numeric;
            }
            Command::Moduli { energy, point, invariants, level, samples, morse } => {
                cfg.command = "moduli".into();
                overlay!(cfg, energy, samples);
                if point.is_some() {
                    cfg.point = point;
                }
                if invariants.is_some() {
                    cfg.invariants = invariants;
                }
                if level.is_some() {
                    cfg.level = level;
                }
                if morse.is_some() {
                    cfg.morse = morse;
                }
            }
            Command::Bifurcation { family, kmax } => {
                cfg.command = "bifurcation".into();
                overlay!(cfg, kmax);
                if family.is_some() {
                    cfg.family = family;
                }
            }
            Command::Ledger { cap, covers, kmax } => {
                cfg.command = "ledger".into();
                overlay!(cfg, cap, covers, kmax);
            }
            Command::Verify { suite, samples, covers } => {
                cfg.command = "verify".into();
                cfg.suite = Some(suite);
                overlay!(cfg, samples, covers);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Ordered columns of one output row.
type Row = Vec<(&'static str, Value)>;

/// Result of a command: the document, plus an error to report after it has
/// been written (verification failures still print their report).
pub struct Outcome {
    pub document: Value,
    pub rows: Vec<Row>,
    pub failure: Option<Error>,
}

fn parse_family(s: &str) -> Result<FamilyId> {
    let s = s.trim().trim_start_matches("family").trim();
    let parts: Vec<_> = s.split(',').map(str::trim).collect();
    let bad = || Error::InvalidArgument(format!("family must be given as k,l, got '{s}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let k: u64 = parts[0].parse().map_err(|_| bad())?;
    let l: u64 = parts[1].parse().map_err(|_| bad())?;
    let (f, g) = FamilyId::new(k, l)?;
    if g != 1 {
        return Err(Error::InvalidArgument(format!("({k}, {l}) is not coprime; did you mean {f}?")));
    }
    Ok(f)
}

fn parse_orbit(s: &str) -> Result<OrbitKind> {
    match s.trim() {
        "retrograde" => Ok(OrbitKind::Retrograde),
        "direct" => Ok(OrbitKind::Direct),
        "collision+" => Ok(OrbitKind::CollisionPlus),
        "collision-" => Ok(OrbitKind::CollisionMinus),
        t if t.starts_with("family") => Ok(OrbitKind::Family),
        other => Err(Error::InvalidArgument(format!("unknown orbit '{other}', expected retrograde | direct | collision+ | collision- | family k,l"))),
    }
}

fn opt<T: Serialize>(v: Option<T>) -> Value {
    v.map_or(Value::Null, |x| json!(x))
}

fn cmd_catalog(cfg: &RunConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let rows = catalog(cfg.jacobi, cfg.covers, cfg.kmax)?
        .into_iter()
        .map(|o| {
            vec![
                ("kind", json!(o.kind)),
                ("k", opt(o.family.map(|f| f.k))),
                ("l", opt(o.family.map(|f| f.l))),
                ("N", json!(o.cover)),
                ("E", json!(o.kepler_energy)),
                ("period", json!(o.period)),
                ("index", json!(o.index)),
                ("L3_sign", json!(o.l3_sign)),
            ]
        })
        .collect();
    Ok((rows, Vec::new()))
}

fn cmd_index(cfg: &RunConfig) -> Result<(Vec<Row>, Vec<String>, Option<Error>)> {
    let family = cfg.family.as_deref().map(parse_family).transpose()?;
    let kind = match (&cfg.orbit, family) {
        (Some(o), _) => parse_orbit(o)?,
        (None, Some(_)) => OrbitKind::Family,
        (None, None) => return Err(Error::InvalidArgument("index needs --orbit or --family".into())),
    };
    let mut diagnostics = Vec::new();
    if kind == OrbitKind::Family {
        let f = match (family, cfg.orbit.as_deref()) {
            (Some(f), _) => f,
            (None, Some(o)) if o.contains(',') => parse_family(o)?,
            _ => return Err(Error::InvalidArgument("family orbits need --family k,l".into())),
        };
        if cfg.numeric {
            return Err(Error::InvalidArgument("--numeric applies to isolated orbits only".into()));
        }
        if let Ok(present) = enumerate_families(cfg.jacobi, f.k) {
            if !present.contains(&f) {
                diagnostics.push(format!("family {f} does not exist at c = {}", cfg.jacobi));
            }
        }
        let row = vec![("orbit", json!("family")), ("k", json!(f.k)), ("l", json!(f.l)), ("cover", Value::Null), ("jacobi", json!(cfg.jacobi)), ("closed_form", json!(rs_family(f))), ("numeric", Value::Null), ("agrees", Value::Null), ("crossings", Value::Null)];
        return Ok((vec![row], diagnostics, None));
    }
    let closed = isolated_orbit(cfg.jacobi, kind, cfg.cover)?.index;
    let mut row = vec![("orbit", json!(kind)), ("k", Value::Null), ("l", Value::Null), ("cover", json!(cfg.cover)), ("jacobi", json!(cfg.jacobi)), ("closed_form", json!(closed))];
    let mut failure = None;
    if cfg.numeric {
        let ncfg = NumericConfig { integrator: cfg.integrator(), ..Default::default() };
        let rep = numeric_cz(cfg.jacobi, kind, cfg.cover, &ncfg)?;
        let crossings: Vec<Value> = rep
            .pieces
            .iter()
            .flat_map(|p| p.crossings.iter().map(move |c| json!({ "piece": p.name, "time": c.time, "signature": c.signature, "kernel_dim": c.kernel_dim, "endpoint": c.endpoint })))
            .collect();
        for p in &rep.pieces {
            diagnostics.push(format!("{} piece: index {}, max symplectic defect {:e}", p.name, p.index, p.max_symplectic_defect));
        }
        if !rep.agrees() {
            failure = Some(Error::Verification(format!("numeric index {} differs from closed form {}", rep.index, rep.closed_form)));
        }
        row.extend([("numeric", json!(rep.index)), ("agrees", json!(rep.agrees())), ("crossings", Value::Array(crossings))]);
    } else {
        row.extend([("numeric", Value::Null), ("agrees", Value::Null), ("crossings", Value::Null)]);
    }
    Ok((vec![row], diagnostics, failure))
}

/// Coordinates with negative zeros folded to zero.
fn coords(v: &Vector3<f64>) -> [f64; 3] {
    [v[0] + 0.0, v[1] + 0.0, v[2] + 0.0]
}

fn sphere_row(energy: f64, sp: &SpherePair) -> Result<Row> {
    let (l, a) = from_sphere_pair(energy, sp)?;
    Ok(vec![
        ("x", json!(coords(&sp.x))),
        ("y", json!(coords(&sp.y))),
        ("L", json!(coords(&l))),
        ("A", json!(coords(&a))),
        ("L3", json!(ModuliFunction::L3.value(energy, sp)?)),
        ("tags", json!(classify_point(sp).names())),
    ])
}

fn cmd_moduli(cfg: &RunConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let e = cfg.energy;
    let six = |v: &Vec<f64>, what: &str| -> Result<(Vector3<f64>, Vector3<f64>)> {
        if v.len() != 6 {
            return Err(Error::InvalidArgument(format!("{what} needs six comma-separated numbers")));
        }
        Ok((Vector3::new(v[0], v[1], v[2]), Vector3::new(v[3], v[4], v[5])))
    };
    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    if let Some(v) = &cfg.point {
        let (x, y) = six(v, "--point")?;
        let sp = SpherePair { x, y };
        if sp.norm_defect() > 1e-9 {
            return Err(Error::Domain(format!("point is off S^2 x S^2 by {:e}", sp.norm_defect())));
        }
        rows.push(sphere_row(e, &sp)?);
    }
    if let Some(v) = &cfg.invariants {
        let (l, a) = six(v, "--invariants")?;
        rows.push(sphere_row(e, &to_sphere_pair(e, &l, &a)?)?);
    }
    if let Some(level) = cfg.level {
        for sp in level_set_sample(e, level, cfg.samples, cfg.seed)? {
            rows.push(sphere_row(e, &sp)?);
        }
    }
    let morse: Vec<ModuliFunction> = match cfg.morse {
        Some(f) => vec![f],
        None if rows.is_empty() => vec![ModuliFunction::L3, ModuliFunction::A3],
        None => Vec::new(),
    };
    for f in morse {
        let cps = morse_data(f, e, 24, 1e-6)?;
        diagnostics.push(format!("{} critical points of {:?}", cps.len(), f));
        for c in cps {
            rows.push(vec![
                ("function", json!(f)),
                ("name", opt(c.name)),
                ("x", json!(coords(&c.point.x))),
                ("y", json!(coords(&c.point.y))),
                ("value", json!(c.value + 0.0)),
                ("morse_index", json!(c.morse_index)),
            ]);
        }
    }
    Ok((rows, diagnostics))
}

fn cmd_bifurcation(cfg: &RunConfig) -> Result<(Vec<Row>, Vec<String>)> {
    let pairs: Vec<(u64, u64)> = match &cfg.family {
        Some(s) => {
            let f = parse_family(s)?;
            vec![(f.k, f.l)]
        }
        None => (2..=cfg.kmax).flat_map(|k| (1..k).filter(move |&l| gcd(k, l) == 1).map(move |l| (k, l))).collect(),
    };
    let mut rows = Vec::new();
    for (k, l) in pairs {
        let b = bifurcation_record(k, l)?;
        rows.push(vec![
            ("k", json!(b.family.k)),
            ("l", json!(b.family.l)),
            ("c_minus", json!(b.c_birth)),
            ("birth", json!(b.born_from)),
            ("c_plus", json!(b.c_death)),
            ("death", json!(b.dies_into)),
        ]);
    }
    Ok((rows, Vec::new()))
}

fn cmd_ledger(cfg: &RunConfig) -> Result<(Vec<Row>, Vec<String>, Option<Error>)> {
    let rep = compare_with_reference(cfg.jacobi, cfg.cap, None, None)?;
    let rows = rep
        .rows
        .iter()
        .map(|r| vec![("degree", json!(r.degree)), ("multiplicity", json!(r.multiplicity)), ("reference", json!(r.reference)), ("status", json!(r.status)), ("generators", json!(r.generators))])
        .collect();
    let diagnostics = vec![format!("degrees up to {} compared with the reference", rep.verified_up_to), format!("all match: {}", rep.all_match)];
    let failure = (!rep.all_match).then(|| Error::Verification("generator multiplicities differ from the reference".into()));
    Ok((rows, diagnostics, failure))
}

fn cmd_verify(cfg: &RunConfig) -> Result<(Vec<Row>, Vec<String>, Option<Error>)> {
    let suite: Suite = cfg.suite.as_deref().unwrap_or_default().parse()?;
    let opts = VerifyOptions { jacobi: cfg.jacobi, samples: cfg.samples, covers: cfg.covers, integrator: IntegratorConfig::adaptive(cfg.rtol.min(1e-12), cfg.atol.min(1e-12)) };
    let rep = run_suite(suite, cfg.seed, &opts)?;
    let rows = rep
        .properties
        .iter()
        .map(|p| {
            vec![
                ("suite", json!(suite)),
                ("property", json!(p.name)),
                ("passed", json!(p.passed)),
                ("checked", json!(p.checked)),
                ("worst", if p.worst.is_finite() { json!(p.worst) } else { json!("inf") }),
                ("tolerance", json!(p.tolerance)),
                ("counterexample", p.counterexample.clone().unwrap_or(Value::Null)),
            ]
        })
        .collect();
    let failure = rep.first_failure().map(|p| {
        Error::Verification(format!("{} / {}: counterexample {}", suite, p.name, p.counterexample.as_ref().map(Value::to_string).unwrap_or_default()))
    });
    Ok((rows, Vec::new(), failure))
}

/// Runs the command described by `cfg`.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let (rows, diagnostics, failure) = match cfg.command.as_str() {
        "catalog" => cmd_catalog(cfg).map(|(r, d)| (r, d, None))?,
        "index" => cmd_index(cfg)?,
        "moduli" => cmd_moduli(cfg).map(|(r, d)| (r, d, None))?,
        "bifurcation" => cmd_bifurcation(cfg).map(|(r, d)| (r, d, None))?,
        "ledger" => cmd_ledger(cfg)?,
        "verify" => cmd_verify(cfg)?,
        other => return Err(Error::InvalidArgument(format!("unknown command '{other}'"))),
    };
    let json_rows: Vec<Value> = rows.iter().map(|r| Value::Object(r.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<Map<_, _>>())).collect();
    let document = json!({ "command": cfg.command, "config": cfg, "rows": json_rows, "diagnostics": diagnostics });
    Ok(Outcome { document, rows, failure })
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match (n.as_i64(), n.as_u64(), n.as_f64()) {
            (Some(i), _, _) => i.to_string(),
            (_, Some(u), _) => u.to_string(),
            (_, _, Some(f)) => format!("{f:.16e}"),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// Renders the rows as RFC 4180 CSV with a header row. Floats carry 17
/// significant digits.
pub fn render_csv(rows: &[Row]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = rows.first().map(|r| r.iter().map(|(k, _)| *k).collect()).unwrap_or_default();
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(&header).map_err(io)?;
    for r in rows {
        w.write_record(r.iter().map(|(_, v)| csv_cell(v))).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn render(cfg: &RunConfig, out: &Outcome) -> Result<String> {
    match cfg.format {
        Format::Json => Ok(serde_json::to_string_pretty(&out.document).expect("values serialize") + "\n"),
        Format::Csv => render_csv(&out.rows),
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("KEPLER_CZ_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second call fails harmlessly when the pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    let report = |e: &Error| {
        eprintln!("error: {e}");
        e.exit_code()
    };
    let cfg = match cli.resolve() {
        Ok(c) => c,
        Err(e) => return report(&e),
    };
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => return report(&e),
    };
    let text = match render(&cfg, &outcome) {
        Ok(t) => t,
        Err(e) => return report(&e),
    };
    let written = match &cfg.output {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(msg) = written {
        eprintln!("error: {msg}");
        return 2;
    }
    match &outcome.failure {
        Some(e) => report(e),
        None => 0,
    }
}
