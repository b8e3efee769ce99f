//! Command-line experiment runner.
//!
//! Every subcommand reads one TOML config (schema in the README), writes its
//! artifacts under `--out` and embeds a fingerprint of the resolved config
//! (config plus command-line overrides) in each of them.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::advantage::{
    adv_bound_binary_with, adv_bound_gaussian_with, exact_adv_oracle, AdvQuery, AdvantageReport, Mode, ModelPair,
    ORACLE_MAX_D, ORACLE_MAX_N,
};
use crate::graphs::{enumerate_classes, ClassCatalog, MultigraphClass};
use crate::models::{derive_seed, sample_binary, sample_gaussian, BinaryParams, Communities, GaussianParams, PriorSpec};
use crate::moments::{affine_moment, mc_moment};
use crate::rvalues::{r_bound_check, RTable};
use crate::scalar::{self, Exact, Rational};
use crate::stats::{run_experiment, Statistic};

/// Exit code for configuration and parameter errors.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for runtime failures.
pub const EXIT_RUNTIME: i32 = 1;

#[derive(Parser, Debug)]
#[command(name = "lowdeg", version, about = "Low-degree bounds and test statistics for planted-community models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// TOML experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Enumerate the multigraph classes used by the configured mode.
    Enumerate(Common),
    /// Closed-form moments under P next to Monte Carlo estimates.
    Moments(Common),
    /// r-values with their growth bound, as CSV.
    Rvalues(Common),
    /// Advantage bound report as JSON.
    Advantage(Common),
    /// Monte Carlo test-statistic experiment.
    Simulate(Common),
    /// Exact advantage of a tiny instance next to its bound.
    Oracle(Common),
    /// Parameter sweep; re-running a finished sweep is a no-op.
    Sweep(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Enumerate(c)
            | Command::Moments(c)
            | Command::Rvalues(c)
            | Command::Advantage(c)
            | Command::Simulate(c)
            | Command::Oracle(c)
            | Command::Sweep(c) => c,
        }
    }
}

#[derive(Deserialize, Serialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: u64,
    #[serde(default = "default_d_max")]
    pub d_max: u32,
    #[serde(default = "default_reps")]
    pub reps: usize,
    #[serde(default)]
    pub seed: u64,
    pub p: ModelConfig,
    pub q: ModelConfig,
    /// Attach the exact advantage to `advantage` reports (tiny `n` only).
    #[serde(default)]
    pub oracle: bool,
    /// Catalog text file, reused when it covers `d_max`.
    #[serde(default)]
    pub catalog_cache: Option<PathBuf>,
    /// Label replicates per class for `moments`.
    #[serde(default = "default_mc_reps")]
    pub mc_reps: u64,
    /// Also write one sample per model as CSV in `simulate`.
    #[serde(default)]
    pub export_sample: bool,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Deserialize, Serialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub k: Exact,
    pub x: Vec<Exact>,
    #[serde(default = "one")]
    pub c: Exact,
    #[serde(default)]
    pub lambda: Option<Exact>,
    #[serde(default)]
    pub q: Option<Exact>,
    #[serde(default)]
    pub s: Option<Exact>,
    #[serde(default)]
    pub tau1: Option<Exact>,
}

/// Grid axes; each value is applied to both models. Missing axes keep the
/// base config value.
#[derive(Deserialize, Serialize, Debug, Clone, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub n: Option<Vec<u64>>,
    #[serde(default)]
    pub k: Option<Vec<Exact>>,
    #[serde(default)]
    pub lambda: Option<Vec<Exact>>,
    #[serde(default)]
    pub s: Option<Vec<Exact>>,
    /// Also run the Monte Carlo test in every cell.
    #[serde(default)]
    pub simulate: bool,
}

fn default_d_max() -> u32 {
    4
}
fn default_reps() -> usize {
    200
}
fn default_mc_reps() -> u64 {
    100_000
}
fn one() -> Exact {
    Exact(scalar::int(1))
}

/// A configuration problem; reported with exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Parses config text; errors name the offending field path and position.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let msg = inner.message().to_string();
        let at = inner
            .span()
            .map(|s| {
                let line = text[..s.start].matches('\n').count() + 1;
                format!(" (line {line})")
            })
            .unwrap_or_default();
        ConfigError(format!("invalid config at `{path}`{at}: {msg}"))
    })
}

impl ExperimentConfig {
    /// Hex SHA-256 prefix of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serialises");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn models(&self) -> Result<ModelPair, ConfigError> {
        self.models_at(self.n, None, None)
    }

    /// Model pair with optional grid overrides for `k` and `λ`/`s`.
    pub fn models_at(&self, n: u64, k: Option<&Rational>, signal: Option<&Rational>) -> Result<ModelPair, ConfigError> {
        let build = |name: &str, m: &ModelConfig| -> Result<ModelPair, ConfigError> {
            let k = k.cloned().unwrap_or_else(|| m.k.0.clone());
            let x: Vec<Rational> = m.x.iter().map(|v| v.0.clone()).collect();
            let comm = Communities::new(n, k, x, m.c.0.clone()).map_err(|e| ConfigError(format!("{name}: {e}")))?;
            let need = |field: &str, v: &Option<Exact>| {
                v.as_ref().map(|e| e.0.clone()).ok_or_else(|| {
                    ConfigError(format!("invalid config at `{name}.{field}`: missing field required by mode = {:?}", self.mode))
                })
            };
            match self.mode {
                Mode::Gaussian => {
                    let lambda = match signal {
                        Some(v) => v.clone(),
                        None => need("lambda", &m.lambda)?,
                    };
                    let g = GaussianParams::new(comm, lambda).map_err(|e| ConfigError(format!("{name}: {e}")))?;
                    Ok(ModelPair::Gaussian { p: g.clone(), q: g })
                }
                Mode::Binary => {
                    let s = match signal {
                        Some(v) => v.clone(),
                        None => need("s", &m.s)?,
                    };
                    let b = BinaryParams::new(comm, need("q", &m.q)?, s, need("tau1", &m.tau1)?)
                        .map_err(|e| ConfigError(format!("{name}: {e}")))?;
                    Ok(ModelPair::Binary { p: b.clone(), q: b })
                }
            }
        };
        match (build("p", &self.p)?, build("q", &self.q)?) {
            (ModelPair::Gaussian { p, .. }, ModelPair::Gaussian { q, .. }) => Ok(ModelPair::Gaussian { p, q }),
            (ModelPair::Binary { p, .. }, ModelPair::Binary { q, .. }) => Ok(ModelPair::Binary { p, q }),
            _ => unreachable!("both models share the mode"),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.models()?;
        if let Some(sw) = &self.sweep {
            let wrong = match self.mode {
                Mode::Gaussian => sw.s.is_some().then_some("sweep.s"),
                Mode::Binary => sw.lambda.is_some().then_some("sweep.lambda"),
            };
            if let Some(field) = wrong {
                return Err(ConfigError(format!("invalid config at `{field}`: axis does not apply to mode = {:?}", self.mode)));
            }
        }
        Ok(())
    }
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                EXIT_CONFIG
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

pub fn run(cmd: &Command) -> anyhow::Result<()> {
    let common = cmd.common();
    let text = fs::read_to_string(&common.config)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", common.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let pool = match common.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?,
        None => rayon::ThreadPoolBuilder::new().build()?,
    };
    fs::create_dir_all(&common.out).with_context(|| format!("creating {}", common.out.display()))?;
    let ctx = Ctx { fingerprint: cfg.fingerprint(), cfg, out: common.out.clone() };
    pool.install(|| match cmd {
        Command::Enumerate(_) => cmd_enumerate(&ctx),
        Command::Moments(_) => cmd_moments(&ctx),
        Command::Rvalues(_) => cmd_rvalues(&ctx),
        Command::Advantage(_) => cmd_advantage(&ctx),
        Command::Simulate(_) => cmd_simulate(&ctx),
        Command::Oracle(_) => cmd_oracle(&ctx),
        Command::Sweep(_) => cmd_sweep(&ctx),
    })
}

struct Ctx {
    cfg: ExperimentConfig,
    fingerprint: String,
    out: PathBuf,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    fingerprint: &'a str,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    body: T,
}

impl Ctx {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_json<T: Serialize>(&self, name: &str, body: T) -> anyhow::Result<String> {
        let env = Envelope { fingerprint: &self.fingerprint, config: &self.cfg, body };
        let text = serde_json::to_string_pretty(&env)? + "\n";
        write_atomic(&self.path(name), text.as_bytes())?;
        Ok(text)
    }

    fn csv_writer(&self, name: &str) -> anyhow::Result<(csv::Writer<Vec<u8>>, PathBuf)> {
        let mut buf = Vec::new();
        writeln!(buf, "# fingerprint={}", self.fingerprint)?;
        writeln!(buf, "# seed={}", self.cfg.seed)?;
        Ok((csv::Writer::from_writer(buf), self.path(name)))
    }

    /// Catalog for the configured mode, through the cache file when set.
    fn catalog(&self, d_max: u32, allow_loops: bool, cyclic: bool) -> anyhow::Result<ClassCatalog> {
        let Some(path) = &self.cfg.catalog_cache else {
            return Ok(enumerate_classes(d_max, allow_loops, cyclic)?);
        };
        if let Ok(text) = fs::read_to_string(path) {
            if let Ok(cat) = ClassCatalog::from_text(&text) {
                if cat.d_max >= d_max && cat.allow_loops == allow_loops && cat.require_cyclic_components == cyclic {
                    return Ok(cat.truncate(d_max));
                }
            }
        }
        let cat = enumerate_classes(d_max, allow_loops, cyclic)?;
        write_atomic(path, cat.to_text().as_bytes())?;
        Ok(cat)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn finish_csv(w: csv::Writer<Vec<u8>>, path: &Path) -> anyhow::Result<Vec<u8>> {
    let bytes = w.into_inner().map_err(|e| anyhow!("csv buffer: {e}"))?;
    write_atomic(path, &bytes)?;
    Ok(bytes)
}

fn priors(models: &ModelPair) -> (PriorSpec, PriorSpec) {
    match models {
        ModelPair::Gaussian { p, q } => (PriorSpec::gaussian(p), PriorSpec::gaussian(q)),
        ModelPair::Binary { p, q } if p.q == q.q => (PriorSpec::binary_shift_free(p), PriorSpec::binary_shift_free(q)),
        ModelPair::Binary { p, q } => (PriorSpec::binary(p), PriorSpec::binary(q)),
    }
}

fn mode_catalog_flags(mode: Mode) -> bool {
    mode == Mode::Gaussian
}

fn cmd_enumerate(ctx: &Ctx) -> anyhow::Result<()> {
    let loops = mode_catalog_flags(ctx.cfg.mode);
    let mut cat = ctx.catalog(ctx.cfg.d_max, loops, true)?;
    if !loops {
        cat = cat.simple_only();
    }
    write_atomic(&ctx.path("catalog.txt"), cat.to_text().as_bytes())?;
    #[derive(Serialize)]
    struct Group {
        d: u32,
        v: usize,
        classes: usize,
    }
    let groups: Vec<Group> = cat.groups().map(|((d, v), cs)| Group { d, v, classes: cs.len() }).collect();
    #[derive(Serialize)]
    struct Body {
        total: usize,
        groups: Vec<Group>,
    }
    ctx.write_json("enumerate.json", Body { total: cat.len(), groups })?;
    println!("{} classes with d <= {} written to {}", cat.len(), ctx.cfg.d_max, ctx.path("catalog.txt").display());
    Ok(())
}

fn cmd_moments(ctx: &Ctx) -> anyhow::Result<()> {
    let models = ctx.cfg.models()?;
    let (p_spec, _) = match &models {
        ModelPair::Gaussian { p, q } => (PriorSpec::gaussian(p), PriorSpec::gaussian(q)),
        ModelPair::Binary { p, q } => (PriorSpec::binary(p), PriorSpec::binary(q)),
    };
    let cat = ctx.catalog(ctx.cfg.d_max, mode_catalog_flags(ctx.cfg.mode), false)?;
    let classes: Vec<&MultigraphClass> = cat.iter().filter(|g| g.d() >= 1).collect();
    let rows = classes
        .par_iter()
        .enumerate()
        .map(|(idx, g)| {
            let exact = affine_moment(g, &p_spec)?;
            let (est, se) = mc_moment(g, &p_spec, ctx.cfg.mc_reps, derive_seed(ctx.cfg.seed, &[idx as u64]))?;
            Ok((g.to_exponent_vector().to_string(), g.d(), g.v(), exact.exact, est, se))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let (mut w, path) = ctx.csv_writer("moments.csv")?;
    w.write_record(["class", "d", "v", "exact", "exact_f64", "mc_estimate", "mc_se", "z"])?;
    for (class, d, v, exact, est, se) in &rows {
        let ef = scalar::to_f64(exact);
        let z = if *se > 0.0 { (est - ef) / se } else { 0.0 };
        w.write_record([class.clone(), d.to_string(), v.to_string(), exact.to_string(), ef.to_string(), est.to_string(), se.to_string(), format!("{z:.3}")])?;
    }
    let bytes = finish_csv(w, &path)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}

fn cmd_rvalues(ctx: &Ctx) -> anyhow::Result<()> {
    let models = ctx.cfg.models()?;
    let (ps, qs) = priors(&models);
    let table = RTable::new(ps, qs);
    let c = ctx.cfg.p.c.0.clone().min(ctx.cfg.q.c.0.clone());
    let cat = ctx.catalog(ctx.cfg.d_max, mode_catalog_flags(ctx.cfg.mode), false)?;
    let classes: Vec<&MultigraphClass> = cat.iter().filter(|g| g.d() >= 1).collect();
    let rows = classes
        .par_iter()
        .map(|g| {
            let r = table.r_value(g)?;
            let bound = r_bound_check(g, &table, &c).ok();
            Ok((g, r, bound))
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let (mut w, path) = ctx.csv_writer("rvalues.csv")?;
    w.write_record(["class", "d", "v", "r", "r_f64", "bound", "ok"])?;
    for (g, r, bound) in rows {
        let (b, ok) = match bound {
            Some(b) => (b.bound.to_string(), b.ok.to_string()),
            None => ("NA".into(), "NA".into()),
        };
        w.write_record([g.to_exponent_vector().to_string(), g.d().to_string(), g.v().to_string(), r.to_string(), scalar::to_f64(&r).to_string(), b, ok])?;
    }
    finish_csv(w, &path)?;
    println!("r-values written to {}", path.display());
    Ok(())
}

fn advantage_report(ctx: &Ctx, models: ModelPair, n: u64) -> anyhow::Result<(AdvQuery, AdvantageReport)> {
    let qy = AdvQuery { models, d_max: ctx.cfg.d_max, n };
    let report = match &qy.models {
        ModelPair::Gaussian { p, q } => {
            let cyclic = PriorSpec::gaussian(p).shares_tree_moments_with(&PriorSpec::gaussian(q));
            adv_bound_gaussian_with(&qy, &ctx.catalog(qy.d_max, true, cyclic)?)?
        }
        ModelPair::Binary { .. } => {
            let (ps, qs) = priors(&qy.models);
            let cyclic = ps.shares_tree_moments_with(&qs);
            adv_bound_binary_with(&qy, &ctx.catalog(qy.d_max, false, cyclic)?)?
        }
    };
    Ok((qy, report))
}

fn cmd_advantage(ctx: &Ctx) -> anyhow::Result<()> {
    let (qy, mut report) = advantage_report(ctx, ctx.cfg.models()?, ctx.cfg.n)?;
    if ctx.cfg.oracle {
        if qy.n > ORACLE_MAX_N || qy.d_max > ORACLE_MAX_D {
            return Err(ConfigError(format!(
                "invalid config at `oracle`: needs n <= {ORACLE_MAX_N} and d_max <= {ORACLE_MAX_D}"
            ))
            .into());
        }
        report.oracle_value = Some(exact_adv_oracle(&qy)?);
    }
    print!("{}", ctx.write_json("advantage.json", &report)?);
    Ok(())
}

fn cmd_oracle(ctx: &Ctx) -> anyhow::Result<()> {
    if ctx.cfg.n > ORACLE_MAX_N || ctx.cfg.d_max > ORACLE_MAX_D {
        return Err(ConfigError(format!(
            "invalid config at `n`: oracle needs n <= {ORACLE_MAX_N} and d_max <= {ORACLE_MAX_D}"
        ))
        .into());
    }
    let (qy, report) = advantage_report(ctx, ctx.cfg.models()?, ctx.cfg.n)?;
    let oracle = exact_adv_oracle(&qy)?;
    #[derive(Serialize)]
    struct Body {
        oracle: f64,
        bound: f64,
        within_bound: bool,
    }
    let body = Body { oracle, bound: report.total_bound, within_bound: oracle <= report.total_bound + 1e-6 };
    print!("{}", ctx.write_json("oracle.json", body)?);
    Ok(())
}

fn statistic_for(mode: Mode) -> Statistic {
    match mode {
        Mode::Gaussian => Statistic::DiagSum,
        Mode::Binary => Statistic::SignedTriangles,
    }
}

fn cmd_simulate(ctx: &Ctx) -> anyhow::Result<()> {
    let models = ctx.cfg.models()?;
    let report = run_experiment(&models, statistic_for(ctx.cfg.mode), ctx.cfg.reps, ctx.cfg.seed)
        .map_err(|e| ConfigError(e.to_string()))?;
    let (mut w, path) = ctx.csv_writer("simulate.csv")?;
    w.write_record(["model", "rep", "value"])?;
    for (name, vals) in [("p", &report.values_p), ("q", &report.values_q)] {
        for (i, v) in vals.iter().enumerate() {
            w.write_record([name.to_string(), i.to_string(), v.to_string()])?;
        }
    }
    finish_csv(w, &path)?;
    if ctx.cfg.export_sample {
        for (idx, name) in ["p", "q"].iter().enumerate() {
            let seed = derive_seed(ctx.cfg.seed, &[0x73616d70, idx as u64]);
            let (sample, params) = match &models {
                ModelPair::Gaussian { p, q } => {
                    let g = if idx == 0 { p } else { q };
                    (sample_gaussian(g, seed), serde_json::to_string(g)?)
                }
                ModelPair::Binary { p, q } => {
                    let b = if idx == 0 { p } else { q };
                    (sample_binary(b, seed), serde_json::to_string(b)?)
                }
            };
            let mut buf = Vec::new();
            sample.write_csv(
                &[("fingerprint", ctx.fingerprint.clone()), ("params", params), ("seed", seed.to_string())],
                &mut buf,
            )?;
            write_atomic(&ctx.path(&format!("sample_{name}.csv")), &buf)?;
        }
    }
    print!("{}", ctx.write_json("simulate.json", &report)?);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub n: u64,
    pub k: String,
    pub signal: String,
    /// `D⁵ M̂² λ² (k²/n ∨ 1)`, with `λ² = s²/q` in binary mode.
    pub regime: f64,
    pub total_bound: f64,
    pub series_bound: f64,
    pub error_rate: Option<f64>,
    pub separation_ratio: Option<f64>,
}

fn sweep_cells(cfg: &ExperimentConfig) -> Vec<(u64, Option<Rational>, Option<Rational>)> {
    let sw = cfg.sweep.clone().unwrap_or_default();
    let ns = sw.n.unwrap_or_else(|| vec![cfg.n]);
    let ks: Vec<Option<Rational>> = match sw.k {
        Some(v) => v.into_iter().map(|e| Some(e.0)).collect(),
        None => vec![None],
    };
    let signal = match cfg.mode {
        Mode::Gaussian => sw.lambda,
        Mode::Binary => sw.s,
    };
    let ss: Vec<Option<Rational>> = match signal {
        Some(v) => v.into_iter().map(|e| Some(e.0)).collect(),
        None => vec![None],
    };
    let mut cells = Vec::new();
    for &n in &ns {
        for k in &ks {
            for s in &ss {
                cells.push((n, k.clone(), s.clone()));
            }
        }
    }
    cells
}

fn regime_value(models: &ModelPair, d_max: u32, n: u64) -> f64 {
    let (pc, qc) = models.communities();
    let m_hat = pc.m().max(qc.m()) as f64;
    let k = scalar::to_f64(&pc.k.clone().max(qc.k.clone()));
    let lambda_sq = match models {
        ModelPair::Gaussian { p, q } => scalar::to_f64(&p.lambda.clone().max(q.lambda.clone())).powi(2),
        ModelPair::Binary { p, q } => {
            let s = scalar::to_f64(&p.s.clone().max(q.s.clone()));
            s * s / scalar::to_f64(&p.q)
        }
    };
    f64::from(d_max).powi(5) * m_hat * m_hat * lambda_sq * (k * k / n as f64).max(1.0)
}

fn cmd_sweep(ctx: &Ctx) -> anyhow::Result<()> {
    let cells = sweep_cells(&ctx.cfg);
    let path = ctx.path("sweep.csv");
    let header = format!("# fingerprint={}\n", ctx.fingerprint);
    let mut done: Vec<SweepRow> = Vec::new();
    if let Ok(text) = fs::read_to_string(&path) {
        if text.starts_with(&header) {
            let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
            for row in rdr.deserialize::<SweepRow>() {
                match row {
                    Ok(r) => done.push(r),
                    Err(_) => break,
                }
            }
        }
    }
    // keep the finished prefix only; later rows are recomputed
    let prefix = done.iter().enumerate().take_while(|(i, r)| r.cell == *i).count();
    done.truncate(prefix);
    if done.len() >= cells.len() {
        println!("sweep up to date: {} cells in {}", cells.len(), path.display());
        return Ok(());
    }
    let simulate = ctx.cfg.sweep.as_ref().is_some_and(|s| s.simulate);
    let chunk = rayon::current_num_threads().max(1);
    let mut next = done.len();
    while next < cells.len() {
        let end = (next + chunk).min(cells.len());
        let rows = (next..end)
            .into_par_iter()
            .map(|cell| {
                let (n, k, s) = &cells[cell];
                let models = ctx.cfg.models_at(*n, k.as_ref(), s.as_ref())?;
                let (pc, _) = models.communities();
                let k_text = pc.k.to_string();
                let signal = match &models {
                    ModelPair::Gaussian { p, .. } => p.lambda.to_string(),
                    ModelPair::Binary { p, .. } => p.s.to_string(),
                };
                let regime = regime_value(&models, ctx.cfg.d_max, *n);
                let (_, report) = advantage_report(ctx, models.clone(), *n)?;
                let (error_rate, separation_ratio) = if simulate {
                    let seed = derive_seed(ctx.cfg.seed, &[0x7377, cell as u64]);
                    let r = run_experiment(&models, statistic_for(ctx.cfg.mode), ctx.cfg.reps, seed)?;
                    (Some(r.error_rate), Some(r.separation_ratio))
                } else {
                    (None, None)
                };
                Ok(SweepRow {
                    cell,
                    n: *n,
                    k: k_text,
                    signal,
                    regime,
                    total_bound: report.total_bound,
                    series_bound: report.series_bound.value,
                    error_rate,
                    separation_ratio,
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        done.extend(rows);
        next = end;
        let mut buf = header.clone().into_bytes();
        writeln!(buf, "# seed={}", ctx.cfg.seed)?;
        let mut w = csv::Writer::from_writer(buf);
        for r in &done {
            w.serialize(r)?;
        }
        finish_csv(w, &path)?;
    }
    ctx.write_json("sweep.json", serde_json::json!({ "cells": cells.len(), "table": path.display().to_string() }))?;
    println!("sweep finished: {} cells in {}", cells.len(), path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
mode = "gaussian"
n = 30
d_max = 3
[p]
k = 10
x = [1]
lambda = 0.5
[q]
k = 10
x = ["1/2", "1/2"]
lambda = 0.5
"#;

    #[test]
    fn parses_and_fingerprints() {
        let cfg = parse_config(BASE).unwrap();
        assert_eq!(cfg.q.x[0].0, scalar::ratio(1, 2));
        assert_eq!(cfg.fingerprint(), parse_config(BASE).unwrap().fingerprint());
        let mut other = cfg.clone();
        other.seed = 9;
        assert_ne!(other.fingerprint(), cfg.fingerprint());
        assert!(cfg.models().is_ok());
    }

    #[test]
    fn missing_field_names_path() {
        let text = BASE.replace("x = [\"1/2\", \"1/2\"]\n", "");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.contains("`q`") && err.0.contains("x"), "{}", err.0);
        let text = BASE.replace("lambda = 0.5\n[q]", "[q]");
        let err = parse_config(&text).unwrap().models().unwrap_err();
        assert!(err.0.contains("p.lambda"), "{}", err.0);
        let text = BASE.replace("x = [1]", "x = [1, \"oops\"]");
        let err = parse_config(&text).unwrap_err();
        assert!(err.0.contains("p.x[1]"), "{}", err.0);
    }

    #[test]
    fn invariant_violations_surface() {
        let text = r#"
mode = "binary"
n = 30
[p]
k = 10
x = [1]
q = 0.2
s = 0.2
tau1 = 0.3
[q]
k = 10
x = [1]
q = 0.2
s = 0.05
tau1 = 0.3
"#;
        let err = parse_config(text).unwrap().models().unwrap_err();
        assert!(err.0.contains("q + s / min x <= tau1"), "{}", err.0);
    }

    #[test]
    fn grid_cells() {
        let mut cfg = parse_config(BASE).unwrap();
        assert_eq!(sweep_cells(&cfg).len(), 1);
        cfg.sweep = Some(SweepConfig {
            n: Some(vec![10, 20]),
            lambda: Some(vec![Exact(scalar::int(1)), Exact(scalar::int(2)), Exact(scalar::int(3))]),
            ..Default::default()
        });
        assert_eq!(sweep_cells(&cfg).len(), 6);
    }
}
