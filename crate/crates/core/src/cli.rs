//! `bellman` command line front end.
//!
//! Every subcommand prints its main result to stdout (JSON with sorted keys, or CSV), writes
//! its output files into `--out`, and finishes by writing `manifest.json` next to them.
//! Exit codes: 0 success, 1 domain or numeric error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::dist::{DistSpec, SampleBatch};
use crate::error::{Error, Result};
use crate::fit::{rank_families, write_summary_csv, BinRule, FitOptions, KsMode, DEFAULT_BINS};
use crate::gumbel::kl_bound;
use crate::loss::{l_loss, l_loss_grad, lloss_element, mse_loss, taylor_gap, LossConfig};
use crate::normal_max::{monte_carlo_ks, normal_max_gumbel};
use crate::order_stats::sampling_error;
use crate::scaling::{expected_error, linear_grid, scaling_curve, RewardSample};
use crate::tabular::{make_chain, make_example1, make_random_dag, TabularMdp, TreeRowSampler};
use crate::trainer::{compare_losses, run_training, LossKind, QFunctionKind, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "bellman", version, about = "Bellman error distribution experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Global {
    /// Seed for every random stream
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format on stdout
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Directory for output files and the run manifest
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Gap and Bellman-error snapshots of the five-level, 5000-action example, with fits
    Example1(Example1Args),
    /// Fit Gumbel, Logistic and Normal laws to a CSV column and rank them by KS distance
    Fit(FitArgs),
    /// KL bound between a Gumbel law and its discounted contraction
    Klbound(KlArgs),
    /// Gumbel approximation of the maximum of N standard Normals
    NormalMax(NormalMaxArgs),
    /// Sampling error of the expected empirical CDF of Logistic samples
    SamplingError(SamplingArgs),
    /// Expected Bellman error against the reward scaling ratio
    Scaling(ScalingArgs),
    /// Logistic loss against its quadratic expansion, with a gradient check
    Losscheck(LossArgs),
    /// Train a Q-function with one loss
    Train(TrainArgs),
    /// Train both losses over several seeds and compare
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum InitFamily {
    Normal,
    Gumbel,
}

#[derive(Debug, Args, Serialize)]
struct Example1Args {
    /// Number of Q-iterations to snapshot
    #[arg(long, default_value_t = 4)]
    iters: usize,
    /// Law of the initial Q-values (location 0, scale 1)
    #[arg(long, value_enum, default_value_t = InitFamily::Normal)]
    init: InitFamily,
    /// Actions per state
    #[arg(long, default_value_t = 5000)]
    actions: usize,
    /// Histogram bins for the fit metrics
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
}

#[derive(Debug, Args, Serialize)]
struct FitArgs {
    /// CSV file to read
    #[arg(long)]
    input: PathBuf,
    /// Name of the numeric column to fit
    #[arg(long, default_value = "value")]
    column: String,
    /// Histogram bins; 0 selects the Freedman-Diaconis rule
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    /// KS evaluation mode
    #[arg(long, value_enum, default_value_t = KsArg::TwoSided)]
    ks_mode: KsArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KsArg {
    TwoSided,
    /// compare only at the data points
    #[value(name = "paper")]
    #[serde(rename = "paper")]
    DataPoints,
}

impl From<KsArg> for KsMode {
    fn from(k: KsArg) -> Self {
        match k {
            KsArg::TwoSided => KsMode::TwoSided,
            KsArg::DataPoints => KsMode::DataPoints,
        }
    }
}

#[derive(Debug, Args, Serialize)]
struct KlArgs {
    #[arg(long, allow_hyphen_values = true)]
    astar: f64,
    #[arg(long)]
    gamma: f64,
}

#[derive(Debug, Args, Serialize)]
struct NormalMaxArgs {
    /// Sample size N
    #[arg(long)]
    n: u64,
    /// Monte Carlo replicates for a KS check (0 skips it)
    #[arg(long, default_value_t = 0)]
    mc: usize,
}

#[derive(Debug, Args, Serialize)]
struct SamplingArgs {
    /// Comma-separated sample sizes
    #[arg(long, value_delimiter = ',', default_values_t = [2, 4, 8, 16, 32, 64, 128, 256])]
    n: Vec<usize>,
    /// Logistic location
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a: f64,
    /// Logistic scale
    #[arg(long, default_value_t = 1.0)]
    b: f64,
}

#[derive(Debug, Args, Serialize)]
struct ScalingArgs {
    /// Comma-separated rewards of the successor state
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    rewards: Vec<f64>,
    /// Error scale β
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Grid `lo:hi:points` of scaling ratios
    #[arg(long, default_value = "0.5:5:46")]
    phi_grid: String,
}

#[derive(Debug, Args, Serialize)]
struct LossArgs {
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Grid `lo:hi:points` of standardized errors t
    #[arg(long, default_value = "-0.5:0.5:101", allow_hyphen_values = true)]
    t_grid: String,
}

#[derive(Debug, Args, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    common: TrainCommon,
    /// Loss to minimize
    #[arg(long, value_enum, default_value_t = LossArg::Mse)]
    loss: LossArg,
}

#[derive(Debug, Args, Serialize)]
struct CompareArgs {
    #[command(flatten)]
    common: TrainCommon,
    /// Number of seeds, counted up from `--seed`
    #[arg(long, default_value_t = 10)]
    seeds: u64,
}

#[derive(Debug, Args, Serialize)]
struct TrainCommon {
    /// `example1`, `chain:N` or `dag:S,A`
    #[arg(long, default_value = "chain:5")]
    env: String,
    /// Logistic loss scale
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 50)]
    steps_per_epoch: usize,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 3e-4)]
    lr: f64,
    #[arg(long, default_value_t = 0.99)]
    gamma: f64,
    #[arg(long, default_value_t = 0.005)]
    tau: f64,
    #[arg(long, default_value_t = 1.0)]
    reward_scale: f64,
    /// Epochs without a lower mean loss before stopping (0 disables)
    #[arg(long, default_value_t = 50)]
    patience: usize,
    /// Hidden units of a two-layer network; 0 trains a table
    #[arg(long, default_value_t = 0)]
    hidden: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LossArg {
    Mse,
    Lloss,
}

impl TrainCommon {
    fn config(&self, loss: LossArg, seed: u64) -> TrainConfig {
        TrainConfig {
            loss: match loss {
                LossArg::Mse => LossKind::Mse,
                LossArg::Lloss => LossKind::LLoss { sigma: self.sigma },
            },
            q_function: if self.hidden == 0 { QFunctionKind::Tabular } else { QFunctionKind::Mlp { hidden: self.hidden } },
            batch_size: self.batch_size,
            lr: self.lr,
            gamma: self.gamma,
            tau: self.tau,
            reward_scale: self.reward_scale,
            max_epochs: self.epochs,
            steps_per_epoch: self.steps_per_epoch,
            patience: (self.patience > 0).then_some(self.patience),
            seed,
            ..TrainConfig::default()
        }
    }
}

/// Parse `example1`, `chain:N` or `dag:S,A` (the DAG is generated from seed 0).
pub fn parse_env(spec: &str, gamma: f64) -> Result<TabularMdp> {
    let bad = || Error::Parse(format!("unknown environment `{spec}`; use example1, chain:N or dag:S,A"));
    if spec == "example1" {
        return Ok(make_example1());
    }
    let (kind, rest) = spec.split_once(':').ok_or_else(bad)?;
    let nums: Vec<usize> = rest
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    match (kind, nums.as_slice()) {
        ("chain", [n]) => make_chain(*n, gamma),
        ("dag", [s, a]) => make_random_dag(*s, *a, gamma, 0),
        _ => Err(bad()),
    }
}

/// Provenance record written after every successful run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub argv: Vec<String>,
    pub seed: u64,
    pub tool_version: String,
    /// every flag after defaults are applied
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
    pub wall_time_s: f64,
}

/// Collects output files and writes each one through a temporary sibling and a rename.
struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, json_text(value)?.as_bytes())
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Pretty JSON with keys sorted at every level.
fn json_text<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn csv_text(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn csv_rows(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    csv_text(|buf| {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn num(v: f64) -> String {
    crate::dist::format_float(v)
}

/// What a subcommand produced: the stdout text in each format.
struct Emitted {
    json: String,
    csv: Option<String>,
}

fn run(cli: &Cli, out: &mut Outputs) -> Result<Emitted> {
    let g = &cli.global;
    match &cli.command {
        Command::Example1(a) => example1(a, g.seed, out),
        Command::Fit(a) => {
            let data = SampleBatch::read_csv_column(fs::File::open(&a.input)?, &a.column)?;
            let opts = FitOptions {
                bins: if a.bins == 0 { BinRule::FreedmanDiaconis } else { BinRule::Fixed(a.bins) },
                ks_mode: a.ks_mode.into(),
            };
            let reports = rank_families(&data, opts)?;
            let csv = csv_text(|b| write_summary_csv(&reports, b))?;
            out.write("fit_summary.csv", csv.as_bytes())?;
            out.json("fit_summary.json", &reports)?;
            Ok(Emitted { json: json_text(&reports)?, csv: Some(csv) })
        }
        Command::Klbound(a) => {
            let r = kl_bound(a.astar, a.gamma)?;
            out.json("klbound.json", &r)?;
            Ok(Emitted { json: json_text(&r)?, csv: None })
        }
        Command::NormalMax(a) => {
            #[derive(Serialize)]
            struct Report {
                n: u64,
                a_n: f64,
                b_n: f64,
                intermediates: crate::normal_max::Intermediates,
                mc_replicates: Option<usize>,
                mc_ks: Option<f64>,
            }
            let p = normal_max_gumbel(a.n)?;
            let mc_ks = if a.mc > 0 { Some(monte_carlo_ks(a.n, a.mc, g.seed)?) } else { None };
            let r = Report {
                n: p.n,
                a_n: p.a_n,
                b_n: p.b_n,
                intermediates: p.intermediates,
                mc_replicates: (a.mc > 0).then_some(a.mc),
                mc_ks,
            };
            out.json("normal_max.json", &r)?;
            Ok(Emitted { json: json_text(&r)?, csv: None })
        }
        Command::SamplingError(a) => {
            let reports = a.n.iter().map(|&n| sampling_error(n, a.a, a.b)).collect::<Result<Vec<_>>>()?;
            let rows: Vec<Vec<String>> = reports
                .iter()
                .map(|r| vec![r.n.to_string(), num(r.s_e), num(r.bias), num(r.variance)])
                .collect();
            let csv = csv_rows(&["n", "s_e", "bias", "variance"], &rows)?;
            out.write("sampling_error.csv", csv.as_bytes())?;
            Ok(Emitted { json: json_text(&reports)?, csv: Some(csv) })
        }
        Command::Scaling(a) => {
            let sample = RewardSample::new(a.rewards.clone(), a.beta)?;
            let grid = parse_grid(&a.phi_grid)?;
            let curve = scaling_curve(&sample, &grid)?;
            let rows: Vec<Vec<String>> = curve
                .points
                .iter()
                .map(|p| vec![num(p.phi), num(p.expected_error), p.in_admissible_range.to_string()])
                .collect();
            let csv = csv_rows(&["phi", "expected_error", "in_admissible_range"], &rows)?;
            out.write("scaling_curve.csv", csv.as_bytes())?;
            #[derive(Serialize)]
            struct Summary {
                cond1: bool,
                cond2: bool,
                phi_star: Option<f64>,
                expected_error_at_phi_star: Option<f64>,
            }
            let s = Summary {
                cond1: curve.cond1,
                cond2: curve.cond2,
                phi_star: curve.phi_star,
                expected_error_at_phi_star: curve.phi_star.map(|p| expected_error(&sample, p)).transpose()?,
            };
            out.json("scaling_summary.json", &s)?;
            Ok(Emitted { json: json_text(&s)?, csv: Some(csv) })
        }
        Command::Losscheck(a) => losscheck(a, out),
        Command::Train(a) => {
            let env = parse_env(&a.common.env, a.common.gamma)?;
            let log = run_training(&env, &a.common.config(a.loss, g.seed))?;
            let csv = csv_text(|b| log.write_reward_csv(b))?;
            out.write("reward_curve.csv", csv.as_bytes())?;
            for (epoch, batch) in log.bellman_errors.iter().enumerate() {
                if let Some(b) = batch {
                    let text = csv_text(|buf| b.write_csv(buf))?;
                    out.write(&format!("bellman_errors_epoch{epoch:04}.csv"), text.as_bytes())?;
                }
            }
            #[derive(Serialize)]
            struct Summary<'a> {
                env: &'a str,
                config: &'a TrainConfig,
                epochs_run: usize,
                stopped_early: bool,
                average_reward: f64,
                final_greedy_return: f64,
                final_policy: &'a [usize],
                mean_bellman_error: Option<f64>,
            }
            let s = Summary {
                env: &a.common.env,
                config: &log.config,
                epochs_run: log.epochs.len(),
                stopped_early: log.stopped_early,
                average_reward: log.average_reward(),
                final_greedy_return: log.epochs.last().map_or(f64::NAN, |e| e.greedy_return),
                final_policy: &log.final_policy,
                mean_bellman_error: log.mean_bellman_error(),
            };
            out.json("train_summary.json", &s)?;
            Ok(Emitted { json: json_text(&s)?, csv: Some(csv) })
        }
        Command::Compare(a) => {
            let env = parse_env(&a.common.env, a.common.gamma)?;
            let seeds: Vec<u64> = (g.seed..g.seed + a.seeds).collect();
            let cmp = compare_losses(&env, &a.common.config(LossArg::Lloss, g.seed), &seeds)?;
            let rows: Vec<Vec<String>> = cmp
                .per_seed
                .iter()
                .map(|p| vec![p.seed.to_string(), num(p.mse_average_reward), num(p.lloss_average_reward)])
                .collect();
            let csv = csv_rows(&["seed", "mse_average_reward", "lloss_average_reward"], &rows)?;
            out.write("compare.csv", csv.as_bytes())?;
            out.json("compare.json", &cmp)?;
            Ok(Emitted { json: json_text(&cmp)?, csv: Some(csv) })
        }
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Parse(format!("grid `{s}` is not lo:hi:points"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    linear_grid(lo, hi, n)
}

fn example1(a: &Example1Args, seed: u64, out: &mut Outputs) -> Result<Emitted> {
    let init = match a.init {
        InitFamily::Normal => DistSpec::normal(0.0, 1.0)?,
        InitFamily::Gumbel => DistSpec::gumbel(0.0, 1.0)?,
    };
    let sampler = TreeRowSampler::new(a.actions, 5, 1.0, 0.99, init)?;
    let opts = FitOptions { bins: BinRule::Fixed(a.bins), ks_mode: KsMode::TwoSided };
    #[derive(Serialize)]
    struct IterationFits {
        t: usize,
        eps_gap: Vec<crate::fit::FitReport>,
        bellman_err: Vec<crate::fit::FitReport>,
    }
    let mut all = Vec::new();
    for t in 1..=a.iters {
        let snap = sampler.sample_root(t, seed)?;
        let text = csv_text(|b| snap.write_csv(b))?;
        out.write(&format!("snapshot_t{t}.csv"), text.as_bytes())?;
        let gap = rank_families(&SampleBatch::new(snap.eps_gap.clone(), Some(seed))?, opts)?;
        let err = rank_families(&SampleBatch::new(snap.bellman_err.clone(), Some(seed))?, opts)?;
        let fits = IterationFits { t, eps_gap: gap, bellman_err: err };
        out.json(&format!("fits_t{t}.json"), &fits)?;
        all.push(fits);
    }
    let rows: Vec<Vec<String>> = all
        .iter()
        .flat_map(|f| {
            [("eps_gap", &f.eps_gap), ("bellman_err", &f.bellman_err)].map(|(which, reps)| {
                let best = &reps[0];
                vec![f.t.to_string(), which.to_string(), best.family.to_string(), num(best.ks)]
            })
        })
        .collect();
    let csv = csv_rows(&["t", "quantity", "best_family", "ks"], &rows)?;
    Ok(Emitted { json: json_text(&all)?, csv: Some(csv) })
}

fn losscheck(a: &LossArgs, out: &mut Outputs) -> Result<Emitted> {
    let cfg = LossConfig::new(a.sigma)?;
    let grid = parse_grid(&a.t_grid)?;
    let h = 1e-6;
    let mut rows = Vec::with_capacity(grid.len());
    let mut worst_ratio: f64 = 0.0;
    let mut worst_grad: f64 = 0.0;
    for &t in &grid {
        let e = t * a.sigma;
        let gap = taylor_gap(t);
        let ratio = if t == 0.0 { 0.0 } else { gap.abs() / t.powi(4) };
        let g = l_loss_grad(&[e], &cfg)?[0];
        let fd = (l_loss(&[e + h], &cfg)? - l_loss(&[e - h], &cfg)?) / (2.0 * h);
        worst_ratio = worst_ratio.max(ratio);
        worst_grad = worst_grad.max((g - fd).abs());
        rows.push(vec![num(t), num(lloss_element(t)), num(4f64.ln() + 0.5 * mse_loss(&[t])?), num(gap), num(g), num(fd)]);
    }
    let csv = csv_rows(&["t", "lloss", "mse_plus_ln4", "gap", "grad", "grad_fd"], &rows)?;
    out.write("losscheck.csv", csv.as_bytes())?;
    #[derive(Serialize)]
    struct Summary<'a> {
        sigma: f64,
        t_grid: &'a str,
        max_gap_over_t4: f64,
        max_grad_error: f64,
    }
    let s = Summary { sigma: a.sigma, t_grid: &a.t_grid, max_gap_over_t4: worst_ratio, max_grad_error: worst_grad };
    out.json("losscheck_summary.json", &s)?;
    Ok(Emitted { json: json_text(&s)?, csv: Some(csv) })
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Example1(_) => "example1",
        Command::Fit(_) => "fit",
        Command::Klbound(_) => "klbound",
        Command::NormalMax(_) => "normal-max",
        Command::SamplingError(_) => "sampling-error",
        Command::Scaling(_) => "scaling",
        Command::Losscheck(_) => "losscheck",
        Command::Train(_) => "train",
        Command::Compare(_) => "compare",
    }
}

/// Parse `args`, run, print, and return the process exit code.
pub fn run_from<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let start = Instant::now();
    let result = Outputs::new(&cli.global.out).and_then(|mut out| {
        let emitted = run(&cli, &mut out)?;
        let text = match (cli.global.format, emitted.csv) {
            (Format::Csv, Some(csv)) => csv,
            _ => emitted.json,
        };
        stdout.write_all(text.as_bytes())?;
        let manifest = RunManifest {
            subcommand: subcommand_name(&cli.command).to_string(),
            argv: argv.iter().map(|a| a.to_string_lossy().into_owned()).collect(),
            seed: cli.global.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: serde_json::json!({ "global": &cli.global, "command": &cli.command }),
            outputs: out.files.clone(),
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        write_atomic(&out.dir.join("manifest.json"), json_text(&manifest)?.as_bytes())
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

/// Entry point for the `bellman` binary.
pub fn main() -> i32 {
    run_from(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_from(args.iter().copied(), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(call(&["bellman", "nonsense"]).0, 2);
        assert_eq!(call(&["bellman", "klbound", "--gamma", "0.9"]).0, 2);
        assert_eq!(call(&["bellman", "--help"]).0, 0);
    }

    #[test]
    fn domain_errors_exit_1() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, _, err) = call(&["bellman", "--out", out, "klbound", "--astar", "1", "--gamma", "1.5"]);
        assert_eq!(code, 1);
        assert!(err.contains("gamma"));
        assert_eq!(call(&["bellman", "--out", out, "normal-max", "--n", "1"]).0, 1);
    }

    #[test]
    fn sampling_error_csv_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, text, _) = call(&["bellman", "--out", out, "--format", "csv", "sampling-error", "--n", "2,256"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,s_e,bias,variance");
        assert!(lines[1].starts_with("2,0.0189"));
        assert!(lines[2].starts_with("256,1.25"));
        let m: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m["subcommand"], "sampling-error");
        assert_eq!(m["outputs"][0], "sampling_error.csv");
        assert_eq!(m["parameters"]["command"]["sampling-error"]["b"], 1.0);
    }

    #[test]
    fn klbound_reports_domination_at_100() {
        let dir = tempfile::tempdir().unwrap();
        let (code, text, _) =
            call(&["bellman", "--out", dir.path().to_str().unwrap(), "klbound", "--astar", "100", "--gamma", "0.99"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let bound = v["bound"].as_f64().unwrap();
        assert!(bound < 13.0 && v["numeric_kl"].as_f64().unwrap() <= bound);
    }

    #[test]
    fn env_specs() {
        assert_eq!(parse_env("chain:5", 0.99).unwrap().n_states(), 5);
        assert_eq!(parse_env("dag:12,3", 0.99).unwrap().n_actions(), 3);
        assert_eq!(parse_env("example1", 0.99).unwrap().n_actions(), 5000);
        assert!(parse_env("dag:12", 0.99).is_err());
        assert!(parse_env("grid:3", 0.99).is_err());
    }

    #[test]
    fn json_keys_are_sorted() {
        #[derive(Serialize)]
        struct T {
            zeta: u8,
            alpha: u8,
        }
        let s = json_text(&T { zeta: 1, alpha: 2 }).unwrap();
        assert!(s.find("alpha").unwrap() < s.find("zeta").unwrap());
    }
}
