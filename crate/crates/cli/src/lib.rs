//! `spin-order`: command-line access to thresholds, exact laws, the order
//! estimator and the reproducible experiments.
//!
//! Every subcommand writes a single JSON document or a CSV table to stdout
//! (or `--out`). Exit status is 0 on success, 2 on a usage error and 1 when
//! the library rejects the request; in both failure cases stderr carries one
//! line of JSON naming the error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use spin_order::experiments::{block_rng, write_csv, Manifest};
use spin_order::model::ConfigurationSampler;
use spin_order::samples::{read_samples, write_samples, SampleHeader};
use spin_order::{
    analyze_landscape, classify_phase, contiguity_curve, critical_point, magnetization_law,
    nearest_lambda, order_sets, s_pq, sample_magnetization, success_curve, theta_confusion_demo,
    theta_set, Estimate, ModelParams, OrderEstimator, Phase, ThetaSet, DEFAULT_HARD_CAP,
    DEFAULT_TOL,
};

/// Commit the binary was built from, or `unknown` outside a git checkout.
pub const GIT_HASH: &str = env!("SPIN_ORDER_GIT_HASH");

#[derive(Parser, Debug)]
#[command(
    name = "spin-order",
    version,
    about = "Interaction-order analysis for the p-spin Curie-Weiss model"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for every random draw
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Numerical tolerance for root finding and phase classification
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical threshold beta*(p) and critical magnetization m_p
    Phase {
        #[arg(long)]
        p: u32,
    },
    /// Landscape of H at (beta, p) and its largest global maximizer
    #[command(allow_negative_numbers = true)]
    Mstar {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: u32,
    },
    /// Coupling s(p, q) at which orders p and q share a maximizer
    Spq {
        #[arg(long)]
        p: u32,
        #[arg(long)]
        q: u32,
    },
    /// Members (p, beta_p) of the slice Theta_m
    #[command(allow_negative_numbers = true)]
    Theta {
        #[arg(long)]
        m: f64,
    },
    /// Estimability partition of the orders 2..=pmax at a known beta
    #[command(allow_negative_numbers = true)]
    OrderSets {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        pmax: u32,
    },
    /// Pair (p, q) whose s(p, q) is nearest to beta
    #[command(allow_negative_numbers = true)]
    NearestLambda {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        pmax: u32,
    },
    /// Exact law of the spin sum
    #[command(allow_negative_numbers = true)]
    Law {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: usize,
    },
    /// Exact draws of the spin sum, or of full configurations with --configs
    #[command(allow_negative_numbers = true)]
    Sample {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: usize,
        /// Write configurations in the spin-sample text format
        #[arg(long)]
        configs: bool,
    },
    /// Estimate the interaction order from a magnetization or a sample file
    #[command(allow_negative_numbers = true)]
    Estimate {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, required_unless_present = "data", conflicts_with = "data")]
        xbar: Option<f64>,
        /// Spin-sample file; one estimate per configuration plus a majority vote
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_HARD_CAP)]
        hard_cap: u32,
    },
    /// Reproducible experiments
    #[command(subcommand)]
    Exp(Experiment),
}

#[derive(Subcommand, Debug)]
enum Experiment {
    /// Success probability of the estimator across system sizes
    #[command(allow_negative_numbers = true)]
    Success {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: u32,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        ngrid: Vec<usize>,
        /// Monte Carlo replicates per grid point (0 disables)
        #[arg(long, default_value_t = 0)]
        mc: usize,
    },
    /// Distance to the product law and likelihood ratios on E_K
    #[command(allow_negative_numbers = true)]
    Contiguity {
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        p: u32,
        #[arg(long = "K")]
        k: f64,
        /// Mean of the product law; chosen from the phase when absent
        #[arg(long)]
        m: Option<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        ngrid: Vec<usize>,
    },
    /// Conditional distances between the first two members of Theta_m
    #[command(allow_negative_numbers = true)]
    ThetaDemo {
        #[arg(long)]
        m: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        ngrid: Vec<usize>,
    },
}

enum Failure {
    Usage(String),
    Domain(spin_order::Error),
}

impl From<spin_order::Error> for Failure {
    fn from(e: spin_order::Error) -> Self {
        Failure::Domain(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Domain(e.into())
    }
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
}

/// Rendered command output plus an optional sidecar for CSV experiments.
struct Output {
    body: Vec<u8>,
    sidecar: Option<Vec<u8>>,
}

impl Output {
    fn plain(body: Vec<u8>) -> Self {
        Output {
            body,
            sidecar: None,
        }
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, Failure> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| spin_order::Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(buf)
}

fn render<J: Serialize, R: Serialize>(
    format: Format,
    json: &J,
    rows: &[R],
) -> Result<Output, Failure> {
    Ok(Output::plain(match format {
        Format::Json => json_bytes(json)?,
        Format::Csv => csv_bytes(rows)?,
    }))
}

#[derive(Serialize)]
struct Report<'a, S: Serialize, R: Serialize> {
    manifest: &'a Manifest,
    summary: S,
    rows: &'a [R],
}

#[derive(Serialize)]
struct Sidecar<'a, S: Serialize> {
    manifest: &'a Manifest,
    summary: S,
}

/// JSON embeds the manifest; CSV carries it in `<out>.manifest.json`.
fn render_experiment<S: Serialize, R: Serialize>(
    format: Format,
    manifest: &Manifest,
    summary: S,
    rows: &[R],
) -> Result<Output, Failure> {
    match format {
        Format::Json => Ok(Output::plain(json_bytes(&Report {
            manifest,
            summary,
            rows,
        })?)),
        Format::Csv => Ok(Output {
            body: csv_bytes(rows)?,
            sidecar: Some(json_bytes(&Sidecar { manifest, summary })?),
        }),
    }
}

#[derive(Serialize)]
struct LandscapeOut {
    beta: f64,
    p: u32,
    phase: Phase,
    m_star: f64,
    global_max_value: f64,
    maximizers: Vec<f64>,
    local_maxima: Vec<f64>,
    stationary_points: Vec<f64>,
}

#[derive(Serialize)]
struct LandscapeRow {
    beta: f64,
    p: u32,
    phase: Phase,
    m_star: f64,
    global_max_value: f64,
}

#[derive(Serialize)]
struct SpqOut {
    p: u32,
    q: u32,
    s: f64,
    m: f64,
}

#[derive(Serialize, Clone, Copy)]
struct Member {
    p: u32,
    beta: f64,
}

#[derive(Serialize)]
struct ThetaOut {
    m: f64,
    /// `m = 0`: the slice is the whole subcritical region for `p >= 3`.
    below_threshold: bool,
    p_stop: Option<u32>,
    members: Vec<Member>,
}

#[derive(Serialize)]
struct OrderRow {
    p: u32,
    set: &'static str,
    beta_star: f64,
}

#[derive(Serialize)]
struct NearestOut {
    beta: f64,
    p_max: u32,
    p: u32,
    q: u32,
    s: f64,
    distance: f64,
}

#[derive(Serialize)]
struct LawRow {
    s: i64,
    xbar: f64,
    prob: f64,
    log_prob: f64,
}

#[derive(Serialize)]
struct LawOut<'a> {
    beta: f64,
    p: u32,
    n: usize,
    log_partition: f64,
    mean_xbar: f64,
    support: &'a [LawRow],
}

#[derive(Serialize)]
struct DrawRow {
    rep: usize,
    s: i64,
    xbar: f64,
}

#[derive(Serialize)]
struct DrawsOut<'a> {
    beta: f64,
    p: u32,
    n: usize,
    reps: usize,
    seed: u64,
    draws: &'a [DrawRow],
}

#[derive(Serialize)]
struct EstimateOut<'a> {
    beta: f64,
    delta: f64,
    xbar: f64,
    hard_cap: u32,
    p_hat: Estimate,
    q_cap: i64,
    candidates: &'a [spin_order::Candidate],
    warning: Option<String>,
}

#[derive(Serialize)]
struct CandidateRow {
    q: u32,
    m_star: f64,
    distance: f64,
    selected: bool,
}

#[derive(Serialize)]
struct LineEstimate {
    config: usize,
    xbar: f64,
    p_hat: Estimate,
}

#[derive(Serialize)]
struct Vote {
    p_hat: Estimate,
    count: usize,
}

#[derive(Serialize)]
struct DataEstimateOut<'a> {
    beta: f64,
    delta: f64,
    hard_cap: u32,
    source: &'a SampleHeader,
    estimates: &'a [LineEstimate],
    votes: Vec<Vote>,
    majority: Option<Estimate>,
}

#[derive(Serialize)]
struct SuccessSummary {
    beta: f64,
    p: u32,
    delta: f64,
    hard_cap: u32,
    fitted_rate: Option<f64>,
    fit_r2: Option<f64>,
    fit_points: usize,
}

#[derive(Serialize)]
struct ContiguitySummary {
    beta: f64,
    p: u32,
    phase: Phase,
    m: f64,
    k: f64,
}

#[derive(Serialize)]
struct ConfusionSummary {
    m: f64,
    first: Member,
    second: Member,
}

/// Votes ordered by order ascending with `Abstain` last; the first vote with
/// the largest count wins, so ties go to the smallest order.
fn tally(estimates: &[LineEstimate]) -> (Vec<Vote>, Option<Estimate>) {
    let mut counts: BTreeMap<(bool, u32), usize> = BTreeMap::new();
    for e in estimates {
        let key = match e.p_hat {
            Estimate::Order(q) => (false, q),
            Estimate::Abstain => (true, 0),
        };
        *counts.entry(key).or_default() += 1;
    }
    let votes: Vec<Vote> = counts
        .into_iter()
        .map(|((abstain, q), count)| Vote {
            p_hat: if abstain {
                Estimate::Abstain
            } else {
                Estimate::Order(q)
            },
            count,
        })
        .collect();
    let mut majority: Option<&Vote> = None;
    for v in &votes {
        if majority.is_none_or(|m| v.count > m.count) {
            majority = Some(v);
        }
    }
    let majority = majority.map(|v| v.p_hat);
    (votes, majority)
}

fn estimate_from_file(
    beta: f64,
    delta: f64,
    hard_cap: u32,
    path: &Path,
    format: Format,
) -> Result<Output, Failure> {
    let file =
        File::open(path).map_err(|e| spin_order::Error::Io(format!("{}: {e}", path.display())))?;
    let samples = read_samples(BufReader::new(file))?;
    let est = OrderEstimator::new(beta, delta, hard_cap)?;
    let estimates: Vec<LineEstimate> = samples
        .xbars()
        .into_iter()
        .enumerate()
        .map(|(i, xbar)| LineEstimate {
            config: i + 1,
            xbar,
            p_hat: est.estimate_order(xbar),
        })
        .collect();
    let (votes, majority) = tally(&estimates);
    let out = DataEstimateOut {
        beta,
        delta,
        hard_cap,
        source: &samples.header,
        estimates: &estimates,
        votes,
        majority,
    };
    render(format, &out, &estimates)
}

fn execute(cli: &Cli, argv: &[String]) -> Result<Output, Failure> {
    let g = &cli.global;
    let tol = g.tol;
    match &cli.command {
        Command::Phase { p } => {
            let cp = critical_point(*p, tol)?;
            render(g.format, &cp, &[cp])
        }
        Command::Mstar { beta, p } => {
            let s = analyze_landscape(*beta, *p, tol)?;
            let phase = classify_phase(*beta, *p, tol)?;
            let row = LandscapeRow {
                beta: *beta,
                p: *p,
                phase,
                m_star: s.m_star,
                global_max_value: s.global_max_value,
            };
            let out = LandscapeOut {
                beta: *beta,
                p: *p,
                phase,
                m_star: s.m_star,
                global_max_value: s.global_max_value,
                maximizers: s.maximizers,
                local_maxima: s.local_maxima,
                stationary_points: s.stationary_points,
            };
            render(g.format, &out, &[row])
        }
        Command::Spq { p, q } => {
            let (s, m) = s_pq(*p, *q)?;
            let out = SpqOut { p: *p, q: *q, s, m };
            render(g.format, &out, &[&out])
        }
        Command::Theta { m } => {
            let out = match theta_set(*m)? {
                ThetaSet::BelowThreshold => ThetaOut {
                    m: *m,
                    below_threshold: true,
                    p_stop: None,
                    members: vec![],
                },
                ThetaSet::Finite(slice) => ThetaOut {
                    m: *m,
                    below_threshold: false,
                    p_stop: Some(slice.p_stop),
                    members: slice
                        .members
                        .iter()
                        .map(|&(p, beta)| Member { p, beta })
                        .collect(),
                },
            };
            render(g.format, &out, &out.members)
        }
        Command::OrderSets { beta, pmax } => {
            let sets = order_sets(*beta, *pmax, tol)?;
            let mut rows = Vec::new();
            for (label, members) in [
                ("U", &sets.u_set),
                ("L1", &sets.l1_set),
                ("L2", &sets.l2_set),
                ("boundary", &sets.boundary_set),
            ] {
                for &p in members {
                    rows.push(OrderRow {
                        p,
                        set: label,
                        beta_star: critical_point(p, DEFAULT_TOL)?.beta_star,
                    });
                }
            }
            rows.sort_by_key(|r| r.p);
            render(g.format, &sets, &rows)
        }
        Command::NearestLambda { beta, pmax } => {
            let (p, q, s, distance) = nearest_lambda(*beta, *pmax)?;
            let out = NearestOut {
                beta: *beta,
                p_max: *pmax,
                p,
                q,
                s,
                distance,
            };
            render(g.format, &out, &[&out])
        }
        Command::Law { beta, p, n } => {
            let law = magnetization_law(&ModelParams::new(*beta, *p, *n)?)?;
            let rows: Vec<LawRow> = (0..law.len())
                .map(|i| LawRow {
                    s: law.spin(i),
                    xbar: law.xbar(i),
                    prob: law.log_prob[i].exp(),
                    log_prob: law.log_prob[i],
                })
                .collect();
            let out = LawOut {
                beta: *beta,
                p: *p,
                n: *n,
                log_partition: law.log_partition,
                mean_xbar: law.mean_xbar(),
                support: &rows,
            };
            render(g.format, &out, &rows)
        }
        Command::Sample {
            beta,
            p,
            n,
            reps,
            configs,
        } => {
            let params = ModelParams::new(*beta, *p, *n)?;
            let mut rng = block_rng(g.seed, 0);
            if *configs {
                let sampler = ConfigurationSampler::new(&params)?;
                let draws: Vec<Vec<i8>> = (0..*reps).map(|_| sampler.sample(&mut rng)).collect();
                let header = SampleHeader {
                    n: *n,
                    beta: *beta,
                    p: *p,
                    seed: g.seed,
                };
                let mut buf = Vec::new();
                write_samples(&mut buf, &header, &draws)?;
                return Ok(Output::plain(buf));
            }
            let law = magnetization_law(&params)?;
            let rows: Vec<DrawRow> = sample_magnetization(&law, &mut rng, *reps)
                .into_iter()
                .enumerate()
                .map(|(rep, s)| DrawRow {
                    rep,
                    s,
                    xbar: s as f64 / *n as f64,
                })
                .collect();
            let out = DrawsOut {
                beta: *beta,
                p: *p,
                n: *n,
                reps: *reps,
                seed: g.seed,
                draws: &rows,
            };
            render(g.format, &out, &rows)
        }
        Command::Estimate {
            beta,
            delta,
            xbar,
            data,
            hard_cap,
        } => {
            if let Some(path) = data {
                return estimate_from_file(*beta, *delta, *hard_cap, path, g.format);
            }
            let xbar =
                xbar.ok_or_else(|| Failure::Usage("one of --xbar or --data is required".into()))?;
            let r = OrderEstimator::new(*beta, *delta, *hard_cap)?.estimate(xbar)?;
            let rows: Vec<CandidateRow> = r
                .candidates
                .iter()
                .map(|c| CandidateRow {
                    q: c.q,
                    m_star: c.m_star,
                    distance: c.distance,
                    selected: r.p_hat == Estimate::Order(c.q),
                })
                .collect();
            let out = EstimateOut {
                beta: *beta,
                delta: r.delta,
                xbar,
                hard_cap: *hard_cap,
                p_hat: r.p_hat,
                q_cap: r.q_cap,
                candidates: &r.candidates,
                warning: r.warning.clone(),
            };
            render(g.format, &out, &rows)
        }
        Command::Exp(exp) => {
            let args = &argv[1.min(argv.len())..];
            match exp {
                Experiment::Success {
                    beta,
                    p,
                    delta,
                    ngrid,
                    mc,
                } => {
                    let curve = success_curve(*beta, *p, *delta, ngrid, *mc, g.seed)?;
                    let manifest = Manifest::new("success", args, g.seed, GIT_HASH);
                    let summary = SuccessSummary {
                        beta: curve.beta,
                        p: curve.p,
                        delta: curve.delta,
                        hard_cap: curve.hard_cap,
                        fitted_rate: curve.fitted_rate,
                        fit_r2: curve.fit_r2,
                        fit_points: curve.fit_points,
                    };
                    render_experiment(g.format, &manifest, summary, &curve.rows)
                }
                Experiment::Contiguity {
                    beta,
                    p,
                    k,
                    m,
                    ngrid,
                } => {
                    let curve = contiguity_curve(*beta, *p, *m, *k, ngrid)?;
                    let manifest = Manifest::new("contiguity", args, g.seed, GIT_HASH);
                    let summary = ContiguitySummary {
                        beta: curve.beta,
                        p: curve.p,
                        phase: curve.phase,
                        m: curve.m,
                        k: curve.k,
                    };
                    render_experiment(g.format, &manifest, summary, &curve.rows)
                }
                Experiment::ThetaDemo { m, ngrid } => {
                    let demo = theta_confusion_demo(*m, ngrid)?;
                    let manifest = Manifest::new("theta-demo", args, g.seed, GIT_HASH);
                    let member = |(p, beta): (u32, f64)| Member { p, beta };
                    let summary = ConfusionSummary {
                        m: demo.m,
                        first: member(demo.first),
                        second: member(demo.second),
                    };
                    render_experiment(g.format, &manifest, summary, &demo.rows)
                }
            }
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn deliver(global: &GlobalOpts, output: Output, stdout: &mut dyn Write) -> Result<(), Failure> {
    match &global.out {
        Some(path) => {
            std::fs::write(path, &output.body)
                .map_err(|e| spin_order::Error::Io(format!("{}: {e}", path.display())))?;
            if let Some(sidecar) = output.sidecar {
                let side = sidecar_path(path);
                std::fs::write(&side, sidecar)
                    .map_err(|e| spin_order::Error::Io(format!("{}: {e}", side.display())))?;
            }
        }
        None => {
            stdout.write_all(&output.body)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn report(stderr: &mut dyn Write, name: &str, message: String) {
    let line = serde_json::to_string(&ErrorLine {
        error: name,
        message,
    })
    .unwrap_or_else(|_| format!("{{\"error\":\"{name}\"}}"));
    let _ = writeln!(stderr, "{line}");
}

/// Runs the command line `argv` (program name first) against the given
/// streams and returns the process exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let first = rendered
                .lines()
                .find(|l| !l.trim().is_empty())
                .unwrap_or("invalid arguments");
            report(
                stderr,
                "UsageError",
                first.trim_start_matches("error: ").to_string(),
            );
            return 2;
        }
    };
    let text: Vec<String> = argv
        .iter()
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = execute(&cli, &text).and_then(|output| deliver(&cli.global, output, stdout));
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            report(stderr, "UsageError", msg);
            2
        }
        Err(Failure::Domain(e)) => {
            report(stderr, e.name(), e.to_string());
            1
        }
    }
}

/// [`run_with`] on the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}
