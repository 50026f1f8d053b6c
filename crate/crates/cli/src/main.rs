use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use graph_pir::bounds::{best_exact, bound_report, tightness_of, Tightness};
use graph_pir::protocol::measured_rate;
use graph_pir::tables::{self, Table, TableName};
use graph_pir::verify::mutants::{leaky_order, skip_decoys, DroppedPlanRef};
use graph_pir::verify::PrivacyMode;
use graph_pir::{build_scheme, Error, FileId, GraphSpec, Scheme, SeededSource, VerifyConfig};

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

/// Private information retrieval over graph-based replicated storage.
#[derive(Parser)]
#[command(name = "graph-pir", version)]
struct Cli {
    /// Seed for all randomness.
    #[arg(long, global = true, env = "GRAPH_PIR_SEED", default_value_t = 0)]
    seed: u64,

    /// Output format; `sweep` defaults to csv, everything else to md.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Md,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scheme once and print its transcript.
    Run(RunArgs),
    /// Check reliability, privacy, SRP and rate of a scheme.
    Verify(VerifyArgs),
    /// Capacity bounds for a graph.
    Bounds {
        #[arg(long)]
        graph: String,
    },
    /// Render one of the summary or answer tables.
    Table {
        /// tableI, tableII, tableIII or tableIV
        #[arg(long)]
        name: String,
    },
    /// Rates and bounds over a family and parameter ranges.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct SchemeArgs {
    /// Family shorthand (`path:4`, `complete:3^2`) or a JSON graph object.
    #[arg(long)]
    graph: String,
    /// path, star, complete, compose-stars, lift:<base> or auto; the
    /// negative controls are mutant:dropped-ref:<base>, mutant:leaky-order
    /// and mutant:skip-decoys.
    #[arg(long, default_value = "auto")]
    scheme: String,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Desired file, `e` or `e.j`; defaults to the first file.
    #[arg(long)]
    theta: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Seeded runs per file.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Random stores decoded per run.
    #[arg(long, default_value_t = 1)]
    decode_trials: u64,
    /// auto, exact, structural, statistical or off.
    #[arg(long, default_value = "auto")]
    privacy: String,
    /// Statistical samples per file.
    #[arg(long, default_value_t = 200_000)]
    samples: u64,
    /// Largest total variation accepted by the statistical check.
    #[arg(long, default_value_t = 0.02)]
    tolerance: f64,
    /// Largest randomness space enumerated by the exact check.
    #[arg(long, default_value_t = 1 << 20)]
    budget: u64,
}

#[derive(Args)]
struct SweepArgs {
    /// path, cycle, star, complete or complete_bipartite.
    #[arg(long)]
    family: String,
    #[arg(long, default_value = "auto")]
    scheme: String,
    /// Vertex count (or right part size for complete_bipartite), `a..b` inclusive.
    #[arg(long)]
    n: String,
    /// Left part sizes for complete_bipartite.
    #[arg(long, default_value = "1")]
    m: String,
    /// Multiplicities.
    #[arg(long, default_value = "1")]
    r: String,
    #[arg(long, default_value_t = 8)]
    max_n: usize,
    #[arg(long, default_value_t = 4)]
    max_r: usize,
}

enum Failure {
    Usage(String),
    Verification,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err((out, Failure::Verification)) => {
            print!("{out}");
            ExitCode::from(1)
        }
        Err((_, Failure::Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<String, (String, Failure)> {
    let usage = |f: Failure| (String::new(), f);
    let fmt = |default| cli.format.unwrap_or(default);
    match &cli.command {
        Command::Run(a) => cmd_run(a, cli.seed, fmt(Format::Md)).map_err(usage),
        Command::Verify(a) => cmd_verify(a, cli.seed, fmt(Format::Md)),
        Command::Bounds { graph } => cmd_bounds(graph, fmt(Format::Md)).map_err(usage),
        Command::Table { name } => cmd_table(name, fmt(Format::Md)).map_err(usage),
        Command::Sweep(a) => cmd_sweep(a, cli.seed, fmt(Format::Csv)).map_err(usage),
    }
}

fn build(args: &SchemeArgs) -> Result<(GraphSpec, Box<dyn Scheme>), Failure> {
    let g = GraphSpec::parse(&args.graph)?;
    let s: Box<dyn Scheme> = match args.scheme.strip_prefix("mutant:") {
        Some("leaky-order") => Box::new(leaky_order(&g)?),
        Some("skip-decoys") => Box::new(skip_decoys(&g)?),
        Some(rest) => match rest.strip_prefix("dropped-ref:") {
            Some(base) => Box::new(DroppedPlanRef::new(build_scheme(base, &g)?)),
            None => return Err(Failure::Usage(format!("unknown mutant `{rest}`"))),
        },
        None => build_scheme(&args.scheme, &g)?,
    };
    Ok((g, s))
}

fn render(t: &Table, f: Format) -> String {
    match f {
        Format::Md => t.to_markdown(),
        Format::Csv => t.to_csv(),
        Format::Json => t.to_json() + "\n",
    }
}

fn cmd_run(a: &RunArgs, seed: u64, f: Format) -> Result<String, Failure> {
    let (g, s) = build(&a.scheme)?;
    let theta = match &a.theta {
        Some(t) => t.parse::<FileId>()?,
        None => s.thetas()[0],
    };
    let t = s.run(theta, &mut SeededSource::new(seed))?;
    let rate = measured_rate(&t)?;
    Ok(match f {
        Format::Md => format!("{}rate {rate}\n", t.dump()),
        Format::Csv => {
            let rows = t
                .requests()
                .enumerate()
                .map(|(k, r)| vec![r.server.to_string(), (k + 1).to_string(), r.form.to_string()])
                .collect();
            let header = ["server", "request", "form"].map(String::from).to_vec();
            let table = Table { name: "run".into(), title: format!("{} rate {rate}", s.name()), header, rows };
            table.to_csv()
        }
        Format::Json => {
            let v = json!({
                "graph": g,
                "scheme": s.name(),
                "theta": theta.to_string(),
                "seed": seed,
                "file_length": t.file_length(),
                "downloads": t.download_count(),
                "rate": rate.to_string(),
                "transcript": t,
            });
            serde_json::to_string_pretty(&v).expect("run output serializes") + "\n"
        }
    })
}

fn cmd_verify(a: &VerifyArgs, seed: u64, f: Format) -> Result<String, (String, Failure)> {
    let usage = |e: Failure| (String::new(), e);
    let (_, s) = build(&a.scheme).map_err(usage)?;
    let privacy: PrivacyMode = a.privacy.parse().map_err(|e: Error| usage(e.into()))?;
    let cfg = VerifyConfig {
        seed,
        seeds: a.seeds,
        decode_trials: a.decode_trials,
        privacy,
        samples: a.samples,
        tolerance: a.tolerance,
        budget: a.budget,
    };
    let report = graph_pir::verify_scheme(&*s, &cfg);
    let out = match f {
        Format::Md => report.to_markdown(),
        Format::Json => report.to_json() + "\n",
        Format::Csv => {
            let mark = |ok: bool| if ok { "pass" } else { "fail" }.to_string();
            let mut rows = vec![vec!["reliability".into(), mark(report.reliability.passed)]];
            for p in &report.privacy {
                rows.push(vec![format!("privacy-{}", p.mode), mark(p.passed)]);
            }
            if report.srp.applicable {
                rows.push(vec!["srp".into(), mark(report.srp.passed)]);
            }
            rows.push(vec!["rate".into(), mark(report.rate.constant && report.rate.within_bounds)]);
            rows.push(vec!["overall".into(), mark(report.passed())]);
            let header = vec!["check".into(), "result".into()];
            Table { name: "verify".into(), title: String::new(), header, rows }.to_csv()
        }
    };
    if report.passed() {
        Ok(out)
    } else {
        Err((out, Failure::Verification))
    }
}

fn cmd_bounds(graph: &str, f: Format) -> Result<String, Failure> {
    let g = GraphSpec::parse(graph)?;
    let entries = bound_report(&g);
    let tight = tightness_of(&entries);
    if f == Format::Json {
        let v = json!({ "graph": g, "entries": entries, "tightness": tight });
        return Ok(serde_json::to_string_pretty(&v).expect("bounds serialize") + "\n");
    }
    let header = ["kind", "value", "source", "formula", "note"].map(String::from).to_vec();
    let rows = entries
        .iter()
        .map(|e| {
            let note = match (&e.reason, e.asymptotic) {
                (Some(r), _) => format!("n/a: {r}"),
                (None, true) => "asymptotic".into(),
                _ => String::new(),
            };
            let value = e.value.map(|v| v.to_string()).unwrap_or_else(|| "-".into());
            vec![e.kind.to_string(), value, e.source.clone(), e.formula.clone(), note]
        })
        .collect();
    let t = Table { name: "bounds".into(), title: format!("Bounds for {graph}"), header, rows };
    Ok(match f {
        Format::Md => format!("{}\n{tight}\n", t.to_markdown()),
        _ => t.to_csv(),
    })
}

fn cmd_table(name: &str, f: Format) -> Result<String, Failure> {
    let name: TableName = name.parse()?;
    Ok(render(&tables::render(name)?, f))
}

fn parse_range(text: &str, what: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Usage(format!("invalid {what} range `{text}`, expected `a..b` or `a`"));
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim_start_matches('=').trim().parse().map_err(|_| bad())?),
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    Ok((lo..=hi).collect())
}

fn cmd_sweep(a: &SweepArgs, seed: u64, f: Format) -> Result<String, Failure> {
    let ns = parse_range(&a.n, "n")?;
    let rs = parse_range(&a.r, "r")?;
    let bipartite = a.family == "complete_bipartite";
    let ms = if bipartite { parse_range(&a.m, "m")? } else { vec![0] };
    let over = |v: &[usize], cap: usize, what: &str| match v.iter().max() {
        Some(&x) if x > cap => Err(Failure::Usage(format!("{what} = {x} exceeds the sweep cap {cap}"))),
        _ => Ok(()),
    };
    over(&ns, a.max_n, "N")?;
    over(&ms, a.max_n, "M")?;
    over(&rs, a.max_r, "r")?;

    let mut rows = Vec::new();
    for &m in &ms {
        for &n in &ns {
            for &r in &rs {
                let base = if bipartite { format!("{}:{m},{n}", a.family) } else { format!("{}:{n}", a.family) };
                let spec = if r == 1 { base } else { format!("{base}^{r}") };
                let g = GraphSpec::parse(&spec)?;
                let s = build_scheme(&a.scheme, &g)?;
                let t = s.run(s.thetas()[0], &mut SeededSource::new(seed))?;
                let rate = measured_rate(&t)?;
                let entries = bound_report(&g);
                let (lb, ub) = best_exact(&entries);
                let show = |v: Option<graph_pir::Rational>| v.map(|x| x.to_string()).unwrap_or_default();
                let tight = matches!(tightness_of(&entries), Tightness::Tight { .. });
                rows.push(vec![spec, s.name(), rate.to_string(), show(lb), show(ub), tight.to_string()]);
            }
        }
    }
    let header = ["graph", "scheme", "rate", "best_lb", "best_ub", "tight"].map(String::from).to_vec();
    let t = Table { name: "sweep".into(), title: format!("Sweep over {}", a.family), header, rows };
    Ok(render(&t, f))
}
