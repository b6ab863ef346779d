//! `timerec`: validate SCM files, run the CED experiment, inspect causal
//! paths, and compute (time-aware) recourse from the command line.
//!
//! Exit codes: 0 on success, 1 when the SCM is invalid or no feasible action
//! exists, 2 on usage errors (bad flags, unreadable or malformed inputs).

use std::fs;
use std::io::Write as _;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};
use timerec_core::api::{self, CounterfactualRequest, RecourseRequest};
use timerec_core::bench::{
    ced_table, german_system, pairplot_export, random_unfavorable_individual, CedOptions, Outcome, Pairing,
    PairplotColumns,
};
use timerec_core::graph::DEFAULT_PATH_CAP;
use timerec_core::recourse::{lambda_frontier, solve, RecourseError};
use timerec_core::scm::{format_float, Action, Instance};
use timerec_core::{CausalSystem, CostSpec, Normalization, ScmFile, TimeVariant};

#[derive(Debug, Parser)]
#[command(name = "timerec", version, about = "Time-aware causal algorithmic recourse")]
struct Cli {
    /// RNG seed for sampling, CED and --random-individual.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// SCM definition file (JSON); defaults to the built-in German-Credit model.
    #[arg(long, global = true)]
    scm: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the SCM for cycles, dangling parents and invalid parameters.
    Validate,
    /// Draw an observational sample as CSV.
    Sample {
        #[arg(long)]
        n: usize,
    },
    /// Causal effect derivative of every variable on the target.
    Ced {
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long, value_enum, default_value_t = PairingArg::Common)]
        pairing: PairingArg,
        #[arg(long, value_enum, default_value_t = OutcomeArg::Probability)]
        outcome: OutcomeArg,
    },
    /// Every directed path between two nodes as CSV (path, weight, time).
    Paths {
        #[arg(long)]
        from: String,
        #[arg(long, default_value = "Y")]
        to: String,
        #[arg(long, default_value_t = DEFAULT_PATH_CAP)]
        cap: usize,
    },
    /// Classifier score, probability and label for an instance.
    Predict {
        #[command(flatten)]
        who: Who,
    },
    /// Counterfactual instance under an additive action.
    Counterfactual {
        #[command(flatten)]
        who: Who,
        /// JSON file mapping variable names to shifts.
        #[arg(long)]
        action: PathBuf,
    },
    /// Minimal-cost recourse for one λ.
    Recourse {
        #[command(flatten)]
        who: Who,
        #[arg(long, default_value_t = 0.0)]
        lambda: f64,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Recourse solved along a list of λ values.
    Frontier {
        #[command(flatten)]
        who: Who,
        /// Comma-separated λ values.
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[command(flatten)]
        cost: CostArgs,
    },
    /// Observational and shift-intervened samples in long format for pair plots.
    Pairplot {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Variables to shift, one `do_<V>` distribution each.
        #[arg(long, value_delimiter = ',', default_value = "E,I")]
        interventions: Vec<String>,
        /// Emit every variable instead of A, E, I, L.
        #[arg(long)]
        all_columns: bool,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Who {
    /// JSON file mapping variable names to values.
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Sample one unfavourable individual from the SCM using --seed.
    #[arg(long)]
    random_individual: bool,
}

#[derive(Debug, Args)]
struct CostArgs {
    #[arg(long)]
    time_budget: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value_t = NormArg::Proper)]
    norm: NormArg,
    #[arg(long, value_enum, default_value_t = VariantArg::AvgAbs)]
    variant: VariantArg,
    /// Largest number of variables acted upon.
    #[arg(short, default_value_t = 2)]
    k: usize,
}

impl CostArgs {
    fn spec(&self, lambda: f64) -> CostSpec {
        CostSpec {
            p: self.p,
            normalization: match self.norm {
                NormArg::Proper => Normalization::ProperSigma,
                NormArg::Marginal => Normalization::MarginalSigma,
                NormArg::None => Normalization::None,
            },
            lambda,
            time_variant: match self.variant {
                VariantArg::Lp => TimeVariant::LongestPath,
                VariantArg::Avg => TimeVariant::WeightedAverageRaw,
                VariantArg::AvgAbs => TimeVariant::WeightedAverageAbs,
            },
            time_budget: self.time_budget,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PairingArg {
    Common,
    Independent,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OutcomeArg {
    Probability,
    Label,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NormArg {
    Proper,
    Marginal,
    None,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Lp,
    Avg,
    AvgAbs,
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 2, error: error.into() }
    }

    fn rejected(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: 1, error: error.into() }
    }
}

impl From<RecourseError> for Failure {
    fn from(e: RecourseError) -> Self {
        match e {
            RecourseError::NoFeasibleAction(_) => Failure::rejected(e),
            other => Failure::usage(other),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.scm {
        Some(path) => ScmFile::load(path).map_err(Failure::usage)?,
        None => ScmFile::from_system(&german_system()),
    };
    if let Command::Validate = cli.command {
        let report = file.validate();
        if !report.is_ok() {
            return Err(Failure::rejected(anyhow::anyhow!("invalid SCM: {report}")));
        }
        let system = file.to_system().map_err(Failure::rejected)?;
        let text = format!(
            "ok: {} variables, {} edges ({} structural), topological order {}\n",
            system.scm().len(),
            system.dag().edges().len(),
            system.dag().structural_edge_count(),
            system.scm().topological_order().join(",")
        );
        return emit(cli.out.as_deref(), &text);
    }
    let system = file.to_system().map_err(Failure::rejected)?;
    let seed = cli.seed;
    let text = match cli.command {
        Command::Validate => unreachable!("handled above"),
        Command::Sample { n } => {
            let ds = system.scm().sample(n, seed).map_err(Failure::usage)?;
            let mut buf = Vec::new();
            ds.write_csv(&mut buf).map_err(Failure::usage)?;
            String::from_utf8(buf).expect("CSV is UTF-8")
        }
        Command::Ced { alpha, n, format, pairing, outcome } => {
            let opts = CedOptions {
                pairing: match pairing {
                    PairingArg::Common => Pairing::Common,
                    PairingArg::Independent => Pairing::Independent,
                },
                outcome: match outcome {
                    OutcomeArg::Probability => Outcome::Probability,
                    OutcomeArg::Label => Outcome::Label,
                },
                ..CedOptions::default()
            };
            let report = ced_table(system.scm(), alpha, n, seed, opts).map_err(Failure::usage)?;
            match format {
                Format::Text => report.to_text(),
                Format::Csv => report.to_csv(),
                Format::Json => json(&report),
            }
        }
        Command::Paths { from, to, cap } => {
            let paths = system.dag().enumerate_paths(&from, &to, cap).map_err(Failure::usage)?;
            let mut out = String::from("path,weight,time\n");
            for p in paths {
                out.push_str(&format!("{},{},{}\n", p.label(), format_float(p.weight), format_float(p.time)));
            }
            out
        }
        Command::Predict { who } => {
            let instance = who.resolve(&system, seed)?;
            json(&system.scm().predict(&instance).map_err(Failure::usage)?)
        }
        Command::Counterfactual { who, action } => {
            let instance = who.resolve(&system, seed)?;
            let action: Action = read_json(&action)?;
            json(&api::counterfactual(&system, &CounterfactualRequest { instance, action })?)
        }
        Command::Recourse { who, lambda, cost } => {
            let req = request(&system, &who, &cost, lambda, seed)?;
            json(&solve(&req.problem(&system))?)
        }
        Command::Frontier { who, lambdas, cost } => {
            let req = request(&system, &who, &cost, 0.0, seed)?;
            json(&lambda_frontier(&req.problem(&system), &lambdas)?)
        }
        Command::Pairplot { n, alpha, interventions, all_columns } => {
            let iv: Vec<(String, f64)> = interventions.into_iter().map(|v| (v, alpha)).collect();
            let columns = if all_columns { PairplotColumns::All } else { PairplotColumns::default() };
            pairplot_export(system.scm(), n, seed, &iv, &columns).map_err(Failure::usage)?
        }
        Command::Serve { port } => {
            let addr = SocketAddr::from((Ipv4Addr::UNSPECIFIED, port));
            let rt = tokio::runtime::Runtime::new().map_err(Failure::usage)?;
            rt.block_on(timerec_service::serve(Arc::new(system), addr)).map_err(Failure::usage)?;
            return Ok(());
        }
    };
    emit(cli.out.as_deref(), &text)
}

impl Who {
    fn resolve(&self, system: &CausalSystem, seed: u64) -> CliResult<Instance> {
        match &self.instance {
            Some(path) => read_json(path),
            None => random_unfavorable_individual(system.scm(), seed).map_err(Failure::rejected),
        }
    }
}

fn request(system: &CausalSystem, who: &Who, cost: &CostArgs, lambda: f64, seed: u64) -> CliResult<RecourseRequest> {
    let mut req = RecourseRequest::new(who.resolve(system, seed)?, cost.spec(lambda));
    req.k = cost.k;
    Ok(req)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("malformed JSON in {}", path.display()))
        .map_err(Failure::usage)
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("results always serialise");
    s.push('\n');
    s
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::usage),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()).map_err(Failure::usage)
        }
    }
}
