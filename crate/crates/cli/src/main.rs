use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use adacos::experiment::{self, ExperimentConfig};
use adacos::instance::load_instance;
use adacos::{load_costs, load_dataset, save_bundle, IoError};
use adacos_core::dataset::{make_folds, ColumnMeans};
use adacos_core::gam::{self, LassoOptions};
use adacos_core::oracle::{self, DiscretePolicy};
use adacos_core::pipeline::train_bundle;
use adacos_core::policy::Decision;
use adacos_core::seqselect::{self, CovariateSequence};
use adacos_core::splines::Features;
use adacos_core::{CostModel, Dataset, Mode, Selection, TrainConfig};
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "adacos", version, about = "Cost-sensitive adaptive covariate acquisition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model bundle on a whole dataset
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Print the nested sets from the cost-scaled group-lasso path
    Path {
        #[command(flatten)]
        common: Common,
    },
    /// Print the nested sets from greedy forward selection
    ForwardSelect {
        #[command(flatten)]
        common: Common,
    },
    /// Cross-validated evaluation
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_values_t = [ModeArg::Adacos, ModeArg::Cos, ModeArg::Full])]
        mode: Vec<ModeArg>,
        /// Outer cross-validation folds
        #[arg(long, default_value_t = 5)]
        outer_folds: usize,
        /// Write the report as JSON
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write one CSV row per classified test sample
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Write the aggregate metrics as long-format CSV
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Solve the recall threshold and the implied false-negative cost
    Threshold {
        #[command(flatten)]
        common: Common,
    },
    /// Solve a discrete instance exactly
    Oracle {
        instance: PathBuf,
        /// Also print the decision in every reachable state
        #[arg(long)]
        policy: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Adacos,
    Cos,
    Full,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Adacos => Mode::Adacos,
            ModeArg::Cos => Mode::Cos,
            ModeArg::Full => Mode::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectionArg {
    Lasso,
    Forward,
}

#[derive(Args)]
struct Common {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "class")]
    label_column: String,
    /// JSON cost file (covariate costs plus fp_cost, optional fn_cost, correct_cost)
    #[arg(long)]
    costs: Option<PathBuf>,
    /// Uniform covariate cost when no cost file is given
    #[arg(long, default_value_t = 1.0)]
    covariate_cost: f64,
    #[arg(long)]
    fp_cost: Option<f64>,
    #[arg(long, conflicts_with = "target_recall")]
    fn_cost: Option<f64>,
    /// Derive the false-negative cost from this recall
    #[arg(long)]
    target_recall: Option<f64>,
    #[arg(long)]
    correct_cost: Option<f64>,
    /// Segments of the piecewise-linear sigmoid
    #[arg(long, default_value_t = 40)]
    xi: usize,
    /// Spline basis functions per covariate
    #[arg(long, default_value_t = 10)]
    splines: usize,
    /// Inner cross-validation folds
    #[arg(long, default_value_t = 10)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = SelectionArg::Lasso)]
    selection: SelectionArg,
}

impl Common {
    fn load(&self) -> anyhow::Result<(Dataset, CostModel)> {
        let data = load_dataset(&self.data, &self.label_column)
            .with_context(|| format!("loading {}", self.data.display()))?;
        let base = match &self.costs {
            Some(path) => load_costs(path, data.names())
                .with_context(|| format!("loading {}", path.display()))?,
            None => CostModel::new(
                vec![self.covariate_cost; data.p()],
                self.fp_cost.unwrap_or(1.0),
                None,
                0.0,
            )?,
        };
        let fn_cost = if self.target_recall.is_some() {
            None
        } else {
            self.fn_cost.or(base.fn_cost)
        };
        let costs = CostModel::new(
            base.covariate_costs,
            self.fp_cost.unwrap_or(base.fp_cost),
            fn_cost,
            self.correct_cost.unwrap_or(base.correct_cost),
        )?;
        Ok((data, costs))
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            basis_size: self.splines,
            xi: self.xi,
            inner_folds: self.folds,
            seed: self.seed,
            selection: match self.selection {
                SelectionArg::Lasso => Selection::Lasso,
                SelectionArg::Forward => Selection::Forward,
            },
            target_recall: self.target_recall,
            ..TrainConfig::default()
        }
    }
}

fn print_sequence(seq: &CovariateSequence, names: &[String], costs: &CostModel) {
    for (k, set) in seq.sets.iter().enumerate() {
        let labels: Vec<&str> = set.iter().map(|&i| names[i].as_str()).collect();
        let lambda = if seq.activation_lambdas.is_empty() || set.is_empty() {
            String::new()
        } else {
            format!("  lambda {:.6e}", seq.activation_lambdas[k.min(seq.activation_lambdas.len() - 1)])
        };
        println!(
            "S_{:<3} cost {:>10.3}  {{{}}}{}",
            k + 1,
            costs.set_cost(set),
            labels.join(", "),
            lambda
        );
    }
}

/// Imputed data, features, training rows and inner folds for the whole dataset.
fn prepare(data: &Dataset, common: &Common) -> anyhow::Result<(Dataset, Features, Vec<usize>)> {
    let imputed = ColumnMeans::fit(data)?.apply(data);
    let features = Features::build(&imputed, common.splines, adacos_core::splines::DEFAULT_DEGREE)?;
    let rows = (0..imputed.n()).collect();
    Ok((imputed, features, rows))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Fit { common, output } => {
            let (data, costs) = common.load()?;
            let bundle = train_bundle(&data, &costs, &common.train_config())?;
            print_sequence(bundle.sequence(), &bundle.names, &bundle.costs);
            println!("static set: S_{}", bundle.cos_index + 1);
            save_bundle(&output, &bundle)?;
        }
        Command::Path { common } => {
            let (data, costs) = common.load()?;
            let (_, features, rows) = prepare(&data, &common)?;
            let path = gam::fit_group_lasso_path(&features, &rows, &costs, LassoOptions::default())?;
            if let Some(l) = path.truncated_at {
                eprintln!("warning: path truncated at lambda {l:e}");
            }
            let seq = seqselect::nested_sets_from_path(&path)?;
            print_sequence(&seq, data.names(), &costs);
        }
        Command::ForwardSelect { common } => {
            let (data, costs) = common.load()?;
            let (imputed, features, rows) = prepare(&data, &common)?;
            let folds = make_folds(imputed.n(), common.folds, common.seed)?;
            let ridge = gam::DEFAULT_RIDGE;
            let smooth = gam::select_smooth_penalty(&features, &rows, &folds, &gam::SMOOTH_PENALTY_GRID, ridge)?;
            let seq = seqselect::forward_select(&features, &rows, &costs, &folds, smooth, ridge)?;
            print_sequence(&seq, data.names(), &costs);
        }
        Command::Evaluate {
            common,
            mode,
            outer_folds,
            json,
            traces,
            series,
        } => {
            let (data, costs) = common.load()?;
            let config = ExperimentConfig {
                modes: mode.into_iter().map(Mode::from).collect(),
                outer_folds,
                seed: common.seed,
                train: common.train_config(),
            };
            let name = common
                .data
                .file_stem()
                .map_or_else(|| "data".to_string(), |s| s.to_string_lossy().into_owned());
            let run = experiment::run_experiment(&name, &data, &costs, &config)?;
            print!("{}", experiment::text_summary(&run.report));
            if let Some(path) = json {
                serde_json::to_writer_pretty(BufWriter::new(File::create(&path)?), &run.report)?;
            }
            if let Some(path) = traces {
                experiment::write_traces_csv(File::create(&path)?, &run.traces, data.names())?;
            }
            if let Some(path) = series {
                experiment::write_series_csv(File::create(&path)?, &[(costs.fp_cost, &run.report)])?;
            }
        }
        Command::Threshold { common } => {
            if common.target_recall.is_none() {
                anyhow::bail!(UsageError("threshold needs --target-recall".into()));
            }
            let (data, costs) = common.load()?;
            let bundle = train_bundle(&data, &costs, &common.train_config())?;
            let solve = bundle.recall.as_ref().expect("recall mode");
            println!("target recall      {}", solve.target_recall);
            println!("threshold          {}", solve.threshold);
            println!("implied fn_cost    {}", solve.implied_fn_cost);
            println!("sets               {}", bundle.sequence().q());
        }
        Command::Oracle { instance, policy } => {
            let inst = load_instance(&instance).with_context(|| format!("loading {}", instance.display()))?;
            let solved = oracle::solve_exact(&inst);
            println!("expected loss       {}", solved.expected_loss);
            println!("classify now        {}", inst.classify_now_loss());
            if policy {
                print_oracle_policy(&inst, &solved);
            }
        }
    }
    Ok(())
}

fn print_oracle_policy(inst: &oracle::DiscreteInstance, pol: &oracle::OraclePolicy) {
    fn walk(inst: &oracle::DiscreteInstance, pol: &oracle::OraclePolicy, mask: u32, x: &mut Vec<usize>, depth: usize) {
        let shown: Vec<String> = (0..inst.p())
            .map(|i| if mask & (1 << i) != 0 { x[i].to_string() } else { "_".into() })
            .collect();
        match pol.decide(mask, x) {
            Decision::Classify(y) => println!("{}[{}] classify {y}", "  ".repeat(depth), shown.join(" ")),
            Decision::Acquire(set) => {
                let i = set[0];
                println!("{}[{}] acquire x{}", "  ".repeat(depth), shown.join(" "), i + 1);
                for v in 0..inst.alphabets[i] {
                    x[i] = v;
                    walk(inst, pol, mask | (1 << i), x, depth + 1);
                }
                x[i] = 0;
            }
        }
    }
    walk(inst, pol, 0, &mut vec![0; inst.p()], 0);
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn exit_code(err: &anyhow::Error) -> u8 {
    let numerical = err.chain().any(|e| {
        let core = e
            .downcast_ref::<adacos_core::Error>()
            .or_else(|| match e.downcast_ref::<IoError>() {
                Some(IoError::Core(c)) => Some(c),
                _ => None,
            });
        matches!(
            core,
            Some(adacos_core::Error::NonConvergence { .. } | adacos_core::Error::Numerical(_))
        )
    });
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
