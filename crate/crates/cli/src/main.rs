//! `clmbr`: fit cumulative link models, report ordinal superiority measures and
//! run simulation studies from the command line.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure or no convergence,
//! 4 boundary estimate detected (the fit is still written).

mod failure;
mod ingest;
mod report;
mod simulate;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clmbr::effects::{effect_estimate, gamma_measure, is_approximate};
use clmbr::model::loglik;
use clmbr::{fit, BoundaryFlag, FitOptions, LinkFamily, Method, ParamVector};

use failure::{Failure, EXIT_BOUNDARY, EXIT_NUMERICAL};
use report::{EffectRow, EffectsReport, FitReport, Format, ParamKind, EFFECTS_SCHEMA};

#[derive(Parser)]
#[command(name = "clmbr", version, about = "Cumulative link models with median and mean bias reduction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model to a CSV file.
    Fit(FitCmd),
    /// Ordinal superiority measures for binary covariates.
    Effects(EffectsCmd),
    /// Run a simulation study from a config file or a bundled preset.
    Simulate(SimulateCmd),
}

#[derive(Args)]
struct ModelArgs {
    /// Response column holding categories 1..c.
    #[arg(long)]
    response: Option<String>,
    /// Covariate columns, comma separated (default: all other columns).
    #[arg(long, value_delimiter = ',')]
    covariates: Option<Vec<String>>,
    /// Column of non-negative integer case weights.
    #[arg(long)]
    weights: Option<String>,
    /// Number of response categories, if some are unobserved.
    #[arg(long)]
    categories: Option<usize>,
    #[arg(long, default_value = "logit")]
    link: LinkFamily,
    #[arg(long, default_value = "median-br")]
    method: Method,
    /// Convergence tolerance on the largest adjusted score component.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    max_iter: usize,
    /// Boundary threshold on the absolute estimate.
    #[arg(long, default_value_t = 20.0)]
    t_est: f64,
    /// Boundary threshold on the standard error.
    #[arg(long, default_value_t = 200.0)]
    t_se: f64,
    /// Keep empty middle categories (diagnostic: exposes coincident cutpoints).
    #[arg(long)]
    no_grouping: bool,
}

#[derive(Args)]
struct FitCmd {
    /// Input CSV with a header row.
    input: PathBuf,
    #[command(flatten)]
    model: ModelArgs,
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct EffectsCmd {
    /// Input CSV to fit first (alternative to --fit).
    input: Option<PathBuf>,
    /// A JSON report written by `clmbr fit`.
    #[arg(long, conflicts_with = "input")]
    fit: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Binary covariates to report (default: every 0/1 covariate).
    #[arg(long, value_delimiter = ',')]
    binary_cols: Option<Vec<String>>,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct SimulateCmd {
    /// Study configuration (TOML, or JSON with a .json extension).
    #[arg(long, required_unless_present_any = ["preset", "list_presets"], conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled study, e.g. table1-logit-n50 or table4-wine.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Directory for summary.csv and summary.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// What to print on standard output.
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Print the bundled preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(cmd) => cmd_fit(cmd),
        Command::Effects(cmd) => cmd_effects(cmd),
        Command::Simulate(cmd) => cmd_simulate(cmd),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

impl ModelArgs {
    fn options(&self) -> FitOptions {
        FitOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            t_est: self.t_est,
            t_se: self.t_se,
            group_categories: !self.no_grouping,
            ..FitOptions::new(self.method, self.link)
        }
    }
}

fn run_fit(input: &Path, model: &ModelArgs) -> Result<FitReport, Failure> {
    let response = model
        .response
        .as_deref()
        .ok_or_else(|| Failure::input("--response is required"))?;
    let opts = model.options();
    opts.validate()?;
    let loaded = ingest::read_csv(
        input,
        &ingest::Columns {
            response,
            covariates: model.covariates.as_deref(),
            weights: model.weights.as_deref(),
            categories: model.categories,
        },
    )?;
    let res = fit(&loaded.data, &opts)?;
    let theta = ParamVector::new(res.grouping.expand_alpha(&res.theta_hat.alpha), res.theta_hat.beta.clone());
    let ll = loglik(&theta, &loaded.data, model.link)?;
    Ok(FitReport::new(&res, response, &loaded.covariates, &loaded.binary, loaded.data.n(), ll))
}

fn fit_status(report: &FitReport) -> u8 {
    if report.boundary {
        EXIT_BOUNDARY
    } else if !report.converged {
        EXIT_NUMERICAL
    } else {
        0
    }
}

fn cmd_fit(cmd: FitCmd) -> Result<u8, Failure> {
    let report = run_fit(&cmd.input, &cmd.model)?;
    emit(&report.render(cmd.format), cmd.out.as_deref())?;
    let code = fit_status(&report);
    if code == EXIT_BOUNDARY {
        eprintln!("warning: boundary estimates detected; see the parameter flags");
    } else if code == EXIT_NUMERICAL {
        eprintln!("warning: no convergence ({:?})", report.termination);
    }
    Ok(code)
}

fn effects_from(report: &FitReport, cols: Option<&[String]>, level: f64) -> Result<EffectsReport, Failure> {
    let coefficients: Vec<_> = report
        .parameters
        .iter()
        .filter(|p| p.kind == ParamKind::Coefficient)
        .collect();
    let chosen: Vec<_> = match cols {
        Some(names) => names
            .iter()
            .map(|n| {
                coefficients.iter().find(|p| &p.name == n).copied().ok_or_else(|| {
                    Failure::input(format!("'{n}' is not a covariate of the fitted model"))
                })
            })
            .collect::<Result<_, _>>()?,
        None => coefficients.iter().filter(|p| p.binary == Some(true)).copied().collect(),
    };
    if chosen.is_empty() {
        return Err(Failure::input("no binary covariates to report; pass --binary-cols"));
    }
    let link = report.link;
    let mut effects = Vec::with_capacity(chosen.len());
    for p in chosen {
        if p.binary == Some(false) {
            eprintln!(
                "warning: covariate '{}' is not a 0/1 indicator; gamma is computed for a unit change anyway",
                p.name
            );
        }
        let row = match (p.flag, p.se) {
            (BoundaryFlag::PlusInfinity | BoundaryFlag::MinusInfinity, _) => {
                let limit = if p.flag == BoundaryFlag::PlusInfinity { f64::INFINITY } else { f64::NEG_INFINITY };
                EffectRow {
                    covariate: p.name.clone(),
                    beta: p.estimate,
                    se_beta: p.se,
                    flag: p.flag,
                    gamma: gamma_measure(link, limit),
                    se_gamma: None,
                    ci_lower: None,
                    ci_upper: None,
                    binary: p.binary,
                }
            }
            (_, Some(se)) => {
                let e = effect_estimate(link, p.estimate, se, level)?;
                EffectRow {
                    covariate: p.name.clone(),
                    beta: p.estimate,
                    se_beta: Some(se),
                    flag: p.flag,
                    gamma: e.gamma,
                    se_gamma: Some(e.se_gamma),
                    ci_lower: Some(e.ci.0),
                    ci_upper: Some(e.ci.1),
                    binary: p.binary,
                }
            }
            (_, None) => EffectRow {
                covariate: p.name.clone(),
                beta: p.estimate,
                se_beta: None,
                flag: p.flag,
                gamma: gamma_measure(link, p.estimate),
                se_gamma: None,
                ci_lower: None,
                ci_upper: None,
                binary: p.binary,
            },
        };
        effects.push(row);
    }
    Ok(EffectsReport {
        schema: EFFECTS_SCHEMA.to_string(),
        method: report.method,
        link,
        level,
        approximate: is_approximate(link),
        effects,
    })
}

fn cmd_effects(cmd: EffectsCmd) -> Result<u8, Failure> {
    if !(cmd.level > 0.0 && cmd.level < 1.0) {
        return Err(Failure::input(format!("--level must lie in (0, 1), got {}", cmd.level)));
    }
    let fit_report = match (&cmd.fit, &cmd.input) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
            FitReport::from_json(&text, &path.display().to_string())?
        }
        (None, Some(input)) => run_fit(input, &cmd.model)?,
        (None, None) => return Err(Failure::input("give an input CSV or --fit <report.json>")),
    };
    let report = effects_from(&fit_report, cmd.binary_cols.as_deref(), cmd.level)?;
    emit(&report.render(cmd.format), cmd.out.as_deref())?;
    Ok(0)
}

fn cmd_simulate(cmd: SimulateCmd) -> Result<u8, Failure> {
    if cmd.list_presets {
        for name in clmbr::sim::PRESET_NAMES {
            println!("{name}");
        }
        return Ok(0);
    }
    let mut config = match (&cmd.config, &cmd.preset) {
        (Some(path), _) => simulate::load_config(path)?,
        (None, Some(name)) => simulate::preset(name)?,
        (None, None) => return Err(Failure::input("give --config or --preset")),
    };
    if let Some(r) = cmd.replications {
        config.replications = r;
    }
    if let Some(s) = cmd.seed {
        config.seed = s;
    }
    config.validate()?;
    if cmd.threads == Some(0) {
        return Err(Failure::input("--threads must be at least 1"));
    }
    let summary = clmbr::sim::run_study(&config, cmd.threads)?;
    let csv = simulate::summary_csv(&summary);
    let json = simulate::summary_json(&config, &summary);
    if let Some(dir) = &cmd.out {
        std::fs::create_dir_all(dir)
            .map_err(|e| Failure::input(format!("cannot create {}: {e}", dir.display())))?;
        emit(&csv, Some(&dir.join("summary.csv")))?;
        emit(&json, Some(&dir.join("summary.json")))?;
    }
    let stdout = match cmd.format {
        Format::Table => simulate::summary_table(&summary),
        Format::Csv => csv,
        Format::Json => json,
    };
    emit(&stdout, None)?;
    Ok(0)
}
