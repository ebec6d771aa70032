use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use mhdis_core::dataset::catalog::{ratio_catalog, retained_six, CORRELATED};
use mhdis_core::dataset::{load_dataset, prepared_matrix, write_dataset, Class, CriterionSpec, PanelDataset, TrimMode};
use mhdis_core::evaluation::{
    confusion, gen_synthetic, generate_pairs, metrics, run_sweep, screening_fixture, SweepConfig, SyntheticConfig,
};
use mhdis_core::mhdis::{fit, predict, Lp2Objective, MhdisConfig, MhdisModel, MipScope, TieRule};
use mhdis_core::promethee::{median_cut, run_promethee, write_flows_csv, PreferenceFunctionKind, PrometheeConfig};
use mhdis_core::sampling::FoldMode;
use mhdis_core::screening::{run_screening, ScreeningConfig};

pub struct CliError {
    pub code: String,
    pub message: String,
}

impl From<mhdis_core::Error> for CliError {
    fn from(e: mhdis_core::Error) -> Self {
        Self { code: e.code().into(), message: e.to_string() }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        let code = if e.kind() == io::ErrorKind::BrokenPipe { "broken_pipe" } else { "io" };
        Self { code: code.into(), message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> CliError {
    CliError { code: "invalid_input".into(), message: message.into() }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::from(io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Parser)]
#[command(name = "mhdis", version, about = "Failure discrimination with M.H.DIS and PROMETHEE II labelings")]
pub struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 5)]
    folds: usize,
    /// Weight scenarios per PROMETHEE run.
    #[arg(long, global = true, default_value_t = 10_000)]
    scenarios: usize,
    /// M.H.DIS separation threshold.
    #[arg(long, global = true, default_value_t = 0.001)]
    delta: f64,
    /// M.H.DIS subintervals per criterion.
    #[arg(long, global = true, default_value_t = 3)]
    breakpoints: usize,
    /// standard_tukey | paper_literal
    #[arg(long, global = true, default_value = "standard_tukey")]
    trim_mode: TrimMode,
    /// partition | paper_literal
    #[arg(long, global = true, default_value = "partition")]
    fold_mode: FoldMode,
}

#[derive(Args)]
struct DataArgs {
    /// Panel CSV: company_id, label, size_stratum, year_offset, criteria...
    #[arg(long)]
    data: PathBuf,
    /// JSON array of criterion specs; the built-in ratio catalog by default.
    #[arg(long)]
    catalog: Option<PathBuf>,
}

#[derive(Args)]
struct MhdisArgs {
    /// riskier | healthier
    #[arg(long, default_value = "riskier")]
    tie_rule: TieRule,
    /// min_margin | sum_margins
    #[arg(long, default_value = "min_margin")]
    lp2: Lp2Objective,
    /// lp1_errors | all
    #[arg(long, default_value = "lp1_errors")]
    mip_scope: MipScope,
    #[arg(long, default_value_t = 2_000)]
    mip_node_limit: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Three-stage criterion screening; prints the report JSON.
    Screen {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// PROMETHEE II net flows and median-cut classes as CSV.
    Promethee {
        #[command(flatten)]
        data: DataArgs,
        /// Comma-separated criterion ids; every dataset criterion by default.
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<String>,
        /// usual | u_shape | v_shape | level | linear | gaussian
        #[arg(long, default_value = "usual")]
        kind: PreferenceFunctionKind,
        #[arg(long, default_value_t = 1)]
        year: u8,
        /// Print the flow table and classification as JSON instead.
        #[arg(long)]
        json: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fits an M.H.DIS model; prints the model JSON.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<String>,
        /// CSV with company_id and a class (C1/C2) or label (active/inactive)
        /// column, e.g. the output of `promethee`; dataset labels by default.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        year: u8,
        #[command(flatten)]
        mhdis: MhdisArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Applies a fitted model; prints the metrics JSON.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 1)]
        year: u8,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Admissible PROMETHEE / M.H.DIS criterion splits.
    Pairs {
        /// JSON array of six criterion specs; the retained six by default.
        #[arg(long)]
        specs: Option<PathBuf>,
        /// Correlated couples as A:B, comma-separated; the built-in couples
        /// by default.
        #[arg(long, value_delimiter = ',')]
        correlated: Option<Vec<String>>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Full evaluation over pairs, labelings, folds and years.
    Sweep {
        #[arg(long, required_unless_present = "synthetic", conflicts_with = "synthetic")]
        data: Option<PathBuf>,
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// Generate the panel instead: companies per class and separation, as `n,sep`.
        #[arg(long)]
        synthetic: Option<String>,
        /// Writes sweep.json and the table CSVs here; JSON to stdout otherwise.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Worker threads, 0 for all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Refit on each year's data instead of reusing the year-1 model.
        #[arg(long)]
        refit_per_year: bool,
        #[command(flatten)]
        mhdis: MhdisArgs,
    },
    /// Writes a synthetic panel CSV.
    Gen {
        #[arg(long, default_value_t = 57)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        sep: f64,
        /// The 37-ratio panel with a known screening outcome instead.
        #[arg(long)]
        screening: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json(value: &impl serde::Serialize, path: Option<&Path>) -> Result<()> {
    let mut w = sink(path)?;
    let text = serde_json::to_string_pretty(value).map_err(|e| invalid(e.to_string()))?;
    writeln!(w, "{text}")?;
    w.flush()?;
    Ok(())
}

fn catalog(path: Option<&Path>) -> Result<Vec<CriterionSpec>> {
    match path {
        None => Ok(ratio_catalog()),
        Some(p) => serde_json::from_reader(open(p)?).map_err(|e| invalid(format!("catalog {}: {e}", p.display()))),
    }
}

fn dataset(args: &DataArgs) -> Result<PanelDataset> {
    Ok(load_dataset(open(&args.data)?, &catalog(args.catalog.as_deref())?)?)
}

fn criteria_or_all(ds: &PanelDataset, criteria: Vec<String>) -> Vec<String> {
    if criteria.is_empty() {
        ds.criterion_ids()
    } else {
        criteria
    }
}

fn parse_class(token: &str) -> Result<Class> {
    match token.trim() {
        "C1" | "c1" => Ok(Class::C1),
        "C2" | "c2" => Ok(Class::C2),
        other => Ok(other.parse()?),
    }
}

fn read_labels(path: &Path) -> Result<HashMap<String, Class>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let fail = |e: csv::Error| invalid(format!("labels {}: {e}", path.display()));
    let headers = rdr.headers().map_err(fail)?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let id = col("company_id").ok_or_else(|| invalid("labels file needs a company_id column"))?;
    let class =
        col("class").or_else(|| col("label")).ok_or_else(|| invalid("labels file needs a class or label column"))?;
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(fail)?;
        out.insert(rec[id].to_string(), parse_class(&rec[class])?);
    }
    Ok(out)
}

fn mhdis_config(g: &Global, m: &MhdisArgs) -> MhdisConfig {
    MhdisConfig {
        breakpoints: g.breakpoints,
        delta: g.delta,
        tie_rule: m.tie_rule,
        lp2: m.lp2,
        mip_scope: m.mip_scope,
        mip_node_limit: m.mip_node_limit,
        ..Default::default()
    }
}

fn parse_synthetic(spec: &str) -> Result<(usize, f64)> {
    let bad = || invalid(format!("--synthetic expects `n,sep`, got {spec:?}"));
    let (n, sep) = spec.split_once(',').ok_or_else(bad)?;
    Ok((n.trim().parse().map_err(|_| bad())?, sep.trim().parse().map_err(|_| bad())?))
}

pub fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    match cli.command {
        Command::Screen { data, output } => {
            let ds = dataset(&data)?;
            emit_json(&run_screening(&ds, &ScreeningConfig::default())?, output.as_deref())
        }
        Command::Promethee { data, criteria, kind, year, json, output } => {
            let ds = dataset(&data)?;
            let criteria = criteria_or_all(&ds, criteria);
            let m = prepared_matrix(&ds, year, &criteria, g.trim_mode)?;
            let cfg = PrometheeConfig { scenarios: g.scenarios, seed: g.seed, ..Default::default() };
            let table = run_promethee(&m, &criteria, kind, &cfg)?;
            let classes = median_cut(&table);
            if json {
                emit_json(&json!({ "flows": table, "classification": classes }), output.as_deref())
            } else {
                let mut w = sink(output.as_deref())?;
                write_flows_csv(&table, Some(&classes), &mut w)?;
                w.flush()?;
                Ok(())
            }
        }
        Command::Fit { data, criteria, labels, year, mhdis, output } => {
            let ds = dataset(&data)?;
            let criteria = criteria_or_all(&ds, criteria);
            let mut m = prepared_matrix(&ds, year, &criteria, g.trim_mode)?;
            if let Some(path) = labels {
                let map = read_labels(&path)?;
                let relabeled = m
                    .company_ids
                    .iter()
                    .map(|id| map.get(id).copied().ok_or_else(|| invalid(format!("no label for company {id}"))))
                    .collect::<Result<Vec<_>>>()?;
                m = m.with_labels(relabeled)?;
            }
            let model = fit(&m, &mhdis_config(&g, &mhdis))?;
            emit_json(&model, output.as_deref())
        }
        Command::Evaluate { model, data, year, output } => {
            let model = MhdisModel::from_json(&fs::read_to_string(&model)?)?;
            let ds = dataset(&data)?;
            let m = prepared_matrix(&ds, year, &model.criteria, g.trim_mode)?;
            let predicted = predict(&model, &m)?;
            emit_json(&metrics(&confusion(&m.labels, &predicted)?)?, output.as_deref())
        }
        Command::Pairs { specs, correlated, output } => {
            let specs: Vec<CriterionSpec> = match specs {
                Some(p) => {
                    serde_json::from_reader(open(&p)?).map_err(|e| invalid(format!("specs {}: {e}", p.display())))?
                }
                None => retained_six(),
            };
            let correlated: Vec<(String, String)> = match correlated {
                None => CORRELATED.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
                Some(list) => list
                    .iter()
                    .map(|s| {
                        s.split_once(':')
                            .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                            .ok_or_else(|| invalid(format!("correlated couple {s:?} is not A:B")))
                    })
                    .collect::<Result<_>>()?,
            };
            emit_json(&generate_pairs(&specs, &correlated)?, output.as_deref())
        }
        Command::Sweep { data, catalog: cat, synthetic, out_dir, workers, refit_per_year, mhdis } => {
            let ds = match (data, synthetic) {
                (Some(path), _) => load_dataset(open(&path)?, &catalog(cat.as_deref())?)?,
                (None, Some(spec)) => {
                    let (n, sep) = parse_synthetic(&spec)?;
                    gen_synthetic(&SyntheticConfig::new(n, sep, g.seed))?
                }
                (None, None) => return Err(invalid("either --data or --synthetic is required")),
            };
            let cfg = SweepConfig {
                seed: g.seed,
                folds: g.folds,
                fold_mode: g.fold_mode,
                scenarios: g.scenarios,
                trim_mode: g.trim_mode,
                mhdis: mhdis_config(&g, &mhdis),
                refit_per_year,
                workers,
                ..Default::default()
            };
            let result = run_sweep(&ds, &cfg)?;
            match out_dir {
                None => emit_json(&result, None),
                Some(dir) => {
                    fs::create_dir_all(&dir)?;
                    emit_json(&result, Some(&dir.join("sweep.json")))?;
                    for year in 1..=4u8 {
                        result.write_table4_csv(year, File::create(dir.join(format!("table4_year{year}.csv")))?)?;
                    }
                    result.write_table12_csv(File::create(dir.join("table12.csv"))?)?;
                    result.write_table10_csv(File::create(dir.join("table10.csv"))?)?;
                    Ok(())
                }
            }
        }
        Command::Gen { n, sep, screening, output } => {
            let ds = if screening {
                screening_fixture(n, g.seed)?
            } else {
                gen_synthetic(&SyntheticConfig::new(n, sep, g.seed))?
            };
            let mut w = sink(output.as_deref())?;
            write_dataset(&ds, &mut w)?;
            w.flush()?;
            Ok(())
        }
    }
}
