//! `cvrp-isa`: feature extraction, primal-integral scoring, the
//! selection/projection pipeline, and plotting, glued over one CSV dialect.
//!
//! Exit codes: 0 success, 1 partial (some rows failed, outputs written),
//! 2 fatal. Outputs are written atomically (temp file + rename) so a rerun
//! with identical inputs and seed is byte-identical and never observes a
//! half-written file.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use cvrp_isa::features::{extract_all, ExtractConfig};
use cvrp_isa::instance::parse_instance;
use cvrp_isa::metadata::{read_metadata_csv, source_from_name, write_metadata_csv, MetadataTable};
use cvrp_isa::perf::{primal_integral, read_manifest, read_trajectory_csv};
use cvrp_isa::pipeline::{run_pipeline, PipelineConfig};
use cvrp_isa::plot::{scatter_svg, ColorSpec, Marker, PlotSpec, ScatterPoint};
use cvrp_isa::projection::{builtin_model, project_batch, ProjectionModel};
use cvrp_isa::stats::pearson;

#[derive(Parser)]
#[command(
    name = "cvrp-isa",
    version,
    about = "CVRP instance features, primal-integral scoring, and 2D instance-space projection"
)]
struct Cli {
    /// Master seed; every randomized subsystem derives its stream from it.
    /// `pipeline` takes its seed from the config file instead.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Extra progress notes on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract features from every instance file in a directory into a
    /// metadata CSV. Per-file failures go to `<out stem>_errors.csv` and the
    /// run continues; the exit code is nonzero only if nothing succeeded.
    Extract(ExtractArgs),
    /// Run the full preparation -> selection -> projection pipeline on a
    /// metadata CSV, writing selection.csv, kmetrics.csv, coordinates.csv,
    /// and model.json into an output directory.
    Pipeline(PipelineArgs),
    /// Project metadata rows to (Z1, Z2) with a fitted model.json or the
    /// built-in reference model.
    Project(ProjectArgs),
    /// Score incumbent trajectories from a manifest into a primal-integral
    /// table.
    Pi(PiArgs),
    /// Render a coordinates CSV as an SVG scatter plot, optionally colored
    /// by source set or algorithm performance.
    Plot(PlotArgs),
    /// Pearson correlation of a metadata attribute against Z1 and Z2.
    Correlate(CorrelateArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Directory of instance files (every regular file is attempted).
    dir: PathBuf,
    /// Output metadata CSV.
    #[arg(long, short)]
    out: PathBuf,
    /// Probing restarts per instance.
    #[arg(long)]
    restarts: Option<usize>,
    /// Probing wall-clock budget per instance, in seconds.
    #[arg(long)]
    probing_budget: Option<f64>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Metadata CSV with feature and algorithm columns.
    metadata: PathBuf,
    /// Config file (`key = value` lines; requires epsilon, k, ntry, seed).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory, created if absent.
    #[arg(long, short)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ProjectArgs {
    /// Metadata CSV naming at least the model's features.
    metadata: PathBuf,
    /// Fitted model JSON.
    #[arg(long, conflicts_with = "builtin")]
    model: Option<PathBuf>,
    /// Use the built-in reference model (expects normalized inputs).
    #[arg(long)]
    builtin: bool,
    /// Output coordinates CSV; exclusions land in `<out stem>_excluded.csv`.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PiArgs {
    /// Manifest CSV: instance,algorithm,bks,timelimit,path. Relative
    /// trajectory paths resolve against the manifest's directory.
    manifest: PathBuf,
    /// Output CSV: instance,algorithm,pi,error.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Coordinates CSV (Instances,Z1,Z2).
    coords: PathBuf,
    /// Metadata CSV joined by instance name for coloring.
    #[arg(long)]
    metadata: Option<PathBuf>,
    /// `none`, `source`, or `algo:<name>` (performance scale, blue = low =
    /// better). `source` without --metadata falls back to the leading
    /// letters of each instance name.
    #[arg(long, default_value = "none")]
    color_by: String,
    /// Plot title.
    #[arg(long)]
    title: Option<String>,
    /// Marker override per category label: LABEL=circle|square|triangle|star.
    #[arg(long = "marker", value_name = "LABEL=SHAPE")]
    markers: Vec<String>,
    /// Output SVG path.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Coordinates CSV (Instances,Z1,Z2).
    coords: PathBuf,
    /// Metadata CSV joined by instance name.
    metadata: PathBuf,
    /// Column to correlate: a feature name (with or without the `feature_`
    /// prefix), an algorithm (`algo_` prefix optional), or Z1/Z2.
    attribute: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs > 0 {
            // Ignore failure: the global pool may already exist under test
            // harnesses, and pool size never affects output bytes.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
        }
    }
    let result = match &cli.command {
        Command::Extract(args) => run_extract(&cli, args),
        Command::Pipeline(args) => run_pipeline_cmd(&cli, args),
        Command::Project(args) => run_project(&cli, args),
        Command::Pi(args) => run_pi(&cli, args),
        Command::Plot(args) => run_plot(&cli, args),
        Command::Correlate(args) => run_correlate(&cli, args),
    };
    match result {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum Outcome {
    Success,
    Partial,
}

type CmdResult = Result<Outcome, String>;

// ---------------------------------------------------------------- extract

fn run_extract(cli: &Cli, args: &ExtractArgs) -> CmdResult {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&args.dir)
        .map_err(|e| format!("{}: {e}", args.dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && !file_name(p).starts_with('.'))
        .collect();
    // CSV row order follows the filename sort, never completion order.
    files.sort_by_key(|p| file_name(p).to_string());
    if files.is_empty() {
        return Err(format!("{}: no instance files", args.dir.display()));
    }

    let mut cfg = ExtractConfig::default();
    if let Some(r) = args.restarts {
        cfg.probing.restarts = r;
    }
    if let Some(secs) = args.probing_budget {
        if !(secs > 0.0) {
            return Err(format!("--probing-budget must be positive, got {secs}"));
        }
        cfg.probing.budget = Duration::from_secs_f64(secs);
    }

    use rayon::prelude::*;
    let results: Vec<Result<cvrp_isa::features::Extraction, (String, String)>> = files
        .par_iter()
        .map(|path| {
            let text = std::fs::read_to_string(path)
                .map_err(|e| (file_name(path).to_string(), e.to_string()))?;
            let inst = parse_instance(&text)
                .map_err(|e| (file_name(path).to_string(), e.to_string()))?;
            Ok(extract_all(&inst, &cfg, cli.seed))
        })
        .collect();

    let mut extractions = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for r in results {
        match r {
            Ok(ex) => {
                if cli.verbose {
                    let name = &ex.features.instance_name;
                    if ex.probing_partial {
                        eprintln!("{name}: probing budget hit, features from completed restarts");
                    }
                    for miss in &ex.missing {
                        eprintln!("{name}: feature {miss} unavailable");
                    }
                }
                extractions.push(ex);
            }
            Err(f) => failures.push(f),
        }
    }

    let report_path = sibling_report(&args.out, "_errors.csv");
    if failures.is_empty() {
        remove_stale(&report_path);
    } else {
        let mut rows = vec!["file,error".to_string()];
        rows.extend(failures.iter().map(|(f, e)| csv_row(&[f, e])));
        atomic_write(&report_path, (rows.join("\n") + "\n").as_bytes())?;
        for (f, e) in &failures {
            eprintln!("{f}: {e}");
        }
    }
    if extractions.is_empty() {
        return Err(format!(
            "all {} files failed to parse (see {})",
            failures.len(),
            report_path.display()
        ));
    }

    let table = MetadataTable::from_extractions(&extractions);
    atomic_metadata(&table, &args.out)?;
    eprintln!(
        "extracted {} of {} instances -> {}",
        extractions.len(),
        files.len(),
        args.out.display()
    );
    // Contract: nonzero only when nothing succeeded; the report file carries
    // per-file failures.
    Ok(Outcome::Success)
}

// ---------------------------------------------------------------- pipeline

fn run_pipeline_cmd(cli: &Cli, args: &PipelineArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    let cfg = PipelineConfig::parse(&text).map_err(|e| format!("{}: {e}", args.config.display()))?;
    eprintln!("pipeline: {}", cfg.summary());
    if cli.verbose && cfg.seed != cli.seed {
        eprintln!("pipeline seed {} comes from the config file", cfg.seed);
    }
    let table = read_metadata_csv(&args.metadata).map_err(|e| e.to_string())?;
    let out = run_pipeline(&table, &cfg).map_err(|e| e.to_string())?;

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| format!("{}: {e}", args.out_dir.display()))?;

    // coordinates.csv: one row per instance that survived preparation.
    let mut coords = vec!["Instances,Z1,Z2".to_string()];
    for (name, z) in out.prelim.table.instances.iter().zip(&out.pilot.z) {
        coords.push(csv_row(&[name, &z[0].to_string(), &z[1].to_string()]));
    }
    atomic_write(
        &args.out_dir.join("coordinates.csv"),
        (coords.join("\n") + "\n").as_bytes(),
    )?;

    // selection.csv: chosen features (one per cluster, with the winning
    // subset's OOB error), every evaluated candidate subset, and the
    // constant columns preparation dropped.
    let kept = &out.prelim.table.feature_names;
    let mut sel = vec!["role,cluster,feature,oob".to_string()];
    for (cluster, &j) in out.sifted.chosen.iter().enumerate() {
        sel.push(csv_row(&[
            "chosen",
            &cluster.to_string(),
            &kept[j],
            &out.sifted.best_oob.to_string(),
        ]));
    }
    for (combo, oob) in &out.sifted.evaluated {
        let names: Vec<&str> = combo.iter().map(|&j| kept[j].as_str()).collect();
        sel.push(csv_row(&["candidate", "", &names.join("|"), &oob.to_string()]));
    }
    for name in &out.prelim.dropped_features {
        sel.push(csv_row(&["dropped", "", name, ""]));
    }
    atomic_write(&args.out_dir.join("selection.csv"), (sel.join("\n") + "\n").as_bytes())?;

    // kmetrics.csv: cluster-count sweep diagnostics.
    let mut km = vec!["K,silhouette,db,ch".to_string()];
    for row in &out.sifted.kmetrics {
        km.push(csv_row(&[
            &row.k.to_string(),
            &row.silhouette.to_string(),
            &row.db.to_string(),
            &row.ch.to_string(),
        ]));
    }
    atomic_write(&args.out_dir.join("kmetrics.csv"), (km.join("\n") + "\n").as_bytes())?;

    atomic_write(
        &args.out_dir.join("model.json"),
        (out.model.to_json() + "\n").as_bytes(),
    )?;

    if !out.sifted.exhaustive && cli.verbose {
        eprintln!("candidate budget hit: subsets were sampled, not enumerated");
    }
    eprintln!(
        "pipeline: {} instances, selected [{}], OOB {:.4} -> {}",
        out.pilot.z.len(),
        out.selected.join(", "),
        out.sifted.best_oob,
        args.out_dir.display()
    );
    if out.prelim.excluded_instances.is_empty() {
        Ok(Outcome::Success)
    } else {
        eprintln!(
            "{} instances with incomplete rows were excluded: {}",
            out.prelim.excluded_instances.len(),
            out.prelim.excluded_instances.join(", ")
        );
        Ok(Outcome::Partial)
    }
}

// ---------------------------------------------------------------- project

fn run_project(cli: &Cli, args: &ProjectArgs) -> CmdResult {
    let model = match (&args.model, args.builtin) {
        (Some(path), false) => ProjectionModel::load(path)
            .map_err(|e| format!("{}: {e}", path.display()))?,
        (None, true) => builtin_model(),
        (None, false) => return Err("pass --model <model.json> or --builtin".to_string()),
        (Some(_), true) => unreachable!("clap rejects --model with --builtin"),
    };
    let table = read_metadata_csv(&args.metadata).map_err(|e| e.to_string())?;
    let batch = project_batch(&model, &table);

    let mut rows = vec!["Instances,Z1,Z2".to_string()];
    for (name, z) in batch.instances.iter().zip(&batch.coords) {
        rows.push(csv_row(&[name, &z[0].to_string(), &z[1].to_string()]));
    }
    atomic_write(&args.out, (rows.join("\n") + "\n").as_bytes())?;

    let report_path = sibling_report(&args.out, "_excluded.csv");
    if batch.excluded.is_empty() {
        remove_stale(&report_path);
    } else {
        let mut rows = vec!["instance,missing".to_string()];
        for (name, missing) in &batch.excluded {
            rows.push(csv_row(&[name, &missing.join("|")]));
            eprintln!("{name}: missing {}", missing.join(", "));
        }
        atomic_write(&report_path, (rows.join("\n") + "\n").as_bytes())?;
    }
    if cli.verbose {
        eprintln!(
            "projected {} of {} instances -> {}",
            batch.instances.len(),
            table.n_instances(),
            args.out.display()
        );
    }
    if !batch.instances.is_empty() && batch.excluded.is_empty() {
        Ok(Outcome::Success)
    } else if !batch.instances.is_empty() {
        Ok(Outcome::Partial)
    } else {
        Err(format!(
            "no instance carries all {} model features (see {})",
            model.d(),
            report_path.display()
        ))
    }
}

// ---------------------------------------------------------------- pi

fn run_pi(_cli: &Cli, args: &PiArgs) -> CmdResult {
    let rows = read_manifest(&args.manifest).map_err(|e| e.to_string())?;
    if rows.is_empty() {
        return Err(format!("{}: manifest has no rows", args.manifest.display()));
    }
    let mut out = vec!["instance,algorithm,pi,error".to_string()];
    let mut failures = 0usize;
    for row in &rows {
        let path = row.resolve_path(&args.manifest);
        match read_trajectory_csv(&path, row.bks, row.timelimit) {
            Ok(traj) => {
                let pi = primal_integral(&traj);
                out.push(csv_row(&[&row.instance, &row.algorithm, &pi.to_string(), ""]));
            }
            Err(e) => {
                failures += 1;
                let msg = e.to_string();
                eprintln!("{} / {}: {msg}", row.instance, row.algorithm);
                out.push(csv_row(&[&row.instance, &row.algorithm, "", &msg]));
            }
        }
    }
    atomic_write(&args.out, (out.join("\n") + "\n").as_bytes())?;
    if failures == 0 {
        Ok(Outcome::Success)
    } else if failures < rows.len() {
        Ok(Outcome::Partial)
    } else {
        Err(format!("all {} manifest rows failed to score", rows.len()))
    }
}

// ---------------------------------------------------------------- plot

fn run_plot(_cli: &Cli, args: &PlotArgs) -> CmdResult {
    let (points, _) = read_coordinates(&args.coords)?;
    let metadata = match &args.metadata {
        Some(path) => Some(read_metadata_csv(path).map_err(|e| e.to_string())?),
        None => None,
    };

    let mut spec = PlotSpec {
        title: args.title.clone(),
        color_label: None,
        markers: args
            .markers
            .iter()
            .map(|s| parse_marker(s))
            .collect::<Result<_, _>>()?,
    };

    let color = match args.color_by.as_str() {
        "none" => ColorSpec::Uniform,
        "source" => {
            let labels = match &metadata {
                Some(table) => join_column(&points, table, |table, i| {
                    Some(table.sources[i].clone())
                })?,
                None => points
                    .iter()
                    .map(|p| source_from_name(&p.name))
                    .collect(),
            };
            ColorSpec::Categorical(labels)
        }
        other => {
            let algo = other
                .strip_prefix("algo:")
                .or_else(|| other.strip_prefix("algo_"))
                .ok_or_else(|| {
                    format!("--color-by must be none, source, or algo:<name>, got `{other}`")
                })?;
            let table = metadata
                .as_ref()
                .ok_or("--color-by algo:<name> needs --metadata")?;
            let a = table
                .algorithm_names
                .iter()
                .position(|n| n == algo)
                .ok_or_else(|| {
                    format!(
                        "algorithm `{algo}` not in metadata (have: {})",
                        table.algorithm_names.join(", ")
                    )
                })?;
            spec.color_label = Some(algo.to_string());
            ColorSpec::Continuous(join_column(&points, table, |table, i| {
                table.performance[i][a]
            })?)
        }
    };

    let svg = scatter_svg(&points, &color, &spec);
    atomic_write(&args.out, svg.as_bytes())?;
    eprintln!("{} points -> {}", points.len(), args.out.display());
    Ok(Outcome::Success)
}

/// Look up one value per plotted point from the metadata table; any
/// instance that cannot be joined (or lacks the value) fails the command
/// with the full list.
fn join_column<T>(
    points: &[ScatterPoint],
    table: &MetadataTable,
    get: impl Fn(&MetadataTable, usize) -> Option<T>,
) -> Result<Vec<T>, String> {
    let mut values = Vec::with_capacity(points.len());
    let mut unmatched = Vec::new();
    for p in points {
        match table
            .instances
            .iter()
            .position(|n| *n == p.name)
            .and_then(|i| get(table, i))
        {
            Some(v) => values.push(v),
            None => unmatched.push(p.name.clone()),
        }
    }
    if unmatched.is_empty() {
        Ok(values)
    } else {
        Err(format!(
            "{} instances cannot be joined to the metadata: {}",
            unmatched.len(),
            unmatched.join(", ")
        ))
    }
}

fn parse_marker(s: &str) -> Result<(String, Marker), String> {
    let (label, shape) = s
        .split_once('=')
        .ok_or_else(|| format!("--marker expects LABEL=SHAPE, got `{s}`"))?;
    let marker = match shape {
        "circle" => Marker::Circle,
        "square" => Marker::Square,
        "triangle" => Marker::Triangle,
        "star" => Marker::Star,
        other => {
            return Err(format!(
                "unknown marker `{other}` (use circle, square, triangle, star)"
            ))
        }
    };
    Ok((label.to_string(), marker))
}

// ---------------------------------------------------------------- correlate

fn run_correlate(_cli: &Cli, args: &CorrelateArgs) -> CmdResult {
    let (points, _) = read_coordinates(&args.coords)?;
    let table = read_metadata_csv(&args.metadata).map_err(|e| e.to_string())?;

    let attr = args.attribute.as_str();
    let values: Vec<Option<f64>> = match attr {
        "Z1" => points.iter().map(|p| Some(p.z[0])).collect(),
        "Z2" => points.iter().map(|p| Some(p.z[1])).collect(),
        _ => {
            let bare_feature = attr.strip_prefix("feature_").unwrap_or(attr);
            let bare_algo = attr.strip_prefix("algo_").unwrap_or(attr);
            let feature = table.feature_names.iter().position(|n| n == bare_feature);
            let algo = table.algorithm_names.iter().position(|n| n == bare_algo);
            let cell: Box<dyn Fn(usize) -> Option<f64> + '_> = match (feature, algo) {
                (Some(j), _) => Box::new(move |i| table.features[i][j]),
                (None, Some(a)) => Box::new(move |i| table.performance[i][a]),
                (None, None) => {
                    return Err(format!(
                        "attribute `{attr}` is not a metadata column (features: {}; algorithms: {})",
                        table.feature_names.join(", "),
                        table.algorithm_names.join(", ")
                    ))
                }
            };
            points
                .iter()
                .map(|p| {
                    table
                        .instances
                        .iter()
                        .position(|n| *n == p.name)
                        .and_then(|i| cell(i))
                })
                .collect()
        }
    };

    let mut xs = Vec::new();
    let mut z1 = Vec::new();
    let mut z2 = Vec::new();
    for (p, v) in points.iter().zip(&values) {
        if let Some(x) = v {
            if x.is_finite() {
                xs.push(*x);
                z1.push(p.z[0]);
                z2.push(p.z[1]);
            }
        }
    }
    let skipped = points.len() - xs.len();
    if xs.len() < 3 {
        return Err(format!(
            "only {} coordinate rows carry `{attr}`; need at least 3",
            xs.len()
        ));
    }
    let spread = |v: &[f64]| v.iter().any(|x| *x != v[0]);
    if !spread(&xs) {
        eprintln!("warning: `{attr}` is constant over the joined rows; r = 0");
    }
    if skipped > 0 {
        eprintln!("{skipped} coordinate rows without `{attr}` were skipped");
    }
    println!(
        "attribute={attr} n={} r_Z1={} r_Z2={}",
        xs.len(),
        pearson(&xs, &z1),
        pearson(&xs, &z2)
    );
    Ok(Outcome::Success)
}

// ---------------------------------------------------------------- shared

fn read_coordinates(path: &Path) -> Result<(Vec<ScatterPoint>, Vec<String>), String> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers != ["Instances", "Z1", "Z2"] {
        return Err(format!(
            "{}: expected header Instances,Z1,Z2, found {}",
            path.display(),
            headers.join(",")
        ));
    }
    let mut points = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| format!("{}: {e}", path.display()))?;
        let row = i + 2;
        let num = |ci: usize| -> Result<f64, String> {
            let token = record.get(ci).unwrap_or("");
            token
                .parse()
                .map_err(|_| format!("{} row {row}: malformed number `{token}`", path.display()))
        };
        points.push(ScatterPoint {
            name: record.get(0).unwrap_or("").to_string(),
            z: [num(1)?, num(2)?],
        });
    }
    Ok((points, headers))
}

fn file_name(p: &Path) -> std::borrow::Cow<'_, str> {
    p.file_name().map_or_else(|| p.to_string_lossy(), |n| n.to_string_lossy())
}

/// `out.csv` -> `out_errors.csv` beside it.
fn sibling_report(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}{suffix}"))
}

fn remove_stale(path: &Path) {
    // A leftover report from an earlier run would misreport this one.
    let _ = std::fs::remove_file(path);
}

/// Quote-and-join one CSV record (RFC-4180 quoting, `.` decimal point).
fn csv_row(fields: &[&str]) -> String {
    fields
        .iter()
        .map(|f| {
            if f.contains(['"', ',', '\n', '\r']) {
                format!("\"{}\"", f.replace('"', "\"\""))
            } else {
                (*f).to_string()
            }
        })
        .collect::<Vec<_>>()
        .join(",")
}

/// Write via a temp file in the target directory plus rename, so readers
/// never observe a partial file and interrupted runs leave no damage.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), String> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = parent.join(format!(".{}.tmp{}", file_name(path), std::process::id()));
    let finish = |r: std::io::Result<()>| r.map_err(|e| format!("{}: {e}", path.display()));
    finish(std::fs::write(&tmp, bytes))?;
    finish(std::fs::rename(&tmp, path)).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })
}

fn atomic_metadata(table: &MetadataTable, path: &Path) -> Result<(), String> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let tmp = parent.join(format!(".{}.tmp{}", file_name(path), std::process::id()));
    write_metadata_csv(table, &tmp).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        e.to_string()
    })?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        format!("{}: {e}", path.display())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_are_quoted_when_needed() {
        assert_eq!(csv_row(&["a", "b"]), "a,b");
        assert_eq!(csv_row(&["a,b", "c\"d"]), "\"a,b\",\"c\"\"d\"");
        assert_eq!(csv_row(&["", "x"]), ",x");
    }

    #[test]
    fn marker_overrides_parse() {
        assert_eq!(parse_marker("X=star").unwrap(), ("X".to_string(), Marker::Star));
        assert_eq!(parse_marker("A-set=circle").unwrap().1, Marker::Circle);
        assert!(parse_marker("X").is_err());
        assert!(parse_marker("X=blob").is_err());
    }

    #[test]
    fn report_paths_sit_beside_the_output() {
        assert_eq!(
            sibling_report(Path::new("/tmp/meta.csv"), "_errors.csv"),
            Path::new("/tmp/meta_errors.csv")
        );
        assert_eq!(
            sibling_report(Path::new("out/coords.csv"), "_excluded.csv"),
            Path::new("out/coords_excluded.csv")
        );
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        // No temp droppings left behind.
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn coordinates_reader_enforces_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(&path, "Instances,Z1,Z2\na,1.5,-2\n").unwrap();
        let (points, _) = read_coordinates(&path).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].z, [1.5, -2.0]);

        std::fs::write(&path, "Instances,X,Y\na,1,2\n").unwrap();
        assert!(read_coordinates(&path).is_err());
        std::fs::write(&path, "Instances,Z1,Z2\na,1,oops\n").unwrap();
        assert!(read_coordinates(&path).unwrap_err().contains("row 2"));
    }
}
