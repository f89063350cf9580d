//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when a plan fails, 2 on usage, input or
//! parse errors. No environment variables are read.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::bench::{generate_suite, run_suite, write_records, write_report, ReportFormat, SuiteSpec};
use crate::gridmap::{
    decode_map, decode_scenario, encode_map, generate_map, instruction_label, GenParams, MapFamily,
    WorldMap,
};
use crate::heatfield::{
    encode_field_binary, encode_field_json, solve_to_times, FieldDump, FieldStack, HeatState,
    SourceSpec,
};
use crate::planner::{plan, resolve_config, ConfigOverrides, PlanError, PlanResult, PlannerConfig};
use crate::render::{render_svg, Layer, RenderInput, RenderSpec};

#[derive(Debug, Parser)]
#[command(name = "thermoplan", version, about = "Heat-field guided multi-robot planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a map of one family.
    GenMap(GenMapArgs),
    /// Plan a scenario file.
    Plan(PlanArgs),
    /// Generate and run a benchmark suite.
    Bench(BenchArgs),
    /// Draw a map, plan or field as SVG.
    Render(RenderArgs),
    /// Dump the score fields of one label.
    Fields(FieldsArgs),
}

#[derive(Debug, Args)]
struct PlannerFlags {
    /// Diffusion levels T.
    #[arg(long)]
    steps: Option<usize>,
    /// Langevin iterations per level K.
    #[arg(long)]
    anneal: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    d_safe: Option<f64>,
    #[arg(long)]
    d_margin: Option<f64>,
    #[arg(long)]
    sigma_min: Option<f64>,
    #[arg(long)]
    sigma_max: Option<f64>,
    #[arg(long)]
    step_ratio: Option<f64>,
    /// Seconds per plan.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    goal_tol: Option<f64>,
    /// Keep raw Langevin moves even when they cross obstacles or robots.
    #[arg(long)]
    no_filter: bool,
}

impl PlannerFlags {
    fn overrides(&self, seed: Option<u64>) -> ConfigOverrides {
        ConfigOverrides {
            diffusion_steps: self.steps,
            anneal_steps: self.anneal,
            beta: self.beta,
            d_safe: self.d_safe,
            d_margin: self.d_margin,
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
            step_ratio: self.step_ratio,
            log_floor: None,
            seed,
            time_limit_s: self.time_limit,
            final_step_noiseless: None,
            goal_tol: self.goal_tol,
            feasibility_filter: self.no_filter.then_some(false),
        }
    }
}

#[derive(Debug, Args)]
struct GenMapArgs {
    #[arg(long)]
    family: MapFamily,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cells per axis.
    #[arg(long, default_value_t = crate::gridmap::DEFAULT_GRID)]
    grid: usize,
    /// Add a sealed twin of one label.
    #[arg(long)]
    ood: bool,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also draw the map to this SVG file.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    planner: PlannerFlags,
    /// Output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include every Langevin iterate in the output.
    #[arg(long)]
    micro_steps: bool,
    /// Draw the result to this SVG file.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long = "family", visible_alias = "families", value_delimiter = ',')]
    families: Vec<MapFamily>,
    /// Robot counts.
    #[arg(long, value_delimiter = ',')]
    robots: Vec<usize>,
    /// Scenarios per (family, robot count).
    #[arg(long)]
    n: Option<usize>,
    /// Distinct maps per family.
    #[arg(long)]
    maps: Option<usize>,
    /// Base seed for generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = crate::gridmap::DEFAULT_GRID)]
    grid: usize,
    /// Single-robot trials against a sealed twin of the goal label.
    #[arg(long)]
    ood: bool,
    /// 120 scenarios over 12 maps per configuration.
    #[arg(long)]
    full_grid: bool,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "csv")]
    format: String,
    #[command(flatten)]
    planner: PlannerFlags,
    /// Report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON-lines record path (next to the report when absent).
    #[arg(long)]
    records: Option<PathBuf>,
    /// Directory for one SVG per scenario.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RenderArgs {
    /// Map file; not needed with --scenario.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Plan result to draw.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Label whose fields feed the field and heat layers.
    #[arg(long)]
    label: Option<String>,
    /// Comma-separated layers: occupancy, regions, field:<t>, heat:<t>,
    /// trajectories, starts, goals.
    #[arg(long, value_delimiter = ',')]
    layers: Vec<String>,
    #[arg(long, default_value_t = 4)]
    stride: usize,
    /// Canvas width in pixels.
    #[arg(long, default_value_t = 512.0)]
    width: f64,
    #[command(flatten)]
    planner: PlannerFlags,
    /// Output file, or a directory for `<name>.<layers>.svg`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FieldsArgs {
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Goal label (first robot's label when absent).
    #[arg(long)]
    label: Option<String>,
    /// Level to dump; all levels when absent (json only).
    #[arg(long)]
    level: Option<usize>,
    /// json or bin.
    #[arg(long, default_value = "json")]
    format: String,
    #[command(flatten)]
    planner: PlannerFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Failed(String),
}

type CliResult = Result<i32, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(bytes)
                .map_err(|e| usage(format!("stdout: {e}")))
        }
    }
}

fn load_scenario(path: &Path) -> Result<crate::gridmap::Scenario, CliError> {
    let text = read_text(path)?;
    decode_scenario(&text, path.parent()).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_map(map: &Option<PathBuf>, scenario: &Option<PathBuf>) -> Result<(Arc<WorldMap>, Option<crate::gridmap::Scenario>), CliError> {
    match (map, scenario) {
        (_, Some(s)) => {
            let sc = load_scenario(s)?;
            Ok((sc.map.clone(), Some(sc)))
        }
        (Some(m), None) => {
            let text = read_text(m)?;
            let map = decode_map(&text).map_err(|e| usage(format!("{}: {e}", m.display())))?;
            Ok((Arc::new(map), None))
        }
        (None, None) => Err(usage("either --map or --scenario is required")),
    }
}

fn plan_error(e: PlanError) -> CliError {
    match e {
        PlanError::Config(_) | PlanError::Scenario(_) | PlanError::Input(_) => usage(e),
        other => CliError::Failed(other.to_string()),
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::GenMap(a) => gen_map(a),
        Command::Plan(a) => plan_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Render(a) => render_cmd(a),
        Command::Fields(a) => fields_cmd(a),
    };
    match outcome {
        Ok(code) => code,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(CliError::Failed(m)) => {
            eprintln!("planning failed: {m}");
            1
        }
    }
}

fn gen_map(a: GenMapArgs) -> CliResult {
    let mut params = GenParams::for_grid(a.grid);
    params.ood = a.ood;
    let map = generate_map(a.family, a.seed, &params).map_err(usage)?;
    write_bytes(a.out.as_deref(), encode_map(&map).as_bytes())?;
    if let Some(svg) = &a.svg {
        let spec = RenderSpec::with_layers(vec![Layer::Occupancy, Layer::Regions]);
        let text = render_svg(&RenderInput::map(&map), &spec).map_err(usage)?;
        write_bytes(Some(svg), text.as_bytes())?;
    }
    Ok(0)
}

fn plan_svg(scenario_map: &WorldMap, result: &PlanResult, path: &Path) -> Result<(), CliError> {
    let trajs = result.trajectories();
    let labels: Vec<String> = result.robots.iter().map(|r| r.goal_label.clone()).collect();
    let input = RenderInput {
        trajectories: Some(&trajs),
        goal_labels: Some(&labels),
        ..RenderInput::map(scenario_map)
    };
    let spec = RenderSpec::with_layers(vec![
        Layer::Occupancy,
        Layer::Regions,
        Layer::Goals,
        Layer::Trajectories,
        Layer::Starts,
    ]);
    let text = render_svg(&input, &spec).map_err(usage)?;
    write_bytes(Some(path), text.as_bytes())
}

fn plan_cmd(a: PlanArgs) -> CliResult {
    let scenario = load_scenario(&a.scenario)?;
    let config = resolve_config(&PlannerConfig::default(), &scenario, &a.planner.overrides(a.seed));
    let result = plan(&scenario, &config).map_err(plan_error)?;
    let mut json = result.to_json(a.micro_steps);
    json.push('\n');
    write_bytes(a.out.as_deref(), json.as_bytes())?;
    if let Some(svg) = &a.svg {
        plan_svg(&scenario.map, &result, svg)?;
    }
    if result.success {
        Ok(0)
    } else {
        let why = if result.timed_out { "time limit reached" } else { "plan did not validate" };
        eprintln!("planning failed: {why}");
        Ok(1)
    }
}

fn bench_cmd(a: BenchArgs) -> CliResult {
    let format: ReportFormat = a.format.parse().map_err(usage)?;
    let mut spec = if a.ood {
        SuiteSpec::ood(50)
    } else if a.full_grid {
        SuiteSpec::full_grid()
    } else {
        SuiteSpec::default()
    };
    if !a.families.is_empty() {
        spec.families = a.families.clone();
    }
    if !a.robots.is_empty() {
        spec.robot_counts = a.robots.clone();
    }
    if let Some(n) = a.n {
        spec.scenarios_per_config = n;
    }
    if let Some(m) = a.maps {
        spec.map_variants = m;
    }
    if let Some(d) = a.planner.d_margin {
        spec.d_margin = d;
    }
    spec.base_seed = a.seed;
    spec.grid = a.grid;
    let scenarios = generate_suite(&spec).map_err(usage)?;
    let run = run_suite(
        &scenarios,
        &PlannerConfig::default(),
        &a.planner.overrides(None),
        a.workers,
    )
    .map_err(usage)?;
    write_bytes(a.out.as_deref(), write_report(&run.report, format).as_bytes())?;
    let records = a.records.clone().or_else(|| {
        a.out
            .as_ref()
            .map(|p| p.with_extension("records.jsonl"))
    });
    if let Some(path) = records {
        write_bytes(Some(&path), write_records(&run.records).as_bytes())?;
    }
    if let Some(dir) = &a.svg {
        fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
        for (s, result) in scenarios.iter().zip(&run.results) {
            if let Some(result) = result {
                let name = s.scenario.name.clone().unwrap_or_default();
                plan_svg(&s.scenario.map, result, &dir.join(format!("{name}.plan.svg")))?;
            }
        }
    }
    Ok(0)
}

fn field_label(label: &Option<String>, scenario: &Option<crate::gridmap::Scenario>) -> Result<String, CliError> {
    if let Some(l) = label {
        return Ok(l.clone());
    }
    let robot = scenario
        .as_ref()
        .and_then(|s| s.robots.first())
        .ok_or_else(|| usage("--label is required without a scenario"))?;
    instruction_label(&robot.instruction).map_err(usage)
}

fn field_config(flags: &PlannerFlags, scenario: &Option<crate::gridmap::Scenario>) -> Result<PlannerConfig, CliError> {
    let mut config = PlannerConfig::default();
    if let Some(s) = scenario {
        config.apply(&s.config);
    }
    config.apply(&flags.overrides(None));
    config.validate().map_err(usage)?;
    Ok(config)
}

fn render_cmd(a: RenderArgs) -> CliResult {
    let (map, scenario) = load_map(&a.map, &a.scenario)?;
    let layers: Vec<Layer> = if a.layers.is_empty() {
        let mut l = vec![Layer::Occupancy, Layer::Regions];
        if a.plan.is_some() {
            l.extend([Layer::Goals, Layer::Trajectories, Layer::Starts]);
        }
        l
    } else {
        a.layers
            .iter()
            .map(|s| s.parse::<Layer>())
            .collect::<Result<_, _>>()
            .map_err(usage)?
    };
    let spec = RenderSpec {
        layers,
        stride: a.stride,
        width_px: a.width,
        ..RenderSpec::default()
    };

    let result = match &a.plan {
        Some(p) => Some(PlanResult::from_json(&read_text(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let trajs = result.as_ref().map(|r| r.trajectories());
    let labels: Option<Vec<String>> = result
        .as_ref()
        .map(|r| r.robots.iter().map(|x| x.goal_label.clone()).collect());

    let wants_fields = spec.layers.iter().any(|l| matches!(l, Layer::FieldArrows(_)));
    let wants_heat = spec.layers.iter().any(|l| matches!(l, Layer::Heat(_)));
    let mut stack: Option<FieldStack> = None;
    let mut heat: Option<Vec<HeatState>> = None;
    if wants_fields || wants_heat {
        let label = field_label(&a.label, &scenario)?;
        let config = field_config(&a.planner, &scenario)?;
        let schedule = config.schedule().map_err(usage)?;
        if wants_fields {
            stack = Some(FieldStack::build(&map, &label, &schedule, config.log_floor).map_err(usage)?);
        }
        if wants_heat {
            let regions: Vec<_> = map.regions().iter().filter(|r| r.label == label).cloned().collect();
            heat = Some(solve_to_times(&SourceSpec::equal(regions), &map, &schedule).map_err(usage)?);
        }
    }

    let input = RenderInput {
        map: &map,
        fields: stack.as_ref(),
        heat: heat.as_deref(),
        trajectories: trajs.as_deref(),
        goal_labels: labels.as_deref(),
    };
    let text = render_svg(&input, &spec).map_err(usage)?;
    let out = match &a.out {
        Some(p) if p.is_dir() => {
            let name = result
                .as_ref()
                .and_then(|r| r.scenario.clone())
                .or_else(|| scenario.as_ref().and_then(|s| s.name.clone()))
                .unwrap_or_else(|| map.name().to_string());
            Some(p.join(format!("{name}.{}.svg", spec.layer_set_name())))
        }
        other => other.clone(),
    };
    write_bytes(out.as_deref(), text.as_bytes())?;
    Ok(0)
}

fn fields_cmd(a: FieldsArgs) -> CliResult {
    let (map, scenario) = load_map(&a.map, &a.scenario)?;
    let label = field_label(&a.label, &scenario)?;
    let config = field_config(&a.planner, &scenario)?;
    let schedule = config.schedule().map_err(usage)?;
    let stack = FieldStack::build(&map, &label, &schedule, config.log_floor).map_err(usage)?;
    let bytes = match (a.format.as_str(), a.level) {
        ("bin", Some(t)) => encode_field_binary(&FieldDump::from_stack(&stack, t).map_err(usage)?),
        ("bin", None) => return Err(usage("--format bin needs --level")),
        ("json", Some(t)) => {
            let mut s = encode_field_json(&FieldDump::from_stack(&stack, t).map_err(usage)?);
            s.push('\n');
            s.into_bytes()
        }
        ("json", None) => {
            let dumps = (1..=stack.len())
                .map(|t| FieldDump::from_stack(&stack, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(usage)?;
            let mut s = serde_json::to_string(&dumps).map_err(usage)?;
            s.push('\n');
            s.into_bytes()
        }
        (other, _) => return Err(usage(format!("unsupported field format {other:?}"))),
    };
    write_bytes(a.out.as_deref(), &bytes)?;
    Ok(0)
}
