use crate::config::FileConfig;
use crate::{
    input_err, internal_err, CalibrateArgs, CmdResult, CriticalValuesArgs, ExitTimesArgs, Failure, InputArgs,
    ReportArgs, ScanArgs, SimulateArgs, TableArgs,
};
use anyhow::{anyhow, Context};
use bubble_fts::agents::{exit_time_model1, exit_time_model2, AgentError, ArbitrageurBelief};
use bubble_fts::calibrate::{grid_search, CalibrateError, GridSpec};
use bubble_fts::models::{
    simulate_model1_sde, simulate_model2_sde, Model1Params, Model2Params, ModelError, OuParams,
};
use bubble_fts::scanner::{calibrate_windows, cluster_alarms, AlarmRecord, ScanConfig, ScanError, DEFAULT_MAX_GAP, DEFAULT_STEP};
use bubble_fts::timeseries::{fetch_prices, slice_window};
use bubble_fts::unitroot::{CriticalValueTable, DfError};
use bubble_fts::{parse_price_csv, BubbleModel, PriceSeries, TOOL_VERSION};
use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::{BTreeMap, HashMap};
use std::time::Duration;

const DEFAULT_LEVEL: f64 = 0.005;
const DEFAULT_REPS: usize = 100_000;
const DEFAULT_SEED: u64 = 42;
const FETCH_TIMEOUT: Duration = Duration::from_secs(60);

fn parse_model(tag: Option<&str>) -> Result<BubbleModel, Failure> {
    tag.unwrap_or("fts-price").parse().map_err(input_err)
}

fn parse_date(s: &str) -> Result<NaiveDate, Failure> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| input_err(anyhow!("bad date {s:?}: {e}")))
}

fn or_file<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

fn read_text(path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).with_context(|| format!("reading {path}")).map_err(input_err)
}

/// Writes to `path`, or to stdout when absent.
fn emit(path: Option<&str>, content: &str) -> CmdResult {
    match path {
        Some(p) => std::fs::write(p, content).with_context(|| format!("writing {p}")).map_err(internal_err),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// JSON document carrying `{config, seed, tool_version}` plus `payload`'s fields.
fn envelope(config: &impl Serialize, seed: Option<u64>, payload: Value) -> String {
    let mut doc = Map::new();
    doc.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    doc.insert("seed".into(), json!(seed));
    doc.insert("tool_version".into(), json!(TOOL_VERSION));
    if let Value::Object(fields) = payload {
        doc.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Serialize)]
struct InputInfo {
    input: String,
    from: Option<String>,
    to: Option<String>,
}

fn load_series(args: &InputArgs, file: &FileConfig) -> Result<(PriceSeries, InputInfo), Failure> {
    let input = or_file(&args.input, &file.input).ok_or_else(|| input_err(anyhow!("--input is required")))?;
    let text = if input.starts_with("http://") || input.starts_with("https://") {
        fetch_prices(&input, FETCH_TIMEOUT).map_err(input_err)?
    } else {
        read_text(&input)?
    };
    let mut series = parse_price_csv(&text).with_context(|| format!("parsing {input}")).map_err(input_err)?;
    let from = or_file(&args.from, &file.from);
    let to = or_file(&args.to, &file.to);
    if from.is_some() || to.is_some() {
        let lo = from.as_deref().map(parse_date).transpose()?.unwrap_or(NaiveDate::MIN);
        let hi = to.as_deref().map(parse_date).transpose()?.unwrap_or(NaiveDate::MAX);
        series = series.between(lo, hi).map_err(input_err)?;
    }
    Ok((series, InputInfo { input, from, to }))
}

#[derive(Debug, Clone, Serialize)]
struct TableInfo {
    source: String,
    level: f64,
    reps: usize,
    seed: u64,
}

fn df_failure(e: DfError) -> Failure {
    match e {
        DfError::InvalidLevel(_) | DfError::InsufficientReps { .. } | DfError::TooShort(_) | DfError::Table(_) => input_err(e),
        DfError::MissingLength(_) => input_err(e),
        other => internal_err(other),
    }
}

/// Table from `--table`, the shipped one, or a fresh simulation for this length and level.
fn resolve_table(args: &TableArgs, file: &FileConfig, length: usize) -> Result<(CriticalValueTable, TableInfo), Failure> {
    if let Some(path) = or_file(&args.table, &file.table) {
        let table = CriticalValueTable::from_json(&read_text(&path)?).map_err(df_failure)?;
        table.get(length).map_err(df_failure)?;
        let info = TableInfo { source: path, level: table.level, reps: table.reps, seed: table.seed };
        return Ok((table, info));
    }
    let level = or_file(&args.level, &file.level).unwrap_or(DEFAULT_LEVEL);
    let shipped = CriticalValueTable::shipped();
    if level == shipped.level && shipped.values.contains_key(&length) {
        let info = TableInfo { source: "shipped".into(), level, reps: shipped.reps, seed: shipped.seed };
        return Ok((shipped, info));
    }
    let reps = or_file(&args.reps, &file.reps).unwrap_or(DEFAULT_REPS);
    let seed = or_file(&args.seed, &file.seed).unwrap_or(DEFAULT_SEED);
    let table = CriticalValueTable::build(&[length], level, reps, seed).map_err(df_failure)?;
    Ok((table, TableInfo { source: "simulated".into(), level, reps, seed }))
}

fn calibrate_failure(e: CalibrateError) -> Failure {
    match e {
        CalibrateError::InvalidGrid(_) | CalibrateError::WindowLengthMismatch { .. } => input_err(e),
        CalibrateError::UnitRoot(d) => df_failure(d),
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ScanRunConfig {
    command: &'static str,
    model: BubbleModel,
    #[serde(flatten)]
    input: InputInfo,
    window_length: usize,
    step: usize,
    grid: GridSpec,
    table: TableInfo,
}

pub fn scan(args: ScanArgs, file: &FileConfig) -> CmdResult {
    let model = parse_model(or_file(&args.model, &file.model).as_deref())?;
    let (series, input) = load_series(&args.input, file)?;
    let window_length = or_file(&args.window_length, &file.window_length).unwrap_or(model.default_window_length());
    let step = or_file(&args.step, &file.step).unwrap_or(DEFAULT_STEP);
    let (table, table_info) = resolve_table(&args.table, file, window_length)?;
    let grid = args.grid.resolve(file, GridSpec::for_model(model));
    let config = ScanConfig { model, window_length, step, grid: grid.clone(), table };
    let cals = calibrate_windows(&series, &config).map_err(|e| match e {
        ScanError::Calibrate(c) => calibrate_failure(c),
        other => input_err(other),
    })?;
    let alarms: Vec<AlarmRecord> = cals.iter().filter_map(bubble_fts::scanner::alarm_from_calibration).collect();

    let run = ScanRunConfig { command: "scan", model, input, window_length, step, grid, table: table_info.clone() };
    let doc = envelope(&run, Some(table_info.seed), json!({ "windows": cals.len(), "alarms": alarms }));
    emit(or_file(&args.out, &file.out).as_deref(), &doc)?;

    if let Some(path) = or_file(&args.plot_data, &file.plot_data) {
        let levels: HashMap<usize, u32> = alarms.iter().map(|a| (a.window_end_index, a.level)).collect();
        let mut csv = String::from("date,log_price,alarm_level\n");
        for (i, (d, c)) in series.dates().iter().zip(series.closes()).enumerate() {
            csv.push_str(&format!("{},{},{}\n", d.format("%Y-%m-%d"), c.ln(), levels.get(&i).copied().unwrap_or(0)));
        }
        emit(Some(&path), &csv)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
#[serde(tag = "model")]
enum SimParams {
    #[serde(rename = "fts-price")]
    Price { mu: f64, m: f64, p0: f64 },
    #[serde(rename = "fts-momentum")]
    Momentum { mu: f64, m: f64, a: f64, x0: f64 },
}

#[derive(Debug, Serialize)]
struct SimulateRunConfig {
    command: &'static str,
    params: SimParams,
    ou: OuParams,
    dt: f64,
    steps: usize,
}

fn model_failure(e: ModelError) -> Failure {
    match e {
        ModelError::InvalidParams(_) | ModelError::InvalidStep { .. } | ModelError::NoSingularity | ModelError::PastSingularity { .. } => {
            input_err(e)
        }
        ModelError::Blowup(_) => internal_err(e),
    }
}

pub fn simulate(args: SimulateArgs, file: &FileConfig) -> CmdResult {
    let model = parse_model(or_file(&args.model, &file.model).as_deref())?;
    let f = |flag: Option<f64>, key: Option<f64>, default: f64| flag.or(key).unwrap_or(default);
    let ou = OuParams::new(
        f(args.alpha, file.alpha, 0.5),
        f(args.noise_scale, file.noise_scale, 0.5),
        f(args.t0_value, file.t0_value, 0.0),
    )
    .map_err(model_failure)?;
    let dt = f(args.dt, file.dt, 0.01);
    let steps = or_file(&args.steps, &file.steps).unwrap_or(9_000);
    let seed = or_file(&args.seed, &file.seed).unwrap_or(DEFAULT_SEED);

    let mut csv = String::new();
    let (params, t_c, truncated_at, rows) = match model {
        BubbleModel::Price => {
            // defaults: m = 2, μ = 1, p0 = 0.01, so T_c = 100
            let p = Model1Params::new(f(args.mu, file.mu, 1.0), f(args.m, file.m, 2.0), f(args.p0, file.p0, 0.01))
                .map_err(model_failure)?;
            let sim = simulate_model1_sde(&p, &ou, dt, steps, seed).map_err(model_failure)?;
            let tc = sim.tc_path();
            csv.push_str("t,price,tc\n");
            for (i, price) in sim.prices.iter().enumerate() {
                csv.push_str(&format!("{},{},{}\n", tc.t_values[i], price, tc.t_c + tc.tc_values[i]));
            }
            (SimParams::Price { mu: p.mu, m: p.m, p0: p.p0 }, sim.t_c, sim.truncated_at, sim.prices.len())
        }
        BubbleModel::Momentum => {
            // defaults: m = 3, μ = ½, x0 = 0.1, so T_c = 100
            let p = Model2Params::new(
                f(args.mu, file.mu, 0.5),
                f(args.m, file.m, 3.0),
                f(args.a, file.a, 5.0),
                f(args.x0, file.x0, 0.1),
            )
            .map_err(model_failure)?;
            let sim = simulate_model2_sde(&p, &ou, dt, steps, seed).map_err(model_failure)?;
            let tc = sim.tc_path();
            csv.push_str("t,price,momentum,tc\n");
            for (i, (y, x)) in sim.log_prices.iter().zip(&sim.momenta).enumerate() {
                csv.push_str(&format!("{},{},{},{}\n", tc.t_values[i], y.exp(), x, tc.t_c + tc.tc_values[i]));
            }
            (SimParams::Momentum { mu: p.mu, m: p.m, a: p.a, x0: p.x0 }, sim.t_c, sim.truncated_at, sim.log_prices.len())
        }
    };
    let out = or_file(&args.out, &file.out);
    emit(out.as_deref(), &csv)?;
    let sidecar = or_file(&args.sidecar, &file.sidecar).or_else(|| out.as_ref().map(|o| format!("{o}.json")));
    if let Some(path) = sidecar {
        let run = SimulateRunConfig { command: "simulate", params, ou, dt, steps };
        let doc = envelope(&run, Some(seed), json!({ "t_c": t_c, "truncated_at": truncated_at, "rows": rows }));
        emit(Some(&path), &doc)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct CalibrateRunConfig {
    command: &'static str,
    model: BubbleModel,
    #[serde(flatten)]
    input: InputInfo,
    end: String,
    window_length: usize,
    grid: GridSpec,
    table: TableInfo,
}

pub fn calibrate(args: CalibrateArgs, file: &FileConfig) -> CmdResult {
    let model = parse_model(or_file(&args.model, &file.model).as_deref())?;
    let (series, input) = load_series(&args.input, file)?;
    let window_length = or_file(&args.window_length, &file.window_length).unwrap_or(model.default_window_length());
    let end_index = match or_file(&args.end, &file.end) {
        Some(s) => {
            let d = parse_date(&s)?;
            series.index_on_or_before(d).ok_or_else(|| input_err(anyhow!("no observation on or before {d}")))?
        }
        None => series.len() - 1,
    };
    let window = slice_window(&series, end_index, window_length).map_err(input_err)?;
    let (table, table_info) = resolve_table(&args.table, file, window_length)?;
    let grid = GridSpec { window_length: Some(window_length), ..args.grid.resolve(file, GridSpec::for_model(model)) };
    let result = grid_search(&window, model, &grid, &table).map_err(calibrate_failure)?;

    let run = CalibrateRunConfig {
        command: "calibrate",
        model,
        input,
        end: window.end_date().format("%Y-%m-%d").to_string(),
        window_length,
        grid,
        table: table_info.clone(),
    };
    let doc = envelope(&run, Some(table_info.seed), json!({ "result": result }));
    emit(or_file(&args.out, &file.out).as_deref(), &doc)?;

    if let Some(path) = or_file(&args.series_out, &file.series_out) {
        let mut csv = String::from("t,T_tilde,residual\n");
        if let Some(best) = result.best {
            let path = best.point.transform(window.closes()).map_err(internal_err)?;
            for ((t, tt), r) in path.t_values.iter().zip(&path.t_tilde).zip(&path.residual) {
                csv.push_str(&format!("{t},{tt},{r}\n"));
            }
        } else {
            eprintln!("no grid point rejects the unit root; {path} has a header only");
        }
        emit(Some(&path), &csv)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct CriticalValuesRunConfig {
    command: &'static str,
    lengths: Vec<usize>,
    level: f64,
    reps: usize,
}

pub fn critical_values(args: CriticalValuesArgs, file: &FileConfig) -> CmdResult {
    let lengths = if args.length.is_empty() { file.length.clone().unwrap_or_default() } else { args.length };
    if lengths.is_empty() {
        return Err(input_err(anyhow!("at least one --length is required")));
    }
    let level = or_file(&args.level, &file.level).unwrap_or(DEFAULT_LEVEL);
    let reps = or_file(&args.reps, &file.reps).unwrap_or(DEFAULT_REPS);
    let seed = or_file(&args.seed, &file.seed).unwrap_or(DEFAULT_SEED);
    let table = CriticalValueTable::build(&lengths, level, reps, seed).map_err(df_failure)?;

    let mut payload = json!({ "level": level, "reps": reps, "critical_values": table.values });
    if let [length] = lengths[..] {
        payload["length"] = json!(length);
        payload["critical_value"] = json!(table.values[&length]);
    }
    let run = CriticalValuesRunConfig { command: "critical-values", lengths, level, reps };
    emit(or_file(&args.out, &file.out).as_deref(), &envelope(&run, Some(seed), payload))?;
    if let Some(path) = or_file(&args.table_out, &file.table_out) {
        emit(Some(&path), &(table.to_json() + "\n"))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------

/// Market side of an `exit-times` input.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "model", deny_unknown_fields)]
pub enum ExitMarket {
    #[serde(rename = "fts-price")]
    Price { mu: f64, m: f64, p0: f64 },
    #[serde(rename = "fts-momentum")]
    Momentum { mu: f64, m: f64, a: f64, x0: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentSpec {
    /// Printed as `agent_id`; the list position when absent.
    #[serde(default)]
    pub id: Option<Value>,
    #[serde(flatten)]
    pub belief: ArbitrageurBelief,
}

/// `exit-times` input: `{"market": {...}, "agents": [...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExitPopulation {
    pub market: ExitMarket,
    pub agents: Vec<AgentSpec>,
}

enum Market {
    Price(Model1Params),
    Momentum(Model2Params),
}

pub fn exit_times(args: ExitTimesArgs, file: &FileConfig) -> CmdResult {
    let input = or_file(&args.input, &file.input).ok_or_else(|| input_err(anyhow!("--input is required")))?;
    let pop: ExitPopulation =
        serde_json::from_str(&read_text(&input)?).with_context(|| format!("parsing {input}")).map_err(input_err)?;
    let market = match pop.market {
        ExitMarket::Price { mu, m, p0 } => Market::Price(Model1Params::new(mu, m, p0).map_err(model_failure)?),
        ExitMarket::Momentum { mu, m, a, x0 } => Market::Momentum(Model2Params::new(mu, m, a, x0).map_err(model_failure)?),
    };
    for (i, a) in pop.agents.iter().enumerate() {
        a.belief.validate().with_context(|| format!("agent {i}")).map_err(input_err)?;
    }
    let rows: Vec<String> = pop
        .agents
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let id = match &a.id {
                Some(Value::String(s)) => s.clone(),
                Some(v) => v.to_string(),
                None => i.to_string(),
            };
            let solved = match &market {
                Market::Price(p) => exit_time_model1(&a.belief, p),
                Market::Momentum(p) => exit_time_model2(&a.belief, p),
            };
            match solved {
                Ok(s) => format!("{id},{},{}\n", s.t_exit, s.residual),
                // no interior optimum: left blank
                Err(AgentError::NoInteriorExit { .. } | AgentError::PastCriticalTime { .. }) => format!("{id},,\n"),
                Err(e) => format!("{id},,# {e}\n"),
            }
        })
        .collect();
    let mut csv = String::from("agent_id,t_exit,residual\n");
    rows.iter().for_each(|r| csv.push_str(r));
    emit(or_file(&args.out, &file.out).as_deref(), &csv)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct ClusterSummary {
    model: BubbleModel,
    start: NaiveDate,
    end: NaiveDate,
    peak_level: u32,
    n_alarms: usize,
    first_t_c: NaiveDate,
    last_t_c: NaiveDate,
}

#[derive(Debug, Serialize)]
struct ReportRunConfig {
    command: &'static str,
    alarms: String,
    max_gap: usize,
    format: String,
}

fn read_alarms(text: &str) -> anyhow::Result<(Vec<AlarmRecord>, Option<u64>)> {
    let v: Value = serde_json::from_str(text)?;
    match v {
        Value::Array(_) => Ok((serde_json::from_value(v)?, None)),
        Value::Object(mut o) => {
            let alarms = o.remove("alarms").ok_or_else(|| anyhow!("no \"alarms\" field"))?;
            Ok((serde_json::from_value(alarms)?, o.get("seed").and_then(Value::as_u64)))
        }
        _ => Err(anyhow!("expected an object with \"alarms\" or an array")),
    }
}

pub fn report(args: ReportArgs, file: &FileConfig) -> CmdResult {
    let path = or_file(&args.alarms, &file.alarms).ok_or_else(|| input_err(anyhow!("--alarms is required")))?;
    let format = or_file(&args.format, &file.format).unwrap_or_else(|| "text".into());
    if !matches!(format.as_str(), "text" | "json" | "csv") {
        return Err(input_err(anyhow!("unknown format {format:?} (expected text, json or csv)")));
    }
    let max_gap = or_file(&args.max_gap, &file.max_gap).unwrap_or(DEFAULT_MAX_GAP);
    let (alarms, seed) = read_alarms(&read_text(&path)?).with_context(|| format!("parsing {path}")).map_err(input_err)?;

    let mut by_model: BTreeMap<BubbleModel, Vec<AlarmRecord>> = BTreeMap::new();
    for a in alarms {
        by_model.entry(a.model).or_default().push(a);
    }
    let mut clusters = Vec::new();
    for (model, mut list) in by_model {
        list.sort_by_key(|a| a.window_end_index);
        for c in cluster_alarms(&list, max_gap) {
            clusters.push(ClusterSummary {
                model,
                start: c.start,
                end: c.end,
                peak_level: c.peak_level,
                n_alarms: c.members.len(),
                first_t_c: c.members.iter().map(|a| a.t_c_date).min().expect("clusters are non-empty"),
                last_t_c: c.members.iter().map(|a| a.t_c_date).max().expect("clusters are non-empty"),
            });
        }
    }

    let body = match format.as_str() {
        "text" => clusters
            .iter()
            .map(|c| {
                format!(
                    "{} {}..{} peak level {} ({} alarm{}, T_c {}..{})\n",
                    c.model, c.start, c.end, c.peak_level, c.n_alarms, if c.n_alarms == 1 { "" } else { "s" }, c.first_t_c, c.last_t_c
                )
            })
            .collect::<String>(),
        "csv" => {
            let mut s = String::from("model,start,end,peak_level,n_alarms,first_t_c,last_t_c\n");
            for c in &clusters {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    c.model, c.start, c.end, c.peak_level, c.n_alarms, c.first_t_c, c.last_t_c
                ));
            }
            s
        }
        _ => {
            let run = ReportRunConfig { command: "report", alarms: path, max_gap, format };
            envelope(&run, seed, json!({ "clusters": clusters }))
        }
    };
    emit(or_file(&args.out, &file.out).as_deref(), &body)
}
