//! One-parameter sweeps over numeric config fields.
//!
//! Fields are addressed the way validation reports them:
//! `side_length_m`, `types[1].active_period_s`,
//! `contact_rates.rates_per_s[0][1]`, `mobility.dt_s`.

use std::fmt::Write as _;

use offload_core::model::ScenarioConfig;
use toml::Value;

use crate::commands::{self, Artifacts};
use crate::{SweepArgs, SweepCommand, UsageError};

/// Optional fields that may be swept although a config leaves them unset.
const OPTIONAL_FIELDS: [&str; 2] = ["mobility.dt_s", "simulation.horizon_s"];

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Key(String),
    Index(usize),
}

fn parse_path(path: &str) -> Option<Vec<Segment>> {
    let mut out = Vec::new();
    for part in path.split('.') {
        let (key, mut rest) = part.split_at(part.find('[').unwrap_or(part.len()));
        if key.is_empty() {
            return None;
        }
        out.push(Segment::Key(key.to_string()));
        while !rest.is_empty() {
            let close = rest.find(']')?;
            if !rest.starts_with('[') {
                return None;
            }
            out.push(Segment::Index(rest[1..close].parse().ok()?));
            rest = &rest[close + 1..];
        }
    }
    Some(out)
}

/// Every numeric field of `cfg`, in document order.
pub fn numeric_paths(cfg: &ScenarioConfig) -> Vec<String> {
    fn walk(v: &Value, prefix: &str, out: &mut Vec<String>) {
        match v {
            Value::Integer(_) | Value::Float(_) => out.push(prefix.to_string()),
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    walk(item, &format!("{prefix}[{i}]"), out);
                }
            }
            Value::Table(t) => {
                for (k, item) in t {
                    let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(item, &p, out);
                }
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(&to_value(cfg), "", &mut out);
    for extra in OPTIONAL_FIELDS {
        if !out.iter().any(|p| p == extra) {
            out.push(extra.to_string());
        }
    }
    out
}

fn to_value(cfg: &ScenarioConfig) -> Value {
    Value::try_from(cfg).expect("scenario config always serializes")
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Returns `cfg` with the field at `path` set to `raw`.
pub fn set_param(cfg: &ScenarioConfig, path: &str, raw: &str) -> anyhow::Result<ScenarioConfig> {
    let valid = numeric_paths(cfg);
    if !valid.iter().any(|p| p == path) {
        return Err(usage(format!(
            "unknown or non-numeric parameter `{path}`; valid parameters:\n  {}",
            valid.join("\n  ")
        )));
    }
    let segments = parse_path(path).ok_or_else(|| usage(format!("malformed parameter path `{path}`")))?;
    let mut root = to_value(cfg);
    let (last, parents) = segments.split_last().expect("non-empty path");
    let mut node = &mut root;
    for seg in parents {
        node = match seg {
            Segment::Key(k) => node.get_mut(k.as_str()),
            Segment::Index(i) => node.get_mut(*i),
        }
        .expect("path validated above");
    }
    let raw = raw.trim();
    let slot = match last {
        Segment::Key(k) => {
            let table = node.as_table_mut().expect("path validated above");
            table.entry(k.clone()).or_insert(Value::Float(0.0))
        }
        Segment::Index(i) => node.get_mut(*i).expect("path validated above"),
    };
    *slot = match slot {
        Value::Integer(_) => Value::Integer(
            raw.parse()
                .map_err(|_| usage(format!("`{path}` takes integers, got `{raw}`")))?,
        ),
        _ => Value::Float(
            raw.parse()
                .map_err(|_| usage(format!("`{path}` takes numbers, got `{raw}`")))?,
        ),
    };
    Ok(root.try_into()?)
}

/// Runs the addressed command once per value and stacks the primary CSVs,
/// prefixed by `param,value` columns.
pub fn sweep(cfg: ScenarioConfig, args: &SweepArgs) -> anyhow::Result<Artifacts> {
    if args.values.is_empty() {
        return Err(usage("--values needs at least one value"));
    }
    let mut out = csv::Writer::from_writer(Vec::new());
    let mut report = String::new();
    let mut header_written = false;
    for raw in &args.values {
        let varied = set_param(&cfg, &args.param, raw)?;
        let run = match args.command {
            SweepCommand::Analyze => commands::analyze(varied)?,
            SweepCommand::Simulate => commands::simulate(varied, &args.simulate)?,
            SweepCommand::Optimize => commands::optimize(varied, &args.optimize)?,
        };
        writeln!(report, "== {} = {} ==", args.param, raw.trim())?;
        report.push_str(&run.report);
        let body = run.file(&run.primary).expect("primary output present");
        let mut rd = csv::Reader::from_reader(body);
        if !header_written {
            let mut header = vec!["param".to_string(), "value".to_string()];
            header.extend(rd.headers()?.iter().map(String::from));
            out.write_record(&header)?;
            header_written = true;
        }
        for rec in rd.records() {
            let rec = rec?;
            let mut row = vec![args.param.clone(), raw.trim().to_string()];
            row.extend(rec.iter().map(String::from));
            out.write_record(&row)?;
        }
    }
    let seed = match args.command {
        SweepCommand::Simulate => args.simulate.seed.unwrap_or(cfg.rng_seed),
        _ => cfg.rng_seed,
    };
    Ok(Artifacts {
        files: vec![("sweep.csv".to_string(), out.into_inner()?)],
        primary: "sweep.csv".into(),
        report,
        config: cfg,
        seed,
    })
}
