//! Command-line front end: instance loading, subcommand dispatch, and
//! deterministic JSON/CSV report emission.
//!
//! Exit codes: 0 = property holds / computation succeeded, 1 = property
//! fails (verification false, infeasible target), 2 = error.

use crate::experiments::{one_swap_sweep, sweep_csv, SweepMode};
use crate::geometry::{contains, region, vertices, volume_exact, volume_mc};
use crate::io::{parse_instance, serialize_instance, sig9, SCHEMA_VERSION};
use crate::market::{BId, Instance, Matching};
use crate::robustness::{base_radius, robustness_radius, verify_robust};
use crate::search::most_robust_anytime;
use crate::stable::{deferred_acceptance, Prefs, Side};
use crate::tradeoff::{frontier, CostTable};
use crate::{Error, Norm, Radius, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};
use std::path::PathBuf;

/// Robustness analysis for stable matchings under salience-weighted scores.
#[derive(Parser, Debug)]
#[command(name = "salience-match", version, disable_help_subcommand = true)]
pub struct Cli {
    /// Worker count; defaults to available parallelism. Results never depend
    /// on it (also readable from SALIENCE_MATCH_WORKERS).
    #[arg(long, global = true, env = "SALIENCE_MATCH_WORKERS")]
    pub workers: Option<usize>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct InstanceArgs {
    /// Path to the instance JSON document.
    #[arg(long)]
    pub instance: PathBuf,

    /// Matching to analyze: comma-separated b-names per a in id order, or
    /// "a-optimal" / "b-optimal".
    #[arg(long, default_value = "b-optimal")]
    pub matching: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Decide (k, r, p)-robustness of a matching; exit 0 when robust, 1 with
    /// a blocking witness otherwise.
    Verify {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(short, long)]
        k: usize,
        /// Perturbation norm: 1, 2, or inf.
        #[arg(short, long, default_value = "inf")]
        p: Norm,
        /// Perturbation radius to test.
        #[arg(short, long)]
        r: f64,
    },
    /// Exact robustness radius of a matching with the critical pair.
    Radius {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long, default_value = "inf")]
        p: Norm,
    },
    /// Closed-form base inner radius (a fast lower bound on the exact one).
    Base {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(short, long, default_value = "inf")]
        p: Norm,
        #[arg(long, default_value_t = 0.01)]
        eps_base: f64,
    },
    /// Anytime search for the most robust stable matching.
    Search {
        #[arg(long)]
        instance: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long, default_value = "inf")]
        p: Norm,
        /// Expansion budget; 0 returns the seed bound only.
        #[arg(long, default_value_t = 10_000)]
        budget: usize,
        #[arg(long, default_value_t = 1e-4)]
        eps_ub: f64,
    },
    /// Robustness-cost frontier as CSV (requires costs in the instance).
    Frontier {
        #[arg(long)]
        instance: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long, default_value = "inf")]
        p: Norm,
        #[arg(long, default_value_t = 0.01)]
        eps_base: f64,
    },
    /// Robustness region of a matching: H-rep, V-rep, and volume.
    Region {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Volume method: exact or mc.
        #[arg(long, default_value = "exact")]
        volume: String,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Emit 2-simplex factor polygons as CSV instead of JSON (m = 3).
        #[arg(long, default_value = "json")]
        format: String,
    },
    /// One-swap robustness sweep over random ordinal markets (CSV).
    Sweep {
        /// Comma-separated market sizes, e.g. 4,8,16.
        #[arg(long, default_value = "4,8,16,32,64,128")]
        n_values: String,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// any-stable or b-optimal.
        #[arg(long, default_value = "b-optimal")]
        mode: SweepMode,
    },
}

fn resolve_matching(inst: &Instance, spec: &str) -> Result<Matching> {
    match spec {
        "a-optimal" | "b-optimal" => {
            let prefs = Prefs::from_instance(inst, inst.salience())?;
            let side = if spec == "a-optimal" { Side::A } else { Side::B };
            Ok(deferred_acceptance(&prefs, side))
        }
        list => {
            let names: Vec<&str> = list.split(',').collect();
            if names.len() != inst.n() {
                return Err(Error::InvalidInput(format!(
                    "matching needs {} entries, got {}",
                    inst.n(),
                    names.len()
                )));
            }
            let pairs = names
                .iter()
                .map(|name| {
                    inst.b_names()
                        .iter()
                        .position(|n| n == name)
                        .map(BId)
                        .ok_or_else(|| Error::InvalidInput(format!("unknown b-agent {name:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Matching::new(pairs)
        }
    }
}

fn radius_value(r: Radius) -> Value {
    match r {
        Radius::Finite(v) => json!(sig9(v)),
        Radius::Unbounded => json!("unbounded"),
    }
}

fn matching_names(inst: &Instance, mu: &Matching) -> Vec<String> {
    mu.pairs()
        .map(|(a, b)| format!("{}-{}", inst.a_name(a), inst.b_name(b)))
        .collect()
}

fn envelope(config: Value, body: Value) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "config": config,
        "report": body,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json(out: &Option<PathBuf>, doc: &Value) -> Result<()> {
    emit(out, &format!("{}\n", serde_json::to_string_pretty(doc)?))
}

fn csv_header(config: &Value) -> String {
    format!(
        "# schema_version={SCHEMA_VERSION}\n# config={}\n",
        serde_json::to_string(config).unwrap()
    )
}

fn num(v: f64) -> Value {
    json!(sig9(v))
}

fn opt_num(v: Option<f64>) -> Value {
    v.map(num).unwrap_or(Value::Null)
}

/// Runs one parsed command; returns the process exit code.
pub fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Verify { inst, k, p, r } => {
            let (instance, _) = parse_instance(&inst.instance)?;
            let mu = resolve_matching(&instance, &inst.matching)?;
            let out = verify_robust(&instance, instance.salience(), &mu, *k, *r, *p)?;
            let config = json!({
                "command": "verify",
                "instance": inst.instance,
                "matching": matching_names(&instance, &mu),
                "k": k, "p": p.to_string(), "r": num(*r),
            });
            let witness = out.witness.as_ref().map(|w| {
                json!({
                    "b": instance.b_name(w.b),
                    "a": instance.a_name(w.a),
                    "support": w.support,
                    "s_hat": w.s_hat.weights().iter().map(|v| num(*v)).collect::<Vec<_>>(),
                    "distance": num(w.distance),
                    "perturbed": w.perturbed,
                })
            });
            let doc = envelope(config, json!({"robust": out.robust, "witness": witness}));
            emit_json(&cli.output, &doc)?;
            Ok(if out.robust { 0 } else { 1 })
        }
        Command::Radius { inst, k, p } => {
            let (instance, _) = parse_instance(&inst.instance)?;
            let mu = resolve_matching(&instance, &inst.matching)?;
            let report = robustness_radius(&instance, instance.salience(), &mu, *k, *p)?;
            let config = json!({
                "command": "radius",
                "instance": inst.instance,
                "matching": matching_names(&instance, &mu),
                "k": k, "p": p.to_string(),
            });
            let critical = report.critical_pair.as_ref().map(|(a, b, support)| {
                json!([instance.a_name(*a), instance.b_name(*b), support])
            });
            let per_pair: Vec<Value> = report
                .per_pair
                .iter()
                .map(|t| {
                    json!({
                        "a": instance.a_name(t.a),
                        "b": instance.b_name(t.b),
                        "radius": radius_value(t.radius),
                        "support": t.support,
                    })
                })
                .collect();
            let doc = envelope(
                config,
                json!({
                    "radius": radius_value(report.radius),
                    "critical_pair": critical,
                    "per_pair": per_pair,
                }),
            );
            emit_json(&cli.output, &doc)?;
            Ok(0)
        }
        Command::Base { inst, p, eps_base } => {
            let (instance, _) = parse_instance(&inst.instance)?;
            let mu = resolve_matching(&instance, &inst.matching)?;
            let base = base_radius(&instance, instance.salience(), &mu, *p, *eps_base)?;
            let config = json!({
                "command": "base",
                "instance": inst.instance,
                "matching": matching_names(&instance, &mu),
                "p": p.to_string(), "eps_base": num(*eps_base),
            });
            let doc = envelope(config, json!({"base_radius": radius_value(base)}));
            emit_json(&cli.output, &doc)?;
            Ok(0)
        }
        Command::Search {
            instance,
            k,
            p,
            budget,
            eps_ub,
        } => {
            let (inst, _) = parse_instance(instance)?;
            let state = most_robust_anytime(&inst, inst.salience(), *k, *p, *budget, *eps_ub)?;
            let config = json!({
                "command": "search",
                "instance": instance,
                "k": k, "p": p.to_string(), "budget": budget, "eps_ub": num(*eps_ub),
            });
            let trace: Vec<Value> = state
                .trace
                .iter()
                .map(|e| {
                    json!({
                        "event": e.event,
                        "lb": radius_value(e.lb),
                        "ub_frontier": radius_value(e.ub_frontier),
                        "node": e.node,
                        "expansions": e.expansions,
                    })
                })
                .collect();
            let doc = envelope(
                config,
                json!({
                    "lb": radius_value(state.lb),
                    "best": matching_names(&inst, &state.best),
                    "certified": state.certified,
                    "expansions": state.expansions,
                    "frontier_size": state.frontier.len(),
                    "trace": trace,
                }),
            );
            emit_json(&cli.output, &doc)?;
            Ok(0)
        }
        Command::Frontier {
            instance,
            k,
            p,
            eps_base,
        } => {
            let (inst, costs) = parse_instance(instance)?;
            let costs: CostTable = costs.ok_or_else(|| {
                Error::InvalidInput("frontier requires a costs table in the instance".into())
            })?;
            let points = frontier(&inst, inst.salience(), &costs, *p, *k, *eps_base)?;
            let config = json!({
                "command": "frontier",
                "instance": instance,
                "k": k, "p": p.to_string(), "eps_base": num(*eps_base),
            });
            let mut text = csv_header(&config);
            text.push_str("tau,c_lb,c_ub,matching\n");
            for pt in &points {
                let fmt_opt = |v: Option<f64>| match v {
                    Some(x) => format!("{:.9}", sig9(x)),
                    None => "infeasible".to_string(),
                };
                let id = pt
                    .matching
                    .as_ref()
                    .map(|mu| matching_names(&inst, mu).join(";"))
                    .unwrap_or_else(|| "infeasible".to_string());
                text.push_str(&format!(
                    "{:.9},{},{},{}\n",
                    sig9(pt.tau),
                    fmt_opt(pt.c_lb),
                    fmt_opt(pt.c_ub),
                    id
                ));
            }
            emit(&cli.output, &text)?;
            Ok(if points.iter().any(|pt| pt.c_ub.is_some()) {
                0
            } else {
                1
            })
        }
        Command::Region {
            inst,
            volume,
            samples,
            seed,
            format,
        } => {
            let (instance, _) = parse_instance(&inst.instance)?;
            let mu = resolve_matching(&instance, &inst.matching)?;
            let reg = region(&instance, &mu)?;
            let config = json!({
                "command": "region",
                "instance": inst.instance,
                "matching": matching_names(&instance, &mu),
                "volume": volume, "samples": samples, "seed": seed,
            });
            let m = instance.m();
            let mut factors = Vec::new();
            for f in &reg.factors {
                let verts = if m <= 6 { Some(vertices(f, m)?) } else { None };
                factors.push(json!({
                    "b": instance.b_name(f.b),
                    "halfspaces": f
                        .halfspaces
                        .iter()
                        .map(|g| g.iter().map(|v| num(*v)).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                    "vertices": verts.map(|vs| vs
                        .iter()
                        .map(|v| v.iter().map(|x| num(*x)).collect::<Vec<_>>())
                        .collect::<Vec<_>>()),
                }));
            }
            if format == "csv" {
                // polygon dump for plotting: one row per factor vertex
                let mut text = csv_header(&config);
                text.push_str("b,vertex,coords\n");
                for f in &reg.factors {
                    for (i, v) in vertices(f, m)?.iter().enumerate() {
                        let coords: Vec<String> =
                            v.iter().map(|x| format!("{:.9}", sig9(*x))).collect();
                        text.push_str(&format!(
                            "{},{},{}\n",
                            instance.b_name(f.b),
                            i,
                            coords.join(";")
                        ));
                    }
                }
                emit(&cli.output, &text)?;
                return Ok(0);
            }
            let (vol, ci, degenerate) = match volume.as_str() {
                "exact" => (Some(volume_exact(&reg)?), None, false),
                "mc" => {
                    let mc = volume_mc(&reg, *samples, *seed)?;
                    (Some(mc.estimate), Some(mc.ci_half), mc.degenerate)
                }
                other => {
                    return Err(Error::InvalidInput(format!(
                        "volume must be exact or mc, got {other}"
                    )))
                }
            };
            let member = contains(&reg, instance.salience())?;
            let doc = envelope(
                config,
                json!({
                    "factors": factors,
                    "contains_baseline": member,
                    "volume": opt_num(vol),
                    "ci_half": opt_num(ci),
                    "degenerate": degenerate,
                }),
            );
            emit_json(&cli.output, &doc)?;
            Ok(0)
        }
        Command::Sweep {
            n_values,
            trials,
            seed,
            mode,
        } => {
            let ns = n_values
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::InvalidInput(format!("n_values: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = one_swap_sweep(&ns, *trials, *seed, *mode)?;
            let config = json!({
                "command": "sweep",
                "n_values": ns, "trials": trials, "seed": seed, "mode": mode.to_string(),
            });
            let text = format!("{}{}", csv_header(&config), sweep_csv(&rows));
            emit(&cli.output, &text)?;
            Ok(0)
        }
    }
}

/// Parses arguments and runs; maps errors to exit code 2 with a diagnostic.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with exit 0
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

/// Round-trip helper used by tests and examples: serialize then reparse.
pub fn round_trip(inst: &Instance, costs: Option<&CostTable>) -> Result<Instance> {
    let doc = serialize_instance(inst, costs);
    Ok(crate::io::parse_instance_str(&doc)?.0)
}
