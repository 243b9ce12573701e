use std::fs;
use std::path::{Path, PathBuf};

use codipas::config::Overrides;
use codipas::equilibrium::{enumerate_saddles, solve_logit_default};
use codipas::output::{write_aggregate, write_comparison, write_finals, write_trajectory, TimeFormat};
use codipas::sim::{aggregate, column_names, compare_to_ode, records_from_ode, run_seeds, Record};
use codipas::{DynamicsSystem, ExperimentConfig, GameSpec, MixedStrategy, OdeState, SystemKind};
use serde_json::json;

use crate::svg::{line_chart, Series};
use crate::{CliError, CompareArgs, GameSource, OdeArgs, RunArgs, SolveArgs};

type Result<T> = std::result::Result<T, CliError>;

/// `"5,2;1,3"` → `[[5, 2], [1, 3]]`.
pub fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Input(format!("matrix entry {:?} is not a number", x.trim())))
                })
                .collect()
        })
        .collect()
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::load(path)?)
}

fn game(src: &GameSource) -> Result<(GameSpec, Option<ExperimentConfig>)> {
    match (&src.config, &src.matrix) {
        (Some(path), _) => {
            let cfg = load_config(path)?;
            Ok((cfg.spec()?, Some(cfg)))
        }
        (None, Some(m)) => Ok((GameSpec::from_rows(parse_matrix(m)?)?, None)),
        (None, None) => Err(CliError::Input("either --config or --matrix is required".into())),
    }
}

/// Short human form: at most ten decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn vector(p: &[f64]) -> String {
    format!("[{}]", p.iter().map(|&x| short(x)).collect::<Vec<_>>().join(", "))
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    let (spec, _) = game(&args.game)?;
    let saddles = enumerate_saddles(&spec)?;
    let first = saddles.first().ok_or_else(|| CliError::Runtime("no saddle point found".into()))?;
    println!("saddle point");
    println!("  f* = {}", vector(first.f_star.probs()));
    println!("  g* = {}", vector(first.g_star.probs()));
    println!("  value = {}", short(first.value));
    if args.all && saddles.len() > 1 {
        for (i, s) in saddles.iter().enumerate().skip(1) {
            println!("alternative {i}: f* = {}, g* = {}", vector(s.f_star.probs()), vector(s.g_star.probs()));
        }
    }
    let logit = match args.epsilon {
        Some(eps) => {
            let l = solve_logit_default(&spec, eps)?;
            println!("logit equilibrium (epsilon = {})", short(eps));
            println!("  f = {}", vector(l.f_eps.probs()));
            println!("  g = {}", vector(l.g_eps.probs()));
            println!(
                "  residual = {:.3e} after {} iterations{}",
                l.residual,
                l.iterations,
                if l.converged { "" } else { " (not converged)" }
            );
            Some(l)
        }
        None => None,
    };
    let mut record = json!({ "saddle": first, "logit": logit });
    if args.all {
        record["saddles"] = json!(saddles);
    }
    println!("{record}");
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> codipas::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

/// One chart per column group; groups with nothing finite are skipped.
fn plot_columns(
    dir: &Path,
    prefix: &str,
    x_label: &str,
    times: &[f64],
    columns: &[String],
    rows: &[Vec<f64>],
) -> Result<()> {
    let groups: [(&str, fn(&str) -> bool); 6] = [
        ("strategy_p1", |c| c.starts_with("f_")),
        ("strategy_p2", |c| c.starts_with("g_")),
        ("estimates_p1", |c| c.starts_with("uhat1_")),
        ("estimates_p2", |c| c.starts_with("uhat2_")),
        ("payoffs", |c| c.starts_with("payoff")),
        ("exploitability", |c| c == "exploitability" || c == "dist_saddle_sup"),
    ];
    for (name, pick) in groups {
        let series: Vec<Series> = columns
            .iter()
            .enumerate()
            .filter(|(_, c)| pick(c))
            .map(|(j, c)| Series { name: c.clone(), points: times.iter().zip(rows).map(|(&t, r)| (t, r[j])).collect() })
            .filter(|s| s.points.iter().any(|p| p.1.is_finite()))
            .collect();
        if series.is_empty() {
            continue;
        }
        let path = dir.join(format!("{prefix}{name}.svg"));
        write_file(&path, line_chart(&format!("{prefix}{name}"), x_label, &series).as_bytes())?;
    }
    Ok(())
}

fn overrides(a: &RunArgs) -> Overrides {
    Overrides { horizon: a.horizon, seeds: a.seeds.clone(), epsilon: a.epsilon }
}

struct Prepared {
    cfg: ExperimentConfig,
    out: PathBuf,
    plots: bool,
}

fn prepare(a: &RunArgs) -> Result<Prepared> {
    let mut cfg = load_config(&a.config)?;
    cfg.apply(&overrides(a));
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.output.directory));
    let plots = (a.plots || cfg.output.plots) && !a.no_plots;
    Ok(Prepared { cfg, out, plots })
}

pub fn simulate(a: &RunArgs) -> Result<()> {
    let Prepared { cfg, out, plots } = prepare(a)?;
    let (exp, warnings) = cfg.experiment_with_warnings()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    create_dir(&out)?;
    let runs = run_seeds(&exp, a.jobs)?;
    for traj in &runs {
        let bytes = csv_bytes(|b| write_trajectory(b, &traj.records, TimeFormat::Step))?;
        write_file(&out.join(format!("seed_{}.csv", traj.seed)), &bytes)?;
    }
    let report = aggregate(&runs)?;
    write_file(&out.join("aggregate.csv"), &csv_bytes(|b| write_aggregate(b, &report, TimeFormat::Step))?)?;
    write_file(&out.join("finals.csv"), &csv_bytes(|b| write_finals(b, &report))?)?;
    if plots {
        plot_columns(&out, "", "step", &report.times, &report.columns, &report.mean)?;
    }
    let initial = report.mean[0][report.column("exploitability").expect("exploitability column")];
    let last = report.final_mean("exploitability").expect("exploitability column");
    println!("{} seeds, horizon {}, output in {}", runs.len(), exp.horizon, out.display());
    println!("seed-mean exploitability: initial {}, final {}", short(initial), short(last));
    let mean_of = |prefix: &str| -> Vec<f64> {
        report.columns.iter().filter(|c| c.starts_with(prefix)).map(|c| report.final_mean(c).unwrap()).collect()
    };
    println!("final seed-mean f = {}, g = {}", vector(&mean_of("f_")), vector(&mean_of("g_")));
    for (name, prefix) in [("uhat1", "uhat1_"), ("uhat2", "uhat2_")] {
        let u = mean_of(prefix);
        if u.iter().all(|x| x.is_finite()) {
            println!("final seed-mean {name} = {}", vector(&u));
        }
    }
    Ok(())
}

fn strategy(values: Option<&Vec<f64>>, fallback: Option<&MixedStrategy>, n: usize) -> Result<MixedStrategy> {
    match (values, fallback) {
        (Some(v), _) => Ok(MixedStrategy::new(v.clone())?),
        (None, Some(s)) => Ok(s.clone()),
        (None, None) => Ok(MixedStrategy::uniform(n)),
    }
}

pub fn ode(a: &OdeArgs) -> Result<()> {
    let (spec, cfg) = game(&a.game)?;
    let p1 = cfg.as_ref().map(|c| &c.players.p1);
    let p2 = cfg.as_ref().map(|c| &c.players.p2);
    let (n1, n2) = (spec.matrix.rows(), spec.matrix.cols());
    let epsilon = a.epsilon.or(p1.and_then(|p| p.epsilon)).or(p2.and_then(|p| p.epsilon)).unwrap_or(0.05);
    let f0 = strategy(a.f0.as_ref(), p1.and_then(|p| p.initial_strategy.as_ref()), n1)?;
    let g0 = strategy(a.g0.as_ref(), p2.and_then(|p| p.initial_strategy.as_ref()), n2)?;
    let kind = SystemKind::from_name(&a.system, epsilon, a.k1, a.k2, Some(f0.clone()), n1)?;
    let system = DynamicsSystem::new(kind, spec.clone())?;
    let t0 = a.t0.unwrap_or(if a.system == "composite_T2" { a.dt } else { 0.0 });
    let mut init = OdeState::new(f0, g0).at_time(t0);
    if system.carries_estimates() {
        let u = p1.and_then(|p| p.initial_estimates.clone()).unwrap_or_else(|| vec![0.0; n1]);
        init = init.with_estimates(u);
    }
    let traj = system.integrate(&init, a.t_end, a.dt, a.stride)?;
    let records = records_from_ode(&spec, &traj)?;

    let out = a
        .out
        .clone()
        .or_else(|| cfg.as_ref().map(|c| PathBuf::from(&c.output.directory)))
        .unwrap_or_else(|| PathBuf::from("out"));
    create_dir(&out)?;
    let name = format!("ode_{}", a.system);
    let bytes = csv_bytes(|b| write_trajectory(b, &records, TimeFormat::Real))?;
    write_file(&out.join(format!("{name}.csv")), &bytes)?;
    if a.plots {
        let times: Vec<f64> = records.iter().map(|r| r.t).collect();
        let rows: Vec<Vec<f64>> = records.iter().map(Record::values).collect();
        plot_columns(&out, &format!("{name}_"), "t", &times, &column_names(n1, n2), &rows)?;
    }
    let last = records.last().expect("integration records its initial state");
    println!(
        "{} from t = {} to t = {} (dt = {}), {} records in {}",
        a.system,
        short(t0),
        short(a.t_end),
        a.dt,
        records.len(),
        out.join(format!("{name}.csv")).display()
    );
    println!("final f = {}, g = {}", vector(&last.f), vector(&last.g));
    println!("final exploitability = {}", short(last.exploitability));
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let Prepared { cfg, out, plots } = prepare(&a.run)?;
    let (system, section) = cfg.compare_system(a.system.as_deref())?;
    let exp = cfg.experiment()?;
    create_dir(&out)?;
    let runs = run_seeds(&exp, a.run.jobs)?;
    let name = system.kind.name();
    for traj in &runs {
        let steps: Vec<u64> = traj.records.iter().map(|r| r.t as u64).collect();
        let taus = exp.clock(section.clock, &steps)?;
        let points = compare_to_ode(traj, &system, &taus, section.max_dt)?;
        let stem = format!("compare_{name}_seed_{}", traj.seed);
        write_file(&out.join(format!("{stem}.csv")), &csv_bytes(|b| write_comparison(b, &points))?)?;
        if plots {
            let series =
                [Series { name: "distance".into(), points: points.iter().map(|p| (p.tau, p.distance)).collect() }];
            write_file(&out.join(format!("{stem}.svg")), line_chart(&stem, "tau", &series).as_bytes())?;
        }
        let last = points.last().expect("a comparison covers the initial record");
        let worst = points.iter().map(|p| p.distance).fold(0.0, f64::max);
        println!(
            "seed {}: tau = {}, final distance {}, max distance {}",
            traj.seed,
            short(last.tau),
            short(last.distance),
            short(worst)
        );
    }
    Ok(())
}
