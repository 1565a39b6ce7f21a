// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fs::File;
use std::io::BufReader;

use serde_json::{json, Value};

use cpflux_core::simulate::{run_deletion_study, study_csv, StudyConfig};
use cpflux_core::viz::{self, csv_tables, PlotStyle, ReportDocument};
use cpflux_core::{
    data_range, default_beta, estimate_sigma2, load_csv, pelt, run_influence, CostModel,
    DetectorConfig, Error, InfluenceOptions, Method, TimeSeries,
};

use crate::args::{
    AutoValue, DetectArgs, Format, InfluenceArgs, InputArgs, MethodArg, Parallelism, SimulateArgs,
};
use crate::artifacts::Artifacts;
use crate::failure::Failure;

const THREADS_ENV: &str = "CPFLUX_THREADS";

struct Prepared {
    ts: TimeSeries,
    cfg: DetectorConfig,
    sigma2: f64,
    echo: Value,
}

fn load(a: &InputArgs) -> Result<TimeSeries, Failure> {
    let path = a.input.display();
    let file = File::open(&a.input).map_err(|e| Failure::Input(format!("{path}: {e}")))?;
    load_csv(BufReader::new(file), Some(&a.column)).map_err(|e| match Failure::from(e) {
        Failure::Input(m) => Failure::Input(format!("{path}: {m}")),
        other => other,
    })
}

/// Resolves `auto` settings against the loaded series.
fn prepare(a: &InputArgs) -> Result<Prepared, Failure> {
    let ts = load(a)?;
    let n = ts.len();
    let (sigma2, estimated) = match a.sigma2 {
        AutoValue::Value(v) if v > 0.0 => (v, false),
        AutoValue::Value(v) => {
            return Err(Failure::Config(format!("--sigma2 must be > 0, got {v}")))
        }
        AutoValue::Auto => match estimate_sigma2(&ts) {
            Ok(v) => (v, true),
            // Every segment of a constant series costs zero whatever σ² is.
            Err(Error::DegenerateSeries) if data_range(&ts) == 0.0 => {
                eprintln!("cpflux: series is constant; using sigma2 = 1");
                (1.0, false)
            }
            Err(Error::DegenerateSeries) => {
                return Err(Failure::Input(format!(
                    "{}: cannot estimate sigma2 (zero MAD of differences); pass --sigma2",
                    a.input.display()
                )))
            }
            Err(e) => return Err(e.into()),
        },
    };
    let beta = match a.beta {
        AutoValue::Auto => default_beta(n, sigma2),
        AutoValue::Value(v) => v,
    };
    let mut cfg = DetectorConfig::new(beta)?.with_min_segment_length(a.min_segment_length);
    if !estimated {
        cfg = cfg.with_sigma2(sigma2);
    }
    cfg.validate()?;
    let column = match &a.column {
        cpflux_core::Column::Index(i) => json!(i),
        cpflux_core::Column::Name(s) => json!(s),
    };
    let echo = json!({
        "input": a.input.display().to_string(),
        "column": column,
        "n": n,
        "beta": beta,
        "beta_source": a.beta.to_string(),
        "sigma2": sigma2,
        "sigma2_source": a.sigma2.to_string(),
        "min_segment_length": a.min_segment_length,
    });
    Ok(Prepared {
        ts,
        cfg,
        sigma2,
        echo,
    })
}

/// Installs the global worker pool. The flag wins over the environment.
fn configure_threads(flag: Option<Parallelism>) -> Result<(), Failure> {
    let setting = match flag {
        Some(p) => p,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) if !v.trim().is_empty() => v
                .parse::<Parallelism>()
                .map_err(|e| Failure::Config(format!("{THREADS_ENV}: {e}")))?,
            _ => Parallelism::Auto,
        },
    };
    if let Parallelism::Threads(n) = setting {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Internal(e.to_string()))?;
    }
    Ok(())
}

fn format_list(formats: &[Format]) -> Vec<&'static str> {
    let mut f: Vec<Format> = formats.to_vec();
    f.sort();
    f.dedup();
    f.into_iter()
        .map(|f| match f {
            Format::Svg => "svg",
            Format::Json => "json",
            Format::Csv => "csv",
        })
        .collect()
}

fn join_locations(cps: &[usize]) -> String {
    cps.iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

pub fn detect(a: &DetectArgs) -> Result<(), Failure> {
    let p = prepare(&a.input)?;
    let cm = CostModel::new(&p.ts, p.sigma2)?;
    let seg = pelt(&cm, &p.cfg)?;

    let k = seg.num_changepoints();
    if k == 0 {
        println!("0 changepoints");
    } else {
        println!(
            "{k} changepoint{}: {}",
            if k == 1 { "" } else { "s" },
            join_locations(&seg.changepoints)
        );
    }

    let formats = format_list(&a.format);
    let mut out = Artifacts::default();
    if formats.contains(&"json") {
        out.add_json(
            "segmentation.json",
            &json!({ "schema_version": viz::SCHEMA_VERSION, "config": p.echo, "segmentation": seg }),
        )?;
    }
    if formats.contains(&"svg") {
        out.add(
            "segmentation.svg",
            viz::render_segmentation(&p.ts, &seg, &PlotStyle::default()),
        );
    }
    let mut config = p.echo;
    config["formats"] = json!(formats);
    out.write(&a.input.out, "detect", config)
}

pub fn influence(a: &InfluenceArgs) -> Result<(), Failure> {
    if !(a.multiplier.is_finite() && a.multiplier > 0.0) {
        return Err(Failure::Config(format!(
            "--multiplier must be > 0, got {}",
            a.multiplier
        )));
    }
    configure_threads(a.parallel.parallelism)?;
    let p = prepare(&a.input)?;
    let methods: &[Method] = match a.method {
        MethodArg::Delete => &[Method::Delete],
        MethodArg::Contaminate => &[Method::Contaminate],
        MethodArg::Both => &[Method::Delete, Method::Contaminate],
    };
    let formats = format_list(&a.format);
    let style = PlotStyle::default();
    let mut out = Artifacts::default();

    for &method in methods {
        let mut opts = InfluenceOptions::new(method);
        opts.multiplier = a.multiplier;
        let report = run_influence(&p.ts, &p.cfg, &opts)?;
        let (s, u, o) = report.status_counts();
        println!("{method}: stable={s} unstable={u} outlier={o}");

        let dir = method.as_str();
        if formats.contains(&"svg") {
            out.add(
                format!("{dir}/dashboard.svg"),
                viz::render_dashboard(&report, &style),
            );
            out.add(
                format!("{dir}/location_stability.svg"),
                viz::render_location_stability(&report, &style),
            );
            out.add(
                format!("{dir}/parameter_stability.svg"),
                viz::render_parameter_stability(&report, &style),
            );
            out.add(
                format!("{dir}/influence_map.svg"),
                viz::render_influence_map(&report, &style),
            );
        }
        let doc = ReportDocument::from_report(&report);
        if formats.contains(&"json") {
            out.add(format!("{dir}/report.json"), doc.to_json()?);
        }
        if formats.contains(&"csv") {
            for (name, body) in csv_tables(&doc)? {
                out.add(format!("{dir}/{name}"), body);
            }
        }
    }

    let mut config = p.echo;
    config["methods"] = json!(methods.iter().map(|m| m.as_str()).collect::<Vec<_>>());
    config["multiplier"] = json!(a.multiplier);
    config["formats"] = json!(formats);
    out.write(&a.input.out, "influence", config)
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    if a.reps < 2 {
        return Err(Failure::Config(format!(
            "--reps must be at least 2, got {}",
            a.reps
        )));
    }
    if a.sizes.iter().any(|&n| n < 4) {
        return Err(Failure::Config("--sizes must all be at least 4".into()));
    }
    if !(a.sigma2.is_finite() && a.sigma2 > 0.0) {
        return Err(Failure::Config(format!(
            "--sigma2 must be > 0, got {}",
            a.sigma2
        )));
    }
    configure_threads(a.parallel.parallelism)?;
    let cfg = StudyConfig {
        sizes: a.sizes.clone(),
        shifts: a.shifts.clone(),
        reps: a.reps,
        seed: a.seed,
        sigma2: a.sigma2,
    };
    let cells = run_deletion_study(&cfg)?;
    for c in &cells {
        println!(
            "n={} delta={} mean={:.5} se={:.5}",
            c.n, c.delta, c.mean, c.se
        );
    }

    let formats = format_list(&a.format);
    let mut out = Artifacts::default();
    if formats.contains(&"csv") {
        out.add("study.csv", study_csv(&cells));
    }
    if formats.contains(&"json") {
        out.add_json("study.json", &cells)?;
    }
    if formats.contains(&"svg") {
        out.add(
            "study.svg",
            viz::render_study(&cells, &PlotStyle::default()),
        );
    }
    let config = json!({
        "seed": a.seed,
        "reps": a.reps,
        "sizes": a.sizes,
        "shifts": a.shifts,
        "sigma2": a.sigma2,
        "formats": formats,
    });
    out.write(&a.out, "simulate", config)
}
