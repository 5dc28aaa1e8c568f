use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Result;
use ellipsephic::counting::count_vinogradov_ellipsephic;
use ellipsephic::exponents::{self, band_violations, default_band_level, sweep_banded, ExponentEstimate};
use ellipsephic::json::format_real;
use ellipsephic::{
    decoupling_report, enumerate_level, estimate_restriction, exponent_no_carryover, has_carryover, normalize_digits,
    DigitSet, SetDescriptor,
};
use serde::Serialize;
use serde_json::json;

use crate::args::{Cli, Command};
use crate::cache::{self, RunRecord};
use crate::config::{FileConfig, FlagOverrides, Format, Settings};
use crate::suites;

/// What a command wrote to stdout and whether it succeeded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub payload: String,
    pub success: bool,
    pub from_cache: bool,
}

pub fn settings_for(cli: &Cli) -> Result<Settings> {
    let g = &cli.global;
    let file = match &g.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let flags = FlagOverrides {
        seed: g.seed,
        tol: g.tol,
        restarts: g.restarts,
        max_iters: g.max_iters,
        budget: g.budget,
        method: g.method,
        cache: g.cache.clone(),
    };
    let format = if g.json {
        Format::Json
    } else if g.csv {
        Format::Csv
    } else {
        Format::Text
    };
    let mut settings = Settings::resolve(&file, &flags, format)?;
    if g.no_cache {
        settings.cache = None;
    }
    Ok(settings)
}

/// Runs the command, consulting and updating the cache when one is set.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let settings = settings_for(cli)?;
    let params = json!({ "args": &cli.command, "settings": &settings });
    let key = cache::cache_key(cli.command.name(), &params);
    if let Some(path) = &settings.cache {
        if let Some(record) = cache::lookup(path, &key)? {
            return Ok(Outcome { payload: record.payload, success: true, from_cache: true });
        }
    }
    let started = Instant::now();
    let (payload, success) = execute(&cli.command, &settings)?;
    if let (Some(path), true) = (&settings.cache, success) {
        cache::append(
            path,
            &RunRecord {
                key,
                command: cli.command.name().into(),
                params,
                version: cache::VERSION.into(),
                wall_time_seconds: started.elapsed().as_secs_f64(),
                payload: payload.clone(),
            },
        )?;
    }
    Ok(Outcome { payload, success, from_cache: false })
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn execute(command: &Command, settings: &Settings) -> Result<(String, bool)> {
    let cfg = &settings.optimizer;
    let format = settings.format;
    let out = match command {
        Command::Level { spec, j } => {
            let level = enumerate_level(spec, *j)?;
            let values = level.values();
            match format {
                Format::Json => to_json(&json!({ "generator": spec, "level": j, "elements": values }))?,
                Format::Csv => {
                    let mut s = String::from("value\n");
                    for v in &values {
                        writeln!(s, "{v}")?;
                    }
                    s
                }
                Format::Text => {
                    let words: Vec<String> = values.iter().map(i64::to_string).collect();
                    format!("{}\n", words.join(" "))
                }
            }
        }
        Command::Optimize { spec, j, n } => {
            let level = enumerate_level(spec, *j)?;
            let est = estimate_restriction(level.elements(), *n, cfg)?
                .describe(SetDescriptor::Ellipsephic { generator: spec.clone(), level: *j });
            match format {
                Format::Csv => {
                    let mut s = String::from("point,weight\n");
                    for (p, w) in level.values().iter().zip(est.extremizer.values()) {
                        writeln!(s, "{p},{}", format_real(*w))?;
                    }
                    s
                }
                _ => to_json(&est)?,
            }
        }
        Command::Exponent { spec, n, t, sweep, support_cap, extremizer_level } => {
            let cap = u128::from(*support_cap);
            let estimates: Vec<ExponentEstimate> = if let Some(range) = sweep {
                let sweep = sweep_banded(spec, *n, range.start..=range.end, cfg, cap)?;
                for t in &sweep.skipped {
                    eprintln!("note: skipping t = {t}: {}^{t} does not exceed n = {n}", spec.base());
                }
                let list = sweep.estimates;
                for (a, b) in band_violations(&list) {
                    eprintln!(
                        "warning: bands for t = {} and t = {} do not intersect; an optimization missed its maximum",
                        list[a].t_used, list[b].t_used
                    );
                }
                list
            } else if let Some(t) = t {
                vec![exponents::exponent_banded(spec, *n, *t, cfg, cap)?]
            } else if has_carryover(&normalize_digits(spec), *n) {
                let t = default_band_level(spec, *n);
                vec![exponents::exponent_banded(spec, *n, t, cfg, cap)?]
            } else {
                vec![exponent_no_carryover(spec, *n, cfg)?]
            };
            let estimates = match extremizer_level {
                Some(level) => estimates.into_iter().map(|e| e.with_product_extremizer(*level)).collect::<Result<_, _>>()?,
                None => estimates,
            };
            match format {
                Format::Json if sweep.is_some() => to_json(&estimates)?,
                Format::Json => to_json(&estimates[0])?,
                _ => exponent_csv(&estimates),
            }
        }
        Command::Count { spec, j, s, degree } => {
            let result = count_vinogradov_ellipsephic(spec, *j, *s, *degree, u128::from(settings.budget))?;
            match format {
                Format::Csv => format!(
                    "count,diagonal_count,tuples_enumerated\n{},{},{}\n",
                    result.count, result.diagonal_count, result.tuples_enumerated
                ),
                _ => to_json(&result)?,
            }
        }
        Command::Verify { suite } => {
            let checks = suites::run_suite(*suite, cfg);
            let passed = checks.iter().all(|c| c.passed);
            let text = match format {
                Format::Json => to_json(&checks)?,
                Format::Csv => {
                    let mut s = String::from("suite,check,passed,detail\n");
                    for c in &checks {
                        writeln!(s, "{},{},{},\"{}\"", c.suite, c.name, c.passed, c.detail.replace('"', "'"))?;
                    }
                    s
                }
                Format::Text => suites::render(&checks),
            };
            return Ok((text, passed));
        }
        Command::Report { specs, n, t } => {
            let reports = specs
                .iter()
                .map(|spec| decoupling_report(spec, *n, cfg, *t))
                .collect::<Result<Vec<_>, _>>()?;
            match format {
                Format::Json => to_json(&reports)?,
                Format::Csv => {
                    let mut s = String::from("set,delta_1,count_1,p,kappa,alpha_lower,alpha_upper,exact,cap,comparison\n");
                    for r in &reports {
                        writeln!(
                            s,
                            "{},{},{},{},{},{},{},{},{},{}",
                            quoted(&r.generator),
                            format_real(r.delta_1),
                            r.count_1,
                            r.parabola_exponent_p,
                            format_real(r.kappa.alpha_point),
                            format_real(r.kappa.alpha_lower),
                            format_real(r.kappa.alpha_upper),
                            r.kappa.exact,
                            format_real(r.trivial_cap),
                            format_real(r.comparison_exponent),
                        )?;
                    }
                    s
                }
                Format::Text => exponents::render_table(&reports),
            }
        }
    };
    Ok((out, true))
}

fn quoted(spec: &DigitSet) -> String {
    format!("\"{spec}\"")
}

/// Plot data: one row per estimate.
pub fn exponent_csv(estimates: &[ExponentEstimate]) -> String {
    let mut s = String::from("t,alpha_point,alpha_lower,alpha_upper\n");
    for e in estimates {
        s.push_str(&format!(
            "{},{},{},{}\n",
            e.t_used,
            format_real(e.alpha_point),
            format_real(e.alpha_lower),
            format_real(e.alpha_upper)
        ));
    }
    s
}
