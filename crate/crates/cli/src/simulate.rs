use std::fmt::Write as _;
use std::path::Path;

use clmbr::sim::{self, SimConfig, SimSummary};
use serde::Serialize;

use crate::failure::Failure;
use crate::report::{to_json, SIM_SCHEMA};

#[derive(Serialize)]
pub struct SimReport<'a> {
    pub schema: &'static str,
    pub config: &'a SimConfig,
    pub summary: &'a SimSummary,
}

/// Parse a study configuration; `.json` files are JSON, anything else TOML.
pub fn load_config(path: &Path) -> Result<SimConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
    let source = path.display();
    let config: SimConfig = if path.extension().is_some_and(|e| e == "json") {
        let de = &mut serde_json::Deserializer::from_str(&text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| Failure::input(format!("{source}: {}: {}", e.path(), e.inner())))?
    } else {
        let de = toml::Deserializer::parse(&text)
            .map_err(|e| Failure::input(format!("{source}: {e}")))?;
        serde_path_to_error::deserialize(de)
            .map_err(|e| Failure::input(format!("{source}: {}: {}", e.path(), e.inner())))?
    };
    config
        .validate()
        .map_err(|e| Failure::input(format!("{source}: {e}")))?;
    Ok(config)
}

pub fn preset(name: &str) -> Result<SimConfig, Failure> {
    sim::preset(name).ok_or_else(|| {
        Failure::input(format!(
            "unknown preset '{name}' (available: {})",
            sim::PRESET_NAMES.join(", ")
        ))
    })
}

pub fn summary_csv(summary: &SimSummary) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "method",
        "parameter",
        "true_value",
        "pu_pct",
        "rb_pct",
        "rb_is_absolute",
        "wald_pct",
        "replications",
        "finite_replications",
        "effective_replications",
        "boundary_pct",
        "failures",
    ])
    .unwrap();
    let num = |v: f64| if v.is_finite() { format!("{v:.6}") } else { String::new() };
    for m in &summary.methods {
        let tail = [
            m.effective_replications.to_string(),
            num(m.boundary_pct),
            m.failures.to_string(),
        ];
        for p in &m.parameters {
            let mut rec = vec![
                m.method.to_string(),
                p.parameter.clone(),
                num(p.true_value),
                num(p.pu),
                num(p.rb),
                p.rb_is_absolute.to_string(),
                num(p.wald),
                p.replications.to_string(),
                p.finite_replications.to_string(),
            ];
            rec.extend(tail.iter().cloned());
            w.write_record(&rec).unwrap();
        }
        for g in &m.gamma {
            let mut rec = vec![
                m.method.to_string(),
                format!("gamma({})", g.parameter),
                num(g.true_gamma),
                String::new(),
                num(g.rb),
                "false".to_string(),
                String::new(),
                m.effective_replications.to_string(),
                g.finite_replications.to_string(),
            ];
            rec.extend(tail.iter().cloned());
            w.write_record(&rec).unwrap();
        }
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn summary_json(config: &SimConfig, summary: &SimSummary) -> String {
    to_json(&SimReport {
        schema: SIM_SCHEMA,
        config,
        summary,
    })
}

/// Rows of PU%, RB% and WALD% per method and parameter, then boundary counts.
pub fn summary_table(summary: &SimSummary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} link, n = {}, R = {}, seed = {}",
        summary.link, summary.n, summary.replications, summary.seed
    );
    let _ = writeln!(s, "{:<10} {:<10} {:>8} {:>8} {:>8} {:>8}", "method", "param", "true", "PU%", "RB%", "WALD%");
    let cell = |v: f64| if v.is_finite() { format!("{v:.2}") } else { "-".into() };
    for m in &summary.methods {
        for p in &m.parameters {
            let rb = if p.rb_is_absolute { format!("{}*", cell(p.rb)) } else { cell(p.rb) };
            let _ = writeln!(
                s,
                "{:<10} {:<10} {:>8} {:>8} {:>8} {:>8}",
                m.method.name(),
                p.parameter,
                cell(p.true_value),
                cell(p.pu),
                rb,
                cell(p.wald)
            );
        }
    }
    if summary.methods.iter().any(|m| !m.gamma.is_empty()) {
        let _ = writeln!(s, "\nordinal superiority, RB%");
        for m in &summary.methods {
            for g in &m.gamma {
                let _ = writeln!(s, "{:<10} gamma({}) {:>8}", m.method.name(), g.parameter, cell(g.rb));
            }
        }
    }
    let _ = writeln!(s, "\nboundary estimates");
    for m in &summary.methods {
        let _ = writeln!(
            s,
            "{:<10} {:>6.2}% ({} of {}), failures {}, BR restarts {}",
            m.method.name(),
            m.boundary_pct,
            m.boundary_count,
            m.effective_replications,
            m.failures,
            m.restarts
        );
    }
    if summary.methods.iter().flat_map(|m| &m.parameters).any(|p| p.rb_is_absolute) {
        let _ = writeln!(s, "* true value is zero: absolute bias instead of RB%");
    }
    s
}
