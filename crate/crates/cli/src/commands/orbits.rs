//! `flow3 orbits`: run the census and write the catalog.

use flow3::periodic::{enumerate_orbits, CensusBudget};

use super::{config_hash, ensure_dir, write_json, write_text};
use crate::config::AnalysisConfig;
use crate::{Cli, CliError, EXIT_EMPTY_CENSUS, EXIT_OK};

pub fn census_budget(cfg: &AnalysisConfig) -> CensusBudget {
    CensusBudget {
        seeds: cfg.budgets.seeds,
        period_bound: cfg.budgets.period_bound,
        max_returns: cfg.budgets.max_returns,
        tol: cfg.budgets.flow_tol,
        orbit_tol: cfg.budgets.orbit_tol,
        auto_sections: cfg.budgets.auto_sections,
        section_half_width: cfg.budgets.section_half_width,
        dedup_eps: 1e-4,
        min_period: cfg.budgets.min_period,
    }
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let (mut cfg, raw) = AnalysisConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = crate::resolve_out_dir(cli, &cfg.output_dir);
    ensure_dir(&out)?;
    let spec = cfg.build_spec()?;
    let budget = census_budget(&cfg);
    let sections = super::user_sections(&cfg, &spec)?;
    let catalog = enumerate_orbits(&spec, &budget, sections);

    write_json(&out.join("catalog.json"), &catalog.to_json(&spec.name))?;
    write_text(&out.join("catalog.csv"), &catalog.to_csv())?;

    let summary = serde_json::json!({
        "command": "orbits",
        "flow": spec.name,
        "config_hash": config_hash(&raw),
        "orbits": catalog.orbits.len(),
        "attempted": catalog.attempted,
        "converged": catalog.converged,
        "empty": catalog.orbits.is_empty(),
    });
    if cli.json {
        println!("{summary}");
    } else {
        println!(
            "census: {} orbit(s) from {} attempts ({} converged) -> {}",
            catalog.orbits.len(),
            catalog.attempted,
            catalog.converged,
            out.display()
        );
    }
    if catalog.orbits.is_empty() {
        eprintln!("warning: census found no periodic orbits at this budget");
        return Ok(EXIT_EMPTY_CENSUS);
    }
    Ok(EXIT_OK)
}
