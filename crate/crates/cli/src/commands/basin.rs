//! `flow3 basin`: weak-basin and trapped-set estimates plus plot data.

use flow3::dissipative::{dissipative_region, trapped_set_measure, weak_basin_estimate, Fate};
use flow3::periodic::enumerate_orbits;
use flow3::region::RegionSpec;

use super::{ensure_dir, write_json, write_text};
use crate::config::AnalysisConfig;
use crate::{Cli, CliError, EXIT_OK};

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let (mut cfg, _raw) = AnalysisConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = crate::resolve_out_dir(cli, &cfg.output_dir);
    ensure_dir(&out)?;
    let spec = cfg.build_spec()?;

    let budget = super::orbits::census_budget(&cfg);
    let sections = super::user_sections(&cfg, &spec)?;
    let catalog = enumerate_orbits(&spec, &budget, sections);
    let region = dissipative_region(&spec, &catalog, cfg.budgets.eps_fat);

    let basin = weak_basin_estimate(
        &spec,
        &region,
        cfg.budgets.mc_samples,
        cfg.budgets.t_transient,
        cfg.budgets.t_horizon,
        cfg.seed,
        cfg.budgets.flow_tol.max(1e-9),
    )
    .map_err(|e| CliError::Integration(e.to_string()))?;

    write_json(&out.join("basin.json"), &basin)?;

    // CSV: one row per region/horizon
    let mut csv = String::from(
        "region,samples,hits,misses,left_domain,undecided,estimate,ci_low,ci_high,flagged\n",
    );
    csv.push_str(&format!(
        "{},{},{},{},{},{},{},{},{},{}\n",
        basin.region_id,
        basin.samples,
        basin.hits,
        basin.misses,
        basin.left_domain,
        basin.undecided,
        basin.estimate,
        basin.ci_low,
        basin.ci_high,
        basin.empty_region
    ));
    write_text(&out.join("basin.csv"), &csv)?;

    // plot data: cumulative estimate vs sample count
    let mut plot = String::from("n,estimate\n");
    let mut hits = 0u64;
    for (i, f) in basin.fates.iter().enumerate() {
        if *f == Fate::HitsRegion {
            hits += 1;
        }
        let n = i as u64 + 1;
        if n % 50 == 0 || n == basin.samples {
            plot.push_str(&format!("{},{}\n", n, hits as f64 / n as f64));
        }
    }
    write_text(&out.join("plot_basin.csv"), &plot)?;

    // trapped-set table for the first region component (when present)
    let mut trapped_rows = String::from("N,estimate,ci_low,ci_high\n");
    if let Some(c) = region.components.first() {
        let tube = RegionSpec::Tube {
            samples: c.samples.clone(),
            radius: cfg.budgets.trap_tube_radius,
            closed: true,
        };
        let table = trapped_set_measure(
            &spec,
            &tube,
            &cfg.budgets.trap_horizons,
            cfg.budgets.mc_samples,
            cfg.seed,
            cfg.budgets.flow_tol.max(1e-9),
        )
        .map_err(|e| CliError::Integration(e.to_string()))?;
        for row in &table.rows {
            trapped_rows.push_str(&format!(
                "{},{},{},{}\n",
                row.n_time, row.estimate, row.ci_low, row.ci_high
            ));
        }
        write_json(&out.join("trapped.json"), &table)?;
    }
    write_text(&out.join("plot_trapped.csv"), &trapped_rows)?;

    let line = serde_json::json!({
        "command": "basin",
        "flow": spec.name,
        "estimate": basin.estimate,
        "ci": [basin.ci_low, basin.ci_high],
        "flagged_empty": basin.empty_region,
    });
    if cli.json {
        println!("{line}");
    } else if basin.empty_region {
        println!("dissipative region is empty: basin estimate flagged (see basin.csv)");
    } else {
        println!(
            "weak-basin estimate {:.4} (95% CI [{:.4}, {:.4}]) -> {}",
            basin.estimate,
            basin.ci_low,
            basin.ci_high,
            out.display()
        );
    }
    Ok(EXIT_OK)
}
