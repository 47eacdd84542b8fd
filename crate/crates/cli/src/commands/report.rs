//! `flow3 report`: human-readable rendering of an existing report bundle.

use super::analyze::ReportBundle;
use crate::config::AnalysisConfig;
use crate::{Cli, CliError, EXIT_OK};

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let out = match AnalysisConfig::load(&cli.config) {
        Ok((cfg, _)) => crate::resolve_out_dir(cli, &cfg.output_dir),
        Err(_) => crate::resolve_out_dir(cli, "out"),
    };
    let path = out.join("report.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let bundle: ReportBundle = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("cannot parse {}: {e}", path.display())))?;

    if cli.json {
        println!("{}", serde_json::json!({
            "command": "report",
            "flow": bundle.summary.flow,
            "note": bundle.summary.dichotomy_note,
        }));
        return Ok(EXIT_OK);
    }

    println!("flow: {} (config {})", bundle.summary.flow, &bundle.config_hash[..12]);
    println!(
        "catalog: {} orbit(s); sinks {}, dissipative saddles {}, non-hyperbolic {}",
        bundle.catalog.orbits.len(),
        bundle.summary.sink_count,
        bundle.summary.dissipative_saddle_count,
        bundle.summary.nonhyperbolic_count
    );
    for o in &bundle.catalog.orbits {
        println!(
            "  {}: period {:.6}, class {:?}, |det| {:.3e}, dissipative {}",
            o.name, o.period, o.class, o.det_full, o.dissipative
        );
    }
    if bundle.certificates.is_empty() {
        println!("certificates: none");
    } else {
        println!("certificates:");
        for c in &bundle.certificates {
            println!(
                "  {:?} [{}]: {} ({} samples, min margin {:.3e})",
                c.kind,
                c.id,
                if c.verdict { "PASS" } else { "FAIL" },
                c.samples.len(),
                c.min_margin()
            );
        }
    }
    for a in &bundle.attractors {
        println!(
            "attractor check [{}]: trapping {}, convergence {} -> {}",
            a.orbit,
            a.verdict.trapping_ok,
            a.verdict.convergence_ok,
            if a.verdict.verdict { "attractor-evidence" } else { "no evidence" }
        );
    }
    println!(
        "weak basin: {:.4} (95% CI [{:.4}, {:.4}]) over {} samples{}",
        bundle.basin.estimate,
        bundle.basin.ci_low,
        bundle.basin.ci_high,
        bundle.basin.samples,
        if bundle.basin.empty_region { " [empty region]" } else { "" }
    );
    if let Some(t) = &bundle.trapped {
        print!("trapped-set measure:");
        for r in &t.rows {
            print!(" N={}: {:.4}", r.n_time, r.estimate);
        }
        println!();
    }
    println!("{}", bundle.summary.dichotomy_note);
    Ok(EXIT_OK)
}
