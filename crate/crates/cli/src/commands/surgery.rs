//! `flow3 surgery`: exact perturbation algebra on explicit saddle data.

use std::path::Path;

use flow3::surgery::{surgery_report, SaddleData};

use super::{ensure_dir, write_json};
use crate::config::{AnalysisConfig, SurgeryParams};
use crate::{Cli, CliError, EXIT_OK};

pub fn run(cli: &Cli, params_path: &Path) -> Result<i32, CliError> {
    let params = SurgeryParams::load(params_path)?;
    let data = SaddleData::new(params.lambda, params.mu, params.gamma, params.tau)
        .map_err(|e| CliError::Surgery(e.to_string()))?;
    let budget = params.budget.as_ref().map(|b| (b.c, b.eps, b.lambda_rate, b.alpha));
    let report = surgery_report(&data, budget).map_err(|e| CliError::Surgery(e.to_string()))?;

    // the analysis config is optional here; only its output dir is used
    let out_dir = match AnalysisConfig::load(&cli.config) {
        Ok((cfg, _)) => crate::resolve_out_dir(cli, &cfg.output_dir),
        Err(_) => crate::resolve_out_dir(cli, "out"),
    };
    ensure_dir(&out_dir)?;
    write_json(&out_dir.join("surgery.json"), &report)?;

    let line = serde_json::json!({
        "command": "surgery",
        "trace": report.sink.trace,
        "det": report.sink.det,
        "modulus": report.sink.modulus,
        "m": report.budget.map(|b| b.m),
    });
    if cli.json {
        println!("{line}");
    } else {
        println!(
            "sheared monodromy: trace {:.3e}, det {:.6}, eigenvalue modulus {:.6}",
            report.sink.trace, report.sink.det, report.sink.modulus
        );
        if let Some(b) = &report.budget {
            println!(
                "budget: ε₀ = {:.6e}, ε₁ = {:.6e}, m = {}, δ = {:.6e}",
                b.eps0, b.eps1, b.m, b.delta
            );
        }
        println!("report -> {}", out_dir.join("surgery.json").display());
    }
    Ok(EXIT_OK)
}
