//! `flow3 analyze`: the full pipeline with a machine-readable report bundle.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use flow3::dissipative::{
    attractor_check, dissipative_region, trapped_set_measure, weak_basin_estimate,
    AttractorVerdict, BasinEstimate, RegionApprox, TrappedTable,
};
use flow3::periodic::{enumerate_orbits, orbit_samples_n, CatalogJson, OrbitClass};
use flow3::region::RegionSpec;
use flow3::linpoincare::{cocycle_along, unit_norm_bound, CocycleJson, NormBound};
use flow3::splitting::{
    check_angle_bound, check_contraction_rate, check_dominated, check_hyperbolic,
    eigen_directions, periodic_cocycle, SplittingCertificate,
};

use super::{config_hash, ensure_dir, write_json, write_text};
use crate::config::AnalysisConfig;
use crate::{Cli, CliError, EXIT_OK};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttractorEntry {
    pub orbit: String,
    pub tube_radius: f64,
    pub verdict: AttractorVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub flow: String,
    pub sink_count: usize,
    pub saddle_count: usize,
    pub dissipative_saddle_count: usize,
    pub nonhyperbolic_count: usize,
    pub attractor_evidence: Vec<String>,
    pub basin_ci: [f64; 2],
    pub dichotomy_note: String,
}

/// Everything one analysis run produces. Timings are deliberately kept out:
/// they go to a sibling timings.json so this document is reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub catalog: CatalogJson,
    pub region: RegionApprox,
    /// Estimated sup of the unit-time cocycle norm (observed max × 1.25).
    pub norm_bound: NormBound,
    /// Serialized normal cocycles, one per dissipative saddle.
    pub cocycles: Vec<CocycleJson>,
    pub certificates: Vec<SplittingCertificate>,
    pub attractors: Vec<AttractorEntry>,
    pub basin: BasinEstimate,
    pub trapped: Option<TrappedTable>,
    pub summary: Summary,
}

pub fn build_bundle(cfg: &AnalysisConfig, raw: &[u8]) -> Result<(ReportBundle, Vec<(String, f64)>), CliError> {
    let spec = cfg.build_spec()?;
    let mut timings = Vec::new();
    let clock = Instant::now();

    let budget = super::orbits::census_budget(cfg);
    let sections = super::user_sections(cfg, &spec)?;
    let catalog = enumerate_orbits(&spec, &budget, sections);
    timings.push(("census".to_string(), clock.elapsed().as_secs_f64()));

    let t0 = Instant::now();
    let norm_bound = unit_norm_bound(&spec, cfg.budgets.norm_probes, cfg.budgets.flow_tol.max(1e-9), cfg.seed)
        .map_err(|e| CliError::Integration(e.to_string()))?;
    timings.push(("norm-bound".to_string(), t0.elapsed().as_secs_f64()));

    let t1 = Instant::now();
    let region = dissipative_region(&spec, &catalog, cfg.budgets.eps_fat);
    let mut certificates = Vec::new();
    let mut cocycles = Vec::new();
    let saddles: Vec<_> = catalog
        .orbits
        .iter()
        .filter(|o| o.class == OrbitClass::Saddle && o.dissipative)
        .collect();
    if !saddles.is_empty() {
        certificates.push(check_angle_bound(&saddles, cfg.certificates.angle_floor));
    }
    for orbit in &saddles {
        if let Ok(c) = check_contraction_rate(orbit, cfg.certificates.contraction_rate) {
            certificates.push(c);
        }
        let dirs = match eigen_directions(orbit) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let gaps = cfg.certificates.dominated_gaps.max(1);
        let window = cfg.certificates.dominated_window;
        // serialize the cocycle over a coarse unit-capped partition
        {
            let legs = (orbit.period / 1.0).ceil().max(4.0) as usize;
            let gap = orbit.period / legs as f64;
            let partition: Vec<f64> = (0..=legs).map(|i| i as f64 * gap).collect();
            if let Ok(coc) = cocycle_along(&spec, &orbit.point, &partition, cfg.budgets.flow_tol) {
                cocycles.push(CocycleJson::from(&coc));
            }
        }
        if let Ok(oc) = periodic_cocycle(&spec, orbit, gaps, cfg.budgets.flow_tol) {
            if let Ok(c) = check_dominated(&oc, &dirs, window) {
                certificates.push(c);
            }
            if let Ok(c) = check_hyperbolic(
                &oc,
                &dirs,
                cfg.certificates.hyperbolic_k,
                cfg.certificates.hyperbolic_rate,
                cfg.certificates.hyperbolic_horizon,
            ) {
                certificates.push(c);
            }
        }
    }
    timings.push(("certificates".to_string(), t1.elapsed().as_secs_f64()));

    let t2 = Instant::now();
    let mut attractors = Vec::new();
    for orbit in catalog.dissipative_orbits() {
        let samples = match orbit_samples_n(&spec, orbit, 128, cfg.budgets.flow_tol) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let tube = RegionSpec::Tube {
            samples: samples.iter().map(|p| [p.x, p.y, p.z]).collect(),
            radius: cfg.certificates.attractor_tube_radius,
            closed: true,
        };
        match attractor_check(
            &spec,
            &samples,
            &tube,
            cfg.certificates.attractor_tau,
            cfg.certificates.attractor_horizon,
            cfg.certificates.attractor_eps,
            cfg.budgets.flow_tol,
        ) {
            Ok(verdict) => attractors.push(AttractorEntry {
                orbit: orbit.name.clone(),
                tube_radius: cfg.certificates.attractor_tube_radius,
                verdict,
            }),
            Err(_) => continue,
        }
    }
    timings.push(("attractor-checks".to_string(), t2.elapsed().as_secs_f64()));

    let t3 = Instant::now();
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
    let trapped = region.components.first().map(|c| {
        let tube = RegionSpec::Tube {
            samples: c.samples.clone(),
            radius: cfg.budgets.trap_tube_radius,
            closed: true,
        };
        trapped_set_measure(
            &spec,
            &tube,
            &cfg.budgets.trap_horizons,
            cfg.budgets.mc_samples,
            cfg.seed,
            cfg.budgets.flow_tol.max(1e-9),
        )
    });
    let trapped = match trapped {
        Some(Ok(t)) => Some(t),
        Some(Err(e)) => return Err(CliError::Integration(e.to_string())),
        None => None,
    };
    timings.push(("basin".to_string(), t3.elapsed().as_secs_f64()));

    let sink_count = catalog.count_by_class(OrbitClass::Sink);
    let saddle_count = catalog.count_by_class(OrbitClass::Saddle);
    let nonhyperbolic_count = catalog.count_by_class(OrbitClass::NonHyperbolic);
    let dissipative_saddle_count = saddles.len();
    let attractor_evidence: Vec<String> = attractors
        .iter()
        .filter(|a| a.verdict.verdict)
        .map(|a| a.orbit.clone())
        .collect();
    let dichotomy_note = if region.is_empty() {
        "no dissipative orbits at this budget: the dissipative region is empty and basin \
         estimates are flagged"
            .to_string()
    } else if !attractor_evidence.is_empty() && basin.ci_low > 0.9 {
        format!(
            "evidence for the finitely-many-attractors side: {} attractor candidate(s) and a \
             weak-basin estimate with CI low {:.4}",
            attractor_evidence.len(),
            basin.ci_low
        )
    } else if basin.ci_high < 0.1 {
        format!(
            "dissipative region attracts a null set at this budget (CI high {:.4}); its \
             components are not attractors",
            basin.ci_high
        )
    } else {
        "evidence inconclusive at this budget".to_string()
    };
    let summary = Summary {
        flow: spec.name.clone(),
        sink_count,
        saddle_count,
        dissipative_saddle_count,
        nonhyperbolic_count,
        attractor_evidence,
        basin_ci: [basin.ci_low, basin.ci_high],
        dichotomy_note,
    };

    Ok((
        ReportBundle {
            schema_version: 1,
            config_hash: config_hash(raw),
            seed: cfg.seed,
            catalog: catalog.to_json(&spec.name),
            region,
            norm_bound,
            cocycles,
            certificates,
            attractors,
            basin,
            trapped,
            summary,
        },
        timings,
    ))
}

pub fn run(cli: &Cli) -> Result<i32, CliError> {
    let (mut cfg, raw) = AnalysisConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = crate::resolve_out_dir(cli, &cfg.output_dir);
    ensure_dir(&out)?;
    let (bundle, timings) = build_bundle(&cfg, &raw)?;

    write_json(&out.join("report.json"), &bundle)?;
    write_json(&out.join("catalog.json"), &bundle.catalog)?;
    write_json(&out.join("cocycles.json"), &bundle.cocycles)?;
    let csv = {
        let mut s = String::from("name,period,class,dissipative,det\n");
        for o in &bundle.catalog.orbits {
            s.push_str(&format!(
                "{},{},{:?},{},{}\n",
                o.name, o.period, o.class, o.dissipative, o.det_full
            ));
        }
        s
    };
    write_text(&out.join("summary.csv"), &csv)?;
    write_json(
        &out.join("timings.json"),
        &serde_json::json!({"stages": timings.iter().map(|(k, v)| serde_json::json!({"stage": k, "seconds": v})).collect::<Vec<_>>()}),
    )?;

    let line = serde_json::json!({
        "command": "analyze",
        "flow": bundle.summary.flow,
        "sinks": bundle.summary.sink_count,
        "dissipative_saddles": bundle.summary.dissipative_saddle_count,
        "attractor_evidence": bundle.summary.attractor_evidence,
        "basin_ci": bundle.summary.basin_ci,
        "empty_region": bundle.region.is_empty(),
        "note": bundle.summary.dichotomy_note,
    });
    if cli.json {
        println!("{line}");
    } else {
        println!("flow: {}", bundle.summary.flow);
        println!(
            "orbits: {} sink(s), {} saddle(s) ({} dissipative), {} non-hyperbolic",
            bundle.summary.sink_count,
            bundle.summary.saddle_count,
            bundle.summary.dissipative_saddle_count,
            bundle.summary.nonhyperbolic_count
        );
        println!(
            "basin estimate: {:.4} (95% CI [{:.4}, {:.4}])",
            bundle.basin.estimate, bundle.basin.ci_low, bundle.basin.ci_high
        );
        println!("{}", bundle.summary.dichotomy_note);
        println!("report -> {}", out.join("report.json").display());
    }
    Ok(EXIT_OK)
}
