//! Suite drivers: translate a resolved config into verification-engine calls
//! and run artifacts.

use serde_json::json;

use dysonwall::verify::{self, Verdict as CoreVerdict};

use crate::config::{manifest_pairs, ExperimentConfig, Suite};
use crate::report::{CheckRecord, RunWriter, Verdict};

fn map_verdict(v: CoreVerdict) -> Verdict {
    match v {
        CoreVerdict::Pass => Verdict::Pass,
        CoreVerdict::Fail => Verdict::Fail,
        CoreVerdict::Inconclusive => Verdict::Inconclusive,
    }
}

fn map_checks(checks: Vec<verify::Check>) -> Vec<CheckRecord> {
    checks
        .into_iter()
        .map(|c| CheckRecord {
            name: c.name,
            statistic: c.statistic,
            threshold: c.threshold,
            p_value: c.p_value,
            verdict: map_verdict(c.verdict),
            detail: c.detail,
        })
        .collect()
}

fn params_json(cfg: &ExperimentConfig) -> serde_json::Value {
    json!({
        "n": cfg.n,
        "m": cfg.m,
        "t_end": cfg.t_end,
        "steps": cfg.steps,
        "samples": cfg.samples,
        "seed": cfg.seed,
        "tol_scale": cfg.tol_scale,
    })
}

fn scalar_rows(values: &[f64]) -> Vec<Vec<f64>> {
    values.iter().map(|&v| vec![v]).collect()
}

pub fn run_suite(cfg: &ExperimentConfig) -> Result<Verdict, String> {
    let writer = RunWriter::create(&cfg.out, &manifest_pairs(cfg))
        .map_err(|e| format!("cannot write run artifacts: {e}"))?;
    let io = |e: std::io::Error| format!("cannot write run artifacts: {e}");

    let checks = match cfg.suite {
        Suite::Theorem1 => {
            let p = verify::MaxLawParams {
                n: cfg.n,
                t_end: cfg.t_end,
                steps: cfg.steps,
                samples: cfg.samples,
                sde_steps: cfg.steps.min(4000).max(200),
                seed: cfg.seed,
                tol_scale: cfg.tol_scale,
            };
            let report = verify::max_law_suite(&p).map_err(|e| e.to_string())?;
            writer
                .write_samples("samples_sup_free", &scalar_rows(&report.sup_samples))
                .map_err(io)?;
            writer
                .write_samples("samples_sde_terminal", &report.sde_samples)
                .map_err(io)?;
            map_checks(report.checks)
        }
        Suite::Prop2 => {
            let p = verify::StackVsSdeParams {
                n: cfg.n,
                t_end: cfg.t_end,
                steps: cfg.steps,
                sde_steps: cfg.steps.min(4000).max(200),
                samples: cfg.samples,
                seed: cfg.seed,
            };
            let report = verify::stack_vs_sde_suite(&p).map_err(|e| e.to_string())?;
            writer
                .write_samples("samples_wall_stack", &scalar_rows(&report.y_samples))
                .map_err(io)?;
            writer
                .write_samples("samples_sde_terminal", &report.sde_samples)
                .map_err(io)?;
            map_checks(report.checks)
        }
        Suite::Prop5 => {
            let p = verify::MaxVsStackParams {
                n: cfg.n,
                t_end: cfg.t_end,
                steps: cfg.steps,
                samples: cfg.samples,
                seed: cfg.seed,
                reversal_lattices: 10_000,
            };
            let report = verify::max_vs_stack_suite(&p).map_err(|e| e.to_string())?;
            writer
                .write_samples("samples_sup_free", &scalar_rows(&report.sup_samples))
                .map_err(io)?;
            writer
                .write_samples("samples_wall_stack", &scalar_rows(&report.y_samples))
                .map_err(io)?;
            map_checks(report.checks)
        }
        Suite::Prop3Density => {
            let p = verify::DensityChecksParams {
                seed: cfg.seed,
                points: cfg.samples.min(10_000) as usize,
                tol_scale: cfg.tol_scale,
            };
            let report = verify::density_checks(&p).map_err(|e| e.to_string())?;
            writer
                .write_samples("heat_equation_residuals", &report.residual_rows)
                .map_err(io)?;
            map_checks(report.checks)
        }
        Suite::Prop4Intertwining => {
            let p = verify::IntertwiningSweepParams {
                budget: cfg.samples,
                seed: cfg.seed,
                tol_scale: cfg.tol_scale,
            };
            let report = verify::intertwining_sweep(&p).map_err(|e| e.to_string())?;
            writer
                .write_samples("intertwining_cases", &report.case_rows)
                .map_err(io)?;
            map_checks(report.checks)
        }
        Suite::Volume => {
            let p = verify::VolumeSweepParams {
                anchors: 20,
                samples: cfg.samples,
                m_filter: cfg.m,
                seed: cfg.seed,
            };
            let report = verify::volume_sweep(&p).map_err(|e| e.to_string())?;
            writer
                .write_samples("volume_estimates", &report.rows)
                .map_err(io)?;
            map_checks(report.checks)
        }
        Suite::OracleCheck => {
            let p = verify::OracleCheckParams {
                lattices: cfg.samples,
                max_n: cfg.n,
                dp_steps: cfg.steps.max(30),
                seed: cfg.seed,
            };
            let report = verify::oracle_check(&p).map_err(|e| e.to_string())?;
            writer
                .write_samples("worst_deviations", &report.worst_rows)
                .map_err(io)?;
            map_checks(report.checks)
        }
    };

    for c in &checks {
        let p = c
            .p_value
            .map(|p| format!(", p = {p:.4e}"))
            .unwrap_or_default();
        println!(
            "[{}] {:<40} statistic {: >12.6e} vs threshold {: >12.6e}{}  {:?}",
            cfg.suite.name(),
            c.name,
            c.statistic,
            c.threshold,
            p,
            c.verdict
        );
    }
    let verdict = writer
        .write_summary(cfg.suite.name(), params_json(cfg), checks)
        .map_err(io)?;
    println!(
        "[{}] overall: {:?} (artifacts in {})",
        cfg.suite.name(),
        verdict,
        writer.dir().display()
    );
    Ok(verdict)
}

/// Kinds a plain simulation run can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimProcess {
    FreeStack,
    WallStack,
    SdeA,
    SdeC,
    SdeD,
}

impl SimProcess {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "z" | "free-stack" => Ok(SimProcess::FreeStack),
            "y" | "wall-stack" => Ok(SimProcess::WallStack),
            "sde-a" => Ok(SimProcess::SdeA),
            "sde-c" => Ok(SimProcess::SdeC),
            "sde-d" => Ok(SimProcess::SdeD),
            other => Err(format!(
                "unknown process '{other}' (expected z|y|sde-a|sde-c|sde-d)"
            )),
        }
    }

    fn label(&self) -> &'static str {
        match self {
            SimProcess::FreeStack => "free_stack",
            SimProcess::WallStack => "wall_stack",
            SimProcess::SdeA => "sde_a",
            SimProcess::SdeC => "sde_c",
            SimProcess::SdeD => "sde_d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Terminal,
    Sup,
}

impl Observable {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s {
            "terminal" => Ok(Observable::Terminal),
            "sup" => Ok(Observable::Sup),
            other => Err(format!("unknown observable '{other}' (terminal|sup)")),
        }
    }
}

pub fn run_simulate(
    cfg: &ExperimentConfig,
    process: SimProcess,
    observable: Observable,
) -> Result<Verdict, String> {
    use dysonwall::ensemble::{run, trajectory_rng};
    use dysonwall::grid::{sample_lattice, TimeGrid};
    use dysonwall::reflecting_sim::{running_max, y_process, z_process};
    use dysonwall::ProcessKind;

    let mut pairs = manifest_pairs(cfg);
    pairs.retain(|(k, _)| k != "suite");
    pairs.push(("suite".to_string(), "simulate".to_string()));
    pairs.push(("process".to_string(), process.label().to_string()));
    pairs.push((
        "observable".to_string(),
        match observable {
            Observable::Terminal => "terminal".to_string(),
            Observable::Sup => "sup".to_string(),
        },
    ));
    pairs.sort();
    let writer =
        RunWriter::create(&cfg.out, &pairs).map_err(|e| format!("cannot write artifacts: {e}"))?;

    let grid = TimeGrid::new(cfg.t_end, cfg.steps).map_err(|e| e.to_string())?;
    let n = cfg.n;
    let seed = cfg.seed;
    let rows: Vec<Vec<f64>> = match process {
        SimProcess::FreeStack | SimProcess::WallStack => {
            let wall = process == SimProcess::WallStack;
            run(cfg.samples, move |i| {
                let lat = sample_lattice(grid, n, &mut trajectory_rng(seed, i));
                let ens = if wall { y_process(&lat) } else { z_process(&lat) };
                match observable {
                    Observable::Sup => vec![running_max(&ens, n - 1).expect("row")],
                    Observable::Terminal => {
                        (0..n).map(|r| *ens.path(r).last().unwrap()).collect()
                    }
                }
            })
        }
        SimProcess::SdeA | SimProcess::SdeC | SimProcess::SdeD => {
            if observable == Observable::Sup {
                return Err("sup observable applies to the stack processes only".to_string());
            }
            let kind = match process {
                SimProcess::SdeA => ProcessKind::TypeA { n: cfg.n },
                SimProcess::SdeC => ProcessKind::TypeC { m: cfg.m.unwrap_or(cfg.n) },
                _ => ProcessKind::TypeD { m: cfg.m.unwrap_or(cfg.n) },
            };
            let (configs, discards) =
                verify::sde_terminal_ensemble(kind, cfg.t_end, cfg.steps, cfg.samples, cfg.seed)
                    .map_err(|e| e.to_string())?;
            println!("discards: {discards} across {} trajectories", cfg.samples);
            configs
        }
    };
    writer
        .write_samples(&format!("samples_{}", process.label()), &rows)
        .map_err(|e| format!("cannot write artifacts: {e}"))?;
    let verdict = writer
        .write_summary(
            "simulate",
            json!({
                "process": process.label(),
                "n": cfg.n,
                "m": cfg.m,
                "t_end": cfg.t_end,
                "steps": cfg.steps,
                "samples": cfg.samples,
                "seed": cfg.seed,
            }),
            vec![],
        )
        .map_err(|e| format!("cannot write artifacts: {e}"))?;
    println!(
        "[simulate] wrote {} trajectories to {}",
        rows.len(),
        writer.dir().display()
    );
    Ok(verdict)
}
