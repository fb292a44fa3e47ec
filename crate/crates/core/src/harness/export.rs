use std::path::{Path, PathBuf};

use super::svg::{LineChart, Series};
use super::{mean_ci, BanditExperiment, ExperimentConfig, HarnessError, MdpExperiment, PolicyDemo, RunFailure};

pub const BANDIT_HEADER: [&str; 5] = ["alpha", "step", "mean_regret", "ci95", "failures"];
pub const SNAPSHOT_HEADER: [&str; 5] = ["alpha", "horizon", "mean_regret", "ci95", "failures"];
pub const MDP_HEADER: [&str; 5] = ["alpha", "iteration", "mean_return", "ci95", "failures"];
pub const DEMO_HEADER: [&str; 4] = ["alpha", "iteration", "arm", "probability"];
pub const FAILURE_HEADER: [&str; 3] = ["alpha", "run", "message"];

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentOutput {
    Bandit(BanditExperiment),
    Mdp(MdpExperiment),
    Demo(PolicyDemo),
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let result = (|| -> Result<(), csv::Error> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(header)?;
        for row in rows {
            writer.write_record(&row)?;
        }
        writer.flush()?;
        Ok(())
    })();
    result.map_err(|e| io_error(path)(e.into()))
}

fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    std::fs::write(path, text).map_err(io_error(path))
}

fn failure_rows(failures: &[RunFailure]) -> impl Iterator<Item = Vec<String>> + '_ {
    failures.iter().map(|f| {
        vec![
            f.alpha.map_or_else(|| "ucb".to_string(), |a| a.to_string()),
            f.run.to_string(),
            f.message.clone(),
        ]
    })
}

/// Write the CSV tables, SVG charts and `resolved_config.json` for one sweep
/// into `dir` (created if missing). Returns the written paths.
///
/// CSV numbers carry full precision; confidence half-widths are
/// `1.96 · sd / √runs` over the runs that finished, and `failures` counts the
/// runs that did not.
pub fn aggregate_and_export(
    output: &ExperimentOutput,
    config: &ExperimentConfig,
    dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mut written = Vec::new();
    let mut emit = |name: &str| {
        let path = dir.join(name);
        written.push(path.clone());
        path
    };

    let resolved = serde_json::to_string_pretty(config).expect("config serializes");
    write_text(&emit("resolved_config.json"), &(resolved + "\n"))?;

    match output {
        ExperimentOutput::Bandit(exp) => {
            let curves: Vec<_> = exp.curves.iter().chain(std::iter::once(&exp.ucb)).collect();
            let rows = curves.iter().flat_map(|c| {
                (0..c.mean.len()).map(move |n| {
                    vec![
                        c.label(),
                        n.to_string(),
                        c.mean[n].to_string(),
                        c.ci95[n].to_string(),
                        c.failures.to_string(),
                    ]
                })
            });
            write_csv(&emit("bandit_regret.csv"), &BANDIT_HEADER, rows)?;

            let mut snapshot = Vec::new();
            for c in &curves {
                for &h in &config.snapshot_horizons {
                    let finals: Vec<f64> = c.runs.iter().filter_map(|r| r.regret.get(h).copied()).collect();
                    let (mean, ci) = mean_ci(&finals);
                    snapshot.push(vec![c.label(), h.to_string(), mean.to_string(), ci.to_string(), c.failures.to_string()]);
                }
            }
            write_csv(&emit("regret_vs_alpha.csv"), &SNAPSHOT_HEADER, snapshot)?;
            write_csv(&emit("failures.csv"), &FAILURE_HEADER, failure_rows(&exp.failures))?;

            let chart = LineChart {
                title: "Average regret".into(),
                x_label: "step".into(),
                y_label: "regret".into(),
                series: curves
                    .iter()
                    .map(|c| Series {
                        label: if c.alpha.is_some() { format!("α = {}", c.label()) } else { "UCB".into() },
                        x: (0..c.mean.len()).map(|n| n as f64).collect(),
                        y: c.mean.clone(),
                        band: Some(c.ci95.clone()),
                    })
                    .collect(),
                reference: None,
            };
            write_text(&emit("bandit_regret.svg"), &chart.render())?;

            let by_alpha = LineChart {
                title: "Regret after a fixed number of steps".into(),
                x_label: "α".into(),
                y_label: "regret".into(),
                series: config
                    .snapshot_horizons
                    .iter()
                    .map(|&h| {
                        let points: Vec<(f64, f64, f64)> = exp
                            .curves
                            .iter()
                            .map(|c| {
                                let finals: Vec<f64> = c.runs.iter().filter_map(|r| r.regret.get(h).copied()).collect();
                                let (mean, ci) = mean_ci(&finals);
                                (c.alpha.unwrap_or(f64::NAN), mean, ci)
                            })
                            .collect();
                        Series {
                            label: format!("n = {h}"),
                            x: points.iter().map(|p| p.0).collect(),
                            y: points.iter().map(|p| p.1).collect(),
                            band: Some(points.iter().map(|p| p.2).collect()),
                        }
                    })
                    .collect(),
                reference: None,
            };
            write_text(&emit("regret_vs_alpha.svg"), &by_alpha.render())?;
        }
        ExperimentOutput::Mdp(exp) => {
            let rows = exp.curves.iter().flat_map(|c| {
                (0..c.mean.len()).map(move |k| {
                    vec![
                        c.alpha.to_string(),
                        k.to_string(),
                        c.mean[k].to_string(),
                        c.ci95[k].to_string(),
                        c.failures.to_string(),
                    ]
                })
            });
            write_csv(&emit("mdp_returns.csv"), &MDP_HEADER, rows)?;
            write_csv(&emit("failures.csv"), &FAILURE_HEADER, failure_rows(&exp.failures))?;
            let chart = LineChart {
                title: format!("Policy iteration on {}", exp.env),
                x_label: "iteration".into(),
                y_label: "average reward J(π)".into(),
                series: exp
                    .curves
                    .iter()
                    .map(|c| Series {
                        label: format!("α = {}", c.alpha),
                        x: (0..c.mean.len()).map(|k| k as f64).collect(),
                        y: c.mean.clone(),
                        band: Some(c.ci95.clone()),
                    })
                    .collect(),
                reference: Some((exp.optimal_return, "optimal".into())),
            };
            write_text(&emit("mdp_returns.svg"), &chart.render())?;
        }
        ExperimentOutput::Demo(demo) => {
            let rows = demo.policies.iter().flat_map(|(alpha, sequence)| {
                sequence.iter().enumerate().flat_map(move |(k, pi)| {
                    pi.weights()
                        .iter()
                        .enumerate()
                        .map(move |(a, p)| vec![alpha.to_string(), k.to_string(), a.to_string(), p.to_string()])
                })
            });
            write_csv(&emit("policy_demo.csv"), &DEMO_HEADER, rows)?;
            // arms ordered by value so every α reads left (worst) to right (best)
            let mut order: Vec<usize> = (0..demo.values.len()).collect();
            order.sort_by(|&a, &b| demo.values[a].total_cmp(&demo.values[b]));
            let chart = LineChart {
                title: format!("Final policy after repeated improvement (η = {})", demo.eta),
                x_label: "arm rank by value".into(),
                y_label: "probability".into(),
                series: demo
                    .policies
                    .iter()
                    .map(|(alpha, sequence)| {
                        let last = sequence.last().expect("sequence starts with the uniform policy");
                        Series {
                            label: format!("α = {alpha}"),
                            x: (0..order.len()).map(|r| r as f64).collect(),
                            y: order.iter().map(|&a| last.get(a)).collect(),
                            band: None,
                        }
                    })
                    .collect(),
                reference: None,
            };
            write_text(&emit("policy_demo.svg"), &chart.render())?;
        }
    }
    Ok(written)
}
