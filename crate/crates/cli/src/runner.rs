//! Experiment orchestration: dispatch a validated [`RunConfig`] and collect
//! text output, a JSON summary and any written files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde_json::json;
use wqnet_core::dynamics::evolve_master;
use wqnet_core::filtering::FilterOptions;
use wqnet_core::io_relations::{equivalence_check, output_relation, Equivalence};
use wqnet_core::kernel::{
    channel_kernel, gauge_coefficients, is_markovian, ito_table, pairwise_commutator, Channel,
    MarkovWitness, Markovianity,
};
use wqnet_core::network::WaveguideKind;

use crate::config::{ExperimentKind, RunConfig};
use crate::ensemble::run_ensemble;
use crate::report;

/// What a run produced.
pub struct RunOutput {
    /// Human-readable report, printed to stdout by the CLI.
    pub text: String,
    /// Machine-readable record; for simulate/filter this is the run summary.
    pub summary: serde_json::Value,
    /// Files written under the output directory.
    pub files: Vec<PathBuf>,
}

/// Execute one experiment. `label` names output files; `out_dir = None`
/// skips file output. `emit_trajectories` additionally writes one CSV per
/// trajectory on filter runs.
pub fn execute(
    config: &RunConfig,
    out_dir: Option<&Path>,
    label: &str,
    emit_trajectories: bool,
) -> Result<RunOutput> {
    let violations = config.validate();
    if !violations.is_empty() {
        bail!("invalid config: {}", violations.join("; "));
    }
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
    }
    match config.experiment {
        ExperimentKind::Classify => classify(config, out_dir, label),
        ExperimentKind::Kernels => kernels(config, out_dir, label),
        ExperimentKind::Simulate => simulate(config, out_dir, label),
        ExperimentKind::Filter => filter(config, out_dir, label, emit_trajectories),
        ExperimentKind::Equivalence => equivalence(config, out_dir, label),
    }
}

fn write_json(
    dir: Option<&Path>,
    name: String,
    value: &serde_json::Value,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    if let Some(dir) = dir {
        let path = dir.join(name);
        std::fs::write(&path, serde_json::to_string_pretty(value)?)
            .with_context(|| format!("cannot write {}", path.display()))?;
        files.push(path);
    }
    Ok(())
}

fn classify(config: &RunConfig, out_dir: Option<&Path>, label: &str) -> Result<RunOutput> {
    let net = config.to_network();
    let verdict = is_markovian(&net)?;
    let mut text = String::new();
    let verdict_name = match verdict.verdict {
        Markovianity::Markovian => "Markovian",
        Markovianity::NonMarkovian => "NonMarkovian",
    };
    text.push_str(&format!("network: {} atoms, {:?}\n", net.atom_count(), net.kind));
    text.push_str(&format!("verdict: {verdict_name}\n"));
    let witness_json = match &verdict.witness {
        MarkovWitness::DelayedTerm { j, l, term } => {
            text.push_str(&format!(
                "witness: delayed commutator term between channels {j} and {l}: weight {:+.6}{:+.6}i at delay {:.6} μs\n",
                term.weight.re, term.weight.im, term.delay
            ));
            json!({
                "kind": "delayed-term",
                "channels": [j, l],
                "weight_re": term.weight.re,
                "weight_im": term.weight.im,
                "delay": term.delay,
            })
        }
        MarkovWitness::Clause(clause) => {
            text.push_str(&format!("witness: {clause}\n"));
            json!({"kind": "clause", "clause": clause})
        }
    };
    let summary = json!({
        "config": config,
        "verdict": verdict_name,
        "witness": witness_json,
    });
    let mut files = Vec::new();
    write_json(out_dir, format!("classify_{label}.json"), &summary, &mut files)?;
    Ok(RunOutput { text, summary, files })
}

fn kernels(config: &RunConfig, out_dir: Option<&Path>, label: &str) -> Result<RunOutput> {
    let net = config.to_network();
    let n = net.atom_count();
    let mut text = String::new();
    let mut record = serde_json::Map::new();

    let channels: &[(Channel, &str)] = match net.kind {
        WaveguideKind::SemiInfinite => &[
            (Channel::SemiTilde, "input noise kernel κ̃"),
            (Channel::SemiOutput, "output kernel κ"),
        ],
        WaveguideKind::Infinite => &[
            (Channel::InfLeft, "left output kernel κˡ"),
            (Channel::InfRight, "right output kernel κʳ"),
        ],
    };
    let mut atoms_json = Vec::new();
    for j in 1..=n {
        text.push_str(&format!("atom {j}:\n"));
        let mut atom_json = serde_json::Map::new();
        for (channel, name) in channels {
            let k = channel_kernel(&net, j, *channel)?;
            text.push_str(&format!("  {name}:\n{}", report::kernel_text(&k)));
            atom_json.insert(format!("{channel:?}"), report::kernel_json(&k));
        }
        atoms_json.push(serde_json::Value::Object(atom_json));
    }
    record.insert("channel_kernels".into(), json!(atoms_json));

    text.push_str("pairwise input-noise commutator kernels:\n");
    let mut comm_json = Vec::new();
    for j in 1..=n {
        for l in 1..=n {
            let k = pairwise_commutator(&net, j, l)?;
            text.push_str(&format!("  [b({j}), b†({l})]:\n{}", report::kernel_text(&k)));
            comm_json.push(json!({"j": j, "l": l, "terms": report::kernel_json(&k)}));
        }
    }
    record.insert("commutators".into(), json!(comm_json));

    match ito_table(&net, config.dt) {
        Ok(table) => {
            text.push_str(&format!("Itô table at dt = {} μs (dB dB† coefficients, MHz):\n", config.dt));
            for j in 1..=n {
                text.push_str("   ");
                for l in 1..=n {
                    let e = table.entry(j, l);
                    text.push_str(&format!(" {:>+9.4}{:>+8.4}i", e.re, e.im));
                }
                text.push('\n');
            }
            text.push_str("  (dB dB = dB† dB† = dB† dB = 0)\n");
            record.insert("ito_table".into(), report::ito_table_json(&table));
        }
        Err(e) => {
            text.push_str(&format!("Itô table unavailable at dt = {}: {e}\n", config.dt));
            record.insert("ito_table_error".into(), json!(e.to_string()));
        }
    }

    let gauge = gauge_coefficients(&net)?;
    text.push_str("activated master-equation coefficients (amplitude, activation):\n");
    let mut gauge_json = Vec::new();
    for j in 1..=n {
        for l in 1..=n {
            let terms = gauge.terms(j, l);
            text.push_str(&format!("  ({j},{l}):"));
            if terms.is_empty() {
                text.push_str(" none\n");
            } else {
                for t in terms {
                    text.push_str(&format!(
                        " [{:+.5}{:+.5}i @ {:.4} μs]",
                        t.amplitude.re, t.amplitude.im, t.activation
                    ));
                }
                text.push('\n');
            }
            gauge_json.push(json!({
                "j": j, "l": l,
                "terms": terms.iter().map(|t| json!({
                    "amplitude_re": t.amplitude.re,
                    "amplitude_im": t.amplitude.im,
                    "activation": t.activation,
                })).collect::<Vec<_>>(),
            }));
        }
    }
    record.insert("gauge_coefficients".into(), json!(gauge_json));

    let verdict = is_markovian(&net)?;
    let verdict_name = match verdict.verdict {
        Markovianity::Markovian => "Markovian",
        Markovianity::NonMarkovian => "NonMarkovian",
    };
    text.push_str(&format!("markovianity: {verdict_name}\n"));
    record.insert("markovianity".into(), json!(verdict_name));

    let summary = json!({"config": config, "kernels": serde_json::Value::Object(record)});
    let mut files = Vec::new();
    write_json(out_dir, format!("kernels_{label}.json"), &summary, &mut files)?;
    Ok(RunOutput { text, summary, files })
}

fn simulate(config: &RunConfig, out_dir: Option<&Path>, label: &str) -> Result<RunOutput> {
    let start = Instant::now();
    let net = config.to_network();
    let rho0 = config.initial_state();
    let tracked = config.tracked_observables();
    let result = evolve_master(
        &net,
        &rho0,
        config.t_end,
        config.dt,
        config.mode.into(),
        config.exchange,
    )?;
    let columns = report::observable_series(&result, &tracked);
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        let path = dir.join(format!("simulate_{label}.csv"));
        report::write_series_csv(&path, &result.times, &columns)?;
        files.push(path);
    }
    let invariants = report::evolution_invariants(&result);
    let summary =
        report::run_summary(config, invariants.clone(), start.elapsed().as_secs_f64(), &files);
    write_json(out_dir, format!("simulate_{label}_summary.json"), &summary, &mut files)?;
    let mut text = format!(
        "simulate: {} grid points to t = {} μs (dt = {} μs)\n",
        result.times.len(),
        config.t_end,
        config.dt
    );
    text.push_str(&format!(
        "invariants: trace dev {:.2e}, hermiticity {:.2e}, min eigenvalue {:+.2e}\n",
        invariants["max_trace_deviation"].as_f64().unwrap(),
        invariants["max_hermiticity_residual"].as_f64().unwrap(),
        invariants["min_eigenvalue"].as_f64().unwrap(),
    ));
    for (name, series) in &columns {
        text.push_str(&format!("final {name} = {:.6}\n", series.last().unwrap()));
    }
    Ok(RunOutput { text, summary, files })
}

fn filter(
    config: &RunConfig,
    out_dir: Option<&Path>,
    label: &str,
    emit_trajectories: bool,
) -> Result<RunOutput> {
    let start = Instant::now();
    let net = config.to_network();
    let rho0 = config.initial_state();
    let tracked = config.tracked_observables();
    let names: Vec<String> = tracked.iter().map(|(n, _)| n.clone()).collect();
    let opts = FilterOptions {
        mode: config.mode.into(),
        exchange: config.exchange,
        strict_positivity: config.strict_positivity,
        observables: tracked.iter().map(|(_, o)| *o).collect(),
    };
    let result = run_ensemble(
        &net,
        &rho0,
        config.t_end,
        config.dt,
        &opts,
        config.trajectories,
        config.seed,
        config.workers,
        emit_trajectories,
    )?;
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        let path = dir.join(format!("filter_{label}.csv"));
        report::write_ensemble_csv(&path, &result.stats, &names)?;
        files.push(path);
        if let Some(records) = &result.records {
            for rec in records {
                let path = dir.join(format!("filter_{label}_traj{}.csv", rec.index));
                report::write_trajectory_csv(&path, rec, &names)?;
                files.push(path);
            }
        }
    }
    let invariants = report::ensemble_invariants(&result.stats);
    let summary =
        report::run_summary(config, invariants.clone(), start.elapsed().as_secs_f64(), &files);
    write_json(out_dir, format!("filter_{label}_summary.json"), &summary, &mut files)?;
    let mut text = format!(
        "filter: {} trajectories, {} workers, t = {} μs (dt = {} μs), base seed {}\n",
        config.trajectories, config.workers, config.t_end, config.dt, config.seed
    );
    text.push_str(&format!(
        "diagnostics: min eigenvalue {:+.2e}, max readout purity {:.9}\n",
        invariants["min_eigenvalue"].as_f64().unwrap(),
        invariants["max_purity"].as_f64().unwrap(),
    ));
    for (k, name) in names.iter().enumerate() {
        text.push_str(&format!(
            "final {name} = {:.6} ± {:.6}\n",
            result.stats.mean[k].last().unwrap(),
            result.stats.stderr[k].last().unwrap()
        ));
    }
    Ok(RunOutput { text, summary, files })
}

fn equivalence(config: &RunConfig, out_dir: Option<&Path>, label: &str) -> Result<RunOutput> {
    let (multi, single, kind) = config.equivalence_atoms();
    let report = equivalence_check(&multi, &single, kind);
    let verdict = match report.verdict {
        Equivalence::Equivalent => "Equivalent",
        Equivalence::NotEquivalent => "NotEquivalent",
    };
    let mut text = format!("equivalence ({kind:?}): {verdict}\n");
    for (i, r) in report.residuals.iter().enumerate() {
        text.push_str(&format!("residual {}: {r:.3e}\n", i + 1));
    }
    // Cross-check: when the conditions pass, the Markov port weights of the
    // two atoms agree; report them for the record.
    let ports = match kind {
        WaveguideKind::SemiInfinite => vec![wqnet_core::network::MeasurementPort::SemiInfiniteEnd],
        WaveguideKind::Infinite => vec![
            wqnet_core::network::MeasurementPort::InfiniteLeft,
            wqnet_core::network::MeasurementPort::InfiniteRight,
        ],
    };
    let mut weights_json = Vec::new();
    for port in ports {
        let multi_net = wqnet_core::network::Network::new(kind, vec![multi.clone()], port);
        let single_net = wqnet_core::network::Network::new(kind, vec![single.clone()], port);
        if let (Ok(rm), Ok(rs)) =
            (output_relation(&multi_net, port), output_relation(&single_net, port))
        {
            weights_json.push(json!({
                "port": format!("{port:?}"),
                "multi_weight": [rm.markov_weights[0].re, rm.markov_weights[0].im],
                "single_weight": [rs.markov_weights[0].re, rs.markov_weights[0].im],
            }));
        }
    }
    let summary = json!({
        "config": config,
        "verdict": verdict,
        "residuals": report.residuals,
        "port_weights": weights_json,
    });
    let mut files = Vec::new();
    write_json(out_dir, format!("equivalence_{label}.json"), &summary, &mut files)?;
    Ok(RunOutput { text, summary, files })
}
