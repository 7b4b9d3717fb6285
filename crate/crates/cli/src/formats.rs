//! On-disk formats: the three CSV schemas, the coordinate-list precision
//! export with its index sidecar, the fit result document, the comparison
//! table, and the synthetic ground-truth file.
//!
//! All writers format numbers deterministically, so identical inputs and
//! seeds yield byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

use hydrocar_core::inference::FitResult;
use hydrocar_core::model::{Dataset, Gender, Participant};
use hydrocar_core::network::{parse_network, NodeId, WaterNetwork};
use hydrocar_core::selection::{ComparisonTable, RowOutcome};
use hydrocar_core::synth::{SimulationConfig, SimulationTruth};
use hydrocar_core::PrecisionMatrix;

pub const NODES_HEADER: &str = "node_id,x,y";
pub const SEGMENTS_HEADER: &str = "from_node,to_node,length_m";
pub const PARTICIPANTS_HEADER: &str = "id,outcome,age,gender,house_id,node_id,x,y";

pub fn read_network(nodes_path: &Path, segments_path: &Path) -> Result<WaterNetwork> {
    let nodes = fs::read_to_string(nodes_path)
        .with_context(|| format!("reading {}", nodes_path.display()))?;
    let segments = fs::read_to_string(segments_path)
        .with_context(|| format!("reading {}", segments_path.display()))?;
    Ok(parse_network(&nodes, &segments)?)
}

pub fn write_network(nodes_path: &Path, segments_path: &Path, net: &WaterNetwork) -> Result<()> {
    let mut nodes = String::from(NODES_HEADER);
    nodes.push('\n');
    for id in net.node_ids() {
        match net.coords_of(id) {
            Some((x, y)) => writeln!(nodes, "{id},{x},{y}")?,
            None => writeln!(nodes, "{id},,")?,
        }
    }
    let mut segments = String::from(SEGMENTS_HEADER);
    segments.push('\n');
    for seg in net.segments() {
        writeln!(segments, "{},{},{}", seg.from, seg.to, seg.length_m)?;
    }
    fs::write(nodes_path, nodes).with_context(|| format!("writing {}", nodes_path.display()))?;
    fs::write(segments_path, segments)
        .with_context(|| format!("writing {}", segments_path.display()))?;
    Ok(())
}

/// Parse participants CSV: `id,outcome,age,gender,house_id,node_id,x,y`,
/// coordinates optional (both empty for none).
pub fn read_participants(path: &Path) -> Result<Vec<Participant>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if lineno == 0 {
            if line != PARTICIPANTS_HEADER {
                bail!(
                    "participants file line 1: expected header `{PARTICIPANTS_HEADER}`, got `{line}`"
                );
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            bail!("participants file line {}: expected 8 fields, got {}", lineno + 1, f.len());
        }
        let outcome: u8 = f[1]
            .parse()
            .with_context(|| format!("line {}: bad outcome `{}`", lineno + 1, f[1]))?;
        let age: f64 = f[2]
            .parse()
            .with_context(|| format!("line {}: bad age `{}`", lineno + 1, f[2]))?;
        let gender_code: u8 = f[3]
            .parse()
            .with_context(|| format!("line {}: bad gender `{}`", lineno + 1, f[3]))?;
        let gender = Gender::from_code(gender_code)
            .with_context(|| format!("line {}: gender must be 0 or 1", lineno + 1))?;
        let location = match (f[6].is_empty(), f[7].is_empty()) {
            (true, true) => None,
            (false, false) => Some((
                f[6].parse()
                    .with_context(|| format!("line {}: bad x `{}`", lineno + 1, f[6]))?,
                f[7].parse()
                    .with_context(|| format!("line {}: bad y `{}`", lineno + 1, f[7]))?,
            )),
            _ => bail!(
                "participants file line {}: coordinates must be both present or both empty",
                lineno + 1
            ),
        };
        out.push(Participant {
            id: f[0].to_string(),
            outcome,
            age,
            gender,
            house_id: f[4].to_string(),
            node_id: NodeId::from(f[5]),
            location,
        });
    }
    Ok(out)
}

pub fn write_participants(path: &Path, ds: &Dataset) -> Result<()> {
    let mut text = String::from(PARTICIPANTS_HEADER);
    text.push('\n');
    for p in ds.participants() {
        let (x, y) = match p.location {
            Some((x, y)) => (format!("{x}"), format!("{y}")),
            None => (String::new(), String::new()),
        };
        writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            p.id,
            p.outcome,
            p.age,
            p.gender.as_f64() as u8,
            p.house_id,
            p.node_id,
            x,
            y
        )?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Coordinate-list export: `row col value` per line, 0-based indices, upper
/// triangle only, sorted by (row, col). The index sidecar (`<path>.index`)
/// maps each row index to its unit label.
pub fn write_precision_coo(path: &Path, q: &PrecisionMatrix) -> Result<()> {
    let mut text = String::new();
    for (i, j, v) in q.iter_upper() {
        writeln!(text, "{i} {j} {v}")?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;

    let mut index = String::new();
    for i in 0..q.dim() {
        writeln!(index, "{i} {}", q.label_of(i))?;
    }
    let sidecar = sidecar_path(path);
    fs::write(&sidecar, index).with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut os = path.as_os_str().to_os_string();
    os.push(".index");
    os.into()
}

/// Read a coordinate-list file back as dense `(dim, entries)`; mirror of
/// [`write_precision_coo`] for oracle comparison.
pub fn read_precision_coo(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            bail!("coordinate file line {}: expected `row col value`", lineno + 1);
        }
        out.push((f[0].parse()?, f[1].parse()?, f[2].parse()?));
    }
    Ok(out)
}

/// Structured fit document; field names are stable.
pub fn fit_document(fit: &FitResult, outcome_name: &str) -> String {
    let mut doc = String::new();
    let _ = writeln!(doc, "outcome: {outcome_name}");
    let _ = writeln!(doc, "spec: {}", fit.spec.label());
    let _ = writeln!(doc, "tokens: {}", fit.spec.tokens());
    let _ = writeln!(doc, "n_observations: {}", fit.n_observations);
    let _ = writeln!(doc, "seed: {}", fit.seed);
    let mut theta = String::new();
    for ((effect, _), value) in fit
        .spec
        .latent_with_hyperpriors()
        .iter()
        .zip(&fit.theta_hat.0)
    {
        let _ = write!(theta, " {}={value:.6}", effect.name());
    }
    let _ = writeln!(doc, "theta_hat:{theta}");
    let _ = writeln!(doc, "dic: {:.6}", fit.dic.dic);
    let _ = writeln!(doc, "p_eff: {:.6}", fit.dic.p_eff);
    let _ = writeln!(doc, "deviance_bar: {:.6}", fit.dic.deviance_bar);
    let _ = writeln!(doc, "deviance_at_mean: {:.6}", fit.dic.deviance_at_mean);
    let _ = writeln!(doc, "log_marginal: {:.6}", fit.log_marginal);
    let _ = writeln!(doc, "fixed_effects:");
    for fe in &fit.fixed_effects {
        let _ = writeln!(doc, "  {} mean={:.6} sd={:.6}", fe.name, fe.mean, fe.sd);
    }
    doc
}

/// Human-readable comparison table with aligned columns.
pub fn comparison_text(table: &ComparisonTable) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Model comparison by DIC (outcome: {}, n = {}, seed = {}); lower is better, reductions of 10+ vs the baseline row are flagged.",
        table.outcome_name, table.n_observations, table.seed
    );
    let label_width = table
        .rows
        .iter()
        .map(|r| r.label.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let _ = writeln!(
        out,
        "{:<label_width$}  {:>12}  {:>10}  {:>10}  {}",
        "model", "dic", "p_eff", "delta_dic", "supported"
    );
    for row in &table.rows {
        match &row.outcome {
            RowOutcome::Fitted {
                fit,
                delta_dic,
                supported,
            } => {
                let delta = delta_dic
                    .map(|d| format!("{d:+.2}"))
                    .unwrap_or_else(|| "n/a".to_string());
                let _ = writeln!(
                    out,
                    "{:<label_width$}  {:>12.2}  {:>10.2}  {:>10}  {}",
                    row.label,
                    fit.dic.dic,
                    fit.dic.p_eff,
                    delta,
                    if *supported { "yes" } else { "no" }
                );
            }
            RowOutcome::Failed { message } => {
                let _ = writeln!(out, "{:<label_width$}  failed: {message}", row.label);
            }
        }
    }
    out
}

/// Machine-readable rows, tab-separated.
pub fn comparison_rows(table: &ComparisonTable) -> String {
    let mut out = String::from(
        "row\tlabel\ttokens\tstatus\tdic\tp_eff\tdelta_dic\tsupported\tn_observations\tseed\n",
    );
    for (i, row) in table.rows.iter().enumerate() {
        match &row.outcome {
            RowOutcome::Fitted {
                fit,
                delta_dic,
                supported,
            } => {
                let delta = delta_dic
                    .map(|d| format!("{d:.6}"))
                    .unwrap_or_else(|| "nan".to_string());
                let _ = writeln!(
                    out,
                    "{i}\t{}\t{}\tok\t{:.6}\t{:.6}\t{delta}\t{}\t{}\t{}",
                    row.label,
                    row.tokens,
                    fit.dic.dic,
                    fit.dic.p_eff,
                    supported,
                    table.n_observations,
                    table.seed
                );
            }
            RowOutcome::Failed { message } => {
                let _ = writeln!(
                    out,
                    "{i}\t{}\t{}\tfailed: {}\tnan\tnan\tnan\tfalse\t{}\t{}",
                    row.label,
                    row.tokens,
                    message.replace(['\t', '\n'], " "),
                    table.n_observations,
                    table.seed
                );
            }
        }
    }
    out
}

/// Ground-truth sidecar for simulated cohorts.
pub fn truth_document(
    net: &WaterNetwork,
    config: &SimulationConfig,
    truth: &SimulationTruth,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "seed: {}", config.seed);
    let _ = writeln!(out, "beta0: {:.6}", config.beta0);
    let _ = writeln!(out, "beta_age: {:.6}", config.beta_age);
    let _ = writeln!(out, "beta_gender: {:.6}", config.beta_gender);
    let _ = writeln!(out, "tau_house: {:.6}", config.tau_house);
    let _ = writeln!(out, "tau_spatial: {:.6}", config.tau_spatial);
    let _ = writeln!(out, "tau_graph: {:.6}", config.tau_graph);
    let _ = writeln!(out, "events: {}", config.events.len());
    for (k, e) in config.events.iter().enumerate() {
        let _ = writeln!(
            out,
            "event_{k}: origin={} effect={:.6} decay={:.6}",
            e.origin, e.effect_size, e.decay
        );
    }
    let _ = writeln!(out, "node_id\tcar_effect\tcontamination");
    for (i, id) in net.node_ids().iter().enumerate() {
        let _ = writeln!(
            out,
            "{id}\t{:.6}\t{:.6}",
            truth.graph_effects[i], truth.contamination[i]
        );
    }
    out
}
