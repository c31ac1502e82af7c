//! Constellation dumps for plotting.
//!
//! Six panels for one channel draw:
//! - `a`: the modulation alphabet.
//! - `b`: combined points under channel inversion, `Σ_k x_k`.
//! - `c`, `d`: per-node points `sqrt(P_t)·|ĥ_k|·x` and their combination (type 1).
//! - `e`, `f`: per-node points `sqrt(P_t)·ĥ_k·x` and their combination (type 2).

use std::path::Path;

use num_complex::Complex64;

use super::trial::Simulator;
use crate::airlink::PolicyKind;
use crate::demod::effective_coeffs;
use crate::error::{Error, Result};

/// One plotted point. `node` is `None` for combined panels; `combo` holds the
/// level of each node (a single level for per-node panels).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelPoint {
    pub panel: char,
    pub node: Option<usize>,
    pub index: usize,
    pub value: Complex64,
    pub f_value: Option<f64>,
    pub combo: Vec<usize>,
}

/// Builds all six panels from the CP-0 estimates of the given trial.
pub fn constellation_panels(sim: &Simulator, trial: u64) -> Result<Vec<PanelPoint>> {
    let topology = sim.topology(trial)?;
    let link = sim.link_state(trial, &topology)?;
    let h_hat = &link.h_hat_sum[0];
    let table = sim.table();
    let p_t = sim.config().policy.p_t_mw;
    let k = table.n_nodes();
    let q = sim.config().constellation.q();
    let mut out = Vec::new();

    for level in 0..q {
        out.push(PanelPoint {
            panel: 'a',
            node: None,
            index: level,
            value: table.symbol(0, level),
            f_value: None,
            combo: vec![level],
        });
    }
    let combined = |panel: char, coeffs: &[Complex64], scale: f64, out: &mut Vec<PanelPoint>| {
        for (m, &value) in table.points(coeffs, scale, 1.0).iter().enumerate() {
            out.push(PanelPoint {
                panel,
                node: None,
                index: m,
                value,
                f_value: Some(table.f_value(m)),
                combo: table.combo(m).to_vec(),
            });
        }
    };
    let per_node = |panel: char, coeffs: &[Complex64], out: &mut Vec<PanelPoint>| {
        for (node, &c) in coeffs.iter().enumerate() {
            for level in 0..q {
                out.push(PanelPoint {
                    panel,
                    node: Some(node),
                    index: level,
                    value: c * p_t.sqrt() * table.symbol(node, level),
                    f_value: None,
                    combo: vec![level],
                });
            }
        }
    };
    combined('b', &vec![Complex64::new(1.0, 0.0); k], 1.0, &mut out);
    let type1 = effective_coeffs(PolicyKind::TypeI, h_hat);
    per_node('c', &type1, &mut out);
    combined('d', &type1, p_t, &mut out);
    let type2 = effective_coeffs(PolicyKind::TypeII, h_hat);
    per_node('e', &type2, &mut out);
    combined('f', &type2, p_t, &mut out);
    Ok(out)
}

pub const PANEL_HEADER: [&str; 7] = ["panel", "node", "index", "re", "im", "f_value", "combo"];

pub fn emit_panels(points: &[PanelPoint], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(PANEL_HEADER).map_err(csv_err)?;
    for p in points {
        let combo: Vec<String> = p.combo.iter().map(|c| c.to_string()).collect();
        w.write_record([
            p.panel.to_string(),
            p.node.map_or(String::new(), |n| n.to_string()),
            p.index.to_string(),
            p.value.re.to_string(),
            p.value.im.to_string(),
            p.f_value.map_or(String::new(), |f| f.to_string()),
            combo.join("-"),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
