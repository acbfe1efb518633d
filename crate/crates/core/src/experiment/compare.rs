use std::path::Path;

use serde::Serialize;

use super::config::SCHEMA_VERSION;
use super::run::Manifest;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantityDiff {
    pub quantity: String,
    pub a: f64,
    pub b: f64,
    pub abs_diff: f64,
    /// `|a − b| / max(|a|, |b|)`, zero when both vanish.
    pub rel_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RichardsonEstimate {
    pub coarse: f64,
    pub fine: f64,
    pub h_coarse: f64,
    pub h_fine: f64,
    pub order: f64,
    pub estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub schema_version: u32,
    pub config_a: String,
    pub config_b: String,
    pub rows: Vec<QuantityDiff>,
    pub only_in_a: Vec<String>,
    pub only_in_b: Vec<String>,
    /// Second-order extrapolation of `A` when both runs report it on meshes
    /// of different size.
    pub a_richardson: Option<RichardsonEstimate>,
}

pub fn compare_report(run_a: &Path, run_b: &Path) -> Result<CompareReport> {
    let a = Manifest::load(run_a)?;
    let b = Manifest::load(run_b)?;
    Ok(compare_manifests(&a, &b))
}

pub fn compare_manifests(a: &Manifest, b: &Manifest) -> CompareReport {
    let mut rows = Vec::new();
    let mut only_in_a = Vec::new();
    for (k, &va) in &a.summary {
        match b.summary.get(k) {
            Some(&vb) => {
                let abs_diff = (va - vb).abs();
                let scale = va.abs().max(vb.abs());
                rows.push(QuantityDiff {
                    quantity: k.clone(),
                    a: va,
                    b: vb,
                    abs_diff,
                    rel_diff: if scale > 0.0 { abs_diff / scale } else { 0.0 },
                });
            }
            None => only_in_a.push(k.clone()),
        }
    }
    let only_in_b = b
        .summary
        .keys()
        .filter(|k| !a.summary.contains_key(*k))
        .cloned()
        .collect();
    let get = |m: &Manifest, k: &str| m.summary.get(k).copied();
    let a_richardson = match (get(a, "green.a"), get(b, "green.a"), get(a, "mesh.h"), get(b, "mesh.h")) {
        (Some(ga), Some(gb), Some(ha), Some(hb)) if ha != hb => {
            let ((coarse, h_coarse), (fine, h_fine)) = if ha > hb {
                ((ga, ha), (gb, hb))
            } else {
                ((gb, hb), (ga, ha))
            };
            let order = 2.0;
            let f = (h_coarse / h_fine).powf(order);
            Some(RichardsonEstimate {
                coarse,
                fine,
                h_coarse,
                h_fine,
                order,
                estimate: (f * fine - coarse) / (f - 1.0),
            })
        }
        _ => None,
    };
    CompareReport {
        schema_version: SCHEMA_VERSION,
        config_a: a.config_sha256.clone(),
        config_b: b.config_sha256.clone(),
        rows,
        only_in_a,
        only_in_b,
        a_richardson,
    }
}
