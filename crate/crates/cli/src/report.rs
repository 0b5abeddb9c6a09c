//! Aggregated result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::experiment::{AggregateRecord, SeedRecord};

/// Rows within this much of the best mean ARI in their (dataset, K) group are
/// marked best; matches rounding to three decimals.
pub const BEST_TOLERANCE: f64 = 0.0025;

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub summary: AggregateRecord,
    pub best: bool,
}

/// One row per (dataset, method, K), ordered by dataset, K, method.
pub fn table_rows(records: &[SeedRecord]) -> Vec<TableRow> {
    let mut groups: BTreeMap<(String, usize, String), Vec<SeedRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((r.dataset.clone(), r.k, r.method.clone()))
            .or_default()
            .push(r.clone());
    }
    let mut rows: Vec<TableRow> = groups
        .values()
        .filter_map(|g| AggregateRecord::from_records(g))
        .map(|summary| TableRow {
            summary,
            best: false,
        })
        .collect();
    let mut best: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for row in &rows {
        let entry = best
            .entry((row.summary.dataset.clone(), row.summary.k))
            .or_insert(f64::NEG_INFINITY);
        *entry = entry.max(row.summary.mean_ari.mean);
    }
    for row in &mut rows {
        let top = best[&(row.summary.dataset.clone(), row.summary.k)];
        row.best = top - row.summary.mean_ari.mean <= BEST_TOLERANCE + 1e-12;
    }
    rows
}

fn fmt_opt(v: Option<crate::experiment::MeanSd>) -> String {
    v.map_or_else(
        || "-".to_string(),
        |s| format!("{:.3} ± {:.3}", s.mean, s.sd),
    )
}

/// Aligned plain-text table; best rows carry a `*`.
pub fn render_text(rows: &[TableRow]) -> String {
    let header = [
        "dataset",
        "K",
        "method",
        "seeds",
        "mean ARI",
        "silhouette",
        "accuracy ARI",
        "clusters",
    ];
    let body: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            let s = &r.summary;
            [
                s.dataset.clone(),
                s.k.to_string(),
                s.method.clone(),
                s.seeds.to_string(),
                format!(
                    "{:.3} ± {:.3}{}",
                    s.mean_ari.mean,
                    s.mean_ari.sd,
                    if r.best { " *" } else { "" }
                ),
                fmt_opt(s.silhouette),
                fmt_opt(s.accuracy_ari),
                format!("{:.1}", s.clusters_used.mean),
            ]
        })
        .collect();
    let mut widths = header.map(|h| h.chars().count());
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&header.map(String::from));
    for row in &body {
        line(row);
    }
    out
}

/// CSV with separate mean and SD columns; empty cells for missing metrics.
pub fn render_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(
        "dataset,k,method,seeds,mean_ari,mean_ari_sd,silhouette,silhouette_sd,accuracy_ari,accuracy_ari_sd,clusters_used,best\n",
    );
    let pair = |v: Option<crate::experiment::MeanSd>| {
        v.map_or_else(|| ",".to_string(), |s| format!("{:.6},{:.6}", s.mean, s.sd))
    };
    for r in rows {
        let s = &r.summary;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3},{}",
            s.dataset,
            s.k,
            s.method,
            s.seeds,
            pair(Some(s.mean_ari)),
            pair(s.silhouette),
            pair(s.accuracy_ari),
            s.clusters_used.mean,
            r.best
        );
    }
    out
}

/// Text and CSV renderings of the same table.
pub fn emit_table(records: &[SeedRecord]) -> (String, String) {
    let rows = table_rows(records);
    (render_text(&rows), render_csv(&rows))
}
