//! Report rendering: a methods × metrics grid plus, when a grid-searched
//! ensemble is present, its final-estimation block. Numbers are printed at
//! four decimals in every format.

use super::ScoreTable;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    /// Comma-delimited sections with the same numbers.
    Delimited,
}

fn fmt4(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{v:.4}"),
        None => "n/a".into(),
    }
}

fn fmt_eta(eta: f64) -> String {
    if eta.fract() == 0.0 {
        format!("{eta:.0}")
    } else {
        format!("{eta}")
    }
}

/// Render a populated score table.
pub fn render_report(table: &ScoreTable, format: ReportFormat) -> Result<String> {
    if table.methods.is_empty() {
        return Err(Error::Schema("cannot render an empty score table".into()));
    }
    match format {
        ReportFormat::Markdown => Ok(render_markdown(table)),
        ReportFormat::Delimited => Ok(render_delimited(table)),
    }
}

fn render_markdown(table: &ScoreTable) -> String {
    let mut out = String::new();
    out.push_str("# Out-of-sample aggregation report\n\n");
    out.push_str(&format!(
        "{} folds, {} observations.\n\n",
        table.fold_count, table.n_obs
    ));
    out.push_str("| Model | LS | ALS | AUC |\n|:--|--:|--:|--:|\n");
    for m in &table.methods {
        out.push_str(&format!(
            "| {} | {} | {} | {} |\n",
            m.label,
            fmt4(m.mean_ls),
            fmt4(m.mean_als),
            fmt4(m.mean_auc)
        ));
    }

    if let Some(grid) = &table.grid {
        out.push_str("\n## Best generalized ensemble\n\n");
        out.push_str("| Quantity | Value |\n|:--|--:|\n");
        out.push_str(&format!("| Constant | {:.4} |\n", grid.model.intercept()));
        for (name, value) in grid.model.coefficients() {
            out.push_str(&format!("| Coefficient {name} | {value:.4} |\n"));
        }
        out.push_str(&format!("| Power parameter | {} |\n", fmt_eta(grid.eta_star)));
        out.push_str(&format!(
            "| Extremizes average | {} |\n",
            fmt4(grid.extremizing.map(|e| e.rate))
        ));
        out.push_str(&format!("| Base rate | {:.4} |\n", grid.base_rate));
        out.push_str(&format!("| Observations | {} |\n", grid.n_obs));

        out.push_str("\n### Power grid\n\n| Power | Mean out-of-fold LS |\n|--:|--:|\n");
        for point in &grid.grid {
            out.push_str(&format!(
                "| {} | {} |\n",
                fmt_eta(point.eta),
                fmt4(point.mean_oof_ls)
            ));
        }
    }

    let failures: Vec<String> = table
        .methods
        .iter()
        .flat_map(|m| {
            m.per_fold.iter().enumerate().filter_map(|(fold, r)| {
                r.as_ref().err().map(|reason| format!("- {} fold {fold}: {reason}\n", m.label))
            })
        })
        .collect();
    if !failures.is_empty() {
        out.push_str("\n## Failures\n\n");
        for line in failures {
            out.push_str(&line);
        }
    }
    out
}

fn render_delimited(table: &ScoreTable) -> String {
    let mut out = String::from("model,ls,als,auc\n");
    for m in &table.methods {
        out.push_str(&format!(
            "{},{},{},{}\n",
            m.label,
            fmt4(m.mean_ls),
            fmt4(m.mean_als),
            fmt4(m.mean_auc)
        ));
    }
    if let Some(grid) = &table.grid {
        out.push_str("\nquantity,value\n");
        out.push_str(&format!("constant,{:.4}\n", grid.model.intercept()));
        for (name, value) in grid.model.coefficients() {
            out.push_str(&format!("coefficient {name},{value:.4}\n"));
        }
        out.push_str(&format!("power parameter,{}\n", fmt_eta(grid.eta_star)));
        out.push_str(&format!(
            "extremizes average,{}\n",
            fmt4(grid.extremizing.map(|e| e.rate))
        ));
        out.push_str(&format!("base rate,{:.4}\n", grid.base_rate));
        out.push_str(&format!("observations,{}\n", grid.n_obs));
        out.push_str("\npower,mean_oof_ls\n");
        for point in &grid.grid {
            out.push_str(&format!("{},{}\n", fmt_eta(point.eta), fmt4(point.mean_oof_ls)));
        }
    }
    let failures: Vec<String> = table
        .methods
        .iter()
        .flat_map(|m| {
            m.per_fold.iter().enumerate().filter_map(|(fold, r)| {
                r.as_ref()
                    .err()
                    .map(|reason| format!("{},{fold},{}\n", m.label, reason.replace(',', ";")))
            })
        })
        .collect();
    if !failures.is_empty() {
        out.push_str("\nfailed_method,fold,reason\n");
        for line in failures {
            out.push_str(&line);
        }
    }
    out
}
