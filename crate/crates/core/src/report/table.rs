use crate::fmt::sig6;
use crate::stats::ComparisonRow;

pub const TABLE_HEADER: &str = "variable,pre_mean,pre_sd,post_mean,post_sd,t,df,p,cohen_d";

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedTable {
    pub text: String,
    pub csv: String,
}

/// Text and CSV forms of a comparison. The text uses two decimals for means,
/// SDs, t and d, and three for p.
pub fn render_table(rows: &[ComparisonRow]) -> RenderedTable {
    RenderedTable {
        text: comparison_text(rows),
        csv: comparison_csv(rows),
    }
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = format!("{TABLE_HEADER}\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.variable,
            sig6(r.pre_mean),
            sig6(r.pre_sd),
            sig6(r.post_mean),
            sig6(r.post_sd),
            sig6(r.t),
            r.df,
            sig6(r.p),
            sig6(r.cohen_d)
        ));
    }
    out
}

/// Reads rows back from [`comparison_csv`] output. The pair count is
/// recovered as `df + 1`.
pub fn parse_comparison_csv(text: &str) -> Result<Vec<ComparisonRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(TABLE_HEADER) {
        return Err("unexpected header".into());
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(format!("row {}: expected 9 fields", i + 2));
            }
            let num = |k: usize| {
                f[k].parse::<f64>()
                    .map_err(|_| format!("row {}: bad number `{}`", i + 2, f[k]))
            };
            let df: u32 = f[6]
                .parse()
                .map_err(|_| format!("row {}: bad df `{}`", i + 2, f[6]))?;
            Ok(ComparisonRow {
                variable: f[0].to_string(),
                n: df as usize + 1,
                pre_mean: num(1)?,
                pre_sd: num(2)?,
                post_mean: num(3)?,
                post_sd: num(4)?,
                t: num(5)?,
                df,
                p: num(7)?,
                cohen_d: num(8)?,
            })
        })
        .collect()
}

/// Aligned plain-text table in the "Pretest (M, SD) Posttest (M, SD)" layout.
pub fn comparison_text(rows: &[ComparisonRow]) -> String {
    let mut table = vec![[
        "Variable".to_string(),
        "Pretest (M, SD)".to_string(),
        "Posttest (M, SD)".to_string(),
        "paired t (df, p)".to_string(),
        "Cohen d".to_string(),
    ]];
    for r in rows {
        table.push([
            r.variable.clone(),
            format!("{:.2} ({:.2})", r.pre_mean, r.pre_sd),
            format!("{:.2} ({:.2})", r.post_mean, r.post_sd),
            format!("{:.2} ({}, {:.3})", r.t, r.df, r.p),
            format!("{:.2}", r.cohen_d),
        ]);
    }
    let widths: Vec<usize> = (0..5)
        .map(|c| {
            table
                .iter()
                .map(|row| row[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in &table {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (cell, &w))| {
                if i == 0 {
                    format!("{cell:<w$}")
                } else {
                    format!("{cell:>w$}")
                }
            })
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, df: u32, p: f64, d: f64) -> ComparisonRow {
        ComparisonRow {
            variable: "energy".into(),
            n: df as usize + 1,
            pre_mean: 5.123,
            pre_sd: 0.456,
            post_mean: 4.321,
            post_sd: 0.5,
            t,
            df,
            p,
            cohen_d: d,
        }
    }

    #[test]
    fn zero_difference_row() {
        let text = render_table(&[row(0.0, 3, 1.0, 0.0)]).text;
        let line = text.lines().nth(1).unwrap();
        assert!(line.contains("0.00 (3, 1.000)"), "{line}");
        assert!(line.ends_with("0.00"), "{line}");
    }

    #[test]
    fn fuel_row_layout() {
        let text = render_table(&[row(6.30, 24, 0.00000171, 1.26)]).text;
        assert!(text.contains("6.30 (24, 0.000)"), "{text}");
        assert!(text.trim_end().ends_with("1.26"), "{text}");
        assert!(text.contains("5.12 (0.46)"), "{text}");
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            row(2.123456789, 10, 0.0573, 0.64),
            row(-1.5, 3, 0.23, -0.75),
        ];
        let back = parse_comparison_csv(&render_table(&rows).csv).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.variable, b.variable);
            assert_eq!(a.df, b.df);
            for (x, y) in [
                (a.t, b.t),
                (a.p, b.p),
                (a.pre_mean, b.pre_mean),
                (a.cohen_d, b.cohen_d),
            ] {
                assert!((x - y).abs() <= 5e-6 * x.abs().max(1e-12), "{x} vs {y}");
            }
        }
    }

    #[test]
    fn columns_align() {
        let text = render_table(&[row(1.0, 3, 0.5, 0.2), row(-12.0, 30, 0.0001, -3.5)]).text;
        let widths: Vec<usize> = text.lines().map(|l| l.chars().count()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]), "{text}");
    }
}
