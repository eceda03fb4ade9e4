//! Results table in the J / F / A layout.

use std::fmt::Write as _;

use emoxling_core::metrics::EvalReport;

/// Percent with one decimal, as shown.
fn shown(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

/// Aligned table with one row per report. In each column the best shown
/// value is marked `*`; equal shown values are all marked.
pub fn emit_result_table(rows: &[(String, EvalReport)]) -> String {
    let columns: [(&str, fn(&EvalReport) -> f64); 3] = [
        ("J", |r| r.jaccard),
        ("F", |r| r.macro_f1),
        ("A", |r| r.avg_accuracy),
    ];
    let cells: Vec<Vec<String>> = columns
        .iter()
        .map(|(_, get)| {
            let values: Vec<String> = rows.iter().map(|(_, r)| shown(get(r))).collect();
            let best = values
                .iter()
                .map(|v| v.parse::<f64>().expect("formatted number"))
                .fold(f64::NEG_INFINITY, f64::max);
            values
                .into_iter()
                .map(|v| {
                    if v.parse::<f64>().expect("formatted number") == best {
                        format!("{v}*")
                    } else {
                        format!("{v} ")
                    }
                })
                .collect()
        })
        .collect();

    let label_width = rows
        .iter()
        .map(|(l, _)| l.chars().count())
        .chain(std::iter::once("Setup".len()))
        .max()
        .unwrap_or(0);
    let col_width = cells
        .iter()
        .flatten()
        .map(String::len)
        .chain(std::iter::once(2))
        .max()
        .unwrap_or(0);

    let mut out = String::new();
    let _ = write!(out, "{:<label_width$}", "Setup");
    for (name, _) in &columns {
        let _ = write!(out, "  {:>col_width$}", format!("{name} "));
    }
    out.push('\n');
    for (i, (label, _)) in rows.iter().enumerate() {
        let _ = write!(out, "{label:<label_width$}");
        for col in &cells {
            let _ = write!(out, "  {:>col_width$}", col[i]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use emoxling_core::labels::NUM_LABELS;
    use emoxling_core::metrics::Confusion;

    fn report(j: f64, f: f64, a: f64) -> EvalReport {
        EvalReport {
            jaccard: j,
            macro_f1: f,
            avg_accuracy: a,
            per_class_f1: [0.0; NUM_LABELS],
            exact_match: 0.0,
            n_examples: 1,
            confusion: [Confusion::default(); NUM_LABELS],
        }
    }

    fn marked(table: &str, row: usize) -> Vec<bool> {
        let line = table.lines().nth(row + 1).unwrap();
        line.split_whitespace()
            .rev()
            .take(3)
            .map(|c| c.ends_with('*'))
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .collect()
    }

    #[test]
    fn single_row_is_best_everywhere() {
        let t = emit_result_table(&[("only".into(), report(0.5, 0.4, 0.8))]);
        assert_eq!(t.lines().count(), 2);
        assert_eq!(marked(&t, 0), [true, true, true]);
        assert!(t.lines().nth(1).unwrap().contains("50.0*"));
    }

    #[test]
    fn higher_value_marked() {
        let t = emit_result_table(&[
            ("T".into(), report(0.481, 0.5, 0.9)),
            ("AraBERT".into(), report(0.529, 0.4, 0.9)),
        ]);
        assert!(t.contains("52.9*"));
        assert!(t.contains("48.1 "));
        assert_eq!(marked(&t, 0), [false, true, true]);
        assert_eq!(marked(&t, 1), [true, false, true]);
    }

    #[test]
    fn ties_on_shown_values_are_all_marked() {
        let t = emit_result_table(&[
            ("a".into(), report(0.52901, 0.1, 0.1)),
            ("b".into(), report(0.52899, 0.2, 0.1)),
        ]);
        assert_eq!(marked(&t, 0)[0], true);
        assert_eq!(marked(&t, 1)[0], true);
    }

    #[test]
    fn columns_align() {
        let t = emit_result_table(&[
            ("short".into(), report(0.05, 0.5, 1.0)),
            ("a much longer label".into(), report(0.5, 0.05, 0.5)),
        ]);
        let widths: Vec<usize> = t.lines().map(|l| l.chars().count()).collect();
        assert!(widths.windows(2).all(|w| w[0] == w[1]));
    }
}
