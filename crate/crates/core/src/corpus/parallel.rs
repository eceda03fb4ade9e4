use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{content_lines, read_text, CorpusError};

/// One aligned sentence pair. Both sides are non-empty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub pair_id: String,
    pub source_text: String,
    pub target_text: String,
}

const COLUMNS: [&str; 3] = ["pair_id", "source_text", "target_text"];

pub fn parse_parallel_str(content: &str) -> Result<Vec<ParallelPair>, CorpusError> {
    let mut lines = content_lines(content);
    let (header_line, header) = lines.next().ok_or(CorpusError::MissingColumn {
        line: 1,
        column: COLUMNS[0].into(),
    })?;
    let columns: Vec<&str> = header.split('\t').map(str::trim).collect();
    for (pos, expected) in COLUMNS.iter().enumerate() {
        if !columns
            .get(pos)
            .is_some_and(|c| c.eq_ignore_ascii_case(expected))
        {
            return Err(CorpusError::MissingColumn {
                line: header_line,
                column: (*expected).into(),
            });
        }
    }

    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split('\t').collect();
        // a trailing empty target cell is eaten by trim_end
        if cells.len() == 2 {
            return Err(CorpusError::EmptySide {
                line: line_no,
                pair_id: cells[0].trim().into(),
                side: "target",
            });
        }
        if cells.len() != COLUMNS.len() {
            return Err(CorpusError::RowWidthMismatch {
                line: line_no,
                expected: COLUMNS.len(),
                found: cells.len(),
            });
        }
        let pair_id = cells[0].trim().to_string();
        for (side, cell) in [("source", cells[1]), ("target", cells[2])] {
            if cell.trim().is_empty() {
                return Err(CorpusError::EmptySide {
                    line: line_no,
                    pair_id,
                    side,
                });
            }
        }
        if !seen.insert(pair_id.clone()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: pair_id,
            });
        }
        pairs.push(ParallelPair {
            pair_id,
            source_text: cells[1].to_string(),
            target_text: cells[2].to_string(),
        });
    }
    Ok(pairs)
}

/// Reads a `pair_id<TAB>source_text<TAB>target_text` file.
pub fn parse_parallel(path: &Path) -> Result<Vec<ParallelPair>, CorpusError> {
    parse_parallel_str(&read_text(path)?)
}

pub fn parallel_to_tsv(pairs: &[ParallelPair]) -> String {
    let mut out = COLUMNS.join("\t");
    out.push('\n');
    for p in pairs {
        out.push_str(&format!("{}\t{}\t{}\n", p.pair_id, p.source_text, p.target_text));
    }
    out
}
