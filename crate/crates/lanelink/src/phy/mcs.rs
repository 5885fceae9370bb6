//! Modulation-and-coding-scheme table: entries and the table file format.
//!
//! Tables ship as plain text (`index, Qm, rate_x1024` per line, `#`
//! comments); the default table is embedded at build time. A loaded table
//! must be 29 entries, index-contiguous from 0, with valid per-entry
//! fields, and entry 27 must be 256-QAM — the anchor the peak-rate figures
//! depend on.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

const TABLE_LEN: usize = 29;
const DEFAULT_TABLE_TEXT: &str = include_str!("../../data/mcs_table.csv");

/// One MCS row: modulation order and target code rate (numerator of
/// rate/1024; fractional values occur in the standard's table).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McsEntry {
    pub index: u8,
    pub qm: u8,
    pub code_rate_x1024: f64,
}

impl McsEntry {
    pub fn code_rate(&self) -> f64 {
        self.code_rate_x1024 / 1024.0
    }

    fn validate(&self) -> Result<()> {
        if !matches!(self.qm, 2 | 4 | 6 | 8) {
            return Err(Error::Validation(format!(
                "MCS index {}: modulation order {} not in {{2,4,6,8}}",
                self.index, self.qm
            )));
        }
        if !(self.code_rate_x1024 > 0.0 && self.code_rate_x1024 < 1024.0) {
            return Err(Error::Validation(format!(
                "MCS index {}: code rate numerator {} outside (0, 1024)",
                self.index, self.code_rate_x1024
            )));
        }
        Ok(())
    }
}

/// Parses a table from text. Errors carry 1-based line numbers.
pub fn parse_mcs_table(text: &str) -> Result<Vec<McsEntry>> {
    let mut entries: Vec<Option<McsEntry>> = vec![None; TABLE_LEN];
    let mut count = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected `index, Qm, rate_x1024`, got {} fields", fields.len()),
            });
        }
        let index: u8 = fields[0].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid index {:?}", fields[0]),
        })?;
        let qm: u8 = fields[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid modulation order {:?}", fields[1]),
        })?;
        let code_rate_x1024: f64 = fields[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid rate numerator {:?}", fields[2]),
        })?;
        if index as usize >= TABLE_LEN {
            return Err(Error::Validation(format!(
                "MCS index {index} out of range (table holds 0..{})",
                TABLE_LEN - 1
            )));
        }
        let entry = McsEntry {
            index,
            qm,
            code_rate_x1024,
        };
        entry.validate()?;
        if entries[index as usize].is_some() {
            return Err(Error::Validation(format!("duplicate MCS index {index}")));
        }
        entries[index as usize] = Some(entry);
        count += 1;
    }
    if count != TABLE_LEN {
        return Err(Error::Validation(format!(
            "MCS table must have {TABLE_LEN} contiguous entries, found {count}"
        )));
    }
    let table: Vec<McsEntry> = entries.into_iter().map(Option::unwrap).collect();
    if table[27].qm != 8 {
        return Err(Error::Validation(format!(
            "MCS index 27 must be 256-QAM (Qm=8), table has Qm={}",
            table[27].qm
        )));
    }
    Ok(table)
}

/// Loads a table file.
pub fn load_mcs_table(path: impl AsRef<Path>) -> Result<Vec<McsEntry>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::invalid(format!("cannot read MCS table {}: {e}", path.display()))
    })?;
    parse_mcs_table(&text)
}

/// The table built into the binary.
pub fn default_mcs_table() -> Vec<McsEntry> {
    parse_mcs_table(DEFAULT_TABLE_TEXT).expect("embedded MCS table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table_shape() {
        let t = default_mcs_table();
        assert_eq!(t.len(), 29);
        for (i, e) in t.iter().enumerate() {
            assert_eq!(e.index as usize, i);
        }
        assert_eq!(t[27].qm, 8);
        assert_eq!(t[27].code_rate_x1024, 948.0);
        assert_eq!(t[9].qm, 4);
        assert_eq!(t[20].code_rate_x1024, 682.5);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "0, 2, 120\nnot a row\n";
        match parse_mcs_table(bad) {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error at line 2, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_index_named() {
        let mut text = String::new();
        for i in 0..29 {
            text.push_str(&format!("{}, 2, 120\n", if i == 28 { 5 } else { i }));
        }
        match parse_mcs_table(&text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("duplicate MCS index 5")),
            other => panic!("expected duplicate-index error, got {other:?}"),
        }
    }

    #[test]
    fn short_table_rejected() {
        assert!(matches!(
            parse_mcs_table("0, 2, 120\n"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn entry_27_must_be_256qam() {
        let mut text = String::new();
        for i in 0..29 {
            text.push_str(&format!("{i}, 2, 120\n"));
        }
        match parse_mcs_table(&text) {
            Err(Error::Validation(msg)) => assert!(msg.contains("index 27")),
            other => panic!("expected Qm anchor error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_descriptive() {
        let err = load_mcs_table("/nonexistent/mcs.csv").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/mcs.csv"));
    }
}
