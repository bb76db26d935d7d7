//! Score tables and their CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Image id → score, ordered by id.
pub type ScoreMap = BTreeMap<String, f64>;

pub const SCORE_CSV_HEADER: [&str; 6] = [
    "image_id",
    "score",
    "m_effective",
    "machine",
    "config_hash",
    "base_seed",
];

/// Memorability scores for set A plus the provenance of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    /// `(image id, score)` in set-A order.
    pub entries: Vec<(String, f64)>,
    pub m_effective: usize,
    pub machine: String,
    pub config_hash: String,
    pub base_seed: u64,
}

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    image_id: String,
    score: f64,
    m_effective: usize,
    machine: String,
    config_hash: String,
    base_seed: u64,
}

impl ScoreTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_map(&self) -> ScoreMap {
        self.entries.iter().cloned().collect()
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.entries.is_empty())
            .then(|| self.entries.iter().map(|e| e.1).sum::<f64>() / self.entries.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for (id, score) in &self.entries {
            w.serialize(Row {
                image_id: id.clone(),
                score: *score,
                m_effective: self.m_effective,
                machine: self.machine.clone(),
                config_hash: self.config_hash.clone(),
                base_seed: self.base_seed,
            })?;
        }
        if self.entries.is_empty() {
            w.write_record(SCORE_CSV_HEADER)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers()?.clone();
        if headers.iter().ne(SCORE_CSV_HEADER) {
            return Err(Error::format(0, format!("unexpected score header {headers:?}")));
        }
        let mut table: Option<ScoreTable> = None;
        for row in r.deserialize::<Row>() {
            let row = row?;
            let t = table.get_or_insert_with(|| ScoreTable {
                entries: Vec::new(),
                m_effective: row.m_effective,
                machine: row.machine.clone(),
                config_hash: row.config_hash.clone(),
                base_seed: row.base_seed,
            });
            if (t.m_effective, &t.machine, &t.config_hash, t.base_seed)
                != (row.m_effective, &row.machine, &row.config_hash, row.base_seed)
            {
                return Err(Error::Data(format!(
                    "row {} carries different provenance",
                    row.image_id
                )));
            }
            t.entries.push((row.image_id, row.score));
        }
        table.ok_or_else(|| Error::Data("score table has no rows".into()))
    }
}

/// Reads a two-column `image_id,<value>` style CSV (any header) into a map
/// keyed by the first column, taking the named value column.
pub fn read_column_csv<R: Read>(input: R, column: &str) -> Result<ScoreMap> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::format(0, format!("column {column} not in {headers:?}")))?;
    let mut out = ScoreMap::new();
    for rec in r.records() {
        let rec = rec?;
        let offset = rec.position().map_or(0, |p| p.byte());
        let id = rec.get(0).unwrap_or_default().to_owned();
        let raw = rec.get(idx).unwrap_or_default();
        let value: f64 = raw
            .parse()
            .map_err(|_| Error::format(offset, format!("{column} value {raw:?} for {id}")))?;
        out.insert(id, value);
    }
    Ok(out)
}
