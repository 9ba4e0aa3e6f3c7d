//! Response datasets: one scalar classifier response per sample, labelled
//! with a demographic group and a bona fide / attack class.
//!
//! The interchange format is a CSV file with header
//! `sample_id,group,class,response`. `class` is `bonafide` or `attack`
//! (case-insensitive) and `response` is a finite non-negative decimal.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_COLUMNS: [&str; 4] = ["sample_id", "group", "class", "response"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SampleClass {
    BonaFide,
    Attack,
}

impl SampleClass {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bonafide" => Some(SampleClass::BonaFide),
            "attack" => Some(SampleClass::Attack),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SampleClass::BonaFide => "bonafide",
            SampleClass::Attack => "attack",
        }
    }
}

impl fmt::Display for SampleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub sample_id: String,
    pub group: String,
    pub class: SampleClass,
    pub response: f64,
}

impl ResponseRecord {
    pub fn new(
        sample_id: impl Into<String>,
        group: impl Into<String>,
        class: SampleClass,
        response: f64,
    ) -> Result<Self> {
        let group = group.into();
        if group.trim().is_empty() {
            return Err(Error::Validation("group label must be non-empty".into()));
        }
        if !response.is_finite() || response < 0.0 {
            return Err(Error::Validation(format!(
                "response must be finite and non-negative, got {response}"
            )));
        }
        Ok(ResponseRecord {
            sample_id: sample_id.into(),
            group,
            class,
            response,
        })
    }
}

/// Unordered pair of distinct group labels, stored in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupPair {
    pub a: String,
    pub b: String,
}

impl GroupPair {
    pub fn new(x: impl Into<String>, y: impl Into<String>) -> Result<Self> {
        let (x, y) = (x.into(), y.into());
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Ok(GroupPair { a: x, b: y }),
            std::cmp::Ordering::Greater => Ok(GroupPair { a: y, b: x }),
            std::cmp::Ordering::Equal => Err(Error::Parameter(format!(
                "a group pair needs two distinct labels, got `{x}` twice"
            ))),
        }
    }

    pub fn label(&self, side: Side) -> &str {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }
}

impl fmt::Display for GroupPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// Which member of a two-group comparison a result refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

/// Immutable collection of response records with a per-group index.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<ResponseRecord>,
    group_index: BTreeMap<String, Vec<usize>>,
}

impl Dataset {
    pub fn from_records(records: Vec<ResponseRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut group_index: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut seen = HashSet::new();
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.sample_id.as_str()) {
                warn!("duplicate sample_id `{}`", r.sample_id);
            }
            group_index.entry(r.group.clone()).or_default().push(i);
        }
        Ok(Dataset {
            records,
            group_index,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers = rdr.headers()?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::EmptyDataset);
        }
        for h in headers.iter() {
            if !CSV_COLUMNS.contains(&h) {
                return Err(Error::Schema { column: h.to_string() });
            }
        }
        let mut pos = [0usize; 4];
        for (slot, name) in pos.iter_mut().zip(CSV_COLUMNS) {
            *slot = headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Schema { column: name.to_string() })?;
        }

        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
            let field = |i: usize| row.get(pos[i]).unwrap_or("");
            let row_err = |message: String| Error::Row { line, message };

            let class = SampleClass::parse(field(2))
                .ok_or_else(|| row_err(format!("unknown class `{}`", field(2))))?;
            let response: f64 = field(3)
                .parse()
                .map_err(|_| row_err(format!("non-numeric response `{}`", field(3))))?;
            let record = ResponseRecord::new(field(0), field(1), class, response)
                .map_err(|e| row_err(e.to_string()))?;
            records.push(record);
        }
        Self::from_records(records)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_records_csv(&self.records, writer)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn records(&self) -> &[ResponseRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn group_index(&self) -> &BTreeMap<String, Vec<usize>> {
        &self.group_index
    }

    /// Group labels in lexicographic order.
    pub fn groups(&self) -> impl Iterator<Item = &str> {
        self.group_index.keys().map(String::as_str)
    }

    pub fn group_count(&self) -> usize {
        self.group_index.len()
    }

    fn group_records(&self, group: &str) -> Result<impl Iterator<Item = &ResponseRecord>> {
        let idx = self
            .group_index
            .get(group)
            .ok_or_else(|| Error::UnknownGroup(group.to_string()))?;
        Ok(idx.iter().map(move |&i| &self.records[i]))
    }

    /// Sorted bona fide responses of one group.
    pub fn bona_fide_responses(&self, group: &str) -> Result<Vec<f64>> {
        self.class_responses(group, SampleClass::BonaFide)
    }

    /// Sorted responses of one group restricted to `class`.
    pub fn class_responses(&self, group: &str, class: SampleClass) -> Result<Vec<f64>> {
        let mut out: Vec<f64> = self
            .group_records(group)?
            .filter(|r| r.class == class)
            .map(|r| r.response)
            .collect();
        out.sort_by(f64::total_cmp);
        Ok(out)
    }

    /// Sorted responses of `class` over all groups.
    pub fn pooled_responses(&self, class: SampleClass) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.class == class)
            .map(|r| r.response)
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn has_class(&self, class: SampleClass) -> bool {
        self.records.iter().any(|r| r.class == class)
    }

    pub fn group_pairs(&self) -> Result<Vec<GroupPair>> {
        let groups: Vec<&str> = self.groups().collect();
        if groups.len() < 2 {
            return Err(Error::InsufficientGroups { found: groups.len() });
        }
        let mut pairs = Vec::with_capacity(groups.len() * (groups.len() - 1) / 2);
        for (i, a) in groups.iter().enumerate() {
            for b in &groups[i + 1..] {
                pairs.push(GroupPair::new(*a, *b)?);
            }
        }
        Ok(pairs)
    }
}

pub(crate) fn write_records_csv<W: Write>(records: &[ResponseRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_COLUMNS)?;
    for r in records {
        w.write_record([
            r.sample_id.as_str(),
            r.group.as_str(),
            r.class.as_str(),
            &r.response.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
