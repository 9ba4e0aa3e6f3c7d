use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A sample's sequence of codebook indices, each in `[0, k)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeVector {
    pub sample_id: String,
    pub group: String,
    pub codes: Vec<u32>,
    pub k: u32,
}

impl CodeVector {
    pub fn new(
        sample_id: impl Into<String>,
        group: impl Into<String>,
        codes: Vec<u32>,
        k: u32,
    ) -> Result<Self> {
        let v = CodeVector {
            sample_id: sample_id.into(),
            group: group.into(),
            codes,
            k,
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::Validation(format!("codebook size must be >= 2, got {}", self.k)));
        }
        if self.codes.is_empty() {
            return Err(Error::Validation(format!("code vector `{}` is empty", self.sample_id)));
        }
        if let Some(&c) = self.codes.iter().find(|&&c| c >= self.k) {
            return Err(Error::Validation(format!(
                "code {c} of `{}` outside [0, {}]",
                self.sample_id,
                self.k - 1
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// each code divided by `k - 1`, length preserved
    #[default]
    ScaledIndices,
    /// relative frequency of each of the `k` codes
    CodeHistogram,
}

impl std::str::FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "scaledindices" | "scaled" | "indices" => Ok(FeatureMode::ScaledIndices),
            "codehistogram" | "histogram" => Ok(FeatureMode::CodeHistogram),
            _ => Err(Error::Parameter(format!("unknown feature mode `{s}`"))),
        }
    }
}

pub fn featurize(v: &CodeVector, mode: FeatureMode) -> Result<Vec<f64>> {
    v.validate()?;
    Ok(match mode {
        FeatureMode::ScaledIndices => {
            let scale = (v.k - 1) as f64;
            v.codes.iter().map(|&c| c as f64 / scale).collect()
        }
        FeatureMode::CodeHistogram => {
            let mut h = vec![0.0; v.k as usize];
            for &c in &v.codes {
                h[c as usize] += 1.0;
            }
            let total = v.codes.len() as f64;
            h.iter_mut().for_each(|x| *x /= total);
            h
        }
    })
}

/// Code vectors sharing one length and codebook size.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSet {
    pub k: u32,
    pub vectors: Vec<CodeVector>,
}

impl CodeSet {
    pub fn new(k: u32, vectors: Vec<CodeVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let len = vectors[0].codes.len();
        for v in &vectors {
            if v.k != k {
                return Err(Error::Validation(format!(
                    "code vector `{}` has codebook size {} instead of {k}",
                    v.sample_id, v.k
                )));
            }
            if v.codes.len() != len {
                return Err(Error::Shape {
                    expected: len,
                    got: v.codes.len(),
                });
            }
            v.validate()?;
        }
        Ok(CodeSet { k, vectors })
    }

    pub fn group(&self, label: &str) -> Vec<&CodeVector> {
        self.vectors.iter().filter(|v| v.group == label).collect()
    }

    pub fn groups(&self) -> Vec<String> {
        let mut g: Vec<String> = self.vectors.iter().map(|v| v.group.clone()).collect();
        g.sort();
        g.dedup();
        g
    }

    /// Reads `sample_id,group,c0,...` rows. The codebook size comes from a
    /// `#K=<int>` comment line or, failing that, `k_override`.
    pub fn read_csv<R: Read>(reader: R, k_override: Option<u32>) -> Result<Self> {
        let mut declared_k = None;
        let mut body = String::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            let trimmed = line.trim();
            if let Some(rest) = trimmed.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("K=") {
                    declared_k = Some(v.trim().parse::<u32>().map_err(|_| {
                        Error::Validation(format!("bad codebook size declaration `{trimmed}`"))
                    })?);
                }
                // keep line numbering intact for error messages
                body.push('\n');
                continue;
            }
            body.push_str(&line);
            body.push('\n');
        }
        let k = k_override.or(declared_k).ok_or_else(|| {
            Error::Validation("codebook size missing: add a `#K=<int>` line or pass it explicitly".into())
        })?;

        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(body.as_bytes());
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("sample_id") {
            return Err(Error::Schema { column: "sample_id".into() });
        }
        if headers.get(1) != Some("group") {
            return Err(Error::Schema { column: "group".into() });
        }
        if headers.len() < 3 {
            return Err(Error::Schema { column: "c0".into() });
        }

        let mut vectors = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
            let codes = row
                .iter()
                .skip(2)
                .map(|cell| {
                    cell.parse::<u32>().map_err(|_| Error::Row {
                        line,
                        message: format!("non-integer code `{cell}`"),
                    })
                })
                .collect::<Result<Vec<u32>>>()?;
            let v = CodeVector::new(&row[0], &row[1], codes, k)
                .map_err(|e| Error::Row { line, message: e.to_string() })?;
            vectors.push(v);
        }
        CodeSet::new(k, vectors)
    }

    pub fn load_csv(path: impl AsRef<Path>, k_override: Option<u32>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, k_override)
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "#K={}", self.k)?;
        let mut w = csv::Writer::from_writer(writer);
        let d = self.vectors.first().map_or(0, |v| v.codes.len());
        let mut header = vec!["sample_id".to_string(), "group".to_string()];
        header.extend((0..d).map(|i| format!("c{i}")));
        w.write_record(&header)?;
        for v in &self.vectors {
            let mut rec = vec![v.sample_id.clone(), v.group.clone()];
            rec.extend(v.codes.iter().map(u32::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaled_indices_endpoints() {
        let v = CodeVector::new("s", "A", vec![0, 1023], 1024).unwrap();
        assert_eq!(featurize(&v, FeatureMode::ScaledIndices).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn histogram_of_constant_codes() {
        let v = CodeVector::new("s", "A", vec![3, 3, 3, 3], 8).unwrap();
        let h = featurize(&v, FeatureMode::CodeHistogram).unwrap();
        let mut expected = vec![0.0; 8];
        expected[3] = 1.0;
        assert_eq!(h, expected);
    }

    #[test]
    fn out_of_range_code_rejected() {
        assert!(CodeVector::new("s", "A", vec![0, 8], 8).is_err());
        let bad = CodeVector {
            sample_id: "s".into(),
            group: "A".into(),
            codes: vec![9],
            k: 8,
        };
        assert!(matches!(featurize(&bad, FeatureMode::ScaledIndices), Err(Error::Validation(_))));
    }

    #[test]
    fn csv_with_declared_k() {
        let text = "#K=4\nsample_id,group,c0,c1,c2\na,X,0,1,3\nb,Y,2,2,2\n";
        let set = CodeSet::read_csv(text.as_bytes(), None).unwrap();
        assert_eq!(set.k, 4);
        assert_eq!(set.vectors[1].codes, vec![2, 2, 2]);
        assert_eq!(set.groups(), vec!["X".to_string(), "Y".to_string()]);

        let mut out = Vec::new();
        set.write_csv(&mut out).unwrap();
        let again = CodeSet::read_csv(out.as_slice(), None).unwrap();
        assert_eq!(again, set);
    }

    #[test]
    fn csv_errors() {
        let no_k = "sample_id,group,c0\na,X,0\n";
        assert!(CodeSet::read_csv(no_k.as_bytes(), None).is_err());
        assert!(CodeSet::read_csv(no_k.as_bytes(), Some(2)).is_ok());
        let out_of_range = "#K=2\nsample_id,group,c0\na,X,0\nb,X,5\n";
        assert!(matches!(
            CodeSet::read_csv(out_of_range.as_bytes(), None),
            Err(Error::Row { line: 4, .. })
        ));
        let ragged = "#K=4\nsample_id,group,c0,c1\na,X,0,1\nb,X,1\n";
        assert!(CodeSet::read_csv(ragged.as_bytes(), None).is_err());
    }
}
