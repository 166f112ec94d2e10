//! Flat binary dataset file.
//!
//! ```text
//! magic      8 bytes   "RFFDSET\0"
//! hlen       u32 LE    length of the JSON header in bytes
//! header     hlen      UTF-8 JSON (DatasetHeader)
//! features   rows * feature_len f32 LE, row-major
//! labels     rows i32 LE
//! snr_db     rows f32 LE
//! frame      rows u64 LE   frame index within the device
//! split      rows u8       0 = train, 1 = test
//! flagged    rows u32 LE   flagged subcarriers in the row's feature
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"RFFDSET\0";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub k: usize,
    pub feature_len: usize,
    pub rows: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Rows whose feature carries at least one flagged subcarrier.
    pub flagged_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    fn code(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::Test => 1,
        }
    }

    fn from_code(c: u8) -> Result<Self> {
        match c {
            0 => Ok(Split::Train),
            1 => Ok(Split::Test),
            other => Err(Error::Format(format!("unknown split code {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetFile {
    pub header: DatasetHeader,
    pub features: Vec<f32>,
    pub labels: Vec<i32>,
    pub snr_db: Vec<f32>,
    pub frame_index: Vec<u64>,
    pub split: Vec<Split>,
    pub flagged: Vec<u32>,
}

impl DatasetFile {
    pub fn check(&self) -> Result<()> {
        let h = &self.header;
        let rows = h.rows;
        let lens = [
            ("features", self.features.len(), rows * h.feature_len),
            ("labels", self.labels.len(), rows),
            ("snr_db", self.snr_db.len(), rows),
            ("frame_index", self.frame_index.len(), rows),
            ("split", self.split.len(), rows),
            ("flagged", self.flagged.len(), rows),
        ];
        for (name, got, want) in lens {
            if got != want {
                return Err(Error::Format(format!("{name} holds {got} values, header implies {want}")));
            }
        }
        let n_train = self.split.iter().filter(|s| **s == Split::Train).count();
        if n_train != h.n_train || rows - n_train != h.n_test {
            return Err(Error::Format("split counts disagree with the header".into()));
        }
        Ok(())
    }

    pub fn row(&self, i: usize) -> &[f32] {
        let d = self.header.feature_len;
        &self.features[i * d..(i + 1) * d]
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        self.check()?;
        let header = serde_json::to_vec(&self.header)?;
        let hlen = u32::try_from(header.len()).map_err(|_| Error::Format("header too large".into()))?;
        let mut buf = Vec::with_capacity(12 + header.len() + self.features.len() * 4 + self.labels.len() * 21);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&hlen.to_le_bytes());
        buf.extend_from_slice(&header);
        for v in &self.features {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.labels {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.snr_db {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.frame_index {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend(self.split.iter().map(|s| s.code()));
        for v in &self.flagged {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut v = Vec::new();
        self.write_to(&mut v)?;
        Ok(v)
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(Error::Format("not a dataset file (bad magic)".into()));
        }
        let hlen = u32::from_le_bytes(cur.array()?) as usize;
        let header: DatasetHeader = serde_json::from_slice(cur.take(hlen)?)?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                header.schema_version
            )));
        }
        let rows = header.rows;
        let n_feat = rows
            .checked_mul(header.feature_len)
            .ok_or_else(|| Error::Format("feature count overflows".into()))?;
        let features = (0..n_feat).map(|_| cur.array().map(f32::from_le_bytes)).collect::<Result<_>>()?;
        let labels = (0..rows).map(|_| cur.array().map(i32::from_le_bytes)).collect::<Result<_>>()?;
        let snr_db = (0..rows).map(|_| cur.array().map(f32::from_le_bytes)).collect::<Result<_>>()?;
        let frame_index = (0..rows).map(|_| cur.array().map(u64::from_le_bytes)).collect::<Result<_>>()?;
        let split = cur.take(rows)?.iter().map(|&c| Split::from_code(c)).collect::<Result<_>>()?;
        let flagged = (0..rows).map(|_| cur.array().map(u32::from_le_bytes)).collect::<Result<_>>()?;
        if cur.pos != bytes.len() {
            return Err(Error::Format(format!("{} trailing bytes", bytes.len() - cur.pos)));
        }
        let file = DatasetFile {
            header,
            features,
            labels,
            snr_db,
            frame_index,
            split,
            flagged,
        };
        file.check()?;
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.bytes.len())
            .ok_or_else(|| Error::Format("file is truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
}
