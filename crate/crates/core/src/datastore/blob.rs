//! `WFG1` field blobs: a small header followed by little-endian `f32` data.
//!
//! ```text
//! magic       4 bytes  "WFG1"
//! name_len    u32
//! name        name_len bytes, UTF-8
//! count       u64      number of elements
//! components  u32      values per element
//! data        count * components * f32
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::DatastoreError;

pub const MAGIC: &[u8; 4] = b"WFG1";

/// A named array of `count` elements with `components` values each.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldBlob {
    pub name: String,
    pub components: u32,
    pub data: Vec<f32>,
}

impl FieldBlob {
    pub fn new(name: impl Into<String>, components: u32, data: Vec<f32>) -> Result<Self, String> {
        if components == 0 {
            return Err("components must be positive".into());
        }
        if !data.len().is_multiple_of(components as usize) {
            return Err(format!(
                "{} values do not divide into {components}-component elements",
                data.len()
            ));
        }
        Ok(Self {
            name: name.into(),
            components,
            data,
        })
    }

    pub fn scalar(name: impl Into<String>, values: &[f64]) -> Self {
        Self {
            name: name.into(),
            components: 1,
            data: values.iter().map(|&v| v as f32).collect(),
        }
    }

    pub fn vector3(name: impl Into<String>, values: &[[f64; 3]]) -> Self {
        Self {
            name: name.into(),
            components: 3,
            data: values.iter().flat_map(|v| v.map(|c| c as f32)).collect(),
        }
    }

    pub fn count(&self) -> u64 {
        (self.data.len() / self.components as usize) as u64
    }

    /// Widened values, one slice of `components` per element.
    pub fn elements(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        self.data
            .chunks(self.components as usize)
            .map(|c| c.iter().map(|&v| v as f64).collect())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let name = self.name.as_bytes();
        let mut out = Vec::with_capacity(24 + name.len() + 4 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
        out.extend_from_slice(&self.count().to_le_bytes());
        out.extend_from_slice(&self.components.to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses blob bytes read from `path`. The magic is checked first, then
    /// the checksum when one is given, and only then the payload.
    pub fn from_bytes(bytes: &[u8], path: &Path, sha256: Option<&str>) -> Result<Self, DatastoreError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            let found = bytes.get(..4.min(bytes.len())).unwrap_or_default();
            return Err(DatastoreError::Version {
                path: path.to_path_buf(),
                found: String::from_utf8_lossy(found).into_owned(),
            });
        }
        if let Some(expected) = sha256 {
            let actual = checksum(bytes);
            if actual != expected {
                return Err(DatastoreError::Checksum {
                    path: path.to_path_buf(),
                    expected: expected.to_string(),
                    actual,
                });
            }
        }
        let malformed = |detail: &str| DatastoreError::Malformed {
            path: path.to_path_buf(),
            detail: detail.to_string(),
        };
        let mut at = 4usize;
        let mut take = |n: usize| -> Result<&[u8], DatastoreError> {
            let s = bytes.get(at..at + n).ok_or_else(|| malformed("blob is truncated"))?;
            at += n;
            Ok(s)
        };
        let name_len = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(take(name_len)?)
            .map_err(|_| malformed("field name is not UTF-8"))?
            .to_string();
        let count = u64::from_le_bytes(take(8)?.try_into().unwrap());
        let components = u32::from_le_bytes(take(4)?.try_into().unwrap());
        if components == 0 {
            return Err(malformed("zero components"));
        }
        let values = count
            .checked_mul(components as u64)
            .and_then(|n| usize::try_from(n).ok())
            .ok_or_else(|| malformed("element count overflows"))?;
        let payload = take(
            values
                .checked_mul(4)
                .ok_or_else(|| malformed("element count overflows"))?,
        )?;
        let data = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if at != bytes.len() {
            return Err(malformed("trailing bytes after payload"));
        }
        Ok(Self { name, components, data })
    }
}

pub fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let b = FieldBlob::vector3("tau", &[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let bytes = b.to_bytes();
        assert_eq!(&bytes[..4], b"WFG1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 3);
        assert_eq!(&bytes[8..11], b"tau");
        assert_eq!(u64::from_le_bytes(bytes[11..19].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[19..23].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 23 + 24);
        assert_eq!(f32::from_le_bytes(bytes[23..27].try_into().unwrap()), 1.0);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let data = vec![f32::MIN_POSITIVE, -0.0, 1.0e-40, 3.4e38, 0.1];
        let b = FieldBlob::new("p_s", 1, data).unwrap();
        let bytes = b.to_bytes();
        let back = FieldBlob::from_bytes(&bytes, Path::new("x.wfg"), Some(&checksum(&bytes))).unwrap();
        assert_eq!(
            back.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        assert_eq!(back.name, "p_s");
    }

    #[test]
    fn wrong_magic_wins_over_checksum() {
        let mut bytes = FieldBlob::scalar("p_s", &[1.0]).to_bytes();
        bytes[3] = b'9';
        let err = FieldBlob::from_bytes(&bytes, Path::new("a.wfg"), Some("00")).unwrap_err();
        assert!(matches!(err, DatastoreError::Version { ref found, .. } if found == "WFG9"));
    }

    #[test]
    fn truncation_without_checksum_is_malformed() {
        let bytes = FieldBlob::scalar("p_s", &[1.0, 2.0]).to_bytes();
        let err = FieldBlob::from_bytes(&bytes[..bytes.len() - 1], Path::new("a.wfg"), None).unwrap_err();
        assert!(matches!(err, DatastoreError::Malformed { .. }));
    }
}
