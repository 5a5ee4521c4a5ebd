//! Versioned model container: a plain-text `key: value` header, a `---`
//! line, then a family-specific body (JSON for classical models and the
//! CRF, little-endian f64 arrays for neural models).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Label;
use crate::error::{Error, Result};

pub const MAGIC: &str = "chapterfn-artifact";
pub const VERSION: u32 = 1;
const SEPARATOR: &str = "---\n";

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactHeader {
    pub family: String,
    pub feature_dim: usize,
    pub classes: Vec<Label>,
    pub config_digest: String,
    pub seed: u64,
    /// Family-specific entries, written in key order.
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub header: ArtifactHeader,
    pub body: Vec<u8>,
}

impl Artifact {
    pub fn to_bytes(&self) -> Vec<u8> {
        let h = &self.header;
        let mut s = format!("{MAGIC} v{VERSION}\n");
        let classes: Vec<&str> = h.classes.iter().map(|l| l.as_str()).collect();
        let _ = writeln!(s, "family: {}", h.family);
        let _ = writeln!(s, "feature_dim: {}", h.feature_dim);
        let _ = writeln!(s, "classes: {}", classes.join(","));
        let _ = writeln!(s, "config_digest: {}", h.config_digest);
        let _ = writeln!(s, "seed: {}", h.seed);
        for (k, v) in &h.extra {
            let _ = writeln!(s, "x-{k}: {v}");
        }
        s.push_str(SEPARATOR);
        let mut out = s.into_bytes();
        out.extend_from_slice(&self.body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Artifact> {
        let bad = |m: &str| Error::Artifact(m.to_string());
        let sep = bytes
            .windows(SEPARATOR.len() + 1)
            .position(|w| w[0] == b'\n' && &w[1..] == SEPARATOR.as_bytes())
            .ok_or_else(|| bad("missing header separator"))?;
        let head = std::str::from_utf8(&bytes[..sep]).map_err(|_| bad("header is not UTF-8"))?;
        let body = bytes[sep + 1 + SEPARATOR.len()..].to_vec();
        let mut lines = head.lines();
        let first = lines.next().unwrap_or_default();
        let version = first
            .strip_prefix(MAGIC)
            .and_then(|v| v.trim().strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| bad("not a model artifact"))?;
        if version != VERSION {
            return Err(bad(&format!("unsupported artifact version {version}")));
        }
        let mut fields = BTreeMap::new();
        let mut extra = BTreeMap::new();
        for line in lines {
            let (k, v) = line.split_once(": ").ok_or_else(|| bad(&format!("malformed header line `{line}`")))?;
            match k.strip_prefix("x-") {
                Some(x) => extra.insert(x.to_string(), v.to_string()),
                None => fields.insert(k.to_string(), v.to_string()),
            };
        }
        let mut take = |k: &str| fields.remove(k).ok_or_else(|| bad(&format!("header lacks `{k}`")));
        let family = take("family")?;
        let feature_dim = take("feature_dim")?.parse().map_err(|_| bad("bad feature_dim"))?;
        let classes = take("classes")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<Label>())
            .collect::<Result<Vec<_>>>()?;
        let config_digest = take("config_digest")?;
        let seed = take("seed")?.parse().map_err(|_| bad("bad seed"))?;
        Ok(Artifact { header: ArtifactHeader { family, feature_dim, classes, config_digest, seed, extra }, body })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Artifact> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Refuses the artifact unless it was built under `digest`.
    pub fn expect_digest(&self, digest: &str) -> Result<()> {
        if self.header.config_digest != digest {
            return Err(Error::Artifact(format!(
                "artifact was built with feature config {} but the current pipeline has {}; \
                 rebuild the model or load the matching configuration",
                self.header.config_digest, digest
            )));
        }
        Ok(())
    }

    pub fn expect_family(&self, family: &str) -> Result<()> {
        if self.header.family != family {
            return Err(Error::Artifact(format!("expected a `{family}` artifact, found `{}`", self.header.family)));
        }
        Ok(())
    }
}

pub fn f64s_to_le(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn le_to_f64s(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Artifact(format!("body of {} bytes is not a whole number of f64s", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Artifact {
        let mut extra = BTreeMap::new();
        extra.insert("shapes".into(), "3x2;2".into());
        Artifact {
            header: ArtifactHeader {
                family: "cnn".into(),
                feature_dim: 12,
                classes: Label::ALL.to_vec(),
                config_digest: "0123456789abcdef".into(),
                seed: 7,
                extra,
            },
            body: f64s_to_le(&[1.5, -2.0, f64::MIN_POSITIVE]),
        }
    }

    #[test]
    fn round_trip() {
        let a = sample();
        let b = Artifact::from_bytes(&a.to_bytes()).unwrap();
        assert_eq!(a, b);
        assert_eq!(le_to_f64s(&b.body).unwrap(), vec![1.5, -2.0, f64::MIN_POSITIVE]);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        a.write(&p).unwrap();
        assert_eq!(Artifact::read(&p).unwrap(), a);
    }

    #[test]
    fn digest_mismatch_is_refused() {
        let a = sample();
        assert!(a.expect_digest("0123456789abcdef").is_ok());
        assert!(matches!(a.expect_digest("ffff"), Err(Error::Artifact(_))));
    }

    #[test]
    fn corrupt_input() {
        assert!(Artifact::from_bytes(b"hello").is_err());
        let mut bytes = sample().to_bytes();
        bytes[20] = b'9';
        assert!(Artifact::from_bytes(&bytes).is_err());
        assert!(le_to_f64s(&[0u8; 7]).is_err());
    }
}
