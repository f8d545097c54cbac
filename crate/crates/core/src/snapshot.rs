//! Text snapshots of RBM parameters, used for restarts and for handing a
//! prepared state to the dynamics.
//!
//! Layout:
//!
//! ```text
//! # rbm-snapshot N=<n> M=<m> P=<p> seed=<s> step=<k> time=<t> version=1 checksum=<hex>
//! <re> <im>        (P lines, flattened [a, b, w] order)
//! ```
//!
//! Floats use 17 significant digits so values round-trip exactly; the
//! checksum is SHA-256 (first 16 hex digits) over the little-endian bytes of
//! every `(re, im)` pair.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rbm::{ParameterVector, RbmParameters};
use crate::scalar::Real;

pub const SNAPSHOT_VERSION: u32 = 1;
const MAGIC: &str = "# rbm-snapshot";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<T: Real> {
    pub n_visible: usize,
    pub n_hidden: usize,
    pub seed: u64,
    pub step: usize,
    pub time: f64,
    pub values: ParameterVector<T>,
}

fn checksum(values: &[(f64, f64)]) -> String {
    let mut h = Sha256::new();
    for (re, im) in values {
        h.update(re.to_le_bytes());
        h.update(im.to_le_bytes());
    }
    h.finalize().iter().take(8).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl<T: Real> Snapshot<T> {
    pub fn from_parameters(p: &RbmParameters<T>, seed: u64, step: usize, time: f64) -> Self {
        Self {
            n_visible: p.n_visible(),
            n_hidden: p.n_hidden(),
            seed,
            step,
            time,
            values: p.flatten(),
        }
    }

    pub fn to_parameters(&self, visible_bias: bool) -> Result<RbmParameters<T>> {
        RbmParameters::unflatten(self.n_visible, self.n_hidden, visible_bias, &self.values)
    }

    fn pairs(&self) -> Vec<(f64, f64)> {
        self.values.iter().map(|z| (z.re.as_f64(), z.im.as_f64())).collect()
    }

    pub fn encode(&self) -> String {
        let pairs = self.pairs();
        let mut out = format!(
            "{MAGIC} N={} M={} P={} seed={} step={} time={:.16e} version={SNAPSHOT_VERSION} checksum={}\n",
            self.n_visible,
            self.n_hidden,
            pairs.len(),
            self.seed,
            self.step,
            self.time,
            checksum(&pairs)
        );
        for (re, im) in pairs {
            let _ = writeln!(out, "{re:.16e} {im:.16e}");
        }
        out
    }

    pub fn decode(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::Snapshot(msg);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let rest = header.strip_prefix(MAGIC).ok_or_else(|| bad("missing snapshot header".into()))?;
        let mut fields = std::collections::HashMap::new();
        for token in rest.split_whitespace() {
            let (k, v) = token
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed header field {token:?}")))?;
            fields.insert(k, v);
        }
        if fields.len() != 8 {
            return Err(bad(format!("expected 8 header fields, found {}", fields.len())));
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("missing header field {k}")));
        let parse_usize = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| bad(format!("header field {k} is not an integer"))) };
        let version: u32 = get("version")?.parse().map_err(|_| bad("bad version".into()))?;
        if version != SNAPSHOT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let (n, m, p) = (parse_usize("N")?, parse_usize("M")?, parse_usize("P")?);
        if p != n + m + n * m {
            return Err(bad(format!("P={p} inconsistent with N={n}, M={m}")));
        }
        let seed: u64 = get("seed")?.parse().map_err(|_| bad("bad seed".into()))?;
        let step = parse_usize("step")?;
        let time: f64 = get("time")?.parse().map_err(|_| bad("bad time".into()))?;
        let expected = get("checksum")?.to_string();
        let mut pairs = Vec::with_capacity(p);
        for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let mut it = line.split_whitespace();
            let mut num = || -> Result<f64> {
                it.next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(format!("malformed value line {}", k + 2)))
            };
            pairs.push((num()?, num()?));
        }
        if pairs.len() != p {
            return Err(bad(format!("expected {p} values, found {}", pairs.len())));
        }
        if checksum(&pairs) != expected {
            return Err(bad("checksum mismatch".into()));
        }
        let values = ParameterVector::from_vec(pairs.into_iter().map(|(re, im)| Complex::new(T::of(re), T::of(im))).collect());
        Ok(Self {
            n_visible: n,
            n_hidden: m,
            seed,
            step,
            time,
            values,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rbm::init_random;

    #[test]
    fn encode_decode_is_exact() {
        let p = init_random::<f64>(3, 4, 0.7, 12).unwrap();
        let snap = Snapshot::from_parameters(&p, 12, 40, 0.4);
        let back = Snapshot::<f64>::decode(&snap.encode()).unwrap();
        assert_eq!(back, snap);
        assert_eq!(back.to_parameters(true).unwrap(), p);
    }

    #[test]
    fn header_has_eight_fields() {
        let snap = Snapshot::from_parameters(&RbmParameters::<f64>::zeros(2, 2), 0, 0, 0.0);
        let text = snap.encode();
        let header = text.lines().next().unwrap();
        assert_eq!(header.strip_prefix(MAGIC).unwrap().split_whitespace().count(), 8);
    }

    #[test]
    fn corruption_is_detected() {
        let p = init_random::<f64>(2, 2, 0.5, 1).unwrap();
        let text = Snapshot::from_parameters(&p, 1, 0, 0.0).encode();
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[3] = "1.0000000000000000e0 0.0000000000000000e0".into();
        let tampered = lines.join("\n");
        assert!(matches!(Snapshot::<f64>::decode(&tampered), Err(Error::Snapshot(_))));
        let truncated: String = text.lines().take(4).collect::<Vec<_>>().join("\n");
        assert!(Snapshot::<f64>::decode(&truncated).is_err());
        assert!(Snapshot::<f64>::decode("garbage").is_err());
    }
}
