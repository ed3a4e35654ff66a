//! Binary field cache.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic     8 bytes  "LBMFIELD"
//! version   u32
//! key       32 bytes SHA-256 of (m, quadrature tolerance, cutoffs, geometry, seed, replica)
//! geometry  x0 y0 h: f64, nx ny: u64
//! variance  f64
//! layers    u64 count L, then L variances f64, L modes u8, u8 flag for stored layer arrays
//! arrays    L × nx·ny f64 when the flag is 1, then X_n as nx·ny f64
//! ```

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gaussian_field::{FieldGrid, FieldSampler, FieldSource, KernelSpec, LayerSchedule, SamplerMode};
use crate::geometry::Geometry;

pub const FIELD_MAGIC: &[u8; 8] = b"LBMFIELD";
pub const CACHE_VERSION: u32 = 1;
/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "LBM_CACHE_DIR";

/// Key identifying one field replica.
pub fn field_key(spec: &KernelSpec, schedule: &LayerSchedule, geometry: &Geometry, seed: u64, replica: u32) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"liouville-lab/field-cache");
    h.update(spec.mass.to_le_bytes());
    h.update(spec.tolerance.to_le_bytes());
    h.update((schedule.cutoffs().len() as u64).to_le_bytes());
    for c in schedule.cutoffs() {
        h.update(c.to_le_bytes());
    }
    for v in [geometry.x0, geometry.y0, geometry.h] {
        h.update(v.to_le_bytes());
    }
    h.update((geometry.nx as u64).to_le_bytes());
    h.update((geometry.ny as u64).to_le_bytes());
    h.update(seed.to_le_bytes());
    h.update(replica.to_le_bytes());
    h.finalize().into()
}

fn cache_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Cache {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn put_f64s(buf: &mut Vec<u8>, xs: &[f64]) {
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
}

/// Write `field` under `key`.
pub fn cache_field(path: &Path, key: &[u8; 32], field: &FieldGrid) -> Result<()> {
    let g = &field.geometry;
    let mut buf = Vec::with_capacity(8 * (field.cumulative.len() * (1 + field.layers.len()) + 16));
    buf.extend_from_slice(FIELD_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(key);
    put_f64s(&mut buf, &[g.x0, g.y0, g.h]);
    buf.extend_from_slice(&(g.nx as u64).to_le_bytes());
    buf.extend_from_slice(&(g.ny as u64).to_le_bytes());
    put_f64s(&mut buf, &[field.variance]);
    let l = field.variances.len();
    buf.extend_from_slice(&(l as u64).to_le_bytes());
    put_f64s(&mut buf, &field.variances);
    for m in &field.modes {
        buf.push(match m {
            SamplerMode::Exact => 0,
            SamplerMode::SpectralTruncation => 1,
        });
    }
    let with_layers = !field.layers.is_empty();
    buf.push(u8::from(with_layers));
    if with_layers {
        for layer in &field.layers {
            put_f64s(&mut buf, layer);
        }
    }
    put_f64s(&mut buf, &field.cumulative);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    at: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| cache_err(self.path, "file is truncated; delete it and rerun"))?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| cache_err(self.path, "corrupt length"))?)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

/// Read a field written by [`cache_field`], refusing files whose key differs
/// from `key`.
pub fn load_field(path: &Path, key: &[u8; 32]) -> Result<FieldGrid> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut r = Reader { path, bytes: &bytes, at: 0 };
    if r.take(8)? != FIELD_MAGIC {
        return Err(cache_err(path, "not a field cache file (bad magic)"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(cache_err(
            path,
            format!("cache format version {version}, this build reads {CACHE_VERSION}; delete the file to regenerate it"),
        ));
    }
    if r.take(32)? != key {
        return Err(cache_err(
            path,
            "hash mismatch: the file was written for a different (m, schedule, geometry, seed, replica); \
             delete it or point the cache directory elsewhere",
        ));
    }
    let (x0, y0, h) = (r.f64()?, r.f64()?, r.f64()?);
    let (nx, ny) = (r.u64()? as usize, r.u64()? as usize);
    let geometry = Geometry::new(x0, y0, h, nx, ny).map_err(|e| cache_err(path, e.to_string()))?;
    let variance = r.f64()?;
    let l = r.u64()? as usize;
    if l > 4096 {
        return Err(cache_err(path, "corrupt layer count"));
    }
    let variances = r.f64s(l)?;
    let modes = r
        .take(l)?
        .iter()
        .map(|b| match b {
            0 => Ok(SamplerMode::Exact),
            1 => Ok(SamplerMode::SpectralTruncation),
            _ => Err(cache_err(path, "corrupt sampler mode")),
        })
        .collect::<Result<Vec<_>>>()?;
    let with_layers = r.take(1)?[0] == 1;
    let n = geometry.len();
    let layers = if with_layers {
        (0..l).map(|_| r.f64s(n)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let cumulative = r.f64s(n)?;
    if r.at != bytes.len() {
        return Err(cache_err(path, "trailing bytes after payload"));
    }
    Ok(FieldGrid {
        geometry,
        source: None,
        layers,
        variances,
        cumulative,
        variance,
        modes,
    })
}

/// Sampler front end that reads and writes cached replicas when a cache
/// directory is configured.
#[derive(Debug)]
pub struct FieldCache {
    pub dir: Option<PathBuf>,
}

impl FieldCache {
    /// Directory from the environment, if set and non-empty.
    pub fn from_env() -> Self {
        let dir = std::env::var_os(CACHE_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
        Self { dir }
    }

    pub fn disabled() -> Self {
        Self { dir: None }
    }

    pub fn path_for(dir: &Path, key: &[u8; 32]) -> PathBuf {
        dir.join(format!("{}.lbmfield", super::config::hex(key)))
    }

    /// `X_n` of replica `replica`, from the cache when present.
    pub fn cumulative(&self, sampler: &FieldSampler, seed: u64, replica: u32) -> Result<FieldGrid> {
        let Some(dir) = &self.dir else {
            return Ok(sampler.sample_cumulative(seed, replica));
        };
        let key = field_key(&sampler.spec, &sampler.schedule, &sampler.geometry, seed, replica);
        let path = Self::path_for(dir, &key);
        let mut field = if path.exists() {
            load_field(&path, &key)?
        } else {
            let f = sampler.sample_cumulative(seed, replica);
            cache_field(&path, &key, &f)?;
            f
        };
        field.source = Some(FieldSource { master: seed, replica });
        Ok(field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(layers: usize) -> FieldSampler {
        FieldSampler::new(
            KernelSpec::new(1.0).unwrap(),
            LayerSchedule::dyadic(layers).unwrap(),
            Geometry::centered(2.0, 32).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let s = sampler(3);
        let mut field = s.sample(7, 2);
        field.source = None;
        let key = field_key(&s.spec, &s.schedule, &s.geometry, 7, 2);
        let path = dir.path().join("f.lbmfield");
        cache_field(&path, &key, &field).unwrap();
        let back = load_field(&path, &key).unwrap();
        assert_eq!(back.cumulative.len(), field.cumulative.len());
        assert!(back.cumulative.iter().zip(&field.cumulative).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(back, field);
    }

    #[test]
    fn different_schedule_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (sampler(3), sampler(4));
        let field = a.sample_cumulative(1, 0);
        let key_a = field_key(&a.spec, &a.schedule, &a.geometry, 1, 0);
        let key_b = field_key(&b.spec, &b.schedule, &b.geometry, 1, 0);
        let path = dir.path().join("f.lbmfield");
        cache_field(&path, &key_a, &field).unwrap();
        let err = load_field(&path, &key_b).unwrap_err();
        assert!(err.to_string().contains("hash mismatch"), "{err}");
    }

    #[test]
    fn cache_front_end_matches_direct_sampling() {
        let dir = tempfile::tempdir().unwrap();
        let s = sampler(2);
        let cache = FieldCache { dir: Some(dir.path().to_path_buf()) };
        let first = cache.cumulative(&s, 3, 1).unwrap();
        let second = cache.cumulative(&s, 3, 1).unwrap();
        assert_eq!(first, second);
        assert_eq!(first, s.sample_cumulative(3, 1));
    }
}
