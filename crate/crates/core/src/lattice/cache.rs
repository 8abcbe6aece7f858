use super::{enumerate_shell, Dim, LatticePoint, LatticeShell};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::{Arc, OnceLock, RwLock};

/// Environment variable naming the default on-disk cache file.
pub const CACHE_ENV: &str = "SCATTERER_CACHE";

/// Memoized shells keyed by `(d, n)`.
///
/// Lookups take a shared lock; misses enumerate outside any lock and then
/// insert under the write lock, so concurrent misses on the same key produce
/// identical shells and only one is kept.
#[derive(Debug, Default)]
pub struct ShellCache {
    shells: RwLock<HashMap<(Dim, u64), Arc<LatticeShell>>>,
}

impl ShellCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache.
    pub fn global() -> &'static ShellCache {
        static GLOBAL: OnceLock<ShellCache> = OnceLock::new();
        GLOBAL.get_or_init(ShellCache::new)
    }

    pub fn get(&self, n: u64, dim: Dim) -> Arc<LatticeShell> {
        if let Some(s) = self.shells.read().expect("cache lock").get(&(dim, n)) {
            return Arc::clone(s);
        }
        let shell = Arc::new(enumerate_shell(n, dim));
        let mut map = self.shells.write().expect("cache lock");
        Arc::clone(map.entry((dim, n)).or_insert(shell))
    }

    pub fn len(&self) -> usize {
        self.shells.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Merge shells from a cache file. A missing file is not an error.
    pub fn load(&self, path: &Path) -> Result<usize> {
        let file = match std::fs::File::open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(0),
            Err(e) => return Err(e.into()),
        };
        let mut parsed = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            parsed.push(parse_record(&line).map_err(|reason| Error::CacheFormat {
                line: i + 1,
                reason,
            })?);
        }
        let count = parsed.len();
        let mut map = self.shells.write().expect("cache lock");
        for shell in parsed {
            map.entry((shell.dim, shell.n))
                .or_insert_with(|| Arc::new(shell));
        }
        Ok(count)
    }

    /// Write every cached shell, sorted by `(d, n)`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let map = self.shells.read().expect("cache lock");
        let mut keys: Vec<_> = map.keys().copied().collect();
        keys.sort();
        let tmp = path.with_extension("tmp");
        {
            let mut out = BufWriter::new(std::fs::File::create(&tmp)?);
            for key in keys {
                write_record(&mut out, &map[&key])?;
            }
            out.flush()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn write_record<W: Write>(out: &mut W, shell: &LatticeShell) -> std::io::Result<()> {
    write!(out, "{},{},{}", shell.dim, shell.n, shell.multiplicity())?;
    for p in &shell.points {
        for c in p.coords() {
            write!(out, ",{c}")?;
        }
    }
    writeln!(out)
}

fn parse_record(line: &str) -> std::result::Result<LatticeShell, String> {
    let fields: Vec<i64> = line
        .split(',')
        .map(|f| {
            f.trim()
                .parse::<i64>()
                .map_err(|e| format!("bad integer {f:?}: {e}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    if fields.len() < 3 {
        return Err("expected d,n,multiplicity".into());
    }
    let dim = Dim::try_from(fields[0] as u32).map_err(|e| e.to_string())?;
    let n = u64::try_from(fields[1]).map_err(|_| "negative norm".to_string())?;
    let m = usize::try_from(fields[2]).map_err(|_| "negative multiplicity".to_string())?;
    let d = dim.get();
    let coords = &fields[3..];
    if coords.len() != m * d {
        return Err(format!(
            "expected {} coordinates, found {}",
            m * d,
            coords.len()
        ));
    }
    let points: Vec<LatticePoint> = coords
        .chunks(d)
        .map(|c| LatticePoint::from_slice(c).expect("chunk of length d"))
        .collect();
    if let Some(p) = points.iter().find(|p| p.norm_sq() as u64 != n) {
        return Err(format!("point {p:?} does not have squared norm {n}"));
    }
    if points.windows(2).any(|w| w[0] >= w[1]) {
        return Err("points are not strictly increasing".into());
    }
    Ok(LatticeShell { n, dim, points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("shells.csv");
        let cache = ShellCache::new();
        for n in [0, 5, 9, 25, 7] {
            cache.get(n, Dim::Two);
            cache.get(n, Dim::Three);
        }
        cache.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().any(|l| l.starts_with("2,5,8,")));
        assert!(text.lines().any(|l| l == "3,7,0"));

        let fresh = ShellCache::new();
        assert_eq!(fresh.load(&path).unwrap(), 10);
        for n in [0, 5, 9, 25, 7] {
            for dim in [Dim::Two, Dim::Three] {
                assert_eq!(*fresh.get(n, dim), enumerate_shell(n, dim));
            }
        }
        assert_eq!(fresh.len(), 10);
    }

    #[test]
    fn rejects_corrupt_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        for bad in ["2,5,1,1,1", "2,5,2,1,2", "4,1,0", "2,5,2,2,1,1,2", "x"] {
            std::fs::write(&path, format!("2,1,4,-1,0,0,-1,0,1,1,0\n{bad}\n")).unwrap();
            let err = ShellCache::new().load(&path).unwrap_err();
            assert!(
                matches!(err, Error::CacheFormat { line: 2, .. }),
                "{bad}: {err}"
            );
        }
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(ShellCache::new().load(&dir.path().join("none")).unwrap(), 0);
    }

    #[test]
    fn concurrent_reads_agree() {
        use rayon::prelude::*;
        let cache = ShellCache::new();
        let sizes: Vec<usize> = (0..400u64)
            .into_par_iter()
            .map(|i| cache.get(i % 50, Dim::Three).multiplicity())
            .collect();
        for (i, s) in sizes.iter().enumerate() {
            assert_eq!(
                *s,
                enumerate_shell(i as u64 % 50, Dim::Three).multiplicity()
            );
        }
        assert_eq!(cache.len(), 50);
    }
}
