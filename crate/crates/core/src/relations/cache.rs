//! On-disk similarity cache.
//!
//! File layout: one header line `relation,kind,k,alpha,n` holding those five
//! values, then one `u,v,value` line per stored nonzero entry with `u`, `v`
//! written as external node ids. Absent entries are zero. Values use Rust's
//! shortest round-trip float formatting, so a reload is bit-exact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::{RelationKind, RelationSpec, SimilarityMatrix, Store};
use crate::error::{Error, Result};
use crate::graph::Graph;
use ndarray::Array2;

pub fn write_similarity(s: &SimilarityMatrix, g: &Graph, path: &Path) -> Result<()> {
    assert!(s.is_full(), "only full matrices are cached");
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    let spec = s.spec();
    writeln!(
        w,
        "{},{},{},{:?},{}",
        spec.name(),
        spec.kind.as_str(),
        spec.k,
        spec.alpha,
        s.node_count()
    )
    .map_err(io)?;
    let ids = g.node_ids();
    let mut result = Ok(());
    s.for_each_stored(|u, v, x| {
        if result.is_ok() {
            result = writeln!(w, "{},{},{:?}", ids[u], ids[v], x);
        }
    });
    result.map_err(io)?;
    w.flush().map_err(io)
}

pub fn read_similarity(g: &Graph, path: &Path) -> Result<SimilarityMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| Error::parse(path, 1, "empty cache file"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 5 {
        return Err(Error::parse(path, 1, "header must be relation,kind,k,alpha,n"));
    }
    let kind = RelationKind::parse(fields[1])
        .ok_or_else(|| Error::parse(path, 1, format!("unknown kind {:?}", fields[1])))?;
    let k: usize = fields[2].parse().map_err(|_| Error::parse(path, 1, "bad k"))?;
    let alpha: f64 = fields[3].parse().map_err(|_| Error::parse(path, 1, "bad alpha"))?;
    let n: usize = fields[4].parse().map_err(|_| Error::parse(path, 1, "bad n"))?;
    if n != g.node_count() {
        return Err(Error::Reference(format!(
            "{}: cache has {n} nodes, graph has {}",
            path.display(),
            g.node_count()
        )));
    }
    let spec = RelationSpec { kind, k, alpha };
    let node = |tok: &str, line: usize| {
        g.node_index(tok)
            .ok_or_else(|| Error::Reference(format!("{}:{line}: unknown node {tok:?}", path.display())))
    };
    let sparse = kind == RelationKind::Link;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut dense = if sparse { None } else { Some(Array2::zeros((n, n))) };
    for (i, line) in lines {
        let lineno = i + 1;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::parse(path, lineno, "expected u,v,value"));
        }
        let u = node(parts[0], lineno)?;
        let v = node(parts[1], lineno)?;
        let x: f64 = parts[2]
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad value {:?}", parts[2])))?;
        match dense.as_mut() {
            Some(m) => m[[u, v]] = x,
            None => rows[u].push((v, x)),
        }
    }
    let store = match dense {
        Some(m) => Store::Dense(m),
        None => {
            for r in &mut rows {
                r.sort_by_key(|&(v, _)| v);
            }
            Store::Sparse(rows)
        }
    };
    Ok(SimilarityMatrix::from_parts(spec, n, None, store))
}

/// Directory of cached similarity matrices keyed by graph fingerprint and relation.
#[derive(Debug, Clone)]
pub struct SimilarityCache {
    dir: PathBuf,
}

impl SimilarityCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(SimilarityCache { dir })
    }

    pub fn path_for(&self, g: &Graph, spec: &RelationSpec) -> PathBuf {
        let fp = g.fingerprint();
        let name: String = spec
            .name()
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
            .collect();
        self.dir.join(format!("{}_{}_k{}.sim", &fp[..16], name, spec.k))
    }

    /// Returns the cached matrix or computes and publishes it. The flag is true
    /// on a cache hit. Publication writes a temp file then renames it, so
    /// concurrent writers never expose a partial file.
    pub fn get_or_compute(&self, g: &Graph, spec: &RelationSpec) -> Result<(SimilarityMatrix, bool)> {
        let path = self.path_for(g, spec);
        if path.exists() {
            return Ok((read_similarity(g, &path)?, true));
        }
        let s = super::compute_similarity(g, spec)?;
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        write_similarity(&s, g, &tmp)?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        Ok((s, false))
    }
}
