use std::fs;
use std::io::Write;
use std::path::Path;

use super::{EmbeddingMatrix, EmbeddingSource};
use crate::error::{Error, Result};
use crate::graph::{read_node_table, Graph};

/// Reads a `node,e1,...,ed` table whose node column covers exactly the graph's ids.
pub fn load_embedding(path: &Path, g: &Graph) -> Result<EmbeddingMatrix> {
    let (_, values) = read_node_table(path, g)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(EmbeddingMatrix::new(values, EmbeddingSource::File { name }))
}

/// Writes rows in graph index order with shortest round-trip float formatting.
pub fn save_embedding(z: &EmbeddingMatrix, g: &Graph, path: &Path) -> Result<()> {
    if z.node_count() != g.node_count() {
        return Err(Error::Reference(format!(
            "embedding has {} rows for {} nodes",
            z.node_count(),
            g.node_count()
        )));
    }
    let io = |e| Error::io(path, e);
    let mut w = std::io::BufWriter::new(fs::File::create(path).map_err(io)?);
    let header: Vec<String> = std::iter::once("node".to_string())
        .chain((1..=z.dim()).map(|j| format!("e{j}")))
        .collect();
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for (u, row) in z.values().outer_iter().enumerate() {
        write!(w, "{}", g.node_ids()[u]).map_err(io)?;
        for x in row {
            write!(w, ",{x:?}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
