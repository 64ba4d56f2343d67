//! File formats: JSON for curves, trees, inferred trees and cell samples;
//! CSV for matrices and result tables. Floats are written in shortest
//! round-trip form, so every file re-reads to identical values.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PolygonalCurve;
use crate::inference::{InferredTree, RecoveryRow};
use crate::similarity::{SimilarityMatrix, SweepRow};
use crate::tree::{EmbeddedTree, RootedTree};
use crate::velocity::CellSample;

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn curve_to_json(c: &PolygonalCurve) -> Result<String> {
    to_json(c)
}

pub fn curve_from_json(s: &str) -> Result<PolygonalCurve> {
    Ok(serde_json::from_str(s)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRepr {
    from: usize,
    to: usize,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeRepr {
    dim: usize,
    root: usize,
    parent: Vec<Option<usize>>,
    positions: Vec<Vec<f64>>,
    edges: Vec<EdgeRepr>,
}

pub fn tree_to_json(emb: &EmbeddedTree) -> Result<String> {
    let t = emb.tree();
    let repr = TreeRepr {
        dim: emb.dim(),
        root: t.root(),
        parent: t.parents().to_vec(),
        positions: emb.positions().to_vec(),
        edges: t
            .edges()
            .into_iter()
            .map(|(p, c)| EdgeRepr {
                from: p,
                to: c,
                points: emb.edge_curve(c).expect("non-root edge").rows(),
            })
            .collect(),
    };
    to_json(&repr)
}

pub fn tree_from_json(s: &str) -> Result<EmbeddedTree> {
    let repr: TreeRepr = serde_json::from_str(s)?;
    let tree = RootedTree::new(repr.parent)?;
    if tree.root() != repr.root {
        return Err(Error::Format(format!(
            "field `root` is {} but the parent array roots at {}",
            repr.root,
            tree.root()
        )));
    }
    let n = tree.node_count();
    let mut edges: Vec<Option<PolygonalCurve>> = vec![None; n];
    for (k, e) in repr.edges.into_iter().enumerate() {
        if e.to >= n || tree.parent(e.to) != Some(e.from) {
            return Err(Error::Format(format!(
                "field `edges[{k}]`: ({}, {}) is not a tree edge",
                e.from, e.to
            )));
        }
        if edges[e.to].is_some() {
            return Err(Error::Format(format!("field `edges[{k}]`: duplicate edge into {}", e.to)));
        }
        let curve = PolygonalCurve::from_rows(repr.dim, &e.points)
            .map_err(|err| Error::Format(format!("field `edges[{k}].points`: {err}")))?;
        edges[e.to] = Some(curve);
    }
    if let Some(v) = (0..n).find(|&v| v != tree.root() && edges[v].is_none()) {
        return Err(Error::Format(format!("field `edges`: no edge into node {v}")));
    }
    EmbeddedTree::from_parts(tree, repr.dim, repr.positions, edges)
}

pub fn read_tree(path: &Path) -> Result<EmbeddedTree> {
    tree_from_json(&fs::read_to_string(path)?)
}

pub fn write_tree(path: &Path, emb: &EmbeddedTree) -> Result<()> {
    write_file(path, tree_to_json(emb)?.as_bytes())
}

pub fn read_curve(path: &Path) -> Result<PolygonalCurve> {
    curve_from_json(&fs::read_to_string(path)?)
}

pub fn write_curve(path: &Path, c: &PolygonalCurve) -> Result<()> {
    write_file(path, curve_to_json(c)?.as_bytes())
}

/// Header of node ids, then one row per node.
pub fn write_matrix<W: Write>(w: W, m: &SimilarityMatrix) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(m.ids())?;
    for r in 0..m.len() {
        out.write_record((0..m.len()).map(|c| fmt_float(m.get(r, c))))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(r: R) -> Result<SimilarityMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(r);
    let ids: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    let n = ids.len();
    let mut rows = Vec::with_capacity(n);
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != n {
            return Err(Error::Format(format!(
                "matrix row {i} has {} entries, expected {n}",
                rec.len()
            )));
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, s)| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("matrix entry ({i}, {j}) is not a number: {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.len() != n {
        return Err(Error::Format(format!("matrix has {} rows for {n} ids", rows.len())));
    }
    SimilarityMatrix::from_rows(ids, &rows, None)
}

pub fn matrix_to_string(m: &SimilarityMatrix) -> Result<String> {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_matrix_file(path: &Path, m: &SimilarityMatrix) -> Result<()> {
    write_file(path, matrix_to_string(m)?.as_bytes())
}

pub fn read_matrix_file(path: &Path) -> Result<SimilarityMatrix> {
    read_matrix(fs::File::open(path)?)
}

/// Shortest round-trip text of `x`; scientific form outside `[1e-4, 1e15)`.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn write_table<W: Write>(w: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()?;
    Ok(())
}

fn read_table<R: Read>(r: R, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let got: Vec<&str> = rdr.headers()?.iter().collect();
    if got != header {
        return Err(Error::Format(format!("expected columns {header:?}, found {got:?}")));
    }
    rdr.records()
        .map(|rec| Ok(rec?.iter().map(str::to_string).collect()))
        .collect()
}

fn num(s: &str, column: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("column `{column}`: not a number: {s:?}")))
}

pub const SWEEP_COLUMNS: [&str; 6] = [
    "sigma_x",
    "sigma_t",
    "max_decomp_err",
    "triangle_defect",
    "four_point_defect",
    "max_lemma_ratio",
];

pub fn write_sweep<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    write_table(
        w,
        &SWEEP_COLUMNS,
        rows.iter().map(|r| {
            [
                r.sigma_x,
                r.sigma_t,
                r.max_decomp_err,
                r.triangle_defect,
                r.four_point_defect,
                r.max_lemma_ratio,
            ]
            .iter()
            .map(|&x| fmt_float(x))
            .collect()
        }),
    )
}

pub fn read_sweep<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    read_table(r, &SWEEP_COLUMNS)?
        .into_iter()
        .map(|rec| {
            let v = rec
                .iter()
                .zip(SWEEP_COLUMNS)
                .map(|(s, c)| num(s, c))
                .collect::<Result<Vec<f64>>>()?;
            Ok(SweepRow {
                sigma_x: v[0],
                sigma_t: v[1],
                max_decomp_err: v[2],
                triangle_defect: v[3],
                four_point_defect: v[4],
                max_lemma_ratio: v[5],
            })
        })
        .collect()
}

pub const EXPERIMENT_COLUMNS: [&str; 4] = ["trial", "sigma", "success", "four_point_defect"];

pub fn write_experiment<W: Write>(w: W, rows: &[RecoveryRow]) -> Result<()> {
    write_table(
        w,
        &EXPERIMENT_COLUMNS,
        rows.iter().map(|r| {
            vec![
                r.trial.to_string(),
                fmt_float(r.sigma),
                r.success.to_string(),
                fmt_float(r.four_point_defect),
            ]
        }),
    )
}

pub fn read_experiment<R: Read>(r: R) -> Result<Vec<RecoveryRow>> {
    read_table(r, &EXPERIMENT_COLUMNS)?
        .into_iter()
        .map(|rec| {
            Ok(RecoveryRow {
                trial: rec[0]
                    .parse()
                    .map_err(|_| Error::Format(format!("column `trial`: {:?}", rec[0])))?,
                sigma: num(&rec[1], "sigma")?,
                success: rec[2]
                    .parse()
                    .map_err(|_| Error::Format(format!("column `success`: {:?}", rec[2])))?,
                four_point_defect: num(&rec[3], "four_point_defect")?,
            })
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InferredEdgeRepr {
    from: String,
    to: String,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InferredRepr {
    root: String,
    node_ids: Vec<String>,
    parent: Vec<Option<usize>>,
    edges: Vec<InferredEdgeRepr>,
}

pub fn inferred_to_json(t: &InferredTree) -> Result<String> {
    let ids = t.node_ids();
    to_json(&InferredRepr {
        root: t.root_id().to_string(),
        node_ids: ids.to_vec(),
        parent: t.parent().to_vec(),
        edges: t
            .edges()
            .iter()
            .map(|&(p, c, w)| InferredEdgeRepr {
                from: ids[p].clone(),
                to: ids[c].clone(),
                weight: w,
            })
            .collect(),
    })
}

pub fn inferred_from_json(s: &str) -> Result<InferredTree> {
    let repr: InferredRepr = serde_json::from_str(s)?;
    let n = repr.node_ids.len();
    let index = |id: &str, field: &str| {
        repr.node_ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| Error::Format(format!("field `{field}`: unknown node id {id:?}")))
    };
    let mut weights = vec![0.0; n];
    for (k, e) in repr.edges.iter().enumerate() {
        let (p, c) = (index(&e.from, "edges.from")?, index(&e.to, "edges.to")?);
        if repr.parent.get(c).copied().flatten() != Some(p) {
            return Err(Error::Format(format!("field `edges[{k}]` disagrees with `parent`")));
        }
        weights[c] = e.weight;
    }
    let t = InferredTree::new(repr.node_ids.clone(), repr.parent, weights)?;
    if t.root_id() != repr.root {
        return Err(Error::Format(format!("field `root` is {:?}, parent array roots at {:?}", repr.root, t.root_id())));
    }
    if repr.edges.len() + 1 != n {
        return Err(Error::Format("field `edges` must list every non-root node once".into()));
    }
    Ok(t)
}

pub fn write_inferred(path: &Path, t: &InferredTree) -> Result<()> {
    write_file(path, inferred_to_json(t)?.as_bytes())
}

pub fn read_inferred(path: &Path) -> Result<InferredTree> {
    inferred_from_json(&fs::read_to_string(path)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellRepr {
    p: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellsRepr {
    dim: usize,
    cells: Vec<CellRepr>,
}

pub fn cells_to_json(dim: usize, cells: &[CellSample]) -> Result<String> {
    to_json(&CellsRepr {
        dim,
        cells: cells
            .iter()
            .map(|c| CellRepr {
                p: c.position.clone(),
                v: c.velocity.clone(),
            })
            .collect(),
    })
}

pub fn cells_from_json(s: &str) -> Result<(usize, Vec<CellSample>)> {
    let repr: CellsRepr = serde_json::from_str(s)?;
    let mut out = Vec::with_capacity(repr.cells.len());
    for (k, c) in repr.cells.into_iter().enumerate() {
        if c.p.len() != repr.dim || c.v.len() != repr.dim {
            return Err(Error::Format(format!("field `cells[{k}]`: expected {} coordinates", repr.dim)));
        }
        if c.p.iter().chain(&c.v).any(|x| !x.is_finite()) {
            return Err(Error::Format(format!("field `cells[{k}]`: non-finite entry")));
        }
        out.push(CellSample {
            position: c.p,
            velocity: c.v,
        });
    }
    Ok((repr.dim, out))
}

pub fn write_cells(path: &Path, dim: usize, cells: &[CellSample]) -> Result<()> {
    write_file(path, cells_to_json(dim, cells)?.as_bytes())
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    write_file(path, bytes)
}
