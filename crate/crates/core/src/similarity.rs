//! Node similarity Δ(i, j): the squared varifold distance between the
//! root-to-node path curves of two nodes, and the diagnostics that measure
//! how close a Δ matrix is to a tree metric.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::DiscreteVarifold;
use crate::inference;
use crate::tree::{EmbeddedTree, RootedTree};
use crate::varifold::{self, KernelParams};

/// A symmetric, zero-diagonal, nonnegative matrix over named nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    values: Vec<f64>,
    params: Option<KernelParams>,
}

impl SimilarityMatrix {
    /// Validates and wraps a row-major `n × n` buffer.
    pub fn new(ids: Vec<String>, values: Vec<f64>, params: Option<KernelParams>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n * n {
            return Err(Error::Format(format!(
                "{n} ids but {} matrix entries",
                values.len()
            )));
        }
        let scale = values
            .iter()
            .filter(|v| v.is_finite())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        for r in 0..n {
            for c in 0..n {
                let v = values[r * n + c];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
                if (v - values[c * n + r]).abs() > 1e-12 * scale {
                    return Err(Error::Asymmetric { row: r, col: c });
                }
                if v < 0.0 {
                    return Err(Error::Format(format!("negative entry at ({r}, {c})")));
                }
            }
            if values[r * n + r] != 0.0 {
                return Err(Error::Format(format!("nonzero diagonal at {r}")));
            }
        }
        Ok(Self { ids, values, params })
    }

    pub fn from_rows(ids: Vec<String>, rows: &[Vec<f64>], params: Option<KernelParams>) -> Result<Self> {
        let n = ids.len();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::Format("matrix is not square".into()));
        }
        Self::new(ids, rows.concat(), params)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn params(&self) -> Option<KernelParams> {
        self.params
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.len().max(1)).map(<[f64]>::to_vec).collect()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }
}

/// Node ids of an embedded tree are the decimal node indices.
pub fn node_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Δ(i, j) from the two full path varifolds (the root's path is empty).
pub fn delta(emb: &EmbeddedTree, i: usize, j: usize, k: &KernelParams) -> Result<f64> {
    if i == j {
        return Ok(0.0);
    }
    let a = emb.path_varifold(i)?;
    let b = emb.path_varifold(j)?;
    varifold::distance_sq(&a, &b, k)
}

/// Inner products between all edge varifolds, indexed by child node.
struct EdgeGram {
    /// Position of a node's incoming edge in `child`.
    slot: Vec<Option<usize>>,
    g: Vec<Vec<f64>>,
}

impl EdgeGram {
    fn new(emb: &EmbeddedTree, k: &KernelParams, exec: Exec) -> Result<Self> {
        let edges = emb.tree().edges();
        let child: Vec<usize> = edges.iter().map(|&(_, c)| c).collect();
        let mut slot = vec![None; emb.node_count()];
        for (s, &c) in child.iter().enumerate() {
            slot[c] = Some(s);
        }
        let vars: Vec<DiscreteVarifold> = child
            .iter()
            .map(|&c| emb.edge_varifold(c).expect("non-root edge"))
            .collect();
        let g = varifold::gram(&vars, k, exec)?;
        Ok(Self { slot, g })
    }

    fn inner(&self, c1: usize, c2: usize) -> f64 {
        self.g[self.slot[c1].unwrap()][self.slot[c2].unwrap()]
    }
}

/// Edges (by child node) on the path from `ancestor` (exclusive) down to `node`.
fn edges_below(tree: &RootedTree, ancestor: usize, node: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut v = node;
    while v != ancestor {
        out.push(v);
        v = tree.parent(v).expect("ancestor lies on the root path");
    }
    out.reverse();
    out
}

/// Δ(i, j) from the edge Gram matrix: the shared prefix above the lowest
/// common ancestor cancels exactly, leaving the two branches below it.
fn delta_from_edges(eg: &EdgeGram, tree: &RootedTree, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Ok(0.0);
    }
    let c = tree.lowest_common_ancestor(i, j);
    let a = edges_below(tree, c, i);
    let b = edges_below(tree, c, j);
    let block = |x: &[usize], y: &[usize]| -> f64 {
        x.iter()
            .map(|&e| y.iter().map(|&f| eg.inner(e, f)).sum::<f64>())
            .sum()
    };
    varifold::distance_sq_from_parts(block(&a, &a), block(&b, &b), block(&a, &b))
}

fn delta_matrix_from_edges(
    emb: &EmbeddedTree,
    eg: &EdgeGram,
    k: &KernelParams,
    exec: Exec,
) -> Result<SimilarityMatrix> {
    let n = emb.node_count();
    let tree = emb.tree();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let eval = |&(i, j): &(usize, usize)| delta_from_edges(eg, tree, i, j);
    let vals: Vec<f64> = match exec {
        Exec::Sequential => pairs.iter().map(eval).collect::<Result<_>>()?,
        Exec::Parallel => pairs.par_iter().map(eval).collect::<Result<_>>()?,
    };
    let mut values = vec![0.0; n * n];
    for (&(i, j), v) in pairs.iter().zip(vals) {
        values[i * n + j] = v;
        values[j * n + i] = v;
    }
    Ok(SimilarityMatrix {
        ids: node_ids(n),
        values,
        params: Some(*k),
    })
}

/// Δ over all node pairs of an embedded tree.
///
/// Each edge varifold is paired with every other edge once; a path's inner
/// products are sums of these blocks, so shared prefixes are never
/// re-evaluated.
pub fn delta_matrix(emb: &EmbeddedTree, k: &KernelParams, exec: Exec) -> Result<SimilarityMatrix> {
    let eg = EdgeGram::new(emb, k, exec)?;
    delta_matrix_from_edges(emb, &eg, k, exec)
}

/// Δ between arbitrary curves (each given as a varifold), e.g. recovered
/// cell trajectories. Norms are computed once and reused across pairs.
pub fn curve_delta_matrix(
    ids: Vec<String>,
    curves: &[DiscreteVarifold],
    k: &KernelParams,
    exec: Exec,
) -> Result<SimilarityMatrix> {
    let n = curves.len();
    if ids.len() != n {
        return Err(Error::InvalidArgument("one id per curve required".into()));
    }
    let g = varifold::gram(curves, k, exec)?;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = varifold::distance_sq_from_parts(g[i][i], g[j][j], g[i][j])?;
            values[i * n + j] = d;
            values[j * n + i] = d;
        }
    }
    Ok(SimilarityMatrix {
        ids,
        values,
        params: Some(*k),
    })
}

/// Relative gap between Δ(i, j) and the sum of Δ along the tree path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionError {
    pub relative: f64,
    /// Set when the edge sum underflowed to zero; `relative` is then
    /// infinite.
    pub degenerate: bool,
}

fn decomposition(direct: f64, sum: f64) -> DecompositionError {
    if sum > 0.0 && sum.is_finite() {
        DecompositionError {
            relative: (direct - sum).abs() / sum,
            degenerate: false,
        }
    } else {
        DecompositionError {
            relative: f64::INFINITY,
            degenerate: true,
        }
    }
}

/// `|Δ(i, j) − Σ_k Δ(i_k, i_{k+1})| / Σ_k Δ(i_k, i_{k+1})` along the tree
/// path from `i` to `j`, every term evaluated from full path varifolds.
pub fn path_decomposition_error(
    emb: &EmbeddedTree,
    i: usize,
    j: usize,
    k: &KernelParams,
) -> Result<DecompositionError> {
    if i == j {
        return Err(Error::InvalidArgument("decomposition error needs i ≠ j".into()));
    }
    let path = emb.tree().tree_path(i, j);
    let mut sum = 0.0;
    for w in path.windows(2) {
        sum += delta(emb, w[0], w[1], k)?;
    }
    Ok(decomposition(delta(emb, i, j, k)?, sum))
}

/// Same quantity read off a precomputed Δ matrix of the tree's nodes.
pub fn decomposition_error_from_matrix(
    m: &SimilarityMatrix,
    tree: &RootedTree,
    i: usize,
    j: usize,
) -> DecompositionError {
    let path = tree.tree_path(i, j);
    let sum: f64 = path.windows(2).map(|w| m.get(w[0], w[1])).sum();
    decomposition(m.get(i, j), sum)
}

/// `sup_e Δ(e)` over the given edges (index pairs), or over the edges of
/// the matrix's minimum spanning tree when none are given.
pub fn edge_normalizer(m: &SimilarityMatrix, edges: Option<&[(usize, usize)]>) -> f64 {
    match edges {
        Some(es) => es.iter().map(|&(a, b)| m.get(a, b)).fold(0.0, f64::max),
        None => inference::mst_edges(m)
            .iter()
            .map(|&(a, b)| m.get(a, b))
            .fold(0.0, f64::max),
    }
}

fn normalize(raw: f64, sup: f64) -> f64 {
    if sup > 0.0 {
        raw / sup
    } else {
        raw
    }
}

/// Worst triangle-inequality excess `max Δ(i,k) − Δ(i,j) − Δ(j,k)` over
/// distinct triples, divided by the edge normalizer.
///
/// Returns `-∞` when there are fewer than three nodes (vacuous).
pub fn triangle_defect(m: &SimilarityMatrix, edges: Option<&[(usize, usize)]>) -> f64 {
    let n = m.len();
    if n < 3 {
        return f64::NEG_INFINITY;
    }
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for k in 0..n {
            if k == i {
                continue;
            }
            let dik = m.get(i, k);
            for j in 0..n {
                if j != i && j != k {
                    worst = worst.max(dik - m.get(i, j) - m.get(j, k));
                }
            }
        }
    }
    normalize(worst, edge_normalizer(m, edges))
}

/// Worst four-point excess over all quadruples, divided by the edge
/// normalizer. For each 4-set the three pair sums are compared; the excess
/// is the largest sum minus the runner-up, which vanishes exactly for tree
/// metrics.
///
/// Returns `-∞` when there are fewer than four nodes (vacuous).
pub fn four_point_defect(m: &SimilarityMatrix, edges: Option<&[(usize, usize)]>) -> f64 {
    let n = m.len();
    if n < 4 {
        return f64::NEG_INFINITY;
    }
    let mut worst = f64::NEG_INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    let mut s = [
                        m.get(i, j) + m.get(k, l),
                        m.get(i, k) + m.get(j, l),
                        m.get(i, l) + m.get(j, k),
                    ];
                    s.sort_by(f64::total_cmp);
                    worst = worst.max(s[2] - s[1]);
                }
            }
        }
    }
    normalize(worst, edge_normalizer(m, edges))
}

/// Which adjacency pattern a [`lemma_probe`] triple forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LemmaConfig {
    /// `i` parent of `j`, `j` parent of `kk`.
    Chain,
    /// `j` and `kk` both children of `i`.
    Branching,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaProbe {
    pub config: LemmaConfig,
    pub ratio: f64,
}

/// Edges (by child node) of the two curves compared by the probe.
fn lemma_edges(tree: &RootedTree, i: usize, j: usize, kk: usize) -> Result<(LemmaConfig, usize, usize)> {
    let n = tree.node_count();
    if i >= n || j >= n || kk >= n || j == kk {
        return Err(Error::NotLemmaConfiguration(i, j, kk));
    }
    if tree.parent(j) == Some(i) && tree.parent(kk) == Some(j) {
        Ok((LemmaConfig::Chain, j, kk))
    } else if tree.parent(j) == Some(i) && tree.parent(kk) == Some(i) {
        Ok((LemmaConfig::Branching, j, kk))
    } else {
        Err(Error::NotLemmaConfiguration(i, j, kk))
    }
}

/// `<μ_A, μ_B> / (|μ_A|² + |μ_B|²)` for the two edge curves of a chain
/// `i < j < kk` or a branching `i < j, i < kk`.
pub fn lemma_probe(
    emb: &EmbeddedTree,
    i: usize,
    j: usize,
    kk: usize,
    k: &KernelParams,
) -> Result<LemmaProbe> {
    let (config, ea, eb) = lemma_edges(emb.tree(), i, j, kk)?;
    let a = emb.edge_varifold(ea).unwrap();
    let b = emb.edge_varifold(eb).unwrap();
    let cross = varifold::inner(&a, &b, k)?;
    let ratio = cross / (varifold::norm_sq(&a, k) + varifold::norm_sq(&b, k));
    Ok(LemmaProbe { config, ratio })
}

/// Every chain and branching triple of the tree.
pub fn lemma_triples(tree: &RootedTree) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for j in 0..tree.node_count() {
        if let Some(i) = tree.parent(j) {
            for &kk in tree.children(j) {
                out.push((i, j, kk));
            }
        }
        let kids = tree.children(j);
        for (a, &x) in kids.iter().enumerate() {
            for &y in &kids[a + 1..] {
                out.push((j, x, y));
            }
        }
    }
    out
}

/// One rung of a bandwidth sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub sigma_x: f64,
    pub sigma_t: f64,
    pub max_decomp_err: f64,
    pub triangle_defect: f64,
    pub four_point_defect: f64,
    pub max_lemma_ratio: f64,
}

/// Geometric ladder `σ_0 · 2^{-k}`, `k = 0..levels`.
pub fn default_ladder(sigma0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| sigma0 * 0.5f64.powi(k as i32)).collect()
}

pub fn check_ladder(sigmas: &[f64]) -> Result<()> {
    if sigmas.is_empty() {
        return Err(Error::InvalidArgument("empty sigma ladder".into()));
    }
    if sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument("sigmas must be positive and finite".into()));
    }
    if sigmas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("sigma ladder must be strictly decreasing".into()));
    }
    Ok(())
}

/// Runs every diagnostic at `σ_x = σ`, `σ_t = ratio · σ` for each rung.
///
/// Edges are re-subdivided to at most `σ_min / 5` first when the embedding
/// is coarser than that.
pub fn convergence_sweep(
    emb: &EmbeddedTree,
    sigmas: &[f64],
    ratio: f64,
    exec: Exec,
) -> Result<Vec<SweepRow>> {
    check_ladder(sigmas)?;
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidArgument(format!("ratio must be positive, got {ratio}")));
    }
    let step = sigmas.last().unwrap() / 5.0;
    let resampled;
    let emb = if emb.max_segment_length() > step * (1.0 + 1e-9) {
        resampled = emb.resampled(step)?;
        &resampled
    } else {
        emb
    };
    let tree = emb.tree();
    let n = emb.node_count();
    let edges: Vec<(usize, usize)> = tree.edges();
    let triples = lemma_triples(tree);

    sigmas
        .iter()
        .map(|&sigma| {
            let k = KernelParams::coupled(sigma, ratio)?;
            let eg = EdgeGram::new(emb, &k, exec)?;
            let m = delta_matrix_from_edges(emb, &eg, &k, exec)?;
            let mut max_decomp_err: f64 = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    max_decomp_err =
                        max_decomp_err.max(decomposition_error_from_matrix(&m, tree, i, j).relative);
                }
            }
            let max_lemma_ratio = triples
                .iter()
                .map(|&(i, j, kk)| {
                    let (_, a, b) = lemma_edges(tree, i, j, kk).unwrap();
                    eg.inner(a, b) / (eg.inner(a, a) + eg.inner(b, b))
                })
                .fold(0.0, f64::max);
            Ok(SweepRow {
                sigma_x: k.sigma_x(),
                sigma_t: k.sigma_t(),
                max_decomp_err,
                triangle_defect: triangle_defect(&m, Some(&edges)),
                four_point_defect: four_point_defect(&m, Some(&edges)),
                max_lemma_ratio,
            })
        })
        .collect()
}
