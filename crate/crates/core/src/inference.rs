//! Tree reconstruction from a similarity matrix (minimum spanning tree) and
//! rooted-tree isomorphism checks.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::similarity::{self, SimilarityMatrix};
use crate::tree::{self, EmbedConfig, RootedTree};
use crate::varifold::KernelParams;

/// A weighted spanning tree over named nodes, oriented away from `root`.
#[derive(Debug, Clone, PartialEq)]
pub struct InferredTree {
    node_ids: Vec<String>,
    root: usize,
    parent: Vec<Option<usize>>,
    /// `(parent, child, weight)` in breadth-first order from the root.
    edges: Vec<(usize, usize, f64)>,
}

impl InferredTree {
    /// Validates a parent array with per-node incoming edge weights.
    pub fn new(node_ids: Vec<String>, parent: Vec<Option<usize>>, weights: Vec<f64>) -> Result<Self> {
        if node_ids.len() != parent.len() || weights.len() != parent.len() {
            return Err(Error::Format("ids, parents and weights differ in length".into()));
        }
        let unique: BTreeSet<&String> = node_ids.iter().collect();
        if unique.len() != node_ids.len() {
            return Err(Error::Format("duplicate node id".into()));
        }
        let tree = RootedTree::new(parent.clone())?;
        let mut edges = Vec::with_capacity(parent.len().saturating_sub(1));
        for v in tree.bfs_order() {
            if let Some(p) = parent[v] {
                let w = weights[v];
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::InvalidTree(format!("edge weight {w} into node {v} is not positive")));
                }
                edges.push((p, v, w));
            }
        }
        Ok(Self {
            node_ids,
            root: tree.root(),
            parent,
            edges,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn root_id(&self) -> &str {
        &self.node_ids[self.root]
    }

    pub fn parent(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Incoming edge weight of every node; 0 for the root.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.node_count()];
        for &(_, c, x) in &self.edges {
            w[c] = x;
        }
        w
    }

    pub fn to_rooted(&self) -> RootedTree {
        RootedTree::new(self.parent.clone()).expect("validated on construction")
    }
}

/// Kruskal's algorithm over the complete graph; ties broken by
/// `(weight, min index, max index)`. Returns `(min, max)` index pairs.
pub fn mst_edges(m: &SimilarityMatrix) -> Vec<(usize, usize)> {
    let n = m.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((m.get(i, j), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf: Vec<usize> = (0..n).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for (_, i, j) in pairs {
        let (a, b) = (find(&mut uf, i), find(&mut uf, j));
        if a != b {
            uf[a.max(b)] = a.min(b);
            out.push((i, j));
            if out.len() + 1 == n {
                break;
            }
        }
    }
    out
}

/// Minimum spanning tree of `m`, rooted at the node named `root`.
pub fn reconstruct(m: &SimilarityMatrix, root: &str) -> Result<InferredTree> {
    let n = m.len();
    for r in 0..n {
        for c in 0..n {
            if !m.get(r, c).is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    let root_idx = m
        .index_of(root)
        .ok_or_else(|| Error::InvalidArgument(format!("root id {root:?} not in matrix")))?;
    let mut adj = vec![Vec::new(); n];
    for (i, j) in mst_edges(m) {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut parent = vec![None; n];
    let mut weights = vec![0.0; n];
    let mut seen = vec![false; n];
    seen[root_idx] = true;
    let mut queue = VecDeque::from([root_idx]);
    while let Some(v) = queue.pop_front() {
        adj[v].sort_unstable();
        for &c in &adj[v] {
            if !seen[c] {
                seen[c] = true;
                parent[c] = Some(v);
                weights[c] = m.get(v, c);
                queue.push_back(c);
            }
        }
    }
    InferredTree::new(m.ids().to_vec(), parent, weights)
}

/// How [`is_isomorphic`] compares trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsoMode {
    /// Same edge set as unordered pairs of node ids.
    #[default]
    Strict,
    /// Same rooted shape, ignoring node identity.
    Relaxed,
}

/// Canonical encoding of the rooted shape: each node is `(` followed by its
/// children's encodings in sorted order and `)`.
pub fn canonical_form(t: &RootedTree) -> String {
    let mut enc: Vec<String> = vec![String::new(); t.node_count()];
    for &v in t.bfs_order().iter().rev() {
        let mut kids: Vec<String> = t.children(v).iter().map(|&c| std::mem::take(&mut enc[c])).collect();
        kids.sort_unstable();
        enc[v] = format!("({})", kids.concat());
    }
    std::mem::take(&mut enc[t.root()])
}

fn id_edges(t: &RootedTree, ids: &[String]) -> BTreeSet<(String, String)> {
    t.edges()
        .into_iter()
        .map(|(p, c)| {
            let (a, b) = (ids[p].clone(), ids[c].clone());
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        })
        .collect()
}

/// Compares two rooted trees whose nodes carry ids.
pub fn trees_isomorphic(
    a: &RootedTree,
    a_ids: &[String],
    b: &RootedTree,
    b_ids: &[String],
    mode: IsoMode,
) -> Result<bool> {
    if a.node_count() != b.node_count() {
        return Err(Error::NodeCountMismatch(a.node_count(), b.node_count()));
    }
    if a_ids.len() != a.node_count() || b_ids.len() != b.node_count() {
        return Err(Error::InvalidArgument("one id per node required".into()));
    }
    Ok(match mode {
        IsoMode::Strict => id_edges(a, a_ids) == id_edges(b, b_ids),
        IsoMode::Relaxed => canonical_form(a) == canonical_form(b),
    })
}

/// Compares an inferred tree with a ground-truth tree whose nodes are named
/// by `ids`.
pub fn is_isomorphic(a: &InferredTree, b: &RootedTree, ids: &[String], mode: IsoMode) -> Result<bool> {
    trees_isomorphic(&a.to_rooted(), a.node_ids(), b, ids, mode)
}

/// Settings of [`recovery_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub trees: usize,
    pub nodes: usize,
    pub dim: usize,
    pub sigmas: Vec<f64>,
    /// `σ_t / σ_x`.
    pub ratio: f64,
    pub max_children: usize,
    pub embed: EmbedConfig,
    pub seed: u64,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            trees: 20,
            nodes: 10,
            dim: 3,
            sigmas: vec![0.05],
            ratio: 1.0,
            max_children: 3,
            embed: EmbedConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryRow {
    pub trial: usize,
    pub sigma: f64,
    pub success: bool,
    pub four_point_defect: f64,
}

/// Independent seed for trial `t`.
pub fn trial_seed(seed: u64, t: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(t as u64 + 1);
    rng.random()
}

/// Generates, embeds, measures and reconstructs `cfg.trees` random trees at
/// every σ, reporting strict-isomorphism success per (trial, σ).
pub fn recovery_experiment(cfg: &RecoveryConfig, exec: Exec) -> Result<Vec<RecoveryRow>> {
    if cfg.trees == 0 || cfg.nodes == 0 || cfg.dim == 0 || cfg.max_children == 0 {
        return Err(Error::InvalidArgument("experiment counts must be positive".into()));
    }
    let mut sigmas = cfg.sigmas.clone();
    sigmas.sort_by(|a, b| b.total_cmp(a));
    similarity::check_ladder(&sigmas).map_err(|_| {
        Error::InvalidArgument("sigmas must be distinct, positive and finite".into())
    })?;
    let step = cfg.embed.step.min(sigmas.last().unwrap() / 5.0);
    let embed_cfg = EmbedConfig { step, ..cfg.embed.clone() };

    let trial = |t: usize| -> Result<Vec<RecoveryRow>> {
        let seed = trial_seed(cfg.seed, t);
        let rt = tree::random_tree(cfg.nodes, cfg.max_children, seed)?;
        let emb = tree::embed(&rt, cfg.dim, &embed_cfg, seed)?;
        let ids = similarity::node_ids(cfg.nodes);
        let edges = rt.edges();
        cfg.sigmas
            .iter()
            .map(|&sigma| {
                let k = KernelParams::coupled(sigma, cfg.ratio)?;
                let m = similarity::delta_matrix(&emb, &k, Exec::Sequential)?;
                let inferred = reconstruct(&m, &ids[rt.root()])?;
                Ok(RecoveryRow {
                    trial: t,
                    sigma,
                    success: is_isomorphic(&inferred, &rt, &ids, IsoMode::Strict)?,
                    four_point_defect: similarity::four_point_defect(&m, Some(&edges)),
                })
            })
            .collect()
    };
    let per_trial: Vec<Vec<RecoveryRow>> = match exec {
        Exec::Sequential => (0..cfg.trees).map(trial).collect::<Result<_>>()?,
        Exec::Parallel => (0..cfg.trees).into_par_iter().map(trial).collect::<Result<_>>()?,
    };
    Ok(per_trial.into_iter().flatten().collect())
}

/// Success rate per σ, in first-appearance order of σ.
pub fn success_rates(rows: &[RecoveryRow]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, usize, usize)> = Vec::new();
    for r in rows {
        let slot = match out.iter().position(|o| o.0 == r.sigma) {
            Some(i) => i,
            None => {
                out.push((r.sigma, 0, 0));
                out.len() - 1
            }
        };
        out[slot].1 += r.success as usize;
        out[slot].2 += 1;
    }
    out.into_iter().map(|(s, ok, n)| (s, ok as f64 / n as f64)).collect()
}
