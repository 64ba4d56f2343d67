//! Rooted trees, straight-edge embeddings in R^n, root-to-node path curves,
//! and grid checks of the three geometric assumptions on an embedding.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{self, DiscreteVarifold, PolygonalCurve, Side, JUNCTION_TOL};

/// Tolerance used by the assumption validators.
pub const VALIDATOR_TOL: f64 = 1e-9;

/// A rooted tree on nodes `0..n`, stored as a parent array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RootedTree {
    parent: Vec<Option<usize>>,
    root: usize,
    children: Vec<Vec<usize>>,
}

impl RootedTree {
    pub fn new(parent: Vec<Option<usize>>) -> Result<Self> {
        let n = parent.len();
        if n == 0 {
            return Err(Error::InvalidTree("tree has no nodes".into()));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::InvalidTree(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = *p {
                if p >= n {
                    return Err(Error::InvalidTree(format!("node {i} has parent {p} out of range")));
                }
                if p == i {
                    return Err(Error::InvalidTree(format!("node {i} is its own parent")));
                }
                children[p].push(i);
            }
        }
        let root = roots[0];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            for &c in &children[v] {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidTree(format!(
                "node {i} is not reachable from the root (cycle)"
            )));
        }
        Ok(Self {
            parent,
            root,
            children,
        })
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parent
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// `(parent, child)` pairs in child-index order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.node_count())
            .filter_map(|c| self.parent[c].map(|p| (p, c)))
            .collect()
    }

    /// Nodes on the path from the root to `i`, both included.
    pub fn ancestry(&self, i: usize) -> Vec<usize> {
        let mut path = vec![i];
        let mut v = i;
        while let Some(p) = self.parent[v] {
            path.push(p);
            v = p;
        }
        path.reverse();
        path
    }

    pub fn depth(&self, i: usize) -> usize {
        self.ancestry(i).len() - 1
    }

    /// Nodes breadth-first from the root, children in index order.
    pub fn bfs_order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.node_count());
        let mut queue = VecDeque::from([self.root]);
        while let Some(v) = queue.pop_front() {
            out.push(v);
            queue.extend(self.children[v].iter().copied());
        }
        out
    }

    pub fn lowest_common_ancestor(&self, i: usize, j: usize) -> usize {
        let a = self.ancestry(i);
        let b = self.ancestry(j);
        let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
        a[common - 1]
    }

    /// The unique shortest path `i = i_1, …, i_N = j`.
    pub fn tree_path(&self, i: usize, j: usize) -> Vec<usize> {
        let a = self.ancestry(i);
        let b = self.ancestry(j);
        let common = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
        let mut path: Vec<usize> = a[common - 1..].iter().rev().copied().collect();
        path.extend_from_slice(&b[common..]);
        path
    }
}

/// Random recursive tree: node `i` attaches uniformly to one of the nodes
/// `0..i` that still has fewer than `max_children` children. Node 0 is the
/// root.
pub fn random_tree(node_count: usize, max_children: usize, seed: u64) -> Result<RootedTree> {
    if node_count == 0 {
        return Err(Error::InvalidArgument("node_count must be at least 1".into()));
    }
    if max_children == 0 {
        return Err(Error::InvalidArgument("max_children must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut parent = vec![None; node_count];
    let mut child_count = vec![0usize; node_count];
    for i in 1..node_count {
        let open: Vec<usize> = (0..i).filter(|&v| child_count[v] < max_children).collect();
        let p = open[rng.random_range(0..open.len())];
        parent[i] = Some(p);
        child_count[p] += 1;
    }
    RootedTree::new(parent)
}

/// Parameters of the straight-edge embedding generator.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedConfig {
    pub edge_length_min: f64,
    pub edge_length_max: f64,
    /// Minimum angle between sibling edges and between an edge and its
    /// parent edge, in degrees.
    pub min_angle_deg: f64,
    /// Maximum turn between an edge and its parent edge, in degrees.
    pub max_turn_deg: f64,
    /// Subdivision step of the edge polylines.
    pub step: f64,
    /// Minimum distance between non-adjacent edges and between nodes.
    /// `None` uses 1% of the mean edge length.
    pub clearance: Option<f64>,
    /// Whole-tree restarts before giving up.
    pub max_attempts: usize,
    /// Direction draws per edge within one attempt.
    pub tries_per_edge: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            edge_length_min: 0.5,
            edge_length_max: 1.0,
            min_angle_deg: 15.0,
            max_turn_deg: 90.0,
            step: 0.01,
            clearance: None,
            max_attempts: 50,
            tries_per_edge: 200,
        }
    }
}

impl EmbedConfig {
    pub fn effective_clearance(&self) -> f64 {
        self.clearance
            .unwrap_or(0.01 * 0.5 * (self.edge_length_min + self.edge_length_max))
    }

    fn validate(&self) -> Result<()> {
        let ok = self.edge_length_min > 0.0
            && self.edge_length_max >= self.edge_length_min
            && self.edge_length_max.is_finite()
            && self.step > 0.0
            && self.min_angle_deg >= 0.0
            && self.max_turn_deg > self.min_angle_deg
            && self.max_turn_deg <= 180.0
            && self.effective_clearance() >= 0.0
            && self.max_attempts > 0
            && self.tries_per_edge > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid embedding config {self:?}")))
        }
    }
}

/// A rooted tree with node positions and one polyline per edge, indexed by
/// the edge's child node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTree {
    tree: RootedTree,
    dim: usize,
    positions: Vec<Vec<f64>>,
    edges: Vec<Option<PolygonalCurve>>,
}

fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    geometry::dot(u, v).clamp(-1.0, 1.0).acos()
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = geometry::norm(&v);
        if n > 1e-6 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Embeds `tree` in R^`dim` with straight edges, placing nodes breadth-first
/// and rejection-sampling each edge direction against the angle and
/// clearance constraints of `cfg`.
pub fn embed(tree: &RootedTree, dim: usize, cfg: &EmbedConfig, seed: u64) -> Result<EmbeddedTree> {
    if dim < 2 {
        return Err(Error::InvalidArgument("embedding dimension must be at least 2".into()));
    }
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clearance = cfg.effective_clearance();
    let min_angle = cfg.min_angle_deg.to_radians();
    let max_turn = cfg.max_turn_deg.to_radians();
    let order = tree.bfs_order();
    let n = tree.node_count();
    let mut failure = String::new();

    'attempt: for _ in 0..cfg.max_attempts {
        let mut pos: Vec<Option<Vec<f64>>> = vec![None; n];
        let mut dirs: Vec<Option<Vec<f64>>> = vec![None; n];
        pos[tree.root()] = Some(vec![0.0; dim]);
        // Placed edges as (parent, child).
        let mut placed: Vec<(usize, usize)> = Vec::new();

        for &p in &order {
            let xp = pos[p].clone().expect("parents are placed first");
            for &c in tree.children(p) {
                let mut ok = false;
                for _ in 0..cfg.tries_per_edge {
                    let dir = random_unit(&mut rng, dim);
                    let len = rng.random_range(cfg.edge_length_min..=cfg.edge_length_max);
                    if let Some(din) = &dirs[p] {
                        let turn = angle_between(din, &dir);
                        if turn < min_angle || turn > max_turn {
                            continue;
                        }
                    }
                    let sibling_clash = tree.children(p).iter().any(|&s| {
                        dirs[s]
                            .as_ref()
                            .is_some_and(|ds| angle_between(ds, &dir) < min_angle)
                    });
                    if sibling_clash {
                        continue;
                    }
                    let xc: Vec<f64> = xp.iter().zip(&dir).map(|(a, d)| a + len * d).collect();
                    let node_clash = pos
                        .iter()
                        .flatten()
                        .any(|q| geometry::dist(q, &xc) < clearance.max(f64::MIN_POSITIVE));
                    if node_clash {
                        continue;
                    }
                    let edge_clash = placed.iter().any(|&(a, b)| {
                        a != p
                            && b != p
                            && geometry::segment_distance(
                                pos[a].as_ref().unwrap(),
                                pos[b].as_ref().unwrap(),
                                &xp,
                                &xc,
                            ) < clearance
                    });
                    if edge_clash {
                        continue;
                    }
                    pos[c] = Some(xc);
                    dirs[c] = Some(dir);
                    placed.push((p, c));
                    ok = true;
                    break;
                }
                if !ok {
                    failure = format!("could not place edge ({p}, {c})");
                    continue 'attempt;
                }
            }
        }

        let positions: Vec<Vec<f64>> = pos.into_iter().map(Option::unwrap).collect();
        let mut edges = vec![None; n];
        for &(p, c) in &placed {
            let seg = PolygonalCurve::from_rows(dim, &[positions[p].clone(), positions[c].clone()])?;
            edges[c] = Some(seg.resample(cfg.step)?);
        }
        return Ok(EmbeddedTree {
            tree: tree.clone(),
            dim,
            positions,
            edges,
        });
    }
    Err(Error::EmbeddingFailed {
        attempts: cfg.max_attempts,
        reason: failure,
    })
}

impl EmbeddedTree {
    /// Assembles and validates an embedding. `edges` is indexed by child
    /// node; the root's slot must be `None`.
    pub fn from_parts(
        tree: RootedTree,
        dim: usize,
        positions: Vec<Vec<f64>>,
        edges: Vec<Option<PolygonalCurve>>,
    ) -> Result<Self> {
        let n = tree.node_count();
        if positions.len() != n || edges.len() != n {
            return Err(Error::InvalidTree(format!(
                "{n} nodes but {} positions and {} edge slots",
                positions.len(),
                edges.len()
            )));
        }
        for (i, p) in positions.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidTree(format!("node {i} has a non-finite position")));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if geometry::dist(&positions[i], &positions[j]) == 0.0 {
                    return Err(Error::InvalidTree(format!(
                        "nodes {i} and {j} share a position"
                    )));
                }
            }
        }
        for c in 0..n {
            match (tree.parent(c), &edges[c]) {
                (None, None) => {}
                (None, Some(_)) => {
                    return Err(Error::InvalidTree(format!("root {c} has an incoming edge")))
                }
                (Some(p), None) => {
                    return Err(Error::InvalidTree(format!("edge ({p}, {c}) has no curve")))
                }
                (Some(p), Some(curve)) => {
                    if curve.dim() != dim {
                        return Err(Error::DimensionMismatch {
                            expected: dim,
                            found: curve.dim(),
                        });
                    }
                    if geometry::dist(curve.first(), &positions[p]) > JUNCTION_TOL
                        || geometry::dist(curve.last(), &positions[c]) > JUNCTION_TOL
                    {
                        return Err(Error::InvalidTree(format!(
                            "edge ({p}, {c}) endpoints do not match node positions"
                        )));
                    }
                }
            }
        }
        let emb = Self {
            tree,
            dim,
            positions,
            edges,
        };
        if let Some((a, b)) = emb.first_crossing() {
            return Err(Error::InvalidTree(format!(
                "edges into nodes {a} and {b} intersect"
            )));
        }
        Ok(emb)
    }

    pub fn tree(&self) -> &RootedTree {
        &self.tree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.tree.node_count()
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i]
    }

    /// Curve of the edge from `parent(child)` to `child`.
    pub fn edge_curve(&self, child: usize) -> Option<&PolygonalCurve> {
        self.edges[child].as_ref()
    }

    pub fn edge_curves(&self) -> &[Option<PolygonalCurve>] {
        &self.edges
    }

    /// Edge pairs `(c1, c2)` (by child node) that share no node.
    fn non_adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let edges = self.tree.edges();
        let mut out = Vec::new();
        for (a, &(p1, c1)) in edges.iter().enumerate() {
            for &(p2, c2) in &edges[a + 1..] {
                if p1 != p2 && p1 != c2 && c1 != p2 {
                    out.push((c1, c2));
                }
            }
        }
        out
    }

    fn first_crossing(&self) -> Option<(usize, usize)> {
        self.non_adjacent_pairs().into_iter().find(|&(a, b)| {
            let ca = self.edges[a].as_ref().unwrap();
            let cb = self.edges[b].as_ref().unwrap();
            ca.distance_to_curve(cb) <= JUNCTION_TOL
        })
    }

    /// Smallest distance between two non-adjacent edges (infinite if there
    /// are none).
    pub fn min_edge_clearance(&self) -> f64 {
        self.non_adjacent_pairs()
            .into_iter()
            .map(|(a, b)| {
                self.edges[a]
                    .as_ref()
                    .unwrap()
                    .distance_to_curve(self.edges[b].as_ref().unwrap())
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest distance between two node positions.
    pub fn min_node_separation(&self) -> f64 {
        let n = self.node_count();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                best = best.min(geometry::dist(&self.positions[i], &self.positions[j]));
            }
        }
        best
    }

    pub fn max_segment_length(&self) -> f64 {
        self.edges
            .iter()
            .flatten()
            .map(PolygonalCurve::max_segment_length)
            .fold(0.0, f64::max)
    }

    /// Re-subdivides every edge so that no segment exceeds `step`.
    pub fn resampled(&self, step: f64) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| e.as_ref().map(|c| c.resample(step)).transpose())
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            edges,
            ..self.clone()
        })
    }

    /// The root-to-`node` path as one curve, oriented root to node.
    pub fn path_curve(&self, node: usize) -> Result<PolygonalCurve> {
        if node >= self.node_count() {
            return Err(Error::InvalidArgument(format!("node {node} out of range")));
        }
        let path = self.tree.ancestry(node);
        if path.len() < 2 {
            return Err(Error::RootHasNoPath);
        }
        let mut curve = self.edges[path[1]].clone().expect("non-root edge");
        for &v in &path[2..] {
            curve = curve.concat(self.edges[v].as_ref().expect("non-root edge"))?;
        }
        Ok(curve)
    }

    /// Varifold of the root-to-`node` path; empty for the root itself.
    pub fn path_varifold(&self, node: usize) -> Result<DiscreteVarifold> {
        match self.path_curve(node) {
            Ok(c) => Ok(c.to_varifold()),
            Err(Error::RootHasNoPath) => Ok(DiscreteVarifold::empty(self.dim)),
            Err(e) => Err(e),
        }
    }

    /// Varifold of the single edge into `child`.
    pub fn edge_varifold(&self, child: usize) -> Option<DiscreteVarifold> {
        self.edges[child].as_ref().map(PolygonalCurve::to_varifold)
    }
}

/// Outcome of a grid check of one assumption.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// Number of sampled implications evaluated.
    pub checked: usize,
    pub violations: usize,
    /// Largest amount by which an implication failed; non-positive when all
    /// hold.
    pub worst_margin: f64,
    /// Nodes at which at least one violation was found.
    pub flagged: Vec<usize>,
}

impl AssumptionReport {
    fn new() -> Self {
        Self {
            checked: 0,
            violations: 0,
            worst_margin: f64::NEG_INFINITY,
            flagged: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn record(&mut self, node: usize, margin: f64) {
        self.checked += 1;
        self.worst_margin = self.worst_margin.max(margin);
        if margin > VALIDATOR_TOL {
            self.violations += 1;
            if self.flagged.last() != Some(&node) && !self.flagged.contains(&node) {
                self.flagged.push(node);
            }
        }
    }
}

fn grid(length: f64, samples: usize) -> Vec<f64> {
    let m = samples.max(2);
    (0..m).map(|p| length * p as f64 / (m - 1) as f64).collect()
}

/// Adjacent edges along a path move apart as the sample points move away
/// from their common node.
///
/// For every node `j` with parent `i` and child `k`, points `x` on
/// `[x_i, x_j]` and `y` on `[x_j, x_k]` are sampled at `samples` arc-length
/// stations measured from `x_j`; the chord `‖x − y‖` must be non-decreasing
/// when either point moves further from `x_j`.
pub fn validate_a1(emb: &EmbeddedTree, samples: usize) -> AssumptionReport {
    let mut report = AssumptionReport::new();
    let tree = emb.tree();
    for j in 0..emb.node_count() {
        let Some(incoming) = emb.edge_curve(j) else {
            continue;
        };
        let l1 = incoming.arc_length();
        let xs: Vec<Vec<f64>> = grid(l1, samples)
            .into_iter()
            .map(|a| incoming.point_at(l1 - a))
            .collect();
        for &k in tree.children(j) {
            let out = emb.edge_curve(k).expect("child edge");
            let ys: Vec<Vec<f64>> = grid(out.arc_length(), samples)
                .into_iter()
                .map(|b| out.point_at(b))
                .collect();
            let d: Vec<Vec<f64>> = xs
                .iter()
                .map(|x| ys.iter().map(|y| geometry::dist(x, y)).collect())
                .collect();
            for p in 0..xs.len() {
                for q in 0..ys.len() {
                    if p + 1 < xs.len() {
                        report.record(j, d[p][q] - d[p + 1][q]);
                    }
                    if q + 1 < ys.len() {
                        report.record(j, d[p][q] - d[p][q + 1]);
                    }
                }
            }
        }
    }
    report
}

/// Sibling edges' tangents move apart as the sample points move away from
/// the branching node.
///
/// For every pair of children `j`, `k` of a node `i`, all sampled pairs
/// `(x, y)` on `[x_i, x_j] × [x_i, x_k]` are compared: a larger total arc
/// length from `x_i` must not come with a smaller tangent gap.
pub fn validate_a2(emb: &EmbeddedTree, samples: usize) -> AssumptionReport {
    let mut report = AssumptionReport::new();
    let tree = emb.tree();
    for i in 0..emb.node_count() {
        let kids = tree.children(i);
        for (a, &j) in kids.iter().enumerate() {
            for &k in &kids[a + 1..] {
                let ej = emb.edge_curve(j).unwrap();
                let ek = emb.edge_curve(k).unwrap();
                let tj: Vec<(f64, Vec<f64>)> = grid(ej.arc_length(), samples)
                    .into_iter()
                    .map(|s| (s, ej.tangent_at(s, Side::Before)))
                    .collect();
                let tk: Vec<(f64, Vec<f64>)> = grid(ek.arc_length(), samples)
                    .into_iter()
                    .map(|s| (s, ek.tangent_at(s, Side::Before)))
                    .collect();
                let mut items: Vec<(f64, f64)> = Vec::with_capacity(tj.len() * tk.len());
                for (s, u) in &tj {
                    for (r, v) in &tk {
                        items.push((s + r, geometry::dist(u, v)));
                    }
                }
                items.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)));
                let scale = items.last().map_or(1.0, |x| x.0.max(1.0));
                // Largest gap among all items whose total length is ≤ the
                // current one (ties included).
                let mut g = 0;
                let mut running = f64::NEG_INFINITY;
                while g < items.len() {
                    let mut h = g;
                    while h < items.len() && items[h].0 - items[g].0 <= 1e-12 * scale {
                        running = running.max(items[h].1);
                        h += 1;
                    }
                    for item in &items[g..h] {
                        report.record(i, running - item.1);
                    }
                    g = h;
                }
            }
        }
    }
    report
}

/// Per-node outcome of [`validate_a3`].
#[derive(Debug, Clone, PartialEq)]
pub struct BranchReport {
    pub node: usize,
    pub passed: bool,
    pub worst_margin: f64,
    /// Neighborhood radius actually used (after clipping to edge lengths).
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct A3Report {
    pub nodes: Vec<BranchReport>,
}

impl A3Report {
    pub fn passed(&self) -> bool {
        self.nodes.iter().all(|n| n.passed)
    }

    pub fn flagged(&self) -> Vec<usize> {
        self.nodes.iter().filter(|n| !n.passed).map(|n| n.node).collect()
    }
}

/// Branches leave a branching node fast enough: for children `j ≠ k` of `i`
/// and `x` on `[x_i, x_k]` within the neighborhood,
/// `‖t_k(x) − t_j(x_i)‖ ≥ ℓ([x_i, x])^a`.
///
/// `neighborhood = None` uses 20% of the shortest edge incident to `x_i`.
/// The radius is clipped to each branch's length.
pub fn validate_a3(
    emb: &EmbeddedTree,
    a_exponent: f64,
    neighborhood: Option<f64>,
    samples: usize,
) -> Result<A3Report> {
    if !(a_exponent > 0.0 && a_exponent < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "A3 exponent must lie in (0, 2), got {a_exponent}"
        )));
    }
    if neighborhood.is_some_and(|u| !(u > 0.0)) {
        return Err(Error::InvalidArgument("neighborhood must be positive".into()));
    }
    let tree = emb.tree();
    let mut nodes = Vec::new();
    for i in 0..emb.node_count() {
        let kids = tree.children(i);
        if kids.len() < 2 {
            continue;
        }
        let incident = kids
            .iter()
            .copied()
            .chain(tree.parent(i).map(|_| i))
            .map(|c| emb.edge_curve(c).unwrap().arc_length())
            .fold(f64::INFINITY, f64::min);
        let radius = neighborhood.unwrap_or(0.2 * incident);
        let mut worst = f64::NEG_INFINITY;
        for &j in kids {
            let t_ref = emb.edge_curve(j).unwrap().tangent_at(0.0, Side::After);
            for &k in kids {
                if k == j {
                    continue;
                }
                let ek = emb.edge_curve(k).unwrap();
                let u = radius.min(ek.arc_length());
                let m = samples.max(1);
                for q in 1..=m {
                    let s = u * q as f64 / m as f64;
                    let gap = geometry::dist(&ek.tangent_at(s, Side::Before), &t_ref);
                    worst = worst.max(s.powf(a_exponent) - gap);
                }
            }
        }
        nodes.push(BranchReport {
            node: i,
            passed: worst <= VALIDATOR_TOL,
            worst_margin: worst,
            radius,
        });
    }
    Ok(A3Report { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn manual(parent: Vec<Option<usize>>, edges: Vec<Option<Vec<Vec<f64>>>>) -> EmbeddedTree {
        let tree = RootedTree::new(parent).unwrap();
        let dim = edges.iter().flatten().next().unwrap()[0].len();
        let n = tree.node_count();
        let mut positions = vec![vec![0.0; dim]; n];
        let curves: Vec<Option<PolygonalCurve>> = edges
            .into_iter()
            .map(|e| e.map(|rows| PolygonalCurve::from_rows(dim, &rows).unwrap()))
            .collect();
        for (c, curve) in curves.iter().enumerate() {
            if let Some(curve) = curve {
                positions[c] = curve.last().to_vec();
                positions[tree.parent(c).unwrap()] = curve.first().to_vec();
            }
        }
        EmbeddedTree::from_parts(tree, dim, positions, curves).unwrap()
    }

    #[test]
    fn rooted_tree_validation() {
        assert!(RootedTree::new(vec![]).is_err());
        assert!(RootedTree::new(vec![None, None]).is_err());
        assert!(RootedTree::new(vec![None, Some(2), Some(1)]).is_err());
        assert!(RootedTree::new(vec![None, Some(5)]).is_err());
        let t = RootedTree::new(vec![Some(2), None, Some(1)]).unwrap();
        assert_eq!(t.root(), 1);
        assert_eq!(t.ancestry(0), vec![1, 2, 0]);
    }

    #[test]
    fn tree_paths() {
        // 0 -> 1 -> 2, 0 -> 3 -> 4
        let t = RootedTree::new(vec![None, Some(0), Some(1), Some(0), Some(3)]).unwrap();
        assert_eq!(t.tree_path(2, 4), vec![2, 1, 0, 3, 4]);
        assert_eq!(t.tree_path(0, 2), vec![0, 1, 2]);
        assert_eq!(t.tree_path(2, 0), vec![2, 1, 0]);
        assert_eq!(t.lowest_common_ancestor(2, 4), 0);
        assert_eq!(t.lowest_common_ancestor(1, 2), 1);
        assert_eq!(t.depth(4), 2);
    }

    #[test]
    fn random_tree_examples() {
        let t = random_tree(1, 3, 0).unwrap();
        assert_eq!(t.node_count(), 1);
        assert!(t.edges().is_empty());
        let t = random_tree(2, 1, 0).unwrap();
        assert_eq!(t.parents(), &[None, Some(0)]);
        assert_eq!(random_tree(30, 3, 9).unwrap(), random_tree(30, 3, 9).unwrap());
        let t = random_tree(40, 2, 4).unwrap();
        assert!((0..40).all(|i| t.children(i).len() <= 2));
        assert!(random_tree(0, 2, 0).is_err());
        assert!(random_tree(3, 0, 0).is_err());
    }

    #[test]
    fn embed_path_tree_is_not_collinear() {
        let t = RootedTree::new(vec![None, Some(0), Some(1)]).unwrap();
        let emb = embed(&t, 2, &EmbedConfig::default(), 3).unwrap();
        let p = emb.positions();
        let u: Vec<f64> = (0..2).map(|d| p[1][d] - p[0][d]).collect();
        let v: Vec<f64> = (0..2).map(|d| p[2][d] - p[1][d]).collect();
        let cross = u[0] * v[1] - u[1] * v[0];
        assert!(cross.abs() > 1e-3);
        assert_eq!(emb.edge_curves().iter().flatten().count(), 2);
    }

    #[test]
    fn embed_star_respects_min_angle() {
        let t = RootedTree::new(vec![None, Some(0), Some(0), Some(0)]).unwrap();
        let cfg = EmbedConfig {
            min_angle_deg: 30.0,
            ..Default::default()
        };
        for seed in 0..10 {
            let emb = embed(&t, 2, &cfg, seed).unwrap();
            let dirs: Vec<Vec<f64>> = (1..4)
                .map(|c| emb.edge_curve(c).unwrap().tangent_at(0.0, Side::After))
                .collect();
            for a in 0..3 {
                for b in a + 1..3 {
                    assert!(angle_between(&dirs[a], &dirs[b]).to_degrees() >= 30.0 - 1e-9);
                }
            }
        }
    }

    #[test]
    fn embed_is_deterministic_and_clear() {
        let t = random_tree(12, 3, 5).unwrap();
        let cfg = EmbedConfig {
            clearance: Some(0.1),
            step: 0.05,
            ..Default::default()
        };
        let a = embed(&t, 3, &cfg, 11).unwrap();
        let b = embed(&t, 3, &cfg, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.min_edge_clearance() >= 0.1 - 1e-12);
        assert!(a.min_node_separation() >= 0.1 - 1e-12);
        assert!(a.max_segment_length() <= 0.05 * (1.0 + 1e-9));
        assert!(embed(&t, 1, &cfg, 0).is_err());
    }

    #[test]
    fn embed_reports_overdense_configuration() {
        let t = random_tree(30, 3, 1).unwrap();
        let cfg = EmbedConfig {
            clearance: Some(5.0),
            max_attempts: 2,
            tries_per_edge: 5,
            ..Default::default()
        };
        assert!(matches!(
            embed(&t, 2, &cfg, 0),
            Err(Error::EmbeddingFailed { .. })
        ));
    }

    #[test]
    fn path_curve_examples() {
        let t = RootedTree::new(vec![None, Some(0), Some(1), Some(1)]).unwrap();
        let emb = embed(&t, 3, &EmbedConfig::default(), 2).unwrap();
        assert!(matches!(emb.path_curve(0), Err(Error::RootHasNoPath)));
        assert_eq!(emb.path_curve(1).unwrap(), *emb.edge_curve(1).unwrap());
        let p2 = emb.path_curve(2).unwrap();
        let expected = emb.edge_curve(1).unwrap().arc_length() + emb.edge_curve(2).unwrap().arc_length();
        assert!((p2.arc_length() - expected).abs() <= 1e-12 * expected);

        // Shared prefix: identical atoms over edge (0, 1).
        let v2 = emb.path_varifold(2).unwrap();
        let v3 = emb.path_varifold(3).unwrap();
        let prefix = emb.edge_varifold(1).unwrap().len();
        for i in 0..prefix {
            assert_eq!(v2.atom(i), v3.atom(i));
        }
        assert_ne!(v2.atom(prefix), v3.atom(prefix));
        assert!(emb.path_varifold(0).unwrap().is_empty());
    }

    #[test]
    fn path_lengths_are_additive() {
        let t = random_tree(15, 3, 8).unwrap();
        let emb = embed(&t, 3, &EmbedConfig::default(), 8).unwrap();
        for j in 1..15 {
            let p = t.parent(j).unwrap();
            let parent_len = if p == t.root() { 0.0 } else { emb.path_curve(p).unwrap().arc_length() };
            let got = emb.path_curve(j).unwrap().arc_length();
            let want = parent_len + emb.edge_curve(j).unwrap().arc_length();
            assert!((got - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn from_parts_rejects_bad_geometry() {
        let t = RootedTree::new(vec![None, Some(0)]).unwrap();
        let c = PolygonalCurve::from_rows(2, &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let bad = EmbeddedTree::from_parts(
            t.clone(),
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.5]],
            vec![None, Some(c.clone())],
        );
        assert!(bad.is_err());
        let same = EmbeddedTree::from_parts(t, 2, vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![None, Some(c)]);
        assert!(same.is_err());

        // Crossing non-adjacent edges.
        let t = RootedTree::new(vec![None, Some(0), Some(0), Some(1), Some(2)]).unwrap();
        let e = |a: [f64; 2], b: [f64; 2]| Some(PolygonalCurve::from_rows(2, &[a.to_vec(), b.to_vec()]).unwrap());
        let edges = vec![
            None,
            e([0.0, 0.0], [1.0, 1.0]),
            e([0.0, 0.0], [1.0, -1.0]),
            e([1.0, 1.0], [2.0, -2.0]),
            e([1.0, -1.0], [2.0, 2.0]),
        ];
        let positions = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, -1.0], vec![2.0, -2.0], vec![2.0, 2.0]];
        assert!(EmbeddedTree::from_parts(t, 2, positions, edges).is_err());
    }

    #[test]
    fn a1_examples() {
        let collinear = manual(
            vec![None, Some(0), Some(1)],
            vec![None, Some(vec![vec![0., 0.], vec![1., 0.]]), Some(vec![vec![1., 0.], vec![2., 0.]])],
        );
        assert!(validate_a1(&collinear, 50).passed());

        let corner = manual(
            vec![None, Some(0), Some(1)],
            vec![None, Some(vec![vec![0., 0.], vec![1., 0.]]), Some(vec![vec![1., 0.], vec![1., 1.]])],
        );
        let r = validate_a1(&corner, 50);
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.checked, 2 * 50 * 49);

        // Second edge leaves the node and then doubles back over the first.
        let s_shape = manual(
            vec![None, Some(0), Some(1)],
            vec![
                None,
                Some(vec![vec![0., 0.], vec![1., 0.]]),
                Some(vec![vec![1., 0.], vec![1.2, 0.3], vec![0.9, 0.45], vec![0.3, 0.15]]),
            ],
        );
        let r = validate_a1(&s_shape, 50);
        assert!(r.violations > 0);
        assert_eq!(r.flagged, vec![1]);
        assert!(r.worst_margin > 0.0);
    }

    #[test]
    fn a2_examples() {
        let straight = manual(
            vec![None, Some(0), Some(0)],
            vec![None, Some(vec![vec![0., 0.], vec![1., 0.]]), Some(vec![vec![0., 0.], vec![0.5, 0.8]])],
        );
        let r = validate_a2(&straight, 50);
        assert!(r.passed());
        assert_eq!(r.checked, 2500);

        // Siblings that bend back towards a common direction.
        let converging = manual(
            vec![None, Some(0), Some(0)],
            vec![
                None,
                Some(vec![vec![0., 0.], vec![0.3, 0.3], vec![1.3, 0.35]]),
                Some(vec![vec![0., 0.], vec![0.3, -0.3], vec![1.3, -0.35]]),
            ],
        );
        let r = validate_a2(&converging, 50);
        assert!(r.violations > 0);
        assert_eq!(r.flagged, vec![0]);
        assert_eq!(validate_a2(&converging, 50), r);
    }

    #[test]
    fn a3_examples() {
        let theta: f64 = 40f64.to_radians();
        let straight = manual(
            vec![None, Some(0), Some(0)],
            vec![
                None,
                Some(vec![vec![0., 0.], vec![1., 0.]]),
                Some(vec![vec![0., 0.], vec![theta.cos(), theta.sin()]]),
            ],
        );
        let r = validate_a3(&straight, 1.0, None, 50).unwrap();
        assert!(r.passed());
        assert_eq!(r.nodes.len(), 1);
        // constant tangent gap 2 sin(θ/2) minus the largest ℓ^a at 20% of length 1
        assert!((r.nodes[0].worst_margin - (0.2 - 2.0 * (theta / 2.0).sin())).abs() < 1e-12);

        // Neighborhood beyond the edge length is clipped, still evaluated.
        let r = validate_a3(&straight, 1.0, Some(10.0), 50).unwrap();
        assert_eq!(r.nodes[0].radius, 10.0);
        assert!(!r.passed(), "ℓ = 1 exceeds the gap 2 sin(20°) ≈ 0.68");

        // Two branches leaving tangentially and separating slowly.
        let gentle = |sign: f64| -> Vec<Vec<f64>> {
            (0..=40)
                .map(|i| {
                    let s = i as f64 / 40.0;
                    vec![s, sign * 0.05 * s * s]
                })
                .collect()
        };
        let near_tangent = manual(
            vec![None, Some(0), Some(0)],
            vec![None, Some(gentle(1.0)), Some(gentle(-1.0))],
        );
        let r = validate_a3(&near_tangent, 1.99, Some(0.5), 50).unwrap();
        assert_eq!(r.flagged(), vec![0]);

        assert!(validate_a3(&straight, 2.0, None, 10).is_err());
        assert!(validate_a3(&straight, 0.0, None, 10).is_err());
    }

    #[test]
    fn generated_embeddings_satisfy_assumptions() {
        for seed in 0..6 {
            let t = random_tree(10, 3, seed).unwrap();
            let cfg = EmbedConfig {
                step: 0.05,
                ..Default::default()
            };
            let emb = embed(&t, 2 + (seed as usize % 3), &cfg, seed).unwrap();
            assert!(validate_a1(&emb, 30).passed(), "seed {seed}");
            assert!(validate_a2(&emb, 30).passed(), "seed {seed}");
            assert!(validate_a3(&emb, 1.0, None, 30).unwrap().passed(), "seed {seed}");
        }
    }
}
