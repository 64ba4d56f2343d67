//! Synthetic velocity data: cells sampled along an embedded tree carry noisy
//! velocity vectors, a kernel-smoothed field interpolates them, and backward
//! integration from each cell recovers a root-to-cell curve.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{self, DiscreteVarifold, PolygonalCurve, Side};
use crate::inference::{self, InferredTree};
use crate::similarity::{self, SimilarityMatrix};
use crate::tree::EmbeddedTree;
use crate::varifold::KernelParams;

/// One observed cell: a position and its velocity.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSample {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

/// Nadaraya–Watson interpolation of cell velocities with a Gaussian weight
/// `exp(-|x - p|² / bandwidth²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldModel {
    dim: usize,
    cells: Vec<CellSample>,
    bandwidth: f64,
}

/// A field evaluation. `underflow` is set when every weight vanished; the
/// value is then the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldValue {
    pub value: Vec<f64>,
    pub underflow: bool,
}

impl VectorFieldModel {
    pub fn new(cells: Vec<CellSample>, bandwidth: f64) -> Result<Self> {
        let Some(first) = cells.first() else {
            return Err(Error::InvalidArgument("vector field needs at least one cell".into()));
        };
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let dim = first.position.len();
        for c in &cells {
            for v in [&c.position, &c.velocity] {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite cell entry".into()));
                }
            }
        }
        Ok(Self { dim, cells, bandwidth })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self) -> &[CellSample] {
        &self.cells
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn field_at(&self, x: &[f64]) -> FieldValue {
        let inv = 1.0 / (self.bandwidth * self.bandwidth);
        let mut acc = vec![0.0; self.dim];
        let mut total = 0.0;
        for c in &self.cells {
            let w = (-geometry::dist_sq(x, &c.position) * inv).exp();
            if w > 0.0 {
                total += w;
                for (a, v) in acc.iter_mut().zip(&c.velocity) {
                    *a += w * v;
                }
            }
        }
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
            FieldValue { value: acc, underflow: false }
        } else {
            FieldValue {
                value: vec![0.0; self.dim],
                underflow: true,
            }
        }
    }
}

/// Noise and speed settings of [`sample_cells`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleConfig {
    pub per_edge: usize,
    pub noise_pos: f64,
    pub noise_vel: f64,
    pub speed: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            per_edge: 100,
            noise_pos: 0.0,
            noise_vel: 0.0,
            speed: 1.0,
        }
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            scale * z
        })
        .collect()
}

fn check_sample_config(cfg: &SampleConfig) -> Result<()> {
    let ok = cfg.per_edge >= 1
        && cfg.noise_pos >= 0.0
        && cfg.noise_vel >= 0.0
        && cfg.noise_pos.is_finite()
        && cfg.noise_vel.is_finite()
        && cfg.speed > 0.0
        && cfg.speed.is_finite();
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("invalid sampling config {cfg:?}")))
    }
}

/// Cells at arc-length stations `(k + ½)·L / per_edge` of every edge, in
/// tree-edge order, with velocity `speed` times the edge tangent. Gaussian
/// noise of the configured scales is added to positions and velocities.
pub fn sample_cells(emb: &EmbeddedTree, cfg: &SampleConfig, seed: u64) -> Result<Vec<CellSample>> {
    check_sample_config(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = emb.dim();
    let mut out = Vec::new();
    for (_, child) in emb.tree().edges() {
        let edge = emb.edge_curve(child).expect("non-root edge");
        let len = edge.arc_length();
        for k in 0..cfg.per_edge {
            let s = (k as f64 + 0.5) * len / cfg.per_edge as f64;
            let mut position = edge.point_at(s);
            let mut velocity: Vec<f64> = edge.tangent_at(s, Side::After).iter().map(|t| t * cfg.speed).collect();
            for (p, n) in position.iter_mut().zip(gaussian(&mut rng, dim, cfg.noise_pos)) {
                *p += n;
            }
            for (v, n) in velocity.iter_mut().zip(gaussian(&mut rng, dim, cfg.noise_vel)) {
                *v += n;
            }
            out.push(CellSample { position, velocity });
        }
    }
    Ok(out)
}

/// Settings of [`integrate_to_root`]. The scheme advances a fixed arc
/// length `step` per stage along the unit backward direction `-F / |F|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationConfig {
    pub step: f64,
    pub max_steps: usize,
    /// Radius of the capture ball around the root; `None` is `2·step`.
    pub capture_radius: Option<f64>,
}

impl Default for IntegrationConfig {
    fn default() -> Self {
        Self {
            step: 0.01,
            max_steps: 10_000,
            capture_radius: None,
        }
    }
}

impl IntegrationConfig {
    pub fn effective_capture(&self) -> f64 {
        self.capture_radius.unwrap_or(2.0 * self.step)
    }
}

/// Why a backward trace stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Entered the capture ball after at least one step.
    Captured,
    /// Started inside the capture ball; the curve is the degenerate chord
    /// from the root (absent when the start is the root itself).
    Immediate,
    MaxSteps,
    /// Every interpolation weight vanished.
    Underflow,
    /// The interpolated field was exactly zero.
    Stalled,
}

impl Termination {
    pub fn is_success(self) -> bool {
        matches!(self, Termination::Captured | Termination::Immediate)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Captured => "captured",
            Termination::Immediate => "immediate",
            Termination::MaxSteps => "max-steps",
            Termination::Underflow => "underflow",
            Termination::Stalled => "stalled",
        }
    }
}

/// Result of one backward trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    /// Root-to-cell curve, the root appended after capture. `None` on
    /// failure and when the start coincides with the root.
    pub curve: Option<PolygonalCurve>,
    pub cause: Termination,
    pub steps: usize,
    /// Arc length covered by integration, excluding the closing chord.
    pub arc_length: f64,
}

enum Direction {
    Unit(Vec<f64>),
    Fail(Termination),
}

fn backward_direction(model: &VectorFieldModel, x: &[f64]) -> Direction {
    let f = model.field_at(x);
    if f.underflow {
        return Direction::Fail(Termination::Underflow);
    }
    let n = geometry::norm(&f.value);
    if !(n > 0.0 && n.is_finite()) {
        return Direction::Fail(Termination::Stalled);
    }
    Direction::Unit(f.value.iter().map(|v| -v / n).collect())
}

fn axpy(x: &[f64], h: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + h * b).collect()
}

/// Traces `start` backward through the field with classical fourth-order
/// Runge–Kutta steps until it enters the capture ball around `root`.
pub fn trace_to_root(
    model: &VectorFieldModel,
    start: &[f64],
    root: &[f64],
    cfg: &IntegrationConfig,
) -> Result<Trace> {
    if !(cfg.step > 0.0 && cfg.step.is_finite()) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {}", cfg.step)));
    }
    let capture = cfg.effective_capture();
    if !(capture >= 0.0 && capture.is_finite()) {
        return Err(Error::InvalidArgument("capture radius must be nonnegative".into()));
    }
    let dim = model.dim();
    for v in [start, root] {
        if v.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("non-finite start or root".into()));
        }
    }

    let close = |pts: Vec<Vec<f64>>, cause: Termination, steps: usize, arc: f64| -> Result<Trace> {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(pts.len() + 1);
        rows.push(root.to_vec());
        for p in pts.into_iter().rev() {
            if geometry::dist(rows.last().unwrap(), &p) > 0.0 {
                rows.push(p);
            }
        }
        let curve = if rows.len() >= 2 {
            Some(PolygonalCurve::from_rows(dim, &rows)?)
        } else {
            None
        };
        Ok(Trace { curve, cause, steps, arc_length: arc })
    };

    if geometry::dist(start, root) <= capture {
        return close(vec![start.to_vec()], Termination::Immediate, 0, 0.0);
    }
    let h = cfg.step;
    let mut pts = vec![start.to_vec()];
    let mut x = start.to_vec();
    let mut arc = 0.0;
    for steps in 1..=cfg.max_steps {
        let mut ks: Vec<Vec<f64>> = Vec::with_capacity(4);
        for (stage, scale) in [0.0, 0.5, 0.5, 1.0].into_iter().enumerate() {
            let probe = if stage == 0 { x.clone() } else { axpy(&x, scale * h, &ks[stage - 1]) };
            match backward_direction(model, &probe) {
                Direction::Unit(d) => ks.push(d),
                Direction::Fail(cause) => {
                    return Ok(Trace { curve: None, cause, steps: steps - 1, arc_length: arc });
                }
            }
        }
        let next: Vec<f64> = (0..dim)
            .map(|i| x[i] + h / 6.0 * (ks[0][i] + 2.0 * ks[1][i] + 2.0 * ks[2][i] + ks[3][i]))
            .collect();
        arc += geometry::dist(&x, &next);
        x = next;
        pts.push(x.clone());
        if geometry::dist(&x, root) <= capture {
            return close(pts, Termination::Captured, steps, arc);
        }
    }
    Ok(Trace {
        curve: None,
        cause: Termination::MaxSteps,
        steps: cfg.max_steps,
        arc_length: arc,
    })
}

/// Root-to-cell curve from `start`, with its termination cause. Fails when
/// the trace does not reach the capture ball.
pub fn integrate_to_root(
    model: &VectorFieldModel,
    start: &[f64],
    root: &[f64],
    cfg: &IntegrationConfig,
) -> Result<(Option<PolygonalCurve>, Termination)> {
    let t = trace_to_root(model, start, root, cfg)?;
    if t.cause.is_success() {
        Ok((t.curve, t.cause))
    } else {
        Err(Error::Integration {
            cell: 0,
            cause: t.cause.as_str().into(),
        })
    }
}

/// Where the traced cells sit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    /// One cell per tree node, named by the node index; the root cell has
    /// an empty curve.
    #[default]
    Nodes,
    /// Every sampled field cell, named `c0, c1, …`, plus a root cell `root`.
    Stations,
}

/// Settings of [`velocity_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub sample: SampleConfig,
    pub integration: IntegrationConfig,
    /// Interpolation bandwidth; `None` uses the integration step.
    pub bandwidth: Option<f64>,
    pub placement: Placement,
    /// Largest tolerated fraction of failed traces; failed cells are
    /// dropped from the matrix.
    pub max_failure_fraction: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sample: SampleConfig::default(),
            integration: IntegrationConfig::default(),
            bandwidth: None,
            placement: Placement::Nodes,
            max_failure_fraction: 0.0,
            seed: 0,
        }
    }
}

/// A traced cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedCell {
    pub id: String,
    pub position: Vec<f64>,
    /// Tree node the cell stands for, when placed at nodes.
    pub node: Option<usize>,
    pub trace: Trace,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    /// Cells defining the field.
    pub field: VectorFieldModel,
    pub traced: Vec<TracedCell>,
    /// Δ over the successfully traced cells.
    pub matrix: SimilarityMatrix,
    pub inferred: InferredTree,
    pub root_id: String,
}

impl PipelineOutput {
    pub fn failures(&self) -> impl Iterator<Item = (usize, &TracedCell)> {
        self.traced.iter().enumerate().filter(|(_, c)| !c.trace.cause.is_success())
    }
}

/// Samples cells, traces each observed cell back to the root, measures Δ
/// between the recovered curves and reconstructs a tree over the cells.
pub fn velocity_pipeline(
    emb: &EmbeddedTree,
    cfg: &PipelineConfig,
    k: &KernelParams,
    exec: Exec,
) -> Result<PipelineOutput> {
    if !(0.0..=1.0).contains(&cfg.max_failure_fraction) {
        return Err(Error::InvalidArgument("failure fraction must lie in [0, 1]".into()));
    }
    let cells = sample_cells(emb, &cfg.sample, cfg.seed)?;
    let field = VectorFieldModel::new(cells, cfg.bandwidth.unwrap_or(cfg.integration.step))?;
    let root = emb.position(emb.tree().root()).to_vec();
    let dim = emb.dim();

    let mut observed: Vec<(String, Vec<f64>, Option<usize>)> = Vec::new();
    let root_id: String = match cfg.placement {
        Placement::Nodes => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
            for v in 0..emb.node_count() {
                let mut p = emb.position(v).to_vec();
                if v != emb.tree().root() {
                    for (x, n) in p.iter_mut().zip(gaussian(&mut rng, dim, cfg.sample.noise_pos)) {
                        *x += n;
                    }
                }
                observed.push((v.to_string(), p, Some(v)));
            }
            emb.tree().root().to_string()
        }
        Placement::Stations => {
            observed.push(("root".into(), root.clone(), None));
            for (i, c) in field.cells().iter().enumerate() {
                observed.push((format!("c{i}"), c.position.clone(), None));
            }
            "root".into()
        }
    };

    let run = |(id, p, node): &(String, Vec<f64>, Option<usize>)| -> Result<TracedCell> {
        Ok(TracedCell {
            id: id.clone(),
            position: p.clone(),
            node: *node,
            trace: trace_to_root(&field, p, &root, &cfg.integration)?,
        })
    };
    let traced: Vec<TracedCell> = match exec {
        Exec::Sequential => observed.iter().map(run).collect::<Result<_>>()?,
        Exec::Parallel => observed.par_iter().map(run).collect::<Result<_>>()?,
    };

    let failed: Vec<usize> = traced
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.trace.cause.is_success())
        .map(|(i, _)| i)
        .collect();
    if let Some(&first) = failed.first() {
        if failed.len() as f64 > cfg.max_failure_fraction * traced.len() as f64 {
            return Err(Error::TooManyFailures {
                failed: failed.len(),
                total: traced.len(),
                first,
            });
        }
    }

    let ok: Vec<&TracedCell> = traced.iter().filter(|c| c.trace.cause.is_success()).collect();
    let ids: Vec<String> = ok.iter().map(|c| c.id.clone()).collect();
    let vars: Vec<DiscreteVarifold> = ok
        .iter()
        .map(|c| match &c.trace.curve {
            Some(curve) => curve.to_varifold(),
            None => DiscreteVarifold::empty(dim),
        })
        .collect();
    let matrix = similarity::curve_delta_matrix(ids, &vars, k, exec)?;
    let inferred = inference::reconstruct(&matrix, &root_id)?;
    Ok(PipelineOutput {
        field,
        traced,
        matrix,
        inferred,
        root_id,
    })
}
