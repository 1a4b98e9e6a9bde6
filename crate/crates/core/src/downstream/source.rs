use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geom::{family_bounds, generate, normalize_geometry, DesignGrid, Family, ParamVector};
use crate::net::GraphFeatures;
use crate::sdf::SurfaceSampler;
use crate::Result;

/// Stage of a few-shot run, as seen by a data source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    Evaluate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Params,
    Graph,
    Nodes,
}

/// Everything the few-shot harness may read about a geometry.
///
/// Proxy targets are derived from [`params`](Self::params) and
/// [`nodes`](Self::nodes), so reading those is reading the labels.
pub trait GeometrySource: Sync {
    fn len(&self) -> usize;
    fn family(&self) -> Family;
    fn params(&self, i: usize) -> ParamVector;
    /// Parameters scaled to `[0, 1]` over the design ranges.
    fn normalized_params(&self, i: usize) -> [f64; 4];
    fn graph(&self, i: usize) -> &GraphFeatures;
    /// Response nodes on the physical surface.
    fn nodes(&self, i: usize) -> &[[f64; 3]];
    fn begin_phase(&self, _phase: Phase) {}

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Geometries of one design grid held in memory.
pub struct GridSource {
    pub grid: DesignGrid,
    pub graphs: Vec<GraphFeatures>,
    pub nodes: Vec<Vec<[f64; 3]>>,
}

impl GridSource {
    /// Generates every entry, normalizes its graph with the family bounds, and
    /// draws `n_nodes` area-uniform response nodes per geometry.
    pub fn generate(grid: DesignGrid, n_nodes: usize, seed: u64) -> Result<Self> {
        let bounds = family_bounds::<f64>(&grid)?;
        let built: Vec<Result<(GraphFeatures, Vec<[f64; 3]>)>> = grid
            .entries
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let (mesh, graph) = generate::<f64>(p)?;
                let (_, graph, _) = normalize_geometry(&mesh, &graph, &bounds)?;
                let sampler = SurfaceSampler::new(&mesh);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
                let nodes = (0..n_nodes).map(|_| sampler.sample(&mut rng).to_array()).collect();
                Ok((GraphFeatures::new(&graph)?, nodes))
            })
            .collect();
        let (graphs, nodes) = built.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
        Ok(Self { grid, graphs, nodes })
    }
}

impl GeometrySource for GridSource {
    fn len(&self) -> usize {
        self.grid.entries.len()
    }
    fn family(&self) -> Family {
        self.grid.family
    }
    fn params(&self, i: usize) -> ParamVector {
        self.grid.entries[i]
    }
    fn normalized_params(&self, i: usize) -> [f64; 4] {
        self.grid.normalized_params(i)
    }
    fn graph(&self, i: usize) -> &GraphFeatures {
        &self.graphs[i]
    }
    fn nodes(&self, i: usize) -> &[[f64; 3]] {
        &self.nodes[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub phase: Phase,
    pub index: usize,
    pub kind: AccessKind,
}

/// Wraps a source and logs every read with the phase it happened in.
pub struct RecordingSource<'a, S: GeometrySource> {
    inner: &'a S,
    phase: Mutex<Phase>,
    log: Mutex<Vec<Access>>,
}

impl<'a, S: GeometrySource> RecordingSource<'a, S> {
    pub fn new(inner: &'a S) -> Self {
        Self {
            inner,
            phase: Mutex::new(Phase::Train),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn accesses(&self) -> Vec<Access> {
        self.log.lock().expect("access log poisoned").clone()
    }

    fn record(&self, index: usize, kind: AccessKind) {
        let phase = *self.phase.lock().expect("phase poisoned");
        self.log
            .lock()
            .expect("access log poisoned")
            .push(Access { phase, index, kind });
    }
}

impl<S: GeometrySource> GeometrySource for RecordingSource<'_, S> {
    fn len(&self) -> usize {
        self.inner.len()
    }
    fn family(&self) -> Family {
        self.inner.family()
    }
    fn params(&self, i: usize) -> ParamVector {
        self.record(i, AccessKind::Params);
        self.inner.params(i)
    }
    fn normalized_params(&self, i: usize) -> [f64; 4] {
        self.record(i, AccessKind::Params);
        self.inner.normalized_params(i)
    }
    fn graph(&self, i: usize) -> &GraphFeatures {
        self.record(i, AccessKind::Graph);
        self.inner.graph(i)
    }
    fn nodes(&self, i: usize) -> &[[f64; 3]] {
        self.record(i, AccessKind::Nodes);
        self.inner.nodes(i)
    }
    fn begin_phase(&self, phase: Phase) {
        *self.phase.lock().expect("phase poisoned") = phase;
    }
}
