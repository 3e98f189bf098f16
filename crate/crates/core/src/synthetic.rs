//! Ground-truth precision matrices (Erdős–Rényi, AR(1) path, hub) and
//! Gaussian sampling.
//!
//! All randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`. One seed
//! drives three independent streams: 0 for the graph, 1 for edge signs and 2
//! for the Gaussian draws.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, SymMatrix};
use crate::error::{JprError, Result};
use crate::linalg::spd_inverse;

const GRAPH_STREAM: u64 = 0;
const SIGN_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;
const MAX_REDRAWS: usize = 100;

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ModelKind {
    ErdosRenyi {
        edge_prob: f64,
    },
    Ar1,
    Hub {
        hub_fraction: f64,
        min_deg: usize,
        max_deg: usize,
    },
}

impl ModelKind {
    pub fn erdos_renyi() -> Self {
        ModelKind::ErdosRenyi { edge_prob: 0.05 }
    }

    pub fn hub() -> Self {
        ModelKind::Hub {
            hub_fraction: 0.2,
            min_deg: 1,
            max_deg: 3,
        }
    }

    /// Short name used in benchmark output: `er`, `ar1` or `hub`.
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::ErdosRenyi { .. } => "er",
            ModelKind::Ar1 => "ar1",
            ModelKind::Hub { .. } => "hub",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionModelSpec {
    pub kind: ModelKind,
    pub p: usize,
    pub seed: u64,
}

impl PrecisionModelSpec {
    pub fn new(kind: ModelKind, p: usize, seed: u64) -> Self {
        Self { kind, p, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(JprError::InvalidConfig(format!(
                "need p ≥ 2, got {}",
                self.p
            )));
        }
        match self.kind {
            ModelKind::ErdosRenyi { edge_prob } if !(0.0..=1.0).contains(&edge_prob) => Err(
                JprError::InvalidConfig(format!("edge probability {edge_prob} outside [0, 1]")),
            ),
            ModelKind::Hub {
                hub_fraction,
                min_deg,
                max_deg,
            } => {
                if !(0.0..=1.0).contains(&hub_fraction) {
                    return Err(JprError::InvalidConfig(format!(
                        "hub fraction {hub_fraction} outside [0, 1]"
                    )));
                }
                if min_deg < 1 || min_deg > max_deg {
                    return Err(JprError::InvalidConfig(format!(
                        "need 1 ≤ min_deg ≤ max_deg, got {min_deg}, {max_deg}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Symmetric 0/1 adjacency matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    p: usize,
    cells: Vec<bool>,
}

impl Adjacency {
    pub fn empty(p: usize) -> Self {
        Self {
            p,
            cells: vec![false; p * p],
        }
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    pub fn has_edge(&self, j: usize, k: usize) -> bool {
        self.cells[j * self.p + k]
    }

    pub fn add_edge(&mut self, j: usize, k: usize) {
        assert_ne!(j, k, "self-loops are not allowed");
        self.cells[j * self.p + k] = true;
        self.cells[k * self.p + j] = true;
    }

    pub fn degree(&self, j: usize) -> usize {
        (0..self.p).filter(|&k| self.has_edge(j, k)).count()
    }

    pub fn edge_count(&self) -> usize {
        self.cells.iter().filter(|c| **c).count() / 2
    }

    /// Edges (j, k) with j < k in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.p).flat_map(move |j| {
            ((j + 1)..self.p)
                .filter(move |&k| self.has_edge(j, k))
                .map(move |k| (j, k))
        })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |j, k| {
            f64::from(u8::from(self.has_edge(j, k)))
        })
    }

    /// Reads the support of a 0/1 matrix (nonzero off-diagonal entries).
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(JprError::Shape("adjacency must be square".into()));
        }
        let p = m.nrows();
        let mut a = Self::empty(p);
        for j in 0..p {
            if m[(j, j)] != 0.0 {
                return Err(JprError::Shape("adjacency has a self-loop".into()));
            }
            for k in (j + 1)..p {
                if (m[(j, k)] != 0.0) != (m[(k, j)] != 0.0) {
                    return Err(JprError::Shape("adjacency is not symmetric".into()));
                }
                if m[(j, k)] != 0.0 {
                    a.add_edge(j, k);
                }
            }
        }
        Ok(a)
    }
}

/// Draws the graph of `spec`.
pub fn gen_adjacency(spec: &PrecisionModelSpec) -> Result<Adjacency> {
    spec.validate()?;
    let p = spec.p;
    let mut rng = rng(spec.seed, GRAPH_STREAM);
    let mut a = Adjacency::empty(p);
    match spec.kind {
        ModelKind::ErdosRenyi { edge_prob } => {
            for j in 0..p {
                for k in (j + 1)..p {
                    if rng.random_bool(edge_prob) {
                        a.add_edge(j, k);
                    }
                }
            }
        }
        ModelKind::Ar1 => {
            for j in 0..p - 1 {
                a.add_edge(j, j + 1);
            }
        }
        ModelKind::Hub {
            hub_fraction,
            min_deg,
            max_deg,
        } => hub_graph(&mut a, &mut rng, hub_fraction, min_deg, max_deg)?,
    }
    Ok(a)
}

/// Node 0 is the hub, linked to ⌈fraction·(p−1)⌉ uniformly chosen nodes. Every
/// other node draws a degree target in [min_deg, max_deg] and links to random
/// non-hub partners that are not yet adjacent and below max_deg; after
/// `MAX_REDRAWS` rejected draws the node keeps its current degree.
fn hub_graph(
    a: &mut Adjacency,
    rng: &mut ChaCha8Rng,
    hub_fraction: f64,
    min_deg: usize,
    max_deg: usize,
) -> Result<()> {
    let p = a.dim();
    let hub_degree = (hub_fraction * (p - 1) as f64).ceil() as usize;
    for k in sample(rng, p - 1, hub_degree.min(p - 1)) {
        a.add_edge(0, k + 1);
    }

    let others = p - 1;
    let mut degree = vec![0usize; p];
    for node in 1..p {
        let target = rng.random_range(min_deg..=max_deg);
        let mut redraws = 0;
        while degree[node] < target && redraws < MAX_REDRAWS {
            let partner = 1 + rng.random_range(0..others);
            if partner == node || a.has_edge(node, partner) || degree[partner] >= max_deg {
                redraws += 1;
                continue;
            }
            a.add_edge(node, partner);
            degree[node] += 1;
            degree[partner] += 1;
        }
    }
    if let Some(node) = (1..p).find(|&v| degree[v] < min_deg) {
        return Err(JprError::InfeasibleDegree(format!(
            "node {} has {} non-hub neighbours, need at least {min_deg} (p = {p})",
            node + 1,
            degree[node]
        )));
    }
    Ok(())
}

/// The true model: Ω*, Σ* = Ω*⁻¹, the graph and Q*.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub omega_star: SymMatrix,
    pub sigma_star: SymMatrix,
    pub adjacency: Adjacency,
    pub q_star: SymMatrix,
}

impl GroundTruth {
    pub fn dim(&self) -> usize {
        self.omega_star.dim()
    }

    /// Writes `omega_star.csv`, `sigma_star.csv`, `adjacency.csv` and
    /// `q_star.csv` into `dir` in the matrix-CSV format.
    pub fn write_csv_dir(&self, dir: impl AsRef<std::path::Path>) -> Result<()> {
        let dir = dir.as_ref();
        self.omega_star.write_csv(dir.join("omega_star.csv"))?;
        self.sigma_star.write_csv(dir.join("sigma_star.csv"))?;
        crate::data::write_matrix_csv(&self.adjacency.to_matrix(), dir.join("adjacency.csv"))?;
        self.q_star.write_csv(dir.join("q_star.csv"))
    }
}

/// Random ±1 signs on the edges, diagonal 1 + degree.
pub fn adjacency_to_precision(a: &Adjacency, seed: u64) -> Result<GroundTruth> {
    let p = a.dim();
    let mut rng = rng(seed, SIGN_STREAM);
    let mut omega = DMatrix::zeros(p, p);
    for (j, k) in a.edges() {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        omega[(j, k)] = sign;
        omega[(k, j)] = sign;
    }
    for j in 0..p {
        omega[(j, j)] = 1.0 + a.degree(j) as f64;
    }
    let sigma = spd_inverse(&omega)?;
    let tau: Vec<f64> = (0..p).map(|j| 1.0 / omega[(j, j)].sqrt()).collect();
    let mut q = DMatrix::from_fn(p, p, |j, k| -(tau[j] * tau[k]) * omega[(j, k)]);
    q.fill_diagonal(-1.0);
    Ok(GroundTruth {
        omega_star: SymMatrix::new(omega)?,
        sigma_star: SymMatrix::new(sigma)?,
        adjacency: a.clone(),
        q_star: SymMatrix::new(q)?,
    })
}

/// Graph plus precision matrix for `spec`.
pub fn generate(spec: &PrecisionModelSpec) -> Result<GroundTruth> {
    adjacency_to_precision(&gen_adjacency(spec)?, spec.seed)
}

/// n draws from N(0, Σ): X = Z·Cᵀ with C the lower Cholesky factor of Σ and
/// Z filled row by row with standard normals.
pub fn sample_gaussian(sigma: &SymMatrix, n: usize, seed: u64) -> Result<DataMatrix> {
    let p = sigma.dim();
    let chol = sigma
        .matrix()
        .clone()
        .cholesky()
        .ok_or(JprError::NotPositiveDefinite)?;
    let mut rng = rng(seed, SAMPLE_STREAM);
    let mut z = DMatrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = rng.sample::<f64, _>(StandardNormal);
        }
    }
    DataMatrix::from_samples(z * chol.l().transpose())
}
