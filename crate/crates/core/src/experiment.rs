//! Open-loop experiments: simulation, data matrices and excitation checks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{numerical_rank, RANK_TOL};
use crate::polytope::DisturbanceSet;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExperimentError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("experiment needs at least one input sample")]
    NoSamples,
    #[error("sequence of length {len} is too short for a Hankel matrix needing index {needed}")]
    SequenceTooShort { len: usize, needed: usize },
    #[error("Hankel depth and width must be positive")]
    ZeroHankelSize,
}

fn expect_dim(what: &'static str, expected: usize, found: usize) -> Result<(), ExperimentError> {
    if expected == found {
        Ok(())
    } else {
        Err(ExperimentError::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}

/// Linear plant `x+ = Ax + Bu`. Only used to generate data and for
/// model-based baselines.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl PlantModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self, ExperimentError> {
        expect_dim("A (square)", a.nrows(), a.ncols())?;
        expect_dim("B rows", a.nrows(), b.nrows())?;
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// `A + BK`.
    pub fn closed_loop(&self, gain: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a + &self.b * gain
    }

    /// `[B, AB, ..., A^{n-1}B]`.
    pub fn controllability_matrix(&self) -> DMatrix<f64> {
        let (n, m) = (self.n(), self.m());
        let mut out = DMatrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for k in 0..n {
            out.view_mut((0, k * m), (n, m)).copy_from(&block);
            block = &self.a * block;
        }
        out
    }

    pub fn is_controllable(&self) -> bool {
        numerical_rank(&self.controllability_matrix(), RANK_TOL) == self.n()
    }
}

/// Data matrices `U_{0,T}`, `X_{0,T}`, `X_{1,T}` of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentData {
    u0t: DMatrix<f64>,
    x0t: DMatrix<f64>,
    x1t: DMatrix<f64>,
}

impl ExperimentData {
    pub fn new(u0t: DMatrix<f64>, x0t: DMatrix<f64>, x1t: DMatrix<f64>) -> Result<Self, ExperimentError> {
        let t = u0t.ncols();
        if t == 0 {
            return Err(ExperimentError::NoSamples);
        }
        expect_dim("X0 columns", t, x0t.ncols())?;
        expect_dim("X1 columns", t, x1t.ncols())?;
        expect_dim("X1 rows", x0t.nrows(), x1t.nrows())?;
        Ok(Self { u0t, x0t, x1t })
    }

    pub fn u0t(&self) -> &DMatrix<f64> {
        &self.u0t
    }

    pub fn x0t(&self) -> &DMatrix<f64> {
        &self.x0t
    }

    pub fn x1t(&self) -> &DMatrix<f64> {
        &self.x1t
    }

    /// Number of samples T.
    pub fn len(&self) -> usize {
        self.u0t.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n(&self) -> usize {
        self.x0t.nrows()
    }

    pub fn m(&self) -> usize {
        self.u0t.nrows()
    }

    /// `Θ = [U_{0,T}; X_{0,T}]`.
    pub fn theta(&self) -> DMatrix<f64> {
        let (m, n, t) = (self.m(), self.n(), self.len());
        let mut theta = DMatrix::zeros(m + n, t);
        theta.view_mut((0, 0), (m, t)).copy_from(&self.u0t);
        theta.view_mut((m, 0), (n, t)).copy_from(&self.x0t);
        theta
    }
}

/// Unknown disturbance samples `D_{0,T}`; only the simulator sees these.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceRecord {
    pub d0t: DMatrix<f64>,
}

/// Iterates `x(t+1) = A x(t) + B u(t) (+ d(t))`, returning `T + 1` states
/// starting at `x0`.
pub fn simulate(
    plant: &PlantModel,
    x0: &DVector<f64>,
    inputs: &[DVector<f64>],
    disturbances: Option<&[DVector<f64>]>,
) -> Result<Vec<DVector<f64>>, ExperimentError> {
    if inputs.is_empty() {
        return Err(ExperimentError::NoSamples);
    }
    expect_dim("initial state", plant.n(), x0.len())?;
    if let Some(d) = disturbances {
        expect_dim("disturbance samples", inputs.len(), d.len())?;
    }
    let mut states = Vec::with_capacity(inputs.len() + 1);
    states.push(x0.clone());
    for (t, u) in inputs.iter().enumerate() {
        expect_dim("input", plant.m(), u.len())?;
        let mut next = plant.a() * &states[t] + plant.b() * u;
        if let Some(d) = disturbances {
            expect_dim("disturbance", plant.n(), d[t].len())?;
            next += &d[t];
        }
        states.push(next);
    }
    Ok(states)
}

/// Stacks samples as columns: `U_{0,T}` from the inputs, `X_{0,T}` and
/// `X_{1,T}` from the states without the last and first sample.
pub fn build_data_matrices(inputs: &[DVector<f64>], states: &[DVector<f64>]) -> Result<ExperimentData, ExperimentError> {
    if inputs.is_empty() {
        return Err(ExperimentError::NoSamples);
    }
    expect_dim("state samples", inputs.len() + 1, states.len())?;
    let t = inputs.len();
    let u0t = DMatrix::from_columns(inputs);
    let x0t = DMatrix::from_columns(&states[..t]);
    let x1t = DMatrix::from_columns(&states[1..]);
    ExperimentData::new(u0t, x0t, x1t)
}

/// Simulates the plant and assembles the data matrices in one go.
pub fn run_experiment(
    plant: &PlantModel,
    x0: &DVector<f64>,
    inputs: &[DVector<f64>],
    disturbances: Option<&[DVector<f64>]>,
) -> Result<(ExperimentData, Option<DisturbanceRecord>), ExperimentError> {
    let states = simulate(plant, x0, inputs, disturbances)?;
    let data = build_data_matrices(inputs, &states)?;
    let record = disturbances.map(|d| DisturbanceRecord {
        d0t: DMatrix::from_columns(d),
    });
    Ok((data, record))
}

/// Block Hankel matrix of depth `depth` and `width` columns starting at
/// sample `start`: block `(r, c)` is `z(start + r + c)`.
pub fn hankel(sequence: &[DVector<f64>], start: usize, depth: usize, width: usize) -> Result<DMatrix<f64>, ExperimentError> {
    if depth == 0 || width == 0 {
        return Err(ExperimentError::ZeroHankelSize);
    }
    let needed = start + depth + width - 2;
    if needed >= sequence.len() {
        return Err(ExperimentError::SequenceTooShort {
            len: sequence.len(),
            needed,
        });
    }
    let sigma = sequence[0].len();
    let mut h = DMatrix::zeros(sigma * depth, width);
    for r in 0..depth {
        for c in 0..width {
            let z = &sequence[start + r + c];
            expect_dim("sequence sample", sigma, z.len())?;
            h.view_mut((r * sigma, c), (sigma, 1)).copy_from(z);
        }
    }
    Ok(h)
}

/// Whether `Z_{0,L,T-L+1}` has full row rank `σL`.
pub fn is_persistently_exciting(inputs: &[DVector<f64>], order: usize) -> bool {
    if inputs.is_empty() || order == 0 || inputs.len() < order {
        return false;
    }
    let sigma = inputs[0].len();
    let width = inputs.len() - order + 1;
    if width < sigma * order {
        return false;
    }
    match hankel(inputs, 0, order, width) {
        Ok(h) => numerical_rank(&h, RANK_TOL) == sigma * order,
        Err(_) => false,
    }
}

/// Largest order of persistent excitation (0 if none).
pub fn excitation_order(inputs: &[DVector<f64>]) -> usize {
    (1..=inputs.len())
        .take_while(|&l| is_persistently_exciting(inputs, l))
        .last()
        .unwrap_or(0)
}

pub fn theta_has_full_row_rank(data: &ExperimentData) -> bool {
    let theta = data.theta();
    theta.ncols() >= theta.nrows() && numerical_rank(&theta, RANK_TOL) == theta.nrows()
}

/// Minimum number of samples for excitation of order `n + 1`: `(m+1)n + m`.
pub fn min_samples(n: usize, m: usize) -> usize {
    (m + 1) * n + m
}

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `len` samples with i.i.d. entries uniform on `[lo, hi]`.
pub fn uniform_inputs<R: Rng>(rng: &mut R, dim: usize, len: usize, lo: f64, hi: f64) -> Vec<DVector<f64>> {
    (0..len)
        .map(|_| {
            DVector::from_iterator(
                dim,
                (0..dim).map(|_| if hi > lo { rng.gen_range(lo..=hi) } else { lo }),
            )
        })
        .collect()
}

/// A random point of `D` drawn as a random convex combination of its vertices.
pub fn sample_disturbance<R: Rng>(rng: &mut R, set: &DisturbanceSet) -> DVector<f64> {
    let weights: Vec<f64> = set.vertices().iter().map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
    let total: f64 = weights.iter().sum();
    let mut d = DVector::zeros(set.dim());
    for (w, v) in weights.iter().zip(set.vertices()) {
        d += v * (w / total);
    }
    d
}

/// Rejection-samples `(A, B)` with entries uniform on `[-scale, scale]` until
/// the pair is controllable.
pub fn random_controllable_plant<R: Rng>(rng: &mut R, n: usize, m: usize, scale: f64) -> PlantModel {
    loop {
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-scale..=scale));
        let b = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..=1.0));
        let plant = PlantModel::new(a, b).expect("shapes are consistent by construction");
        if plant.is_controllable() {
            return plant;
        }
    }
}
