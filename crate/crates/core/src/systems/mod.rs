//! System specifications: drift field, diffusion matrix field, safe radius
//! and the known invariant structure of each example system.

pub mod corpus;

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm, sym_sqrt};
use crate::region::{fd_gradient, Region, ScalarField};

pub use corpus::{builtin_corpus, catalog, corpus_system, CORPUS_NAMES};

pub type VectorField = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type MatrixField = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
pub type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The diffusion matrix `a = σσ*`.
#[derive(Clone)]
pub enum Diffusion {
    Identity,
    Constant { a: DMatrix<f64>, chol: Cholesky<f64, Dyn>, sigma: DMatrix<f64> },
    Field(MatrixField),
}

impl Diffusion {
    pub fn constant(a: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(a.clone()).ok_or_else(|| Error::NotSpd { point: vec![] })?;
        let sigma = sym_sqrt(&a);
        Ok(Diffusion::Constant { a, chol, sigma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    Attractor,
    Repeller,
    EquivalentClass,
    SaddleChainElement,
}

impl RegionLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Attractor => "attractor",
            RegionLabel::Repeller => "repeller",
            RegionLabel::EquivalentClass => "equivalent_class",
            RegionLabel::SaddleChainElement => "saddle_chain_element",
        }
    }
}

/// Shell width and horizon at which a region's label can be checked by
/// `flow::classify_region` in reasonable time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyScale {
    pub shell_delta: f64,
    pub escape_time: f64,
    pub dt: f64,
}

#[derive(Debug, Clone)]
pub struct LabeledRegion {
    pub name: String,
    pub region: Region,
    pub label: RegionLabel,
    /// `None` when convergence near the set is too slow for a desk-scale check.
    pub probe: Option<ClassifyScale>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitComponent {
    Point(Vec<f64>),
    /// Uniform measure on a circle (a periodic orbit of constant speed).
    UniformCircle {
        center: Vec<f64>,
        radius: f64,
    },
    /// Time average along the periodic orbit through the given point.
    OrbitAverage {
        through: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LimitMeasure {
    Weighted(Vec<(LimitComponent, f64)>),
    /// Supported on the listed components with undetermined weights.
    SupportedOn(Vec<LimitComponent>),
    Unknown,
}

impl LimitMeasure {
    pub fn weighted(parts: Vec<(LimitComponent, f64)>) -> Result<Self> {
        let total: f64 = parts.iter().map(|(_, w)| w).sum();
        if (total - 1.0).abs() > 1e-12 || parts.iter().any(|(_, w)| *w < 0.0) {
            return Err(Error::InvalidArgument(format!("limit weights sum to {total}, not 1")));
        }
        Ok(LimitMeasure::Weighted(parts))
    }

    pub fn describe(&self) -> String {
        let comp = |c: &LimitComponent| match c {
            LimitComponent::Point(p) => format!("delta{p:?}"),
            LimitComponent::UniformCircle { center, radius } => format!("uniform(circle {center:?}, r={radius})"),
            LimitComponent::OrbitAverage { through } => format!("orbit_average(through {through:?})"),
        };
        match self {
            LimitMeasure::Weighted(parts) => {
                parts.iter().map(|(c, w)| format!("{w}*{}", comp(c))).collect::<Vec<_>>().join(" + ")
            }
            LimitMeasure::SupportedOn(parts) => {
                format!(
                    "l1*{} (weights undetermined, sum 1)",
                    parts.iter().map(comp).collect::<Vec<_>>().join(" + lk*")
                )
            }
            LimitMeasure::Unknown => "unknown".into(),
        }
    }
}

/// Known invariant structure and expected limit measure.
#[derive(Clone)]
pub struct KnownStructure {
    pub invariant_regions: Vec<LabeledRegion>,
    pub equilibria: Vec<Vec<f64>>,
    pub expected_limit: LimitMeasure,
    /// `U` with stationary density `∝ exp(-2U/ε²)` (identity diffusion).
    pub exact_density_potential: Option<ScalarField>,
    /// A sensible initial state for simulations.
    pub default_start: Vec<f64>,
}

impl KnownStructure {
    pub fn empty(dim: usize) -> Self {
        KnownStructure {
            invariant_regions: vec![],
            equilibria: vec![],
            expected_limit: LimitMeasure::Unknown,
            exact_density_potential: None,
            default_start: vec![0.0; dim],
        }
    }

    pub fn region(&self, name: &str) -> Option<&LabeledRegion> {
        self.invariant_regions.iter().find(|r| r.name == name)
    }
}

/// `H`, `∇H` and `F` of a system `ẋ = ℋ(H) - F(H)∇H`.
#[derive(Clone)]
pub struct HamiltonianParts {
    pub h: ScalarField,
    pub grad_h: VectorField,
    pub f: ScalarMap,
}

impl HamiltonianParts {
    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        (self.grad_h)(x, &mut g);
        g
    }
}

/// A stochastic system `dX = b(X)dt + εσ(X)dw` with `a = σσ*`.
#[derive(Clone)]
pub struct SystemSpec {
    pub name: String,
    pub dim: usize,
    drift: VectorField,
    pub diffusion: Diffusion,
    pub safe_radius: f64,
    pub metadata: KnownStructure,
    pub hamiltonian: Option<HamiltonianParts>,
    /// Plain-text equations for the catalog.
    pub equations: String,
}

impl std::fmt::Debug for SystemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemSpec").field("name", &self.name).field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl SystemSpec {
    pub fn new(name: impl Into<String>, dim: usize, drift: VectorField, safe_radius: f64) -> Self {
        SystemSpec {
            name: name.into(),
            dim,
            drift,
            diffusion: Diffusion::Identity,
            safe_radius,
            metadata: KnownStructure::empty(dim),
            hamiltonian: None,
            equations: String::new(),
        }
    }

    pub fn with_metadata(mut self, metadata: KnownStructure) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn with_equations(mut self, eq: impl Into<String>) -> Self {
        self.equations = eq.into();
        self
    }

    pub fn with_diffusion(mut self, diffusion: Diffusion) -> Self {
        self.diffusion = diffusion;
        self
    }

    /// Same system with `a` replaced by `c·a`.
    pub fn with_scaled_diffusion(self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidArgument(format!("diffusion scale {c} must be positive")));
        }
        let d = match &self.diffusion {
            Diffusion::Identity => Diffusion::constant(DMatrix::identity(self.dim, self.dim) * c)?,
            Diffusion::Constant { a, .. } => Diffusion::constant(a * c)?,
            Diffusion::Field(field) => {
                let field = field.clone();
                Diffusion::Field(Arc::new(move |x: &[f64]| field(x) * c))
            }
        };
        Ok(self.with_diffusion(d))
    }

    #[inline]
    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        (self.drift)(x, out)
    }

    pub fn drift(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.drift)(x, &mut out);
        out
    }

    pub fn drift_field(&self) -> VectorField {
        self.drift.clone()
    }

    pub fn diffusion_a(&self, x: &[f64]) -> DMatrix<f64> {
        match &self.diffusion {
            Diffusion::Identity => DMatrix::identity(self.dim, self.dim),
            Diffusion::Constant { a, .. } => a.clone(),
            Diffusion::Field(f) => f(x),
        }
    }

    /// Symmetric square root of `a(x)`; `None` for the identity.
    pub fn sigma(&self, x: &[f64]) -> Option<DMatrix<f64>> {
        match &self.diffusion {
            Diffusion::Identity => None,
            Diffusion::Constant { sigma, .. } => Some(sigma.clone()),
            Diffusion::Field(f) => Some(sym_sqrt(&f(x))),
        }
    }

    pub fn in_safe_region(&self, x: &[f64]) -> bool {
        norm(x) <= self.safe_radius
    }

    /// Jacobian of the drift by central differences.
    pub fn drift_jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let mut jac = DMatrix::zeros(n, n);
        let mut p = x.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1.0);
            p[j] = x[j] + h;
            self.drift_into(&p, &mut fp);
            p[j] = x[j] - h;
            self.drift_into(&p, &mut fm);
            p[j] = x[j];
            for i in 0..n {
                jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    /// Checks the invariants at one point: `a(x)` SPD and everything finite.
    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        let a = self.diffusion_a(x);
        if a.iter().any(|v| !v.is_finite()) || (&a - a.transpose()).abs().max() > 1e-12 * a.abs().max().max(1.0) {
            return Err(Error::NotSpd { point: x.to_vec() });
        }
        if Cholesky::new(a).is_none() {
            return Err(Error::NotSpd { point: x.to_vec() });
        }
        if self.drift(x).iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite drift at {x:?}")));
        }
        Ok(())
    }
}

/// `vᵀ a(x)⁻¹ v` through a Cholesky solve.
pub fn eval_inverse_quadform(spec: &SystemSpec, x: &[f64], v: &[f64]) -> Result<f64> {
    match &spec.diffusion {
        Diffusion::Identity => Ok(v.iter().map(|c| c * c).sum()),
        Diffusion::Constant { chol, .. } => Ok(quad_with(chol, v)),
        Diffusion::Field(f) => {
            let chol = Cholesky::new(f(x)).ok_or_else(|| Error::NotSpd { point: x.to_vec() })?;
            Ok(quad_with(&chol, v))
        }
    }
}

/// `a(x)⁻¹ v`, used by the action gradient.
pub(crate) fn solve_diffusion(spec: &SystemSpec, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let rhs = DVector::from_column_slice(v);
    match &spec.diffusion {
        Diffusion::Identity => Ok(v.to_vec()),
        Diffusion::Constant { chol, .. } => Ok(chol.solve(&rhs).as_slice().to_vec()),
        Diffusion::Field(f) => {
            let chol = Cholesky::new(f(x)).ok_or_else(|| Error::NotSpd { point: x.to_vec() })?;
            Ok(chol.solve(&rhs).as_slice().to_vec())
        }
    }
}

fn quad_with(chol: &Cholesky<f64, Dyn>, v: &[f64]) -> f64 {
    // vᵀ(LLᵀ)⁻¹v = |L⁻¹v|²
    let mut y = DVector::from_column_slice(v);
    chol.l_dirty().solve_lower_triangular_mut(&mut y);
    y.norm_squared().max(0.0)
}

/// Builds `ẋ = ℋ(H) - F(H)∇H` with `ℋ(H) = (∂H/∂x₂, -∂H/∂x₁)`.
///
/// `grad_h` is spot-checked against central differences of `H` at 16 random
/// points of the safe ball.
pub fn hamiltonian_system(
    h: ScalarField,
    grad_h: VectorField,
    f: ScalarMap,
    name: impl Into<String>,
    safe_radius: f64,
) -> Result<SystemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x4841_4d49);
    for _ in 0..16 {
        let r = safe_radius * rng.random::<f64>().sqrt();
        let th = std::f64::consts::TAU * rng.random::<f64>();
        let x = [r * th.cos(), r * th.sin()];
        let mut g = [0.0; 2];
        grad_h(&x, &mut g);
        let fd = fd_gradient(h.as_ref(), &x);
        let err = ((g[0] - fd[0]).powi(2) + (g[1] - fd[1]).powi(2)).sqrt();
        let rel = err / norm(&g).max(1.0);
        if !(rel < 1e-4) {
            return Err(Error::InconsistentGradient { point: x.to_vec(), rel_err: rel });
        }
    }
    let (hh, gg, ff) = (h.clone(), grad_h.clone(), f.clone());
    let drift: VectorField = Arc::new(move |x: &[f64], out: &mut [f64]| {
        let mut g = [0.0; 2];
        gg(x, &mut g);
        let fh = ff(hh(x));
        out[0] = g[1] - fh * g[0];
        out[1] = -g[0] - fh * g[1];
    });
    let mut spec = SystemSpec::new(name, 2, drift, safe_radius);
    spec.hamiltonian = Some(HamiltonianParts { h, grad_h, f });
    Ok(spec)
}

/// Builds the gradient system `ẋ = -∇F`; with identity diffusion its
/// stationary density is `∝ exp(-2F/ε²)`, recorded as the exact potential.
pub fn gradient_system(
    potential: ScalarField,
    grad: VectorField,
    dim: usize,
    name: impl Into<String>,
    safe_radius: f64,
) -> SystemSpec {
    let g = grad.clone();
    let drift: VectorField = Arc::new(move |x: &[f64], out: &mut [f64]| {
        g(x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    });
    let mut spec = SystemSpec::new(name, dim, drift, safe_radius);
    spec.metadata.exact_density_potential = Some(potential);
    spec
}
