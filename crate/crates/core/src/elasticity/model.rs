use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::mesh::{RegionLabels, TetMesh};
use crate::sparse::{self, conjugate_gradient, envelope_size, reverse_cuthill_mckee, CsrMatrix, EnvelopeLdl};
use crate::{Error, Result, Vec3};

use super::element::{element_forces, element_tangent, ElementGeometry};
use super::fields::{Displacement, ForceField};
use super::material::{MaterialKind, MaterialModel};

/// Nonlinear and linear solver settings for direct and adjoint solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Newton stops when the free-DOF residual norm is below `newton_tol * (1 + ‖b‖)`.
    pub newton_tol: f64,
    pub max_newton: usize,
    /// Residual-norm halving steps per Newton iteration.
    pub max_halvings: usize,
    /// Envelope entries above which conjugate gradients replace the factorization.
    pub max_envelope: usize,
    pub cg_rtol: f64,
    pub cg_max_iters: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            newton_tol: 1e-9,
            max_newton: 50,
            max_halvings: 30,
            max_envelope: 50_000_000,
            cg_rtol: 1e-10,
            cg_max_iters: 100_000,
        }
    }
}

/// Solve counters, for checking the per-evaluation cost.
#[derive(Debug, Default)]
pub struct SolveStats {
    direct_solves: AtomicUsize,
    adjoint_solves: AtomicUsize,
    factorizations: AtomicUsize,
    linear_solves: AtomicUsize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SolveCounts {
    pub direct_solves: usize,
    pub adjoint_solves: usize,
    pub factorizations: usize,
    /// Triangular solve pairs (or CG runs) across direct and adjoint solves.
    pub linear_solves: usize,
}

impl SolveStats {
    pub fn snapshot(&self) -> SolveCounts {
        SolveCounts {
            direct_solves: self.direct_solves.load(Ordering::Relaxed),
            adjoint_solves: self.adjoint_solves.load(Ordering::Relaxed),
            factorizations: self.factorizations.load(Ordering::Relaxed),
            linear_solves: self.linear_solves.load(Ordering::Relaxed),
        }
    }
}

/// Solver for a reduced (free-DOF) symmetric system.
#[derive(Debug)]
enum ReducedSolver {
    Ldl(EnvelopeLdl),
    Cg(CsrMatrix),
}

/// Result of a direct (forward) solve.
#[derive(Debug, Clone)]
pub struct DirectSolution {
    pub displacement: Displacement,
    pub newton_iterations: usize,
    pub residual_norm: f64,
}

/// Elastic model bound to a mesh and its Dirichlet constraints.
///
/// Fixed vertices are eliminated: linear systems only involve free DOFs.
/// For the linear material the reduced stiffness is factored once, on first
/// use, and shared by every direct and adjoint solve.
#[derive(Debug)]
pub struct ElasticModel {
    mesh: TetMesh,
    material: MaterialModel,
    labels: RegionLabels,
    options: SolverOptions,
    lambda: f64,
    mu: f64,
    elements: Vec<ElementGeometry>,
    pattern: CsrMatrix,
    free_dofs: Vec<usize>,
    linear_solver: OnceLock<ReducedSolver>,
    stats: SolveStats,
}

impl ElasticModel {
    pub fn new(mesh: TetMesh, material: MaterialModel, labels: RegionLabels) -> Result<Self> {
        Self::with_options(mesh, material, labels, SolverOptions::default())
    }

    pub fn with_options(
        mesh: TetMesh,
        material: MaterialModel,
        labels: RegionLabels,
        options: SolverOptions,
    ) -> Result<Self> {
        material.validate()?;
        labels.validate(&mesh)?;
        let (lambda, mu) = material.lame_parameters();
        let elements = ElementGeometry::all(&mesh);
        let pattern = dof_pattern(&mesh);
        let fixed: BTreeSet<usize> = labels.fixed.iter().copied().collect();
        let free_dofs = (0..3 * mesh.vertex_count())
            .filter(|d| !fixed.contains(&(d / 3)))
            .collect();
        Ok(ElasticModel {
            mesh,
            material,
            labels,
            options,
            lambda,
            mu,
            elements,
            pattern,
            free_dofs,
            linear_solver: OnceLock::new(),
            stats: SolveStats::default(),
        })
    }

    pub fn mesh(&self) -> &TetMesh {
        &self.mesh
    }

    pub fn material(&self) -> &MaterialModel {
        &self.material
    }

    pub fn labels(&self) -> &RegionLabels {
        &self.labels
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn stats(&self) -> SolveCounts {
        self.stats.snapshot()
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    fn gather(&self, u: &[Vec3], tet: &[usize; 4]) -> [Vec3; 4] {
        tet.map(|i| u[i])
    }

    /// Total strain energy.
    pub fn energy(&self, u: &Displacement) -> f64 {
        self.mesh
            .tets()
            .iter()
            .zip(&self.elements)
            .map(|(tet, g)| element_forces(g, &self.material, self.lambda, self.mu, self.gather(&u.0, tet)).0)
            .sum()
    }

    /// Internal nodal forces `F(u)` over all vertices.
    pub fn residual(&self, u: &Displacement) -> Vec<Vec3> {
        assert_eq!(u.len(), self.mesh.vertex_count());
        let mut f = vec![Vec3::zeros(); u.len()];
        for (tet, g) in self.mesh.tets().iter().zip(&self.elements) {
            let (_, fe) = element_forces(g, &self.material, self.lambda, self.mu, self.gather(&u.0, tet));
            for a in 0..4 {
                f[tet[a]] += fe[a];
            }
        }
        f
    }

    /// Assembled tangent `∇F(u)` over all `3n` DOFs.
    pub fn tangent(&self, u: &Displacement) -> CsrMatrix {
        assert_eq!(u.len(), self.mesh.vertex_count());
        let mut k = self.pattern.clone();
        for (tet, g) in self.mesh.tets().iter().zip(&self.elements) {
            let ke = element_tangent(g, &self.material, self.lambda, self.mu, self.gather(&u.0, tet));
            for a in 0..4 {
                for b in 0..4 {
                    for i in 0..3 {
                        for j in 0..3 {
                            k.add(3 * tet[a] + i, 3 * tet[b] + j, ke[(3 * a + i, 3 * b + j)]);
                        }
                    }
                }
            }
        }
        k
    }

    pub(crate) fn restrict(&self, v: &[Vec3]) -> Vec<f64> {
        self.free_dofs.iter().map(|&d| v[d / 3][d % 3]).collect()
    }

    pub(crate) fn extend(&self, x: &[f64]) -> Vec<Vec3> {
        let mut v = vec![Vec3::zeros(); self.mesh.vertex_count()];
        for (&d, &val) in self.free_dofs.iter().zip(x) {
            v[d / 3][d % 3] = val;
        }
        v
    }

    fn build_solver(&self, matrix: &CsrMatrix) -> Result<ReducedSolver> {
        let reduced = matrix.principal_submatrix(&self.free_dofs);
        let perm = reverse_cuthill_mckee(&reduced);
        if envelope_size(&reduced, &perm) > self.options.max_envelope {
            return Ok(ReducedSolver::Cg(reduced));
        }
        let ldl = EnvelopeLdl::factor_with(&reduced, perm)?;
        self.stats.factorizations.fetch_add(1, Ordering::Relaxed);
        Ok(ReducedSolver::Ldl(ldl))
    }

    fn run_solver(&self, solver: &ReducedSolver, rhs: &[f64]) -> Result<Vec<f64>> {
        self.stats.linear_solves.fetch_add(1, Ordering::Relaxed);
        match solver {
            ReducedSolver::Ldl(f) => Ok(f.solve(rhs)),
            ReducedSolver::Cg(a) => {
                conjugate_gradient(a, rhs, self.options.cg_rtol, self.options.cg_max_iters).map(|o| o.solution)
            }
        }
    }

    fn linear_solver(&self) -> Result<&ReducedSolver> {
        if let Some(s) = self.linear_solver.get() {
            return Ok(s);
        }
        let k = self.tangent(&Displacement::zeros(self.mesh.vertex_count()));
        let solver = self.build_solver(&k)?;
        // a concurrent caller may have won the race; either factor is identical
        let _ = self.linear_solver.set(solver);
        Ok(self.linear_solver.get().expect("initialized above"))
    }

    fn check_constrained(&self) -> Result<()> {
        if self.labels.fixed.is_empty() {
            return Err(Error::Config(
                "no fixed vertices: the equilibrium problem has no unique solution".into(),
            ));
        }
        Ok(())
    }

    /// Solves `F(u) = b` on the free DOFs with `u = 0` on fixed vertices.
    pub fn solve_direct(&self, b: &ForceField) -> Result<DirectSolution> {
        self.check_constrained()?;
        if b.values().len() != self.mesh.vertex_count() {
            return Err(Error::InvalidArgument("force field size does not match mesh".into()));
        }
        self.stats.direct_solves.fetch_add(1, Ordering::Relaxed);
        let bf = self.restrict(b.values());
        let bnorm = sparse::norm(&bf);
        let tol = self.options.newton_tol * (1.0 + bnorm);

        let mut u = Displacement::zeros(self.mesh.vertex_count());
        let mut r: Vec<f64> = bf.iter().map(|x| -x).collect();
        let mut rnorm = bnorm;
        let mut iterations = 0;
        while rnorm > tol {
            if iterations == self.options.max_newton {
                return Err(Error::NewtonDiverged {
                    iterations,
                    residual_norm: rnorm,
                });
            }
            let step = match self.material.kind {
                MaterialKind::Linear => self.run_solver(self.linear_solver()?, &r)?,
                MaterialKind::StVenantKirchhoff => {
                    let solver = self.build_solver(&self.tangent(&u))?;
                    self.run_solver(&solver, &r)?
                }
            };
            let du = self.extend(&step);
            let mut scale = 1.0;
            let mut accepted = None;
            for _ in 0..=self.options.max_halvings {
                let trial = Displacement(u.0.iter().zip(&du).map(|(a, d)| a - d * scale).collect());
                let rt: Vec<f64> = self
                    .restrict(&self.residual(&trial))
                    .iter()
                    .zip(&bf)
                    .map(|(f, b)| f - b)
                    .collect();
                let rtn = sparse::norm(&rt);
                if rtn.is_finite() && rtn < rnorm {
                    accepted = Some((trial, rt, rtn));
                    break;
                }
                scale *= 0.5;
            }
            let Some((trial, rt, rtn)) = accepted else {
                return Err(Error::NewtonDiverged {
                    iterations: iterations + 1,
                    residual_norm: rnorm,
                });
            };
            u = trial;
            r = rt;
            rnorm = rtn;
            iterations += 1;
        }
        Ok(DirectSolution {
            displacement: u,
            newton_iterations: iterations,
            residual_norm: rnorm,
        })
    }

    /// Solves `∇F(u)ᵀ p = rhs` on the free DOFs; `p` vanishes on fixed vertices.
    ///
    /// The linear material reuses the cached stiffness factorization.
    pub fn solve_adjoint_system(&self, u: &Displacement, rhs: &[Vec3]) -> Result<Vec<Vec3>> {
        self.check_constrained()?;
        self.stats.adjoint_solves.fetch_add(1, Ordering::Relaxed);
        let r = self.restrict(rhs);
        let x = match self.material.kind {
            MaterialKind::Linear => self.run_solver(self.linear_solver()?, &r)?,
            MaterialKind::StVenantKirchhoff => {
                let kt = self.tangent(u).transpose();
                let solver = self.build_solver(&kt).map_err(|e| match e {
                    Error::Singular { .. } => Error::Singular {
                        context: "adjoint solve",
                        residual_norm: self.free_residual_norm(u),
                    },
                    other => other,
                })?;
                self.run_solver(&solver, &r)?
            }
        };
        Ok(self.extend(&x))
    }

    /// `‖F(u)‖` over the free DOFs, for diagnostics.
    pub fn free_residual_norm(&self, u: &Displacement) -> f64 {
        sparse::norm(&self.restrict(&self.residual(u)))
    }
}

/// Block sparsity of the vertex adjacency graph, expanded to 3 DOFs per vertex.
fn dof_pattern(mesh: &TetMesh) -> CsrMatrix {
    let n = mesh.vertex_count();
    let mut nbrs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for tet in mesh.tets() {
        for &a in tet {
            nbrs[a].extend(tet.iter().copied());
        }
    }
    let mut rows = Vec::with_capacity(3 * n);
    for set in &nbrs {
        let cols: Vec<usize> = set.iter().flat_map(|&w| [3 * w, 3 * w + 1, 3 * w + 2]).collect();
        for _ in 0..3 {
            rows.push(cols.clone());
        }
    }
    CsrMatrix::from_pattern(3 * n, &rows)
}
