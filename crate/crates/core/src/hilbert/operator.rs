use std::sync::Arc;

use crate::error::{LmmError, Result};
use crate::hilbert::mesh::Mesh;
use crate::hilbert::sparse::{
    pcg, BandCholesky, CsrMatrix, IncompleteCholesky, Jacobi, PcgStats, Preconditioner,
};

/// Nodal values on the interior nodes of one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh_id: u64,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            mesh_id: mesh.id(),
            values: vec![0.0; mesh.len()],
        }
    }

    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(LmmError::LengthMismatch {
                expected: mesh.len(),
                found: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(LmmError::NonFinite(format!("grid value at node {k}")));
        }
        Ok(Self {
            mesh_id: mesh.id(),
            values,
        })
    }

    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self {
            mesh_id: mesh.id(),
            values: mesh.coords().iter().map(|&x| f(x)).collect(),
        }
    }

    /// Same mesh as `self`, new values. Lengths must agree.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            mesh_id: self.mesh_id,
            values,
        }
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_mesh(&self, mesh_id: u64) -> Result<()> {
        if self.mesh_id != mesh_id {
            return Err(LmmError::MeshMismatch {
                expected: mesh_id,
                found: self.mesh_id,
            });
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.with_values(self.values.iter().map(|v| v * s).collect())
    }

    /// `self += s·other`
    pub fn axpy(&mut self, s: f64, other: &GridFunction) {
        debug_assert_eq!(self.mesh_id, other.mesh_id);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    /// `a·self + b·other`
    pub fn combine(&self, a: f64, b: f64, other: &GridFunction) -> Self {
        debug_assert_eq!(self.mesh_id, other.mesh_id);
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Preconditioner used by [`solve_linear`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PreconditionerKind {
    Jacobi,
    IncompleteCholesky,
    /// Complete band Cholesky factor, computed once per operator.
    #[default]
    BandCholesky,
}

/// The matrix of the `a`-inner product on a mesh.
///
/// `A = S + h²·diag(a)` where `S` is the five-point stencil with 4 on the
/// diagonal and −1 for each interior neighbour, so that `(u, v)_a = uᵀ A v`
/// and the load vector of a source `f` is `W f` with `W = h²`.
#[derive(Debug)]
pub struct EllipticOperator {
    mesh: Arc<Mesh>,
    matrix: CsrMatrix,
    a_values: Vec<f64>,
    weights: Vec<f64>,
    factor: BandCholesky,
}

/// Assembles `A` for the coefficient `a(x) ≥ 0`.
pub fn assemble_operator(
    mesh: Arc<Mesh>,
    a_field: impl Fn([f64; 2]) -> f64,
) -> Result<EllipticOperator> {
    let h2 = mesh.h() * mesh.h();
    let a_values: Vec<f64> = mesh.coords().iter().map(|&x| a_field(x)).collect();
    for (node, &value) in a_values.iter().enumerate() {
        if !value.is_finite() {
            return Err(LmmError::NonFinite(format!("a(x) at node {node}")));
        }
        if value < 0.0 {
            return Err(LmmError::NegativeCoefficient { node, value });
        }
    }
    let rows = (0..mesh.len())
        .map(|k| {
            let mut row = vec![(k, 4.0 + h2 * a_values[k])];
            row.extend(mesh.neighbors(k).into_iter().flatten().map(|j| (j, -1.0)));
            row
        })
        .collect();
    let matrix = CsrMatrix::from_rows(rows);
    let factor = BandCholesky::new(&matrix)?;
    let weights = vec![h2; mesh.len()];
    Ok(EllipticOperator {
        mesh,
        matrix,
        a_values,
        weights,
        factor,
    })
}

impl EllipticOperator {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }
    pub fn mesh_id(&self) -> u64 {
        self.mesh.id()
    }
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }
    /// `a(xᵢ)` at every interior node.
    pub fn a_values(&self) -> &[f64] {
        &self.a_values
    }
    /// Quadrature weights (`h²` per node).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn apply_slice(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    pub fn apply(&self, u: &GridFunction) -> GridFunction {
        debug_assert_eq!(u.mesh_id(), self.mesh_id());
        u.with_values(self.matrix.mul_vec(u.values()))
    }

    /// `uᵀ A v` without mesh checks.
    pub fn inner_unchecked(&self, u: &[f64], v: &[f64]) -> f64 {
        compensated_sum(u.iter().enumerate().filter(|(_, &ui)| ui != 0.0).map(|(i, &ui)| {
            let mut row = 0.0;
            for (j, a) in self.matrix.row(i) {
                row += a * v[j];
            }
            ui * row
        }))
    }

    pub fn norm(&self, u: &GridFunction) -> f64 {
        self.inner_unchecked(u.values(), u.values()).max(0.0).sqrt()
    }

    /// Applies `A⁻¹` with the stored factor.
    pub fn factor_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; b.len()];
        self.factor.solve_into(b, &mut x);
        x
    }

    /// Iteration cap for PCG: `20·√n + 1000`.
    pub fn iteration_cap(&self) -> usize {
        20 * (self.mesh.len() as f64).sqrt().ceil() as usize + 1000
    }

    pub fn solve_with(
        &self,
        rhs: &GridFunction,
        rel_tol: f64,
        kind: PreconditionerKind,
    ) -> Result<(GridFunction, PcgStats)> {
        rhs.check_mesh(self.mesh_id())?;
        if !(rel_tol > 0.0 && rel_tol <= 1e-6) {
            return Err(LmmError::Config(format!(
                "linear solve tolerance must lie in (0, 1e-6], got {rel_tol:e}"
            )));
        }
        let cap = self.iteration_cap();
        let (x, stats) = match kind {
            PreconditionerKind::BandCholesky => {
                pcg(&self.matrix, rhs.values(), &self.factor, rel_tol, cap)?
            }
            PreconditionerKind::Jacobi => {
                let pc = Jacobi::new(&self.matrix)?;
                pcg(&self.matrix, rhs.values(), &pc as &dyn Preconditioner, rel_tol, cap)?
            }
            PreconditionerKind::IncompleteCholesky => {
                let pc = IncompleteCholesky::new(&self.matrix)?;
                pcg(&self.matrix, rhs.values(), &pc as &dyn Preconditioner, rel_tol, cap)?
            }
        };
        Ok((rhs.with_values(x), stats))
    }
}

/// Default relative tolerance of [`solve_linear`].
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

/// Solves `A x = rhs` by PCG to `‖Ax − b‖₂ ≤ rel_tol·‖b‖₂`.
///
/// `rhs` is the already-weighted load vector.
pub fn solve_linear(op: &EllipticOperator, rhs: &GridFunction, rel_tol: f64) -> Result<GridFunction> {
    op.solve_with(rhs, rel_tol, PreconditionerKind::default())
        .map(|(x, _)| x)
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for x in values {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

/// `(u, v)_a = uᵀ A v`.
pub fn inner_a(op: &EllipticOperator, u: &GridFunction, v: &GridFunction) -> Result<f64> {
    u.check_mesh(op.mesh_id())?;
    v.check_mesh(op.mesh_id())?;
    Ok(op.inner_unchecked(u.values(), v.values()))
}

/// `Σᵢ h²·valueᵢ` over interior nodes.
pub fn quadrature(mesh: &Mesh, node_values: &[f64]) -> Result<f64> {
    if node_values.len() != mesh.len() {
        return Err(LmmError::LengthMismatch {
            expected: mesh.len(),
            found: node_values.len(),
        });
    }
    let h2 = mesh.h() * mesh.h();
    Ok(node_values.iter().sum::<f64>() * h2)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::hilbert::mesh::{build_mesh, DomainSpec};

    fn square(n: usize) -> Arc<Mesh> {
        Arc::new(build_mesh(&DomainSpec::Square, n).unwrap())
    }

    fn random_fn(mesh: &Mesh, rng: &mut StdRng) -> GridFunction {
        GridFunction::from_values(mesh, (0..mesh.len()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap()
    }

    /// Independent accumulator: sum of squared forward differences over
    /// every grid edge (including edges to Dirichlet nodes) plus the mass term.
    fn bilinear_by_edges(mesh: &Mesh, a: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let h2 = mesh.h() * mesh.h();
        let val = |w: &[f64], i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 {
                return 0.0;
            }
            mesh.interior_index(i as usize, j as usize).map_or(0.0, |k| w[k])
        };
        let mut s = 0.0;
        for j in -1..mesh.ny() as isize {
            for i in -1..mesh.nx() as isize {
                let du_x = val(u, i + 1, j) - val(u, i, j);
                let dv_x = val(v, i + 1, j) - val(v, i, j);
                let du_y = val(u, i, j + 1) - val(u, i, j);
                let dv_y = val(v, i, j + 1) - val(v, i, j);
                // (du/h)(dv/h)·h² per edge
                s += du_x * dv_x + du_y * dv_y;
            }
        }
        for k in 0..mesh.len() {
            s += h2 * a[k] * u[k] * v[k];
        }
        s
    }

    #[test]
    fn single_node_operator() {
        let op = assemble_operator(square(3), |_| 0.0).unwrap();
        assert_eq!(op.matrix().get(0, 0), 4.0);
        assert_eq!(op.weights(), &[1.0]);
    }

    #[test]
    fn mass_term_adds_to_diagonal() {
        let mesh = square(17);
        let h2 = mesh.h() * mesh.h();
        let plain = assemble_operator(mesh.clone(), |_| 0.0).unwrap();
        let weighted = assemble_operator(mesh.clone(), |x| 8.0 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        for (k, x) in mesh.coords().iter().enumerate() {
            let expected = h2 * 8.0 * (x[0] * x[0] + x[1] * x[1]);
            let diff = weighted.matrix().get(k, k) - plain.matrix().get(k, k);
            assert!((diff - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn negative_coefficient_is_rejected() {
        assert!(matches!(
            assemble_operator(square(9), |x| x[0]),
            Err(LmmError::NegativeCoefficient { .. })
        ));
    }

    #[test]
    fn zero_coefficient_reproduces_five_point_laplacian() {
        let mesh = square(9);
        let op = assemble_operator(mesh.clone(), |_| 0.0).unwrap();
        let u = GridFunction::from_fn(&mesh, |x| x[0] * x[0] + 0.5 * x[1]);
        let au = op.apply(&u);
        let grid = |i: isize, j: isize| -> f64 {
            let n = mesh.nx() as isize;
            if i <= 0 || j <= 0 || i >= n - 1 || j >= n - 1 {
                0.0
            } else {
                let x = [-1.0 + i as f64 * mesh.h(), -1.0 + j as f64 * mesh.h()];
                x[0] * x[0] + 0.5 * x[1]
            }
        };
        for k in 0..mesh.len() {
            let (i, j) = mesh.grid_index(k);
            let (i, j) = (i as isize, j as isize);
            let stencil = 4.0 * grid(i, j) - grid(i - 1, j) - grid(i + 1, j) - grid(i, j - 1)
                - grid(i, j + 1);
            assert!((au.values()[k] - stencil).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_and_positive_definite() {
        let mesh = Arc::new(build_mesh(&DomainSpec::Dumbbell, 21).unwrap());
        let op = assemble_operator(mesh.clone(), |x| x[0].abs()).unwrap();
        assert_eq!(op.matrix().asymmetry(), 0.0);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let u = random_fn(&mesh, &mut rng);
            assert!(inner_a(&op, &u, &u).unwrap() > 0.0);
        }
        let zero = GridFunction::zeros(&mesh);
        assert_eq!(inner_a(&op, &zero, &zero).unwrap(), 0.0);
    }

    #[test]
    fn bilinear_form_matches_edge_accumulator() {
        let mesh = square(9);
        let op = assemble_operator(mesh.clone(), |x| 8.0 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..10 {
            let u = random_fn(&mesh, &mut rng);
            let v = random_fn(&mesh, &mut rng);
            let fast = inner_a(&op, &u, &v).unwrap();
            let slow = bilinear_by_edges(&mesh, op.a_values(), u.values(), v.values());
            assert!((fast - slow).abs() < 1e-12 * (1.0 + slow.abs()));
            let swapped = inner_a(&op, &v, &u).unwrap();
            assert!((fast - swapped).abs() < 1e-13);
        }
    }

    #[test]
    fn mesh_mismatch_is_reported() {
        let op = assemble_operator(square(9), |_| 0.0).unwrap();
        let other = square(11);
        let u = GridFunction::zeros(&other);
        assert!(matches!(
            inner_a(&op, &u, &u),
            Err(LmmError::MeshMismatch { .. })
        ));
    }

    #[test]
    fn dirichlet_energy_of_sine_mode() {
        // ∫|∇u|² for u = sin(πx₁)sin(πx₂) on (-1,1)² is 2π²
        let mut errors = Vec::new();
        for n in [33, 65] {
            let mesh = square(n);
            let op = assemble_operator(mesh.clone(), |_| 0.0).unwrap();
            let u = GridFunction::from_fn(&mesh, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
            let e = inner_a(&op, &u, &u).unwrap();
            errors.push((e - 2.0 * PI * PI).abs());
        }
        assert!(errors[1] < 0.1);
        let ratio = errors[0] / errors[1];
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn quadrature_values() {
        let mesh = square(129);
        let ones = vec![1.0; mesh.len()];
        let area = quadrature(&mesh, &ones).unwrap();
        assert!((area - 4.0).abs() < 4.0 * 2.0 * mesh.h());
        assert_eq!(quadrature(&mesh, &vec![0.0; mesh.len()]).unwrap(), 0.0);
        let s: Vec<f64> = mesh
            .coords()
            .iter()
            .map(|x| ((PI * x[0]).sin() * (PI * x[1]).sin()).powi(2))
            .collect();
        assert!((quadrature(&mesh, &s).unwrap() - 1.0).abs() < 1e-10);
        assert!(quadrature(&mesh, &[1.0]).is_err());
    }

    #[test]
    fn solve_zero_and_consistency() {
        let mesh = square(33);
        let op = assemble_operator(mesh.clone(), |x| x[0] * x[0]).unwrap();
        let zero = GridFunction::zeros(&mesh);
        let x = solve_linear(&op, &zero, 1e-10).unwrap();
        assert_eq!(x.max_abs(), 0.0);

        let mut rng = StdRng::seed_from_u64(3);
        let y = random_fn(&mesh, &mut rng);
        let b = op.apply(&y);
        for kind in [
            PreconditionerKind::Jacobi,
            PreconditionerKind::IncompleteCholesky,
            PreconditionerKind::BandCholesky,
        ] {
            let (x, stats) = op.solve_with(&b, 1e-10, kind).unwrap();
            assert!(stats.relative_residual <= 1e-10);
            let err = x.combine(1.0, -1.0, &y).max_abs();
            assert!(err < 1e-6, "{kind:?}: {err}");
        }
        assert!(op.solve_with(&b, 1e-3, PreconditionerKind::Jacobi).is_err());
    }

    fn manufactured_error(n: usize) -> f64 {
        // -Δu = 2π² sin(πx₁) sin(πx₂) with zero boundary data on (-1,1)²
        let mesh = square(n);
        let op = assemble_operator(mesh.clone(), |_| 0.0).unwrap();
        let rhs = GridFunction::from_fn(&mesh, |x| {
            mesh.h() * mesh.h() * 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()
        });
        let u = solve_linear(&op, &rhs, 1e-12).unwrap();
        let exact = GridFunction::from_fn(&mesh, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        u.combine(1.0, -1.0, &exact).max_abs()
    }

    #[test]
    fn poisson_is_second_order() {
        let e1 = manufactured_error(33);
        let e2 = manufactured_error(65);
        assert!(e1 < 5.0 * (2.0 / 32.0f64).powi(2));
        let ratio = e1 / e2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
