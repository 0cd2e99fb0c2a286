//! Galerkin bases on a 1D mesh: piecewise-linear hats and discrete Robin
//! eigenfunctions, together with the norms, evaluations and projections the
//! rest of the crate is built on.
//!
//! Every basis is stored through its nodal values on the underlying hat
//! space. A hat basis uses the identity transform; an eigenbasis keeps the
//! `n_nodes x count` matrix of eigenvector nodal values. Coefficient vectors
//! therefore map to nodal values by one matrix product, and nodal dual vectors
//! map back by the transpose.

use std::hash::{DefaultHasher, Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BasisKind {
    FemHat,
    RobinEigen,
}

/// Content fingerprint of a basis; coefficient vectors carry it so that
/// fields from different bases cannot be mixed silently.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisId(pub u64);

/// Coefficients of a field `u = sum_j c_j w_j` in some basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldCoeffs {
    pub coeffs: DVector<f64>,
    pub basis_id: BasisId,
}

impl FieldCoeffs {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scaled(&self, alpha: f64) -> FieldCoeffs {
        FieldCoeffs {
            coeffs: &self.coeffs * alpha,
            basis_id: self.basis_id,
        }
    }

    pub fn same_basis(&self, other: &FieldCoeffs) -> Result<()> {
        if self.basis_id != other.basis_id || self.len() != other.len() {
            return Err(Error::invalid("fields belong to different bases"));
        }
        Ok(())
    }

    /// Euclidean norm of the coefficient vector.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.norm()
    }
}

impl<'a> Add<&'a FieldCoeffs> for &'a FieldCoeffs {
    type Output = FieldCoeffs;
    fn add(self, rhs: &'a FieldCoeffs) -> FieldCoeffs {
        assert_eq!(self.basis_id, rhs.basis_id, "basis mismatch");
        FieldCoeffs {
            coeffs: &self.coeffs + &rhs.coeffs,
            basis_id: self.basis_id,
        }
    }
}

impl<'a> Sub<&'a FieldCoeffs> for &'a FieldCoeffs {
    type Output = FieldCoeffs;
    fn sub(self, rhs: &'a FieldCoeffs) -> FieldCoeffs {
        assert_eq!(self.basis_id, rhs.basis_id, "basis mismatch");
        FieldCoeffs {
            coeffs: &self.coeffs - &rhs.coeffs,
            basis_id: self.basis_id,
        }
    }
}

impl Mul<f64> for &FieldCoeffs {
    type Output = FieldCoeffs;
    fn mul(self, alpha: f64) -> FieldCoeffs {
        self.scaled(alpha)
    }
}

impl Neg for &FieldCoeffs {
    type Output = FieldCoeffs;
    fn neg(self) -> FieldCoeffs {
        self.scaled(-1.0)
    }
}

/// A finite-dimensional Galerkin space `V_N` with its Gram matrices.
#[derive(Debug, Clone)]
pub struct BasisSet {
    id: BasisId,
    kind: BasisKind,
    mesh: Mesh,
    transform: Option<DMatrix<f64>>,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    boundary_mass: DMatrix<f64>,
    eigvals: Option<Vec<f64>>,
    mass_chol: Cholesky<f64, Dyn>,
}

/// Hat-space Gram matrices assembled from exact element integrals.
fn fem_matrices(mesh: &Mesh) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = mesh.n_nodes();
    let mut mass = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);
    let mut bmass = DMatrix::zeros(n, n);
    for e in 0..mesh.n_elements() {
        let h = mesh.element_size(e);
        let (i, j) = (e, e + 1);
        mass[(i, i)] += h / 3.0;
        mass[(j, j)] += h / 3.0;
        mass[(i, j)] += h / 6.0;
        mass[(j, i)] += h / 6.0;
        stiff[(i, i)] += 1.0 / h;
        stiff[(j, j)] += 1.0 / h;
        stiff[(i, j)] -= 1.0 / h;
        stiff[(j, i)] -= 1.0 / h;
    }
    bmass[(0, 0)] = 1.0;
    bmass[(n - 1, n - 1)] += 1.0;
    (mass, stiff, bmass)
}

fn congruence(v: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = v.transpose() * a * v;
    symmetrize(&mut out);
    out
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
}

fn fingerprint(kind: BasisKind, mesh: &Mesh, transform: Option<&DMatrix<f64>>) -> BasisId {
    let mut h = DefaultHasher::new();
    kind.hash(&mut h);
    mesh.quad_order().hash(&mut h);
    for x in mesh.nodes() {
        x.to_bits().hash(&mut h);
    }
    if let Some(t) = transform {
        t.ncols().hash(&mut h);
        for x in t.iter() {
            x.to_bits().hash(&mut h);
        }
    }
    BasisId(h.finish())
}

impl BasisSet {
    /// Piecewise-linear hat basis, one function per mesh node.
    pub fn fem(mesh: &Mesh) -> Result<Self> {
        let (mass, stiffness, boundary_mass) = fem_matrices(mesh);
        Self::assemble(
            BasisKind::FemHat,
            mesh.clone(),
            None,
            mass,
            stiffness,
            boundary_mass,
            None,
        )
    }

    /// The `count` lowest discrete eigenfunctions of `-w'' = lambda w` with
    /// `dw/dn + w = 0` at both ends, computed from the hat space by the
    /// generalized problem `(K + B) w = lambda M w` and mass-orthonormalized.
    pub fn robin_eigen(mesh: &Mesh, count: usize) -> Result<Self> {
        let n = mesh.n_nodes();
        if count == 0 || count > n {
            return Err(Error::invalid(format!(
                "eigenbasis size {count} must lie in 1..={n} (hat-space dimension)"
            )));
        }
        let (m, k, b) = fem_matrices(mesh);
        let a = &k + &b;
        let chol = Cholesky::new(m.clone())
            .ok_or_else(|| Error::Internal("hat mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let linv_a = l
            .solve_lower_triangular(&a)
            .ok_or_else(|| Error::NumericalFailure("triangular solve failed".into()))?;
        let mut c = l
            .solve_lower_triangular(&linv_a.transpose())
            .ok_or_else(|| Error::NumericalFailure("triangular solve failed".into()))?;
        symmetrize(&mut c);
        let eig = SymmetricEigen::try_new(c, 1e-15, 10_000).ok_or_else(|| {
            Error::NumericalFailure(format!(
                "symmetric eigensolver did not converge (n = {n}, max iterations 10000)"
            ))
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let eigvals: Vec<f64> = order[..count].iter().map(|&i| eig.eigenvalues[i]).collect();
        if eigvals[0] <= 0.0 || eigvals.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::NumericalFailure(format!(
                "eigenvalues not strictly positive and increasing: {:?}",
                &eigvals[..count.min(4)]
            )));
        }
        let mut y = DMatrix::zeros(n, count);
        for (col, &i) in order[..count].iter().enumerate() {
            y.set_column(col, &eig.eigenvectors.column(i));
        }
        let mut t = l
            .tr_solve_lower_triangular(&y)
            .ok_or_else(|| Error::NumericalFailure("back substitution failed".into()))?;
        for mut col in t.column_iter_mut() {
            let sign = if col[0].abs() > 1e-12 {
                col[0].signum()
            } else {
                col.sum().signum()
            };
            if sign < 0.0 {
                col.neg_mut();
            }
        }
        let mass = congruence(&t, &m);
        let stiffness = congruence(&t, &k);
        let boundary_mass = congruence(&t, &b);
        Self::assemble(
            BasisKind::RobinEigen,
            mesh.clone(),
            Some(t),
            mass,
            stiffness,
            boundary_mass,
            Some(eigvals),
        )
    }

    fn assemble(
        kind: BasisKind,
        mesh: Mesh,
        transform: Option<DMatrix<f64>>,
        mass: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        boundary_mass: DMatrix<f64>,
        eigvals: Option<Vec<f64>>,
    ) -> Result<Self> {
        let mass_chol = Cholesky::new(mass.clone())
            .ok_or_else(|| Error::Internal("mass matrix is not positive definite".into()))?;
        let id = fingerprint(kind, &mesh, transform.as_ref());
        Ok(BasisSet {
            id,
            kind,
            mesh,
            transform,
            mass,
            stiffness,
            boundary_mass,
            eigvals,
            mass_chol,
        })
    }

    pub fn id(&self) -> BasisId {
        self.id
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mass.nrows()
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn boundary_mass(&self) -> &DMatrix<f64> {
        &self.boundary_mass
    }

    pub fn eigvals(&self) -> Option<&[f64]> {
        self.eigvals.as_deref()
    }

    /// Nodal values of every basis function (`None` for hats: identity).
    pub fn transform(&self) -> Option<&DMatrix<f64>> {
        self.transform.as_ref()
    }

    /// Matrix of the Robin form `(u', v') + u(0)v(0) + u(1)v(1)`.
    pub fn robin_form(&self) -> DMatrix<f64> {
        &self.stiffness + &self.boundary_mass
    }

    pub fn field(&self, coeffs: DVector<f64>) -> Result<FieldCoeffs> {
        if coeffs.len() != self.dim() {
            return Err(Error::invalid(format!(
                "coefficient vector has length {}, basis has dimension {}",
                coeffs.len(),
                self.dim()
            )));
        }
        Ok(FieldCoeffs {
            coeffs,
            basis_id: self.id,
        })
    }

    pub fn zero(&self) -> FieldCoeffs {
        FieldCoeffs {
            coeffs: DVector::zeros(self.dim()),
            basis_id: self.id,
        }
    }

    /// Coordinates of the basis function `w_j` itself.
    pub fn unit(&self, j: usize) -> Result<FieldCoeffs> {
        if j >= self.dim() {
            return Err(Error::invalid(format!("basis index {j} out of range")));
        }
        let mut c = DVector::zeros(self.dim());
        c[j] = 1.0;
        Ok(FieldCoeffs {
            coeffs: c,
            basis_id: self.id,
        })
    }

    pub fn check(&self, u: &FieldCoeffs) -> Result<()> {
        if u.basis_id != self.id || u.len() != self.dim() {
            return Err(Error::invalid("field does not belong to this basis"));
        }
        Ok(())
    }

    /// Coefficients to nodal values, without a basis check.
    pub fn coeffs_to_nodal(&self, c: &DVector<f64>) -> DVector<f64> {
        match &self.transform {
            None => c.clone(),
            Some(t) => t * c,
        }
    }

    /// Nodal dual vector (entries paired with hats) to a basis dual vector.
    pub fn nodal_dual_to_basis(&self, d: &DVector<f64>) -> DVector<f64> {
        match &self.transform {
            None => d.clone(),
            Some(t) => t.tr_mul(d),
        }
    }

    /// Nodal operator (hat-space matrix) to the basis: `T^T A T`.
    pub fn nodal_matrix_to_basis(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.transform {
            None => a.clone(),
            Some(t) => t.transpose() * a * t,
        }
    }

    pub fn nodal_values(&self, u: &FieldCoeffs) -> Result<DVector<f64>> {
        self.check(u)?;
        Ok(self.coeffs_to_nodal(&u.coeffs))
    }

    /// Solves `mass * x = rhs` with the stored factorization.
    pub fn solve_mass(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.mass_chol.solve(rhs)
    }

    /// Boundary traces `(u(0), u(1))`.
    pub fn traces(&self, u: &FieldCoeffs) -> Result<[f64; 2]> {
        let nodal = self.nodal_values(u)?;
        Ok([nodal[0], nodal[nodal.len() - 1]])
    }

    /// Boundary values of each basis function, `(w_j(0), w_j(1))`.
    pub fn basis_traces(&self, j: usize) -> [f64; 2] {
        let last = self.mesh.n_nodes() - 1;
        match &self.transform {
            None => [
                if j == 0 { 1.0 } else { 0.0 },
                if j == last { 1.0 } else { 0.0 },
            ],
            Some(t) => [t[(0, j)], t[(last, j)]],
        }
    }

    pub fn eval(&self, u: &FieldCoeffs, x: f64) -> Result<f64> {
        let e = self.mesh.locate(x)?;
        let nodal = self.nodal_values(u)?;
        let (a, b) = (self.mesh.nodes()[e], self.mesh.nodes()[e + 1]);
        let s = (x - a) / (b - a);
        Ok((1.0 - s) * nodal[e] + s * nodal[e + 1])
    }

    /// Derivative of `u` at `x`; at interior nodes the right element is used.
    pub fn eval_grad(&self, u: &FieldCoeffs, x: f64) -> Result<f64> {
        let e = self.mesh.locate(x)?;
        let nodal = self.nodal_values(u)?;
        Ok((nodal[e + 1] - nodal[e]) / self.mesh.element_size(e))
    }

    /// Elementwise constant gradients of the nodal field.
    pub fn element_gradients(&self, nodal: &DVector<f64>) -> Vec<f64> {
        (0..self.mesh.n_elements())
            .map(|e| (nodal[e + 1] - nodal[e]) / self.mesh.element_size(e))
            .collect()
    }

    /// `||u'||_p^p + |u(0)|^p + |u(1)|^p`, exact for piecewise-linear fields.
    pub fn w1p_norm_pow(&self, u: &FieldCoeffs, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::invalid(format!(
                "norm exponent p = {p} must be at least 1"
            )));
        }
        let nodal = self.nodal_values(u)?;
        Ok(self.w1p_norm_pow_nodal(&nodal, p))
    }

    pub(crate) fn w1p_norm_pow_nodal(&self, nodal: &DVector<f64>, p: f64) -> f64 {
        let grad: f64 = (0..self.mesh.n_elements())
            .map(|e| {
                let h = self.mesh.element_size(e);
                h * ((nodal[e + 1] - nodal[e]) / h).abs().powf(p)
            })
            .sum();
        grad + nodal[0].abs().powf(p) + nodal[nodal.len() - 1].abs().powf(p)
    }

    /// The W^{1,p} norm `(||u'||_p^p + |u|_{p,boundary}^p)^{1/p}`.
    pub fn norm_w1p(&self, u: &FieldCoeffs, p: f64) -> Result<f64> {
        Ok(self.w1p_norm_pow(u, p)?.powf(1.0 / p))
    }

    pub fn norm_l2(&self, u: &FieldCoeffs) -> Result<f64> {
        let nodal = self.nodal_values(u)?;
        let mut acc = 0.0;
        for e in 0..self.mesh.n_elements() {
            let (a, h) = (self.mesh.nodes()[e], self.mesh.element_size(e));
            for &(x, w) in self.mesh.element_quadrature(e) {
                let s = (x - a) / h;
                let val = (1.0 - s) * nodal[e] + s * nodal[e + 1];
                acc += w * val * val;
            }
        }
        Ok(acc.sqrt())
    }

    /// Boundary L^q norm `(|u(0)|^q + |u(1)|^q)^{1/q}`.
    pub fn boundary_lq(&self, u: &FieldCoeffs, q: f64) -> Result<f64> {
        if !(q >= 1.0) {
            return Err(Error::invalid(format!(
                "boundary exponent q = {q} must be at least 1"
            )));
        }
        let [a, b] = self.traces(u)?;
        Ok(boundary_lq_of(a, b, q))
    }

    /// L^2 projection: solves `mass c = (g, w_j)` with the mesh quadrature.
    pub fn project_l2<G: Fn(f64) -> f64>(&self, g: G) -> Result<FieldCoeffs> {
        let n = self.mesh.n_nodes();
        let mut load = DVector::zeros(n);
        for e in 0..self.mesh.n_elements() {
            let (a, h) = (self.mesh.nodes()[e], self.mesh.element_size(e));
            for &(x, w) in self.mesh.element_quadrature(e) {
                let s = (x - a) / h;
                let gx = g(x);
                load[e] += w * gx * (1.0 - s);
                load[e + 1] += w * gx * s;
            }
        }
        let rhs = self.nodal_dual_to_basis(&load);
        let c = self.solve_mass(&rhs);
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Internal(
                "mass solve produced non-finite values".into(),
            ));
        }
        self.field(c)
    }

    /// Nodal interpolation; only meaningful for the hat basis.
    pub fn interpolate<G: Fn(f64) -> f64>(&self, g: G) -> Result<FieldCoeffs> {
        if self.kind != BasisKind::FemHat {
            return Err(Error::UnsupportedOperation(
                "nodal interpolation needs the hat basis; use project_l2 instead".into(),
            ));
        }
        let c =
            DVector::from_iterator(self.mesh.n_nodes(), self.mesh.nodes().iter().map(|&x| g(x)));
        self.field(c)
    }

    pub fn to_document(&self) -> BasisDocument {
        BasisDocument {
            kind: self.kind,
            dim: self.dim(),
            mesh: self.mesh.clone(),
            mass: triplets(&self.mass),
            stiffness: triplets(&self.stiffness),
            boundary_mass: triplets(&self.boundary_mass),
            eigvals: self.eigvals.clone(),
            transform: self.transform.as_ref().map(|t| {
                t.column_iter()
                    .map(|c| c.iter().copied().collect())
                    .collect()
            }),
        }
    }

    /// Rebuilds a basis from its document. Matrices are recomputed from the
    /// mesh and the stored transform; the document's triplets are informative.
    pub fn from_document(doc: &BasisDocument) -> Result<Self> {
        match (doc.kind, &doc.transform) {
            (BasisKind::FemHat, _) => Self::fem(&doc.mesh),
            (BasisKind::RobinEigen, Some(cols)) => {
                let n = doc.mesh.n_nodes();
                if cols.len() != doc.dim || cols.iter().any(|c| c.len() != n) {
                    return Err(Error::invalid("eigenbasis transform has the wrong shape"));
                }
                let t = DMatrix::from_fn(n, doc.dim, |i, j| cols[j][i]);
                let (m, k, b) = fem_matrices(&doc.mesh);
                let mass = congruence(&t, &m);
                let stiffness = congruence(&t, &k);
                let boundary_mass = congruence(&t, &b);
                Self::assemble(
                    BasisKind::RobinEigen,
                    doc.mesh.clone(),
                    Some(t),
                    mass,
                    stiffness,
                    boundary_mass,
                    doc.eigvals.clone(),
                )
            }
            (BasisKind::RobinEigen, None) => {
                Err(Error::invalid("eigenbasis document lacks its transform"))
            }
        }
    }
}

pub(crate) fn boundary_lq_of(a: f64, b: f64, q: f64) -> f64 {
    (a.abs().powf(q) + b.abs().powf(q)).powf(1.0 / q)
}

fn triplets(m: &DMatrix<f64>) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v != 0.0 {
                out.push((i, j, v));
            }
        }
    }
    out
}

/// Serializable form of a basis for reproducible runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BasisDocument {
    pub kind: BasisKind,
    pub dim: usize,
    pub mesh: Mesh,
    pub mass: Vec<(usize, usize, f64)>,
    pub stiffness: Vec<(usize, usize, f64)>,
    pub boundary_mass: Vec<(usize, usize, f64)>,
    pub eigvals: Option<Vec<f64>>,
    /// Column `j` holds the nodal values of `w_j`.
    pub transform: Option<Vec<Vec<f64>>>,
}

/// W^{1,p} distance between piecewise-linear fields living on different
/// meshes, computed exactly on the union of both node sets.
pub fn w1p_distance(
    a: (&BasisSet, &FieldCoeffs),
    b: (&BasisSet, &FieldCoeffs),
    p: f64,
) -> Result<f64> {
    let (ba, ua) = a;
    let (bb, ub) = b;
    let na = ba.nodal_values(ua)?;
    let nb = bb.nodal_values(ub)?;
    let mut xs: Vec<f64> = ba
        .mesh()
        .nodes()
        .iter()
        .chain(bb.mesh().nodes())
        .copied()
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
    let slope = |basis: &BasisSet, nodal: &DVector<f64>, x: f64| -> f64 {
        let e = basis.mesh().locate(x).expect("midpoint inside [0, 1]");
        (nodal[e + 1] - nodal[e]) / basis.mesh().element_size(e)
    };
    let mut acc = 0.0;
    for w in xs.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let d = slope(ba, &na, mid) - slope(bb, &nb, mid);
        acc += (w[1] - w[0]) * d.abs().powf(p);
    }
    let d0 = na[0] - nb[0];
    let d1 = na[na.len() - 1] - nb[nb.len() - 1];
    acc += d0.abs().powf(p) + d1.abs().powf(p);
    Ok(acc.powf(1.0 / p))
}
