//! Small dense complex linear algebra helpers shared by every module.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest entrywise modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && max_abs_diff(m, &m.adjoint()) <= tol
}

/// Returns (A + A^H)/2.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

pub fn outer(a: &CVector, b: &CVector) -> CMatrix {
    a * b.adjoint()
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
/// Columns of the returned matrix are the matching eigenvectors.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    eigh(m).0
}

/// f(M) for Hermitian M, evaluated on the spectrum.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> Complex64) -> CMatrix {
    let (values, vectors) = eigh(m);
    from_eigen(&vectors, values.iter().map(|&x| f(x)))
}

pub fn from_eigen(vectors: &CMatrix, diag: impl Iterator<Item = Complex64>) -> CMatrix {
    let d = CVector::from_iterator(vectors.ncols(), diag);
    vectors * CMatrix::from_diagonal(&d) * vectors.adjoint()
}

const CLUSTER_GAP: f64 = 1e-6;
const SPLIT_DEPTH: usize = 12;

/// Eigenvalues and eigenvectors (columns) of a unitary matrix.
///
/// Diagonalizes the commuting Hermitian part (e^{-i t} U + e^{i t} U^H)/2,
/// whose spectrum is cos(phi - t); clusters that stay degenerate are split
/// again with a different `t`. Deterministic and free of QR convergence
/// issues on highly degenerate unitaries.
pub fn unitary_eigen(u: &CMatrix) -> (Vec<Complex64>, CMatrix) {
    let n = u.nrows();
    let mut values = Vec::with_capacity(n);
    let mut columns = Vec::with_capacity(n);
    split_cluster(u, &identity(n), 0, &mut values, &mut columns);
    (values, CMatrix::from_columns(&columns))
}

fn split_cluster(u: &CMatrix, basis: &CMatrix, depth: usize, values: &mut Vec<Complex64>, columns: &mut Vec<CVector>) {
    let m = basis.adjoint() * u * basis;
    let k = m.nrows();
    let rayleigh = |v: &CVector| v.dotc(&(u * v));
    let mean = trace(&m) / k as f64;
    if k == 1 || max_abs_diff(&m, &(identity(k) * mean)) < 1e-13 || depth >= SPLIT_DEPTH {
        for j in 0..k {
            let v = basis.column(j).into_owned();
            values.push(rayleigh(&v));
            columns.push(v);
        }
        return;
    }
    // golden-angle offsets keep successive cuts from repeating
    let t = 0.5 + 2.399_963_229_728_653 * depth as f64;
    let rot = Complex64::from_polar(1.0, -t);
    let a = (&m * rot + m.adjoint() * rot.conj()).scale(0.5);
    let (evals, evecs) = eigh(&a);
    let lifted = basis * evecs;
    let mut start = 0;
    for end in 1..=k {
        if end == k || evals[end] - evals[end - 1] > CLUSTER_GAP {
            let block = lifted.columns(start, end - start).into_owned();
            split_cluster(u, &block, depth + 1, values, columns);
            start = end;
        }
    }
}

/// Max entrywise deviation between `a` and `b` after removing the best global phase.
pub fn max_abs_diff_up_to_phase(a: &CMatrix, b: &CMatrix) -> f64 {
    let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let n = overlap.norm();
    let phase = if n > 0.0 { overlap / n } else { ONE };
    max_abs_diff(&a.map(|x| x * phase), b)
}

/// Orthonormal basis of the whole space whose leading columns are `leading`
/// (orthonormalized in order). Remaining columns are drawn greedily from the
/// computational basis, always taking the candidate with the largest residual.
pub fn complete_orthonormal_basis(leading: &[CVector], dim: usize) -> CMatrix {
    let mut cols: Vec<CVector> = Vec::with_capacity(dim);
    for v in leading {
        if let Some(u) = orthogonalized(v, &cols) {
            cols.push(u);
        }
    }
    while cols.len() < dim {
        let best = (0..dim)
            .map(|i| {
                let mut e = CVector::zeros(dim);
                e[i] = ONE;
                let r = residual(&e, &cols);
                (r.norm(), r)
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .expect("dim > 0");
        cols.push(best.1.unscale(best.0));
    }
    CMatrix::from_columns(&cols)
}

fn residual(v: &CVector, basis: &[CVector]) -> CVector {
    let mut r = v.clone();
    // two passes of modified Gram-Schmidt
    for _ in 0..2 {
        for b in basis {
            let proj = b.dotc(&r);
            r -= b * proj;
        }
    }
    r
}

fn orthogonalized(v: &CVector, basis: &[CVector]) -> Option<CVector> {
    let r = residual(v, basis);
    let n = r.norm();
    (n > 1e-10).then(|| r.unscale(n))
}

/// N-point discrete Fourier matrix, F[j][k] = exp(2 pi i jk/N)/sqrt(N).
pub fn fourier_matrix(n: usize) -> CMatrix {
    let norm = 1.0 / (n as f64).sqrt();
    CMatrix::from_fn(n, n, |j, k| {
        let angle = 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
        Complex64::from_polar(norm, angle)
    })
}

/// Permutation matrix exchanging the two tensor factors of C^a (x) C^b.
/// Maps |i>|j> to |j>|i>.
pub fn swap_matrix(a: usize, b: usize) -> CMatrix {
    let mut s = CMatrix::zeros(a * b, a * b);
    for i in 0..a {
        for j in 0..b {
            s[(j * a + i, i * b + j)] = ONE;
        }
    }
    s
}

/// Row-major list of `[re, im]` pairs, the fixture format for matrices.
pub mod matrix_json {
    use super::CMatrix;
    use num_complex::Complex64;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Option<CMatrix> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return None;
        }
        Some(CMatrix::from_fn(nrows, ncols, |r, c| {
            Complex64::new(rows[r][c][0], rows[r][c][1])
        }))
    }

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).ok_or_else(|| D::Error::custom("ragged matrix rows"))
    }
}
