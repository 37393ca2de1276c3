//! Dense symmetric linear algebra and dimensional constants.
//!
//! Everything here is deterministic: the eigensolver is a cyclic Jacobi
//! sweep with a fixed rotation order, and the orthonormalizer is modified
//! Gram-Schmidt with a fixed column order and sign convention, so identical
//! input bits always produce identical output bits.

use crate::Error;
use statrs::function::gamma::ln_gamma;

/// Hard cap on matrix dimension for the cyclic-sweep eigensolver.
pub const MAX_EIGEN_DIM: usize = 64;

const JACOBI_SWEEPS: usize = 30;

/// Dense row-major matrix. Minimal surface: just what the geometry needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<f64>]) -> Self {
        let c = cols.len();
        let r = if c > 0 { cols[0].len() } else { 0 };
        let mut m = Mat::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for i in 0..r {
                m.set(i, j, col[i]);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * out.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self.get(i, j) * x[j];
            }
            out[i] = s;
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
}

/// Symmetric matrix stored dense; the constructor enforces exact symmetry.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    mat: Mat,
}

impl SymMatrix {
    /// Wraps a square matrix, symmetrizing entries as `(a_ij + a_ji)/2` so the
    /// stored matrix is bit-exactly symmetric.
    pub fn new(mat: Mat) -> Result<Self, Error> {
        if mat.rows != mat.cols || mat.rows == 0 {
            return Err(Error::Dimension(format!(
                "symmetric matrix must be square and nonempty, got {}x{}",
                mat.rows, mat.cols
            )));
        }
        let n = mat.rows;
        let mut m = mat;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Ok(SymMatrix { mat: m })
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, d[i]);
        }
        SymMatrix { mat: m }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn as_mat(&self) -> &Mat {
        &self.mat
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.mat.get(i, j)
    }

    /// Compression `Uᵀ A U` for a frame U with `dim` rows.
    pub fn compress(&self, frame: &Mat) -> Result<SymMatrix, Error> {
        if frame.rows != self.dim() {
            return Err(Error::Dimension(format!(
                "frame has {} rows, matrix has dim {}",
                frame.rows,
                self.dim()
            )));
        }
        let ut = frame.transpose();
        SymMatrix::new(ut.matmul(&self.mat).matmul(frame))
    }
}

/// Result of a symmetric eigendecomposition: `A = Q Λ Qᵀ` with eigenvalues
/// sorted ascending and Q orthonormal.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, in the same order as `eigenvalues`.
    pub eigenvectors: Mat,
}

/// Cyclic Jacobi eigensolver for symmetric matrices of dimension at most
/// [`MAX_EIGEN_DIM`]. Eigenvalues come back sorted ascending.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenDecomposition, Error> {
    let n = a.dim();
    if n > MAX_EIGEN_DIM {
        return Err(Error::Dimension(format!(
            "eigensolver capped at dim {MAX_EIGEN_DIM}, got {n}"
        )));
    }
    let mut m = a.as_mat().clone();
    let mut q = Mat::identity(n);
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(EigenDecomposition { eigenvalues: vec![0.0; n], eigenvectors: q });
    }
    let tol = 1e-12 * scale;

    let mut converged = false;
    for _ in 0..JACOBI_SWEEPS {
        let off = off_diag_norm(&m);
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for qq in (p + 1)..n {
                let apq = m.get(p, qq);
                if apq.abs() <= tol * 1e-4 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(qq, qq);
                let theta = 0.5 * (aqq - app) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                apply_rotation(&mut m, p, qq, c, s);
                // accumulate Q <- Q * J(p,q,c,s)
                for i in 0..n {
                    let qip = q.get(i, p);
                    let qiq = q.get(i, qq);
                    q.set(i, p, c * qip - s * qiq);
                    q.set(i, qq, s * qip + c * qiq);
                }
            }
        }
    }
    if !converged && off_diag_norm(&m) > tol {
        return Err(Error::NonConvergence {
            off_diag: off_diag_norm(&m),
            threshold: tol,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).partial_cmp(&m.get(j, j)).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors.set(i, dst, q.get(i, src));
        }
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors: vectors })
}

fn off_diag_norm(m: &Mat) -> f64 {
    let n = m.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * m.get(i, j) * m.get(i, j);
        }
    }
    s.sqrt()
}

// Two-sided Jacobi rotation on rows/cols p and q of a symmetric matrix.
fn apply_rotation(m: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows;
    let app = m.get(p, p);
    let aqq = m.get(q, q);
    let apq = m.get(p, q);
    let new_pp = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    let new_qq = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    m.set(p, p, new_pp);
    m.set(q, q, new_qq);
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
    for i in 0..n {
        if i == p || i == q {
            continue;
        }
        let aip = m.get(i, p);
        let aiq = m.get(i, q);
        m.set(i, p, c * aip - s * aiq);
        m.set(p, i, c * aip - s * aiq);
        m.set(i, q, s * aip + c * aiq);
        m.set(q, i, s * aip + c * aiq);
    }
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns are
/// processed in order; the sign of each output column is fixed by making its
/// first component of magnitude above 1e-12 positive.
pub fn orthonormalize(columns: &[Vec<f64>]) -> Result<Mat, Error> {
    let k = columns.len();
    if k == 0 {
        return Err(Error::Dimension("no columns to orthonormalize".into()));
    }
    let n = columns[0].len();
    if columns.iter().any(|c| c.len() != n) || k > n {
        return Err(Error::Dimension(format!(
            "need k <= n columns of equal length, got k={k}, n={n}"
        )));
    }

    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut gram_det = 1.0;
    for col in columns {
        let norm0 = norm2(col);
        if norm0 <= 1e-300 {
            return Err(Error::RankDeficient { gram_det: 0.0 });
        }
        let mut v: Vec<f64> = col.iter().map(|x| x / norm0).collect();
        for _pass in 0..2 {
            for u in &frame {
                let d = dot(&v, u);
                for i in 0..n {
                    v[i] -= d * u[i];
                }
            }
        }
        let r = norm2(&v);
        gram_det *= r * r;
        if gram_det <= 1e-12 {
            return Err(Error::RankDeficient { gram_det });
        }
        for x in v.iter_mut() {
            *x /= r;
        }
        if let Some(pivot) = v.iter().find(|x| x.abs() > 1e-12) {
            if *pivot < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
        }
        frame.push(v);
    }
    Ok(Mat::from_cols(&frame))
}

/// Cholesky determinant of a symmetric positive definite matrix.
pub fn spd_det(a: &SymMatrix) -> Result<f64, Error> {
    let n = a.dim();
    let mut l = Mat::zeros(n, n);
    let mut det = 1.0;
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for p in 0..j {
                s -= l.get(i, p) * l.get(j, p);
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::NotPositiveDefinite { pivot: s });
                }
                let d = s.sqrt();
                l.set(i, i, d);
                det *= s;
            } else {
                l.set(i, j, s / l.get(j, j));
            }
        }
    }
    Ok(det)
}

/// Volume of the n-dimensional Euclidean unit ball, via log-Gamma.
pub fn unit_ball_volume(n: usize) -> f64 {
    assert!(n >= 1, "dimension must be positive");
    let nf = n as f64;
    (0.5 * nf * std::f64::consts::PI.ln() - ln_gamma(0.5 * nf + 1.0)).exp()
}

/// Mean Euclidean norm of a standard Gaussian vector in dimension n:
/// `d_n = √2 Γ((n+1)/2)/Γ(n/2)`.
pub fn gaussian_norm_mean(n: usize) -> f64 {
    assert!(n >= 1, "dimension must be positive");
    let nf = n as f64;
    (0.5 * std::f64::consts::LN_2 + ln_gamma(0.5 * (nf + 1.0)) - ln_gamma(0.5 * nf)).exp()
}

/// Quadratic form `xᵀ A x`.
pub fn quadform(a: &SymMatrix, x: &[f64]) -> f64 {
    let n = a.dim();
    debug_assert_eq!(x.len(), n);
    let mut s = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += a.get(i, j) * x[j];
        }
        s += x[i] * row;
    }
    s
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        SymMatrix::new(m).unwrap()
    }

    #[test]
    fn ball_volumes_low_dim() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-13);
        assert!((unit_ball_volume(3) - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn ball_volume_recursion() {
        // omega_n = (2 pi / n) omega_{n-2}
        for n in 3..=170 {
            let lhs = unit_ball_volume(n);
            let rhs = 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2);
            assert!(
                (lhs - rhs).abs() <= 1e-12 * rhs.abs(),
                "recursion fails at n={n}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn gaussian_norm_mean_values() {
        assert!((gaussian_norm_mean(1) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-14);
        assert!((gaussian_norm_mean(2) - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-14);
        let d100 = gaussian_norm_mean(100);
        assert!(d100 > 99.0_f64.sqrt() && d100 < 10.0, "d_100 = {d100}");
    }

    #[test]
    fn eigen_identity_and_diag() {
        let id = SymMatrix::new(Mat::identity(5)).unwrap();
        let dec = sym_eigen(&id).unwrap();
        for l in dec.eigenvalues {
            assert!((l - 1.0).abs() < 1e-14);
        }
        let d = SymMatrix::from_diag(&[9.0, 1.0, 4.0]);
        let dec = sym_eigen(&d).unwrap();
        assert_eq!(dec.eigenvalues.len(), 3);
        assert!((dec.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!((dec.eigenvalues[1] - 4.0).abs() < 1e-12);
        assert!((dec.eigenvalues[2] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn eigen_reconstruction_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_sym(6, &mut rng);
            let dec = sym_eigen(&a).unwrap();
            let q = &dec.eigenvectors;
            let lam = SymMatrix::from_diag(&dec.eigenvalues);
            let recon = q.matmul(lam.as_mat()).matmul(&q.transpose());
            let scale = a.as_mat().max_abs();
            let mut resid = 0.0_f64;
            for i in 0..6 {
                for j in 0..6 {
                    resid = resid.max((recon.get(i, j) - a.get(i, j)).abs());
                }
            }
            assert!(resid <= 1e-10 * scale, "residual {resid} vs scale {scale}");
            let qtq = q.transpose().matmul(q);
            let mut orth = 0.0_f64;
            for i in 0..6 {
                for j in 0..6 {
                    let target = if i == j { 1.0 } else { 0.0 };
                    orth = orth.max((qtq.get(i, j) - target).abs());
                }
            }
            assert!(orth <= 1e-10, "orthonormality residual {orth}");
        }
    }

    #[test]
    fn eigen_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_sym(8, &mut rng);
        let d1 = sym_eigen(&a).unwrap();
        let d2 = sym_eigen(&a).unwrap();
        assert_eq!(d1.eigenvalues, d2.eigenvalues);
        assert_eq!(d1.eigenvectors.data, d2.eigenvectors.data);
    }

    #[test]
    fn eigen_permutation_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_sym(7, &mut rng);
        // cyclic permutation matrix
        let mut p = Mat::zeros(7, 7);
        for i in 0..7 {
            p.set(i, (i + 1) % 7, 1.0);
        }
        let pap = SymMatrix::new(p.matmul(a.as_mat()).matmul(&p.transpose())).unwrap();
        let e1 = sym_eigen(&a).unwrap().eigenvalues;
        let e2 = sym_eigen(&pap).unwrap().eigenvalues;
        for (x, y) in e1.iter().zip(&e2) {
            assert!((x - y).abs() < 1e-9, "{x} vs {y}");
        }
    }

    #[test]
    fn orthonormalize_standard_basis_fixed() {
        let e1 = vec![1.0, 0.0, 0.0];
        let e2 = vec![0.0, 1.0, 0.0];
        let u = orthonormalize(&[e1.clone(), e2.clone()]).unwrap();
        assert_eq!(u.col(0), e1);
        assert_eq!(u.col(1), e2);
    }

    #[test]
    fn orthonormalize_spans_xy_plane() {
        let u = orthonormalize(&[vec![1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let utu = u.transpose().matmul(&u);
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((utu.get(i, j) - target).abs() <= 1e-12);
            }
        }
        // third coordinate stays zero
        assert_eq!(u.get(2, 0), 0.0);
        assert_eq!(u.get(2, 1), 0.0);
    }

    #[test]
    fn orthonormalize_random_gaussians() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..7).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let u = orthonormalize(&cols).unwrap();
        let utu = u.transpose().matmul(&u);
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((utu.get(i, j) - target).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn orthonormalize_rejects_dependent() {
        let err = orthonormalize(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap_err();
        assert!(matches!(err, Error::RankDeficient { .. }));
    }

    #[test]
    fn interlacing_random_compressions() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let n = rng.gen_range(3..=10);
            let k = rng.gen_range(1..n);
            let a = random_sym(n, &mut rng);
            let cols: Vec<Vec<f64>> = (0..k)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let u = match orthonormalize(&cols) {
                Ok(u) => u,
                Err(_) => continue,
            };
            let lam = sym_eigen(&a).unwrap().eigenvalues;
            let mu = sym_eigen(&a.compress(&u).unwrap()).unwrap().eigenvalues;
            for i in 0..k {
                assert!(lam[i] <= mu[i] + 1e-9, "lower interlacing fails");
                assert!(mu[i] <= lam[n - k + i] + 1e-9, "upper interlacing fails");
            }
        }
    }

    #[test]
    fn spd_det_matches_product_of_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let b = random_sym(5, &mut rng);
        // make SPD: B^T B + I
        let btb = b.as_mat().transpose().matmul(b.as_mat());
        let mut m = btb;
        for i in 0..5 {
            m.set(i, i, m.get(i, i) + 1.0);
        }
        let spd = SymMatrix::new(m).unwrap();
        let det = spd_det(&spd).unwrap();
        let prod: f64 = sym_eigen(&spd).unwrap().eigenvalues.iter().product();
        assert!((det - prod).abs() <= 1e-9 * prod.abs());
    }
}
