//! Ellipsoids as exact geometric objects: sections, projections,
//! quermassintegrals, dual affine quermassintegrals and extremal-section
//! scans.
//!
//! An ellipsoid is stored as its semi-axis lengths `a_1 <= ... <= a_n`
//! together with the orthonormal frame of axis directions. Its shape matrix
//! is `A = F diag(a_i^{-2}) Fᵀ`, so `E = {x : <Ax, x> <= 1}`. Sections and
//! projections by a subspace come from the eigendecomposition of the
//! compressed shape matrix (respectively its inverse); central hyperplane
//! section volumes and projection volumes have closed forms used by the
//! Monte-Carlo quermassintegral estimators.

use crate::numkit::{
    quadform, spd_det, sym_eigen, unit_ball_volume, Mat, SymMatrix,
};
use crate::sampling::{
    mc_estimate, mc_sphere_integral, sample_grassmannian, McEstimate, RngStream, Subspace,
};
use crate::Error;
use serde::{Deserialize, Serialize};

/// Largest allowed axis ratio `a_n / a_1`; the eigensolver loses accuracy
/// beyond this.
pub const CONDITION_CAP: f64 = 1e8;

/// An origin-symmetric ellipsoid with semi-axes sorted ascending.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    axes: Vec<f64>,
    frame: Mat,
}

impl Ellipsoid {
    /// Builds an ellipsoid from semi-axis lengths and the orthonormal frame
    /// whose column `i` is the direction of axis `i`. Axes are sorted
    /// ascending; frame columns are permuted along with them.
    pub fn new(axes: Vec<f64>, frame: Mat) -> Result<Self, Error> {
        let n = axes.len();
        if n == 0 {
            return Err(Error::InvalidBody("ellipsoid needs at least one axis".into()));
        }
        if frame.rows != n || frame.cols != n {
            return Err(Error::Dimension(format!(
                "frame must be {n}x{n}, got {}x{}",
                frame.rows, frame.cols
            )));
        }
        if axes.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidBody("all semi-axes must be positive and finite".into()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| axes[i].partial_cmp(&axes[j]).unwrap());
        let sorted: Vec<f64> = order.iter().map(|&i| axes[i]).collect();
        if sorted[n - 1] / sorted[0] > CONDITION_CAP {
            return Err(Error::InvalidBody(format!(
                "axis ratio {:.3e} exceeds conditioning cap {CONDITION_CAP:.0e}",
                sorted[n - 1] / sorted[0]
            )));
        }
        let mut permuted = Mat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            for r in 0..n {
                permuted.set(r, dst, frame.get(r, src));
            }
        }
        let utu = permuted.transpose().matmul(&permuted);
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                if (utu.get(i, j) - target).abs() > 1e-10 {
                    return Err(Error::InvalidBody("frame is not orthonormal".into()));
                }
            }
        }
        Ok(Ellipsoid { axes: sorted, frame: permuted })
    }

    /// Axis-aligned ellipsoid: axis `i` along the standard basis direction
    /// carrying the i-th smallest length after sorting.
    pub fn axis_aligned(axes: Vec<f64>) -> Result<Self, Error> {
        let n = axes.len();
        Ellipsoid::new(axes, Mat::identity(n))
    }

    pub fn ball(n: usize, radius: f64) -> Result<Self, Error> {
        Ellipsoid::axis_aligned(vec![radius; n])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[f64] {
        &self.axes
    }

    pub fn frame(&self) -> &Mat {
        &self.frame
    }

    /// Inradius `r(E) = a_1`.
    pub fn inradius(&self) -> f64 {
        self.axes[0]
    }

    /// Circumradius `R(E) = a_n`.
    pub fn circumradius(&self) -> f64 {
        self.axes[self.axes.len() - 1]
    }

    pub fn shape_matrix(&self) -> SymMatrix {
        self.weighted_gram(|a| 1.0 / (a * a))
    }

    pub fn inverse_shape_matrix(&self) -> SymMatrix {
        self.weighted_gram(|a| a * a)
    }

    fn weighted_gram(&self, w: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.dim();
        let mut m = Mat::zeros(n, n);
        for k in 0..n {
            let wk = w(self.axes[k]);
            for i in 0..n {
                let fik = self.frame.get(i, k);
                if fik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = m.get(i, j) + wk * fik * self.frame.get(j, k);
                    m.set(i, j, v);
                }
            }
        }
        SymMatrix::new(m).expect("square by construction")
    }

    /// Exact volume `omega_n * prod a_i`.
    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim()) * self.axes.iter().product::<f64>()
    }

    pub fn scaled(&self, lambda: f64) -> Result<Ellipsoid, Error> {
        Ellipsoid::new(self.axes.iter().map(|a| a * lambda).collect(), self.frame.clone())
    }

    /// Polar ellipsoid: reciprocal axes, same axis directions.
    pub fn polar(&self) -> Ellipsoid {
        let n = self.dim();
        // reciprocals reverse the ascending order; reverse frame columns too
        let axes: Vec<f64> = self.axes.iter().rev().map(|a| 1.0 / a).collect();
        let mut frame = Mat::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                frame.set(i, j, self.frame.get(i, n - 1 - j));
            }
        }
        Ellipsoid { axes, frame }
    }

    /// Support function `h_E(u) = sqrt(uᵀ A^{-1} u)` for unit u.
    pub fn support(&self, u: &[f64]) -> f64 {
        quadform(&self.inverse_shape_matrix(), u).sqrt()
    }

    /// Minkowski functional `||x||_E = sqrt(xᵀ A x)`.
    pub fn minkowski_norm(&self, x: &[f64]) -> f64 {
        quadform(&self.shape_matrix(), x).sqrt()
    }

    /// Central section `E ∩ H` as a k-dimensional ellipsoid, with semi-axes
    /// `b_j = lambda_{k-j+1}(Uᵀ A U)^{-1/2}`.
    pub fn section(&self, h: &Subspace) -> Result<Ellipsoid, Error> {
        self.check_subspace(h)?;
        let m = self.shape_matrix().compress(&h.frame)?;
        let dec = sym_eigen(&m)?;
        self.from_compressed_spectrum(&dec.eigenvalues, &dec.eigenvectors, |l| 1.0 / l.sqrt())
    }

    /// Orthogonal projection `P_H(E)` as a k-dimensional ellipsoid, with
    /// semi-axes the square roots of the eigenvalues of `Uᵀ A^{-1} U`.
    pub fn projection(&self, h: &Subspace) -> Result<Ellipsoid, Error> {
        self.check_subspace(h)?;
        let m = self.inverse_shape_matrix().compress(&h.frame)?;
        let dec = sym_eigen(&m)?;
        self.from_compressed_spectrum(&dec.eigenvalues, &dec.eigenvectors, |l| l.sqrt())
    }

    fn check_subspace(&self, h: &Subspace) -> Result<(), Error> {
        if h.ambient_dim != self.dim() {
            return Err(Error::Dimension(format!(
                "subspace ambient dim {} does not match ellipsoid dim {}",
                h.ambient_dim,
                self.dim()
            )));
        }
        Ok(())
    }

    fn from_compressed_spectrum(
        &self,
        eigenvalues: &[f64],
        eigenvectors: &Mat,
        axis_of: impl Fn(f64) -> f64,
    ) -> Result<Ellipsoid, Error> {
        for &l in eigenvalues {
            if !(l > 0.0) {
                return Err(Error::NotPositiveDefinite { pivot: l });
            }
        }
        let axes: Vec<f64> = eigenvalues.iter().map(|&l| axis_of(l)).collect();
        Ellipsoid::new(axes, eigenvectors.clone())
    }

    /// Section by the hyperplane orthogonal to `xi`.
    pub fn hyperplane_section(&self, xi: &[f64]) -> Result<Ellipsoid, Error> {
        let line = Subspace::from_frame(Mat::from_cols(&[normalized(xi)?]))?;
        self.section(&line.orthogonal_complement()?)
    }

    /// Closed-form volume of the central hyperplane section orthogonal to
    /// `xi`: `omega_{n-1} (prod a_i) / h_E(xi)`.
    pub fn hyperplane_section_volume(&self, xi: &[f64]) -> Result<f64, Error> {
        let u = normalized(xi)?;
        let prod: f64 = self.axes.iter().product();
        Ok(unit_ball_volume(self.dim() - 1) * prod / self.support(&u))
    }

    /// Closed-form volume of the projection onto a subspace:
    /// `omega_k sqrt(det(Uᵀ A^{-1} U))`.
    pub fn projection_volume(&self, h: &Subspace) -> Result<f64, Error> {
        self.check_subspace(h)?;
        let m = self.inverse_shape_matrix().compress(&h.frame)?;
        Ok(unit_ball_volume(h.dim) * spd_det(&m)?.sqrt())
    }

    /// Closed-form volume of the section by a subspace:
    /// `omega_k / sqrt(det(Uᵀ A U))`.
    pub fn section_volume(&self, h: &Subspace) -> Result<f64, Error> {
        self.check_subspace(h)?;
        let m = self.shape_matrix().compress(&h.frame)?;
        Ok(unit_ball_volume(h.dim) / spd_det(&m)?.sqrt())
    }

    /// Surface area via Rivin's spherical integral:
    /// `S(E) = n |E| ∫ sqrt(xiᵀ A xi) dσ(xi)`.
    pub fn surface_rivin(&self, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        let n = self.dim();
        if n == 1 {
            // a segment has two boundary points
            return Ok(McEstimate::exact(2.0, stream.seed));
        }
        let a = self.shape_matrix();
        let est = mc_sphere_integral(|xi| quadform(&a, xi).sqrt(), n, samples, stream)?;
        Ok(est.scaled(n as f64 * self.volume()))
    }

    /// `M(E) = ∫ ||xi||_E dσ`.
    pub fn m_parameter(&self, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        let a = self.shape_matrix();
        mc_sphere_integral(|xi| quadform(&a, xi).sqrt(), self.dim(), samples, stream)
    }

    /// Mean width in the spherical-average normalization: `w(E) = ∫ h_E dσ`.
    pub fn mean_width(&self, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        let ainv = self.inverse_shape_matrix();
        mc_sphere_integral(|xi| quadform(&ainv, xi).sqrt(), self.dim(), samples, stream)
    }

    /// Quermassintegral `W_j(E)`: exact determinant for j = 0, Rivin for
    /// j = 1, Kubota Monte-Carlo otherwise.
    pub fn quermass(&self, j: usize, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        let n = self.dim();
        if j > n {
            return Err(Error::Dimension(format!("quermass index {j} out of range for dim {n}")));
        }
        if j == 0 {
            return Ok(McEstimate::exact(self.volume(), stream.seed));
        }
        if j == n {
            return Ok(McEstimate::exact(unit_ball_volume(n), stream.seed));
        }
        if j == 1 {
            return Ok(self.surface_rivin(samples, stream)?.scaled(1.0 / n as f64));
        }
        self.quermass_kubota(j, samples, stream)
    }

    /// Kubota's formula: `W_j(E) = omega_n E_H[ sqrt(det(Uᵀ A^{-1} U)) ]`
    /// over Haar `H` in `G_{n,n-j}`.
    pub fn quermass_kubota(
        &self,
        j: usize,
        samples: u64,
        stream: RngStream,
    ) -> Result<McEstimate, Error> {
        let n = self.dim();
        if j == 0 || j >= n {
            return Err(Error::Dimension(format!("kubota needs 1 <= j <= n-1, got j={j}")));
        }
        let ainv = self.inverse_shape_matrix();
        let est = mc_estimate(samples, stream, |rng| {
            let h = sample_grassmannian(n, n - j, rng)?;
            let m = ainv.compress(&h.frame)?;
            Ok(spd_det(&m)?.sqrt())
        })?;
        Ok(est.scaled(unit_ball_volume(n)))
    }

    /// Normalized quermassintegral `Q_k = (W_{n-k}/omega_n)^{1/k}`, extended
    /// to `k = n` by the volume radius.
    pub fn q_k(&self, k: usize, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        let n = self.dim();
        if k == 0 || k > n {
            return Err(Error::Dimension(format!("q_k needs 1 <= k <= n, got k={k}")));
        }
        if k == n {
            return Ok(McEstimate::exact(self.vrad(), stream.seed));
        }
        let w = self.quermass(n - k, samples, stream)?;
        let omega = unit_ball_volume(n);
        let kf = k as f64;
        Ok(w.mapped(
            |x| (x / omega).powf(1.0 / kf),
            |x| (x / omega).powf(1.0 / kf) / (kf * x),
        ))
    }

    /// Volume radius `(|E|/omega_n)^{1/n} = (prod a_i)^{1/n}`, exact.
    pub fn vrad(&self) -> f64 {
        let n = self.dim() as f64;
        (self.axes.iter().map(|a| a.ln()).sum::<f64>() / n).exp()
    }

    /// Normalized dual affine quermassintegral `Phi~_[k](E)`, via the closed
    /// form for section volumes over Haar `(n-k)`-dimensional subspaces.
    pub fn dual_affine_quermass(
        &self,
        k: usize,
        samples: u64,
        stream: RngStream,
    ) -> Result<McEstimate, Error> {
        let n = self.dim();
        if k == 0 || k >= n {
            return Err(Error::Dimension(format!("dual affine needs 1 <= k <= n-1, got k={k}")));
        }
        let a = self.shape_matrix();
        let omega_s = unit_ball_volume(n - k);
        let nf = n as f64;
        let kf = k as f64;
        // E over H^perp ~ Haar on G_{n,n-k} of |E cap H^perp|^n
        let inner = mc_estimate(samples, stream, |rng| {
            let w = sample_grassmannian(n, n - k, rng)?;
            let m = a.compress(&w.frame)?;
            Ok((omega_s / spd_det(&m)?.sqrt()).powi(n as i32))
        })?;
        let vol_factor = self.volume().powf(-(nf - kf) / (nf * kf));
        Ok(inner
            .mapped(|x| x.powf(1.0 / (kf * nf)), |x| x.powf(1.0 / (kf * nf)) / (kf * nf * x))
            .scaled(vol_factor))
    }

    /// Dual affine quermassintegral of the unit ball, closed form:
    /// `omega_n^{-(n-k)/(nk)} omega_{n-k}^{1/k}`.
    pub fn dual_affine_ball_value(n: usize, k: usize) -> f64 {
        let nf = n as f64;
        let kf = k as f64;
        unit_ball_volume(n).powf(-(nf - kf) / (nf * kf)) * unit_ball_volume(n - k).powf(1.0 / kf)
    }

    /// Average hyperplane section volume `as(E) = ∫ |E ∩ xi^perp| dσ(xi)`.
    pub fn avg_section(&self, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        let n = self.dim();
        if n < 2 {
            return Err(Error::Dimension("avg_section needs dim >= 2".into()));
        }
        let ainv = self.inverse_shape_matrix();
        let c = unit_ball_volume(n - 1) * self.axes.iter().product::<f64>();
        mc_sphere_integral(|xi| c / quadform(&ainv, xi).sqrt(), n, samples, stream)
    }

    /// Coordinate subspace spanned by the `m` smallest-axis directions
    /// (the paper's F) or the `m` largest (the paper's E-hat).
    pub fn extremal_subspace(&self, m: usize, largest: bool) -> Result<Subspace, Error> {
        let n = self.dim();
        if m == 0 || m > n {
            return Err(Error::Dimension(format!("subspace dim {m} out of range")));
        }
        let cols: Vec<Vec<f64>> = if largest {
            (n - m..n).map(|j| self.frame.col(j)).collect()
        } else {
            (0..m).map(|j| self.frame.col(j)).collect()
        };
        Subspace::from_frame(Mat::from_cols(&cols))
    }

    /// Random-scan confirmation that `W_j(E ∩ H)` over Haar subspaces of
    /// codimension `k` stays between the two coordinate extremizers.
    pub fn extremal_section_scan(
        &self,
        k: usize,
        j: usize,
        trials: u64,
        samples: u64,
        stream: RngStream,
    ) -> Result<ScanReport, Error> {
        let n = self.dim();
        let m = n - k; // section dimension
        if k == 0 || k >= n {
            return Err(Error::Dimension(format!("codimension k={k} out of range for dim {n}")));
        }
        if j >= m {
            return Err(Error::Dimension(format!("quermass index j={j} out of range for dim {m}")));
        }
        let lo_sub = self.extremal_subspace(m, false)?;
        let hi_sub = self.extremal_subspace(m, true)?;
        let lo = self.section(&lo_sub)?.quermass(j, samples, stream.derive(u64::MAX))?;
        let hi = self.section(&hi_sub)?.quermass(j, samples, stream.derive(u64::MAX - 1))?;

        let mut report = ScanReport {
            codim: k,
            quermass_index: j,
            trials,
            min_coordinate: lo,
            max_coordinate: hi,
            scan_min: f64::INFINITY,
            scan_max: f64::NEG_INFINITY,
            violations: 0,
            worst_margin: f64::INFINITY,
            offending_frame: None,
            seed: stream.seed,
        };
        let mut rng = stream.rng();
        for t in 0..trials {
            let h = sample_grassmannian(n, m, &mut rng)?;
            let w = self.section(&h)?.quermass(j, samples, stream.derive(t))?;
            report.scan_min = report.scan_min.min(w.mean);
            report.scan_max = report.scan_max.max(w.mean);
            let tol_lo = 4.0 * (w.rel_stderr().powi(2) + lo.rel_stderr().powi(2)).sqrt() + 1e-9;
            let tol_hi = 4.0 * (w.rel_stderr().powi(2) + hi.rel_stderr().powi(2)).sqrt() + 1e-9;
            let lower_margin = w.mean / lo.mean - (1.0 - tol_lo);
            let upper_margin = (1.0 + tol_hi) - w.mean / hi.mean;
            let margin = lower_margin.min(upper_margin);
            report.worst_margin = report.worst_margin.min(margin);
            if margin < 0.0 {
                report.violations += 1;
                if report.offending_frame.is_none() {
                    report.offending_frame =
                        Some((0..m).map(|c| h.frame.col(c)).collect::<Vec<_>>());
                }
            }
        }
        Ok(report)
    }
}

fn normalized(x: &[f64]) -> Result<Vec<f64>, Error> {
    let norm = crate::numkit::norm2(x);
    if norm <= 1e-12 {
        return Err(Error::Domain("direction vector has near-zero norm".into()));
    }
    Ok(x.iter().map(|v| v / norm).collect())
}

/// Result of an extremal-section random scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub codim: usize,
    pub quermass_index: usize,
    pub trials: u64,
    pub min_coordinate: McEstimate,
    pub max_coordinate: McEstimate,
    pub scan_min: f64,
    pub scan_max: f64,
    pub violations: u64,
    pub worst_margin: f64,
    pub offending_frame: Option<Vec<Vec<f64>>>,
    pub seed: u64,
}

impl ScanReport {
    pub fn ensure_clean(&self) -> Result<(), Error> {
        if self.violations == 0 {
            return Ok(());
        }
        Err(Error::ScanViolation {
            context: format!(
                "extremal section scan (codim {}, W_{})",
                self.codim, self.quermass_index
            ),
            value: self.scan_max,
            bound: self.max_coordinate.mean,
            frame: self.offending_frame.clone().unwrap_or_default(),
        })
    }
}

/// Ellipsoid of revolution `E_{r,s}` in R^m: equatorial radius `r` in the
/// first m-1 coordinates, polar radius `s` in the last.
#[derive(Debug, Clone, Copy)]
pub struct RevolutionEllipsoid {
    pub dim: usize,
    pub equatorial: f64,
    pub polar: f64,
}

impl RevolutionEllipsoid {
    pub fn new(dim: usize, equatorial: f64, polar: f64) -> Result<Self, Error> {
        if dim < 2 {
            return Err(Error::Dimension("revolution ellipsoid needs dim >= 2".into()));
        }
        if !(equatorial > 0.0) || !(polar > 0.0) {
            return Err(Error::InvalidBody("radii must be positive".into()));
        }
        Ok(RevolutionEllipsoid { dim, equatorial, polar })
    }

    pub fn to_ellipsoid(self) -> Result<Ellipsoid, Error> {
        let mut axes = vec![self.equatorial; self.dim];
        axes[self.dim - 1] = self.polar;
        Ellipsoid::axis_aligned(axes)
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.dim) * self.equatorial.powi(self.dim as i32 - 1) * self.polar
    }

    /// `W_j(E_{r,s})` via the closed spherical integral:
    /// `omega_m r^{m-j} ∫ ((s/r)^2 Σ_{i<=m-j} θ_i² + Σ_{i>m-j} θ_i²)^{1/2} dσ`.
    pub fn quermass(&self, j: usize, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        let m = self.dim;
        if j > m {
            return Err(Error::Dimension(format!("quermass index {j} out of range for dim {m}")));
        }
        if j == m {
            return Ok(McEstimate::exact(unit_ball_volume(m), stream.seed));
        }
        let ratio_sq = (self.polar / self.equatorial).powi(2);
        let split = m - j;
        let est = mc_sphere_integral(
            move |theta| {
                let mut head = 0.0;
                let mut tail = 0.0;
                for (i, t) in theta.iter().enumerate() {
                    if i < split {
                        head += t * t;
                    } else {
                        tail += t * t;
                    }
                }
                (ratio_sq * head + tail).sqrt()
            },
            m,
            samples,
            stream,
        )?;
        Ok(est.scaled(unit_ball_volume(m) * self.equatorial.powi((m - j) as i32)))
    }
}
