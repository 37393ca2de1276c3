//! Seedable sampling on the sphere, Gauss space and the Grassmannian, plus a
//! chunked Monte-Carlo estimator with a reproducible parallel reduction.
//!
//! Streams are ChaCha counter streams: a `(seed, stream_id)` pair pins the
//! sample sequence on every platform, and distinct stream ids give
//! statistically independent sequences without any coordination. Estimates
//! are accumulated in fixed chunks of [`CHUNK_SIZE`] samples, one derived
//! stream per chunk, and reduced as an ordered sum, so the result does not
//! depend on how many workers ran the chunks.

use crate::numkit::{norm2, orthonormalize, Mat};
use crate::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Samples per chunk in the parallel reduction.
pub const CHUNK_SIZE: u64 = 4096;

const MAX_RESAMPLES: usize = 100;

/// A reproducible random stream, identified by a seed and a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    /// Child stream for sub-task `index`; mixing keeps distinct parents and
    /// indices on distinct ChaCha streams.
    pub fn derive(&self, index: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream_id: splitmix(self.stream_id ^ splitmix(index)),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// A Monte-Carlo estimate with its standard error and reproduction seed.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn exact(value: f64, seed: u64) -> Self {
        McEstimate { mean: value, stderr: 0.0, samples: 2, seed }
    }

    pub fn scaled(&self, factor: f64) -> McEstimate {
        McEstimate {
            mean: self.mean * factor,
            stderr: self.stderr * factor.abs(),
            ..*self
        }
    }

    /// First-order delta-method transform: `g(mean)` with `|g'(mean)|·stderr`.
    pub fn mapped(&self, g: impl Fn(f64) -> f64, dg: impl Fn(f64) -> f64) -> McEstimate {
        McEstimate {
            mean: g(self.mean),
            stderr: dg(self.mean).abs() * self.stderr,
            ..*self
        }
    }

    pub fn rel_stderr(&self) -> f64 {
        if self.mean == 0.0 {
            0.0
        } else {
            self.stderr / self.mean.abs()
        }
    }

    /// Ratio of two independent estimates, stderr combined in quadrature.
    pub fn ratio(&self, denom: &McEstimate) -> McEstimate {
        let mean = self.mean / denom.mean;
        let rel = (self.rel_stderr().powi(2) + denom.rel_stderr().powi(2)).sqrt();
        McEstimate {
            mean,
            stderr: mean.abs() * rel,
            samples: self.samples.min(denom.samples),
            seed: self.seed,
        }
    }

    /// Product of two independent estimates.
    pub fn product(&self, other: &McEstimate) -> McEstimate {
        let mean = self.mean * other.mean;
        let rel = (self.rel_stderr().powi(2) + other.rel_stderr().powi(2)).sqrt();
        McEstimate {
            mean,
            stderr: mean.abs() * rel,
            samples: self.samples.min(other.samples),
            seed: self.seed,
        }
    }
}

/// A k-dimensional linear subspace of R^n given by an orthonormal frame.
#[derive(Debug, Clone)]
pub struct Subspace {
    pub ambient_dim: usize,
    pub dim: usize,
    /// n x k matrix with orthonormal columns.
    pub frame: Mat,
}

impl Subspace {
    pub fn from_frame(frame: Mat) -> Result<Self, Error> {
        let (n, k) = (frame.rows, frame.cols);
        if k == 0 || k > n {
            return Err(Error::Dimension(format!("subspace needs 1 <= k <= n, got k={k}, n={n}")));
        }
        let utu = frame.transpose().matmul(&frame);
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                if (utu.get(i, j) - target).abs() > 1e-10 {
                    return Err(Error::Dimension("frame columns are not orthonormal".into()));
                }
            }
        }
        Ok(Subspace { ambient_dim: n, dim: k, frame })
    }

    /// Coordinate subspace spanned by standard basis vectors `indices`.
    pub fn coordinate(n: usize, indices: &[usize]) -> Result<Self, Error> {
        let cols: Vec<Vec<f64>> = indices
            .iter()
            .map(|&i| {
                let mut e = vec![0.0; n];
                e[i] = 1.0;
                e
            })
            .collect();
        Subspace::from_frame(Mat::from_cols(&cols))
    }

    /// Orthogonal complement, from the trailing eigenvectors of `I - UUᵀ`.
    pub fn orthogonal_complement(&self) -> Result<Subspace, Error> {
        let n = self.ambient_dim;
        let k = self.dim;
        if k == n {
            return Err(Error::Dimension("full space has no orthogonal complement".into()));
        }
        // Project the standard basis onto the complement and orthonormalize,
        // keeping the n-k directions with the largest residuals.
        let mut resid: Vec<(f64, Vec<f64>)> = (0..n)
            .map(|i| {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                for j in 0..k {
                    let u = self.frame.col(j);
                    let d = crate::numkit::dot(&v, &u);
                    for t in 0..n {
                        v[t] -= d * u[t];
                    }
                }
                (norm2(&v), v)
            })
            .collect();
        resid.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let cols: Vec<Vec<f64>> = resid.into_iter().take(n - k).map(|(_, v)| v).collect();
        let frame = orthonormalize(&cols)?;
        Subspace::from_frame(frame)
    }
}

/// Fills `out` with standard Gaussians via Box-Muller, two at a time.
pub fn fill_gaussian(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    let mut i = 0;
    while i < out.len() {
        let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out[i] = r * theta.cos();
        if i + 1 < out.len() {
            out[i + 1] = r * theta.sin();
        }
        i += 2;
    }
}

/// Uniform point on the unit sphere S^{n-1}.
pub fn sample_sphere(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, Error> {
    assert!(n >= 1);
    let mut v = vec![0.0; n];
    for _ in 0..MAX_RESAMPLES {
        fill_gaussian(rng, &mut v);
        let norm = norm2(&v);
        if norm >= 1e-12 {
            for x in v.iter_mut() {
                *x /= norm;
            }
            return Ok(v);
        }
    }
    Err(Error::DegenerateSample { retries: MAX_RESAMPLES })
}

/// Haar-distributed k-dimensional subspace of R^n (orthonormalized Gaussian
/// frame).
pub fn sample_grassmannian(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Subspace, Error> {
    assert!(k >= 1 && k <= n);
    for _ in 0..MAX_RESAMPLES {
        let cols: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let mut v = vec![0.0; n];
                fill_gaussian(rng, &mut v);
                v
            })
            .collect();
        match orthonormalize(&cols) {
            Ok(frame) => return Ok(Subspace { ambient_dim: n, dim: k, frame }),
            Err(Error::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::DegenerateSample { retries: MAX_RESAMPLES })
}

/// Chunked Monte-Carlo mean of `draw` over `samples` draws. Chunks may run on
/// any number of workers; each owns the stream `stream.derive(chunk_index)`
/// and the reduction is an ordered sum, so the estimate is reproducible.
pub fn mc_estimate<F>(samples: u64, stream: RngStream, draw: F) -> Result<McEstimate, Error>
where
    F: Fn(&mut ChaCha8Rng) -> Result<f64, Error> + Sync,
{
    assert!(samples >= 2, "need at least 2 samples");
    let chunks = samples.div_ceil(CHUNK_SIZE);
    let partials: Vec<Result<(f64, f64), Error>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.derive(c).rng();
            let count = CHUNK_SIZE.min(samples - c * CHUNK_SIZE);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for i in 0..count {
                let v = draw(&mut rng)?;
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { sample_index: c * CHUNK_SIZE + i });
                }
                sum += v;
                sum_sq += v * v;
            }
            Ok((sum, sum_sq))
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for p in partials {
        let (s, s2) = p?;
        sum += s;
        sum_sq += s2;
    }
    let nf = samples as f64;
    let mean = sum / nf;
    let var = ((sum_sq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        stderr: (var / nf).sqrt(),
        samples,
        seed: stream.seed,
    })
}

/// Monte-Carlo average of `f` against the uniform probability measure on
/// S^{n-1}.
pub fn mc_sphere_integral<F>(
    f: F,
    n: usize,
    samples: u64,
    stream: RngStream,
) -> Result<McEstimate, Error>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    mc_estimate(samples, stream, |rng| {
        let xi = sample_sphere(n, rng)?;
        Ok(f(&xi))
    })
}

/// Monte-Carlo average of `f` against the Haar measure on G_{n,k}.
pub fn mc_grassmann_average<F>(
    f: F,
    n: usize,
    k: usize,
    samples: u64,
    stream: RngStream,
) -> Result<McEstimate, Error>
where
    F: Fn(&Subspace) -> f64 + Sync,
{
    mc_estimate(samples, stream, |rng| {
        let h = sample_grassmannian(n, k, rng)?;
        Ok(f(&h))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::dot;

    const SEED: u64 = 0x5eed;

    #[test]
    fn sphere_first_coordinate_symmetric() {
        let est = mc_sphere_integral(|xi| xi[0], 3, 1_000_000, RngStream::new(SEED, 1)).unwrap();
        assert!(est.mean.abs() <= 4.0 * est.stderr, "mean {} stderr {}", est.mean, est.stderr);
    }

    #[test]
    fn sphere_archimedes_abs_coordinate() {
        // for n=3 the coordinate is uniform on [-1,1], so E|xi_1| = 1/2
        let est =
            mc_sphere_integral(|xi| xi[0].abs(), 3, 1_000_000, RngStream::new(SEED, 2)).unwrap();
        assert!((est.mean - 0.5).abs() <= 4.0 * est.stderr);
    }

    #[test]
    fn sphere_coordinate_second_moment() {
        let est =
            mc_sphere_integral(|xi| xi[0] * xi[0], 8, 1_000_000, RngStream::new(SEED, 3)).unwrap();
        assert!((est.mean - 0.125).abs() <= 4.0 * est.stderr);
    }

    #[test]
    fn constant_integrand_has_zero_stderr() {
        let est = mc_sphere_integral(|_| 1.0, 5, 10_000, RngStream::new(SEED, 4)).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn grassmann_projection_second_moment() {
        // Haar invariance forces E ||P_H e_1||^2 = k/n
        let est = mc_grassmann_average(
            |h| {
                let e1_coords = h.frame.transpose().matvec(&{
                    let mut e = vec![0.0; 4];
                    e[0] = 1.0;
                    e
                });
                dot(&e1_coords, &e1_coords)
            },
            4,
            2,
            100_000,
            RngStream::new(SEED, 5),
        )
        .unwrap();
        assert!((est.mean - 0.5).abs() <= 4.0 * est.stderr);
    }

    #[test]
    fn grassmann_full_space_is_orthogonal_matrix() {
        let mut rng = RngStream::new(SEED, 6).rng();
        let h = sample_grassmannian(5, 5, &mut rng).unwrap();
        let utu = h.frame.transpose().matmul(&h.frame);
        for i in 0..5 {
            for j in 0..5 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((utu.get(i, j) - target).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn grassmann_rotation_invariance() {
        // Rotating every sampled subspace by a fixed orthogonal Q leaves the
        // distribution of ||P_H e_1||^2 unchanged.
        let n = 6;
        let q = {
            let mut rng = RngStream::new(77, 0).rng();
            sample_grassmannian(n, n, &mut rng).unwrap().frame
        };
        let stat = |h: &Subspace| {
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            let c = h.frame.transpose().matvec(&e);
            dot(&c, &c)
        };
        let plain =
            mc_grassmann_average(stat, n, 3, 100_000, RngStream::new(SEED, 7)).unwrap();
        let rotated = mc_grassmann_average(
            |h| {
                let rf = q.matmul(&h.frame);
                let rh = Subspace { ambient_dim: n, dim: 3, frame: rf };
                stat(&rh)
            },
            n,
            3,
            100_000,
            RngStream::new(SEED, 8),
        )
        .unwrap();
        let tol = 4.0 * (plain.stderr.powi(2) + rotated.stderr.powi(2)).sqrt();
        assert!((plain.mean - rotated.mean).abs() <= tol);
    }

    #[test]
    fn determinism_bit_identical() {
        let f = |xi: &[f64]| xi.iter().map(|x| x.abs()).fold(0.0_f64, f64::max);
        let a = mc_sphere_integral(f, 4, 50_000, RngStream::new(SEED, 9)).unwrap();
        let b = mc_sphere_integral(f, 4, 50_000, RngStream::new(SEED, 9)).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let f = |xi: &[f64]| xi[0] * xi[0] + xi[1].abs();
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| mc_sphere_integral(f, 5, 30_000, RngStream::new(SEED, 10)).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.mean.to_bits(), four.mean.to_bits());
        assert_eq!(one.stderr.to_bits(), four.stderr.to_bits());
    }

    #[test]
    fn nonfinite_integrand_is_reported() {
        let err = mc_sphere_integral(|xi| xi[0].ln(), 2, 1_000, RngStream::new(SEED, 11))
            .unwrap_err();
        // ln of a negative coordinate is NaN somewhere in 1000 samples
        assert!(matches!(err, Error::NonFiniteValue { .. }));
    }

    #[test]
    fn distinct_streams_differ() {
        let f = |xi: &[f64]| xi[0];
        let a = mc_sphere_integral(f, 3, 10_000, RngStream::new(SEED, 1)).unwrap();
        let b = mc_sphere_integral(f, 3, 10_000, RngStream::new(SEED, 2)).unwrap();
        assert_ne!(a.mean.to_bits(), b.mean.to_bits());
    }

    #[test]
    fn orthogonal_complement_is_orthogonal() {
        let mut rng = RngStream::new(SEED, 12).rng();
        let h = sample_grassmannian(7, 3, &mut rng).unwrap();
        let w = h.orthogonal_complement().unwrap();
        assert_eq!(w.dim, 4);
        let cross = h.frame.transpose().matmul(&w.frame);
        assert!(cross.max_abs() <= 1e-9);
    }
}
