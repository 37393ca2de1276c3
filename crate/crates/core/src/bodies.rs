//! Closed-form convex body families and their shape parameters.
//!
//! Every family carries exact volume, surface area, inradius and
//! circumradius (the one exception is a general ellipsoid, whose surface is
//! a Monte-Carlo estimate). The spherical averages M(K) and w(K) are always
//! Monte-Carlo, and the composite parameters p, q, t, vrad are assembled
//! from the exact entries wherever one exists.
//!
//! Mean width here is the spherical average of the support function, so
//! w(ball) = 1 and q(ball) = n. This is half the classical mean width.

use crate::ellipsoid::Ellipsoid;
use crate::numkit::unit_ball_volume;
use crate::sampling::{mc_sphere_integral, McEstimate, RngStream};
use crate::Error;
use serde::{Deserialize, Serialize};

/// The witness families: ball, ellipsoid, cube, the slab box `P_{a,s}` with
/// `|x_1| <= s`, `|x_i| <= a`, and the weighted-l1 body `P_s` with
/// `|x_1| + (1/s) sum |x_i| <= 1`.
#[derive(Debug, Clone)]
pub enum BodyFamily {
    Ball { radius: f64, dim: usize },
    EllipsoidRef(Ellipsoid),
    Cube { half_side: f64, dim: usize },
    Box { s: f64, a: f64, dim: usize },
    WeightedL1 { s: f64, dim: usize },
}

impl BodyFamily {
    pub fn ball(dim: usize, radius: f64) -> Result<Self, Error> {
        check_positive("radius", radius)?;
        check_dim(dim, 1)?;
        Ok(BodyFamily::Ball { radius, dim })
    }

    pub fn cube(dim: usize, half_side: f64) -> Result<Self, Error> {
        check_positive("half_side", half_side)?;
        check_dim(dim, 1)?;
        Ok(BodyFamily::Cube { half_side, dim })
    }

    pub fn slab_box(dim: usize, s: f64, a: f64) -> Result<Self, Error> {
        check_positive("s", s)?;
        check_positive("a", a)?;
        check_dim(dim, 2)?;
        if s >= a {
            return Err(Error::Domain(format!("box requires s < a, got s={s}, a={a}")));
        }
        Ok(BodyFamily::Box { s, a, dim })
    }

    pub fn weighted_l1(dim: usize, s: f64) -> Result<Self, Error> {
        check_positive("s", s)?;
        check_dim(dim, 2)?;
        Ok(BodyFamily::WeightedL1 { s, dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            BodyFamily::Ball { dim, .. }
            | BodyFamily::Cube { dim, .. }
            | BodyFamily::Box { dim, .. }
            | BodyFamily::WeightedL1 { dim, .. } => *dim,
            BodyFamily::EllipsoidRef(e) => e.dim(),
        }
    }

    pub fn scaled(&self, lambda: f64) -> Result<BodyFamily, Error> {
        check_positive("scale", lambda)?;
        Ok(match self {
            BodyFamily::Ball { radius, dim } => {
                BodyFamily::Ball { radius: radius * lambda, dim: *dim }
            }
            BodyFamily::Cube { half_side, dim } => {
                BodyFamily::Cube { half_side: half_side * lambda, dim: *dim }
            }
            BodyFamily::Box { s, a, dim } => {
                BodyFamily::Box { s: s * lambda, a: a * lambda, dim: *dim }
            }
            // P_s scales all vertex coordinates; lambda*P_s is not in the
            // family unless lambda = 1, so go through the vertex description
            BodyFamily::WeightedL1 { .. } => {
                return Err(Error::Domain(
                    "weighted-l1 family is not closed under scaling; scale its metrics instead"
                        .into(),
                ))
            }
            BodyFamily::EllipsoidRef(e) => BodyFamily::EllipsoidRef(e.scaled(lambda)?),
        })
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim();
        match self {
            BodyFamily::Ball { radius, .. } => unit_ball_volume(n) * radius.powi(n as i32),
            BodyFamily::EllipsoidRef(e) => e.volume(),
            BodyFamily::Cube { half_side, .. } => (2.0 * half_side).powi(n as i32),
            BodyFamily::Box { s, a, .. } => {
                2.0_f64.powi(n as i32) * s * a.powi(n as i32 - 1)
            }
            // linear image of the cross-polytope: 2^n s^{n-1} / n!
            BodyFamily::WeightedL1 { s, .. } => {
                let ln_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
                (n as f64 * 2.0_f64.ln() + (n as f64 - 1.0) * s.ln() - ln_fact).exp()
            }
        }
    }

    /// Exact surface area where a closed form exists; `None` for general
    /// ellipsoids (use [`BodyFamily::surface`]).
    pub fn exact_surface(&self) -> Option<f64> {
        let n = self.dim() as i32;
        match self {
            BodyFamily::Ball { radius, .. } => {
                Some(n as f64 * unit_ball_volume(n as usize) * radius.powi(n - 1))
            }
            BodyFamily::Cube { half_side, .. } => {
                Some(2.0 * n as f64 * (2.0 * half_side).powi(n - 1))
            }
            BodyFamily::Box { s, a, .. } => Some(
                2.0_f64.powi(n) * a.powi(n - 1) + 2.0_f64.powi(n) * (n as f64 - 1.0) * s * a.powi(n - 2),
            ),
            BodyFamily::WeightedL1 { .. } => {
                // |P_s| = S(P_s) r(P_s) / n since every facet touches the insphere
                Some(self.dim() as f64 * self.volume() / self.inradius())
            }
            BodyFamily::EllipsoidRef(_) => None,
        }
    }

    /// Surface area: exact where available, Rivin Monte-Carlo for ellipsoids.
    pub fn surface(&self, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        match self.exact_surface() {
            Some(s) => Ok(McEstimate::exact(s, stream.seed)),
            None => match self {
                BodyFamily::EllipsoidRef(e) => e.surface_rivin(samples, stream),
                _ => unreachable!("only ellipsoids lack an exact surface"),
            },
        }
    }

    pub fn inradius(&self) -> f64 {
        let n = self.dim() as f64;
        match self {
            BodyFamily::Ball { radius, .. } => *radius,
            BodyFamily::EllipsoidRef(e) => e.inradius(),
            BodyFamily::Cube { half_side, .. } => *half_side,
            BodyFamily::Box { s, .. } => *s,
            BodyFamily::WeightedL1 { s, .. } => 1.0 / (1.0 + (n - 1.0) / (s * s)).sqrt(),
        }
    }

    pub fn circumradius(&self) -> f64 {
        let n = self.dim() as f64;
        match self {
            BodyFamily::Ball { radius, .. } => *radius,
            BodyFamily::EllipsoidRef(e) => e.circumradius(),
            BodyFamily::Cube { half_side, .. } => half_side * n.sqrt(),
            BodyFamily::Box { s, a, .. } => (s * s + (n - 1.0) * a * a).sqrt(),
            // vertices at +-e_1 and +-s e_i
            BodyFamily::WeightedL1 { s, .. } => s.max(1.0),
        }
    }

    /// Minkowski functional `||x||_K = min{t >= 0 : x in tK}`.
    pub fn minkowski_norm(&self, x: &[f64]) -> f64 {
        match self {
            BodyFamily::Ball { radius, .. } => crate::numkit::norm2(x) / radius,
            BodyFamily::EllipsoidRef(e) => e.minkowski_norm(x),
            BodyFamily::Cube { half_side, .. } => {
                x.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / half_side
            }
            BodyFamily::Box { s, a, .. } => {
                let first = x[0].abs() / s;
                let rest = x[1..].iter().fold(0.0_f64, |m, v| m.max(v.abs())) / a;
                first.max(rest)
            }
            BodyFamily::WeightedL1 { s, .. } => {
                x[0].abs() + x[1..].iter().map(|v| v.abs()).sum::<f64>() / s
            }
        }
    }

    /// Support function `h_K(u) = max{<x,u> : x in K}`.
    pub fn support(&self, u: &[f64]) -> f64 {
        match self {
            BodyFamily::Ball { radius, .. } => radius * crate::numkit::norm2(u),
            BodyFamily::EllipsoidRef(e) => e.support(u),
            BodyFamily::Cube { half_side, .. } => {
                half_side * u.iter().map(|v| v.abs()).sum::<f64>()
            }
            BodyFamily::Box { s, a, .. } => {
                s * u[0].abs() + a * u[1..].iter().map(|v| v.abs()).sum::<f64>()
            }
            // polar description: vertices +-e_1, +-s e_i
            BodyFamily::WeightedL1 { s, .. } => {
                let rest = u[1..].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                u[0].abs().max(s * rest)
            }
        }
    }

    /// `M(K) = ∫ ||xi||_K dσ`.
    pub fn m_parameter(&self, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        mc_sphere_integral(|xi| self.minkowski_norm(xi), self.dim(), samples, stream)
    }

    /// `w(K) = ∫ h_K dσ`.
    pub fn mean_width(&self, samples: u64, stream: RngStream) -> Result<McEstimate, Error> {
        mc_sphere_integral(|xi| self.support(xi), self.dim(), samples, stream)
    }

    /// Full metrics: exact entries plus Monte-Carlo M, w and the composite
    /// parameters t, p, q. Independent streams for S (when sampled), M and w;
    /// ratio stderrs are first-order with correlations ignored.
    pub fn mc_metrics(&self, samples: u64, stream: RngStream) -> Result<BodyMetrics, Error> {
        let n = self.dim() as f64;
        let volume = self.volume();
        let surface = self.surface(samples, stream.derive(0))?;
        let m = self.m_parameter(samples, stream.derive(1))?;
        let width = self.mean_width(samples, stream.derive(2))?;
        let inradius = self.inradius();
        let circumradius = self.circumradius();
        let omega = unit_ball_volume(self.dim());
        let vrad = (volume / omega).powf(1.0 / n);
        let t = vrad / inradius;
        let p = surface.scaled(1.0 / volume).ratio(&m);
        let q = width.product(&surface).scaled(1.0 / volume);
        Ok(BodyMetrics {
            dim: self.dim(),
            volume,
            surface,
            inradius,
            circumradius,
            mean_width: width,
            m_parameter: m,
            vrad,
            t,
            p,
            q,
            seed: stream.seed,
        })
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), Error> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_dim(dim: usize, min: usize) -> Result<(), Error> {
    if dim >= min {
        Ok(())
    } else {
        Err(Error::Dimension(format!("dimension {dim} below minimum {min}")))
    }
}

/// Shape descriptors of a body. Exact fields are plain reals; sampled fields
/// carry their standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodyMetrics {
    pub dim: usize,
    pub volume: f64,
    pub surface: McEstimate,
    pub inradius: f64,
    pub circumradius: f64,
    pub mean_width: McEstimate,
    pub m_parameter: McEstimate,
    pub vrad: f64,
    /// `t(K) = (|K| / |r(K) B_2^n|)^{1/n}`.
    pub t: f64,
    /// `p(K) = S(K) / (|K| M(K))`.
    pub p: McEstimate,
    /// `q(K) = w(K) S(K) / |K|`.
    pub q: McEstimate,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::gaussian_norm_mean;
    use crate::sampling::{fill_gaussian, mc_estimate};

    const SEED: u64 = 0xb0d1;

    fn stream(id: u64) -> RngStream {
        RngStream::new(SEED, id)
    }

    #[test]
    fn cube_closed_forms() {
        let c = BodyFamily::cube(3, 1.0).unwrap();
        assert!((c.volume() - 8.0).abs() < 1e-12);
        assert!((c.exact_surface().unwrap() - 24.0).abs() < 1e-12);
        assert_eq!(c.inradius(), 1.0);
        assert!((c.circumradius() - 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn box_closed_forms() {
        let b = BodyFamily::slab_box(3, 1.0, 2.0).unwrap();
        assert!((b.volume() - 32.0).abs() < 1e-12);
        assert!((b.exact_surface().unwrap() - 64.0).abs() < 1e-12);
        assert_eq!(b.inradius(), 1.0);
    }

    #[test]
    fn box_requires_s_less_than_a() {
        assert!(matches!(BodyFamily::slab_box(3, 2.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn weighted_l1_closed_forms() {
        let w = BodyFamily::weighted_l1(3, 2.0).unwrap();
        assert!((w.inradius() - (2.0_f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((w.volume() - 16.0 / 3.0).abs() < 1e-12);
        let s_expect = 3.0 * (16.0 / 3.0) / (2.0_f64 / 3.0).sqrt();
        assert!((w.exact_surface().unwrap() - s_expect).abs() < 1e-9);
    }

    #[test]
    fn weighted_l1_volume_hit_or_miss_oracle() {
        // MC hit-or-miss volume of P_2 in R^3 inside its bounding box
        // [-1,1] x [-2,2]^2
        let body = BodyFamily::weighted_l1(3, 2.0).unwrap();
        let box_vol = 2.0 * 4.0 * 4.0;
        let est = mc_estimate(10_000_000, stream(1), |rng| {
            let x = [
                rand::Rng::gen_range(rng, -1.0..1.0),
                rand::Rng::gen_range(rng, -2.0..2.0),
                rand::Rng::gen_range(rng, -2.0..2.0),
            ];
            Ok(if body.minkowski_norm(&x) <= 1.0 { 1.0 } else { 0.0 })
        })
        .unwrap()
        .scaled(box_vol);
        assert!(
            (est.mean - body.volume()).abs() <= 4.0 * est.stderr,
            "hit-or-miss {} +- {} vs exact {}",
            est.mean,
            est.stderr,
            body.volume()
        );
    }

    #[test]
    fn minkowski_norm_values() {
        let c = BodyFamily::cube(3, 1.0).unwrap();
        assert!((c.minkowski_norm(&[0.5, -1.0, 0.25]) - 1.0).abs() < 1e-14);
        let w = BodyFamily::weighted_l1(4, 3.0).unwrap();
        assert!((w.minkowski_norm(&[1.0, 0.0, 0.0, 0.0]) - 1.0).abs() < 1e-14);
        let b = BodyFamily::ball(3, 2.0).unwrap();
        assert!((b.minkowski_norm(&[0.0, 2.0, 0.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn support_values() {
        let c = BodyFamily::cube(3, 1.0).unwrap();
        let u = [1.0 / 3.0_f64.sqrt(); 3];
        assert!((c.support(&u) - 3.0_f64.sqrt()).abs() < 1e-12);
        let b = BodyFamily::slab_box(3, 1.0, 2.0).unwrap();
        assert!((b.support(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-14);
        let w = BodyFamily::weighted_l1(3, 2.0).unwrap();
        assert!((w.support(&[0.0, 1.0, 0.0]) - 2.0).abs() < 1e-14);
        assert!((w.support(&[1.0, 0.0, 0.0]) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn ball_parameters_exact() {
        for n in [3_usize, 6] {
            let b = BodyFamily::ball(n, 1.0).unwrap();
            let m = b.mc_metrics(10_000, stream(2)).unwrap();
            assert!((m.m_parameter.mean - 1.0).abs() < 1e-12);
            assert!((m.mean_width.mean - 1.0).abs() < 1e-12);
            assert!((m.p.mean - n as f64).abs() < 1e-9);
            assert!((m.q.mean - n as f64).abs() < 1e-9);
            assert!((m.t - 1.0).abs() < 1e-12);
            assert!(m.p.stderr < 1e-9 && m.q.stderr < 1e-9);
        }
    }

    #[test]
    fn cube_p_order_of_magnitude() {
        // p(Q_n) ~ n^{3/2}/sqrt(log n) up to an absolute constant
        let n = 16;
        let c = BodyFamily::cube(n, 1.0).unwrap();
        let m = c.mc_metrics(200_000, stream(3)).unwrap();
        let scale = (n as f64).powf(1.5) / (n as f64).ln().sqrt();
        let ratio = m.p.mean / scale;
        assert!((0.3..3.0).contains(&ratio), "p/(n^1.5/sqrt log n) = {ratio}");
    }

    #[test]
    fn weighted_l1_p_closed_form() {
        // p(P_s) = n / (r(P_s) M(P_s)) since |P_s| = S r / n
        let n = 8;
        let b = BodyFamily::weighted_l1(n, 1000.0).unwrap();
        let m = b.mc_metrics(400_000, stream(4)).unwrap();
        let expect = n as f64 / (b.inradius() * m.m_parameter.mean);
        assert!(
            (m.p.mean - expect).abs() <= 4.0 * m.p.stderr,
            "p {} +- {} vs closed form {expect}",
            m.p.mean,
            m.p.stderr
        );
    }

    #[test]
    fn shape_inequalities_across_families() {
        let bodies: Vec<BodyFamily> = vec![
            BodyFamily::ball(4, 2.0).unwrap(),
            BodyFamily::cube(5, 1.0).unwrap(),
            BodyFamily::slab_box(4, 0.5, 3.0).unwrap(),
            BodyFamily::weighted_l1(5, 2.0).unwrap(),
            BodyFamily::EllipsoidRef(Ellipsoid::axis_aligned(vec![1.0, 2.0, 4.0]).unwrap()),
        ];
        for (i, body) in bodies.iter().enumerate() {
            let n = body.dim() as f64;
            let m = body.mc_metrics(200_000, stream(10 + i as u64)).unwrap();
            let omega = unit_ball_volume(body.dim());

            // isoperimetric
            let iso = n * omega.powf(1.0 / n) * m.volume.powf((n - 1.0) / n);
            assert!(m.surface.mean >= iso * (1.0 - 4.0 * m.surface.rel_stderr() - 1e-9), "iso #{i}");

            // inradius sandwich r S <= n|K| <= R S
            let tol = 4.0 * m.surface.stderr + 1e-9 * m.surface.mean;
            assert!(m.inradius * m.surface.mean <= n * m.volume + m.inradius * tol, "#{i}");
            assert!(n * m.volume <= m.circumradius * (m.surface.mean + tol), "#{i}");

            // Bonnesen: S >= |K|/r + (n-1) omega r^{n-1}
            let bon = m.volume / m.inradius + (n - 1.0) * omega * m.inradius.powf(n - 1.0);
            assert!(m.surface.mean >= bon * (1.0 - 4.0 * m.surface.rel_stderr() - 1e-9), "bonnesen #{i}");

            // r <= 1/M <= w <= R
            assert!(m.inradius <= 1.0 / m.m_parameter.mean * (1.0 + 4.0 * m.m_parameter.rel_stderr()));
            let tol = 4.0
                * ((1.0 / m.m_parameter.mean * m.m_parameter.rel_stderr()).powi(2)
                    + m.mean_width.stderr.powi(2))
                .sqrt();
            assert!(1.0 / m.m_parameter.mean <= m.mean_width.mean + tol, "#{i}");
            assert!(m.mean_width.mean <= m.circumradius + 4.0 * m.mean_width.stderr, "#{i}");

            // p bracket n/(RM) <= p <= n/(rM)
            let p_lo = n / (m.circumradius * m.m_parameter.mean);
            let p_hi = n / (m.inradius * m.m_parameter.mean);
            let ptol = 4.0 * (m.p.rel_stderr().powi(2) + m.m_parameter.rel_stderr().powi(2)).sqrt();
            assert!(m.p.mean >= p_lo * (1.0 - ptol - 1e-9), "#{i}");
            assert!(m.p.mean <= p_hi * (1.0 + ptol + 1e-9), "#{i}");

            // q >= n
            assert!(m.q.mean >= n * (1.0 - 4.0 * m.q.rel_stderr() - 1e-9), "q #{i}");

            // Urysohn w >= vrad
            assert!(m.mean_width.mean >= m.vrad * (1.0 - 1e-9) - 4.0 * m.mean_width.stderr, "urysohn #{i}");

            // t >= 1
            assert!(m.t >= 1.0 - 1e-12, "t #{i}");
        }
    }

    #[test]
    fn p_q_scale_invariant() {
        let body = BodyFamily::slab_box(4, 0.5, 3.0).unwrap();
        let a = body.mc_metrics(200_000, stream(30)).unwrap();
        let b = body.scaled(2.0).unwrap().mc_metrics(200_000, stream(31)).unwrap();
        let tol_p = 4.0 * (a.p.stderr.powi(2) + b.p.stderr.powi(2)).sqrt();
        let tol_q = 4.0 * (a.q.stderr.powi(2) + b.q.stderr.powi(2)).sqrt();
        assert!((a.p.mean - b.p.mean).abs() <= tol_p);
        assert!((a.q.mean - b.q.mean).abs() <= tol_q);
    }

    #[test]
    fn gaussian_factorization_of_support() {
        // E h_K(G) = d_n w(K) for a standard Gaussian vector G
        let body = BodyFamily::cube(5, 1.0).unwrap();
        let w = body.mean_width(400_000, stream(40)).unwrap();
        let gauss = mc_estimate(400_000, stream(41), |rng| {
            let mut g = vec![0.0; 5];
            fill_gaussian(rng, &mut g);
            Ok(body.support(&g))
        })
        .unwrap();
        let predicted = w.scaled(gaussian_norm_mean(5));
        let tol = 4.0 * (gauss.stderr.powi(2) + predicted.stderr.powi(2)).sqrt();
        assert!(
            (gauss.mean - predicted.mean).abs() <= tol,
            "{} vs {} (tol {tol})",
            gauss.mean,
            predicted.mean
        );
    }
}
