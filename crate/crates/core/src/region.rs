//! Measurable region descriptors: membership predicates, uniform sampling and
//! boundary probes, with torus-aware metric where it matters.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::flowcore::DomainSpec;

/// A region of the phase space with a deterministic membership test.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegionSpec {
    /// The whole domain.
    All,
    /// Axis-aligned box.
    Box { min: [f64; 3], max: [f64; 3] },
    /// Solid cylindrical shell about the z-axis: r_min <= r <= r_max, |z| <= z_abs.
    Shell { r_min: f64, r_max: f64, z_abs: f64 },
    /// Euclidean ball.
    Ball { center: [f64; 3], radius: f64 },
    /// Fattened polyline (orbit tube). `closed` joins the last sample to the first.
    Tube { samples: Vec<[f64; 3]>, radius: f64, closed: bool },
}

fn v3(a: &[f64; 3]) -> Vector3<f64> {
    Vector3::new(a[0], a[1], a[2])
}

/// Distance from `p` to the segment [a, b] under the domain metric. The
/// segment is lifted through the shortest wrapped displacement a -> b, which
/// assumes segments are short relative to the torus periods.
fn segment_distance(domain: &DomainSpec, p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let da = domain.displacement(p, a);
    let ab = domain.displacement(a, b);
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return da.norm();
    }
    let t = (-da.dot(&ab) / len2).clamp(0.0, 1.0);
    (da + ab * t).norm()
}

impl RegionSpec {
    /// Membership test. `domain` supplies the wrap metric for tube distance.
    pub fn contains(&self, domain: &DomainSpec, x: &Vector3<f64>) -> bool {
        match self {
            RegionSpec::All => domain.contains(x),
            RegionSpec::Box { min, max } => {
                (0..3).all(|i| x[i] >= min[i] && x[i] <= max[i])
            }
            RegionSpec::Shell { r_min, r_max, z_abs } => {
                let r = (x.x * x.x + x.y * x.y).sqrt();
                r >= *r_min && r <= *r_max && x.z.abs() <= *z_abs
            }
            RegionSpec::Ball { center, radius } => {
                domain.displacement(x, &v3(center)).norm() <= *radius
            }
            RegionSpec::Tube { samples, radius, closed } => {
                self.tube_distance(domain, x, samples, *closed) <= *radius
            }
        }
    }

    fn tube_distance(
        &self,
        domain: &DomainSpec,
        x: &Vector3<f64>,
        samples: &[[f64; 3]],
        closed: bool,
    ) -> f64 {
        if samples.is_empty() {
            return f64::INFINITY;
        }
        if samples.len() == 1 {
            return domain.displacement(x, &v3(&samples[0])).norm();
        }
        let mut best = f64::INFINITY;
        let n = samples.len();
        let last = if closed { n } else { n - 1 };
        for i in 0..last {
            let a = v3(&samples[i]);
            let b = v3(&samples[(i + 1) % n]);
            best = best.min(segment_distance(domain, x, &a, &b));
        }
        best
    }

    /// Axis-aligned bounding box used for rejection sampling.
    pub fn bbox(&self, domain: &DomainSpec) -> ([f64; 3], [f64; 3]) {
        match self {
            RegionSpec::All => domain.bounds(),
            RegionSpec::Box { min, max } => (*min, *max),
            RegionSpec::Shell { r_max, z_abs, .. } => {
                ([-r_max, -r_max, -z_abs], [*r_max, *r_max, *z_abs])
            }
            RegionSpec::Ball { center, radius } => {
                let mut lo = *center;
                let mut hi = *center;
                for i in 0..3 {
                    lo[i] -= radius;
                    hi[i] += radius;
                }
                (lo, hi)
            }
            RegionSpec::Tube { samples, radius, .. } => {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for s in samples {
                    for i in 0..3 {
                        lo[i] = lo[i].min(s[i] - radius);
                        hi[i] = hi[i].max(s[i] + radius);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Uniform sample by rejection from the bounding box.
    pub fn sample(&self, domain: &DomainSpec, rng: &mut impl Rng) -> Vector3<f64> {
        let (lo, hi) = self.bbox(domain);
        loop {
            let x = Vector3::new(
                rng.gen_range(lo[0]..hi[0]),
                rng.gen_range(lo[1]..hi[1]),
                rng.gen_range(lo[2]..hi[2]),
            );
            if self.contains(domain, &x) {
                return x;
            }
        }
    }

    /// Deterministic samples of the region boundary with outward unit normals.
    /// Used by trapping tests; `All` has no boundary.
    pub fn boundary_samples(&self, per_face: usize) -> Vec<(Vector3<f64>, Vector3<f64>)> {
        let mut out = Vec::new();
        match self {
            RegionSpec::All => {}
            RegionSpec::Box { min, max } => {
                let n = per_face.max(2);
                for axis in 0..3 {
                    let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
                    for side in 0..2 {
                        let w = if side == 0 { min[axis] } else { max[axis] };
                        let mut normal = Vector3::zeros();
                        normal[axis] = if side == 0 { -1.0 } else { 1.0 };
                        for i in 0..n {
                            for j in 0..n {
                                let fu = min[u]
                                    + (max[u] - min[u]) * (i as f64 + 0.5) / n as f64;
                                let fv = min[v]
                                    + (max[v] - min[v]) * (j as f64 + 0.5) / n as f64;
                                let mut p = Vector3::zeros();
                                p[axis] = w;
                                p[u] = fu;
                                p[v] = fv;
                                out.push((p, normal));
                            }
                        }
                    }
                }
            }
            RegionSpec::Shell { r_min, r_max, z_abs } => {
                let n = per_face.max(4);
                let m = per_face.max(2);
                // inner and outer lateral walls
                for (r, sign) in [(*r_min, -1.0), (*r_max, 1.0)] {
                    if r <= 0.0 {
                        continue;
                    }
                    for i in 0..n {
                        let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                        let radial = Vector3::new(th.cos(), th.sin(), 0.0);
                        for j in 0..m {
                            let z = -z_abs + 2.0 * z_abs * (j as f64 + 0.5) / m as f64;
                            out.push((radial * r + Vector3::new(0.0, 0.0, z), radial * sign));
                        }
                    }
                }
                // top and bottom annuli
                for (z, sign) in [(-*z_abs, -1.0), (*z_abs, 1.0)] {
                    let normal = Vector3::new(0.0, 0.0, sign);
                    for i in 0..n {
                        let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                        for j in 0..m {
                            let r = r_min + (r_max - r_min) * (j as f64 + 0.5) / m as f64;
                            out.push((Vector3::new(r * th.cos(), r * th.sin(), z), normal));
                        }
                    }
                }
            }
            RegionSpec::Ball { center, radius } => {
                let n = per_face.max(8);
                let c = v3(center);
                // Fibonacci sphere
                let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
                for i in 0..n * n {
                    let k = i as f64 + 0.5;
                    let cos_phi = 1.0 - 2.0 * k / (n * n) as f64;
                    let sin_phi = (1.0 - cos_phi * cos_phi).sqrt();
                    let th = golden * k;
                    let dir = Vector3::new(sin_phi * th.cos(), sin_phi * th.sin(), cos_phi);
                    out.push((c + dir * *radius, dir));
                }
            }
            RegionSpec::Tube { samples, radius, closed } => {
                let n = samples.len();
                if n < 2 {
                    return out;
                }
                let ring = per_face.max(6);
                let last = if *closed { n } else { n - 1 };
                for i in 0..last {
                    let a = v3(&samples[i]);
                    let b = v3(&samples[(i + 1) % n]);
                    let tangent = (b - a).normalize();
                    // any unit vector not parallel to the tangent
                    let seed = if tangent.x.abs() < 0.9 {
                        Vector3::x()
                    } else {
                        Vector3::y()
                    };
                    let u = (seed - tangent * seed.dot(&tangent)).normalize();
                    let v = tangent.cross(&u);
                    for j in 0..ring {
                        let th = 2.0 * std::f64::consts::PI * j as f64 / ring as f64;
                        let dir = u * th.cos() + v * th.sin();
                        out.push((a + dir * *radius, dir));
                    }
                }
            }
        }
        out
    }

    /// Deterministic interior samples (low-discrepancy lattice filtered by
    /// membership).
    pub fn interior_samples(&self, domain: &DomainSpec, count: usize) -> Vec<Vector3<f64>> {
        let (lo, hi) = self.bbox(domain);
        let mut out = Vec::with_capacity(count);
        // Kronecker sequence with cube-root-of-prime increments
        let alpha = [0.8191725133961645, 0.6710436067037893, 0.5497004779019703];
        let mut k = 0usize;
        while out.len() < count && k < count * 1000 {
            let f = |i: usize| ((k as f64 + 1.0) * alpha[i]).fract();
            let x = Vector3::new(
                lo[0] + (hi[0] - lo[0]) * f(0),
                lo[1] + (hi[1] - lo[1]) * f(1),
                lo[2] + (hi[2] - lo[2]) * f(2),
            );
            if self.contains(domain, &x) {
                out.push(x);
            }
            k += 1;
        }
        out
    }

    /// Monte Carlo volume fraction of the region inside `outer`'s bounding box.
    pub fn is_empty_marker(&self) -> bool {
        matches!(self, RegionSpec::Tube { samples, .. } if samples.is_empty())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_torus() -> DomainSpec {
        DomainSpec::torus([1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn shell_membership() {
        let d = DomainSpec::boxed([-2.0, -2.0, -1.0], [2.0, 2.0, 1.0]).unwrap();
        let shell = RegionSpec::Shell { r_min: 0.5, r_max: 1.5, z_abs: 0.5 };
        assert!(shell.contains(&d, &Vector3::new(1.0, 0.0, 0.0)));
        assert!(!shell.contains(&d, &Vector3::new(0.1, 0.0, 0.0)));
        assert!(!shell.contains(&d, &Vector3::new(1.0, 0.0, 0.7)));
    }

    #[test]
    fn tube_wraps_on_torus() {
        let d = unit_torus();
        // a short tube near the wrap boundary
        let tube = RegionSpec::Tube {
            samples: vec![[0.95, 0.5, 0.5], [0.99, 0.5, 0.5]],
            radius: 0.05,
            closed: false,
        };
        // 0.02 is within 0.05 of 0.99 across the wrap
        assert!(tube.contains(&d, &Vector3::new(0.02, 0.5, 0.5)));
        assert!(!tube.contains(&d, &Vector3::new(0.2, 0.5, 0.5)));
    }

    #[test]
    fn sampling_stays_inside() {
        let d = DomainSpec::boxed([-2.0, -2.0, -1.0], [2.0, 2.0, 1.0]).unwrap();
        let shell = RegionSpec::Shell { r_min: 0.5, r_max: 1.5, z_abs: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let x = shell.sample(&d, &mut rng);
            assert!(shell.contains(&d, &x));
        }
    }

    #[test]
    fn shell_boundary_normals_point_outward() {
        let shell = RegionSpec::Shell { r_min: 0.5, r_max: 1.5, z_abs: 0.5 };
        let d = DomainSpec::boxed([-2.0, -2.0, -1.0], [2.0, 2.0, 1.0]).unwrap();
        for (p, n) in shell.boundary_samples(8) {
            // stepping slightly outward must leave the region
            let outside = p + n * 1e-6;
            let inside = p - n * 1e-6;
            assert!(!shell.contains(&d, &outside) || shell.contains(&d, &inside));
        }
    }
}
