//! The linear Poincaré cocycle on normal planes.
//!
//! At every nonsingular point the tangent space splits off the flow direction;
//! the orthogonal complement carries a 2×2 cocycle obtained by projecting the
//! derivative flow. Frames are chosen deterministically and parallel-
//! transported along trajectories so cocycle matrices vary continuously.
//! Spectral data (singular values, eigenvalue moduli, determinants) is
//! frame-invariant; raw entries are frame-dependent and flagged as such in
//! serialized output.

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FlowError, Result};
use crate::flowcore::{VectorFieldSpec, V3};
use crate::linalg::spectral_norm2;

/// Largest partition gap accepted by [`cocycle_along`].
pub const MAX_PARTITION_GAP: f64 = 10.0;

/// Orthonormal frame adapted to the flow: unit flow direction plus two
/// spanning vectors of the normal plane, positively oriented.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalFrame {
    pub base: V3,
    pub flow_dir: V3,
    pub n1: V3,
    pub n2: V3,
}

impl NormalFrame {
    /// Coordinates of the orthogonal projection of `v` onto the normal plane.
    pub fn project(&self, v: &V3) -> Vector2<f64> {
        Vector2::new(v.dot(&self.n1), v.dot(&self.n2))
    }

    /// Embed normal-plane coordinates back into 3-space.
    pub fn embed(&self, w: &Vector2<f64>) -> V3 {
        self.n1 * w.x + self.n2 * w.y
    }
}

/// Deterministic frame at `x`: Gram–Schmidt seeded with the coordinate axis
/// least aligned with X(x), completed to a right-handed triple.
pub fn normal_frame(spec: &VectorFieldSpec, x: &V3) -> Result<NormalFrame> {
    let base = spec.domain.wrap(x);
    let v = spec.evaluate_field(&base)?;
    let u = v / v.norm();
    let axis = {
        let a = [u.x.abs(), u.y.abs(), u.z.abs()];
        let mut best = 0;
        for i in 1..3 {
            if a[i] < a[best] {
                best = i;
            }
        }
        best
    };
    let mut e = V3::zeros();
    e[axis] = 1.0;
    let n1 = (e - u * e.dot(&u)).normalize();
    let n2 = u.cross(&n1);
    Ok(NormalFrame { base, flow_dir: u, n1, n2 })
}

/// Transport a spanning vector to a new flow direction by projection and
/// re-orthonormalization. Falls back to a fresh seed axis if the carried
/// vector degenerates onto the new flow direction.
fn transport_n1(n1: &V3, u_new: &V3) -> V3 {
    let proj = n1 - u_new * n1.dot(u_new);
    let n = proj.norm();
    if n > 1e-8 {
        proj / n
    } else {
        let a = [u_new.x.abs(), u_new.y.abs(), u_new.z.abs()];
        let mut best = 0;
        for i in 1..3 {
            if a[i] < a[best] {
                best = i;
            }
        }
        let mut e = V3::zeros();
        e[best] = 1.0;
        (e - u_new * e.dot(u_new)).normalize()
    }
}

/// The linear Poincaré map over one time leg, expressed in explicit frames.
#[derive(Debug, Clone)]
pub struct PoincareMap {
    pub matrix: Matrix2<f64>,
    pub source: NormalFrame,
    pub target: NormalFrame,
    pub time: f64,
    /// log det DX_t from the Liouville accumulator (not from matrix entries).
    pub logdet_dx: f64,
    pub speed_source: f64,
    pub speed_target: f64,
}

impl PoincareMap {
    /// det P_t via the flow-box identity det P = det DX · |X(x)| / |X(X_t x)|,
    /// which avoids the cancellation in ad − bc for strongly contracted maps.
    pub fn det_robust(&self) -> f64 {
        self.logdet_dx.exp() * self.speed_source / self.speed_target
    }
}

/// Matrix of the projected derivative in the given frames.
pub fn matrix_in_frames(dx: &nalgebra::Matrix3<f64>, source: &NormalFrame, target: &NormalFrame) -> Matrix2<f64> {
    let c1 = dx * source.n1;
    let c2 = dx * source.n2;
    Matrix2::new(
        target.n1.dot(&c1),
        target.n1.dot(&c2),
        target.n2.dot(&c1),
        target.n2.dot(&c2),
    )
}

/// Change of coordinates for normal vectors expressed in frame `from`,
/// re-expressed in frame `to` (both at essentially the same base point).
pub fn frame_change(from: &NormalFrame, to: &NormalFrame) -> Matrix2<f64> {
    Matrix2::new(
        to.n1.dot(&from.n1),
        to.n1.dot(&from.n2),
        to.n2.dot(&from.n1),
        to.n2.dot(&from.n2),
    )
}

/// Compute P_t(x) as a 2×2 matrix between the canonical frame at x and its
/// parallel transport along the trajectory.
pub fn linear_poincare(spec: &VectorFieldSpec, x: &V3, t: f64, tol: f64) -> Result<PoincareMap> {
    let source = normal_frame(spec, x)?;
    let (seg, tan) = spec.flow_with_tangent(x, t, tol)?;
    let mut n1 = source.n1;
    let mut u = source.flow_dir;
    for (_, p) in seg.samples.iter().skip(1) {
        let xp = V3::new(p[0], p[1], p[2]);
        let v = spec.evaluate_field(&xp)?;
        u = v / v.norm();
        n1 = transport_n1(&n1, &u);
    }
    let end = seg.end_point();
    let target = NormalFrame { base: end, flow_dir: u, n1, n2: u.cross(&n1) };
    let speed_source = spec.evaluate_field(&source.base)?.norm();
    let speed_target = spec.evaluate_field(&end)?.norm();
    Ok(PoincareMap {
        matrix: matrix_in_frames(&tan.matrix, &source, &target),
        source,
        target,
        time: t,
        logdet_dx: tan.logdet,
        speed_source,
        speed_target,
    })
}

/// A sequence of linear Poincaré maps over a time partition, in continuously
/// transported frames.
#[derive(Debug, Clone)]
pub struct NormalCocycle {
    pub partition: Vec<f64>,
    pub frames: Vec<NormalFrame>,
    pub maps: Vec<Matrix2<f64>>,
    /// Robust per-leg determinants via the flow-box identity.
    pub dets: Vec<f64>,
}

impl NormalCocycle {
    pub fn total_time(&self) -> f64 {
        *self.partition.last().unwrap_or(&0.0)
    }

    /// Product of all maps (last applied first), i.e. the cocycle over the
    /// whole partition in the end frames.
    pub fn product(&self) -> Matrix2<f64> {
        let mut p = Matrix2::identity();
        for m in &self.maps {
            p = m * p;
        }
        p
    }

    pub fn product_det_robust(&self) -> f64 {
        self.dets.iter().product()
    }
}

/// Compute the cocycle along the trajectory of `x` over the given partition.
/// The partition must start at 0 and increase with gaps in (0, MAX_PARTITION_GAP].
pub fn cocycle_along(
    spec: &VectorFieldSpec,
    x: &V3,
    partition: &[f64],
    tol: f64,
) -> Result<NormalCocycle> {
    if partition.len() < 2 || partition[0] != 0.0 {
        return Err(FlowError::BadPartition("partition must start at 0 and contain at least two times".into()));
    }
    for w in partition.windows(2) {
        let gap = w[1] - w[0];
        if !(gap > 0.0 && gap <= MAX_PARTITION_GAP) {
            return Err(FlowError::BadPartition(format!(
                "partition gap {gap} outside (0, {MAX_PARTITION_GAP}]"
            )));
        }
    }
    let mut frames = vec![normal_frame(spec, x)?];
    let mut maps = Vec::with_capacity(partition.len() - 1);
    let mut dets = Vec::with_capacity(partition.len() - 1);
    let mut point = frames[0].base;
    for w in partition.windows(2) {
        let gap = w[1] - w[0];
        let (seg, tan) = spec.flow_with_tangent(&point, gap, tol)?;
        let prev = frames.last().unwrap();
        let mut n1 = prev.n1;
        let mut u = prev.flow_dir;
        for (_, p) in seg.samples.iter().skip(1) {
            let xp = V3::new(p[0], p[1], p[2]);
            let v = spec.evaluate_field(&xp)?;
            u = v / v.norm();
            n1 = transport_n1(&n1, &u);
        }
        let end = seg.end_point();
        let target = NormalFrame { base: end, flow_dir: u, n1, n2: u.cross(&n1) };
        maps.push(matrix_in_frames(&tan.matrix, prev, &target));
        let speed_prev = spec.evaluate_field(&prev.base)?.norm();
        let speed_end = spec.evaluate_field(&end)?.norm();
        dets.push(tan.logdet.exp() * speed_prev / speed_end);
        frames.push(target);
        point = end;
    }
    Ok(NormalCocycle { partition: partition.to_vec(), frames, maps, dets })
}

/// Estimated bound for sup ||P_t(x)|| over t in [0, 1], by random probes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormBound {
    pub observed_max: f64,
    /// Safety factor applied to the observed maximum.
    pub inflation: f64,
    pub bound: f64,
    pub probes: u32,
    pub seed: u64,
}

/// Probe sup ||P_t|| over unit-time legs at random (x, t) pairs; the result
/// is the observed maximum inflated by 1.25, recorded as such.
pub fn unit_norm_bound(spec: &VectorFieldSpec, probes: u32, tol: f64, seed: u64) -> Result<NormBound> {
    let batches: Vec<u32> = (0..probes).collect();
    let max = batches
        .par_chunks(256)
        .map(|chunk| {
            let mut local: f64 = 0.0;
            for &i in chunk {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 1);
                let x = spec.sample_domain(&mut rng);
                let t = rng.gen_range(0.05..=1.0);
                if let Ok(p) = linear_poincare(spec, &x, t, tol) {
                    local = local.max(spectral_norm2(&p.matrix));
                }
            }
            local
        })
        .reduce(|| 0.0, f64::max);
    Ok(NormBound { observed_max: max, inflation: 1.25, bound: max * 1.25, probes, seed })
}

// ---------------------------------------------------------------------------
// serialization mirrors (row-major matrices, explicit frame vectors)

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameJson {
    pub base: [f64; 3],
    pub flow_dir: [f64; 3],
    pub n1: [f64; 3],
    pub n2: [f64; 3],
}

impl From<&NormalFrame> for FrameJson {
    fn from(f: &NormalFrame) -> Self {
        let a = |v: &V3| [v.x, v.y, v.z];
        FrameJson { base: a(&f.base), flow_dir: a(&f.flow_dir), n1: a(&f.n1), n2: a(&f.n2) }
    }
}

impl From<&FrameJson> for NormalFrame {
    fn from(f: &FrameJson) -> Self {
        let v = |a: &[f64; 3]| Vector3::new(a[0], a[1], a[2]);
        NormalFrame { base: v(&f.base), flow_dir: v(&f.flow_dir), n1: v(&f.n1), n2: v(&f.n2) }
    }
}

pub fn mat2_rows(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

pub fn mat2_from_rows(r: &[[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(r[0][0], r[0][1], r[1][0], r[1][1])
}

/// JSON document for a cocycle. Matrix entries are frame-dependent; spectral
/// quantities derived from them are not.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CocycleJson {
    pub schema_version: u32,
    pub partition: Vec<f64>,
    pub frames: Vec<FrameJson>,
    /// Row-major 2×2 matrices, one per partition gap.
    pub maps: Vec<[[f64; 2]; 2]>,
    pub dets: Vec<f64>,
    pub frame_dependent_entries: bool,
}

impl From<&NormalCocycle> for CocycleJson {
    fn from(c: &NormalCocycle) -> Self {
        CocycleJson {
            schema_version: 1,
            partition: c.partition.clone(),
            frames: c.frames.iter().map(FrameJson::from).collect(),
            maps: c.maps.iter().map(mat2_rows).collect(),
            dets: c.dets.clone(),
            frame_dependent_entries: true,
        }
    }
}

impl From<&CocycleJson> for NormalCocycle {
    fn from(j: &CocycleJson) -> Self {
        NormalCocycle {
            partition: j.partition.clone(),
            frames: j.frames.iter().map(NormalFrame::from).collect(),
            maps: j.maps.iter().map(mat2_from_rows).collect(),
            dets: j.dets.clone(),
        }
    }
}
