//! Incremental voxel traversal (digital differential analyzer).
//!
//! Walks the 6-connected chain of voxels a world-space segment passes
//! through, in monotone ray order. The endpoint voxel is never yielded:
//! it is the hit cell and the caller decides its treatment, so a cell
//! can never be marked free by its own ray.

use nalgebra::Point3;

use crate::coord::Coord;
use crate::error::RayError;
use crate::tree::Transform;

/// A world-space ray segment from sensor origin to measured endpoint.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub end: Point3<f64>,
    /// The endpoint is a range-limit artifact, not a surface hit.
    pub is_maxray: bool,
}

impl Ray {
    /// Zero-length rays are rejected; everything downstream may assume
    /// `origin != end`.
    pub fn new(origin: Point3<f64>, end: Point3<f64>, is_maxray: bool) -> Result<Self, RayError> {
        let finite = |p: Point3<f64>| p.x.is_finite() && p.y.is_finite() && p.z.is_finite();
        if !finite(origin) || !finite(end) {
            return Err(RayError::NonFinite);
        }
        if origin == end {
            return Err(RayError::ZeroLength([origin.x, origin.y, origin.z]));
        }
        Ok(Self {
            origin,
            end,
            is_maxray,
        })
    }

    /// Ray toward `point`, truncated to `max_range`. Measurements
    /// beyond the range become maxrays ending exactly at the range
    /// limit.
    pub fn truncated(
        origin: Point3<f64>,
        point: Point3<f64>,
        max_range: f64,
    ) -> Result<Self, RayError> {
        let finite = |p: Point3<f64>| p.x.is_finite() && p.y.is_finite() && p.z.is_finite();
        if !finite(origin) || !finite(point) {
            return Err(RayError::NonFinite);
        }
        let dir = point - origin;
        let len = dir.norm();
        if len == 0.0 {
            return Err(RayError::ZeroLength([origin.x, origin.y, origin.z]));
        }
        if len > max_range {
            Ray::new(origin, origin + dir * (max_range / len), true)
        } else {
            Ray::new(origin, point, false)
        }
    }

    pub fn length(&self) -> f64 {
        (self.end - self.origin).norm()
    }
}

/// Traversal state for one ray in index space.
///
/// Each step advances exactly one axis — the one whose next voxel
/// boundary comes first along the ray, ties broken x before y before z
/// — so consecutive voxels always differ by one step on one axis.
pub struct DdaState {
    current: Coord,
    end: Coord,
    step: [i32; 3],
    t_max: [f64; 3],
    t_delta: [f64; 3],
    done: bool,
}

impl DdaState {
    /// Positions the walk at the origin voxel; the endpoint voxel is
    /// precomputed with the same floor rule as `world_to_index`.
    pub fn init(ray: &Ray, transform: &Transform) -> Result<Self, RayError> {
        let start = transform.world_to_index(ray.origin)?;
        let end = transform.world_to_index(ray.end)?;
        let a = transform.index_space(ray.origin);
        let b = transform.index_space(ray.end);

        let mut step = [0i32; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for axis in 0..3 {
            let dir = b[axis] - a[axis];
            if dir > 0.0 {
                step[axis] = 1;
                t_delta[axis] = 1.0 / dir;
                t_max[axis] = ((start.component(axis) as f64 + 1.0) - a[axis]) / dir;
            } else if dir < 0.0 {
                step[axis] = -1;
                t_delta[axis] = -1.0 / dir;
                t_max[axis] = (a[axis] - start.component(axis) as f64) / -dir;
            }
        }
        Ok(Self {
            current: start,
            end,
            step,
            t_max,
            t_delta,
            done: false,
        })
    }

    pub fn endpoint(&self) -> Coord {
        self.end
    }

    /// Next voxel on the free chain, or `None` once only the endpoint
    /// voxel remains. If the origin voxel equals the endpoint voxel the
    /// chain is empty.
    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Option<Coord> {
        if self.done || self.current == self.end {
            self.done = true;
            return None;
        }
        let out = self.current;
        // Min t_max among axes that have not yet reached the endpoint
        // voxel. Restricting to unfinished axes guarantees termination
        // after exactly the Manhattan index distance, even if floating
        // error perturbs t_max near the end of the segment.
        let mut axis = usize::MAX;
        let mut best = f64::INFINITY;
        for a in 0..3 {
            if self.current.component(a) != self.end.component(a) && self.t_max[a] < best {
                best = self.t_max[a];
                axis = a;
            }
        }
        debug_assert!(axis != usize::MAX, "unfinished axis must exist");
        self.current
            .set_component(axis, self.current.component(axis) + self.step[axis]);
        self.t_max[axis] += self.t_delta[axis];
        Some(out)
    }
}

impl Iterator for DdaState {
    type Item = Coord;

    fn next(&mut self) -> Option<Coord> {
        DdaState::next(self)
    }
}

/// Marches the ray, invoking `visit` for every free-chain voxel.
/// Returns the visit count and the endpoint voxel.
pub fn march<F: FnMut(Coord)>(
    ray: &Ray,
    transform: &Transform,
    mut visit: F,
) -> Result<(usize, Coord), RayError> {
    let mut state = DdaState::init(ray, transform)?;
    let mut count = 0;
    while let Some(c) = state.next() {
        visit(c);
        count += 1;
    }
    Ok((count, state.endpoint()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn transform(voxel: f64) -> Transform {
        Transform::new(voxel, Point3::origin())
    }

    /// Independent fine-sampling oracle: every voxel containing a point
    /// sampled along the segment, excluding the endpoint voxel.
    fn oracle_voxels(ray: &Ray, tr: &Transform, spacing_frac: f64) -> BTreeSet<Coord> {
        let len = ray.length();
        let steps = (len / (spacing_frac * tr.voxel_size)).ceil() as usize;
        let end_voxel = tr.world_to_index(ray.end).unwrap();
        let mut set = BTreeSet::new();
        let mut last = None;
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let p = ray.origin + (ray.end - ray.origin) * t;
            let c = tr.world_to_index(p).unwrap();
            if last != Some(c) {
                if c != end_voxel {
                    set.insert(c);
                }
                last = Some(c);
            }
        }
        set
    }

    #[test]
    fn init_computes_start_and_end_voxels() {
        let tr = transform(0.1);
        let ray = Ray::new(
            Point3::new(0.05, 0.05, 0.05),
            Point3::new(0.35, 0.05, 0.05),
            false,
        )
        .unwrap();
        let dda = DdaState::init(&ray, &tr).unwrap();
        assert_eq!(dda.endpoint(), Coord::new(3, 0, 0));
        let visited: Vec<Coord> = dda.collect();
        assert_eq!(
            visited,
            vec![Coord::new(0, 0, 0), Coord::new(1, 0, 0), Coord::new(2, 0, 0)]
        );
    }

    #[test]
    fn zero_length_ray_is_rejected() {
        let p = Point3::new(1.0, 2.0, 3.0);
        assert!(matches!(
            Ray::new(p, p, false),
            Err(RayError::ZeroLength(_))
        ));
    }

    #[test]
    fn same_start_and_end_voxel_yields_empty_chain() {
        let tr = transform(0.1);
        let ray = Ray::new(
            Point3::new(0.01, 0.01, 0.01),
            Point3::new(0.09, 0.05, 0.09),
            false,
        )
        .unwrap();
        let (count, end) = march(&ray, &tr, |_| panic!("no free chain expected")).unwrap();
        assert_eq!(count, 0);
        assert_eq!(end, Coord::new(0, 0, 0));
    }

    #[test]
    fn diagonal_end_voxel_matches_floor_rule() {
        let tr = transform(0.1);
        let end = Point3::new(0.3, 0.3, 0.3); // exactly on a corner
        let ray = Ray::new(Point3::new(0.05, 0.05, 0.05), end, false).unwrap();
        let dda = DdaState::init(&ray, &tr).unwrap();
        assert_eq!(dda.endpoint(), tr.world_to_index(end).unwrap());
    }

    #[test]
    fn planar_45_degree_ray_matches_oracle_in_order() {
        let tr = transform(0.1);
        let ray = Ray::new(
            Point3::new(0.05, 0.05, 0.05),
            Point3::new(1.55, 1.55, 0.05),
            false,
        )
        .unwrap();
        let visited: Vec<Coord> = DdaState::init(&ray, &tr).unwrap().collect();
        let oracle = oracle_voxels(&ray, &tr, 1e-3);
        let visited_set: BTreeSet<Coord> = visited.iter().copied().collect();
        assert!(oracle.is_subset(&visited_set));
        // Monotone ray order: visits never repeat and each consecutive
        // pair differs by one axis step.
        assert_eq!(visited_set.len(), visited.len());
        for w in visited.windows(2) {
            assert_eq!(w[0].manhattan(w[1]), 1);
        }
        // Tie-break at corner crossings goes x before y.
        let first_steps: Vec<Coord> = visited.iter().take(3).copied().collect();
        assert_eq!(
            first_steps,
            vec![Coord::new(0, 0, 0), Coord::new(1, 0, 0), Coord::new(1, 1, 0)]
        );
    }

    #[test]
    fn visit_count_bounds() {
        let tr = transform(0.1);
        // 6 m diagonal ray: at most 3 * chebyshev + 3 visits.
        let dir = Vector3::new(1.0, 1.0, 1.0).normalize() * 6.0;
        let ray = Ray::new(Point3::new(0.05, 0.03, 0.07), Point3::new(0.05, 0.03, 0.07) + dir, false)
            .unwrap();
        let (count, end) = march(&ray, &tr, |_| {}).unwrap();
        let start = tr.world_to_index(ray.origin).unwrap();
        assert!(count <= (start.chebyshev(end) as usize) * 3 + 3);
        assert!(count <= 183);

        // Axis-aligned ray visits exactly the index distance.
        let ray = Ray::new(Point3::new(0.05, 0.05, 0.05), Point3::new(6.05, 0.05, 0.05), false)
            .unwrap();
        let (count, _) = march(&ray, &tr, |_| {}).unwrap();
        assert_eq!(count, 60);
    }

    #[test]
    fn random_rays_cover_oracle_samples() {
        let tr = transform(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..100 {
            let origin = Point3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            let dir = Vector3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            if dir.norm() < 1e-6 {
                continue;
            }
            let end = origin + dir.normalize() * rng.random_range(0.3..4.0);
            let ray = Ray::new(origin, end, false).unwrap();
            let mut visited = Vec::new();
            march(&ray, &tr, |c| visited.push(c)).unwrap();
            let visited_set: BTreeSet<Coord> = visited.iter().copied().collect();
            let oracle = oracle_voxels(&ray, &tr, 1e-3);
            for v in &oracle {
                assert!(visited_set.contains(v), "missing {v:?} for ray {ray:?}");
            }
            for w in visited.windows(2) {
                assert_eq!(w[0].manhattan(w[1]), 1, "chain break on {ray:?}");
            }
        }
    }

    #[test]
    fn truncation_produces_maxray() {
        let origin = Point3::origin();
        let ray = Ray::truncated(origin, Point3::new(100.0, 0.0, 0.0), 60.0).unwrap();
        assert!(ray.is_maxray);
        assert!((ray.length() - 60.0).abs() < 1e-9);
        let ray = Ray::truncated(origin, Point3::new(10.0, 0.0, 0.0), 60.0).unwrap();
        assert!(!ray.is_maxray);
        assert_eq!(ray.end, Point3::new(10.0, 0.0, 0.0));
    }

    #[test]
    fn determinism_across_runs() {
        let tr = transform(0.05);
        let ray = Ray::new(
            Point3::new(0.123, -0.456, 0.789),
            Point3::new(-1.321, 0.654, -0.987),
            false,
        )
        .unwrap();
        let a: Vec<Coord> = DdaState::init(&ray, &tr).unwrap().collect();
        let b: Vec<Coord> = DdaState::init(&ray, &tr).unwrap().collect();
        assert_eq!(a, b);
    }
}
