use nalgebra::Point3;

/// k-d tree over a bare point set for nearest-neighbor queries.
///
/// Ties on distance are broken toward the smaller original index, so queries
/// are deterministic regardless of build order.
pub struct PointKdTree {
    /// Points in tree order (median-organized per subtree).
    pts: Vec<Point3<f64>>,
    /// Original index of each tree-order point.
    ids: Vec<u32>,
    /// Split axis per subtree root position.
    axes: Vec<u8>,
}

impl PointKdTree {
    pub fn new(points: &[Point3<f64>]) -> Self {
        assert!(!points.is_empty(), "kd tree needs at least one point");
        let mut pairs: Vec<(Point3<f64>, u32)> = points
            .iter()
            .copied()
            .zip(0..points.len() as u32)
            .collect();
        let mut axes = vec![0u8; points.len()];
        build(&mut pairs, &mut axes, 0);
        PointKdTree {
            pts: pairs.iter().map(|p| p.0).collect(),
            ids: pairs.iter().map(|p| p.1).collect(),
            axes,
        }
    }

    pub fn len(&self) -> usize {
        self.pts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pts.is_empty()
    }

    /// Index (into the original point slice) and squared distance of the
    /// nearest neighbor.
    pub fn nearest(&self, query: &Point3<f64>) -> (u32, f64) {
        let mut best = (u32::MAX, f64::INFINITY);
        self.nearest_rec(0, self.pts.len(), query, &mut best);
        best
    }

    pub fn nearest_distance(&self, query: &Point3<f64>) -> f64 {
        self.nearest(query).1.sqrt()
    }

    fn nearest_rec(&self, lo: usize, hi: usize, q: &Point3<f64>, best: &mut (u32, f64)) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let d = (self.pts[mid] - q).norm_squared();
        let id = self.ids[mid];
        if d < best.1 || (d == best.1 && id < best.0) {
            *best = (id, d);
        }
        if hi - lo == 1 {
            return;
        }
        let axis = self.axes[mid] as usize;
        let delta = q[axis] - self.pts[mid][axis];
        let (near, far) = if delta < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.nearest_rec(near.0, near.1, q, best);
        if delta * delta <= best.1 {
            self.nearest_rec(far.0, far.1, q, best);
        }
    }
}

fn build(pairs: &mut [(Point3<f64>, u32)], axes: &mut [u8], offset: usize) {
    if pairs.len() <= 1 {
        return;
    }
    // Split on the axis with the widest spread.
    let mut min = pairs[0].0;
    let mut max = pairs[0].0;
    for (p, _) in pairs.iter() {
        min = min.inf(p);
        max = max.sup(p);
    }
    let axis = (max - min).imax();
    let mid = pairs.len() / 2;
    pairs.select_nth_unstable_by(mid, |a, b| {
        a.0[axis].total_cmp(&b.0[axis]).then(a.1.cmp(&b.1))
    });
    axes[offset + mid] = axis as u8;
    let (left, right) = pairs.split_at_mut(mid);
    build(left, &mut axes[..], offset);
    build(&mut right[1..], axes, offset + mid + 1);
}
