//! Brute-force k-nearest-neighbour graph over a point cloud.

use autodiff_tensor::Tensor;

/// Builds the neighbour graph used by the edge-convolution encoder.
///
/// `points` must be an `N x 3` tensor. The result is a flat row-major `N x k`
/// index table: entry `i * k + j` is the index of the `j`-th nearest
/// neighbour of point `i` (by squared Euclidean distance, ascending). A point
/// is never its own neighbour, and distance ties are broken toward the lower
/// point index so the graph is a pure function of the coordinates.
///
/// Panics when the cloud does not contain at least `k + 1` points.
pub fn knn_graph(points: &Tensor, k: usize) -> Vec<usize> {
    let (n, c) = points.shape();
    assert_eq!(c, 3, "expected an N x 3 coordinate tensor, got {n} x {c}");
    assert!(k >= 1, "k must be at least 1");
    assert!(
        n > k,
        "need more than k = {k} points to build a {k}-nearest-neighbour graph, got {n}"
    );
    let data = points.data();
    let mut graph = Vec::with_capacity(n * k);
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        let pi = &data[i * 3..i * 3 + 3];
        candidates.clear();
        for j in 0..n {
            if j == i {
                continue;
            }
            let pj = &data[j * 3..j * 3 + 3];
            let dx = pj[0] - pi[0];
            let dy = pj[1] - pi[1];
            let dz = pj[2] - pi[2];
            candidates.push((dx * dx + dy * dy + dz * dz, j));
        }
        // Sort is total because the index disambiguates equal distances.
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        graph.extend(candidates.iter().take(k).map(|&(_, j)| j));
    }
    graph
}

/// Row-major index table that repeats each point index `k` times:
/// `[0, 0, .., 0, 1, 1, ..]`. Used to gather the centre point of every edge.
pub fn edge_centre_indices(n: usize, k: usize) -> Vec<usize> {
    let mut ids = Vec::with_capacity(n * k);
    for i in 0..n {
        ids.extend(std::iter::repeat(i).take(k));
    }
    ids
}
