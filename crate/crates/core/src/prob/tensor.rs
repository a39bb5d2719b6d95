//! Row-major index arithmetic for small dense tensors.

pub fn flat_index(shape: &[usize], idx: &[usize]) -> usize {
    debug_assert_eq!(shape.len(), idx.len());
    idx.iter().zip(shape).fold(0, |acc, (&i, &d)| acc * d + i)
}

pub fn unravel(shape: &[usize], mut flat: usize, out: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        out[k] = flat % shape[k];
        flat /= shape[k];
    }
}

/// Iterates over every multi-index of `shape` in row-major order.
pub fn indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    let mut cur = vec![0usize; shape.len()];
    (0..total).map(move |flat| {
        unravel(shape, flat, &mut cur);
        cur.clone()
    })
}

/// For every flat index of `shape`, the flat index of its projection onto `keep`
/// (in the order given by `keep`).
pub fn projection_map(shape: &[usize], keep: &[usize]) -> (Vec<usize>, usize) {
    let sub_shape: Vec<usize> = keep.iter().map(|&a| shape[a]).collect();
    let sub_size = sub_shape.iter().product::<usize>();
    let total: usize = shape.iter().product();
    let mut idx = vec![0usize; shape.len()];
    let mut map = Vec::with_capacity(total);
    for flat in 0..total {
        unravel(shape, flat, &mut idx);
        let m = keep.iter().fold(0, |acc, &a| acc * shape[a] + idx[a]);
        map.push(m);
    }
    (map, sub_size)
}
