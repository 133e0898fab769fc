use super::Segmentation;
use crate::error::{bail, Result};
use crate::numerics::Tensor;
use alloc::vec;

/// Collapse a subword attention matrix (rows = queries, columns = keys) to
/// word level: rows of a split query word are summed, columns of a split key
/// word are averaged. With `renormalize`, each output row is rescaled to sum
/// to one, which merging otherwise breaks; without any split word there is
/// nothing to repair and the input comes back unchanged, bit for bit.
pub fn merge_attention(
    raw: &Tensor,
    seg_query: &Segmentation,
    seg_key: &Segmentation,
    renormalize: bool,
) -> Result<Tensor> {
    let (rows, cols) = (raw.rows(), raw.cols());
    if raw.shape().len() != 2
        || rows != seg_query.alignment.len()
        || cols != seg_key.alignment.len()
    {
        bail!(
            Shape,
            "attention {:?} does not match {} query and {} key subwords",
            raw.shape(),
            seg_query.alignment.len(),
            seg_key.alignment.len()
        );
    }
    let (nq, nk) = (seg_query.word_count(), seg_key.word_count());
    let mut key_sizes = vec![0usize; nk];
    for &w in &seg_key.alignment {
        key_sizes[w] += 1;
    }
    let mut out = vec![0.0; nq * nk];
    for (i, &wq) in seg_query.alignment.iter().enumerate() {
        let row = raw.row(i);
        for (j, &wk) in seg_key.alignment.iter().enumerate() {
            out[wq * nk + wk] += row[j] / key_sizes[wk] as f64;
        }
    }
    let split = nq != rows || nk != cols;
    if renormalize && split {
        for row in out.chunks_mut(nk) {
            let s: f64 = row.iter().sum();
            if s > 0.0 {
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
    }
    Tensor::matrix(nq, nk, out)
}
