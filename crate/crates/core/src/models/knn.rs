use super::LabeledDataset;
use crate::ingest::CoarseLabel;

/// Vote fractions among the `k` nearest training rows (Euclidean). Equal
/// distances are resolved by training order.
pub fn scores(features: &[Vec<f32>], labels: &[CoarseLabel], k: usize, query: &[f32]) -> [f64; CoarseLabel::COUNT] {
    let mut dist: Vec<(f64, usize)> = features
        .iter()
        .enumerate()
        .map(|(i, row)| (squared_distance(row, query), i))
        .collect();
    let k = k.clamp(1, dist.len().max(1));
    dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = [0f64; CoarseLabel::COUNT];
    for &(_, i) in &dist[..k] {
        votes[labels[i].index()] += 1.0;
    }
    votes.iter_mut().for_each(|v| *v /= k as f64);
    votes
}

fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

pub fn store(ds: &LabeledDataset) -> (Vec<Vec<f32>>, Vec<CoarseLabel>) {
    ((0..ds.len()).map(|i| ds.row(i).to_vec()).collect(), ds.labels.clone())
}
