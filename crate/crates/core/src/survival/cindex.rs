/// Time-based concordance index.
///
/// A pair `(i, j)` is comparable when `T_i < T_j` and record `i` is
/// uncensored; it counts as concordant when the predicted times satisfy
/// `That_i < That_j`. Tied predictions are excluded from both counts.
/// Returns `None` when no comparable pairs exist.
pub fn cindex_times(
    true_times: &[f64],
    predicted_times: &[f64],
    events: &[bool],
) -> Option<f64> {
    assert_eq!(true_times.len(), predicted_times.len());
    assert_eq!(true_times.len(), events.len());
    let n = true_times.len();
    let mut concordant = 0usize;
    let mut comparable = 0usize;
    for i in 0..n {
        if !events[i] {
            continue;
        }
        for j in 0..n {
            if i == j || true_times[i] >= true_times[j] {
                continue;
            }
            if predicted_times[i] == predicted_times[j] {
                continue;
            }
            comparable += 1;
            if predicted_times[i] < predicted_times[j] {
                concordant += 1;
            }
        }
    }
    if comparable == 0 {
        None
    } else {
        Some(concordant as f64 / comparable as f64)
    }
}
