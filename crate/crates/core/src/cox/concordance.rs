use crate::error::{Error, Result};

/// Harrell's concordance index.
///
/// A pair `(i, j)` is admissible when `i` is uncensored and `T_j >= T_i`;
/// it is concordant when `i` has the higher risk score, and ties in score
/// count one half.
pub fn c_index(scores: &[f64], durations: &[f64], observed: &[bool]) -> Result<f64> {
    let n = scores.len();
    if durations.len() != n || observed.len() != n {
        return Err(Error::data(
            "scores, durations and observed differ in length",
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]));
    let mut admissible = 0u64;
    let mut concordant = 0.0f64;
    // j runs over subjects with T_j >= T_i, which in sorted order is a
    // suffix starting at the first subject tied with i
    let mut start = 0;
    for pos in 0..n {
        let i = order[pos];
        if durations[order[start]] < durations[i] {
            start = pos;
        }
        if !observed[i] {
            continue;
        }
        for &j in &order[start..] {
            if j == i {
                continue;
            }
            admissible += 1;
            if scores[i] > scores[j] {
                concordant += 1.0;
            } else if scores[i] == scores[j] {
                concordant += 0.5;
            }
        }
    }
    if admissible == 0 {
        return Err(Error::data("no admissible pairs for the concordance index"));
    }
    Ok(concordant / admissible as f64)
}
