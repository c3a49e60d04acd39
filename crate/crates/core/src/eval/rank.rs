use crate::error::{Error, Result};

/// Ranks for a methods × datasets score matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTable {
    /// `per_dataset[m][d]`: rank of method `m` on dataset `d` (1 = best).
    pub per_dataset: Vec<Vec<f64>>,
    /// Mean of each method's per-dataset ranks.
    pub average: Vec<f64>,
    /// Rank of the average rank (1 = best).
    pub final_rank: Vec<f64>,
}

/// Fractional ranking: position 1 goes to the first element under `better`,
/// tied values share the mean of the positions they occupy.
fn fractional_ranks(values: &[f64], higher_is_better: bool) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        let o = values[a].total_cmp(&values[b]);
        if higher_is_better {
            o.reverse()
        } else {
            o
        }
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// Rank of the average rank. `scores[m][d]` is method `m`'s score on
/// dataset `d`; higher is better.
pub fn rank_table(scores: &[Vec<f64>]) -> Result<RankTable> {
    let methods = scores.len();
    if methods == 0 {
        return Err(Error::IncompleteMatrix("no methods".into()));
    }
    let datasets = scores[0].len();
    if datasets == 0 {
        return Err(Error::IncompleteMatrix("no datasets".into()));
    }
    for (m, row) in scores.iter().enumerate() {
        if row.len() != datasets {
            return Err(Error::IncompleteMatrix(format!(
                "method {m} has {} scores, expected {datasets}",
                row.len()
            )));
        }
        if let Some(d) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::IncompleteMatrix(format!(
                "method {m} has no finite score on dataset {d}"
            )));
        }
    }

    let mut per_dataset = vec![vec![0.0; datasets]; methods];
    for d in 0..datasets {
        let column: Vec<f64> = scores.iter().map(|row| row[d]).collect();
        for (m, r) in fractional_ranks(&column, true).into_iter().enumerate() {
            per_dataset[m][d] = r;
        }
    }
    let average: Vec<f64> = per_dataset
        .iter()
        .map(|r| r.iter().sum::<f64>() / datasets as f64)
        .collect();
    let final_rank = fractional_ranks(&average, false);
    Ok(RankTable {
        per_dataset,
        average,
        final_rank,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_by_two_tie() {
        let t = rank_table(&[vec![0.9, 0.5], vec![0.8, 0.6]]).unwrap();
        assert_eq!(t.per_dataset, vec![vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert_eq!(t.average, vec![1.5, 1.5]);
        assert_eq!(t.final_rank, vec![1.5, 1.5]);
    }

    #[test]
    fn dominator_ranks_first() {
        let t = rank_table(&[vec![0.1, 0.2, 0.3], vec![0.9, 0.8, 0.7], vec![0.5, 0.1, 0.6]]).unwrap();
        assert_eq!(t.final_rank[1], 1.0);
    }

    #[test]
    fn distinct_averages_give_permutation() {
        let t = rank_table(&[vec![0.5, 0.5], vec![0.9, 0.7], vec![0.1, 0.2]]).unwrap();
        assert_eq!(t.final_rank, vec![2.0, 1.0, 3.0]);
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        assert!(matches!(
            rank_table(&[vec![0.5, 0.5], vec![0.9]]),
            Err(Error::IncompleteMatrix(_))
        ));
        assert!(matches!(
            rank_table(&[vec![0.5, f64::NAN]]),
            Err(Error::IncompleteMatrix(_))
        ));
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_rescaling(
            scores in prop::collection::vec(prop::collection::vec(0u8..20, 4), 2..6),
            scale in 0.1f64..10.0,
            shift in -5.0f64..5.0,
        ) {
            let base: Vec<Vec<f64>> = scores.iter().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect();
            // per-dataset strictly increasing transforms, different per column
            let warped: Vec<Vec<f64>> = base.iter().map(|r| {
                r.iter().enumerate().map(|(d, &v)| match d % 3 {
                    0 => v * scale + shift,
                    1 => v.powi(3),
                    _ => (v + 1.0).ln(),
                }).collect()
            }).collect();
            prop_assert_eq!(rank_table(&base).unwrap().final_rank, rank_table(&warped).unwrap().final_rank);
        }
    }
}
