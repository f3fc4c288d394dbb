use crate::syllogism::N_RESPONSES;
use crate::Distribution;

use super::StatsError;

/// Aggregate agreement between a prediction matrix and the human matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub r: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// Sample Pearson correlation. Constant inputs are an error.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(StatsError::TooShort(a.len()));
    }
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(a) || constant(b) {
        return Err(StatsError::ConstantInput);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(StatsError::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

fn check_shapes(pred: &[Distribution], human: &[Distribution]) -> Result<(), StatsError> {
    if pred.len() != human.len() {
        return Err(StatsError::LengthMismatch {
            left: pred.len(),
            right: human.len(),
        });
    }
    if pred.is_empty() {
        return Err(StatsError::TooShort(0));
    }
    Ok(())
}

pub fn flatten(m: &[Distribution]) -> Vec<f64> {
    m.iter().flat_map(|row| row.iter().copied()).collect()
}

/// Pearson over all cells, RMSE and MAE over all cells.
pub fn aggregate_metrics(pred: &[Distribution], human: &[Distribution]) -> Result<Metrics, StatsError> {
    check_shapes(pred, human)?;
    let p = flatten(pred);
    let h = flatten(human);
    let r = pearson(&p, &h)?;
    let n = p.len() as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (a, b) in p.iter().zip(&h) {
        let e = a - b;
        se += e * e;
        ae += e.abs();
    }
    Ok(Metrics {
        r,
        rmse: (se / n).sqrt(),
        mae: ae / n,
    })
}

/// Column-wise Pearson over items; each column may fail on its own.
pub fn per_type_correlations(
    pred: &[Distribution],
    human: &[Distribution],
) -> Result<[Result<f64, StatsError>; N_RESPONSES], StatsError> {
    check_shapes(pred, human)?;
    Ok(std::array::from_fn(|k| {
        let a: Vec<f64> = pred.iter().map(|row| row[k]).collect();
        let b: Vec<f64> = human.iter().map(|row| row[k]).collect();
        pearson(&a, &b)
    }))
}

pub fn row_rmse(pred: &Distribution, human: &Distribution) -> f64 {
    let se: f64 = pred.iter().zip(human).map(|(a, b)| (a - b) * (a - b)).sum();
    (se / N_RESPONSES as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemDelta {
    pub index: usize,
    pub code: String,
    pub rmse_a: f64,
    pub rmse_b: f64,
    /// `rmse_a - rmse_b`; positive when B is closer to the human row.
    pub delta: f64,
}

/// Per-item RMSE(A) - RMSE(B), sorted by descending delta (ties by item
/// order).
pub fn item_rmse_delta(
    pred_a: &[Distribution],
    pred_b: &[Distribution],
    human: &[Distribution],
    codes: &[String],
) -> Result<Vec<ItemDelta>, StatsError> {
    check_shapes(pred_a, human)?;
    check_shapes(pred_b, human)?;
    if codes.len() != human.len() {
        return Err(StatsError::LengthMismatch {
            left: codes.len(),
            right: human.len(),
        });
    }
    let mut out: Vec<ItemDelta> = (0..human.len())
        .map(|i| {
            let rmse_a = row_rmse(&pred_a[i], &human[i]);
            let rmse_b = row_rmse(&pred_b[i], &human[i]);
            ItemDelta {
                index: i,
                code: codes[i].clone(),
                rmse_a,
                rmse_b,
                delta: rmse_a - rmse_b,
            }
        })
        .collect();
    out.sort_by(|x, y| y.delta.total_cmp(&x.delta).then(x.index.cmp(&y.index)));
    Ok(out)
}
