use super::special::student_t_two_tailed;
use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    /// Two-tailed.
    pub p: f64,
    pub df: usize,
}

/// Paired two-tailed t-test on `xs - ys` with the sample (n - 1) standard
/// deviation.
pub fn paired_t_test(xs: &[f64], ys: &[f64]) -> Result<TTestResult, StatsError> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(StatsError::TooShort(n));
    }
    let d: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| x - y).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    // differences that agree to rounding noise count as zero variance
    if sd <= 1e-12 * mean.abs().max(1.0) {
        return Err(StatsError::DegenerateTest);
    }
    let t = mean / (sd / nf.sqrt());
    let df = n - 1;
    Ok(TTestResult {
        t,
        p: student_t_two_tailed(t, df as f64),
        df,
    })
}
