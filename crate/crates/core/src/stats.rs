//! Moment accumulation and grouped jackknife for Monte Carlo estimators.

/// Raw first and second moments of a K-dimensional sample.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments<const K: usize> {
    count: f64,
    sums: [f64; K],
    products: [[f64; K]; K],
}

impl<const K: usize> Default for Moments<K> {
    fn default() -> Self {
        Self {
            count: 0.0,
            sums: [0.0; K],
            products: [[0.0; K]; K],
        }
    }
}

impl<const K: usize> Moments<K> {
    pub(crate) fn push(&mut self, x: [f64; K]) {
        self.count += 1.0;
        for i in 0..K {
            self.sums[i] += x[i];
            for j in i..K {
                self.products[i][j] += x[i] * x[j];
            }
        }
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        self.count += other.count;
        for i in 0..K {
            self.sums[i] += other.sums[i];
            for j in i..K {
                self.products[i][j] += other.products[i][j];
            }
        }
    }

    pub(crate) fn minus(&self, other: &Self) -> Self {
        let mut out = *self;
        out.count -= other.count;
        for i in 0..K {
            out.sums[i] -= other.sums[i];
            for j in i..K {
                out.products[i][j] -= other.products[i][j];
            }
        }
        out
    }

    /// Unbiased sample covariance between components `i` and `j`.
    pub(crate) fn cov(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let n = self.count;
        (self.products[i][j] - self.sums[i] * self.sums[j] / n) / (n - 1.0)
    }
}

/// Point estimate plus delete-one-group jackknife standard error.
///
/// Returns `None` when the statistic is undefined on the full sample or on
/// any leave-one-group-out sample.
pub(crate) fn grouped_jackknife<const K: usize>(
    groups: &[Moments<K>],
    statistic: impl Fn(&Moments<K>) -> Option<f64>,
) -> Option<(f64, f64)> {
    let mut total = Moments::<K>::default();
    for g in groups {
        total.merge(g);
    }
    let estimate = statistic(&total)?;
    let g = groups.len() as f64;
    if groups.len() < 2 {
        return Some((estimate, f64::NAN));
    }
    let leave_out: Option<Vec<f64>> = groups
        .iter()
        .map(|grp| statistic(&total.minus(grp)))
        .collect();
    let leave_out = leave_out?;
    let mean = leave_out.iter().sum::<f64>() / g;
    let spread = leave_out.iter().map(|t| (t - mean).powi(2)).sum::<f64>();
    Some((estimate, ((g - 1.0) / g * spread).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_of_known_data() {
        let mut m = Moments::<2>::default();
        for (a, b) in [(1.0, 2.0), (2.0, 4.0), (3.0, 6.0), (4.0, 8.0)] {
            m.push([a, b]);
        }
        assert!((m.cov(0, 0) - 5.0 / 3.0).abs() < 1e-12);
        assert!((m.cov(0, 1) - 10.0 / 3.0).abs() < 1e-12);
        assert!((m.cov(1, 0) - m.cov(0, 1)).abs() < 1e-15);
    }

    #[test]
    fn jackknife_of_the_mean_matches_classical_error() {
        // statistic = mean; grouped jackknife SE equals sd(group means)/sqrt(G)
        let groups: Vec<Moments<1>> = (0..10)
            .map(|g| {
                let mut m = Moments::default();
                for k in 0..5 {
                    m.push([(g * 5 + k) as f64]);
                }
                m
            })
            .collect();
        let (est, se) = grouped_jackknife(&groups, |m| Some(m.sums[0] / m.count)).unwrap();
        assert!((est - 24.5).abs() < 1e-12);
        let means: Vec<f64> = (0..10).map(|g| (g * 5) as f64 + 2.0).collect();
        let mbar = means.iter().sum::<f64>() / 10.0;
        let sd = (means.iter().map(|x| (x - mbar).powi(2)).sum::<f64>() / 9.0).sqrt();
        assert!((se - sd / 10f64.sqrt()).abs() < 1e-9);
    }
}
