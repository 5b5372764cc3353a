use statrs::distribution::{ContinuousCDF, StudentsT};

/// Mean of a sample with its two-sided 95% t-interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// `None` with fewer than two values.
    pub ci: Option<(f64, f64)>,
    pub count: usize,
}

impl Summary {
    pub fn half_width(&self) -> Option<f64> {
        self.ci.map(|(lo, hi)| (hi - lo) / 2.0)
    }
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    assert!(n > 0, "cannot summarize an empty sample");
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Summary { mean, ci: None, count: n };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let half = if var == 0.0 {
        0.0
    } else {
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom");
        t.inverse_cdf(0.975) * (var / n as f64).sqrt()
    };
    Summary {
        mean,
        ci: Some((mean - half, mean + half)),
        count: n,
    }
}

/// `(baseline − candidate) / baseline`, in percent.
pub fn relative_gap_percent(baseline: f64, candidate: f64) -> f64 {
    (baseline - candidate) / baseline * 100.0
}

/// Mean of consecutive non-overlapping windows; a trailing partial window is kept.
pub fn window_means(values: &[f64], window: usize) -> Vec<f64> {
    values
        .chunks(window.max(1))
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_to_five() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.mean, 3.0);
        assert!((s.half_width().unwrap() - 1.963).abs() < 1e-3, "{:?}", s);
    }

    #[test]
    fn identical_values_have_zero_width() {
        let s = summarize(&[2.5; 5]);
        assert_eq!(s.ci, Some((2.5, 2.5)));
    }

    #[test]
    fn single_value_has_no_interval() {
        assert_eq!(summarize(&[4.0]).ci, None);
    }

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap_percent(10.0, 6.0), 40.0);
        assert_eq!(window_means(&[1.0, 3.0, 5.0], 2), [2.0, 5.0]);
    }
}
