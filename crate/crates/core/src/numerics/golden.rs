//! Golden-section search for the maximum of a unimodal function.

use crate::error::{Error, Result};

/// Fraction of the bracket at which the upper interior point sits.
pub const GOLDEN: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy)]
pub struct SearchSpec {
    pub lower: f64,
    pub upper: f64,
    /// Stop once the bracket is no wider than this.
    pub epsilon: f64,
    pub max_iter: usize,
}

impl SearchSpec {
    pub fn new(lower: f64, upper: f64, epsilon: f64) -> Self {
        Self {
            lower,
            upper,
            epsilon,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GoldenResult {
    pub x: f64,
    pub f: f64,
    pub iterations: usize,
    /// Bracket width before the first and after every iteration.
    pub widths: Vec<f64>,
}

impl GoldenResult {
    /// Geometric-mean contraction of the bracket per iteration.
    pub fn contraction_ratio(&self) -> f64 {
        let n = self.widths.len();
        if n < 2 {
            return f64::NAN;
        }
        (self.widths[n - 1] / self.widths[0]).powf(1.0 / (n - 1) as f64)
    }
}

/// Maximizes `f` on `[spec.lower, spec.upper]`.
///
/// Interior points sit at 0.382 and 0.618 of the bracket. The side with the
/// smaller value is discarded; on an exact tie both outer pieces are.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    spec: &SearchSpec,
) -> Result<GoldenResult> {
    if !(spec.lower < spec.upper) || !(spec.epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "bracket [{}, {}] with epsilon {}",
            spec.lower, spec.upper, spec.epsilon
        )));
    }
    let mut eval = |x: f64| -> Result<f64> {
        let v = f(x);
        if v.is_nan() {
            return Err(Error::Numerical(format!("objective is NaN at x = {x}")));
        }
        Ok(v)
    };

    let (mut lo, mut hi) = (spec.lower, spec.upper);
    let mut xb = hi - GOLDEN * (hi - lo);
    let mut xe = lo + GOLDEN * (hi - lo);
    let mut fb = eval(xb)?;
    let mut fe = eval(xe)?;
    let mut widths = vec![hi - lo];
    let mut iterations = 0;

    while hi - lo > spec.epsilon {
        if iterations >= spec.max_iter {
            let (best_x, best_f) = if fb >= fe { (xb, fb) } else { (xe, fe) };
            return Err(Error::Convergence {
                iterations,
                best_x,
                best_f,
            });
        }
        iterations += 1;
        if fb > fe {
            hi = xe;
            xe = xb;
            fe = fb;
            xb = hi - GOLDEN * (hi - lo);
            fb = eval(xb)?;
        } else if fb < fe {
            lo = xb;
            xb = xe;
            fb = fe;
            xe = lo + GOLDEN * (hi - lo);
            fe = eval(xe)?;
        } else {
            lo = xb;
            hi = xe;
            xb = hi - GOLDEN * (hi - lo);
            xe = lo + GOLDEN * (hi - lo);
            fb = eval(xb)?;
            fe = eval(xe)?;
        }
        widths.push(hi - lo);
    }

    let xm = 0.5 * (lo + hi);
    let fm = eval(xm)?;
    let (x, f) = [(xb, fb), (xe, fe), (xm, fm)]
        .into_iter()
        .fold((xm, fm), |best, c| if c.1 > best.1 { c } else { best });
    Ok(GoldenResult {
        x,
        f,
        iterations,
        widths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_quadratic_peak() {
        let r = golden_section_max(|x| -(x - 0.3) * (x - 0.3), &SearchSpec::new(0.0, 1.0, 1e-6))
            .unwrap();
        assert!((r.x - 0.3).abs() <= 1e-6);
    }

    #[test]
    fn logistic_peak_at_half() {
        let r = golden_section_max(|x| x * (1.0 - x), &SearchSpec::new(0.0, 1.0, 1e-3)).unwrap();
        assert!((r.x - 0.5).abs() <= 1e-3);
    }

    #[test]
    fn contraction_is_golden() {
        let r =
            golden_section_max(|x| -(x - 0.71).powi(4), &SearchSpec::new(0.0, 1.0, 1e-8)).unwrap();
        assert!((r.contraction_ratio() - GOLDEN).abs() < 1e-9);
        for w in r.widths.windows(2) {
            assert!((w[1] / w[0] - GOLDEN).abs() < 1e-6);
        }
    }

    #[test]
    fn iteration_count_matches_log_ratio() {
        let r = golden_section_max(|x| -x * x, &SearchSpec::new(-1.0, 2.0, 1e-3)).unwrap();
        let expected = ((1e-3f64 / 3.0).ln() / GOLDEN.ln()).ceil() as usize;
        assert_eq!(r.iterations, expected);
    }

    #[test]
    fn flat_function_shrinks_symmetrically() {
        let r = golden_section_max(|_| 1.0, &SearchSpec::new(0.0, 1.0, 1e-4)).unwrap();
        assert!((r.x - 0.5).abs() < 1e-3);
    }

    #[test]
    fn cap_reports_best_so_far() {
        let spec = SearchSpec {
            max_iter: 3,
            ..SearchSpec::new(0.0, 1.0, 1e-9)
        };
        match golden_section_max(|x| -(x - 0.2).abs(), &spec) {
            Err(Error::Convergence {
                iterations, best_x, ..
            }) => {
                assert_eq!(iterations, 3);
                assert!(best_x < 0.5);
            }
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_empty_bracket() {
        assert!(golden_section_max(|x| x, &SearchSpec::new(1.0, 1.0, 1e-3)).is_err());
    }
}
