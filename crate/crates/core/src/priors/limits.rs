//! Sup-norm distance between GH densities and their limiting laws.

use serde::{Deserialize, Serialize};

use super::gh::{gh_pdf, GhParams};
use super::reference::{reference_pdf, Reference};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum LimitCase {
    /// `λ = −ν/2, β = 0, δ = √ν` and `α = level → 0` tends to Student-t(ν).
    StudentTAlpha { nu: f64 },
    /// `λ = 1, β = 0, α = 1/b` and `δ = level → 0` tends to Laplace(0, b).
    LaplaceDelta { b: f64 },
}

impl LimitCase {
    pub fn name(&self) -> &'static str {
        match self {
            LimitCase::StudentTAlpha { .. } => "student_t_alpha",
            LimitCase::LaplaceDelta { .. } => "laplace_delta",
        }
    }

    /// GH configuration at `level` and the law it approaches.
    pub fn configuration(&self, level: f64) -> Result<(GhParams, Reference)> {
        match *self {
            LimitCase::StudentTAlpha { nu } => Ok((
                GhParams::new(-0.5 * nu, level, 0.0, nu.sqrt(), 0.0)?,
                Reference::StudentT {
                    nu,
                    mu: 0.0,
                    scale: 1.0,
                },
            )),
            LimitCase::LaplaceDelta { b } => Ok((
                GhParams::new(1.0, 1.0 / b, 0.0, level, 0.0)?,
                Reference::Laplace { mu: 0.0, b },
            )),
        }
    }
}

/// Evenly spaced evaluation points `start, start + step, …, end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for XGrid {
    fn default() -> Self {
        XGrid {
            start: -10.0,
            end: 10.0,
            step: 0.01,
        }
    }
}

impl XGrid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.end >= self.start) || !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::domain(format!("invalid grid {self:?}")));
        }
        let n = ((self.end - self.start) / self.step).round() as usize + 1;
        // index-based so the endpoints are hit exactly
        Ok((0..n)
            .map(|i| {
                if i + 1 == n {
                    self.end
                } else {
                    self.start + i as f64 * self.step
                }
            })
            .collect())
    }
}

/// `sup_x |GH(x) − limit(x)|` over `grid` for each level.
pub fn limit_deviation(case: &LimitCase, levels: &[f64], grid: &XGrid) -> Result<Vec<f64>> {
    if levels.is_empty() || levels.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::domain("limit levels must be positive and finite"));
    }
    if levels.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("limit levels must be strictly decreasing"));
    }
    let xs = grid.points()?;
    levels
        .iter()
        .map(|&level| {
            let (gh, target) = case.configuration(level)?;
            xs.iter().try_fold(0.0_f64, |sup, &x| {
                Ok(sup.max((gh_pdf(x, &gh)? - reference_pdf(&target, x)?).abs()))
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_points() {
        let xs = XGrid::default().points().unwrap();
        assert_eq!(xs.len(), 2001);
        assert_eq!(xs[0], -10.0);
        assert_eq!(xs[2000], 10.0);
        assert_eq!(xs[1000], 0.0);
    }

    #[test]
    fn deviations_shrink() {
        let levels = [1.0, 0.1, 0.01, 0.001];
        for case in [LimitCase::StudentTAlpha { nu: 1.0 }, LimitCase::LaplaceDelta { b: 1.0 }] {
            let dev = limit_deviation(&case, &levels, &XGrid::default()).unwrap();
            assert!(dev.windows(2).all(|w| w[1] < w[0]), "{case:?}: {dev:?}");
            assert!(dev[3] < 1e-2);
        }
    }

    #[test]
    fn tiny_level() {
        for case in [LimitCase::StudentTAlpha { nu: 1.0 }, LimitCase::LaplaceDelta { b: 1.0 }] {
            let dev = limit_deviation(&case, &[1e-6], &XGrid::default()).unwrap();
            assert!(dev[0] < 1e-4, "{case:?}: {dev:?}");
        }
    }

    #[test]
    fn rejects_bad_levels() {
        let case = LimitCase::LaplaceDelta { b: 1.0 };
        assert!(limit_deviation(&case, &[0.1, 1.0], &XGrid::default()).is_err());
        assert!(limit_deviation(&case, &[0.0], &XGrid::default()).is_err());
    }
}
