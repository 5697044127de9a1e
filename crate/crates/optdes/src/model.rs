//! Model parameters, regression vector, variance function and the
//! completely symmetric matrix algebra everything else is built on.
//!
//! The regression model is `y = f(x)' b + e` on the hypercube `[-1,1]^K`
//! with `f(x) = (1, x_1, ..., x_K)'`. The random coefficient vector has a
//! block dispersion matrix `D = diag(d0, D1)` where
//! `D1 = (d1 - d2) I + d2 11'` is completely symmetric: common variance
//! `d1` on the slopes, common covariance `d2` between them. Observational
//! error variance is absorbed into `d0`. After that reduction the model is
//! an ordinary heteroscedastic linear model with variance function
//! `sigma^2(x) = f(x)' D f(x)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters `(K, d0, d1, d2)` of the dispersion matrix `D`.
///
/// Valid values lie in the model cone: `d0 > 0`, `d1 > 0` and
/// `-d1/(K-1) <= d2 <= d1`, exactly the set where `D` is nonnegative
/// definite. The mean-parameter dimension is `p = K + 1`, always derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct DispersionSpec {
    k: usize,
    d0: f64,
    d1: f64,
    d2: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RawSpec {
    k: usize,
    d0: f64,
    d1: f64,
    d2: f64,
}

impl TryFrom<RawSpec> for DispersionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        DispersionSpec::new(raw.k, raw.d0, raw.d1, raw.d2)
    }
}

impl From<DispersionSpec> for RawSpec {
    fn from(s: DispersionSpec) -> Self {
        RawSpec {
            k: s.k,
            d0: s.d0,
            d1: s.d1,
            d2: s.d2,
        }
    }
}

impl DispersionSpec {
    /// Validates cone membership (zero slack) and `K >= 2`.
    pub fn new(k: usize, d0: f64, d1: f64, d2: f64) -> Result<Self> {
        Self::with_slack(k, d0, d1, d2, 0.0)
    }

    /// Like [`DispersionSpec::new`] but admits points within `slack` of the
    /// cone boundary. Slack 0 keeps the boundary itself admissible.
    pub fn with_slack(k: usize, d0: f64, d1: f64, d2: f64, slack: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::Domain(format!("dimension K must be >= 2, got {k}")));
        }
        if !cone_contains_slack(k, d0, d1, d2, slack) {
            return Err(Error::Domain(format!(
                "(d0, d1, d2) = ({d0}, {d1}, {d2}) is outside the model cone for K = {k}"
            )));
        }
        Ok(DispersionSpec { k, d0, d1, d2 })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn d2(&self) -> f64 {
        self.d2
    }

    /// Number of mean parameters, `p = K + 1`.
    pub fn p(&self) -> usize {
        self.k + 1
    }

    /// Slope block `D1` of the dispersion matrix.
    pub fn slope_block(&self) -> SymPair {
        SymPair::new(self.k, self.d1, self.d2)
    }

    /// True iff `D` is positive definite (strict cone interior in `d2`,
    /// positive `d0`): all three eigenvalue groups strictly positive.
    pub fn is_positive_definite(&self) -> bool {
        self.d0 > 0.0 && self.d1 - self.d2 > 0.0 && self.d1 + (self.k as f64 - 1.0) * self.d2 > 0.0
    }

    /// Blocks of `D^{-1} = diag(1/d0, D1^{-1})`.
    pub fn inverse_blocks(&self) -> Result<(f64, SymPair)> {
        Ok((1.0 / self.d0, self.slope_block().inverse()?))
    }

    /// The same parameters scaled by `lambda > 0`; stays in the cone.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if lambda <= 0.0 {
            return Err(Error::Domain(format!("scale must be positive, got {lambda}")));
        }
        DispersionSpec::new(self.k, lambda * self.d0, lambda * self.d1, lambda * self.d2)
    }

    /// Variance function `sigma^2(x) = d0 + d1 ||x||^2 + 2 d2 sum_{i<j} x_i x_j`.
    pub fn variance_at(&self, x: &[f64]) -> Result<f64> {
        check_point(self.k, x)?;
        let q: f64 = x.iter().map(|v| v * v).sum();
        let s: f64 = x.iter().sum();
        // 2 * sum_{i<j} x_i x_j = s^2 - q
        Ok(self.d0 + self.d1 * q + self.d2 * (s * s - q))
    }

    /// Variance shared by every point whose coordinates all have absolute
    /// value `level` and that carries exactly `ell` (or `K - ell`) negative
    /// entries. All such points lie in one orbit of the symmetry group and
    /// the variance function is constant on the orbit.
    pub fn variance_on_orbit(&self, ell: usize, level: f64) -> f64 {
        let k = self.k as f64;
        let d = k - 2.0 * ell as f64;
        self.d0 + level * level * (self.d1 * k + self.d2 * (d * d - k))
    }
}

/// Membership test for the model cone with zero slack.
pub fn cone_contains(k: usize, d0: f64, d1: f64, d2: f64) -> bool {
    cone_contains_slack(k, d0, d1, d2, 0.0)
}

/// Cone membership with a slack band around the `d2` boundary. The strict
/// positivity of `d0` and `d1` is never relaxed.
pub fn cone_contains_slack(k: usize, d0: f64, d1: f64, d2: f64, slack: f64) -> bool {
    if k < 2 {
        return false;
    }
    let lower = -d1 / (k as f64 - 1.0);
    d0 > 0.0 && d1 > 0.0 && d2 >= lower - slack && d2 <= d1 + slack
}

/// A `K x K` completely symmetric matrix `(a1 - a2) I + a2 11'`, stored as
/// its diagonal entry `a1` and off-diagonal entry `a2`.
///
/// Eigenvalues are `a1 - a2` (multiplicity `K - 1`) and `a1 + (K-1) a2`
/// (simple, eigenvector `1`), so the matrix is invertible iff both are
/// nonzero, and every derived quantity here is O(1) in `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymPair {
    pub k: usize,
    pub a1: f64,
    pub a2: f64,
}

impl SymPair {
    pub fn new(k: usize, a1: f64, a2: f64) -> Self {
        SymPair { k, a1, a2 }
    }

    /// Eigenvalue on the complement of the all-ones direction.
    pub fn eig_rest(&self) -> f64 {
        self.a1 - self.a2
    }

    /// Eigenvalue along the all-ones direction.
    pub fn eig_ones(&self) -> f64 {
        self.a1 + (self.k as f64 - 1.0) * self.a2
    }

    pub fn determinant(&self) -> f64 {
        self.eig_rest().powi(self.k as i32 - 1) * self.eig_ones()
    }

    pub fn is_invertible_with(&self, guard: f64) -> bool {
        self.eig_rest().abs() > guard && self.eig_ones().abs() > guard
    }

    /// Inverse of the completely symmetric matrix, again completely
    /// symmetric: `A^{-1} = I/(a1-a2) - a2 11' / ((a1-a2)(a1+(K-1)a2))`.
    pub fn inverse(&self) -> Result<SymPair> {
        self.inverse_with_guard(1e-12)
    }

    pub fn inverse_with_guard(&self, guard: f64) -> Result<SymPair> {
        if !self.is_invertible_with(guard) {
            return Err(Error::Singular(format!(
                "completely symmetric pattern (a1 = {}, a2 = {}, K = {}) has a zero eigenvalue",
                self.a1, self.a2, self.k
            )));
        }
        let off = -self.a2 / (self.eig_rest() * self.eig_ones());
        Ok(SymPair::new(self.k, 1.0 / self.eig_rest() + off, off))
    }

    /// Quadratic form `x' A x = (a1 - a2) ||x||^2 + a2 (sum x_i)^2`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let q: f64 = x.iter().map(|v| v * v).sum();
        let s: f64 = x.iter().sum();
        (self.a1 - self.a2) * q + self.a2 * s * s
    }

    /// `tr(A B)` for two completely symmetric matrices of the same size.
    pub fn mul_trace(&self, other: &SymPair) -> f64 {
        let k = self.k as f64;
        k * (self.a1 * other.a1 + (k - 1.0) * self.a2 * other.a2)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.a1
        } else {
            self.a2
        }
    }
}

/// Completely symmetric matrix inversion as a free function.
pub fn sym_inverse(m: &SymPair) -> Result<SymPair> {
    m.inverse()
}

/// Regression vector `f(x) = (1, x_1, ..., x_K)'`.
///
/// Rejects points with any coordinate outside `[-1, 1]`.
pub fn regression_vector(x: &[f64]) -> Result<Vec<f64>> {
    for (i, &v) in x.iter().enumerate() {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!(
                "coordinate {i} = {v} is outside [-1, 1]"
            )));
        }
    }
    let mut f = Vec::with_capacity(x.len() + 1);
    f.push(1.0);
    f.extend_from_slice(x);
    Ok(f)
}

pub(crate) fn check_point(k: usize, x: &[f64]) -> Result<()> {
    if x.len() != k {
        return Err(Error::Domain(format!(
            "point has {} coordinates, expected {k}",
            x.len()
        )));
    }
    for (i, &v) in x.iter().enumerate() {
        if !(-1.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!(
                "coordinate {i} = {v} is outside [-1, 1]"
            )));
        }
    }
    Ok(())
}
