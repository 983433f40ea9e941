//! Truncated power ("P-spline") basis: `t^(l-1)` for `l = 1..=q+1` followed by
//! `(t - κ_k)_+^q` for each knot.

use alloc::vec;
use alloc::vec::Vec;

use crate::phase_data::TimeGrid;
use crate::{Error, Result};

/// Hard cap on the number of basis functions.
pub const MAX_BASIS: usize = 30;
/// Above this many basis functions the truncated power basis is badly
/// conditioned; callers should warn.
pub const WARN_BASIS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplineConfig {
    degree: u32,
    knots: Vec<f64>,
    domain: (f64, f64),
    /// Clamp out-of-domain `t` to the boundary instead of failing.
    clamp: bool,
}

impl SplineConfig {
    pub fn new(degree: u32, knots: Vec<f64>, domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidKnots("domain must be a finite interval with lo < hi"));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidKnots("knots must be strictly increasing"));
        }
        if knots.iter().any(|&k| !(k > lo && k < hi)) {
            return Err(Error::InvalidKnots("knots must lie strictly inside the domain"));
        }
        let n_basis = degree as usize + knots.len() + 1;
        if n_basis > MAX_BASIS {
            return Err(Error::TooManyBasisFunctions(n_basis));
        }
        Ok(Self {
            degree,
            knots,
            domain,
            clamp: false,
        })
    }

    /// `n_knots` knots spread evenly inside the domain:
    /// `κ_k = lo + k (hi - lo) / (K + 1)`.
    pub fn equally_spaced(degree: u32, n_knots: usize, domain: (f64, f64)) -> Result<Self> {
        let (lo, hi) = domain;
        let step = (hi - lo) / (n_knots + 1) as f64;
        let knots = (1..=n_knots).map(|k| lo + k as f64 * step).collect();
        Self::new(degree, knots, domain)
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    /// `L = q + K + 1`.
    pub fn n_basis(&self) -> usize {
        self.degree as usize + self.knots.len() + 1
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.n_basis() > WARN_BASIS
    }

    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n_basis()];
        self.evaluate_into(t, &mut out)?;
        Ok(out)
    }

    pub fn evaluate_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let (lo, hi) = self.domain;
        let t = if t >= lo && t <= hi {
            t
        } else if self.clamp && !t.is_nan() {
            t.clamp(lo, hi)
        } else {
            return Err(Error::DomainError { t, lo, hi });
        };
        let q = self.degree as i32;
        // powi(0) is 1 even at t = 0, so the first column is the constant.
        for (l, slot) in out.iter_mut().take(q as usize + 1).enumerate() {
            *slot = libm::pow(t, l as f64);
        }
        for (slot, &knot) in out[q as usize + 1..].iter_mut().zip(&self.knots) {
            let x = t - knot;
            *slot = if x > 0.0 { libm::pow(x, q as f64) } else { 0.0 };
        }
        Ok(())
    }

    pub fn evaluate_grid(&self, grid: &TimeGrid) -> Result<BasisMatrix> {
        let l_count = self.n_basis();
        let t_count = grid.len();
        let mut columns = vec![0.0; l_count * t_count];
        for (j, &t) in grid.points().iter().enumerate() {
            self.evaluate_into(t, &mut columns[j * l_count..(j + 1) * l_count])?;
        }
        let mut rows = vec![0.0; l_count * t_count];
        for j in 0..t_count {
            for l in 0..l_count {
                rows[l * t_count + j] = columns[j * l_count + l];
            }
        }
        Ok(BasisMatrix {
            rows,
            columns,
            n_basis: l_count,
            n_times: t_count,
            config: self.clone(),
            grid: grid.clone(),
        })
    }
}

/// JSON-facing basis description: either `{degree, n_knots}` or an explicit
/// knot list.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BasisSpec {
    pub degree: u32,
    pub n_knots: usize,
    pub knots: Option<Vec<f64>>,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self {
            degree: 3,
            n_knots: 10,
            knots: None,
        }
    }
}

impl BasisSpec {
    pub fn n_basis(&self) -> usize {
        let knots = self.knots.as_ref().map_or(self.n_knots, Vec::len);
        self.degree as usize + 1 + knots
    }

    pub fn to_config(&self, domain: (f64, f64)) -> Result<SplineConfig> {
        match &self.knots {
            Some(knots) => SplineConfig::new(self.degree, knots.clone(), domain),
            None => SplineConfig::equally_spaced(self.degree, self.n_knots, domain),
        }
    }

    pub fn build(&self, grid: &TimeGrid) -> Result<BasisMatrix> {
        self.to_config(grid.domain())?.evaluate_grid(grid)
    }
}

/// `B[l][j] = B_l(t_j)` with a column-major copy for per-time access.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    rows: Vec<f64>,
    columns: Vec<f64>,
    n_basis: usize,
    n_times: usize,
    config: SplineConfig,
    grid: TimeGrid,
}

impl BasisMatrix {
    pub fn n_basis(&self) -> usize {
        self.n_basis
    }

    pub fn n_times(&self) -> usize {
        self.n_times
    }

    pub fn config(&self) -> &SplineConfig {
        &self.config
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn get(&self, l: usize, j: usize) -> f64 {
        self.rows[l * self.n_times + j]
    }

    /// `B_l(t_j)` for all `j`.
    pub fn row(&self, l: usize) -> &[f64] {
        &self.rows[l * self.n_times..(l + 1) * self.n_times]
    }

    /// The basis vector `B_j` at time index `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n_basis..(j + 1) * self.n_basis]
    }

    /// `out[j] = Σ_l coef[l] B_l(t_j)`.
    pub fn combine(&self, coef: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coef.len(), self.n_basis);
        for (j, slot) in out.iter_mut().enumerate().take(self.n_times) {
            *slot = self.column(j).iter().zip(coef).map(|(b, c)| b * c).sum();
        }
    }

    /// `out[l] = Σ_j B_l(t_j) y[j]`.
    pub fn project(&self, y: &[f64], out: &mut [f64]) {
        for (l, slot) in out.iter_mut().enumerate().take(self.n_basis) {
            *slot = self.row(l).iter().zip(y).map(|(b, v)| b * v).sum();
        }
    }

    /// Gram matrix `Σ_j B_j B_jᵀ`, row-major `L × L`.
    pub fn gram(&self) -> Vec<f64> {
        let l_count = self.n_basis;
        let mut g = vec![0.0; l_count * l_count];
        for a in 0..l_count {
            for b in 0..=a {
                let v: f64 = self.row(a).iter().zip(self.row(b)).map(|(x, y)| x * y).sum();
                g[a * l_count + b] = v;
                g[b * l_count + a] = v;
            }
        }
        g
    }
}
