//! Tensor Gauss-Legendre collocation grids and the transforms between mode
//! coefficients and grid samples.
//!
//! Synthesis evaluates an expansion (or one of its partial derivatives) at the
//! grid points; analysis projects samples back onto a basis by quadrature,
//! which is the exact L2 projection whenever the integrand is resolved.

use crate::basis::{Basis, BoxDomain};
use crate::error::{Error, Result};
use crate::quadrature::GaussRule;
use crate::tensor::{contract_all, Mat};
use crate::trig::{self, Parity};

#[derive(Debug, Clone)]
struct AxisTables {
    rule: GaussRule,
    /// `[parity][0 = value, 1 = derivative]`, shape points x (m+1)
    synth: [[Mat; 2]; 2],
    /// `[parity]`, shape (m+1) x points, quadrature weights folded in
    analysis: [Mat; 2],
}

fn parity_slot(p: Parity) -> usize {
    match p {
        Parity::Sin => 0,
        Parity::Cos => 1,
    }
}

#[derive(Debug, Clone)]
pub struct QuadGrid {
    domain: BoxDomain,
    cutoff: Vec<usize>,
    axes: Vec<AxisTables>,
    dims: Vec<usize>,
}

impl QuadGrid {
    /// Grid with `points[a]` Gauss nodes along axis `a`, able to transform
    /// bases with per-axis cutoffs `cutoff`.
    pub fn new(domain: &BoxDomain, cutoff: &[usize], points: &[usize]) -> Result<Self> {
        let dim = domain.dim();
        if cutoff.len() != dim || points.len() != dim {
            return Err(Error::SizeMismatch(format!(
                "grid needs {dim} cutoffs and point counts, got {} and {}",
                cutoff.len(),
                points.len()
            )));
        }
        let axes = (0..dim)
            .map(|a| {
                let len = domain.extent(a);
                let rule = GaussRule::new(points[a], len);
                let m = cutoff[a] + 1;
                let n = rule.len();
                let table = |p: Parity, d: usize| Mat::from_fn(n, m, |q, k| trig::eval(p, k, len, rule.nodes[q])[d]);
                let ana =
                    |p: Parity| Mat::from_fn(m, n, |k, q| rule.weights[q] * trig::eval(p, k, len, rule.nodes[q])[0]);
                AxisTables {
                    synth: [
                        [table(Parity::Sin, 0), table(Parity::Sin, 1)],
                        [table(Parity::Cos, 0), table(Parity::Cos, 1)],
                    ],
                    analysis: [ana(Parity::Sin), ana(Parity::Cos)],
                    rule,
                }
            })
            .collect();
        Ok(Self { domain: domain.clone(), cutoff: cutoff.to_vec(), axes, dims: points.to_vec() })
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn cutoff(&self) -> &[usize] {
        &self.cutoff
    }

    /// Points per axis.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_points(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn nodes(&self, axis: usize) -> &[f64] {
        &self.axes[axis].rule.nodes
    }

    /// Coordinates of every grid point in row-major order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let dim = self.dims.len();
        let mut out = Vec::with_capacity(self.num_points());
        let mut idx = vec![0usize; dim];
        for flat in 0..self.num_points() {
            let mut rem = flat;
            for a in (0..dim).rev() {
                idx[a] = rem % self.dims[a];
                rem /= self.dims[a];
            }
            out.push((0..dim).map(|a| self.axes[a].rule.nodes[idx[a]]).collect());
        }
        out
    }

    /// Tensor quadrature weights in row-major order.
    pub fn weights(&self) -> Vec<f64> {
        let mut w = vec![1.0];
        for ax in &self.axes {
            w = w.iter().flat_map(|&a| ax.rule.weights.iter().map(move |&b| a * b)).collect();
        }
        w
    }

    /// Quadrature of grid samples over the box.
    pub fn integrate(&self, samples: &[f64]) -> f64 {
        self.weights().iter().zip(samples).map(|(w, s)| w * s).sum()
    }

    fn check(&self, basis: &Basis) -> Result<()> {
        if basis.cutoff() != self.cutoff.as_slice() || basis.domain() != &self.domain {
            return Err(Error::SizeMismatch(format!(
                "basis cutoff {:?} does not match grid cutoff {:?}",
                basis.cutoff(),
                self.cutoff
            )));
        }
        Ok(())
    }

    /// Samples of the expansion, or of its derivative along `deriv_axis`.
    pub fn synthesize(&self, basis: &Basis, coeffs: &[f64], deriv_axis: Option<usize>) -> Result<Vec<f64>> {
        self.check(basis)?;
        let mats: Vec<&Mat> = basis
            .parities()
            .iter()
            .enumerate()
            .map(|(a, &p)| {
                let d = usize::from(deriv_axis == Some(a));
                &self.axes[a].synth[parity_slot(p)][d]
            })
            .collect();
        Ok(contract_all(&basis.to_tensor(coeffs), basis.tensor_dims(), &mats).0)
    }

    /// Quadrature projection of grid samples onto `basis`.
    pub fn analyze(&self, basis: &Basis, samples: &[f64]) -> Result<Vec<f64>> {
        self.check(basis)?;
        if samples.len() != self.num_points() {
            return Err(Error::SizeMismatch(format!("expected {} samples, got {}", self.num_points(), samples.len())));
        }
        let mats: Vec<&Mat> =
            basis.parities().iter().enumerate().map(|(a, &p)| &self.axes[a].analysis[parity_slot(p)]).collect();
        Ok(basis.from_tensor(&contract_all(samples, &self.dims, &mats).0))
    }
}

/// Grid samples of the expansion (inverse transform).
pub fn inverse_transform(grid: &QuadGrid, basis: &Basis, coeffs: &[f64]) -> Result<Vec<f64>> {
    grid.synthesize(basis, coeffs, None)
}

/// Mode coefficients from grid samples (forward transform).
pub fn forward_transform(grid: &QuadGrid, basis: &Basis, samples: &[f64]) -> Result<Vec<f64>> {
    grid.analyze(basis, samples)
}
