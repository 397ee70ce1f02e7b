//! Box domains and the trigonometric eigenbases of the scaled Laplacians.
//!
//! Each basis is a tensor product of one-dimensional sine or cosine families.
//! Modes are stored in a flat list sorted by eigenvalue, and each mode also
//! knows its slot in the dense `(m_1+1) x ... x (m_d+1)` coefficient tensor,
//! which is what the transforms and the skew coupling operate on.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::flat_index;
use crate::trig::{self, Parity};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    extents: Vec<f64>,
}

impl BoxDomain {
    pub fn new(extents: Vec<f64>) -> Result<Self> {
        let dim = extents.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::Domain(format!("dimension must be 2 or 3, got {dim}")));
        }
        if let Some(bad) = extents.iter().find(|&&l| !(l.is_finite() && l > 0.0)) {
            return Err(Error::Domain(format!("extent {bad} is not a positive number")));
        }
        Ok(Self { extents })
    }

    /// The cube `[0, pi]^dim`.
    pub fn pi_box(dim: usize) -> Result<Self> {
        Self::new(vec![PI; dim])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        const SLACK: f64 = 1e-12;
        x.len() == self.dim()
            && x.iter().zip(&self.extents).all(|(&xi, &l)| xi >= -SLACK * l && xi <= l * (1.0 + SLACK))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisKind {
    DirichletScalar,
    /// Zero-mean Neumann functions; the constant mode is excluded.
    NeumannScalar,
    DirichletVectorComponent,
    /// Free-slip component along the given (zero-based) axis: sine in that
    /// axis, cosine in the others.
    FreeSlipVectorComponent(usize),
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisKind::DirichletScalar => write!(f, "DirichletScalar"),
            BasisKind::NeumannScalar => write!(f, "NeumannScalar"),
            BasisKind::DirichletVectorComponent => write!(f, "DirichletVectorComponent"),
            BasisKind::FreeSlipVectorComponent(a) => write!(f, "FreeSlipVectorComponent({a})"),
        }
    }
}

impl BasisKind {
    pub fn parity(&self, axis: usize) -> Parity {
        match *self {
            BasisKind::DirichletScalar | BasisKind::DirichletVectorComponent => Parity::Sin,
            BasisKind::NeumannScalar => Parity::Cos,
            BasisKind::FreeSlipVectorComponent(a) if a == axis => Parity::Sin,
            BasisKind::FreeSlipVectorComponent(_) => Parity::Cos,
        }
    }

    pub fn parities(&self, dim: usize) -> Vec<Parity> {
        (0..dim).map(|a| self.parity(a)).collect()
    }

    fn admits(&self, k: &[usize]) -> bool {
        let dim = k.len();
        let per_axis = (0..dim).all(|a| self.parity(a) == Parity::Cos || k[a] >= 1);
        per_axis && k.iter().any(|&ki| ki > 0)
    }
}

/// One retained eigenfunction: multi-index, kind and unscaled Laplacian eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpec {
    pub k: Vec<usize>,
    pub kind: BasisKind,
    pub eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct Basis {
    domain: BoxDomain,
    kind: BasisKind,
    cutoff: Vec<usize>,
    parities: Vec<Parity>,
    modes: Vec<ModeSpec>,
    norms: Vec<f64>,
    slots: Vec<usize>,
    tensor_dims: Vec<usize>,
}

pub fn eigenvalue(domain: &BoxDomain, k: &[usize]) -> f64 {
    k.iter().zip(domain.extents()).map(|(&ki, &l)| (ki as f64 * PI / l).powi(2)).sum()
}

/// Build the eigenbasis of `kind` on `domain` with modes `k_i <= cutoff[i]`.
pub fn build_basis(domain: &BoxDomain, kind: BasisKind, cutoff: &[usize]) -> Result<Basis> {
    let dim = domain.dim();
    if cutoff.len() != dim {
        return Err(Error::Cutoff(format!("expected {dim} per-axis cutoffs, got {}", cutoff.len())));
    }
    if cutoff.iter().any(|&m| m < 1) {
        return Err(Error::Cutoff(format!("every cutoff must be >= 1, got {cutoff:?}")));
    }
    if let BasisKind::FreeSlipVectorComponent(axis) = kind {
        if dim != 3 {
            return Err(Error::KindNeedsDim3 { kind: kind.to_string(), dim });
        }
        if axis >= dim {
            return Err(Error::Parameter(format!("free-slip axis {axis} out of range")));
        }
    }
    let tensor_dims: Vec<usize> = cutoff.iter().map(|&m| m + 1).collect();
    let total: usize = tensor_dims.iter().product();
    let mut modes = Vec::new();
    let mut idx = vec![0usize; dim];
    for flat in 0..total {
        let mut rem = flat;
        for a in (0..dim).rev() {
            idx[a] = rem % tensor_dims[a];
            rem /= tensor_dims[a];
        }
        if kind.admits(&idx) {
            modes.push(ModeSpec { k: idx.clone(), kind, eigenvalue: eigenvalue(domain, &idx) });
        }
    }
    // ascending eigenvalue, lexicographic tie-break; the key is quantised so
    // that equal eigenvalues reached through different sums compare equal
    modes.sort_by_key(|m| ((m.eigenvalue * 1e8).round() as i64, m.k.clone()));
    let parities = kind.parities(dim);
    let norms = modes
        .iter()
        .map(|m| {
            m.k.iter().zip(&parities).zip(domain.extents()).map(|((&k, &p), &l)| trig::norm_const(p, k, l)).product()
        })
        .collect();
    let slots = modes.iter().map(|m| flat_index(&m.k, &tensor_dims)).collect();
    Ok(Basis { domain: domain.clone(), kind, cutoff: cutoff.to_vec(), parities, modes, norms, slots, tensor_dims })
}

impl Basis {
    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn cutoff(&self) -> &[usize] {
        &self.cutoff
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parities
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn norm_consts(&self) -> &[f64] {
        &self.norms
    }

    pub fn eigenvalues(&self) -> impl Iterator<Item = f64> + '_ {
        self.modes.iter().map(|m| m.eigenvalue)
    }

    pub fn tensor_dims(&self) -> &[usize] {
        &self.tensor_dims
    }

    /// Position of a multi-index in the mode list.
    pub fn position(&self, k: &[usize]) -> Option<usize> {
        self.modes.iter().position(|m| m.k == k)
    }

    /// Scatter mode coefficients into the dense tensor.
    pub fn to_tensor(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut t = vec![0.0; self.tensor_dims.iter().product()];
        for (&s, &c) in self.slots.iter().zip(coeffs) {
            t[s] = c;
        }
        t
    }

    /// Gather mode coefficients from a dense tensor with this basis' shape.
    pub fn from_tensor(&self, t: &[f64]) -> Vec<f64> {
        self.slots.iter().map(|&s| t[s]).collect()
    }

    /// Normalised eigenfunction value at `x`.
    pub fn eval_mode(&self, index: usize, x: &[f64]) -> Result<f64> {
        eval_mode(&self.domain, &self.modes[index], x)
    }

    /// Sum of the expansion at `x`.
    pub fn eval(&self, coeffs: &[f64], x: &[f64]) -> Result<f64> {
        let mut s = 0.0;
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                s += c * self.eval_mode(i, x)?;
            }
        }
        Ok(s)
    }
}

/// Value of the normalised trigonometric product for `mode` at `x`.
pub fn eval_mode(domain: &BoxDomain, mode: &ModeSpec, x: &[f64]) -> Result<f64> {
    if !domain.contains(x) {
        return Err(Error::OutsideDomain(x.to_vec()));
    }
    Ok(mode.k.iter().enumerate().map(|(a, &k)| trig::eval(mode.kind.parity(a), k, domain.extent(a), x[a])[0]).product())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigs(b: &Basis) -> Vec<f64> {
        b.eigenvalues().collect()
    }

    #[test]
    fn dirichlet_square_cutoff_two() {
        let d = BoxDomain::pi_box(2).unwrap();
        let b = build_basis(&d, BasisKind::DirichletScalar, &[2, 2]).unwrap();
        assert_eq!(eigs(&b), vec![2.0, 5.0, 5.0, 8.0]);
        assert_eq!(b.modes()[1].k, vec![1, 2]);
        assert_eq!(b.modes()[2].k, vec![2, 1]);
    }

    #[test]
    fn neumann_excludes_constant() {
        let d = BoxDomain::pi_box(2).unwrap();
        let b = build_basis(&d, BasisKind::NeumannScalar, &[1, 1]).unwrap();
        let ks: Vec<_> = b.modes().iter().map(|m| m.k.clone()).collect();
        assert_eq!(ks, vec![vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(eigs(&b), vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn free_slip_component_modes() {
        let d = BoxDomain::pi_box(3).unwrap();
        let b = build_basis(&d, BasisKind::FreeSlipVectorComponent(0), &[1, 1, 1]).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.modes().iter().all(|m| m.k[0] == 1));
        assert_eq!(b.modes()[0].k, vec![1, 0, 0]);
        assert_eq!(b.modes()[0].eigenvalue, 1.0);
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let d2 = BoxDomain::pi_box(2).unwrap();
        assert!(matches!(
            build_basis(&d2, BasisKind::FreeSlipVectorComponent(0), &[2, 2]),
            Err(Error::KindNeedsDim3 { .. })
        ));
        assert!(matches!(build_basis(&d2, BasisKind::DirichletScalar, &[0, 2]), Err(Error::Cutoff(_))));
        assert!(BoxDomain::new(vec![1.0]).is_err());
        assert!(BoxDomain::new(vec![1.0, -2.0]).is_err());
    }

    #[test]
    fn mode_values() {
        let d = BoxDomain::pi_box(2).unwrap();
        let dir = build_basis(&d, BasisKind::DirichletScalar, &[1, 1]).unwrap();
        let v = dir.eval_mode(0, &[PI / 2.0, PI / 2.0]).unwrap();
        assert!((v - 2.0 / PI).abs() < 1e-15);
        assert!(dir.eval_mode(0, &[0.0, 1.3]).unwrap().abs() < 1e-15);
        assert!(dir.eval_mode(0, &[-0.5, 1.0]).is_err());

        let neu = build_basis(&d, BasisKind::NeumannScalar, &[1, 1]).unwrap();
        let i = neu.position(&[1, 0]).unwrap();
        let v = neu.eval_mode(i, &[0.0, 0.7]).unwrap();
        assert!((v - 2f64.sqrt() / PI).abs() < 1e-15);
    }
}
