//! The diffusion operator `A`, the skew coupling `(div v, grad p)` and the
//! quadratic term `B[u, z]`, realised on the Galerkin space.
//!
//! `A` is diagonal in the eigenbasis. The skew coupling is a sum of
//! Kronecker products of exact one-dimensional integrals, applied by tensor
//! contraction. The quadratic term is evaluated pointwise on a Gauss grid and
//! projected back by quadrature.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{frac_norm, w_exponent, x_space_exponent, y_exponent};
use crate::grid::QuadGrid;
use crate::quadrature::points_for_wavenumber;
use crate::sampling::random_low_mode_state;
use crate::space::{Space, StateU};
use crate::tensor::{contract_all, Mat};
use crate::trig;

/// Grid rule for the quadratic term.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dealiasing {
    /// Grid fine enough to integrate triple products of retained modes
    /// exactly, so projected products carry no aliasing error.
    ThreeHalves,
    /// Grid with one point per retained mode; products alias.
    Off,
    /// Explicit point counts per axis.
    Points(Vec<usize>),
}

impl Dealiasing {
    pub fn grid_points(&self, cutoff: &[usize]) -> Vec<usize> {
        match self {
            Dealiasing::ThreeHalves => cutoff.iter().map(|&m| points_for_wavenumber(3 * m)).collect(),
            Dealiasing::Off => cutoff.iter().map(|&m| m + 1).collect(),
            Dealiasing::Points(p) => p.clone(),
        }
    }
}

/// Coefficients of the quadratic term
/// `B[u, z] = (alpha q div v + beta w.grad p, gamma q grad p + delta (grad v) w)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl NonlinearCoefficients {
    /// `alpha = lambda`, the others one.
    pub fn from_lambda(lambda: f64) -> Self {
        Self { alpha: lambda, beta: 1.0, gamma: 1.0, delta: 1.0 }
    }

    pub fn zero() -> Self {
        Self { alpha: 0.0, beta: 0.0, gamma: 0.0, delta: 0.0 }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { alpha: s * self.alpha, beta: s * self.beta, gamma: s * self.gamma, delta: s * self.delta }
    }

    pub fn is_zero(&self) -> bool {
        [self.alpha, self.beta, self.gamma, self.delta].iter().all(|&c| c == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        [self.alpha, self.beta, self.gamma, self.delta].iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

impl Default for NonlinearCoefficients {
    fn default() -> Self {
        Self::from_lambda(2.0)
    }
}

/// Values and gradients of the `1 + d` components on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    /// `values[c][point]`
    pub values: Vec<Vec<f64>>,
    /// `grads[c][axis][point]`
    pub grads: Vec<Vec<Vec<f64>>>,
}

impl GridState {
    pub fn zeros(components: usize, dim: usize, points: usize) -> Self {
        Self { values: vec![vec![0.0; points]; components], grads: vec![vec![vec![0.0; points]; dim]; components] }
    }

    pub fn points(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &GridState) {
        let add = |x: &mut Vec<f64>, y: &Vec<f64>| {
            for (p, q) in x.iter_mut().zip(y) {
                *p += a * q;
            }
        };
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            add(x, y);
        }
        for (gx, gy) in self.grads.iter_mut().zip(&other.grads) {
            for (x, y) in gx.iter_mut().zip(gy) {
                add(x, y);
            }
        }
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_grad(&self) -> f64 {
        self.grads.iter().flatten().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Precomputed operators on one state space.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    space: Arc<Space>,
    coeffs: NonlinearCoefficients,
    dealiasing: Dealiasing,
    grid: Arc<QuadGrid>,
    /// `div_blocks[j]`: per-axis 1D matrices mapping `v_j` to the p-basis
    div_blocks: Vec<Vec<Mat>>,
    /// `grad_blocks[j]`: per-axis 1D matrices mapping p to the `v_j`-basis
    grad_blocks: Vec<Vec<Mat>>,
}

impl OperatorSet {
    pub fn new(space: &Arc<Space>, coeffs: NonlinearCoefficients, dealiasing: Dealiasing) -> Result<Self> {
        let dim = space.dim();
        let points = dealiasing.grid_points(space.cutoff());
        if points.len() != dim || points.contains(&0) {
            return Err(Error::Parameter(format!("invalid grid point counts {points:?}")));
        }
        let grid = Arc::new(QuadGrid::new(space.domain(), space.cutoff(), &points)?);
        let pp = space.basis(0).parities().to_vec();
        let block = |row_par: &[trig::Parity], col_par: &[trig::Parity], j: usize| -> Vec<Mat> {
            (0..dim)
                .map(|a| {
                    let n = space.cutoff()[a] + 1;
                    let len = space.domain().extent(a);
                    Mat::from_fn(n, n, |r, c| {
                        if a == j {
                            trig::inner_deriv(row_par[a], r, col_par[a], c, len)
                        } else {
                            trig::inner(row_par[a], r, col_par[a], c, len)
                        }
                    })
                })
                .collect()
        };
        let mut div_blocks = Vec::with_capacity(dim);
        let mut grad_blocks = Vec::with_capacity(dim);
        for j in 0..dim {
            let vp = space.basis(j + 1).parities().to_vec();
            div_blocks.push(block(&pp, &vp, j));
            grad_blocks.push(block(&vp, &pp, j));
        }
        Ok(Self { space: space.clone(), coeffs, dealiasing, grid, div_blocks, grad_blocks })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn coefficients(&self) -> NonlinearCoefficients {
        self.coeffs
    }

    pub fn dealiasing(&self) -> &Dealiasing {
        &self.dealiasing
    }

    pub fn grid(&self) -> &Arc<QuadGrid> {
        &self.grid
    }

    /// Same operators with different quadratic-term coefficients.
    pub fn with_coefficients(&self, coeffs: NonlinearCoefficients) -> Self {
        Self { coeffs, ..self.clone() }
    }

    /// `A u = (-zeta Lap p, -mu Lap v)`.
    pub fn apply_diffusion(&self, u: &StateU) -> StateU {
        let data = u.data().iter().zip(self.space.scaled_eigenvalues()).map(|(c, l)| c * l).collect();
        StateU::from_vec(u.space(), data).expect("same space")
    }

    /// Galerkin projection of `(div v, grad p)`.
    pub fn apply_skew(&self, u: &StateU) -> StateU {
        let sp = &self.space;
        let mut out = StateU::zeros(sp);
        let pb = sp.basis(0);
        let p_tensor = pb.to_tensor(u.component(0));
        let mut div = vec![0.0; p_tensor.len()];
        for j in 0..sp.dim() {
            let vb = sp.basis(j + 1);
            let vt = vb.to_tensor(u.component(j + 1));
            let mats: Vec<&Mat> = self.div_blocks[j].iter().collect();
            let (d, _) = contract_all(&vt, vb.tensor_dims(), &mats);
            for (x, y) in div.iter_mut().zip(&d) {
                *x += y;
            }
            let mats: Vec<&Mat> = self.grad_blocks[j].iter().collect();
            let (g, _) = contract_all(&p_tensor, pb.tensor_dims(), &mats);
            out.component_mut(j + 1).copy_from_slice(&vb.from_tensor(&g));
        }
        out.component_mut(0).copy_from_slice(&pb.from_tensor(&div));
        out
    }

    /// Dense matrix of the skew coupling, assembled entry by entry.
    pub fn assemble_skew(&self) -> Mat {
        let sp = &self.space;
        let n = sp.len();
        let dim = sp.dim();
        let mut s = Mat::zeros(n, n);
        let pb = sp.basis(0);
        for j in 0..dim {
            let vb = sp.basis(j + 1);
            let (pr, vr) = (sp.range(0), sp.range(j + 1));
            for (a, pm) in pb.modes().iter().enumerate() {
                for (b, vm) in vb.modes().iter().enumerate() {
                    let entry = |rows: (&[usize], &[trig::Parity]), cols: (&[usize], &[trig::Parity])| {
                        (0..dim)
                            .map(|ax| {
                                let len = sp.domain().extent(ax);
                                if ax == j {
                                    trig::inner_deriv(rows.1[ax], rows.0[ax], cols.1[ax], cols.0[ax], len)
                                } else {
                                    trig::inner(rows.1[ax], rows.0[ax], cols.1[ax], cols.0[ax], len)
                                }
                            })
                            .product::<f64>()
                    };
                    let pk = (pm.k.as_slice(), pb.parities());
                    let vk = (vm.k.as_slice(), vb.parities());
                    s.data[(pr.start + a) * n + vr.start + b] = entry(pk, vk);
                    s.data[(vr.start + b) * n + pr.start + a] = entry(vk, pk);
                }
            }
        }
        s
    }

    /// Power-iteration estimate of `sup ||S u|| / ||u||`.
    pub fn skew_norm(&self, iterations: usize) -> f64 {
        self.power_iteration(iterations, 0.0)
    }

    /// Power-iteration estimate of `sup ||S u|| / ||A^{1/2} u||`.
    pub fn skew_bound(&self, iterations: usize) -> f64 {
        self.power_iteration(iterations, 0.5)
    }

    fn power_iteration(&self, iterations: usize, s: f64) -> f64 {
        use crate::fractional::apply_power;
        let sp = &self.space;
        let data = (0..sp.len()).map(|i| 1.0 + 0.01 * ((i * 37 % 101) as f64)).collect();
        let mut x = StateU::from_vec(sp, data).expect("length matches");
        let mut est = 0.0;
        for _ in 0..iterations.max(1) {
            let nx = x.norm();
            x = x.scaled(1.0 / nx);
            // B = S A^{-s}; iterate x <- B^T B x with S^T = -S
            let y = self.apply_skew(&apply_power(&x, -s));
            est = y.norm();
            x = apply_power(&self.apply_skew(&y), -s).scaled(-1.0);
        }
        est
    }

    /// Values (and gradients when `gradients`) of every component on the grid.
    pub fn to_grid(&self, u: &StateU, gradients: bool) -> Result<GridState> {
        let sp = &self.space;
        let dim = sp.dim();
        let mut gs = GridState { values: Vec::new(), grads: Vec::new() };
        for c in 0..sp.components() {
            let b = sp.basis(c);
            let coeffs = u.component(c);
            gs.values.push(self.grid.synthesize(b, coeffs, None)?);
            let g = if gradients {
                (0..dim).map(|a| self.grid.synthesize(b, coeffs, Some(a))).collect::<Result<_>>()?
            } else {
                vec![vec![0.0; self.grid.num_points()]; dim]
            };
            gs.grads.push(g);
        }
        Ok(gs)
    }

    /// Project per-component grid samples onto the eigenbases.
    pub fn from_grid(&self, samples: &[Vec<f64>]) -> Result<StateU> {
        let sp = &self.space;
        let mut out = StateU::zeros(sp);
        for c in 0..sp.components() {
            let coef = self.grid.analyze(sp.basis(c), &samples[c])?;
            out.component_mut(c).copy_from_slice(&coef);
        }
        Ok(out)
    }

    /// Pointwise `B[u, z]` accumulated into `acc` with weight `scale`;
    /// `u` supplies gradients, `z` values.
    pub fn accumulate_bilinear(&self, u: &GridState, z: &GridState, scale: f64, acc: &mut [Vec<f64>]) {
        let NonlinearCoefficients { alpha, beta, gamma, delta } = self.coeffs;
        let dim = self.space.dim();
        let n = self.grid.num_points();
        let q = &z.values[0];
        for i in 0..n {
            let div: f64 = (0..dim).map(|j| u.grads[1 + j][j][i]).sum();
            let w_grad_p: f64 = (0..dim).map(|j| z.values[1 + j][i] * u.grads[0][j][i]).sum();
            acc[0][i] += scale * (alpha * q[i] * div + beta * w_grad_p);
            for c in 0..dim {
                let conv: f64 = (0..dim).map(|j| z.values[1 + j][i] * u.grads[1 + c][j][i]).sum();
                acc[1 + c][i] += scale * (gamma * q[i] * u.grads[0][c][i] + delta * conv);
            }
        }
    }

    fn empty_samples(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.grid.num_points()]; self.space.components()]
    }

    /// Projection of `sum_k B[u_k, z_k]` for pairs of grid states.
    pub fn bilinear_sum(&self, pairs: &[(&GridState, &GridState)]) -> Result<StateU> {
        for (u, z) in pairs {
            if u.points() != self.grid.num_points() || z.points() != self.grid.num_points() {
                return Err(Error::SizeMismatch("grid state does not match the operator grid".into()));
            }
        }
        let mut acc = self.empty_samples();
        for (u, z) in pairs {
            self.accumulate_bilinear(u, z, 1.0, &mut acc);
        }
        self.from_grid(&acc)
    }

    /// Galerkin projection of `B[u, z]`.
    pub fn apply_bilinear(&self, u: &StateU, z: &StateU) -> Result<StateU> {
        if self.coeffs.is_zero() {
            return Ok(StateU::zeros(&self.space));
        }
        let ug = self.to_grid(u, true)?;
        let zg = self.to_grid(z, false)?;
        self.bilinear_sum(&[(&ug, &zg)])
    }

    /// `B[c, w] + B[w, c]` for a frozen field `w` given on the grid.
    pub fn apply_frozen(&self, c: &StateU, w: &GridState) -> Result<StateU> {
        if self.coeffs.is_zero() {
            return Ok(StateU::zeros(&self.space));
        }
        let cg = self.to_grid(c, true)?;
        self.bilinear_sum(&[(&cg, w), (w, &cg)])
    }

    /// Crude bound on `||B[c, w] + B[w, c]|| / ||c||` used by the step guard.
    pub fn frozen_norm_estimate(&self, w: &GridState) -> f64 {
        let raw_max = self.space.lambda_max() / self.space.zeta().min(self.space.mu());
        let d = self.space.dim() as f64;
        self.coeffs.max_abs() * 2.0 * d * (w.max_abs_value() * raw_max.sqrt() + w.max_abs_grad())
    }
}

/// Empirical constant of `|<B[u,w], v>| <= C ||u||_{(1+s)/2} ||w||_{s/2} ||v||_{(1-s)/2}`.
///
/// For each random pair the supremum over `v` is attained by the Riesz
/// partner of `B[u,w]`, which turns the left side into a dual norm.
pub fn bilinear_constant_probe(
    ops: &OperatorSet,
    sigma: f64,
    samples: usize,
    max_k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let mut best: f64 = 0.0;
    let sp = ops.space();
    for _ in 0..samples {
        let u = random_low_mode_state(sp, rng, max_k);
        let w = random_low_mode_state(sp, rng, max_k);
        let b = ops.apply_bilinear(&u, &w)?;
        let den = frac_norm(&u, x_space_exponent(sigma)) * frac_norm(&w, w_exponent(sigma));
        if den > 0.0 {
            best = best.max(frac_norm(&b, y_exponent(sigma)) / den);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BoxDomain;
    use crate::quadrature::GaussRule;
    use crate::sampling::{random_state, rng};
    use crate::space::BcFamily;
    use std::f64::consts::PI;

    fn ops(family: BcFamily, dim: usize, m: usize) -> OperatorSet {
        let d = BoxDomain::pi_box(dim).unwrap();
        let sp = Space::new(&d, family, &vec![m; dim], 0.3, 0.7, 1.0).unwrap();
        OperatorSet::new(&sp, NonlinearCoefficients::default(), Dealiasing::ThreeHalves).unwrap()
    }

    #[test]
    fn diffusion_is_a_multiplier() {
        let o = ops(BcFamily::DirDir, 2, 3);
        let u = StateU::unit(o.space(), 0, &[1, 1], 1.0).unwrap();
        let au = o.apply_diffusion(&u);
        assert!((au.data()[0] - 0.6).abs() < 1e-15);
        let r = random_state(o.space(), &mut rng(1));
        let lhs = o.apply_diffusion(&r).dot(&r);
        assert!((lhs - frac_norm(&r, 0.5).powi(2)).abs() < 1e-12 * lhs);
    }

    #[test]
    fn skew_matrix_matches_application_and_is_skew() {
        for (fam, dim) in
            [(BcFamily::DirDir, 2), (BcFamily::NeuDir, 2), (BcFamily::NeuHodge, 3), (BcFamily::DirHodge, 3)]
        {
            let o = ops(fam, dim, 3);
            let s = o.assemble_skew();
            let n = s.rows;
            let mut asym: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    asym = asym.max((s.get(i, j) + s.get(j, i)).abs());
                }
            }
            assert!(asym <= 1e-12, "{fam}: {asym}");
            let u = random_state(o.space(), &mut rng(4));
            let su = o.apply_skew(&u);
            for i in 0..n {
                let dense: f64 = (0..n).map(|j| s.get(i, j) * u.data()[j]).sum();
                assert!((dense - su.data()[i]).abs() < 1e-12, "{fam}");
            }
            assert!(su.dot(&u).abs() <= 1e-12 * u.dot(&u));
        }
    }

    #[test]
    fn gradient_of_pressure_mode_is_projected() {
        // p = phi_(1,1) on the Dirichlet square; v_1 component of grad p is
        // the projection of d/dx phi onto the Dirichlet velocity basis
        let o = ops(BcFamily::DirDir, 2, 4);
        let u = StateU::unit(o.space(), 0, &[1, 1], 1.0).unwrap();
        let su = o.apply_skew(&u);
        assert!(su.component(0).iter().all(|&x| x == 0.0));
        let rule = GaussRule::new(200, PI);
        let vb = o.space().basis(1);
        for (i, m) in vb.modes().iter().enumerate() {
            let fx = rule.integrate(|x| {
                trig::eval(trig::Parity::Sin, 1, PI, x)[1] * trig::eval(trig::Parity::Sin, m.k[0], PI, x)[0]
            });
            let fy = rule.integrate(|y| {
                trig::eval(trig::Parity::Sin, 1, PI, y)[0] * trig::eval(trig::Parity::Sin, m.k[1], PI, y)[0]
            });
            assert!((su.component(1)[i] - fx * fy).abs() < 1e-13);
        }
    }

    #[test]
    fn bilinear_transport_against_closed_form() {
        // u = (sin x sin y, 0), z = (0, (c1, c2)): p-part = beta (c1 cos x sin y + c2 sin x cos y)
        let d = BoxDomain::pi_box(2).unwrap();
        let sp = Space::new(&d, BcFamily::NeuDir, &[4, 4], 1.0, 1.0, 1.0).unwrap();
        let coeffs = NonlinearCoefficients { alpha: 0.0, beta: 1.5, gamma: 0.0, delta: 0.0 };
        let o = OperatorSet::new(&sp, coeffs, Dealiasing::ThreeHalves).unwrap();
        let grid = o.grid().clone();
        let pts = grid.points();
        let (c1, c2) = (0.4, -1.1);
        let ug = GridState {
            values: vec![
                pts.iter().map(|x| x[0].sin() * x[1].sin()).collect(),
                vec![0.0; pts.len()],
                vec![0.0; pts.len()],
            ],
            grads: vec![
                vec![
                    pts.iter().map(|x| x[0].cos() * x[1].sin()).collect(),
                    pts.iter().map(|x| x[0].sin() * x[1].cos()).collect(),
                ],
                vec![vec![0.0; pts.len()]; 2],
                vec![vec![0.0; pts.len()]; 2],
            ],
        };
        let mut zg = GridState::zeros(3, 2, pts.len());
        zg.values[1] = vec![c1; pts.len()];
        zg.values[2] = vec![c2; pts.len()];
        let b = o.bilinear_sum(&[(&ug, &zg)]).unwrap();
        let fine = GaussRule::new(120, PI);
        let pb = sp.basis(0);
        for (i, m) in pb.modes().iter().enumerate() {
            let nx = |k, f: &dyn Fn(f64) -> f64| fine.integrate(|x| f(x) * trig::eval(trig::Parity::Cos, k, PI, x)[0]);
            let expect = 1.5
                * (c1 * nx(m.k[0], &|x: f64| x.cos()) * nx(m.k[1], &|y: f64| y.sin())
                    + c2 * nx(m.k[0], &|x: f64| x.sin()) * nx(m.k[1], &|y: f64| y.cos()));
            assert!((b.component(0)[i] - expect).abs() < 1e-12, "mode {:?}", m.k);
        }
    }

    #[test]
    fn bilinear_is_bilinear_and_dealiasing_matters() {
        let o = ops(BcFamily::DirDir, 2, 4);
        let sp = o.space().clone();
        let mut r = rng(9);
        let (u, w, z) = (random_state(&sp, &mut r), random_state(&sp, &mut r), random_state(&sp, &mut r));
        let lhs = o.apply_bilinear(&(&u + &w.scaled(2.0)), &z).unwrap();
        let mut rhs = o.apply_bilinear(&u, &z).unwrap();
        rhs.axpy(2.0, &o.apply_bilinear(&w, &z).unwrap());
        assert!((&lhs - &rhs).max_abs() < 1e-12);
        assert_eq!(o.apply_bilinear(&u, &StateU::zeros(&sp)).unwrap().max_abs(), 0.0);

        let aliased = OperatorSet::new(&sp, o.coefficients(), Dealiasing::Off).unwrap();
        let diff = (&o.apply_bilinear(&u, &z).unwrap() - &aliased.apply_bilinear(&u, &z).unwrap()).max_abs();
        assert!(diff > 1e-3);
    }

    #[test]
    fn skew_bound_is_finite() {
        let o = ops(BcFamily::DirDir, 2, 6);
        let c = o.skew_bound(50);
        let n = o.skew_norm(50);
        assert!(c.is_finite() && c > 0.0);
        assert!(n >= c * o.space().lambda_min().sqrt() * 0.99);
    }
}
