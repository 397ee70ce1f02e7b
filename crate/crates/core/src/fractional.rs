//! Fractional powers of the diffusion operator and the solution, forcing and
//! initial-data norms built from them.
//!
//! Everything is spectral: `A^s` multiplies each coefficient by
//! `(c lambda_k)^s` with `c = zeta` on the pressure and `c = mu` on the
//! velocity, and negative powers realise the dual spaces.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sampling::random_state;
use crate::space::{Space, SpectralField, StateU, Trajectory};

/// Multiply every coefficient of `u` by `(diffusion_coeff * lambda_k)^s`.
pub fn apply_frac_power(u: &SpectralField, s: f64, diffusion_coeff: f64) -> Result<SpectralField> {
    if u.coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Parameter("non-finite coefficients".into()));
    }
    let coeffs = u.coeffs.iter().zip(u.basis.eigenvalues()).map(|(&c, l)| c * (diffusion_coeff * l).powf(s)).collect();
    SpectralField::new(u.basis.clone(), coeffs)
}

/// `A^s u` for a full state.
pub fn apply_power(u: &StateU, s: f64) -> StateU {
    if s == 0.0 {
        return u.clone();
    }
    let data = u.data().iter().zip(u.space().scaled_eigenvalues()).map(|(&c, &l)| c * l.powf(s)).collect();
    StateU::from_vec(u.space(), data).expect("same space")
}

/// `||A^s u||_H`; negative `s` gives the dual norm.
pub fn frac_norm(u: &StateU, s: f64) -> f64 {
    frac_norm_sq(u, s).sqrt()
}

pub fn frac_norm_sq(u: &StateU, s: f64) -> f64 {
    if s == 0.0 {
        return u.dot(u);
    }
    u.data().iter().zip(u.space().scaled_eigenvalues()).map(|(&c, &l)| c * c * l.powf(2.0 * s)).sum()
}

/// Exponent of the spatial part of the solution norm, `(1 + sigma) / 2`.
pub fn x_space_exponent(sigma: f64) -> f64 {
    0.5 * (1.0 + sigma)
}

/// Exponent of the forcing (dual) norm, `-(1 - sigma) / 2`.
pub fn y_exponent(sigma: f64) -> f64 {
    -0.5 * (1.0 - sigma)
}

/// Exponent of the initial-data norm, `sigma / 2`.
pub fn w_exponent(sigma: f64) -> f64 {
    0.5 * sigma
}

/// The two squared parts of the solution norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XNormParts {
    /// `int ||A^{(1+sigma)/2} u||^2 dt`
    pub spatial: f64,
    /// `int ||A^{-(1-sigma)/2} du/dt||^2 dt`
    pub temporal: f64,
}

impl XNormParts {
    pub fn total(&self) -> f64 {
        (self.spatial + self.temporal).sqrt()
    }
}

pub fn x_norm_parts(traj: &Trajectory) -> Result<XNormParts> {
    let sigma = traj.space().sigma();
    let derivs = traj.time_derivatives()?;
    x_norm_parts_with(traj, &derivs, sigma)
}

/// Solution-norm parts using explicitly supplied derivatives.
pub fn x_norm_parts_with(traj: &Trajectory, derivs: &[StateU], sigma: f64) -> Result<XNormParts> {
    if derivs.len() != traj.len() {
        return Err(Error::Trajectory("derivative count differs from state count".into()));
    }
    let (sx, sy) = (x_space_exponent(sigma), y_exponent(sigma));
    let mut spatial = 0.0;
    let mut temporal = 0.0;
    for ((u, du), w) in traj.states().iter().zip(derivs).zip(traj.weights()) {
        spatial += w * frac_norm_sq(u, sx);
        temporal += w * frac_norm_sq(du, sy);
    }
    Ok(XNormParts { spatial, temporal })
}

/// Solution norm `||u||_X`.
pub fn x_norm(traj: &Trajectory) -> Result<f64> {
    Ok(x_norm_parts(traj)?.total())
}

/// Forcing norm `||f||_Y` (time quadrature of the dual norm).
pub fn y_norm(forcing: &Trajectory) -> f64 {
    y_norm_sigma(forcing, forcing.space().sigma())
}

pub fn y_norm_sigma(forcing: &Trajectory, sigma: f64) -> f64 {
    let s = y_exponent(sigma);
    forcing.states().iter().zip(forcing.weights()).map(|(f, w)| w * frac_norm_sq(f, s)).sum::<f64>().sqrt()
}

/// Initial-data norm `||g||_W = ||A^{sigma/2} g||`.
pub fn w_norm(g: &StateU) -> f64 {
    frac_norm(g, w_exponent(g.space().sigma()))
}

/// The Riesz partner of `u` for the `s`-pairing: `w = A^{2s} u`, for which
/// `<u, w> = ||u||_s ||w||_{-s}`.
pub fn riesz_partner(u: &StateU, s: f64) -> StateU {
    apply_power(u, 2.0 * s)
}

/// Sharp constant of `||u||_t <= c ||u||_s` on the discrete space.
pub fn embedding_constant(space: &Space, s: f64, t: f64) -> f64 {
    if s == t {
        return 1.0;
    }
    space.scaled_eigenvalues().iter().map(|&l| l.powf(t - s)).fold(0.0, f64::max)
}

/// Largest ratio `||u||_t / ||u||_s` over random fields.
pub fn embedding_constant_probe(
    space: &Arc<Space>,
    s: f64,
    t: f64,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    if !(s >= t && t >= 0.0) {
        return Err(Error::Parameter(format!("embedding needs s >= t >= 0, got s={s}, t={t}")));
    }
    if s == t {
        return Ok(1.0);
    }
    let mut best: f64 = 0.0;
    for _ in 0..samples {
        let u = random_state(space, rng);
        let den = frac_norm(&u, s);
        if den > 0.0 {
            best = best.max(frac_norm(&u, t) / den);
        }
    }
    Ok(best)
}
