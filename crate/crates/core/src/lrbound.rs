//! Lieb–Robinson bound evaluation: closed-form bounds on equal-time
//! commutators and dynamical truncation errors, plus measured counterparts
//! from exact diagonalization.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{self, FFunction, Lattice, Region};
use crate::linalg;
use crate::model::{self, Interaction, InteractionConstants};
use crate::opspace::{self, Observable};
use crate::spectral::{self, SpectralData};

/// Constants of the tilted F-function F_μ(r) = e^{−μr} F(r).
#[derive(Debug, Clone, Copy)]
pub struct FMuConstants {
    /// ‖F_μ‖
    pub f_mu_norm: f64,
    /// c_{F_μ}
    pub c_f_mu: f64,
    /// ‖Φ‖_{F_μ}
    pub phi_f_mu_norm: f64,
}

/// The (μ, c_μ, v_μ) data of the exponential Lieb–Robinson bound.
#[derive(Debug, Clone, Copy)]
pub struct LRConstants {
    /// Decay rate μ > 0.
    pub mu: f64,
    /// Prefactor c_μ = 2‖F‖ / c_{F_μ}.
    pub c_mu: f64,
    /// Velocity v_μ = 2‖Φ‖_{F_μ} c_{F_μ} / μ.
    pub v_mu: f64,
    pub f_mu_constants: FMuConstants,
}

/// Assembles the exponential-bound constants from exact finite-lattice sums.
pub fn lr_constants(lattice: &Lattice, phi: &Interaction, f: &FFunction, mu: f64) -> Result<LRConstants> {
    if mu <= 0.0 {
        return Err(Error::BadConstants("mu must be positive".into()));
    }
    let f_mu = f.tilted(mu);
    let fmc = geometry::f_constants(&f_mu, lattice);
    let fc = geometry::f_constants(f, lattice);
    let phi_f = model::constants(lattice, phi, f).phi_f_norm;
    let phi_f_mu = model::constants(lattice, phi, &f_mu).phi_f_norm;
    // finite range bounds the tilt: ‖Φ‖_{F_μ} ≤ e^{μ𝔯}‖Φ‖_F
    if phi_f_mu > (mu * phi.range()).exp() * phi_f + 1e-10 {
        return Err(Error::BadConstants(format!(
            "tilted interaction norm {phi_f_mu} exceeds e^(mu*r) * {phi_f}"
        )));
    }
    Ok(LRConstants {
        mu,
        c_mu: 2.0 * fc.f_norm / fmc.c_f,
        v_mu: 2.0 * phi_f_mu * fmc.c_f / mu,
        f_mu_constants: FMuConstants { f_mu_norm: fmc.f_norm, c_f_mu: fmc.c_f, phi_f_mu_norm: phi_f_mu },
    })
}

/// Closed-form right-hand sides of the commutator bounds for unit-norm
/// observables supported in X and in the commutant of 𝒜_Y.
///
/// Returns (power-law bound, exponential bound).
pub fn lr_rhs(
    lattice: &Lattice,
    x: &Region,
    y: &Region,
    t: f64,
    phi: &Interaction,
    f: &FFunction,
    consts: &LRConstants,
) -> Result<(f64, f64)> {
    if !x.is_subset_of(y) {
        return Err(Error::BadGeometry("X must be contained in Y".into()));
    }
    let yc = y.complement(lattice);
    if yc.is_empty() {
        return Ok((0.0, 0.0));
    }
    let fc = geometry::f_constants(f, lattice);
    let phi_f = model::constants(lattice, phi, f).phi_f_norm;
    let pb = phi.phi_boundary(lattice, x);
    let double_sum: f64 = pb
        .iter()
        .map(|a| yc.iter().map(|b| f.eval(lattice.dist(a, b))).sum::<f64>())
        .sum();
    let thm = (2.0 / fc.c_f) * ((2.0 * phi_f * fc.c_f * t.abs()).exp() - 1.0) * double_sum;
    let dist = geometry::distance(lattice, x, &yc)?;
    let cor = consts.c_mu * pb.len() as f64 * (-consts.mu * (dist - consts.v_mu * t.abs())).exp();
    Ok((thm, cor))
}

/// Measures ‖[α^t(A), B]‖ against both closed-form bounds (scaled by
/// ‖A‖‖B‖). The caller declares the region Y whose commutant contains B;
/// the bound requires support(A) ⊆ Y.
#[allow(clippy::too_many_arguments)]
pub fn lr_empirical(
    lattice: &Lattice,
    a: &Observable,
    b: &Observable,
    y: &Region,
    t: f64,
    phi: &Interaction,
    f: &FFunction,
    consts: &LRConstants,
    spec: &SpectralData,
) -> Result<(f64, f64, f64)> {
    let at = spectral::evolve(lattice, a, t, spec)?;
    let (measured, _, _) = opspace::norm_commutator(lattice, &at, b)?;
    let (thm, cor) = lr_rhs(lattice, &a.support, y, t, phi, f, consts)?;
    let scale = a.op_norm() * b.op_norm();
    Ok((measured, thm * scale - measured, cor * scale - measured))
}

/// ‖α^t_{outer}(A) − α^t_{inner}(A)‖ against the finite-range truncation
/// bound. `spec_outer` must diagonalize H_{outer}; the inner dynamics is
/// diagonalized internally on `inner`.
#[allow(clippy::too_many_arguments)]
pub fn truncation_check(
    lattice: &Lattice,
    a: &Observable,
    inner: &Region,
    outer: &Region,
    t: f64,
    phi: &Interaction,
    ic: &InteractionConstants,
    consts: &LRConstants,
    spec_outer: &SpectralData,
) -> Result<(f64, f64)> {
    let x = &a.support;
    if !x.is_subset_of(inner) || !inner.is_subset_of(outer) {
        return Err(Error::BadGeometry("need support(a) within inner within outer".into()));
    }
    if spec_outer.volume != *outer {
        return Err(Error::BadGeometry("spec_outer must diagonalize the outer volume".into()));
    }
    let inner_c = inner.complement(lattice);
    let sep = if inner_c.is_empty() { f64::INFINITY } else { geometry::distance(lattice, &inner_c, x)? };
    if sep <= phi.range() {
        return Err(Error::RangeViolation { separation: sep, range: phi.range() });
    }
    let h_inner = model::local_hamiltonian(lattice, phi, inner)?;
    let spec_inner = spectral::diagonalize_ungapped(lattice, &h_inner)?;
    let at_inner = spectral::evolve(lattice, a, t, &spec_inner)?;
    // difference norm via a Hermitian matvec closure on the outer volume:
    // x ↦ U_o† A U_o x − (α^t_inner(A) ⊗ I) x, never forming α^t_outer(A)
    let dim = spec_outer.dim();
    let a_emb = opspace::embed(lattice, a, outer)?;
    let apply = |v: &ndarray::Array1<Complex64>| {
        let fwd = spec_outer.apply_func(v, |e| Complex64::new((t * e).cos(), -(t * e).sin()));
        let mid = a_emb.matrix.dot(&fwd);
        let back = spec_outer.apply_func(&mid, |e| Complex64::new((t * e).cos(), (t * e).sin()));
        let inner_part = opspace::apply_embedded(lattice, &at_inner, outer, v).expect("support checked");
        back - inner_part
    };
    let measured = if a.is_hermitian() {
        linalg::lanczos_extreme_abs(dim, apply)
    } else {
        let apply_adj = |v: &ndarray::Array1<Complex64>| {
            let conj_v = v.mapv(|z| z.conj());
            apply(&conj_v).mapv(|z| z.conj())
        };
        linalg::op_norm_general_matvec(dim, &apply, &apply_adj)
    };
    let pb_x = phi.phi_boundary(lattice, x);
    let pb_inner = phi.phi_boundary(lattice, inner);
    let rhs = if sep.is_infinite() {
        0.0
    } else {
        (consts.c_mu * ic.j1 / (consts.mu * consts.v_mu))
            * pb_x.len() as f64
            * pb_inner.len() as f64
            * (-consts.mu * (sep - phi.range())).exp()
            * ((consts.mu * consts.v_mu * t.abs()).exp() - 1.0)
    };
    Ok((measured, rhs))
}
