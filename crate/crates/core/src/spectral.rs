//! Exact diagonalization, Heisenberg time evolution, Gaussian spectral
//! filtering, the heat-kernel projector, and spectral-window projections.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Lattice, Region};
use crate::linalg;
use crate::opspace::{embed, Observable, StateVector};

/// Hard cap on the volume Hilbert-space dimension for full diagonalization.
pub const DIM_CAP: usize = 1 << 13;

pub const DEFAULT_GAP_TOL: f64 = 1e-8;

/// Full eigendecomposition of a volume Hamiltonian, energies shifted so the
/// ground energy is 0 (the finite-volume gauge with HΩ = 0).
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub volume: Region,
    /// Ascending, shifted energies; energies[0] == 0.
    pub energies: Vec<f64>,
    /// Column m is the m-th eigenvector (phase-fixed).
    pub eigvecs: Array2<Complex64>,
    pub ground: StateVector,
    pub gap: f64,
    /// Raw ground energy before the shift.
    pub e0: f64,
}

pub fn diagonalize(lattice: &Lattice, h: &Observable, gap_tol: f64) -> Result<SpectralData> {
    let dim = h.dim();
    if dim > DIM_CAP {
        return Err(Error::DimensionCap { dim, cap: DIM_CAP });
    }
    let dev = linalg::hermiticity_deviation(&h.matrix);
    let scale = h.matrix.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
    if dev > 1e-10 * (1.0 + scale) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let (w, mut v) = linalg::eigh(h.matrix.clone())?;
    let gap = if dim > 1 { w[1] - w[0] } else { f64::INFINITY };
    if gap <= gap_tol {
        return Err(Error::NotGapped { gap, tol: gap_tol });
    }
    // Deterministic eigenvector phases: largest-magnitude component real positive.
    for m in 0..dim {
        let mut best = 0usize;
        let mut mag = -1.0f64;
        for i in 0..dim {
            let a = v[[i, m]].norm();
            if a > mag {
                mag = a;
                best = i;
            }
        }
        let z = v[[best, m]];
        if mag > 0.0 {
            let phase = z / mag;
            for i in 0..dim {
                let t = v[[i, m]] * phase.conj();
                v[[i, m]] = t;
            }
        }
    }
    // Residual check ‖Hv_m − E_m v_m‖ ≤ 1e−9 ‖H‖ for every m.
    let hv = h.matrix.dot(&v);
    let hnorm = w.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    for m in 0..dim {
        let mut r2 = 0.0f64;
        for i in 0..dim {
            r2 += (hv[[i, m]] - w[m] * v[[i, m]]).norm_sqr();
        }
        if r2.sqrt() > 1e-9 * hnorm {
            return Err(Error::EigSolver(-1));
        }
    }
    let e0 = w[0];
    let energies: Vec<f64> = w.iter().map(|x| x - e0).collect();
    let ground = StateVector::new(h.support.clone(), v.column(0).to_owned(), lattice)?;
    Ok(SpectralData { volume: h.support.clone(), energies, eigvecs: v, ground, gap, e0 })
}

/// Diagonalization for purely dynamical use (no spectral-gap requirement);
/// the "ground" entry is still the lowest eigenvector but carries no
/// uniqueness guarantee.
pub fn diagonalize_ungapped(lattice: &Lattice, h: &Observable) -> Result<SpectralData> {
    diagonalize(lattice, h, f64::NEG_INFINITY)
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// f(H) x computed as V (f(E) ∘ V†x); two dense matvecs.
    pub fn apply_func(&self, x: &Array1<Complex64>, f: impl Fn(f64) -> Complex64) -> Array1<Complex64> {
        let y = self.eigvecs.t().dot(&x.mapv(|z| z.conj())).mapv(|z| z.conj()); // V†x
        let scaled = Array1::from_iter(y.iter().zip(self.energies.iter()).map(|(z, &e)| z * f(e)));
        self.eigvecs.dot(&scaled)
    }

    /// (H − E₀) x in the shifted gauge.
    pub fn apply_hprime(&self, x: &Array1<Complex64>) -> Array1<Complex64> {
        self.apply_func(x, |e| Complex64::new(e, 0.0))
    }

    /// V† A V.
    pub fn to_eigenbasis(&self, a: &Array2<Complex64>) -> Array2<Complex64> {
        let vdag = self.eigvecs.t().mapv(|z| z.conj());
        vdag.dot(&a.dot(&self.eigvecs))
    }

    /// V B V†.
    pub fn from_eigenbasis(&self, b: &Array2<Complex64>) -> Array2<Complex64> {
        let vdag = self.eigvecs.t().mapv(|z| z.conj());
        self.eigvecs.dot(&b.dot(&vdag))
    }

    /// Dense f(H) = V diag(f(E)) V†.
    pub fn func_of_h(&self, f: impl Fn(f64) -> Complex64) -> Array2<Complex64> {
        let dim = self.dim();
        let mut scaled = self.eigvecs.clone();
        for m in 0..dim {
            let fm = f(self.energies[m]);
            for i in 0..dim {
                scaled[[i, m]] *= fm;
            }
        }
        let vdag = self.eigvecs.t().mapv(|z| z.conj());
        scaled.dot(&vdag)
    }
}

/// Heisenberg evolution e^{itH} A e^{−itH} through the eigenbasis.
pub fn evolve(lattice: &Lattice, a: &Observable, t: f64, spec: &SpectralData) -> Result<Observable> {
    let ae = embed(lattice, a, &spec.volume)?;
    let mut b = spec.to_eigenbasis(&ae.matrix);
    let dim = spec.dim();
    for m in 0..dim {
        for n in 0..dim {
            let phase = t * (spec.energies[m] - spec.energies[n]);
            b[[m, n]] *= Complex64::new(phase.cos(), phase.sin());
        }
    }
    let out = spec.from_eigenbasis(&b);
    Ok(Observable::from_parts(spec.volume.clone(), out, ae.is_hermitian()))
}

/// Gaussian filter (A)_α: eigenbasis matrix elements damped by
/// e^{−(E_m−E_n)²/(4α)} — the closed form of the f_α-weighted time average.
pub fn gaussian_filter(lattice: &Lattice, a: &Observable, alpha: f64, spec: &SpectralData) -> Result<Observable> {
    assert!(alpha > 0.0);
    let ae = embed(lattice, a, &spec.volume)?;
    let mut b = spec.to_eigenbasis(&ae.matrix);
    let dim = spec.dim();
    for m in 0..dim {
        for n in 0..dim {
            let de = spec.energies[m] - spec.energies[n];
            b[[m, n]] *= (-de * de / (4.0 * alpha)).exp();
        }
    }
    let out = spec.from_eigenbasis(&b);
    Ok(Observable::from_parts(spec.volume.clone(), out, ae.is_hermitian()))
}

/// (A)_α Ω without dense work: in the eigenbasis the ground column is damped
/// by e^{−E_m²/4α}. Returns the (non-normalized) vector.
pub fn filtered_on_ground(lattice: &Lattice, a: &Observable, alpha: f64, spec: &SpectralData) -> Result<Array1<Complex64>> {
    let aomega = crate::opspace::apply_embedded(lattice, a, &spec.volume, &spec.ground.amplitudes)?;
    let y = spec.eigvecs.t().dot(&aomega.mapv(|z| z.conj())).mapv(|z| z.conj());
    let damped = Array1::from_iter(
        y.iter().zip(spec.energies.iter()).map(|(z, &e)| z * (-e * e / (4.0 * alpha)).exp()),
    );
    Ok(spec.eigvecs.dot(&damped))
}

/// 𝒫 = e^{−H²/4α} (the f_α time average of e^{itH}) and its defect
/// ‖𝒫 − P₀‖, which at finite dimension equals e^{−γ²/4α} exactly.
pub fn heat_projector(spec: &SpectralData, alpha: f64) -> (Observable, f64) {
    assert!(alpha > 0.0);
    let p = spec.func_of_h(|e| Complex64::new((-e * e / (4.0 * alpha)).exp(), 0.0));
    let defect = spec.energies.iter().skip(1).map(|&e| (-e * e / (4.0 * alpha)).exp()).fold(0.0f64, f64::max);
    let closed = (-spec.gap * spec.gap / (4.0 * alpha)).exp();
    debug_assert!(spec.dim() < 2 || (defect - closed).abs() <= 1e-10);
    let obs = Observable::from_parts(spec.volume.clone(), p, true);
    (obs, defect)
}

/// Spectral projection of a self-adjoint M onto the closed window [−a, a].
/// Returns the projection and the number of boundary ties |λ−a| ≤ 1e−12
/// (included, closed interval).
pub fn window_projection_with_ties(m: &Observable, a: f64) -> Result<(Observable, usize)> {
    assert!(a >= 0.0);
    let dev = linalg::hermiticity_deviation(&m.matrix);
    if dev > 1e-10 {
        return Err(Error::NotHermitian { deviation: dev });
    }
    let (w, v) = linalg::eigh(m.matrix.clone())?;
    let dim = w.len();
    let mut ties = 0usize;
    let selected: Vec<usize> = (0..dim)
        .filter(|&k| {
            if (w[k].abs() - a).abs() <= 1e-12 {
                ties += 1;
            }
            w[k].abs() <= a + 1e-12
        })
        .collect();
    let mut p = Array2::<Complex64>::zeros((dim, dim));
    for &k in &selected {
        for i in 0..dim {
            for j in 0..dim {
                p[[i, j]] += v[[i, k]] * v[[j, k]].conj();
            }
        }
    }
    let obs = Observable::from_parts(m.support.clone(), p, true);
    Ok((obs, ties))
}

pub fn window_projection(m: &Observable, a: f64) -> Result<Observable> {
    window_projection_with_ties(m, a).map(|(p, _)| p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opspace::sample;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn diag_h(lattice: &Lattice, values: &[f64]) -> Observable {
        let mut m = Array2::<Complex64>::zeros((values.len(), values.len()));
        for (i, &x) in values.iter().enumerate() {
            m[[i, i]] = c(x, 0.0);
        }
        Observable::new(lattice.full_region(), m, lattice).unwrap()
    }

    #[test]
    fn diagonalize_basics() {
        let lat = Lattice::chain(1, 3);
        let h = diag_h(&lat, &[0.0, 1.0, 3.0]);
        let spec = diagonalize(&lat, &h, DEFAULT_GAP_TOL).unwrap();
        assert_eq!(spec.energies, vec![0.0, 1.0, 3.0]);
        assert_abs_diff_eq!(spec.gap, 1.0, epsilon = 1e-14);
        // degenerate ground state is refused
        let h2 = diag_h(&lat, &[0.0, 0.0, 1.0]);
        assert!(matches!(diagonalize(&lat, &h2, DEFAULT_GAP_TOL), Err(Error::NotGapped { .. })));
    }

    #[test]
    fn evolve_group_law_and_fixed_points() {
        let lat = Lattice::chain(3, 2);
        let mut rng = sample::rng(2);
        let h = Observable::new(lat.full_region(), sample::hermitian(8, &mut rng), &lat).unwrap();
        let spec = diagonalize(&lat, &h, 1e-12).unwrap();
        let a = Observable::new(Region::new(vec![1]), sample::hermitian(2, &mut rng), &lat).unwrap();
        // t = 0 is the identity map
        let a0 = evolve(&lat, &a, 0.0, &spec).unwrap();
        let ae = embed(&lat, &a, &lat.full_region()).unwrap();
        let dev = (&a0.matrix - &ae.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-10);
        // H is conserved
        let ht = evolve(&lat, &h, 0.7, &spec).unwrap();
        let dev = (&ht.matrix - &h.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-9);
        // group law
        let s1 = evolve(&lat, &evolve(&lat, &a, 0.3, &spec).unwrap(), 0.5, &spec).unwrap();
        let s2 = evolve(&lat, &a, 0.8, &spec).unwrap();
        let dev = (&s1.matrix - &s2.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-10);
        // norm preservation
        assert_abs_diff_eq!(s2.op_norm(), a.op_norm(), epsilon = 1e-9);
    }

    #[test]
    fn gaussian_filter_properties() {
        let lat = Lattice::chain(3, 2);
        let mut rng = sample::rng(4);
        let h = Observable::new(lat.full_region(), sample::hermitian(8, &mut rng), &lat).unwrap();
        let spec = diagonalize(&lat, &h, 1e-12).unwrap();
        // commuting observable is fixed
        let hf = gaussian_filter(&lat, &h, 0.7, &spec).unwrap();
        let dev = (&hf.matrix - &h.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-9);
        // α → ∞ recovers A
        let a = Observable::new(lat.full_region(), sample::hermitian(8, &mut rng), &lat).unwrap();
        let af = gaussian_filter(&lat, &a, 1e8, &spec).unwrap();
        let dev = (&af.matrix - &a.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-6);
        // contraction in operator norm
        let af = gaussian_filter(&lat, &a, 0.3, &spec).unwrap();
        assert!(af.op_norm() <= a.op_norm() + 1e-10);
        // rank-1 off-diagonal scalar formula, and the ground-column shortcut
        let alpha = 0.9;
        let af = gaussian_filter(&lat, &a, alpha, &spec).unwrap();
        let b = spec.to_eigenbasis(&embed(&lat, &a, &lat.full_region()).unwrap().matrix);
        let bf = spec.to_eigenbasis(&af.matrix);
        let g = spec.energies[1];
        assert_abs_diff_eq!(
            bf[[1, 0]].norm(),
            b[[1, 0]].norm() * (-g * g / (4.0 * alpha)).exp(),
            epsilon = 1e-10
        );
        let v = filtered_on_ground(&lat, &a, alpha, &spec).unwrap();
        let dense = af.matrix.dot(&spec.ground.amplitudes);
        let dev = (&v - &dense).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-10);
    }

    #[test]
    fn heat_projector_defect() {
        let lat = Lattice::chain(1, 3);
        let h = diag_h(&lat, &[0.0, 1.0, 3.0]);
        let spec = diagonalize(&lat, &h, DEFAULT_GAP_TOL).unwrap();
        let (p, defect) = heat_projector(&spec, 1.0);
        assert_abs_diff_eq!(defect, (-0.25f64).exp(), epsilon = 1e-12);
        // defect equals the true operator distance to P₀
        let mut p0 = Array2::<Complex64>::zeros((3, 3));
        for i in 0..3 {
            for j in 0..3 {
                p0[[i, j]] = spec.ground.amplitudes[i] * spec.ground.amplitudes[j].conj();
            }
        }
        let diff = &p.matrix - &p0;
        assert_abs_diff_eq!(linalg::op_norm_hermitian(&diff), defect, epsilon = 1e-10);
        // α → 0 kills the defect
        let (_, d0) = heat_projector(&spec, 1e-6);
        assert!(d0 < 1e-10);
    }

    #[test]
    fn window_projection_properties() {
        let lat = Lattice::chain(1, 3);
        let m = diag_h(&lat, &[0.1, -0.05, 2.0]);
        let p = window_projection(&m, 0.5).unwrap();
        let expect = diag_h(&lat, &[1.0, 1.0, 0.0]);
        let dev = (&p.matrix - &expect.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-12);
        // a ≥ ‖M‖ gives the identity
        let p = window_projection(&m, 5.0).unwrap();
        let eye = Array2::<Complex64>::eye(3);
        let dev = (&p.matrix - &eye).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-12);
        // Chebyshev direction on random vectors: ‖Mφ‖² ≥ a²‖(P−I)φ‖²
        let lat2 = Lattice::chain(3, 2);
        let mut rng = sample::rng(9);
        let m = Observable::new(lat2.full_region(), sample::hermitian(8, &mut rng), &lat2).unwrap();
        let a = 0.4;
        let p = window_projection(&m, a).unwrap();
        for _ in 0..50 {
            let phi = sample::state(8, &mut rng);
            let mphi = m.matrix.dot(&phi);
            let pres = p.matrix.dot(&phi) - &phi;
            let lhs: f64 = mphi.iter().map(|z| z.norm_sqr()).sum();
            let rhs: f64 = pres.iter().map(|z| z.norm_sqr()).sum();
            assert!(lhs + 1e-12 >= a * a * rhs);
        }
        // idempotent and self-adjoint
        let p2 = p.matrix.dot(&p.matrix);
        let dev = (&p2 - &p.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-10);
        assert!(linalg::hermiticity_deviation(&p.matrix) <= 1e-12);
    }

    #[test]
    fn tail_integral_identity() {
        // ∫_c^∞ t f_α(t) dt = f_α(c)/(2α), f_α(t) = √(α/π) e^{−αt²}
        for &alpha in &[0.1, 1.0, 10.0] {
            for &cc in &[0.0, 0.5, 2.0] {
                let f = |t: f64| (alpha / std::f64::consts::PI).sqrt() * (-alpha * t * t).exp();
                // Simpson on [c, c+40/√α]
                let hi = cc + 40.0 / alpha.sqrt();
                let n = 200_000;
                let h = (hi - cc) / n as f64;
                let mut s = cc * f(cc) + hi * f(hi);
                for k in 1..n {
                    let t = cc + k as f64 * h;
                    s += t * f(t) * if k % 2 == 1 { 4.0 } else { 2.0 };
                }
                let integral = s * h / 3.0;
                assert_abs_diff_eq!(integral, f(cc) / (2.0 * alpha), epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn gauss_hermite_matches_heat_kernel() {
        // Σ_k w_k e^{i t_k H} ≈ e^{−H²/4α} with t_k = x_k/√α, w normalized
        let lat = Lattice::chain(2, 2);
        let mut rng = sample::rng(13);
        let mut hm = sample::hermitian(4, &mut rng);
        // scale spectrum into [0, 10]
        let n0 = linalg::op_norm_hermitian(&hm);
        hm.mapv_inplace(|z| z * 4.0 / n0);
        for i in 0..4 {
            hm[[i, i]] += c(5.0, 0.0);
        }
        let h = Observable::new(lat.full_region(), hm, &lat).unwrap();
        let spec = diagonalize(&lat, &h, 1e-12).unwrap();
        // node count must grow with (spectral width)/√α: the integrand
        // oscillates with phase E/√α under the Gauss–Hermite weight
        for &(alpha, nodes) in &[(1.0f64, 64usize), (0.5, 64), (0.1, 512)] {
            let (x, w) = linalg::gauss_hermite(nodes);
            let mut acc = Array2::<Complex64>::zeros((4, 4));
            let sqrt_pi = std::f64::consts::PI.sqrt();
            for (xk, wk) in x.iter().zip(w.iter()) {
                let t = xk / alpha.sqrt();
                // raw energies: use e0 + shifted
                let u = spec.func_of_h(|e| {
                    let ph = t * (e + spec.e0);
                    Complex64::new(ph.cos(), ph.sin())
                });
                acc += &u.mapv(|z| z * (wk / sqrt_pi));
            }
            let target = spec.func_of_h(|e| {
                let raw = e + spec.e0;
                Complex64::new((-raw * raw / (4.0 * alpha)).exp(), 0.0)
            });
            let dev = (&acc - &target).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            assert!(dev <= 1e-8, "quadrature deviation {dev} at alpha={alpha}");
        }
    }
}
