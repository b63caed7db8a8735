//! Entanglement machinery: Schmidt spectra, von Neumann and relative
//! entropy, the cubic fidelity p_X, the boundary-law entropy bound with its
//! q-distribution apparatus, the entropy division inequality, cylinder
//! window searches, and area-law sweeps.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Lattice, Region};
use crate::hastings;
use crate::linalg;
use crate::opspace::{self, Observable, StateVector};
use crate::spectral::SpectralData;

const EIG_FLOOR: f64 = 1e-14;

fn cc(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Nonincreasing probability weights of a Schmidt decomposition.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SchmidtSpectrum {
    lambdas: Vec<f64>,
}

impl SchmidtSpectrum {
    pub fn new(mut lambdas: Vec<f64>) -> Result<Self> {
        for l in lambdas.iter_mut() {
            if *l < 0.0 && *l > -1e-12 {
                *l = 0.0;
            }
            if *l < 0.0 || !l.is_finite() {
                return Err(Error::ConfigInvalid(format!("invalid Schmidt weight {l}")));
            }
        }
        lambdas.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        let total: f64 = lambdas.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::ConfigInvalid(format!("Schmidt weights sum to {total}, not 1")));
        }
        Ok(SchmidtSpectrum { lambdas })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.lambdas.iter().filter(|&&l| l > tol).count()
    }

    /// Σλ³.
    pub fn fidelity(&self) -> f64 {
        self.lambdas.iter().map(|l| l * l * l).sum()
    }
}

/// Schmidt weights of the pure state across the cut X | volume∖X.
pub fn schmidt(lattice: &Lattice, omega: &StateVector, x: &Region) -> Result<SchmidtSpectrum> {
    let rho = reduced_density(lattice, omega, x)?;
    let (w, _) = linalg::eigh(rho)?;
    SchmidtSpectrum::new(w)
}

/// Reduced density matrix of the pure state on `region`.
pub fn reduced_density(lattice: &Lattice, omega: &StateVector, region: &Region) -> Result<Array2<Complex64>> {
    if region.is_empty() || !region.is_subset_of(&omega.volume) || region.len() == omega.volume.len() {
        return Err(Error::DegenerateCut);
    }
    let m = cut_matrix(lattice, omega, region);
    let mc = m.mapv(|z| z.conj());
    Ok(m.dot(&mc.t()))
}

/// Amplitudes reshaped into a (d_region × d_rest) matrix along the cut.
fn cut_matrix(lattice: &Lattice, omega: &StateVector, region: &Region) -> Array2<Complex64> {
    let bp = opspace::bipartition_unchecked(lattice, region, &omega.volume);
    let (d1, d2) = (bp.dim_cut, bp.dim_rest);
    let mut m = Array2::<Complex64>::zeros((d1, d2));
    for i in 0..d1 {
        for j in 0..d2 {
            m[[i, j]] = omega.amplitudes[bp.perm[i * d2 + j]];
        }
    }
    m
}

/// Von Neumann entropy in nats with 0·log 0 = 0.
pub fn entropy(spectrum: &SchmidtSpectrum) -> f64 {
    spectrum.lambdas.iter().filter(|&&l| l > 0.0).map(|&l| -l * l.ln()).sum()
}

/// Entropy of a density matrix in nats.
pub fn density_entropy(rho: &Array2<Complex64>) -> Result<f64> {
    let (w, _) = linalg::eigh(rho.clone())?;
    Ok(w.iter().filter(|&&l| l > EIG_FLOOR).map(|&l| -l * l.ln()).sum())
}

/// Relative entropy S(A‖B) = Tr A(log A − log B) in nats. Returns +∞ when
/// the support of A is not contained in the support of B.
pub fn relative_entropy(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Result<f64> {
    let (wa, _va) = linalg::eigh(a.clone())?;
    let (wb, vb) = linalg::eigh(b.clone())?;
    let n = wa.len();
    if wb.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: wb.len() });
    }
    // support check: mass of A inside the kernel of B
    let mut kernel_mass = 0.0f64;
    for j in 0..n {
        if wb[j] < 1e-12 {
            let col = vb.column(j);
            let av = a.dot(&col.mapv(|z| z));
            let q: Complex64 = col.iter().zip(av.iter()).map(|(u, v)| u.conj() * v).sum();
            kernel_mass += q.re.max(0.0);
        }
    }
    if kernel_mass > 1e-10 {
        return Ok(f64::INFINITY);
    }
    let tr_a_log_a: f64 = wa.iter().filter(|&&l| l > EIG_FLOOR).map(|&l| l * l.ln()).sum();
    let mut tr_a_log_b = 0.0f64;
    for j in 0..n {
        let col = vb.column(j);
        let av = a.dot(&col.mapv(|z| z));
        let q: Complex64 = col.iter().zip(av.iter()).map(|(u, v)| u.conj() * v).sum();
        tr_a_log_b += q.re * wb[j].max(EIG_FLOOR).ln();
    }
    Ok((tr_a_log_a - tr_a_log_b).max(0.0))
}

/// p_X = Σλ³ by two routes: the spectrum and the operator expectation
/// ⟨Ω, ρ_X ρ'_X Ω⟩ with ρ'_X rebuilt from the Schmidt vectors.
pub fn fidelity(lattice: &Lattice, omega: &StateVector, x: &Region) -> Result<(f64, f64)> {
    if x.is_empty() || !x.is_subset_of(&omega.volume) || x.len() == omega.volume.len() {
        return Err(Error::DegenerateCut);
    }
    let m = cut_matrix(lattice, omega, x);
    let mc = m.mapv(|z| z.conj());
    let rho_x = m.dot(&mc.t());
    let (w, u) = linalg::eigh(rho_x.clone())?;
    let spectrum = SchmidtSpectrum::new(w.clone())?;
    let p_x = spectrum.fidelity();
    // Schmidt partners on the complement: Υ_i = M† u_i / √λ_i
    let d2 = m.ncols();
    let mut rho_rest = Array2::<Complex64>::zeros((d2, d2));
    for (i, &l) in w.iter().enumerate() {
        if l <= EIG_FLOOR {
            continue;
        }
        let ui = u.column(i).to_owned();
        // the complement Schmidt partner carries a conjugation
        let ups = mc.t().dot(&ui).mapv(|z| (z / cc(l.sqrt())).conj());
        for a in 0..d2 {
            for b in 0..d2 {
                rho_rest[[a, b]] += cc(l) * ups[a] * ups[b].conj();
            }
        }
    }
    // cross = Σ_{iji'j'} conj(M[i,j]) ρ_X[i,i'] ρ_rest[j,j'] M[i',j']
    let t1 = rho_x.dot(&m); // (d1 × d2)
    let t2 = t1.dot(&rho_rest.t()); // applies ρ_rest on the second slot
    let cross: Complex64 = m.iter().zip(t2.iter()).map(|(mm, tt)| mm.conj() * tt).sum();
    Ok((p_x, cross.re))
}

/// Single-cut report used by sweeps and the CLI.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EntropyReport {
    pub region: Region,
    pub s: f64,
    pub p_x: f64,
    pub schmidt: SchmidtSpectrum,
    pub bound_rhs: Option<f64>,
}

/// Verdict container for the sigma construction checks.
#[derive(Debug, Clone)]
pub struct SigmaReport {
    /// ⟨Ω, σΩ⟩ for the normalized σ.
    pub overlap: f64,
    /// Tr σ̃ before normalization.
    pub trace: f64,
    /// Measured ‖O − P₀‖.
    pub epsilon: f64,
    pub p_x: f64,
    /// Σ_{k ≤ d_boundary} λ_k.
    pub rank_rhs: f64,
    /// 2ε/p_X.
    pub defect_rhs: f64,
}

impl SigmaReport {
    pub fn rank_margin(&self) -> f64 {
        self.rank_rhs + 1e-9 - self.overlap
    }

    pub fn defect_margin(&self) -> f64 {
        self.defect_rhs + 1e-9 - (1.0 - self.overlap)
    }

    pub fn pass(&self) -> bool {
        self.rank_margin() >= 0.0 && self.defect_margin() >= 0.0
    }
}

/// Checks the normalized σ = O ρ_X ρ'_X O* / Tr(·) against the Schmidt-tail
/// and defect inequalities. `o` must act on the full volume (the pipeline
/// product O_B O_L O_R); `d_boundary` is the dimension of the boundary
/// algebra limiting the Schmidt rank of the conjugated vectors.
pub fn sigma_check(
    lattice: &Lattice,
    omega: &StateVector,
    x: &Region,
    o: &Observable,
    d_boundary: usize,
) -> Result<SigmaReport> {
    let vol = &omega.volume;
    if o.support != *vol {
        return Err(Error::SupportNotContained { support: o.support.sites().to_vec() });
    }
    let m = cut_matrix(lattice, omega, x);
    let mc = m.mapv(|z| z.conj());
    let rho_x = m.dot(&mc.t());
    let (w, u) = linalg::eigh(rho_x)?;
    let spectrum = SchmidtSpectrum::new(w.clone())?;
    let p_x = spectrum.fidelity();
    let d1 = m.nrows();
    let d2 = m.ncols();
    let kept: Vec<usize> = (0..d1).filter(|&i| w[i] > EIG_FLOOR).collect();
    // product basis W*(Ψ_i ⊗ Υ_j) of the Schmidt frame
    let mut ups = Array2::<Complex64>::zeros((d2, kept.len()));
    for (c, &i) in kept.iter().enumerate() {
        let ui = u.column(i).to_owned();
        // the complement Schmidt partner carries a conjugation
        let col = mc.t().dot(&ui).mapv(|z| (z / cc(w[i].sqrt())).conj());
        for a in 0..d2 {
            ups[[a, c]] = col[a];
        }
    }
    let bp = opspace::bipartition_unchecked(lattice, x, vol);
    let dim = bp.dim_cut * bp.dim_rest;
    let ncols = kept.len() * kept.len();
    let mut p = Array2::<Complex64>::zeros((dim, ncols));
    let mut weights = Vec::with_capacity(ncols);
    for (ci, &i) in kept.iter().enumerate() {
        for cj in 0..kept.len() {
            let col = ci * kept.len() + cj;
            weights.push(w[i] * w[kept[cj]]);
            for a in 0..d1 {
                let f = u[[a, i]];
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for b in 0..d2 {
                    p[[bp.perm[a * d2 + b], col]] = f * ups[[b, cj]];
                }
            }
        }
    }
    let t = o.matrix.dot(&p);
    let gs = &omega.amplitudes;
    let mut trace = 0.0f64;
    let mut overlap_raw = 0.0f64;
    for c in 0..ncols {
        let col = t.column(c);
        let nrm: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        trace += weights[c] * nrm;
        let ip: Complex64 = gs.iter().zip(col.iter()).map(|(g, v)| g.conj() * v).sum();
        overlap_raw += weights[c] * ip.norm_sqr();
    }
    if trace < 1e-14 {
        return Err(Error::ZeroTrace);
    }
    let overlap = overlap_raw / trace;
    let om = &o.matrix;
    let epsilon = linalg::op_norm_general_matvec(
        dim,
        &|v: &Array1<Complex64>| {
            let ip: Complex64 = gs.iter().zip(v.iter()).map(|(g, z)| g.conj() * z).sum();
            om.dot(v) - gs.mapv(|z| z * ip)
        },
        &|v: &Array1<Complex64>| {
            let ip: Complex64 = gs.iter().zip(v.iter()).map(|(g, z)| g.conj() * z).sum();
            om.t().dot(&v.mapv(|z| z.conj())).mapv(|z| z.conj()) - gs.mapv(|z| z * ip)
        },
    );
    let rank_rhs: f64 = spectrum.lambdas().iter().take(d_boundary).sum();
    Ok(SigmaReport { overlap, trace, epsilon, p_x, rank_rhs, defect_rhs: 2.0 * epsilon / p_x })
}

/// The coarse-grained reference distribution from the boundary-law proof:
/// a uniform plateau up to the first scale D(m₀) and geometric tail blocks.
#[derive(Debug, Clone)]
pub struct QDistribution {
    pub m0: u32,
    pub n0: u32,
    pub c1: f64,
    pub c2: f64,
    pub kappa: f64,
    pub nu: f64,
    pub d_inf: f64,
    pub boundary_size: f64,
    pub p_x: f64,
    /// Finite-volume cap on the scale dimensions D(ℓ).
    pub cap: Option<f64>,
    /// ln D(m₀ + n₀ m) for the first scales, uncapped (may be +∞-like huge).
    pub ln_d_scales: Vec<f64>,
}

impl QDistribution {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        boundary_size: usize,
        p_x: f64,
        c1: f64,
        c2: f64,
        kappa: f64,
        nu: f64,
        d_inf: f64,
        cap: Option<usize>,
    ) -> Result<Self> {
        if !(c1 > 1.0) {
            return Err(Error::BadConstants(format!("need C1 > 1, got {c1}")));
        }
        if !(c2 > 0.0) {
            return Err(Error::BadConstants(format!("need C2 > 0, got {c2}")));
        }
        if !(p_x > 0.0 && p_x <= 1.0) {
            return Err(Error::BadConstants(format!("need p_X in (0,1], got {p_x}")));
        }
        if !(kappa > 0.0) || !(nu >= 1.0) || !(d_inf >= 2.0) {
            return Err(Error::BadConstants("need kappa > 0, nu >= 1, d_inf >= 2".into()));
        }
        if boundary_size == 0 {
            return Err(Error::BadConstants("boundary size must be positive".into()));
        }
        let b = boundary_size as f64;
        // smallest m with 2 ε(m) / p < 1 for ε(ℓ) = C1 B e^{-C2 ℓ}
        let mut m0 = 1u32;
        while 2.0 * c1 * b * (-c2 * f64::from(m0)).exp() / p_x >= 1.0 {
            m0 += 1;
            if m0 > 100_000_000 {
                return Err(Error::BadConstants("first scale index does not stabilize".into()));
            }
        }
        let n0 = 1u32; // minimal stride with e^{-C2 n0} < 1 since C2 > 0
        let scales = 64usize;
        let ln_d_inf = d_inf.ln();
        let ln_d_scales: Vec<f64> = (0..scales)
            .map(|m| kappa * b * (3.0 * f64::from(m0 + n0 * m as u32)).powf(nu) * ln_d_inf)
            .collect();
        Ok(QDistribution {
            m0,
            n0,
            c1,
            c2,
            kappa,
            nu,
            d_inf,
            boundary_size: b,
            p_x,
            cap: cap.map(|c| c as f64),
            ln_d_scales,
        })
    }

    fn epsilon(&self, ell: f64) -> f64 {
        self.c1 * self.boundary_size * (-self.c2 * ell).exp()
    }

    /// D(m₀ + n₀ m), clipped at the finite-volume cap when one is set.
    pub fn d_scale(&self, m: usize) -> f64 {
        let d = self.ln_d_scales[m.min(self.ln_d_scales.len() - 1)].exp();
        match self.cap {
            Some(c) => d.min(c),
            None => d,
        }
    }

    /// Probability mass of the plateau: 1 − 2ε(m₀)/p.
    pub fn plateau_mass(&self) -> f64 {
        1.0 - 2.0 * self.epsilon(f64::from(self.m0)) / self.p_x
    }

    /// Probability mass of tail block m: (2/p)(ε(m₀+n₀m) − ε(m₀+n₀(m+1))).
    pub fn block_mass(&self, m: usize) -> f64 {
        let l0 = f64::from(self.m0) + f64::from(self.n0) * m as f64;
        let l1 = l0 + f64::from(self.n0);
        2.0 / self.p_x * (self.epsilon(l0) - self.epsilon(l1))
    }

    /// Mass left beyond the first `blocks` tail blocks: (2/p)ε(m₀+n₀·blocks).
    pub fn remainder_mass(&self, blocks: usize) -> f64 {
        2.0 / self.p_x * self.epsilon(f64::from(self.m0) + f64::from(self.n0) * blocks as f64)
    }

    /// ln q(j) for 1-based index j, or None when j falls outside the support
    /// (only possible when the finite-volume cap truncates the tail blocks).
    pub fn ln_q(&self, j: usize) -> Option<f64> {
        let jf = j as f64;
        if jf <= self.d_scale(0) {
            let mass = self.plateau_mass();
            if mass <= 0.0 {
                return None;
            }
            return Some(mass.ln() - self.d_scale(0).ln());
        }
        for m in 0..self.ln_d_scales.len() - 1 {
            let lo = self.d_scale(m);
            let hi = self.d_scale(m + 1);
            if jf > lo && jf <= hi {
                let mass = self.block_mass(m);
                if mass <= 0.0 || hi <= lo {
                    return None;
                }
                return Some(mass.ln() - (hi - lo).ln());
            }
        }
        None
    }
}

/// Σ −λ_j ln q(j) for the constructed q; dominates the entropy by the Gibbs
/// inequality, which is also asserted here.
pub fn q_bound(spectrum: &SchmidtSpectrum, params: &QDistribution) -> Result<f64> {
    let mut total = 0.0f64;
    for (idx, &l) in spectrum.lambdas().iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        match params.ln_q(idx + 1) {
            Some(lq) => total += -l * lq,
            None => return Err(Error::SupportMismatch { index: idx + 1 }),
        }
    }
    let s = entropy(spectrum);
    assert!(s <= total + 1e-10, "Gibbs inequality violated: {s} > {total}");
    Ok(total)
}

/// Σ −λ_j ln q_j for an explicit reference distribution (fuzzing helper).
pub fn cross_entropy(spectrum: &SchmidtSpectrum, q: &[f64]) -> Result<f64> {
    let mut total = 0.0f64;
    for (idx, &l) in spectrum.lambdas().iter().enumerate() {
        if l <= 0.0 {
            continue;
        }
        let qq = q.get(idx).copied().unwrap_or(0.0);
        if qq <= 0.0 {
            return Err(Error::SupportMismatch { index: idx + 1 });
        }
        total += -l * qq.ln();
    }
    Ok(total)
}

/// The boundary-law bound C₃B(ln B)^ν + C₄B(ln 1/p)^ν with the constants
/// assembled step by step from the underlying proof; astronomically loose by
/// design, only its validity matters. The first factor uses max(ln B, 1) so
/// the additive constant terms of the assembly stay dominated when B is
/// small.
pub fn entropy_bound(
    boundary_size: usize,
    p_x: f64,
    c2: f64,
    kappa: f64,
    nu: f64,
    d_inf: f64,
    c1: f64,
) -> Result<f64> {
    if !(c1 > 1.0) || !(c2 > 0.0) {
        return Err(Error::BadConstants(format!("need C1 > 1 and C2 > 0, got C1={c1}, C2={c2}")));
    }
    if !(p_x > 0.0 && p_x <= 1.0) {
        return Err(Error::BadConstants(format!("need p_X in (0,1], got {p_x}")));
    }
    if !(kappa > 0.0) || !(nu >= 1.0) || !(d_inf >= 2.0) || boundary_size == 0 {
        return Err(Error::BadConstants("need kappa > 0, nu >= 1, d_inf >= 2, boundary > 0".into()));
    }
    let b = boundary_size as f64;
    let ln_d = d_inf.ln();
    let n0 = 1.0f64;
    let r = (-c2 * n0).exp();
    // geometric sums over the tail blocks
    let sum_r = 1.0 / (1.0 - r);
    let mut sum_m_nu_r = 0.0f64; // Σ m^ν r^m
    let mut sum_m_r = 0.0f64; // Σ m r^m
    let mut term;
    let mut m = 1usize;
    loop {
        let rm = r.powi(m as i32);
        term = (m as f64).powf(nu) * rm;
        sum_m_nu_r += term;
        sum_m_r += m as f64 * rm;
        if term < 1e-18 * (1.0 + sum_m_nu_r) || m > 5_000_000 {
            break;
        }
        m += 1;
    }
    if term >= 1e-12 * (1.0 + sum_m_nu_r) {
        return Err(Error::BadConstants("C2 too small for the tail sums to converge".into()));
    }
    let c3_mid = 6.0f64.powf(nu) * kappa * ln_d / 2.0;
    let c3p = 3.0f64.powf(nu) * kappa * ln_d + c3_mid * sum_r;
    let c4p = (6.0 * n0).powf(nu) * kappa * ln_d / 2.0 * sum_m_nu_r;
    let g1_sum = c2 * (n0 * sum_m_r + sum_r) - (1.0 - r).ln() * sum_r;
    let c5p = 1.0 / std::f64::consts::E + g1_sum;
    let c4 = 3.0f64.powf(nu - 1.0) / c2.powf(nu) * c3p;
    let c3_final = c4 + c4 * (c2 + (2.0 * c1).ln()).powf(nu) + c4p + c5p;
    Ok(c3_final * b * b.ln().max(1.0).powf(nu) + c4 * b * (1.0 / p_x).ln().powf(nu))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Pass,
    PreconditionNotMet(String),
}

/// Components of the entropy division check.
#[derive(Debug, Clone)]
pub struct DivisionReport {
    pub s_y: f64,
    pub s_y_cap_x: f64,
    pub s_y_minus_x: f64,
    pub p_x: f64,
    pub epsilon: f64,
    /// s(Y∩X) + s(Y∖X) − s(Y); nonnegative by subadditivity.
    pub subadditivity_margin: f64,
    pub verdict: Verdict,
    /// rhs − lhs of the division inequality, when preconditions hold.
    pub division_margin: Option<f64>,
    /// Two-outcome pinched relative entropy f(ω(O_B), ω_⊗(O_B)).
    pub pinched: Option<f64>,
    /// Full relative entropy S(ρ_Y ‖ ρ_{Y∩X} ⊗ ρ_{Y∖X}).
    pub rel_entropy: Option<f64>,
}

fn pinched_f(t: f64, s: f64) -> f64 {
    let clamp = |v: f64| v.clamp(EIG_FLOOR, 1.0 - EIG_FLOOR);
    let (t, s) = (clamp(t), clamp(s));
    t * (t / s).ln() + (1.0 - t) * ((1.0 - t) / (1.0 - s)).ln()
}

/// Expectation of `o` in the product state ω|_X ⊗ ω|_{X^c}.
fn product_expectation(lattice: &Lattice, omega: &StateVector, x: &Region, o: &Observable) -> Result<f64> {
    let vol = &omega.volume;
    let xc = vol.difference(x);
    let rho_x = Observable::new_hermitian(x.clone(), reduced_density(lattice, omega, x)?, lattice)?;
    let rho_c = Observable::new_hermitian(xc, reduced_density(lattice, omega, &vol.difference(x))?, lattice)?;
    let prod = hastings::kron_in_volume(lattice, &rho_x, &rho_c, vol)?;
    let o_emb = opspace::embed(lattice, o, vol)?;
    let val: Complex64 = prod
        .outer_iter()
        .zip(o_emb.matrix.t().outer_iter())
        .map(|(pr, oc)| pr.iter().zip(oc.iter()).map(|(a, b)| a * b).sum::<Complex64>())
        .sum();
    Ok(val.re)
}

/// Checks the entropy division inequality across the cut X within Y, the
/// universal subadditivity special case, and the two-outcome pinching
/// lower bound on the product relative entropy.
pub fn division_check(
    lattice: &Lattice,
    omega: &StateVector,
    x: &Region,
    y: &Region,
    o_b: &Observable,
    epsilon: f64,
) -> Result<DivisionReport> {
    let vol = &omega.volume;
    if x.is_empty() || !x.is_subset_of(y) || !y.is_subset_of(vol) {
        return Err(Error::BadGeometry("need X ⊆ Y ⊆ volume with X nonempty".into()));
    }
    let y_cap_x = y.intersection(x);
    let y_minus_x = y.difference(x);
    if y_minus_x.is_empty() {
        return Err(Error::BadGeometry("Y must extend beyond X".into()));
    }
    let sub_density = |r: &Region| -> Result<Array2<Complex64>> {
        if r.len() == vol.len() {
            let gs = &omega.amplitudes;
            let n = gs.len();
            let mut rho = Array2::<Complex64>::zeros((n, n));
            for i in 0..n {
                for j in 0..n {
                    rho[[i, j]] = gs[i] * gs[j].conj();
                }
            }
            Ok(rho)
        } else {
            reduced_density(lattice, omega, r)
        }
    };
    let rho_y = sub_density(y)?;
    let rho_yx = sub_density(&y_cap_x)?;
    let rho_yrest = sub_density(&y_minus_x)?;
    let s_y = density_entropy(&rho_y)?;
    let s_y_cap_x = density_entropy(&rho_yx)?;
    let s_y_minus_x = density_entropy(&rho_yrest)?;
    let subadditivity_margin = s_y_cap_x + s_y_minus_x - s_y;
    let (p_x, _cross) = fidelity(lattice, omega, x)?;

    let mut report = DivisionReport {
        s_y,
        s_y_cap_x,
        s_y_minus_x,
        p_x,
        epsilon,
        subadditivity_margin,
        verdict: Verdict::Pass,
        division_margin: None,
        pinched: None,
        rel_entropy: None,
    };
    if !o_b.support.is_subset_of(y) {
        report.verdict = Verdict::PreconditionNotMet("boundary operator support exceeds Y".into());
        return Ok(report);
    }
    if p_x > 0.25 + 1e-12 {
        report.verdict = Verdict::PreconditionNotMet(format!("p_X = {p_x} > 1/4"));
        return Ok(report);
    }
    if 24.0 * epsilon.sqrt() >= 1.0 {
        report.verdict = Verdict::PreconditionNotMet(format!("24 sqrt(eps) = {} >= 1", 24.0 * epsilon.sqrt()));
        return Ok(report);
    }
    let rhs = s_y_cap_x + s_y_minus_x - 0.5 * (1.0 / (p_x + 6.0 * epsilon.sqrt())).ln() + 2.0f64.ln();
    report.division_margin = Some(rhs + 1e-8 - s_y);
    // pinching lower bound against the full relative entropy
    let t = opspace::expectation(lattice, omega, o_b)?.re;
    let s_prod = product_expectation(lattice, omega, x, o_b)?;
    let pinched = pinched_f(t, s_prod);
    let rho_x_obs = Observable::new_hermitian(y_cap_x.clone(), rho_yx, lattice)?;
    let rho_rest_obs = Observable::new_hermitian(y_minus_x.clone(), rho_yrest, lattice)?;
    let prod_density = hastings::kron_in_volume(lattice, &rho_x_obs, &rho_rest_obs, y)?;
    let full = relative_entropy(&rho_y, &prod_density)?;
    report.pinched = Some(pinched);
    report.rel_entropy = Some(full);
    Ok(report)
}

/// Result of the cylinder window search.
#[derive(Debug, Clone)]
pub struct WindowSearch {
    pub a0: usize,
    pub b0: usize,
    pub p: f64,
    pub meets_threshold: bool,
}

/// Scans windows [a₀, b₀] with a₀ ∈ [a−ℓ₀, a], b₀ ∈ [b, b+ℓ₀] and returns
/// the fidelity maximizer. Site indices refer to chain coordinates.
pub fn window_search(
    lattice: &Lattice,
    omega: &StateVector,
    a: usize,
    b: usize,
    ell0: usize,
    threshold: f64,
) -> Result<WindowSearch> {
    if a > b {
        return Err(Error::BadGeometry(format!("need a <= b, got a={a}, b={b}")));
    }
    let sites = omega.volume.sites();
    let lo = *sites.first().expect("nonempty volume");
    let hi = *sites.last().expect("nonempty volume");
    if a < lo + ell0 && ell0 > a - lo.min(a) {
        // handled by the explicit bound check below
    }
    if a.checked_sub(ell0).is_none() || a - ell0 < lo || b + ell0 > hi {
        return Err(Error::GeometryOverflow(format!(
            "search window [{}-{ell0}, {}+{ell0}] leaves the volume [{lo}, {hi}]",
            a, b
        )));
    }
    let mut best: Option<WindowSearch> = None;
    for a0 in (a - ell0)..=a {
        for b0 in b..=(b + ell0) {
            let region = Region::interval(a0, b0);
            if region.len() == omega.volume.len() {
                continue;
            }
            let spectrum = schmidt(lattice, omega, &region)?;
            let p = spectrum.fidelity();
            if best.as_ref().map_or(true, |w| p > w.p) {
                best = Some(WindowSearch { a0, b0, p, meets_threshold: p >= threshold });
            }
        }
    }
    best.ok_or_else(|| Error::BadGeometry("no admissible window".into()))
}

/// Entropy reports for nested left cuts [first m sites of the volume].
pub fn area_sweep(lattice: &Lattice, spec: &SpectralData, cuts: &[usize]) -> Result<Vec<EntropyReport>> {
    if spec.gap <= 1e-8 {
        return Err(Error::NotGapped { gap: spec.gap, tol: 1e-8 });
    }
    let omega = &spec.ground;
    let sites = omega.volume.sites();
    let mut out = Vec::with_capacity(cuts.len());
    for &m in cuts {
        if m == 0 || m >= sites.len() {
            return Err(Error::DegenerateCut);
        }
        let region = Region::new(sites[..m].to_vec());
        let spectrum = schmidt(lattice, omega, &region)?;
        let s = entropy(&spectrum);
        let max_s = region.len() as f64 * (lattice.max_site_dim() as f64).ln();
        assert!(s <= max_s + 1e-9, "entropy {s} exceeds the dimension bound {max_s}");
        out.push(EntropyReport { region, s, p_x: spectrum.fidelity(), schmidt: spectrum, bound_rhs: None });
    }
    Ok(out)
}
