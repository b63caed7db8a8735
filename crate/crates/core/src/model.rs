//! Interactions: model presets, summability constants, local Hamiltonians,
//! and the boundary/interior Hamiltonian splits used by the factorization
//! pipeline.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{self, FFunction, Lattice, Region};
use crate::linalg;
use crate::opspace::{self, expectation, Observable};
use crate::spectral::SpectralData;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> Array2<Complex64> {
    ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]
}

pub fn pauli_y() -> Array2<Complex64> {
    ndarray::array![[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, 1.0), c(0.0, 0.0)]]
}

pub fn pauli_z() -> Array2<Complex64> {
    ndarray::array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]]
}

/// Finite-range interaction: a list of self-adjoint terms keyed by their
/// support regions, with the declared range 𝔯 bounding every support's
/// diameter.
#[derive(Debug, Clone)]
pub struct Interaction {
    terms: Vec<Observable>,
    range: f64,
}

impl Interaction {
    pub fn from_terms(lattice: &Lattice, terms: Vec<Observable>, range: f64) -> Result<Self> {
        if range <= 0.0 {
            return Err(Error::BadCoupling("interaction range must be positive".into()));
        }
        for t in &terms {
            let dev = linalg::hermiticity_deviation(&t.matrix);
            if dev > 1e-12 {
                return Err(Error::NotHermitian { deviation: dev });
            }
            let diam = t
                .support
                .iter()
                .flat_map(|a| t.support.iter().map(move |b| (a, b)))
                .map(|(a, b)| lattice.dist(a, b))
                .fold(0.0f64, f64::max);
            if diam > range {
                return Err(Error::BadCoupling(format!(
                    "term on {:?} has diameter {diam} exceeding the declared range {range}",
                    t.support.sites()
                )));
            }
        }
        Ok(Interaction { terms, range })
    }

    pub fn terms(&self) -> &[Observable] {
        &self.terms
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn term_supports(&self) -> Vec<Region> {
        self.terms.iter().map(|t| t.support.clone()).collect()
    }

    /// Φ-boundary of X under this interaction.
    pub fn phi_boundary(&self, lattice: &Lattice, x: &Region) -> Region {
        geometry::phi_boundary(lattice, x, &self.term_supports())
    }

    /// Custom interaction from JSON: { "range": r, "terms": [ { "sites": [..],
    /// "matrix": [[[re,im],..],..] } ] }.
    pub fn from_json(lattice: &Lattice, doc: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct TermDoc {
            sites: Vec<usize>,
            matrix: Vec<Vec<[f64; 2]>>,
        }
        #[derive(Deserialize)]
        struct Doc {
            range: f64,
            terms: Vec<TermDoc>,
        }
        let d: Doc = serde_json::from_str(doc)?;
        let mut terms = Vec::new();
        for t in d.terms {
            let support = Region::new(t.sites);
            let dim = lattice.region_dim(&support);
            if t.matrix.len() != dim || t.matrix.iter().any(|row| row.len() != dim) {
                return Err(Error::DimensionMismatch { expected: dim, got: t.matrix.len() });
            }
            let m = Array2::from_shape_fn((dim, dim), |(i, j)| c(t.matrix[i][j][0], t.matrix[i][j][1]));
            terms.push(Observable::new_hermitian(support, m, lattice)?);
        }
        Interaction::from_terms(lattice, terms, d.range)
    }
}

/// Couplings for the model presets.
#[derive(Debug, Clone, Copy)]
pub struct Couplings {
    /// Transverse field (tfim).
    pub g: f64,
    /// Overall exchange scale (xxz, cluster).
    pub j: f64,
    /// ZZ anisotropy (xxz).
    pub delta: f64,
}

impl Default for Couplings {
    fn default() -> Self {
        Couplings { g: 1.0, j: 1.0, delta: 1.0 }
    }
}

/// Builds one of the named spin-chain presets on the given volume.
///
/// tfim: Φ({i}) = −g X_i, Φ({i,i+1}) = −Z_i Z_{i+1} (range 1).
/// xxz: Φ({i,i+1}) = −J(X X + Y Y + Δ Z Z) (range 1).
/// cluster: Φ({i−1,i,i+1}) = −J Z X Z (range 2).
/// onsite: Φ({i}) = −X_i only.
pub fn preset(lattice: &Lattice, name: &str, params: &Couplings, volume: &Region) -> Result<Interaction> {
    if volume.iter().any(|s| lattice.site_dim(s) != 2) {
        return Err(Error::BadCoupling("spin presets require qubit sites (d=2)".into()));
    }
    let bonds: Vec<(usize, usize)> = volume
        .iter()
        .flat_map(|a| volume.iter().map(move |b| (a, b)))
        .filter(|&(a, b)| a < b && lattice.dist(a, b) == 1.0)
        .collect();
    let mut terms = Vec::new();
    let range;
    match name {
        "tfim" => {
            if !params.g.is_finite() {
                return Err(Error::BadCoupling("tfim needs a finite g".into()));
            }
            for s in volume.iter() {
                let m = pauli_x().mapv(|z| z * -params.g);
                terms.push(Observable::new(Region::new(vec![s]), m, lattice)?);
            }
            for &(a, b) in &bonds {
                let m = linalg::kron(&pauli_z(), &pauli_z()).mapv(|z| -z);
                terms.push(Observable::new(Region::new(vec![a, b]), m, lattice)?);
            }
            range = 1.0;
        }
        "xxz" => {
            for &(a, b) in &bonds {
                let mut m = linalg::kron(&pauli_x(), &pauli_x());
                m += &linalg::kron(&pauli_y(), &pauli_y());
                m += &linalg::kron(&pauli_z(), &pauli_z()).mapv(|z| z * params.delta);
                terms.push(Observable::new(Region::new(vec![a, b]), m.mapv(|z| z * -params.j), lattice)?);
            }
            range = 1.0;
        }
        "cluster" => {
            let triples: Vec<(usize, usize, usize)> = volume
                .iter()
                .filter_map(|m| {
                    let cm = lattice.coord(m).to_vec();
                    let left = volume.iter().find(|&s| lattice.dist(s, m) == 1.0 && lattice.coord(s) < cm.as_slice());
                    let right = volume.iter().find(|&s| lattice.dist(s, m) == 1.0 && lattice.coord(s) > cm.as_slice());
                    match (left, right) {
                        (Some(l), Some(r)) => Some((l, m, r)),
                        _ => None,
                    }
                })
                .collect();
            for (l, m, r) in triples {
                let zxz = linalg::kron(&linalg::kron(&pauli_z(), &pauli_x()), &pauli_z());
                terms.push(Observable::new(Region::new(vec![l, m, r]), zxz.mapv(|z| z * -params.j), lattice)?);
            }
            range = 2.0;
        }
        "onsite" => {
            for s in volume.iter() {
                terms.push(Observable::new(Region::new(vec![s]), pauli_x().mapv(|z| -z), lattice)?);
            }
            range = 1.0;
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    }
    Interaction::from_terms(lattice, terms, range)
}

/// Summability constants of an interaction.
#[derive(Debug, Clone, Copy)]
pub struct InteractionConstants {
    /// 𝔧 = sup_x Σ_{Y∋x} ‖Φ(Y)‖ / |Y|
    pub j: f64,
    /// 𝔧′ = sup_x Σ_{Y∋x} ‖Φ(Y)‖
    pub j1: f64,
    /// 𝔧″ = sup_x Σ_{Y∋x} ‖Φ(Y)‖·|Y|
    pub j2: f64,
    /// ‖Φ‖_F = sup_{x,y} F(d(x,y))^{−1} Σ_{Y∋x,y} ‖Φ(Y)‖
    pub phi_f_norm: f64,
    pub range: f64,
}

/// Exact enumeration of 𝔧, 𝔧′, 𝔧″ and ‖Φ‖_F.
pub fn constants(lattice: &Lattice, phi: &Interaction, f: &FFunction) -> InteractionConstants {
    let norms: Vec<f64> = phi.terms().iter().map(|t| t.op_norm()).collect();
    let mut j = 0.0f64;
    let mut j1 = 0.0f64;
    let mut j2 = 0.0f64;
    for x in 0..lattice.len() {
        let mut sj = 0.0;
        let mut sj1 = 0.0;
        let mut sj2 = 0.0;
        for (t, &n) in phi.terms().iter().zip(norms.iter()) {
            if t.support.contains(x) {
                sj += n / t.support.len() as f64;
                sj1 += n;
                sj2 += n * t.support.len() as f64;
            }
        }
        j = j.max(sj);
        j1 = j1.max(sj1);
        j2 = j2.max(sj2);
    }
    let mut phi_f = 0.0f64;
    for x in 0..lattice.len() {
        for y in 0..lattice.len() {
            let mut s = 0.0;
            for (t, &n) in phi.terms().iter().zip(norms.iter()) {
                if t.support.contains(x) && t.support.contains(y) {
                    s += n;
                }
            }
            if s > 0.0 {
                phi_f = phi_f.max(s / f.eval(lattice.dist(x, y)));
            }
        }
    }
    InteractionConstants { j, j1, j2, phi_f_norm: phi_f, range: phi.range() }
}

/// H_Λ = Σ_{Y⊆Λ} Φ(Y), dense on the volume.
pub fn local_hamiltonian(lattice: &Lattice, phi: &Interaction, volume: &Region) -> Result<Observable> {
    let dim = lattice.region_dim(volume);
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    for t in phi.terms() {
        if t.support.is_subset_of(volume) {
            accumulate_embedded(lattice, t, volume, &mut acc)?;
        }
    }
    Ok(Observable::new(volume.clone(), acc, lattice)?)
}

/// acc += embed(a, volume) without allocating the embedded matrix.
fn accumulate_embedded(lattice: &Lattice, a: &Observable, volume: &Region, acc: &mut Array2<Complex64>) -> Result<()> {
    let e = opspace::embed(lattice, a, volume)?;
    *acc += &e.matrix;
    Ok(())
}

/// The boundary/interior split of H_{X(n+𝔯)} together with the primed
/// (ground-expectation-subtracted) pieces.
#[derive(Debug, Clone)]
pub struct HamiltonianSplit {
    /// H_{R,n}: terms meeting X_int(n+𝔯); supported in X.
    pub h_r: Observable,
    /// H_{B,n}: terms inside ∂X(n+𝔯).
    pub h_b: Observable,
    pub h_r_primed: Observable,
    pub h_b_primed: Observable,
    /// H′_{L,n} = (H_volume − E₀) − H′_{X(n+𝔯)}, dense on the volume.
    pub h_l_primed: Observable,
    pub n: f64,
    /// X(n+𝔯) as clipped to the volume.
    pub x_thick: Region,
}

/// Splits the Hamiltonian around X at width n. Terms are classified on
/// their declared supports: R-terms meet X_int(n+𝔯), B-terms lie inside
/// ∂X(n+𝔯); together they exhaust H_{X(n+𝔯)}.
pub fn split(
    lattice: &Lattice,
    phi: &Interaction,
    volume: &Region,
    x: &Region,
    n: f64,
    ground: &SpectralData,
) -> Result<HamiltonianSplit> {
    if !x.is_subset_of(volume) {
        return Err(Error::BadGeometry("X must be inside the volume".into()));
    }
    let r = phi.range();
    let x_thick = geometry::thicken(lattice, x, n + r);
    if !x_thick.is_subset_of(volume) {
        return Err(Error::GeometryOverflow(format!(
            "X(n+r) with n={n}, r={r} needs sites outside the volume"
        )));
    }
    let x_int = geometry::interior(lattice, x, n + r);
    let boundary = geometry::r_boundary(lattice, x, n + r)?;
    let mut r_terms: Vec<&Observable> = Vec::new();
    let mut b_terms: Vec<&Observable> = Vec::new();
    for t in phi.terms() {
        if !t.support.is_subset_of(volume) {
            continue;
        }
        if t.support.intersects(&x_int) {
            r_terms.push(t);
        } else if t.support.is_subset_of(&boundary) {
            b_terms.push(t);
        }
    }
    // R-terms live inside X: a term meeting X_int(n+𝔯) with diameter ≤ 𝔯
    // cannot reach past X. Use X as the R support (or the thickened region
    // when X_int spills past it on exotic geometries).
    let mut r_support = Region::empty();
    for t in &r_terms {
        r_support = r_support.union(&t.support);
    }
    let r_region = if r_support.is_subset_of(x) { x.clone() } else { r_support };
    let h_r = sum_terms(lattice, &r_terms, &r_region)?;
    let b_region = boundary.intersection(volume);
    let h_b = sum_terms(lattice, &b_terms, &b_region)?;
    // identity H_R + H_B = H_{X(n+𝔯)}
    let hx = local_hamiltonian(lattice, phi, &x_thick)?;
    {
        let mut acc = Array2::<Complex64>::zeros((hx.dim(), hx.dim()));
        accumulate_embedded(lattice, &h_r, &x_thick, &mut acc)?;
        accumulate_embedded(lattice, &h_b, &x_thick, &mut acc)?;
        let dev = (&acc - &hx.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        if dev > 1e-12 * (1.0 + hx.op_norm()) {
            return Err(Error::BadGeometry(format!("split does not partition H_X(n+r): deviation {dev}")));
        }
    }
    let er = expectation(lattice, &ground.ground, &h_r)?.re;
    let eb = expectation(lattice, &ground.ground, &h_b)?.re;
    let mut h_r_primed = h_r.clone();
    subtract_scalar(&mut h_r_primed, er);
    let mut h_b_primed = h_b.clone();
    subtract_scalar(&mut h_b_primed, eb);
    // H′_L = (H − E₀) − H′_{X(n+𝔯)}, dense on the volume
    let dim = lattice.region_dim(volume);
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    for t in phi.terms() {
        if t.support.is_subset_of(volume) && !t.support.is_subset_of(&x_thick) {
            accumulate_embedded(lattice, t, volume, &mut acc)?;
        }
    }
    // (H − E₀) − (H_X − ⟨H_X⟩) = Σ_{Y⊄X(n+𝔯)} Φ(Y) − E₀ + ⟨H_X⟩
    let shift = -ground.e0 + er + eb;
    for i in 0..dim {
        acc[[i, i]] += c(shift, 0.0);
    }
    let h_l_primed = Observable::new(volume.clone(), acc, lattice)?;
    Ok(HamiltonianSplit { h_r, h_b, h_r_primed, h_b_primed, h_l_primed, n, x_thick })
}

fn sum_terms(lattice: &Lattice, terms: &[&Observable], support: &Region) -> Result<Observable> {
    if support.is_empty() {
        return Ok(Observable::scalar(c(0.0, 0.0)));
    }
    let dim = lattice.region_dim(support);
    let mut acc = Array2::<Complex64>::zeros((dim, dim));
    for t in terms {
        accumulate_embedded(lattice, t, support, &mut acc)?;
    }
    Ok(Observable::new(support.clone(), acc, lattice)?)
}

fn subtract_scalar(a: &mut Observable, s: f64) {
    let dim = a.dim();
    for i in 0..dim {
        a.matrix[[i, i]] -= c(s, 0.0);
    }
}
