//! Dense operator algebra over tensor-product Hilbert spaces: supports and
//! embeddings, bipartition permutations, partial traces, the conditional
//! expectation onto a subalgebra and the twirl onto a commutant.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{Lattice, Region};
use crate::linalg;

const HERMITIAN_TOL: f64 = 1e-12;

/// Dense operator with a declared support region. The operator acts as the
/// identity on every site outside its support; an empty support means a
/// scalar (1×1 matrix).
#[derive(Debug, Clone)]
pub struct Observable {
    pub support: Region,
    pub matrix: Array2<Complex64>,
    hermitian: bool,
}

impl Observable {
    pub fn new(support: Region, matrix: Array2<Complex64>, lattice: &Lattice) -> Result<Self> {
        let dim = lattice.region_dim(&support);
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: matrix.nrows() });
        }
        let hermitian = linalg::hermiticity_deviation(&matrix) <= HERMITIAN_TOL;
        Ok(Observable { support, matrix, hermitian })
    }

    /// Like `new` but fails unless the matrix is self-adjoint.
    pub fn new_hermitian(support: Region, matrix: Array2<Complex64>, lattice: &Lattice) -> Result<Self> {
        let dev = linalg::hermiticity_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Self::new(support, matrix, lattice)
    }

    pub fn zero(support: Region, lattice: &Lattice) -> Self {
        let dim = lattice.region_dim(&support);
        Observable { support, matrix: Array2::zeros((dim, dim)), hermitian: true }
    }

    pub fn identity(support: Region, lattice: &Lattice) -> Self {
        let dim = lattice.region_dim(&support);
        Observable { support, matrix: Array2::eye(dim), hermitian: true }
    }

    pub fn scalar(value: Complex64) -> Self {
        let mut m = Array2::zeros((1, 1));
        m[[0, 0]] = value;
        Observable { support: Region::empty(), matrix: m, hermitian: value.im.abs() <= HERMITIAN_TOL }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Re-check and cache self-adjointness (after in-place arithmetic).
    /// Internal constructor that trusts the caller's hermiticity flag.
    pub(crate) fn from_parts(support: Region, matrix: Array2<Complex64>, hermitian: bool) -> Self {
        Observable { support, matrix, hermitian }
    }

    pub fn refresh_hermitian(&mut self) {
        self.hermitian = linalg::hermiticity_deviation(&self.matrix) <= HERMITIAN_TOL;
    }

    /// Operator norm; embedding-invariant, so computed on the native support.
    pub fn op_norm(&self) -> f64 {
        if self.hermitian {
            linalg::op_norm_hermitian(&self.matrix)
        } else {
            linalg::op_norm_general(&self.matrix)
        }
    }

    pub fn adjoint(&self) -> Observable {
        Observable {
            support: self.support.clone(),
            matrix: self.matrix.t().mapv(|z| z.conj()),
            hermitian: self.hermitian,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.diag().sum()
    }

    /// Binary container: u64 dimension header then row-major (re, im) f64 pairs.
    pub fn write_binary(&self, w: &mut impl std::io::Write) -> Result<()> {
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        for z in self.matrix.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Unit vector over the Hilbert space of a volume region.
#[derive(Debug, Clone)]
pub struct StateVector {
    pub volume: Region,
    pub amplitudes: Array1<Complex64>,
}

impl StateVector {
    pub fn new(volume: Region, amplitudes: Array1<Complex64>, lattice: &Lattice) -> Result<Self> {
        let dim = lattice.region_dim(&volume);
        if amplitudes.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: amplitudes.len() });
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::ConfigInvalid("state vector has zero norm".into()));
        }
        Ok(StateVector { volume, amplitudes: amplitudes.mapv(|z| z / norm) })
    }
}

/// Permutation realizing ℋ_volume ≅ ℋ_X ⊗ ℋ_{X^c∩volume}: `perm[i·d_c + j]`
/// is the volume basis index whose X-digits decode `i` and whose complement
/// digits decode `j`. Site order within each factor is canonical (ascending
/// site id), first site most significant.
#[derive(Debug, Clone)]
pub struct BipartitionMap {
    pub cut: Region,
    pub volume: Region,
    pub perm: Vec<usize>,
    pub dim_cut: usize,
    pub dim_rest: usize,
}

pub fn bipartition(lattice: &Lattice, x: &Region, volume: &Region) -> Result<BipartitionMap> {
    if x.is_empty() || !x.is_subset_of(volume) || x.len() == volume.len() {
        return Err(Error::DegenerateCut);
    }
    Ok(bipartition_unchecked(lattice, x, volume))
}

/// Internal variant allowing an empty cut (dim_cut = 1, identity layout).
pub(crate) fn bipartition_unchecked(lattice: &Lattice, x: &Region, volume: &Region) -> BipartitionMap {
    let vsites: Vec<usize> = volume.iter().collect();
    let n = vsites.len();
    // volume strides, first site most significant
    let mut strides = vec![1usize; n];
    for k in (0..n.saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * lattice.site_dim(vsites[k + 1]);
    }
    let pos_stride = |site: usize| strides[vsites.iter().position(|&s| s == site).unwrap()];
    let xs: Vec<usize> = x.iter().collect();
    let cs: Vec<usize> = volume.difference(x).iter().collect();
    let dim_cut = xs.iter().map(|&s| lattice.site_dim(s)).product::<usize>().max(1);
    let dim_rest = cs.iter().map(|&s| lattice.site_dim(s)).product::<usize>().max(1);
    let xstr: Vec<usize> = xs.iter().map(|&s| pos_stride(s)).collect();
    let cstr: Vec<usize> = cs.iter().map(|&s| pos_stride(s)).collect();
    let xdims: Vec<usize> = xs.iter().map(|&s| lattice.site_dim(s)).collect();
    let cdims: Vec<usize> = cs.iter().map(|&s| lattice.site_dim(s)).collect();
    let decode = |mut idx: usize, dims: &[usize], strs: &[usize]| -> usize {
        let mut j = 0usize;
        for k in (0..dims.len()).rev() {
            j += (idx % dims[k]) * strs[k];
            idx /= dims[k];
        }
        j
    };
    let mut perm = vec![0usize; dim_cut * dim_rest];
    for i in 0..dim_cut {
        let base = decode(i, &xdims, &xstr);
        for j in 0..dim_rest {
            perm[i * dim_rest + j] = base + decode(j, &cdims, &cstr);
        }
    }
    BipartitionMap { cut: x.clone(), volume: volume.clone(), perm, dim_cut, dim_rest }
}

/// a ⊗ identity on volume∖support, permuted into the volume's canonical
/// site order.
pub fn embed(lattice: &Lattice, a: &Observable, volume: &Region) -> Result<Observable> {
    if !a.support.is_subset_of(volume) {
        return Err(Error::SupportNotContained { support: a.support.sites().to_vec() });
    }
    if a.support.len() == volume.len() {
        return Ok(Observable { support: volume.clone(), matrix: a.matrix.clone(), hermitian: a.hermitian });
    }
    let bp = bipartition_unchecked(lattice, &a.support, volume);
    let d = bp.dim_cut * bp.dim_rest;
    let mut out = Array2::<Complex64>::zeros((d, d));
    for i in 0..bp.dim_cut {
        for i2 in 0..bp.dim_cut {
            let v = a.matrix[[i, i2]];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..bp.dim_rest {
                out[[bp.perm[i * bp.dim_rest + r], bp.perm[i2 * bp.dim_rest + r]]] = v;
            }
        }
    }
    Ok(Observable { support: volume.clone(), matrix: out, hermitian: a.hermitian })
}

/// y = (a ⊗ I) x without materializing the embedded matrix.
pub fn apply_embedded(lattice: &Lattice, a: &Observable, volume: &Region, x: &Array1<Complex64>) -> Result<Array1<Complex64>> {
    if !a.support.is_subset_of(volume) {
        return Err(Error::SupportNotContained { support: a.support.sites().to_vec() });
    }
    let dim = lattice.region_dim(volume);
    if x.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: x.len() });
    }
    if a.support.len() == volume.len() {
        return Ok(a.matrix.dot(x));
    }
    let bp = bipartition_unchecked(lattice, &a.support, volume);
    let mut y = Array1::<Complex64>::zeros(dim);
    for i in 0..bp.dim_cut {
        for i2 in 0..bp.dim_cut {
            let v = a.matrix[[i, i2]];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for r in 0..bp.dim_rest {
                y[bp.perm[i * bp.dim_rest + r]] += v * x[bp.perm[i2 * bp.dim_rest + r]];
            }
        }
    }
    Ok(y)
}

/// ⟨ψ, (a ⊗ I) ψ⟩ on the state's volume.
pub fn expectation(lattice: &Lattice, psi: &StateVector, a: &Observable) -> Result<Complex64> {
    let y = apply_embedded(lattice, a, &psi.volume, &psi.amplitudes)?;
    Ok(psi.amplitudes.iter().zip(y.iter()).map(|(p, q)| p.conj() * q).sum())
}

/// Non-normalized partial trace onto support∩keep (traces out support∖keep).
pub fn partial_trace(lattice: &Lattice, a: &Observable, keep: &Region) -> Observable {
    let kept = a.support.intersection(keep);
    if kept.len() == a.support.len() {
        return a.clone();
    }
    if kept.is_empty() {
        return Observable::scalar(a.trace());
    }
    let bp = bipartition_unchecked(lattice, &kept, &a.support);
    let mut out = Array2::<Complex64>::zeros((bp.dim_cut, bp.dim_cut));
    for i in 0..bp.dim_cut {
        for i2 in 0..bp.dim_cut {
            let mut s = Complex64::new(0.0, 0.0);
            for r in 0..bp.dim_rest {
                s += a.matrix[[bp.perm[i * bp.dim_rest + r], bp.perm[i2 * bp.dim_rest + r]]];
            }
            out[[i, i2]] = s;
        }
    }
    let hermitian = a.hermitian;
    Observable { support: kept, matrix: out, hermitian }
}

/// Conditional expectation onto 𝒜_X: normalized partial trace over the
/// complement of X inside the support. Result support is support∩X (the
/// operator acts as identity elsewhere).
pub fn cond_expect(lattice: &Lattice, a: &Observable, x: &Region) -> Observable {
    let traced_out = a.support.difference(x);
    let d: usize = traced_out.iter().map(|s| lattice.site_dim(s)).product::<usize>().max(1);
    let mut t = partial_trace(lattice, a, x);
    t.matrix.mapv_inplace(|z| z / d as f64);
    t
}

/// Conditional expectation onto the commutant 𝒜_X': normalized partial
/// trace over X. Equals the Weyl–Heisenberg group average (Schur
/// orthogonality); `weyl_twirl` computes that form for cross-checking.
pub fn twirl(lattice: &Lattice, a: &Observable, x: &Region) -> Observable {
    let traced_out = a.support.intersection(x);
    let d: usize = traced_out.iter().map(|s| lattice.site_dim(s)).product::<usize>().max(1);
    let keep = a.support.difference(x);
    let mut t = partial_trace(lattice, a, &keep);
    t.matrix.mapv_inplace(|z| z / d as f64);
    t
}

/// Generalized Pauli (shift/clock) matrices of dimension d.
pub fn weyl_generators(d: usize) -> (Array2<Complex64>, Array2<Complex64>) {
    let mut shift = Array2::<Complex64>::zeros((d, d));
    let mut clock = Array2::<Complex64>::zeros((d, d));
    for k in 0..d {
        shift[[(k + 1) % d, k]] = Complex64::new(1.0, 0.0);
        let phase = 2.0 * std::f64::consts::PI * k as f64 / d as f64;
        clock[[k, k]] = Complex64::new(phase.cos(), phase.sin());
    }
    (shift, clock)
}

/// Explicit Weyl–Heisenberg average (1/d²) Σ_{a,b} U_{ab}† A U_{ab} over
/// ℋ_X, embedded on support∪X. Dense in d_X²; intended for cross-checks at
/// small dimension.
pub fn weyl_twirl(lattice: &Lattice, a: &Observable, x: &Region) -> Result<Observable> {
    let volume = a.support.union(x);
    let a_emb = embed(lattice, a, &volume)?;
    let dx = lattice.region_dim(x);
    let (shift, clock) = weyl_generators(dx);
    let mut avg = Array2::<Complex64>::zeros((a_emb.dim(), a_emb.dim()));
    let mut sa = Array2::<Complex64>::eye(dx);
    for _a in 0..dx {
        let mut u = sa.clone();
        for _b in 0..dx {
            let u_obs = Observable { support: x.clone(), matrix: u.clone(), hermitian: false };
            let u_emb = embed(lattice, &u_obs, &volume)?;
            let udag = u_emb.matrix.t().mapv(|z| z.conj());
            avg += &udag.dot(&a_emb.matrix).dot(&u_emb.matrix);
            u = u.dot(&clock);
        }
        sa = shift.dot(&sa);
    }
    let scale = (dx * dx) as f64;
    avg.mapv_inplace(|z| z / scale);
    Observable::new(volume, avg, lattice)
}

/// Embeds both operators into the union of their supports and returns
/// (‖[A,B]‖, ‖A‖, ‖B‖).
pub fn norm_commutator(lattice: &Lattice, a: &Observable, b: &Observable) -> Result<(f64, f64, f64)> {
    let volume = a.support.union(&b.support);
    let ae = embed(lattice, a, &volume)?;
    let be = embed(lattice, b, &volume)?;
    let comm = ae.matrix.dot(&be.matrix) - be.matrix.dot(&ae.matrix);
    let cn = if a.hermitian && b.hermitian {
        // i[A,B] is Hermitian for Hermitian A, B
        linalg::op_norm_hermitian(&comm.mapv(|z| z * Complex64::new(0.0, 1.0)))
    } else {
        linalg::op_norm_general(&comm)
    };
    Ok((cn, a.op_norm(), b.op_norm()))
}

/// Deterministic random helpers (ChaCha-seeded) for fuzz tests and sampled
/// diagnostics.
pub mod sample {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn gaussian_complex(rng: &mut ChaCha8Rng) -> Complex64 {
        // Box–Muller
        let u1: f64 = rng.gen_range(1e-12..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        Complex64::new(r * (2.0 * std::f64::consts::PI * u2).cos(), r * (2.0 * std::f64::consts::PI * u2).sin())
    }

    pub fn state(dim: usize, rng: &mut ChaCha8Rng) -> Array1<Complex64> {
        let mut v = Array1::from_shape_fn(dim, |_| gaussian_complex(rng));
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.mapv_inplace(|z| z / n);
        v
    }

    pub fn hermitian(dim: usize, rng: &mut ChaCha8Rng) -> Array2<Complex64> {
        let g = Array2::from_shape_fn((dim, dim), |_| gaussian_complex(rng));
        let adj = g.t().mapv(|z| z.conj());
        (&g + &adj).mapv(|z| z / 2.0)
    }

    /// Haar-like unitary: eigenvector matrix of a random Hermitian.
    pub fn unitary(dim: usize, rng: &mut ChaCha8Rng) -> Array2<Complex64> {
        let h = hermitian(dim, rng);
        let (_, v) = crate::linalg::eigh(h).expect("random unitary eigensolve");
        v
    }
}
