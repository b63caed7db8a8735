//! Finite metric lattices, region combinatorics, F-functions, and the purely
//! geometric constants feeding the bound evaluations.

use serde::Deserialize;

use crate::error::{Error, Result};

/// Finite metric space of sites with per-site Hilbert-space dimensions.
/// The default metric is ℓ¹ on the integer coordinates; an explicit distance
/// table can override it for non-lattice graphs.
#[derive(Debug, Clone)]
pub struct Lattice {
    coords: Vec<Vec<i64>>,
    site_dims: Vec<usize>,
    kind: LatticeKind,
    distance_table: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    /// Truncation of the chain ℤ.
    Chain,
    /// Truncation of ℤ² (rectangular grid).
    Grid,
    /// Arbitrary site set / metric table.
    Custom,
}

impl Lattice {
    pub fn chain(len: usize, site_dim: usize) -> Self {
        Self::chain_range(0, len as i64 - 1, site_dim)
    }

    /// Chain with integer coordinates lo..=hi.
    pub fn chain_range(lo: i64, hi: i64, site_dim: usize) -> Self {
        assert!(hi >= lo && site_dim >= 2);
        let coords: Vec<Vec<i64>> = (lo..=hi).map(|x| vec![x]).collect();
        let n = coords.len();
        Lattice { coords, site_dims: vec![site_dim; n], kind: LatticeKind::Chain, distance_table: None }
    }

    pub fn grid(w: usize, h: usize, site_dim: usize) -> Self {
        assert!(w >= 1 && h >= 1 && site_dim >= 2);
        let mut coords = Vec::with_capacity(w * h);
        for x in 0..w as i64 {
            for y in 0..h as i64 {
                coords.push(vec![x, y]);
            }
        }
        let n = coords.len();
        Lattice { coords, site_dims: vec![site_dim; n], kind: LatticeKind::Grid, distance_table: None }
    }

    pub fn custom(coords: Vec<Vec<i64>>, site_dims: Vec<usize>) -> Self {
        assert_eq!(coords.len(), site_dims.len());
        Lattice { coords, site_dims, kind: LatticeKind::Custom, distance_table: None }
    }

    /// Override the metric with an explicit symmetric table (row-major n×n).
    pub fn with_distance_table(mut self, table: Vec<f64>) -> Self {
        assert_eq!(table.len(), self.len() * self.len());
        self.distance_table = Some(table);
        self.kind = LatticeKind::Custom;
        self
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn site_dim(&self, site: usize) -> usize {
        self.site_dims[site]
    }

    pub fn max_site_dim(&self) -> usize {
        self.site_dims.iter().copied().max().unwrap_or(0)
    }

    pub fn coord(&self, site: usize) -> &[i64] {
        &self.coords[site]
    }

    /// Site index with the given coordinate, if present.
    pub fn site_at(&self, coord: &[i64]) -> Option<usize> {
        self.coords.iter().position(|c| c.as_slice() == coord)
    }

    /// ℓ¹ metric between two sites (or table lookup when overridden).
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        if let Some(t) = &self.distance_table {
            return t[a * self.len() + b];
        }
        self.coords[a]
            .iter()
            .zip(self.coords[b].iter())
            .map(|(x, y)| (x - y).abs())
            .sum::<i64>() as f64
    }

    pub fn full_region(&self) -> Region {
        Region::new((0..self.len()).collect())
    }

    /// Product of site dimensions over a region.
    pub fn region_dim(&self, region: &Region) -> usize {
        region.iter().map(|s| self.site_dims[s]).product()
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut d = 0.0f64;
        for a in 0..n {
            for b in (a + 1)..n {
                d = d.max(self.dist(a, b));
            }
        }
        d
    }

    /// Load from a JSON document { "kind": "chain"|"grid", "extent": [..], "site_dim": int }.
    pub fn from_json(doc: &str) -> Result<Lattice> {
        #[derive(Deserialize)]
        struct Doc {
            kind: String,
            extent: Vec<usize>,
            site_dim: usize,
        }
        let d: Doc = serde_json::from_str(doc)?;
        if d.site_dim < 2 {
            return Err(Error::ConfigInvalid("site_dim must be >= 2".into()));
        }
        match d.kind.as_str() {
            "chain" => {
                let l = *d.extent.first().ok_or_else(|| Error::ConfigInvalid("chain extent missing".into()))?;
                if l == 0 {
                    return Err(Error::ConfigInvalid("chain extent must be positive".into()));
                }
                Ok(Lattice::chain(l, d.site_dim))
            }
            "grid" => {
                if d.extent.len() != 2 || d.extent.iter().any(|&e| e == 0) {
                    return Err(Error::ConfigInvalid("grid extent must be [w, h] with w,h >= 1".into()));
                }
                Ok(Lattice::grid(d.extent[0], d.extent[1], d.site_dim))
            }
            other => Err(Error::ConfigInvalid(format!("unknown lattice kind '{other}'"))),
        }
    }
}

/// Finite subset of a lattice's sites, kept sorted for determinism.
#[derive(Debug, Clone, PartialEq, Eq, Hash, serde::Serialize)]
pub struct Region {
    sites: Vec<usize>,
}

impl Region {
    pub fn new(mut sites: Vec<usize>) -> Self {
        sites.sort_unstable();
        sites.dedup();
        Region { sites }
    }

    pub fn empty() -> Self {
        Region { sites: vec![] }
    }

    pub fn interval(lo: usize, hi_inclusive: usize) -> Self {
        Region::new((lo..=hi_inclusive).collect())
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.sites.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites.binary_search(&site).is_ok()
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    pub fn union(&self, other: &Region) -> Region {
        let mut v = self.sites.clone();
        v.extend_from_slice(&other.sites);
        Region::new(v)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region::new(self.iter().filter(|s| other.contains(*s)).collect())
    }

    pub fn difference(&self, other: &Region) -> Region {
        Region::new(self.iter().filter(|s| !other.contains(*s)).collect())
    }

    pub fn complement(&self, lattice: &Lattice) -> Region {
        Region::new((0..lattice.len()).filter(|s| !self.contains(*s)).collect())
    }

    pub fn intersects(&self, other: &Region) -> bool {
        self.iter().any(|s| other.contains(s))
    }
}

/// Distance between two nonempty regions: min over site pairs.
pub fn distance(lattice: &Lattice, a: &Region, b: &Region) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut d = f64::INFINITY;
    for x in a.iter() {
        for y in b.iter() {
            d = d.min(lattice.dist(x, y));
        }
    }
    Ok(d)
}

fn dist_site_region(lattice: &Lattice, site: usize, region: &Region) -> f64 {
    region.iter().map(|y| lattice.dist(site, y)).fold(f64::INFINITY, f64::min)
}

/// r-width boundary ∂X(r) = {x∈X : d(x,X^c)≤r} ⊔ {y∈X^c : d(y,X)≤r}.
pub fn r_boundary(lattice: &Lattice, x: &Region, r: f64) -> Result<Region> {
    if x.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let xc = x.complement(lattice);
    if xc.is_empty() {
        return Err(Error::FullVolume);
    }
    let mut out = Vec::new();
    for s in x.iter() {
        if dist_site_region(lattice, s, &xc) <= r {
            out.push(s);
        }
    }
    for s in xc.iter() {
        if dist_site_region(lattice, s, x) <= r {
            out.push(s);
        }
    }
    Ok(Region::new(out))
}

/// Interior X_int(n) = {x : d(x,X^c) > n} ⊆ X. Returns X when X^c is empty.
pub fn interior(lattice: &Lattice, x: &Region, n: f64) -> Region {
    let xc = x.complement(lattice);
    if xc.is_empty() {
        return x.clone();
    }
    Region::new(x.iter().filter(|&s| dist_site_region(lattice, s, &xc) > n).collect())
}

/// Thickening X(n) = {x : d(x,X)≤n}, clipped to the finite lattice.
pub fn thicken(lattice: &Lattice, x: &Region, n: f64) -> Region {
    if x.is_empty() {
        return Region::empty();
    }
    Region::new((0..lattice.len()).filter(|&s| dist_site_region(lattice, s, x) <= n).collect())
}

/// Φ-boundary ∂_Φ X given the supports of the interaction's nonzero terms:
/// sites of X hit by a term that also meets X^c.
pub fn phi_boundary(lattice: &Lattice, x: &Region, term_supports: &[Region]) -> Region {
    let xc = x.complement(lattice);
    let mut out = Vec::new();
    for y in term_supports {
        if y.intersects(x) && y.intersects(&xc) {
            out.extend(y.iter().filter(|&s| x.contains(s)));
        }
    }
    Region::new(out)
}

/// F-function family: power law (1+r)^{−(ν+1)} with an optional exponential
/// tilt e^{−μr}. Strictly positive and non-increasing for ν ≥ 0, μ ≥ 0.
#[derive(Debug, Clone, Copy)]
pub struct FFunction {
    pub nu: f64,
    pub mu: f64,
}

impl FFunction {
    pub fn power_law(nu: f64) -> Self {
        assert!(nu >= 0.0);
        FFunction { nu, mu: 0.0 }
    }

    /// Exponentially tilted version F_μ(r) = e^{−μr} F(r).
    pub fn tilted(&self, mu: f64) -> Self {
        assert!(mu >= 0.0);
        FFunction { nu: self.nu, mu }
    }

    pub fn eval(&self, r: f64) -> f64 {
        (-self.mu * r).exp() * (1.0 + r).powf(-(self.nu + 1.0))
    }
}

/// ‖F‖ and c_F on the finite lattice, plus a tail bound for the declared
/// infinite-lattice parent when the lattice is a ℤ truncation.
#[derive(Debug, Clone, Copy)]
pub struct FConstants {
    /// sup_x Σ_y F(d(x,y)), exact on the truncation.
    pub f_norm: f64,
    /// sup_{x,y} Σ_z F(d(x,z))F(d(z,y)) / F(d(x,y)), exact on the truncation.
    pub c_f: f64,
    /// Upper bound on the ℤ-parent row-sum tail missed by the truncation
    /// (None for grids/custom lattices).
    pub f_norm_tail: Option<f64>,
    /// Number of sites the sums ran over.
    pub truncation_sites: usize,
}

/// Exact summation of ‖F‖ and c_F over the finite lattice.
pub fn f_constants(f: &FFunction, lattice: &Lattice) -> FConstants {
    let n = lattice.len();
    assert!(n > 0);
    // Memoized distance table; triple loop below reuses it.
    let mut dist = vec![0.0f64; n * n];
    for a in 0..n {
        for b in 0..n {
            dist[a * n + b] = lattice.dist(a, b);
        }
    }
    let fv: Vec<f64> = dist.iter().map(|&d| f.eval(d)).collect();
    let mut f_norm = 0.0f64;
    for a in 0..n {
        let row: f64 = (0..n).map(|b| fv[a * n + b]).sum();
        f_norm = f_norm.max(row);
    }
    let mut c_f = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let conv: f64 = (0..n).map(|z| fv[a * n + z] * fv[z * n + b]).sum();
            c_f = c_f.max(conv / fv[a * n + b]);
        }
    }
    // Chain truncation of ℤ: the best-covered row (the center one) still
    // misses Σ_{k>R} 2·F(k) with R = half the diameter; bound that by the
    // geometric/integral comparison.
    let f_norm_tail = match lattice.kind() {
        LatticeKind::Chain => {
            let r = (lattice.diameter() / 2.0).floor();
            Some(2.0 * f_tail_bound(f, r))
        }
        _ => None,
    };
    FConstants { f_norm, c_f, f_norm_tail, truncation_sites: n }
    }

/// Upper bound on Σ_{k>R} F(k) for integer k on ℤ.
fn f_tail_bound(f: &FFunction, r: f64) -> f64 {
    if f.mu > 0.0 {
        // Geometric domination: F(k) ≤ F(R+1)·e^{−μ(k−R−1)} for k ≥ R+1.
        f.eval(r + 1.0) / (1.0 - (-f.mu).exp())
    } else {
        // Integral comparison for the pure power law: Σ_{k>R}(1+k)^{−(ν+1)}
        // ≤ ∫_R^∞ (1+s)^{−(ν+1)} ds = (1+R)^{−ν}/ν.
        (1.0 + r).powf(-f.nu) / f.nu
    }
}

/// Regularity constants: smallest κ with sup_x |𝔅_r(x)| ≤ κ r^ν over all
/// integer radii, and the smallest κ_a3 closing the boundary-growth
/// inequality over a caller-supplied family of test regions.
#[derive(Debug, Clone, Copy)]
pub struct GrowthConstants {
    pub nu: f64,
    pub kappa: f64,
    pub kappa_a3: f64,
}

/// Exhaustive evaluation of the regularity constants. `range` is the
/// interaction range 𝔯 entering the boundary-growth inequality
/// |∂X(n+𝔯)| ≤ κ_a3 |∂X(𝔯)| n^ν; `test_regions` supplies the (X, n) family
/// (all integer n up to the diameter are checked for each X).
pub fn growth_constants(lattice: &Lattice, range: f64, nu: f64, test_regions: &[Region]) -> Result<GrowthConstants> {
    if nu < 1.0 {
        return Err(Error::BadConstants("nu must be >= 1".into()));
    }
    let diam = lattice.diameter().max(1.0) as usize;
    let mut kappa = 0.0f64;
    for r in 1..=diam {
        let mut ball_max = 0usize;
        for x in 0..lattice.len() {
            let ball = (0..lattice.len()).filter(|&y| lattice.dist(x, y) <= r as f64).count();
            ball_max = ball_max.max(ball);
        }
        kappa = kappa.max(ball_max as f64 / (r as f64).powf(nu));
    }
    let mut kappa_a3 = 0.0f64;
    for x in test_regions {
        if x.is_empty() || x.complement(lattice).is_empty() {
            continue;
        }
        let base = r_boundary(lattice, x, range)?.len();
        if base == 0 {
            continue;
        }
        for n in 1..=diam {
            let grown = r_boundary(lattice, x, n as f64 + range)?.len();
            kappa_a3 = kappa_a3.max(grown as f64 / (base as f64 * (n as f64).powf(nu)));
        }
    }
    Ok(GrowthConstants { nu, kappa, kappa_a3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn distance_basics() {
        let lat = Lattice::chain_range(-5, 10, 2);
        let s = |c: i64| lat.site_at(&[c]).unwrap();
        let a = Region::new(vec![s(0)]);
        let b = Region::new(vec![s(5)]);
        assert_eq!(distance(&lat, &a, &b).unwrap(), 5.0);
        let a2 = Region::new(vec![s(0), s(1)]);
        let b2 = Region::new(vec![s(1), s(2)]);
        assert_eq!(distance(&lat, &a2, &b2).unwrap(), 0.0);
        // brute-force over all 12 pairs
        let a3 = Region::new((0..=3).map(s).collect());
        let b3 = Region::new((7..=9).map(s).collect());
        assert_eq!(distance(&lat, &a3, &b3).unwrap(), 4.0);
        assert!(matches!(distance(&lat, &Region::empty(), &b3), Err(Error::EmptyRegion)));
    }

    #[test]
    fn r_boundary_matches_enumeration() {
        let lat = Lattice::chain_range(-5, 10, 2);
        let s = |c: i64| lat.site_at(&[c]).unwrap();
        let x = Region::new((0..=5).map(s).collect());
        let b = r_boundary(&lat, &x, 2.0).unwrap();
        let expect = Region::new([-2, -1, 0, 1, 4, 5, 6, 7].iter().map(|&c| s(c)).collect());
        assert_eq!(b, expect);
        assert_eq!(b.len(), 8);
        // r = 0 on an integer lattice: no site sits at distance 0 from the other side
        assert!(r_boundary(&lat, &x, 0.0).unwrap().is_empty());
        // full-volume cut is rejected
        assert!(matches!(r_boundary(&lat, &lat.full_region(), 1.0), Err(Error::FullVolume)));
    }

    #[test]
    fn r_boundary_on_grid() {
        let lat = Lattice::grid(5, 5, 2);
        let center = lat.site_at(&[2, 2]).unwrap();
        let x = Region::new(vec![center]);
        let b = r_boundary(&lat, &x, 1.0).unwrap();
        assert_eq!(b.len(), 5); // site + 4 neighbors
        assert!(b.contains(center));
    }

    #[test]
    fn interior_and_thicken() {
        let lat = Lattice::chain(10, 2);
        let x = Region::interval(0, 5);
        // both-sided cut: on the ℤ window [-5..10] the interval {0..5} loses
        // both endpoints at depth 1
        let wide = Lattice::chain_range(-5, 10, 2);
        let s = |c: i64| wide.site_at(&[c]).unwrap();
        let xw = Region::new((0..=5).map(s).collect());
        assert_eq!(interior(&wide, &xw, 1.0), Region::new((1..=4).map(s).collect()));
        assert_eq!(interior(&lat, &x, 20.0), Region::empty());
        assert_eq!(interior(&lat, &x, 0.0), x);
        let y = Region::new(vec![2, 3]);
        assert_eq!(thicken(&lat, &y, 2.0), Region::interval(0, 5));
        assert_eq!(thicken(&lat, &y, 0.0), y);
        // decomposition X(n) = X_int(n) ⊔ ∂X(n)
        for n in 0..6 {
            let nn = n as f64;
            let t = thicken(&lat, &y, nn);
            let i = interior(&lat, &y, nn);
            let b = r_boundary(&lat, &y, nn).unwrap();
            assert_eq!(t, i.union(&b));
            assert!(i.intersection(&b).is_empty());
        }
    }

    #[test]
    fn interior_of_left_edge_interval() {
        // Sites at the lattice edge are deep: only the cut to X^c counts.
        let lat = Lattice::chain(10, 2);
        let x = Region::interval(0, 5);
        assert_eq!(interior(&lat, &x, 1.0), Region::new(vec![0, 1, 2, 3, 4]));
        assert_eq!(interior(&lat, &x, 2.0), Region::new(vec![0, 1, 2, 3]));
    }

    #[test]
    fn phi_boundary_by_range() {
        let lat = Lattice::chain(12, 2);
        let x = Region::interval(0, 5);
        // nearest-neighbor supports
        let nn: Vec<Region> = (0..11).map(|i| Region::new(vec![i, i + 1])).collect();
        assert_eq!(phi_boundary(&lat, &x, &nn), Region::new(vec![5]));
        // on-site-only terms never cross
        let onsite: Vec<Region> = (0..12).map(|i| Region::new(vec![i])).collect();
        assert!(phi_boundary(&lat, &x, &onsite).is_empty());
        // range-2 supports
        let r2: Vec<Region> = (0..10).map(|i| Region::new(vec![i, i + 1, i + 2])).collect();
        assert_eq!(phi_boundary(&lat, &x, &r2), Region::new(vec![4, 5]));
    }

    #[test]
    fn f_constants_chain() {
        let f = FFunction::power_law(1.0);
        let lat = Lattice::chain_range(-50, 50, 2);
        let fc = f_constants(&f, &lat);
        let expect: f64 = 1.0 + 2.0 * (1..=50).map(|k| (1.0 + k as f64).powi(-2)).sum::<f64>();
        assert_abs_diff_eq!(fc.f_norm, expect, epsilon = 1e-12);
        // converging to 2·π²/6 − 1
        let limit = std::f64::consts::PI.powi(2) / 3.0 - 1.0;
        assert!(fc.f_norm < limit);
        assert!(fc.f_norm + fc.f_norm_tail.unwrap() >= limit);
        // single site
        let one = Lattice::chain(1, 2);
        let fc1 = f_constants(&f, &one);
        assert_abs_diff_eq!(fc1.f_norm, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fc1.c_f, 1.0, epsilon = 1e-15);
        // tilt only shrinks the row sums
        let ft = f.tilted(0.7);
        let fct = f_constants(&ft, &lat);
        assert!(fct.f_norm <= fc.f_norm);
        assert!(fct.c_f <= fc.c_f);
    }

    #[test]
    fn ball_bound_from_f_norm() {
        // sup_x |𝔅_r(x)| ≤ ‖F‖ / F(r)
        let f = FFunction::power_law(1.0);
        let lat = Lattice::chain(30, 2);
        let fc = f_constants(&f, &lat);
        for r in 0..10 {
            let rr = r as f64;
            let ball_max = (0..lat.len())
                .map(|x| (0..lat.len()).filter(|&y| lat.dist(x, y) <= rr).count())
                .max()
                .unwrap();
            assert!(ball_max as f64 <= fc.f_norm / f.eval(rr) + 1e-9);
        }
    }

    #[test]
    fn growth_constants_chain() {
        let lat = Lattice::chain_range(-40, 40, 2);
        let regions: Vec<Region> = vec![Region::new((40 - 5..=40 + 4).map(|i| i as usize).collect())];
        let g = growth_constants(&lat, 1.0, 1.0, &regions).unwrap();
        // interior balls have 2r+1 sites ≤ 3r for r ≥ 1
        assert_abs_diff_eq!(g.kappa, 3.0, epsilon = 1e-12);
        // |∂X(n+1)| = 2(n+1)+2(n+1) capped by geometry; for an interval well
        // inside the chain |∂X(1)| = 4 and |∂X(n+1)| = 4(n+1) ≤ 2·4·n
        assert!(g.kappa_a3 <= 2.0 + 1e-12);
        assert!(g.kappa_a3 >= 1.0);
        // single-site lattice: |𝔅_1| = 1
        let single = Lattice::chain(1, 2);
        let gs = growth_constants(&single, 1.0, 1.0, &[]).unwrap();
        assert_abs_diff_eq!(gs.kappa, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn json_loading() {
        let lat = Lattice::from_json(r#"{"kind":"chain","extent":[8],"site_dim":2}"#).unwrap();
        assert_eq!(lat.len(), 8);
        assert_eq!(lat.kind(), LatticeKind::Chain);
        let grid = Lattice::from_json(r#"{"kind":"grid","extent":[3,4],"site_dim":3}"#).unwrap();
        assert_eq!(grid.len(), 12);
        assert!(Lattice::from_json(r#"{"kind":"tree","extent":[3],"site_dim":2}"#).is_err());
    }
}
