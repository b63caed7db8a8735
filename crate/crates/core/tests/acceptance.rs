//! Release acceptance suite. Each test checks one numbered criterion and
//! prints a single pass line on success; a failed assertion marks the
//! criterion failed. The transverse-field Ising pipeline cells at L ∈ {10, 12}
//! are computed once and shared across criteria.

use std::sync::OnceLock;

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;

use hastings_lab::entropy;
use hastings_lab::geometry::{self, FFunction, Lattice, Region};
use hastings_lab::hastings::{self, FactorizationConfig, Inequality};
use hastings_lab::linalg;
use hastings_lab::lrbound::{self, LRConstants};
use hastings_lab::model::{self, Couplings, Interaction, InteractionConstants};
use hastings_lab::opspace::{self, sample, Observable, StateVector};
use hastings_lab::spectral::{self, SpectralData};

const SLACK: f64 = 1e-8;

/// One factorization run reduced to what the criteria consume.
struct Cell {
    label: String,
    len: usize,
    ell: f64,
    x: Region,
    defect: f64,
    defect_pos: f64,
    diagnostics: Vec<Inequality>,
    /// O_B · (O_R ⊗ O_L) on the full volume.
    product: Observable,
    /// Cross-cut rank bound from the localization region of O_B.
    d_boundary: usize,
    /// |∂X(𝔯)|
    boundary_r: usize,
}

struct Shared {
    lat10: Lattice,
    spec10: SpectralData,
    x10: Region,
    lat12: Lattice,
    spec12: SpectralData,
    x12: Region,
    phi12: Interaction,
    ic12: InteractionConstants,
    lr12: LRConstants,
    cells: Vec<Cell>,
}

fn build_cells(
    lat: &Lattice,
    spec: &SpectralData,
    phi: &Interaction,
    ic: &InteractionConstants,
    lr: &LRConstants,
    x: &Region,
) -> Vec<Cell> {
    let vol = lat.full_region();
    let range = phi.range();
    let boundary_r = geometry::r_boundary(lat, x, range).unwrap().len();
    [1.0f64, 2.0]
        .iter()
        .map(|&ell| {
            let cfg = FactorizationConfig::new(x.clone(), vol.clone(), ell);
            let res = hastings::factorize(lat, &cfg, phi, spec, ic, lr).unwrap();
            let res = hastings::positivize(lat, spec, res).unwrap();
            let product = res.product_observable(lat).unwrap();
            let d_boundary = lat.region_dim(&res.o_b.support.intersection(x));
            Cell {
                label: format!("L={} ell={}", lat.len(), ell),
                len: lat.len(),
                ell,
                x: x.clone(),
                defect: res.defect,
                defect_pos: res.defect_pos.unwrap(),
                diagnostics: res.diagnostics,
                product,
                d_boundary,
                boundary_r,
            }
        })
        .collect()
}

fn shared() -> &'static Shared {
    static SHARED: OnceLock<Shared> = OnceLock::new();
    SHARED.get_or_init(|| {
        let f = FFunction::power_law(1.0);
        let mut cells = Vec::new();

        let lat10 = Lattice::chain(10, 2);
        let vol10 = lat10.full_region();
        let phi10 = model::preset(&lat10, "tfim", &Couplings { g: 2.0, ..Default::default() }, &vol10).unwrap();
        let ic10 = model::constants(&lat10, &phi10, &f);
        let lr10 = lrbound::lr_constants(&lat10, &phi10, &f, 1.0).unwrap();
        let h10 = model::local_hamiltonian(&lat10, &phi10, &vol10).unwrap();
        let spec10 = spectral::diagonalize(&lat10, &h10, 1e-8).unwrap();
        let x10 = Region::interval(3, 6);
        cells.extend(build_cells(&lat10, &spec10, &phi10, &ic10, &lr10, &x10));

        let lat12 = Lattice::chain(12, 2);
        let vol12 = lat12.full_region();
        let phi12 = model::preset(&lat12, "tfim", &Couplings { g: 2.0, ..Default::default() }, &vol12).unwrap();
        let ic12 = model::constants(&lat12, &phi12, &f);
        let lr12 = lrbound::lr_constants(&lat12, &phi12, &f, 1.0).unwrap();
        let h12 = model::local_hamiltonian(&lat12, &phi12, &vol12).unwrap();
        let spec12 = spectral::diagonalize(&lat12, &h12, 1e-8).unwrap();
        let x12 = Region::interval(4, 7);
        cells.extend(build_cells(&lat12, &spec12, &phi12, &ic12, &lr12, &x12));

        Shared { lat10, spec10, x10, lat12, spec12, x12, phi12, ic12, lr12, cells }
    })
}

fn ground_projector_norm_diff(spec: &SpectralData, p: &Array2<Complex64>) -> f64 {
    let gs = &spec.ground.amplitudes;
    let dim = gs.len();
    let mut d = p.to_owned();
    for i in 0..dim {
        for j in 0..dim {
            d[[i, j]] -= gs[i] * gs[j].conj();
        }
    }
    linalg::op_norm_hermitian(&d)
}

#[test]
fn criterion_01_convolution_exactness() {
    // ‖e^{−H²/4α} − P₀‖ must equal e^{−γ²/4α} to 1e−10 on every gapped
    // test Hamiltonian, for α ∈ {0.2, 1, 5}.
    let alphas = [0.2f64, 1.0, 5.0];
    let mut cases = 0usize;
    let mut check = |lat: &Lattice, phi: &Interaction| {
        let vol = lat.full_region();
        let h = model::local_hamiltonian(lat, phi, &vol).unwrap();
        let spec = spectral::diagonalize(lat, &h, 1e-8).unwrap();
        for &alpha in &alphas {
            let (p, _) = spectral::heat_projector(&spec, alpha);
            let measured = ground_projector_norm_diff(&spec, &p.matrix);
            let closed = (-spec.gap * spec.gap / (4.0 * alpha)).exp();
            assert!(
                (measured - closed).abs() <= 1e-10,
                "L={} alpha={alpha}: measured {measured} vs closed form {closed}",
                lat.len()
            );
            cases += 1;
        }
    };
    for len in 2..=6 {
        let lat = Lattice::chain(len, 2);
        let phi = model::preset(&lat, "onsite", &Couplings::default(), &lat.full_region()).unwrap();
        check(&lat, &phi);
    }
    for &g in &[1.5f64, 2.0] {
        for len in 6..=10 {
            let lat = Lattice::chain(len, 2);
            let phi = model::preset(&lat, "tfim", &Couplings { g, ..Default::default() }, &lat.full_region()).unwrap();
            check(&lat, &phi);
        }
    }
    println!("criterion 01 (convolution exactness): PASS ({cases} cases)");
}

#[test]
fn criterion_02_lieb_robinson_dominance() {
    let lat = Lattice::chain(8, 2);
    let vol = lat.full_region();
    let f = FFunction::power_law(1.0);
    let phi = model::preset(&lat, "tfim", &Couplings { g: 1.5, ..Default::default() }, &vol).unwrap();
    let consts = lrbound::lr_constants(&lat, &phi, &f, 1.0).unwrap();
    let h = model::local_hamiltonian(&lat, &phi, &vol).unwrap();
    let spec = spectral::diagonalize(&lat, &h, 1e-8).unwrap();
    let a = Observable::new(Region::new(vec![1]), model::pauli_z(), &lat).unwrap();
    let b = Observable::new(Region::new(vec![6]), model::pauli_z(), &lat).unwrap();
    let y = Region::interval(0, 5);
    for k in 1..=8 {
        let t = 0.25 * k as f64;
        let (measured, thm_margin, cor_margin) =
            lrbound::lr_empirical(&lat, &a, &b, &y, t, &phi, &f, &consts, &spec).unwrap();
        assert!(thm_margin >= -1e-9, "t={t}: measured {measured} beats the power-law bound");
        assert!(cor_margin >= -1e-9, "t={t}: measured {measured} beats the exponential bound");
    }
    println!("criterion 02 (Lieb-Robinson dominance): PASS (8 cases)");
}

#[test]
fn criterion_03_truncation_bound() {
    let sh = shared();
    let lat = &sh.lat12;
    let a = Observable::new(
        Region::new(vec![5, 6]),
        linalg::kron(&model::pauli_z(), &model::pauli_z()),
        lat,
    )
    .unwrap();
    let inner = Region::interval(2, 9);
    let outer = lat.full_region();
    for &t in &[0.25f64, 0.5, 1.0] {
        let (measured, rhs) =
            lrbound::truncation_check(lat, &a, &inner, &outer, t, &sh.phi12, &sh.ic12, &sh.lr12, &sh.spec12)
                .unwrap();
        assert!(measured <= rhs + 1e-9, "t={t}: measured {measured} vs bound {rhs}");
    }
    println!("criterion 03 (truncation bound): PASS (3 cases)");
}

#[test]
fn criterion_04_conditional_expectation_axioms() {
    let mut rng = sample::rng(4);
    for trial in 0..100 {
        let len = 2 + trial % 7; // up to 8 sites, dim ≤ 2^8
        let lat = Lattice::chain(len, 2);
        let vol = lat.full_region();
        let dim = lat.region_dim(&vol);
        let x = loop {
            let sites: Vec<usize> = (0..len).filter(|_| rng.gen_bool(0.5)).collect();
            if !sites.is_empty() {
                break Region::new(sites);
            }
        };
        let a = Observable::new(vol.clone(), sample::hermitian(dim, &mut rng), &lat).unwrap();
        // idempotence
        let e = opspace::cond_expect(&lat, &a, &x);
        let e_emb = opspace::embed(&lat, &e, &vol).unwrap();
        let e2 = opspace::cond_expect(&lat, &e_emb, &x);
        let dev = (&e.matrix - &e2.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-10, "idempotence deviation {dev}");
        // positivity: E(B†B) ⪰ 0
        let raw = sample::hermitian(dim, &mut rng);
        let pos_m = raw.t().mapv(|z| z.conj()).dot(&raw);
        let pos = Observable::new(vol.clone(), pos_m, &lat).unwrap();
        let ep = opspace::cond_expect(&lat, &pos, &x);
        let (w, _) = linalg::eigh(ep.matrix.clone()).unwrap();
        assert!(w[0] >= -1e-10, "positivity violated: min eigenvalue {}", w[0]);
        // bimodule: E(BAC) = B E(A) C for B, C supported in X
        let dx = lat.region_dim(&x);
        let bm = Observable::new(x.clone(), sample::hermitian(dx, &mut rng), &lat).unwrap();
        let cm = Observable::new(x.clone(), sample::hermitian(dx, &mut rng), &lat).unwrap();
        let b_emb = opspace::embed(&lat, &bm, &vol).unwrap();
        let c_emb = opspace::embed(&lat, &cm, &vol).unwrap();
        let bac = Observable::new(vol.clone(), b_emb.matrix.dot(&a.matrix).dot(&c_emb.matrix), &lat).unwrap();
        let lhs = opspace::cond_expect(&lat, &bac, &x);
        let rhs = bm.matrix.dot(&e.matrix).dot(&cm.matrix);
        let dev = (&lhs.matrix - &rhs).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(dev <= 1e-10, "bimodule deviation {dev}");
        // contraction
        assert!(e.op_norm() <= a.op_norm() + 1e-10);
        // twirl identity against the explicit Weyl-Heisenberg average
        if dx <= 8 {
            let t = opspace::twirl(&lat, &a, &x);
            let w = opspace::weyl_twirl(&lat, &a, &x).unwrap();
            let t_emb = opspace::embed(&lat, &t, &w.support).unwrap();
            let dev = (&t_emb.matrix - &w.matrix).iter().map(|z| z.norm()).fold(0.0f64, f64::max);
            assert!(dev <= 1e-12, "twirl vs Weyl average deviation {dev}");
        }
    }
    println!("criterion 04 (conditional-expectation axioms): PASS (100 instances)");
}

#[test]
fn criterion_05_factorization_inequality_chain() {
    let sh = shared();
    // every named link of the chain must be present and hold with slack
    let required = [
        "filter_ground_r",
        "filter_ground_b",
        "filtered_interior_on_ground",
        "filtered_exterior_on_ground",
        "interior_localization",
        "boundary_localization",
        "boundary_term_norm",
        "boundary_hamiltonian_norm",
        "exterior_localization",
        "window_interior_on_ground",
        "window_exterior_on_ground",
        "quadrature_vs_heat_kernel",
        "quadrature_chain",
        "ground_projector_vs_windows",
        "product_on_ground",
        "window_commutation",
        "interior_window_membership",
        "exterior_window_membership",
        "positive_defect_chain",
        "positive_defect_envelope",
    ];
    for cell in &sh.cells {
        for name in required {
            assert!(
                cell.diagnostics.iter().any(|q| q.name == name),
                "{}: missing inequality {name}",
                cell.label
            );
        }
        for q in &cell.diagnostics {
            assert!(
                q.passed(SLACK),
                "{}: {} failed (lhs {}, rhs {}, margin {})",
                cell.label,
                q.name,
                q.lhs,
                q.rhs,
                q.margin
            );
        }
        // positivization envelope restated directly on the reported defects
        assert!(cell.defect_pos <= 6.0 * cell.defect.powf(0.25) + SLACK, "{}", cell.label);
    }
    println!("criterion 05 (factorization inequality chain): PASS (4 pipeline cells)");
}

#[test]
fn criterion_06_defect_behavior() {
    // onsite product ground state, L=8, X mid-2, ell=1
    let lat = Lattice::chain(8, 2);
    let vol = lat.full_region();
    let f = FFunction::power_law(1.0);
    let phi = model::preset(&lat, "onsite", &Couplings::default(), &vol).unwrap();
    let ic = model::constants(&lat, &phi, &f);
    let lr = lrbound::lr_constants(&lat, &phi, &f, 1.0).unwrap();
    let h = model::local_hamiltonian(&lat, &phi, &vol).unwrap();
    let spec = spectral::diagonalize(&lat, &h, 1e-8).unwrap();
    let cfg = FactorizationConfig::new(Region::interval(3, 4), vol, 1.0);
    let res = hastings::factorize(&lat, &cfg, &phi, &spec, &ic, &lr).unwrap();
    // regression threshold frozen from the first validated run; the value is
    // the heat-kernel tail e^{−γ²/4α} = e^{−1} at gap 2, α = 1
    assert!(res.defect <= 0.3678794411715 + 1e-10, "onsite defect {}", res.defect);
    // larger localization scale must not worsen the tfim defect at L=12
    let sh = shared();
    let d1 = sh.cells.iter().find(|c| c.len == 12 && c.ell == 1.0).unwrap().defect;
    let d2 = sh.cells.iter().find(|c| c.len == 12 && c.ell == 2.0).unwrap().defect;
    assert!(d2 <= d1 + 1e-6, "defect(ell=2) = {d2} vs defect(ell=1) = {d1}");
    println!("criterion 06 (defect behavior): PASS");
}

#[test]
fn criterion_07_fidelity_identity() {
    let mut rng = sample::rng(7);
    for trial in 0..50 {
        let len = 2 + trial % 9; // dim ≤ 2^10
        let lat = Lattice::chain(len, 2);
        let vol = lat.full_region();
        let omega = StateVector::new(vol.clone(), sample::state(lat.region_dim(&vol), &mut rng), &lat).unwrap();
        let cut = 1 + rng.gen_range(0..len - 1);
        let x = Region::interval(0, cut - 1);
        let (p, cross) = entropy::fidelity(&lat, &omega, &x).unwrap();
        assert!((p - cross).abs() <= 1e-10, "trial {trial}: {p} vs {cross}");
    }
    let sh = shared();
    for (lat, spec, x) in [(&sh.lat10, &sh.spec10, &sh.x10), (&sh.lat12, &sh.spec12, &sh.x12)] {
        let (p, cross) = entropy::fidelity(lat, &spec.ground, x).unwrap();
        assert!((p - cross).abs() <= 1e-10, "pipeline L={}: {p} vs {cross}", lat.len());
    }
    println!("criterion 07 (fidelity identity): PASS (52 states)");
}

#[test]
fn criterion_08_gibbs_and_sigma_checks() {
    let sh = shared();
    let spectrum = entropy::schmidt(&sh.lat10, &sh.spec10.ground, &sh.x10).unwrap();
    let s = entropy::entropy(&spectrum);
    // constructed coarse-grained reference distribution
    let params = entropy::QDistribution::new(
        4,
        spectrum.fidelity(),
        2.0,
        0.5,
        3.0,
        1.0,
        2.0,
        Some(sh.lat10.region_dim(&sh.x10)),
    )
    .unwrap();
    let cross = entropy::q_bound(&spectrum, &params).unwrap();
    assert!(s <= cross + 1e-9, "entropy {s} vs constructed-q cross entropy {cross}");
    // Gibbs inequality against random distributions
    let mut rng = sample::rng(8);
    let n = spectrum.lambdas().len();
    for trial in 0..10_000 {
        let mut q: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-6..1.0)).collect();
        let total: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= total);
        let c = entropy::cross_entropy(&spectrum, &q).unwrap();
        assert!(s <= c + 1e-9, "trial {trial}: entropy {s} vs cross entropy {c}");
    }
    // sigma construction on every pipeline output
    for cell in &sh.cells {
        let (lat, spec) = if cell.len == 10 { (&sh.lat10, &sh.spec10) } else { (&sh.lat12, &sh.spec12) };
        let rep = entropy::sigma_check(lat, &spec.ground, &cell.x, &cell.product, cell.d_boundary).unwrap();
        assert!(
            rep.pass(),
            "{}: rank margin {}, defect margin {}",
            cell.label,
            rep.rank_margin(),
            rep.defect_margin()
        );
    }
    println!("criterion 08 (Gibbs / q-distribution and sigma checks): PASS");
}

#[test]
fn criterion_09_entropy_bound_validity() {
    let sh = shared();
    for cell in &sh.cells {
        let (lat, spec) = if cell.len == 10 { (&sh.lat10, &sh.spec10) } else { (&sh.lat12, &sh.spec12) };
        let spectrum = entropy::schmidt(lat, &spec.ground, &cell.x).unwrap();
        let s = entropy::entropy(&spectrum);
        let p_x = spectrum.fidelity();
        // any admissible (C1 > 1, C2 > 0) with C1|∂X(r)|e^{−C2 ell} ≥ defect
        let c2 = 0.5;
        let c1 = (cell.defect * (c2 * cell.ell).exp() / cell.boundary_r as f64).max(0.0) + 2.0;
        assert!(c1 * cell.boundary_r as f64 * (-c2 * cell.ell).exp() >= cell.defect);
        let bound = entropy::entropy_bound(cell.boundary_r, p_x, c2, 3.0, 1.0, 2.0, c1).unwrap();
        assert!(s <= bound, "{}: entropy {s} vs bound {bound}", cell.label);
    }
    println!("criterion 09 (entropy bound validity): PASS (4 pipeline cells)");
}

#[test]
fn criterion_10_area_law_saturation() {
    let sh = shared();
    let reports = entropy::area_sweep(&sh.lat12, &sh.spec12, &[1, 2, 3, 4, 5, 6]).unwrap();
    let s: Vec<f64> = reports.iter().map(|r| r.s).collect();
    // increments s(m+1) − s(m) for m = 2..5: positive, decreasing within 1e−3
    let mut last = f64::INFINITY;
    for m in 2..=5 {
        let inc = s[m] - s[m - 1];
        assert!(inc > 0.0, "increment at m={m} not positive: {inc}");
        assert!(inc <= last + 1e-3, "increment at m={m} not decreasing: {inc} after {last}");
        last = inc;
    }
    // regression values frozen from an independent sparse-eigensolver oracle
    assert!((s[1] - 0.087994291259514).abs() <= 1e-6, "s(2) = {}", s[1]);
    assert!((s[5] - 0.088840994841582).abs() <= 1e-6, "s(6) = {}", s[5]);
    // the half-chain entropy sits below the critical-point value
    let lat = &sh.lat12;
    let vol = lat.full_region();
    let phi_crit = model::preset(lat, "tfim", &Couplings { g: 1.0, ..Default::default() }, &vol).unwrap();
    let h_crit = model::local_hamiltonian(lat, &phi_crit, &vol).unwrap();
    let spec_crit = spectral::diagonalize(lat, &h_crit, 1e-8).unwrap();
    let half = Region::interval(0, 5);
    let s_crit = entropy::entropy(&entropy::schmidt(lat, &spec_crit.ground, &half).unwrap());
    // frozen from an independent sparse-eigensolver oracle
    assert!((s_crit - 0.396516211085873).abs() <= 1e-6, "critical half-chain entropy {s_crit}");
    assert!(s[5] < s_crit, "half-chain {} not below critical value {s_crit}", s[5]);
    println!("criterion 10 (area-law saturation): PASS");
}

// --- criterion 11: geometry against brute-force set builders ---

fn bf_r_boundary(lat: &Lattice, x: &Region, r: f64) -> Vec<usize> {
    let inx: Vec<bool> = (0..lat.len()).map(|s| x.contains(s)).collect();
    let mut out = Vec::new();
    for s in 0..lat.len() {
        let cross_min = (0..lat.len())
            .filter(|&y| inx[y] != inx[s])
            .map(|y| lat.dist(s, y))
            .fold(f64::INFINITY, f64::min);
        if cross_min <= r {
            out.push(s);
        }
    }
    out
}

fn bf_interior(lat: &Lattice, x: &Region, n: f64) -> Vec<usize> {
    (0..lat.len())
        .filter(|&s| x.contains(s))
        .filter(|&s| {
            (0..lat.len())
                .filter(|&y| !x.contains(y))
                .map(|y| lat.dist(s, y))
                .fold(f64::INFINITY, f64::min)
                > n
        })
        .collect()
}

fn bf_thicken(lat: &Lattice, x: &Region, n: f64) -> Vec<usize> {
    (0..lat.len())
        .filter(|&s| x.iter().map(|y| lat.dist(s, y)).fold(f64::INFINITY, f64::min) <= n)
        .collect()
}

fn bf_phi_boundary(lat: &Lattice, x: &Region, supports: &[Region]) -> Vec<usize> {
    (0..lat.len())
        .filter(|&s| x.contains(s))
        .filter(|&s| {
            supports.iter().any(|y| y.contains(s) && y.iter().any(|z| !x.contains(z)))
        })
        .collect()
}

#[test]
fn criterion_11_geometry_oracle_equivalence() {
    let chain = Lattice::chain_range(-20, 20, 2);
    let grid = Lattice::grid(10, 10, 2);
    let mut rng = sample::rng(11);
    for (li, lat) in [&chain, &grid].into_iter().enumerate() {
        // nearest-neighbor interaction supports (range 1)
        let mut supports = Vec::new();
        for a in 0..lat.len() {
            for b in (a + 1)..lat.len() {
                if lat.dist(a, b) == 1.0 {
                    supports.push(Region::new(vec![a, b]));
                }
            }
        }
        for _ in 0..250 {
            let p = rng.gen_range(0.1..0.9);
            let x = loop {
                let sites: Vec<usize> = (0..lat.len()).filter(|_| rng.gen_bool(p)).collect();
                if !sites.is_empty() && sites.len() < lat.len() {
                    break Region::new(sites);
                }
            };
            for r in [0.0, 1.0, 2.0, 5.0] {
                let got = geometry::r_boundary(lat, &x, r).unwrap();
                assert_eq!(got.sites(), bf_r_boundary(lat, &x, r), "lattice {li}, r={r}");
            }
            for n in [0.0, 1.0, 2.0, 3.0] {
                let got = geometry::interior(lat, &x, n);
                assert_eq!(got.sites(), bf_interior(lat, &x, n), "lattice {li}, n={n}");
                let got = geometry::thicken(lat, &x, n);
                assert_eq!(got.sites(), bf_thicken(lat, &x, n), "lattice {li}, n={n}");
            }
            let got = geometry::phi_boundary(lat, &x, &supports);
            assert_eq!(got.sites(), bf_phi_boundary(lat, &x, &supports), "lattice {li}");

            // boundary-comparison inequalities for the range-1 interaction
            let pb = geometry::phi_boundary(lat, &x, &supports).len();
            let b1 = geometry::r_boundary(lat, &x, 1.0).unwrap().len();
            assert!(pb <= b1);
            let mut prev = 0usize;
            for n in [0.0, 1.0, 2.0, 5.0] {
                let bn = geometry::r_boundary(lat, &x, n).unwrap().len();
                assert!(bn >= prev, "boundary not monotone in the width");
                prev = bn;
            }
            for n in [1.0, 2.0] {
                let bn1 = geometry::r_boundary(lat, &x, n + 1.0).unwrap().len();
                let xi = geometry::interior(lat, &x, n);
                assert!(geometry::phi_boundary(lat, &xi, &supports).len() <= bn1);
                let xt = geometry::thicken(lat, &x, n + 1.0);
                assert!(geometry::phi_boundary(lat, &xt, &supports).len() <= bn1);
            }
        }
    }
    println!("criterion 11 (geometry oracle equivalence): PASS (500 regions)");
}

#[test]
fn criterion_12_determinism() {
    let bin = env!("CARGO_BIN_EXE_hastings-lab");
    let base = std::env::temp_dir().join("hastings-lab-acceptance-determinism");
    let mut outputs = Vec::new();
    for run in 0..2 {
        let dir = base.join(format!("run{run}"));
        std::fs::create_dir_all(&dir).unwrap();
        let status = std::process::Command::new(bin)
            .args([
                "factorize", "--model", "tfim", "--L", "10", "--g", "2", "--X", "3:7", "--ell", "1,2",
                "--out",
            ])
            .arg(&dir)
            .stdout(std::process::Stdio::null())
            .status()
            .unwrap();
        assert!(status.success(), "run {run} exited with {status}");
        let csv = std::fs::read(dir.join("factorize.csv")).unwrap();
        let json = std::fs::read(dir.join("factorize.json")).unwrap();
        outputs.push((csv, json));
    }
    assert_eq!(outputs[0].0, outputs[1].0, "CSV outputs differ between identical runs");
    assert_eq!(outputs[0].1, outputs[1].1, "JSON outputs differ between identical runs");
    println!("criterion 12 (determinism): PASS (byte-identical outputs)");
}
