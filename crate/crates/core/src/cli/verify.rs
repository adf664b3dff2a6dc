//! Randomized property suites behind `magslab verify`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid1d::{Grid, GridFunction};
use crate::hartree::{d1_energy, mean_field, NeutralCharge};
use crate::landau::{k_inner, projector_density, sample_packets, wigner, GaussianPacket, HermiteBasis};
use crate::penalty::{FieldStrength, LevelOccupations, Penalty, SpinMode};
use crate::scf::{scf_solve, InitialGuess, ScfConfig};
use crate::state::ChargeProfile;

pub const SUITES: &[&str] = &[
    "penalty",
    "reduction",
    "subdiff",
    "moyal",
    "landau-density",
    "hartree",
    "el",
];

/// One property with its worst observed error.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub suite: &'static str,
    pub property: String,
    pub samples: usize,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

/// Worst-error accumulator for one property.
struct Tally {
    suite: &'static str,
    property: String,
    samples: usize,
    max_error: f64,
    tolerance: f64,
}

impl Tally {
    fn new(suite: &'static str, property: impl Into<String>, tolerance: f64) -> Self {
        Tally {
            suite,
            property: property.into(),
            samples: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    fn add(&mut self, err: f64) {
        self.samples += 1;
        // NaN must fail the check rather than vanish in `max`.
        self.max_error = if err.is_nan() { f64::INFINITY } else { self.max_error.max(err) };
    }

    fn done(self) -> Check {
        Check {
            suite: self.suite,
            property: self.property,
            samples: self.samples,
            max_error: self.max_error,
            tolerance: self.tolerance,
        }
    }
}

/// Runs one suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<Check>> {
    match name {
        "all" => {
            let mut out = Vec::new();
            for s in SUITES {
                out.extend(run_suite(s, seed)?);
            }
            Ok(out)
        }
        "penalty" => penalty_suite(seed),
        "reduction" => reduction_suite(seed),
        "subdiff" => subdiff_suite(seed),
        "moyal" => moyal_suite(seed),
        "landau-density" => landau_density_suite(seed),
        "hartree" => hartree_suite(),
        "el" => el_suite(seed),
        other => Err(Error::Config(format!(
            "unknown suite `{other}`; available: {}, all",
            SUITES.join(", ")
        ))),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn field(rng: &mut ChaCha8Rng) -> FieldStrength {
    // (0.1, 10]
    FieldStrength::new(10.0 - rng.gen_range(0.0..9.9)).expect("positive field")
}

/// Bounds, touch points, periodicity and convexity of both penalties.
pub fn penalty_suite(seed: u64) -> Result<Vec<Check>> {
    const N: usize = 10_000;
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for spin in [SpinMode::Spinless, SpinMode::Zeeman] {
        let tag = if spin.is_spin() { "spin" } else { "spinless" };
        let mut lower = Tally::new("penalty", format!("{tag}: F >= lower bound"), TOL);
        let mut upper = Tally::new("penalty", format!("{tag}: F <= upper bound"), TOL);
        let mut touch_lo = Tally::new("penalty", format!("{tag}: lower bound touched on its lattice"), TOL);
        let mut touch_hi = Tally::new("penalty", format!("{tag}: upper bound touched on its lattice"), TOL);
        let mut period = Tally::new("penalty", format!("{tag}: F - c g^2 periodic"), TOL);
        let mut convex = Tally::new("penalty", format!("{tag}: convexity on random triples"), TOL);
        let mut flat = Tally::new("penalty", format!("{tag}: F = 0 on [0, b/2pi]"), 0.0);
        for _ in 0..N {
            let b = field(&mut rng);
            let p = Penalty::new(b, spin);
            let bv = b.value();
            let c = spin.thomas_fermi();
            let g = rng.gen_range(0.0..=10.0);
            let f = p.value(g)?;
            let (lo, hi) = p.bounds(g);
            let scale = f.abs().max(1.0);
            lower.add((lo - f).max(0.0) / scale);
            upper.add((f - hi).max(0.0) / scale);

            // Touch points: spinless lower on kb/2π, upper on (k+½)b/2π;
            // spin lower on (2k−1)b/2π, upper on k·b/π.
            let unit = bv / TAU;
            let kmax = (10.0 / unit) as u64 / 2;
            let k = rng.gen_range(1..=kmax.max(1));
            let (g_lo, g_hi) = match spin {
                SpinMode::Spinless => (k as f64 * unit, (k as f64 + 0.5) * unit),
                SpinMode::Zeeman => ((2 * k - 1) as f64 * unit, 2.0 * k as f64 * unit),
            };
            touch_lo.add(rel(p.value(g_lo)?, p.bounds(g_lo).0));
            touch_hi.add(rel(p.value(g_hi)?, p.bounds(g_hi).1));

            let shift = match spin {
                SpinMode::Spinless => unit,
                SpinMode::Zeeman => 2.0 * unit,
            };
            let d0 = f - c * g * g;
            let d1 = p.value(g + shift)? - c * (g + shift) * (g + shift);
            period.add((d1 - d0).abs() / p.value(g + shift)?.max(1.0));

            let mut t = [g, rng.gen_range(0.0..=10.0), rng.gen_range(0.0..=10.0)];
            t.sort_by(f64::total_cmp);
            if t[2] > t[0] {
                let s = (t[1] - t[0]) / (t[2] - t[0]);
                let chord = (1.0 - s) * p.value(t[0])? + s * p.value(t[2])?;
                let mid = p.value(t[1])?;
                convex.add((mid - chord).max(0.0) / chord.abs().max(1.0));
            }

            if spin.is_spin() {
                let x = rng.gen_range(0.0..=unit);
                flat.add(p.value(x)?.abs());
            }
        }
        out.extend([lower, upper, touch_lo, touch_hi, period, convex].map(Tally::done));
        if spin.is_spin() {
            out.push(flat.done());
        }
    }
    Ok(out)
}

/// Reduction identity: the optimal Landau filling reproduces `F`, and beats
/// random feasible refillings.
pub fn reduction_suite(seed: u64) -> Result<Vec<Check>> {
    const N: usize = 1000;
    const PERTURBATIONS: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for spin in [SpinMode::Spinless, SpinMode::Zeeman] {
        let tag = if spin.is_spin() { "spin" } else { "spinless" };
        let mut identity = Tally::new("reduction", format!("{tag}: level energy of optimal filling = F"), 1e-10);
        let mut count = Tally::new("reduction", format!("{tag}: optimal filling carries g"), 1e-10);
        let mut bathtub = Tally::new("reduction", format!("{tag}: bathtub optimality"), 1e-12);
        for _ in 0..N {
            let b = field(&mut rng);
            let p = Penalty::new(b, spin);
            let g = rng.gen_range(0.0..=10.0);
            let m = p.optimal_levels(g)?;
            let e = p.level_energy_sum(&m);
            identity.add(rel(e, p.value(g)?));
            count.add(rel(m.weighted_count(spin) * b.level_density(), g));
            for _ in 0..PERTURBATIONS {
                let alt = perturb_filling(&mut rng, &m, spin)?;
                bathtub.add((e - p.level_energy_sum(&alt)).max(0.0) / e.abs().max(1.0));
            }
        }
        out.extend([identity, count, bathtub].map(Tally::done));
    }
    Ok(out)
}

/// Moves weight between two random levels, keeping `Σ w_n m(n)` and `m ∈ [0, 1]`.
fn perturb_filling(rng: &mut ChaCha8Rng, m: &LevelOccupations, spin: SpinMode) -> Result<LevelOccupations> {
    let len = m.len() + 3;
    let mut v: Vec<f64> = (0..len).map(|n| m.get(n)).collect();
    let i = rng.gen_range(0..len);
    let mut j = rng.gen_range(0..len - 1);
    if j >= i {
        j += 1;
    }
    let (wi, wj) = (spin.level_weight(i), spin.level_weight(j));
    // Move charge q = wi·Δm_i = −wj·Δm_j from level j into level i.
    let q_max = (wi * (1.0 - v[i])).min(wj * v[j]);
    let q_min = -(wi * v[i]).min(wj * (1.0 - v[j]));
    if q_max > q_min {
        let q = rng.gen_range(q_min..=q_max);
        v[i] = (v[i] + q / wi).clamp(0.0, 1.0);
        v[j] = (v[j] - q / wj).clamp(0.0, 1.0);
    }
    LevelOccupations::new(v)
}

/// One-sided derivatives against finite differences, and the duality
/// `g ∈ h_b(y) ⇔ y ∈ ∂F(g)`.
pub fn subdiff_suite(seed: u64) -> Result<Vec<Check>> {
    const N: usize = 10_000;
    const STEP: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for spin in [SpinMode::Spinless, SpinMode::Zeeman] {
        let tag = if spin.is_spin() { "spin" } else { "spinless" };
        let mut right = Tally::new("subdiff", format!("{tag}: f+ vs forward difference"), 10.0 * STEP);
        let mut left = Tally::new("subdiff", format!("{tag}: f- vs backward difference"), 10.0 * STEP);
        let mut dual = Tally::new("subdiff", format!("{tag}: membership duality mismatches"), 0.0);
        for _ in 0..N {
            let b = field(&mut rng);
            let p = Penalty::new(b, spin);
            let g = rng.gen_range(STEP..=10.0);
            // One-sided quotients only see one piece when no kink lies within a step.
            if !kink_within(&p, g, STEP) {
                let s = p.subdiff(g)?;
                let f = p.value(g)?;
                right.add(((p.value(g + STEP)? - f) / STEP - s.right_slope).abs());
                left.add(((f - p.value(g - STEP)?) / STEP - s.left_slope).abs());
            }
            let (g, y) = duality_pair(&mut rng, &p)?;
            let a = p.fill(y)?.contains(g);
            let bb = p.subdiff(g)?.contains(y);
            dual.add(if a == bb { 0.0 } else { 1.0 });
        }
        out.extend([right, left, dual].map(Tally::done));
    }
    Ok(out)
}

fn kink_within(p: &Penalty, g: f64, step: f64) -> bool {
    let unit = p.field().level_density();
    let x = g / unit;
    let nearest = match p.spin() {
        SpinMode::Spinless => x.round(),
        SpinMode::Zeeman => (2.0 * ((x + 1.0) / 2.0).round() - 1.0).max(0.0),
    };
    (x - nearest).abs() * unit <= 2.0 * step
}

/// Random `(g, y)` with `y ≥ 0`, mixing members, non-members and kinks.
fn duality_pair(rng: &mut ChaCha8Rng, p: &Penalty) -> Result<(f64, f64)> {
    let b = p.field().value();
    let k = rng.gen_range(0..40u64);
    Ok(match rng.gen_range(0..4) {
        // Kink with a slope inside (or just outside) its jump.
        0 => {
            let g = p.edge(k);
            let s = p.subdiff(g)?;
            (g, rng.gen_range(s.left_slope - 0.1 * b..=s.right_slope + 0.1 * b).max(0.0))
        }
        // Plateau slope with an occupation on (or off) that plateau.
        1 => {
            let y = p.plateau_slope(k);
            let g = rng.gen_range(p.edge(k)..=p.edge(k + 1) + 0.2 * (p.edge(k + 1) - p.edge(k)));
            (g, y)
        }
        // Member off the lattice: a point of the fill set of a random slope.
        2 => {
            let y = rng.gen_range(0.0..=40.0 * b);
            let f = p.fill(y)?;
            (rng.gen_range(f.lower..=f.upper), y)
        }
        _ => (rng.gen_range(0.0..=10.0), rng.gen_range(0.0..=40.0 * b)),
    })
}

/// Moyal identity `⟨W(φ_{n₁},g₁), W(φ_{n₂},g₂)⟩ = ⟨φ_{n₁},φ_{n₂}⟩⟨g₁,g₂⟩` for all `n₁, n₂ ≤ 6`.
pub fn moyal_suite(seed: u64) -> Result<Vec<Check>> {
    const SAMPLES: usize = 50;
    const NMAX: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new("moyal", "|<W1,W2> - <phi1,phi2><g1,g2>|, n1,n2 <= 6", 1e-6);
    for _ in 0..SAMPLES {
        let b = FieldStrength::new(rng.gen_range(0.5..=4.0))?;
        let mix1 = random_mixture(&mut rng);
        let mix2 = random_mixture(&mut rng);
        let support = mix1.iter().chain(&mix2).map(|p| p.center.abs() + 8.0 * p.width).fold(0.0, f64::max);
        let basis = HermiteBasis::sized_for(b, NMAX, support)?;
        let k = basis.k_grid();
        let g1 = sample_packets(&k, &mix1);
        let g2 = sample_packets(&k, &mix2);
        let gg = k_inner(&k, &g1, &g2)?;
        let w1 = (0..=NMAX).map(|n| wigner(&basis, n, &g1)).collect::<Result<Vec<_>>>()?;
        let w2 = (0..=NMAX).map(|n| wigner(&basis, n, &g2)).collect::<Result<Vec<_>>>()?;
        let phis = (0..=NMAX).map(|n| basis.sampled(n)).collect::<Result<Vec<_>>>()?;
        for n1 in 0..=NMAX {
            for n2 in 0..=NMAX {
                let lhs = w1[n1].inner(&w2[n2])?;
                let prod: Vec<f64> = phis[n1].iter().zip(&phis[n2]).map(|(a, b)| a * b).collect();
                let rhs = gg * basis.x1_grid().quadrature(&prod);
                tally.add((lhs - rhs).norm());
            }
        }
    }
    Ok(vec![tally.done()])
}

fn random_mixture(rng: &mut ChaCha8Rng) -> Vec<GaussianPacket> {
    let count = rng.gen_range(1..=3);
    (0..count)
        .map(|_| GaussianPacket {
            amplitude: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            center: rng.gen_range(-2.0..2.0),
            width: rng.gen_range(0.5..1.5),
            momentum: rng.gen_range(-1.0..1.0),
        })
        .collect()
}

/// Projector diagonal of each level equals `b/2π` at random points.
pub fn landau_density_suite(seed: u64) -> Result<Vec<Check>> {
    const POINTS: usize = 25;
    const NMAX: usize = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut value = Tally::new("landau-density", "|rho_Pn - b/2pi|, n <= 6, b in {0.5, 1, 4}", 1e-6);
    let mut spread = Tally::new("landau-density", "variance of rho_Pn over points", 1e-10);
    for bv in [0.5, 1.0, 4.0] {
        let b = FieldStrength::new(bv)?;
        let basis = HermiteBasis::sized_for(b, NMAX, 5.0 * bv)?;
        let points: Vec<[f64; 2]> = (0..POINTS)
            .map(|_| [rng.gen_range(-5.0..=5.0), rng.gen_range(-10.0..=10.0)])
            .collect();
        for n in 0..=NMAX {
            let vals = points
                .iter()
                .map(|&x| projector_density(&basis, n, x))
                .collect::<Result<Vec<_>>>()?;
            for v in &vals {
                value.add((v - bv / TAU).abs());
            }
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            spread.add(var);
        }
    }
    Ok(vec![value.done(), spread.done()])
}

/// Tent oracle for `D₁`, the duality `D₁(f) = ∫Φ_f f`, and second-order
/// convergence of the Poisson residual.
pub fn hartree_suite() -> Result<Vec<Check>> {
    let tent_error = |n: usize| -> Result<f64> {
        let grid = Grid::new(5.0, n)?;
        Ok((d1_energy(&NeutralCharge::new(tent_charge(&grid))?) - 8.0 * PI / 3.0).abs())
    };
    let mut tent = Tally::new("hartree", "|D1(tent) - 8pi/3| at n = 2001, L = 5", 1e-4);
    tent.add(tent_error(2001)?);
    let mut tent_rate = Tally::new("hartree", "|D1(tent) error rate - 2| from n = 1001 to 2001", 0.2);
    tent_rate.add(((tent_error(1001)? / tent_error(2001)?).log2() - 2.0).abs());

    let mut dual = Tally::new("hartree", "|D1(f) - int Phi_f f| on random neutral f", 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let grid = Grid::new(20.0, 2001)?;
    for _ in 0..20 {
        let f = NeutralCharge::new(random_neutral(&mut rng, &grid))?;
        let phi = mean_field(&f);
        dual.add((d1_energy(&f) - phi.dot(f.function())?).abs());
    }

    let res: Vec<f64> = [401, 801, 1601]
        .iter()
        .map(|&n| poisson_residual(n))
        .collect::<Result<_>>()?;
    let mut rate = Tally::new("hartree", "|Poisson residual rate - 2| over two refinements", 0.2);
    for w in res.windows(2) {
        rate.add(((w[0] / w[1]).log2() - 2.0).abs());
    }
    Ok(vec![tent.done(), tent_rate.done(), dual.done(), rate.done()])
}

/// `f = 1` on `(0, 1)`, `−1` on `(1, 2)`, with midpoint values at the jumps.
pub fn tent_charge(grid: &Grid) -> GridFunction {
    grid.from_fn(|x| {
        let eps = 1e-12;
        if (x.abs() < eps) || ((x - 2.0).abs() < eps) {
            0.5 * if x < 1.0 { 1.0 } else { -1.0 }
        } else if (x - 1.0).abs() < eps {
            0.0
        } else if x > 0.0 && x < 1.0 {
            1.0
        } else if x > 1.0 && x < 2.0 {
            -1.0
        } else {
            0.0
        }
    })
}

fn random_neutral(rng: &mut ChaCha8Rng, grid: &Grid) -> GridFunction {
    let bumps: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-3.0..3.0), rng.gen_range(0.5..1.5)))
        .collect();
    let f = grid.from_fn(|x| {
        bumps
            .iter()
            .map(|(a, c, w)| a * (-((x - c) / w).powi(2)).exp())
            .sum()
    });
    let mean = f.integral() / grid.length();
    f.map(|v| v - mean)
}

/// `max |Φ'' + 4πf|` over interior nodes for a smooth neutral `f`.
fn poisson_residual(npoints: usize) -> Result<f64> {
    let grid = Grid::new(16.0, npoints)?;
    let f = grid.from_fn(|x| x * (-x * x).exp());
    let phi = mean_field(&NeutralCharge::new(f.clone())?);
    let d2 = grid.second_difference(phi.values());
    Ok(d2
        .iter()
        .zip(f.interior())
        .map(|(a, b)| (a + 4.0 * PI * b).abs())
        .fold(0.0, f64::max))
}

/// Euler–Lagrange certificate of converged solves and density uniqueness
/// across two starting points.
pub fn el_suite(seed: u64) -> Result<Vec<Check>> {
    let mut occ = Tally::new("el", "occupation residual of converged solves", 1e-8);
    let mut comm = Tally::new("el", "commutator proxy of converged solves", 1e-8);
    let mut unique = Tally::new("el", "density distance between starts / (10 density_tol)", 1.0);
    let mut unconverged = Tally::new("el", "unconverged solves", 0.0);
    let grid = Grid::new(16.0, 321)?;
    for (b, spin) in [(0.0, false), (1.0, false), (8.0, false), (1.0, true)] {
        let profile = ChargeProfile::gaussian(&grid, 1.0, 0.0, 1.0)?;
        let mut cfg = ScfConfig::new(FieldStrength::new(b)?, profile);
        cfg.spin = SpinMode::from_flag(spin);
        let a = scf_solve(&cfg)?;
        cfg.initial = InitialGuess::RandomPotential { seed, amplitude: 1.0 };
        let r = scf_solve(&cfg)?;
        for res in [&a, &r] {
            unconverged.add(if res.converged { 0.0 } else { 1.0 });
            occ.add(res.residual.occupation);
            comm.add(res.residual.commutator);
        }
        unique.add(a.density.sub(&r.density)?.l1_norm() / (10.0 * cfg.density_tol));
    }
    Ok([occ, comm, unique, unconverged].map(Tally::done).into())
}
