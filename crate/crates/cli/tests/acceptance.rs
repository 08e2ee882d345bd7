//! Acceptance gate: every quantitative claim the laboratory stands on, one
//! test per claim, each printing a single [PASS]/[FAIL] line. The tolerances
//! are part of the contract; a failure here means the build does not do what
//! the documentation says it does, not that a tolerance was optimistic.

use std::process::Command;

use num_complex::Complex64;
use smoothing_core::canonical::{
    equivalence_ensemble, rank_invariance_scan, CutoffSpec, EquivalenceCase, FrequencyMap,
};
use smoothing_core::comparison::{
    assemble_polynomial_estimate, model_equality_check, monotone_decomposition, packet_field,
    translation_identity_check, SliceRoots,
};
use smoothing_core::estimator::{
    concentration_study, estimate_constant, log_slope, max_rel_deviation_from_last,
    refinement_study, timedep_norm, window_norm, CenterSpec, ConstantMethod, EnsembleParams,
    EstimateSpec, SmootherSpec, TimeCoefficient, WeightSpec,
};
use smoothing_core::field::random_band_limited;
use smoothing_core::symbol::catalog::{extended_catalog, normal_form_symbols, ring_quartic};
use smoothing_core::symbol::classify::classify;
use smoothing_core::symbol::expr::parse_polynomial;
use smoothing_core::symbol::{PolynomialSymbol, Symbol};
use smoothing_core::transform::{propagate_values, to_frequency, to_physical};
use smoothing_core::{stable_seed, ComplexField, GridSpec, Space};

/// Collects sub-check failures and headline measurements so every criterion
/// prints exactly one line, with the measured margins visible on success.
struct Gate {
    number: u32,
    label: &'static str,
    fails: Vec<String>,
    notes: Vec<String>,
}

impl Gate {
    fn new(number: u32, label: &'static str) -> Self {
        Gate { number, label, fails: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.fails.push(what.into());
        }
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn conclude(self) {
        if self.fails.is_empty() {
            println!(
                "[PASS] criterion {}: {} ({})",
                self.number,
                self.label,
                self.notes.join("; ")
            );
        } else {
            println!(
                "[FAIL] criterion {}: {}: {}",
                self.number,
                self.label,
                self.fails.join("; ")
            );
        }
        assert!(
            self.fails.is_empty(),
            "criterion {} ({}) failed: {}",
            self.number,
            self.label,
            self.fails.join("; ")
        );
    }
}

fn l2_rel_diff(a: &ComplexField, b: &ComplexField) -> f64 {
    let cell = a.grid().cell_volume();
    let diff: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).norm_sqr() * cell)
        .sum::<f64>()
        .sqrt();
    diff / a.l2_norm()
}

fn one_sided_packet(grid: &GridSpec, center: f64, sd: f64, lo: f64, hi: f64) -> ComplexField {
    packet_field(grid, |xi: &[f64]| {
        let x = xi[0];
        if x < lo || x > hi {
            0.0
        } else {
            (-(x - center) * (x - center) / (2.0 * sd * sd)).exp()
        }
    })
    .expect("packet envelope covers lattice points")
}

#[test]
fn criterion_01_spectral_exactness() {
    let mut gate = Gate::new(1, "Parseval, unitarity and the group law are spectrally exact");
    let cases: Vec<(GridSpec, Box<dyn Fn(&[f64]) -> f64>)> = vec![
        (GridSpec::new(&[40.0], &[1024]).unwrap(), Box::new(|xi: &[f64]| xi[0] * xi[0])),
        (
            GridSpec::new(&[20.0, 20.0], &[256, 256]).unwrap(),
            Box::new(|xi: &[f64]| xi[0] * xi[0] + xi[1] * xi[1]),
        ),
    ];
    let mut worst = 0.0f64;
    for (grid, a) in &cases {
        let dim = grid.dim();
        let phi = random_band_limited(grid, |_| true, 41).unwrap();
        let a_vals = grid.eval_on_freq_lattice(a);

        let phys = to_physical(&phi).unwrap();
        let parseval = (phys.l2_norm() - phi.l2_norm()).abs() / phi.l2_norm();
        gate.check(parseval < 1e-12, format!("{dim}D Parseval defect {parseval:.3e}"));

        let u = propagate_values(&phi, &a_vals, 0.37).unwrap();
        let unitary = (u.l2_norm() - phi.l2_norm()).abs() / phi.l2_norm();
        gate.check(unitary < 1e-12, format!("{dim}D unitarity defect {unitary:.3e}"));

        let (s, t) = (0.7, 1.3);
        let direct = propagate_values(&phi, &a_vals, s + t).unwrap();
        let stepped =
            propagate_values(&propagate_values(&phi, &a_vals, t).unwrap(), &a_vals, s).unwrap();
        let group = l2_rel_diff(&direct, &stepped);
        gate.check(group < 1e-12, format!("{dim}D group-law defect {group:.3e}"));
        worst = worst.max(parseval).max(unitary).max(group);
    }
    gate.note(format!("worst relative defect {worst:.2e} vs 1e-12"));
    gate.conclude();
}

#[test]
fn criterion_02_translation_identity() {
    let mut gate = Gate::new(2, "one-period time norm equals the spatial norm for a(xi) = xi");
    let grid = GridSpec::new(&[40.0], &[1024]).unwrap();
    let nyq = grid.nyquist(0);
    let mut worst = 0.0f64;
    for k in 0..32 {
        let phi = random_band_limited(
            &grid,
            |xi| xi[0].abs() <= 2.0 * nyq / 3.0,
            stable_seed(2, k),
        )
        .unwrap();
        let rep = translation_identity_check(&phi, &[0, 171, 512, 937], 1024).unwrap();
        worst = worst.max(rep.max_rel_deviation);
    }
    gate.check(worst < 1e-10, format!("worst deviation over 32 fields {worst:.3e}"));
    gate.note(format!("worst deviation over 32 fields {worst:.2e} vs 1e-10"));
    gate.conclude();
}

#[test]
fn criterion_03_model_comparison_factor() {
    let mut gate = Gate::new(3, "model flows compare at sqrt(l/m) in 1D and at 1 in 2D");
    let grid = GridSpec::new(&[1024.0], &[2048]).unwrap();
    // Eight distinct one-sided packets. The band ratio hi/lo stays below
    // 2.3 so the fastest cubic mode cannot lap the torus inside its
    // passage window (travel x (hi/lo)^2 < L/2).
    let packets: [(f64, f64); 8] = [
        (1.5, 0.10),
        (1.2, 0.08),
        (1.35, 0.09),
        (1.65, 0.11),
        (1.8, 0.12),
        (1.3, 0.10),
        (1.55, 0.14),
        (1.7, 0.09),
    ];
    let want = (1.0f64 / 3.0).sqrt();
    let mut worst_1d = 0.0f64;
    for (k, &(center, sd)) in packets.iter().enumerate() {
        let phi = one_sided_packet(&grid, center, sd, center - 0.45, center + 0.45);
        let rep = model_equality_check(
            1,
            3,
            &phi,
            60.0,
            &[vec![0.0], vec![1.0], vec![-2.0]],
        )
        .unwrap();
        gate.check(
            (rep.ratio - want).abs() < 1e-4,
            format!("packet {k}: ratio {} vs sqrt(1/3)", rep.ratio),
        );
        gate.check(
            (rep.ratio - 0.5773503).abs() < 1e-4,
            format!("packet {k}: ratio {} vs 0.5773503", rep.ratio),
        );
        worst_1d = worst_1d.max((rep.ratio - want).abs());
    }

    // 2D shear models a_p = xi_1 |xi_2|^(p-1): two rows whose speed ratios
    // exceed the band ratio, so the rows never interfere and the fast one
    // cannot wrap during the slow one's window.
    let g2 = GridSpec::new(&[256.0, 16.0], &[512, 32]).unwrap();
    let seed = 31;
    let phi2 = {
        let axes = g2.freq_axes();
        let mut vals = vec![Complex64::ZERO; g2.total_points()];
        let mut idx = vec![0usize; 2];
        for (flat, slot) in vals.iter_mut().enumerate() {
            g2.unravel(flat, &mut idx);
            let (xi1, k2) = (axes[0][idx[0]], GridSpec::mode_index(g2.points(1), idx[1]));
            if !(1.2..=1.8).contains(&xi1) || !(k2 == 5 || k2 == 8) {
                continue;
            }
            let env = (-(xi1 - 1.5) * (xi1 - 1.5) / (2.0 * 0.01)).exp();
            let ph = (stable_seed(seed, idx[1] as u64) % 6283) as f64 / 1000.0;
            let parity = GridSpec::mode_index(g2.points(0), idx[0]) + k2;
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *slot = Complex64::new(0.0, ph).exp() * env * sign;
        }
        let mut f = ComplexField::from_values(&g2, Space::Frequency, vals).unwrap();
        let n = f.l2_norm();
        f.scale(Complex64::new(1.0 / n, 0.0));
        f
    };
    let rep2 =
        model_equality_check(2, 3, &phi2, 60.0, &[vec![0.0, 0.0], vec![1.0, -2.0]]).unwrap();
    gate.check(
        (rep2.ratio - 1.0).abs() < 1e-3,
        format!("2D ratio {} vs 1", rep2.ratio),
    );
    gate.conclude();
}

#[test]
fn criterion_04_weighted_norm_closed_form() {
    let mut gate = Gate::new(4, "full-period <x>^-1 norm of the translation flow");
    // With dt = dx every trapezoid node shifts the lattice a whole number
    // of cells and the half-weight endpoints coincide mod L, so the sweep
    // hits every lattice offset exactly once: the ratio collapses to
    // sqrt(sum_j dx / (1 + x_j^2)), the periodic-rule approximation of
    // sqrt(int_{-20}^{20} dx / (1 + x^2)) = sqrt(2 arctan 20).
    let grid = GridSpec::new(&[40.0], &[256]).unwrap();
    let phi = one_sided_packet(&grid, 1.5, 0.3, 0.4, 2.6);
    let a_vals = grid.eval_on_freq_lattice(|xi| xi[0]);
    let w = WeightSpec::bracket(1.0).unwrap().values(&grid).unwrap();
    let sigma = vec![1.0; grid.total_points()];
    let ratio =
        window_norm(&a_vals, &w, &sigma, &phi, -20.0, 20.0, 256).unwrap() / phi.l2_norm();
    let closed_form = (2.0 * 20.0f64.atan()).sqrt();
    gate.check(
        (ratio - closed_form).abs() < 1e-3,
        format!("ratio {ratio} vs closed form {closed_form}"),
    );
    let lattice: f64 = grid
        .x_axis(0)
        .iter()
        .map(|x| grid.spacing(0) / (1.0 + x * x))
        .sum::<f64>()
        .sqrt();
    gate.check(
        (ratio - lattice).abs() / lattice < 1e-9,
        format!("ratio {ratio} vs exact lattice sum {lattice}"),
    );
    gate.conclude();
}

fn classify_src(src: &str) -> smoothing_core::symbol::classify::ClassificationReport {
    classify(&Symbol::from_poly(src, parse_polynomial(src, 2).unwrap()))
}

/// Detected critical points must match the expected set one-to-one within
/// `tol` in every component.
fn match_critical_points(
    gate: &mut Gate,
    src: &str,
    expected: &[[f64; 2]],
    tol: f64,
) -> Vec<smoothing_core::symbol::classify::CriticalPoint> {
    let rep = classify_src(src);
    gate.check(
        rep.critical_points.len() == expected.len(),
        format!(
            "{src}: found {} critical points, expected {}",
            rep.critical_points.len(),
            expected.len()
        ),
    );
    for want in expected {
        let hit = rep.critical_points.iter().any(|cp| {
            cp.point.len() == 2
                && (cp.point[0] - want[0]).abs() <= tol
                && (cp.point[1] - want[1]).abs() <= tol
        });
        gate.check(hit, format!("{src}: no critical point within {tol:.0e} of {want:?}"));
    }
    rep.critical_points
}

#[test]
fn criterion_05_classification_goldens() {
    let mut gate = Gate::new(5, "flag goldens, the nine normal forms and pinned critical points");

    gate.check(classify_src("xi1^3 + xi2^3").h.holds, "xi1^3 + xi2^3 must satisfy H");
    gate.check(classify_src("xi1^3 + xi2^3 + xi1").l.holds, "xi1^3 + xi2^3 + xi1 must satisfy L");
    gate.check(
        !classify_src("xi1^3 + xi2^3 - xi1").l.holds,
        "xi1^3 + xi2^3 - xi1 must fail L (gradient vanishes on a curve)",
    );

    let forms = normal_form_symbols();
    gate.check(forms.len() == 9, format!("catalog lists {} normal forms, expected 9", forms.len()));
    for sym in &forms {
        let rep = classify(sym);
        gate.check(
            !rep.applicable_theorems.is_empty(),
            format!("{} classified with no applicable theorem", sym.name()),
        );
    }

    let third = 1.0 / 3.0;
    match_critical_points(
        &mut gate,
        "xi1^3 + xi2^3 + xi1*xi2",
        &[[0.0, 0.0], [-third, -third]],
        1e-8,
    );
    let s3 = 1.0 / 3.0f64.sqrt();
    match_critical_points(
        &mut gate,
        "xi1^3 - 3*xi1*xi2^2 + xi1^2 + xi2^2",
        &[[0.0, 0.0], [-2.0 * third, 0.0], [third, s3], [third, -s3]],
        1e-8,
    );
    let saddle = match_critical_points(&mut gate, "xi1^3 + xi1*xi2", &[[0.0, 0.0]], 1e-8);
    if let Some(cp) = saddle.first() {
        gate.check(
            cp.rank == 2 && cp.signature == (1, 1, 0) && cp.non_degenerate,
            format!(
                "xi1^3 + xi1*xi2 origin: rank {} signature {:?}",
                cp.rank, cp.signature
            ),
        );
    }
    gate.conclude();
}

#[test]
fn criterion_06_invariant_constant_is_resolution_stable() {
    let mut gate = Gate::new(6, "invariant-smoother constants move < 20% under grid refinement");
    // The frequency band is frozen across each ladder: the in-band mode set
    // is the same lattice at every rung (the frequency spacing depends only
    // on L), so only the resolution changes, never the excited modes. Band-
    // limited ensembles probe the band-restricted operator; power iteration
    // would instead climb to the near-Nyquist modes, whose constant grows
    // with the symbol and cannot be resolution-stable.
    let spec_1d = |nt| {
        EstimateSpec::new(
            WeightSpec::bracket(1.0).unwrap(),
            SmootherSpec::invariant(),
            32.0,
            nt,
        )
        .unwrap()
    };
    let ring = ring_quartic(1);
    let ladder_1d: Vec<(GridSpec, EstimateSpec)> = [256usize, 512, 1024]
        .iter()
        .map(|&n| (GridSpec::new(&[128.0], &[n]).unwrap(), spec_1d(64)))
        .collect();
    let rows = refinement_study(
        &ring,
        &ladder_1d,
        ConstantMethod::Ensemble,
        &EnsembleParams { size: 48, band: Some((0.0, 4.0)) },
        11,
    )
    .unwrap();
    let values: Vec<f64> = rows.iter().map(|r| r.estimate.value).collect();
    gate.check(
        values.iter().all(|v| v.is_finite() && *v > 0.0),
        format!("1D ladder produced non-positive constants {values:?}"),
    );
    let dev = max_rel_deviation_from_last(&values);
    gate.check(dev < 0.2, format!("1D (|xi|^2-1)^2 constants {values:?} moved {dev:.3}"));

    let shear_cubic = Symbol::from_poly(
        "xi1*xi2^2",
        PolynomialSymbol::from_terms(2, &[([1, 2, 0], 1.0)]).unwrap(),
    );
    let spec_2d = EstimateSpec::new(
        WeightSpec::bracket(1.0).unwrap(),
        SmootherSpec::invariant(),
        8.0,
        48,
    )
    .unwrap();
    let ladder_2d: Vec<(GridSpec, EstimateSpec)> = [128usize, 256]
        .iter()
        .map(|&n| (GridSpec::new(&[32.0, 32.0], &[n, n]).unwrap(), spec_2d.clone()))
        .collect();
    let rows2 = refinement_study(
        &shear_cubic,
        &ladder_2d,
        ConstantMethod::Ensemble,
        &EnsembleParams { size: 48, band: Some((0.0, 8.0)) },
        11,
    )
    .unwrap();
    let values2: Vec<f64> = rows2.iter().map(|r| r.estimate.value).collect();
    gate.check(
        values2.iter().all(|v| v.is_finite() && *v > 0.0),
        format!("2D ladder produced non-positive constants {values2:?}"),
    );
    let dev2 = max_rel_deviation_from_last(&values2);
    gate.check(dev2 < 0.2, format!("2D xi1*xi2^2 constants {values2:?} moved {dev2:.3}"));
    gate.conclude();
}

#[test]
fn criterion_07_concentration_slope() {
    let mut gate = Gate::new(7, "classical ratio blows up like width^-1/2 where dispersion dies");
    // Shells around |xi| = 1 where grad (|xi|^2-1)^2 vanishes. Group speeds
    // there are O(width), so even at the widest scaled window the packets
    // travel well under half the torus.
    let a = ring_quartic(1);
    let grid = GridSpec::new(&[1024.0], &[1024]).unwrap();
    let widths = [0.2, 0.1, 0.05, 0.025];
    let rows = concentration_study(
        &a,
        &grid,
        &WeightSpec::bracket(1.0).unwrap(),
        64.0,
        128,
        &CenterSpec::Sphere { radius: 1.0 },
        &widths,
        16,
        23,
    )
    .unwrap();
    let ws: Vec<f64> = rows.iter().map(|r| r.width).collect();
    let quotients: Vec<f64> =
        rows.iter().map(|r| r.classical_ratio / r.invariant_ratio).collect();
    let slope = log_slope(&ws, &quotients);
    gate.check(
        (slope + 0.5).abs() < 0.15,
        format!("classical/invariant quotient slope {slope:.4} vs -0.5 +/- 0.15"),
    );
    let invariants: Vec<f64> = rows.iter().map(|r| r.invariant_ratio).collect();
    let spread = max_rel_deviation_from_last(&invariants);
    gate.check(
        spread < 0.2,
        format!("invariant ratios {invariants:?} spread {spread:.3}"),
    );
    gate.conclude();
}

#[test]
fn criterion_08_monotone_decomposition() {
    let mut gate = Gate::new(8, "breakpoints, eta <= 1 on the lattice, assembled bound");

    let cubic = parse_polynomial("xi1^3 - xi1", 1).unwrap();
    let g1 = GridSpec::new(&[32.0], &[256]).unwrap();
    let dec = monotone_decomposition(&cubic, 0, &g1).unwrap();
    let s3 = 1.0 / 3.0f64.sqrt();
    match &dec.slices[0] {
        SliceRoots::Roots(roots) => {
            gate.check(
                roots.len() == 2
                    && (roots[0] + s3).abs() < 1e-10
                    && (roots[1] - s3).abs() < 1e-10,
                format!("xi^3 - xi breakpoints {roots:?} vs +/- 1/sqrt(3)"),
            );
        }
        SliceRoots::Zero => gate.check(false, "xi^3 - xi derivative treated as zero"),
    }

    // eta = |grad a|^(1/2) / sum_j |d_j a|^(1/2) never exceeds 1; verified
    // on the lattice for every polynomial-backed catalog symbol.
    let g2 = GridSpec::new(&[16.0, 16.0], &[64, 64]).unwrap();
    let g3 = GridSpec::new(&[8.0, 8.0, 8.0], &[16, 16, 16]).unwrap();
    let mut polys = 0usize;
    for sym in extended_catalog() {
        let Some(p) = sym.poly() else { continue };
        polys += 1;
        let grid = match p.dim() {
            1 => &g1,
            2 => &g2,
            _ => &g3,
        };
        let d = monotone_decomposition(p, 0, grid).unwrap();
        let worst = d.eta.iter().cloned().fold(0.0f64, f64::max);
        gate.check(
            worst <= 1.0 + 1e-9,
            format!("{}: eta reaches {worst} on the lattice", sym.name()),
        );
    }
    gate.check(polys >= 11, format!("only {polys} polynomial catalog entries swept"));

    let p = parse_polynomial("xi1^3 + xi2^3 + xi1*xi2", 2).unwrap();
    let ga = GridSpec::new(&[32.0, 32.0], &[64, 64]).unwrap();
    let nyq = ga.nyquist(0).min(ga.nyquist(1));
    let phi = random_band_limited(
        &ga,
        |xi| {
            let r = (xi[0] * xi[0] + xi[1] * xi[1]).sqrt();
            r > 0.0 && r <= 2.0 * nyq / 3.0
        },
        5,
    )
    .unwrap();
    let asm = assemble_polynomial_estimate(&p, 1.0, &phi, &ga, 4.0, 32).unwrap();
    let axis_bound: f64 = asm.eta_axis_norms.iter().sum();
    gate.check(
        asm.combined.is_finite() && asm.combined > 0.0,
        format!("combined ratio {} not finite and positive", asm.combined),
    );
    gate.check(
        asm.combined <= axis_bound * (1.0 + 1e-9),
        format!("triangle bound violated: combined {} > axis sum {axis_bound}", asm.combined),
    );
    gate.conclude();
}

#[test]
fn criterion_09_time_dependent_consistency() {
    let mut gate = Gate::new(9, "reparametrized norm matches the direct time quadrature");
    let grid = GridSpec::new(&[20.0], &[64]).unwrap();
    let a = Symbol::from_poly("xi1^2", parse_polynomial("xi1^2", 1).unwrap());
    let weight = WeightSpec::bracket(1.0).unwrap();
    let smoother = SmootherSpec::invariant();
    // Band-limited field: the direct rule's error scales with the square of
    // the largest symbol gap over the band, so the band is kept at |xi| <= 2.
    let phi = random_band_limited(&grid, |xi| xi[0].abs() > 0.0 && xi[0].abs() <= 2.0, 7)
        .unwrap();

    // Trapezoid quadrature of || w sigma u ||^2 directly in t, propagating
    // each node by the primitive C(t): the independent side of the identity.
    let direct = |coeff: &TimeCoefficient, nt: usize| -> f64 {
        let a_vals = grid.eval_on_freq_lattice(|xi| a.eval(xi));
        let w = weight.values(&grid).unwrap();
        let sigma = smoother.values(&grid, Some(&a)).unwrap();
        let hat = to_frequency(&phi).unwrap();
        let mut smoothed = hat;
        for (v, s) in smoothed.values_mut().iter_mut().zip(&sigma) {
            *v *= s;
        }
        let cell = grid.cell_volume();
        let (lo, hi) = coeff.interval();
        let dt = (hi - lo) / nt as f64;
        let mut total = 0.0;
        for k in 0..=nt {
            let t = lo + k as f64 * dt;
            let node_weight = if k == 0 || k == nt { dt / 2.0 } else { dt };
            let u = propagate_values(&smoothed, &a_vals, coeff.primitive(t)).unwrap();
            let phys = to_physical(&u).unwrap();
            let mass: f64 = phys
                .values()
                .iter()
                .zip(&w)
                .map(|(v, wx)| wx * wx * v.norm_sqr())
                .sum::<f64>()
                * cell;
            total += node_weight * coeff.eval(t).abs() * mass;
        }
        total.sqrt()
    };

    let constant = TimeCoefficient::constant(2.0, -1.5, 1.5).unwrap();
    let lhs = timedep_norm(&a, &constant, &weight, &smoother, 64, &phi).unwrap();
    let rhs = direct(&constant, 64);
    let dev_const = (lhs - rhs).abs() / rhs;
    gate.check(dev_const < 1e-6, format!("constant coefficient deviation {dev_const:.3e}"));

    let invquad =
        TimeCoefficient::new("invquad", -3.0, 3.0, |t| 1.0 / (1.0 + t * t)).unwrap();
    let nt = 2048;
    let lhs_q = timedep_norm(&a, &invquad, &weight, &smoother, nt, &phi).unwrap();
    let rhs_q = direct(&invquad, nt);
    let dev_q = (lhs_q - rhs_q).abs() / rhs_q;
    gate.check(dev_q < 1e-4, format!("1/(1+t^2) coefficient deviation {dev_q:.3e}"));
    gate.conclude();
}

#[test]
fn criterion_10_canonical_equivalence() {
    let mut gate = Gate::new(10, "shear-equivalent flows stay in a narrow two-sided band");
    let sigma = Symbol::from_poly(
        "laplacian",
        PolynomialSymbol::from_terms(2, &[([2, 0, 0], 1.0), ([0, 2, 0], 1.0)]).unwrap(),
    );
    let shear = FrequencyMap::linear(vec![vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
    // The cutoff plateau covers the field band and its shear preimage.
    let gamma = CutoffSpec::ball(vec![0.4, 0.8], 1.25, 1.5).unwrap();
    let weight = WeightSpec::bracket(1.0).unwrap();
    let support =
        |xi: &[f64]| ((xi[0] - 0.8).powi(2) + (xi[1] - 0.8).powi(2)).sqrt() <= 0.5;

    let mut bands = Vec::new();
    for n in [64usize, 128] {
        let grid = GridSpec::new(&[32.0, 32.0], &[n, n]).unwrap();
        let case =
            EquivalenceCase::new(&sigma, &shear, &gamma, |s| s.sqrt(), &weight, &grid, 2.0, 32)
                .unwrap();
        let rep = equivalence_ensemble(&case, support, 16, 71).unwrap();
        gate.check(
            rep.items.iter().all(|i| i.ratio.is_finite() && i.ratio > 0.0),
            format!("{n}x{n}: non-positive ratio in the ensemble"),
        );
        gate.check(
            rep.band_constant < 5.0,
            format!("{n}x{n}: band constant {} (band {:?})", rep.band_constant, rep.band),
        );
        bands.push(rep.band_constant);
    }
    let drift = (bands[1] - bands[0]).abs() / bands[0];
    gate.check(
        drift < 0.2,
        format!("band constant moved {drift:.3} under refinement ({bands:?})"),
    );

    // Linear changes of variables preserve Hessian ranks at corresponding
    // critical points; checked at every point the scan detects.
    let saddle = Symbol::from_poly(
        "cubic-saddle",
        PolynomialSymbol::from_terms(2, &[([3, 0, 0], 1.0), ([1, 1, 0], 1.0)]).unwrap(),
    );
    let pairs =
        rank_invariance_scan(&saddle, &shear, &[(-2.0, 2.0), (-2.0, 2.0)], 7).unwrap();
    gate.check(!pairs.is_empty(), "rank scan found no critical points");
    for pair in &pairs {
        gate.check(
            pair.rank_composed == pair.rank_core,
            format!(
                "rank mismatch at {:?}: composed {} vs core {}",
                pair.point, pair.rank_composed, pair.rank_core
            ),
        );
    }
    gate.conclude();
}

#[test]
fn criterion_11_symbol_root_domination() {
    let mut gate = Gate::new(11, "|a|^1/2 <= m^-1/2 |xi|^1/2 |grad a|^1/2 on the lattice");
    // Scaling identity: m a = xi . grad a for order-m homogeneous symbols,
    // so |a| <= |xi| |grad a| / m pointwise; verified in squared form.
    let grid = GridSpec::new(&[16.0, 16.0], &[64, 64]).unwrap();
    let axes = grid.freq_axes();
    let mut homogeneous = 0usize;
    for sym in extended_catalog() {
        let Some(m) = sym.homogeneous_order() else { continue };
        if sym.dim() != 2 {
            continue;
        }
        homogeneous += 1;
        let mut worst = f64::NEG_INFINITY;
        let mut xi = [0.0f64; 2];
        for &x1 in &axes[0] {
            for &x2 in &axes[1] {
                xi = [x1, x2];
                let lhs = sym.eval(&xi).abs();
                let rhs = (x1 * x1 + x2 * x2).sqrt() * sym.grad_norm(&xi) / m;
                worst = worst.max(lhs - rhs - 1e-9 * (1.0 + rhs));
            }
        }
        gate.check(
            worst <= 0.0,
            format!("{}: domination violated by {worst:.3e} at some lattice point", sym.name()),
        );
        let _ = xi;
    }
    gate.check(
        homogeneous == 5,
        format!("swept {homogeneous} homogeneous catalog symbols, expected 5"),
    );
    gate.conclude();
}

#[test]
fn criterion_12_worker_count_determinism() {
    let mut gate = Gate::new(12, "results are bit-identical at 1 and 8 workers");
    let out = tempfile::tempdir().unwrap();
    let mut dirs = Vec::new();
    for (threads, sub) in [("1", "one"), ("8", "eight")] {
        let root = out.path().join(sub);
        let status = Command::new(env!("CARGO_BIN_EXE_smoothing-lab"))
            .args([
                "--grid",
                "1,64,256",
                "--seed",
                "9",
                "--threads",
                threads,
                "--out",
                root.to_str().unwrap(),
                "estimate",
                "(xi1^2 - 1)^2",
                "--method",
                "ensemble",
                "--members",
                "16",
                "--nt",
                "48",
            ])
            .status()
            .unwrap();
        gate.check(status.success(), format!("run with {threads} workers failed"));
        let mut entries: Vec<_> = std::fs::read_dir(&root)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        gate.check(entries.len() == 1, format!("{} run dirs under {sub}", entries.len()));
        dirs.push(entries.pop().unwrap());
    }
    gate.check(
        dirs[0].file_name() == dirs[1].file_name(),
        "config hash differs between worker counts",
    );
    for file in ["results.csv", "details.json"] {
        let a = std::fs::read(dirs[0].join(file)).unwrap();
        let b = std::fs::read(dirs[1].join(file)).unwrap();
        gate.check(a == b, format!("{file} differs between 1 and 8 workers"));
    }
    gate.conclude();
}
