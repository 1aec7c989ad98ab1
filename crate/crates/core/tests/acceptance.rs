//! Acceptance suite. Runs without the libtest harness so that every verdict
//! line reaches the `cargo test` output; exits non-zero on any failure.

use std::f64::consts::{LN_2, PI, TAU};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use jacdet::quadrature::PolarRule;
use jacdet::*;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SWEEP_PS: [f64; 4] = [4.0, 8.0, 16.0, 32.0];

struct Line {
    label: String,
    pass: bool,
    detail: String,
    /// A literal clause that is false as stated; reported but not counted.
    known_false: bool,
}

fn line(label: &str, pass: bool, detail: String) -> Line {
    Line {
        label: label.into(),
        pass,
        detail,
        known_false: false,
    }
}

fn aronsson(x: Point) -> f64 {
    AnalyticSolution::Aronsson.value(x)
}

/// Aronsson-trace solutions on `[1,2]²` at grid 128, shared by two
/// criteria, with the seconds spent solving.
fn sweep_128_timed() -> &'static (Vec<SolveOutput>, f64) {
    static CELL: OnceLock<(Vec<SolveOutput>, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = Instant::now();
        let g = GridSpec::square(128, 1.0, 2.0).unwrap();
        let sols = infinity_approx(&g, &aronsson, &SWEEP_PS).unwrap();
        (sols, t.elapsed().as_secs_f64())
    })
}

fn sweep_128() -> &'static Vec<SolveOutput> {
    &sweep_128_timed().0
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn random_poly(seed: u64) -> PolyField {
    PolyField::random(4, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn identity_suite() -> Vec<Line> {
    let t = Instant::now();
    let mut worst = [0.0f64; 5];
    let mut trials = 0;
    for seed in 0..60u64 {
        let v = random_poly(seed);
        let samples: Vec<Point> = uniform_samples(100, [-1.0, -1.0], [1.0, 1.0], seed)
            .into_iter()
            .filter(|&x| {
                let g = v.gradient(x);
                g[0].hypot(g[1]) > 0.05
            })
            .collect();
        worst[0] = worst[0].max(check_div_structure(&v, &samples).max_rel_residual);
        worst[1] = worst[1].max(check_hessian_identity(&v, &samples).max_rel_residual);
        for beta in [-0.5, 0.0, 0.5, 1.0, 2.0] {
            for eps in [0.1, 1.0] {
                let r = check_structural_identity(&v, beta, eps, &samples).unwrap();
                worst[2] = worst[2].max(r.max_rel_residual);
            }
        }
        for p in [1.5, 2.0, 3.0, 4.0, 10.0] {
            for beta in [-0.5, 0.0, 1.0, 2.0] {
                let r = check_pharmonic_formula(p, &v, beta, &samples).unwrap();
                worst[3] = worst[3].max(r.max_rel_residual);
            }
            worst[4] = worst[4].max(
                check_log_gradient_identity(p, &v, &samples)
                    .unwrap()
                    .max_rel_residual,
            );
        }
        trials += 1;
    }
    let elapsed = t.elapsed().as_secs_f64();
    let max = worst.iter().copied().fold(0.0, f64::max);
    vec![line(
        "identity suite",
        max <= 1e-11 && elapsed < 10.0,
        format!(
            "{trials} quartics (seeds 0..{trials}), max residual per identity {}, {elapsed:.2} s",
            sci(&worst)
        ),
    )]
}

/// Least-squares slope of `log gap` against `log h`.
fn fitted_order(hs: &[f64], gaps: &[f64]) -> f64 {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn pointwise_vs_weak() -> Vec<Line> {
    // gaps this small are rounding; no rate can be read off them
    const ROUNDING: f64 = 1e-10;
    let mut polys = vec![PolyField::from_terms(&[(1, 1, 1.0)]).unwrap()];
    polys.extend((0..5).map(random_poly));
    let psi = TestBump::new([0.0, 0.0], 0.8).unwrap();
    let mut cases = Vec::new();
    for k in 0..polys.len() {
        for beta in [0.0, 0.5, 1.0] {
            for eps in [0.0, 0.25] {
                cases.push((k, beta, eps));
            }
        }
    }
    let ns = [128usize, 256, 512];
    let hs: Vec<f64> = ns.iter().map(|&n| 2.0 / n as f64).collect();
    let results: Vec<(usize, f64, f64, Vec<f64>)> = cases
        .par_iter()
        .map(|&(k, beta, eps)| {
            let v = &polys[k];
            let gaps = ns
                .iter()
                .map(|&n| {
                    let g = GridSpec::square(n, -1.0, 1.0).unwrap();
                    let opts = PairingOptions {
                        epsilon: eps,
                        ..Default::default()
                    };
                    let pw =
                        pointwise_pairing(DetSource::Exact { f: v, grid: g }, beta, &psi, &opts)
                            .unwrap();
                    let u = ScalarField::sample(g, |x| v.eval(x)).unwrap();
                    let wk = weak_det_pairing(&u, beta, &psi, &opts).unwrap();
                    (pw.pairing - wk.pairing).abs()
                })
                .collect();
            (k, beta, eps, gaps)
        })
        .collect();
    let mut min_order = f64::INFINITY;
    let mut max_fine = 0.0f64;
    let mut ok = true;
    let mut rounding = 0;
    for (k, beta, eps, gaps) in &results {
        max_fine = max_fine.max(gaps[2]);
        if gaps[0] <= ROUNDING {
            rounding += 1;
            ok &= gaps[2] <= ROUNDING;
            continue;
        }
        let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
        let order = fitted_order(&hs, gaps);
        min_order = min_order.min(order);
        if !decreasing || order < 1.9 {
            println!(
                "    case poly {k} beta {beta} eps {eps}: gaps {} order {order:.2}",
                sci(gaps)
            );
            ok = false;
        }
    }
    vec![
        line(
            "pointwise vs weak: order",
            ok,
            format!(
                "{} cases, min fitted order {min_order:.2} over h = 1/64, 1/128, 1/256 ({rounding} at rounding level)",
                results.len()
            ),
        ),
        line(
            "pointwise vs weak: gap at h = 1/256",
            max_fine <= 1e-5,
            format!("max gap {max_fine:.2e}"),
        ),
    ]
}

fn saddle_benchmark() -> Vec<Line> {
    let g = GridSpec::square(256, -1.0, 1.0).unwrap();
    let u = ScalarField::sample(g, |x| x[0] * x[1]).unwrap();
    let psi = TestBump::new([0.0, 0.0], 1.0 - 1e-12).unwrap();
    let r = weak_det_pairing(&u, 0.0, &psi, &PairingOptions::default()).unwrap();
    let target = PI / 5.0;
    vec![
        line(
            "saddle pairing",
            (r.pairing - target).abs() <= 5e-3,
            format!("pairing {:.7} vs pi/5 = {target:.7}", r.pairing),
        ),
        line(
            "saddle lower-bound equality",
            (r.pairing - r.lower_rhs).abs() <= 1e-3,
            format!("pairing - lower = {:.2e}", r.pairing - r.lower_rhs),
        ),
    ]
}

fn bounds() -> Vec<Line> {
    let center = [1.5, 1.5];
    let psi = TestBump::plateau(center, 0.4).unwrap();
    let g64 = GridSpec::square(64, 1.0, 2.0).unwrap();
    let g128 = GridSpec::square(128, 1.0, 2.0).unwrap();
    let coarse = infinity_approx(&g64, &aronsson, &SWEEP_PS[..2]).unwrap();
    let fine = sweep_128();
    let mut inputs: Vec<(String, Option<f64>, ScalarField, ScalarField)> = vec![(
        "aronsson".into(),
        None,
        ScalarField::sample(g64, aronsson).unwrap(),
        ScalarField::sample(g128, aronsson).unwrap(),
    )];
    for (k, p) in SWEEP_PS[..2].iter().enumerate() {
        inputs.push((
            format!("u_{p}"),
            Some(*p),
            coarse[k].u.clone(),
            fine[k].u.clone(),
        ));
    }
    let (mut lower_ok, mut nonneg_ok, mut stable_ok) = (true, true, true);
    let (mut min_margin, mut min_pairing, mut worst_drift) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    for (name, p, u64_, u128_) in &inputs {
        for beta in [0.0, 0.5, 1.0] {
            let opts = PairingOptions {
                p: *p,
                ..Default::default()
            };
            let rc = weak_det_pairing(u64_, beta, &psi, &opts).unwrap();
            let rf = weak_det_pairing(u128_, beta, &psi, &opts).unwrap();
            let v = check_bounds(&rf, center, 0.4, &g128, 1e-3).unwrap();
            let vc = check_bounds(&rc, center, 0.4, &g64, 1e-3).unwrap();
            lower_ok &= v.lower_ok;
            nonneg_ok &= v.nonnegative && vc.nonnegative;
            min_margin = min_margin.min(v.lower_margin);
            min_pairing = min_pairing.min(rf.pairing.min(rc.pairing));
            let drift = (rf.c_emp / rc.c_emp - 1.0).abs();
            worst_drift = worst_drift.max(drift);
            if !(v.upper_ok && vc.upper_ok && drift <= 0.15) {
                stable_ok = false;
            }
            println!(
                "    {name:<8} beta {beta}: pairing {:.5e} lower margin {:.2e} C_emp {:.5} -> {:.5}",
                rf.pairing, v.lower_margin, rc.c_emp, rf.c_emp
            );
        }
    }
    vec![
        line(
            "lower bounds at h = 1/128",
            lower_ok,
            format!("min margin {min_margin:.2e} (slack 1e-3)"),
        ),
        line(
            "empirical upper constants",
            stable_ok,
            format!("finite, max relative change under h halving {worst_drift:.3}"),
        ),
        line(
            "nonnegativity",
            nonneg_ok,
            format!("min pairing {min_pairing:.3e}"),
        ),
    ]
}

/// Trapezoid L² norm of the difference of two stencil gradients.
fn gradient_gap(a: &ScalarField, b: &ScalarField) -> f64 {
    let (ga, gb) = (gradient(a).unwrap(), gradient(b).unwrap());
    integrate_nodes(&a.grid, |k, _| {
        let (x, y) = (ga.at(k), gb.at(k));
        (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)
    })
    .sqrt()
}

fn p_sweep() -> Vec<Line> {
    let t = Instant::now();
    let (sols, solve_secs) = sweep_128_timed();
    let g = sols[0].u.grid;
    let u_inf = ScalarField::sample(g, aronsson).unwrap();
    let gaps: Vec<f64> = sols.iter().map(|s| gradient_gap(&s.u, &u_inf)).collect();
    let grad_ok = gaps.windows(2).all(|w| w[1] < w[0]) && gaps[3] <= 0.5 * gaps[0];
    let psi = TestBump::plateau([1.5, 1.5], 0.4).unwrap();
    let fields: Vec<ScalarField> = sols.iter().map(|s| s.u.clone()).collect();
    let mut out = vec![line(
        "p-sweep gradient gaps",
        grad_ok,
        format!("||Du_p - Du_inf||_2 = {}", sci(&gaps)),
    )];
    for beta in [0.0, 1.0] {
        let seq =
            weak_convergence_pairings(&fields, &u_inf, beta, &psi, &PairingOptions::default())
                .unwrap();
        out.push(line(
            &format!("p-sweep pairing gaps beta {beta}"),
            seq.gaps_strictly_decreasing(),
            format!("gaps {}", sci(&seq.gaps)),
        ));
    }
    let elapsed = solve_secs + t.elapsed().as_secs_f64();
    out.push(line(
        "p-sweep runtime",
        elapsed < 300.0,
        format!("{elapsed:.1} s at grid 128"),
    ));
    out
}

fn extremal_sharpness() -> Vec<Line> {
    let sample = AnnulusSample::default();
    let (mut dist_ok, mut sharp_ok) = (true, true);
    let (mut dist_err, mut sharp_err) = (0.0f64, 0.0f64);
    for (p, beta) in [
        (2.0, 0.0),
        (3.0, 1.0),
        (10.0, 0.0),
        (1.5, -0.5),
        (10.0, 2.0),
    ] {
        let q = ExtremalParams::new(p).unwrap();
        let d = distortion_sup(&q, beta, &sample).unwrap();
        let s = sharpness_constants(&q, beta, &sample).unwrap();
        dist_err = dist_err.max((d.ratio_sup - d.target_ratio).abs());
        sharp_err = sharp_err.max((s.lhs_sup - s.rhs).abs());
        dist_ok &= d.matches_target(1e-8);
        sharp_ok &= (s.lhs_sup - s.rhs).abs() <= 1e-6;
        if beta == 0.0 {
            let want = (p - 1.0) + 1.0 / (p - 1.0);
            sharp_ok &= (s.rhs - want).abs() <= 1e-12;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut trip, mut homog) = (0.0f64, 0.0f64);
    for p in [1.5, 3.0, 10.0] {
        let q = ExtremalParams::new(p).unwrap();
        for _ in 0..200 {
            let xi = Complex64::from_polar(rng.gen_range(0.1..10.0), rng.gen_range(-PI..PI));
            let z = map_h(&q, xi);
            trip = trip.max((inverse_f(&q, z).unwrap() - xi).norm() / xi.norm());
            let t = rng.gen_range(0.2..5.0);
            let f = inverse_f(&q, z).unwrap();
            let ft = inverse_f(&q, t * z).unwrap();
            homog = homog.max((ft - t.powf(q.d) * f).norm() / ft.norm());
        }
    }
    vec![
        line(
            "distortion sup",
            dist_ok,
            format!("max |sup - (K-1)/(K+1)| {dist_err:.2e}"),
        ),
        line(
            "sharpness constant",
            sharp_ok,
            format!("max |sup - (K + 1/K)| {sharp_err:.2e}"),
        ),
        line(
            "inverse round trip",
            trip <= 1e-10,
            format!("max relative error {trip:.2e}"),
        ),
        line(
            "inverse homogeneity",
            homog <= 1e-10,
            format!("max relative error {homog:.2e}"),
        ),
    ]
}

fn annulus_energies() -> Vec<Line> {
    let ks: Vec<i32> = (0..=6).collect();
    let mut spread = 0.0f64;
    let mut values = Vec::new();
    for p in [1.5, 4.0] {
        let e = annulus_log_energy(&ExtremalParams::new(p).unwrap(), &ks).unwrap();
        let lo = e.iter().map(|a| a.energy).fold(f64::INFINITY, f64::min);
        let hi = e.iter().map(|a| a.energy).fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max((hi - lo) / hi);
        values.push(format!("p {p}: {hi:.8}"));
    }
    let two = annulus_log_energy(&ExtremalParams::new(2.0).unwrap(), &ks).unwrap();
    let max_two = two.iter().map(|a| a.energy).fold(0.0, f64::max);
    let min_two = two.iter().map(|a| a.energy).fold(f64::INFINITY, f64::min);
    let expected = TAU * LN_2;
    let mut literal = line(
        "annulus energies at p = 2 all zero",
        max_two == 0.0,
        format!(
            "energies are {min_two:.10} to {max_two:.10}; log|z| has |D log|z||² = 1/|z|², which integrates to 2 pi ln 2 on every dyadic annulus"
        ),
    );
    literal.known_false = true;
    vec![
        line(
            "annulus energies constant in k",
            spread <= 1e-4,
            format!("max relative spread {spread:.2e} ({})", values.join(", ")),
        ),
        line(
            "annulus energies at p = 2 equal 2 pi ln 2",
            two.iter()
                .all(|a| (a.energy - expected).abs() <= 1e-9 * expected),
            format!("{expected:.10} expected"),
        ),
        literal,
    ]
}

fn estimates() -> Vec<Line> {
    let rule = PolarRule::default();
    let aron = AnalyticSolution::Aronsson;
    let cone = AnalyticSolution::Cone {
        vertex: [0.3, -0.2],
    };
    let affine = AnalyticSolution::Affine {
        b: 0.7,
        a: [1.2, -0.4],
    };
    let fns: [&dyn PlanarFunction; 3] = [&aron, &cone, &affine];

    // flatness: 20 (u, P, ball) cases
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut flat_ok = true;
    let mut worst_flat = 0.0f64;
    for case in 0..20 {
        let (u, center, r): (&dyn PlanarFunction, Point, f64) = match case % 4 {
            0 => (
                &aron,
                [rng.gen_range(2.0..3.0), rng.gen_range(2.0..3.0)],
                rng.gen_range(0.1..0.4),
            ),
            1 => (
                &cone,
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                rng.gen_range(0.1..1.0),
            ),
            2 => (
                &aron,
                [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)],
                rng.gen_range(0.2..1.0),
            ),
            _ => (
                &affine,
                [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
                rng.gen_range(0.1..2.0),
            ),
        };
        let p = match case % 3 {
            0 => Affine::tangent(u, center),
            1 => affine_fit(&rule, u, center, 2.0 * r).unwrap(),
            _ => Affine {
                b: rng.gen_range(-1.0..1.0),
                a: [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
            },
        };
        let rep = flatness_ratio(&rule, u, &p, center, r).unwrap();
        flat_ok &= rep.holds == Some(true);
        worst_flat = worst_flat.max(rep.measured_ratio);
    }

    // scale invariance of the three ratios
    let mut drift = 0.0f64;
    for u in fns {
        for (c, r) in [([2.0, 1.5], 0.5), ([0.9, -0.7], 0.4)] {
            let base = [
                gradient_estimate_ratio(&rule, u, c, r)
                    .unwrap()
                    .measured_ratio,
                l4_bound_ratio(&rule, u, c, r).unwrap().measured_ratio,
                jacobian_mass_bound(&rule, u, c, r).unwrap().measured_ratio,
            ];
            for lam in [0.25, 3.0] {
                let amp = Rescaled {
                    inner: u,
                    amplitude: lam,
                    dilation: 1.0,
                };
                let dil = Rescaled {
                    inner: u,
                    amplitude: 1.0,
                    dilation: lam,
                };
                let cd = [c[0] / lam, c[1] / lam];
                let scaled = [
                    (
                        gradient_estimate_ratio(&rule, &amp, c, r)
                            .unwrap()
                            .measured_ratio,
                        gradient_estimate_ratio(&rule, &dil, cd, r / lam)
                            .unwrap()
                            .measured_ratio,
                    ),
                    (
                        l4_bound_ratio(&rule, &amp, c, r).unwrap().measured_ratio,
                        l4_bound_ratio(&rule, &dil, cd, r / lam)
                            .unwrap()
                            .measured_ratio,
                    ),
                    (
                        jacobian_mass_bound(&rule, &amp, c, r)
                            .unwrap()
                            .measured_ratio,
                        jacobian_mass_bound(&rule, &dil, cd, r / lam)
                            .unwrap()
                            .measured_ratio,
                    ),
                ];
                for (b, (s1, s2)) in base.iter().zip(scaled) {
                    for s in [s1, s2] {
                        drift = drift.max((s - b).abs() / (1.0 + b.abs()));
                    }
                }
            }
        }
    }

    // affine inputs: every left side that must vanish does
    let mut affine_lhs = 0.0f64;
    for (b, a) in [(0.0, [1.0, 0.0]), (2.5, [-3.0, 4.0]), (-1.0, [0.2, 0.1])] {
        let u = AnalyticSolution::Affine { b, a };
        let p = Affine { b, a };
        for (c, r) in [([0.0, 0.0], 1.0), ([5.0, -3.0], 0.3), ([-20.0, 7.0], 10.0)] {
            affine_lhs = affine_lhs.max(flatness_ratio(&rule, &u, &p, c, r).unwrap().lhs);
            affine_lhs = affine_lhs.max(jacobian_mass_bound(&rule, &u, c, r).unwrap().lhs.abs());
        }
        for pt in liouville_residual(&rule, &u, &[1.0, 10.0, 100.0]).unwrap() {
            affine_lhs = affine_lhs.max(pt.affine_residual);
        }
    }
    vec![
        line(
            "flatness with constant 20",
            flat_ok,
            format!("20 cases, max lhs/rhs {worst_flat:.3}"),
        ),
        line(
            "estimate scale invariance",
            drift <= 1e-9,
            format!("max relative drift {drift:.2e}"),
        ),
        line(
            "affine left sides vanish",
            affine_lhs <= 1e-12,
            format!("max {affine_lhs:.2e}"),
        ),
    ]
}

fn solver() -> Vec<Line> {
    let affine = |x: Point| 0.3 + 1.7 * x[0] - 0.9 * x[1];
    let g = GridSpec::square(24, -1.0, 1.0).unwrap();
    let exact = ScalarField::sample(g, affine).unwrap();
    let mut aff_err = 0.0f64;
    let mut monotone = true;
    for (beta, eps) in [
        (0.0, 0.0),
        (2.0, 0.0),
        (-0.5, 0.1),
        (1.0, 1e-3),
        (6.0, 0.0),
        (30.0, 1e-6),
    ] {
        let out = solve_regularized(&g, &SolveConfig::new(beta, eps), &affine, None).unwrap();
        aff_err = aff_err.max(out.u.max_abs_diff(&exact));
        monotone &= out.report.energy_monotone();
    }
    for p in [1.5, 4.0, 8.0] {
        let out = solve_pharmonic(&g, p, &affine).unwrap();
        aff_err = aff_err.max(out.u.max_abs_diff(&exact));
        monotone &= out.report.energy_monotone();
    }

    // saddle: reproduced exactly by the scheme
    let mut saddle_err = 0.0f64;
    for n in [16, 32, 64] {
        let g = GridSpec::square(n, -1.0, 1.0).unwrap();
        let f = |x: Point| x[0] * x[1];
        let out = solve_pharmonic(&g, 2.0, &f).unwrap();
        saddle_err = saddle_err.max(out.u.max_abs_diff(&ScalarField::sample(g, f).unwrap()));
        monotone &= out.report.energy_monotone();
    }
    let mut orders = Vec::new();
    for p in [3.0, 4.0] {
        let rp = AnalyticSolution::RadialP { p };
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [32, 64, 128] {
            let g = GridSpec::square(n, 0.5, 1.5).unwrap();
            let out = solve_pharmonic(&g, p, &|x| rp.value(x)).unwrap();
            errs.push(
                out.u
                    .max_abs_diff(&ScalarField::sample(g, |x| rp.value(x)).unwrap()),
            );
            hs.push(1.0 / n as f64);
            monotone &= out.report.energy_monotone();
        }
        orders.push(fitted_order(&hs, &errs));
    }
    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);

    // discrete maximum principle on every solved Aronsson field
    let mut worst_excess = 0.0f64;
    let mut check_max = |out: &SolveOutput| {
        let g = out.u.grid;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (i, j, _) in g.nodes() {
            if g.is_boundary(i, j) {
                lo = lo.min(out.u.at(i, j));
                hi = hi.max(out.u.at(i, j));
            }
        }
        for v in &out.u.values {
            worst_excess = worst_excess.max(v - hi).max(lo - v);
        }
    };
    for s in sweep_128() {
        check_max(s);
        monotone &= s.report.energy_monotone();
    }
    let g32 = GridSpec::square(32, 1.0, 2.0).unwrap();
    for p in [1.5, 2.0, 10.0] {
        let out = solve_pharmonic(&g32, p, &aronsson).unwrap();
        monotone &= out.report.energy_monotone();
        check_max(&out);
    }
    vec![
        line(
            "affine reproduction",
            aff_err <= 1e-10,
            format!("max error {aff_err:.2e}"),
        ),
        line(
            "convergence order",
            saddle_err <= 1e-10 && min_order >= 1.8,
            format!("saddle reproduced to {saddle_err:.1e}; radial_p orders {orders:?}"),
        ),
        line(
            "maximum principle",
            worst_excess <= 1e-12,
            format!("max excess over boundary range {worst_excess:.1e}"),
        ),
        line(
            "energy monotone",
            monotone,
            "every accepted Newton step".into(),
        ),
    ]
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Vec<Line>); 9] = [
        ("identities", identity_suite),
        ("pointwise/weak", pointwise_vs_weak),
        ("saddle", saddle_benchmark),
        ("bounds", bounds),
        ("p-sweep", p_sweep),
        ("extremal", extremal_sharpness),
        ("annulus", annulus_energies),
        ("estimates", estimates),
        ("solver", solver),
    ];
    let mut failed = 0;
    let mut known = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let lines = run();
        let pass = lines.iter().all(|l| l.pass || l.known_false);
        println!(
            "criterion {} ({name}): {} [{:.1} s]",
            n + 1,
            if pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        for l in &lines {
            let tag = match (l.pass, l.known_false) {
                (true, _) => "PASS",
                (false, false) => "FAIL",
                (false, true) => "FAIL (clause false as stated)",
            };
            println!("  {tag}: {}: {}", l.label, l.detail);
            if !l.pass {
                if l.known_false {
                    known += 1;
                } else {
                    failed += 1;
                }
            }
        }
    }
    println!("acceptance: {failed} failing checks, {known} literal clause(s) false as stated");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
