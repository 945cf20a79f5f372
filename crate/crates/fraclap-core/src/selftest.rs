//! The acceptance gate: nine numbered end-to-end checks with pinned
//! tolerances, runnable as a library call (the integration test suite) or
//! through `fraclap selftest`.

use crate::extension::{apply_via_extension, calibrate_dtn, MeshSpec};
use crate::gamma::{
    admissible, ft_homogeneous_constant, ft_homogeneous_constant_unit_freq, SignOutcome,
};
use crate::grid::{periodized_gaussian, FracParams, PeriodicField};
use crate::models::{
    bubble_residual, bubble_residual_direct, completeness_probe, growth_diagnostic,
    hankel_ft_oracle, verify_homogeneous_action, BubbleGridSpec, BubbleParams,
    HomogeneityGridSpec, QuadratureSpec, SingularModel,
};
use crate::spectral::{apply_pv, apply_spectral, compose_inverse_check, MultiplierSpec};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub seconds: f64,
}

fn outcome(
    index: usize,
    name: &'static str,
    start: Instant,
    passed: bool,
    details: String,
) -> CriterionResult {
    CriterionResult {
        index,
        name,
        passed,
        details,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// 1: at γ=1 the admissibility predicate equals k < (n−2)/2 exactly.
pub fn criterion_1() -> CriterionResult {
    let t = Instant::now();
    let mut failures = Vec::new();
    for n in 3u32..=12 {
        for k in 0..n {
            match admissible(n, k, 1.0) {
                Ok(r) => {
                    let simple = (k as f64) < (n as f64 - 2.0) / 2.0;
                    if r.dimrest_holds != simple {
                        failures.push(format!("(n={n},k={k})"));
                    }
                }
                Err(e) => failures.push(format!("(n={n},k={k}): {e}")),
            }
        }
    }
    let details = if failures.is_empty() {
        "dimrest == (k < (n-2)/2) for all n in 3..=12, k < n".into()
    } else {
        format!("mismatches: {}", failures.join(", "))
    };
    outcome(1, "admissibility equivalence at gamma=1", t, failures.is_empty(), details)
}

/// 2: sign(λ) equals the Eq-ratio sign on a 500-tuple pole-avoiding scan.
pub fn criterion_2() -> CriterionResult {
    let t = Instant::now();
    let mut checked = 0usize;
    let mut bad = 0usize;
    'outer: for n in 3u32..=10 {
        for k in 0..n {
            let mut g = 0.0137;
            while g < n as f64 / 2.0 {
                if let Ok(r) = admissible(n, k, g) {
                    if r.ratio_sign != SignOutcome::Indeterminate && !r.lambda.is_pole {
                        let ls = if r.lambda.sign > 0 {
                            SignOutcome::Positive
                        } else {
                            SignOutcome::Negative
                        };
                        checked += 1;
                        if ls != r.ratio_sign {
                            bad += 1;
                        }
                        if checked >= 500 {
                            break 'outer;
                        }
                    }
                }
                g += 0.0719;
            }
        }
    }
    outcome(
        2,
        "sign coherence lambda vs admissibility ratio",
        t,
        checked >= 500 && bad == 0,
        format!("{checked} tuples checked, {bad} sign mismatches"),
    )
}

/// 3: spectral vs P.V. within 1e−3 and spectral vs extension within 1e−4 on
/// periodized Gaussians, γ ∈ {0.3, 0.5, 0.7}.
pub fn criterion_3() -> CriterionResult {
    let t = Instant::now();
    let mut details = String::new();
    let mut ok = true;
    for &(ndim, pts) in &[(1usize, 256usize), (2, 64)] {
        let field = periodized_gaussian(ndim, pts, 0.8, 2.0 * PI);
        for &g in &[0.3, 0.5, 0.7] {
            let sp = match apply_spectral(&field, &MultiplierSpec::new(g)) {
                Ok(s) => s,
                Err(e) => {
                    return outcome(3, "three-definition agreement", t, false, e.to_string())
                }
            };
            let refmax = sp.max_abs();
            // P.V. at a spread of points
            let mut pv_err: f64 = 0.0;
            let points: Vec<Vec<usize>> = if ndim == 1 {
                (0..16).map(|i| vec![i * pts / 16]).collect()
            } else {
                (0..3)
                    .flat_map(|i| (0..3).map(move |j| vec![i * pts / 3, j * pts / 3]))
                    .collect()
            };
            for pt in &points {
                match apply_pv(&field, g, pt) {
                    Ok(pv) => {
                        let idx = field.flat_index(pt);
                        pv_err = pv_err.max((pv.value() - sp.values()[idx]).norm() / refmax);
                    }
                    Err(e) => {
                        return outcome(3, "three-definition agreement", t, false, e.to_string())
                    }
                }
            }
            // extension route over the whole field
            let ext = match apply_via_extension(&field, g, &MeshSpec::default()) {
                Ok(x) => x,
                Err(e) => {
                    return outcome(3, "three-definition agreement", t, false, e.to_string())
                }
            };
            let ext_err = ext
                .values()
                .iter()
                .zip(sp.values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max)
                / refmax;
            let pass = pv_err <= 1e-3 && ext_err <= 1e-4;
            ok &= pass;
            let _ = writeln!(
                details,
                "  n={ndim} N={pts} gamma={g}: pv {pv_err:.2e} (<=1e-3), ext {ext_err:.2e} (<=1e-4)"
            );
        }
    }
    outcome(3, "three-definition agreement", t, ok, details)
}

/// 4: DtN power law 2γ ± 1e−3 across γ; κ(1/2) = −1 ± 1e−4.
pub fn criterion_4() -> CriterionResult {
    let t = Instant::now();
    let mut details = String::new();
    let mut ok = true;
    for i in 1..=9 {
        let g = i as f64 / 10.0;
        match calibrate_dtn(g, &[1.0, 2.0, 4.0], &MeshSpec::default()) {
            Ok(cal) => {
                let e_err = (cal.fit_exponent - 2.0 * g).abs();
                let mut pass = e_err <= 1e-3;
                if (g - 0.5).abs() < 1e-12 {
                    pass &= (cal.kappa + 1.0).abs() <= 1e-4;
                    let _ = writeln!(
                        details,
                        "  gamma=0.5: exponent err {e_err:.2e}, kappa {:.8} (target -1 +- 1e-4)",
                        cal.kappa
                    );
                } else {
                    let _ = writeln!(details, "  gamma={g}: exponent err {e_err:.2e}");
                }
                ok &= pass;
            }
            Err(e) => {
                ok = false;
                let _ = writeln!(details, "  gamma={g}: {e}");
            }
        }
    }
    outcome(4, "Dirichlet-to-Neumann power law", t, ok, details)
}

/// 5: P_{−γ}∘P_γ = Id on random mean-zero fields to 1e−12.
pub fn criterion_5() -> CriterionResult {
    use rand::{Rng, SeedableRng};
    let t = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut details = String::new();
    let mut ok = true;
    // 1-D field, endpoint gamma = n/2 = 0.5 included
    let mut f1 = PeriodicField::from_fn(vec![64], vec![2.0 * PI], |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .unwrap();
    f1.subtract_mean();
    // 2-D field, endpoint gamma = n/2 = 1 included
    let mut f2 = PeriodicField::from_fn(vec![32, 32], vec![2.0 * PI, 2.0 * PI], |_| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
    .unwrap();
    f2.subtract_mean();
    for (name, field, gs) in [
        ("1-D", &f1, vec![0.5]),
        ("2-D", &f2, vec![0.5, 1.0, 1.3]),
    ] {
        for g in gs {
            match compose_inverse_check(field, g) {
                Ok(err) => {
                    ok &= err < 1e-12;
                    let _ = writeln!(details, "  {name} gamma={g}: rel err {err:.2e}");
                }
                Err(e) => {
                    ok = false;
                    let _ = writeln!(details, "  {name} gamma={g}: {e}");
                }
            }
        }
    }
    outcome(5, "functional equation P_g o P_-g = Id", t, ok, details)
}

/// 6: homogeneous-action exponent within 2% and prefactor within 5% of the
/// λ·a prediction; the (2,1,0.5) tuple reproduces a negative prefactor.
pub fn criterion_6() -> CriterionResult {
    let t = Instant::now();
    let mut details = String::new();
    let mut ok = true;
    let cases: [(u32, u32, f64, usize); 4] = [
        (1, 0, 0.25, 4096),
        (2, 0, 0.5, 1024),
        (2, 1, 0.5, 4096),
        (3, 1, 0.4, 2048),
    ];
    for (n, k, g, pts) in cases {
        let model = match SingularModel::new(n, k, g, 1.0) {
            Ok(m) => m,
            Err(e) => return outcome(6, "homogeneous-action verification", t, false, e.to_string()),
        };
        let spec = HomogeneityGridSpec::new(pts);
        let h = spec.box_length / pts as f64;
        match verify_homogeneous_action(&model, &spec, 4.0 * h) {
            Ok(rep) => {
                let mut pass = rep.exponent_rel_err <= 0.02 && rep.prefactor_rel_err <= 0.05;
                if (n, k) == (2, 1) {
                    pass &= rep.fitted_prefactor < 0.0;
                }
                ok &= pass;
                let _ = writeln!(
                    details,
                    "  (n={n},k={k},g={g}): e={:.4} (err {:.2}%), B={:+.5} vs {:+.5} (err {:.2}%), stable={}",
                    rep.fitted_exponent,
                    100.0 * rep.exponent_rel_err,
                    rep.fitted_prefactor,
                    rep.lambda_predicted,
                    100.0 * rep.prefactor_rel_err,
                    rep.window_stable
                );
            }
            Err(e) => {
                ok = false;
                let _ = writeln!(details, "  (n={n},k={k},g={g}): {e}");
            }
        }
    }
    outcome(6, "homogeneous-action verification", t, ok, details)
}

/// 7: the Hankel oracle matches exactly one π-exponent variant at
/// (N=2, α=1/2), matches both at self-dual points, and the closed-form
/// duality holds to 1e−12.
pub fn criterion_7() -> CriterionResult {
    let t = Instant::now();
    let quad = QuadratureSpec::default();
    let mut details = String::new();
    let mut ok = true;
    for (n, a) in [(1u32, 0.5f64), (2, 1.0), (3, 1.5)] {
        match hankel_ft_oracle(n, a, &quad) {
            Ok(v) => {
                let pass = (v - 1.0).abs() <= 1e-3;
                ok &= pass;
                let _ = writeln!(details, "  self-dual (N={n},a={a}): oracle {v:.6}");
            }
            Err(e) => {
                ok = false;
                let _ = writeln!(details, "  self-dual (N={n},a={a}): {e}");
            }
        }
    }
    match hankel_ft_oracle(2, 0.5, &quad) {
        Ok(v) => {
            let printed = ft_homogeneous_constant(2, 0.5).unwrap();
            let unit = ft_homogeneous_constant_unit_freq(2, 0.5).unwrap();
            let agrees_printed = ((v - printed) / printed).abs() <= 1e-3;
            let agrees_unit = ((v - unit) / unit).abs() <= 1e-3;
            ok &= agrees_printed != agrees_unit; // exactly one
            let _ = writeln!(
                details,
                "  (N=2,a=0.5): oracle {v:.6}; printed-variant {printed:.6} match={agrees_printed}, \
                 unit-freq variant {unit:.6} match={agrees_unit}"
            );
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(details, "  (N=2,a=0.5): {e}");
        }
    }
    let mut dual_max: f64 = 0.0;
    for n in 1u32..=6 {
        let mut a = 0.05 * n as f64;
        while a < n as f64 {
            let c1 = ft_homogeneous_constant(n, a).unwrap();
            let c2 = ft_homogeneous_constant(n, n as f64 - a).unwrap();
            dual_max = dual_max.max((c1 * c2 - 1.0).abs());
            a += 0.1 * n as f64;
        }
    }
    ok &= dual_max <= 1e-12;
    let _ = writeln!(details, "  duality max |c*c' - 1| = {dual_max:.2e}");
    outcome(7, "c(N,alpha) convention resolution", t, ok, details)
}

/// 8: bubble residual constancy and invariances. The (1, 0.5) tuple is
/// degenerate (n = 2γ): the module's own boundary-decay precondition is
/// unsatisfiable, which is asserted as the documented in-band error; the
/// 1-D representative is run at (1, 0.25). The (2, 0.75) tuple cannot meet
/// the boundary precondition on any feasible grid (decay (μ/L)^{1/2}), so it
/// runs through the grid-free direct quadrature route.
pub fn criterion_8() -> CriterionResult {
    let t = Instant::now();
    let mut details = String::new();
    let mut ok = true;

    // (1, 0.5): degenerate tuple, must error in-band
    let degenerate = BubbleParams::new(1, 0.5, 1.0, vec![0.0], 1.0).unwrap();
    match bubble_residual(&degenerate, &BubbleGridSpec::new(1 << 14, 4096.0)) {
        Err(e) if e.is_precondition() => {
            let _ = writeln!(details, "  (1,0.5): degenerate (n=2g), in-band error as documented");
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(details, "  (1,0.5): unexpected error class: {e}");
        }
        Ok(_) => {
            ok = false;
            let _ = writeln!(details, "  (1,0.5): unexpectedly produced a report");
        }
    }

    // (1, 0.25): grid route, box satisfying the 1e-3 boundary precondition
    let n_1d = 1usize << 23;
    let l_1d = (1u64 << 21) as f64;
    let b1 = BubbleParams::new(1, 0.25, 1.0, vec![0.0], 1.0).unwrap();
    let spec1 = BubbleGridSpec::new(n_1d, l_1d);
    let base = match bubble_residual(&b1, &spec1) {
        Ok(r) => r,
        Err(e) => return outcome(8, "bubble residual", t, false, format!("(1,0.25): {e}")),
    };
    ok &= base.residual_cv <= 0.02;
    let _ = writeln!(
        details,
        "  (1,0.25) grid: Lambda={:.6}, CV={:.2e} (<=2e-2), boundary {:.2e}",
        base.lambda_estimate, base.residual_cv, base.boundary_ratio
    );
    // translation invariance: shift the center by half a box
    let b1t = BubbleParams::new(1, 0.25, 1.0, vec![l_1d / 2.0], 1.0).unwrap();
    match bubble_residual(&b1t, &spec1) {
        Ok(r) => {
            let shift = ((r.lambda_estimate - base.lambda_estimate) / base.lambda_estimate).abs();
            ok &= shift <= 1e-6;
            let _ = writeln!(details, "  translation: |dLambda|/Lambda = {shift:.2e} (<=1e-6)");
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(details, "  translation: {e}");
        }
    }
    // scaling invariance: (mu, L, h) -> (2 mu, 2L, 2h)
    let b1s = BubbleParams::new(1, 0.25, 2.0, vec![0.0], 1.0).unwrap();
    match bubble_residual(&b1s, &BubbleGridSpec::new(n_1d, 2.0 * l_1d)) {
        Ok(r) => {
            let shift = ((r.lambda_estimate - base.lambda_estimate) / base.lambda_estimate).abs();
            ok &= shift <= 1e-3;
            let _ = writeln!(details, "  scaling (grid): |dLambda|/Lambda = {shift:.2e} (<=1e-3)");
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(details, "  scaling (grid): {e}");
        }
    }

    // (2, 0.5): grid route
    let b2 = BubbleParams::new(2, 0.5, 1.0, vec![0.0, 0.0], 1.0).unwrap();
    let spec2 = BubbleGridSpec::new(5120, 2048.0);
    match bubble_residual(&b2, &spec2) {
        Ok(r) => {
            ok &= r.residual_cv <= 0.02;
            let _ = writeln!(
                details,
                "  (2,0.5) grid: Lambda={:.6}, CV={:.2e} (<=2e-2), boundary {:.2e}",
                r.lambda_estimate, r.residual_cv, r.boundary_ratio
            );
            // cross-check the two routes
            if let Ok(d) = bubble_residual_direct(&b2) {
                let dev = ((r.lambda_estimate - d.lambda_estimate) / d.lambda_estimate).abs();
                let _ = writeln!(details, "  (2,0.5) grid-vs-direct: {dev:.2e}");
                ok &= dev <= 1e-3;
            }
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(details, "  (2,0.5) grid: {e}");
        }
    }

    // (2, 0.75): direct route (grid precondition unreachable; see docs)
    let b3 = BubbleParams::new(2, 0.75, 1.0, vec![0.0, 0.0], 1.0).unwrap();
    match bubble_residual_direct(&b3) {
        Ok(r) => {
            ok &= r.residual_cv <= 0.02;
            let _ = writeln!(
                details,
                "  (2,0.75) direct: Lambda={:.6}, CV={:.2e} (<=2e-2)",
                r.lambda_estimate, r.residual_cv
            );
            let b3s = BubbleParams::new(2, 0.75, 2.0, vec![0.0, 0.0], 1.0).unwrap();
            match bubble_residual_direct(&b3s) {
                Ok(rs) => {
                    let shift = ((rs.lambda_estimate - r.lambda_estimate) / r.lambda_estimate).abs();
                    ok &= shift <= 1e-3;
                    let _ = writeln!(
                        details,
                        "  scaling (direct): |dLambda|/Lambda = {shift:.2e} (<=1e-3)"
                    );
                }
                Err(e) => {
                    ok = false;
                    let _ = writeln!(details, "  scaling (direct): {e}");
                }
            }
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(details, "  (2,0.75) direct: {e}");
        }
    }
    outcome(8, "bubble residual", t, ok, details)
}

/// 9: growth diagnostic on the exact model and the borderline completeness
/// classification.
pub fn criterion_9() -> CriterionResult {
    let t = Instant::now();
    let mut details = String::new();
    let mut ok = true;
    let params = FracParams::new(2, 0.5).unwrap();
    let lambda = vec![vec![0.0, 0.0]];
    let expo = -(2.0 - 2.0 * 0.5) / 2.0;
    let samples: Vec<(Vec<f64>, f64)> = (1..50)
        .map(|i| {
            let z = vec![0.07 * i as f64, 0.11 * i as f64];
            let d = (z[0] * z[0] + z[1] * z[1]).sqrt();
            (z, d.powf(expo))
        })
        .collect();
    match growth_diagnostic(&samples, &lambda, &params) {
        Ok(r) => {
            let pass = (r.sup_constant - 1.0).abs() <= 1e-12;
            ok &= pass;
            let _ = writeln!(details, "  exact model: sup = {} ({} samples)", r.sup_constant, r.samples_count);
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(details, "  growth: {e}");
        }
    }
    let ray: Vec<(f64, f64)> = (0..48)
        .map(|i| {
            let d = 3.0 * 0.85f64.powi(i);
            (d, d.powf(-0.5))
        })
        .collect();
    match completeness_probe(&ray, &params) {
        Ok(r) => {
            ok &= r.divergent;
            let _ = writeln!(
                details,
                "  borderline completeness: tail exponent {:.6}, divergent = {}",
                r.tail_exponent, r.divergent
            );
        }
        Err(e) => {
            ok = false;
            let _ = writeln!(details, "  completeness: {e}");
        }
    }
    outcome(9, "growth diagnostic sanity", t, ok, details)
}

/// Run all nine criteria in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
    ]
}

/// Run a subset by index (1-based).
pub fn run_selected(indices: &[usize]) -> Vec<CriterionResult> {
    indices
        .iter()
        .filter_map(|&i| match i {
            1 => Some(criterion_1()),
            2 => Some(criterion_2()),
            3 => Some(criterion_3()),
            4 => Some(criterion_4()),
            5 => Some(criterion_5()),
            6 => Some(criterion_6()),
            7 => Some(criterion_7()),
            8 => Some(criterion_8()),
            9 => Some(criterion_9()),
            _ => None,
        })
        .collect()
}
