//! Monte Carlo estimators against closed forms and cross-estimates.

use betti_thermo::limits::{
    build_limit_curve, estimate_betti_rate, estimate_binomial_expectation, estimate_poissonized_expectation,
    estimate_simplex_rate, intensity_perturbation_check, scaling_check, BoundaryMode, ExpectationParams, RateParams,
    ScalingParams,
};
use betti_thermo::pointproc::{DensityGrid, IntensityGrid, RngStream, Window};

fn torus(dim: usize, lambda: f64, r: f64, volume: f64, reps: usize) -> RateParams {
    RateParams {
        dim,
        lambda,
        r,
        volume,
        reps,
        boundary: BoundaryMode::Torus,
    }
}

#[test]
fn line_pair_rate_closed_form() {
    // on the circle of length L, E S_1 = λ² r L
    for (lambda, r) in [(1.0, 0.5), (2.0, 0.3), (0.5, 1.0)] {
        let rec = estimate_simplex_rate(&torus(1, lambda, r, 200.0, 200), 1, RngStream::from_seed(31)).unwrap();
        let want = lambda * lambda * r;
        assert!(
            (rec.mean - want).abs() <= 3.0 * rec.stderr,
            "λ={lambda} r={r}: {} ± {}",
            rec.mean,
            rec.stderr
        );
    }
}

#[test]
fn line_pair_rate_plain_window() {
    // an interval of length L loses the pairs that would wrap: E S_1 = λ²(rL − r²/2)
    let p = RateParams {
        boundary: BoundaryMode::Plain,
        ..torus(1, 1.0, 2.0, 50.0, 400)
    };
    let rec = estimate_simplex_rate(&p, 1, RngStream::from_seed(32)).unwrap();
    let want = (2.0 * 50.0 - 2.0) / 50.0;
    assert!(
        (rec.mean - want).abs() <= 3.0 * rec.stderr,
        "{} ± {}",
        rec.mean,
        rec.stderr
    );
}

#[test]
fn line_triangle_rate_closed_form() {
    // a triple on a line is a Čech simplex iff its span is ≤ r; counting by
    // the leftmost point gives rate λ³ r² / 2
    let rec = estimate_simplex_rate(&torus(1, 1.0, 1.0, 200.0, 200), 2, RngStream::from_seed(33)).unwrap();
    assert!(
        (rec.mean - 0.5).abs() <= 3.0 * rec.stderr,
        "{} ± {}",
        rec.mean,
        rec.stderr
    );
}

#[test]
fn vertex_rate_and_monotone_simplex_rates() {
    let mut previous = None;
    for lambda in [0.5, 1.0, 1.5] {
        let rec = estimate_simplex_rate(&torus(2, lambda, 1.0, 100.0, 100), 1, RngStream::from_seed(34)).unwrap();
        if let Some((m, s)) = previous {
            let m: f64 = m;
            let s: f64 = s;
            assert!(rec.mean >= m - 3.0 * rec.stderr.hypot(s));
        }
        previous = Some((rec.mean, rec.stderr));
    }
    let vertices = estimate_simplex_rate(&torus(2, 1.5, 1.0, 100.0, 100), 0, RngStream::from_seed(35)).unwrap();
    assert!((vertices.mean - 1.5).abs() <= 3.0 * vertices.stderr);
}

#[test]
fn betti_rate_is_positive() {
    let rec = estimate_betti_rate(&torus(2, 1.0, 1.0, 400.0, 100), 1, RngStream::from_seed(36)).unwrap();
    assert!(rec.mean > 5.0 * rec.stderr, "{} ± {}", rec.mean, rec.stderr);
    let zero = estimate_betti_rate(&torus(2, 0.0, 1.0, 400.0, 10), 1, RngStream::from_seed(36)).unwrap();
    assert_eq!((zero.mean, zero.stderr), (0.0, 0.0));
}

#[test]
fn curve_recovers_other_intensities() {
    // β̂_1(4, 0.5) = 4·curve(1.0) in d = 2
    let curve = build_limit_curve(
        2,
        1,
        &[0.0, 1.0],
        400.0,
        200,
        RngStream::from_seed(37),
        BoundaryMode::Torus,
    )
    .unwrap();
    let (value, stderr) = curve.eval_with_stderr(1.0).unwrap();
    let via_curve = curve.rate(4.0, 0.5).unwrap();
    assert!((via_curve - 4.0 * value).abs() < 1e-15);
    let direct = estimate_betti_rate(&torus(2, 4.0, 0.5, 400.0, 200), 1, RngStream::from_seed(38)).unwrap();
    let combined = (4.0 * stderr).hypot(direct.stderr);
    assert!(
        (via_curve - direct.mean).abs() <= 3.0 * combined,
        "{via_curve} vs {} ± {combined}",
        direct.mean
    );
}

#[test]
fn scaling_examples() {
    for (lambda, theta, r) in [(1.0, 2.0, 1.0), (1.0, 4.0, 0.8), (1.0, 1.0, 1.0)] {
        let report = scaling_check(
            &ScalingParams {
                dim: 2,
                lambda,
                theta,
                r,
                volume: 400.0,
                k: 1,
                reps: 100,
                boundary: BoundaryMode::Torus,
            },
            RngStream::from_seed(39),
        )
        .unwrap();
        assert!(
            report.pass,
            "θ={theta}: {} vs {}",
            report.direct.mean, report.rescaled_over_theta
        );
        if theta == 1.0 {
            assert_eq!(report.difference, 0.0);
        }
    }
}

#[test]
fn binomial_and_poissonized_expectations() {
    let density = DensityGrid::uniform(Window::unit_cube(2).unwrap()).unwrap();
    let one = ExpectationParams {
        n: 1,
        r: 1.0,
        k: 1,
        reps: 50,
    };
    assert_eq!(
        estimate_binomial_expectation(&density, &one, RngStream::from_seed(40))
            .unwrap()
            .mean,
        0.0
    );
    let pois_one = estimate_poissonized_expectation(&density, &one, RngStream::from_seed(40)).unwrap();
    assert!(pois_one.mean < 0.05);

    let p = ExpectationParams {
        n: 800,
        r: 1.0,
        k: 1,
        reps: 200,
    };
    let b = estimate_binomial_expectation(&density, &p, RngStream::from_seed(41)).unwrap();
    let q = estimate_poissonized_expectation(&density, &p, RngStream::from_seed(41)).unwrap();
    assert!((b.mean - q.mean).abs() <= 3.0 * b.stderr.hypot(q.stderr));
    assert_eq!(
        q,
        estimate_poissonized_expectation(&density, &p, RngStream::from_seed(41)).unwrap()
    );
}

#[test]
fn perturbation_gap_shrinks_with_epsilon() {
    let window = Window::centered_cube(2, 100.0).unwrap();
    let base = IntensityGrid::constant(window.clone(), 1.0).unwrap();
    let mut ratios = Vec::new();
    let mut diffs = Vec::new();
    for eps in [0.2, 0.1, 0.05] {
        let mut values = vec![1.0; 4];
        values[0] += eps;
        let g = IntensityGrid::new(window.clone(), vec![2, 2], values).unwrap();
        let f = IntensityGrid::new(window.clone(), vec![2, 2], vec![1.0; 4]).unwrap();
        let report = intensity_perturbation_check(&f, &g, 1.0, 1, 300, RngStream::from_seed(42)).unwrap();
        assert!(report.bound_holds);
        assert_eq!(report.nested, Some(true));
        assert!((report.l1_distance - 25.0 * eps).abs() < 1e-9);
        diffs.push((report.mean_difference.abs(), report.difference_stderr));
        ratios.push(report.ratio.unwrap());
    }
    // the difference is bounded by a constant times ∫|f − g|
    for (i, &(d, s)) in diffs.iter().enumerate() {
        let scale = [1.0, 0.5, 0.25][i];
        assert!(d <= scale * (diffs[0].0 + 3.0 * diffs[0].1) + 3.0 * s, "{diffs:?}");
    }
    assert!(ratios.iter().all(|r| r.is_finite()));
    let same = intensity_perturbation_check(&base, &base, 1.0, 1, 20, RngStream::from_seed(43)).unwrap();
    assert_eq!(same.mean_difference, 0.0);
}
