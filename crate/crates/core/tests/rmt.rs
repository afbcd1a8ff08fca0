use liberation::linalg::*;
use liberation::params::TraceParams;
use liberation::rmt::*;
use liberation::Complex;

fn random_hermitian(d: usize, rng: &mut RngStream) -> HermitianMatrix {
    gue_increment(d, d as f64, rng).unwrap()
}

#[test]
fn gue_normalisation() {
    let (d, dt, n) = (64, 0.01, 1000);
    let mut rng = RngStream::new(11, 0);
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let x = gue_increment(d, dt, &mut rng).unwrap();
            x.matrix().as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / d as f64
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sigma = (var / n as f64).sqrt();
    assert!((mean - dt).abs() < 3.0 * sigma, "mean {mean} ± {sigma}");
}

#[test]
fn gue_is_deterministic_per_stream() {
    let a = gue_increment(8, 0.1, &mut RngStream::new(3, 9)).unwrap();
    let b = gue_increment(8, 0.1, &mut RngStream::new(3, 9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn haar_second_moment_and_unitarity() {
    let (d, n) = (16, 2000);
    let mut rng = RngStream::new(5, 0);
    let mut vals = Vec::with_capacity(n);
    for _ in 0..n {
        let u = haar_unitary(d, &mut rng).unwrap();
        assert!(u.matrix().unitarity_defect() < 1e-12);
        vals.push(u.matrix()[(0, 0)].norm_sqr());
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    // |U11|² ~ Beta(1, d−1): variance (d−1)/(d²(d+1))
    let sigma = (((d - 1) as f64 / ((d * d * (d + 1)) as f64)) / n as f64).sqrt();
    assert!((mean - 1.0 / d as f64).abs() < 3.0 * sigma, "mean {mean}");
}

#[test]
fn haar_is_left_invariant_in_distribution() {
    // Re Tr(W U) for a fixed unitary W has mean zero under Haar measure.
    let d = 8;
    let mut rng = RngStream::new(6, 0);
    let w = haar_unitary(d, &mut rng).unwrap();
    let n = 2000;
    let mean = (0..n).map(|_| w.matrix().matmul(haar_unitary(d, &mut rng).unwrap().matrix()).trace().re).sum::<f64>()
        / n as f64;
    // Var Re Tr(WU) = ½
    assert!(mean.abs() < 3.0 * (0.5 / n as f64).sqrt());
}

#[test]
fn eigensolver_certifies_random_matrices() {
    let mut rng = RngStream::new(13, 0);
    for k in 0..50 {
        let d = 1 + (k * 37) % 128;
        let a = random_hermitian(d, &mut rng);
        let (l, v) = hermitian_eigen(&a).unwrap();
        assert!(l.windows(2).all(|w| w[0] <= w[1]));
        let norm = a.matrix().max_abs().max(1.0);
        let mut vl = v.matrix().clone();
        vl.scale_columns(&l.iter().map(|&x| Complex::new(x, 0.0)).collect::<Vec<_>>());
        let resid = a.matrix().matmul(v.matrix()).max_abs_diff(&vl);
        assert!(resid <= 1e-10 * d as f64 * norm, "d={d}: residual {resid}");
        assert!(v.matrix().unitarity_defect() <= 1e-10 * d as f64);
        let only = hermitian_eigenvalues(&a).unwrap();
        assert!(only.iter().zip(&l).all(|(x, y)| (x - y).abs() < 1e-10 * norm * d as f64));
    }
}

/// Roots of the characteristic polynomial λ³ − c2λ² + c1λ − c0 by the
/// trigonometric formula (three real roots).
fn cubic_roots(m: &CMatrix) -> [f64; 3] {
    let a = |i, j| m[(i, j)];
    let c2 = (a(0, 0) + a(1, 1) + a(2, 2)).re;
    let c1 = (a(0, 0) * a(1, 1) + a(0, 0) * a(2, 2) + a(1, 1) * a(2, 2)
        - a(0, 1) * a(1, 0)
        - a(0, 2) * a(2, 0)
        - a(1, 2) * a(2, 1))
    .re;
    let c0 = (a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) - a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0))
        + a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0)))
    .re;
    // depressed cubic in μ = λ − c2/3
    let s = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -(2.0 * c2.powi(3) / 27.0 - c2 * c1 / 3.0 + c0);
    let r = (-p / 3.0).sqrt();
    let phi = (3.0 * q / (2.0 * p * r)).clamp(-1.0, 1.0).acos() / 3.0;
    let mut roots = [0, 1, 2].map(|k| s + 2.0 * r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos());
    roots.sort_by(f64::total_cmp);
    roots
}

#[test]
fn three_by_three_cases_match_the_characteristic_polynomial() {
    let mut rng = RngStream::new(17, 0);
    for _ in 0..20 {
        let a = random_hermitian(3, &mut rng);
        let exact = cubic_roots(a.matrix());
        let l = hermitian_eigenvalues(&a).unwrap();
        for (x, y) in l.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-12, "{l:?} vs {exact:?}");
        }
    }
}

#[test]
fn brownian_motion_stays_unitary() {
    let mut rng = RngStream::new(19, 0);
    let u = evolve_ubm(48, 2.0, 40, &mut rng).unwrap();
    assert!(u.matrix().unitarity_defect() <= 1e-10 * 48.0);
}

/// `J1(x)/ (x/2)` by its power series.
fn bessel_ratio(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..30 {
        term *= -(x * x / 4.0) / (k as f64 * (k + 1) as f64);
        sum += term;
    }
    sum
}

/// For large d, one exponential step multiplies the first trace moment by
/// τ(e^{iX}) = J1(2√dt)/√dt for a semicircular X of variance dt.
#[test]
fn exponential_scheme_has_the_predicted_weak_bias() {
    let (d, trials) = (64, 200);
    let mut errors = Vec::new();
    for steps in [2usize, 4, 8] {
        let dt = 1.0 / steps as f64;
        let predicted = bessel_ratio(2.0 * dt.sqrt()).powi(steps as i32);
        let base = RngStream::new(23, steps as u64);
        let mean: f64 = (0..trials)
            .map(|k| evolve_ubm(d, 1.0, steps, &mut base.substream(k)).unwrap().matrix().trace().re / d as f64)
            .sum::<f64>()
            / trials as f64;
        assert!((mean - predicted).abs() < 0.004, "steps={steps}: {mean} vs {predicted}");
        errors.push((mean - (-0.5f64).exp()).abs());
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

#[test]
fn angles_at_time_zero_are_the_projection() {
    let e =
        empirical_angle_measure(32, &TraceParams::half(), 0.0, 1, 2, Coupling::Equal, &RngStream::new(1, 0)).unwrap();
    let m = e.measure(DEFAULT_BINS).unwrap();
    assert!((m.atom_mass_at(0.0) - 0.5).abs() < 1e-12 && (m.atom_mass_at(1.0) - 0.5).abs() < 1e-12);
    assert!((m.total_mass() - 1.0).abs() < 1e-12);
}

#[test]
fn liberated_pairs_are_in_general_position() {
    let e =
        empirical_angle_measure(64, &TraceParams::half(), 0.5, 10, 2, Coupling::Equal, &RngStream::new(2, 0)).unwrap();
    assert!(e.eigenvalues.iter().all(|&l| (-1e-10..=1.0 + 1e-10).contains(&l)));
    assert!(e.atom_mass_at_one(ATOM_TOL) < 2.0 / 64.0);
    let p = TraceParams::new(0.7, 0.8).unwrap();
    let e = empirical_angle_measure(64, &p, 1.0, 10, 2, Coupling::HaarFree, &RngStream::new(3, 0)).unwrap();
    assert!((e.atom_mass_at_one(ATOM_TOL) - 0.5).abs() < 0.02);
}

#[test]
fn haar_free_pair_has_the_jacobi_atoms() {
    let p = TraceParams::new(0.3, 0.6).unwrap();
    let e = empirical_angle_measure(64, &p, 3.0, 15, 2, Coupling::HaarFree, &RngStream::new(4, 0)).unwrap();
    let m = e.measure(DEFAULT_BINS).unwrap();
    assert!((m.atom_mass_at(0.0) - 0.7).abs() < 0.02);
    assert_eq!(m.atom_mass_at(1.0), 0.0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let run = |threads| {
        rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
            empirical_angle_measure(24, &TraceParams::half(), 0.7, 5, 4, Coupling::Equal, &RngStream::new(9, 0))
                .unwrap()
        })
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(a.eigenvalues, b.eigenvalues);
    assert_eq!(a.measure(DEFAULT_BINS).unwrap(), b.measure(DEFAULT_BINS).unwrap());
}
