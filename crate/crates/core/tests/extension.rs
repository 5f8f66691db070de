use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ultrajet::extension_engine::{
    assemble, boundary_limits, dyadic_samples, gevrey_jet, random_samples, rows_for, verify_bounds, ExtensionFunction,
    ExtensionRows, PlanOptions,
};
use ultrajet::ultrajets::{certify_at, JetFile, UltraJet};
use ultrajet::trend::Trend;
use ultrajet::weight_functions::WeightFunction;
use ultrajet::whitney_geometry::CompactSet1D;
use ultrajet::Error;

fn sqrt_rows() -> ExtensionRows {
    rows_for(&WeightFunction::power(0.5).unwrap(), 1.0).unwrap()
}

fn cos_jet(e: CompactSet1D, base: &[f64], alpha_max: usize) -> UltraJet {
    UltraJet::from_fn(e, base, alpha_max, |a, k| (a + k as f64 * std::f64::consts::FRAC_PI_2).cos()).unwrap()
}

fn extend(jet: &UltraJet, rows: &ExtensionRows) -> ExtensionFunction {
    let cert = certify_at(jet, &rows.v, rows.xi).unwrap();
    assemble(jet, &cert, rows, &PlanOptions::new(16.0 * cert.rho)).unwrap()
}

fn points_in(f: &ExtensionFunction, n: usize, seed: u64) -> Vec<f64> {
    random_samples(f, n, seed)
}

#[test]
fn linear_in_the_jet() {
    let rows = sqrt_rows();
    let e = CompactSet1D::point(0.0).unwrap();
    let a = gevrey_jet(&rows, 40).unwrap();
    let b = cos_jet(e, &[0.0], 40).scale(0.5);
    let sum = a.add(&b).unwrap();
    let cert = certify_at(&sum, &rows.v, 1.0).unwrap();
    let opts = PlanOptions::new(16.0 * cert.rho);
    let fa = assemble(&a, &cert, &rows, &opts).unwrap();
    let fb = assemble(&b, &cert, &rows, &opts).unwrap();
    let fs = assemble(&sum, &cert, &rows, &opts).unwrap();
    assert_eq!(fa.plan(), fs.plan());
    for x in points_in(&fs, 100, 4) {
        let va = fa.eval_derivatives(x, 4).unwrap();
        let vb = fb.eval_derivatives(x, 4).unwrap();
        let vs = fs.eval_derivatives(x, 4).unwrap();
        for k in 0..=4 {
            let scale = va[k].abs() + vb[k].abs() + 1.0;
            assert!((vs[k] - va[k] - vb[k]).abs() <= 1e-12 * scale, "x = {x}, k = {k}");
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let rows = sqrt_rows();
    let f = extend(&gevrey_jet(&rows, 40).unwrap(), &rows);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    while checked < 10 {
        let x = rng.gen_range(-0.3..0.3);
        if !f.in_region(x) || x.abs() < 1e-3 {
            continue;
        }
        checked += 1;
        let exact = f.eval_derivatives(x, 4).unwrap();
        let step = 1e-5 * x.abs();
        for alpha in 1..=4 {
            let g = |y: f64| f.eval_derivatives(y, alpha - 1).unwrap()[alpha - 1];
            let d = |s: f64| (g(x + s) - g(x - s)) / (2.0 * s);
            let fd = (4.0 * d(step / 2.0) - d(step)) / 3.0;
            let scale = exact[alpha].abs().max(x.abs().powi(-(alpha as i32)) * 1e-3).max(1.0);
            assert!((fd - exact[alpha]).abs() <= 1e-6 * scale, "x = {x}, alpha = {alpha}: {fd} vs {}", exact[alpha]);
        }
    }
}

#[test]
fn polynomial_jets_extend_to_themselves() {
    let rows = sqrt_rows();
    let e = CompactSet1D::point(0.0).unwrap();
    let coeffs = [1.0, 0.25, -0.5];
    let f = extend(&UltraJet::polynomial(e, &[0.0], 40, &coeffs).unwrap(), &rows);
    let mut checked = 0;
    for x in dyadic_samples(&f, 40) {
        if f.local_degree(x.abs()).0 < 2 {
            continue;
        }
        let v = f.eval_derivatives(x, 3).unwrap();
        let want = [coeffs[0] + coeffs[1] * x + coeffs[2] * x * x, coeffs[1] + 2.0 * coeffs[2] * x, 2.0 * coeffs[2], 0.0];
        for k in 0..4 {
            assert!((v[k] - want[k]).abs() <= 1e-12, "x = {x}, k = {k}: {} vs {}", v[k], want[k]);
        }
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn union_of_interval_and_point() {
    let rows = sqrt_rows();
    let e = CompactSet1D::new(vec![(-1.0, 0.0), (1.0, 1.0)]).unwrap();
    let jet = cos_jet(e, &[-1.0, 0.0, 1.0], 40);
    let f = extend(&jet, &rows);
    for a in [-1.0, 0.0, 1.0] {
        assert_eq!(f.eval_derivatives(a, 6).unwrap()[..], jet.values_at(a).unwrap()[..=6]);
    }
    let mut xs = dyadic_samples(&f, 30);
    xs.extend(random_samples(&f, 200, 2));
    assert!(xs.iter().any(|x| *x > 1.0) && xs.iter().any(|x| *x < -1.0) && xs.iter().any(|x| *x > 0.0 && *x < 1.0));
    let rep = verify_bounds(&f, &xs, 6).unwrap();
    assert!(rep.passed, "{rep:?}");
    for a in [0.0, 1.0] {
        let lim = boundary_limits(&f, a, 4, 30).unwrap();
        for r in &lim.rows {
            let tail: Vec<f64> = r.errors.iter().filter(|e| e.0 >= 9).map(|e| e.2).collect();
            assert!(tail.windows(2).all(|w| w[1] <= w[0]), "a = {a}, alpha = {}", r.alpha);
            assert!(r.fitted.is_finite() && r.fitted_trend != Trend::Diverging);
        }
    }
}

#[test]
fn region_and_order_are_enforced() {
    let rows = sqrt_rows();
    let f = extend(&gevrey_jet(&rows, 40).unwrap(), &rows);
    assert!(matches!(f.eval(5.0), Err(Error::OutsideRegion { .. })));
    let p = f.plan().p_fold;
    assert!(matches!(f.eval_derivatives(1e-2, p + 1), Err(Error::OrderOverflow { .. })));
}

#[test]
fn jet_files_round_trip() {
    let e = CompactSet1D::new(vec![(-1.0, 0.0), (1.0, 1.0)]).unwrap();
    let jet = cos_jet(e, &[-1.0, 0.0, 1.0], 12);
    let text = serde_json::to_string(&jet.to_file()).unwrap();
    let back = UltraJet::from_file(&serde_json::from_str::<JetFile>(&text).unwrap()).unwrap();
    assert_eq!(back, jet);
    let missing = r#"{"E": [[-1, 0]], "alpha_max": 0, "values": [[0, 0, 1.0]]}"#;
    assert!(UltraJet::from_file(&serde_json::from_str::<JetFile>(missing).unwrap()).is_err());
}
