//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ultrajet::cli_report::{run_job, Cli, Command, Job};
use ultrajet::extension_engine::{
    assemble, assemble_unchecked, boundary_limits, dyadic_samples, gevrey_jet, random_samples, rows_for,
    verify_bounds, PlanOptions,
};
use ultrajet::matrix_calculus::{
    associated_matrix, fit_sandwich, gamma_doubling_check, interleave_matrix, interleave_sequence, lemma8_regularize,
    sandwich_h, strong_regularization, DEFAULT_XI_GRID,
};
use ultrajet::partition_of_unity::{build_partition, REFERENCE_MARGIN};
use ultrajet::seq_calculus::{gamma_of_m, h_of_m, log_convex_minorant, omega_of_m, WeightSequence};
use ultrajet::trend::geometric_grid;
use ultrajet::ultrajets::{certify_at, UltraJet};
use ultrajet::weight_functions::{
    classify, kappa_on_grid, young_conjugate, Family, Normalization, WeightFunction, Witness,
};
use ultrajet::whitney_geometry::{coverage, verify_eq14, CompactSet1D, CoverOptions, WhitneyCover};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> std::result::Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || format!("took {:.2?}, limit {limit_s} s", elapsed))
}

fn kappa_closed_form() -> Outcome {
    let start = Instant::now();
    let grid = geometric_grid(1.0, 1e6, 64);
    let mut worst = 0.0_f64;
    for a in [0.2, 0.5, 0.8] {
        let w = WeightFunction::power(a).map_err(|e| e.to_string())?;
        let k = kappa_on_grid(&w, &grid).map_err(|e| e.to_string())?;
        for (t, v) in grid.iter().zip(&k) {
            let want = t.powf(a) / (1.0 - a);
            worst = worst.max((v - want).abs() / want);
        }
    }
    within(start.elapsed(), 5.0)?;
    ensure(worst <= 1e-6, || format!("worst relative error {worst:e}"))?;
    Ok(format!("worst rel err {worst:.1e}"))
}

fn strongness() -> Outcome {
    let grid = geometric_grid(1.0, 1e6, 64);
    let sq = classify(&WeightFunction::power(0.5).unwrap(), &grid).map_err(|e| e.to_string())?;
    let c = match sq.strong_witness {
        Witness::Constant { c, .. } if sq.strong => c,
        ref w => return Err(format!("sqrt(t) not strong: {w:?}")),
    };
    ensure((c / 2.0 - 1.0).abs() <= 0.05, || format!("fitted C = {c}"))?;
    let w = WeightFunction::new(Family::LogSquaredRatio, Normalization::None).unwrap();
    let lr = classify(&w, &grid).map_err(|e| e.to_string())?;
    let samples = match lr.strong_witness {
        Witness::Divergence { samples } if !lr.strong => samples,
        ref w => return Err(format!("t/log^2 t reported strong: {w:?}")),
    };
    let worst = samples.iter().map(|(t, r)| (r / t.ln() - 1.0).abs()).fold(0.0, f64::max);
    ensure(worst <= 0.1, || format!("witness deviates from log t by {worst}"))?;
    Ok(format!("C = {c:.6}, witness/log t within {:.1}%", 100.0 * worst))
}

fn conjugate_and_matrix() -> Outcome {
    let w = WeightFunction::power(0.5).unwrap().normalized();
    let mut worst_conj = 0.0_f64;
    for y in geometric_grid(1.0, 100.0, 50) {
        let want = 2.0 * y * (2.0 * y).ln() - 2.0 * y + 1.0;
        let got = young_conjugate(&w, y).map_err(|e| e.to_string())?;
        worst_conj = worst_conj.max((got - want).abs() / want);
    }
    ensure(worst_conj <= 1e-6, || format!("conjugate rel err {worst_conj:e}"))?;
    let xis = [0.25, 1.0, 4.0];
    let m = associated_matrix(&w, &xis, 40).map_err(|e| e.to_string())?;
    let mut worst_row = 0.0_f64;
    for r in m.rows() {
        for k in 0..=40 {
            let y = 2.0 * r.xi * k as f64;
            // phi* vanishes below slope 1/2, where the closed form does not apply
            let want_log = if y < 1.0 { 0.0 } else { 2.0 * k as f64 * (y / std::f64::consts::E).ln() + 1.0 / r.xi };
            let rel = (r.big.log_value(k) - want_log).exp_m1().abs();
            worst_row = worst_row.max(rel);
        }
    }
    ensure(worst_row <= 1e-5, || format!("matrix row rel err {worst_row:e}"))?;
    Ok(format!("conjugate {worst_conj:.1e}, rows {worst_row:.1e}"))
}

fn identity_suite() -> Outcome {
    let start = Instant::now();
    let sbar = strong_regularization(
        &associated_matrix(&WeightFunction::power(0.5).unwrap(), &DEFAULT_XI_GRID, 256).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?
    .matrix;
    let v = interleave_matrix(&sbar).map_err(|e| e.to_string())?;
    // below t = 1 / m_K / m_{K-1} the stored rows no longer determine h
    let t_min = sbar.rows().iter().map(|r| 2.0 * (-r.divided.log_quotient(256)).exp()).fold(0.0, f64::max);
    let ts = geometric_grid(t_min, 1.0, 64);
    let mut worst_h = 0.0_f64;
    let mut eq3_checked = 0;
    for row in sbar.rows() {
        let m = &row.divided;
        for &t in &ts {
            let h = h_of_m(m, t).map_err(|e| e.to_string())?;
            let dual = (-omega_of_m(m, 1.0 / t).map_err(|e| e.to_string())?).exp();
            worst_h = worst_h.max((h - dual).abs() / dual);
            let g = gamma_of_m(m, t).map_err(|e| e.to_string())?;
            for k in 1..=g {
                ensure(m.log_quotient(k) + t.ln() < 0.0, || format!("m_k t^k not decreasing at k = {k}, t = {t}"))?;
                eq3_checked += 1;
            }
            ensure(m.log_quotient(g + 1) + t.ln() >= 0.0, || format!("Gamma not minimal at t = {t}"))?;
        }
        let mm = log_convex_minorant(m);
        ensure(log_convex_minorant(&mm) == mm, || format!("minorant not idempotent at xi = {}", row.xi))?;
        let dup = interleave_sequence(m).map_err(|e| e.to_string())?;
        for k in 1..=dup.k_max() {
            let src = m.log_quotient(k.div_ceil(2));
            ensure(dup.log_quotient(k).to_bits() == src.to_bits(), || format!("duplication differs at k = {k}"))?;
        }
    }
    ensure(worst_h <= 1e-12, || format!("h/omega duality off by {worst_h:e}"))?;
    let mut rows = 0;
    for xi in [0.25, 0.5, 1.0, 2.0] {
        let r = gamma_doubling_check(&sbar, &v, xi, &ts).map_err(|e| e.to_string())?;
        ensure(r.holds, || format!("Gamma doubling fails at xi = {xi}, t = {:?}", r.first_violation))?;
        rows += 1;
    }
    let raw = WeightSequence::from_log_values(vec![0.0, 2.0, 1.0, 3.5, 3.0, 6.0, 9.0, 12.0, 16.0, 20.0, 25.0, 30.0, 36.0, 42.0, 49.0, 56.0, 64.0])
        .map_err(|e| e.to_string())?;
    let mm = log_convex_minorant(&raw);
    ensure(log_convex_minorant(&mm) == mm, || "minorant of a non-convex head not idempotent".into())?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("t >= {t_min:.3}, duality {worst_h:.1e}, {eq3_checked} monotone steps, Gamma doubling on {rows} rows"))
}

fn sandwiches() -> Outcome {
    let w = WeightFunction::power(0.5).unwrap();
    let s = associated_matrix(&w, &DEFAULT_XI_GRID, 100).map_err(|e| e.to_string())?;
    let reg = strong_regularization(&s).map_err(|e| e.to_string())?;
    let fit = fit_sandwich(&s, &reg.matrix, 1.0, 2.0)
        .map_err(|e| e.to_string())?
        .map_err(|worst| format!("sandwich constants grow, worst ratio {worst}"))?;
    ensure(fit.a.is_finite() && fit.c.is_finite(), || format!("{fit:?}"))?;
    let s200 = associated_matrix(&w, &DEFAULT_XI_GRID, 200).map_err(|e| e.to_string())?;
    let sbar = strong_regularization(&s200).map_err(|e| e.to_string())?.matrix;
    let v = interleave_matrix(&sbar).map_err(|e| e.to_string())?;
    let h = sandwich_h(&sbar, &v, 1.0, 200).map_err(|e| e.to_string())?;
    let h50 = h.h_by_k.iter().find(|x| x.0 == 50).map(|x| x.1).ok_or("no K = 50 fit")?;
    let h200 = h.h_by_k.iter().find(|x| x.0 == 200).map(|x| x.1).ok_or("no K = 200 fit")?;
    ensure((h200 / h50 - 1.0).abs() <= 0.1, || format!("H moved from {h50} to {h200}"))?;
    Ok(format!("A = {:.3}, C = {:.3} (B = 2); H {h50:.4} -> {h200:.4}", fit.a, fit.c))
}

fn lemma8_random() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..100 {
        let n = rng.gen_range(16..200);
        let mut nu = Vec::with_capacity(n);
        let mut acc = 1.0 + rng.gen::<f64>();
        for _ in 0..n {
            acc += rng.gen::<f64>() * 3.0;
            nu.push(acc);
        }
        let c: f64 = rng.gen_range(1.0..4.0);
        let mut r = vec![0.0; n];
        let mut m = f64::INFINITY;
        for i in (0..n).rev() {
            m = m.min(nu[i] / (i + 1) as f64);
            r[i] = m;
        }
        let mu: Vec<f64> = (0..n).map(|i| (i + 1) as f64 * r[i] * rng.gen_range(0.5..=1.0) * c).collect();
        let out = lemma8_regularize(&mu, &nu, c).map_err(|e| format!("trial {trial}: {e}"))?;
        for k in 0..n {
            ensure(out.nu_tilde[k] <= nu[k], || format!("trial {trial}: upper bound at {k}"))?;
            ensure(mu[k] / (k + 1) as f64 <= c * out.ratios[k], || format!("trial {trial}: lower bound at {k}"))?;
            let back = out.nu_tilde[k] / (k + 1) as f64;
            ensure((back - out.ratios[k]).abs() <= 1e-15 * back, || format!("trial {trial}: nu~/k != ratio at {k}"))?;
        }
        ensure(out.ratios.windows(2).all(|w| w[0] <= w[1]), || format!("trial {trial}: ratios not monotone"))?;
    }
    Ok("100 randomized inputs".into())
}

fn whitney() -> Outcome {
    let start = Instant::now();
    let sets = [
        CompactSet1D::point(0.0).unwrap(),
        CompactSet1D::new(vec![(-1.0, 0.0), (1.0, 1.0)]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut details = Vec::new();
    for e in &sets {
        let cover = WhitneyCover::build(e, 1.0).map_err(|x| x.to_string())?;
        let ends = e.endpoints();
        let xs: Vec<f64> = (0..10_000)
            .map(|_| {
                let a = ends[rng.gen_range(0..ends.len())];
                let d = rng.gen_range(-10.0_f64..0.0).exp2().min(0.99) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                a + d
            })
            .filter(|&x| cover.in_region(x))
            .collect();
        let rep = verify_eq14(&cover, &xs);
        ensure(rep.passed(), || format!("cover inequality fails: {:?}", rep.violation))?;
        let cov = coverage(&cover, &xs);
        ensure(cov.uncovered.is_empty(), || format!("uncovered points {:?}", &cov.uncovered[..1]))?;
        ensure(cov.max_overlap <= 3, || format!("overlap {}", cov.max_overlap))?;
        let wide =
            WhitneyCover::build_with(e, 1.0, CoverOptions { expansion: 3.0, ..CoverOptions::default() }).map_err(|x| x.to_string())?;
        ensure(!verify_eq14(&wide, &wide.expanded_samples(16)).passed(), || "expansion 3 not caught".into())?;
        details.push(format!("{} pts overlap {}", xs.len(), cov.max_overlap));
    }
    within(start.elapsed(), 5.0)?;
    Ok(details.join("; "))
}

fn partition() -> Outcome {
    let e = CompactSet1D::new(vec![(-1.0, 0.0), (1.0, 1.0)]).unwrap();
    let cover = WhitneyCover::build(&e, 1.0).map_err(|x| x.to_string())?;
    let p = 8;
    let part = build_partition(&cover, p).map_err(|x| x.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_sum = 0.0_f64;
    let mut n = 0;
    while n < 10_000 {
        let x = rng.gen_range(-1.9..1.9);
        if !cover.in_region(x) {
            continue;
        }
        n += 1;
        worst_sum = worst_sum.max((part.sum_at(x).map_err(|e| e.to_string())? - 1.0).abs());
    }
    ensure(worst_sum <= 1e-12, || format!("partition sum off by {worst_sum:e}"))?;
    let h = REFERENCE_MARGIN / p as f64;
    for beta in 0..=p {
        let s = part.reference_sup(beta);
        ensure(s <= (2.0 / h).powi(beta as i32), || format!("sup |Psi^({beta})| = {s} exceeds (2/h)^beta"))?;
    }
    // Leibniz jets against Richardson-extrapolated central differences
    let mut worst_fd = 0.0_f64;
    let mut pts = 0;
    while pts < 10 {
        let x = rng.gen_range(0.05..0.95);
        if !cover.in_region(x) {
            continue;
        }
        let jets = part.phi_jets(x, 4).map_err(|e| e.to_string())?;
        if jets.len() < 2 {
            continue;
        }
        pts += 1;
        for (i, jet) in jets {
            let exact = jet.derivatives();
            let step = 1e-5 * cover.intervals()[i].side;
            let at = |y: f64| -> f64 {
                part.phi_jets(y, 3)
                    .unwrap()
                    .into_iter()
                    .find(|(j, _)| *j == i)
                    .map(|(_, j)| j.derivatives())
                    .unwrap_or_else(|| vec![0.0; 4])
                    .into_iter()
                    .collect::<Vec<_>>()[0]
            };
            let d1 = |s: f64| (at(x + s) - at(x - s)) / (2.0 * s);
            let fd = (4.0 * d1(step / 2.0) - d1(step)) / 3.0;
            let scale = exact[1].abs().max(1.0 / cover.intervals()[i].side);
            worst_fd = worst_fd.max((fd - exact[1]).abs() / scale);
            for beta in 1..4 {
                let db = |s: f64| -> f64 {
                    let g = |y: f64| {
                        part.phi_jets(y, beta)
                            .unwrap()
                            .into_iter()
                            .find(|(j, _)| *j == i)
                            .map(|(_, j)| j.derivatives()[beta])
                            .unwrap_or(0.0)
                    };
                    (g(x + s) - g(x - s)) / (2.0 * s)
                };
                let fd = (4.0 * db(step / 2.0) - db(step)) / 3.0;
                let scale = exact[beta + 1].abs().max(cover.intervals()[i].side.powi(-(beta as i32 + 1)));
                worst_fd = worst_fd.max((fd - exact[beta + 1]).abs() / scale);
            }
        }
    }
    ensure(worst_fd <= 1e-6, || format!("finite-difference mismatch {worst_fd:e}"))?;
    Ok(format!("sum {worst_sum:.1e}, FD {worst_fd:.1e}"))
}

fn extension_end_to_end() -> Outcome {
    let start = Instant::now();
    let rows = rows_for(&WeightFunction::power(0.5).unwrap(), 1.0).map_err(|e| e.to_string())?;
    let jet = gevrey_jet(&rows, 40).map_err(|e| e.to_string())?;
    let cert = certify_at(&jet, &rows.v, 1.0).map_err(|e| e.to_string())?;
    let l = 16.0 * cert.rho;
    let f = assemble(&jet, &cert, &rows, &PlanOptions::new(l)).map_err(|e| e.to_string())?;
    let at0 = f.eval_derivatives(0.0, 8).map_err(|e| e.to_string())?;
    ensure(at0[..] == jet.values_at(0.0).unwrap()[..=8], || "jet agreement at 0 is not exact".into())?;

    let lim = boundary_limits(&f, 0.0, 6, 40).map_err(|e| e.to_string())?;
    for row in &lim.rows {
        ensure(row.monotone, || format!("e_j not decreasing at alpha = {}", row.alpha))?;
        ensure(row.fitted.is_finite() && row.fitted_trend != ultrajet::trend::Trend::Diverging, || {
            format!("boundary constant unstable at alpha = {}", row.alpha)
        })?;
        ensure(row.errors.last().is_some_and(|x| x.0 == 40), || "approach stopped before j = 40".into())?;
    }

    let mut samples = dyadic_samples(&f, 40);
    samples.extend(random_samples(&f, 200, 1));
    let rep = verify_bounds(&f, &samples, 8).map_err(|e| e.to_string())?;
    let m25 = rep.fitted.iter().find(|c| c.name == "derivatives_25").ok_or("no derivative check")?;
    ensure(rep.passed, || format!("bound report failed: {:?}", rep))?;
    ensure(m25.m.is_finite(), || "derivative constant infinite".into())?;

    let e = CompactSet1D::point(0.0).unwrap();
    let coeffs = [0.5, -1.0, 2.0];
    let poly = UltraJet::polynomial(e, &[0.0], 40, &coeffs).map_err(|e| e.to_string())?;
    let pc = certify_at(&poly, &rows.v, 1.0).map_err(|e| e.to_string())?;
    let fp = assemble(&poly, &pc, &rows, &PlanOptions::new(16.0 * pc.rho)).map_err(|e| e.to_string())?;
    let mut worst_poly = 0.0_f64;
    for &x in samples.iter().filter(|&&x| fp.in_region(x)) {
        let (p, _) = fp.local_degree(x.abs());
        if p < 2 {
            continue;
        }
        let v = fp.eval(x).map_err(|e| e.to_string())?;
        let want = coeffs[0] + coeffs[1] * x + coeffs[2] * x * x;
        worst_poly = worst_poly.max((v - want).abs());
    }
    ensure(worst_poly <= 1e-12, || format!("polynomial reproduction off by {worst_poly:e}"))?;

    let bad = assemble_unchecked(&jet, &cert, &rows, &PlanOptions::new(0.25)).map_err(|e| e.to_string())?;
    let mut bs = dyadic_samples(&bad, 40);
    bs.extend(random_samples(&bad, 200, 1));
    let neg = verify_bounds(&bad, &bs, 8).map_err(|e| e.to_string())?;
    ensure(!bad.plan().valid && !neg.passed, || "negative control L < rho not flagged".into())?;
    within(start.elapsed(), 60.0)?;
    Ok(format!("M = {:.3}, polynomial {worst_poly:.1e}, negative control flagged", m25.m))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let rows = rows_for(&WeightFunction::power(0.5).unwrap(), 1.0).map_err(|e| e.to_string())?;
    let jet = gevrey_jet(&rows, 24).map_err(|e| e.to_string())?;
    std::fs::write(dir.path().join("jet.json"), serde_json::to_string(&jet.to_file()).unwrap()).unwrap();
    std::fs::write(dir.path().join("w.json"), r#"{"family": "power", "parameters": {"a": 0.5}}"#).unwrap();
    std::fs::write(
        dir.path().join("job.json"),
        r#"{"command": "extend", "weight": "w.json", "jet": "jet.json", "plan": {"l": 16, "xi": 1}, "seed": 5}"#,
    )
    .unwrap();
    let mut outs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let cli = Cli {
            command: Command::Extend,
            config: dir.path().join("job.json"),
            out: Some(out.clone()),
            k: None,
            xi: None,
            seed: None,
        };
        let job = Job::from_cli(&cli).map_err(|e| e.to_string())?;
        run_job(&job).map_err(|e| e.to_string())?;
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        outs.push(files);
    }
    ensure(outs[0] == outs[1], || "reports differ between runs".into())?;
    Ok(format!("{} files byte-identical", outs[0].len()))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("kappa closed form", kappa_closed_form),
        ("strongness classifier", strongness),
        ("Young conjugate and associated matrix", conjugate_and_matrix),
        ("identity suite", identity_suite),
        ("sandwich constants", sandwiches),
        ("regularization of quotient ratios", lemma8_random),
        ("Whitney cover", whitney),
        ("partition of unity", partition),
        ("extension end to end", extension_end_to_end),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({:.2?})", i + 1, t.elapsed()),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({:.2?})", i + 1, t.elapsed());
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
