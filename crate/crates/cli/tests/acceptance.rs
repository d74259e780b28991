//! Acceptance gate: twelve criteria, each with its tolerance and time limit.
//! Prints one PASS/FAIL line per criterion and exits non-zero on any FAIL.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_rational::Rational64;

use bingap_core::csp::{brute_force_pi2, brute_force_value, gen, reduce_e4_to_e3};
use bingap_core::lattice::{binary_cvp, cvp_search, CvpOptions, DenseMatrix, PNorm, Target, GUARD};
use bingap_core::reduction::{gamma_closed_form, gamma_curve};
use bingap_core::verifier::{
    bundled_pi2_instances, certify_pi2_instance_with, suite_completeness, suite_gadget, suite_identity,
    suite_np, suite_pi2, suite_rounding, VerificationReport, VerifyOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 1;

type Check = Result<String, String>;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bingap"))
}

fn opts() -> VerifyOptions {
    VerifyOptions {
        trials: None,
        seed: SEED,
        ps: None,
        timing: true,
    }
}

fn p(x: f64) -> PNorm {
    PNorm::new(x).expect("p ≥ 1")
}

fn find<'a>(reports: &'a [VerificationReport], id: &str) -> Result<&'a VerificationReport, String> {
    reports.iter().find(|r| r.lemma_id == id).ok_or_else(|| format!("no report `{id}`"))
}

fn clean(r: &VerificationReport, min_trials: u64) -> Check {
    if !r.passed() {
        return Err(format!(
            "{}: {} failures, {} inconclusive, first witness {:?}",
            r.lemma_id,
            r.failures,
            r.inconclusive,
            r.witnesses.first().map(|w| w.input.to_string())
        ));
    }
    if r.trials < min_trials {
        return Err(format!("{}: only {} trials, need {min_trials}", r.lemma_id, r.trials));
    }
    Ok(format!("{} trials, 0 failures", r.trials))
}

fn p0_root() -> Check {
    let out = bin().args(["p0", "--tol", "1e-6"]).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("exit {:?}", out.status.code()));
    }
    let text = String::from_utf8_lossy(&out.stdout);
    let p0: f64 = text.trim().parse().map_err(|_| format!("unparsable output `{}`", text.trim()))?;
    if (p0 - 35.310188).abs() <= 1e-4 {
        Ok(format!("p0 = {p0}"))
    } else {
        Err(format!("p0 = {p0}, want 35.310188 ± 1e-4"))
    }
}

fn asymptote() -> Check {
    let g = gamma_closed_form(p(1e4)).map_err(|e| e.to_string())?;
    if (g - 1.125).abs() > 1e-3 {
        return Err(format!("γ(1e4) = {g}"));
    }
    for x in [1.0, 2.0, 10.0, 30.0] {
        let v = gamma_closed_form(p(x)).map_err(|e| e.to_string())?;
        if v >= 1.0 {
            return Err(format!("γ({x}) = {v} ≥ 1"));
        }
    }
    for x in [36.0, 50.0, 100.0] {
        let v = gamma_closed_form(p(x)).map_err(|e| e.to_string())?;
        if v <= 1.0 {
            return Err(format!("γ({x}) = {v} ≤ 1"));
        }
    }
    let curve = gamma_curve(1.0, 1e4, 200).map_err(|e| e.to_string())?;
    let last = curve.last().map(|&(_, g)| g).unwrap_or(f64::NAN);
    if curve.len() != 200 || (last - 1.125).abs() > 1e-3 {
        return Err(format!("curve has {} rows ending at {last}", curve.len()));
    }
    Ok(format!("γ(1e4) = {g:.6}"))
}

fn unimodular_example() -> Check {
    let b = DenseMatrix::from_rows(&[vec![3.0, 4.0], vec![1.0, 1.0]]).map_err(|e| e.to_string())?;
    let t = [5.0, 1.5];
    for q in [PNorm::ONE, PNorm::TWO, PNorm::INF] {
        let res = cvp_search(&b, Target::Point(&t), q, None, &CvpOptions::default()).map_err(|e| e.to_string())?;
        if res.dist != 0.5 || res.coeffs != [3, -1] {
            return Err(format!("p = {q}: dist {} at {:?}", res.dist, res.coeffs));
        }
        let bin = binary_cvp(&b, &t, q).map_err(|e| e.to_string())?;
        if bin.dist <= 0.5 + GUARD {
            return Err(format!("p = {q}: binary distance {} not > 0.5", bin.dist));
        }
    }
    Ok("dist 0.5 at (3,-1); binary > 0.5".into())
}

fn gadget_grid(reports: &[VerificationReport]) -> Check {
    clean(find(reports, "gadget-rounding-grid")?, 21 * 21 * 21 * 2 * 4)
}

fn gadget_centers(reports: &[VerificationReport]) -> Check {
    clean(find(reports, "gadget-center-distance")?, 8 * 8 * 8 * 4)
}

fn identity() -> Check {
    let reports = suite_identity(&opts()).map_err(|e| e.to_string())?;
    clean(find(&reports, "structural-identity")?, 10_000)
}

fn completeness() -> Check {
    let reports = suite_completeness(&opts()).map_err(|e| e.to_string())?;
    clean(find(&reports, "completeness")?, 1_000)
}

fn rounding() -> Check {
    let reports = suite_rounding(&opts()).map_err(|e| e.to_string())?;
    clean(find(&reports, "rounding-dominance")?, 10_000)
}

fn np_soundness() -> Check {
    let reports = suite_np(&opts()).map_err(|e| e.to_string())?;
    clean(find(&reports, "np-soundness-random")?, 1)?;
    // 8 E3 constraints on 3 variables, ordered pairs of them, two norms
    clean(find(&reports, "np-soundness-exhaustive")?, 2 * (8 + 8 * 8))
}

fn e4_to_e3() -> Check {
    let mut count = 0u64;
    for m in 1..=2 {
        for phi in gen::all_formulas(4, 4, m) {
            let (v, _) = brute_force_value(&phi).map_err(|e| e.to_string())?;
            let reduced = reduce_e4_to_e3(&phi).map_err(|e| e.to_string())?;
            let (v3, _) = brute_force_value(&reduced).map_err(|e| e.to_string())?;
            if v3 != (Rational64::from_integer(1) + v) / 2 {
                return Err(format!("val {v} maps to {v3}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} formulas, exact"))
}

fn pi2() -> Check {
    let bundled = bundled_pi2_instances().map_err(|e| e.to_string())?;
    for (i, (name, phi)) in bundled.iter().enumerate() {
        let nu = phi.universal().unwrap_or(0);
        if !(1..=2).contains(&nu) || phi.num_vars() > 4 || phi.num_constraints() > 3 {
            return Err(format!("{name} is outside n′ ∈ {{1,2}}, n ≤ 4, m ≤ 3"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        rng.set_stream(i as u64);
        let cert = certify_pi2_instance_with(phi, 16, &mut rng).map_err(|e| e.to_string())?;
        let truth = brute_force_pi2(phi).map_err(|e| e.to_string())?;
        if cert.lattice_says != Some(truth) || !cert.report.passed() {
            return Err(format!("{name}: lattice {:?}, brute force {truth}", cert.lattice_says));
        }
    }
    let reports = suite_pi2(&opts()).map_err(|e| e.to_string())?;
    let b = clean(find(&reports, "pi2-bundled")?, 1)?;
    clean(find(&reports, "pi2-exhaustive")?, 1)?;
    Ok(format!("{} instances; {b}", bundled.len()))
}

fn determinism() -> Check {
    let run = || -> Result<Vec<u8>, String> {
        let out = bin().args(["verify", "all", "--seed", "1"]).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("exit {:?}", out.status.code()));
        }
        Ok(out.stdout)
    };
    let (a, b) = (run()?, run()?);
    if a == b {
        Ok(format!("{} bytes identical", a.len()))
    } else {
        Err("reports differ between runs".into())
    }
}

fn main() -> ExitCode {
    let gadget = suite_gadget(&opts());
    let gadget_ms = |id: &str| {
        gadget
            .as_ref()
            .ok()
            .and_then(|rs| rs.iter().find(|r| r.lemma_id == id))
            .and_then(|r| r.timing_ms)
            .map(Duration::from_millis)
    };
    let with_gadget = |f: fn(&[VerificationReport]) -> Check| match &gadget {
        Ok(rs) => f(rs),
        Err(e) => Err(e.to_string()),
    };

    let mut failed = 0;
    let mut record = |id: u32, name: &str, limit: Duration, check: &mut dyn FnMut() -> Check, took: Option<Duration>| {
        let start = Instant::now();
        let res = check();
        let elapsed = took.unwrap_or_else(|| start.elapsed());
        let res = res.and_then(|msg| {
            if elapsed <= limit {
                Ok(msg)
            } else {
                Err(format!("{msg}; took {elapsed:.2?}, limit {limit:?}"))
            }
        });
        match res {
            Ok(msg) => println!("PASS  {id:>2} {name:<22} {elapsed:>10.2?}  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {id:>2} {name:<22} {elapsed:>10.2?}  {msg}");
            }
        }
    };

    let s = Duration::from_secs;
    record(1, "p0-root", s(1), &mut p0_root, None);
    record(2, "gamma-asymptote", s(1), &mut asymptote, None);
    record(3, "unimodular-example", s(1), &mut unimodular_example, None);
    record(4, "gadget-rounding", s(30), &mut || with_gadget(gadget_grid), gadget_ms("gadget-rounding-grid"));
    record(5, "gadget-centers", s(5), &mut || with_gadget(gadget_centers), gadget_ms("gadget-center-distance"));
    record(6, "structural-identity", s(60), &mut identity, None);
    record(7, "completeness", s(60), &mut completeness, None);
    record(8, "rounding-dominance", s(60), &mut rounding, None);
    record(9, "np-soundness", s(300), &mut np_soundness, None);
    record(10, "e4-to-e3", s(60), &mut e4_to_e3, None);
    record(11, "pi2-certification", s(300), &mut pi2, None);
    record(12, "determinism", Duration::MAX, &mut determinism, None);

    if failed == 0 {
        println!("acceptance: 12/12 PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} FAIL");
        ExitCode::FAILURE
    }
}
