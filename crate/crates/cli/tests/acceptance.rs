//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use fkgap_cli::pipeline::{self, Report};
use fkgap_cli::scenario::Scenario;
use fkgap_core::equilibrium::{check_aubry_criterion, residual, uniqueness_probe, AubryParams, FnField, ZeroSet};
use fkgap_core::model::{FourierMode, FrequencyModule, InteractionPotential};
use fkgap_core::phonon::{ai_gap_bound, assemble_hessian_window};
use fkgap_core::spectral::{jacobi_eigen_dense, sturm_eigen_tridiagonal, HessianWindow, Which};
use fkgap_core::{Boundary, Configuration, Lagrangian, OnSite, QuasiPeriodicPotential, WellPotential};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn scenario_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.toml"))
}

fn run_bundled(name: &str) -> Result<Report, String> {
    let s = Scenario::load(&scenario_path(name)).map_err(|e| e.to_string())?;
    pipeline::run(&s).map_err(|e| e.to_string())
}

fn ensure(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn free_chain_quotients() -> Outcome {
    let report = run_bundled("kam_free_chain")?;
    let kam = report.kam.ok_or("no kam section")?;
    let mut worst: f64 = 0.0;
    for q in &kam.betas[0].gap.quotients {
        let exact = 2.0 / ((2 * q.k + 1) as f64).sqrt();
        worst = worst.max((q.quotient - exact).abs());
    }
    let ks: Vec<usize> = kam.betas[0].gap.quotients.iter().map(|q| q.k).collect();
    ensure(ks == [4, 12, 112, 1112], format!("unexpected k list {ks:?}"))?;
    ensure(worst <= 1e-12, format!("max |q_k - 2/sqrt(2k+1)| = {worst:e}"))?;
    Ok(format!("max |q_k - 2/sqrt(2k+1)| = {worst:e} over k = {ks:?}"))
}

fn golden_mean_no_gap() -> Outcome {
    let t = Instant::now();
    let report = run_bundled("kam_golden_mean")?;
    let elapsed = t.elapsed().as_secs_f64();
    let kam = report.kam.ok_or("no kam section")?;
    ensure(kam.residual_sup <= 1e-10, format!("hull residual {:e}", kam.residual_sup))?;
    let quotients = &kam.betas[0].gap.quotients;
    let q = |k: usize| quotients.iter().find(|r| r.k == k).map(|r| r.quotient).ok_or(format!("missing k = {k}"));
    let (q100, q1600) = (q(100)?, q(1600)?);
    ensure(q1600 <= q100 / 3.0, format!("q_1600 = {q1600} > q_100/3 = {}", q100 / 3.0))?;
    ensure(
        quotients.windows(2).all(|w| w[1].quotient < w[0].quotient),
        "quotients are not decreasing".into(),
    )?;
    let eta = kam
        .betas
        .iter()
        .flat_map(|b| b.gap.quotients.iter().map(|r| r.eta_norm))
        .fold(0.0f64, f64::max);
    ensure(eta <= kam.eta_bound, format!("max ||eta|| = {eta} > M = {}", kam.eta_bound))?;
    ensure(elapsed < 60.0, format!("runtime {elapsed:.1} s"))?;
    Ok(format!(
        "residual {:.1e}, q_100 = {q100:.4}, q_1600 = {q1600:.4}, max ||eta|| = {eta:.3} <= M = {:.3}, {elapsed:.2} s",
        kam.residual_sup, kam.eta_bound
    ))
}

fn ai_exact_anchor() -> Outcome {
    let t = Instant::now();
    let s = Scenario::load(&scenario_path("ai_integer_lambda20")).map_err(|e| e.to_string())?;
    let report = pipeline::run(&s).map_err(|e| e.to_string())?;
    let ai = report.anti_integrable.ok_or("no anti_integrable section")?;
    let lag = s.anti_integrable.as_ref().unwrap().lagrangian().map_err(|e| e.to_string())?;
    let config = &ai.solve.configuration;
    let res = residual(&lag, config).map_err(|e| e.to_string())?;
    let res_sup = res.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    ensure(res_sup <= 1e-14, format!("equilibrium residual {res_sup:e}"))?;

    let full = assemble_hessian_window(&lag, config).map_err(|e| e.to_string())?;
    let n = 50;
    let centre = (-config.start()) as usize;
    let window = full.principal(centre - n / 2, n).map_err(|e| e.to_string())?;
    let (d, o) = window.scalar_bands().ok_or("window is not scalar")?;
    let eig = sturm_eigen_tridiagonal(&d, &o, Which::All, 1e-13).map_err(|e| e.to_string())?;
    let eig_err = eig
        .iter()
        .enumerate()
        .map(|(j, v)| (v - (22.0 - 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos())).abs())
        .fold(0.0f64, f64::max);
    ensure(eig_err <= 1e-9, format!("N = 50 eigenvalue error {eig_err:e}"))?;

    let g200 = ai.gap.rows.iter().find(|r| r.window == 200).ok_or("no N = 200 row")?.gap_parameter;
    let bound = ai_gap_bound(20.0, std::f64::consts::FRAC_1_SQRT_2, 1.0, 4.0).map_err(|e| e.to_string())?.bound;
    ensure(g200 >= 0.8333 - 1e-6, format!("G(200) = {g200}"))?;
    ensure(0.8333 - 1e-6 >= bound, format!("bound {bound} above 0.8333"))?;
    let elapsed = t.elapsed().as_secs_f64();
    ensure(elapsed < 10.0, format!("runtime {elapsed:.1} s"))?;
    Ok(format!(
        "residual {res_sup:e}, eigenvalue error {eig_err:.1e}, G(200) = {g200:.6} >= 0.8333 - 1e-6 >= bound {bound:.5}, {elapsed:.2} s"
    ))
}

fn ai_indefinite_anchor() -> Outcome {
    let t = Instant::now();
    let report = run_bundled("ai_mixed_lambda20")?;
    let ai = report.anti_integrable.ok_or("no anti_integrable section")?;
    let mut lines = Vec::new();
    for n in [50, 100, 200] {
        let row = ai.gap.rows.iter().find(|r| r.window == n).ok_or(format!("no N = {n} row"))?;
        ensure(row.abs_min >= 16.0 - 0.32, format!("abs_min(N = {n}) = {}", row.abs_min))?;
        lines.push(format!("{n}: {:.4}", row.abs_min));
    }
    let elapsed = t.elapsed().as_secs_f64();
    ensure(elapsed < 30.0, format!("runtime {elapsed:.1} s"))?;
    Ok(format!("abs_min {} >= 15.68, {elapsed:.2} s", lines.join(", ")))
}

fn aubry_examples() -> Outcome {
    let params = |m| AubryParams {
        big_r: 0.25,
        r: 0.125,
        m,
        domain_lo: vec![-1.0],
        domain_hi: vec![1.0],
        grid: 1e-3,
        zero_tol: 1e-9,
    };
    let o = ZeroSet::scalar_lattice(0.5, 0.0);
    let cosine = check_aubry_criterion(&WellPotential::cosine_well(1), &o, &params(0.70)).map_err(|e| e.to_string())?;
    ensure(cosine.pass, format!("cosine field failed: {cosine:?}"))?;
    let constant = FnField { dim: 1, f: |_: &[f64]| vec![0.01] };
    let c = check_aubry_criterion(&constant, &o, &params(0.70)).map_err(|e| e.to_string())?;
    ensure(!c.pass && !c.zeros.pass, "psi = 0.01 did not fail condition (2)".into())?;
    let zero = FnField { dim: 1, f: |_: &[f64]| vec![0.0] };
    let z = check_aubry_criterion(&zero, &o, &params(0.70)).map_err(|e| e.to_string())?;
    ensure(!z.pass && !z.expansion.pass, "psi = 0 did not fail condition (3)".into())?;
    Ok(format!(
        "cosine passes (min |psi'| = {:.6}), psi = 0.01 fails (2), psi = 0 fails (3)",
        cosine.expansion.worst
    ))
}

fn oracle_agreement() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=50);
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let o: Vec<f64> = (1..n).map(|_| rng.gen_range(-2.0..=2.0)).collect();
        let sturm = sturm_eigen_tridiagonal(&d, &o, Which::All, 1e-12).map_err(|e| e.to_string())?;
        let dense = HessianWindow::from_scalar(&d, &o).map_err(|e| e.to_string())?.to_dense();
        let jacobi = jacobi_eigen_dense(&dense, 1e-14).map_err(|e| e.to_string())?;
        ensure(sturm.len() == jacobi.len(), "eigenvalue counts differ".into())?;
        for (a, b) in sturm.iter().zip(&jacobi) {
            worst = worst.max((a - b).abs());
        }
    }
    ensure(worst <= 1e-9, format!("max disagreement {worst:e}"))?;
    Ok(format!("max |sturm - jacobi| = {worst:.1e} over 100 matrices, {:.2} s", t.elapsed().as_secs_f64()))
}

fn fd_mismatch(lag: &Lagrangian, config: &Configuration) -> Result<f64, String> {
    let h = assemble_hessian_window(lag, config).map_err(|e| e.to_string())?.to_dense();
    let step = 1e-5;
    let mut worst: f64 = 0.0;
    for j in 0..config.values().len() {
        let mut plus = config.values().to_vec();
        let mut minus = plus.clone();
        plus[j] += step;
        minus[j] -= step;
        let rp = residual(lag, &config.with_values(plus).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let rm = residual(lag, &config.with_values(minus).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        for i in 0..rp.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * step);
            worst = worst.max((fd - h[(i, j)]).abs() / h[(i, j)].abs().max(1.0));
        }
    }
    Ok(worst)
}

fn derivative_consistency() -> Outcome {
    let t = Instant::now();
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let v = QuasiPeriodicPotential::new(
        FrequencyModule::new(vec![1.0, golden]).map_err(|e| e.to_string())?,
        vec![
            FourierMode { k: vec![1, 0], amplitude: 0.01, phase: 0.0 },
            FourierMode { k: vec![0, 1], amplitude: 0.01, phase: 0.0 },
        ],
    )
    .map_err(|e| e.to_string())?;
    let kam = Lagrangian::for_hull(&v);
    let ai = Lagrangian::new(InteractionPotential::quadratic(1), OnSite::Well(WellPotential::cosine_well(1)), 20.0)
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(5..=30);
        let values: Vec<f64> = (0..n).map(|i| i as f64 + rng.gen_range(-0.5..0.5)).collect();
        let c = Configuration::scalar(
            -(n as i64) / 2,
            values,
            1.0,
            Boundary::Clamped { left: vec![rng.gen_range(-1.5..-0.5)], right: vec![n as f64 + rng.gen_range(-0.5..0.5)] },
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max(fd_mismatch(&kam, &c)?).max(fd_mismatch(&ai, &c)?);
    }
    ensure(worst <= 1e-6, format!("max relative mismatch {worst:e}"))?;
    let elapsed = t.elapsed().as_secs_f64();
    ensure(elapsed < 10.0, format!("runtime {elapsed:.1} s"))?;
    Ok(format!("max relative mismatch {worst:.1e} on 20 configurations x 2 families, {elapsed:.2} s"))
}

fn uniqueness() -> Outcome {
    let mut parts = Vec::new();
    for name in ["ai_integer_lambda20", "ai_mixed_lambda20"] {
        let s = Scenario::load(&scenario_path(name)).map_err(|e| e.to_string())?;
        let report = pipeline::run(&s).map_err(|e| e.to_string())?;
        let ai = report.anti_integrable.ok_or("no anti_integrable section")?;
        let lag = s.anti_integrable.as_ref().unwrap().lagrangian().map_err(|e| e.to_string())?;
        let unique = uniqueness_probe(&lag, &ai.solve, ai.solve.r / 4.0, 5, 11).map_err(|e| e.to_string())?;
        ensure(unique, format!("{name}: restarts disagree beyond 1e-8"))?;
        parts.push(name);
    }
    Ok(format!("5 restarts within r/4 agree to 1e-8 for {}", parts.join(", ")))
}

fn byte_identical_reports() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_fkgap");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut checked = Vec::new();
    for name in ["kam_free_chain", "kam_golden_mean", "ai_integer_lambda20", "ai_mixed_lambda20"] {
        let mut bytes = Vec::new();
        for (i, threads) in ["1", "4"].iter().enumerate() {
            let out = tmp.path().join(format!("{name}_{i}"));
            let status = Command::new(bin)
                .arg("run")
                .arg(scenario_path(name))
                .arg("--out")
                .arg(&out)
                .arg("--threads")
                .arg(threads)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), format!("{name}: exit {:?}", status.status.code()))?;
            bytes.push(std::fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
        }
        ensure(bytes[0] == bytes[1], format!("{name}: report.json differs between runs"))?;
        checked.push(name);
    }
    Ok(format!("identical report.json on re-run (1 and 4 threads) for {}", checked.join(", ")))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 free-chain quotient closed form", free_chain_quotients),
        ("2 golden-mean hull, no gap", golden_mean_no_gap),
        ("3 anti-integrable gap, exact anchor", ai_exact_anchor),
        ("4 anti-integrable gap, indefinite anchor", ai_indefinite_anchor),
        ("5 Aubry criterion examples", aubry_examples),
        ("6 Sturm vs Jacobi oracle", oracle_agreement),
        ("7 Hessian vs residual finite differences", derivative_consistency),
        ("8 uniqueness probe", uniqueness),
        ("9 byte-identical report.json", byte_identical_reports),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
