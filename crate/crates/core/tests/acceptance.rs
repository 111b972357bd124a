//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;

use ajscc::device::MosfetParams;
use ajscc::experiments::{
    default_lambda_grid, default_phi_grid, evaluate_cell, is_misdecode, run_cell, sweep_lambda,
    sweep_phi, SweepResult, SweepSpec,
};
use ajscc::multimos::{assign_levels, decode_bank, BankDecodeMode};
use ajscc::precircuit::{power_estimate, quantize_staged, QuantizerConfig, CIRCUIT_PHIS};
use ajscc::receiver::Pairing;
use ajscc::transmitter::VdsSweep;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

fn within(x: f64, target: f64, frac: f64) -> bool {
    (x - target).abs() <= frac * target
}

/// Closest level, upper level on ties, by exhaustive search.
fn nearest_level_oracle(vin: f64, levels: &[f64]) -> f64 {
    let mut best = levels[0];
    for &l in levels {
        if (vin - l).abs() <= (vin - best).abs() {
            best = l;
        }
    }
    best
}

fn c1_quantizer_oracle() -> Outcome {
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for phi in CIRCUIT_PHIS {
        let q = QuantizerConfig::with_phi(phi).unwrap();
        let levels = q.levels();
        for k in 0..=4000u32 {
            let vin = f64::from(1000 + k) / 1000.0;
            let got = quantize_staged(vin, &q).map_err(|e| e.to_string())?.output;
            checked += 1;
            if got != nearest_level_oracle(vin, &levels) {
                mismatches.push((phi, vin, got));
            }
        }
    }
    let q = QuantizerConfig::with_phi(0.125).unwrap();
    let anchor = quantize_staged(1.1, &q).unwrap().output;
    check(
        mismatches.is_empty() && anchor == 1.125,
        format!("{checked} inputs match oracle; 1.1 V @ 0.125 -> {anchor} V"),
        format!("mismatches {:?}; 1.1 V @ 0.125 -> {anchor} V", &mismatches[..mismatches.len().min(5)]),
    )
}

fn reference_cell(phi: f64) -> ajscc::experiments::CellRun {
    let q = QuantizerConfig::with_phi(phi).unwrap();
    run_cell(
        &MosfetParams::nmos_180nm(),
        &q,
        &VdsSweep::default(),
        Pairing::Sliding,
        0.0,
        0,
    )
    .unwrap()
}

fn c2_noiseless_roundtrip() -> Outcome {
    let c = evaluate_cell(
        &MosfetParams::nmos_180nm(),
        &QuantizerConfig::with_phi(0.5).unwrap(),
        &VdsSweep::default(),
        Pairing::Sliding,
        0.0,
        0,
    )
    .map_err(|e| e.to_string())?;
    check(
        c.misdecodes_after == 0 && c.rmse_vds_after <= 1e-6,
        format!("misdecodes 0, rmse_vds {:.3e} V", c.rmse_vds_after),
        format!(
            "misdecodes {}, rmse_vds {:.3e} V",
            c.misdecodes_after, c.rmse_vds_after
        ),
    )
}

fn c3_misdecodes_before_correction() -> Outcome {
    let run = reference_cell(0.5);
    let mut by_level: BTreeMap<String, (usize, f64, f64)> = BTreeMap::new();
    let mut outside = 0;
    let mut total = 0;
    for p in &run.before.pairs {
        if !is_misdecode(p, &run.segments).unwrap() {
            continue;
        }
        total += 1;
        let seg = &run.segments[p.curve];
        let t1 = seg[p.index].truth.unwrap();
        let t2 = seg[p.index + 1].truth.unwrap();
        let mean_vds = 0.5 * (t1.vds + t2.vds);
        let e = by_level
            .entry(format!("{:.2}", t1.vgs_level))
            .or_insert((0, f64::INFINITY, 0.0));
        e.0 += 1;
        e.1 = e.1.min(mean_vds);
        e.2 = e.2.max(mean_vds);
        if !(t1.vgs_level >= 3.0 && mean_vds >= 7.0) {
            outside += 1;
        }
    }
    let dist: Vec<String> = by_level
        .iter()
        .map(|(l, (n, lo, hi))| format!("{l} V: {n} pairs, mean Vds {lo:.2}..{hi:.2}"))
        .collect();
    check(
        total > 0 && outside == 0,
        format!("{total} misdecodes, all at Vgs >= 3 V and mean Vds >= 7 V"),
        format!(
            "{total} misdecodes, {outside} outside Vgs >= 3 V / mean Vds >= 7 V [{}]",
            dist.join("; ")
        ),
    )
}

fn phi_sweep() -> SweepResult {
    sweep_phi(&SweepSpec::default()).unwrap()
}

fn c4_phi_sweep(r: &SweepResult) -> Outcome {
    let high_bad: Vec<_> = r
        .cells
        .iter()
        .filter(|c| c.phi >= 0.4 - 1e-12 && c.rmse_vgs_after > 1e-9)
        .map(|c| c.phi)
        .collect();
    let low_nonzero = r.cells.iter().any(|c| c.phi < 0.4 - 1e-12 && c.rmse_vgs_after > 0.0);
    let s = r.summary();
    let maxima_ok = within(s.max_rmse_vgs_before, 0.3, 0.5)
        && within(s.max_rmse_vds_before, 7.0, 0.5)
        && within(s.max_rmse_vgs_after, 0.1, 0.5)
        && within(s.max_rmse_vds_after, 2.0, 0.5);
    let detail = format!(
        "before max {:.4} V / {:.3} V, after max {:.4} V / {:.3} V, \
         nonzero after phi>=0.4: {high_bad:?}, nonzero below 0.4: {low_nonzero}",
        s.max_rmse_vgs_before, s.max_rmse_vds_before, s.max_rmse_vgs_after, s.max_rmse_vds_after
    );
    check(high_bad.is_empty() && low_nonzero && maxima_ok, detail.clone(), detail)
}

fn c5_lambda_sweep(r: &SweepResult) -> Outcome {
    let worst_low = r
        .cells
        .iter()
        .filter(|c| c.lambda <= 0.01)
        .map(|c| c.rmse_vgs_after)
        .fold(0.0, f64::max);
    let cells_low = r.cells.iter().filter(|c| c.lambda <= 0.01).count();
    let p = MosfetParams::nmos_180nm().with_lambda(0.1);
    let at = |phi: f64| {
        evaluate_cell(
            &p,
            &QuantizerConfig::with_phi(phi).unwrap(),
            &VdsSweep::default(),
            Pairing::Sliding,
            0.0,
            0,
        )
        .unwrap()
        .rmse_vgs_after
    };
    let (fine, coarse) = (at(0.1), at(0.5));
    let detail = format!(
        "max rmse_vgs over {cells_low} cells with lambda <= 0.01: {worst_low:.4} V; \
         lambda 0.1: phi 0.1 -> {fine:.4} V, phi 0.5 -> {coarse:.4} V"
    );
    check(worst_low <= 0.01 && fine >= coarse, detail.clone(), detail)
}

fn c6_power() -> Outcome {
    let q = QuantizerConfig::with_phi(0.5).unwrap();
    let two_stage = power_estimate(&q, false).unwrap().total_uw;
    let shared = power_estimate(&q, true).unwrap().total_uw;
    let detail = format!("phi 0.5: {two_stage:.4} uW, shared single stage: {shared:.4} uW");
    check(
        (two_stage - 24.0).abs() <= 0.5 && (shared - 8.0).abs() <= 0.5,
        detail.clone(),
        detail,
    )
}

type Criterion<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn c7_multimos() -> Outcome {
    let p = MosfetParams::nmos_180nm();
    let levels: Vec<f64> = (0..20).map(|i| 1.0 + 0.2 * i as f64).collect();
    let vds = VdsSweep::default();
    let count = |n_devices: usize, mode| {
        let bank = assign_levels(&levels, n_devices, &p).unwrap();
        let segs = bank.encode_grid(&vds).unwrap();
        let d = decode_bank(&bank, &segs, mode, Pairing::Sliding, (vds.min, vds.max), true).unwrap();
        ajscc::experiments::count_misdecodes(&d, &segs).unwrap()
    };
    let genie = count(4, BankDecodeMode::Genie);
    let single = count(1, BankDecodeMode::Genie);
    let detail = format!("4-device genie: {genie} misdecodes; single device at 0.2 V: {single}");
    check(genie == 0 && single > 0, detail.clone(), detail)
}

fn c8_properties(phi: &SweepResult, lambda: &SweepResult) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA15CC);
    let mut worst_inv: f64 = 0.0;
    let mut worst_slope: f64 = 0.0;
    for _ in 0..20_000 {
        let p = MosfetParams::new(
            rng.random_range(1e-5..1e-3),
            rng.random_range(0.2..1.0),
            rng.random_range(1e-3..0.2),
        )
        .unwrap();
        let vgs = p.vth + rng.random_range(0.05..5.0);
        let vds = rng.random_range(0.0..20.0);
        let ids = p.ids_forward(vgs, vds).unwrap();
        worst_inv = worst_inv.max((p.invert_vds(vgs, ids).unwrap() - vds).abs());

        let i1: f64 = rng.random_range(1e-6..1e-3);
        let i2 = i1 * rng.random_range(1.001..1.5);
        let v1 = p.invert_vds(vgs, i1).unwrap();
        let v2 = p.invert_vds(vgs, i2).unwrap();
        let closed = p.curve_slope_exact(vgs).unwrap();
        worst_slope = worst_slope.max((((i2 - i1) / (v2 - v1)) - closed).abs() / closed);
    }

    let spec = SweepSpec {
        phi_values: vec![0.2, 0.5, 1.0],
        noise_sigma: 5e-7,
        seed: 42,
        ..SweepSpec::default()
    };
    let a = sweep_phi(&spec).unwrap().to_csv_string(&[]).unwrap();
    let b = sweep_phi(&spec).unwrap().to_csv_string(&[]).unwrap();
    let deterministic = a.as_bytes() == b.as_bytes();

    let violations: Vec<_> = phi
        .cells
        .iter()
        .chain(&lambda.cells)
        .filter(|c| c.misdecodes_after > c.misdecodes_before)
        .map(|c| (c.phi, c.lambda))
        .collect();
    let cells = phi.cells.len() + lambda.cells.len();
    let detail = format!(
        "inversion max err {worst_inv:.2e} V, slope identity max rel err {worst_slope:.2e}, \
         csv deterministic: {deterministic}, after>before in {} of {cells} cells",
        violations.len()
    );
    check(
        worst_inv <= 1e-9 && worst_slope <= 1e-9 && deterministic && violations.is_empty(),
        detail.clone(),
        detail,
    )
}

fn main() -> ExitCode {
    let t = Instant::now();
    let phi = phi_sweep();
    let lambda = sweep_lambda(&SweepSpec {
        phi_values: default_phi_grid(),
        lambda_values: default_lambda_grid(),
        ..SweepSpec::default()
    })
    .unwrap();
    println!(
        "acceptance: phi sweep {} cells, lambda sweep {} cells ({:.2} s)",
        phi.cells.len(),
        lambda.cells.len(),
        t.elapsed().as_secs_f64()
    );

    let criteria: Vec<(&str, Criterion<'_>)> = vec![
        ("1 quantizer oracle equivalence", Box::new(c1_quantizer_oracle)),
        ("2 noiseless roundtrip at phi 0.5", Box::new(c2_noiseless_roundtrip)),
        ("3 before-correction misdecode locus", Box::new(c3_misdecodes_before_correction)),
        ("4 phi sweep regime", Box::new(|| c4_phi_sweep(&phi))),
        ("5 lambda sweep regime", Box::new(|| c5_lambda_sweep(&lambda))),
        ("6 power model", Box::new(c6_power)),
        ("7 multi-MOSFET bank", Box::new(c7_multimos)),
        ("8 property suite", Box::new(|| c8_properties(&phi, &lambda))),
    ];

    let mut failed = 0;
    for (name, f) in &criteria {
        let t = Instant::now();
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {name}: {tag} ({:.2} s) {detail}",
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
