//! Acceptance suite: one test per criterion, each printing a single
//! `criterion=N ... status=pass|fail` line. The expensive scenario runs are
//! cached in one shared context, so the tests serialize on its lock.

use std::sync::{LazyLock, Mutex};

use dwell::harness::{CheckContext, CheckLevel};

static CONTEXT: LazyLock<Mutex<CheckContext>> = LazyLock::new(|| Mutex::new(CheckContext::new(None)));

fn criterion(n: u8) {
    let entry = {
        let ctx = CONTEXT.lock().unwrap_or_else(|e| e.into_inner());
        ctx.run(n, CheckLevel::Full)
    };
    println!("{}", entry.line());
    assert!(entry.passed, "{}", entry.line());
}

/// Harmonic V_eff and Z_eff within 1e-4; RG shape within 1e-6 and the
/// zero-point shift against the cutoff-corrected value; 30 s budget.
#[test]
fn criterion_1_harmonic_oracles() {
    criterion(1);
}

/// V_eff' against J within 1e-5 and V_eff'' against 1/chi within 1e-3 at 20
/// probes; 60 s budget.
#[test]
fn criterion_2_legendre_consistency() {
    criterion(2);
}

/// Second differences >= -1e-8, evenness within 1e-6, min V_eff = E0 within 1e-8.
#[test]
fn criterion_3_convexity_and_symmetry() {
    criterion(3);
}

/// sqrt(V''/Z) within 5% of the gap and closer than sqrt(V'').
#[test]
fn criterion_4_gap_identity() {
    criterion(4);
}

/// D(ea_z) < D(ea_z1) over three packet periods and the ea_z period closer.
#[test]
fn criterion_5_figure1_ordering() {
    criterion(5);
}

/// Max |<x> - x_bare| below 5% of the amplitude over three periods.
#[test]
fn criterion_6_figure2_agreement() {
    criterion(6);
}

/// Norm drift < 1e-10 per 1e4 steps, energy drift < 1e-8, classical drift
/// < 1e-7, Ehrenfest residuals < 1e-5.
#[test]
fn criterion_7_conservation() {
    criterion(7);
}

/// Max relative curvature deviation of the RG potential below 20% on |x| <= 1.
#[test]
fn criterion_8_rg_cross_validation() {
    criterion(8);
}

/// Error ratios on halving: spectral and CN in [3.5, 4.5], RK4 near 16; RG
/// grid doubling changes U by < 1e-5.
#[test]
fn criterion_9_convergence() {
    criterion(9);
}
