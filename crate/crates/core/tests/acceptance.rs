//! Acceptance criteria. Every criterion prints one PASS/FAIL line, followed
//! by its individual checks, then asserts.

use std::fmt::Write as _;
use std::io::Write as _;

use fermichip_core::regression::{run, title, Check};

/// Writes straight to the stderr handle so the lines survive libtest's
/// output capture for passing tests.
fn report(text: &str) {
    let _ = std::io::stderr().lock().write_all(format!("\n{text}").as_bytes());
}

fn criterion(id: &str) {
    let rows = match run(id) {
        Ok(rows) => rows,
        Err(e) => {
            report(&format!("FAIL criterion {id}: {}\n    error: {e}\n", title(id)));
            panic!("criterion {id} could not be evaluated: {e}");
        }
    };
    let ok = rows.iter().all(|c| c.pass);
    let mut text = format!("{} criterion {id}: {}\n", if ok { "PASS" } else { "FAIL" }, title(id));
    for Check {
        label,
        computed,
        expected,
        pass,
        ..
    } in &rows
    {
        let _ = writeln!(
            text,
            "    [{}] {label}: {computed:.6e} (want {expected})",
            if *pass { "ok" } else { "x" }
        );
    }
    report(&text);
    assert!(ok, "criterion {id} failed");
}

#[test]
fn criterion_01_crossover_constants() {
    criterion("1");
}

#[test]
fn criterion_02a_energy_degenerate_limit() {
    criterion("2a");
}

#[test]
fn criterion_02b_energy_classical_limit() {
    criterion("2b");
}

#[test]
fn criterion_03_chemical_potential_forms() {
    criterion("3");
}

#[test]
fn criterion_04_discrete_sum_oracle() {
    criterion("4");
}

#[test]
fn criterion_05_trap_volume_examples() {
    criterion("5");
}

#[test]
fn criterion_06_start_temperature() {
    criterion("6");
}

#[test]
fn criterion_07_eta_algebra() {
    criterion("7");
}

#[test]
fn criterion_08_dressed_potentials() {
    criterion("8");
}

#[test]
fn criterion_09_fit_discrimination() {
    criterion("9");
}

#[test]
fn criterion_10_scaling() {
    criterion("10");
}

#[test]
fn criterion_11_numerical_hygiene() {
    criterion("11");
}
