use schottky_core::geom::ModelVariant;
use schottky_core::schottky::{build_group, run_certificate, SchottkyError, Verdict};
use schottky_core::Tolerances;

#[test]
fn stress_many_seeds() {
    let tol = Tolerances::default();
    let mut failures = Vec::new();
    let mut obstructed = 0;
    for variant in [
        ModelVariant::ProjOdd(1),
        ModelVariant::QuadricOdd(3),
        ModelVariant::IsotropicGrass(2),
    ] {
        for r in [2usize, 3] {
            for seed in 100..115u64 {
                match build_group(variant, r, seed, None, 1e-3, &tol) {
                    Ok(group) => {
                        let cert = run_certificate(&group, 400, 3, &tol).unwrap();
                        if cert.verdict != Verdict::Pass {
                            failures.push(format!(
                                "{variant} r={r} seed={seed}: {:?} margin {:.2e}",
                                cert.checks.iter().find(|c| !c.pass).map(|c| c.name.clone()),
                                cert.margin_achieved
                            ));
                        }
                    }
                    Err(SchottkyError::MaxAttemptsExceeded { .. }) => { println!("exhausted: {variant} r={r} seed={seed}"); obstructed += 1 },
                    Err(e) => failures.push(format!("{variant} r={r} seed={seed}: build {e}")),
                }
            }
        }
    }
    println!("move searches exhausted: {obstructed}");
    assert!(failures.is_empty(), "failures:\n{}", failures.join("\n"));
}
