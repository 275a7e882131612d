use schottky_core::geom::*;
use schottky_core::schottky::*;
use schottky_core::Tolerances;

#[test]
fn debug_seed_104() {
    let tol = Tolerances::default();
    let group = build_group(ModelVariant::QuadricOdd(3), 3, 104, None, 1e-3, &tol).unwrap();
    println!("epsilons: {:?}", group.epsilons);
    let cert = run_certificate(&group, 400, 3, &tol).unwrap();
    for p in &cert.pair_separations {
        if p.min_gap < 5e-3 {
            println!("{} vs {}: {:.4e}", p.from, p.to, p.min_gap);
        }
    }
    // Inspect the phi landscape: core points of each moved core against each evaluator
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9999);
    for j in 0..3 {
        for (side, core) in [(0, &group.core0), (1, &group.core1)] {
            for i in 0..3 {
                if i == j { continue; }
                let ev = group.evaluator(i).unwrap();
                let mut min_phi = f64::INFINITY;
                let mut max_phi: f64 = 0.0;
                for _ in 0..3000 {
                    let y = random_core_point(&group.model, &group.moves[j], core, &mut rng).unwrap();
                    let v = phi(&ev, &y).unwrap();
                    min_phi = min_phi.min(v);
                    max_phi = max_phi.max(v);
                }
                let name = if side == 0 { "U" } else { "V" };
                println!("core {}{} under phi_{}: range [{:.5}, {:.5}]", name, j+1, i+1, min_phi, max_phi);
            }
        }
    }
}
