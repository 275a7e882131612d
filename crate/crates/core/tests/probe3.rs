use schottky_core::geom::*;
use schottky_core::schottky::*;
use schottky_core::Tolerances;
use rand::SeedableRng;
use rand::Rng;
use nalgebra::DVector;
use num_complex::Complex64 as C64;

#[test]
fn probe_all_pairs() {
    let tol = Tolerances::default();
    let model = make_model(ModelVariant::QuadricOdd(3)).unwrap();
    let (c0, c1, _op) = schottky_pair_core(&model, &tol).unwrap();
    let opts = MoveSearchOptions::default_for(&model);
    let searched = find_moves(&model, &c0, &c1, 2, 101, &opts, &tol).unwrap();
    let moves = vec![Automorphism::identity(&model), searched[0].clone()];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    for j in 0..2 {
        for (side, core) in [(0, &c0), (1, &c1)] {
            for i in 0..2 {
                if i == j { continue; }
                let ev = PhiEvaluator::conjugated(&model, &moves[i]).unwrap();
                let mut hi: f64 = 0.0;
                let mut lo = f64::INFINITY;
                for _ in 0..100000 {
                    let c = DVector::from_fn(3, |_, _| C64::new(rng.random::<f64>()-0.5, rng.random::<f64>()-0.5));
                    let n = c.norm();
                    if n < 1e-6 { continue; }
                    let y = &moves[j].matrix.0 * (&core.basis().0 * (c / C64::new(n, 0.0)));
                    let p = canonical_vector(y);
                    let v = phi(&ev, &p).unwrap();
                    hi = hi.max(v); lo = lo.min(v);
                }
                let name = if side == 0 { "C0" } else { "C1" };
                println!("f_{}({name}) under phi_{}: [{lo:.6}, {hi:.6}]", j+1, i+1);
            }
        }
    }
}
