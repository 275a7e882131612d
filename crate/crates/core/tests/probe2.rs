use schottky_core::geom::*;
use schottky_core::schottky::*;
use schottky_core::Tolerances;
use rand::SeedableRng;
use rand::Rng;
use nalgebra::DVector;
use num_complex::Complex64 as C64;

#[test]
fn probe_qodd_extremes() {
    let tol = Tolerances::default();
    let model = make_model(ModelVariant::QuadricOdd(3)).unwrap();
    let (c0, c1, _op) = schottky_pair_core(&model, &tol).unwrap();
    let opts = MoveSearchOptions::default_for(&model);
    let moves = find_moves(&model, &c0, &c1, 2, 101, &opts, &tol).unwrap();
    let f2 = &moves[0];
    let ev1 = PhiEvaluator::for_model(&model);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    // dense random sampling of phi_1 over f2(C0)
    let mut hi: f64 = 0.0;
    let mut lo = f64::INFINITY;
    for _ in 0..200000 {
        let c = DVector::from_fn(3, |_, _| C64::new(rng.random::<f64>()-0.5, rng.random::<f64>()-0.5));
        let n = c.norm();
        if n < 1e-6 { continue; }
        let y = &f2.matrix.0 * (&c0.basis().0 * (c / C64::new(n, 0.0)));
        let p = canonical_vector(y);
        let v = phi(&ev1, &p).unwrap();
        hi = hi.max(v); lo = lo.min(v);
    }
    println!("dense sample: phi_1 over f2(C0): [{lo:.6}, {hi:.6}]");
}
