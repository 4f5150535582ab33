use lowrank::amm::{amm, hosvd_init, mamm, objective, two_ammv, StopReason, StopRule};
use lowrank::newton::{hybrid_newton2, hybrid_rank_one, NewtonStop};
use lowrank::rank222::{best222_core_rank, classify_rank222, Rank222};
use lowrank::synth::GeneratorSpec;
use lowrank::tensor::io::{read_any, write_binary, write_text};
use lowrank::tensor_cur::{choose_cur3_indices, Cur3Factors};
use lowrank::matrix::PivotFallback;

#[test]
fn generated_tensor_survives_both_containers_and_solvers_agree() {
    let t = "lowrank:7x6x5:2,2,2:0.01:3".parse::<GeneratorSpec>().unwrap().generate().unwrap();
    let mut text = Vec::new();
    write_text(&t, &mut text).unwrap();
    let mut bin = Vec::new();
    write_binary(&t, &mut bin).unwrap();
    assert_eq!(read_any(&bin).unwrap(), t);
    let back = read_any(&text).unwrap();
    assert!(back.sub(&t).unwrap().hs_norm() < 1e-12 * t.hs_norm());

    let init = hosvd_init(&t, &[2, 2, 2]).unwrap();
    let stop = StopRule { max_iters: 200, fit_tol: 1e-14 };
    let values = [
        amm(&t, &init, &stop).unwrap().1.final_objective(),
        mamm(&t, &init, &stop).unwrap().1.final_objective(),
        two_ammv(&t, &init, &stop, &StopRule { max_iters: 20, fit_tol: 1e-14 }).unwrap().1.final_objective(),
    ];
    let (u, trace) = hybrid_newton2(&t, &init, 3, &NewtonStop::default(), &stop).unwrap();
    assert!(matches!(trace.stop, StopReason::Converged | StopReason::Fallback(_)));
    let newton = objective(&t, &u).unwrap();
    for v in values {
        assert!((v - newton).abs() < 1e-8 * newton);
    }
    // a small perturbation of an exact Tucker tensor keeps almost all energy
    assert!(newton > 0.99 * t.hs_norm().powi(2));
}

#[test]
fn cur_of_a_generated_composite_seed_survives_serialization() {
    let t = "composite-cur:6x5x5:2:8".parse::<GeneratorSpec>().unwrap().generate().unwrap();
    let [i1, i2, i3] = choose_cur3_indices(&t, 2, 40, 1).unwrap();
    let f = Cur3Factors::build(&t, &i1, &i2, &i3, PivotFallback::Error).unwrap();
    let mut buf = Vec::new();
    f.write(&mut buf).unwrap();
    let g = Cur3Factors::read(buf.as_slice()).unwrap();
    assert_eq!(g, f);
    assert!(t.sub(&g.reconstruct()).unwrap().hs_norm() < 1e-8 * t.hs_norm());
    assert!((g.entry(3, 1, 4).unwrap() - t.get(&[3, 1, 4])).abs() < 1e-8 * t.hs_norm());
}

#[test]
fn rank_one_hybrid_on_a_noisy_rank_one_tensor() {
    let t = "lowrank:6x5x4:1,1,1:0.001:2".parse::<GeneratorSpec>().unwrap().generate().unwrap();
    let init: Vec<Vec<f64>> = t.shape().iter().map(|&n| vec![1.0; n]).collect();
    let r = hybrid_rank_one(&t, &init, 2, &NewtonStop::default(), &StopRule::default()).unwrap();
    assert_eq!(r.trace.stop, StopReason::Converged);
    assert!(r.lambda > 0.99 * t.hs_norm());
}

#[test]
fn best_core_of_a_generic_tensor_has_rank_two_or_three() {
    for seed in 0..5 {
        let t = format!("gaussian:4x4x4:{seed}").parse::<GeneratorSpec>().unwrap().generate().unwrap();
        let (core, rank) = best222_core_rank(&t, &NewtonStop::default(), &StopRule::default()).unwrap();
        assert_eq!(core.shape(), &[2, 2, 2]);
        assert_eq!(classify_rank222(&core).unwrap(), rank);
        assert!(matches!(rank, Rank222::Rank(2) | Rank222::Rank(3)));
    }
}
