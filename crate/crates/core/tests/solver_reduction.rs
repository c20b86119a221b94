use robagg::model::{LossKind, Params};
use robagg::oracle::brute_force_max_regret;
use robagg::solver::solve_l2_nonadversarial;

fn gap(n: usize) -> f64 {
    let p = Params::new(n, 0, 0.5, 0.8, 0.1).unwrap();
    let r = solve_l2_nonadversarial(&p, 1e-9).unwrap();
    let (full, _) = brute_force_max_regret(&r.aggregator, &p, LossKind::L2).unwrap();
    full - r.regret
}

#[test]
fn extreme_family_is_worst_case_for_larger_n() {
    for n in [3, 9, 10, 12, 15] {
        let g = gap(n);
        println!("n={n}: full-family excess {g:.3e}");
        assert!(g.abs() < 1e-7, "n={n}: {g}");
    }
}

#[test]
fn extreme_family_misses_worse_structures_for_small_n() {
    for n in 4..=8 {
        let g = gap(n);
        println!("n={n}: full-family excess {g:.3e}");
        assert!(g > 1e-3, "n={n}: {g}");
    }
}
