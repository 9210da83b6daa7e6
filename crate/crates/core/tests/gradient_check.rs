mod common;

use common::{finite_difference_check, rel_err};

#[test]
fn bptt_matches_central_differences() {
    let r = finite_difference_check(20, 11, 1e-5);
    assert!(r.checked > 1000, "{r:?}");
    assert!(r.max_rel <= 1e-5, "{r:?}");
}

#[test]
fn other_seeds_agree_too() {
    for seed in [1, 2, 3] {
        let r = finite_difference_check(5, seed, 1e-5);
        assert!(r.max_rel <= 1e-5, "seed {seed}: {r:?}");
    }
}

#[test]
fn floor_only_applies_below_itself() {
    assert_eq!(rel_err(2.0, 1.0, 1e-5), 0.5);
    assert_eq!(rel_err(0.0, 1e-12, 1e-5), 1e-7);
}
