use multdim::deterministic::*;
use multdim::hausdorff::hausdorff_bounds;
use multdim::minkowski::minkowski_bounds;
use multdim::{compile, count_prefixes, ExtensionMode, OmegaSpec, PrimeBasis};

fn all_functions() -> impl Iterator<Item = TernaryDigitFunction> {
    (0..256u32).map(|code| {
        let mut t = [false; 8];
        for (i, s) in t.iter_mut().enumerate() {
            *s = code >> i & 1 == 1;
        }
        TernaryDigitFunction::from_zero_table(t)
    })
}

fn spec_for(p: u64, q: u64, f: &TernaryDigitFunction, depth: usize) -> OmegaSpec {
    let basis = PrimeBasis::new(vec![p, q]).unwrap();
    compile(&omega_from_f(p, q, f).unwrap(), &basis, depth).unwrap()
}

#[test]
fn type_one_functions_have_dimension_q_minus_one_over_q() {
    for (p, q) in [(2, 3), (2, 5)] {
        let d = rigidity_dimension(p, q).unwrap();
        let mut seen = 0;
        for f in all_functions().filter(|f| classify(f).contains(&DeterminismType::I)) {
            let spec = spec_for(p, q, &f, 21);
            assert_eq!(spec.mode(), ExtensionMode::Local, "{}", f.truth_table());
            let profile = count_prefixes(&spec, 21).unwrap();
            assert!(profile.is_exact());
            let mk = minkowski_bounds(&profile, spec.table(), 20, None, None).unwrap();
            let h = hausdorff_bounds(&spec, 12).unwrap();
            assert!(mk.certified && h.certified);
            assert!(mk.contains(d), "{} M {mk:?}", f.truth_table());
            assert!(h.contains(d), "{} H {h:?}", f.truth_table());
            seen += 1;
        }
        assert_eq!(seen, 16);
    }
}

#[test]
fn middle_digit_zero_is_deterministic_but_not_rigid() {
    // F = y: every x_{pl} vanishes, so the dimension is 1 - 1/p.
    let f = TernaryDigitFunction::from_fn(|_, y, _| y == 0);
    assert!(classify(&f).contains(&DeterminismType::Ii));
    let spec = spec_for(2, 3, &f, 21);
    let profile = count_prefixes(&spec, 21).unwrap();
    let mk = minkowski_bounds(&profile, spec.table(), 20, None, None).unwrap();
    assert!(mk.contains(0.5), "{mk:?}");
    assert!(!mk.contains(rigidity_dimension(2, 3).unwrap()), "{mk:?}");
}

#[test]
fn lookahead_results_are_not_certified() {
    let spec = spec_for(2, 5, &TernaryDigitFunction::y_eq_xz(), 16);
    assert_eq!(spec.mode(), ExtensionMode::Lookahead);
    let profile = count_prefixes(&spec, 16).unwrap();
    assert!(!profile.is_exact());
    assert!(!minkowski_bounds(&profile, spec.table(), 15, None, None).unwrap().certified);
    assert!(!hausdorff_bounds(&spec, 10).unwrap().certified);
}
