use pcsi_core::gf::{field_of_order, FieldElem};
use pcsi_core::model::{
    compute_y, enumerate_scenarios, lambda_vectors, sample_messages, MessageStore, Params,
    PrivacyMode, Variant,
};

#[test]
fn scenario_counts() {
    let p = Params::new(3, 4, 2, 1).unwrap();
    let n = |v, m| enumerate_scenarios(&p, v, m).unwrap().len();
    assert_eq!(n(Variant::PcsiII, PrivacyMode::ThetaS), 6 * 2);
    assert_eq!(n(Variant::PcsiI, PrivacyMode::ThetaS), 6 * 2);
    assert_eq!(n(Variant::Pcsi, PrivacyMode::ThetaS), 6 * 4);
    assert_eq!(n(Variant::PcsiII, PrivacyMode::ThetaSLambda), 6 * 2 * 4);
}

#[test]
fn scenarios_are_ordered_by_support_then_theta() {
    let p = Params::new(2, 3, 2, 1).unwrap();
    let s = enumerate_scenarios(&p, Variant::Pcsi, PrivacyMode::ThetaS).unwrap();
    let keys: Vec<(Vec<usize>, usize)> = s.iter().map(|x| (x.support.clone(), x.theta)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert_eq!(keys[0], (vec![0, 1], 0));
}

#[test]
fn infeasible_pairs_are_rejected() {
    assert!(Variant::PcsiI.check(3, 3).is_err());
    assert!(Variant::PcsiII.check(3, 1).is_err());
    assert!(Params::new(6, 3, 2, 1).is_err());
}

#[test]
fn lambda_vectors_cover_nonzero_tuples() {
    let l = lambda_vectors(4, 2);
    assert_eq!(l.len(), 9);
    assert!(l.iter().flatten().all(|x| !x.is_zero()));
}

#[test]
fn side_information_is_the_weighted_sum() {
    let f = field_of_order(5).unwrap();
    let store = MessageStore::from_messages(&[
        vec![FieldElem(1), FieldElem(2)],
        vec![FieldElem(3), FieldElem(4)],
        vec![FieldElem(0), FieldElem(1)],
    ])
    .unwrap();
    let p = Params::new(5, 3, 2, 2).unwrap();
    let scen = enumerate_scenarios(&p, Variant::PcsiI, PrivacyMode::ThetaS).unwrap()[0]
        .with_lambda(vec![FieldElem(2), FieldElem(3)]);
    assert_eq!(scen.support, vec![0, 1]);
    // 2*(1,2) + 3*(3,4) = (11, 16) = (1, 1) mod 5
    assert_eq!(compute_y(&f, &store, &scen), vec![FieldElem(1), FieldElem(1)]);
}

#[test]
fn store_indexing_and_sampling() {
    let mut s = MessageStore::zeros(2, 2);
    s.set_index(3, 5);
    assert_eq!(s.to_codes(), vec![vec![2, 1], vec![0, 0]]);
    assert_eq!(MessageStore::from_index(2, 2, 3, 5), s);
    let p = Params::new(7, 4, 2, 3).unwrap();
    assert_eq!(sample_messages(&p, 9), sample_messages(&p, 9));
    assert_ne!(sample_messages(&p, 9), sample_messages(&p, 10));
}
