use pcsi_core::capacity::{
    capacity_table_csv, capacity_value, gap_report, min_csi_fraction, redundancy_value,
    CapacityQuery, CapacityValue, Mode, Redundancy,
};
use pcsi_core::model::Variant;
use pcsi_core::rational::Rational;

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn cap(variant: Variant, mode: Mode, k: usize, m: usize) -> CapacityValue {
    capacity_value(&CapacityQuery { variant, mode, k, m }).unwrap()
}

#[test]
fn ternary_field_pins_the_three_four_case() {
    assert_eq!(cap(Variant::PcsiII, Mode::AtQ(3), 4, 3).value(), Some(r(1, 2)));
    assert_eq!(cap(Variant::PcsiII, Mode::AtQ(2), 4, 3).value(), Some(r(3, 8)));
    assert_eq!(cap(Variant::PcsiII, Mode::Inf, 4, 3).value(), Some(r(3, 8)));
}

#[test]
fn full_support_depends_on_the_field() {
    assert_eq!(cap(Variant::PcsiII, Mode::AtQ(3), 3, 3).value(), Some(Rational::one()));
    assert_eq!(cap(Variant::PcsiII, Mode::AtQ(2), 3, 3).value(), Some(r(1, 2)));
}

#[test]
fn supremum_is_flat_then_increasing_in_m() {
    for k in 3..=20usize {
        let sup = |m| cap(Variant::PcsiII, Mode::Sup, k, m).value().unwrap();
        for m in 2..k {
            if 2 * m <= k + 1 {
                assert_eq!(sup(m), r(2, k as i128));
            } else {
                assert!(sup(m + 1) > sup(m), "K={k} M={m}");
            }
        }
    }
}

#[test]
fn private_coefficient_bounds_form_an_interval() {
    let v = cap(Variant::PcsiI, Mode::PriInf, 5, 4);
    assert_eq!((v.lower(), v.upper()), (r(1, 4), r(1, 3)));
    assert!(v.value().is_none());
    assert_eq!(v.to_string(), "[1/4;1/3]");
    assert_eq!(cap(Variant::PcsiI, Mode::PriInf, 4, 1).value(), Some(r(1, 3)));
}

#[test]
fn open_cells_are_unknown() {
    let cq = CapacityQuery {
        variant: Variant::PcsiII,
        mode: Mode::AtQ(5),
        k: 6,
        m: 3,
    };
    assert!(capacity_value(&cq).is_err());
    let g = gap_report(Variant::PcsiII, 5, 6, 3, r(1, 3)).unwrap();
    assert!(g.entry("at_q(5)").unwrap().capacity.is_none());
    assert!(!g.unknown);
}

#[test]
fn redundancy() {
    assert_eq!(redundancy_value(Variant::PcsiII, 5, 3).unwrap(), Redundancy::Exact { value: r(1, 2) });
    assert_eq!(redundancy_value(Variant::PcsiII, 5, 4).unwrap(), Redundancy::Exact { value: Rational::zero() });
    assert_eq!(redundancy_value(Variant::PcsiI, 5, 2).unwrap(), Redundancy::Exact { value: Rational::zero() });
    assert_eq!(redundancy_value(Variant::Pcsi, 6, 3).unwrap(), Redundancy::AtMost { bound: r(1, 3) });
    assert_eq!(min_csi_fraction(Variant::PcsiII, 4, 2).unwrap(), r(1, 2));
}

#[test]
fn csv_rows_are_exact_rationals() {
    let csv = capacity_table_csv(4..=5, 2..=4);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("variant,mode,K,M,value,source"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().any(|l| l.starts_with("PCSI-II,sup,4,3,1/2,")));
    assert!(rows.iter().any(|l| l.starts_with("PCSI-II,inf,4,3,3/8,")));
    assert!(rows.iter().any(|l| l.starts_with("PCSI-II,sup,4,2,1/2,")));
    assert!(rows.iter().any(|l| l.starts_with("PCSI-II,inf,4,2,1/2,")));
    assert!(rows.iter().any(|l| l.starts_with("PCSI-I,sup,5,4,1/1,")));
    assert!(rows.iter().all(|l| !l.contains('.')));
}
