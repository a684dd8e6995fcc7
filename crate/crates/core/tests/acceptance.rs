//! Runs every acceptance criterion and prints one PASS/FAIL line for each.
//! Exits non-zero if any criterion fails.

use pcsi_core::auditor::{
    audit_correctness, audit_half_csi, audit_privacy_exact, audit_privacy_sampled, full_scenarios,
    measure_rate, CsiMode, MessageMode, PrivacyReport, DEFAULT_ENUM_BUDGET,
};
use pcsi_core::capacity::{capacity_value, CapacityQuery, CapacityValue, Mode};
use pcsi_core::gf::{field_of_order, tower_new, FieldElem, Matrix};
use pcsi_core::model::{compute_y, MessageStore, Params, PrivacyMode, SideInfo, Variant};
use pcsi_core::rational::Rational;
use pcsi_core::rng::SeededCoins;
use pcsi_core::schemes::{
    run_round, search_vectors, BankMode, F3Scheme, GenericPcsi1, GenericPcsi2, GrsKind,
    GrsScheme, HalfDlScheme, IaScheme, MkScheme, Scheme, SearchOptions, TwoStepPcsi1,
};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn r(n: i128, d: i128) -> Rational {
    Rational::new(n, d)
}

fn ia(q: u32, k: usize, m: usize) -> IaScheme {
    let t = Arc::new(tower_new(field_of_order(q).unwrap()).unwrap());
    IaScheme::new(t, k, m).unwrap()
}

fn exhaustive(s: &dyn Scheme) -> Result<u64, String> {
    let c = audit_correctness(s, MessageMode::Exhaustive, CsiMode::Retained).map_err(|e| e.to_string())?;
    ensure!(c.pass(), "{}: {} of {} replays failed, first {:?}", s.name(), c.failures, c.trials, c.first_failure);
    Ok(c.trials)
}

fn sampled(s: &dyn Scheme, n: usize) -> Result<u64, String> {
    let c = audit_correctness(s, MessageMode::Sampled { n, seed: 11 }, CsiMode::Retained)
        .map_err(|e| e.to_string())?;
    ensure!(c.pass(), "{}: {} of {} sampled replays failed", s.name(), c.failures, c.trials);
    Ok(c.trials)
}

fn exact_tv_zero(s: &dyn Scheme, mode: PrivacyMode) -> Result<usize, String> {
    match audit_privacy_exact(s, mode, DEFAULT_ENUM_BUDGET).map_err(|e| e.to_string())? {
        PrivacyReport::Exact { max_tv, cells, .. } => {
            ensure!(max_tv.is_zero(), "{}: exact TV {max_tv} across {cells} cells", s.name());
            Ok(cells)
        }
        other => Err(format!("unexpected report {other:?}")),
    }
}

fn sampled_privacy(s: &dyn Scheme, n: usize) -> Result<f64, String> {
    let rep = audit_privacy_sampled(s, s.privacy(), n, 2024, 0.01).map_err(|e| e.to_string())?;
    match rep {
        PrivacyReport::Sampled { p_value, pass, .. } => {
            ensure!(pass, "{}: sampled privacy p = {p_value}", s.name());
            Ok(p_value)
        }
        other => Err(format!("unexpected report {other:?}")),
    }
}

fn rate(s: &dyn Scheme) -> Result<Rational, String> {
    measure_rate(s, 8, 3).map_err(|e| e.to_string())
}

fn c1_ia_rate() -> Outcome {
    let mut n = 0;
    for k in 3..=5usize {
        for m in (2..=k).filter(|&m| 2 * m <= k + 2) {
            let s = ia(4, k, m);
            let got = rate(&s)?;
            ensure!(got == r(2, k as i128), "K={k} M={m}: rate {got}");
            n += exhaustive(&s)?;
            exact_tv_zero(&s, PrivacyMode::ThetaS)?;
        }
    }
    Ok(format!("rate 2/K, {n} replays, TV=0 for K=3..5"))
}

fn c2_f4_matrices() -> Outcome {
    let t = tower_new(field_of_order(4).unwrap()).unwrap();
    let z = FieldElem(0);
    let o = FieldElem(1);
    let expected = [
        (0, [[z, z], [z, z]]),
        (1, [[o, z], [z, o]]),
        (2, [[z, o], [o, o]]),
        (3, [[o, o], [o, z]]),
    ];
    for (code, m) in expected {
        let got = t.mat_rep(FieldElem(code));
        ensure!(got == m, "M for code {code}: {got:?}");
    }
    Ok("M_0, M_1, M_x, M_{1+x} match".into())
}

fn c3_half_csi() -> Outcome {
    for (k, m) in [(3, 2), (4, 2)] {
        let rep = audit_half_csi(&Params::new(4, k, m, 1).unwrap()).map_err(|e| e.to_string())?;
        ensure!(rep.retained.pass(), "K={k}: projected CSI decode failed");
        ensure!(rep.full.pass(), "K={k}: full CSI decode failed");
        ensure!(rep.zeroed.failures > 0, "K={k}: degraded CSI never failed");
    }
    Ok("V_Y(1) suffices; zeroed projection fails".into())
}

fn c4_generic_pcsi2() -> Outcome {
    let f2 = field_of_order(2).unwrap();
    let opts = SearchOptions { l: Some(3), budget: 64 };
    let bank = search_vectors(&f2, 4, 2, BankMode::Pcsi2, 5, &opts).map_err(|e| e.to_string())?;
    let ext = bank.extension(&f2).map_err(|e| e.to_string())?;
    let big = ext.big();
    for i in 0..4 {
        for j in i + 1..4 {
            let pair = Matrix::from_rows(&[bank.vectors[i].row(0).to_vec(), bank.vectors[j].row(0).to_vec()]).unwrap();
            ensure!(pair.rank(&big) == 2, "rows {i},{j} of the bank are dependent");
        }
    }
    let systems = bank.verify(&f2).map_err(|e| e.to_string())?;
    ensure!(systems == 6, "certified {systems} systems");
    let s = GenericPcsi2::new(f2, 4, 2, false, bank).map_err(|e| e.to_string())?;
    ensure!(rate(&s)? == r(1, 2), "rate {}", rate(&s)?);
    let n = exhaustive(&s)?;

    let f3 = field_of_order(3).unwrap();
    let bank = search_vectors(&f3, 4, 3, BankMode::Pcsi2Private, 0, &SearchOptions::default())
        .map_err(|e| e.to_string())?;
    let systems = bank.verify(&f3).map_err(|e| e.to_string())?;
    ensure!(systems == 32, "private bank certified {systems} systems");
    let s = GenericPcsi2::new(f3, 4, 3, true, bank).map_err(|e| e.to_string())?;
    let cells = exact_tv_zero(&s, PrivacyMode::ThetaSLambda)?;
    sampled(&s, 50)?;
    Ok(format!("6 systems, {n} replays, rate 1/2; private: 32 systems, TV=0 over {cells} cells"))
}

fn c5_mk() -> Outcome {
    let s = MkScheme::new(field_of_order(3).unwrap(), 3).unwrap();
    ensure!(rate(&s)? == Rational::one(), "q=3 rate {}", rate(&s)?);
    exhaustive(&s)?;
    exact_tv_zero(&s, PrivacyMode::ThetaS)?;
    let s = MkScheme::new(field_of_order(2).unwrap(), 3).unwrap();
    ensure!(rate(&s)? == r(1, 2), "q=2 rate {}", rate(&s)?);
    exhaustive(&s)?;
    exact_tv_zero(&s, PrivacyMode::ThetaS)?;
    Ok("q=3 rate 1, q=2 rate 1/2".into())
}

fn c6_f3() -> Outcome {
    let s = F3Scheme::new();
    let scen = full_scenarios(&s).map_err(|e| e.to_string())?;
    ensure!(scen.len() == 96, "{} scenarios", scen.len());
    let c = audit_correctness(&s, MessageMode::Exhaustive, CsiMode::Retained).map_err(|e| e.to_string())?;
    ensure!(c.pass(), "{} failures", c.failures);
    ensure!(c.trials == 96 * 2 * 81, "{} replays", c.trials);
    exact_tv_zero(&s, PrivacyMode::ThetaS)?;
    ensure!(rate(&s)? == r(1, 2), "rate {}", rate(&s)?);
    Ok(format!("{} replays, TV=0, rate 1/2", c.trials))
}

fn c7_grs() -> Outcome {
    for m in 1..=3usize {
        let s = GrsScheme::new(field_of_order(5).unwrap(), 4, m, GrsKind::PcsiI).unwrap();
        ensure!(rate(&s)? == r(1, 4 - m as i128), "M={m} rate {}", rate(&s)?);
        exhaustive(&s)?;
        exact_tv_zero(&s, PrivacyMode::ThetaS)?;
    }
    Ok("q=5 K=4 M=1..3: rate 1/(K-M), TV=0".into())
}

fn c8_combined() -> Outcome {
    let s = GrsScheme::new(field_of_order(5).unwrap(), 4, 2, GrsKind::Pcsi).unwrap();
    let store = MessageStore::from_index(4, 1, 5, 321);
    let mut coins = SeededCoins::new(1);
    let (mut inside, mut outside) = (0, 0);
    for scen in full_scenarios(&s).map_err(|e| e.to_string())? {
        let t = run_round(&s, &scen, &store, &mut coins).map_err(|e| e.to_string())?;
        ensure!(t.download == Rational::int(3), "download {} at theta={} S={:?}", t.download, scen.theta, scen.support);
        if scen.theta_in_support() {
            inside += 1;
        } else {
            outside += 1;
        }
    }
    ensure!(inside > 0 && outside > 0, "both branches must occur");
    ensure!(rate(&s)? == r(1, 3), "rate {}", rate(&s)?);
    exhaustive(&s)?;
    let cells = exact_tv_zero(&s, PrivacyMode::ThetaS)?;
    Ok(format!("length 3 in both branches, rate 1/3, TV=0 over {cells} cells"))
}

fn c9_twostep() -> Outcome {
    let s = TwoStepPcsi1::new(field_of_order(3).unwrap(), 4, 3, None).unwrap();
    ensure!(rate(&s)? == Rational::one(), "K=4 M=3 rate {}", rate(&s)?);
    exhaustive(&s)?;
    exact_tv_zero(&s, PrivacyMode::ThetaS)?;

    let f2 = field_of_order(2).unwrap();
    let bank = search_vectors(&f2, 5, 2, BankMode::Pcsi2Private, 0, &SearchOptions::default())
        .map_err(|e| e.to_string())?;
    let s = TwoStepPcsi1::new(f2, 5, 3, Some(bank)).map_err(|e| e.to_string())?;
    let l = s.params().l as i128;
    ensure!(s.download_cost() == r(7 * l, 2), "cost {} for L={l}", s.download_cost());
    ensure!(rate(&s)? == r(2, 7), "rate {}", rate(&s)?);
    sampled(&s, 20)?;
    let p = sampled_privacy(&s, 10_000)?;
    exact_tv_zero(&s, PrivacyMode::ThetaS)?;

    let f3 = field_of_order(3).unwrap();
    let bank = search_vectors(&f3, 5, 2, BankMode::Pcsi2Private, 0, &SearchOptions::default())
        .map_err(|e| e.to_string())?;
    let s3 = TwoStepPcsi1::new(f3, 5, 3, Some(bank)).map_err(|e| e.to_string())?;
    ensure!(rate(&s3)? == r(2, 7), "q=3 rate {}", rate(&s3)?);
    sampled(&s3, 20)?;
    let p3 = sampled_privacy(&s3, 10_000)?;
    exact_tv_zero(&s3, PrivacyMode::ThetaS)?;
    Ok(format!("rate 1 and 2/7, D=7L/2 with L={l}; sampled p={p:.3} (q=2), {p3:.3} (q=3); exact TV=0"))
}

fn c10_generic_pcsi1() -> Outcome {
    for (q, private) in [(2, false), (2, true), (3, true)] {
        let f = field_of_order(q).unwrap();
        let mode = if private { BankMode::Pcsi1Private } else { BankMode::Pcsi1 };
        let bank = search_vectors(&f, 3, 1, mode, 0, &SearchOptions::default()).map_err(|e| e.to_string())?;
        let s = GenericPcsi1::new(f, 3, 1, private, bank).map_err(|e| e.to_string())?;
        ensure!(rate(&s)? == r(1, 2), "q={q} rate {}", rate(&s)?);
        let params = s.params();
        let stores = (q as u64).pow((3 * params.l) as u32);
        let mut store = MessageStore::zeros(3, params.l);
        let mut coins = SeededCoins::new(0);
        for scen in full_scenarios(&s).map_err(|e| e.to_string())? {
            let (query, state) = s.query(&scen, &mut coins).map_err(|e| e.to_string())?;
            for idx in 0..stores {
                store.set_index(q, idx);
                let ans = s.answer(&query, &store).map_err(|e| e.to_string())?;
                let y = compute_y(s.field(), &store, &scen);
                let all = s.recover_all(&ans, &state, &SideInfo::Full(y)).map_err(|e| e.to_string())?;
                for (k, w) in all.iter().enumerate() {
                    ensure!(w.as_slice() == store.message(k), "q={q}: message {k} not recovered");
                }
            }
        }
        exhaustive(&s)?;
        let mode = if private { PrivacyMode::ThetaSLambda } else { PrivacyMode::ThetaS };
        exact_tv_zero(&s, mode)?;
    }
    Ok("rate 1/2, all messages recovered, TV=0 (plain and private)".into())
}

fn c11_halfdl() -> Outcome {
    let t = Arc::new(tower_new(field_of_order(25).unwrap()).unwrap());
    let s = HalfDlScheme::new(t, 4, 2).unwrap();
    ensure!(rate(&s)? == r(1, 3), "rate {}", rate(&s)?);
    sampled(&s, 200)?;
    let p = sampled_privacy(&s, 10_000)?;
    Ok(format!("rate 1/3, sampled privacy p={p:.3}"))
}

fn cap(v: Variant, mode: Mode, k: usize, m: usize) -> CapacityValue {
    capacity_value(&CapacityQuery { variant: v, mode, k, m }).unwrap()
}

fn c12_capacity() -> Outcome {
    let ri = |n: usize, d: usize| r(n as i128, d as i128);
    let mut cells = 0;
    for k in 2..=10usize {
        for m in 1..=k {
            if m < k {
                let sup = ri(1, k - m);
                let inf = if 2 * m <= k { ri(1, k - 1) } else { Rational::one() / (ri(k, 1) - ri(m, k - m)) };
                ensure!(cap(Variant::PcsiI, Mode::Sup, k, m).value() == Some(sup), "PCSI-I sup K={k} M={m}");
                ensure!(cap(Variant::PcsiI, Mode::Inf, k, m).value() == Some(inf), "PCSI-I inf K={k} M={m}");
                ensure!(inf <= sup, "PCSI-I inf > sup at K={k} M={m}");
                ensure!(cap(Variant::PcsiI, Mode::PriSup, k, m).value() == Some(inf), "PCSI-I pri sup K={k} M={m}");
                let pri_inf = cap(Variant::PcsiI, Mode::PriInf, k, m);
                let hi = if k > 2 { inf.min(ri(1, k - 2)) } else { inf };
                ensure!(pri_inf.lower() == ri(1, k - 1) && pri_inf.upper() == hi, "PCSI-I pri inf K={k} M={m}");
                cells += 4;
            }
            if m >= 2 {
                let sup = if 2 * m <= k + 1 { ri(2, k) } else { ri(1, k - m + 1) };
                let inf = ri(m, (m - 1) * k);
                ensure!(cap(Variant::PcsiII, Mode::Sup, k, m).value() == Some(sup), "PCSI-II sup K={k} M={m}");
                ensure!(cap(Variant::PcsiII, Mode::Inf, k, m).value() == Some(inf), "PCSI-II inf K={k} M={m}");
                ensure!(inf <= sup, "PCSI-II inf > sup at K={k} M={m}");
                ensure!(cap(Variant::PcsiII, Mode::PriAtQ(3), k, m).value() == Some(inf), "PCSI-II pri K={k} M={m}");
                if m == 2 {
                    ensure!(inf == sup, "PCSI-II M=2 inf != sup at K={k}");
                }
                if 2 * m == k + 2 {
                    ensure!(ri(2, k) == ri(1, k - m + 1), "boundary identity at K={k} M={m}");
                }
                cells += 3;
            }
            let sup = if m == 1 { ri(1, k - 1) } else { ri(1, k - m + 1) };
            let inf = ri(1, k - 1);
            ensure!(cap(Variant::Pcsi, Mode::Sup, k, m).value() == Some(sup), "PCSI sup K={k} M={m}");
            ensure!(cap(Variant::Pcsi, Mode::Inf, k, m).value() == Some(inf), "PCSI inf K={k} M={m}");
            ensure!(cap(Variant::Pcsi, Mode::PriAtQ(4), k, m).value() == Some(inf), "PCSI pri K={k} M={m}");
            ensure!(inf <= sup, "PCSI inf > sup at K={k} M={m}");
            cells += 3;
        }
    }
    Ok(format!("{cells} cells for K<=10"))
}

fn c13_search() -> Outcome {
    let f = field_of_order(3).unwrap();
    let opts = SearchOptions { l: Some(3), budget: 64 };
    let (mut attempts, mut failures) = (0usize, 0usize);
    for seed in 0..200 {
        let bank = search_vectors(&f, 4, 3, BankMode::Pcsi2, seed, &opts).map_err(|e| e.to_string())?;
        attempts += bank.attempts.len();
        failures += bank.attempts.iter().filter(|a| !a.certified).count();
        let n = bank.verify(&f).map_err(|e| e.to_string())?;
        ensure!(n == 4, "seed {seed}: {n} systems verified");
    }
    let rate = failures as f64 / attempts as f64;
    let bound = 24.0 / 27.0;
    let slack = 3.0 * (bound * (1.0 - bound) / attempts as f64).sqrt();
    ensure!(rate <= bound + slack, "failure rate {rate:.3} over {attempts} attempts");
    Ok(format!("failure rate {rate:.3} <= 24/27 over {attempts} attempts"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 13] = [
        ("alignment scheme rate, correctness, privacy", c1_ia_rate),
        ("F_4 matrix representations", c2_f4_matrices),
        ("half side information suffices", c3_half_csi),
        ("generic PCSI-II scheme and banks", c4_generic_pcsi2),
        ("M=K scheme", c5_mk),
        ("ternary M=3, K=4 scheme", c6_f3),
        ("GRS PCSI-I scheme", c7_grs),
        ("combined PCSI scheme", c8_combined),
        ("two-step PCSI-I scheme", c9_twostep),
        ("generic PCSI-I scheme", c10_generic_pcsi1),
        ("half-download PCSI scheme", c11_halfdl),
        ("capacity oracle", c12_capacity),
        ("vector search retry behaviour", c13_search),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match out {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!("{} of 13 criteria passed", 13 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
