use proptest::prelude::*;
use rumour::engine::{self, BasicState, Sides, Stop};
use rumour::estimators;
use rumour::field::StaticField;
use rumour::law::DepthPolicy;
use rumour::renewal::{self, detect_sigma, detect_taus, left_reach, DEFAULT_SIGMA_EPS};
use rumour::sites::Sites;
use rumour::stats;
use rumour::RadiusLaw;

/// Supercritical laws with bounded support, so σ is always certified.
fn bounded_supercritical() -> impl Strategy<Value = RadiusLaw> {
    prop_oneof![
        (1u64..4).prop_map(RadiusLaw::constant),
        prop::collection::vec(0.0f64..1.0, 1..4).prop_filter_map("mass", |w| {
            let t: f64 = w.iter().sum();
            if t < 1e-6 {
                return None;
            }
            let mut pmf = vec![0.0];
            pmf.extend(w.iter().map(|x| x / t));
            RadiusLaw::finite(pmf).ok()
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn left_side_never_reaches_past_origin_after_sigma(law in bounded_supercritical(), seed in any::<u64>()) {
        let mut field = StaticField::new(law.clone(), seed);
        let sigma = detect_sigma(&field, &law, DepthPolicy::ExactBounded).unwrap();
        prop_assert!(sigma.certified);
        let mut state = BasicState::init();
        while state.n < sigma.step + 200 {
            if state.n >= sigma.step {
                if let Some(reach) = left_reach(&state, &mut field) {
                    prop_assert!(reach <= 0, "step {} reach {reach} sigma {}", state.n, sigma.step);
                }
            }
            state = engine::step(&state, Sides::Both, &mut field, &mut Sites::all_occupied());
        }
    }

    #[test]
    fn renewal_steps_have_unit_increments(q in 0.05f64..0.8, seed in any::<u64>()) {
        let law = RadiusLaw::geometric_min1(q).unwrap();
        let (traj, ledger) = renewal::ledger_for_run(&law, seed, 2000, DepthPolicy::TailBudget(DEFAULT_SIGMA_EPS)).unwrap();
        let mut prev = ledger.sigma.step;
        for t in &ledger.taus {
            prop_assert!(t.step > prev || (prev == ledger.sigma.step && t.step > ledger.sigma.step));
            prop_assert_eq!(traj.r_at(t.step).unwrap() - traj.r_at(t.step - 1).unwrap(), 1);
            prop_assert_eq!(traj.r_at(t.step).unwrap(), t.r);
            prev = t.step;
        }
        let incs = ledger.increments();
        prop_assert_eq!(incs.len(), ledger.taus.len().saturating_sub(1));
        if let (Some(first), Some(last)) = (ledger.taus.first(), ledger.taus.last()) {
            let total: u64 = incs.iter().map(|i| i.d_r).sum();
            prop_assert_eq!(total as i64, last.r - first.r);
        }
    }

    #[test]
    fn one_sided_sample_exists_without_zero_radius(law in bounded_supercritical(), seed in any::<u64>()) {
        let mut field = StaticField::new(law, seed);
        let inc = renewal::one_sided_renewal_sample(&mut field, &mut Sites::all_occupied(), 100_000);
        if let Some(inc) = inc {
            prop_assert!(inc.d_tau >= 1 && inc.d_r >= inc.d_tau);
        }
    }
}

#[test]
fn constant_laws_have_no_renewals() {
    let law = RadiusLaw::constant(2);
    let mut field = StaticField::new(law.clone(), 1);
    let sigma = detect_sigma(&field, &law, DepthPolicy::ExactBounded).unwrap();
    let traj = engine::run(&mut field, &mut Sites::all_occupied(), Stop::Horizon(100)).unwrap();
    let ledger = detect_taus(&traj, sigma);
    assert!(ledger.taus.is_empty());
    assert!(matches!(renewal::speed_from_renewals(&ledger, 0.95), Err(rumour::Error::NoRenewalsFound)));
}

#[test]
fn renewal_gaps_have_exponential_tail() {
    let law = RadiusLaw::geometric_min1(0.5).unwrap();
    let ledgers = estimators::renewal_ledgers(&law, 20_000, 16, 42, DepthPolicy::TailBudget(DEFAULT_SIGMA_EPS)).unwrap();
    let gaps: Vec<u64> = ledgers.iter().flat_map(|l| l.increments()).map(|i| i.d_tau).collect();
    assert!(gaps.len() > 10_000);
    let max = *gaps.iter().max().unwrap();
    let ns: Vec<u64> = (1..max).collect();
    let table = stats::survival_table(&gaps, &ns, 0.95);
    let fit = stats::log_survival_fit(&table).unwrap();
    assert!(fit.slope < 0.0 && fit.r_squared >= 0.95, "{fit:?}");
}

#[test]
fn ledger_csv_schema() {
    let law = RadiusLaw::geometric_min1(0.5).unwrap();
    let (_, ledger) = renewal::ledger_for_run(&law, 3, 200, DepthPolicy::TailBudget(DEFAULT_SIGMA_EPS)).unwrap();
    let mut buf = Vec::new();
    ledger.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("j,tau_j,r_tau_j,d_tau,d_r"));
    let row0 = lines.next().unwrap();
    assert!(row0.starts_with(&format!("0,{},", ledger.sigma.step)) && row0.ends_with(",,"), "{row0}");
    let row1: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row1.len(), 5);
    assert_eq!(row1[0], "1");
}
