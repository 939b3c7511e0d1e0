//! Properties of the basic engine under arbitrary laws, environments and seeds.

use proptest::prelude::*;
use rumour::engine::{self, BasicState, SetState, Sides, Stop};
use rumour::field::StaticField;
use rumour::sites::{SiteEnvironment, Sites};
use rumour::RadiusLaw;

fn pmf(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..=max_len).prop_filter_map("needs positive mass", |w| {
        let total: f64 = w.iter().sum();
        (total > 1e-6).then(|| w.iter().map(|x| x / total).collect())
    })
}

fn finite_law() -> impl Strategy<Value = RadiusLaw> {
    pmf(4).prop_filter_map("pmf rounding", |p| RadiusLaw::finite(p).ok())
}

fn any_law() -> impl Strategy<Value = RadiusLaw> {
    prop_oneof![
        (0u64..4).prop_map(RadiusLaw::constant),
        (0.0f64..0.7).prop_map(|q| RadiusLaw::geometric(q).unwrap()),
        (0.0f64..0.6).prop_map(|q| RadiusLaw::geometric_min1(q).unwrap()),
        (2.0f64..4.0, 0.0f64..0.6).prop_map(|(a, c)| RadiusLaw::polynomial_tail(a, c).unwrap()),
        finite_law(),
    ]
}

fn environment() -> impl Strategy<Value = SiteEnvironment> {
    prop_oneof![
        Just(SiteEnvironment::AllOccupied),
        (0.0f64..=1.0).prop_map(|p_occ| SiteEnvironment::BernoulliSites { p_occ }),
        (0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(p00, p11)| SiteEnvironment::MarkovSites { p00, p11 }),
    ]
}

/// A law whose CDF lies below `law`'s everywhere: some mass from every atom
/// is pushed one or more places up.
fn dominating_pair() -> impl Strategy<Value = (RadiusLaw, RadiusLaw)> {
    prop_oneof![
        (pmf(4), prop::collection::vec(0.0f64..=1.0, 4), 1usize..3).prop_map(|(a, moved, shift)| {
            let mut b = vec![0.0; a.len() + shift];
            for (k, &p) in a.iter().enumerate() {
                b[k] += p * (1.0 - moved[k]);
                b[k + shift] += p * moved[k];
            }
            (RadiusLaw::Finite { pmf: a }, RadiusLaw::Finite { pmf: b })
        }),
        (0.0f64..0.7, 0.0f64..0.2).prop_map(|(q, dq)| {
            (RadiusLaw::geometric(q).unwrap(), RadiusLaw::geometric(q + dq).unwrap())
        }),
        (0u64..3, 0u64..3).prop_map(|(c, dc)| (RadiusLaw::constant(c), RadiusLaw::constant(c + dc))),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn interval_engine_matches_reference(law in any_law(), env in environment(), seed in any::<u64>()) {
        let mut field = StaticField::new(law, seed);
        let mut sites = Sites::new(env, seed ^ 0x5157);
        let mut fast = BasicState::init();
        let mut slow = SetState::init();
        while !fast.is_extinct() && fast.n < 200 {
            fast = engine::step(&fast, Sides::Both, &mut field, &mut sites);
            slow = engine::step_reference(&slow, Sides::Both, &mut field, &mut sites);
            prop_assert!(fast.matches(&slow), "diverged at step {}: {:?}", fast.n, fast);
            prop_assert_eq!(fast.active_vertices(), slow.active.iter().copied().collect::<Vec<_>>());
        }
    }

    #[test]
    fn one_sided_engine_matches_reference(law in finite_law(), seed in any::<u64>()) {
        let mut field = StaticField::new(law, seed);
        let mut sites = Sites::all_occupied();
        let mut fast = BasicState::init_one_sided();
        let mut slow = SetState::init();
        while !fast.is_extinct() && fast.n < 200 {
            fast = engine::step(&fast, Sides::RightOnly, &mut field, &mut sites);
            slow = engine::step_reference(&slow, Sides::RightOnly, &mut field, &mut sites);
            prop_assert!(fast.matches(&slow));
            prop_assert_eq!(fast.l, 0);
        }
    }

    #[test]
    fn fronts_are_monotone_in_the_law((a, b) in dominating_pair(), env in environment(), seed in any::<u64>()) {
        let mut fa = StaticField::new(a, seed);
        let mut fb = StaticField::new(b, seed);
        let mut sa = Sites::new(env.clone(), seed);
        let mut sb = Sites::new(env, seed);
        let ta = engine::run(&mut fa, &mut sa, Stop::Horizon(200)).unwrap();
        let tb = engine::run(&mut fb, &mut sb, Stop::Horizon(200)).unwrap();
        for n in 0..=200usize {
            let ra = ta.records.get(n).unwrap_or(ta.last());
            let rb = tb.records.get(n).unwrap_or(tb.last());
            prop_assert!(ra.r <= rb.r && ra.l >= rb.l, "step {n}: {ra:?} vs {rb:?}");
        }
    }

    #[test]
    fn extinction_is_absorbing(law in finite_law(), env in environment(), seed in any::<u64>()) {
        let mut field = StaticField::new(law, seed);
        let mut sites = Sites::new(env, seed);
        let mut state = BasicState::init();
        while !state.is_extinct() && state.n < 500 {
            state = engine::step(&state, Sides::Both, &mut field, &mut sites);
        }
        if state.is_extinct() {
            for _ in 0..20 {
                let next = engine::step(&state, Sides::Both, &mut field, &mut sites);
                prop_assert!(next.is_extinct());
                prop_assert_eq!((next.l, next.r), (state.l, state.r));
                state = next;
            }
        }
    }

    #[test]
    fn supercritical_fronts_move_every_step(
        law in prop_oneof![
            (0.0f64..0.8).prop_map(|q| RadiusLaw::geometric_min1(q).unwrap()),
            pmf(3).prop_filter_map("pmf rounding", |mut p| { p.insert(0, 0.0); RadiusLaw::finite(p).ok() }),
            (1u64..4).prop_map(RadiusLaw::constant),
        ],
        seed in any::<u64>(),
    ) {
        prop_assume!(law.p1() == 0.0);
        let mut field = StaticField::new(law, seed);
        let t = engine::run(&mut field, &mut Sites::all_occupied(), Stop::Horizon(300)).unwrap();
        for rec in &t.records {
            prop_assert!(rec.r >= rec.n as i64 && rec.l <= -(rec.n as i64), "{rec:?}");
        }
    }

    #[test]
    fn cluster_matches_final_interval(law in finite_law(), env in environment(), seed in any::<u64>()) {
        let mut field = StaticField::new(law, seed);
        let mut sites = Sites::new(env, seed);
        let t = engine::run(&mut field, &mut sites, Stop::UntilExtinct(10_000)).unwrap();
        if let (Some(tau), Some(c)) = (t.tau(), t.cluster) {
            let last = t.last();
            prop_assert_eq!(last.n, tau);
            prop_assert_eq!(c.m as i64, last.r - last.l + 1);
            prop_assert_eq!(c.m + 1, c.m_plus + c.m_minus);
            prop_assert!(t.records.windows(2).all(|w| w[1].r >= w[0].r && w[1].l <= w[0].l));
        }
    }
}

#[test]
fn constant_two_spreads_deterministically() {
    let mut field = StaticField::new(RadiusLaw::constant(2), 7);
    let t = engine::run(&mut field, &mut Sites::all_occupied(), Stop::Horizon(50)).unwrap();
    assert!(t.records.iter().all(|r| r.r == 2 * r.n as i64 && r.l == -2 * r.n as i64));
}

#[test]
fn trajectory_csv_schema() {
    let mut field = StaticField::new(RadiusLaw::finite(vec![0.5, 0.0, 0.5]).unwrap(), 11);
    let t = engine::run(&mut field, &mut Sites::all_occupied(), Stop::UntilExtinct(100)).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,l,r,active_count"));
    let last = text.lines().last().unwrap();
    assert!(last.starts_with("#status=extinct,tau="), "{last}");
    let mut field = StaticField::new(RadiusLaw::constant(1), 11);
    let t = engine::run(&mut field, &mut Sites::all_occupied(), Stop::Horizon(2)).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text, "n,l,r,active_count\n0,0,0,1\n1,-1,1,2\n2,-2,2,2\n#status=censored,tau=,M=,horizon=2\n");
}
