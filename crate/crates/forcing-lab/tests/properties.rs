mod oracle;

use forcing_lab::ccc::{EFunction, SimConfig};
use forcing_lab::gen::{self, rng, GAP_THETA};
use forcing_lab::ordinal::Ordinal;
use forcing_lab::pstar::{amalgamate_split_family, is_split_pair, is_valid_pstar, leq_failure, normalize};
use forcing_lab::quotient::{project_theta, simulate_ptheta_filter, PThetaConfig};
use forcing_lab::schema::{parse_object, Schema};
use forcing_lab::side::{is_valid_p, leq_p_failure, normalize_p, oplus_p, PCondition};
use forcing_lab::tree::{is_end_extension, Tree};
use forcing_lab::universe::{default_universe, gap_universe, KappaOrdinal};
use proptest::prelude::*;

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 256, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn restrict_composes(seed: u64, a in 0u64..4, b in 0u64..4, fa in 0u64..3, fb in 0u64..3) {
        let t = gen::random_tree(&mut rng(seed), 12, 3);
        let level = |c: u64, f: u64| if c == 0 { Ordinal::nat(f) } else { Ordinal::ch_point(c).add(&Ordinal::nat(f)).unwrap() };
        let (da, db) = (level(a, fa), level(b, fb));
        prop_assert_eq!(t.restrict(&da).restrict(&db), t.restrict(&da.clone().min(db)));
        prop_assert!(t.restrict(&da).validate().is_standard);
    }

    #[test]
    fn downward_closure_is_a_closure_operator(seed: u64) {
        let mut r = rng(seed);
        let t = gen::random_tree(&mut r, 12, 2);
        let nodes: Vec<Ordinal> = t.nodes().cloned().collect();
        let small: forcing_lab::tree::NodeSet = nodes.iter().step_by(3).cloned().collect();
        let mut big = small.clone();
        big.extend(nodes.iter().step_by(2).cloned());
        let c = t.downward_closure(&small);
        prop_assert!(small.is_subset(&c));
        prop_assert_eq!(&t.downward_closure(&c), &c);
        prop_assert!(c.is_subset(&t.downward_closure(&big)));
        prop_assert_eq!(c, oracle::closure(&t, &small));
    }

    #[test]
    fn meet_is_the_largest_common_lower_bound(seed: u64) {
        let t = gen::random_tree(&mut rng(seed), 12, 2);
        let nodes: Vec<Ordinal> = t.nodes().cloned().collect();
        for x in &nodes {
            for y in &nodes {
                if t.comparable(x, y) {
                    continue;
                }
                let common: Vec<&Ordinal> = nodes.iter().filter(|z| t.less(z, x) && t.less(z, y)).collect();
                let best = common.iter().find(|z| common.iter().all(|w| t.leq(w, z))).map(|z| (*z).clone());
                prop_assert_eq!(t.meet(x, y), best);
            }
        }
    }

    #[test]
    fn end_extension_is_a_partial_order(seed: u64) {
        let mut r = rng(seed);
        let pool = gen::key_pool(&default_universe());
        let a = gen::random_pstar_on(&mut r, &gen::random_tree(&mut rng(seed ^ 1), 8, 1), &pool, 0);
        let b = gen::random_extension(&mut r, &a, &pool);
        let c = gen::random_extension(&mut r, &b, &pool);
        let (ta, tb, tc) = (&a.tree, &b.tree, &c.tree);
        prop_assert!(is_end_extension(ta, ta));
        if is_end_extension(ta, tb) && is_end_extension(tb, tc) {
            prop_assert!(is_end_extension(ta, tc));
        }
        if is_end_extension(ta, tb) && is_end_extension(tb, ta) {
            prop_assert_eq!(ta, tb);
        }
    }

    #[test]
    fn pstar_order_is_reflexive_and_transitive(seed: u64) {
        let mut r = rng(seed);
        let pool = gen::key_pool(&default_universe());
        let t = gen::random_tree(&mut r, 8, 1);
        let p = gen::random_pstar_on(&mut r, &t, &pool, 4);
        let q = gen::random_extension(&mut r, &p, &pool);
        let s = gen::random_extension(&mut r, &q, &pool);
        prop_assert!(leq_failure(&p, &p).is_none());
        if leq_failure(&s, &q).is_none() && leq_failure(&q, &p).is_none() {
            prop_assert!(leq_failure(&s, &p).is_none());
        }
    }

    #[test]
    fn p_order_is_reflexive_and_transitive(seed: u64) {
        let mut r = rng(seed);
        let u = default_universe();
        let p = gen::random_valid_p(&mut r, &u, 8, 4, 3);
        let q = gen::random_extension_p(&mut r, &u, &p);
        let s = gen::random_extension_p(&mut r, &u, &q);
        prop_assert!(leq_p_failure(&p, &p).is_none());
        if leq_p_failure(&s, &q).is_none() && leq_p_failure(&q, &p).is_none() {
            prop_assert!(leq_p_failure(&s, &p).is_none());
        }
    }

    #[test]
    fn normalize_meets_every_clause(seed: u64) {
        let mut r = rng(seed);
        let u = default_universe();
        let p = gen::random_valid_p(&mut r, &u, 10, 4, 3);
        let q = normalize_p(&u, &p).unwrap();
        let (pb, qb) = (&p.base, &q.base);
        prop_assert_eq!(oracle::tree_report(&qb.tree), (true, true, true));
        prop_assert!(oracle::leq_p(&q, &p));
        prop_assert!(oracle::p_valid(&u, &q));
        prop_assert_eq!(&qb.d, &pb.d);
        prop_assert_eq!(qb.w.keys().collect::<Vec<_>>(), pb.w.keys().collect::<Vec<_>>());
        prop_assert_eq!(&q.a, &p.a);
        for (k, w) in &pb.w {
            prop_assert_eq!(&qb.w[k], &oracle::closure(&qb.tree, w));
        }
        // Every shared node of the output sits below a shared node of the input.
        for (a, wa) in &qb.w {
            for (b, wb) in &qb.w {
                if a >= b {
                    continue;
                }
                for x in wa.intersection(wb) {
                    let old = pb.w[a].intersection(&pb.w[b]).any(|z| qb.tree.leq(x, z));
                    prop_assert!(old, "{} in W({:?}) ∩ W({:?}) has no witness", x, a, b);
                }
            }
        }
        prop_assert_eq!(normalize(qb).unwrap(), qb.clone());
    }

    #[test]
    fn split_pairs_have_the_derived_facts(seed: u64, d in 2usize..5) {
        let mut r = rng(seed);
        let (parts, levels) = gen::split_family(&mut r, &default_universe(), d);
        for i in 0..d {
            for j in i + 1..d {
                let (p, q, dp) = (&parts[i], &parts[j], &levels[i]);
                prop_assert!(is_split_pair(p, q, dp, &levels[j]).unwrap());
                prop_assert!(p.tree.nodes().filter(|x| q.tree.contains(x)).all(|x| x < dp));
                let shared: Vec<_> = p.w.keys().filter(|k| q.w.contains_key(*k)).collect();
                for xi in &shared {
                    for (eta, w) in &p.w {
                        prop_assert!(w.intersection(q.w_of(xi)).all(|x| p.w_of(xi).contains(x)), "{:?} {:?}", eta, xi);
                    }
                    for (eta, w) in &q.w {
                        prop_assert!(w.intersection(p.w_of(xi)).all(|x| q.w_of(xi).contains(x)), "{:?} {:?}", eta, xi);
                    }
                }
            }
        }
        let refs: Vec<_> = parts.iter().collect();
        let (amalgam, _) = amalgamate_split_family(&parts, &levels).unwrap();
        prop_assert_eq!(&amalgam, &forcing_lab::pstar::oplus_pstar(&refs));
        prop_assert!(oracle::pstar_valid(&amalgam));
        prop_assert!(parts.iter().all(|p| oracle::leq_pstar(&amalgam, p)));
    }

    #[test]
    fn projection_laws(seed: u64, which in 0usize..3) {
        let mut r = rng(seed);
        let u = gap_universe();
        let theta = [4, 12, 19][which];
        let p = gen::random_valid_p(&mut r, &u, 8, 4, 3);
        let q = gen::random_extension_p(&mut r, &u, &p);
        let pi = project_theta(&u, &p, theta).unwrap();
        prop_assert_eq!(&pi, &oracle::project(&p, theta));
        prop_assert!(oracle::p_valid(&u, &pi));
        prop_assert!(oracle::leq_p(&p, &pi));
        prop_assert_eq!(pi.tree(), p.tree());
        if oracle::p_valid(&u, &q) && oracle::leq_p(&q, &p) {
            let pq = project_theta(&u, &q, theta).unwrap();
            prop_assert!(oracle::leq_p(&pq, &pi));
            // Any s ∈ P_θ above q is above π_θ(q); π_θ(p) is one such s.
            prop_assert!(oracle::leq_p(&pq, &project_theta(&u, &pi, theta).unwrap()));
            let both = oplus_p(&[&p, &q]);
            if is_valid_p(&u, &both) {
                let split = oplus_p(&[&pi, &pq]);
                prop_assert_eq!(project_theta(&u, &both, theta).unwrap(), split);
            }
        }
    }

    #[test]
    fn projection_distributes_over_tuples(seed: u64, d in 2usize..4) {
        let u = gap_universe();
        let t = gen::copy_tuple(&mut rng(seed), &u, d, &(0..20).collect::<Vec<_>>());
        let parts = t.conditions();
        let refs: Vec<&PCondition> = parts.iter().collect();
        let whole = oplus_p(&refs);
        prop_assert!(is_valid_p(&u, &whole));
        let pis: Vec<PCondition> = parts.iter().map(|p| project_theta(&u, p, GAP_THETA).unwrap()).collect();
        let pi_refs: Vec<&PCondition> = pis.iter().collect();
        prop_assert_eq!(project_theta(&u, &whole, GAP_THETA).unwrap(), oplus_p(&pi_refs));
    }

    #[test]
    fn schema_round_trips(seed: u64) {
        let mut r = rng(seed);
        let u = gap_universe();
        let p = gen::random_p(&mut r, &u, 10, 4, 3);
        prop_assert_eq!(PCondition::from_text(&p.to_text()).unwrap(), p.clone());
        prop_assert_eq!(Tree::from_text(&p.base.tree.to_text()).unwrap(), p.base.tree.clone());
        prop_assert!(parse_object(&p.to_text()).is_ok());
        let keys: Vec<KappaOrdinal> = p.base.w.keys().cloned().collect();
        let e = gen::random_e(&mut r, &keys, 0.2);
        prop_assert_eq!(EFunction::from_text(&e.to_text()).unwrap(), e);
        let cfg = SimConfig::new(keys, 4, seed);
        prop_assert_eq!(SimConfig::from_text(&cfg.to_text()).unwrap(), cfg);
    }
}

#[test]
fn projection_keeps_the_tree_along_the_filter() {
    let u = gap_universe();
    for seed in 0..20 {
        let sim = SimConfig::new((1..=4).map(KappaOrdinal::nat).collect(), 6, seed).commit_all();
        let cfg = PThetaConfig { sim, model_moves: 3, station_density: 0.3 };
        let h = simulate_ptheta_filter(&u, GAP_THETA, &cfg).unwrap();
        for s in &h.chain {
            assert!(is_valid_p(&u, s));
            assert_eq!(project_theta(&u, s, GAP_THETA).unwrap().tree(), s.tree());
        }
        assert!(h.tree_h().validate().is_standard);
    }
}

#[test]
fn empty_condition_is_the_top() {
    let u = default_universe();
    let mut r = rng(7);
    for _ in 0..100 {
        let p = gen::random_valid_p(&mut r, &u, 8, 4, 2);
        assert!(leq_p_failure(&p, &PCondition::empty()).is_none());
        assert!(is_valid_pstar(&p.base));
    }
}
