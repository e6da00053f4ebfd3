mod support;

use lru_antichain::zdd::{Manager, Zdd};
use proptest::prelude::*;
use support::{naive, to_family, Family};

fn family() -> impl Strategy<Value = Family> {
    prop::collection::btree_set(prop::collection::btree_set(0u32..12, 0..7), 0..40)
}

fn antichain_min() -> impl Strategy<Value = Family> {
    family().prop_map(|f| naive::minimal(&f))
}

fn antichain_max() -> impl Strategy<Value = Family> {
    family().prop_map(|f| naive::maximal(&f))
}

fn build(m: &mut Manager, f: &Family) -> Zdd {
    m.from_sets(f.iter().map(|s| s.iter().copied().collect::<Vec<_>>()))
}

fn read(m: &Manager, z: Zdd) -> Family {
    to_family(m.enumerate(z, usize::MAX))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn binary_set_operations(a in family(), b in family()) {
        let mut m = Manager::new();
        let (za, zb) = (build(&mut m, &a), build(&mut m, &b));
        let r = m.union(za, zb);
        prop_assert_eq!(read(&m, r), naive::union(&a, &b));
        let r = m.intersect(za, zb);
        prop_assert_eq!(read(&m, r), naive::intersect(&a, &b));
        let r = m.difference(za, zb);
        prop_assert_eq!(read(&m, r), naive::difference(&a, &b));
        let r = m.nosup(za, zb);
        prop_assert_eq!(read(&m, r), naive::nosup(&a, &b));
        let r = m.nosub(za, zb);
        prop_assert_eq!(read(&m, r), naive::nosub(&a, &b));
    }

    #[test]
    fn unary_operations(a in family(), v in 0u32..12, n in 0usize..8) {
        let mut m = Manager::new();
        let z = build(&mut m, &a);
        prop_assert_eq!(m.count(z), a.len() as u128);
        prop_assert_eq!(read(&m, z), a.clone());
        let r = m.minimal(z);
        prop_assert_eq!(read(&m, r), naive::minimal(&a));
        let r = m.maximal(z);
        prop_assert_eq!(read(&m, r), naive::maximal(&a));
        let r = m.offset(z, v);
        prop_assert_eq!(read(&m, r), naive::offset(&a, v));
        let r = m.onset(z, v);
        prop_assert_eq!(read(&m, r), naive::onset(&a, v));
        let r = m.insert(z, v);
        prop_assert_eq!(read(&m, r), naive::insert(&a, v));
        let r = m.truncate(z, n as u32);
        prop_assert_eq!(read(&m, r), naive::truncate(&a, n));
        prop_assert_eq!(m.has_set_of_size_at_least(z, n as u32), naive::has_size_at_least(&a, n));
        // Equivalent formulation through truncate.
        if n > 0 {
            let t = m.truncate(z, n as u32 - 1);
            prop_assert_eq!(m.has_set_of_size_at_least(z, n as u32), t != z);
        }
        for s in a.iter().take(5) {
            prop_assert!(m.contains(z, &s.iter().copied().collect::<Vec<_>>()));
        }
    }

    #[test]
    fn antichain_operations(a in antichain_min(), b in antichain_min(), c in antichain_max(), d in antichain_max(), v in 0u32..12) {
        let mut m = Manager::new();
        let (za, zb, zc, zd) = (build(&mut m, &a), build(&mut m, &b), build(&mut m, &c), build(&mut m, &d));
        let r = m.min_union(za, zb);
        let got = read(&m, r);
        prop_assert_eq!(&got, &naive::minimal(&naive::union(&a, &b)));
        prop_assert_eq!(naive::minimal(&got), got);
        let r = m.max_union(zc, zd);
        let got = read(&m, r);
        prop_assert_eq!(&got, &naive::maximal(&naive::union(&c, &d)));
        prop_assert_eq!(naive::maximal(&got), got);
        let r = m.add_element_min(za, v);
        prop_assert_eq!(read(&m, r), naive::minimal(&naive::insert(&a, v)));
        let r = m.add_element_max(zc, v);
        prop_assert_eq!(read(&m, r), naive::maximal(&naive::insert(&c, v)));
    }

    #[test]
    fn algebraic_identities(a in family(), p in 0u32..8, q in 0u32..8) {
        let mut m = Manager::new();
        let z = build(&mut m, &a);
        let once = m.minimal(z);
        prop_assert_eq!(m.minimal(once), once);
        let once = m.maximal(z);
        prop_assert_eq!(m.maximal(once), once);
        let tp = m.truncate(z, p);
        let tpq = m.truncate(tp, q);
        prop_assert_eq!(tpq, m.truncate(z, p.min(q)));
        let b = m.bottom();
        prop_assert_eq!(m.union(z, b), z);
        prop_assert_eq!(m.union(z, z), z);
        let mn = m.minimal(z);
        prop_assert_eq!(m.min_union(mn, b), mn);
    }

    #[test]
    fn canonicity(a in family(), b in family()) {
        let mut m = Manager::new();
        let forward = build(&mut m, &a);
        let reversed = m.from_sets(a.iter().rev().map(|s| s.iter().copied().collect::<Vec<_>>()));
        prop_assert_eq!(forward, reversed);
        // (a ∪ b) \ (b \ a) = a
        let zb = build(&mut m, &b);
        let u = m.union(forward, zb);
        let only_b = m.difference(zb, forward);
        prop_assert_eq!(m.difference(u, only_b), forward);
        prop_assert_eq!(forward == zb, a == b);
    }

    #[test]
    fn memo_flushing_is_transparent(a in family(), b in family(), v in 0u32..12) {
        let mut results = Vec::new();
        for cap in [0usize, 1, 7, 1 << 20] {
            let mut m = Manager::with_memo_capacity(cap);
            let (za, zb) = (build(&mut m, &a), build(&mut m, &b));
            let mn = m.minimal(za);
            let mx = m.maximal(zb);
            let r1 = m.min_union(mn, za);
            let r2 = m.max_union(mx, zb);
            let r3 = m.add_element_min(r1, v);
            let r4 = m.truncate(r2, 3);
            results.push([read(&m, r1), read(&m, r2), read(&m, r3), read(&m, r4)]);
        }
        for r in &results[1..] {
            prop_assert_eq!(r, &results[0]);
        }
    }
}

fn fam(m: &mut Manager, sets: &[&[u32]]) -> Zdd {
    m.from_sets(sets.iter().map(|s| s.to_vec()))
}

#[test]
fn documented_examples() {
    // a=0, b=1, c=2, d=3, e=4
    let mut m = Manager::new();
    let f = fam(&mut m, &[&[1, 2, 4], &[1, 2, 3], &[1]]);
    let r = m.minimal(f);
    assert_eq!(read(&m, r), to_family(vec![vec![1]]));
    let r = m.maximal(f);
    assert_eq!(read(&m, r), to_family(vec![vec![1, 2, 4], vec![1, 2, 3]]));

    let s = fam(&mut m, &[&[0], &[1, 2]]);
    let t = fam(&mut m, &[&[1], &[0, 2], &[3]]);
    let r = m.min_union(s, t);
    assert_eq!(read(&m, r), to_family(vec![vec![0], vec![1], vec![3]]));

    let s = fam(&mut m, &[&[0]]);
    let t = fam(&mut m, &[&[0, 1]]);
    let r = m.max_union(s, t);
    assert_eq!(read(&m, r), to_family(vec![vec![0, 1]]));

    // v=5, w=6
    let s = fam(&mut m, &[&[5], &[6]]);
    let r = m.add_element_min(s, 5);
    assert_eq!(read(&m, r), to_family(vec![vec![5]]));
    let r = m.add_element_max(s, 5);
    assert_eq!(read(&m, r), to_family(vec![vec![5, 6]]));
    let b = m.bottom();
    assert_eq!(m.add_element_min(b, 5), b);
    let u = m.unit();
    let r = m.add_element_min(u, 5);
    assert_eq!(read(&m, r), to_family(vec![vec![5]]));

    let s = fam(&mut m, &[&[0], &[0, 1], &[1, 2, 3]]);
    let r = m.truncate(s, 2);
    assert_eq!(read(&m, r), to_family(vec![vec![0], vec![0, 1]]));
    assert_eq!(m.truncate(s, 1000), s);
    assert_eq!(m.truncate(b, 3), b);
    assert_eq!(m.truncate(u, 0), u);

    let s = fam(&mut m, &[&[0, 1], &[2]]);
    assert!(m.has_set_of_size_at_least(s, 2));
    assert!(!m.has_set_of_size_at_least(u, 1));
    assert!(!m.has_set_of_size_at_least(b, 0));

    let s = fam(&mut m, &[&[0], &[1]]);
    assert_eq!(m.count(s), 2);
    assert_eq!(m.count(u), 1);
    assert_eq!(m.count(b), 0);
    assert!(m.enumerate(b, 10).is_empty());
    assert_eq!(m.enumerate(u, 10), vec![Vec::<u32>::new()]);
}
