use num_bigint::BigUint;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use twwc::typelib::*;
use twwc::Pmf;

fn brute_nu(d: usize, n: usize) -> f64 {
    enumerate_types(d, n).unwrap().iter().map(|t| {
        let nf = n as f64;
        let h: f64 = t.counts().iter().filter(|&&c| c > 0).map(|&c| -(c as f64 / nf) * (c as f64 / nf).ln()).sum();
        (nf * h).exp() / type_class_size(t).to_f64().unwrap()
    }).fold(0.0, f64::max)
}

#[test]
fn nu_dp_matches_enumeration() {
    for d in 1..=4 {
        for n in 1..=9 {
            let a = nu_exact(d, n);
            let b = brute_nu(d, n);
            assert!((a - b).abs() <= 1e-9 * b, "d={d} n={n}: {a} vs {b}");
            assert!(a <= nu_bound(d, n));
            assert!(a >= 1.0 - 1e-12);
        }
    }
}

#[test]
fn class_sizes_sum_to_all_sequences() {
    for d in 1..=4 {
        for n in 1..=7 {
            let total: BigUint = enumerate_types(d, n).unwrap().iter().map(type_class_size).sum();
            assert_eq!(total, BigUint::from(d).pow(n as u32));
            assert_eq!(BigUint::from(enumerate_types(d, n).unwrap().len()), num_types(d, n));
            assert!((ln_num_types(d, n) - num_types(d, n).to_f64().unwrap().ln()).abs() < 1e-9);
            assert!(num_types(d, n).to_f64().unwrap() <= ((n + 1) as f64).powi(d as i32 - 1) + 1e-9);
        }
    }
}

#[test]
fn enumerated_class_is_exactly_the_class() {
    let t = TypeVector::new(vec![2, 1, 1]).unwrap();
    let all = enumerate_type_class(&t, 1000).unwrap();
    assert_eq!(all.len(), 12);
    let mut dedup = all.clone();
    dedup.sort();
    dedup.dedup();
    assert_eq!(dedup.len(), 12);
    for s in &all {
        assert_eq!(TypeVector::of_sequence(s, 3).unwrap(), t);
    }
}

fn chi_square(counts: &HashMap<Vec<usize>, usize>, cells: usize, draws: usize) -> f64 {
    let e = draws as f64 / cells as f64;
    let seen: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
    seen + (cells - counts.len()) as f64 * e
}

#[test]
fn type_class_sampling_is_uniform() {
    let t = TypeVector::new(vec![2, 2, 1]).unwrap();
    let cells = type_class_size_u64(&t).unwrap() as usize;
    assert_eq!(cells, 30);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draws = 30_000;
    let mut counts = HashMap::new();
    for _ in 0..draws {
        let s = sample_type_class(&t, &mut rng);
        assert_eq!(TypeVector::of_sequence(&s, 3).unwrap(), t);
        *counts.entry(s).or_insert(0) += 1;
    }
    assert_eq!(counts.len(), cells);
    // 29 degrees of freedom, 0.999 quantile about 58.3
    assert!(chi_square(&counts, cells, draws) < 58.3);
}

#[test]
fn conditional_sampling_is_uniform() {
    let jt = JointType::new(vec![vec![1, 2], vec![2, 0]]).unwrap();
    let v = vec![0, 1, 0, 0, 1];
    let cells = jt.conditional_class_size().to_usize().unwrap();
    assert_eq!(cells, 3);
    let listed = enumerate_conditional_class(&jt, &v, 100).unwrap();
    assert_eq!(listed.len(), cells);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 9_000;
    let mut counts = HashMap::new();
    for _ in 0..draws {
        let x = sample_conditional_type_class(&jt, &v, &mut rng).unwrap();
        assert!(listed.contains(&x));
        *counts.entry(x).or_insert(0) += 1;
    }
    // 2 degrees of freedom, 0.999 quantile about 13.8
    assert!(chi_square(&counts, cells, draws) < 13.8);
    assert!(sample_conditional_type_class(&jt, &[0, 0, 0, 1, 1, 1], &mut rng).is_err());
}

#[test]
fn joint_type_marginals() {
    let jt = JointType::new(vec![vec![1, 2, 0], vec![0, 1, 3]]).unwrap();
    assert_eq!(jt.v_marginal().counts(), &[3, 4]);
    assert_eq!(jt.x_marginal().counts(), &[1, 3, 3]);
    assert_eq!(jt.n(), 7);
    let d = JointType::diagonal(&TypeVector::new(vec![2, 3]).unwrap());
    assert_eq!(d.conditional_class_size(), BigUint::from(1u32));
}

proptest! {
    #[test]
    fn snapped_type_is_nearest(w in prop::collection::vec(0.01f64..1.0, 2..5), n in 1usize..12) {
        let s: f64 = w.iter().sum();
        let p = Pmf::new(w.iter().map(|x| x / s).collect()).unwrap();
        let t = snap_to_type(&p, n).unwrap();
        prop_assert_eq!(t.n(), n);
        let tv = |c: &[usize]| c.iter().zip(p.probs()).map(|(&k, &q)| (k as f64 / n as f64 - q).abs()).sum::<f64>();
        let best = enumerate_types(p.len(), n).unwrap().iter().map(|u| tv(u.counts())).fold(f64::INFINITY, f64::min);
        prop_assert!(tv(t.counts()) <= best + 1e-12);
    }

    #[test]
    fn nu_ratio_bounded_by_nu(c in prop::collection::vec(0usize..6, 1..5)) {
        prop_assume!(c.iter().sum::<usize>() > 0);
        let t = TypeVector::new(c).unwrap();
        prop_assert!(ln_nu_ratio(&t) <= ln_nu_exact(t.alphabet(), t.n()) + 1e-9);
    }
}
