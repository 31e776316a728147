use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twwc::channel::{axis::*, *};
use twwc::measures::*;

fn random_pmf(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-12).ln()).collect();
    let t: f64 = v.iter().sum();
    v.into_iter().map(|x| x / t).collect()
}

fn random_tensor(rng: &mut impl Rng, sizes: [usize; 5]) -> ChannelTensor {
    let slice = sizes[2] * sizes[3] * sizes[4];
    let probs: Vec<f64> = (0..sizes[0] * sizes[1]).flat_map(|_| random_pmf(rng, slice)).collect();
    ChannelTensor::new(sizes, probs).unwrap()
}

fn random_additive(rng: &mut impl Rng, q: u64) -> AdditiveChannelSpec {
    let mut c = || rng.random_range(1..q);
    let coeffs = AdditiveCoeffs { a1: c(), b1: c(), a2: c(), b2: c(), a3: c(), b3: c() };
    let noise = [0, 1, 2].map(|_| Pmf::new(random_pmf(rng, q as usize)).unwrap());
    AdditiveChannelSpec::new(q, coeffs, noise).unwrap()
}

#[test]
fn identity_processing_reindexes_channel() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = random_tensor(&mut rng, [2, 3, 2, 2, 3]);
    let p1 = Pmf::new(random_pmf(&mut rng, 2)).unwrap();
    let p2 = Pmf::new(random_pmf(&mut rng, 3)).unwrap();
    let j = compose_effective(&t, &JointInputLaw::identity(p1.clone(), p2.clone())).unwrap();
    let m = j.marginal(&[X1, X2, Y1, Y2, Z]);
    let mut k = 0;
    for x1 in 0..2 {
        for x2 in 0..3 {
            for y1 in 0..2 {
                for y2 in 0..2 {
                    for z in 0..3 {
                        let expect = p1.probs()[x1] * p2.probs()[x2] * t.get(x1, x2, y1, y2, z);
                        assert_abs_diff_eq!(m.probs()[k], expect, epsilon = 1e-15);
                        k += 1;
                    }
                }
            }
        }
    }
    let vx = j.marginal(&[V1, X1]);
    assert_abs_diff_eq!(vx.probs()[1], 0.0);
}

#[test]
fn deterministic_channel_uniform_on_graph() {
    let t = ChannelTensor::from_fn([2, 2, 2, 2, 2], |x1, x2, y1, y2, z| {
        ((y1 == x2) && (y2 == x1) && (z == (x1 ^ x2))) as u8 as f64
    })
    .unwrap();
    let j = compose_effective(&t, &JointInputLaw::identity(Pmf::uniform(2), Pmf::uniform(2))).unwrap();
    let nonzero: Vec<f64> = j.probs().iter().cloned().filter(|&p| p > 0.0).collect();
    assert_eq!(nonzero.len(), 4);
    assert!(nonzero.iter().all(|&p| (p - 0.25).abs() < 1e-15));
}

#[test]
fn marginal_z_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let t = random_tensor(&mut rng, [2, 2, 2, 2, 2]);
    let pv1 = Pmf::new(random_pmf(&mut rng, 2)).unwrap();
    let pv2 = Pmf::new(random_pmf(&mut rng, 2)).unwrap();
    let k1 = CondPmf::new(vec![random_pmf(&mut rng, 2), random_pmf(&mut rng, 2)]).unwrap();
    let k2 = CondPmf::new(vec![random_pmf(&mut rng, 2), random_pmf(&mut rng, 2)]).unwrap();
    let law = JointInputLaw::new(pv1.clone(), k1.clone(), pv2.clone(), k2.clone()).unwrap();
    let pz = compose_effective(&t, &law).unwrap().pmf(&[Z]);
    for z in 0..2 {
        let mut direct = 0.0;
        for v1 in 0..2 {
            for v2 in 0..2 {
                for x1 in 0..2 {
                    for x2 in 0..2 {
                        for y1 in 0..2 {
                            for y2 in 0..2 {
                                direct += pv1.probs()[v1]
                                    * pv2.probs()[v2]
                                    * k1.get(v1, x1)
                                    * k2.get(v2, x2)
                                    * t.get(x1, x2, y1, y2, z);
                            }
                        }
                    }
                }
            }
        }
        assert_abs_diff_eq!(pz.probs()[z], direct, epsilon = 1e-15);
    }
}

#[test]
fn additive_q3_matches_hand_convolution() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec = random_additive(&mut rng, 3);
    let t = additive_to_tensor(&spec).unwrap();
    let c = spec.coeffs;
    for x1 in 0..3u64 {
        for x2 in 0..3u64 {
            for y1 in 0..3u64 {
                for y2 in 0..3u64 {
                    for z in 0..3u64 {
                        // find the noise values that reproduce each output
                        let n1 = (0..3).find(|n| (c.a1 * x1 + c.b1 * x2 + n) % 3 == y1).unwrap();
                        let n2 = (0..3).find(|n| (c.a2 * x1 + c.b2 * x2 + n) % 3 == y2).unwrap();
                        let n3 = (0..3).find(|n| (c.a3 * x1 + c.b3 * x2 + n) % 3 == z).unwrap();
                        let expect = spec.noise[0].probs()[n1 as usize]
                            * spec.noise[1].probs()[n2 as usize]
                            * spec.noise[2].probs()[n3 as usize];
                        let got = t.get(x1 as usize, x2 as usize, y1 as usize, y2 as usize, z as usize);
                        assert_abs_diff_eq!(got, expect, epsilon = 1e-15);
                    }
                }
            }
        }
    }
}

#[test]
fn uniform_noise3_decouples_eavesdropper() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut spec = random_additive(&mut rng, 5);
    spec.noise[2] = Pmf::uniform(5);
    let t = additive_to_tensor(&spec).unwrap();
    let cz = t.channel_z();
    for r in 0..25 {
        for z in 0..5 {
            assert_abs_diff_eq!(cz.get(r, z), 0.2, epsilon = 1e-15);
        }
    }
}

fn shannon_terms(t: &ChannelTensor, law: &JointInputLaw) -> [f64; 4] {
    let j = compose_effective(t, law).unwrap();
    let a = conditional_mutual_information(&j.cond_pmf(&[Y2], &[X1, X2]), &j.joint_pmf(&[X1], &[X2])).unwrap();
    let b = conditional_mutual_information(&j.cond_pmf(&[Y1], &[X2, X1]), &j.joint_pmf(&[X2], &[X1])).unwrap();
    let z1 = mutual_information(&j.joint_pmf(&[Z], &[X1]));
    let z12 = mutual_information(&j.joint_pmf(&[Z], &[X1, X2]));
    [a, b, z1, z12]
}

#[test]
fn additive_identities_for_uniform_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for q in [2u64, 3, 5] {
        for _ in 0..3 {
            let spec = random_additive(&mut rng, q);
            let t = additive_to_tensor(&spec).unwrap();
            let law = JointInputLaw::identity(Pmf::uniform(q as usize), Pmf::uniform(q as usize));
            let [a, b, z1, z12] = shannon_terms(&t, &law);
            let lq = (q as f64).ln();
            assert_abs_diff_eq!(a, lq - shannon_entropy(&spec.noise[1]), epsilon = 1e-9);
            assert_abs_diff_eq!(b, lq - shannon_entropy(&spec.noise[0]), epsilon = 1e-9);
            assert_abs_diff_eq!(z1, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(z12, lq - shannon_entropy(&spec.noise[2]), epsilon = 1e-9);
        }
    }
}

#[test]
fn affine_relabeling_preserves_information() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let spec = random_additive(&mut rng, 5);
    let t = additive_to_tensor(&spec).unwrap();
    let law = JointInputLaw::identity(Pmf::new(random_pmf(&mut rng, 5)).unwrap(), Pmf::new(random_pmf(&mut rng, 5)).unwrap());
    let base = shannon_terms(&t, &law);
    let f = |v: usize| (3 * v + 2) % 5;
    let relabeled = ChannelTensor::from_fn([5; 5], |x1, x2, y1, y2, z| {
        // outputs relabeled by f: P'(f(y1), f(y2), f(z) | x) = P(y1, y2, z | x)
        let inv = |w: usize| (0..5).find(|&v| f(v) == w).unwrap();
        t.get(x1, x2, inv(y1), inv(y2), inv(z))
    })
    .unwrap();
    let other = shannon_terms(&relabeled, &law);
    for (a, b) in base.iter().zip(&other) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn average_cost_matches_direct_summation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pv1 = Pmf::new(random_pmf(&mut rng, 2)).unwrap();
    let k1 = CondPmf::new(vec![random_pmf(&mut rng, 3), random_pmf(&mut rng, 3)]).unwrap();
    let law = JointInputLaw::new(pv1.clone(), k1.clone(), Pmf::uniform(2), CondPmf::identity(2)).unwrap();
    let g1 = vec![0.3, 1.7, 2.5];
    let cost = CostSpec { g1: g1.clone(), g2: vec![1.0, 3.0], c1: 5.0, c2: 5.0 };
    let (a, b) = average_cost(&law, &cost).unwrap();
    let mut direct = 0.0;
    for v in 0..2 {
        for x in 0..3 {
            direct += pv1.probs()[v] * k1.get(v, x) * g1[x];
        }
    }
    assert_abs_diff_eq!(a, direct, epsilon = 1e-14);
    assert_abs_diff_eq!(b, 2.0, epsilon = 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn composed_joint_sums_to_one(seed in any::<u64>(), nv1 in 1usize..4, nv2 in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_tensor(&mut rng, [2, 3, 2, 2, 2]);
        let law = JointInputLaw::new(
            Pmf::new(random_pmf(&mut rng, nv1)).unwrap(),
            CondPmf::new((0..nv1).map(|_| random_pmf(&mut rng, 2)).collect()).unwrap(),
            Pmf::new(random_pmf(&mut rng, nv2)).unwrap(),
            CondPmf::new((0..nv2).map(|_| random_pmf(&mut rng, 3)).collect()).unwrap(),
        ).unwrap();
        let j = compose_effective(&t, &law).unwrap();
        prop_assert!((j.total() - 1.0).abs() < 1e-9);
    }
}
