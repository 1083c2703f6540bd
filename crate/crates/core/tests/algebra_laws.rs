use pcca::algebra::{weighted_modsum, ModImage, SparseDifferential};
use proptest::prelude::*;

fn image(len: usize, g: u64) -> impl Strategy<Value = ModImage> {
    prop::collection::vec(0..=(g - 1) as u32, len)
        .prop_map(move |p| ModImage::from_row(p, g).unwrap())
}

fn triple() -> impl Strategy<Value = (ModImage, ModImage, ModImage)> {
    (
        prop::sample::select(vec![4u64, 256, 65536, 1 << 32]),
        1usize..40,
    )
        .prop_flat_map(|(g, len)| (image(len, g), image(len, g), image(len, g)))
}

proptest! {
    #[test]
    fn add_is_associative_and_commutative((a, b, c) in triple()) {
        prop_assert_eq!(a.mod_add(&b).unwrap().mod_add(&c).unwrap(),
                        a.mod_add(&b.mod_add(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mod_add(&b).unwrap(), b.mod_add(&a).unwrap());
    }

    #[test]
    fn sub_is_add_of_negation((a, b, _) in triple()) {
        let zeros = ModImage::zeros(1, a.len(), a.modulus()).unwrap();
        prop_assert_eq!(a.mod_add(&zeros.mod_sub(&b).unwrap()).unwrap(), a.mod_sub(&b).unwrap());
        prop_assert_eq!(a.mod_sub(&b).unwrap().mod_add(&b).unwrap(), a.clone());
        prop_assert!(a.mod_sub(&a).unwrap().is_zero());
    }

    #[test]
    fn scalar_distributes((a, b, _) in triple(), seed in any::<u64>()) {
        let lambda = seed % a.modulus();
        prop_assert_eq!(
            a.mod_add(&b).unwrap().scalar_mul(lambda).unwrap(),
            a.scalar_mul(lambda).unwrap().mod_add(&b.scalar_mul(lambda).unwrap()).unwrap()
        );
        prop_assert!(a.scalar_mul(0).unwrap().is_zero());
        prop_assert_eq!(a.scalar_mul(1).unwrap(), a.clone());
    }

    #[test]
    fn weighted_modsum_matches_naive(
        g in prop::sample::select(vec![4u64, 256, 65536, 1 << 32]),
        len in 1usize..12,
        n in 1usize..30,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<ModImage> = (0..n)
            .map(|_| ModImage::from_row((0..len).map(|_| rng.gen_range(0..g) as u32).collect(), g).unwrap())
            .collect();
        let weights: Vec<u32> = (0..n).map(|_| rng.gen_range(0..g) as u32).collect();
        let mut naive = vec![0u128; len];
        for (w, t) in weights.iter().zip(&terms) {
            for (acc, &p) in naive.iter_mut().zip(t.pixels()) {
                *acc = (*acc + u128::from(*w) * u128::from(p)) % u128::from(g);
            }
        }
        let got = weighted_modsum(&weights, &terms).unwrap();
        let want: Vec<u32> = naive.iter().map(|&v| v as u32).collect();
        prop_assert_eq!(got.pixels(), &want[..]);

        let sparse: Vec<SparseDifferential> = terms.iter().map(SparseDifferential::from_dense).collect();
        prop_assert_eq!(weighted_modsum(&weights, &sparse).unwrap(), got);
        for (s, d) in sparse.iter().zip(&terms) {
            prop_assert_eq!(&s.to_dense(), d);
        }
    }
}

#[test]
fn scalar_distributes_exhaustively_at_g4() {
    for len in 1..=3u32 {
        let count = 4u32.pow(len);
        let img = |mut i: u32| {
            let p = (0..len)
                .map(|_| {
                    let v = i % 4;
                    i /= 4;
                    v
                })
                .collect();
            ModImage::from_row(p, 4).unwrap()
        };
        for i in 0..count {
            for j in 0..count {
                let (a, b) = (img(i), img(j));
                for lambda in 0..4 {
                    assert_eq!(
                        a.mod_add(&b).unwrap().scalar_mul(lambda).unwrap(),
                        a.scalar_mul(lambda)
                            .unwrap()
                            .mod_add(&b.scalar_mul(lambda).unwrap())
                            .unwrap()
                    );
                }
            }
        }
    }
}

#[test]
fn worked_example_recovery_line() {
    let delta = ModImage::from_row(vec![171, 255, 61, 116, 63, 191, 203, 242, 62], 256).unwrap();
    let base = ModImage::from_row(vec![85, 16, 228, 187, 2, 230, 109, 110, 193], 256).unwrap();
    assert_eq!(
        delta.mod_add(&base).unwrap().pixels(),
        &[0, 15, 33, 47, 65, 165, 56, 96, 255]
    );
}

#[test]
fn one_hot_and_zero_weights() {
    let t = ModImage::from_row(vec![3, 1, 4, 1, 5], 256).unwrap();
    let z = ModImage::zeros(1, 5, 256).unwrap();
    assert_eq!(weighted_modsum(&[1], std::slice::from_ref(&t)).unwrap(), t);
    assert!(weighted_modsum(&[0, 0], &[t.clone(), z]).unwrap().is_zero());
}
