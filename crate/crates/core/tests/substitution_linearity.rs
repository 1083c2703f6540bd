use pcca::substitution::{
    differential_map, fibonacci_closed_form, sub_decrypt, sub_encrypt, FilterKernel,
    SubstitutionVariant,
};
use pcca::ModImage;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn modular_variants() -> Vec<SubstitutionVariant> {
    vec![
        SubstitutionVariant::ModAdd,
        SubstitutionVariant::ModSub,
        SubstitutionVariant::ModAddChain1,
        SubstitutionVariant::ModAddChain2,
        SubstitutionVariant::Filtering(FilterKernel::default()),
        SubstitutionVariant::Filtering(FilterKernel::new(&[(0, 1), (-1, 3), (-4, 7)]).unwrap()),
    ]
}

fn random(rng: &mut impl Rng, len: usize, g: u64) -> ModImage {
    ModImage::from_row((0..len).map(|_| rng.gen_range(0..g) as u32).collect(), g).unwrap()
}

fn nth(mut i: u64, len: usize, g: u64) -> ModImage {
    let p = (0..len)
        .map(|_| {
            let v = (i % g) as u32;
            i /= g;
            v
        })
        .collect();
    ModImage::from_row(p, g).unwrap()
}

#[test]
fn differential_linearity_exhaustive_l3_g4() {
    for v in modular_variants() {
        for ki in 0..64 {
            let k = nth(ki, 3, 4);
            for a in 0..64 {
                let m1 = nth(a, 3, 4);
                let c1 = sub_encrypt(&v, &m1, &k).unwrap();
                for b in 0..64 {
                    let m2 = nth(b, 3, 4);
                    let c2 = sub_encrypt(&v, &m2, &k).unwrap();
                    let dm = m1.mod_sub(&m2).unwrap();
                    assert_eq!(
                        c1.mod_sub(&c2).unwrap(),
                        differential_map(&v, &dm).unwrap(),
                        "{} k={k:?} m1={m1:?} m2={m2:?}",
                        v.name()
                    );
                }
            }
        }
    }
}

#[test]
fn differential_linearity_sampled_g256() {
    let mut rng = ChaCha8Rng::seed_from_u64(256);
    for v in modular_variants() {
        for _ in 0..1000 {
            let len = rng.gen_range(3..40);
            let (m1, m2) = (random(&mut rng, len, 256), random(&mut rng, len, 256));
            let (k1, k2) = (random(&mut rng, len, 256), random(&mut rng, len, 256));
            let dm = m1.mod_sub(&m2).unwrap();
            let want = differential_map(&v, &dm).unwrap();
            for k in [&k1, &k2] {
                let dc = sub_encrypt(&v, &m1, k)
                    .unwrap()
                    .mod_sub(&sub_encrypt(&v, &m2, k).unwrap())
                    .unwrap();
                assert_eq!(dc, want, "{}", v.name());
            }
        }
    }
}

#[test]
fn differential_map_is_scalar_equivariant_exhaustively() {
    for v in modular_variants() {
        for i in 0..64 {
            let dm = nth(i, 3, 4);
            let dc = differential_map(&v, &dm).unwrap();
            for lambda in 0..4 {
                assert_eq!(
                    differential_map(&v, &dm.scalar_mul(lambda).unwrap()).unwrap(),
                    dc.scalar_mul(lambda).unwrap()
                );
            }
        }
    }
}

#[test]
fn mod_sub_differential_is_negation() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let dm = random(&mut rng, 9, 256);
        let zeros = ModImage::zeros(1, 9, 256).unwrap();
        assert_eq!(
            differential_map(&SubstitutionVariant::ModSub, &dm).unwrap(),
            zeros.mod_sub(&dm).unwrap()
        );
    }
}

#[test]
fn xor_breaks_additivity_within_100_trials() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let v = SubstitutionVariant::XorControl;
    let found = (0..100).find(|_| {
        let k = random(&mut rng, 8, 256);
        let (m1, m2, m3) = (
            random(&mut rng, 8, 256),
            random(&mut rng, 8, 256),
            random(&mut rng, 8, 256),
        );
        // same plaintext differential, different bases: a linear map would agree
        let d = m1.mod_sub(&m2).unwrap();
        let m4 = m3.mod_sub(&d).unwrap();
        let e = |m: &ModImage| sub_encrypt(&v, m, &k).unwrap();
        e(&m1).mod_sub(&e(&m2)).unwrap() != e(&m3).mod_sub(&e(&m4)).unwrap()
    });
    assert!(found.is_some());
    assert!(differential_map(&v, &ModImage::zeros(1, 3, 256).unwrap()).is_err());
}

#[test]
fn chain2_closed_form_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let v = SubstitutionVariant::ModAddChain2;
    for _ in 0..200 {
        let (m, k) = (random(&mut rng, 9, 256), random(&mut rng, 9, 256));
        assert_eq!(
            fibonacci_closed_form(&m, &k).unwrap(),
            sub_encrypt(&v, &m, &k).unwrap()
        );
    }
}

fn variant_strategy() -> impl Strategy<Value = SubstitutionVariant> {
    prop::sample::select(vec![
        SubstitutionVariant::ModAdd,
        SubstitutionVariant::ModSub,
        SubstitutionVariant::ModAddChain1,
        SubstitutionVariant::ModAddChain2,
        SubstitutionVariant::Filtering(FilterKernel::default()),
        SubstitutionVariant::XorControl,
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]
    #[test]
    fn substitution_round_trips(
        v in variant_strategy(),
        g in prop::sample::select(vec![4u64, 256, 65536]),
        len in 3usize..24,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (m, k) = (random(&mut rng, len, g), random(&mut rng, len, g));
        let c = sub_encrypt(&v, &m, &k).unwrap();
        prop_assert_eq!(sub_decrypt(&v, &c, &k).unwrap(), m);
    }
}
