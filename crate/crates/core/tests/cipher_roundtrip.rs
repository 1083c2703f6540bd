use pcca::cipher::{border_strip, border_wrap, PRESET_NAMES};
use pcca::keyschedule::{EntropyStream, ReplayStream};
use pcca::{preset, Cipher, KeySeed, ModImage, Schedule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random(rng: &mut impl Rng, h: usize, w: usize, g: u64) -> ModImage {
    ModImage::new(
        (0..h * w).map(|_| rng.gen_range(0..g) as u32).collect(),
        h,
        w,
        g,
    )
    .unwrap()
}

#[test]
fn every_preset_round_trips_on_200_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for name in PRESET_NAMES {
        for trial in 0..200 {
            let g = [4u64, 256, 65536][trial % 3];
            let (h, w) = (rng.gen_range(1..7), rng.gen_range(3..7));
            let rounds = rng.gen_range(1..5);
            let spec = preset(name).unwrap().with_modulus(g).with_rounds(rounds);
            let schedule = if trial % 2 == 0 {
                Schedule::LogisticSine
            } else {
                Schedule::Counter
            };
            let seed = KeySeed::from_u64(rng.gen());
            let material = spec.derive_material(schedule, &seed, h, w).unwrap();
            let cipher = Cipher::new(&spec, &material).unwrap();
            let m = random(&mut rng, h, w, g);
            let c = cipher.encrypt(&m).unwrap();
            assert_eq!(c.dims(), spec.working_dims(h, w));
            assert_eq!(
                cipher.decrypt(&c).unwrap(),
                m,
                "{name} {h}x{w} G={g} N={rounds}"
            );
        }
    }
}

#[test]
fn framed_round_trip_ignores_the_frame() {
    let spec = preset("hua_ma").unwrap();
    let material = spec
        .derive_material(Schedule::Counter, &KeySeed::from_u64(3), 5, 4)
        .unwrap();
    let cipher = Cipher::new(&spec, &material).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let m = random(&mut rng, 5, 4, 256);
    let a = cipher.encrypt(&m).unwrap();
    let b = cipher
        .encrypt_with_frame(&m, &mut ReplayStream::constant(7))
        .unwrap();
    assert_eq!(a.dims(), (7, 6));
    assert_eq!(cipher.decrypt(&a).unwrap(), m);
    assert_eq!(cipher.decrypt(&b).unwrap(), m);
}

#[test]
fn wraps_differ_only_on_the_frame() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let m = random(&mut rng, 4, 5, 256);
    let a = border_wrap(&m, &mut EntropyStream::new()).unwrap();
    let b = border_wrap(&m, &mut ReplayStream::constant(0)).unwrap();
    assert_eq!(a.dims(), (6, 7));
    for r in 0..6 {
        for c in 0..7 {
            let interior = (1..5).contains(&r) && (1..6).contains(&c);
            if interior {
                assert_eq!(a.pixels()[r * 7 + c], b.pixels()[r * 7 + c]);
            }
        }
    }
    assert_eq!(border_strip(&a).unwrap(), m);
    assert_eq!(border_strip(&b).unwrap(), m);
    let three = ModImage::new((1..=9).collect(), 3, 3, 256).unwrap();
    assert_eq!(border_strip(&three).unwrap().pixels(), &[5]);
}

#[test]
fn mod_add_single_round_decrypt_is_unpermuted_difference() {
    let spec = preset("basic").unwrap();
    let material = spec
        .derive_material(Schedule::LogisticSine, &KeySeed::from_u64(11), 3, 3)
        .unwrap();
    let cipher = Cipher::new(&spec, &material).unwrap();
    let rk = &material.rounds()[0];
    let c = ModImage::new(vec![9, 8, 7, 6, 5, 4, 3, 2, 1], 3, 3, 256).unwrap();
    let want = rk
        .permutation
        .invert()
        .apply(&c.mod_sub(&rk.mask).unwrap())
        .unwrap();
    assert_eq!(cipher.decrypt(&c).unwrap(), want);
}
