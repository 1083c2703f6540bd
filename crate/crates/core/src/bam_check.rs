//! Empirical checks of the differential transfer function of a cipher.
//!
//! The Δ-map is probed by paired encryptions, H(Δ) = E(m₀ + Δ) − E(m₀),
//! and tested for bijectivity, modular additivity and modular
//! multiplicability, plus the round-by-round composition identity. Random
//! trials are driven by a recorded seed so every verdict can be replayed.
//!
//! Framed presets are probed on the framed working image with the frame
//! pinned, i.e. on the permutation–substitution network alone.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::ModImage;
use crate::cipher::{Cipher, CipherSpec};
use crate::error::{Error, Result};
use crate::keyschedule::RoundMaterial;

/// Exhaustive bijectivity is limited to G^L ≤ 2^16 differentials.
pub const MAX_EXHAUSTIVE_DIFFERENTIALS: u64 = 1 << 16;

/// Exhaustive pair checks are limited to (G^L)^2 ≤ 2^24 pairs.
pub const MAX_EXHAUSTIVE_PAIRS: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    Sampled { trials: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    /// Sampling found no collision; this is not a proof of bijectivity.
    NoCollisionFound,
}

/// Inputs that reproduce a failure on their own.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub base: Vec<u32>,
    pub delta_a: Vec<u32>,
    pub delta_b: Option<Vec<u32>>,
    pub lambda: Option<u64>,
    pub expected: Vec<u32>,
    pub actual: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub preset: String,
    pub outcome: Outcome,
    pub cases: u64,
    pub mode: String,
    pub rng_seed: Option<u64>,
    pub counterexample: Option<Counterexample>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }
}

fn mode_label(mode: CheckMode) -> (String, Option<u64>) {
    match mode {
        CheckMode::Exhaustive => ("exhaustive".into(), None),
        CheckMode::Sampled { trials, seed } => (format!("sampled:{trials}"), Some(seed)),
    }
}

fn random_image(rng: &mut impl Rng, dims: (usize, usize), g: u64) -> ModImage {
    let pixels = (0..dims.0 * dims.1)
        .map(|_| rng.gen_range(0..g) as u32)
        .collect();
    ModImage::from_parts(pixels, dims.0, dims.1, g)
}

/// Paired-encryption probe on a fixed key.
#[derive(Clone, Debug)]
pub struct DtfProbe {
    cipher: Cipher,
    bases: Vec<ModImage>,
    base_images: Vec<ModImage>,
}

impl DtfProbe {
    /// Probes the network of `spec` (frame pinned) with `base_count ≥ 2`
    /// random bases drawn from `seed`.
    pub fn new(
        spec: &CipherSpec,
        material: &RoundMaterial,
        base_count: usize,
        seed: u64,
    ) -> Result<Self> {
        let cipher = Cipher::new(&spec.network_only(), material)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = cipher.ciphertext_dims();
        let bases = (0..base_count)
            .map(|_| random_image(&mut rng, dims, spec.modulus))
            .collect();
        Self::with_bases(cipher, bases)
    }

    pub fn with_bases(cipher: Cipher, bases: Vec<ModImage>) -> Result<Self> {
        if bases.len() < 2 {
            return Err(Error::Domain("a probe needs at least two bases".into()));
        }
        let base_images = bases
            .iter()
            .map(|b| cipher.network_encrypt(b))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cipher,
            bases,
            base_images,
        })
    }

    pub fn cipher(&self) -> &Cipher {
        &self.cipher
    }

    pub fn bases(&self) -> &[ModImage] {
        &self.bases
    }

    pub fn dims(&self) -> (usize, usize) {
        self.cipher.ciphertext_dims()
    }

    pub fn modulus(&self) -> u64 {
        self.cipher.modulus()
    }

    /// E(base + Δ) − E(base) for the base with the given index.
    pub fn delta_at(&self, base: usize, delta: &ModImage) -> Result<ModImage> {
        let shifted = self.bases[base].mod_add(delta)?;
        self.cipher
            .network_encrypt(&shifted)?
            .mod_sub(&self.base_images[base])
    }

    /// The common Δc over all bases; an error if any two disagree.
    pub fn eval_dtf(&self, delta: &ModImage) -> Result<ModImage> {
        let first = self.delta_at(0, delta)?;
        for b in 1..self.bases.len() {
            if self.delta_at(b, delta)? != first {
                return Err(Error::NotADtf(format!(
                    "Δ-map of {} at {:?} depends on the base plaintext",
                    self.cipher.spec().name,
                    delta.pixels()
                )));
            }
        }
        Ok(first)
    }

    fn space_size(&self) -> u64 {
        let (h, w) = self.dims();
        let len = (h * w) as u32;
        self.modulus().checked_pow(len).unwrap_or(u64::MAX)
    }

    fn nth_delta(&self, mut index: u64) -> ModImage {
        let (h, w) = self.dims();
        let g = self.modulus();
        let pixels = (0..h * w)
            .map(|_| {
                let p = (index % g) as u32;
                index /= g;
                p
            })
            .collect();
        ModImage::from_parts(pixels, h, w, g)
    }

    fn index_of(&self, delta: &ModImage) -> u64 {
        let g = self.modulus();
        delta
            .pixels()
            .iter()
            .rev()
            .fold(0, |acc, &p| acc * g + u64::from(p))
    }

    /// H(Δ) for every Δ, per base, indexed by base-G digits.
    fn table(&self, base: usize) -> Result<Vec<ModImage>> {
        (0..self.space_size())
            .map(|i| self.delta_at(base, &self.nth_delta(i)))
            .collect()
    }
}

fn cx(
    probe: &DtfProbe,
    base: usize,
    a: &ModImage,
    b: Option<&ModImage>,
    lambda: Option<u64>,
    expected: &ModImage,
    actual: &ModImage,
) -> Counterexample {
    Counterexample {
        base: probe.bases[base].pixels().to_vec(),
        delta_a: a.pixels().to_vec(),
        delta_b: b.map(|d| d.pixels().to_vec()),
        lambda,
        expected: expected.pixels().to_vec(),
        actual: actual.pixels().to_vec(),
    }
}

fn verdict(
    check: &str,
    probe: &DtfProbe,
    mode: CheckMode,
    cases: u64,
    counterexample: Option<Counterexample>,
) -> Verdict {
    let (mode, rng_seed) = mode_label(mode);
    Verdict {
        check: check.into(),
        preset: probe.cipher.spec().name.clone(),
        outcome: if counterexample.is_some() {
            Outcome::Fail
        } else {
            Outcome::Pass
        },
        cases,
        mode,
        rng_seed,
        counterexample,
    }
}

fn require_pairs_fit(probe: &DtfProbe) -> Result<()> {
    let n = probe.space_size();
    if n.saturating_mul(n) > MAX_EXHAUSTIVE_PAIRS {
        return Err(Error::Scale(format!(
            "{n} differentials is too many for exhaustive pair checks"
        )));
    }
    Ok(())
}

/// H(Δ₁ + Δ₂) = H(Δ₁) + H(Δ₂), on every base.
pub fn check_additivity(probe: &DtfProbe, mode: CheckMode) -> Result<Verdict> {
    let mut cases = 0u64;
    match mode {
        CheckMode::Exhaustive => {
            require_pairs_fit(probe)?;
            let n = probe.space_size();
            for base in 0..probe.bases.len() {
                let table = probe.table(base)?;
                for i in 0..n {
                    let a = probe.nth_delta(i);
                    for j in 0..n {
                        let b = probe.nth_delta(j);
                        let sum = a.mod_add(&b)?;
                        let lhs = &table[probe.index_of(&sum) as usize];
                        let rhs = table[i as usize].mod_add(&table[j as usize])?;
                        cases += 1;
                        if *lhs != rhs {
                            let c = cx(probe, base, &a, Some(&b), None, &rhs, lhs);
                            return Ok(verdict("additivity", probe, mode, cases, Some(c)));
                        }
                    }
                }
            }
        }
        CheckMode::Sampled { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (dims, g) = (probe.dims(), probe.modulus());
            for _ in 0..trials {
                let a = random_image(&mut rng, dims, g);
                let b = random_image(&mut rng, dims, g);
                for base in 0..probe.bases.len() {
                    let lhs = probe.delta_at(base, &a.mod_add(&b)?)?;
                    let rhs = probe
                        .delta_at(base, &a)?
                        .mod_add(&probe.delta_at(base, &b)?)?;
                    cases += 1;
                    if lhs != rhs {
                        let c = cx(probe, base, &a, Some(&b), None, &rhs, &lhs);
                        return Ok(verdict("additivity", probe, mode, cases, Some(c)));
                    }
                }
            }
        }
    }
    Ok(verdict("additivity", probe, mode, cases, None))
}

/// H(λ ×̇ Δ) = λ ×̇ H(Δ), on every base.
pub fn check_multiplicability(probe: &DtfProbe, mode: CheckMode) -> Result<Verdict> {
    let g = probe.modulus();
    let mut cases = 0u64;
    match mode {
        CheckMode::Exhaustive => {
            let n = probe.space_size();
            if n.saturating_mul(g) > MAX_EXHAUSTIVE_PAIRS {
                return Err(Error::Scale(format!(
                    "{n} differentials x {g} scalars is too many for an exhaustive check"
                )));
            }
            for base in 0..probe.bases.len() {
                let table = probe.table(base)?;
                for i in 0..n {
                    let a = probe.nth_delta(i);
                    for lambda in 0..g {
                        let lhs = &table[probe.index_of(&a.scalar_mul(lambda)?) as usize];
                        let rhs = table[i as usize].scalar_mul(lambda)?;
                        cases += 1;
                        if *lhs != rhs {
                            let c = cx(probe, base, &a, None, Some(lambda), &rhs, lhs);
                            return Ok(verdict("multiplicability", probe, mode, cases, Some(c)));
                        }
                    }
                }
            }
        }
        CheckMode::Sampled { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let dims = probe.dims();
            for _ in 0..trials {
                let a = random_image(&mut rng, dims, g);
                let lambda = rng.gen_range(0..g);
                for base in 0..probe.bases.len() {
                    let lhs = probe.delta_at(base, &a.scalar_mul(lambda)?)?;
                    let rhs = probe.delta_at(base, &a)?.scalar_mul(lambda)?;
                    cases += 1;
                    if lhs != rhs {
                        let c = cx(probe, base, &a, None, Some(lambda), &rhs, &lhs);
                        return Ok(verdict("multiplicability", probe, mode, cases, Some(c)));
                    }
                }
            }
        }
    }
    Ok(verdict("multiplicability", probe, mode, cases, None))
}

/// Enumerates every differential and counts distinct images.
pub fn check_bijectivity(probe: &DtfProbe) -> Result<Verdict> {
    let n = probe.space_size();
    if n > MAX_EXHAUSTIVE_DIFFERENTIALS {
        return Err(Error::Scale(format!(
            "bijectivity is only checked exhaustively; G^L = {n} exceeds {MAX_EXHAUSTIVE_DIFFERENTIALS}"
        )));
    }
    let mut seen: HashSet<Vec<u32>> = HashSet::with_capacity(n as usize);
    let mut first_of = std::collections::HashMap::with_capacity(n as usize);
    for i in 0..n {
        let d = probe.nth_delta(i);
        let img = probe.delta_at(0, &d)?;
        if !seen.insert(img.pixels().to_vec()) {
            let other: u64 = first_of[img.pixels()];
            let c = cx(
                probe,
                0,
                &d,
                Some(&probe.nth_delta(other)),
                None,
                &img,
                &img,
            );
            return Ok(verdict(
                "bijectivity",
                probe,
                CheckMode::Exhaustive,
                i + 1,
                Some(c),
            ));
        }
        first_of.insert(img.into_pixels(), i);
    }
    Ok(verdict(
        "bijectivity",
        probe,
        CheckMode::Exhaustive,
        n,
        None,
    ))
}

/// Sampled injectivity for instances too large to enumerate. Never reports
/// a pass, only "no collision found" or a concrete collision.
pub fn sample_injectivity(probe: &DtfProbe, trials: usize, seed: u64) -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (dims, g) = (probe.dims(), probe.modulus());
    let mut seen = std::collections::HashMap::with_capacity(trials);
    let mode = CheckMode::Sampled { trials, seed };
    for t in 0..trials {
        let d = random_image(&mut rng, dims, g);
        let img = probe.delta_at(0, &d)?;
        match seen.get(img.pixels()) {
            Some(prev) if prev != &d => {
                let c = cx(probe, 0, &d, Some(prev), None, &img, &img);
                return Ok(verdict("injectivity", probe, mode, t as u64 + 1, Some(c)));
            }
            _ => {
                seen.insert(img.into_pixels(), d);
            }
        }
    }
    let mut v = verdict("injectivity", probe, mode, trials as u64, None);
    v.outcome = Outcome::NoCollisionFound;
    Ok(v)
}

/// Whole-network Δ-map equals the composition of per-round Δ-maps.
pub fn check_cdtf_composition(
    spec: &CipherSpec,
    material: &RoundMaterial,
    mode: CheckMode,
) -> Result<Verdict> {
    let probe = DtfProbe::new(spec, material, 2, 0x5eed)?;
    let cipher = probe.cipher();
    let rounds = cipher.rounds();
    let round_delta = |r: usize, base: &ModImage, d: &ModImage| -> Result<ModImage> {
        cipher
            .encrypt_round(r, &base.mod_add(d)?)?
            .mod_sub(&cipher.encrypt_round(r, base)?)
    };
    let composed = |base: &ModImage, d: &ModImage| -> Result<ModImage> {
        (0..rounds).try_fold(d.clone(), |acc, r| round_delta(r, base, &acc))
    };

    let deltas: Vec<ModImage> = match mode {
        CheckMode::Exhaustive => {
            let n = probe.space_size();
            if n > MAX_EXHAUSTIVE_DIFFERENTIALS {
                return Err(Error::Scale(format!("{n} differentials is too many")));
            }
            (0..n).map(|i| probe.nth_delta(i)).collect()
        }
        CheckMode::Sampled { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..trials)
                .map(|_| random_image(&mut rng, probe.dims(), probe.modulus()))
                .collect()
        }
    };

    let mut cases = 0u64;
    for d in &deltas {
        for (b, base) in probe.bases().iter().enumerate() {
            let whole = probe.delta_at(b, d)?;
            let chained = composed(base, d)?;
            cases += 1;
            if whole != chained {
                let c = cx(&probe, b, d, None, None, &chained, &whole);
                return Ok(verdict("cdtf-composition", &probe, mode, cases, Some(c)));
            }
        }
    }
    Ok(verdict("cdtf-composition", &probe, mode, cases, None))
}

/// All four checks. Bijectivity falls back to sampled injectivity when the
/// instance is too large to enumerate.
pub fn bam_suite(
    spec: &CipherSpec,
    material: &RoundMaterial,
    mode: CheckMode,
) -> Result<Vec<Verdict>> {
    let seed = match mode {
        CheckMode::Exhaustive => 0x5eed,
        CheckMode::Sampled { seed, .. } => seed,
    };
    let probe = DtfProbe::new(spec, material, 2, seed)?;
    let injective = match check_bijectivity(&probe) {
        Err(Error::Scale(_)) => {
            let trials = match mode {
                CheckMode::Sampled { trials, .. } => trials,
                CheckMode::Exhaustive => 1000,
            };
            sample_injectivity(&probe, trials, seed)?
        }
        other => other?,
    };
    Ok(vec![
        injective,
        check_additivity(&probe, mode)?,
        check_multiplicability(&probe, mode)?,
        check_cdtf_composition(spec, material, mode)?,
    ])
}
