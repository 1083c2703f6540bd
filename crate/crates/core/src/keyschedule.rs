//! Deterministic round-material generation.
//!
//! Two generators are provided: a logistic-sine chaotic stream and a
//! ChaCha20 counter stream. The attack never looks at either; they only
//! have to produce permutations and masks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::algebra::{check_modulus, ModImage};
use crate::error::{Error, Result};
use crate::permutation::PermutationVector;

/// Iterations discarded before the chaotic stream emits anything.
pub const LOGISTIC_SINE_BURN_IN: usize = 1000;

/// A source of uniform-ish integer draws.
pub trait KeyStream {
    /// Next draw in `[0, bound)`. `bound` must be ≥ 1.
    fn next_below(&mut self, bound: u64) -> Result<u64>;

    /// Number of draws handed out so far.
    fn draws(&self) -> u64;

    fn next_residue(&mut self, modulus: u64) -> Result<u32> {
        self.next_below(modulus).map(|v| v as u32)
    }
}

impl<S: KeyStream + ?Sized> KeyStream for Box<S> {
    fn next_below(&mut self, bound: u64) -> Result<u64> {
        (**self).next_below(bound)
    }

    fn draws(&self) -> u64 {
        (**self).draws()
    }
}

impl<S: KeyStream + ?Sized> KeyStream for &mut S {
    fn next_below(&mut self, bound: u64) -> Result<u64> {
        (**self).next_below(bound)
    }

    fn draws(&self) -> u64 {
        (**self).draws()
    }
}

/// Opaque key bytes. Never empty.
#[derive(Clone, PartialEq, Eq)]
pub struct KeySeed(Vec<u8>);

impl KeySeed {
    pub fn new(bytes: impl Into<Vec<u8>>) -> Result<Self> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(Error::Seed("seed must not be empty".into()));
        }
        Ok(Self(bytes))
    }

    /// Parses a lowercase hex string.
    pub fn from_hex(text: &str) -> Result<Self> {
        if text.chars().any(|c| c.is_ascii_uppercase()) {
            return Err(Error::Seed("seed hex must be lowercase".into()));
        }
        let bytes = hex::decode(text).map_err(|e| Error::Seed(format!("bad seed hex: {e}")))?;
        Self::new(bytes)
    }

    pub fn from_u64(value: u64) -> Self {
        Self(value.to_le_bytes().to_vec())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(&self.0).into()
    }

    /// Short fingerprint for reports; does not reveal the seed.
    pub fn fingerprint(&self) -> String {
        hex::encode(&self.digest()[..8])
    }
}

impl std::fmt::Debug for KeySeed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KeySeed({})", self.fingerprint())
    }
}

fn unit_from_bytes(bytes: &[u8]) -> f64 {
    let mut word = [0u8; 8];
    word.copy_from_slice(&bytes[..8]);
    (u64::from_le_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

/// x ← (r·x·(1−x) + (4−r)·sin(πx)/4) mod 1, quantised by floor(x·bound).
#[derive(Clone, Debug)]
pub struct LogisticSineStream {
    x: f64,
    r: f64,
    draws: u64,
}

impl LogisticSineStream {
    pub fn new(x0: f64, r: f64) -> Result<Self> {
        if !(x0 > 0.0 && x0 < 1.0) {
            return Err(Error::Seed(format!("initial condition {x0} not in (0, 1)")));
        }
        if !(r > 0.0 && r <= 4.0) {
            return Err(Error::Seed(format!("control parameter {r} not in (0, 4]")));
        }
        let mut stream = Self { x: x0, r, draws: 0 };
        for _ in 0..LOGISTIC_SINE_BURN_IN {
            stream.step();
        }
        Ok(stream)
    }

    /// x₀ from the first 8 digest bytes, r from the next 8.
    pub fn from_seed(seed: &KeySeed) -> Result<Self> {
        let d = seed.digest();
        let x0 = unit_from_bytes(&d[..8]);
        let r = 4.0 * (1.0 - unit_from_bytes(&d[8..16]));
        Self::new(x0, r)
    }

    fn step(&mut self) {
        let x = self.x;
        let next = self.r * x * (1.0 - x) + (4.0 - self.r) * (PI * x).sin() / 4.0;
        self.x = next.rem_euclid(1.0);
    }
}

impl KeyStream for LogisticSineStream {
    fn next_below(&mut self, bound: u64) -> Result<u64> {
        if bound == 0 {
            return Err(Error::Domain("draw bound must be positive".into()));
        }
        self.step();
        self.draws += 1;
        Ok(((self.x * bound as f64) as u64).min(bound - 1))
    }

    fn draws(&self) -> u64 {
        self.draws
    }
}

/// ChaCha20 keyed by SHA-256 of the seed.
#[derive(Clone, Debug)]
pub struct CounterStream {
    rng: ChaCha20Rng,
    draws: u64,
}

impl CounterStream {
    pub fn from_seed(seed: &KeySeed) -> Self {
        Self {
            rng: ChaCha20Rng::from_seed(seed.digest()),
            draws: 0,
        }
    }
}

impl KeyStream for CounterStream {
    fn next_below(&mut self, bound: u64) -> Result<u64> {
        if bound == 0 {
            return Err(Error::Domain("draw bound must be positive".into()));
        }
        self.draws += 1;
        Ok(self.rng.gen_range(0..bound))
    }

    fn draws(&self) -> u64 {
        self.draws
    }
}

/// Replays recorded values (reduced mod the requested bound).
#[derive(Clone, Debug)]
pub struct ReplayStream {
    values: Vec<u64>,
    pos: usize,
    repeat: bool,
    draws: u64,
}

impl ReplayStream {
    /// Fails with a generation error once `values` is used up.
    pub fn finite(values: Vec<u64>) -> Self {
        Self {
            values,
            pos: 0,
            repeat: false,
            draws: 0,
        }
    }

    /// Cycles through `values` forever.
    pub fn repeating(values: Vec<u64>) -> Self {
        assert!(
            !values.is_empty(),
            "repeating stream needs at least one value"
        );
        Self {
            values,
            pos: 0,
            repeat: true,
            draws: 0,
        }
    }

    pub fn constant(value: u64) -> Self {
        Self::repeating(vec![value])
    }
}

impl KeyStream for ReplayStream {
    fn next_below(&mut self, bound: u64) -> Result<u64> {
        if bound == 0 {
            return Err(Error::Domain("draw bound must be positive".into()));
        }
        if self.pos == self.values.len() {
            if !self.repeat {
                return Err(Error::Generation(format!(
                    "key stream exhausted after {} draws",
                    self.draws
                )));
            }
            self.pos = 0;
        }
        let v = self.values[self.pos];
        self.pos += 1;
        self.draws += 1;
        Ok(v % bound)
    }

    fn draws(&self) -> u64 {
        self.draws
    }
}

/// Fresh OS-seeded randomness, independent of any key.
#[derive(Debug)]
pub struct EntropyStream {
    rng: rand::rngs::ThreadRng,
    draws: u64,
}

impl EntropyStream {
    pub fn new() -> Self {
        Self {
            rng: rand::thread_rng(),
            draws: 0,
        }
    }
}

impl Default for EntropyStream {
    fn default() -> Self {
        Self::new()
    }
}

impl KeyStream for EntropyStream {
    fn next_below(&mut self, bound: u64) -> Result<u64> {
        if bound == 0 {
            return Err(Error::Domain("draw bound must be positive".into()));
        }
        self.draws += 1;
        Ok(self.rng.gen_range(0..bound))
    }

    fn draws(&self) -> u64 {
        self.draws
    }
}

/// Which generator expands a seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Schedule {
    #[default]
    LogisticSine,
    Counter,
}

impl Schedule {
    pub fn stream(self, seed: &KeySeed) -> Result<Box<dyn KeyStream + Send>> {
        Ok(match self {
            Schedule::LogisticSine => Box::new(LogisticSineStream::from_seed(seed)?),
            Schedule::Counter => Box::new(CounterStream::from_seed(seed)),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Schedule::LogisticSine => "logistic-sine",
            Schedule::Counter => "counter",
        }
    }
}

impl std::str::FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic-sine" | "logistic_sine" => Ok(Schedule::LogisticSine),
            "counter" => Ok(Schedule::Counter),
            other => Err(Error::Domain(format!("unknown schedule `{other}`"))),
        }
    }
}

/// Permutation W and mask K for one round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundKey {
    pub permutation: PermutationVector,
    pub mask: ModImage,
}

/// Per-round (W, K) pairs, all sized to one working image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundMaterial {
    rounds: Vec<RoundKey>,
}

impl RoundMaterial {
    pub fn new(rounds: Vec<RoundKey>) -> Result<Self> {
        let first = rounds
            .first()
            .ok_or_else(|| Error::Config("round material needs at least one round".into()))?;
        let dims = first.mask.dims();
        let g = first.mask.modulus();
        for (i, rk) in rounds.iter().enumerate() {
            if rk.mask.dims() != dims
                || rk.mask.modulus() != g
                || rk.permutation.len() != rk.mask.len()
            {
                return Err(Error::Config(format!(
                    "round {i} material is inconsistently sized"
                )));
            }
        }
        Ok(Self { rounds })
    }

    /// Draws N rounds from one stream: a Fisher–Yates permutation (L draws)
    /// then L mask residues per round.
    pub fn derive(
        stream: &mut dyn KeyStream,
        rounds: usize,
        height: usize,
        width: usize,
        modulus: u64,
    ) -> Result<Self> {
        check_modulus(modulus)?;
        if rounds == 0 {
            return Err(Error::Domain("at least one round is required".into()));
        }
        let len = height * width;
        if len < 2 {
            return Err(Error::Domain(format!(
                "round material needs at least 2 pixels, got {height}x{width}"
            )));
        }
        let mut out = Vec::with_capacity(rounds);
        for _ in 0..rounds {
            let permutation = PermutationVector::from_stream(stream, len)?;
            let mask = (0..len)
                .map(|_| stream.next_residue(modulus))
                .collect::<Result<Vec<_>>>()?;
            out.push(RoundKey {
                permutation,
                mask: ModImage::new(mask, height, width, modulus)?,
            });
        }
        Ok(Self { rounds: out })
    }

    pub fn rounds(&self) -> &[RoundKey] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.rounds[0].mask.dims()
    }

    pub fn modulus(&self) -> u64 {
        self.rounds[0].mask.modulus()
    }
}
