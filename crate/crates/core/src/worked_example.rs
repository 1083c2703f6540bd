//! The 9-pixel, 8-bit worked example: ten recorded oracle answers, the
//! eavesdropped ciphertext, and the values every step must reproduce.

use std::fmt;

use crate::algebra::{weighted_modsum, ModImage};
use crate::attack::{build_atoms, recover};
use crate::error::Result;
use crate::oracle::{DecryptionOracle, FixtureOracle};

pub const MODULUS: u64 = 256;
pub const LEN: usize = 9;

/// Plaintexts returned for C₀ (all zeros) and C₁..C₉ (unit impulses).
pub const ORACLE_ANSWERS: [[u32; LEN]; LEN + 1] = [
    [85, 16, 228, 187, 2, 230, 109, 110, 193],
    [86, 14, 227, 189, 3, 230, 109, 110, 193],
    [85, 17, 226, 186, 4, 231, 109, 110, 193],
    [85, 16, 229, 185, 1, 232, 110, 110, 193],
    [84, 16, 228, 188, 0, 229, 111, 111, 193],
    [82, 15, 228, 187, 3, 228, 108, 112, 194],
    [85, 13, 227, 187, 2, 231, 107, 109, 195],
    [90, 16, 225, 186, 2, 230, 110, 108, 192],
    [86, 19, 227, 186, 2, 230, 109, 111, 191],
    [83, 15, 230, 188, 2, 230, 109, 110, 194],
];

/// Expected differentials ΔM₁..ΔM₉.
pub const EXPECTED_ATOMS: [[u32; LEN]; LEN] = [
    [1, 254, 255, 2, 1, 0, 0, 0, 0],
    [0, 1, 254, 255, 2, 1, 0, 0, 0],
    [0, 0, 1, 254, 255, 2, 1, 0, 0],
    [255, 0, 0, 1, 254, 255, 2, 1, 0],
    [253, 255, 0, 0, 1, 254, 255, 2, 1],
    [0, 253, 255, 0, 0, 1, 254, 255, 2],
    [5, 0, 253, 255, 0, 0, 1, 254, 255],
    [1, 3, 255, 255, 0, 0, 0, 1, 254],
    [254, 255, 2, 1, 0, 0, 0, 0, 1],
];

/// The intercepted ciphertext. Never sent to the oracle.
pub const CIPHERTEXT: [u32; LEN] = [29, 67, 144, 143, 74, 127, 101, 24, 139];

pub const EXPECTED_DELTA: [u32; LEN] = [171, 255, 61, 116, 63, 191, 203, 242, 62];

pub const EXPECTED_PLAINTEXT: [u32; LEN] = [0, 15, 33, 47, 65, 165, 56, 96, 255];

/// Everything the attack computed, plus every disagreement with the expected
/// values.
#[derive(Clone, Debug)]
pub struct Transcript {
    pub queries: Vec<(ModImage, ModImage)>,
    pub base: ModImage,
    pub atoms: Vec<ModImage>,
    pub delta: ModImage,
    pub recovered: ModImage,
    pub oracle_queries: u64,
    pub mismatches: Vec<String>,
}

impl Transcript {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn braces(img: &ModImage) -> String {
    let parts: Vec<String> = img.pixels().iter().map(u32::to_string).collect();
    format!("{{{}}}", parts.join(","))
}

impl fmt::Display for Transcript {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "chosen ciphertexts and oracle answers:")?;
        for (i, (c, m)) in self.queries.iter().enumerate() {
            writeln!(f, "  C{i} = {}  ->  M{i} = {}", braces(c), braces(m))?;
        }
        writeln!(f, "atoms:")?;
        for (i, a) in self.atoms.iter().enumerate() {
            writeln!(f, "  dM{} = M{} - M0 = {}", i + 1, i + 1, braces(a))?;
        }
        let c = ModImage::from_row(CIPHERTEXT.to_vec(), MODULUS).expect("constant is valid");
        writeln!(f, "intercepted C = {}", braces(&c))?;
        writeln!(f, "dM = sum c(i) * dMi = {}", braces(&self.delta))?;
        writeln!(f, "M = dM + M0 = {}", braces(&self.recovered))?;
        writeln!(f, "oracle queries: {}", self.oracle_queries)?;
        if self.passed() {
            write!(f, "all values match")
        } else {
            for m in &self.mismatches {
                writeln!(f, "MISMATCH: {m}")?;
            }
            Ok(())
        }
    }
}

/// Replays the worked example against the recorded oracle answers.
pub fn run() -> Result<Transcript> {
    let oracle = FixtureOracle::worked_example();
    let atoms = build_atoms(&oracle, 1)?;
    let oracle_queries = oracle.queries();

    let mut queries = Vec::with_capacity(LEN + 1);
    let zero = ModImage::zeros(1, LEN, MODULUS)?;
    queries.push((zero.clone(), oracle.decrypt(&zero)?));
    for i in 0..LEN {
        let ci = ModImage::impulse(1, LEN, MODULUS, i)?;
        let mi = oracle.decrypt(&ci)?;
        queries.push((ci, mi));
    }

    let dense: Vec<ModImage> = (0..LEN)
        .map(|i| atoms.atom(i).expect("one atom per pixel"))
        .collect();
    let c = ModImage::from_row(CIPHERTEXT.to_vec(), MODULUS)?;
    let delta = weighted_modsum(c.pixels(), &dense)?;
    let recovered = recover(&atoms, &c)?;

    let mut mismatches = Vec::new();
    for (i, (got, want)) in dense.iter().zip(EXPECTED_ATOMS.iter()).enumerate() {
        if got.pixels() != want {
            mismatches.push(format!("dM{} = {} expected {:?}", i + 1, braces(got), want));
        }
    }
    if delta.pixels() != EXPECTED_DELTA {
        mismatches.push(format!(
            "dM = {} expected {:?}",
            braces(&delta),
            EXPECTED_DELTA
        ));
    }
    if recovered.pixels() != EXPECTED_PLAINTEXT {
        mismatches.push(format!(
            "M = {} expected {:?}",
            braces(&recovered),
            EXPECTED_PLAINTEXT
        ));
    }
    if oracle_queries != (LEN + 1) as u64 {
        mismatches.push(format!(
            "atoms used {oracle_queries} queries, expected {}",
            LEN + 1
        ));
    }

    Ok(Transcript {
        queries,
        base: atoms.base().clone(),
        atoms: dense,
        delta,
        recovered,
        oracle_queries,
        mismatches,
    })
}
