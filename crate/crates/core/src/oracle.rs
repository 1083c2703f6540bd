//! Decryption oracles: the adversary's only capability.
//!
//! Every oracle counts its queries atomically, so atoms may be built from
//! several threads without losing increments.

use std::collections::HashMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::algebra::ModImage;
use crate::cipher::{Cipher, CipherSpec};
use crate::error::{Error, Result};
use crate::keyschedule::RoundMaterial;
use crate::worked_example;

/// Ciphertext in, plaintext out.
///
/// Ciphertext and plaintext dims may differ (framed ciphers decrypt to the
/// interior). Implementations are deterministic and count every call.
pub trait DecryptionOracle: Sync {
    fn decrypt(&self, ciphertext: &ModImage) -> Result<ModImage>;
    fn queries(&self) -> u64;
    fn ciphertext_dims(&self) -> (usize, usize);
    fn plaintext_dims(&self) -> (usize, usize);
    fn modulus(&self) -> u64;
}

#[derive(Debug, Default)]
struct QueryCounter(AtomicU64);

impl QueryCounter {
    fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// An oracle backed by a real cipher instance.
#[derive(Debug)]
pub struct CipherOracle {
    cipher: Cipher,
    counter: QueryCounter,
}

impl CipherOracle {
    pub fn new(cipher: Cipher) -> Self {
        Self {
            cipher,
            counter: QueryCounter::default(),
        }
    }

    pub fn cipher(&self) -> &Cipher {
        &self.cipher
    }
}

pub fn cipher_oracle(spec: &CipherSpec, material: &RoundMaterial) -> Result<CipherOracle> {
    Ok(CipherOracle::new(Cipher::new(spec, material)?))
}

impl DecryptionOracle for CipherOracle {
    fn decrypt(&self, ciphertext: &ModImage) -> Result<ModImage> {
        self.counter.bump();
        self.cipher.decrypt(ciphertext)
    }

    fn queries(&self) -> u64 {
        self.counter.get()
    }

    fn ciphertext_dims(&self) -> (usize, usize) {
        self.cipher.ciphertext_dims()
    }

    fn plaintext_dims(&self) -> (usize, usize) {
        self.cipher.plaintext_dims()
    }

    fn modulus(&self) -> u64 {
        self.cipher.modulus()
    }
}

/// A preloaded transcript of ciphertext → plaintext answers, keyed on exact
/// pixel equality. Unknown ciphertexts are a hard error.
#[derive(Debug)]
pub struct FixtureOracle {
    table: HashMap<Vec<u32>, ModImage>,
    ciphertext_dims: (usize, usize),
    plaintext_dims: (usize, usize),
    modulus: u64,
    counter: QueryCounter,
}

impl FixtureOracle {
    pub fn new(
        entries: Vec<(ModImage, ModImage)>,
        ciphertext_dims: (usize, usize),
        plaintext_dims: (usize, usize),
    ) -> Result<Self> {
        let modulus = entries
            .first()
            .map(|(c, _)| c.modulus())
            .ok_or_else(|| Error::Format("fixture table is empty".into()))?;
        let mut table = HashMap::with_capacity(entries.len());
        for (c, p) in entries {
            if c.dims() != ciphertext_dims || p.dims() != plaintext_dims {
                return Err(Error::Dimension(format!(
                    "fixture entry {}x{} -> {}x{} does not match {}x{} -> {}x{}",
                    c.height(),
                    c.width(),
                    p.height(),
                    p.width(),
                    ciphertext_dims.0,
                    ciphertext_dims.1,
                    plaintext_dims.0,
                    plaintext_dims.1
                )));
            }
            if c.modulus() != modulus || p.modulus() != modulus {
                return Err(Error::Dimension("fixture entries mix moduli".into()));
            }
            if let Some(prev) = table.get(c.pixels()) {
                if prev != &p {
                    return Err(Error::Format(format!(
                        "ciphertext {} recorded with two different plaintexts",
                        csv(c.pixels())
                    )));
                }
            }
            table.insert(c.into_pixels(), p);
        }
        Ok(Self {
            table,
            ciphertext_dims,
            plaintext_dims,
            modulus,
            counter: QueryCounter::default(),
        })
    }

    /// The ten answers of the 9-pixel, 8-bit worked example.
    pub fn worked_example() -> Self {
        let g = worked_example::MODULUS;
        let len = worked_example::LEN;
        let entries = worked_example::ORACLE_ANSWERS
            .iter()
            .enumerate()
            .map(|(i, answer)| {
                let c = if i == 0 {
                    ModImage::zeros(1, len, g)
                } else {
                    ModImage::impulse(1, len, g, i - 1)
                }
                .expect("fixture dims are valid");
                let p =
                    ModImage::from_row(answer.to_vec(), g).expect("fixture pixels are residues");
                (c, p)
            })
            .collect();
        Self::new(entries, (1, len), (1, len)).expect("fixture table is consistent")
    }

    /// Parses `ciphertext-csv -> plaintext-csv` lines (`→` also accepted).
    /// Blank lines and `#` comments are skipped. Images are 1×n rows unless
    /// explicit dims are given.
    pub fn parse(
        text: &str,
        modulus: u64,
        ciphertext_dims: Option<(usize, usize)>,
        plaintext_dims: Option<(usize, usize)>,
    ) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (lhs, rhs) = line
                .split_once("->")
                .or_else(|| line.split_once('→'))
                .ok_or_else(|| {
                    Error::Format(format!("line {}: expected `cipher -> plain`", lineno + 1))
                })?;
            let c = parse_csv(lhs, lineno)?;
            let p = parse_csv(rhs, lineno)?;
            let (ch, cw) = ciphertext_dims.unwrap_or((1, c.len()));
            let (ph, pw) = plaintext_dims.unwrap_or((1, p.len()));
            entries.push((
                ModImage::new(c, ch, cw, modulus)?,
                ModImage::new(p, ph, pw, modulus)?,
            ));
        }
        let cdims = entries
            .first()
            .map(|(c, _)| c.dims())
            .ok_or_else(|| Error::Format("fixture file has no entries".into()))?;
        let pdims = entries[0].1.dims();
        Self::new(entries, cdims, pdims)
    }

    pub fn load(
        path: &Path,
        modulus: u64,
        ciphertext_dims: Option<(usize, usize)>,
        plaintext_dims: Option<(usize, usize)>,
    ) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, modulus, ciphertext_dims, plaintext_dims)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

fn csv(p: &[u32]) -> String {
    p.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
}

fn parse_csv(field: &str, lineno: usize) -> Result<Vec<u32>> {
    field
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| Error::Format(format!("line {}: `{}`: {e}", lineno + 1, t.trim())))
        })
        .collect()
}

impl DecryptionOracle for FixtureOracle {
    fn decrypt(&self, ciphertext: &ModImage) -> Result<ModImage> {
        self.counter.bump();
        if ciphertext.dims() != self.ciphertext_dims || ciphertext.modulus() != self.modulus {
            return Err(Error::Dimension(format!(
                "fixture oracle takes {}x{} mod {} ciphertexts",
                self.ciphertext_dims.0, self.ciphertext_dims.1, self.modulus
            )));
        }
        self.table
            .get(ciphertext.pixels())
            .cloned()
            .ok_or_else(|| Error::FixtureMiss(format!("{{{}}}", csv(ciphertext.pixels()))))
    }

    fn queries(&self) -> u64 {
        self.counter.get()
    }

    fn ciphertext_dims(&self) -> (usize, usize) {
        self.ciphertext_dims
    }

    fn plaintext_dims(&self) -> (usize, usize) {
        self.plaintext_dims
    }

    fn modulus(&self) -> u64 {
        self.modulus
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cipher::preset;
    use crate::keyschedule::{KeySeed, Schedule};

    #[test]
    fn worked_example_fixture_answers() {
        let oracle = FixtureOracle::worked_example();
        let zero = ModImage::zeros(1, 9, 256).unwrap();
        assert_eq!(
            oracle.decrypt(&zero).unwrap().pixels(),
            &[85, 16, 228, 187, 2, 230, 109, 110, 193]
        );
        let c9 = ModImage::impulse(1, 9, 256, 8).unwrap();
        assert_eq!(
            oracle.decrypt(&c9).unwrap().pixels(),
            &[83, 15, 230, 188, 2, 230, 109, 110, 194]
        );
        let eavesdropped = ModImage::from_row(worked_example::CIPHERTEXT.to_vec(), 256).unwrap();
        assert!(matches!(
            oracle.decrypt(&eavesdropped),
            Err(Error::FixtureMiss(_))
        ));
        assert_eq!(oracle.queries(), 3);
    }

    #[test]
    fn cipher_oracle_round_trip_and_accounting() {
        let spec = preset("zhou").unwrap();
        let material = spec
            .derive_material(Schedule::LogisticSine, &KeySeed::from_u64(5), 4, 4)
            .unwrap();
        let oracle = cipher_oracle(&spec, &material).unwrap();
        let m = ModImage::new((0..16).map(|i| i * 7).collect(), 4, 4, 256).unwrap();
        let c = oracle.cipher().encrypt(&m).unwrap();
        assert_eq!(oracle.decrypt(&c).unwrap(), m);
        assert_eq!(oracle.queries(), 1);
        let again = oracle.decrypt(&c).unwrap();
        assert_eq!(again, m);
        assert_eq!(oracle.queries(), 2);
    }

    #[test]
    fn framed_oracle_dims() {
        let spec = preset("hua_ma").unwrap();
        let material = spec
            .derive_material(Schedule::Counter, &KeySeed::from_u64(5), 4, 6)
            .unwrap();
        let oracle = cipher_oracle(&spec, &material).unwrap();
        assert_eq!(oracle.ciphertext_dims(), (6, 8));
        assert_eq!(oracle.plaintext_dims(), (4, 6));
        let p = oracle
            .decrypt(&ModImage::zeros(6, 8, 256).unwrap())
            .unwrap();
        assert_eq!(p.dims(), (4, 6));
    }

    #[test]
    fn concurrent_queries_are_all_counted() {
        use rayon::prelude::*;
        let oracle = FixtureOracle::worked_example();
        let zero = ModImage::zeros(1, 9, 256).unwrap();
        (0..1000).into_par_iter().for_each(|_| {
            oracle.decrypt(&zero).unwrap();
        });
        assert_eq!(oracle.queries(), 1000);
    }

    #[test]
    fn parse_transcript() {
        let text = "# two entries\n0,0 -> 5,6\n1,0 → 7,6\n\n";
        let oracle = FixtureOracle::parse(text, 256, None, None).unwrap();
        assert_eq!(oracle.len(), 2);
        let c = ModImage::from_row(vec![1, 0], 256).unwrap();
        assert_eq!(oracle.decrypt(&c).unwrap().pixels(), &[7, 6]);
        assert!(matches!(
            FixtureOracle::parse("1,2 5,6", 256, None, None),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            FixtureOracle::parse("1,x -> 5,6", 256, None, None),
            Err(Error::Format(_))
        ));
        assert!(FixtureOracle::parse("1,2 -> 5,6\n1,2 -> 5,7", 256, None, None).is_err());
        assert!(FixtureOracle::parse("1,2 -> 5,300", 256, None, None).is_err());
    }
}
