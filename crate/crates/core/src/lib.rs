//! Permutation–substitution image ciphers over Z_G and a keyless
//! chosen-ciphertext attack that recovers plaintexts from LL+1 decryption
//! queries.
//!
//! Layout: [`algebra`] (residue images), [`permutation`], [`substitution`],
//! [`keyschedule`], [`cipher`] (presets and rounds), [`oracle`], [`attack`],
//! [`bam_check`] (empirical Δ-map checks), [`io`] (files and reports).

pub mod algebra;
pub mod attack;
pub mod bam_check;
pub mod cipher;
pub mod error;
pub mod io;
pub mod keyschedule;
pub mod oracle;
pub mod permutation;
pub mod substitution;
pub mod worked_example;

pub use algebra::{weighted_modsum, ModImage, SparseDifferential};
pub use attack::{attack_end_to_end, build_atoms, recover, AttackAtoms, AttackOptions};
pub use cipher::{preset, Cipher, CipherSpec};
pub use error::{Error, Result};
pub use keyschedule::{KeySeed, KeyStream, RoundMaterial, Schedule};
pub use oracle::{CipherOracle, DecryptionOracle, FixtureOracle};
pub use permutation::PermutationVector;
pub use substitution::SubstitutionVariant;
