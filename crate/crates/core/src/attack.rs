//! The keyless chosen-ciphertext attack.
//!
//! Build phase: query the zero ciphertext and the LL unit impulses, keep the
//! base plaintext M₀ and the atoms ΔMᵢ = decrypt(Cᵢ) − M₀. Recovery phase:
//! for any ciphertext C, M = Σ c(i)·ΔMᵢ + M₀. Recovery never touches the
//! oracle, and nothing about W or K is ever learned.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{weighted_modsum, ModImage, SparseDifferential};
use crate::cipher::{Cipher, CipherSpec};
use crate::error::{Error, Result};
use crate::keyschedule::{KeySeed, Schedule};
use crate::oracle::{CipherOracle, DecryptionOracle};

/// Atom payloads, all dense or all sparse.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AtomSet {
    Dense(Vec<ModImage>),
    Sparse(Vec<SparseDifferential>),
}

impl AtomSet {
    pub fn len(&self) -> usize {
        match self {
            AtomSet::Dense(v) => v.len(),
            AtomSet::Sparse(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, AtomSet::Sparse(_))
    }

    /// Non-zero count of each atom, in ciphertext-index order.
    pub fn nnz(&self) -> Vec<usize> {
        match self {
            AtomSet::Dense(v) => v.iter().map(ModImage::nnz).collect(),
            AtomSet::Sparse(v) => v.iter().map(SparseDifferential::nnz).collect(),
        }
    }

    fn shape_of(&self, i: usize) -> ((usize, usize), u64) {
        match self {
            AtomSet::Dense(v) => (v[i].dims(), v[i].modulus()),
            AtomSet::Sparse(v) => (v[i].dims(), v[i].modulus()),
        }
    }
}

/// The precomputed recovery dictionary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttackAtoms {
    base: ModImage,
    diffs: AtomSet,
    ciphertext_dims: (usize, usize),
}

impl AttackAtoms {
    pub fn new(base: ModImage, diffs: AtomSet, ciphertext_dims: (usize, usize)) -> Result<Self> {
        let ll = ciphertext_dims.0 * ciphertext_dims.1;
        if diffs.len() != ll || ll == 0 {
            return Err(Error::Dimension(format!(
                "{} atoms for a ciphertext of {ll} pixels",
                diffs.len()
            )));
        }
        for i in 0..diffs.len() {
            if diffs.shape_of(i) != (base.dims(), base.modulus()) {
                return Err(Error::Dimension(format!(
                    "atom {i} does not match the base plaintext's shape"
                )));
            }
        }
        Ok(Self {
            base,
            diffs,
            ciphertext_dims,
        })
    }

    /// M₀, the plaintext of the all-zero ciphertext.
    pub fn base(&self) -> &ModImage {
        &self.base
    }

    pub fn diffs(&self) -> &AtomSet {
        &self.diffs
    }

    /// LL, the number of ciphertext pixels (and of atoms).
    pub fn ciphertext_len(&self) -> usize {
        self.diffs.len()
    }

    pub fn ciphertext_dims(&self) -> (usize, usize) {
        self.ciphertext_dims
    }

    pub fn plaintext_dims(&self) -> (usize, usize) {
        self.base.dims()
    }

    pub fn modulus(&self) -> u64 {
        self.base.modulus()
    }

    pub fn density(&self) -> DensityReport {
        DensityReport::from_nnz(&self.diffs.nnz(), self.base.len(), None)
    }

    /// ΔMᵢ as a dense image, 0-based ciphertext index.
    pub fn atom(&self, index: usize) -> Option<ModImage> {
        match &self.diffs {
            AtomSet::Dense(v) => v.get(index).cloned(),
            AtomSet::Sparse(v) => v.get(index).map(SparseDifferential::to_dense),
        }
    }
}

/// Atom sparsity statistics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityReport {
    pub atoms: usize,
    pub plaintext_len: usize,
    pub nnz_total: usize,
    pub nnz_max: usize,
    pub nnz_mean: f64,
    /// Fraction of stored entries relative to dense storage.
    pub fill: f64,
    pub budget: Option<usize>,
    pub budget_exceeded: bool,
}

impl DensityReport {
    fn from_nnz(nnz: &[usize], plaintext_len: usize, budget: Option<usize>) -> Self {
        let total: usize = nnz.iter().sum();
        let max = nnz.iter().copied().max().unwrap_or(0);
        let atoms = nnz.len();
        Self {
            atoms,
            plaintext_len,
            nnz_total: total,
            nnz_max: max,
            nnz_mean: total as f64 / atoms.max(1) as f64,
            fill: total as f64 / (atoms * plaintext_len).max(1) as f64,
            budget,
            budget_exceeded: budget.is_some_and(|b| max > b),
        }
    }
}

/// Queries C₀ and every unit impulse Cᵢ: exactly LL + 1 oracle calls.
///
/// With `jobs > 1` the impulse queries are issued from a worker pool; atoms
/// are stored by position so answer order does not matter.
pub fn build_atoms<O>(oracle: &O, jobs: usize) -> Result<AttackAtoms>
where
    O: DecryptionOracle + ?Sized,
{
    let (ch, cw) = oracle.ciphertext_dims();
    let g = oracle.modulus();
    let ll = ch * cw;
    if ll == 0 {
        return Err(Error::Dimension(
            "oracle has an empty ciphertext space".into(),
        ));
    }
    let expected = oracle.plaintext_dims();
    let check = |p: &ModImage, what: &str| -> Result<()> {
        if p.dims() != expected || p.modulus() != g {
            return Err(Error::Protocol(format!(
                "answer to {what} is {}x{} mod {}, expected {}x{} mod {g}",
                p.height(),
                p.width(),
                p.modulus(),
                expected.0,
                expected.1
            )));
        }
        Ok(())
    };

    let base = oracle.decrypt(&ModImage::zeros(ch, cw, g)?)?;
    check(&base, "C0")?;

    let query = |i: usize| -> Result<ModImage> {
        let answer = oracle.decrypt(&ModImage::impulse(ch, cw, g, i)?)?;
        check(&answer, &format!("C{}", i + 1))?;
        answer.mod_sub(&base)
    };
    let diffs = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("cannot start {jobs} query workers: {e}")))?;
        pool.install(|| {
            (0..ll)
                .into_par_iter()
                .map(query)
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        (0..ll).map(query).collect::<Result<Vec<_>>>()?
    };
    AttackAtoms::new(base, AtomSet::Dense(diffs), (ch, cw))
}

/// M = Σ̇ c(i) ×̇ ΔMᵢ +̇ M₀. No oracle access, no input policing.
pub fn recover(atoms: &AttackAtoms, ciphertext: &ModImage) -> Result<ModImage> {
    if ciphertext.len() != atoms.ciphertext_len() || ciphertext.modulus() != atoms.modulus() {
        return Err(Error::Dimension(format!(
            "ciphertext has {} pixels mod {}, atoms expect {} mod {}",
            ciphertext.len(),
            ciphertext.modulus(),
            atoms.ciphertext_len(),
            atoms.modulus()
        )));
    }
    let weights = ciphertext.pixels();
    let delta = match &atoms.diffs {
        AtomSet::Dense(v) => weighted_modsum(weights, v)?,
        AtomSet::Sparse(v) => weighted_modsum(weights, v)?,
    };
    delta.mod_add(&atoms.base)
}

/// Converts every atom to sparse form. A budget that is exceeded is reported,
/// never enforced.
pub fn sparsify_atoms(atoms: &AttackAtoms, budget: Option<usize>) -> (AttackAtoms, DensityReport) {
    let sparse: Vec<SparseDifferential> = match &atoms.diffs {
        AtomSet::Dense(v) => v.iter().map(SparseDifferential::from_dense).collect(),
        AtomSet::Sparse(v) => v.clone(),
    };
    let nnz: Vec<usize> = sparse.iter().map(SparseDifferential::nnz).collect();
    let report = DensityReport::from_nnz(&nnz, atoms.base.len(), budget);
    let out = AttackAtoms {
        base: atoms.base.clone(),
        diffs: AtomSet::Sparse(sparse),
        ciphertext_dims: atoms.ciphertext_dims,
    };
    (out, report)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecoveryRecord {
    pub id: usize,
    pub success: bool,
}

/// Outcome of one attack run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackReport {
    pub preset: String,
    pub schedule: String,
    pub modulus: u64,
    pub rounds: usize,
    pub ciphertext_dims: (usize, usize),
    pub plaintext_dims: (usize, usize),
    /// Oracle calls spent building atoms.
    pub queries_used: u64,
    /// Oracle calls made during recovery; always 0.
    pub recovery_queries: u64,
    pub atoms_nnz_total: usize,
    pub atoms_nnz_max: usize,
    pub recoveries: Vec<RecoveryRecord>,
    pub build_ms: f64,
    pub recover_ms: f64,
}

impl AttackReport {
    pub fn success(&self) -> bool {
        !self.recoveries.is_empty() && self.recoveries.iter().all(|r| r.success)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AttackOptions {
    pub jobs: usize,
    pub sparse: bool,
}

impl Default for AttackOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            sparse: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AttackOutcome {
    pub report: AttackReport,
    pub ciphertext: ModImage,
    pub recovered: ModImage,
    pub atoms: AttackAtoms,
}

/// Encrypts `plaintext` under (spec, schedule, seed), attacks the ciphertext
/// through an oracle for the same deployment, and checks bit-exact recovery.
pub fn attack_end_to_end(
    spec: &CipherSpec,
    schedule: Schedule,
    seed: &KeySeed,
    plaintext: &ModImage,
    options: AttackOptions,
) -> Result<AttackOutcome> {
    let material = spec.derive_material(schedule, seed, plaintext.height(), plaintext.width())?;
    let cipher = Cipher::new(spec, &material)?;
    let ciphertext = cipher.encrypt(plaintext)?;
    let oracle = CipherOracle::new(cipher);

    let start = Instant::now();
    let mut atoms = build_atoms(&oracle, options.jobs)?;
    if options.sparse {
        atoms = sparsify_atoms(&atoms, None).0;
    }
    let build_ms = start.elapsed().as_secs_f64() * 1e3;
    let queries_used = oracle.queries();

    let start = Instant::now();
    let recovered = recover(&atoms, &ciphertext)?;
    let recover_ms = start.elapsed().as_secs_f64() * 1e3;
    let density = atoms.density();

    let report = AttackReport {
        preset: spec.name.clone(),
        schedule: schedule.name().to_string(),
        modulus: spec.modulus,
        rounds: spec.rounds,
        ciphertext_dims: atoms.ciphertext_dims(),
        plaintext_dims: atoms.plaintext_dims(),
        queries_used,
        recovery_queries: oracle.queries() - queries_used,
        atoms_nnz_total: density.nnz_total,
        atoms_nnz_max: density.nnz_max,
        recoveries: vec![RecoveryRecord {
            id: 0,
            success: recovered == *plaintext,
        }],
        build_ms,
        recover_ms,
    };
    Ok(AttackOutcome {
        report,
        ciphertext,
        recovered,
        atoms,
    })
}
