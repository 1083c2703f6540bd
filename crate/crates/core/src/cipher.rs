//! N-round permutation–substitution ciphers.
//!
//! Each round is `pre-permutation → substitution → post-permutation` on the
//! flattened working image. Stage order, the rotation stage and the
//! column-wise read-out are all folded into those two permutations when the
//! cipher is built, so the round function itself is uniform.

use crate::algebra::ModImage;
use crate::error::{Error, Result};
use crate::keyschedule::{EntropyStream, KeySeed, KeyStream, RoundMaterial, Schedule};
use crate::permutation::PermutationVector;
use crate::substitution::{sub_decrypt, sub_encrypt, FilterKernel, SubstitutionVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StageOrder {
    PermuteThenSubstitute,
    SubstituteThenPermute,
}

/// Declarative description of one family member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CipherSpec {
    pub name: String,
    pub variant: SubstitutionVariant,
    pub order: StageOrder,
    pub rounds: usize,
    /// Paste a one-pixel random frame around the plaintext before encrypting.
    pub border_insertion: bool,
    pub modulus: u64,
    /// Clockwise quarter turn between the permutation and substitution stages.
    pub rotation: bool,
    /// Substitute over the column-major read-out of the permuted image.
    pub column_scan: bool,
}

/// Every preset name, in table order.
pub const PRESET_NAMES: [&str; 11] = [
    "basic",
    "lan",
    "zhou",
    "hua_ma",
    "borujeni",
    "hua2018",
    "hua2015",
    "cosine",
    "filtering",
    "filtering_border",
    "xor_control",
];

/// Presets whose substitution is in the modular family.
pub const MODULAR_PRESETS: [&str; 10] = [
    "basic",
    "lan",
    "zhou",
    "hua_ma",
    "borujeni",
    "hua2018",
    "hua2015",
    "cosine",
    "filtering",
    "filtering_border",
];

/// Looks up a preset at G = 256.
pub fn preset(name: &str) -> Result<CipherSpec> {
    use StageOrder::*;
    use SubstitutionVariant::*;
    let (variant, order, rounds, border, rotation, column_scan) = match name {
        "basic" => (ModAdd, PermuteThenSubstitute, 1, false, false, false),
        "lan" => (ModSub, SubstituteThenPermute, 4, false, false, false),
        "zhou" => (ModAddChain2, SubstituteThenPermute, 2, false, false, false),
        "hua_ma" => (ModAddChain1, PermuteThenSubstitute, 2, true, false, true),
        "borujeni" => (ModAdd, PermuteThenSubstitute, 1, false, false, false),
        "hua2018" => (ModAddChain2, PermuteThenSubstitute, 4, false, false, false),
        "hua2015" => (ModAddChain1, PermuteThenSubstitute, 2, false, true, false),
        "cosine" => (ModAddChain1, PermuteThenSubstitute, 4, false, true, false),
        "filtering" => (
            Filtering(FilterKernel::default()),
            PermuteThenSubstitute,
            2,
            false,
            false,
            false,
        ),
        "filtering_border" => (
            Filtering(FilterKernel::default()),
            PermuteThenSubstitute,
            4,
            true,
            false,
            false,
        ),
        "xor_control" => (XorControl, PermuteThenSubstitute, 2, false, false, false),
        other => return Err(Error::Lookup(other.to_string())),
    };
    Ok(CipherSpec {
        name: name.to_string(),
        variant,
        order,
        rounds,
        border_insertion: border,
        modulus: 256,
        rotation,
        column_scan,
    })
}

impl CipherSpec {
    pub fn with_modulus(mut self, modulus: u64) -> Self {
        self.modulus = modulus;
        self
    }

    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }

    /// The same network without the random frame; what the Δ-probes act on.
    pub fn network_only(&self) -> Self {
        Self {
            border_insertion: false,
            ..self.clone()
        }
    }

    pub fn is_modular(&self) -> bool {
        self.variant.is_modular()
    }

    /// Dims the rounds operate on for a plaintext of the given dims.
    pub fn working_dims(&self, height: usize, width: usize) -> (usize, usize) {
        if self.border_insertion {
            (height + 2, width + 2)
        } else {
            (height, width)
        }
    }

    /// Plaintext dims for a ciphertext of the given dims.
    pub fn plaintext_dims(&self, height: usize, width: usize) -> Result<(usize, usize)> {
        if !self.border_insertion {
            return Ok((height, width));
        }
        if height < 3 || width < 3 {
            return Err(Error::Dimension(format!(
                "framed ciphertext must be at least 3x3, got {height}x{width}"
            )));
        }
        Ok((height - 2, width - 2))
    }

    /// Round material for a plaintext of the given dims.
    pub fn derive_material(
        &self,
        schedule: Schedule,
        seed: &KeySeed,
        height: usize,
        width: usize,
    ) -> Result<RoundMaterial> {
        let (h, w) = self.working_dims(height, width);
        let mut stream = schedule.stream(seed)?;
        RoundMaterial::derive(&mut *stream, self.rounds, h, w, self.modulus)
    }
}

/// Pastes a one-pixel frame of 2H+2W+4 fresh residues around `m`.
pub fn border_wrap(m: &ModImage, randomness: &mut dyn KeyStream) -> Result<ModImage> {
    let (h, w) = m.dims();
    let (fh, fw) = (h + 2, w + 2);
    let g = m.modulus();
    let src = m.pixels();
    let mut pixels = Vec::with_capacity(fh * fw);
    for r in 0..fh {
        for c in 0..fw {
            if r == 0 || c == 0 || r == fh - 1 || c == fw - 1 {
                pixels.push(randomness.next_residue(g)?);
            } else {
                pixels.push(src[(r - 1) * w + (c - 1)]);
            }
        }
    }
    Ok(ModImage::from_parts(pixels, fh, fw, g))
}

/// The interior of a framed image.
pub fn border_strip(mi: &ModImage) -> Result<ModImage> {
    let (fh, fw) = mi.dims();
    if fh < 3 || fw < 3 {
        return Err(Error::Dimension(format!(
            "cannot strip a frame from a {fh}x{fw} image"
        )));
    }
    let src = mi.pixels();
    let pixels = (1..fh - 1)
        .flat_map(|r| src[r * fw + 1..r * fw + fw - 1].iter().copied())
        .collect();
    Ok(ModImage::from_parts(pixels, fh - 2, fw - 2, mi.modulus()))
}

#[derive(Clone, Debug)]
struct PreparedRound {
    pre: Option<(PermutationVector, PermutationVector)>,
    post: Option<(PermutationVector, PermutationVector)>,
    mask: ModImage,
}

fn with_inverse(p: PermutationVector) -> Option<(PermutationVector, PermutationVector)> {
    if p.is_identity() {
        None
    } else {
        let inv = p.invert();
        Some((p, inv))
    }
}

fn permute(
    p: &Option<(PermutationVector, PermutationVector)>,
    x: ModImage,
    inverse: bool,
) -> ModImage {
    match p {
        None => x,
        Some((fwd, inv)) => {
            let perm = if inverse { inv } else { fwd };
            perm.apply(&x)
                .expect("round permutations are sized to the working image")
        }
    }
}

/// A spec bound to concrete round material.
#[derive(Clone, Debug)]
pub struct Cipher {
    spec: CipherSpec,
    work_dims: (usize, usize),
    rounds: Vec<PreparedRound>,
}

impl Cipher {
    pub fn new(spec: &CipherSpec, material: &RoundMaterial) -> Result<Self> {
        if spec.rounds == 0 {
            return Err(Error::Config("a cipher needs at least one round".into()));
        }
        if material.len() < spec.rounds {
            return Err(Error::Config(format!(
                "spec asks for {} rounds, material has {}",
                spec.rounds,
                material.len()
            )));
        }
        if material.modulus() != spec.modulus {
            return Err(Error::Config(format!(
                "material is mod {}, spec is mod {}",
                material.modulus(),
                spec.modulus
            )));
        }
        let (h, w) = material.dims();
        if spec.border_insertion && (h < 3 || w < 3) {
            return Err(Error::Config(format!(
                "framed working image must be at least 3x3, material is {h}x{w}"
            )));
        }
        let len = h * w;
        let rotation = spec.rotation.then(|| PermutationVector::rotation90(h, w));
        let scan = spec.column_scan.then(|| PermutationVector::transpose(h, w));
        let chain = |parts: &[Option<&PermutationVector>]| -> Result<PermutationVector> {
            parts
                .iter()
                .flatten()
                .try_fold(PermutationVector::identity(len), |acc, p| acc.compose(p))
        };

        let mut rounds = Vec::with_capacity(spec.rounds);
        for rk in &material.rounds()[..spec.rounds] {
            let w_ = Some(&rk.permutation);
            let (pre, post) = match spec.order {
                StageOrder::PermuteThenSubstitute => (
                    chain(&[w_, rotation.as_ref(), scan.as_ref()])?,
                    PermutationVector::identity(len),
                ),
                StageOrder::SubstituteThenPermute => {
                    let unscan = scan.as_ref().map(PermutationVector::invert);
                    (
                        chain(&[scan.as_ref()])?,
                        chain(&[unscan.as_ref(), rotation.as_ref(), w_])?,
                    )
                }
            };
            rounds.push(PreparedRound {
                pre: with_inverse(pre),
                post: with_inverse(post),
                mask: rk.mask.clone(),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            work_dims: (h, w),
            rounds,
        })
    }

    pub fn spec(&self) -> &CipherSpec {
        &self.spec
    }

    pub fn rounds(&self) -> usize {
        self.rounds.len()
    }

    pub fn modulus(&self) -> u64 {
        self.spec.modulus
    }

    /// Dims of ciphertexts (and of the working image inside the rounds).
    pub fn ciphertext_dims(&self) -> (usize, usize) {
        self.work_dims
    }

    pub fn plaintext_dims(&self) -> (usize, usize) {
        let (h, w) = self.work_dims;
        self.spec
            .plaintext_dims(h, w)
            .expect("framed working dims checked at construction")
    }

    fn check_input(&self, x: &ModImage, dims: (usize, usize), what: &str) -> Result<()> {
        if x.dims() != dims || x.modulus() != self.spec.modulus {
            return Err(Error::Dimension(format!(
                "{what} is {}x{} mod {}, cipher expects {}x{} mod {}",
                x.height(),
                x.width(),
                x.modulus(),
                dims.0,
                dims.1,
                self.spec.modulus
            )));
        }
        Ok(())
    }

    /// One round of the network, 0-based round index.
    pub fn encrypt_round(&self, round: usize, x: &ModImage) -> Result<ModImage> {
        self.check_input(x, self.work_dims, "round input")?;
        let r = self
            .rounds
            .get(round)
            .ok_or_else(|| Error::Domain(format!("no round {round}")))?;
        let p = permute(&r.pre, x.clone(), false);
        let s = sub_encrypt(&self.spec.variant, &p, &r.mask)?;
        Ok(permute(&r.post, s, false))
    }

    pub fn decrypt_round(&self, round: usize, c: &ModImage) -> Result<ModImage> {
        self.check_input(c, self.work_dims, "round input")?;
        let r = self
            .rounds
            .get(round)
            .ok_or_else(|| Error::Domain(format!("no round {round}")))?;
        let s = permute(&r.post, c.clone(), true);
        let p = sub_decrypt(&self.spec.variant, &s, &r.mask)?;
        Ok(permute(&r.pre, p, true))
    }

    /// All rounds on an already-framed (or unframed) working image.
    pub fn network_encrypt(&self, x: &ModImage) -> Result<ModImage> {
        (0..self.rounds.len()).try_fold(x.clone(), |acc, i| self.encrypt_round(i, &acc))
    }

    pub fn network_decrypt(&self, c: &ModImage) -> Result<ModImage> {
        (0..self.rounds.len())
            .rev()
            .try_fold(c.clone(), |acc, i| self.decrypt_round(i, &acc))
    }

    /// Encrypts with fresh OS randomness for the frame, if the spec has one.
    pub fn encrypt(&self, m: &ModImage) -> Result<ModImage> {
        self.encrypt_with_frame(m, &mut EntropyStream::new())
    }

    /// Encrypts drawing frame pixels from `frame`. Unused without a frame.
    pub fn encrypt_with_frame(&self, m: &ModImage, frame: &mut dyn KeyStream) -> Result<ModImage> {
        self.check_input(m, self.plaintext_dims(), "plaintext")?;
        if self.spec.border_insertion {
            self.network_encrypt(&border_wrap(m, frame)?)
        } else {
            self.network_encrypt(m)
        }
    }

    /// Exact inverse of encryption; framed ciphertexts decrypt to the interior.
    pub fn decrypt(&self, c: &ModImage) -> Result<ModImage> {
        self.check_input(c, self.work_dims, "ciphertext")?;
        let mi = self.network_decrypt(c)?;
        if self.spec.border_insertion {
            border_strip(&mi)
        } else {
            Ok(mi)
        }
    }
}
