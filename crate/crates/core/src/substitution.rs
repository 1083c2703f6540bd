//! Substitution passes of the attacked family, plus an XOR control.
//!
//! All modular variants are affine in (m, k): the ciphertext differential
//! depends only on the plaintext differential. [`differential_map`] exposes
//! that linear part directly.

use crate::algebra::ModImage;
use crate::error::{Error, Result};

/// Causal filter taps `(lag, coefficient)` meaning `coefficient × c(i − lag)`.
/// The current pixel's coefficient is fixed to 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FilterKernel {
    taps: Vec<(usize, u64)>,
}

impl FilterKernel {
    /// Builds a kernel from `(offset, coefficient)` pairs. Offsets must be
    /// negative, except an optional zero offset whose coefficient is 1.
    pub fn new(pairs: &[(isize, u64)]) -> Result<Self> {
        let mut taps = Vec::new();
        for &(offset, coeff) in pairs {
            match offset {
                0 if coeff == 1 => {}
                0 => {
                    return Err(Error::Validation(format!(
                        "current-pixel coefficient must be 1, got {coeff}"
                    )))
                }
                o if o > 0 => {
                    return Err(Error::Validation(format!(
                        "offset {o} is not causal; only already-encrypted pixels may feed back"
                    )))
                }
                o => {
                    let lag = o.unsigned_abs();
                    if taps.iter().any(|&(l, _)| l == lag) {
                        return Err(Error::Validation(format!("offset {o} given twice")));
                    }
                    taps.push((lag, coeff));
                }
            }
        }
        taps.sort_unstable();
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[(usize, u64)] {
        &self.taps
    }

    /// Largest lag; the dependency reach of one pixel.
    pub fn reach(&self) -> usize {
        self.taps.iter().map(|&(l, _)| l).max().unwrap_or(0)
    }

    fn feedback(&self, c: &[u64], i: usize, g: u64) -> u64 {
        self.taps
            .iter()
            .filter(|&&(lag, _)| lag <= i)
            .fold(0, |acc, &(lag, coeff)| (acc + (coeff % g) * c[i - lag]) % g)
    }
}

impl Default for FilterKernel {
    /// Offsets −1 and −2, both with coefficient 1.
    fn default() -> Self {
        Self {
            taps: vec![(1, 1), (2, 1)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SubstitutionVariant {
    /// c(i) = m(i) + k(i)
    ModAdd,
    /// One previous cipher pixel linked; the first pixel takes m(L).
    ModAddChain1,
    /// Two previous cipher pixels linked; the first two take m(L), m(L−1).
    ModAddChain2,
    /// c(i) = k(i) − m(i)
    ModSub,
    /// c(i) = m(i) + k(i) + Σ coeff × c(i − lag) over in-range lags.
    Filtering(FilterKernel),
    /// c(i) = m(i) ⊕ k(i) ⊕ c(i−1). Outside the modular family.
    XorControl,
}

impl SubstitutionVariant {
    pub fn is_modular(&self) -> bool {
        !matches!(self, SubstitutionVariant::XorControl)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SubstitutionVariant::ModAdd => "mod-add",
            SubstitutionVariant::ModAddChain1 => "mod-add-chain1",
            SubstitutionVariant::ModAddChain2 => "mod-add-chain2",
            SubstitutionVariant::ModSub => "mod-sub",
            SubstitutionVariant::Filtering(_) => "filtering",
            SubstitutionVariant::XorControl => "xor-control",
        }
    }

    fn min_len(&self, decrypting: bool) -> usize {
        match self {
            SubstitutionVariant::ModAddChain1 if decrypting => 2,
            SubstitutionVariant::ModAddChain2 if decrypting => 3,
            SubstitutionVariant::ModAddChain2 => 2,
            _ => 1,
        }
    }
}

fn prepare(
    variant: &SubstitutionVariant,
    x: &ModImage,
    k: &ModImage,
    decrypting: bool,
) -> Result<(Vec<u64>, Vec<u64>, u64)> {
    if x.dims() != k.dims() || x.modulus() != k.modulus() {
        return Err(Error::Dimension(format!(
            "image {}x{} mod {} vs mask {}x{} mod {}",
            x.height(),
            x.width(),
            x.modulus(),
            k.height(),
            k.width(),
            k.modulus()
        )));
    }
    let need = variant.min_len(decrypting);
    if x.len() < need {
        return Err(Error::Domain(format!(
            "{} needs at least {need} pixels to {}, got {}",
            variant.name(),
            if decrypting { "decrypt" } else { "encrypt" },
            x.len()
        )));
    }
    if matches!(variant, SubstitutionVariant::XorControl) && !x.modulus().is_power_of_two() {
        return Err(Error::Domain(format!(
            "xor substitution needs a power-of-two modulus, got {}",
            x.modulus()
        )));
    }
    let widen = |img: &ModImage| img.pixels().iter().map(|&p| u64::from(p)).collect();
    Ok((widen(x), widen(k), x.modulus()))
}

fn narrow(v: Vec<u64>, like: &ModImage) -> ModImage {
    ModImage::from_parts(
        v.into_iter().map(|p| p as u32).collect(),
        like.height(),
        like.width(),
        like.modulus(),
    )
}

pub fn sub_encrypt(variant: &SubstitutionVariant, m: &ModImage, k: &ModImage) -> Result<ModImage> {
    let (m_, k_, g) = prepare(variant, m, k, false)?;
    let len = m_.len();
    let add = |a: u64, b: u64| (a + b) % g;
    let mut c = vec![0u64; len];
    match variant {
        SubstitutionVariant::ModAdd => {
            for i in 0..len {
                c[i] = add(m_[i], k_[i]);
            }
        }
        SubstitutionVariant::ModSub => {
            for i in 0..len {
                c[i] = (k_[i] + g - m_[i]) % g;
            }
        }
        SubstitutionVariant::ModAddChain1 => {
            c[0] = add(add(m_[0], k_[0]), m_[len - 1]);
            for i in 1..len {
                c[i] = add(add(m_[i], k_[i]), c[i - 1]);
            }
        }
        SubstitutionVariant::ModAddChain2 => {
            c[0] = add(add(m_[0], k_[0]), add(m_[len - 1], m_[len - 2]));
            c[1] = add(add(m_[1], k_[1]), add(c[0], m_[len - 1]));
            for i in 2..len {
                c[i] = add(add(m_[i], k_[i]), add(c[i - 1], c[i - 2]));
            }
        }
        SubstitutionVariant::Filtering(kernel) => {
            for i in 0..len {
                c[i] = add(add(m_[i], k_[i]), kernel.feedback(&c, i, g));
            }
        }
        SubstitutionVariant::XorControl => {
            let mut prev = 0;
            for i in 0..len {
                c[i] = m_[i] ^ k_[i] ^ prev;
                prev = c[i];
            }
        }
    }
    Ok(narrow(c, m))
}

/// Exact inverse of [`sub_encrypt`] for the same variant and mask.
pub fn sub_decrypt(variant: &SubstitutionVariant, c: &ModImage, k: &ModImage) -> Result<ModImage> {
    let (c_, k_, g) = prepare(variant, c, k, true)?;
    let len = c_.len();
    let sub = |a: u64, b: u64| (a + g - b) % g;
    let mut m = vec![0u64; len];
    match variant {
        SubstitutionVariant::ModAdd => {
            for i in 0..len {
                m[i] = sub(c_[i], k_[i]);
            }
        }
        SubstitutionVariant::ModSub => {
            for i in 0..len {
                m[i] = sub(k_[i], c_[i]);
            }
        }
        SubstitutionVariant::ModAddChain1 => {
            for i in (1..len).rev() {
                m[i] = sub(sub(c_[i], k_[i]), c_[i - 1]);
            }
            m[0] = sub(sub(c_[0], k_[0]), m[len - 1]);
        }
        SubstitutionVariant::ModAddChain2 => {
            // m(L), m(L-1) feed the first two outputs, so the tail goes first.
            for i in (2..len).rev() {
                m[i] = sub(sub(c_[i], k_[i]), (c_[i - 1] + c_[i - 2]) % g);
            }
            m[1] = sub(sub(c_[1], k_[1]), (c_[0] + m[len - 1]) % g);
            m[0] = sub(sub(c_[0], k_[0]), (m[len - 1] + m[len - 2]) % g);
        }
        SubstitutionVariant::Filtering(kernel) => {
            for i in 0..len {
                m[i] = sub(sub(c_[i], k_[i]), kernel.feedback(&c_, i, g));
            }
        }
        SubstitutionVariant::XorControl => {
            let mut prev = 0;
            for i in 0..len {
                m[i] = c_[i] ^ k_[i] ^ prev;
                prev = c_[i];
            }
        }
    }
    Ok(narrow(m, c))
}

/// The linear part of a modular variant: Δc as a function of Δm.
pub fn differential_map(variant: &SubstitutionVariant, dm: &ModImage) -> Result<ModImage> {
    if !variant.is_modular() {
        return Err(Error::Domain(format!(
            "{} has no key-independent differential map",
            variant.name()
        )));
    }
    let zeros = ModImage::zeros(dm.height(), dm.width(), dm.modulus())?;
    sub_encrypt(variant, dm, &zeros)
}

/// Fib(i) mod G with Fib(1) = Fib(2) = 1 (and Fib(0) = 0).
pub fn fib_mod(i: usize, modulus: u64) -> u64 {
    let (mut a, mut b) = (0u64, 1 % modulus);
    for _ in 0..i {
        (a, b) = (b, (a + b) % modulus);
    }
    a
}

/// Two-link chain substitution written as a Fibonacci-weighted sum:
/// d(i) = Σ_{j≤i} Fib(i−j+1)(m(j)+k(j)) + Fib(i+1)·m(L) + Fib(i)·m(L−1),
/// with 1-based i, j.
pub fn fibonacci_closed_form(m: &ModImage, k: &ModImage) -> Result<ModImage> {
    let (m_, k_, g) = prepare(&SubstitutionVariant::ModAddChain2, m, k, false)?;
    let len = m_.len();
    let fib: Vec<u64> = (0..=len + 1).map(|i| fib_mod(i, g)).collect();
    let masked: Vec<u64> = m_.iter().zip(&k_).map(|(a, b)| (a + b) % g).collect();
    let (last, second_last) = (m_[len - 1], m_[len - 2]);
    let d = (1..=len)
        .map(|i| {
            let chain = (1..=i).fold(0, |acc, j| (acc + fib[i - j + 1] * masked[j - 1]) % g);
            (chain + fib[i + 1] * last % g + fib[i] * second_last % g) % g
        })
        .collect();
    Ok(narrow(d, m))
}
