//! Residue-vector arithmetic mod G.
//!
//! [`ModImage`] is the single carrier for plaintexts, ciphertexts, masks and
//! differentials. Pixels are stored row-major and indexed from 0; every
//! external format in this crate states its own index convention.
//!
//! The modulus is runtime data so that 8-bit (G = 256) and 16-bit
//! (G = 65536) images go through the same code. Products are formed in `u64`
//! before reduction.

use crate::error::{Error, Result};

/// Largest accepted modulus. Pixels are `u32`, products are taken in `u64`.
pub const MAX_MODULUS: u64 = 1 << 32;

/// A grey image (or mask, or differential) whose pixels are residues mod G.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ModImage {
    pixels: Vec<u32>,
    height: usize,
    width: usize,
    modulus: u64,
}

pub(crate) fn check_modulus(modulus: u64) -> Result<()> {
    if !(2..=MAX_MODULUS).contains(&modulus) {
        return Err(Error::Domain(format!(
            "modulus must lie in [2, 2^32], got {modulus}"
        )));
    }
    Ok(())
}

impl ModImage {
    pub fn new(pixels: Vec<u32>, height: usize, width: usize, modulus: u64) -> Result<Self> {
        check_modulus(modulus)?;
        if height == 0 || width == 0 {
            return Err(Error::Dimension(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if pixels.len() != height * width {
            return Err(Error::Dimension(format!(
                "{} pixels cannot fill a {height}x{width} image",
                pixels.len()
            )));
        }
        if let Some((i, &p)) = pixels
            .iter()
            .enumerate()
            .find(|(_, &p)| u64::from(p) >= modulus)
        {
            return Err(Error::Domain(format!(
                "pixel {i} = {p} is not a residue mod {modulus}"
            )));
        }
        Ok(Self {
            pixels,
            height,
            width,
            modulus,
        })
    }

    /// A 1×L row vector, the shape the worked examples use.
    pub fn from_row(pixels: Vec<u32>, modulus: u64) -> Result<Self> {
        let len = pixels.len();
        Self::new(pixels, 1, len, modulus)
    }

    pub fn zeros(height: usize, width: usize, modulus: u64) -> Result<Self> {
        Self::new(vec![0; height * width], height, width, modulus)
    }

    /// The image that is 1 at `index` (0-based) and 0 elsewhere.
    pub fn impulse(height: usize, width: usize, modulus: u64, index: usize) -> Result<Self> {
        let mut img = Self::zeros(height, width, modulus)?;
        if index >= img.len() {
            return Err(Error::Dimension(format!(
                "impulse index {index} outside {height}x{width}"
            )));
        }
        img.pixels[index] = 1;
        Ok(img)
    }

    // Internal constructor for results of closed operations.
    pub(crate) fn from_parts(pixels: Vec<u32>, height: usize, width: usize, modulus: u64) -> Self {
        debug_assert_eq!(pixels.len(), height * width);
        debug_assert!(pixels.iter().all(|&p| u64::from(p) < modulus));
        Self {
            pixels,
            height,
            width,
            modulus,
        }
    }

    pub fn pixels(&self) -> &[u32] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u32> {
        self.pixels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    /// Pixel count L = H × W.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.pixels.iter().all(|&p| p == 0)
    }

    /// Number of non-zero pixels.
    pub fn nnz(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    /// Same pixels, new shape. The pixel count must not change.
    pub fn reshape(self, height: usize, width: usize) -> Result<Self> {
        if height * width != self.len() || height == 0 {
            return Err(Error::Dimension(format!(
                "cannot reshape {}x{} into {height}x{width}",
                self.height, self.width
            )));
        }
        Ok(Self {
            height,
            width,
            ..self
        })
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dims() != other.dims() || self.modulus != other.modulus {
            return Err(Error::Dimension(format!(
                "operands differ: {}x{} mod {} vs {}x{} mod {}",
                self.height, self.width, self.modulus, other.height, other.width, other.modulus
            )));
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Result<Self> {
        self.check_compatible(other)?;
        let pixels = self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(&a, &b)| f(u64::from(a), u64::from(b)) as u32)
            .collect();
        Ok(Self::from_parts(
            pixels,
            self.height,
            self.width,
            self.modulus,
        ))
    }

    /// Elementwise (a + b) mod G.
    pub fn mod_add(&self, other: &Self) -> Result<Self> {
        let g = self.modulus;
        self.zip_with(other, |a, b| (a + b) % g)
    }

    /// Elementwise (a − b) mod G.
    pub fn mod_sub(&self, other: &Self) -> Result<Self> {
        let g = self.modulus;
        self.zip_with(other, |a, b| (a + g - b) % g)
    }

    /// Elementwise (G − a) mod G.
    pub fn mod_neg(&self) -> Self {
        let g = self.modulus;
        let pixels = self
            .pixels
            .iter()
            .map(|&a| ((g - u64::from(a)) % g) as u32)
            .collect();
        Self::from_parts(pixels, self.height, self.width, self.modulus)
    }

    /// Elementwise (λ × a) mod G. λ must already be a residue.
    pub fn scalar_mul(&self, lambda: u64) -> Result<Self> {
        let g = self.modulus;
        if lambda >= g {
            return Err(Error::Domain(format!(
                "scalar {lambda} is not a residue mod {g}"
            )));
        }
        let pixels = self
            .pixels
            .iter()
            .map(|&a| (lambda * u64::from(a) % g) as u32)
            .collect();
        Ok(Self::from_parts(
            pixels,
            self.height,
            self.width,
            self.modulus,
        ))
    }
}

/// Free-function forms mirroring the algebra notation.
pub fn mod_add(a: &ModImage, b: &ModImage) -> Result<ModImage> {
    a.mod_add(b)
}

pub fn mod_sub(a: &ModImage, b: &ModImage) -> Result<ModImage> {
    a.mod_sub(b)
}

pub fn scalar_mul(lambda: u64, a: &ModImage) -> Result<ModImage> {
    a.scalar_mul(lambda)
}

/// A differential stored as its non-zero entries only.
///
/// Entries are `(index, value)` with 0-based, strictly increasing indices and
/// values in `[1, G)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseDifferential {
    height: usize,
    width: usize,
    modulus: u64,
    entries: Vec<(usize, u32)>,
}

impl SparseDifferential {
    pub fn new(
        height: usize,
        width: usize,
        modulus: u64,
        entries: Vec<(usize, u32)>,
    ) -> Result<Self> {
        check_modulus(modulus)?;
        let len = height * width;
        if len == 0 {
            return Err(Error::Dimension("empty differential".into()));
        }
        let mut prev: Option<usize> = None;
        for &(idx, val) in &entries {
            if idx >= len {
                return Err(Error::Validation(format!(
                    "sparse index {idx} outside length {len}"
                )));
            }
            if prev.is_some_and(|p| idx <= p) {
                return Err(Error::Validation(
                    "sparse indices must be strictly increasing".into(),
                ));
            }
            if val == 0 || u64::from(val) >= modulus {
                return Err(Error::Validation(format!(
                    "sparse value {val} at {idx} is not a non-zero residue mod {modulus}"
                )));
            }
            prev = Some(idx);
        }
        Ok(Self {
            height,
            width,
            modulus,
            entries,
        })
    }

    pub fn from_dense(img: &ModImage) -> Self {
        let entries = img
            .pixels()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0)
            .map(|(i, &v)| (i, v))
            .collect();
        Self {
            height: img.height(),
            width: img.width(),
            modulus: img.modulus(),
            entries,
        }
    }

    pub fn to_dense(&self) -> ModImage {
        let mut pixels = vec![0u32; self.len()];
        for &(i, v) in &self.entries {
            pixels[i] = v;
        }
        ModImage::from_parts(pixels, self.height, self.width, self.modulus)
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }
}

/// Anything that can be scaled and accumulated into a dense residue buffer.
pub trait Differential {
    fn dims(&self) -> (usize, usize);
    fn modulus(&self) -> u64;
    /// Adds `weight * self` into `acc` without reduction.
    fn accumulate(&self, weight: u64, acc: &mut [u64]);
    fn nnz(&self) -> usize;
}

impl Differential for ModImage {
    fn dims(&self) -> (usize, usize) {
        ModImage::dims(self)
    }

    fn modulus(&self) -> u64 {
        self.modulus
    }

    fn accumulate(&self, weight: u64, acc: &mut [u64]) {
        for (a, &p) in acc.iter_mut().zip(&self.pixels) {
            *a += weight * u64::from(p);
        }
    }

    fn nnz(&self) -> usize {
        ModImage::nnz(self)
    }
}

impl Differential for SparseDifferential {
    fn dims(&self) -> (usize, usize) {
        SparseDifferential::dims(self)
    }

    fn modulus(&self) -> u64 {
        self.modulus
    }

    fn accumulate(&self, weight: u64, acc: &mut [u64]) {
        for &(i, v) in &self.entries {
            acc[i] += weight * u64::from(v);
        }
    }

    fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Σ̇ weights(i) ×̇ terms(i), reduced mod G.
///
/// Terms may be dense or sparse. Zero weights are skipped, so the cost is one
/// pass over the non-zero weights' term payloads.
pub fn weighted_modsum<T: Differential>(weights: &[u32], terms: &[T]) -> Result<ModImage> {
    let first = terms
        .first()
        .ok_or_else(|| Error::Domain("weighted sum over an empty term list".into()))?;
    if weights.len() != terms.len() {
        return Err(Error::Dimension(format!(
            "{} weights for {} terms",
            weights.len(),
            terms.len()
        )));
    }
    let (height, width) = first.dims();
    let g = first.modulus();
    if let Some(t) = terms
        .iter()
        .find(|t| t.dims() != (height, width) || t.modulus() != g)
    {
        let (h, w) = t.dims();
        return Err(Error::Dimension(format!(
            "term of shape {h}x{w} mod {} among {height}x{width} mod {g}",
            t.modulus()
        )));
    }
    if let Some(&w) = weights.iter().find(|&&w| u64::from(w) >= g) {
        return Err(Error::Domain(format!(
            "weight {w} is not a residue mod {g}"
        )));
    }

    // Each slot receives at most one product < (G-1)^2 per term; reduce
    // before the u64 accumulator could overflow.
    let max_product = (g - 1) * (g - 1);
    let flush_every = (u64::MAX - (g - 1))
        .checked_div(max_product)
        .map_or(usize::MAX, |n| n.clamp(1, usize::MAX as u64) as usize);

    let mut acc = vec![0u64; height * width];
    let mut pending = 0usize;
    for (&w, term) in weights.iter().zip(terms) {
        if w == 0 {
            continue;
        }
        term.accumulate(u64::from(w), &mut acc);
        pending += 1;
        if pending == flush_every {
            acc.iter_mut().for_each(|a| *a %= g);
            pending = 0;
        }
    }
    let pixels = acc.into_iter().map(|a| (a % g) as u32).collect();
    Ok(ModImage::from_parts(pixels, height, width, g))
}
