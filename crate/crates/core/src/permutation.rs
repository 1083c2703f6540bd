//! Pixel-level permutations as index vectors.
//!
//! Entry `i` of a [`PermutationVector`] is the source position of output
//! pixel `i`, so applying it computes `p(i) = m(w(i))`. Storage is 0-based.

use crate::algebra::ModImage;
use crate::error::{Error, Result};
use crate::keyschedule::KeyStream;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermutationVector {
    sources: Vec<usize>,
}

impl PermutationVector {
    /// Validates that `sources` is a bijection on `0..len`.
    pub fn new(sources: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; sources.len()];
        for &s in &sources {
            if s >= sources.len() || std::mem::replace(&mut seen[s], true) {
                return Err(Error::Validation(format!(
                    "index {s} breaks bijectivity on 0..{}",
                    sources.len()
                )));
            }
        }
        Ok(Self { sources })
    }

    /// Same as [`new`](Self::new) but from 1-based indices.
    pub fn from_one_based(indices: &[usize]) -> Result<Self> {
        let sources = indices
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| Error::Validation("1-based index 0".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(sources)
    }

    pub fn identity(len: usize) -> Self {
        Self {
            sources: (0..len).collect(),
        }
    }

    pub fn reverse(len: usize) -> Self {
        Self {
            sources: (0..len).rev().collect(),
        }
    }

    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.sources.iter().map(|&s| s + 1).collect()
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.sources.iter().enumerate().all(|(i, &s)| i == s)
    }

    /// Output pixel `i` takes input pixel `w(i)`. Dims metadata is kept.
    pub fn apply(&self, m: &ModImage) -> Result<ModImage> {
        if m.len() != self.len() {
            return Err(Error::Dimension(format!(
                "permutation of length {} applied to {} pixels",
                self.len(),
                m.len()
            )));
        }
        let src = m.pixels();
        let pixels = self.sources.iter().map(|&s| src[s]).collect();
        Ok(ModImage::from_parts(
            pixels,
            m.height(),
            m.width(),
            m.modulus(),
        ))
    }

    pub fn invert(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &s) in self.sources.iter().enumerate() {
            inv[s] = i;
        }
        Self { sources: inv }
    }

    /// The permutation that applies `self` first, then `then`.
    pub fn compose(&self, then: &Self) -> Result<Self> {
        if self.len() != then.len() {
            return Err(Error::Dimension(format!(
                "cannot compose permutations of length {} and {}",
                self.len(),
                then.len()
            )));
        }
        Ok(Self {
            sources: then.sources.iter().map(|&j| self.sources[j]).collect(),
        })
    }

    /// Clockwise quarter turn of an H×W image. The result, read in the same
    /// row-major order, is the W×H rotated image.
    pub fn rotation90(height: usize, width: usize) -> Self {
        // out(r, c) = in(H-1-c, r), out has H columns
        let sources = (0..width)
            .flat_map(|r| (0..height).map(move |c| (height - 1 - c) * width + r))
            .collect();
        Self { sources }
    }

    /// Row-major H×W to column-major read-out order.
    pub fn transpose(height: usize, width: usize) -> Self {
        let sources = (0..width)
            .flat_map(|c| (0..height).map(move |r| r * width + c))
            .collect();
        Self { sources }
    }

    /// Fisher–Yates shuffle consuming exactly `len` draws: for i from L-1
    /// down to 0, swap slot i with a slot drawn from `0..=i`.
    pub fn from_stream(stream: &mut dyn KeyStream, len: usize) -> Result<Self> {
        let mut sources: Vec<usize> = (0..len).collect();
        for i in (0..len).rev() {
            let j = stream.next_below(i as u64 + 1)? as usize;
            sources.swap(i, j);
        }
        Ok(Self { sources })
    }
}
