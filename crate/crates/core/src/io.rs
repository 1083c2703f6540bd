//! Image files, round material, atom files and run reports.
//!
//! Atoms file layout (all integers little-endian):
//!
//! ```text
//! "PCCA"            4 bytes magic
//! version           u8, currently 1
//! LL                u64, ciphertext pixel count (= number of atoms)
//! H, W              u64, ciphertext dims
//! G                 u64, modulus
//! PH, PW            u64, plaintext dims
//! density           u8, 0 = dense, 1 = sparse
//! M0                PH*PW samples
//! atoms, per atom:  dense:  PH*PW samples
//!                   sparse: nnz u64, then nnz × (index u64, sample)
//! ```
//!
//! Samples are `ceil(log2 G)/8` bytes wide (rounded up), indices 0-based.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::{ModImage, SparseDifferential};
use crate::attack::{AtomSet, AttackAtoms};
use crate::error::{Error, Result};
use crate::keyschedule::{RoundKey, RoundMaterial};
use crate::permutation::PermutationVector;

pub const ATOMS_MAGIC: &[u8; 4] = b"PCCA";
pub const ATOMS_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Raw,
    Csv,
}

impl ImageFormat {
    /// Guesses from the file extension; anything unknown is raw.
    pub fn from_path(path: &Path) -> Self {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("pgm") => ImageFormat::Pgm,
            Some("csv") | Some("txt") => ImageFormat::Csv,
            _ => ImageFormat::Raw,
        }
    }
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm" => Ok(ImageFormat::Pgm),
            "raw" => Ok(ImageFormat::Raw),
            "csv" => Ok(ImageFormat::Csv),
            other => Err(Error::Format(format!("unknown image format `{other}`"))),
        }
    }
}

/// Bytes per sample: ceil(ceil(log2 G) / 8).
pub fn sample_bytes(modulus: u64) -> usize {
    let bits = 64 - (modulus.max(2) - 1).leading_zeros() as usize;
    bits.div_ceil(8)
}

/// G for a bit depth of 8 or 16.
pub fn modulus_for_depth(depth: u32) -> Result<u64> {
    match depth {
        8 => Ok(256),
        16 => Ok(65536),
        d => Err(Error::Domain(format!("unsupported depth {d}; use 8 or 16"))),
    }
}

fn maxval_for(modulus: u64) -> Result<u32> {
    match modulus {
        256 => Ok(255),
        65536 => Ok(65535),
        g => Err(Error::Dimension(format!(
            "PGM holds only G=256 or G=65536 images, not G={g}"
        ))),
    }
}

// ---- PGM ----

fn pgm_token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("truncated PGM header".into()));
    }
    Ok(&data[start..*pos])
}

fn pgm_number(data: &[u8], pos: &mut usize, what: &str) -> Result<usize> {
    let tok = pgm_token(data, pos)?;
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format(format!("bad PGM {what}")))
}

/// Decodes a binary (P5) PGM.
pub fn decode_pgm(data: &[u8]) -> Result<ModImage> {
    let mut pos = 0;
    if pgm_token(data, &mut pos)? != b"P5" {
        return Err(Error::Format("not a binary PGM (P5)".into()));
    }
    let width = pgm_number(data, &mut pos, "width")?;
    let height = pgm_number(data, &mut pos, "height")?;
    let maxval = pgm_number(data, &mut pos, "maxval")?;
    let modulus = match maxval {
        255 => 256,
        65535 => 65536,
        m => return Err(Error::Format(format!("PGM maxval {m}; only 255 or 65535"))),
    };
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let width_bytes = if modulus == 256 { 1 } else { 2 };
    let need = height * width * width_bytes;
    let raster = data
        .get(pos..)
        .filter(|r| r.len() >= need)
        .ok_or_else(|| Error::Format(format!("PGM raster shorter than {need} bytes")))?;
    let pixels = if width_bytes == 1 {
        raster[..need].iter().map(|&b| u32::from(b)).collect()
    } else {
        raster[..need]
            .chunks_exact(2)
            .map(|c| u32::from(u16::from_be_bytes([c[0], c[1]])))
            .collect()
    };
    ModImage::new(pixels, height, width, modulus)
}

pub fn encode_pgm(img: &ModImage) -> Result<Vec<u8>> {
    let maxval = maxval_for(img.modulus())?;
    let mut out = format!("P5\n{} {}\n{}\n", img.width(), img.height(), maxval).into_bytes();
    if maxval == 255 {
        out.extend(img.pixels().iter().map(|&p| p as u8));
    } else {
        for &p in img.pixels() {
            out.extend_from_slice(&(p as u16).to_be_bytes());
        }
    }
    Ok(out)
}

// ---- raw ----

pub fn decode_raw(data: &[u8], height: usize, width: usize, modulus: u64) -> Result<ModImage> {
    let sb = sample_bytes(modulus);
    let need = height * width * sb;
    if data.len() != need {
        return Err(Error::Dimension(format!(
            "raw file has {} bytes, {height}x{width} at G={modulus} needs {need}",
            data.len()
        )));
    }
    let pixels = data.chunks_exact(sb).map(read_sample).collect();
    ModImage::new(pixels, height, width, modulus)
}

pub fn encode_raw(img: &ModImage) -> Vec<u8> {
    let sb = sample_bytes(img.modulus());
    let mut out = Vec::with_capacity(img.len() * sb);
    for &p in img.pixels() {
        out.extend_from_slice(&p.to_le_bytes()[..sb]);
    }
    out
}

fn read_sample(bytes: &[u8]) -> u32 {
    let mut buf = [0u8; 4];
    buf[..bytes.len()].copy_from_slice(bytes);
    u32::from_le_bytes(buf)
}

// ---- CSV ----

/// One image row per line. Dims are inferred when not given.
pub fn decode_csv(text: &str, dims: Option<(usize, usize)>, modulus: u64) -> Result<ModImage> {
    let mut pixels = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<u32>().map_err(|e| {
                    Error::Format(format!("csv line {}: `{}`: {e}", lineno + 1, t.trim()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if *cols.get_or_insert(row.len()) != row.len() && dims.is_none() {
            return Err(Error::Format(format!(
                "csv line {} has a ragged row",
                lineno + 1
            )));
        }
        rows += 1;
        pixels.extend(row);
    }
    let (h, w) = dims.unwrap_or((rows, cols.unwrap_or(0)));
    if pixels.len() != h * w {
        return Err(Error::Dimension(format!(
            "csv holds {} values, expected {h}x{w}",
            pixels.len()
        )));
    }
    ModImage::new(pixels, h, w, modulus)
}

pub fn encode_csv(img: &ModImage) -> String {
    let mut out = String::new();
    for row in img.pixels().chunks(img.width()) {
        let line: Vec<String> = row.iter().map(u32::to_string).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Reads an image. Raw needs `dims`; raw and CSV need `modulus`.
pub fn read_image(
    path: &Path,
    format: ImageFormat,
    dims: Option<(usize, usize)>,
    modulus: u64,
) -> Result<ModImage> {
    let data = std::fs::read(path)?;
    let img = match format {
        ImageFormat::Pgm => decode_pgm(&data)?,
        ImageFormat::Raw => {
            let (h, w) =
                dims.ok_or_else(|| Error::Domain("raw images need --height and --width".into()))?;
            decode_raw(&data, h, w, modulus)?
        }
        ImageFormat::Csv => {
            let text = String::from_utf8(data)
                .map_err(|_| Error::Format("csv file is not UTF-8".into()))?;
            decode_csv(&text, dims, modulus)?
        }
    };
    if img.modulus() != modulus {
        return Err(Error::Dimension(format!(
            "image is G={}, expected G={modulus}",
            img.modulus()
        )));
    }
    if let Some(d) = dims {
        if img.dims() != d {
            return Err(Error::Dimension(format!(
                "image is {}x{}, expected {}x{}",
                img.height(),
                img.width(),
                d.0,
                d.1
            )));
        }
    }
    Ok(img)
}

pub fn write_image(path: &Path, format: ImageFormat, img: &ModImage) -> Result<()> {
    let bytes = match format {
        ImageFormat::Pgm => encode_pgm(img)?,
        ImageFormat::Raw => encode_raw(img),
        ImageFormat::Csv => encode_csv(img).into_bytes(),
    };
    std::fs::write(path, bytes)?;
    Ok(())
}

// ---- round material ----

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 0-based source indices.
    pub permutation: Vec<usize>,
    pub mask: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaterialFile {
    pub preset: String,
    pub schedule: String,
    pub seed_digest: String,
    pub height: usize,
    pub width: usize,
    pub modulus: u64,
    pub rounds: Vec<RoundRecord>,
}

impl MaterialFile {
    pub fn from_material(
        preset: &str,
        schedule: &str,
        seed_digest: &str,
        material: &RoundMaterial,
    ) -> Self {
        let (height, width) = material.dims();
        Self {
            preset: preset.into(),
            schedule: schedule.into(),
            seed_digest: seed_digest.into(),
            height,
            width,
            modulus: material.modulus(),
            rounds: material
                .rounds()
                .iter()
                .map(|rk| RoundRecord {
                    permutation: rk.permutation.sources().to_vec(),
                    mask: rk.mask.pixels().to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_material(&self) -> Result<RoundMaterial> {
        let rounds = self
            .rounds
            .iter()
            .map(|r| {
                Ok(RoundKey {
                    permutation: PermutationVector::new(r.permutation.clone())?,
                    mask: ModImage::new(r.mask.clone(), self.height, self.width, self.modulus)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RoundMaterial::new(rounds)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("material file: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

// ---- atoms ----

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_samples(out: &mut Vec<u8>, pixels: &[u32], sb: usize) {
    for &p in pixels {
        out.extend_from_slice(&p.to_le_bytes()[..sb]);
    }
}

pub fn encode_atoms(atoms: &AttackAtoms) -> Vec<u8> {
    let g = atoms.modulus();
    let sb = sample_bytes(g);
    let (h, w) = atoms.ciphertext_dims();
    let (ph, pw) = atoms.plaintext_dims();
    let mut out = Vec::new();
    out.extend_from_slice(ATOMS_MAGIC);
    out.push(ATOMS_VERSION);
    for v in [atoms.ciphertext_len(), h, w] {
        put_u64(&mut out, v as u64);
    }
    put_u64(&mut out, g);
    put_u64(&mut out, ph as u64);
    put_u64(&mut out, pw as u64);
    out.push(u8::from(atoms.diffs().is_sparse()));
    put_samples(&mut out, atoms.base().pixels(), sb);
    match atoms.diffs() {
        AtomSet::Dense(v) => {
            for a in v {
                put_samples(&mut out, a.pixels(), sb);
            }
        }
        AtomSet::Sparse(v) => {
            for a in v {
                put_u64(&mut out, a.nnz() as u64);
                for &(i, val) in a.entries() {
                    put_u64(&mut out, i as u64);
                    out.extend_from_slice(&val.to_le_bytes()[..sb]);
                }
            }
        }
    }
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| Error::Format("atoms file is truncated".into()))?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn usize(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| Error::Format("count overflows usize".into()))
    }

    fn samples(&mut self, n: usize, sb: usize) -> Result<Vec<u32>> {
        let bytes = self.take(
            n.checked_mul(sb)
                .ok_or_else(|| Error::Format("atoms file declares an impossible size".into()))?,
        )?;
        Ok(bytes.chunks_exact(sb).map(read_sample).collect())
    }
}

pub fn decode_atoms(data: &[u8]) -> Result<AttackAtoms> {
    let mut cur = Cursor { data, pos: 0 };
    if cur.take(4)? != ATOMS_MAGIC {
        return Err(Error::Format("not an atoms file (bad magic)".into()));
    }
    let version = cur.u8()?;
    if version != ATOMS_VERSION {
        return Err(Error::Format(format!(
            "unsupported atoms file version {version}"
        )));
    }
    let ll = cur.usize()?;
    let (h, w) = (cur.usize()?, cur.usize()?);
    let g = cur.u64()?;
    let (ph, pw) = (cur.usize()?, cur.usize()?);
    if h.checked_mul(w) != Some(ll) {
        return Err(Error::Format(format!(
            "header LL={ll} disagrees with {h}x{w}"
        )));
    }
    let sb = sample_bytes(g);
    let pl = ph
        .checked_mul(pw)
        .ok_or_else(|| Error::Format("plaintext dims overflow".into()))?;
    let sparse = match cur.u8()? {
        0 => false,
        1 => true,
        f => return Err(Error::Format(format!("unknown density flag {f}"))),
    };
    let base = ModImage::new(cur.samples(pl, sb)?, ph, pw, g)?;
    let diffs = if sparse {
        let mut v = Vec::with_capacity(ll.min(1 << 20));
        for _ in 0..ll {
            let nnz = cur.usize()?;
            let mut entries = Vec::with_capacity(nnz.min(pl));
            for _ in 0..nnz {
                let i = cur.usize()?;
                let val = read_sample(cur.take(sb)?);
                entries.push((i, val));
            }
            v.push(SparseDifferential::new(ph, pw, g, entries)?);
        }
        AtomSet::Sparse(v)
    } else {
        let mut v = Vec::with_capacity(ll.min(1 << 20));
        for _ in 0..ll {
            v.push(ModImage::new(cur.samples(pl, sb)?, ph, pw, g)?);
        }
        AtomSet::Dense(v)
    };
    if cur.pos != data.len() {
        return Err(Error::Format("trailing bytes after atoms payload".into()));
    }
    AttackAtoms::new(base, diffs, (h, w))
}

pub fn save_atoms(path: &Path, atoms: &AttackAtoms) -> Result<()> {
    std::fs::write(path, encode_atoms(atoms))?;
    Ok(())
}

pub fn load_atoms(path: &Path) -> Result<AttackAtoms> {
    decode_atoms(&std::fs::read(path)?)
}

// ---- reports ----

/// One line-delimited JSON record per command.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub preset: Option<String>,
    pub schedule: Option<String>,
    pub height: usize,
    pub width: usize,
    pub modulus: u64,
    pub rounds: Option<usize>,
    pub seed_digest: Option<String>,
    pub queries: u64,
    pub nnz_total: Option<usize>,
    pub nnz_max: Option<usize>,
    pub success: bool,
    pub elapsed_ms: f64,
}

impl RunReport {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report fields are serializable")
    }

    pub fn emit(&self, out: &mut impl Write) -> Result<()> {
        writeln!(out, "{}", self.to_json_line())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_widths() {
        assert_eq!(sample_bytes(2), 1);
        assert_eq!(sample_bytes(4), 1);
        assert_eq!(sample_bytes(256), 1);
        assert_eq!(sample_bytes(257), 2);
        assert_eq!(sample_bytes(65536), 2);
        assert_eq!(sample_bytes(65537), 3);
        assert_eq!(sample_bytes(1 << 32), 4);
    }

    #[test]
    fn pgm_8bit_bytes() {
        let img = ModImage::new(vec![0, 1, 254, 255, 7, 8], 2, 3, 256).unwrap();
        let bytes = encode_pgm(&img).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 2\n255\n");
        assert_eq!(&bytes[11..], &[0, 1, 254, 255, 7, 8]);
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn pgm_16bit_is_big_endian() {
        let img = ModImage::new(vec![0x0102, 0xfffe], 1, 2, 65536).unwrap();
        let bytes = encode_pgm(&img).unwrap();
        assert_eq!(&bytes[bytes.len() - 4..], &[0x01, 0x02, 0xff, 0xfe]);
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
    }

    #[test]
    fn pgm_header_comments_and_errors() {
        let data = b"P5 # comment\n2 # w\n1\n255\n\x05\x06";
        let img = decode_pgm(data).unwrap();
        assert_eq!((img.dims(), img.pixels()), ((1, 2), &[5u32, 6][..]));
        assert!(matches!(
            decode_pgm(b"P2\n1 1\n255\n0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n1 1\n100\n0"),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            decode_pgm(b"P5\n2 2\n255\n0"),
            Err(Error::Format(_))
        ));
        let g4 = ModImage::zeros(1, 2, 4).unwrap();
        assert!(matches!(encode_pgm(&g4), Err(Error::Dimension(_))));
    }

    #[test]
    fn raw_is_little_endian() {
        let img = ModImage::new(vec![0x0102, 3], 1, 2, 65536).unwrap();
        assert_eq!(encode_raw(&img), vec![0x02, 0x01, 3, 0]);
        assert_eq!(decode_raw(&encode_raw(&img), 1, 2, 65536).unwrap(), img);
        assert!(matches!(
            decode_raw(&[1, 2, 3], 1, 2, 65536),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let img = ModImage::new(vec![1, 2, 3, 4, 5, 6], 2, 3, 256).unwrap();
        let text = encode_csv(&img);
        assert_eq!(text, "1,2,3\n4,5,6\n");
        assert_eq!(decode_csv(&text, None, 256).unwrap(), img);
        assert!(matches!(
            decode_csv("1,2\n3\n", None, 256),
            Err(Error::Format(_))
        ));
        assert!(decode_csv("1,300\n", None, 256).is_err());
    }

    #[test]
    fn atoms_round_trip_dense_and_sparse() {
        let base = ModImage::new(vec![5, 6, 7, 8], 2, 2, 65536).unwrap();
        let dense: Vec<ModImage> = (0..6)
            .map(|i| {
                ModImage::impulse(2, 2, 65536, i % 4)
                    .unwrap()
                    .scalar_mul(300 + i as u64)
                    .unwrap()
            })
            .collect();
        let atoms = AttackAtoms::new(base.clone(), AtomSet::Dense(dense.clone()), (2, 3)).unwrap();
        let bytes = encode_atoms(&atoms);
        assert_eq!(&bytes[..5], b"PCCA\x01");
        assert_eq!(u64::from_le_bytes(bytes[5..13].try_into().unwrap()), 6);
        assert_eq!(decode_atoms(&bytes).unwrap(), atoms);

        let sparse = AtomSet::Sparse(dense.iter().map(SparseDifferential::from_dense).collect());
        let atoms = AttackAtoms::new(base, sparse, (2, 3)).unwrap();
        let bytes = encode_atoms(&atoms);
        assert_eq!(decode_atoms(&bytes).unwrap(), atoms);
        assert!(matches!(
            decode_atoms(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode_atoms(b"NOPE\x01"), Err(Error::Format(_))));
    }

    #[test]
    fn material_json_round_trip() {
        use crate::keyschedule::{CounterStream, KeySeed};
        let seed = KeySeed::from_u64(3);
        let mut s = CounterStream::from_seed(&seed);
        let material = RoundMaterial::derive(&mut s, 2, 3, 4, 256).unwrap();
        let file = MaterialFile::from_material("zhou", "counter", &seed.fingerprint(), &material);
        let text = serde_json::to_string(&file).unwrap();
        let back: MaterialFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_material().unwrap(), material);
    }

    #[test]
    fn report_is_one_json_line() {
        let r = RunReport {
            command: "recover".into(),
            success: true,
            ..Default::default()
        };
        let line = r.to_json_line();
        assert!(!line.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["command"], "recover");
        assert_eq!(v["success"], true);
    }
}
