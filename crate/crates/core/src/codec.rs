//! Binary file formats.
//!
//! | file | layout (little-endian) |
//! |------|------------------------|
//! | mask | `"ULKM"`, u32 height, u32 width, u32 run count, runs as u32 (zero run first) |
//! | semantic probabilities | `"ULKP"`, u32 height, u32 width, u32 classes, f32 planar grid |
//! | segment ids | `"ULKS"`, u32 height, u32 width, u32 grid |
//! | image | binary PGM (`P5`) or PPM (`P6`), maxval 255 |
//! | label map | binary PGM, one class code per pixel |

use std::fs;
use std::path::Path;

use crate::class::LabelMap;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::mask::{rle_decode, rle_encode, BinaryMask, RunSequence};
use crate::opll::SemanticPrediction;

pub const MASK_MAGIC: &[u8; 4] = b"ULKM";
pub const PROB_MAGIC: &[u8; 4] = b"ULKP";
pub const SEGMENT_MAGIC: &[u8; 4] = b"ULKS";

type Decoded<T> = std::result::Result<T, String>;

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Decoded<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn magic(&mut self, magic: &[u8; 4]) -> Decoded<()> {
        let got = self.take(4)?;
        if got != magic {
            return Err(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(got),
                String::from_utf8_lossy(magic)
            ));
        }
        Ok(())
    }

    fn u32(&mut self) -> Decoded<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn finish(&self) -> Decoded<()> {
        if self.pos != self.bytes.len() {
            return Err(format!("{} trailing bytes", self.bytes.len() - self.pos));
        }
        Ok(())
    }
}

fn dim(v: usize) -> u32 {
    u32::try_from(v).expect("dimension exceeds u32")
}

pub fn encode_mask(mask: &BinaryMask) -> Vec<u8> {
    let runs = rle_encode(mask);
    let mut out = Vec::with_capacity(16 + 4 * runs.0.len());
    out.extend_from_slice(MASK_MAGIC);
    out.extend_from_slice(&dim(mask.height()).to_le_bytes());
    out.extend_from_slice(&dim(mask.width()).to_le_bytes());
    out.extend_from_slice(&dim(runs.0.len()).to_le_bytes());
    for r in runs.0 {
        out.extend_from_slice(&r.to_le_bytes());
    }
    out
}

pub fn decode_mask(bytes: &[u8]) -> Decoded<BinaryMask> {
    let mut r = Reader::new(bytes);
    r.magic(MASK_MAGIC)?;
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    let count = r.u32()? as usize;
    if count > bytes.len() / 4 {
        return Err(format!("run count {count} exceeds file size"));
    }
    let runs = (0..count).map(|_| r.u32()).collect::<Decoded<Vec<_>>>()?;
    r.finish()?;
    rle_decode(&RunSequence(runs), h, w).map_err(|e| e.to_string())
}

pub fn encode_probs(pred: &SemanticPrediction) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * pred.probs().len());
    out.extend_from_slice(PROB_MAGIC);
    out.extend_from_slice(&dim(pred.height()).to_le_bytes());
    out.extend_from_slice(&dim(pred.width()).to_le_bytes());
    out.extend_from_slice(&dim(pred.num_classes()).to_le_bytes());
    for &p in pred.probs() {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    out
}

pub fn decode_probs(bytes: &[u8]) -> Decoded<SemanticPrediction> {
    let mut r = Reader::new(bytes);
    r.magic(PROB_MAGIC)?;
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    let c = r.u32()? as usize;
    let n = h
        .checked_mul(w)
        .and_then(|v| v.checked_mul(c))
        .filter(|&n| n <= bytes.len() / 4)
        .ok_or_else(|| format!("grid {h}x{w}x{c} exceeds file size"))?;
    let data = r.take(n * 4)?;
    r.finish()?;
    let probs = data
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    SemanticPrediction::new(h, w, c, probs).map_err(|e| e.to_string())
}

pub fn encode_segments(height: usize, width: usize, ids: &[u32]) -> Vec<u8> {
    assert_eq!(ids.len(), height * width);
    let mut out = Vec::with_capacity(12 + 4 * ids.len());
    out.extend_from_slice(SEGMENT_MAGIC);
    out.extend_from_slice(&dim(height).to_le_bytes());
    out.extend_from_slice(&dim(width).to_le_bytes());
    for id in ids {
        out.extend_from_slice(&id.to_le_bytes());
    }
    out
}

pub fn decode_segments(bytes: &[u8]) -> Decoded<(usize, usize, Vec<u32>)> {
    let mut r = Reader::new(bytes);
    r.magic(SEGMENT_MAGIC)?;
    let h = r.u32()? as usize;
    let w = r.u32()? as usize;
    let n = h
        .checked_mul(w)
        .filter(|&n| n <= bytes.len() / 4)
        .ok_or_else(|| format!("grid {h}x{w} exceeds file size"))?;
    let ids = (0..n).map(|_| r.u32()).collect::<Decoded<Vec<_>>>()?;
    r.finish()?;
    Ok((h, w, ids))
}

pub fn encode_pnm(image: &Image) -> Vec<u8> {
    let tag = if image.channels() == 3 { "P6" } else { "P5" };
    let mut out = format!("{tag}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.samples());
    out
}

pub fn decode_pnm(bytes: &[u8]) -> Decoded<Image> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?);
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let channels = match fields[0] {
        "P5" => 1,
        "P6" => 3,
        other => return Err(format!("unsupported netpbm type {other:?}")),
    };
    let parse = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format!("bad {what} {s:?}"));
    let width = parse(fields[1], "width")?;
    let height = parse(fields[2], "height")?;
    if parse(fields[3], "maxval")? != 255 {
        return Err(format!("maxval {} unsupported, expected 255", fields[3]));
    }
    let n = height * width * channels;
    if bytes.len() < pos || bytes.len() - pos != n {
        return Err(format!(
            "raster holds {} bytes, expected {n}",
            bytes.len().saturating_sub(pos)
        ));
    }
    Image::from_samples(height, width, channels, bytes[pos..].to_vec()).map_err(|e| e.to_string())
}

pub fn encode_label_map(map: &LabelMap) -> Vec<u8> {
    let img = Image::from_samples(map.height(), map.width(), 1, map.codes().to_vec())
        .expect("label map is a valid gray image");
    encode_pnm(&img)
}

pub fn decode_label_map(bytes: &[u8]) -> Decoded<LabelMap> {
    let img = decode_pnm(bytes)?;
    if img.channels() != 1 {
        return Err("label maps must be single-channel PGM".into());
    }
    Ok(LabelMap::from_codes(
        img.height(),
        img.width(),
        img.samples().to_vec(),
    ))
}

fn read_with<T>(path: &Path, decode: impl FnOnce(&[u8]) -> Decoded<T>) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|d| Error::format(path, d))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_mask(path: &Path) -> Result<BinaryMask> {
    read_with(path, decode_mask)
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<()> {
    write_bytes(path, &encode_mask(mask))
}

pub fn read_probs(path: &Path) -> Result<SemanticPrediction> {
    read_with(path, decode_probs)
}

pub fn write_probs(path: &Path, pred: &SemanticPrediction) -> Result<()> {
    write_bytes(path, &encode_probs(pred))
}

pub fn read_image(path: &Path) -> Result<Image> {
    read_with(path, decode_pnm)
}

pub fn write_image(path: &Path, image: &Image) -> Result<()> {
    write_bytes(path, &encode_pnm(image))
}

pub fn read_label_map(path: &Path) -> Result<LabelMap> {
    read_with(path, decode_label_map)
}

pub fn write_label_map(path: &Path, map: &LabelMap) -> Result<()> {
    write_bytes(path, &encode_label_map(map))
}

pub fn read_segments(path: &Path) -> Result<(usize, usize, Vec<u32>)> {
    read_with(path, decode_segments)
}

pub fn write_segments(path: &Path, height: usize, width: usize, ids: &[u32]) -> Result<()> {
    write_bytes(path, &encode_segments(height, width, ids))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_golden_bytes() {
        let bytes = encode_mask(&BinaryMask::from_rows(&["0110"]));
        #[rustfmt::skip]
        let golden: &[u8] = &[
            b'U', b'L', b'K', b'M',
            1, 0, 0, 0,
            4, 0, 0, 0,
            3, 0, 0, 0,
            1, 0, 0, 0, 2, 0, 0, 0, 1, 0, 0, 0,
        ];
        assert_eq!(bytes, golden);
        assert_eq!(
            decode_mask(golden).unwrap(),
            BinaryMask::from_rows(&["0110"])
        );
    }

    #[test]
    fn mask_decode_rejects_garbage() {
        let good = encode_mask(&BinaryMask::full(2, 2));
        assert!(decode_mask(&good[..good.len() - 1]).is_err());
        let mut trailing = good.clone();
        trailing.push(0);
        assert!(decode_mask(&trailing).is_err());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(decode_mask(&bad_magic).unwrap_err().contains("magic"));
        // runs [0, 3] on a 2x2 frame
        let mut short = good;
        short[16..20].copy_from_slice(&0u32.to_le_bytes());
        short[20..24].copy_from_slice(&3u32.to_le_bytes());
        assert!(decode_mask(&short).unwrap_err().contains("sum"));
    }

    #[test]
    fn pnm_golden_bytes() {
        let gray = Image::from_samples(1, 2, 1, vec![7, 200]).unwrap();
        assert_eq!(encode_pnm(&gray), b"P5\n2 1\n255\n\x07\xc8");
        let rgb = Image::from_samples(1, 1, 3, vec![1, 2, 3]).unwrap();
        assert_eq!(encode_pnm(&rgb), b"P6\n1 1\n255\n\x01\x02\x03");
        assert_eq!(decode_pnm(&encode_pnm(&rgb)).unwrap(), rgb);
    }

    #[test]
    fn pnm_header_comments() {
        let img = decode_pnm(b"P5 # gray\n# another\n2 1\n255\n\x0a\x0b").unwrap();
        assert_eq!(img.samples(), &[10, 11]);
        assert!(decode_pnm(b"P5\n2 1\n65535\n\0\0\0\0").is_err());
        assert!(decode_pnm(b"P3\n1 1\n255\n1 2 3").is_err());
    }

    #[test]
    fn probs_golden_bytes() {
        let pred = SemanticPrediction::new(1, 1, 2, vec![0.25, 0.75]).unwrap();
        let bytes = encode_probs(&pred);
        let mut golden = b"ULKP".to_vec();
        for v in [1u32, 1, 2] {
            golden.extend_from_slice(&v.to_le_bytes());
        }
        golden.extend_from_slice(&0.25f32.to_le_bytes());
        golden.extend_from_slice(&0.75f32.to_le_bytes());
        assert_eq!(bytes, golden);
        assert_eq!(decode_probs(&bytes).unwrap(), pred);
    }

    #[test]
    fn segments_round_trip() {
        let bytes = encode_segments(1, 3, &[0, 1, 65536]);
        assert_eq!(&bytes[..4], b"ULKS");
        assert_eq!(decode_segments(&bytes).unwrap(), (1, 3, vec![0, 1, 65536]));
    }

    #[test]
    fn file_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.ulkm");
        let err = read_mask(&missing).unwrap_err();
        assert!(err.to_string().contains("nope.ulkm"));
        let bad = dir.path().join("bad.ulkm");
        std::fs::write(&bad, b"ULKM").unwrap();
        assert!(read_mask(&bad)
            .unwrap_err()
            .to_string()
            .contains("bad.ulkm"));
    }
}
