//! Dense binary masks and their run-length form.
//!
//! A [`BinaryMask`] stores one bit per pixel in row-major order, packed into
//! 64-bit words. Bits past `height * width` in the last word are always zero,
//! so derived equality and popcount-based area stay exact.
//!
//! The run-length form ([`RunSequence`]) alternates zero and one runs over the
//! row-major scan, starting with a zero run that may be empty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const WORD_BITS: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    words: Vec<u64>,
}

/// Pointwise binary operation on two masks of equal size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MaskOp {
    And,
    Or,
    /// `a AND NOT b`
    Diff,
}

/// Row-major run lengths, zero run first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RunSequence(pub Vec<u32>);

impl RunSequence {
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&r| r as u64).sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }
}

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

impl BinaryMask {
    pub fn new(height: usize, width: usize) -> Self {
        BinaryMask {
            height,
            width,
            words: vec![0; words_for(height * width)],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        let mut mask = BinaryMask {
            height,
            width,
            words: vec![u64::MAX; words_for(height * width)],
        };
        mask.clear_tail();
        mask
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = BinaryMask::new(height, width);
        for y in 0..height {
            for x in 0..width {
                if f(y, x) {
                    mask.set_index(y * width + x, true);
                }
            }
        }
        mask
    }

    /// Builds a mask from row-major booleans. Panics if `bits.len() != height * width`.
    pub fn from_bools(height: usize, width: usize, bits: &[bool]) -> Self {
        assert_eq!(
            bits.len(),
            height * width,
            "bit count must equal height*width"
        );
        let mut mask = BinaryMask::new(height, width);
        for (i, _) in bits.iter().enumerate().filter(|(_, &b)| b) {
            mask.set_index(i, true);
        }
        mask
    }

    /// Parses rows like `"0110"`; every row must have the same length.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let bits: Vec<bool> = rows
            .iter()
            .flat_map(|r| {
                assert_eq!(r.len(), width, "ragged mask rows");
                r.bytes().map(|b| b == b'1')
            })
            .collect();
        BinaryMask::from_bools(height, width, &bits)
    }

    /// Filled axis-aligned rectangle `[y0, y1) x [x0, x1)`, clipped to the frame.
    pub fn rect(height: usize, width: usize, y0: usize, x0: usize, y1: usize, x1: usize) -> Self {
        let (y1, x1) = (y1.min(height), x1.min(width));
        BinaryMask::from_fn(height, width, |y, x| y >= y0 && y < y1 && x >= x0 && x < x1)
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

    pub fn len(&self) -> usize {
        self.height * self.width
    }

    pub fn get(&self, y: usize, x: usize) -> bool {
        debug_assert!(y < self.height && x < self.width);
        self.get_index(y * self.width + x)
    }

    pub fn get_index(&self, i: usize) -> bool {
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    pub fn set(&mut self, y: usize, x: usize, value: bool) {
        debug_assert!(y < self.height && x < self.width);
        self.set_index(y * self.width + x, value);
    }

    pub fn set_index(&mut self, i: usize, value: bool) {
        assert!(i < self.len(), "pixel index {i} out of range");
        let bit = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= bit;
        } else {
            self.words[i / WORD_BITS] &= !bit;
        }
    }

    /// Number of set pixels.
    pub fn area(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn check_dims(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }

    fn zip_words(&self, other: &BinaryMask, f: impl Fn(u64, u64) -> u64) -> Result<BinaryMask> {
        self.check_dims(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(BinaryMask {
            height: self.height,
            width: self.width,
            words,
        })
    }

    pub fn apply(&self, other: &BinaryMask, op: MaskOp) -> Result<BinaryMask> {
        match op {
            MaskOp::And => self.and(other),
            MaskOp::Or => self.or(other),
            MaskOp::Diff => self.diff(other),
        }
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_words(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_words(other, |a, b| a | b)
    }

    pub fn diff(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_words(other, |a, b| a & !b)
    }

    pub fn complement(&self) -> BinaryMask {
        let mut out = BinaryMask {
            height: self.height,
            width: self.width,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.clear_tail();
        out
    }

    pub fn or_assign(&mut self, other: &BinaryMask) -> Result<()> {
        self.check_dims(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    pub fn diff_assign(&mut self, other: &BinaryMask) -> Result<()> {
        self.check_dims(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
        Ok(())
    }

    /// `area(self AND other)` without allocating.
    pub fn intersection_area(&self, other: &BinaryMask) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum())
    }

    pub fn union_area(&self, other: &BinaryMask) -> Result<usize> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum())
    }

    pub fn is_subset_of(&self, other: &BinaryMask) -> Result<bool> {
        self.check_dims(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0))
    }

    pub fn is_disjoint(&self, other: &BinaryMask) -> Result<bool> {
        Ok(self.intersection_area(other)? == 0)
    }

    /// Union of any number of masks; an empty iterator yields an empty mask.
    pub fn union_all<'a>(
        height: usize,
        width: usize,
        masks: impl IntoIterator<Item = &'a BinaryMask>,
    ) -> Result<BinaryMask> {
        let mut acc = BinaryMask::new(height, width);
        for m in masks {
            acc.or_assign(m)?;
        }
        Ok(acc)
    }

    /// Row-major indices of set pixels.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * WORD_BITS + bit)
            })
        })
    }

    /// Inclusive-exclusive bounding box `(y0, x0, y1, x1)` of the set pixels.
    pub fn bbox(&self) -> Option<(usize, usize, usize, usize)> {
        let mut it = self.ones();
        let first = it.next()?;
        let (mut y0, mut x0) = (first / self.width, first % self.width);
        let (mut y1, mut x1) = (y0, x0);
        for i in it {
            let (y, x) = (i / self.width, i % self.width);
            y0 = y0.min(y);
            y1 = y1.max(y);
            x0 = x0.min(x);
            x1 = x1.max(x);
        }
        Some((y0, x0, y1 + 1, x1 + 1))
    }

    /// Chebyshev-radius erosion; pixels outside the frame count as background.
    pub fn erode(&self, radius: usize) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let r = radius as isize;
        BinaryMask::from_fn(self.height, self.width, |y, x| {
            (-r..=r).all(|dy| {
                (-r..=r).all(|dx| {
                    let (yy, xx) = (y as isize + dy, x as isize + dx);
                    yy >= 0
                        && xx >= 0
                        && (yy as usize) < self.height
                        && (xx as usize) < self.width
                        && self.get(yy as usize, xx as usize)
                })
            })
        })
    }

    /// Chebyshev-radius dilation, clipped to the frame.
    pub fn dilate(&self, radius: usize) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let mut out = BinaryMask::new(self.height, self.width);
        for i in self.ones() {
            let (y, x) = (i / self.width, i % self.width);
            let (ylo, yhi) = (y.saturating_sub(radius), (y + radius + 1).min(self.height));
            let (xlo, xhi) = (x.saturating_sub(radius), (x + radius + 1).min(self.width));
            for yy in ylo..yhi {
                for xx in xlo..xhi {
                    out.set(yy, xx, true);
                }
            }
        }
        out
    }

    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        let union = self.union_area(other)?;
        if union == 0 {
            return Ok(0.0);
        }
        Ok(self.intersection_area(other)? as f64 / union as f64)
    }

    fn clear_tail(&mut self) {
        let len = self.len();
        let used = len % WORD_BITS;
        if used != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << used) - 1;
            }
        }
    }

    /// First index `>= from` whose bit differs from `value`, or `len()`.
    fn next_change(&self, from: usize, value: bool) -> usize {
        let len = self.len();
        if from >= len {
            return len;
        }
        let mut wi = from / WORD_BITS;
        let flip = if value { u64::MAX } else { 0 };
        let mut w = (self.words[wi] ^ flip) & (u64::MAX << (from % WORD_BITS));
        loop {
            if w != 0 {
                return (wi * WORD_BITS + w.trailing_zeros() as usize).min(len);
            }
            wi += 1;
            if wi == self.words.len() {
                return len;
            }
            w = self.words[wi] ^ flip;
        }
    }

    pub fn to_rle(&self) -> RunSequence {
        rle_encode(self)
    }
}

/// Encodes a mask as canonical zero-first runs.
pub fn rle_encode(mask: &BinaryMask) -> RunSequence {
    let len = mask.len();
    let mut runs = Vec::new();
    let mut pos = 0;
    let mut value = false;
    loop {
        let end = mask.next_change(pos, value);
        runs.push((end - pos) as u32);
        if end == len {
            break;
        }
        pos = end;
        value = !value;
    }
    RunSequence(runs)
}

/// Inverse of [`rle_encode`]. Zero-length runs anywhere are accepted.
pub fn rle_decode(runs: &RunSequence, height: usize, width: usize) -> Result<BinaryMask> {
    let expected = (height * width) as u64;
    let sum = runs.total();
    if sum != expected {
        return Err(Error::SumMismatch { sum, expected });
    }
    let mut mask = BinaryMask::new(height, width);
    let mut pos = 0usize;
    for (k, &run) in runs.0.iter().enumerate() {
        let run = run as usize;
        if k % 2 == 1 {
            for i in pos..pos + run {
                mask.set_index(i, true);
            }
        }
        pos += run;
    }
    Ok(mask)
}

impl std::fmt::Debug for BinaryMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "BinaryMask({}x{}, area {})",
            self.height,
            self.width,
            self.area()
        )?;
        if self.len() <= 256 {
            for y in 0..self.height {
                f.write_str("\n  ")?;
                for x in 0..self.width {
                    f.write_str(if self.get(y, x) { "1" } else { "0" })?;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn runs(v: &[u32]) -> RunSequence {
        RunSequence(v.to_vec())
    }

    #[test]
    fn encode_edge_cases() {
        assert_eq!(rle_encode(&BinaryMask::new(2, 2)), runs(&[4]));
        assert_eq!(rle_encode(&BinaryMask::full(2, 2)), runs(&[0, 4]));
        assert_eq!(
            rle_encode(&BinaryMask::from_rows(&["0110"])),
            runs(&[1, 2, 1])
        );
    }

    #[test]
    fn decode_examples() {
        assert_eq!(
            rle_decode(&runs(&[4]), 2, 2).unwrap(),
            BinaryMask::new(2, 2)
        );
        assert_eq!(
            rle_decode(&runs(&[1, 2, 1]), 1, 4).unwrap(),
            BinaryMask::from_rows(&["0110"])
        );
        assert!(matches!(
            rle_decode(&runs(&[3]), 2, 2),
            Err(Error::SumMismatch {
                sum: 3,
                expected: 4
            })
        ));
    }

    #[test]
    fn algebra_examples() {
        let a = BinaryMask::from_rows(&["0110"]);
        let b = BinaryMask::from_rows(&["0011"]);
        assert!(a.and(&a.complement()).unwrap().is_empty());
        assert_eq!(a.and(&b).unwrap(), BinaryMask::from_rows(&["0010"]));
        assert_eq!(a.area(), 2);
        assert_eq!(
            a.apply(&b, MaskOp::Or).unwrap(),
            BinaryMask::from_rows(&["0111"])
        );
        assert_eq!(
            a.apply(&b, MaskOp::Diff).unwrap(),
            BinaryMask::from_rows(&["0100"])
        );
        assert!(matches!(
            a.and(&BinaryMask::new(2, 2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn runs_crossing_word_boundaries() {
        let mask = BinaryMask::from_fn(3, 50, |y, x| (y * 50 + x) % 70 < 35);
        let enc = rle_encode(&mask);
        assert_eq!(enc.0, vec![0, 35, 35, 35, 35, 10]);
        assert_eq!(rle_decode(&enc, 3, 50).unwrap(), mask);
    }

    #[test]
    fn complement_keeps_tail_clear() {
        let m = BinaryMask::new(3, 3).complement();
        assert_eq!(m.area(), 9);
        assert_eq!(m, BinaryMask::full(3, 3));
    }

    #[test]
    fn erosion_of_square() {
        let sq = BinaryMask::rect(12, 12, 1, 1, 11, 11);
        assert_eq!(sq.area(), 100);
        let e = sq.erode(1);
        assert_eq!(e, BinaryMask::rect(12, 12, 2, 2, 10, 10));
        assert_eq!(e.area(), 64);
        assert_eq!(e.dilate(1), sq);
    }

    #[test]
    fn bbox_and_ones() {
        let m = BinaryMask::from_rows(&["0000", "0100", "0110"]);
        assert_eq!(m.bbox(), Some((1, 1, 3, 3)));
        assert_eq!(m.ones().collect::<Vec<_>>(), vec![5, 9, 10]);
        assert_eq!(BinaryMask::new(2, 2).bbox(), None);
    }

    fn arb_mask() -> impl Strategy<Value = BinaryMask> {
        (1usize..=16, 1usize..=16).prop_flat_map(|(h, w)| {
            proptest::collection::vec(any::<bool>(), h * w)
                .prop_map(move |bits| BinaryMask::from_bools(h, w, &bits))
        })
    }

    fn arb_pair() -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
        (1usize..=16, 1usize..=16).prop_flat_map(|(h, w)| {
            (
                proptest::collection::vec(any::<bool>(), h * w),
                proptest::collection::vec(any::<bool>(), h * w),
            )
                .prop_map(move |(a, b)| {
                    (
                        BinaryMask::from_bools(h, w, &a),
                        BinaryMask::from_bools(h, w, &b),
                    )
                })
        })
    }

    proptest! {
        #[test]
        fn rle_round_trip(m in arb_mask()) {
            let enc = rle_encode(&m);
            prop_assert_eq!(enc.total(), m.len() as u64);
            prop_assert!(enc.0[1..].iter().all(|&r| r > 0), "interior zero run");
            prop_assert_eq!(rle_decode(&enc, m.height(), m.width()).unwrap(), m);
        }

        #[test]
        fn inclusion_exclusion((a, b) in arb_pair()) {
            let and = a.and(&b).unwrap().area();
            let or = a.or(&b).unwrap().area();
            prop_assert_eq!(and + or, a.area() + b.area());
            prop_assert_eq!(and, a.intersection_area(&b).unwrap());
            prop_assert_eq!(or, a.union_area(&b).unwrap());
        }

        #[test]
        fn diff_is_and_not((a, b) in arb_pair()) {
            prop_assert_eq!(a.diff(&b).unwrap(), a.and(&b.complement()).unwrap());
        }
    }
}
