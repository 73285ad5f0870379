use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label code for a pixel that carries a prediction but no trusted class.
pub const UNCERTAIN: u8 = 254;
/// Label code for a pixel excluded from training and evaluation.
pub const IGNORE: u8 = 255;
/// Largest number of classes representable in a `u8` label map.
pub const MAX_CLASSES: usize = UNCERTAIN as usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u8);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for ClassId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Stuff,
    Thing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub name: String,
    pub kind: ClassKind,
}

/// Ordered class table; a class id is its position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassTable {
    classes: Vec<ClassInfo>,
}

impl ClassTable {
    pub fn new(classes: Vec<ClassInfo>) -> Result<Self> {
        if classes.is_empty() || classes.len() > MAX_CLASSES {
            return Err(Error::ConfigInvalid(format!(
                "class table must hold 1..={MAX_CLASSES} classes, got {}",
                classes.len()
            )));
        }
        Ok(ClassTable { classes })
    }

    /// Builds a table from `(name, kind)` pairs.
    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, ClassKind)>) -> Result<Self> {
        ClassTable::new(
            pairs
                .into_iter()
                .map(|(name, kind)| ClassInfo {
                    name: name.to_string(),
                    kind,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn contains(&self, id: ClassId) -> bool {
        id.index() < self.classes.len()
    }

    pub fn get(&self, id: ClassId) -> Option<&ClassInfo> {
        self.classes.get(id.index())
    }

    pub fn kind(&self, id: ClassId) -> Option<ClassKind> {
        self.get(id).map(|c| c.kind)
    }

    pub fn is_thing(&self, id: ClassId) -> bool {
        self.kind(id) == Some(ClassKind::Thing)
    }

    pub fn is_stuff(&self, id: ClassId) -> bool {
        self.kind(id) == Some(ClassKind::Stuff)
    }

    pub fn ids(&self) -> impl Iterator<Item = ClassId> + '_ {
        (0..self.classes.len()).map(|i| ClassId(i as u8))
    }

    pub fn things(&self) -> BTreeSet<ClassId> {
        self.ids().filter(|&c| self.is_thing(c)).collect()
    }

    pub fn stuff(&self) -> BTreeSet<ClassId> {
        self.ids().filter(|&c| self.is_stuff(c)).collect()
    }

    pub fn name(&self, id: ClassId) -> &str {
        self.get(id).map_or("?", |c| c.name.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ClassId, &ClassInfo)> {
        self.classes
            .iter()
            .enumerate()
            .map(|(i, c)| (ClassId(i as u8), c))
    }
}

/// Per-pixel `u8` class map. Codes below the class count are classes;
/// [`UNCERTAIN`] and [`IGNORE`] are the two reserved codes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    codes: Vec<u8>,
}

/// Decoded view of one label-map cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PixelLabel {
    Certain(ClassId),
    Uncertain,
    Ignore,
}

impl PixelLabel {
    pub fn code(self) -> u8 {
        match self {
            PixelLabel::Certain(c) => c.0,
            PixelLabel::Uncertain => UNCERTAIN,
            PixelLabel::Ignore => IGNORE,
        }
    }

    pub fn from_code(code: u8) -> Self {
        match code {
            UNCERTAIN => PixelLabel::Uncertain,
            IGNORE => PixelLabel::Ignore,
            c => PixelLabel::Certain(ClassId(c)),
        }
    }

    pub fn class(self) -> Option<ClassId> {
        match self {
            PixelLabel::Certain(c) => Some(c),
            _ => None,
        }
    }
}

impl LabelMap {
    pub fn filled(height: usize, width: usize, label: PixelLabel) -> Self {
        LabelMap {
            height,
            width,
            codes: vec![label.code(); height * width],
        }
    }

    pub fn from_codes(height: usize, width: usize, codes: Vec<u8>) -> Self {
        assert_eq!(
            codes.len(),
            height * width,
            "code count must equal height*width"
        );
        LabelMap {
            height,
            width,
            codes,
        }
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

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn get(&self, i: usize) -> PixelLabel {
        PixelLabel::from_code(self.codes[i])
    }

    pub fn set(&mut self, i: usize, label: PixelLabel) {
        self.codes[i] = label.code();
    }

    pub fn class_at(&self, i: usize) -> Option<ClassId> {
        self.get(i).class()
    }

    pub fn count(&self, label: PixelLabel) -> usize {
        let code = label.code();
        self.codes.iter().filter(|&&c| c == code).count()
    }

    pub fn class_mask(&self, class: ClassId) -> crate::mask::BinaryMask {
        crate::mask::BinaryMask::from_fn(self.height, self.width, |y, x| {
            self.codes[y * self.width + x] == class.0
        })
    }
}
