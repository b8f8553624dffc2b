//! The labelled point array every operator consumes and produces.

use crate::error::{Error, Result};
use crate::geometry::{Mask, Point};

/// Per-point label word: semantic id in the low 16 bits, instance id in the
/// high 16 bits. Operators read the semantic half and carry the full word.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u32);

impl Label {
    /// Label written when a scan has no label file.
    pub const UNLABELED: Label = Label(0);

    pub fn from_parts(semantic: u16, instance: u16) -> Self {
        Label(((instance as u32) << 16) | semantic as u32)
    }

    #[inline]
    pub fn semantic(self) -> u16 {
        (self.0 & 0xFFFF) as u16
    }

    #[inline]
    pub fn instance(self) -> u16 {
        (self.0 >> 16) as u16
    }
}

/// Points with one label each. The two arrays always have equal length.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scan {
    points: Vec<Point>,
    labels: Vec<Label>,
}

impl Scan {
    pub fn new(points: Vec<Point>, labels: Vec<Label>) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "labels",
                left: labels.len(),
                right: points.len(),
            });
        }
        Ok(Self { points, labels })
    }

    /// Scan whose every point carries [`Label::UNLABELED`].
    pub fn unlabeled(points: Vec<Point>) -> Self {
        let labels = vec![Label::UNLABELED; points.len()];
        Self { points, labels }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            points: Vec::with_capacity(n),
            labels: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn into_parts(self) -> (Vec<Point>, Vec<Label>) {
        (self.points, self.labels)
    }

    pub fn push(&mut self, point: Point, label: Label) {
        self.points.push(point);
        self.labels.push(label);
    }

    /// Appends `other` after the points already present.
    pub fn extend_from(&mut self, other: &Scan) {
        self.points.extend_from_slice(&other.points);
        self.labels.extend_from_slice(&other.labels);
    }

    /// Appends `points` with a parallel label slice.
    ///
    /// # Panics
    /// If the lengths differ.
    pub fn extend_parts(&mut self, points: &[Point], labels: &[Label]) {
        assert_eq!(points.len(), labels.len(), "points/labels length mismatch");
        self.points.extend_from_slice(points);
        self.labels.extend_from_slice(labels);
    }

    /// Keeps the points whose flag is set, in order, labels alongside.
    ///
    /// # Panics
    /// If the mask was built from an array of a different length.
    pub fn select(&self, mask: &Mask) -> Scan {
        assert_eq!(mask.len(), self.len(), "mask length mismatch");
        let n = mask.count();
        let mut out = Scan::with_capacity(n);
        for ((p, l), &keep) in self.points.iter().zip(&self.labels).zip(mask.flags()) {
            if keep {
                out.points.push(*p);
                out.labels.push(*l);
            }
        }
        out
    }

    /// Applies `f` to every point; labels are copied unchanged.
    pub fn map_points(&self, f: impl FnMut(&Point) -> Point) -> Scan {
        Scan {
            points: self.points.iter().map(f).collect(),
            labels: self.labels.clone(),
        }
    }
}
