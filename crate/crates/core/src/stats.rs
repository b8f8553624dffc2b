use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::scan::Scan;

/// Exact per-class point counts, keyed by semantic id.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct ClassHistogram {
    counts: BTreeMap<u16, u64>,
}

impl ClassHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_scan(scan: &Scan) -> Self {
        let mut h = Self::new();
        h.add_scan(scan);
        h
    }

    pub fn add_scan(&mut self, scan: &Scan) {
        for label in scan.labels() {
            *self.counts.entry(label.semantic()).or_default() += 1;
        }
    }

    pub fn merge(&mut self, other: &ClassHistogram) {
        for (&class, &n) in &other.counts {
            *self.counts.entry(class).or_default() += n;
        }
    }

    pub fn get(&self, class: u16) -> u64 {
        self.counts.get(&class).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u16, u64)> + '_ {
        self.counts.iter().map(|(&c, &n)| (c, n))
    }
}

impl fmt::Display for ClassHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (class, n) in self.iter() {
            writeln!(f, "{class}\t{n}")?;
        }
        write!(f, "total\t{}", self.total())
    }
}

/// Per-class point counts summed over `scans`.
pub fn report_stats<'a>(scans: impl IntoIterator<Item = &'a Scan>) -> ClassHistogram {
    let mut h = ClassHistogram::new();
    for scan in scans {
        h.add_scan(scan);
    }
    h
}
