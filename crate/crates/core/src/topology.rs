//! Qubit lattice, couplers and coupler-activation patterns.
//!
//! Qubits sit on a `rows x cols` rectangular lattice and are numbered row-major
//! (`linear = row * cols + col`). Every nearest-neighbour pair carries a coupler; a coupler
//! is enabled when both endpoints are active and the pair is not listed as broken.
//!
//! Enabled couplers are split into four matchings A, B, C and D by parity striping:
//! vertical couplers take A when the upper qubit's row is even and B otherwise, horizontal
//! couplers take C when the left qubit's column is even and D otherwise.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitId {
    pub row: usize,
    pub col: usize,
    pub linear: usize,
}

impl QubitId {
    pub fn new(row: usize, col: usize, cols: usize) -> Self {
        Self { row, col, linear: row * cols + col }
    }

    pub fn from_linear(linear: usize, cols: usize) -> Self {
        Self { row: linear / cols, col: linear % cols, linear }
    }

    pub fn is_neighbor(&self, other: &QubitId) -> bool {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col) == 1
    }
}

/// Coupler-activation pattern label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    A,
    B,
    C,
    D,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::A, Pattern::B, Pattern::C, Pattern::D];

    pub fn as_char(self) -> char {
        match self {
            Pattern::A => 'A',
            Pattern::B => 'B',
            Pattern::C => 'C',
            Pattern::D => 'D',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c.to_ascii_uppercase() {
            'A' => Some(Pattern::A),
            'B' => Some(Pattern::B),
            'C' => Some(Pattern::C),
            'D' => Some(Pattern::D),
            _ => None,
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coupler {
    pub a: QubitId,
    pub b: QubitId,
    pub pattern: Option<Pattern>,
    pub enabled: bool,
}

impl Coupler {
    pub fn key(&self) -> (usize, usize) {
        (self.a.linear, self.b.linear)
    }

    /// Vertical couplers join qubits in the same column.
    pub fn is_vertical(&self) -> bool {
        self.a.col == self.b.col
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridTopology {
    pub rows: usize,
    pub cols: usize,
    pub active: BTreeSet<usize>,
    pub excluded: BTreeSet<usize>,
    pub broken: BTreeSet<(usize, usize)>,
    /// Every nearest-neighbour pair of the lattice, sorted by `(a.linear, b.linear)`.
    pub couplers: Vec<Coupler>,
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Builds the lattice with `excluded` qubits removed and `broken` couplers disabled.
pub fn build_grid(
    rows: usize,
    cols: usize,
    excluded: &BTreeSet<usize>,
    broken: &BTreeSet<(usize, usize)>,
) -> Result<GridTopology> {
    if rows == 0 || cols == 0 {
        return Err(Error::Topology(format!("lattice must be at least 1x1, got {rows}x{cols}")));
    }
    let size = rows * cols;
    if let Some(q) = excluded.iter().find(|&&q| q >= size) {
        return Err(Error::Topology(format!("excluded qubit {q} outside {rows}x{cols} lattice")));
    }
    let mut broken_canon = BTreeSet::new();
    for &(a, b) in broken {
        if a >= size || b >= size {
            return Err(Error::Topology(format!(
                "broken coupler ({a}, {b}) outside {rows}x{cols} lattice"
            )));
        }
        let (qa, qb) = (QubitId::from_linear(a, cols), QubitId::from_linear(b, cols));
        if !qa.is_neighbor(&qb) {
            return Err(Error::Topology(format!(
                "broken coupler ({a}, {b}) joins non-adjacent qubits"
            )));
        }
        broken_canon.insert(ordered(a, b));
    }

    let active: BTreeSet<usize> = (0..size).filter(|q| !excluded.contains(q)).collect();
    let mut couplers = Vec::new();
    for linear in 0..size {
        let q = QubitId::from_linear(linear, cols);
        // right neighbour has linear+1, lower neighbour linear+cols; both keep a < b
        let mut neighbors = Vec::with_capacity(2);
        if q.col + 1 < cols {
            neighbors.push(QubitId::new(q.row, q.col + 1, cols));
        }
        if q.row + 1 < rows {
            neighbors.push(QubitId::new(q.row + 1, q.col, cols));
        }
        for n in neighbors {
            let enabled = active.contains(&q.linear)
                && active.contains(&n.linear)
                && !broken_canon.contains(&(q.linear, n.linear));
            couplers.push(Coupler { a: q, b: n, pattern: None, enabled });
        }
    }
    couplers.sort_by_key(Coupler::key);

    Ok(GridTopology {
        rows,
        cols,
        active,
        excluded: excluded.clone(),
        broken: broken_canon,
        couplers,
    })
}

/// Labels every enabled coupler with its parity-striped pattern.
pub fn assign_patterns(topology: &GridTopology) -> Result<GridTopology> {
    let mut out = topology.clone();
    for c in out.couplers.iter_mut() {
        c.pattern = if !c.enabled {
            None
        } else if c.is_vertical() {
            Some(if c.a.row % 2 == 0 { Pattern::A } else { Pattern::B })
        } else {
            Some(if c.a.col % 2 == 0 { Pattern::C } else { Pattern::D })
        };
    }
    out.check_patterns()?;
    Ok(out)
}

impl GridTopology {
    /// Convenience: full lattice without exclusions, patterns assigned.
    pub fn rectangular(rows: usize, cols: usize) -> Result<Self> {
        assign_patterns(&build_grid(rows, cols, &BTreeSet::new(), &BTreeSet::new())?)
    }

    /// 60 active qubits of an 11x6 lattice with 99 enabled couplers.
    ///
    /// Six boundary qubits are excluded and one interior coupler is broken; the column
    /// cut between columns 2 and 3 is crossed by exactly nine enabled couplers.
    pub fn sixty_qubit() -> Self {
        let excluded: BTreeSet<usize> = [0, 2, 30, 60, 63, 65].into_iter().collect();
        let broken: BTreeSet<(usize, usize)> = [(14, 20)].into_iter().collect();
        let grid = build_grid(11, 6, &excluded, &broken).expect("static configuration is valid");
        assign_patterns(&grid).expect("parity rule always yields matchings")
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn qubit(&self, linear: usize) -> QubitId {
        QubitId::from_linear(linear, self.cols)
    }

    /// Active qubits in ascending linear order. Position in this list is the simulator
    /// qubit index.
    pub fn active_qubits(&self) -> Vec<usize> {
        self.active.iter().copied().collect()
    }

    pub fn enabled_couplers(&self) -> impl Iterator<Item = &Coupler> {
        self.couplers.iter().filter(|c| c.enabled)
    }

    pub fn couplers_with(&self, pattern: Pattern) -> impl Iterator<Item = &Coupler> {
        self.enabled_couplers().filter(move |c| c.pattern == Some(pattern))
    }

    pub fn enabled_keys(&self) -> Vec<(usize, usize)> {
        self.enabled_couplers().map(Coupler::key).collect()
    }

    /// Checks the matching and coverage invariants of the current labelling.
    pub fn check_patterns(&self) -> Result<()> {
        for pattern in Pattern::ALL {
            let mut seen = BTreeSet::new();
            for c in self.couplers_with(pattern) {
                if !seen.insert(c.a.linear) || !seen.insert(c.b.linear) {
                    return Err(Error::Pattern(format!(
                        "pattern {pattern} is not a matching at coupler ({}, {})",
                        c.a.linear, c.b.linear
                    )));
                }
            }
        }
        for c in &self.couplers {
            match (c.enabled, c.pattern) {
                (true, None) => {
                    return Err(Error::Pattern(format!(
                        "enabled coupler ({}, {}) has no pattern",
                        c.a.linear, c.b.linear
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::Pattern(format!(
                        "disabled coupler ({}, {}) carries a pattern",
                        c.a.linear, c.b.linear
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn to_file(&self) -> TopologyFile {
        TopologyFile {
            rows: self.rows,
            cols: self.cols,
            excluded: self.excluded.iter().copied().collect(),
            broken: self.broken.iter().map(|&(a, b)| [a, b]).collect(),
            couplers: Some(
                self.enabled_couplers()
                    .map(|c| CouplerEntry {
                        a: c.a.linear,
                        b: c.b.linear,
                        pattern: c.pattern.expect("enabled couplers are labelled"),
                    })
                    .collect(),
            ),
        }
    }

    /// Rebuilds a topology from its file form. Explicit coupler labels, when present,
    /// replace the parity rule but must still satisfy the matching invariants.
    pub fn from_file(file: &TopologyFile) -> Result<Self> {
        let excluded = file.excluded.iter().copied().collect();
        let broken = file.broken.iter().map(|&[a, b]| ordered(a, b)).collect();
        let mut topo = assign_patterns(&build_grid(file.rows, file.cols, &excluded, &broken)?)?;
        if let Some(entries) = &file.couplers {
            let mut labelled = BTreeSet::new();
            for e in entries {
                let key = ordered(e.a, e.b);
                let c = topo
                    .couplers
                    .iter_mut()
                    .find(|c| c.key() == key && c.enabled)
                    .ok_or_else(|| {
                        Error::Topology(format!("coupler ({}, {}) is not enabled", e.a, e.b))
                    })?;
                c.pattern = Some(e.pattern);
                labelled.insert(key);
            }
            if labelled.len() != topo.enabled_couplers().count() {
                return Err(Error::Topology(
                    "coupler list must label every enabled coupler".into(),
                ));
            }
            topo.check_patterns()?;
        }
        Ok(topo)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("topology serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

/// On-disk form of a topology.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopologyFile {
    pub rows: usize,
    pub cols: usize,
    #[serde(default)]
    pub excluded: Vec<usize>,
    #[serde(default)]
    pub broken: Vec<[usize; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplers: Option<Vec<CouplerEntry>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerEntry {
    pub a: usize,
    pub b: usize,
    pub pattern: Pattern,
}

/// Which cycle-pattern schedule to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    /// Prefix of the repeated period ABCDCDAB.
    Standard,
    /// The fixed 22-cycle schedule (ABCDCDAB)x2 + ABCD + CB.
    Deep22,
}

impl FromStr for SequenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(SequenceKind::Standard),
            "deep22" => Ok(SequenceKind::Deep22),
            other => Err(Error::Sequence(format!("unknown sequence kind '{other}'"))),
        }
    }
}

impl fmt::Display for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SequenceKind::Standard => "standard",
            SequenceKind::Deep22 => "deep22",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSequence {
    pub kind: SequenceKind,
    pub labels: Vec<Pattern>,
}

const PERIOD: [Pattern; 8] = [
    Pattern::A,
    Pattern::B,
    Pattern::C,
    Pattern::D,
    Pattern::C,
    Pattern::D,
    Pattern::A,
    Pattern::B,
];

pub fn pattern_sequence(n_cycles: usize, kind: SequenceKind) -> Result<PatternSequence> {
    let labels = match kind {
        SequenceKind::Standard => {
            if n_cycles == 0 {
                return Err(Error::Sequence("standard sequence needs at least one cycle".into()));
            }
            PERIOD.iter().copied().cycle().take(n_cycles).collect()
        }
        SequenceKind::Deep22 => {
            if n_cycles != 22 {
                return Err(Error::Sequence(format!(
                    "deep22 sequence has exactly 22 cycles, got {n_cycles}"
                )));
            }
            let mut v: Vec<Pattern> = PERIOD.iter().chain(PERIOD.iter()).copied().collect();
            v.extend([Pattern::A, Pattern::B, Pattern::C, Pattern::D, Pattern::C, Pattern::B]);
            v
        }
    };
    Ok(PatternSequence { kind, labels })
}

impl PatternSequence {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_string(&self) -> String {
        self.labels.iter().map(|p| p.as_char()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn none() -> BTreeSet<usize> {
        BTreeSet::new()
    }

    #[test]
    fn two_by_two_plaquette() {
        let g = build_grid(2, 2, &none(), &BTreeSet::new()).unwrap();
        assert_eq!(g.n_active(), 4);
        assert_eq!(g.enabled_couplers().count(), 4);
        let g = assign_patterns(&g).unwrap();
        // both vertical couplers hang from row 0, both horizontal ones from column 0
        assert_eq!(g.couplers_with(Pattern::A).count(), 2);
        assert_eq!(g.couplers_with(Pattern::C).count(), 2);
        assert_eq!(g.couplers_with(Pattern::B).count(), 0);
        assert_eq!(g.couplers_with(Pattern::D).count(), 0);
    }

    #[test]
    fn chain_of_three() {
        let g = GridTopology::rectangular(1, 3).unwrap();
        assert_eq!(g.n_active(), 3);
        let labels: Vec<_> = g.enabled_couplers().map(|c| c.pattern.unwrap()).collect();
        assert_eq!(labels.len(), 2);
        assert_ne!(labels[0], labels[1]);
    }

    #[test]
    fn sixty_qubit_configuration() {
        let g = GridTopology::sixty_qubit();
        assert_eq!(g.n_active(), 60);
        assert_eq!(g.enabled_couplers().count(), 99);
        let covered: usize = Pattern::ALL.iter().map(|&p| g.couplers_with(p).count()).sum();
        assert_eq!(covered, 99);
        g.check_patterns().unwrap();
        let crossing = g.enabled_couplers().filter(|c| c.a.col == 2 && c.b.col == 3).count();
        assert_eq!(crossing, 9);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(build_grid(0, 3, &none(), &BTreeSet::new()).is_err());
        let outside: BTreeSet<usize> = [9].into_iter().collect();
        assert!(build_grid(3, 3, &outside, &BTreeSet::new()).is_err());
        let diagonal: BTreeSet<(usize, usize)> = [(0, 4)].into_iter().collect();
        assert!(build_grid(3, 3, &none(), &diagonal).is_err());
        let far: BTreeSet<(usize, usize)> = [(0, 20)].into_iter().collect();
        assert!(build_grid(3, 3, &none(), &far).is_err());
    }

    #[test]
    fn broken_and_excluded_disable_couplers() {
        let excluded: BTreeSet<usize> = [4].into_iter().collect();
        let broken: BTreeSet<(usize, usize)> = [(1, 0)].into_iter().collect();
        let g = build_grid(3, 3, &excluded, &broken).unwrap();
        // 12 lattice edges, 4 touch the centre, 1 broken
        assert_eq!(g.couplers.len(), 12);
        assert_eq!(g.enabled_couplers().count(), 7);
        assert!(g.broken.contains(&(0, 1)));
    }

    #[test]
    fn sequences() {
        let s = pattern_sequence(8, SequenceKind::Standard).unwrap();
        assert_eq!(s.as_string(), "ABCDCDAB");
        let s = pattern_sequence(24, SequenceKind::Standard).unwrap();
        assert_eq!(s.as_string(), "ABCDCDAB".repeat(3));
        let s = pattern_sequence(22, SequenceKind::Deep22).unwrap();
        assert_eq!(s.as_string(), "ABCDCDABABCDCDABABCDCB");
        assert!(pattern_sequence(24, SequenceKind::Deep22).is_err());
        assert!(pattern_sequence(0, SequenceKind::Standard).is_err());
    }

    #[test]
    fn json_round_trip_keeps_labels() {
        let g = GridTopology::sixty_qubit();
        let back = GridTopology::from_json(&g.to_json()).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn explicit_labels_must_be_matchings() {
        let g = GridTopology::rectangular(1, 3).unwrap();
        let mut file = g.to_file();
        for e in file.couplers.as_mut().unwrap() {
            e.pattern = Pattern::A;
        }
        assert!(GridTopology::from_file(&file).is_err());
    }

    proptest! {
        #[test]
        fn parity_rule_gives_matchings(
            rows in 1usize..9, cols in 1usize..9,
            excl in proptest::collection::btree_set(0usize..81, 0..6)
        ) {
            let excl: BTreeSet<usize> = excl.into_iter().filter(|&q| q < rows * cols).collect();
            let g = assign_patterns(&build_grid(rows, cols, &excl, &BTreeSet::new()).unwrap()).unwrap();
            for p in Pattern::ALL {
                let mut seen = BTreeSet::new();
                for c in g.couplers_with(p) {
                    prop_assert!(seen.insert(c.a.linear));
                    prop_assert!(seen.insert(c.b.linear));
                }
            }
            let labelled: usize = Pattern::ALL.iter().map(|&p| g.couplers_with(p).count()).sum();
            prop_assert_eq!(labelled, g.enabled_couplers().count());
            for c in g.enabled_couplers() {
                prop_assert!(c.a.is_neighbor(&c.b));
                prop_assert!(c.a.linear < c.b.linear);
            }
        }

        #[test]
        fn standard_sequence_is_prefix_closed(n in 1usize..64) {
            let short = pattern_sequence(n, SequenceKind::Standard).unwrap();
            let long = pattern_sequence(n + 1, SequenceKind::Standard).unwrap();
            prop_assert_eq!(&long.labels[..n], &short.labels[..]);
        }
    }
}
