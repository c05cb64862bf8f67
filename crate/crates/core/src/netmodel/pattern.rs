use std::fmt;

use serde::{Deserialize, Serialize};

use super::{NetModelError, SubsystemPartition};

/// Dense boolean matrix used for supports and sparsity masks.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BoolMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl BoolMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BoolMatrix {
            rows,
            cols,
            bits: vec![false; rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        BoolMatrix {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| i == j)
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.bits[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        debug_assert!(i < self.rows && j < self.cols);
        self.bits[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[i * self.cols + j] = v;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Row indices of the nonzeros in column `j`, ascending.
    pub fn column_support(&self, j: usize) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.get(i, j)).collect()
    }

    /// Column indices of the nonzeros in row `i`, ascending.
    pub fn row_support(&self, i: usize) -> Vec<usize> {
        (0..self.cols).filter(|&j| self.get(i, j)).collect()
    }

    /// `Supp(self) ⊆ Supp(other)`.
    pub fn is_subset_of(&self, other: &BoolMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    /// Support of the product of two nonnegative matrices.
    pub fn bool_mul(&self, rhs: &BoolMatrix) -> BoolMatrix {
        assert_eq!(self.cols, rhs.rows, "boolean product shape mismatch");
        let mut out = BoolMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self.get(i, k) {
                    for j in 0..rhs.cols {
                        if rhs.get(k, j) {
                            out.set(i, j, true);
                        }
                    }
                }
            }
        }
        out
    }

    /// Entries set in `self` but not in `other`.
    pub fn and_not(&self, other: &BoolMatrix) -> BoolMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        BoolMatrix {
            rows: self.rows,
            cols: self.cols,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| a && !b).collect(),
        }
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) as u8).collect())
            .collect()
    }
}

impl fmt::Debug for BoolMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BoolMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: String = (0..self.cols).map(|j| if self.get(i, j) { '1' } else { '0' }).collect();
            writeln!(f, "  {}", row)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternRole {
    Adjacency,
    Localization,
    Extended,
    Communication,
}

/// Binary N×N matrix at subsystem granularity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    entries: BoolMatrix,
    role: PatternRole,
}

impl Pattern {
    pub fn new(entries: BoolMatrix, role: PatternRole) -> Result<Self, NetModelError> {
        if entries.rows() != entries.cols() {
            return Err(NetModelError::Shape(format!(
                "pattern must be square, got {}x{}",
                entries.rows(),
                entries.cols()
            )));
        }
        if role != PatternRole::Extended {
            if let Some(i) = (0..entries.rows()).find(|&i| !entries.get(i, i)) {
                return Err(NetModelError::Pattern(format!(
                    "{:?} pattern has a zero diagonal entry at subsystem {}",
                    role, i
                )));
            }
        }
        Ok(Pattern { entries, role })
    }

    pub fn from_rows(rows: &[Vec<u8>], role: PatternRole) -> Result<Self, NetModelError> {
        let n = rows.len();
        let mut m = BoolMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(NetModelError::Shape(format!(
                    "pattern row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    n
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                match v {
                    0 => {}
                    1 => m.set(i, j, true),
                    other => {
                        return Err(NetModelError::Pattern(format!(
                            "pattern entry ({},{}) is {}, expected 0 or 1",
                            i, j, other
                        )))
                    }
                }
            }
        }
        Pattern::new(m, role)
    }

    pub fn identity(n: usize, role: PatternRole) -> Self {
        Pattern {
            entries: BoolMatrix::identity(n),
            role,
        }
    }

    pub fn ones(n: usize, role: PatternRole) -> Self {
        Pattern {
            entries: BoolMatrix::ones(n, n),
            role,
        }
    }

    pub fn size(&self) -> usize {
        self.entries.rows()
    }

    pub fn role(&self) -> PatternRole {
        self.role
    }

    pub fn with_role(mut self, role: PatternRole) -> Self {
        self.role = role;
        self
    }

    pub fn entries(&self) -> &BoolMatrix {
        &self.entries
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries.get(i, j)
    }

    pub fn is_subset_of(&self, other: &Pattern) -> bool {
        self.entries.is_subset_of(&other.entries)
    }

    pub fn column_support(&self, j: usize) -> Vec<usize> {
        self.entries.column_support(j)
    }
}

/// Boolean power `adj^d`; `d = 0` gives the identity.
pub fn d_hop_pattern(adj: &Pattern, d: usize) -> Pattern {
    let n = adj.size();
    let mut acc = BoolMatrix::identity(n);
    for _ in 0..d {
        acc = adj.entries.bool_mul(&acc);
    }
    Pattern {
        entries: acc,
        role: PatternRole::Localization,
    }
}

/// `Supp(adj · loc)`: where a localized response can be pushed in one step.
pub fn extended_pattern(adj: &Pattern, loc: &Pattern) -> Pattern {
    assert_eq!(adj.size(), loc.size(), "pattern size mismatch");
    Pattern {
        entries: adj.entries.bool_mul(&loc.entries),
        role: PatternRole::Extended,
    }
}

/// Per-column boundary subsystems: `B(i) = { j : ext(j,i) = 1, loc(j,i) = 0 }`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundarySet {
    sets: Vec<Vec<usize>>,
}

impl BoundarySet {
    pub fn get(&self, i: usize) -> &[usize] {
        &self.sets[i]
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.sets.iter()
    }
}

pub fn boundary_sets(loc: &Pattern, ext: &Pattern) -> Result<BoundarySet, NetModelError> {
    if loc.size() != ext.size() {
        return Err(NetModelError::Shape("pattern size mismatch".into()));
    }
    if !loc.is_subset_of(ext) {
        return Err(NetModelError::Pattern(
            "localization pattern is not contained in the extended pattern".into(),
        ));
    }
    let diff = ext.entries.and_not(&loc.entries);
    Ok(BoundarySet {
        sets: (0..loc.size()).map(|i| diff.column_support(i)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    State,
    Input,
}

/// Block expansion of a subsystem pattern to a state×state or input×state mask.
pub fn expand_to_states(pat: &Pattern, partition: &SubsystemPartition, row_kind: RowKind) -> BoolMatrix {
    assert_eq!(pat.size(), partition.num_subsystems());
    let nx = partition.num_states();
    let rows = match row_kind {
        RowKind::State => nx,
        RowKind::Input => partition.num_inputs(),
    };
    let row_owner: Vec<usize> = match row_kind {
        RowKind::State => (0..nx).map(|r| partition.subsystem_of_state(r)).collect(),
        RowKind::Input => (0..rows).map(|r| partition.subsystem_of_input(r)).collect(),
    };
    let col_owner: Vec<usize> = (0..nx).map(|c| partition.subsystem_of_state(c)).collect();
    BoolMatrix::from_fn(rows, nx, |r, c| pat.get(row_owner[r], col_owner[c]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommStrictness {
    /// Only `loc ⊆ comm` is required; `ext ⊆ comm` failures are warnings.
    #[default]
    Localization,
    /// `ext ⊆ comm` is required as well.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    LocalizationNotInCommunication,
    ExtendedNotInCommunication,
    MissingDiagonal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PatternViolation {
    pub kind: ViolationKind,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PatternReport {
    pub errors: Vec<PatternViolation>,
    pub warnings: Vec<PatternViolation>,
}

impl PatternReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Inclusion and diagonal checks between localization, communication and
/// extended patterns.
pub fn validate_patterns(
    loc: &Pattern,
    comm: &Pattern,
    ext: &Pattern,
    strictness: CommStrictness,
) -> Result<PatternReport, NetModelError> {
    let n = loc.size();
    if comm.size() != n || ext.size() != n {
        return Err(NetModelError::Shape("pattern size mismatch".into()));
    }
    let mut report = PatternReport::default();
    for i in 0..n {
        for j in 0..n {
            if loc.get(i, j) && !comm.get(i, j) {
                report.errors.push(PatternViolation {
                    kind: ViolationKind::LocalizationNotInCommunication,
                    row: i,
                    col: j,
                });
            }
            if ext.get(i, j) && !comm.get(i, j) {
                let v = PatternViolation {
                    kind: ViolationKind::ExtendedNotInCommunication,
                    row: i,
                    col: j,
                };
                match strictness {
                    CommStrictness::Localization => report.warnings.push(v),
                    CommStrictness::Extended => report.errors.push(v),
                }
            }
        }
        for p in [loc, comm] {
            if !p.get(i, i) {
                report.errors.push(PatternViolation {
                    kind: ViolationKind::MissingDiagonal,
                    row: i,
                    col: i,
                });
            }
        }
    }
    Ok(report)
}
