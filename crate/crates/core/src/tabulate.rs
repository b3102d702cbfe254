//! Two-way contingency tables, Pearson chi-square, Cramér's V and
//! collapsing of ordered variables into coarser bins.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::microdata::{Dataset, DatasetView, Level, PersonRecord, TractId, Variable};

/// A k×r table of counts over two schema variables.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    row_variable: String,
    col_variable: String,
    rows: usize,
    cols: usize,
    counts: Vec<u64>,
    n: u64,
}

impl ContingencyTable {
    /// All-zero table.
    pub fn zeros(
        row_variable: impl Into<String>,
        col_variable: impl Into<String>,
        rows: usize,
        cols: usize,
    ) -> Self {
        assert!(
            rows >= 1 && cols >= 1,
            "table needs at least one row and column"
        );
        Self {
            row_variable: row_variable.into(),
            col_variable: col_variable.into(),
            rows,
            cols,
            counts: vec![0; rows * cols],
            n: 0,
        }
    }

    /// Builds a table from nested rows. Panics on ragged or empty input.
    pub fn from_rows(
        row_variable: impl Into<String>,
        col_variable: impl Into<String>,
        rows: &[Vec<u64>],
    ) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged table");
        let mut t = Self::zeros(row_variable, col_variable, rows.len(), cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                t.add(i, j, c);
            }
        }
        t
    }

    /// Unnamed table, mostly for tests and ad hoc use.
    pub fn from_counts(rows: &[Vec<u64>]) -> Self {
        Self::from_rows("row", "col", rows)
    }

    pub fn row_variable(&self) -> &str {
        &self.row_variable
    }

    pub fn col_variable(&self) -> &str {
        &self.col_variable
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cols + col]
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, count: u64) {
        self.counts[row * self.cols + col] += count;
        self.n += count;
    }

    #[inline]
    fn increment(&mut self, row: usize, col: usize) {
        self.add(row, col, 1);
    }

    /// Row-major cell counts.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.cols).map(<[u64]>::to_vec).collect()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts
            .chunks(self.cols)
            .map(|r| r.iter().sum())
            .collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        let mut totals = vec![0; self.cols];
        for row in self.counts.chunks(self.cols) {
            for (t, c) in totals.iter_mut().zip(row) {
                *t += c;
            }
        }
        totals
    }

    /// Cell-wise sum. Panics if the shapes differ.
    pub fn merge(&mut self, other: &ContingencyTable) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n += other.n;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(&self.col_variable, &self.row_variable, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.add(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `(row, col, count)` for every cell.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .map(move |(idx, &c)| (idx / self.cols, idx % self.cols, c))
    }

    /// Writes the table as a CSV matrix with a header row of column labels
    /// and a leading column of row labels.
    pub fn write_csv<W: Write>(
        &self,
        writer: W,
        row_labels: &[String],
        col_labels: &[String],
    ) -> Result<()> {
        assert_eq!(row_labels.len(), self.rows);
        assert_eq!(col_labels.len(), self.cols);
        let mut wtr = csv::Writer::from_writer(writer);
        let corner = format!("{}\\{}", self.row_variable, self.col_variable);
        wtr.write_record(
            std::iter::once(corner.as_str()).chain(col_labels.iter().map(String::as_str)),
        )?;
        for (i, label) in row_labels.iter().enumerate() {
            let mut rec = vec![label.clone()];
            rec.extend((0..self.cols).map(|j| self.get(i, j).to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }
}

/// Chi-square statistic and Cramér's V of a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssociationResult {
    pub chi_square: f64,
    /// `None` when the table is empty or has a single non-empty row or
    /// column.
    pub v: Option<f64>,
    /// Rows remaining after dropping all-zero rows.
    pub effective_k: usize,
    /// Columns remaining after dropping all-zero columns.
    pub effective_r: usize,
}

impl AssociationResult {
    pub fn is_defined(&self) -> bool {
        self.v.is_some()
    }
}

/// Pearson chi-square and Cramér's V, `sqrt((chi2 / n) / min(k - 1, r - 1))`.
///
/// All-zero rows and columns are dropped before computing expected counts,
/// and `k`, `r` refer to the remaining dimensions.
pub fn cramers_v(table: &ContingencyTable) -> AssociationResult {
    let row_totals = table.row_totals();
    let col_totals = table.col_totals();
    let live_rows: Vec<usize> = (0..table.rows()).filter(|&i| row_totals[i] > 0).collect();
    let live_cols: Vec<usize> = (0..table.cols()).filter(|&j| col_totals[j] > 0).collect();
    let effective_k = live_rows.len();
    let effective_r = live_cols.len();
    let n = table.n() as f64;

    let mut chi_square = 0.0;
    if table.n() > 0 {
        for &i in &live_rows {
            let rt = row_totals[i] as f64;
            for &j in &live_cols {
                let expected = rt * col_totals[j] as f64 / n;
                let diff = table.get(i, j) as f64 - expected;
                chi_square += diff * diff / expected;
            }
        }
    }

    let dof = effective_k.min(effective_r);
    let v = if table.n() == 0 || dof <= 1 {
        None
    } else {
        Some(((chi_square / n) / (dof - 1) as f64).sqrt().min(1.0))
    };
    AssociationResult {
        chi_square,
        v,
        effective_k,
        effective_r,
    }
}

fn resolve_pair(
    schema: &crate::AttributeSchema,
    row_var: &str,
    col_var: &str,
) -> Result<(usize, usize)> {
    let r = schema.variable_index(row_var)?;
    let c = schema.variable_index(col_var)?;
    if r == c {
        return Err(Error::SameVariable(row_var.to_string()));
    }
    Ok((r, c))
}

/// Cross-tabulates two schema variables over the persons of `view`. The
/// table always spans the full level sets of both variables.
pub fn cross_tab<'a>(
    view: impl Into<DatasetView<'a>>,
    row_var: &str,
    col_var: &str,
) -> Result<ContingencyTable> {
    let view = view.into();
    let schema = view.schema();
    let (r, c) = resolve_pair(schema, row_var, col_var)?;
    let mut table = ContingencyTable::zeros(
        row_var,
        col_var,
        schema.variable(r).level_count(),
        schema.variable(c).level_count(),
    );
    for p in view.persons() {
        table.increment(p.values[r] as usize, p.values[c] as usize);
    }
    Ok(table)
}

/// Level-to-bin mapping for an ordered variable split at `boundaries`.
///
/// Each boundary is the level index that starts a new bin, so `k`
/// boundaries yield `k + 1` bins. Returns the binned variable definition and
/// the per-level mapping.
pub fn binning(variable: &Variable, boundaries: &[Level]) -> Result<(Variable, Vec<Level>)> {
    if !variable.ordered {
        return Err(Error::UnorderedVariable(variable.name.clone()));
    }
    let invalid = |reason: String| Error::InvalidBoundaries {
        variable: variable.name.clone(),
        reason,
    };
    if boundaries.is_empty() {
        return Err(invalid("at least one boundary is required".into()));
    }
    let levels = variable.level_count();
    for w in boundaries.windows(2) {
        if w[0] >= w[1] {
            return Err(invalid("boundaries must be strictly increasing".into()));
        }
    }
    if boundaries[0] == 0 || boundaries[boundaries.len() - 1] as usize >= levels {
        return Err(invalid(format!(
            "boundaries must lie strictly inside 1..{levels}"
        )));
    }

    let mut starts = vec![0usize];
    starts.extend(boundaries.iter().map(|&b| b as usize));
    let mut ends: Vec<usize> = starts[1..].to_vec();
    ends.push(levels);
    let labels = starts
        .iter()
        .zip(&ends)
        .map(|(&s, &e)| {
            if e - s == 1 {
                variable.levels[s].clone()
            } else {
                format!("{}-{}", variable.levels[s], variable.levels[e - 1])
            }
        })
        .collect();
    let mut map = vec![0 as Level; levels];
    for (bin, (&s, &e)) in starts.iter().zip(&ends).enumerate() {
        for slot in &mut map[s..e] {
            *slot = bin as Level;
        }
    }
    Ok((Variable::new(variable.name.clone(), labels, true), map))
}

/// Replaces an ordered variable with its binned version.
pub fn bin_variable(ds: &Dataset, var: &str, boundaries: &[Level]) -> Result<Dataset> {
    let index = ds.schema().variable_index(var)?;
    let (binned, map) = binning(ds.schema().variable(index), boundaries)?;
    let schema = ds.schema().with_variable(index, binned)?;
    let persons = ds
        .persons()
        .iter()
        .map(|p| {
            let mut values = p.values.clone();
            values[index] = map[values[index] as usize];
            PersonRecord {
                values,
                ..p.clone()
            }
        })
        .collect();
    Ok(ds.with_recoded_values(schema, persons))
}

/// A table definition: two variables, each optionally binned by level-label
/// boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    pub row: String,
    pub col: String,
    /// Labels of the levels that start each new row bin. Empty means no
    /// binning.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub row_bins: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub col_bins: Vec<String>,
}

impl TableSpec {
    pub fn new(row: impl Into<String>, col: impl Into<String>) -> Self {
        Self {
            row: row.into(),
            col: col.into(),
            row_bins: Vec::new(),
            col_bins: Vec::new(),
        }
    }

    pub fn with_row_bins(mut self, labels: &[&str]) -> Self {
        self.row_bins = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn with_col_bins(mut self, labels: &[&str]) -> Self {
        self.col_bins = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Short display key such as `age[35]xmarital`.
    pub fn label(&self) -> String {
        let part = |name: &str, bins: &[String]| {
            if bins.is_empty() {
                name.to_string()
            } else {
                format!("{name}[{}]", bins.join("|"))
            }
        };
        format!(
            "{}x{}",
            part(&self.row, &self.row_bins),
            part(&self.col, &self.col_bins)
        )
    }
}

/// A [`TableSpec`] bound to a schema, ready for repeated fast tabulation.
#[derive(Debug, Clone)]
pub struct Tabulator {
    row_index: usize,
    col_index: usize,
    row_map: Vec<Level>,
    col_map: Vec<Level>,
    row_variable: Variable,
    col_variable: Variable,
}

impl Tabulator {
    pub fn new(schema: &crate::AttributeSchema, spec: &TableSpec) -> Result<Self> {
        let (r, c) = resolve_pair(schema, &spec.row, &spec.col)?;
        let side = |index: usize, bins: &[String]| -> Result<(Variable, Vec<Level>)> {
            let var = schema.variable(index);
            if bins.is_empty() {
                return Ok((var.clone(), (0..var.level_count() as Level).collect()));
            }
            let boundaries = bins
                .iter()
                .map(|label| {
                    var.level_of(label).ok_or_else(|| Error::InvalidBoundaries {
                        variable: var.name.clone(),
                        reason: format!("unknown level `{label}`"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            binning(var, &boundaries)
        };
        let (row_variable, row_map) = side(r, &spec.row_bins)?;
        let (col_variable, col_map) = side(c, &spec.col_bins)?;
        Ok(Self {
            row_index: r,
            col_index: c,
            row_map,
            col_map,
            row_variable,
            col_variable,
        })
    }

    pub fn row_variable(&self) -> &Variable {
        &self.row_variable
    }

    pub fn col_variable(&self) -> &Variable {
        &self.col_variable
    }

    pub fn empty_table(&self) -> ContingencyTable {
        ContingencyTable::zeros(
            &self.row_variable.name,
            &self.col_variable.name,
            self.row_variable.level_count(),
            self.col_variable.level_count(),
        )
    }

    #[inline]
    fn cell(&self, person: &PersonRecord) -> (usize, usize) {
        (
            self.row_map[person.values[self.row_index] as usize] as usize,
            self.col_map[person.values[self.col_index] as usize] as usize,
        )
    }

    pub fn tabulate<'a>(&self, view: impl Into<DatasetView<'a>>) -> ContingencyTable {
        let view = view.into();
        let mut table = self.empty_table();
        for p in view.persons() {
            let (i, j) = self.cell(p);
            table.increment(i, j);
        }
        table
    }

    /// One table per tract, indexed by [`TractId`], in a single pass.
    pub fn tabulate_by_tract(&self, ds: &Dataset) -> Vec<ContingencyTable> {
        let mut tables = vec![self.empty_table(); ds.tract_count()];
        for (p, person) in ds.persons().iter().enumerate() {
            let TractId(t) = ds.person_tract(p);
            let (i, j) = self.cell(person);
            tables[t as usize].increment(i, j);
        }
        tables
    }
}
