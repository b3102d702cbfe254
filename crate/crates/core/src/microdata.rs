//! Categorical microdata with household grouping and two-level geography.
//!
//! Attribute values are dense level indices into the [`AttributeSchema`];
//! the schema is the only place label text lives. Households carry the
//! geography: every member of a household shares its PUMA and tract, and
//! swapping rewrites the tract of whole households without touching the
//! person records.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a level within its variable.
pub type Level = u16;

/// Dense index of a tract inside a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TractId(pub u32);

/// Dense index of a PUMA inside a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PumaId(pub u32);

impl TractId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl PumaId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One categorical variable and its ordered list of level labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub levels: Vec<String>,
    /// Whether the level order is meaningful (required for binning and
    /// quantile-based risk scoring).
    #[serde(default)]
    pub ordered: bool,
}

impl Variable {
    pub fn new(name: impl Into<String>, levels: Vec<String>, ordered: bool) -> Self {
        Self {
            name: name.into(),
            levels,
            ordered,
        }
    }

    /// An ordered variable whose levels are the integers `min..=max`.
    pub fn integer_range(name: impl Into<String>, min: i64, max: i64) -> Self {
        Self::new(name, (min..=max).map(|v| v.to_string()).collect(), true)
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_of(&self, label: &str) -> Option<Level> {
        self.levels
            .iter()
            .position(|l| l == label)
            .map(|i| i as Level)
    }
}

/// Names of the CSV columns holding identifiers and geography.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeographyColumns {
    pub puma: String,
    pub tract: String,
    pub household: String,
    /// Optional person identifier column. Row numbers are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub person: Option<String>,
}

impl Default for GeographyColumns {
    fn default() -> Self {
        Self {
            puma: "puma".into(),
            tract: "tract".into(),
            household: "household".into(),
            person: Some("person".into()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    geography: GeographyColumns,
    #[serde(rename = "variable", default)]
    variables: Vec<Variable>,
}

/// Ordered set of categorical variables plus the geography column names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    geography: GeographyColumns,
    variables: Vec<Variable>,
}

impl AttributeSchema {
    pub fn new(geography: GeographyColumns, variables: Vec<Variable>) -> Result<Self> {
        let schema = Self {
            geography,
            variables,
        };
        schema.validate()?;
        Ok(schema)
    }

    fn validate(&self) -> Result<()> {
        let geo = &self.geography;
        let mut id_cols = vec![&geo.puma, &geo.tract, &geo.household];
        if let Some(p) = &geo.person {
            id_cols.push(p);
        }
        for (i, a) in id_cols.iter().enumerate() {
            if a.is_empty() {
                return Err(Error::InvalidSchema("empty geography column name".into()));
            }
            if id_cols[..i].contains(a) {
                return Err(Error::InvalidSchema(format!(
                    "geography column `{a}` listed twice"
                )));
            }
        }
        for (i, var) in self.variables.iter().enumerate() {
            if id_cols.iter().any(|c| **c == var.name) {
                return Err(Error::InvalidSchema(format!(
                    "variable `{}` collides with a geography column",
                    var.name
                )));
            }
            if self.variables[..i].iter().any(|v| v.name == var.name) {
                return Err(Error::InvalidSchema(format!(
                    "duplicate variable `{}`",
                    var.name
                )));
            }
            if var.levels.len() < 2 {
                return Err(Error::InvalidSchema(format!(
                    "variable `{}` needs at least 2 levels",
                    var.name
                )));
            }
            if var.levels.len() > Level::MAX as usize + 1 {
                return Err(Error::InvalidSchema(format!(
                    "variable `{}` has too many levels",
                    var.name
                )));
            }
            for (j, l) in var.levels.iter().enumerate() {
                if var.levels[..j].contains(l) {
                    return Err(Error::InvalidSchema(format!(
                        "variable `{}` repeats level `{l}`",
                        var.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: SchemaFile =
            toml::from_str(text).map_err(|e| Error::InvalidSchema(e.to_string()))?;
        Self::new(file.geography, file.variables)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let file = SchemaFile {
            geography: self.geography.clone(),
            variables: self.variables.clone(),
        };
        toml::to_string(&file).expect("schema serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    pub fn geography(&self) -> &GeographyColumns {
        &self.geography
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variable_index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::MissingVariable(name.to_string()))
    }

    pub fn variable(&self, index: usize) -> &Variable {
        &self.variables[index]
    }

    /// Copy of the schema with the variable at `index` replaced.
    pub(crate) fn with_variable(&self, index: usize, variable: Variable) -> Result<Self> {
        let mut variables = self.variables.clone();
        variables[index] = variable;
        Self::new(self.geography.clone(), variables)
    }
}

/// One individual's attribute vector and household membership.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersonRecord {
    pub id: String,
    /// Index into [`Dataset::households`].
    pub household: usize,
    /// One level index per schema variable.
    pub values: Vec<Level>,
}

/// Persons sharing an address. The unit that gets swapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Household {
    pub id: String,
    pub puma: PumaId,
    /// Indices into [`Dataset::persons`].
    pub members: Vec<usize>,
}

impl Household {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Geography {
    puma_labels: Vec<String>,
    tract_labels: Vec<String>,
    tract_puma: Vec<PumaId>,
}

/// Validated microdata. Person records and household composition are
/// shared and immutable; only the per-household tract assignment differs
/// between a dataset and its swapped copies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: Arc<AttributeSchema>,
    persons: Arc<Vec<PersonRecord>>,
    households: Arc<Vec<Household>>,
    geography: Arc<Geography>,
    household_tract: Vec<TractId>,
}

impl Dataset {
    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn persons(&self) -> &[PersonRecord] {
        &self.persons
    }

    pub fn households(&self) -> &[Household] {
        &self.households
    }

    /// Number of persons, `n`.
    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }

    pub fn tract_count(&self) -> usize {
        self.geography.tract_labels.len()
    }

    pub fn puma_count(&self) -> usize {
        self.geography.puma_labels.len()
    }

    pub fn tract_ids(&self) -> impl Iterator<Item = TractId> {
        (0..self.tract_count() as u32).map(TractId)
    }

    pub fn puma_ids(&self) -> impl Iterator<Item = PumaId> {
        (0..self.puma_count() as u32).map(PumaId)
    }

    pub fn tract_label(&self, tract: TractId) -> &str {
        &self.geography.tract_labels[tract.index()]
    }

    pub fn puma_label(&self, puma: PumaId) -> &str {
        &self.geography.puma_labels[puma.index()]
    }

    pub fn tract_id(&self, label: &str) -> Result<TractId> {
        self.geography
            .tract_labels
            .iter()
            .position(|l| l == label)
            .map(|i| TractId(i as u32))
            .ok_or_else(|| Error::UnknownTract(label.to_string()))
    }

    pub fn puma_id(&self, label: &str) -> Result<PumaId> {
        self.geography
            .puma_labels
            .iter()
            .position(|l| l == label)
            .map(|i| PumaId(i as u32))
            .ok_or_else(|| Error::UnknownPuma(label.to_string()))
    }

    pub fn household_index(&self, id: &str) -> Result<usize> {
        self.households
            .iter()
            .position(|h| h.id == id)
            .ok_or_else(|| Error::UnknownHousehold(id.to_string()))
    }

    /// PUMA that contains `tract`.
    pub fn tract_puma(&self, tract: TractId) -> PumaId {
        self.geography.tract_puma[tract.index()]
    }

    pub fn tracts_in_puma(&self, puma: PumaId) -> impl Iterator<Item = TractId> + '_ {
        self.tract_ids()
            .filter(move |&t| self.tract_puma(t) == puma)
    }

    pub fn household_tract(&self, household: usize) -> TractId {
        self.household_tract[household]
    }

    pub fn household_tracts(&self) -> &[TractId] {
        &self.household_tract
    }

    pub fn person_tract(&self, person: usize) -> TractId {
        self.household_tract[self.persons[person].household]
    }

    pub fn person_puma(&self, person: usize) -> PumaId {
        self.households[self.persons[person].household].puma
    }

    /// Copy of this dataset with a new tract assignment. Household PUMAs are
    /// unchanged, so every new tract must lie in the household's PUMA.
    pub(crate) fn with_household_tracts(&self, household_tract: Vec<TractId>) -> Self {
        debug_assert_eq!(household_tract.len(), self.households.len());
        debug_assert!(household_tract
            .iter()
            .zip(self.households.iter())
            .all(|(t, h)| self.tract_puma(*t) == h.puma));
        Self {
            household_tract,
            ..self.clone()
        }
    }

    /// Copy with a different tract layout (labels, PUMA membership and
    /// per-household assignment).
    pub(crate) fn with_tract_layout(
        &self,
        tract_labels: Vec<String>,
        tract_puma: Vec<PumaId>,
        household_tract: Vec<TractId>,
    ) -> Self {
        let geography = Geography {
            puma_labels: self.geography.puma_labels.clone(),
            tract_labels,
            tract_puma,
        };
        Self {
            schema: Arc::clone(&self.schema),
            persons: Arc::clone(&self.persons),
            households: Arc::clone(&self.households),
            geography: Arc::new(geography),
            household_tract,
        }
    }

    /// Copy with a replacement schema and recoded person values.
    pub(crate) fn with_recoded_values(
        &self,
        schema: AttributeSchema,
        persons: Vec<PersonRecord>,
    ) -> Self {
        Self {
            schema: Arc::new(schema),
            persons: Arc::new(persons),
            ..self.clone()
        }
    }

    /// All persons.
    pub fn view_all(&self) -> DatasetView<'_> {
        DatasetView {
            dataset: self,
            persons: (0..self.len()).collect(),
        }
    }

    pub fn subset_by_tract(&self, tract: &str) -> Result<DatasetView<'_>> {
        let id = self.tract_id(tract)?;
        Ok(self.subset_by_tract_id(id))
    }

    /// Persons whose household is currently assigned to `tract`.
    pub fn subset_by_tract_id(&self, tract: TractId) -> DatasetView<'_> {
        let persons = self
            .households
            .iter()
            .enumerate()
            .filter(|(h, _)| self.household_tract[*h] == tract)
            .flat_map(|(_, hh)| hh.members.iter().copied())
            .collect::<Vec<_>>();
        DatasetView::new(self, persons)
    }

    pub fn subset_by_puma(&self, puma: &str) -> Result<DatasetView<'_>> {
        let id = self.puma_id(puma)?;
        Ok(self.subset_by_puma_id(id))
    }

    pub fn subset_by_puma_id(&self, puma: PumaId) -> DatasetView<'_> {
        let persons = self
            .households
            .iter()
            .filter(|hh| hh.puma == puma)
            .flat_map(|hh| hh.members.iter().copied())
            .collect::<Vec<_>>();
        DatasetView::new(self, persons)
    }

    /// Writes the dataset as CSV: optional person column, household, PUMA,
    /// tract, then one column per schema variable.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let geo = self.schema.geography();
        let mut header: Vec<&str> = Vec::with_capacity(self.schema.len() + 4);
        if let Some(p) = &geo.person {
            header.push(p);
        }
        header.extend([
            geo.household.as_str(),
            geo.puma.as_str(),
            geo.tract.as_str(),
        ]);
        header.extend(self.schema.variables().iter().map(|v| v.name.as_str()));
        wtr.write_record(&header)?;

        let mut row: Vec<&str> = Vec::with_capacity(header.len());
        for (p, person) in self.persons.iter().enumerate() {
            row.clear();
            if geo.person.is_some() {
                row.push(&person.id);
            }
            let hh = &self.households[person.household];
            row.push(&hh.id);
            row.push(self.puma_label(hh.puma));
            row.push(self.tract_label(self.person_tract(p)));
            for (var, &level) in self.schema.variables().iter().zip(&person.values) {
                row.push(&var.levels[level as usize]);
            }
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// A subset of a dataset's persons. The schema is the parent's.
#[derive(Debug, Clone)]
pub struct DatasetView<'a> {
    dataset: &'a Dataset,
    persons: Vec<usize>,
}

impl<'a> DatasetView<'a> {
    pub fn new(dataset: &'a Dataset, persons: Vec<usize>) -> Self {
        Self { dataset, persons }
    }

    pub fn dataset(&self) -> &'a Dataset {
        self.dataset
    }

    pub fn schema(&self) -> &'a AttributeSchema {
        self.dataset.schema()
    }

    /// Person indices into the parent dataset.
    pub fn person_indices(&self) -> &[usize] {
        &self.persons
    }

    pub fn persons(&self) -> impl Iterator<Item = &'a PersonRecord> + '_ {
        let all = self.dataset.persons();
        self.persons.iter().map(move |&p| &all[p])
    }

    pub fn len(&self) -> usize {
        self.persons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.persons.is_empty()
    }
}

impl<'a> From<&'a Dataset> for DatasetView<'a> {
    fn from(ds: &'a Dataset) -> Self {
        ds.view_all()
    }
}

/// Incremental dataset construction with full validation on [`build`].
///
/// [`build`]: DatasetBuilder::build
#[derive(Debug)]
pub struct DatasetBuilder {
    schema: AttributeSchema,
    persons: Vec<PersonRecord>,
    person_ids: HashMap<String, usize>,
    households: Vec<Household>,
    household_index: HashMap<String, usize>,
    household_tract: Vec<TractId>,
    puma_labels: Vec<String>,
    puma_index: HashMap<String, PumaId>,
    tract_labels: Vec<String>,
    tract_index: HashMap<String, TractId>,
    tract_puma: Vec<PumaId>,
}

impl DatasetBuilder {
    pub fn new(schema: AttributeSchema) -> Self {
        Self {
            schema,
            persons: Vec::new(),
            person_ids: HashMap::new(),
            households: Vec::new(),
            household_index: HashMap::new(),
            household_tract: Vec::new(),
            puma_labels: Vec::new(),
            puma_index: HashMap::new(),
            tract_labels: Vec::new(),
            tract_index: HashMap::new(),
            tract_puma: Vec::new(),
        }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    /// Adds one person. Households, tracts and PUMAs are created on first
    /// sight and numbered in order of appearance.
    pub fn push(
        &mut self,
        person_id: impl Into<String>,
        household_id: &str,
        puma: &str,
        tract: &str,
        values: Vec<Level>,
    ) -> Result<()> {
        let person_id = person_id.into();
        if values.len() != self.schema.len() {
            return Err(Error::InvalidSchema(format!(
                "person `{person_id}` has {} values, schema has {} variables",
                values.len(),
                self.schema.len()
            )));
        }
        for (var, &v) in self.schema.variables().iter().zip(&values) {
            if v as usize >= var.level_count() {
                return Err(Error::UnknownLevel {
                    row: self.persons.len(),
                    column: var.name.clone(),
                    label: v.to_string(),
                });
            }
        }
        if self.person_ids.contains_key(&person_id) {
            return Err(Error::DuplicatePerson(person_id));
        }

        let puma_id = match self.puma_index.get(puma) {
            Some(&id) => id,
            None => {
                let id = PumaId(self.puma_labels.len() as u32);
                self.puma_labels.push(puma.to_string());
                self.puma_index.insert(puma.to_string(), id);
                id
            }
        };
        let tract_id = match self.tract_index.get(tract) {
            Some(&id) => {
                if self.tract_puma[id.index()] != puma_id {
                    return Err(Error::TractSpansPumas(tract.to_string()));
                }
                id
            }
            None => {
                let id = TractId(self.tract_labels.len() as u32);
                self.tract_labels.push(tract.to_string());
                self.tract_index.insert(tract.to_string(), id);
                self.tract_puma.push(puma_id);
                id
            }
        };
        let person_index = self.persons.len();
        let household = match self.household_index.get(household_id) {
            Some(&h) => {
                if self.household_tract[h] != tract_id {
                    return Err(Error::HouseholdSpansTracts(household_id.to_string()));
                }
                self.households[h].members.push(person_index);
                h
            }
            None => {
                let h = self.households.len();
                self.households.push(Household {
                    id: household_id.to_string(),
                    puma: puma_id,
                    members: vec![person_index],
                });
                self.household_index.insert(household_id.to_string(), h);
                self.household_tract.push(tract_id);
                h
            }
        };
        self.person_ids.insert(person_id.clone(), person_index);
        self.persons.push(PersonRecord {
            id: person_id,
            household,
            values,
        });
        Ok(())
    }

    pub fn build(self) -> Result<Dataset> {
        if self.persons.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset {
            schema: Arc::new(self.schema),
            persons: Arc::new(self.persons),
            households: Arc::new(self.households),
            geography: Arc::new(Geography {
                puma_labels: self.puma_labels,
                tract_labels: self.tract_labels,
                tract_puma: self.tract_puma,
            }),
            household_tract: self.household_tract,
        })
    }
}

/// Reads microdata CSV against `schema`. Columns not named by the schema
/// are ignored.
pub fn load_csv_from_reader<R: Read>(reader: R, schema: AttributeSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let geo = schema.geography().clone();
    let person_col = geo.person.as_deref().map(column).transpose()?;
    let household_col = column(&geo.household)?;
    let puma_col = column(&geo.puma)?;
    let tract_col = column(&geo.tract)?;
    let var_cols = schema
        .variables()
        .iter()
        .map(|v| column(&v.name))
        .collect::<Result<Vec<_>>>()?;
    let lookups: Vec<HashMap<&str, Level>> = schema
        .variables()
        .iter()
        .map(|v| {
            v.levels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.as_str(), i as Level))
                .collect()
        })
        .collect();

    let mut rows: Vec<(String, String, String, String, Vec<Level>)> = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let mut values = Vec::with_capacity(var_cols.len());
        for ((&c, lookup), var) in var_cols.iter().zip(&lookups).zip(schema.variables()) {
            let label = field(c);
            let level = lookup.get(label).ok_or_else(|| Error::UnknownLevel {
                row: row + 1,
                column: var.name.clone(),
                label: label.to_string(),
            })?;
            values.push(*level);
        }
        let person_id = match person_col {
            Some(c) => field(c).to_string(),
            None => (row + 1).to_string(),
        };
        rows.push((
            person_id,
            field(household_col).to_string(),
            field(puma_col).to_string(),
            field(tract_col).to_string(),
            values,
        ));
    }
    let mut builder = DatasetBuilder::new(schema);
    for (person, household, puma, tract, values) in rows {
        builder.push(person, &household, &puma, &tract, values)?;
    }
    builder.build()
}

pub fn load_csv(path: impl AsRef<Path>, schema: AttributeSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    load_csv_from_reader(std::io::BufReader::new(file), schema)
}

impl fmt::Display for TractId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tract#{}", self.0)
    }
}
