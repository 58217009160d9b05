//! 3GPP NR base graphs and their lifting into quasi-cyclic parity-check
//! structure.
//!
//! A base graph is a sparse prototype matrix whose non-empty entries are
//! circulant shifts. Lifting by `Z` replaces every entry `(row, col, shift)`
//! with a `Z x Z` identity matrix cyclically right-shifted by `shift`, so that
//! row `i` of the block has its one in column `(i + shift) mod Z`. Empty
//! entries become all-zero blocks.
//!
//! The shift tables are shipped as CSV assets (`data/bg1.csv`, `data/bg2.csv`)
//! with one column per lifting-set index. They are compiled into the crate;
//! setting `NRLDPC_DATA_DIR` makes the loader read `bg1.csv`/`bg2.csv` from
//! that directory instead.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::gf2::BinaryMatrix;

/// Environment variable overriding the directory the shift tables are read from.
pub const DATA_DIR_ENV: &str = "NRLDPC_DATA_DIR";

/// Largest lifting size in the NR lifting set.
pub const MAX_LIFTING: usize = 384;

/// Odd factors `a` of the lifting set `Z = a * 2^j`, indexed by shift-set index.
/// `a = 2` (powers of two) shares set index 0 with `a = 1`.
const LIFTING_BASES: [usize; 8] = [2, 3, 5, 7, 9, 11, 13, 15];

/// Default bound on `rows * cols` for [`expand_to_binary`].
pub const DEFAULT_ORACLE_LIMIT: usize = 10_000_000;

/// Number of base rows forming the double-diagonal parity core.
pub const PARITY_CORE_ROWS: usize = 4;

static BG1_CSV: &str = include_str!("../data/bg1.csv");
static BG2_CSV: &str = include_str!("../data/bg2.csv");

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum BaseGraphId {
    Bg1,
    Bg2,
}

impl BaseGraphId {
    /// Information base columns `K_b`.
    pub fn info_columns(self) -> usize {
        match self {
            BaseGraphId::Bg1 => 22,
            BaseGraphId::Bg2 => 10,
        }
    }

    /// Base rows `M_bg`.
    pub fn rows(self) -> usize {
        match self {
            BaseGraphId::Bg1 => 46,
            BaseGraphId::Bg2 => 42,
        }
    }

    pub fn columns(self) -> usize {
        self.info_columns() + self.rows()
    }

    /// Number of non-empty entries in the full base graph.
    pub fn entry_count(self) -> usize {
        match self {
            BaseGraphId::Bg1 => 316,
            BaseGraphId::Bg2 => 197,
        }
    }

    fn asset_name(self) -> &'static str {
        match self {
            BaseGraphId::Bg1 => "bg1.csv",
            BaseGraphId::Bg2 => "bg2.csv",
        }
    }

    fn embedded_asset(self) -> &'static str {
        match self {
            BaseGraphId::Bg1 => BG1_CSV,
            BaseGraphId::Bg2 => BG2_CSV,
        }
    }
}

impl fmt::Display for BaseGraphId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseGraphId::Bg1 => f.write_str("BG1"),
            BaseGraphId::Bg2 => f.write_str("BG2"),
        }
    }
}

impl FromStr for BaseGraphId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "bg1" => Ok(BaseGraphId::Bg1),
            "2" | "bg2" => Ok(BaseGraphId::Bg2),
            _ => Err(Error::UnknownBaseGraph(s.to_string())),
        }
    }
}

/// Shift-set index of `z` in the lifting set, or an error when `z` is not a
/// valid lifting size.
pub fn lifting_set_index(z: usize) -> Result<usize> {
    if !(2..=MAX_LIFTING).contains(&z) {
        return Err(Error::InvalidLiftingSize(z));
    }
    let odd = z >> z.trailing_zeros();
    let base = if odd == 1 { 2 } else { odd };
    LIFTING_BASES
        .iter()
        .position(|&a| a == base)
        .ok_or(Error::InvalidLiftingSize(z))
}

/// All lifting sizes, ascending.
pub fn lifting_sizes() -> Vec<usize> {
    let mut sizes: Vec<usize> = (2..=MAX_LIFTING)
        .filter(|&z| lifting_set_index(z).is_ok())
        .collect();
    sizes.sort_unstable();
    sizes
}

/// One non-empty base-graph entry, shift already reduced modulo `Z`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub row: usize,
    pub col: usize,
    pub shift: usize,
}

/// A base graph lifted to a concrete `Z`.
///
/// Immutable after construction; share it freely between decode workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseGraph {
    id: Option<BaseGraphId>,
    z: usize,
    info_columns: usize,
    rows: usize,
    columns: usize,
    entries: Vec<Entry>,
    row_starts: Vec<usize>,
    col_weights: Vec<usize>,
}

impl BaseGraph {
    /// Builds a graph from explicit entries. Shifts are reduced modulo `z`.
    ///
    /// Used for the shipped tables and for small hand-built codes in tests.
    pub fn from_entries(
        id: Option<BaseGraphId>,
        z: usize,
        info_columns: usize,
        rows: usize,
        columns: usize,
        mut entries: Vec<Entry>,
    ) -> Result<Self> {
        let malformed = |reason: String| Error::MalformedAsset {
            asset: id.map_or_else(|| "custom".to_string(), |id| id.to_string()),
            reason,
        };
        if z == 0 {
            return Err(malformed("Z must be positive".into()));
        }
        if info_columns >= columns {
            return Err(malformed(format!(
                "{info_columns} information columns leave no parity columns out of {columns}"
            )));
        }
        for e in &mut entries {
            if e.row >= rows || e.col >= columns {
                return Err(malformed(format!(
                    "entry ({}, {}) outside {rows}x{columns}",
                    e.row, e.col
                )));
            }
            e.shift %= z;
        }
        entries.sort_unstable_by_key(|e| (e.row, e.col));
        if let Some(w) = entries
            .windows(2)
            .find(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col))
        {
            return Err(malformed(format!(
                "duplicate entry at ({}, {})",
                w[0].row, w[0].col
            )));
        }

        let mut row_starts = vec![0; rows + 1];
        for e in &entries {
            row_starts[e.row + 1] += 1;
        }
        for r in 0..rows {
            if row_starts[r + 1] < 2 {
                return Err(malformed(format!(
                    "row {r} has weight {}, need at least 2",
                    row_starts[r + 1]
                )));
            }
            row_starts[r + 1] += row_starts[r];
        }
        let mut col_weights = vec![0; columns];
        for e in &entries {
            col_weights[e.col] += 1;
        }

        Ok(BaseGraph {
            id,
            z,
            info_columns,
            rows,
            columns,
            entries,
            row_starts,
            col_weights,
        })
    }

    pub fn id(&self) -> Option<BaseGraphId> {
        self.id
    }

    /// Lifting factor `Z`.
    pub fn z(&self) -> usize {
        self.z
    }

    /// `K_b`.
    pub fn info_columns(&self) -> usize {
        self.info_columns
    }

    /// `M_bg`.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// All entries sorted by `(row, col)`.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Entries of base row `r`, sorted by column.
    pub fn row(&self, r: usize) -> &[Entry] {
        &self.entries[self.row_starts[r]..self.row_starts[r + 1]]
    }

    /// Index of the first entry of row `r` in [`entries`](Self::entries).
    pub fn row_start(&self, r: usize) -> usize {
        self.row_starts[r]
    }

    /// `w_r(r)`.
    pub fn row_weight(&self, r: usize) -> usize {
        self.row_starts[r + 1] - self.row_starts[r]
    }

    pub fn row_weights(&self) -> Vec<usize> {
        (0..self.rows).map(|r| self.row_weight(r)).collect()
    }

    /// `w_c(c)` over all base rows.
    pub fn col_weights(&self) -> &[usize] {
        &self.col_weights
    }

    /// Total edges of the first `rows_used` base rows.
    pub fn edges(&self, rows_used: usize) -> usize {
        self.row_starts[rows_used.min(self.rows)]
    }

    pub fn max_row_weight(&self) -> usize {
        (0..self.rows)
            .map(|r| self.row_weight(r))
            .max()
            .unwrap_or(0)
    }

    /// Stable text form used for hashing and determinism checks.
    pub fn canonical_string(&self) -> String {
        let mut out = format!(
            "id={};z={};kb={};rows={};cols={}\n",
            self.id
                .map_or_else(|| "custom".to_string(), |id| id.to_string()),
            self.z,
            self.info_columns,
            self.rows,
            self.columns
        );
        for e in &self.entries {
            out.push_str(&format!("{},{},{}\n", e.row, e.col, e.shift));
        }
        out
    }
}

/// Loads base graph `id` lifted to `z`.
///
/// Reads the embedded table, or `$NRLDPC_DATA_DIR/bg{1,2}.csv` when the
/// variable is set.
pub fn load_basegraph(id: BaseGraphId, z: usize) -> Result<BaseGraph> {
    load_basegraph_from(id, z, None)
}

/// Like [`load_basegraph`], reading from `dir` when given. `dir` takes
/// precedence over the environment variable.
pub fn load_basegraph_from(id: BaseGraphId, z: usize, dir: Option<&Path>) -> Result<BaseGraph> {
    let dir = dir
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(DATA_DIR_ENV).map(PathBuf::from));
    match dir {
        Some(dir) => {
            let path = dir.join(id.asset_name());
            let text = std::fs::read_to_string(&path)?;
            parse_basegraph(id, z, &text, &path.display().to_string())
        }
        None => parse_basegraph(id, z, id.embedded_asset(), id.asset_name()),
    }
}

/// Parses a shift table in the asset CSV format: header
/// `row,col,<one column per shift set>` followed by integer rows.
pub fn parse_basegraph(
    id: BaseGraphId,
    z: usize,
    csv_text: &str,
    asset: &str,
) -> Result<BaseGraph> {
    let set = lifting_set_index(z)?;
    let malformed = |reason: String| Error::MalformedAsset {
        asset: asset.to_string(),
        reason,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.len() != 2 + LIFTING_BASES.len()
        || headers.get(0) != Some("row")
        || headers.get(1) != Some("col")
    {
        return Err(malformed(format!(
            "expected header row,col plus {} shift-set columns",
            LIFTING_BASES.len()
        )));
    }

    let mut entries = Vec::with_capacity(id.entry_count());
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<usize> {
            record
                .get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(format!("record {}: bad field {i}", line + 1)))
        };
        entries.push(Entry {
            row: field(0)?,
            col: field(1)?,
            shift: field(2 + set)?,
        });
    }
    if entries.len() != id.entry_count() {
        return Err(Error::EntryCountMismatch {
            asset: asset.to_string(),
            expected: id.entry_count(),
            found: entries.len(),
        });
    }

    let bg = BaseGraph::from_entries(
        Some(id),
        z,
        id.info_columns(),
        id.rows(),
        id.columns(),
        entries,
    )?;
    if let Some(r) = (0..bg.rows()).find(|&r| bg.row_weight(r) < 3) {
        return Err(malformed(format!("row {r} has weight below 3")));
    }
    Ok(bg)
}

/// Derived code dimensions for a lifted base graph and a row count.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct CodeParams {
    pub z: usize,
    pub info_columns: usize,
    pub rows_used: usize,
    /// Information bits `K = Z * K_b`.
    pub k: usize,
    /// Coded bits `N_c = Z * (K_b + rows_used)`.
    pub n_c: usize,
    /// Transmitted bits after dropping the first two information columns.
    pub n_tx: usize,
    /// `K / N_c`, reduced.
    pub rate: Ratio<usize>,
}

impl CodeParams {
    /// Number of punctured positions, `2Z`.
    pub fn punctured(&self) -> usize {
        2 * self.z
    }

    /// `K / N_tx`, the rate seen on the channel.
    pub fn transmitted_rate(&self) -> Ratio<usize> {
        Ratio::new(self.k, self.n_tx)
    }
}

/// Computes [`CodeParams`] for the first `rows_used` rows of `bg`.
pub fn code_params(bg: &BaseGraph, rows_used: usize) -> Result<CodeParams> {
    if !(PARITY_CORE_ROWS..=bg.rows()).contains(&rows_used) {
        return Err(Error::RowsOutOfRange {
            rows: rows_used,
            min: PARITY_CORE_ROWS,
            max: bg.rows(),
        });
    }
    let z = bg.z();
    let k = z * bg.info_columns();
    let n_c = z * (bg.info_columns() + rows_used);
    Ok(CodeParams {
        z,
        info_columns: bg.info_columns(),
        rows_used,
        k,
        n_c,
        n_tx: n_c - 2 * z,
        rate: Ratio::new(k, n_c),
    })
}

/// Expands the first `rows_used` base rows of `bg` into a dense binary
/// parity-check matrix of size `(rows_used * Z) x (Z * (K_b + rows_used))`.
///
/// This is an oracle for tests and small codes; the decode path never builds it.
pub fn expand_to_binary(bg: &BaseGraph, rows_used: usize, limit: usize) -> Result<BinaryMatrix> {
    let rows_used = rows_used.min(bg.rows());
    let z = bg.z();
    let cols_used = (bg.info_columns() + rows_used).min(bg.columns());
    let n_rows = rows_used * z;
    let n_cols = cols_used * z;
    let entries = n_rows * n_cols;
    if entries > limit {
        return Err(Error::OracleLimit { entries, limit });
    }
    let mut h = BinaryMatrix::zeros(n_rows, n_cols);
    for e in bg.entries().iter().take_while(|e| e.row < rows_used) {
        if e.col >= cols_used {
            continue;
        }
        for i in 0..z {
            h.set(e.row * z + i, e.col * z + (i + e.shift) % z, true);
        }
    }
    Ok(h)
}
