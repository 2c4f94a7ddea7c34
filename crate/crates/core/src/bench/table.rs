use std::fmt::Write;

/// Provenance written above every table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableHeader {
    pub title: String,
    pub config_hash: String,
    pub seed: u64,
    pub tol: f64,
    pub maxit: usize,
    pub repetitions: usize,
    pub degree: usize,
}

impl TableHeader {
    fn lines(&self, prefix: &str) -> String {
        format!(
            "{prefix}psdg {}\n{prefix}config_hash={} seed={} tol={:e} maxit={} repetitions={} degree={}\n",
            self.title, self.config_hash, self.seed, self.tol, self.maxit, self.repetitions, self.degree
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshColumn {
    pub label: String,
    pub elements: usize,
    pub h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub series: String,
    pub dt: f64,
    pub column: usize,
    pub value: f64,
    /// Non-convergence or an unconverged estimate.
    pub flagged: bool,
    /// Δt and h^p within one order of magnitude.
    pub balanced: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    MeanIterations,
    ConditionNumber,
}

impl Quantity {
    fn name(self) -> &'static str {
        match self {
            Self::MeanIterations => "mean_iterations",
            Self::ConditionNumber => "kappa",
        }
    }

    fn format(self, v: f64) -> String {
        match self {
            Self::MeanIterations => format!("{v:.1}"),
            Self::ConditionNumber => format!("{v:.3e}"),
        }
    }
}

/// Rows Δt × columns mesh, one block per series.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: TableHeader,
    pub quantity: Quantity,
    pub columns: Vec<MeshColumn>,
    pub dt_list: Vec<f64>,
    pub series: Vec<String>,
    pub cells: Vec<Cell>,
}

impl Table {
    pub fn cell(&self, series: &str, dt: f64, column: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.series == series && c.dt == dt && c.column == column)
    }

    /// Values of one series and column, in Δt order.
    pub fn column_values(&self, series: &str, column: usize) -> Vec<f64> {
        self.dt_list
            .iter()
            .filter_map(|&dt| self.cell(series, dt, column).map(|c| c.value))
            .collect()
    }

    pub fn flagged_count(&self) -> usize {
        self.cells.iter().filter(|c| c.flagged).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.lines("# ");
        writeln!(s, "series,dt,column,elements,h,{},flagged,balanced", self.quantity.name()).unwrap();
        for c in &self.cells {
            let col = &self.columns[c.column];
            writeln!(
                s,
                "{},{:e},{},{},{:.6e},{},{},{}",
                c.series,
                c.dt,
                col.label,
                col.elements,
                col.h,
                self.quantity.format(c.value),
                c.flagged,
                c.balanced
            )
            .unwrap();
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = self.header.lines("<!-- ").replace('\n', " -->\n");
        for series in &self.series {
            let head: Vec<String> =
                self.columns.iter().map(|c| format!("{} ({} el., h={:.3})", c.label, c.elements, c.h)).collect();
            let mut rows = vec![std::iter::once("Δt".to_string()).chain(head).collect::<Vec<_>>()];
            for &dt in &self.dt_list {
                let mut row = vec![format!("{dt:e}")];
                for ci in 0..self.columns.len() {
                    row.push(match self.cell(series, dt, ci) {
                        Some(c) => {
                            let mut v = self.quantity.format(c.value);
                            if c.balanced {
                                v = format!("[{v}]");
                            }
                            if c.flagged {
                                v.push('!');
                            }
                            v
                        }
                        None => "-".into(),
                    });
                }
                rows.push(row);
            }
            writeln!(s, "\n### {series}\n").unwrap();
            s.push_str(&aligned(&rows));
        }
        s.push_str("\n[v]: Δt and h^p within one order of magnitude. v!: flagged (not converged).\n");
        s
    }
}

/// Markdown table with padded columns; the first row is the header.
pub(crate) fn aligned(rows: &[Vec<String>]) -> String {
    let ncol = rows[0].len();
    let width: Vec<usize> =
        (0..ncol).map(|j| rows.iter().map(|r| r[j].chars().count()).max().unwrap_or(0).max(3)).collect();
    let line = |r: &[String]| {
        let cells: Vec<String> =
            r.iter().zip(&width).map(|(c, w)| format!("{c}{}", " ".repeat(w - c.chars().count()))).collect();
        format!("| {} |\n", cells.join(" | "))
    };
    let mut s = line(&rows[0]);
    s.push_str(&format!("|{}|\n", width.iter().map(|w| "-".repeat(w + 2)).collect::<Vec<_>>().join("|")));
    for r in &rows[1..] {
        s.push_str(&line(r));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub elements: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub error: f64,
    /// Slope against the previous row.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub header: TableHeader,
    pub study: super::Study,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope over all rows.
    pub fitted_slope: f64,
}

impl ConvergenceTable {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.lines("# ");
        writeln!(s, "# study={:?} fitted_slope={:.4}", self.study, self.fitted_slope).unwrap();
        s.push_str("elements,h,dt,steps,energy_error,slope\n");
        for r in &self.rows {
            let slope = r.slope.map_or(String::new(), |v| format!("{v:.4}"));
            writeln!(s, "{},{:.6e},{:e},{},{:.6e},{}", r.elements, r.h, r.dt, r.steps, r.error, slope).unwrap();
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut rows = vec![["elements", "h", "Δt", "steps", "energy error", "slope"].map(String::from).to_vec()];
        for r in &self.rows {
            rows.push(vec![
                r.elements.to_string(),
                format!("{:.4}", r.h),
                format!("{:e}", r.dt),
                r.steps.to_string(),
                format!("{:.3e}", r.error),
                r.slope.map_or("-".into(), |v| format!("{v:.2}")),
            ]);
        }
        let mut s = self.header.lines("<!-- ").replace('\n', " -->\n");
        writeln!(s, "\n{:?} study, fitted slope {:.2}\n", self.study, self.fitted_slope).unwrap();
        s.push_str(&aligned(&rows));
        s
    }
}
