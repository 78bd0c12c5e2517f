//! Per-period trace records, agent snapshots, and their CSV forms.
//!
//! The CSV layout is versioned by a marker line so downstream tooling can
//! reject files written under a different schema. Floats are written with
//! the shortest round-trip representation, which makes serialized traces
//! byte-stable across runs with the same seed.

use std::io::{self, Write};

use crate::agents::FirmClass;

/// Bump when trace columns change.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Marker written as the first line of every trace CSV.
pub fn trace_marker() -> String {
    format!("# macrosim-trace-v{TRACE_SCHEMA_VERSION}")
}

/// Column names, in file order.
pub const TRACE_COLUMNS: [&str; 40] = [
    "period",
    "nominal_gdp",
    "real_gdp",
    "price_index",
    "capital_price_index",
    "wage_index",
    "consumption",
    "investment",
    "wage_bill",
    "profits_cfirm",
    "profits_kfirm",
    "profits_bank",
    "debt_cfirm",
    "debt_kfirm",
    "new_loans",
    "principal_repaid",
    "interest_paid",
    "deposit_interest",
    "write_offs",
    "household_deposits",
    "firm_deposits",
    "bank_equity",
    "bank_reserves",
    "bank_advances",
    "loan_rate",
    "unemployment_rate",
    "employment",
    "bankruptcies_cfirm",
    "bankruptcies_kfirm",
    "bailouts",
    "gini",
    "hpi_consumption",
    "hpi_capital",
    "hpi_labour",
    "hpi_credit",
    "hhi_consumption",
    "hhi_capital",
    "hhi_labour",
    "hhi_credit",
    "debtrank",
];

/// One recorded period.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub period: u32,
    pub nominal_gdp: f64,
    pub real_gdp: f64,
    pub price_index: f64,
    pub capital_price_index: f64,
    pub wage_index: f64,
    pub consumption: f64,
    pub investment: f64,
    pub wage_bill: f64,
    pub profits_cfirm: f64,
    pub profits_kfirm: f64,
    pub profits_bank: f64,
    pub debt_cfirm: f64,
    pub debt_kfirm: f64,
    pub new_loans: f64,
    pub principal_repaid: f64,
    pub interest_paid: f64,
    pub deposit_interest: f64,
    pub write_offs: f64,
    pub household_deposits: f64,
    pub firm_deposits: f64,
    pub bank_equity: f64,
    pub bank_reserves: f64,
    pub bank_advances: f64,
    pub loan_rate: f64,
    pub unemployment_rate: f64,
    pub employment: f64,
    pub bankruptcies_cfirm: f64,
    pub bankruptcies_kfirm: f64,
    pub bailouts: f64,
    pub gini: f64,
    pub hpi_consumption: f64,
    pub hpi_capital: f64,
    pub hpi_labour: f64,
    pub hpi_credit: f64,
    pub hhi_consumption: f64,
    pub hhi_capital: f64,
    pub hhi_labour: f64,
    pub hhi_credit: f64,
    pub debtrank: f64,
}

impl TraceRow {
    /// Values in column order, with the period cast to f64.
    pub fn values(&self) -> [f64; 40] {
        [
            self.period as f64,
            self.nominal_gdp,
            self.real_gdp,
            self.price_index,
            self.capital_price_index,
            self.wage_index,
            self.consumption,
            self.investment,
            self.wage_bill,
            self.profits_cfirm,
            self.profits_kfirm,
            self.profits_bank,
            self.debt_cfirm,
            self.debt_kfirm,
            self.new_loans,
            self.principal_repaid,
            self.interest_paid,
            self.deposit_interest,
            self.write_offs,
            self.household_deposits,
            self.firm_deposits,
            self.bank_equity,
            self.bank_reserves,
            self.bank_advances,
            self.loan_rate,
            self.unemployment_rate,
            self.employment,
            self.bankruptcies_cfirm,
            self.bankruptcies_kfirm,
            self.bailouts,
            self.gini,
            self.hpi_consumption,
            self.hpi_capital,
            self.hpi_labour,
            self.hpi_credit,
            self.hhi_consumption,
            self.hhi_capital,
            self.hhi_labour,
            self.hhi_credit,
            self.debtrank,
        ]
    }

    fn from_values(v: &[f64; 40]) -> TraceRow {
        TraceRow {
            period: v[0] as u32,
            nominal_gdp: v[1],
            real_gdp: v[2],
            price_index: v[3],
            capital_price_index: v[4],
            wage_index: v[5],
            consumption: v[6],
            investment: v[7],
            wage_bill: v[8],
            profits_cfirm: v[9],
            profits_kfirm: v[10],
            profits_bank: v[11],
            debt_cfirm: v[12],
            debt_kfirm: v[13],
            new_loans: v[14],
            principal_repaid: v[15],
            interest_paid: v[16],
            deposit_interest: v[17],
            write_offs: v[18],
            household_deposits: v[19],
            firm_deposits: v[20],
            bank_equity: v[21],
            bank_reserves: v[22],
            bank_advances: v[23],
            loan_rate: v[24],
            unemployment_rate: v[25],
            employment: v[26],
            bankruptcies_cfirm: v[27],
            bankruptcies_kfirm: v[28],
            bailouts: v[29],
            gini: v[30],
            hpi_consumption: v[31],
            hpi_capital: v[32],
            hpi_labour: v[33],
            hpi_credit: v[34],
            hhi_consumption: v[35],
            hhi_capital: v[36],
            hhi_labour: v[37],
            hhi_credit: v[38],
            debtrank: v[39],
        }
    }
}

/// A full per-agent snapshot taken at one configured step.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: u32,
    pub firms: Vec<FirmSnapshot>,
    pub banks: Vec<BankSnapshot>,
    /// End-of-period deposit balance per household, by index.
    pub household_deposits: Vec<f64>,
    pub edges: Vec<CreditEdge>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirmSnapshot {
    pub class: FirmClass,
    pub id: usize,
    pub output: f64,
    pub price: f64,
    pub productivity: f64,
    pub employment: usize,
    pub deposits: f64,
    pub debt: f64,
    pub equity: f64,
    pub capital: f64,
    pub inventories: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BankSnapshot {
    pub id: usize,
    pub loan_book: f64,
    pub equity: f64,
    pub deposits: f64,
    pub reserves: f64,
    pub advances: f64,
    pub loan_rate: f64,
}

/// One outstanding lending relationship at snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditEdge {
    pub bank: usize,
    pub firm_class: FirmClass,
    pub firm: usize,
    pub outstanding: f64,
}

/// One run's output: the recorded rows plus any configured snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub snapshots: Vec<Snapshot>,
}

fn class_tag(class: FirmClass) -> &'static str {
    match class {
        FirmClass::Consumption => "cfirm",
        FirmClass::Capital => "kfirm",
    }
}

fn parse_class(tag: &str) -> Result<FirmClass, String> {
    match tag {
        "cfirm" => Ok(FirmClass::Consumption),
        "kfirm" => Ok(FirmClass::Capital),
        other => Err(format!("unknown firm class tag '{other}'")),
    }
}

impl SimulationTrace {
    /// Extract one column as a series, by name.
    pub fn series(&self, column: &str) -> Option<Vec<f64>> {
        let idx = TRACE_COLUMNS.iter().position(|&c| c == column)?;
        Some(self.rows.iter().map(|r| r.values()[idx]).collect())
    }

    /// Write the per-period rows as versioned CSV.
    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "{}", trace_marker())?;
        writeln!(w, "{}", TRACE_COLUMNS.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.values().iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Parse a trace CSV written by [`write_csv`]. Snapshots live in
    /// separate files and are not restored here.
    pub fn read_csv(text: &str) -> Result<SimulationTrace, String> {
        let mut lines = text.lines();
        let marker = lines.next().ok_or("empty trace file")?;
        if marker != trace_marker() {
            return Err(format!(
                "unsupported trace schema: expected '{}', found '{marker}'",
                trace_marker()
            ));
        }
        let header = lines.next().ok_or("trace file has no header")?;
        if header != TRACE_COLUMNS.join(",") {
            return Err("trace header does not match the current schema".to_string());
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut values = [0.0; 40];
            let mut count = 0;
            for (i, cell) in line.split(',').enumerate() {
                if i >= 40 {
                    return Err(format!("row {}: too many columns", n + 3));
                }
                values[i] = cell
                    .parse::<f64>()
                    .map_err(|e| format!("row {}, column {}: {e}", n + 3, TRACE_COLUMNS[i]))?;
                count = i + 1;
            }
            if count != 40 {
                return Err(format!("row {}: expected 40 columns, found {count}", n + 3));
            }
            rows.push(TraceRow::from_values(&values));
        }
        Ok(SimulationTrace {
            seed: 0,
            rows,
            snapshots: Vec::new(),
        })
    }
}

impl Snapshot {
    /// Write one CSV holding every agent's state: firms, banks, and
    /// households share the layout with zeros in fields that do not
    /// apply to their kind.
    pub fn write_agents_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "# macrosim-agents-v{TRACE_SCHEMA_VERSION} step={}", self.step)?;
        writeln!(
            w,
            "kind,id,output,price,productivity,employment,deposits,debt,equity,capital,inventories,loan_book,reserves,advances,loan_rate"
        )?;
        for f in &self.firms {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},0,0,0,0",
                class_tag(f.class),
                f.id,
                f.output,
                f.price,
                f.productivity,
                f.employment,
                f.deposits,
                f.debt,
                f.equity,
                f.capital,
                f.inventories
            )?;
        }
        for b in &self.banks {
            writeln!(
                w,
                "bank,{},0,0,0,0,{},0,{},0,0,{},{},{},{}",
                b.id, b.deposits, b.equity, b.loan_book, b.reserves, b.advances, b.loan_rate
            )?;
        }
        for (h, deposits) in self.household_deposits.iter().enumerate() {
            writeln!(w, "household,{h},0,0,0,0,{deposits},0,{deposits},0,0,0,0,0,0")?;
        }
        Ok(())
    }

    /// Write the credit network as an edge list.
    pub fn write_edges_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "# macrosim-edges-v{TRACE_SCHEMA_VERSION} step={}", self.step)?;
        writeln!(w, "bank_id,firm_class,firm_id,outstanding")?;
        for e in &self.edges {
            writeln!(
                w,
                "{},{},{},{}",
                e.bank,
                class_tag(e.firm_class),
                e.firm,
                e.outstanding
            )?;
        }
        Ok(())
    }

    /// Parse an edge list written by [`write_edges_csv`].
    pub fn read_edges_csv(text: &str) -> Result<Vec<CreditEdge>, String> {
        let mut lines = text.lines();
        let marker = lines.next().ok_or("empty edge file")?;
        if !marker.starts_with("# macrosim-edges-v") {
            return Err("not a credit-network edge file".to_string());
        }
        let _header = lines.next().ok_or("edge file has no header")?;
        let mut edges = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(format!("edge row {}: expected 4 columns", n + 3));
            }
            edges.push(CreditEdge {
                bank: cells[0].parse().map_err(|e| format!("edge row {}: {e}", n + 3))?,
                firm_class: parse_class(cells[1])?,
                firm: cells[2].parse().map_err(|e| format!("edge row {}: {e}", n + 3))?,
                outstanding: cells[3].parse().map_err(|e| format!("edge row {}: {e}", n + 3))?,
            });
        }
        Ok(edges)
    }
}
