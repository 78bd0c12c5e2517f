//! Double-entry audits run at the end of every period.
//!
//! The transaction-flow matrix is rebuilt from flows accumulated on both
//! sides of every transfer (the paying side and the receiving side each
//! record their own entry), so a plumbing bug shows up as a nonzero row
//! or column residual instead of cancelling silently. Closing stocks are
//! checked against the per-sector balance identities and the aggregate
//! net-worth identity (total equity equals booked capital).

use super::SimulationState;

/// Transaction-flow matrix columns: one current and one capital account
/// per producing sector, households, banks, and the central bank.
pub const N_COLUMNS: usize = 8;
pub const COLUMN_NAMES: [&str; N_COLUMNS] = [
    "households",
    "cfirm current",
    "cfirm capital",
    "kfirm current",
    "kfirm capital",
    "bank current",
    "bank capital",
    "central bank",
];

const H: usize = 0;
const CCUR: usize = 1;
const CCAP: usize = 2;
const KCUR: usize = 3;
const KCAP: usize = 4;
const BCUR: usize = 5;
const BCAP: usize = 6;
const CB: usize = 7;

/// Closing (or opening) stock aggregates, captured from agent state.
#[derive(Debug, Clone, Default)]
pub struct StockTable {
    pub deposits_household: f64,
    pub deposits_cfirm: f64,
    pub deposits_kfirm: f64,
    /// Deposit liabilities summed over bank ledgers.
    pub deposits_bank: f64,
    pub debt_cfirm: f64,
    pub debt_kfirm: f64,
    /// Loan assets summed over bank ledgers.
    pub loan_book_bank: f64,
    pub equity_bank: f64,
    pub reserves_bank: f64,
    pub advances_bank: f64,
    pub capital_book_cfirm: f64,
    pub equity_cfirm: f64,
    pub equity_kfirm: f64,
}

/// One period's flows, each side accumulated where the money moves.
#[derive(Debug, Clone, Default)]
pub struct FlowLedger {
    pub period: u32,
    /// Scale for the audit tolerance.
    pub nominal_gdp: f64,

    pub wages_household: f64,
    pub wages_cfirm: f64,
    pub wages_kfirm: f64,

    pub consumption_spent: f64,
    pub consumption_revenue: f64,
    pub investment_spent: f64,
    pub investment_revenue: f64,

    pub loan_interest_cfirm: f64,
    pub loan_interest_kfirm: f64,
    pub loan_interest_bank: f64,
    pub deposit_interest_household: f64,
    pub deposit_interest_cfirm: f64,
    pub deposit_interest_kfirm: f64,
    pub deposit_interest_bank: f64,

    /// Profit accrued in each sector's current account.
    pub profits_cfirm_current: f64,
    pub profits_kfirm_current: f64,
    pub profits_bank_current: f64,
    /// Profit applied to each sector's stocks.
    pub profits_cfirm_capital: f64,
    pub profits_kfirm_capital: f64,
    pub profits_bank_capital: f64,

    pub new_loans_cfirm: f64,
    pub new_loans_kfirm: f64,
    pub new_loans_bank: f64,
    pub principal_cfirm: f64,
    pub principal_kfirm: f64,
    pub principal_bank: f64,

    /// Overdrafts of exiting firms forgiven by their deposit bank. Loan
    /// write-offs are not a flow: they cancel between the gross loan
    /// flows and the loan-stock change, which the balance-sheet audit
    /// checks separately.
    pub overdraft_cfirm: f64,
    pub overdraft_kfirm: f64,
    pub overdraft_bank: f64,
    /// Defaulted loan principal (recorded for reporting, not a matrix row).
    pub loan_writeoffs: f64,

    /// Depositor-funded equity injections into failed banks.
    pub recap_household: f64,
    pub recap_cfirm: f64,
    pub recap_kfirm: f64,
    pub recap_bank: f64,

    /// Households' funding of entrant firms' starting deposits.
    pub entry_household: f64,
    pub entry_cfirm: f64,
    pub entry_kfirm: f64,

    pub start: StockTable,
    pub end: StockTable,
}

impl FlowLedger {
    /// Residual tolerance: one part in a million of nominal output.
    pub fn tolerance(&self) -> f64 {
        1e-6 * self.nominal_gdp.max(1.0)
    }
}

/// Sum the stock aggregates off the agent state.
pub fn capture_stocks(state: &SimulationState) -> StockTable {
    let mut t = StockTable::default();
    for h in &state.households {
        t.deposits_household += h.deposits;
    }
    for f in &state.cfirms {
        t.deposits_cfirm += f.deposits;
        t.debt_cfirm += f.debt();
        t.capital_book_cfirm += f.capital_book;
        t.equity_cfirm += f.equity;
    }
    for f in &state.kfirms {
        t.deposits_kfirm += f.deposits;
        t.debt_kfirm += f.debt();
        t.equity_kfirm += f.equity;
    }
    for b in &state.banks {
        t.deposits_bank += b.deposits;
        t.loan_book_bank += b.loan_book;
        t.equity_bank += b.equity;
        t.reserves_bank += b.reserves;
        t.advances_bank += b.advances;
    }
    t
}

/// Rebuild the transaction-flow matrix. Every row and every column must
/// sum to zero: rows because each transfer is recorded from both sides,
/// columns because each sector's budget constraint closes.
pub fn transaction_matrix(l: &FlowLedger) -> Vec<(&'static str, [f64; N_COLUMNS])> {
    let d_dep_h = l.end.deposits_household - l.start.deposits_household;
    let d_dep_c = l.end.deposits_cfirm - l.start.deposits_cfirm;
    let d_dep_k = l.end.deposits_kfirm - l.start.deposits_kfirm;
    let d_dep_b = l.end.deposits_bank - l.start.deposits_bank;
    let d_res = l.end.reserves_bank - l.start.reserves_bank;
    let d_adv = l.end.advances_bank - l.start.advances_bank;

    fn sparse(cells: &[(usize, f64)]) -> [f64; N_COLUMNS] {
        let mut r = [0.0; N_COLUMNS];
        for &(col, v) in cells {
            r[col] += v;
        }
        r
    }

    let mut rows: Vec<(&'static str, [f64; N_COLUMNS])> = Vec::with_capacity(14);
    rows.push(("wages", sparse(&[
        (H, l.wages_household),
        (CCUR, -l.wages_cfirm),
        (KCUR, -l.wages_kfirm),
    ])));
    rows.push(("consumption", sparse(&[
        (H, -l.consumption_spent),
        (CCUR, l.consumption_revenue),
    ])));
    rows.push(("investment", sparse(&[
        (CCAP, -l.investment_spent),
        (KCUR, l.investment_revenue),
    ])));
    rows.push(("loan interest", sparse(&[
        (CCUR, -l.loan_interest_cfirm),
        (KCUR, -l.loan_interest_kfirm),
        (BCUR, l.loan_interest_bank),
    ])));
    rows.push(("deposit interest", sparse(&[
        (H, l.deposit_interest_household),
        (CCUR, l.deposit_interest_cfirm),
        (KCUR, l.deposit_interest_kfirm),
        (BCUR, -l.deposit_interest_bank),
    ])));
    rows.push(("profits", sparse(&[
        (CCUR, -l.profits_cfirm_current),
        (CCAP, l.profits_cfirm_capital),
        (KCUR, -l.profits_kfirm_current),
        (KCAP, l.profits_kfirm_capital),
        (BCUR, -l.profits_bank_current),
        (BCAP, l.profits_bank_capital),
    ])));
    rows.push(("new loans", sparse(&[
        (CCAP, l.new_loans_cfirm),
        (KCAP, l.new_loans_kfirm),
        (BCAP, -l.new_loans_bank),
    ])));
    rows.push(("loan repayments", sparse(&[
        (CCAP, -l.principal_cfirm),
        (KCAP, -l.principal_kfirm),
        (BCAP, l.principal_bank),
    ])));
    rows.push(("loan defaults", sparse(&[
        (CCAP, l.overdraft_cfirm),
        (KCAP, l.overdraft_kfirm),
        (BCAP, -l.overdraft_bank),
    ])));
    rows.push(("bank recapitalisation", sparse(&[
        (H, -l.recap_household),
        (CCAP, -l.recap_cfirm),
        (KCAP, -l.recap_kfirm),
        (BCAP, l.recap_bank),
    ])));
    rows.push(("firm entry", sparse(&[
        (H, -l.entry_household),
        (CCAP, l.entry_cfirm),
        (KCAP, l.entry_kfirm),
    ])));
    rows.push(("change in deposits", sparse(&[
        (H, -d_dep_h),
        (CCAP, -d_dep_c),
        (KCAP, -d_dep_k),
        (BCAP, d_dep_b),
    ])));
    rows.push(("change in reserves", sparse(&[
        (BCAP, -d_res),
        (CB, d_res),
    ])));
    rows.push(("change in advances", sparse(&[
        (BCAP, d_adv),
        (CB, -d_adv),
    ])));
    rows
}

/// Check every row and column of the transaction-flow matrix against the
/// ledger's tolerance; the error names the worst offender.
pub fn audit_flows(l: &FlowLedger) -> Result<(), String> {
    let matrix = transaction_matrix(l);
    let tol = l.tolerance();
    let mut worst: Option<(String, f64)> = None;
    let mut check = |name: String, residual: f64| {
        if residual.abs() > tol
            && worst.as_ref().is_none_or(|(_, w)| residual.abs() > w.abs() * (1.0 + 1e-9))
        {
            worst = Some((name, residual));
        }
    };
    for (name, cells) in &matrix {
        check(format!("flow row '{name}'"), cells.iter().sum());
    }
    for (c, col_name) in COLUMN_NAMES.iter().enumerate() {
        check(
            format!("sector column '{col_name}'"),
            matrix.iter().map(|(_, cells)| cells[c]).sum(),
        );
    }
    match worst {
        None => Ok(()),
        Some((name, residual)) => Err(format!(
            "{name} residual {residual:.6e} exceeds tolerance {tol:.6e}"
        )),
    }
}

/// Check closing stocks: per-agent balance identities, ledger caches
/// against recomputed account sums, non-negative household deposits,
/// aggregate equity against booked capital, and employment consistency.
pub fn audit_stocks(state: &SimulationState, tol: f64) -> Result<(), String> {
    let mut worst: Option<(String, f64)> = None;
    let mut check = |name: String, residual: f64| {
        if residual.abs() > tol
            && worst.as_ref().is_none_or(|(_, w)| residual.abs() > w.abs() * (1.0 + 1e-9))
        {
            worst = Some((name, residual));
        }
    };

    let n_banks = state.banks.len();
    let mut accounts = vec![0.0; n_banks];
    let mut books = vec![0.0; n_banks];
    for (h, household) in state.households.iter().enumerate() {
        if household.deposits < -1e-9 {
            return Err(format!(
                "household {h} deposits negative: {}",
                household.deposits
            ));
        }
        accounts[household.bank] += household.deposits;
    }
    for (i, f) in state.cfirms.iter().enumerate() {
        check(format!("cfirm {i} balance identity"), f.balance_gap());
        accounts[f.deposit_bank] += f.deposits;
        for loan in &f.loans {
            books[loan.bank] += loan.outstanding();
        }
    }
    for (j, f) in state.kfirms.iter().enumerate() {
        check(format!("kfirm {j} balance identity"), f.balance_gap());
        accounts[f.deposit_bank] += f.deposits;
        for loan in &f.loans {
            books[loan.bank] += loan.outstanding();
        }
    }
    for (b, bank) in state.banks.iter().enumerate() {
        check(
            format!("bank {b} deposit ledger vs accounts"),
            bank.deposits - accounts[b],
        );
        check(
            format!("bank {b} loan book vs firm debt"),
            bank.loan_book - books[b],
        );
        check(
            format!("bank {b} balance identity"),
            bank.reserves + bank.loan_book - bank.advances - bank.deposits - bank.equity,
        );
    }

    // Aggregate net worth: summing every sector's equity (the central
    // bank's is advances minus reserves) must leave exactly the booked
    // capital stock.
    let stocks = capture_stocks(state);
    let total_equity = stocks.deposits_household
        + stocks.equity_cfirm
        + stocks.equity_kfirm
        + stocks.equity_bank
        + (stocks.advances_bank - stocks.reserves_bank);
    check(
        "aggregate equity vs booked capital".to_string(),
        total_equity - stocks.capital_book_cfirm,
    );

    // Employment consistency, both directions.
    let mut employed = vec![false; state.households.len()];
    for (i, f) in state.cfirms.iter().enumerate() {
        for &h in &f.employees {
            if state.households[h].employer != Some((crate::agents::FirmClass::Consumption, i)) {
                return Err(format!("household {h} employer does not match cfirm {i} payroll"));
            }
            employed[h] = true;
        }
    }
    for (j, f) in state.kfirms.iter().enumerate() {
        for &h in &f.employees {
            if state.households[h].employer != Some((crate::agents::FirmClass::Capital, j)) {
                return Err(format!("household {h} employer does not match kfirm {j} payroll"));
            }
            employed[h] = true;
        }
    }
    for (h, household) in state.households.iter().enumerate() {
        if household.employer.is_some() && !employed[h] {
            return Err(format!("household {h} claims an employer that does not list it"));
        }
    }

    match worst {
        None => Ok(()),
        Some((name, residual)) => Err(format!(
            "{name} residual {residual:.6e} exceeds tolerance {tol:.6e}"
        )),
    }
}
