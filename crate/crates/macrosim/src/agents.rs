//! Agent state and behavioural rules.
//!
//! The economy has four agent families: households supply labour and
//! consume; consumption-good firms combine labour and capital in fixed
//! proportions; capital-good firms produce machines from labour alone and
//! hold durable inventories; banks price credit and ration it against a
//! leverage-sensitive capital target. All behavioural rules are pure
//! functions over explicit arguments so they can be tested directly; the
//! engine owns sequencing and bookkeeping.
//!
//! Conventions used throughout:
//! - adaptive expectations: `x_e' = x_e + gamma (x - x_e)`;
//! - directional price/wage/rate updates: the controlled value moves up
//!   or down by a volatility-scaled absolute normal draw depending on a
//!   market signal, plus mean reversion toward a market-wide reference,
//!   with a positivity floor;
//! - loans amortize with constant per-step payment; the principal part
//!   is a constant fraction of the original loan so the schedule retires
//!   exactly at term.

use crate::config::Params;

/// Which firm sector an index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FirmClass {
    Consumption,
    Capital,
}

/// A wage earner and consumer. `employer` is `None` when unemployed.
#[derive(Debug, Clone)]
pub struct Household {
    pub deposits: f64,
    pub employer: Option<(FirmClass, usize)>,
    /// Bank holding this household's deposit account (fixed per run).
    pub bank: usize,
}

/// One amortized loan. The per-step payment is constant; the principal
/// component is `principal / term` per step, tracked by telescoping the
/// outstanding balance so the schedule sums exactly to the principal.
#[derive(Debug, Clone)]
pub struct Loan {
    pub principal: f64,
    pub rate: f64,
    /// Constant per-step payment (interest plus principal component).
    pub payment: f64,
    /// Payments still due.
    pub remaining: u32,
    /// Term in steps at origination.
    pub term: u32,
    /// Lending bank.
    pub bank: usize,
}

impl Loan {
    /// Originate a loan at `rate` for `term` steps.
    pub fn new(principal: f64, rate: f64, term: u32, bank: usize) -> Self {
        Loan {
            principal,
            rate,
            payment: amortized_payment(principal, rate, term),
            remaining: term,
            term,
            bank,
        }
    }

    /// Principal still owed.
    pub fn outstanding(&self) -> f64 {
        self.principal * self.remaining as f64 / self.term as f64
    }

    /// Constant per-step interest component.
    pub fn interest(&self) -> f64 {
        self.payment - self.principal / self.term as f64
    }

    /// Apply one period's payment; returns `(interest, principal_paid)`.
    /// Principal is the telescoped difference of outstanding balances so
    /// the sum over the full schedule equals the principal exactly.
    pub fn advance(&mut self) -> (f64, f64) {
        debug_assert!(self.remaining > 0);
        let before = self.outstanding();
        self.remaining -= 1;
        let principal_paid = before - self.outstanding();
        (self.payment - self.principal / self.term as f64, principal_paid)
    }
}

/// Constant payment of an amortized loan: `L r (1+r)^n / ((1+r)^n - 1)`,
/// degrading gracefully to straight-line `L / n` as the rate vanishes.
pub fn amortized_payment(principal: f64, rate: f64, term: u32) -> f64 {
    debug_assert!(term > 0);
    if rate.abs() < 1e-12 {
        return principal / term as f64;
    }
    let growth = (1.0 + rate).powi(term as i32);
    principal * rate * growth / (growth - 1.0)
}

/// Total per-step interest and principal due across active loans.
pub fn interest_and_principal_due(loans: &[Loan]) -> (f64, f64) {
    let mut interest = 0.0;
    let mut principal = 0.0;
    for loan in loans {
        if loan.remaining > 0 {
            interest += loan.interest();
            let after = loan.principal * (loan.remaining - 1) as f64 / loan.term as f64;
            principal += loan.outstanding() - after;
        }
    }
    (interest, principal)
}

/// A consumption-good firm: fixed-coefficient production from labour and
/// capital, demand-driven capacity and investment planning, loan-financed
/// investment.
#[derive(Debug, Clone)]
pub struct CFirm {
    pub productivity: f64,
    pub price: f64,
    pub wage: f64,
    /// Households currently on the payroll.
    pub employees: Vec<usize>,
    /// Physical capital in machine units.
    pub capital: f64,
    /// Book value of capital (cumulated investment expenditure net of
    /// depreciation); the balance-sheet counterpart of `capital`.
    pub capital_book: f64,
    pub output: f64,
    pub sales: f64,
    pub demand: f64,
    pub expected_demand: f64,
    pub inventories: f64,
    pub desired_output: f64,
    pub desired_labour: f64,
    /// Planned hires (positive) or separations (negative) for this step.
    pub hiring: i64,
    pub deposits: f64,
    pub equity: f64,
    pub profits: f64,
    pub wage_bill: f64,
    pub loans: Vec<Loan>,
    pub desired_loan: f64,
    pub desired_investment: f64,
    /// Machines bought this step.
    pub investment_goods: f64,
    /// Nominal spending on machines this step.
    pub investment_expenditure: f64,
    /// New borrowing credited this step.
    pub new_loan: f64,
    /// Bank holding the firm's deposit account (fixed per run).
    pub deposit_bank: usize,
}

impl CFirm {
    pub fn employment(&self) -> usize {
        self.employees.len()
    }

    pub fn debt(&self) -> f64 {
        self.loans.iter().map(Loan::outstanding).sum()
    }

    /// Leontief production: labour and installed machines in fixed
    /// proportion, whichever binds.
    pub fn produce(&self, nu: f64) -> f64 {
        (self.productivity * self.employment() as f64).min(self.capital / nu)
    }

    /// `capital_book + deposits - debt - equity`, which accounting must
    /// keep at zero.
    pub fn balance_gap(&self) -> f64 {
        self.capital_book + self.deposits - self.debt() - self.equity
    }
}

/// A capital-good firm: labour-only production, durable inventories
/// carried across periods, a desired buffer stock above expected demand.
#[derive(Debug, Clone)]
pub struct KFirm {
    pub productivity: f64,
    pub price: f64,
    pub wage: f64,
    pub employees: Vec<usize>,
    pub output: f64,
    pub sales: f64,
    pub demand: f64,
    pub expected_demand: f64,
    /// Unsold machines, depreciating like installed capital.
    pub inventories: f64,
    pub desired_inventories: f64,
    pub desired_output: f64,
    pub desired_labour: f64,
    pub hiring: i64,
    pub deposits: f64,
    pub equity: f64,
    pub profits: f64,
    pub wage_bill: f64,
    pub loans: Vec<Loan>,
    pub desired_loan: f64,
    pub new_loan: f64,
    pub deposit_bank: usize,
}

impl KFirm {
    pub fn employment(&self) -> usize {
        self.employees.len()
    }

    pub fn debt(&self) -> f64 {
        self.loans.iter().map(Loan::outstanding).sum()
    }

    pub fn produce(&self) -> f64 {
        self.productivity * self.employment() as f64
    }

    /// `deposits - debt - equity`; capital-good firms hold no booked
    /// fixed capital, inventories are expensed as produced.
    pub fn balance_gap(&self) -> f64 {
        self.deposits - self.debt() - self.equity
    }
}

/// Fitted default-model coefficients, one pair per borrower class.
#[derive(Debug, Clone, Copy)]
pub struct DefaultModel {
    pub intercept: f64,
    pub slope: f64,
    /// True once at least one fit has converged on real observations.
    pub fitted: bool,
}

impl Default for DefaultModel {
    /// Placeholder curve stored until the first fit converges; while
    /// `fitted` is false the model predicts zero defaults.
    fn default() -> Self {
        DefaultModel {
            intercept: -3.0,
            slope: 4.0,
            fitted: false,
        }
    }
}

/// A bank: grants all-or-nothing loans against a leverage-sensitive
/// capital target, reprices credit each period, and absorbs write-offs.
#[derive(Debug, Clone)]
pub struct Bank {
    pub loan_rate: f64,
    pub equity: f64,
    /// Central bank advances (taken when reserves would go negative).
    pub advances: f64,
    /// Deposits held at this bank (sum of customer accounts, cached at
    /// period start).
    pub deposits: f64,
    /// Outstanding loan book (cached at period start).
    pub loan_book: f64,
    /// Reserves, derived from the balance-sheet identity.
    pub reserves: f64,
    /// Write-offs accumulated this period (defaulted loans plus
    /// overdrafts of exiting depositors).
    pub write_offs: f64,
    /// Interest received this period.
    pub interest_income: f64,
    /// Capital-ratio target set at the credit market this period.
    pub capital_target: f64,
    pub model_c: DefaultModel,
    pub model_k: DefaultModel,
}

impl Bank {
    /// Actual capital ratio `E / L`; an empty book with positive equity
    /// is treated as unboundedly capitalized.
    pub fn capital_ratio(&self) -> f64 {
        if self.loan_book > 0.0 {
            self.equity / self.loan_book
        } else if self.equity > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------
// Households
// ---------------------------------------------------------------------

/// Per-step income: wage if employed plus deposit interest.
pub fn household_income(wage: Option<f64>, deposits: f64, r_m: f64) -> f64 {
    wage.unwrap_or(0.0) + r_m * deposits
}

/// Desired consumption spending: income plus a fraction of deposits.
pub fn household_desired_expenditure(income: f64, deposits: f64, c: f64) -> f64 {
    income + c * deposits
}

/// End-of-period deposit update. Spending can never exceed income plus
/// the full deposit balance, so a negative result indicates a
/// market-clearing bug and panics.
pub fn household_settle(household: &mut Household, income: f64, spent: f64) {
    let next = household.deposits + income - spent;
    assert!(
        next >= -1e-9,
        "household deposits would go negative: {} + {income} - {spent}",
        household.deposits
    );
    household.deposits = next.max(0.0);
}

// ---------------------------------------------------------------------
// Production, expectations, and posted terms
// ---------------------------------------------------------------------

/// One geometric-Brownian step of labour productivity with drift `g`:
/// `a' = a exp(g - sigma^2/2 + sigma eps)`.
pub fn productivity_step(productivity: f64, g: f64, sigma: f64, eps: f64) -> f64 {
    productivity * (g - 0.5 * sigma * sigma + sigma * eps).exp()
}

/// Adaptive expectation update toward the realized value.
pub fn update_expected(expected: f64, realized: f64, gamma: f64) -> f64 {
    expected + gamma * (realized - expected)
}

/// Directional adjustment shared by prices, wages, and loan rates: move
/// up or down by `sigma |eps|`, revert toward `reference` at speed
/// `gamma`, and never fall below `floor`.
pub fn directional_update(
    value: f64,
    upward: bool,
    sigma: f64,
    eps: f64,
    gamma: f64,
    reference: f64,
    floor: f64,
) -> f64 {
    let shock = sigma * eps.abs();
    let moved = if upward { value * (1.0 + shock) } else { value * (1.0 - shock) };
    (moved + gamma * (reference - value)).max(floor)
}

/// Output-weighted mean price. `None` when total output is zero (the
/// caller keeps the previous index).
pub fn weighted_mean_price(prices: &[f64], outputs: &[f64]) -> Option<f64> {
    debug_assert_eq!(prices.len(), outputs.len());
    let total: f64 = outputs.iter().sum();
    if total <= 0.0 {
        return None;
    }
    let value: f64 = prices.iter().zip(outputs).map(|(p, y)| p * y).sum();
    Some(value / total)
}

/// Desired capacity utilization and labour given desired output.
/// Consumption-good firms are capped by installed machines; capital-good
/// firms hire straight to desired output.
pub fn desired_labour_cfirm(desired_output: f64, capital: f64, nu: f64, expected_productivity: f64) -> f64 {
    debug_assert!(capital > 0.0);
    let utilization = (nu * desired_output / capital).clamp(0.0, 1.0);
    utilization * capital / (nu * expected_productivity)
}

pub fn desired_labour_kfirm(desired_output: f64, expected_productivity: f64) -> f64 {
    (desired_output / expected_productivity).max(0.0)
}

/// Integer hiring plan: the gap between desired and current employment,
/// rounded toward zero so fractional gaps defer to the next period.
pub fn hiring_plan(desired_labour: f64, employment: usize) -> i64 {
    (desired_labour - employment as f64).trunc() as i64
}

/// Capital-good desired output: expected demand plus the desired buffer,
/// net of surviving inventories, floored at zero.
pub fn kfirm_desired_output(expected_demand: f64, inventories: f64, xi: f64, delta: f64) -> f64 {
    (expected_demand * (1.0 + xi) - inventories * (1.0 - delta)).max(0.0)
}

/// Durable inventory carry: survivors of depreciation plus unsold output.
pub fn kfirm_inventory_update(inventories: f64, output: f64, sales: f64, delta: f64) -> f64 {
    inventories * (1.0 - delta) + output - sales
}

// ---------------------------------------------------------------------
// Investment and credit demand
// ---------------------------------------------------------------------

/// Target debt ratio from realized productivity growth and profit rate.
pub fn desired_debt_ratio(params: &Params, productivity_growth: f64, profit_rate: f64) -> f64 {
    params.d0 + params.d1 * productivity_growth + params.d2 * profit_rate
}

/// Investment plan of a consumption-good firm.
///
/// Returns `(desired_debt, desired_new_loan, desired_investment_spend)`:
/// the nominal debt target, the gap to current debt (floored at zero),
/// and the affordable investment budget once the wage bill is reserved.
pub fn investment_plan(
    desired_ratio: f64,
    nominal_output: f64,
    debt: f64,
    profits: f64,
    deposits: f64,
    wage_bill: f64,
) -> (f64, f64, f64) {
    let desired_debt = desired_ratio * nominal_output;
    let desired_loan = (desired_debt - debt).max(0.0);
    let desired_spend = (desired_loan + profits + deposits - wage_bill).max(0.0);
    (desired_debt, desired_loan, desired_spend)
}

/// Machine stock and book value after one period.
pub fn capital_update(capital: f64, delta: f64, bought: f64) -> f64 {
    capital * (1.0 - delta) + bought
}

/// Residual financing need after investment is settled: investment spend
/// plus wages not covered by profits and deposits.
pub fn credit_demand(investment_expenditure: f64, wage_bill: f64, profits: f64, deposits: f64) -> f64 {
    (investment_expenditure + wage_bill - profits - deposits).max(0.0)
}

// ---------------------------------------------------------------------
// Bank risk scoring and credit supply
// ---------------------------------------------------------------------

/// Expected end-of-period leverage of a borrower: expected debt (current
/// debt net of one repayment fraction, plus the requested loan) over
/// expected debt plus own funds. A non-positive denominator means own
/// funds are exhausted; leverage saturates at 1.
pub fn expected_leverage(debt: f64, rho: f64, requested: f64, deposits_plus_profits: f64) -> f64 {
    let expected_debt = debt * (1.0 - rho) + requested;
    let denom = deposits_plus_profits + expected_debt;
    if expected_debt <= 0.0 {
        0.0
    } else if denom <= 0.0 || expected_debt / denom > 1.0 {
        1.0
    } else {
        expected_debt / denom
    }
}

/// Logistic default curve. A model that has never been fitted predicts
/// zero defaults: banks that have not yet observed a bankruptcy expect
/// no bad loans, so the capital target reduces to its intercept.
pub fn default_probability(model: &DefaultModel, leverage: f64) -> f64 {
    if !model.fitted {
        return 0.0;
    }
    1.0 / (1.0 + (-(model.intercept + model.slope * leverage)).exp())
}

/// Maximum-likelihood fit of the logistic default curve by Newton
/// iteration. Returns `None` (caller keeps the previous coefficients)
/// when the window lacks both outcomes, the Hessian is singular, or the
/// iteration diverges, which happens under perfect separation.
pub fn fit_default_model(observations: &[(f64, bool)]) -> Option<(f64, f64)> {
    let defaults = observations.iter().filter(|(_, d)| *d).count();
    if defaults == 0 || defaults == observations.len() || observations.len() < 4 {
        return None;
    }
    let mut b0 = 0.0_f64;
    let mut b1 = 0.0_f64;
    for _ in 0..60 {
        let mut g0 = 0.0;
        let mut g1 = 0.0;
        let mut h00 = 0.0;
        let mut h01 = 0.0;
        let mut h11 = 0.0;
        for &(x, d) in observations {
            let p = 1.0 / (1.0 + (-(b0 + b1 * x)).exp());
            let y = if d { 1.0 } else { 0.0 };
            let w = p * (1.0 - p);
            g0 += y - p;
            g1 += (y - p) * x;
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        let det = h00 * h11 - h01 * h01;
        if !det.is_finite() || det.abs() < 1e-12 {
            return None;
        }
        let step0 = (h11 * g0 - h01 * g1) / det;
        let step1 = (h00 * g1 - h01 * g0) / det;
        b0 += step0;
        b1 += step1;
        if !(b0.is_finite() && b1.is_finite()) || b0.abs() > 1e3 || b1.abs() > 1e3 {
            return None;
        }
        if step0.abs() < 1e-10 && step1.abs() < 1e-10 {
            return Some((b0, b1));
        }
    }
    None
}

/// Expected bad loans: default probability times outstanding exposure,
/// summed over the bank's borrowers.
pub fn expected_bad_loans<'a>(
    exposures: impl Iterator<Item = (&'a DefaultModel, f64, f64)>,
) -> f64 {
    exposures
        .map(|(model, leverage, outstanding)| default_probability(model, leverage) * outstanding)
        .sum()
}

/// Capital-ratio target: intercept plus slope times the expected-loss
/// ratio. The default ratio is expected bad loans over the loan book; the
/// literal reciprocal stays behind a parameter switch.
pub fn capital_ratio_target(params: &Params, expected_bad: f64, loan_book: f64) -> f64 {
    let ratio = if params.reciprocal_expected_loss_ratio {
        if expected_bad > 0.0 {
            loan_book / expected_bad
        } else {
            0.0
        }
    } else if loan_book > 0.0 {
        expected_bad / loan_book
    } else {
        0.0
    };
    params.kappa1 + params.kappa2 * ratio
}

/// All-or-nothing credit supply: grant only while the actual capital
/// ratio strictly exceeds the target.
pub fn loan_granted(capital_target: f64, capital_ratio: f64) -> bool {
    capital_target < capital_ratio
}

// ---------------------------------------------------------------------
// Firm accounting
// ---------------------------------------------------------------------

/// Operating profit: sales revenue plus deposit interest minus wages and
/// loan interest.
pub fn firm_profit(revenue: f64, deposits: f64, r_m: f64, wage_bill: f64, interest_paid: f64) -> f64 {
    revenue + r_m * deposits - wage_bill - interest_paid
}

/// End-of-period stock updates shared by both firm sectors.
///
/// Deposits absorb profits and new borrowing and fund principal
/// repayments and investment spending. Equity absorbs profits and the
/// depreciation of booked capital, which keeps the balance identity
/// `capital_book + deposits = debt + equity` exact every period.
pub struct FirmFlows {
    pub profits: f64,
    pub new_loan: f64,
    pub principal_paid: f64,
    pub investment_expenditure: f64,
    pub capital_book_depreciation: f64,
}

pub fn apply_firm_flows(deposits: &mut f64, equity: &mut f64, flows: &FirmFlows) {
    *deposits += flows.profits + flows.new_loan - flows.principal_paid - flows.investment_expenditure;
    *equity += flows.profits - flows.capital_book_depreciation;
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> Params {
        Params::default()
    }

    #[test]
    fn household_income_splits_wage_and_interest() {
        assert_relative_eq!(
            household_income(Some(1.2), 10.0, 0.00025),
            1.2025,
            max_relative = 1e-12
        );
        assert_relative_eq!(household_income(None, 100.0, 0.00025), 0.025, max_relative = 1e-12);
    }

    #[test]
    fn desired_expenditure_adds_wealth_share() {
        let y = household_income(Some(1.0), 20.0, 0.00025);
        assert_relative_eq!(
            household_desired_expenditure(y, 20.0, 0.1),
            1.005 + 2.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn settle_accumulates_unspent_income() {
        let mut h = Household {
            deposits: 5.0,
            employer: None,
            bank: 0,
        };
        household_settle(&mut h, 2.0, 1.5);
        assert_relative_eq!(h.deposits, 5.5, max_relative = 1e-12);
    }

    #[test]
    #[should_panic(expected = "negative")]
    fn settle_rejects_overspending() {
        let mut h = Household {
            deposits: 1.0,
            employer: None,
            bank: 0,
        };
        household_settle(&mut h, 0.0, 3.0);
    }

    #[test]
    fn productivity_step_matches_frozen_value() {
        let next = productivity_step(1.0, 0.005, 0.015, 1.0);
        assert_relative_eq!(next, 1.0200865, max_relative = 1e-6);
    }

    #[test]
    fn productivity_population_moments() {
        // Log productivity after t steps is Gaussian with mean
        // (g - sigma^2/2) t and variance sigma^2 t.
        use crate::config::rng::{standard_normal, AgentKind, Purpose, RngPolicy};
        let policy = RngPolicy::new(777);
        let (g, sigma) = (0.005, 0.015);
        let t = 50;
        let n = 10_000;
        let mut logs = Vec::with_capacity(n);
        for i in 0..n {
            let mut a = 1.0_f64;
            for period in 0..t {
                let mut rng = policy.stream(AgentKind::CFirm, i as u32, period, Purpose::Productivity);
                a = productivity_step(a, g, sigma, standard_normal(&mut rng));
            }
            logs.push(a.ln());
        }
        let mean = logs.iter().sum::<f64>() / n as f64;
        let var = logs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let exp_mean = (g - 0.5 * sigma * sigma) * t as f64;
        let exp_var = sigma * sigma * t as f64;
        let mean_band = 3.0 * (exp_var / n as f64).sqrt();
        assert!(
            (mean - exp_mean).abs() < mean_band,
            "mean {mean} vs {exp_mean} band {mean_band}"
        );
        let var_band = 3.0 * exp_var * (2.0 / n as f64).sqrt();
        assert!((var - exp_var).abs() < var_band, "var {var} vs {exp_var}");
    }

    #[test]
    fn expected_demand_moves_fraction_of_gap() {
        assert_relative_eq!(update_expected(10.0, 20.0, 0.025), 10.25, max_relative = 1e-12);
    }

    #[test]
    fn price_update_directions_match_frozen_values() {
        // Sold out: up by sigma |eps| (reference equals value, no pull).
        let up = directional_update(1.0, true, 0.015, 1.0, 0.025, 1.0, 1e-6);
        assert_relative_eq!(up, 1.015, max_relative = 1e-12);
        // Leftover stock: down.
        let down = directional_update(1.0, false, 0.015, 1.0, 0.025, 1.0, 1e-6);
        assert_relative_eq!(down, 0.985, max_relative = 1e-12);
    }

    #[test]
    fn wage_update_includes_mean_reversion() {
        // Hiring, |eps| = 2, reference above the posted wage.
        let w = directional_update(1.0, true, 0.015, 2.0, 0.025, 1.2, 1e-6);
        assert_relative_eq!(w, 1.035, max_relative = 1e-12);
        let w = directional_update(1.0, false, 0.015, 2.0, 0.025, 0.5, 1e-6);
        assert_relative_eq!(w, 0.9575, max_relative = 1e-12);
    }

    #[test]
    fn rate_update_matches_frozen_values() {
        // Target at or above actual ratio: raise; at the reference rate
        // the reversion term vanishes.
        let r = directional_update(0.005, true, 0.015, 1.0, 0.025, 0.005, 1e-9);
        assert_relative_eq!(r, 0.005075, max_relative = 1e-12);
        // Slack capital: cut toward the reference.
        let r = directional_update(0.006, false, 0.015, 0.0, 0.025, 0.005, 1e-9);
        assert_relative_eq!(r, 0.005975, max_relative = 1e-12);
    }

    #[test]
    fn updates_respect_positivity_floor() {
        let floor = 1e-6;
        let v = directional_update(2e-6, false, 0.9, 10.0, 0.0, 0.0, floor);
        assert_eq!(v, floor);
    }

    #[test]
    fn fixed_point_when_at_reference_with_zero_noise() {
        for upward in [true, false] {
            let v = directional_update(1.3, upward, 0.015, 0.0, 0.025, 1.3, 1e-6);
            assert_relative_eq!(v, 1.3, max_relative = 1e-12);
        }
    }

    #[test]
    fn weighted_mean_price_weights_by_output() {
        let p = weighted_mean_price(&[1.0, 3.0], &[1.0, 1.0]).unwrap();
        assert_relative_eq!(p, 2.0, max_relative = 1e-12);
        let p = weighted_mean_price(&[1.0, 3.0], &[3.0, 1.0]).unwrap();
        assert_relative_eq!(p, 1.5, max_relative = 1e-12);
        assert!(weighted_mean_price(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn desired_labour_caps_at_capacity() {
        // Capacity binds exactly: full utilization, staff to capacity.
        let n = desired_labour_cfirm(8.0, 24.0, 3.0, 1.0);
        assert_relative_eq!(n, 8.0, max_relative = 1e-12);
        // Demand above capacity: still capacity employment.
        let n = desired_labour_cfirm(20.0, 24.0, 3.0, 1.0);
        assert_relative_eq!(n, 8.0, max_relative = 1e-12);
        // Slack demand: proportional staffing.
        let n = desired_labour_cfirm(4.0, 24.0, 3.0, 1.0);
        assert_relative_eq!(n, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn hiring_rounds_toward_zero() {
        assert_eq!(hiring_plan(8.9, 8), 0);
        assert_eq!(hiring_plan(10.2, 8), 2);
        assert_eq!(hiring_plan(6.1, 8), -1);
        assert_eq!(hiring_plan(8.0, 8), 0);
    }

    #[test]
    fn kfirm_desired_output_clamps_at_zero() {
        let y = kfirm_desired_output(10.0, 0.0, 0.1, 0.0175);
        assert_relative_eq!(y, 11.0, max_relative = 1e-12);
        let y = kfirm_desired_output(1.0, 50.0, 0.1, 0.0175);
        assert_eq!(y, 0.0);
    }

    #[test]
    fn kfirm_inventories_match_frozen_value() {
        let v = kfirm_inventory_update(4.0, 10.0, 9.0, 0.0175);
        assert_relative_eq!(v, 4.93, max_relative = 1e-12);
    }

    #[test]
    fn desired_debt_ratio_matches_frozen_values() {
        let mut p = params();
        assert_relative_eq!(desired_debt_ratio(&p, 0.0, 0.0), 0.5, max_relative = 1e-12);
        p.d1 = 3.0;
        p.d2 = 2.0;
        assert_relative_eq!(desired_debt_ratio(&p, 0.02, 0.1), 0.76, max_relative = 1e-12);
        p.d1 = 5.0;
        p.d2 = 3.0;
        assert_relative_eq!(desired_debt_ratio(&p, 0.02, 0.1), 0.9, max_relative = 1e-12);
    }

    #[test]
    fn investment_plan_matches_frozen_values() {
        let (desired_debt, loan, spend) = investment_plan(0.76, 100.0, 50.0, 5.0, 10.0, 50.0);
        assert_relative_eq!(desired_debt, 76.0, max_relative = 1e-12);
        assert_relative_eq!(loan, 26.0, max_relative = 1e-12);
        // 26 + 5 + 10 - 50 < 0: investment budget clamps at zero.
        assert_eq!(spend, 0.0);
        let (_, loan, spend) = investment_plan(0.9, 100.0, 50.0, 30.0, 25.0, 40.0);
        assert_relative_eq!(loan, 40.0, max_relative = 1e-12);
        assert_relative_eq!(spend, 55.0, max_relative = 1e-12);
    }

    #[test]
    fn capital_update_matches_frozen_value() {
        assert_relative_eq!(capital_update(30.0, 0.0175, 1.0), 30.475, max_relative = 1e-12);
    }

    #[test]
    fn amortized_payment_matches_frozen_value() {
        let payment = amortized_payment(1000.0, 0.005, 40);
        assert_relative_eq!(payment, 27.6455, max_relative = 1e-4);
        // Zero rate degenerates to straight-line repayment.
        assert_relative_eq!(amortized_payment(1000.0, 0.0, 40), 25.0, max_relative = 1e-12);
    }

    #[test]
    fn loan_interest_and_principal_split() {
        let loan = Loan::new(1000.0, 0.005, 40, 0);
        let (interest, principal) = interest_and_principal_due(std::slice::from_ref(&loan));
        assert_relative_eq!(interest, 2.6455, max_relative = 1e-3);
        assert_relative_eq!(principal, 25.0, max_relative = 1e-12);
        // Two identical loans double both.
        let loans = vec![loan.clone(), loan];
        let (i2, p2) = interest_and_principal_due(&loans);
        assert_relative_eq!(i2, 2.0 * interest, max_relative = 1e-12);
        assert_relative_eq!(p2, 2.0 * principal, max_relative = 1e-12);
    }

    #[test]
    fn loan_schedule_retires_exactly() {
        let mut loan = Loan::new(123.456789, 0.005, 40, 0);
        let mut total_principal = 0.0;
        let first_interest = loan.interest();
        for _ in 0..40 {
            let (interest, principal) = loan.advance();
            assert_relative_eq!(interest, first_interest, max_relative = 1e-12);
            total_principal += principal;
        }
        assert_eq!(loan.remaining, 0);
        // Telescoping pins the final balance at exactly zero; the re-summed
        // schedule matches the principal to rounding.
        assert_eq!(loan.outstanding(), 0.0);
        assert_relative_eq!(total_principal, 123.456789, max_relative = 1e-14);
    }

    #[test]
    fn outstanding_follows_linear_schedule() {
        let mut loan = Loan::new(1000.0, 0.005, 40, 0);
        loan.advance();
        loan.advance();
        assert_relative_eq!(loan.outstanding(), 1000.0 * 38.0 / 40.0, max_relative = 1e-12);
    }

    #[test]
    fn expected_leverage_matches_frozen_value() {
        let lambda = expected_leverage(100.0, 0.025, 0.0, 50.0);
        assert_relative_eq!(lambda, 97.5 / 147.5, max_relative = 1e-12);
    }

    #[test]
    fn expected_leverage_saturates_without_own_funds() {
        assert_eq!(expected_leverage(100.0, 0.025, 0.0, -200.0), 1.0);
        assert_eq!(expected_leverage(0.0, 0.025, 0.0, -5.0), 0.0);
        assert_eq!(expected_leverage(0.0, 0.025, 10.0, 0.0), 1.0);
    }

    #[test]
    fn default_probability_matches_frozen_value() {
        let model = DefaultModel {
            intercept: -2.0,
            slope: 4.0,
            fitted: true,
        };
        assert_relative_eq!(default_probability(&model, 1.0), 0.880797, max_relative = 1e-5);
    }

    #[test]
    fn logistic_fit_recovers_known_coefficients() {
        // Synthetic data from a known curve; an independent slow
        // gradient-descent fit pins the same optimum.
        use crate::config::rng::{uniform, AgentKind, Purpose, RngPolicy};
        let policy = RngPolicy::new(2024);
        let mut rng = policy.stream(AgentKind::Market, 0, 0, Purpose::InitAllocation);
        let (true_b0, true_b1) = (-2.0, 4.0);
        let mut obs = Vec::new();
        for _ in 0..4000 {
            let x = uniform(&mut rng);
            let p = 1.0 / (1.0 + (-(true_b0 + true_b1 * x)).exp());
            obs.push((x, uniform(&mut rng) < p));
        }
        let (b0, b1) = fit_default_model(&obs).expect("fit converges");
        assert!((b0 - true_b0).abs() < 0.3, "intercept {b0}");
        assert!((b1 - true_b1).abs() < 0.5, "slope {b1}");

        // Gradient-descent oracle on the same data.
        let (mut o0, mut o1) = (0.0_f64, 0.0_f64);
        let lr = 1.0 / obs.len() as f64;
        for _ in 0..200_000 {
            let mut g0 = 0.0;
            let mut g1 = 0.0;
            for &(x, d) in &obs {
                let p = 1.0 / (1.0 + (-(o0 + o1 * x)).exp());
                let e = if d { 1.0 } else { 0.0 } - p;
                g0 += e;
                g1 += e * x;
            }
            o0 += lr * g0;
            o1 += lr * g1;
        }
        assert!((b0 - o0).abs() < 1e-3, "newton {b0} vs oracle {o0}");
        assert!((b1 - o1).abs() < 1e-3, "newton {b1} vs oracle {o1}");
    }

    #[test]
    fn logistic_fit_refuses_degenerate_windows() {
        let all_good: Vec<(f64, bool)> = (0..50).map(|i| (i as f64 / 50.0, false)).collect();
        assert!(fit_default_model(&all_good).is_none());
        // Perfectly separated data diverges and is rejected.
        let separated: Vec<(f64, bool)> = (0..50).map(|i| (i as f64 / 50.0, i >= 25)).collect();
        assert!(fit_default_model(&separated).is_none());
    }

    #[test]
    fn capital_target_matches_frozen_value() {
        let p = params();
        // Expected-loss ratio 0.1 on a unit book.
        let target = capital_ratio_target(&p, 0.1, 1.0);
        assert_relative_eq!(target, 0.16, max_relative = 1e-12);
    }

    #[test]
    fn loan_granted_requires_strict_headroom() {
        assert!(loan_granted(0.1, 0.2));
        assert!(!loan_granted(0.2, 0.2));
        assert!(!loan_granted(0.3, 0.2));
        assert!(loan_granted(0.3, f64::INFINITY));
    }

    #[test]
    fn expected_bad_loans_sums_probability_weighted_exposure() {
        let model = DefaultModel {
            intercept: -2.0,
            slope: 4.0,
            fitted: true,
        };
        let exposures = [(&model, 1.0, 100.0), (&model, 0.0, 50.0)];
        let expected = 0.8807970779778823 * 100.0 + (1.0 / (1.0 + 2.0_f64.exp())) * 50.0;
        assert_relative_eq!(
            expected_bad_loans(exposures.into_iter()),
            expected,
            max_relative = 1e-12
        );
    }

    #[test]
    fn firm_flows_preserve_balance_identity() {
        // A representative accounting step keeps book + deposits equal to
        // debt + equity when depreciation is charged to equity.
        let mut deposits = 10.0;
        let mut equity = 29.0;
        let capital_book = 24.0;
        let debt = 5.0;
        assert_relative_eq!(capital_book + deposits, debt + equity + 0.0, max_relative = 1e-12);
        let delta = 0.0175;
        let flows = FirmFlows {
            profits: 1.25,
            new_loan: 2.0,
            principal_paid: 0.5,
            investment_expenditure: 3.0,
            capital_book_depreciation: delta * capital_book,
        };
        apply_firm_flows(&mut deposits, &mut equity, &flows);
        let new_book = capital_book * (1.0 - delta) + 3.0;
        let new_debt = debt + 2.0 - 0.5;
        assert_relative_eq!(new_book + deposits, new_debt + equity, max_relative = 1e-12);
    }

    #[test]
    fn firm_profit_components() {
        assert_relative_eq!(
            firm_profit(100.0, 50.0, 0.00025, 80.0, 2.5),
            17.5125,
            max_relative = 1e-12
        );
    }
}
