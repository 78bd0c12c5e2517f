//! Simulation state, the period schedule, and stock-flow auditing.
//!
//! One period runs eight phases in a fixed order: entry of replacement
//! firms, the labour market, production and posted-price updates, the
//! consumption market, the capital market, the credit market, firm
//! accounting with exit, and bank accounting with depositor bailouts.
//! Plans, market indices, and the trace record close the period, and the
//! double-entry audit in [`audit`] must pass before the state advances.
//!
//! All randomness is drawn from keyed streams, so a period's outcome is a
//! pure function of the master seed, the parameters, and the period
//! index; iteration order never feeds the random draws.

pub mod audit;
pub mod trace;

use std::collections::VecDeque;

use crate::agents::{
    apply_firm_flows, capital_update, credit_demand, default_probability,
    desired_debt_ratio, desired_labour_cfirm, desired_labour_kfirm, directional_update,
    expected_leverage, firm_profit, fit_default_model, hiring_plan, household_desired_expenditure,
    household_income, household_settle, interest_and_principal_due, investment_plan,
    kfirm_desired_output, kfirm_inventory_update, productivity_step, update_expected,
    weighted_mean_price, Bank, CFirm, DefaultModel, FirmClass, FirmFlows, Household, KFirm, Loan,
};
use crate::analytics;
use crate::config::rng::{standard_normal, uniform_below, AgentKind, Purpose, RngPolicy};
use crate::config::{Params, RunSettings};
use crate::debtrank::{self, CreditNetwork};
use crate::markets::{
    credit_market, goods_market, labour_market, raw_shares, Buyer, CreditRequest, LabourMarket,
    MarketId,
};
use audit::{capture_stocks, FlowLedger};
use thiserror::Error;
use trace::{BankSnapshot, CreditEdge, FirmSnapshot, SimulationTrace, Snapshot, TraceRow};

/// Periods of default observations kept for the borrower-risk fit.
const DEFAULT_FIT_WINDOW: usize = 40;
/// Posted prices and wages never fall below this fraction of their
/// market reference, which keeps goods markets well defined under
/// extreme draws.
const RELATIVE_FLOOR: f64 = 0.01;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("infeasible initialization: {0}")]
    Infeasible(String),
    #[error("accounting audit failed at period {period}: {detail}")]
    AuditFailure { period: u32, detail: String },
}

/// Everything that persists from one period to the next.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub period: u32,
    pub households: Vec<Household>,
    pub cfirms: Vec<CFirm>,
    pub kfirms: Vec<KFirm>,
    pub banks: Vec<Bank>,

    /// Output-weighted consumption price index of the latest period.
    pub price_index: f64,
    /// Output-weighted capital price index.
    pub capital_price_index: f64,
    /// Employment-weighted wage.
    pub wage_index: f64,

    /// Previous-period market shares, the reference for instability
    /// statistics and for visit sampling.
    pub prev_shares_consumption: Vec<f64>,
    pub prev_shares_capital: Vec<f64>,
    pub prev_shares_labour: Vec<f64>,
    pub prev_shares_credit: Vec<f64>,

    /// Slots that went bankrupt this period, replaced at the next entry
    /// phase.
    pub dead_cfirms: Vec<usize>,
    pub dead_kfirms: Vec<usize>,

    /// Rolling per-period default observations (expected leverage,
    /// defaulted) per borrower class.
    pub default_history_c: VecDeque<Vec<(f64, bool)>>,
    pub default_history_k: VecDeque<Vec<(f64, bool)>>,

    /// Cumulative event counters.
    pub bankruptcies_cfirm: u64,
    pub bankruptcies_kfirm: u64,
    pub bailouts: u64,
    /// Irregular events worth surfacing (bailout shortfalls).
    pub log: Vec<String>,
}

impl SimulationState {
    fn n_firms(&self) -> usize {
        self.cfirms.len() + self.kfirms.len()
    }

    fn unemployed(&self) -> Vec<usize> {
        (0..self.households.len())
            .filter(|&h| self.households[h].employer.is_none())
            .collect()
    }
}

/// A deterministic simulation: parameters, keyed random streams, state,
/// and the most recent period's audit ledger.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub params: Params,
    pub policy: RngPolicy,
    pub state: SimulationState,
    pub last_ledger: FlowLedger,
}

/// Initial conditions: every agent starts on the balanced configuration
/// implied by the parameters, with productivity and prices normalised to
/// one and each firm's debt ratio, profit share, and wage share set to
/// their closed-form steady values.
pub fn initialize(params: &Params, seed: u64) -> Result<Simulation, EngineError> {
    params
        .validate()
        .map_err(|e| EngineError::Infeasible(e.to_string()))?;
    let policy = RngPolicy::new(seed);
    let n_h = params.n_households;
    let n_c = params.n_cfirms;
    let n_k = params.n_kfirms;
    let n_per_firm = n_h / (n_c + n_k);
    let y0 = n_per_firm as f64;

    // Closed-form starting ratios; the wage share must be positive for
    // the configuration to exist.
    let g = params.g;
    let break_even = params.nu * (g + params.delta);
    let d0 = (params.d0 + g * params.d1 + break_even * params.d2) / (1.0 + g * params.d2);
    let pi0 = break_even - g * d0;
    let omega0 = 1.0 - pi0 - params.r_n * d0;
    if omega0 <= 0.0 {
        return Err(EngineError::Infeasible(format!(
            "initial wage share {omega0:.6} is not positive (profit share {pi0:.6}, debt ratio {d0:.6})"
        )));
    }

    // One allocation stream drives every initial assignment, in a fixed
    // order: employers, then deposit banks, then lending banks.
    let mut alloc = policy.stream(AgentKind::Market, 0, 0, Purpose::InitAllocation);
    let mut order: Vec<usize> = (0..n_h).collect();
    crate::config::rng::shuffle(&mut alloc, &mut order);

    let mut households: Vec<Household> = (0..n_h)
        .map(|_| Household {
            deposits: omega0,
            employer: None,
            bank: 0,
        })
        .collect();

    let mut cfirms: Vec<CFirm> = Vec::with_capacity(n_c);
    for i in 0..n_c {
        let employees: Vec<usize> = order[i * n_per_firm..(i + 1) * n_per_firm].to_vec();
        for &h in &employees {
            households[h].employer = Some((FirmClass::Consumption, i));
        }
        let debt = d0 * y0;
        let profits = pi0 * y0;
        let deposits = profits + debt;
        let capital = params.nu * y0;
        cfirms.push(CFirm {
            productivity: 1.0,
            price: 1.0,
            wage: omega0,
            employees,
            capital,
            capital_book: capital,
            output: y0,
            sales: y0,
            demand: y0,
            expected_demand: y0,
            inventories: 0.0,
            desired_output: y0,
            desired_labour: y0,
            hiring: 0,
            deposits,
            equity: capital + deposits - debt,
            profits,
            wage_bill: omega0 * y0,
            loans: Vec::new(),
            desired_loan: 0.0,
            desired_investment: 0.0,
            investment_goods: 0.0,
            investment_expenditure: 0.0,
            new_loan: 0.0,
            deposit_bank: 0,
        });
    }
    let mut kfirms: Vec<KFirm> = Vec::with_capacity(n_k);
    for j in 0..n_k {
        let base = (n_c + j) * n_per_firm;
        let employees: Vec<usize> = order[base..base + n_per_firm].to_vec();
        for &h in &employees {
            households[h].employer = Some((FirmClass::Capital, j));
        }
        let profits = (1.0 - omega0) * y0;
        kfirms.push(KFirm {
            productivity: 1.0,
            price: 1.0,
            wage: omega0,
            employees,
            output: y0,
            sales: y0,
            demand: y0,
            expected_demand: y0,
            inventories: 0.0,
            desired_inventories: params.xi * y0,
            desired_output: y0,
            desired_labour: y0,
            hiring: 0,
            deposits: profits,
            equity: profits,
            profits,
            wage_bill: omega0 * y0,
            loans: Vec::new(),
            desired_loan: 0.0,
            new_loan: 0.0,
            deposit_bank: 0,
        });
    }

    for h in &mut households {
        h.bank = uniform_below(&mut alloc, params.n_banks);
    }
    for f in &mut cfirms {
        f.deposit_bank = uniform_below(&mut alloc, params.n_banks);
    }
    for f in &mut kfirms {
        f.deposit_bank = uniform_below(&mut alloc, params.n_banks);
    }
    let mut loan_books = vec![0.0; params.n_banks];
    for f in &mut cfirms {
        let bank = uniform_below(&mut alloc, params.n_banks);
        let debt = d0 * y0;
        f.loans.push(Loan::new(debt, params.r_n, params.n_repay, bank));
        loan_books[bank] += debt;
    }

    let mut deposits_at = vec![0.0; params.n_banks];
    for h in &households {
        deposits_at[h.bank] += h.deposits;
    }
    for f in &cfirms {
        deposits_at[f.deposit_bank] += f.deposits;
    }
    for f in &kfirms {
        deposits_at[f.deposit_bank] += f.deposits;
    }
    let banks: Vec<Bank> = (0..params.n_banks)
        .map(|b| {
            let equity = params.kappa1 * loan_books[b];
            Bank {
                loan_rate: params.r_n,
                equity,
                advances: 0.0,
                deposits: deposits_at[b],
                loan_book: loan_books[b],
                reserves: deposits_at[b] + equity - loan_books[b],
                write_offs: 0.0,
                interest_income: 0.0,
                capital_target: params.kappa1,
                model_c: DefaultModel::default(),
                model_k: DefaultModel::default(),
            }
        })
        .collect();

    let employment: Vec<f64> = cfirms
        .iter()
        .map(|f| f.employment() as f64)
        .chain(kfirms.iter().map(|f| f.employment() as f64))
        .collect();
    let c_outputs: Vec<f64> = cfirms.iter().map(|f| f.output).collect();
    let k_outputs: Vec<f64> = kfirms.iter().map(|f| f.output).collect();

    let state = SimulationState {
        period: 0,
        prev_shares_consumption: raw_shares(&c_outputs),
        prev_shares_capital: raw_shares(&k_outputs),
        prev_shares_labour: raw_shares(&employment),
        prev_shares_credit: raw_shares(&loan_books),
        households,
        cfirms,
        kfirms,
        banks,
        price_index: 1.0,
        capital_price_index: 1.0,
        wage_index: omega0,
        dead_cfirms: Vec::new(),
        dead_kfirms: Vec::new(),
        default_history_c: VecDeque::new(),
        default_history_k: VecDeque::new(),
        bankruptcies_cfirm: 0,
        bankruptcies_kfirm: 0,
        bailouts: 0,
        log: Vec::new(),
    };
    Ok(Simulation {
        params: params.clone(),
        policy,
        state,
        last_ledger: FlowLedger::default(),
    })
}

/// Proportional depositor levy: how much to take from each balance to
/// raise `required`. Returns `(cuts, funded, shortfall)`; when the
/// balances cannot cover the requirement they are taken in full.
pub fn proportional_cuts(balances: &[f64], required: f64) -> (Vec<f64>, f64, f64) {
    if required <= 0.0 {
        return (vec![0.0; balances.len()], 0.0, 0.0);
    }
    let total: f64 = balances.iter().filter(|&&b| b > 0.0).sum();
    if total <= required {
        let cuts: Vec<f64> = balances.iter().map(|&b| b.max(0.0)).collect();
        let funded: f64 = cuts.iter().sum();
        return (cuts, funded, required - funded);
    }
    let cuts: Vec<f64> = balances
        .iter()
        .map(|&b| if b > 0.0 { b * required / total } else { 0.0 })
        .collect();
    let funded: f64 = cuts.iter().sum();
    (cuts, funded, 0.0)
}

impl Simulation {
    /// Replace last period's bankrupt slots with entrants: a copy of a
    /// surviving incumbent's real state, market-average price and wage,
    /// no money, no debt, and one employee hired from the unemployed.
    /// Returns the per-slot entry flags; entrants keep their posted
    /// terms and productivity unchanged for the rest of the period.
    /// Replace last period's bankrupt slots with entrants: each copies a
    /// surviving incumbent's productivity, capital, expectations, and
    /// deposit cushion, starts debt free with one employee, and prices at
    /// the market index. Starting deposits are funded by a proportional
    /// levy on household accounts (scaled down if households cannot cover
    /// the full amount). Returns the entered flags per class plus the
    /// funded deposit totals for the flow ledger.
    fn replace_dead_firms(&mut self, t: u32) -> (Vec<bool>, Vec<bool>, f64, f64) {
        let mut entered_c = vec![false; self.state.cfirms.len()];
        let mut entered_k = vec![false; self.state.kfirms.len()];
        let dead_c = std::mem::take(&mut self.state.dead_cfirms);
        let dead_k = std::mem::take(&mut self.state.dead_kfirms);

        let survivors_c: Vec<usize> =
            (0..self.state.cfirms.len()).filter(|i| !dead_c.contains(i)).collect();
        for &slot in &dead_c {
            entered_c[slot] = true;
            let mut copy_rng = self.policy.stream(AgentKind::CFirm, slot as u32, t, Purpose::EntrantCopy);
            let template = if survivors_c.is_empty() {
                slot
            } else {
                survivors_c[uniform_below(&mut copy_rng, survivors_c.len())]
            };
            let (productivity, capital, capital_book, deposits, expected_demand) = {
                let tpl = &self.state.cfirms[template];
                (tpl.productivity, tpl.capital, tpl.capital_book, tpl.deposits, tpl.expected_demand)
            };
            let price = self.state.price_index;
            let wage = self.state.wage_index;
            let hired = self.hire_one_unemployed(FirmClass::Consumption, slot, t);
            let f = &mut self.state.cfirms[slot];
            f.productivity = productivity;
            f.capital = capital;
            f.capital_book = capital_book;
            f.expected_demand = expected_demand;
            f.price = price;
            f.wage = wage;
            f.employees = hired;
            f.output = 0.0;
            f.sales = 0.0;
            f.demand = 0.0;
            f.inventories = 0.0;
            f.deposits = deposits.max(0.0);
            f.equity = f.deposits + f.capital_book;
            f.profits = 0.0;
            f.wage_bill = 0.0;
            f.loans.clear();
            f.desired_loan = 0.0;
            f.desired_investment = 0.0;
            f.investment_goods = 0.0;
            f.investment_expenditure = 0.0;
            f.new_loan = 0.0;
            f.desired_output = f.expected_demand;
            let ae = f.productivity * self.params.g.exp();
            f.desired_labour = desired_labour_cfirm(f.desired_output, f.capital, self.params.nu, ae);
            f.hiring = hiring_plan(f.desired_labour, f.employment());
        }

        let survivors_k: Vec<usize> =
            (0..self.state.kfirms.len()).filter(|j| !dead_k.contains(j)).collect();
        for &slot in &dead_k {
            entered_k[slot] = true;
            let mut copy_rng = self.policy.stream(AgentKind::KFirm, slot as u32, t, Purpose::EntrantCopy);
            let template = if survivors_k.is_empty() {
                slot
            } else {
                survivors_k[uniform_below(&mut copy_rng, survivors_k.len())]
            };
            let (productivity, deposits, expected_demand) = {
                let tpl = &self.state.kfirms[template];
                (tpl.productivity, tpl.deposits, tpl.expected_demand)
            };
            let price = self.state.capital_price_index;
            let wage = self.state.wage_index;
            let hired = self.hire_one_unemployed(FirmClass::Capital, slot, t);
            let f = &mut self.state.kfirms[slot];
            f.productivity = productivity;
            f.expected_demand = expected_demand;
            f.price = price;
            f.wage = wage;
            f.employees = hired;
            f.output = 0.0;
            f.sales = 0.0;
            f.demand = 0.0;
            f.inventories = 0.0;
            f.desired_inventories = self.params.xi * f.expected_demand;
            f.deposits = deposits.max(0.0);
            f.equity = f.deposits;
            f.profits = 0.0;
            f.wage_bill = 0.0;
            f.loans.clear();
            f.desired_loan = 0.0;
            f.new_loan = 0.0;
            f.desired_output = kfirm_desired_output(
                f.expected_demand,
                0.0,
                self.params.xi,
                self.params.delta,
            );
            let ae = f.productivity * self.params.g.exp();
            f.desired_labour = desired_labour_kfirm(f.desired_output, ae);
            f.hiring = hiring_plan(f.desired_labour, f.employment());
        }

        // Households fund the entrants' starting deposits in proportion
        // to their balances; if they cannot cover the total, every
        // entrant's cushion is scaled down by the funded fraction.
        let required_c: f64 = dead_c.iter().map(|&i| self.state.cfirms[i].deposits).sum();
        let required_k: f64 = dead_k.iter().map(|&j| self.state.kfirms[j].deposits).sum();
        let required = required_c + required_k;
        let mut funded_c = required_c;
        let mut funded_k = required_k;
        if required > 0.0 {
            let balances: Vec<f64> = self.state.households.iter().map(|h| h.deposits).collect();
            let (cuts, funded, shortfall) = proportional_cuts(&balances, required);
            for (h, cut) in self.state.households.iter_mut().zip(&cuts) {
                h.deposits -= cut;
            }
            if shortfall > 0.0 {
                let scale = funded / required;
                for &slot in &dead_c {
                    let f = &mut self.state.cfirms[slot];
                    f.deposits *= scale;
                    f.equity = f.deposits + f.capital_book;
                }
                for &slot in &dead_k {
                    let f = &mut self.state.kfirms[slot];
                    f.deposits *= scale;
                    f.equity = f.deposits;
                }
                funded_c = required_c * scale;
                funded_k = required_k * scale;
            }
        }
        (entered_c, entered_k, funded_c, funded_k)
    }

    fn hire_one_unemployed(&mut self, class: FirmClass, slot: usize, t: u32) -> Vec<usize> {
        let pool = self.state.unemployed();
        if pool.is_empty() {
            return Vec::new();
        }
        let kind = match class {
            FirmClass::Consumption => AgentKind::CFirm,
            FirmClass::Capital => AgentKind::KFirm,
        };
        let mut rng = self.policy.stream(kind, slot as u32, t, Purpose::EntrantHire);
        let h = pool[uniform_below(&mut rng, pool.len())];
        self.state.households[h].employer = Some((class, slot));
        vec![h]
    }

    /// Advance one period. Returns the period's trace record, or the
    /// audit failure that aborted it.
    pub fn step(&mut self) -> Result<TraceRow, EngineError> {
        let t = self.state.period + 1;
        let params = self.params.clone();
        let n_c = self.state.cfirms.len();
        let n_k = self.state.kfirms.len();
        let n_h = self.state.households.len();
        let n_b = self.state.banks.len();
        let mut ledger = FlowLedger {
            period: t,
            ..FlowLedger::default()
        };

        // Phase 1: entrants replace last period's bankrupt slots, then
        // per-period accumulators and start-of-period caches reset. The
        // opening stocks are captured first so the entry levy is audited
        // as a flow of this period.
        ledger.start = capture_stocks(&self.state);
        let (entered_c, entered_k, entry_c, entry_k) = self.replace_dead_firms(t);
        ledger.entry_cfirm = entry_c;
        ledger.entry_kfirm = entry_k;
        ledger.entry_household = entry_c + entry_k;
        let mut m_start_bank = vec![0.0; n_b];
        for h in &self.state.households {
            m_start_bank[h.bank] += h.deposits;
        }
        for f in &self.state.cfirms {
            m_start_bank[f.deposit_bank] += f.deposits;
        }
        for f in &self.state.kfirms {
            m_start_bank[f.deposit_bank] += f.deposits;
        }
        let mut e_start_bank = vec![0.0; n_b];
        let mut l_start_bank = vec![0.0; n_b];
        for (b, bank) in self.state.banks.iter_mut().enumerate() {
            bank.deposits = m_start_bank[b];
            bank.write_offs = 0.0;
            bank.interest_income = 0.0;
            e_start_bank[b] = bank.equity;
            l_start_bank[b] = bank.loan_book;
        }

        // Phase 2: the labour market. Firms reprice labour on the sign
        // of their hiring plan, shed workers when the plan is negative
        // (always keeping at least one), and post the surplus as
        // vacancies; the unemployed then search by employment share.
        {
            let state = &mut self.state;
            let mut wages = vec![0.0; n_c + n_k];
            let mut employment = vec![0.0; n_c + n_k];
            let mut vacancies = vec![0usize; n_c + n_k];
            for i in 0..n_c {
                let f = &mut state.cfirms[i];
                if !entered_c[i] {
                    let mut rng = self.policy.stream(AgentKind::CFirm, i as u32, t, Purpose::WageNoise);
                    let eps = standard_normal(&mut rng);
                    f.wage = directional_update(
                        f.wage,
                        f.hiring >= 0,
                        params.sigma_w,
                        eps,
                        params.gamma_w,
                        state.wage_index,
                        RELATIVE_FLOOR * state.wage_index,
                    );
                }
                if f.hiring < 0 && f.employment() > 1 {
                    let n_fire = ((-f.hiring) as usize).min(f.employment() - 1);
                    let mut rng = self.policy.stream(AgentKind::CFirm, i as u32, t, Purpose::Firing);
                    for k in 0..n_fire {
                        let pick = k + uniform_below(&mut rng, f.employees.len() - k);
                        f.employees.swap(k, pick);
                    }
                    for h in f.employees.drain(..n_fire) {
                        state.households[h].employer = None;
                    }
                }
                wages[i] = f.wage;
                employment[i] = f.employment() as f64;
                vacancies[i] = f.hiring.max(0) as usize;
            }
            for j in 0..n_k {
                let f = &mut state.kfirms[j];
                if !entered_k[j] {
                    let mut rng = self.policy.stream(AgentKind::KFirm, j as u32, t, Purpose::WageNoise);
                    let eps = standard_normal(&mut rng);
                    f.wage = directional_update(
                        f.wage,
                        f.hiring >= 0,
                        params.sigma_w,
                        eps,
                        params.gamma_w,
                        state.wage_index,
                        RELATIVE_FLOOR * state.wage_index,
                    );
                }
                if f.hiring < 0 && f.employment() > 1 {
                    let n_fire = ((-f.hiring) as usize).min(f.employment() - 1);
                    let mut rng = self.policy.stream(AgentKind::KFirm, j as u32, t, Purpose::Firing);
                    for k in 0..n_fire {
                        let pick = k + uniform_below(&mut rng, f.employees.len() - k);
                        f.employees.swap(k, pick);
                    }
                    for h in f.employees.drain(..n_fire) {
                        state.households[h].employer = None;
                    }
                }
                wages[n_c + j] = f.wage;
                employment[n_c + j] = f.employment() as f64;
                vacancies[n_c + j] = f.hiring.max(0) as usize;
            }
            let unemployed = state.unemployed();
            let market = LabourMarket {
                wages: &wages,
                employment: &employment,
                vacancies: &vacancies,
                unemployed: &unemployed,
                n_households: n_h,
            };
            for (h, firm) in labour_market(&self.policy, t, params.n_job_applications, &market) {
                if firm < n_c {
                    state.households[h].employer = Some((FirmClass::Consumption, firm));
                    state.cfirms[firm].employees.push(h);
                } else {
                    state.households[h].employer = Some((FirmClass::Capital, firm - n_c));
                    state.kfirms[firm - n_c].employees.push(h);
                }
            }
        }

        // Phase 3: productivity steps, posted-price updates, production,
        // and the wage bill. Consumption firms raise prices only after
        // selling out; capital firms only at or below their inventory
        // target.
        let mut alpha_c = vec![0.0; n_c];
        let mut employment_paid = vec![0usize; n_c + n_k];
        for i in 0..n_c {
            let f = &mut self.state.cfirms[i];
            if !entered_c[i] {
                let mut rng = self.policy.stream(AgentKind::CFirm, i as u32, t, Purpose::Productivity);
                let eps = standard_normal(&mut rng);
                let next = productivity_step(f.productivity, params.g, params.sigma_a, eps);
                alpha_c[i] = (next / f.productivity).ln();
                f.productivity = next;
                let mut rng = self.policy.stream(AgentKind::CFirm, i as u32, t, Purpose::PriceNoise);
                let eps = standard_normal(&mut rng);
                f.price = directional_update(
                    f.price,
                    f.inventories <= 0.0,
                    params.sigma_p,
                    eps,
                    params.gamma_p,
                    self.state.price_index,
                    RELATIVE_FLOOR * self.state.price_index,
                );
            }
            f.output = f.produce(params.nu);
            f.wage_bill = f.wage * f.employment() as f64;
            employment_paid[i] = f.employment();
            ledger.wages_cfirm += f.wage_bill;
        }
        for j in 0..n_k {
            let f = &mut self.state.kfirms[j];
            if !entered_k[j] {
                let mut rng = self.policy.stream(AgentKind::KFirm, j as u32, t, Purpose::Productivity);
                let eps = standard_normal(&mut rng);
                f.productivity = productivity_step(f.productivity, params.g, params.sigma_a, eps);
                let mut rng = self.policy.stream(AgentKind::KFirm, j as u32, t, Purpose::PriceNoise);
                let eps = standard_normal(&mut rng);
                f.price = directional_update(
                    f.price,
                    f.inventories <= f.desired_inventories,
                    params.sigma_p,
                    eps,
                    params.gamma_p,
                    self.state.capital_price_index,
                    RELATIVE_FLOOR * self.state.capital_price_index,
                );
            }
            f.output = f.produce();
            f.wage_bill = f.wage * f.employment() as f64;
            employment_paid[n_c + j] = f.employment();
            ledger.wages_kfirm += f.wage_bill;
        }

        // Phase 4: the consumption market. Households spend their wage
        // and deposit interest plus a fraction of wealth; firms sell out
        // of current production only. Consumption-firm profits and the
        // interest due on their standing loans are fixed here.
        let mut ip_c = vec![(0.0, 0.0); n_c];
        {
            let mut incomes = vec![0.0; n_h];
            let mut buyers = Vec::with_capacity(n_h);
            for (h, household) in self.state.households.iter().enumerate() {
                let wage = household.employer.map(|(class, idx)| match class {
                    FirmClass::Consumption => self.state.cfirms[idx].wage,
                    FirmClass::Capital => self.state.kfirms[idx].wage,
                });
                let income = household_income(wage, household.deposits, params.r_m);
                incomes[h] = income;
                ledger.wages_household += wage.unwrap_or(0.0);
                ledger.deposit_interest_household += params.r_m * household.deposits;
                buyers.push(Buyer {
                    id: h,
                    budget: household_desired_expenditure(income, household.deposits, params.c),
                });
            }
            let prices: Vec<f64> = self.state.cfirms.iter().map(|f| f.price).collect();
            let stocks: Vec<f64> = self.state.cfirms.iter().map(|f| f.output).collect();
            let outcome = goods_market(
                &self.policy,
                t,
                MarketId::Consumption,
                &buyers,
                &prices,
                &stocks,
                &self.state.prev_shares_consumption,
                params.n_consumption_visits,
                params.literal_demand_accounting,
            );
            for (h, household) in self.state.households.iter_mut().enumerate() {
                household_settle(household, incomes[h], outcome.spent[h]);
                ledger.consumption_spent += outcome.spent[h];
            }
            for (i, f) in self.state.cfirms.iter_mut().enumerate() {
                f.demand = outcome.demand[i];
                f.sales = outcome.sold[i];
                f.inventories = outcome.stocks[i];
                ip_c[i] = interest_and_principal_due(&f.loans);
                f.profits = firm_profit(
                    outcome.revenue[i],
                    f.deposits,
                    params.r_m,
                    f.wage_bill,
                    ip_c[i].0,
                );
                ledger.consumption_revenue += outcome.revenue[i];
                ledger.loan_interest_cfirm += ip_c[i].0;
                ledger.deposit_interest_cfirm += params.r_m * f.deposits;
                ledger.profits_cfirm_current += f.profits;
            }
        }

        // Phase 5: the capital market. Consumption firms set an
        // investment budget from their target debt ratio and shop for
        // machines; capital-firm profits, the inventory carry, and the
        // physical capital stock update land here.
        let mut ip_k = vec![(0.0, 0.0); n_k];
        {
            let mut buyers = Vec::with_capacity(n_c);
            for (i, f) in self.state.cfirms.iter_mut().enumerate() {
                let nominal_output = f.price * f.output;
                let profit_rate = if nominal_output > 0.0 {
                    f.profits / nominal_output
                } else {
                    0.0
                };
                let ratio = desired_debt_ratio(&params, alpha_c[i], profit_rate);
                let (_, desired_loan, desired_spend) = investment_plan(
                    ratio,
                    nominal_output,
                    f.debt(),
                    f.profits,
                    f.deposits,
                    f.wage_bill,
                );
                f.desired_loan = desired_loan;
                f.desired_investment = desired_spend;
                buyers.push(Buyer {
                    id: i,
                    budget: desired_spend,
                });
            }
            let prices: Vec<f64> = self.state.kfirms.iter().map(|f| f.price).collect();
            let stocks: Vec<f64> = self
                .state
                .kfirms
                .iter()
                .map(|f| f.inventories * (1.0 - params.delta) + f.output)
                .collect();
            let outcome = goods_market(
                &self.policy,
                t,
                MarketId::Capital,
                &buyers,
                &prices,
                &stocks,
                &self.state.prev_shares_capital,
                params.n_capital_visits,
                params.literal_demand_accounting,
            );
            for (i, f) in self.state.cfirms.iter_mut().enumerate() {
                f.investment_goods = outcome.bought[i];
                f.investment_expenditure = outcome.spent[i];
                f.capital = capital_update(f.capital, params.delta, f.investment_goods);
                ledger.investment_spent += outcome.spent[i];
            }
            for (j, f) in self.state.kfirms.iter_mut().enumerate() {
                f.demand = outcome.demand[j];
                f.sales = outcome.sold[j];
                f.inventories =
                    kfirm_inventory_update(f.inventories, f.output, f.sales, params.delta);
                ip_k[j] = interest_and_principal_due(&f.loans);
                f.profits = firm_profit(
                    outcome.revenue[j],
                    f.deposits,
                    params.r_m,
                    f.wage_bill,
                    ip_k[j].0,
                );
                ledger.investment_revenue += outcome.revenue[j];
                ledger.loan_interest_kfirm += ip_k[j].0;
                ledger.deposit_interest_kfirm += params.r_m * f.deposits;
                ledger.profits_kfirm_current += f.profits;
            }
        }

        // Phase 6: the credit market. Banks refit the default curves on
        // the rolling observation window, score every borrower's
        // expected leverage, set capital targets from expected bad
        // loans, and lend all-or-nothing; rates reprice afterwards on
        // whether the target binds.
        let mut leverage_c = vec![0.0; n_c];
        let mut leverage_k = vec![0.0; n_k];
        let n_pre_c: Vec<usize> = self.state.cfirms.iter().map(|f| f.loans.len()).collect();
        let n_pre_k: Vec<usize> = self.state.kfirms.iter().map(|f| f.loans.len()).collect();
        {
            // A window with no defaults carries no bankruptcy information,
            // so the curve reverts to predicting zero: risk memory fades
            // as crisis observations age out. A refit that fails on mixed
            // data keeps the previous coefficients.
            let obs_c: Vec<(f64, bool)> = self
                .state
                .default_history_c
                .iter()
                .flatten()
                .copied()
                .collect();
            if obs_c.iter().all(|&(_, defaulted)| !defaulted) {
                for bank in &mut self.state.banks {
                    bank.model_c = DefaultModel::default();
                }
            } else if let Some((intercept, slope)) = fit_default_model(&obs_c) {
                for bank in &mut self.state.banks {
                    bank.model_c = DefaultModel {
                        intercept,
                        slope,
                        fitted: true,
                    };
                }
            }
            let obs_k: Vec<(f64, bool)> = self
                .state
                .default_history_k
                .iter()
                .flatten()
                .copied()
                .collect();
            if obs_k.iter().all(|&(_, defaulted)| !defaulted) {
                for bank in &mut self.state.banks {
                    bank.model_k = DefaultModel::default();
                }
            } else if let Some((intercept, slope)) = fit_default_model(&obs_k) {
                for bank in &mut self.state.banks {
                    bank.model_k = DefaultModel {
                        intercept,
                        slope,
                        fitted: true,
                    };
                }
            }
            let model_c = self.state.banks[0].model_c;
            let model_k = self.state.banks[0].model_k;

            let mut requests = Vec::with_capacity(n_c + n_k);
            let mut expected_bad = vec![0.0; n_b];
            for (i, f) in self.state.cfirms.iter_mut().enumerate() {
                let amount =
                    credit_demand(f.investment_expenditure, f.wage_bill, f.profits, f.deposits);
                f.new_loan = 0.0;
                f.desired_loan = amount;
                leverage_c[i] = expected_leverage(
                    f.debt(),
                    params.rho,
                    amount,
                    f.deposits + f.profits,
                );
                let p = default_probability(&model_c, leverage_c[i]);
                for loan in &f.loans {
                    expected_bad[loan.bank] += p * loan.outstanding();
                }
                requests.push(CreditRequest {
                    kind: AgentKind::CFirm,
                    id: i,
                    amount,
                });
            }
            for (j, f) in self.state.kfirms.iter_mut().enumerate() {
                let amount = credit_demand(0.0, f.wage_bill, f.profits, f.deposits);
                f.new_loan = 0.0;
                f.desired_loan = amount;
                leverage_k[j] = expected_leverage(
                    f.debt(),
                    params.rho,
                    amount,
                    f.deposits + f.profits,
                );
                let p = default_probability(&model_k, leverage_k[j]);
                for loan in &f.loans {
                    expected_bad[loan.bank] += p * loan.outstanding();
                }
                requests.push(CreditRequest {
                    kind: AgentKind::KFirm,
                    id: j,
                    amount,
                });
            }
            let loan_books: Vec<f64> = l_start_bank.clone();
            let mut targets = vec![0.0; n_b];
            let mut ratios = vec![0.0; n_b];
            let mut rates = vec![0.0; n_b];
            for (b, bank) in self.state.banks.iter_mut().enumerate() {
                targets[b] = crate::agents::capital_ratio_target(
                    &params,
                    expected_bad[b],
                    bank.loan_book,
                );
                bank.capital_target = targets[b];
                ratios[b] = bank.capital_ratio();
                rates[b] = bank.loan_rate;
            }
            let grants = credit_market(&self.policy, t, &requests, &loan_books, &targets, &ratios, &rates);
            if std::env::var_os("CREDIT_LOG").is_some() && t <= 4 {
                let demand: f64 = requests.iter().map(|r| r.amount).sum();
                let n_req = requests.iter().filter(|r| r.amount > 0.0).count();
                let granted: f64 = grants.iter().map(|g| g.amount).sum();
                eprintln!(
                    "t={t} credit: requests={n_req} demand={demand:.1} grants={} granted={granted:.1}",
                    grants.len()
                );
                for b in 0..n_b {
                    eprintln!(
                        "  bank {b}: book={:.1} target={:.4} ratio={:.4} rate={:.5}",
                        loan_books[b], targets[b], ratios[b], rates[b]
                    );
                }
            }
            for grant in grants {
                let request = requests[grant.request];
                let loan = Loan::new(grant.amount, grant.rate, params.n_repay, grant.bank);
                match request.kind {
                    AgentKind::CFirm => {
                        let f = &mut self.state.cfirms[request.id];
                        f.loans.push(loan);
                        f.new_loan = grant.amount;
                        ledger.new_loans_cfirm += grant.amount;
                    }
                    _ => {
                        let f = &mut self.state.kfirms[request.id];
                        f.loans.push(loan);
                        f.new_loan = grant.amount;
                        ledger.new_loans_kfirm += grant.amount;
                    }
                }
                self.state.banks[grant.bank].loan_book += grant.amount;
                ledger.new_loans_bank += grant.amount;
            }
            for (b, bank) in self.state.banks.iter_mut().enumerate() {
                let mut rng = self.policy.stream(AgentKind::Bank, b as u32, t, Purpose::RateNoise);
                let eps = standard_normal(&mut rng);
                bank.loan_rate = directional_update(
                    bank.loan_rate,
                    targets[b] >= ratios[b],
                    params.sigma_r,
                    eps,
                    params.gamma_r,
                    params.r_n,
                    0.0,
                );
            }
        }

        // Phase 7: firm accounting. Standing loans amortize (loans
        // granted this period start next period), profits and borrowing
        // settle into deposits, books depreciate, and any firm whose
        // deposits close at or below zero exits: lenders write off its
        // outstanding principal, the deposit bank absorbs the overdraft,
        // and its workers are released.
        let mut obs_c = Vec::with_capacity(n_c);
        let mut obs_k = Vec::with_capacity(n_k);
        {
            let SimulationState {
                households,
                cfirms,
                kfirms,
                banks,
                dead_cfirms,
                dead_kfirms,
                bankruptcies_cfirm,
                bankruptcies_kfirm,
                ..
            } = &mut self.state;
            for (i, f) in cfirms.iter_mut().enumerate() {
                let mut principal = 0.0;
                for loan in f.loans.iter_mut().take(n_pre_c[i]) {
                    let (interest, repaid) = loan.advance();
                    banks[loan.bank].interest_income += interest;
                    ledger.loan_interest_bank += interest;
                    ledger.principal_bank += repaid;
                    banks[loan.bank].loan_book -= repaid;
                    principal += repaid;
                }
                f.loans.retain(|loan| loan.remaining > 0);
                ledger.principal_cfirm += ip_c[i].1;
                let depreciation = params.delta * f.capital_book;
                apply_firm_flows(
                    &mut f.deposits,
                    &mut f.equity,
                    &FirmFlows {
                        profits: f.profits,
                        new_loan: f.new_loan,
                        principal_paid: principal,
                        investment_expenditure: f.investment_expenditure,
                        capital_book_depreciation: depreciation,
                    },
                );
                f.capital_book += f.investment_expenditure - depreciation;
                ledger.profits_cfirm_capital += f.profits;
                if f.deposits <= 0.0 {
                    if std::env::var_os("DEATH_LOG").is_some() {
                        eprintln!(
                            "t={t} C{i} dies: M_post={:.4} pi={:.4} sales={:.4} output={:.4} W={:.4} IE={:.4} princ={:.4} newL={:.4} wantL={:.4} D={:.4} P={:.4}",
                            f.deposits, f.profits, f.sales, f.output, f.wage_bill,
                            f.investment_expenditure, principal, f.new_loan, f.desired_loan,
                            f.debt(), f.price
                        );
                    }
                    let overdraft = -f.deposits;
                    banks[f.deposit_bank].write_offs += overdraft;
                    ledger.overdraft_cfirm += overdraft;
                    ledger.overdraft_bank += overdraft;
                    for loan in &f.loans {
                        let outstanding = loan.outstanding();
                        banks[loan.bank].write_offs += outstanding;
                        banks[loan.bank].loan_book -= outstanding;
                        ledger.loan_writeoffs += outstanding;
                    }
                    for h in f.employees.drain(..) {
                        households[h].employer = None;
                    }
                    f.deposits = 0.0;
                    f.equity = 0.0;
                    f.capital_book = 0.0;
                    f.loans.clear();
                    dead_cfirms.push(i);
                    *bankruptcies_cfirm += 1;
                    obs_c.push((leverage_c[i], true));
                } else {
                    obs_c.push((leverage_c[i], false));
                }
            }
            for (j, f) in kfirms.iter_mut().enumerate() {
                let mut principal = 0.0;
                for loan in f.loans.iter_mut().take(n_pre_k[j]) {
                    let (interest, repaid) = loan.advance();
                    banks[loan.bank].interest_income += interest;
                    ledger.loan_interest_bank += interest;
                    ledger.principal_bank += repaid;
                    banks[loan.bank].loan_book -= repaid;
                    principal += repaid;
                }
                f.loans.retain(|loan| loan.remaining > 0);
                ledger.principal_kfirm += ip_k[j].1;
                apply_firm_flows(
                    &mut f.deposits,
                    &mut f.equity,
                    &FirmFlows {
                        profits: f.profits,
                        new_loan: f.new_loan,
                        principal_paid: principal,
                        investment_expenditure: 0.0,
                        capital_book_depreciation: 0.0,
                    },
                );
                ledger.profits_kfirm_capital += f.profits;
                if f.deposits <= 0.0 {
                    if std::env::var_os("DEATH_LOG").is_some() {
                        eprintln!(
                            "t={t} K{j} dies: M_post={:.4} pi={:.4} sales={:.4} output={:.4} V={:.4} W={:.4} princ={:.4} newL={:.4} wantL={:.4} D={:.4} P={:.4}",
                            f.deposits, f.profits, f.sales, f.output, f.inventories,
                            f.wage_bill, principal, f.new_loan, f.desired_loan, f.debt(), f.price
                        );
                    }
                    let overdraft = -f.deposits;
                    banks[f.deposit_bank].write_offs += overdraft;
                    ledger.overdraft_kfirm += overdraft;
                    ledger.overdraft_bank += overdraft;
                    for loan in &f.loans {
                        let outstanding = loan.outstanding();
                        banks[loan.bank].write_offs += outstanding;
                        banks[loan.bank].loan_book -= outstanding;
                        ledger.loan_writeoffs += outstanding;
                    }
                    for h in f.employees.drain(..) {
                        households[h].employer = None;
                    }
                    f.deposits = 0.0;
                    f.equity = 0.0;
                    f.inventories = 0.0;
                    f.loans.clear();
                    dead_kfirms.push(j);
                    *bankruptcies_kfirm += 1;
                    obs_k.push((leverage_k[j], true));
                } else {
                    obs_k.push((leverage_k[j], false));
                }
            }
        }
        self.state.default_history_c.push_back(obs_c);
        self.state.default_history_k.push_back(obs_k);
        if self.state.default_history_c.len() > DEFAULT_FIT_WINDOW {
            self.state.default_history_c.pop_front();
        }
        if self.state.default_history_k.len() > DEFAULT_FIT_WINDOW {
            self.state.default_history_k.pop_front();
        }

        // Phase 8: bank accounting. Profit is interest income net of
        // deposit interest; write-offs hit equity. Deposits and reserves
        // then close the balance sheet, with central bank advances
        // covering any reserve shortfall.
        for b in 0..n_b {
            let profit = self.state.banks[b].interest_income - params.r_m * m_start_bank[b];
            ledger.profits_bank_current += profit;
            ledger.deposit_interest_bank += params.r_m * m_start_bank[b];
            ledger.profits_bank_capital += profit;
            self.state.banks[b].equity =
                e_start_bank[b] + profit - self.state.banks[b].write_offs;
        }
        let mut m_end_bank = vec![0.0; n_b];
        for h in &self.state.households {
            m_end_bank[h.bank] += h.deposits;
        }
        for f in &self.state.cfirms {
            m_end_bank[f.deposit_bank] += f.deposits;
        }
        for f in &self.state.kfirms {
            m_end_bank[f.deposit_bank] += f.deposits;
        }
        for (b, bank) in self.state.banks.iter_mut().enumerate() {
            bank.deposits = m_end_bank[b];
            let net_position = bank.deposits + bank.equity - bank.loan_book;
            let closing_reserves = bank.advances + net_position;
            bank.advances = (-closing_reserves).max(0.0);
            bank.reserves = bank.advances + net_position;
        }

        // A bank whose closing equity is non-positive is recapitalised to
        // its capital target on its closing assets by a proportional levy
        // on its depositors, so it starts the next period solvent. The
        // levy converts deposit claims into equity, leaving reserves and
        // the balance-sheet identity untouched.
        let mut bailouts_now = 0u32;
        for b in 0..n_b {
            let base = self.state.banks[b].equity;
            if base > 0.0 {
                continue;
            }
            bailouts_now += 1;
            self.state.bailouts += 1;
            let assets = self.state.banks[b].loan_book + self.state.banks[b].reserves;
            let target = self.state.banks[b].capital_target * assets;
            let required = (target - base).max(0.0);
            let mut funded = 0.0;
            if required > 0.0 {
                let mut holders: Vec<(usize, u8, f64)> = Vec::new();
                for (h, household) in self.state.households.iter().enumerate() {
                    if household.bank == b && household.deposits > 0.0 {
                        holders.push((h, 0, household.deposits));
                    }
                }
                for (i, f) in self.state.cfirms.iter().enumerate() {
                    if f.deposit_bank == b && f.deposits > 0.0 {
                        holders.push((i, 1, f.deposits));
                    }
                }
                for (j, f) in self.state.kfirms.iter().enumerate() {
                    if f.deposit_bank == b && f.deposits > 0.0 {
                        holders.push((j, 2, f.deposits));
                    }
                }
                let balances: Vec<f64> = holders.iter().map(|&(_, _, bal)| bal).collect();
                let (cuts, total_cut, shortfall) = proportional_cuts(&balances, required);
                for (&(idx, kind, _), &cut) in holders.iter().zip(&cuts) {
                    match kind {
                        0 => {
                            self.state.households[idx].deposits -= cut;
                            ledger.recap_household += cut;
                        }
                        1 => {
                            self.state.cfirms[idx].deposits -= cut;
                            self.state.cfirms[idx].equity -= cut;
                            ledger.recap_cfirm += cut;
                        }
                        _ => {
                            self.state.kfirms[idx].deposits -= cut;
                            self.state.kfirms[idx].equity -= cut;
                            ledger.recap_kfirm += cut;
                        }
                    }
                }
                funded = total_cut;
                if shortfall > 0.0 {
                    self.state.log.push(format!(
                        "period {t}: bank {b} bailout shortfall {shortfall:.6} after zeroing depositor accounts"
                    ));
                }
            }
            ledger.recap_bank += funded;
            self.state.banks[b].equity = base + funded;
            self.state.banks[b].deposits -= funded;
        }

        // Plans for next period: adaptive demand expectations, desired
        // output and labour, and the hiring gap. Bankrupt slots wait for
        // replacement.
        for (i, f) in self.state.cfirms.iter_mut().enumerate() {
            if self.state.dead_cfirms.contains(&i) {
                continue;
            }
            f.expected_demand = update_expected(f.expected_demand, f.demand, params.gamma_z);
            f.desired_output = f.expected_demand;
            let ae = f.productivity * params.g.exp();
            f.desired_labour = desired_labour_cfirm(f.desired_output, f.capital, params.nu, ae);
            f.hiring = hiring_plan(f.desired_labour, f.employment());
        }
        for (j, f) in self.state.kfirms.iter_mut().enumerate() {
            if self.state.dead_kfirms.contains(&j) {
                continue;
            }
            f.expected_demand = update_expected(f.expected_demand, f.demand, params.gamma_z);
            f.desired_inventories = params.xi * f.output;
            f.desired_output = kfirm_desired_output(
                f.expected_demand,
                f.inventories,
                params.xi,
                params.delta,
            );
            let ae = f.productivity * params.g.exp();
            f.desired_labour = desired_labour_kfirm(f.desired_output, ae);
            f.hiring = hiring_plan(f.desired_labour, f.employment());
        }

        // Market indices, instability and concentration statistics, the
        // systemic-risk score, and the trace record.
        let c_prices: Vec<f64> = self.state.cfirms.iter().map(|f| f.price).collect();
        let c_outputs: Vec<f64> = self.state.cfirms.iter().map(|f| f.output).collect();
        let k_prices: Vec<f64> = self.state.kfirms.iter().map(|f| f.price).collect();
        let k_outputs: Vec<f64> = self.state.kfirms.iter().map(|f| f.output).collect();
        self.state.price_index =
            weighted_mean_price(&c_prices, &c_outputs).unwrap_or(self.state.price_index);
        self.state.capital_price_index =
            weighted_mean_price(&k_prices, &k_outputs).unwrap_or(self.state.capital_price_index);
        let total_employment: usize = employment_paid.iter().sum();
        if total_employment > 0 {
            self.state.wage_index =
                (ledger.wages_cfirm + ledger.wages_kfirm) / total_employment as f64;
        }

        let shares_consumption = raw_shares(&c_outputs);
        let shares_capital = raw_shares(&k_outputs);
        let employment_f: Vec<f64> = employment_paid.iter().map(|&n| n as f64).collect();
        let shares_labour = raw_shares(&employment_f);
        let books: Vec<f64> = self.state.banks.iter().map(|b| b.loan_book).collect();
        let shares_credit = raw_shares(&books);

        let nominal_gdp: f64 = self
            .state
            .cfirms
            .iter()
            .map(|f| f.price * f.output)
            .chain(self.state.kfirms.iter().map(|f| f.price * f.output))
            .sum();

        let mut network = CreditNetwork::new(
            n_b,
            (0..n_c)
                .map(|_| FirmClass::Consumption)
                .chain((0..n_k).map(|_| FirmClass::Capital))
                .collect(),
        );
        for (i, f) in self.state.cfirms.iter().enumerate() {
            for loan in &f.loans {
                network.add_credit(loan.bank, i, loan.outstanding());
            }
            network.firm_assets[i] = f.deposits + f.capital_book;
        }
        for (j, f) in self.state.kfirms.iter().enumerate() {
            for loan in &f.loans {
                network.add_credit(loan.bank, n_c + j, loan.outstanding());
            }
            network.firm_assets[n_c + j] = f.deposits;
        }
        for (b, bank) in self.state.banks.iter().enumerate() {
            network.bank_assets[b] = (bank.loan_book + bank.reserves).max(0.0);
        }
        let debtrank_score = debtrank::policy_score(&network, params.debtrank_policy);

        let wealth: Vec<f64> = self.state.households.iter().map(|h| h.deposits).collect();
        let gini = analytics::gini(&wealth).unwrap_or(0.0);
        let unemployed_count = self.state.unemployed().len();

        ledger.end = capture_stocks(&self.state);
        ledger.nominal_gdp = nominal_gdp;
        // Keep the ledger around even when the audit rejects it, so a
        // failure can be inspected.
        self.last_ledger = ledger;
        let ledger = &self.last_ledger;
        audit::audit_flows(ledger).map_err(|detail| EngineError::AuditFailure { period: t, detail })?;
        audit::audit_stocks(&self.state, ledger.tolerance())
            .map_err(|detail| EngineError::AuditFailure { period: t, detail })?;

        let book_total: f64 = books.iter().sum();
        let loan_rate = if book_total > 0.0 {
            self.state
                .banks
                .iter()
                .map(|b| b.loan_rate * b.loan_book)
                .sum::<f64>()
                / book_total
        } else {
            self.state.banks.iter().map(|b| b.loan_rate).sum::<f64>() / n_b as f64
        };
        let row = TraceRow {
            period: t,
            nominal_gdp,
            real_gdp: nominal_gdp / self.state.price_index,
            price_index: self.state.price_index,
            capital_price_index: self.state.capital_price_index,
            wage_index: self.state.wage_index,
            consumption: ledger.consumption_spent,
            investment: ledger.investment_spent,
            wage_bill: ledger.wages_cfirm + ledger.wages_kfirm,
            profits_cfirm: ledger.profits_cfirm_current,
            profits_kfirm: ledger.profits_kfirm_current,
            profits_bank: ledger.profits_bank_current,
            debt_cfirm: ledger.end.debt_cfirm,
            debt_kfirm: ledger.end.debt_kfirm,
            new_loans: ledger.new_loans_cfirm + ledger.new_loans_kfirm,
            principal_repaid: ledger.principal_cfirm + ledger.principal_kfirm,
            interest_paid: ledger.loan_interest_cfirm + ledger.loan_interest_kfirm,
            deposit_interest: ledger.deposit_interest_household
                + ledger.deposit_interest_cfirm
                + ledger.deposit_interest_kfirm,
            write_offs: ledger.overdraft_cfirm + ledger.overdraft_kfirm + ledger.loan_writeoffs,
            household_deposits: ledger.end.deposits_household,
            firm_deposits: ledger.end.deposits_cfirm + ledger.end.deposits_kfirm,
            bank_equity: ledger.end.equity_bank,
            bank_reserves: ledger.end.reserves_bank,
            bank_advances: ledger.end.advances_bank,
            loan_rate,
            unemployment_rate: unemployed_count as f64 / n_h as f64,
            employment: total_employment as f64,
            bankruptcies_cfirm: self.state.dead_cfirms.len() as f64,
            bankruptcies_kfirm: self.state.dead_kfirms.len() as f64,
            bailouts: bailouts_now as f64,
            gini,
            hpi_consumption: analytics::hpi(&shares_consumption, &self.state.prev_shares_consumption)
                .unwrap_or(0.0),
            hpi_capital: analytics::hpi(&shares_capital, &self.state.prev_shares_capital)
                .unwrap_or(0.0),
            hpi_labour: analytics::hpi(&shares_labour, &self.state.prev_shares_labour)
                .unwrap_or(0.0),
            hpi_credit: analytics::hpi(&shares_credit, &self.state.prev_shares_credit)
                .unwrap_or(0.0),
            hhi_consumption: analytics::hhi_normalized(&shares_consumption).unwrap_or(0.0),
            hhi_capital: analytics::hhi_normalized(&shares_capital).unwrap_or(0.0),
            hhi_labour: analytics::hhi_normalized(&shares_labour).unwrap_or(0.0),
            hhi_credit: analytics::hhi_normalized(&shares_credit).unwrap_or(0.0),
            debtrank: debtrank_score,
        };
        self.state.prev_shares_consumption = shares_consumption;
        self.state.prev_shares_capital = shares_capital;
        self.state.prev_shares_labour = shares_labour;
        self.state.prev_shares_credit = shares_credit;
        self.state.period = t;
        Ok(row)
    }

    /// Capture a full per-agent snapshot of the current state.
    pub fn capture_snapshot(&self) -> Snapshot {
        let mut firms = Vec::with_capacity(self.state.n_firms());
        let mut edges = Vec::new();
        for (i, f) in self.state.cfirms.iter().enumerate() {
            firms.push(FirmSnapshot {
                class: FirmClass::Consumption,
                id: i,
                output: f.output,
                price: f.price,
                productivity: f.productivity,
                employment: f.employment(),
                deposits: f.deposits,
                debt: f.debt(),
                equity: f.equity,
                capital: f.capital,
                inventories: f.inventories,
            });
            for loan in &f.loans {
                edges.push(CreditEdge {
                    bank: loan.bank,
                    firm_class: FirmClass::Consumption,
                    firm: i,
                    outstanding: loan.outstanding(),
                });
            }
        }
        for (j, f) in self.state.kfirms.iter().enumerate() {
            firms.push(FirmSnapshot {
                class: FirmClass::Capital,
                id: j,
                output: f.output,
                price: f.price,
                productivity: f.productivity,
                employment: f.employment(),
                deposits: f.deposits,
                debt: f.debt(),
                equity: f.equity,
                capital: 0.0,
                inventories: f.inventories,
            });
            for loan in &f.loans {
                edges.push(CreditEdge {
                    bank: loan.bank,
                    firm_class: FirmClass::Capital,
                    firm: j,
                    outstanding: loan.outstanding(),
                });
            }
        }
        let banks = self
            .state
            .banks
            .iter()
            .enumerate()
            .map(|(b, bank)| BankSnapshot {
                id: b,
                loan_book: bank.loan_book,
                equity: bank.equity,
                deposits: bank.deposits,
                reserves: bank.reserves,
                advances: bank.advances,
                loan_rate: bank.loan_rate,
            })
            .collect();
        Snapshot {
            step: self.state.period,
            firms,
            banks,
            household_deposits: self.state.households.iter().map(|h| h.deposits).collect(),
            edges,
        }
    }
}

/// Run one full simulation: burn-in plus recorded window, with agent
/// snapshots at the configured absolute steps. The trace is a pure
/// function of `(params, settings, seed)`.
pub fn run(params: &Params, settings: &RunSettings, seed: u64) -> Result<SimulationTrace, EngineError> {
    let mut sim = initialize(params, seed)?;
    let total = settings.burn_in_steps + settings.recorded_steps;
    let mut trace = SimulationTrace {
        seed,
        rows: Vec::with_capacity(settings.recorded_steps as usize),
        snapshots: Vec::new(),
    };
    for t in 1..=total {
        let row = sim.step()?;
        if settings.record_burn_in || t > settings.burn_in_steps {
            trace.rows.push(row);
        }
        if settings.snapshot_steps.contains(&t) {
            trace.snapshots.push(sim.capture_snapshot());
        }
    }
    Ok(trace)
}
