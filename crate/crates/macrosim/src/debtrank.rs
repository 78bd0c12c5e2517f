//! Systemic-risk scoring on the bipartite bank-firm credit network.
//!
//! Distress spreads over the network of outstanding loans: a troubled
//! bank weakens the firms it funds in proportion to how much of each
//! firm's borrowing it supplies, and a troubled firm weakens its lenders
//! in proportion to how much of each bank's book it occupies. Every node
//! propagates exactly once, so the dynamics terminate. The final distress
//! levels are aggregated into a score between 0 and 3: one asset-weighted
//! term for banks plus one each for the two firm sectors, with the
//! initially distressed nodes excluded from the sums.

use crate::agents::FirmClass;
use crate::config::DebtRankPolicy;

/// Bipartite credit network: a dense banks-by-firms matrix of outstanding
/// loan balances plus the asset weights used in the final aggregation
/// (loan book plus reserves for banks, deposits plus booked capital for
/// consumption-good firms, deposits for capital-good firms).
#[derive(Debug, Clone)]
pub struct CreditNetwork {
    pub n_banks: usize,
    /// Sector of each firm column.
    pub firm_class: Vec<FirmClass>,
    /// Row-major banks-by-firms matrix of outstanding credit.
    credit: Vec<f64>,
    pub bank_assets: Vec<f64>,
    pub firm_assets: Vec<f64>,
}

impl CreditNetwork {
    pub fn new(n_banks: usize, firm_class: Vec<FirmClass>) -> Self {
        let n_firms = firm_class.len();
        CreditNetwork {
            n_banks,
            firm_class,
            credit: vec![0.0; n_banks * n_firms],
            bank_assets: vec![0.0; n_banks],
            firm_assets: vec![0.0; n_firms],
        }
    }

    pub fn n_firms(&self) -> usize {
        self.firm_class.len()
    }

    pub fn credit(&self, bank: usize, firm: usize) -> f64 {
        self.credit[bank * self.n_firms() + firm]
    }

    pub fn add_credit(&mut self, bank: usize, firm: usize, amount: f64) {
        debug_assert!(amount >= 0.0);
        let n = self.n_firms();
        self.credit[bank * n + firm] += amount;
    }

    /// Total lending per bank (matrix row sums).
    pub fn bank_totals(&self) -> Vec<f64> {
        let n = self.n_firms();
        (0..self.n_banks)
            .map(|b| self.credit[b * n..(b + 1) * n].iter().sum())
            .collect()
    }

    /// Total borrowing per firm (matrix column sums).
    pub fn firm_totals(&self) -> Vec<f64> {
        let n = self.n_firms();
        let mut totals = vec![0.0; n];
        for b in 0..self.n_banks {
            for (f, total) in totals.iter_mut().enumerate() {
                *total += self.credit[b * n + f];
            }
        }
        totals
    }
}

/// Row-stochastic propagation weights. `w_bank` has one row per bank
/// holding its portfolio shares over firms (how exposed the bank is to
/// each borrower); `w_firm` has one row per firm holding its funding
/// shares over banks (how dependent the firm is on each lender). Rows of
/// isolated nodes are all zero.
#[derive(Debug, Clone)]
pub struct Propagation {
    n_banks: usize,
    n_firms: usize,
    w_bank: Vec<f64>,
    w_firm: Vec<f64>,
}

impl Propagation {
    pub fn bank_row(&self, bank: usize) -> &[f64] {
        &self.w_bank[bank * self.n_firms..(bank + 1) * self.n_firms]
    }

    pub fn firm_row(&self, firm: usize) -> &[f64] {
        &self.w_firm[firm * self.n_banks..(firm + 1) * self.n_banks]
    }
}

/// Normalize the credit matrix into the two propagation matrices.
pub fn build_propagation(net: &CreditNetwork) -> Propagation {
    let n_firms = net.n_firms();
    let bank_totals = net.bank_totals();
    let firm_totals = net.firm_totals();
    let mut w_bank = vec![0.0; net.n_banks * n_firms];
    let mut w_firm = vec![0.0; n_firms * net.n_banks];
    for b in 0..net.n_banks {
        for f in 0..n_firms {
            let c = net.credit(b, f);
            if c > 0.0 {
                w_bank[b * n_firms + f] = c / bank_totals[b];
                w_firm[f * net.n_banks + b] = c / firm_totals[f];
            }
        }
    }
    Propagation {
        n_banks: net.n_banks,
        n_firms,
        w_bank,
        w_firm,
    }
}

/// A node of the bipartite network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Bank(usize),
    Firm(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Undistressed,
    Distressed,
    Inactive,
}

/// Final distress levels and the number of synchronous rounds executed.
#[derive(Debug, Clone)]
pub struct DistressResult {
    pub bank_distress: Vec<f64>,
    pub firm_distress: Vec<f64>,
    pub rounds: u32,
}

/// Run the distress dynamics from `initial` at level `psi`.
///
/// Updates are synchronous: every node first accumulates distress from
/// its currently distressed neighbours (capped at 1), then distressed
/// nodes become inactive and newly hit nodes become distressed. A node
/// propagates exactly once, so the loop ends after at most one round per
/// node.
pub fn propagate(net: &CreditNetwork, prop: &Propagation, initial: &[Node], psi: f64) -> DistressResult {
    debug_assert!(psi > 0.0 && psi <= 1.0);
    debug_assert!(!initial.is_empty());
    let n_firms = net.n_firms();
    let mut h_bank = vec![0.0; net.n_banks];
    let mut h_firm = vec![0.0; n_firms];
    let mut s_bank = vec![State::Undistressed; net.n_banks];
    let mut s_firm = vec![State::Undistressed; n_firms];
    for &node in initial {
        match node {
            Node::Bank(b) => {
                h_bank[b] = psi;
                s_bank[b] = State::Distressed;
            }
            Node::Firm(f) => {
                h_firm[f] = psi;
                s_firm[f] = State::Distressed;
            }
        }
    }
    let mut rounds = 0;
    while s_bank.contains(&State::Distressed) || s_firm.contains(&State::Distressed) {
        rounds += 1;
        // Distress received this round, from last round's distressed set.
        let mut next_bank = h_bank.clone();
        let mut next_firm = h_firm.clone();
        for f in 0..n_firms {
            if s_firm[f] == State::Inactive && h_firm[f] >= 1.0 {
                continue;
            }
            let row = prop.firm_row(f);
            let mut incoming = 0.0;
            for b in 0..net.n_banks {
                if s_bank[b] == State::Distressed {
                    incoming += row[b] * h_bank[b];
                }
            }
            next_firm[f] = (h_firm[f] + incoming).min(1.0);
        }
        for b in 0..net.n_banks {
            if s_bank[b] == State::Inactive && h_bank[b] >= 1.0 {
                continue;
            }
            let row = prop.bank_row(b);
            let mut incoming = 0.0;
            for f in 0..n_firms {
                if s_firm[f] == State::Distressed {
                    incoming += row[f] * h_firm[f];
                }
            }
            next_bank[b] = (h_bank[b] + incoming).min(1.0);
        }
        for b in 0..net.n_banks {
            s_bank[b] = match s_bank[b] {
                State::Distressed => State::Inactive,
                State::Undistressed if next_bank[b] > 0.0 => State::Distressed,
                s => s,
            };
        }
        for f in 0..n_firms {
            s_firm[f] = match s_firm[f] {
                State::Distressed => State::Inactive,
                State::Undistressed if next_firm[f] > 0.0 => State::Distressed,
                s => s,
            };
        }
        h_bank = next_bank;
        h_firm = next_firm;
    }
    DistressResult {
        bank_distress: h_bank,
        firm_distress: h_firm,
        rounds,
    }
}

/// The aggregated score: asset-weighted mean distress per node class,
/// excluding the initially distressed nodes and isolated nodes from both
/// numerators and denominators.
#[derive(Debug, Clone, Copy)]
pub struct DebtRankScore {
    pub banks: f64,
    pub firms: f64,
    pub total: f64,
}

pub fn debtrank_total(net: &CreditNetwork, prop: &Propagation, initial: &[Node], psi: f64) -> DebtRankScore {
    let result = propagate(net, prop, initial, psi);
    let bank_totals = net.bank_totals();
    let firm_totals = net.firm_totals();
    let initially_bank: Vec<bool> = (0..net.n_banks)
        .map(|b| initial.contains(&Node::Bank(b)))
        .collect();
    let initially_firm: Vec<bool> = (0..net.n_firms())
        .map(|f| initial.contains(&Node::Firm(f)))
        .collect();

    let weighted = |pairs: &mut dyn Iterator<Item = (f64, f64)>| -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (h, w) in pairs {
            num += h * w;
            den += w;
        }
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };

    let banks = weighted(
        &mut (0..net.n_banks)
            .filter(|&b| !initially_bank[b] && bank_totals[b] > 0.0)
            .map(|b| (result.bank_distress[b], net.bank_assets[b])),
    );
    let firm_term = |class: FirmClass| {
        weighted(
            &mut (0..net.n_firms())
                .filter(|&f| {
                    net.firm_class[f] == class && !initially_firm[f] && firm_totals[f] > 0.0
                })
                .map(|f| (result.firm_distress[f], net.firm_assets[f])),
        )
    };
    let firms = firm_term(FirmClass::Consumption) + firm_term(FirmClass::Capital);
    DebtRankScore {
        banks,
        firms,
        total: banks + firms,
    }
}

/// The per-period score recorded by the engine, under the configured
/// initial-distress policy.
pub fn policy_score(net: &CreditNetwork, policy: DebtRankPolicy) -> f64 {
    let prop = build_propagation(net);
    let bank_totals = net.bank_totals();
    match policy {
        DebtRankPolicy::EachBankMean => {
            let mut sum = 0.0;
            let mut count = 0;
            for b in 0..net.n_banks {
                if bank_totals[b] > 0.0 {
                    sum += debtrank_total(net, &prop, &[Node::Bank(b)], 1.0).total;
                    count += 1;
                }
            }
            if count > 0 {
                sum / count as f64
            } else {
                0.0
            }
        }
        DebtRankPolicy::SingleLargestBank => {
            let largest = (0..net.n_banks).max_by(|&a, &b| {
                bank_totals[a]
                    .partial_cmp(&bank_totals[b])
                    .unwrap()
                    .then(b.cmp(&a))
            });
            match largest {
                Some(b) if bank_totals[b] > 0.0 => {
                    debtrank_total(net, &prop, &[Node::Bank(b)], 1.0).total
                }
                _ => 0.0,
            }
        }
    }
}
