use macrosim::config::{canonical_scenarios, Config};
use macrosim::engine;

fn main() {
    let config = Config::default();
    let scenario = &canonical_scenarios()[0];
    let params = scenario.apply(&config.params);
    let mut sim = engine::initialize(&params, 42).unwrap();

    let n_c = sim.state.cfirms.len();
    let n_k = sim.state.kfirms.len();
    let mut age_c = vec![0u32; n_c];
    let mut age_k = vec![0u32; n_k];
    // death-age histogram buckets: 0-3, 4-7, 8-15, 16-39, 40+
    let mut death_ages = [0usize; 5];
    let bucket = |a: u32| -> usize {
        match a {
            0..=3 => 0,
            4..=7 => 1,
            8..=15 => 2,
            16..=39 => 3,
            _ => 4,
        }
    };
    let mut prev_p = 1.0f64;
    let mut prev_w = sim.state.wage_index;

    println!(
        "{:>4} {:>4} {:>5} {:>6} {:>6} {:>6} {:>6} {:>7} {:>7} {:>6} {:>6} {:>7}",
        "t", "dead", "unemp", "qSell", "hHire", "piP%", "piW%", "wshare", "distC", "distK", "young", "lendB"
    );
    for t in 1..=700 {
        sim.step().unwrap();
        for a in age_c.iter_mut() {
            *a += 1;
        }
        for a in age_k.iter_mut() {
            *a += 1;
        }
        let dead = sim.state.dead_cfirms.len() + sim.state.dead_kfirms.len();
        for &i in &sim.state.dead_cfirms {
            death_ages[bucket(age_c[i])] += 1;
            age_c[i] = 0;
        }
        for &j in &sim.state.dead_kfirms {
            death_ages[bucket(age_k[j])] += 1;
            age_k[j] = 0;
        }
        let q_sell = sim.state.cfirms.iter().filter(|f| f.inventories <= 0.0).count() as f64
            / n_c as f64;
        let h_hire = sim.state.cfirms.iter().filter(|f| f.hiring >= 0).count() as f64
            / n_c as f64;
        let pi_p = sim.state.price_index / prev_p - 1.0;
        let pi_w = sim.state.wage_index / prev_w - 1.0;
        prev_p = sim.state.price_index;
        prev_w = sim.state.wage_index;
        let l = &sim.last_ledger;
        let wage_share = (l.wages_cfirm + l.wages_kfirm) / l.nominal_gdp;
        let mut dist_c = 0usize;
        let mut young_dist = 0usize;
        for (i, f) in sim.state.cfirms.iter().enumerate() {
            if f.desired_loan > 1e-9 && f.wage_bill - f.profits - f.deposits > 1e-9 {
                dist_c += 1;
                if age_c[i] < 8 {
                    young_dist += 1;
                }
            }
        }
        let dist_k = sim
            .state
            .kfirms
            .iter()
            .filter(|f| f.desired_loan > 1e-9)
            .count();
        let lending_banks = sim
            .state
            .banks
            .iter()
            .filter(|b| b.capital_ratio() > b.capital_target)
            .count();
        let unemp = sim
            .state
            .households
            .iter()
            .filter(|h| h.employer.is_none())
            .count() as f64
            / sim.state.households.len() as f64;
        if (55..=90).contains(&t) || t % 50 == 0 || t <= 3 {
            println!(
                "{:>4} {:>4} {:>5.2} {:>6.2} {:>6.2} {:>6.2} {:>6.2} {:>7.3} {:>7} {:>6} {:>6} {:>7}",
                t,
                dead,
                unemp,
                q_sell,
                h_hire,
                pi_p * 100.0,
                pi_w * 100.0,
                wage_share,
                dist_c,
                dist_k,
                young_dist,
                lending_banks
            );
        }
    }
    println!("bailouts: {}", sim.state.bailouts);
    println!(
        "death ages  0-3: {}  4-7: {}  8-15: {}  16-39: {}  40+: {}",
        death_ages[0], death_ages[1], death_ages[2], death_ages[3], death_ages[4]
    );
}
