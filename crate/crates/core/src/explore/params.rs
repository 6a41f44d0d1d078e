use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{parent_arity_product, Dataset, KeyLayout};
use crate::error::{Error, Result};
use crate::optimizer::Network;

/// Generator used by [`sample`], recorded in sampled-data headers.
pub const SAMPLER_RNG: &str = "ChaCha8 (rand_chacha), seeded with seed_from_u64";

#[derive(Clone, Debug, PartialEq)]
struct CondTable {
    rows: BTreeMap<Vec<u32>, Vec<f64>>,
    uniform: Vec<f64>,
}

/// A network with expected conditional probabilities `θ[v][parent config][value]`.
/// Parent configurations list parent values in ascending variable order.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamNetwork {
    network: Network,
    arities: Vec<u32>,
    tables: Vec<CondTable>,
}

impl ParamNetwork {
    /// Every row uniform.
    pub fn uniform(network: Network, arities: Vec<u32>) -> Result<Self> {
        if network.n() != arities.len() || arities.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "{} arities given for a {}-variable network",
                arities.len(),
                network.n()
            )));
        }
        let tables = arities
            .iter()
            .map(|&r| CondTable {
                rows: BTreeMap::new(),
                uniform: vec![1.0 / f64::from(r); r as usize],
            })
            .collect();
        Ok(ParamNetwork {
            network,
            arities,
            tables,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn arities(&self) -> &[u32] {
        &self.arities
    }

    /// Replaces one conditional distribution.
    pub fn set_row(&mut self, v: usize, config: Vec<u32>, probs: Vec<f64>) -> Result<()> {
        let parents = self.network.parents(v);
        let ok_config = config.len() == parents.len()
            && parents
                .iter()
                .zip(&config)
                .all(|(p, &x)| x < self.arities[p]);
        let sum: f64 = probs.iter().sum();
        if !ok_config
            || probs.len() != self.arities[v] as usize
            || probs.iter().any(|p| p.is_nan() || *p < 0.0)
            || (sum - 1.0).abs() > 1e-9
        {
            return Err(Error::InvalidArgument(format!(
                "bad distribution {probs:?} for variable {v} given {config:?}"
            )));
        }
        self.tables[v].rows.insert(config, probs);
        Ok(())
    }

    /// `θ[v][config]`; configurations never set are uniform.
    pub fn theta(&self, v: usize, config: &[u32]) -> &[f64] {
        let t = &self.tables[v];
        t.rows.get(config).unwrap_or(&t.uniform)
    }

    /// Parent configurations of `v` with an explicit row, in ascending order.
    pub fn configs(&self, v: usize) -> impl Iterator<Item = &[u32]> {
        self.tables[v].rows.keys().map(Vec::as_slice)
    }

    fn config_of(&self, v: usize, row: &[u32]) -> Vec<u32> {
        self.network.parents(v).iter().map(|p| row[p]).collect()
    }

    /// Natural-log probability of a complete data row.
    pub fn log_prob(&self, row: &[u32]) -> Result<f64> {
        if row.len() != self.arities.len() {
            return Err(Error::Data(format!(
                "row has {} values, expected {}",
                row.len(),
                self.arities.len()
            )));
        }
        let mut total = 0.0;
        for (v, &x) in row.iter().enumerate() {
            if x >= self.arities[v] {
                return Err(Error::Data(format!(
                    "value {x} of variable {v} is outside arity {}",
                    self.arities[v]
                )));
            }
            total += self.theta(v, &self.config_of(v, row))[x as usize].ln();
        }
        Ok(total)
    }
}

/// Expected parameters under a BDeu prior of size `ess`:
/// `θ_jk = (N_jk + ess/(q r)) / (N_j + ess/q)`.
pub fn fit_expected(net: &Network, data: &Dataset, ess: f64) -> Result<ParamNetwork> {
    if !(ess.is_finite() && ess > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "equivalent sample size must be positive and finite, got {ess}"
        )));
    }
    if net.n() != data.n() {
        return Err(Error::InvalidArgument(format!(
            "network has {} variables, data has {}",
            net.n(),
            data.n()
        )));
    }
    let mut pnet = ParamNetwork::uniform(net.clone(), data.arities().to_vec())?;
    let layout: &KeyLayout = data.layout();
    for v in 0..data.n() {
        let r = data.arities()[v] as usize;
        let row_prior = ess / parent_arity_product(layout, net.parents(v));
        let cell_prior = row_prior / r as f64;
        let mut counts: HashMap<Vec<u32>, Vec<u32>> = HashMap::new();
        for row in data.rows() {
            counts
                .entry(pnet.config_of(v, row))
                .or_insert_with(|| vec![0; r])[row[v] as usize] += 1;
        }
        pnet.tables[v].rows = counts
            .into_iter()
            .map(|(config, c)| {
                let total: u32 = c.iter().sum();
                let denom = f64::from(total) + row_prior;
                let theta = c
                    .iter()
                    .map(|&k| (f64::from(k) + cell_prior) / denom)
                    .collect();
                (config, theta)
            })
            .collect();
    }
    Ok(pnet)
}

/// `count` rows drawn by ancestral sampling.
pub fn sample(pnet: &ParamNetwork, count: usize, seed: u64) -> Result<Dataset> {
    let order = pnet
        .network
        .topological_order()
        .expect("networks are acyclic");
    let n = pnet.arities.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells = vec![0u32; n * count];
    for row in cells.chunks_exact_mut(n) {
        for &v in &order {
            let theta = pnet.theta(v, &pnet.config_of(v, row));
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = theta.iter().rposition(|&p| p > 0.0).unwrap_or(0);
            for (k, &p) in theta.iter().enumerate() {
                acc += p;
                if u < acc && p > 0.0 {
                    pick = k;
                    break;
                }
            }
            row[v] = pick as u32;
        }
    }
    Dataset::new(pnet.arities.clone(), cells)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub log_probs: Vec<f64>,
    pub mean: f64,
}

/// Log probability of each test row with parameters integrated out over the
/// training data, rows treated independently.
pub fn predict_logp(
    net: &Network,
    train: &Dataset,
    test: &Dataset,
    ess: f64,
) -> Result<Prediction> {
    let pnet = fit_expected(net, train, ess)?;
    let log_probs = test
        .rows()
        .map(|row| pnet.log_prob(row))
        .collect::<Result<Vec<_>>>()?;
    let mean = log_probs.iter().sum::<f64>() / log_probs.len() as f64;
    Ok(Prediction { log_probs, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varset::VarSet;

    fn set(vs: &[usize]) -> VarSet {
        vs.iter().copied().collect()
    }

    #[test]
    fn hand_fit_no_parents() {
        let data = Dataset::parse("0\n0\n0\n1\n").unwrap();
        let p = fit_expected(&Network::empty(1), &data, 1.0).unwrap();
        let t = p.theta(0, &[]);
        assert!((t[0] - 3.5 / 5.0).abs() < 1e-15);
        assert!((t[1] - 1.5 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn unseen_config_is_uniform_and_rows_sum_to_one() {
        let data = Dataset::parse("0 0 1\n0 1 2\n0 1 0\n1 1 2\n").unwrap();
        let net = Network::new(vec![set(&[]), set(&[0]), set(&[0, 1])]).unwrap();
        let p = fit_expected(&net, &data, 0.5).unwrap();
        assert_eq!(p.theta(1, &[1]).len(), 2);
        // (0=1, 1=0) never occurs
        assert_eq!(p.theta(2, &[1, 0]), &[1.0 / 3.0; 3]);
        for v in 0..3 {
            for c in p.configs(v) {
                let row = p.theta(v, c);
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(row.iter().all(|&x| x > 0.0));
            }
        }
        assert!(fit_expected(&net, &data, 0.0).is_err());
    }

    #[test]
    fn predict_single_variable() {
        let train = Dataset::parse("0\n")
            .unwrap()
            .with_arities(vec![2])
            .unwrap();
        let test = Dataset::parse("0\n")
            .unwrap()
            .with_arities(vec![2])
            .unwrap();
        let pred = predict_logp(&Network::empty(1), &train, &test, 1.0).unwrap();
        assert!((pred.log_probs[0] - (1.5f64 / 2.0).ln()).abs() < 1e-15);
        assert_eq!(pred.mean, pred.log_probs[0]);
    }

    #[test]
    fn prediction_rises_with_multiplicity() {
        let net = Network::new(vec![set(&[]), set(&[0])]).unwrap();
        let test = Dataset::parse("1 0\n")
            .unwrap()
            .with_arities(vec![2, 2])
            .unwrap();
        let mut last = f64::NEG_INFINITY;
        for k in 1..5 {
            let mut text = String::from("0 1\n");
            text.push_str(&"1 0\n".repeat(k));
            let train = Dataset::parse(&text).unwrap();
            let lp = predict_logp(&net, &train, &test, 1.0).unwrap().mean;
            assert!(lp > last);
            last = lp;
        }
    }

    #[test]
    fn one_hot_sampling_is_constant() {
        let net = Network::new(vec![set(&[]), set(&[0])]).unwrap();
        let mut p = ParamNetwork::uniform(net, vec![3, 2]).unwrap();
        p.set_row(0, vec![], vec![0.0, 0.0, 1.0]).unwrap();
        p.set_row(1, vec![2], vec![1.0, 0.0]).unwrap();
        let d = sample(&p, 100, 7).unwrap();
        assert!(d.rows().all(|r| r == [2, 0]));
        assert!(p.set_row(1, vec![3], vec![1.0, 0.0]).is_err());
        assert!(p.set_row(1, vec![0], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let net = Network::new(vec![set(&[]), set(&[0]), set(&[1])]).unwrap();
        let p = ParamNetwork::uniform(net, vec![2, 3, 2]).unwrap();
        assert_eq!(sample(&p, 50, 1).unwrap(), sample(&p, 50, 1).unwrap());
        assert_ne!(sample(&p, 50, 1).unwrap(), sample(&p, 50, 2).unwrap());
    }

    #[test]
    fn frequencies_within_three_sigma() {
        let net = Network::new(vec![set(&[]), set(&[0])]).unwrap();
        let mut p = ParamNetwork::uniform(net, vec![2, 3]).unwrap();
        p.set_row(0, vec![], vec![0.3, 0.7]).unwrap();
        p.set_row(1, vec![0], vec![0.2, 0.5, 0.3]).unwrap();
        p.set_row(1, vec![1], vec![0.6, 0.1, 0.3]).unwrap();
        let count = 50_000;
        let d = sample(&p, count, 42).unwrap();
        let within = |hits: usize, trials: usize, prob: f64| {
            let mean = trials as f64 * prob;
            let sd = (trials as f64 * prob * (1.0 - prob)).sqrt();
            (hits as f64 - mean).abs() <= 3.0 * sd
        };
        let zeros = d.rows().filter(|r| r[0] == 0).count();
        assert!(within(zeros, count, 0.3));
        for (parent, theta) in [(0u32, [0.2, 0.5, 0.3]), (1, [0.6, 0.1, 0.3])] {
            let trials = d.rows().filter(|r| r[0] == parent).count();
            for (k, &prob) in theta.iter().enumerate() {
                let hits = d
                    .rows()
                    .filter(|r| r[0] == parent && r[1] == k as u32)
                    .count();
                assert!(within(hits, trials, prob), "parent {parent} value {k}");
            }
        }
    }
}
