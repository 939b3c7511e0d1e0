//! Site environments: which lattice vertices host an individual able to
//! pass the rumour on.

use serde::{Deserialize, Serialize};

use crate::keyed::{Channel, KeyedStream};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SiteEnvironment {
    #[default]
    AllOccupied,
    /// Each vertex is occupied independently with probability `p_occ`.
    BernoulliSites { p_occ: f64 },
    /// Occupancy flags form a stationary two-state Markov chain along the line.
    MarkovSites { p00: f64, p11: f64 },
}

impl SiteEnvironment {
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut prob = |name: &str, v: f64| {
            if !(0.0..=1.0).contains(&v) || v.is_nan() {
                out.push(format!("{name} = {v} is not a probability"));
            }
        };
        match self {
            SiteEnvironment::AllOccupied => {}
            SiteEnvironment::BernoulliSites { p_occ } => prob("p_occ", *p_occ),
            SiteEnvironment::MarkovSites { p00, p11 } => {
                prob("p00", *p00);
                prob("p11", *p11);
            }
        }
        out
    }

    pub fn is_all_occupied(&self) -> bool {
        matches!(self, SiteEnvironment::AllOccupied)
    }

    /// Stationary probability of an occupied site.
    pub fn occupancy(&self) -> f64 {
        match self {
            SiteEnvironment::AllOccupied => 1.0,
            SiteEnvironment::BernoulliSites { p_occ } => *p_occ,
            SiteEnvironment::MarkovSites { p00, p11 } => stationary_occupied(*p00, *p11),
        }
    }
}

fn stationary_occupied(p00: f64, p11: f64) -> f64 {
    let up = 1.0 - p00;
    let down = 1.0 - p11;
    if up + down == 0.0 {
        0.5
    } else {
        up / (up + down)
    }
}

/// Lazily materialized occupancy flags for one replicate.
///
/// Bernoulli flags are pure functions of the key. Markov flags depend on their
/// neighbour, so they are memoized as the chain is extended outward from the
/// origin in both directions. The origin itself always counts as occupied.
#[derive(Debug, Clone)]
pub struct Sites {
    env: SiteEnvironment,
    stream: KeyedStream,
    // chain state at v >= 0 (index v) and at v < 0 (index -v - 1)
    right: Vec<bool>,
    left: Vec<bool>,
}

impl Sites {
    pub fn new(env: SiteEnvironment, seed: u64) -> Self {
        Self {
            env,
            stream: KeyedStream::new(seed),
            right: Vec::new(),
            left: Vec::new(),
        }
    }

    pub fn all_occupied() -> Self {
        Self::new(SiteEnvironment::AllOccupied, 0)
    }

    pub fn environment(&self) -> &SiteEnvironment {
        &self.env
    }

    pub fn occupied(&mut self, v: i64) -> bool {
        if v == 0 {
            return true;
        }
        match self.env {
            SiteEnvironment::AllOccupied => true,
            SiteEnvironment::BernoulliSites { p_occ } => {
                self.stream.uniform(0, v, Channel::Site) < p_occ
            }
            SiteEnvironment::MarkovSites { p00, p11 } => self.chain_state(v, p00, p11),
        }
    }

    fn chain_state(&mut self, v: i64, p00: f64, p11: f64) -> bool {
        if self.right.is_empty() {
            let pi1 = stationary_occupied(p00, p11);
            self.right.push(self.stream.uniform(0, 0, Channel::Site) < pi1);
        }
        // A stationary two-state chain is reversible, so the same kernel
        // extends it to the left.
        let next = |prev: bool, u: f64| if prev { u < p11 } else { u >= p00 };
        if v >= 0 {
            let idx = v as usize;
            while self.right.len() <= idx {
                let w = self.right.len() as i64;
                let prev = *self.right.last().unwrap();
                self.right.push(next(prev, self.stream.uniform(0, w, Channel::Site)));
            }
            self.right[idx]
        } else {
            let idx = (-v - 1) as usize;
            while self.left.len() <= idx {
                let w = -(self.left.len() as i64) - 1;
                let prev = self.left.last().copied().unwrap_or(self.right[0]);
                self.left.push(next(prev, self.stream.uniform(0, w, Channel::Site)));
            }
            self.left[idx]
        }
    }
}
