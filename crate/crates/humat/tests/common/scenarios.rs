//! Seeded random scenario generation shared by the integration suites.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use humat::config::{
    ActivationOrder, BeliefInit, RawAgent, RawAlternative, RawConfig, RawMotive, RawNetwork,
    RawPopulation, RawRange, Scenario,
};
use humat::influence::InfluenceParams;
use humat::model::MotiveGroup;

pub struct Gen(pub ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn usize_in(&mut self, lo: usize, hi: usize) -> usize {
        lo + (self.0.next_u64() % (hi - lo + 1) as u64) as usize
    }

    pub fn pick<T: Copy>(&mut self, options: &[T]) -> T {
        options[(self.0.next_u64() % options.len() as u64) as usize]
    }

    pub fn f64_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.0.next_u64() >> 11) as f64 * 2f64.powi(-53))
    }

    pub fn bool(&mut self) -> bool {
        self.0.next_u64().is_multiple_of(2)
    }
}

/// Random valid scenario with `n_agents <= max_n` and `ticks <= max_t`,
/// covering every generator kind, activation order, belief mode, and both
/// initialization modes.
pub fn random_config(g: &mut Gen, max_n: usize, max_t: usize) -> Scenario {
    let motive_count = g.usize_in(1, 4);
    let alt_count = g.usize_in(2, 3);
    let n = g.usize_in(1, max_n) as u32;
    let social_slot = g.usize_in(0, motive_count - 1);
    let motives = (0..motive_count)
        .map(|id| RawMotive {
            id,
            name: format!("motive{id}"),
            group: if id == social_slot {
                MotiveGroup::Social
            } else {
                g.pick(&[
                    MotiveGroup::Experiential,
                    MotiveGroup::Social,
                    MotiveGroup::Value,
                ])
            },
        })
        .collect();
    let alternatives = (0..alt_count)
        .map(|id| RawAlternative {
            id,
            label: format!("alt{id}"),
        })
        .collect();
    let similarity_weight = g.pick(&[0.0, 0.3, 0.5, 1.0]);
    let influence = InfluenceParams {
        similarity_weight,
        aspiration_weight: 1.0 - similarity_weight,
        learning_rate: g.pick(&[0.0, 0.25, 0.5, 1.0]),
    };
    // Largest valid lattice degree is the even number below n.
    let even_k_below = |g: &mut Gen, n: u32| -> u32 {
        if n <= 1 {
            0
        } else {
            2 * g.usize_in(0, ((n - 1) / 2) as usize) as u32
        }
    };
    let network = match g.usize_in(0, 3) {
        0 => RawNetwork {
            kind: "complete".into(),
            k: None,
            beta: None,
            p: None,
        },
        1 => RawNetwork {
            kind: "ring".into(),
            k: Some(even_k_below(g, n)),
            beta: None,
            p: None,
        },
        2 => RawNetwork {
            kind: "erdos_renyi".into(),
            k: None,
            beta: None,
            p: Some(g.pick(&[0.0, 0.3, 0.7, 1.0])),
        },
        _ => RawNetwork {
            kind: "watts_strogatz".into(),
            k: Some(even_k_below(g, n)),
            beta: Some(g.pick(&[0.0, 0.2, 0.5, 1.0])),
            p: None,
        },
    };
    let (population, agents) = if g.bool() {
        (
            Some(RawPopulation {
                size: n,
                importance: RawRange {
                    low: 0.05,
                    high: 1.0,
                },
                satisfaction: RawRange {
                    low: -1.0,
                    high: 1.0,
                },
                aspiration: RawRange { low: 0.0, high: 1.0 },
            }),
            None,
        )
    } else {
        let rows = (0..n)
            .map(|id| RawAgent {
                id,
                importances: (0..motive_count).map(|_| g.f64_in(0.05, 1.0)).collect(),
                satisfactions: (0..motive_count)
                    .map(|_| (0..alt_count).map(|_| g.f64_in(-1.0, 1.0)).collect())
                    .collect(),
                aspiration: g.f64_in(0.0, 1.0),
            })
            .collect();
        (None, Some(rows))
    };
    let raw = RawConfig {
        seed: g.0.next_u64(),
        ticks: g.usize_in(0, max_t) as u64,
        epsilon: g.pick(&[0.0, 0.0, 0.1, 0.3]),
        activation_order: if g.bool() {
            ActivationOrder::ByIdAscending
        } else {
            ActivationOrder::ShuffledEachTick
        },
        belief_init: if g.bool() {
            BeliefInit::Perfect
        } else {
            BeliefInit::Uninformative
        },
        motives,
        alternatives,
        influence,
        network: Some(network),
        networks: None,
        population,
        agents,
    };
    Scenario::resolve(raw).expect("generated config must be valid")
}
