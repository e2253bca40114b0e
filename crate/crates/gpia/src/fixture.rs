//! The seeded planted fixture used by examples, tests and the CLI.
//!
//! A 2000-node synthetic graph whose labels depend only on a column that
//! agrees with the hidden property 90% of the time. Positive attack samples
//! hold 70% lhs-group nodes and negative ones 30%.

use crate::attacks::{Access, AdversaryKnowledge, AttackId, AttackSpec, Composition, PartialGraph, SamplingPlan};
use crate::error::Result;
use crate::gnn::GnnConfig;
use crate::graph::{generate_synthetic, Graph, PropertySpec, SyntheticConfig, PROPERTY_COL};

#[derive(Clone, Debug)]
pub struct PlantedFixture {
    pub target: Graph,
    pub property: PropertySpec,
    pub cfg: GnnConfig,
    pub plan: SamplingPlan,
    pub partial: PartialGraph,
    pub seed: u64,
}

impl PlantedFixture {
    /// Graph settings of the fixture.
    pub fn graph_config(seed: u64) -> SyntheticConfig {
        SyntheticConfig { n: 2000, rho: 0.8, extra_features: 0, seed, ..Default::default() }
    }

    /// Sampling settings: 200 training and 100 test subgraphs of 50 nodes.
    pub fn sampling_plan(composition: Composition) -> SamplingPlan {
        SamplingPlan { train_count: 200, test_count: 100, composition, ..Default::default() }
    }

    /// Positives at 70% lhs nodes, negatives at 30%.
    pub fn new(seed: u64) -> Result<Self> {
        Self::build(Self::graph_config(seed), Composition::GroupRatio { positive: 0.7, negative: 0.3 }, seed)
    }

    /// Both groups equally prevalent and subgraphs drawn uniformly, so
    /// positives and negatives differ by a node or two.
    pub fn balanced(seed: u64) -> Result<Self> {
        Self::build(SyntheticConfig { group_ratio: 0.5, ..Self::graph_config(seed) }, Composition::Uniform, seed)
    }

    /// A fixture from any graph settings and composition.
    pub fn build(graph: SyntheticConfig, composition: Composition, seed: u64) -> Result<Self> {
        let target = generate_synthetic(&graph)?;
        let plan = Self::sampling_plan(composition);
        let partial = PartialGraph::from_target(&target, plan.partial_fraction, seed)?;
        Ok(PlantedFixture {
            target,
            property: PropertySpec::node_majority(PROPERTY_COL, 1, 0),
            cfg: GnnConfig { seed, ..Default::default() },
            plan,
            partial,
            seed,
        })
    }

    /// Partial-graph knowledge with the given access.
    pub fn knowledge(&self, access: Access) -> AdversaryKnowledge {
        AdversaryKnowledge::new(Some(self.partial.clone()), None, access)
    }

    /// Default spec for `id` under the fixture's sampling plan.
    pub fn spec(&self, id: AttackId) -> AttackSpec {
        AttackSpec::new(id, self.property.clone()).with_plan(self.plan.clone())
    }
}
