"""Causal intervention calculus for system reliability on chain event graphs.

Builds failure CEGs from staged trees, extracts causally ordered events
from maintenance-log text, binds them into a two-level net/CEG model,
and evaluates remedial interventions (also under missing data) with
every identification formula cross-checkable against an exact
enumeration oracle.
"""

from .trees import (
    EventTree,
    ProbabilityTree,
    StagedTree,
    PositionPartition,
    compute_positions,
    compute_stages,
    subtree_isomorphic,
    validate_probability_tree,
)
from .ceg import (
    CegEdge,
    CegPath,
    FailureCEG,
    build_ceg,
    ceg_from_staged_tree,
    conditional_path_probability,
    enumerate_paths,
    eval_floret_and_incident,
    event_probability,
    path_probability,
)
from .extraction import Document, ExtractionConfig, OrderedEvents, extract_events
from .globalnet import (
    CoreEventVariable,
    CountTable,
    EdgeConstraints,
    GlobalNet,
    GNSubgraph,
    ScoreConfig,
    build_core_event_variables,
    derive_constraints,
    learn_global_net,
    locate_document,
    project_events,
)
from .hierarchy import (
    Assignment,
    CommunityMap,
    EmissionModel,
    Flattening,
    HierarchicalModel,
    SubCommunity,
    build_flattening,
    check_rcmc,
    control_core_event,
    d_separated,
    latent_path,
)
from .remedy import (
    FloretPrior,
    RemedyRecord,
    apply_remedy,
    backdoor_remedial_effect,
    backdoor_singular,
    classify_remedy,
    indicator_distribution,
    perfect_effect,
    post_intervention_distribution,
    random_effect,
    update_hyperparameters,
)
from .missingness import (
    HeterogeneityModel,
    MCeg,
    MissingEventIndicators,
    build_mceg,
    build_mtree,
    extend_flattening_with_missingness,
    m_backdoor_remedial,
    m_backdoor_singular,
    mix_heterogeneity,
)
from .bundle import ModelBundle, load_bundle, save_bundle
from .oracle import OracleJoint, oracle_enumerate, singular_manipulation
from .dot import export_dot

__version__ = "0.1.0"
