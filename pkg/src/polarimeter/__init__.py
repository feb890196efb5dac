"""Controversy quantification for retweet-based discussions.

The pipeline: parse interaction records, build the directed endorsement
graph, prune it to the densely connected root-graph, split that into two
principal communities, train a linear text classifier on the two sides'
deduplicated user documents, promote confidently classified users to
signed seeds, spread their polarity over the graph, and reduce the
resulting field to a single dipole-moment score.

>>> from polarimeter import load_records, score_discussion, TopicFilter
>>> records = load_records("discussion.jsonl", TopicFilter(hashtags={"grevedu5"}))
>>> report = score_discussion(records)
>>> report.dmc_mean  # doctest: +SKIP
0.34
"""

from .classifier import ClassifierConfig, Prediction, TextClassifier, train
from .classifier import load as load_model
from .classifier import save as save_model
from .community import Partition, PrincipalPair, louvain, modularity, principal_pair, walktrap
from .corpus import (
    EmojiLexicon,
    TrainingCorpus,
    UserDocument,
    build_training_corpus,
    build_user_documents,
    dedupe,
    sanitize,
)
from .errors import (
    CorruptModelError,
    DegenerateCorpusError,
    DegenerateGraphError,
    EmptyCorpusError,
    EmptyGraphError,
    EmptySideError,
    InvalidParamsError,
    MissingArtifactError,
    ModelVersionError,
    NoSeedsError,
    NotApplicableError,
    OneSidedSeedsError,
    ParseError,
    PolarimeterError,
    SingleCommunityError,
)
from .evaluation import (
    LabeledScore,
    SynthParams,
    auc_roc,
    benchmark_scaling,
    generate_discussion,
)
from .graph import (
    MIN_ROOT_NODES,
    RetweetGraph,
    RootGraph,
    build_graph,
    largest_component,
    prune_low_degree,
)
from .ingest import (
    DatasetStats,
    InteractionRecord,
    TopicFilter,
    dataset_stats,
    load_records,
    parse_record,
    save_records,
)
from .pipeline import PipelineConfig, run_pipeline
from .polarity import (
    ApplicabilityReport,
    DmcScore,
    PolarityField,
    RunResult,
    ScoreOptions,
    ScoreReport,
    check_applicability,
    dmc,
    label_propagation,
    score_discussion,
    select_characteristic_users,
)

__version__ = "0.1.0"

__all__ = [
    "ApplicabilityReport",
    "ClassifierConfig",
    "CorruptModelError",
    "DatasetStats",
    "DegenerateCorpusError",
    "DegenerateGraphError",
    "DmcScore",
    "EmojiLexicon",
    "EmptyCorpusError",
    "EmptyGraphError",
    "EmptySideError",
    "InteractionRecord",
    "InvalidParamsError",
    "LabeledScore",
    "MIN_ROOT_NODES",
    "MissingArtifactError",
    "ModelVersionError",
    "NoSeedsError",
    "NotApplicableError",
    "OneSidedSeedsError",
    "ParseError",
    "Partition",
    "PipelineConfig",
    "PolarimeterError",
    "PolarityField",
    "Prediction",
    "PrincipalPair",
    "RetweetGraph",
    "RootGraph",
    "RunResult",
    "ScoreOptions",
    "ScoreReport",
    "SingleCommunityError",
    "SynthParams",
    "TextClassifier",
    "TopicFilter",
    "TrainingCorpus",
    "UserDocument",
    "auc_roc",
    "benchmark_scaling",
    "build_graph",
    "build_training_corpus",
    "build_user_documents",
    "check_applicability",
    "dataset_stats",
    "dedupe",
    "dmc",
    "generate_discussion",
    "label_propagation",
    "largest_component",
    "load_model",
    "load_records",
    "louvain",
    "modularity",
    "parse_record",
    "principal_pair",
    "prune_low_degree",
    "run_pipeline",
    "sanitize",
    "save_model",
    "save_records",
    "score_discussion",
    "select_characteristic_users",
    "train",
    "walktrap",
    "__version__",
]
