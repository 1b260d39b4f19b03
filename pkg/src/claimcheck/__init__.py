"""Claim verification engine: dual retrieval-augmented pipelines, external
fact-checking with model fallback, and confidence-voted verdict integration,
plus the ingestion and evaluation tooling around them.
"""

from .bundled import bundled_corpus_path, bundled_mock_script_path
from .embedding import (
    CachingEmbedder,
    EmbedderConfig,
    HashedBagOfWordsEmbedder,
    RemoteHttpEmbedder,
    build_embedder,
)
from .errors import (
    ApiUnavailableError,
    ClaimcheckError,
    CompletionTimeoutError,
    ConfigError,
    CorruptIndexFileError,
    DuplicateDocIdError,
    EmptyTextError,
    InsufficientTrainingDataError,
    LeakageError,
    MalformedFileError,
    ParseFailureError,
    ProviderError,
    QuotaExceededError,
    RemoteUnavailableError,
    TooFewRecordsError,
    UnrecognizedLabelError,
    UntrainedIndexError,
)
from .evalharness import (
    EvaluationRun,
    MetricsReport,
    ProviderBundle,
    RunConfig,
    SystemVariant,
    compute_metrics,
    evaluate,
    metrics_from_confusion,
    render_comparison_table,
    threshold_sweep,
    write_artifacts,
)
from .factcheck import (
    FactCheckMatch,
    HttpFactCheckClient,
    RatingMap,
    ResponseCache,
    ScriptedFactCheckClient,
)
from .gateway import (
    DEFAULT_EXPERT_ROLES,
    ExpertRoleSet,
    HttpCompletionProvider,
    MockCompletionProvider,
    ModelAssessment,
    ModelId,
    ModelProfile,
    build_reasoning_prompt,
    build_role_prompt,
    model_reasoning,
    parse_assessment,
    prompt_fingerprint,
    role_based_analysis,
)
from .index import EvidenceDocument, IvfFlatIndex, SearchHit, brute_force_search, default_nlist
from .ingest import (
    CorpusRecord,
    IngestionReport,
    SplitSpec,
    build_knowledge_base,
    parse_corpus,
    split_records,
)
from .model import (
    Claim,
    DecisionRule,
    Label,
    PipelineId,
    PipelineResult,
    RouteTag,
    SourceAttribution,
    SourceKind,
    VerdictReport,
    disabled_placeholder,
    error_placeholder,
    parse_label,
)
from .rag import RagConfig, TierThresholds
from .rag import verify as rag_verify
from .factcheck import verify as factcheck_verify
from .verdict import NormalizedResult, integrate, normalize

__version__ = "0.1.0"
