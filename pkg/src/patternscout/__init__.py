"""patternscout: detect architectural-pattern instances in repositories from
natural-language pattern profiles, and evaluate the results."""

__version__ = "0.1.0"

from .config import ProviderConfig, RunConfig, ScanConfig, SignalWeights, load_config
from .detector import (
    DetectionPlan,
    DetectionReport,
    Evidence,
    Verdict,
    deliberate,
    detect,
    investigate,
    plan,
)
from .errors import PatternScoutError
from .evaluation import (
    AnnotationSet,
    ConfusionMatrix,
    FdiTable,
    RepoMeta,
    compute_fdi,
    confusion,
    filter_dataset,
    metrics,
    pearson,
)
from .prioritizer import FileCandidate, fuse, keyword_score, select_top
from .profile import PatternProfile, generate_profile, load_builtin_profiles, load_profiles, save_profile
from .provider import (
    EmbeddingVector,
    HttpBackend,
    KeywordOracleBackend,
    LlmRequest,
    Provider,
    ScriptedBackend,
    TreeFilterResult,
    make_provider,
)
from .scanner import (
    FileContent,
    RepoSnapshot,
    RepoSummary,
    match_globs,
    read_truncated,
    render_tree,
    scan_repo,
    summarize_repo,
)
from .vector_store import SeededStore, load_store, max_similarity, save_store, seed

__all__ = [
    "__version__",
    "AnnotationSet",
    "ConfusionMatrix",
    "DetectionPlan",
    "DetectionReport",
    "EmbeddingVector",
    "Evidence",
    "FdiTable",
    "FileCandidate",
    "FileContent",
    "HttpBackend",
    "KeywordOracleBackend",
    "LlmRequest",
    "PatternProfile",
    "PatternScoutError",
    "Provider",
    "ProviderConfig",
    "RepoMeta",
    "RepoSnapshot",
    "RepoSummary",
    "RunConfig",
    "ScanConfig",
    "ScriptedBackend",
    "SeededStore",
    "SignalWeights",
    "TreeFilterResult",
    "Verdict",
    "compute_fdi",
    "confusion",
    "deliberate",
    "detect",
    "filter_dataset",
    "fuse",
    "generate_profile",
    "investigate",
    "keyword_score",
    "load_builtin_profiles",
    "load_config",
    "load_profiles",
    "load_store",
    "make_provider",
    "match_globs",
    "max_similarity",
    "metrics",
    "pearson",
    "plan",
    "read_truncated",
    "render_tree",
    "save_profile",
    "save_store",
    "scan_repo",
    "seed",
    "select_top",
    "summarize_repo",
]
