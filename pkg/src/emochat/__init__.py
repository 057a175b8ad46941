"""Emotion-aware chat toolkit: keystroke dynamics + text emotion fusion."""

from .core import (
    CATEGORIES,
    ChatMessage,
    EmotionAnnotation,
    EmotionPrediction,
    KeyEvent,
    MessageEventWindow,
    ValidatedStream,
    segment_by_message,
    validate_event_stream,
)
from .features import (
    CONTENT_FEATURE_NAMES,
    FEATURE_NAMES,
    KD_FEATURE_NAMES,
    ContentFeatureVector,
    FeatureRow,
    KeystrokeFeatureVector,
    build_feature_row,
    extract_content_features,
    extract_keystroke_features,
)
from .textanalysis import (
    ConversationContext,
    LexiconAnalyzer,
    RemoteAnalyzer,
    TextEmotion,
    redact_pii,
)
from .fusion import (
    FusedRow,
    LabeledRow,
    ModelSuite,
    SuiteParams,
    TARGETS,
    build_fused_row,
    load_suite,
    predict_message,
    save_suite,
    train_suite,
)
from .evaluation import (
    AgreementReport,
    MetricsReport,
    aggregate_annotations,
    agreement_summary,
    compute_metrics,
    cross_validate,
    evaluate_suite,
    krippendorff_alpha,
)
from .synthetic import CorpusConfig, DEFAULT_PROFILES, EmotionProfile, generate_corpus, generate_message
from .corpus import CorpusRecord, corpus_from_jsonl, corpus_to_jsonl, featurize_records

__version__ = "0.1.0"
