"""Version-aware sentiment-topic tracing for app review streams.

Feeds per-version review collections through a biterm sentiment-topic model
chained by an adaptive word prior, flags emerging negative topics by
divergence outliers, labels topics with representative phrases and
sentences, and exports issue reports plus changelog-based metrics.
"""

from .backend import BACKEND
from .bst import (
    Biterm,
    BstModelState,
    Hyperparameters,
    VersionSnapshot,
    biterm_probability,
    extract_biterms,
    gibbs_sweep,
    init_model,
    sentiment_prior,
    train,
)
from .config import Config, load_config, save_config
from .corpus import (
    LemmaRules,
    PolarityLexicon,
    RawReview,
    TokenizedReview,
    VersionCorpus,
    build_version_corpora,
    extract_phrases,
    load_polarity_lexicon,
    preprocess_review,
)
from .emerging import (
    DivergenceMatrix,
    EmergingTopicSet,
    detect_anomalies,
    divergence_matrix,
    js_divergence,
)
from .embed import EmbeddingTable, cosine, embed_text, load_vectors, train_vectors
from .evaluation import Changelog, EvalResult, evaluate, f_hybrid, match_issue
from .labeling import Candidate, LabelingParams, label_topic, score_candidate
from .online import VersionWindow, adaptive_prior, advance, connection_strengths
from .report import (
    PipelineError,
    PipelineResult,
    branch_width,
    emit_report,
    evaluate_pipeline,
    load_report,
    run_pipeline,
)

__version__ = "0.1.0"
