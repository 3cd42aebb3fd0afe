"""Layer-wise phrase-level Shapley explanations for a small transformer sentiment classifier."""

from .attention import AttentionAggregationConfig, PhraseAttentionMatrix, phrase_attention
from .engine import (
    EMBEDDING,
    ENCODER,
    INPUT,
    ExplainerConfig,
    LayerTarget,
    ShapResult,
    TokenShapResult,
    baseline_token_shap,
    explain,
    explain_phrases,
)
from .errors import LayerLensError
from .model import ModelConfig, ModelWeights, forward, init_weights, load_weights, save_weights
from .phrases import PhraseKind, PhraseSet, PhraseSpan, build_phrase_set, extract_phrases
from .report import ExplanationReport, build_report, emit_document, parse_document
from .shapley import exact_shapley, kernel_shap
from .tokenizer import Vocab, load_vocab, tokenize

__version__ = "0.1.0"
