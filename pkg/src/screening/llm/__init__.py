"""Chat-completion endpoints as evaluators, plus dataset collection."""

from ..exceptions import CollectionError, TransportError
from .catalog import LAPTOP_LEVELS, AlternativeCatalog, load_catalog
from .client import DIALECTS, LlmClient, LlmEndpointConfig, LlmEvaluator, sample_wtp
from .collect import CostEstimate, collect_dataset, query_cost
from .prompt import (
    SURVEY_SYSTEM_MESSAGE,
    PromptTemplate,
    estimate_tokens,
    extract_price,
    laptop_template,
    placeholders,
    render_prompt,
)

__all__ = [
    "AlternativeCatalog",
    "CollectionError",
    "CostEstimate",
    "DIALECTS",
    "LAPTOP_LEVELS",
    "LlmClient",
    "LlmEndpointConfig",
    "LlmEvaluator",
    "PromptTemplate",
    "SURVEY_SYSTEM_MESSAGE",
    "TransportError",
    "collect_dataset",
    "estimate_tokens",
    "extract_price",
    "laptop_template",
    "load_catalog",
    "placeholders",
    "query_cost",
    "render_prompt",
    "sample_wtp",
]
