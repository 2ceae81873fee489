"""LLM ensemble classification: prompts, endpoints, voting, verification."""

from .prompts import LABELS, MULTI, PARSE_FAIL, SINGLE, Label, PromptBatch, parse_response, render_prompt
from .providers import (
    VERIFIER,
    VOTER,
    EndpointClient,
    EndpointDown,
    MockProvider,
    ModelEndpoint,
    TokenBucket,
    make_provider,
)
from .runner import ResultsLog, aggregate, classify_all, label_batch, verify
from .voting import Classification, apply_verification, classify_votes, majority_vote, tally

__all__ = [
    "LABELS", "MULTI", "PARSE_FAIL", "SINGLE", "Label", "PromptBatch", "parse_response",
    "render_prompt", "VERIFIER", "VOTER", "EndpointClient", "EndpointDown", "MockProvider",
    "ModelEndpoint", "TokenBucket", "make_provider", "ResultsLog", "aggregate", "classify_all",
    "label_batch", "verify", "Classification", "apply_verification", "classify_votes",
    "majority_vote", "tally",
]
