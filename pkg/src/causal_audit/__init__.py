"""Audit causal-graph edges with LLMs and measure hallucination."""

__version__ = "0.1.0"
