"""Neologism candidate extraction from large social-media corpora.

A rule-based cascade (vocabulary exclusion, pattern cleaning, typo and
concatenation flags, frequency gate, language gate) narrows unique token
types to a candidate set that an LLM ensemble then labels.
"""

__version__ = "0.1.0"
