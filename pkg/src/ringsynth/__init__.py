"""Synthesis and verification of token-ring process templates.

The package turns parameterized LTL specifications into single-process
synthesis problems, solves them by SMT-based bounded synthesis, and
verifies the resulting finite-state templates in token rings of any size
under synchronous, interleaving, and fully asynchronous timing.
"""

from .checker import check_token_release, cutoff_for, cutoff_sample_check, verify_ring
from .ltl import parse_ltl, pretty
from .pspec import IndexedSpec, QuantifiedProperty, builtin_corpus, load_spec
from .ring import ProcessTemplate, Ring, RingConfig, check_wellformed
from .synth import PinnedPrefix, synthesize_loop
from .transforms import prepare_for_synthesis

__version__ = "0.1.0"

__all__ = [
    "IndexedSpec", "PinnedPrefix", "ProcessTemplate", "QuantifiedProperty",
    "Ring", "RingConfig", "builtin_corpus", "check_token_release",
    "check_wellformed", "cutoff_for", "cutoff_sample_check", "load_spec",
    "parse_ltl", "prepare_for_synthesis", "pretty", "synthesize_loop",
    "verify_ring",
]
