"""Protocol scripts: parsing, purification, execution and analysis."""

from .audit import AuditReport, audit_no_signalling, random_script_source
from .commitment import CommitmentStates, commitment_states, helstrom_observable, helstrom_probability
from .compiler import purify, purify_all
from .executor import (
    MODES,
    Transcript,
    compare_distributions,
    enumerate_round,
    execute,
    observation_distribution,
    parse_mode,
)
from .nodes import ProtocolScript
from .parser import parse, parse_file
from .vaa import flip_pass_probability, flip_rejection_probability, vaa_script, vaa_source

__all__ = [
    "AuditReport", "CommitmentStates", "MODES", "ProtocolScript", "Transcript",
    "audit_no_signalling", "commitment_states", "compare_distributions", "enumerate_round",
    "execute", "flip_pass_probability", "flip_rejection_probability", "helstrom_observable",
    "helstrom_probability", "observation_distribution", "parse", "parse_file", "parse_mode",
    "purify", "purify_all", "random_script_source", "vaa_script", "vaa_source",
]
