"""The built-in bit-commitment protocol on pre- and post-selected spin pairs."""

from __future__ import annotations

from .builtins import inference_table
from .executor import enumerate_round
from .nodes import Commit, ProtocolScript, Reveal, Verify
from .parser import parse

# a: Alice's half of the pair, c: the channel particle.
# Bob picks a spin axis k at random and measures it on c with outcome m.
# Alice measures R on (a, c); Bob then announces which rounds gave "up".
VAA_TEMPLATE = """\
protocol vaa
rounds {n}

prepare A a, c bell
send c A B
choose B k = sx: measure sx c -> m | sy: measure sy c -> m | sz: measure sz c -> m
send c B A
measure A R a, c -> r
announce B m == up

commit A r 0: r2, r3, r4 | 1: r1
reveal A claim k from r given m using vaa
verify B k
"""


def vaa_source(n: int = 1) -> str:
    if int(n) < 1:
        raise ValueError("the protocol needs at least one round")
    return VAA_TEMPLATE.format(n=int(n))


def vaa_script(n: int = 1) -> ProtocolScript:
    """Script of the n-round protocol; rounds are independent and share one step list."""
    return parse(vaa_source(n))


def flip_pass_probability(script: ProtocolScript | None = None) -> float:
    """Per-round probability that opening the other bit still passes verification.

    Uses the exact round distribution and the reveal step's inference table.
    A dishonest opening claims the rounds it did not commit as bit-0 rounds
    (or vice versa) and guesses uniformly among the compatible claim values.
    """
    script = script or vaa_script(1)
    commit = next(s for s in script.final_steps if isinstance(s, Commit))
    reveal = next(s for s in script.final_steps if isinstance(s, Reveal))
    verify = next(s for s in script.final_steps if isinstance(s, Verify))
    table = inference_table(reveal.table)
    # after a flip the proof set is the set committed for bit 1
    proof_labels = set(commit.sets[1])
    total = 0.0
    for p, st in enumerate_round(script):
        if not st.kept or st.values[commit.record] not in proof_labels:
            total += p
            continue
        cands = table.candidates(st.values[reveal.source], st.values[reveal.given]) or list(table.claim_outcomes)
        if st.values[verify.record] in cands:
            total += p / len(cands)
    return total


def flip_rejection_probability(n: int, script: ProtocolScript | None = None) -> float:
    """Probability that an n-round opening of the other bit is rejected."""
    return 1.0 - flip_pass_probability(script) ** n
