"""Rule-mutation suite: every obligation detects its minimal protocol, and
a build with that single check disabled accepts the same protocol.

Run it on its own with `pytest tests/test_mutation.py -v`.
"""

from __future__ import annotations

import pytest

from conftest import check_source

# One minimal protocol per checker obligation: triggers exactly that code.
MINIMAL = {
    "E002": "roles A, B\nprotocol P [A] { msg m : Int by B; end }",
    "E003": "roles A, B\nprotocol P [A, B] { msg m : Int by A; send m B -> A; end }",
    "E004": "roles A, B\nprotocol P [A, B] { msg m : Int by A; dep d : (x : Int) where x == m + 1 by B; end }",
    "E005": "roles A, B, C\nprotocol P [A, B, C] { msg m : Int by A; send m A -> B; read m { _ => end } }",
    "E006": "roles A\ntype T = X | Y\nprotocol P [A] { msg m : T by A; read m { X => end } }",
    "E007": "roles A\nprotocol P [A] { end; end }",
    "E008": "roles A, B\nprotocol Sub [B, A] { end }\nprotocol P [A, B] { call Sub }\nentry P",
    "E010": "roles A\nprotocol P [A] { dep d : (x : Int) where x == true by A; end }",
    "E011": "roles A\nprotocol P [A] { msg m : Int by A; send m A -> A; end }",
}


@pytest.mark.parametrize("code", sorted(MINIMAL))
def test_minimal_protocol_triggers_exactly_one_code(code):
    result = check_source(MINIMAL[code])
    assert [d.code for d in result.errors] == [code]


@pytest.mark.parametrize("code", sorted(MINIMAL))
def test_disabling_the_obligation_flips_the_verdict(code):
    result = check_source(MINIMAL[code], disabled=frozenset({code}))
    assert result.errors == []
    assert result.final_indices  # the protocol now checks through to its paths


@pytest.mark.parametrize("code", sorted(MINIMAL))
def test_disabling_other_obligations_does_not(code):
    others = frozenset(MINIMAL) - {code}
    result = check_source(MINIMAL[code], disabled=others)
    assert [d.code for d in result.errors] == [code]
