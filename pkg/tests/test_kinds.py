"""Kind rules for refinement expressions."""

from __future__ import annotations

import pytest

from sessioncheck.checker import KindError, kind_of_ref
from sessioncheck.model import (
    BOOL,
    INT,
    STR,
    Arith,
    BinderRef,
    BoolLit,
    BoolOp,
    Cmp,
    IntLit,
    NamedType,
    Proj,
    RefinedType,
    StrLit,
    TupleType,
    UnwrapDep,
    VarId,
    VarRef,
)

M1 = VarRef(VarId("m1"))
PACKET_INT = TupleType((NamedType("Packet"), INT))
ENV = {"m1": PACKET_INT}


def test_projection_then_arith_is_int():
    expr = Arith("+", Proj(M1, 2), IntLit(1))
    assert kind_of_ref(expr, ENV, None) == INT


def test_int_vs_str_comparison_fails():
    expr = Cmp("==", Proj(M1, 2), StrLit("hi"))
    with pytest.raises(KindError):
        kind_of_ref(expr, ENV, None)


def test_bool_connectives():
    expr = BoolOp("and", BoolLit(True), Cmp("<", IntLit(1), IntLit(2)))
    assert kind_of_ref(expr, {}, None) == BOOL


def test_binder_takes_payload_kind():
    assert kind_of_ref(BinderRef(), {}, STR) == STR
    with pytest.raises(KindError):
        kind_of_ref(BinderRef(), {}, None)


def test_unwrap_requires_refined():
    refined = RefinedType(PACKET_INT, ("a", "b"), Cmp("==", Proj(BinderRef(), 2), IntLit(1)))
    env = {"m2": refined}
    assert kind_of_ref(UnwrapDep(VarRef(VarId("m2"))), env, None) == PACKET_INT
    assert kind_of_ref(Proj(UnwrapDep(VarRef(VarId("m2"))), 2), env, None) == INT
    with pytest.raises(KindError):
        kind_of_ref(UnwrapDep(M1), ENV, None)
    # projecting a refined value without unwrapping first is rejected
    with pytest.raises(KindError):
        kind_of_ref(Proj(VarRef(VarId("m2")), 2), env, None)


def test_projection_bounds_and_base():
    with pytest.raises(KindError):
        kind_of_ref(Proj(M1, 3), ENV, None)
    with pytest.raises(KindError):
        kind_of_ref(Proj(IntLit(1), 1), {}, None)


def test_only_base_kinds_compare():
    with pytest.raises(KindError):
        kind_of_ref(Cmp("==", M1, M1), ENV, None)
    with pytest.raises(KindError):
        kind_of_ref(Cmp("<", StrLit("a"), StrLit("b")), {}, None)
    assert kind_of_ref(Cmp("!=", StrLit("a"), StrLit("b")), {}, None) == BOOL


def test_unbound_variable():
    with pytest.raises(KindError):
        kind_of_ref(VarRef(VarId("nope")), {}, None)


def test_arith_needs_ints():
    with pytest.raises(KindError):
        kind_of_ref(Arith("*", StrLit("x"), IntLit(1)), {}, None)
    with pytest.raises(KindError):
        kind_of_ref(BoolOp("or", IntLit(1), BoolLit(True)), {}, None)
