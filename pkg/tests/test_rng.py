import numpy as np

from cpaudit.rng import RngStream


def test_same_key_same_draws():
    a = RngStream(42, 7).generator().normal(size=100)
    b = RngStream(42, 7).generator().normal(size=100)
    assert np.array_equal(a, b)


def test_different_streams_differ():
    a = RngStream(42, 0).generator().normal(size=50)
    b = RngStream(42, 1).generator().normal(size=50)
    assert not np.array_equal(a, b)


def test_child_is_deterministic_and_label_sensitive():
    root = RngStream(9)
    assert root.child("x") == root.child("x")
    assert root.child("x") != root.child("y")
    assert root.child(("a", 1)) != root.child(("a", 2))


def test_child_keeps_seed():
    assert RngStream(5).child("anything").seed == 5


def test_state_roundtrip():
    s = RngStream(3, 11)
    assert RngStream.from_state(s.to_state()) == s
