import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credex.belief import (
    Frame,
    Subset,
    bel,
    classify_mass,
    make_mass,
    mass_from_json,
    mass_to_json,
    pl,
)
from credex.errors import BadFrame, BadSubset, EmptySetMass, FrameMismatch, NonNormalized


def test_frame_enumeration_order():
    frame = Frame.of_size(3)
    subsets = frame.all_subsets()
    assert len(subsets) == 7
    assert [len(a) for a in subsets] == [1, 1, 1, 2, 2, 2, 3]
    assert subsets[-1] == frame.omega
    assert [a.key for a in subsets[:3]] == ["w1", "w2", "w3"]


def test_parse_and_key():
    frame = Frame.of_size(3)
    a = frame.parse("w3|w1")
    assert a.key == "w1|w3"
    assert repr(a) == "{w1,w3}"
    assert frame.parse("").is_empty
    assert 0 in a and 1 not in a


@pytest.mark.parametrize("labels", [(), tuple(f"c{i}" for i in range(17)), ("a", "a"), ("a", "b|c")])
def test_bad_frames(labels):
    with pytest.raises(BadFrame):
        Frame(labels)


def test_bad_subsets():
    frame = Frame.of_size(2)
    with pytest.raises(BadSubset):
        frame.parse("w3")
    with pytest.raises(BadSubset):
        Subset(frame, 4)
    with pytest.raises(FrameMismatch):
        frame.singleton(0) & Frame.of_size(3).singleton(0)


def test_make_mass_validation():
    frame = Frame.of_size(2)
    w1, w2 = frame.singletons()
    with pytest.raises(NonNormalized):
        make_mass(frame, [(w1, 0.5), (w2, 0.4)])
    with pytest.raises(NonNormalized):
        make_mass(frame, [(w1, 1.2), (w2, -0.2)])
    with pytest.raises(EmptySetMass):
        make_mass(frame, [(frame.empty, 0.1), (w1, 0.9)])
    with pytest.raises(FrameMismatch):
        make_mass(frame, [(Frame.of_size(3).singleton(0), 1.0)])


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), float("-inf")])
def test_make_mass_rejects_non_finite(bad):
    frame = Frame.of_size(2)
    w1, w2 = frame.singletons()
    with pytest.raises(NonNormalized):
        make_mass(frame, [(w1, bad), (w2, 1.0)])
    with pytest.raises(NonNormalized):
        make_mass(frame, [(w1, bad)])
    with pytest.raises(NonNormalized):
        mass_from_json({"frame": ["w1", "w2"], "masses": {"w1": bad, "w2": 1.0}})


def test_bel_pl_example():
    frame = Frame.of_size(2)
    w1, w2 = frame.singletons()
    m = make_mass(frame, [(w1, 0.5), (frame.omega, 0.5)])
    assert bel(m, w1) == 0.5
    assert pl(m, w1) == 1.0
    assert bel(m, w2) == 0.0
    assert pl(m, w2) == 0.5
    assert bel(m, frame.omega) == 1.0


def test_classify_mass():
    frame = Frame.of_size(3)
    vacuous = classify_mass(make_mass(frame, [(frame.omega, 1.0)]))
    assert vacuous.vacuous and vacuous.categorical and not vacuous.bayesian
    bayes = classify_mass(make_mass(frame, [(frame.singleton(0), 0.3), (frame.singleton(2), 0.7)]))
    assert bayes.bayesian and not bayes.categorical


def test_mass_json_round_trip():
    frame = Frame.of_size(3)
    m = make_mass(frame, [(frame.subset("w1", "w2"), 0.25), (frame.singleton(2), 0.75)])
    doc = mass_to_json(m)
    assert doc["masses"] == {"w3": 0.75, "w1|w2": 0.25}
    back = mass_from_json(doc)
    assert back.as_dict() == m.as_dict()


@st.composite
def mass_functions(draw):
    c = draw(st.integers(min_value=1, max_value=4))
    frame = Frame.of_size(c)
    subsets = frame.all_subsets()
    picked = draw(st.lists(st.sampled_from(subsets), min_size=1, max_size=len(subsets), unique=True))
    weights = draw(st.lists(st.floats(min_value=0.01, max_value=1.0), min_size=len(picked), max_size=len(picked)))
    total = sum(weights)
    return make_mass(frame, [(a, w / total) for a, w in zip(picked, weights)])


@settings(max_examples=200, deadline=None)
@given(mass_functions(), st.data())
def test_bel_pl_duality(m, data):
    frame = m.frame
    a = data.draw(st.sampled_from(frame.all_subsets()))
    complement = Subset(frame, frame.full_mask & ~a.mask)
    assert bel(m, a) <= pl(m, a) + 1e-12
    assert bel(m, a) == pytest.approx(1.0 - pl(m, complement), abs=1e-9)
    assert bel(m, frame.omega) == pytest.approx(1.0, abs=1e-9)
