import math
import random
from fractions import Fraction

import pytest

from tpoly import combos, dwork, hodge, lattice
from tpoly.lattice import isosceles

D7 = isosceles(7)
D13 = isosceles(13)

EXAMPLE_BETA = {
    (2, 6): (1, 2), (3, 5): (1, 1), (3, 6): (2, 1), (5, 3): (4, 2),
    (5, 6): (1, 5), (6, 2): (5, 1), (6, 3): (4, 1), (6, 5): (1, 4),
    (6, 6): (2, 4),
}


def test_labels():
    labels2 = combos.label_T1prime(isosceles(2))
    assert len(labels2) == 6
    labels7 = combos.label_T1prime(D7)
    assert len(labels7) == 36
    assert labels7[0] == (7, 0) and labels7[1] == (0, 7)
    assert combos.label_T1prime(D7) == labels7  # stable


def test_ordinary_case_single_empty_bijection():
    bs = combos.special_bijections(isosceles(5), 11)
    assert len(bs) == 1 and bs[0].sign == 1 and bs[0].pairs == ()


def test_example_bijection_enumerated():
    bs = combos.special_bijections(D7, 17)
    assert any(b.as_dict() == EXAMPLE_BETA for b in bs)
    # every difference vector is inside the closed triangle
    for b in bs[:50]:
        for v in b.vectors:
            assert v[0] >= 0 and v[1] >= 0 and v[0] + v[1] <= 7


def test_budget_is_all_or_nothing():
    with pytest.raises(combos.EnumerationBudgetExceeded):
        combos.special_bijections(D7, 17, budget=50)


def test_combo_correspondence_roundtrip():
    # bijection -> combo -> bijection is the identity
    d = 7
    p = 17
    bs = combos.special_bijections(D7, p)
    pprime = pow(p, -1, d)
    _, t12, _, _ = lattice.split_T1(D7, p)
    rng = random.Random(1)
    for b in rng.sample(bs, 40) + [next(b for b in bs
                                        if b.as_dict() == EXAMPLE_BETA)]:
        data = combos.combo_from_bijection(D7, p, b)
        tau_inv = {img: src for src, img in data.tau}
        # beta(P) = tau^{-1}((p' P)%) recovers the bijection
        for pt, target in b.as_dict().items():
            pre = ((pprime * pt[0]) % d, (pprime * pt[1]) % d)
            assert pre in t12
            assert tau_inv[pre] == target


def test_combo_degree_and_signs():
    p = 17
    t1 = lattice.enumerate_T(D7, 1)
    h1 = hodge.minimal_h(D7, p, t1)
    bs = combos.special_bijections(D7, p)
    rng = random.Random(2)
    exp1, exp2 = combos.expected_vertex_exponents(D7, p)
    for b in rng.sample(bs, 60):
        data = combos.combo_from_bijection(D7, p, b)
        assert data.total_degree == h1          # special => optimal
        assert data.tau_sign == b.sign
        assert data.exponents[0] == exp1 and data.exponents[1] == exp2


def test_v_special_ordinary_single_term():
    d5 = isosceles(5)
    vs = combos.v_special(d5, 11)
    assert len(vs) == 1
    (exps, coeff), = vs.items()
    exp1, exp2 = combos.expected_vertex_exponents(d5, 11)
    assert exps[0] == exp1 and exps[1] == exp2
    assert sum(exps[2:]) == 0
    # coefficient is +-1/prod(b!) with p-unit denominator
    assert abs(coeff.numerator) == 1 and coeff.denominator % 11 != 0
    # explicit value: product over T1 of (2x)!(2y)! since p = 1 + 2d
    denom = 1
    for q in lattice.enumerate_T(d5, 1):
        denom *= math.factorial(2 * q[0]) * math.factorial(2 * q[1])
    assert abs(coeff) == Fraction(1, denom)


def test_v_special_denominators_p_units_7_17():
    vs = combos.v_special(D7, 17)
    assert all(v.denominator % 17 != 0 for v in vs.values())
    assert len(vs) > 1


def test_relatedness_classes_mirror_invariant():
    bs = combos.special_bijections(D7, 17)
    classes = combos.relatedness_classes(bs)
    assert sum(len(c) for c in classes) == len(bs)
    # conjugating by the coordinate swap permutes classes; sizes invariant
    sizes = sorted(len(c) for c in classes)
    swapped = {}
    for b in bs:
        key = tuple(sorted((v[1], v[0]) for v in b.vectors))
        swapped[key] = swapped.get(key, 0) + 1
    assert sorted(swapped.values()) == sizes


@pytest.mark.parametrize("d,p", [(7, 17), (13, 41), (41, 11)])
def test_c0_distribution_formula(d, p):
    rep = combos.c0_distribution_counts(isosceles(d), p)
    assert all(row["match"] for row in rep["rows"])
    if rep["gamma_in_hypothesis"]:
        assert rep["gamma_bijection"]


def test_c0_distribution_values_7_17():
    rep = combos.c0_distribution_counts(D7, 17)
    got = {row["k"]: row["enumerated"] for row in rep["rows"]}
    assert got == {1: 0, 2: 1, 3: 2}


def test_c0_distribution_out_of_regime_11_41():
    # d=11, p=41 has p0*d0 = 24 > d: the cell trace undercounts and the
    # closed form genuinely fails; kept as a regression witness
    rep = combos.c0_distribution_counts(isosceles(11), 41)
    assert not all(row["match"] for row in rep["rows"])
    assert not rep["gamma_in_hypothesis"]


def test_k2_distribution():
    rep = combos.k2_distribution_counts(D13, 41)
    assert rep["hypothesis"]
    assert [(r["i"], r["enumerated"]) for r in rep["rows"]] == [(1, 1)]
    assert all(r["match"] for r in rep["rows"])

    rep7 = combos.k2_distribution_counts(D7, 17)
    assert not rep7["hypothesis"]
    for row in rep7["rows"]:
        assert not row["in_hypothesis"]

    assert combos.k2_distribution_counts(isosceles(5), 11)["rows"] == []


def test_generic_coincidence_witness():
    d3 = isosceles(3)
    rep = combos.generic_coincidence_test(d3, 7, trials=12, seed=0)
    assert rep["conclusion"] == "nonzero mod p"
    assert rep["witness"] is not None
    assert rep["h_T1"] == 16


def test_generic_coincidence_inconclusive_semantics():
    # a single trial may miss; the report never claims "proved zero"
    d3 = isosceles(3)
    rep = combos.generic_coincidence_test(d3, 7, trials=0, seed=0)
    assert rep["conclusion"] == "inconclusive"


def test_optimal_combos_value_matches_det_T1():
    d3 = isosceles(3)
    f = {(3, 0): 1, (0, 3): 2, (1, 1): 3}
    for M in (1, 2):
        val = combos.optimal_combos_value(d3, 7, f, M)
        det = dwork.det_T1(d3, f, 7, M, 18)
        assert val == int(det[16]) % 7 ** M


def test_optimal_combos_value_second_f():
    d3 = isosceles(3)
    f = {(3, 0): 2, (0, 3): 5, (2, 1): 1, (0, 1): 4}
    val = combos.optimal_combos_value(d3, 7, f, 1)
    det = dwork.det_T1(d3, f, 7, 1, 18)
    assert val == int(det[16]) % 7
