import json
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from circlediffeo import certify as K
from circlediffeo import circle_maps as cm
from circlediffeo import construction as C
from circlediffeo.circle_maps import MoebiusHat, Rotation
from circlediffeo.errors import BudgetExceededError, MalformedCertificateError
from circlediffeo.measure import certificate_family, family_mass, pushforward_lebesgue
from circlediffeo.number_theory import liouville_series


@pytest.fixture(scope="module")
def toy():
    return C.build(liouville_series(2), 1, 3, mode=C.RELAXED, q_overrides=[4, 64, 4096])


@pytest.fixture(scope="module")
def cert1(toy):
    return K.build_certificate(toy, 1)


def test_stage_one_certificate_flags(cert1):
    assert (cert1.q_n, cert1.p_n, cert1.l_n, cert1.m_n) == (4, 3, 1, 3)
    assert all(cert1.flags[k] == K.PASS for k in ("a", "b", "c", "q_gt_n", "d", "e", "counts"))
    assert cert1.info["l_range"] == [1, 1] and cert1.info["m_range"] == [3, 3]


def test_certificate_points_are_conjugated_arcs(toy, cert1):
    # with n = 1, H_0 is the identity: c_i = i/q - q^-3 and d_i = i/q + q^-3
    for i in range(4):
        assert float(cert1.c[i]) == pytest.approx((i / 4 - 4.0 ** -3) % 1, abs=1e-15)
        assert float(cert1.d[i] - cert1.c[i]) == pytest.approx(2 * 4.0 ** -3, abs=1e-15)


def test_brute_force_check_agrees(toy, cert1):
    checked = K.check_certificate(K.certified_map(toy, 1), cert1)
    for k in ("a", "b", "c", "d", "e"):
        assert checked.flags[k] == cert1.flags[k]
    assert checked.provenance == "checked"


def test_check_budget(toy, cert1):
    with pytest.raises(BudgetExceededError):
        K.check_certificate(K.certified_map(toy, 1), cert1, k_budget=10)


def test_swapped_endpoints_fail_order(cert1):
    bad = K.supplied_certificate(1, 4, 1, cert1.d, cert1.c)
    checked = K.check_certificate(Rotation(Fraction(3, 4)), bad)
    assert checked.flags["a"] == K.FAIL


def test_stage_two_and_three_flags(toy):
    c2 = K.build_certificate(toy, 2)
    assert c2.flags["d"] == K.PASS and c2.flags["e"] == K.MARGINAL
    c3 = K.build_certificate(toy, 3)
    assert c3.flags["b"] == K.FAIL and c3.flags["d"] == K.FAIL


def test_strict_stage_one_certificate():
    s = C.stage_one(liouville_series(10), 1)
    c = K.build_certificate(s, 1)
    assert c.q_n == 10 and c.flags["a"] == K.PASS and c.flags["b"] == K.PASS


def test_json_round_trip(cert1):
    d = json.loads(json.dumps(cert1.to_json()))
    back = K.BnCertificate.from_json(d)
    assert (back.n, back.q_n, back.l_n, back.m_n) == (1, 4, 1, 3)
    assert all(abs(a - b) < mpmath.mpf(10) ** -35 for a, b in zip(back.c, cert1.c))
    d["c"] = d["c"][:2]
    with pytest.raises(MalformedCertificateError):
        K.BnCertificate.from_json(d)
    with pytest.raises(MalformedCertificateError):
        K.BnCertificate.from_json({"n": 1})


def test_conjugation_probe_preserves_flags(toy, cert1):
    res = K.conjugation_invariance_probe(MoebiusHat(a=0.55), K.certified_map(toy, 1), cert1)
    assert res.preserved == {"a": True, "d": True, "e": True}


def test_geometry_report(toy, cert1):
    rep = K.geometry_report(toy, 1, cert1)
    names = [r["name"] for r in rep.records]
    assert names == ["h_inverse_gap", "c_preimage_shift", "d_preimage_shift", "preimage_gap", "preimage_length", "length_ratio", "gap_ratio", "derivative_vs_q"]
    by = {r["name"]: r["pass"] for r in rep.records}
    assert by["c_preimage_shift"] and by["d_preimage_shift"] and by["derivative_vs_q"]
    assert json.loads(json.dumps(rep.to_json()))["all_pass"] == rep.all_pass


def test_family_mass_at_stage_one(toy, cert1):
    mu = pushforward_lebesgue(toy.H(1), 2 ** 12)
    assert family_mass(mu, certificate_family(cert1)) >= 1 - 2 ** -1 - 0.02


def test_covering_lift_ratio_is_one():
    # the q-fold lift scales the r-th derivative by exactly q^(r-1); the sup is
    # sampled on a grid, which can land off the lifted map's extremum
    ratios = K.lemma_ratios(3, 100, seed=4)["covering_lift"]
    for r, vals in ratios.items():
        assert np.all(vals <= 1 + 1e-9) and np.all(vals > 0.95)


def test_lemma_oracles_small_sample():
    rep = K.lemma_oracles(C.LemmaConstants.builtin(), r_max=3, samples=100, seed=9)
    assert rep["violations"] == 0
    assert set(rep["lemmas"]) == {"composition", "conjugated_rotations", "covering_lift", "moebius_radius"}
    tiny = C.LemmaConstants({0: 1e-3}, {0: 1e-3}, {0: 1e-3})
    assert K.lemma_oracles(tiny, r_max=2, samples=100, seed=9)["violations"] > 0
    with pytest.raises(ValueError):
        K.lemma_oracles(tiny, samples=10)


def test_transport_moves_points(cert1):
    h = MoebiusHat(a=0.7)
    moved = K.transport(h, cert1)
    assert float(moved.c[1]) == pytest.approx(float(cm.evaluate(h, float(cert1.c[1]))), abs=1e-14)
