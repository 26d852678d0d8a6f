from __future__ import annotations

import numpy as np
import pytest

from ybx import special_fn as sf
from ybx.errors import SamplingExhausted, SingularArgument, UnknownCheck
from ybx.identity_suite import (
    IN_SCOPE_EQS,
    SAMPLE_DELTA,
    SamplePlan,
    SamplePoint,
    _stream_seed,
    bb_convention,
    catalog,
    convention_note,
    cubic_acf_sides,
    get_check,
    gnf_sides,
    nord_adjacent_count,
    nord_lhs,
    nord_sequences,
    ratdef_lhs,
    run_check,
    run_suite,
    sample_points,
    sdybe_acf_sides,
    tcubic_sides,
    twist_rel_2_sides,
)
from ybx.rmatrices import DynVector, acf, bb
from ybx.special_fn import CaseKind
from ybx.tensor_alg import embed, residual_norm

ELL = sf.elliptic(1j)


def points(check_id, N, case, count=5, seed=11):
    return sample_points(SamplePlan(seed=seed, count=count), get_check(check_id), N, case)


def test_catalog_size_and_unique_ids():
    ids = [c.id for c in catalog()]
    assert len(ids) >= 30
    assert len(set(ids)) == len(ids)


def test_catalog_equations_are_in_scope():
    assert all(c.paper_eq in IN_SCOPE_EQS for c in catalog())


def test_every_family_of_checks_is_present():
    ids = {c.id for c in catalog()}
    for must in ("QYBE-BB", "GNF-F", "IRFV", "SDYBE-ACF", "TWIST-REL-1", "TWIST-REL-2", "AYBE-BB",
                 "AYBE-BH", "UNITDEF-BH", "CUBIC-BB", "CUBSUM-BB", "FAY", "AYBE-ACF", "CUBIC-ACF",
                 "GAUGE-ACF", "TWIST-G", "NORD-BB", "NORD-ACF", "SCAL-ACF", "HASEGAWA",
                 "SKEW-ACF", "CUBSUM-ACF", "RES-ACF", "DETG", "MATTHETA", "IRFV-REWRITE",
                 "TCUBIC-F", "RATDEF-F", "SCALRATIO", "FAYDEG-1", "FAYDEG-2"):
        assert must in ids


def test_unknown_check():
    with pytest.raises(UnknownCheck, match="unknown check id"):
        get_check("NOSUCH")
    with pytest.raises(UnknownCheck):
        run_suite(SamplePlan(count=1), ["NOSUCH"])


def test_plan_validation():
    with pytest.raises(ValueError):
        SamplePlan(count=0)
    with pytest.raises(ValueError):
        SamplePlan(taus=(0.01j,))


def test_sampling_is_deterministic():
    a = points("UNIT-BB", 2, ELL)
    b = points("UNIT-BB", 2, ELL)
    c = points("UNIT-BB", 2, ELL, seed=12)
    assert a == b
    assert a != c


def test_stream_seed_is_stable():
    # pinned so that reports stay reproducible across releases
    assert _stream_seed(7, "FAY", 1, "rational") == [7, 308021629]


def test_accepted_points_pass_the_sampling_guard_again():
    check = get_check("GAUGE-ACF")
    for p in points("GAUGE-ACF", 2, ELL, count=8):
        with sf.sampling_guard(SAMPLE_DELTA):
            check.evaluator(p)


def test_unit_bb_rejection_rate_is_small():
    draws = []
    check = get_check("UNIT-BB")
    orig = check.evaluator

    def counting(p):
        draws.append(p)
        return orig(p)

    counted = type(check)(**{**check.__dict__, "evaluator": counting})
    pts = sample_points(SamplePlan(seed=3, count=100), counted, 2, ELL)
    assert len(pts) == 100
    assert len(draws) < 200


def test_sampling_exhausted():
    check = get_check("FAY")

    def always_singular(p):
        raise SingularArgument("forced")

    bad = type(check)(**{**check.__dict__, "evaluator": always_singular})
    with pytest.raises(SamplingExhausted):
        sample_points(SamplePlan(count=1, max_rejects=5), bad, 1, sf.RATIONAL)


def test_run_check_records_singular_points_instead_of_raising():
    check = get_check("FAYDEG-2")
    good = points("FAYDEG-2", 1, sf.RATIONAL, count=3)
    bad = SamplePoint(1, sf.RATIONAL, (0j,) * 10, 0.2, 0.1, DynVector([0.1]))
    rep = run_check(check, [*good, bad], tol=1e-10)
    assert rep.samples == 4
    assert len(rep.failures) == 1 and "point 3" in rep.failures[0]
    assert not rep.passed


def test_fay_at_100_elliptic_points():
    check = get_check("FAY")
    rep = run_check(check, points("FAY", 1, ELL, count=100), tol=1e-10)
    assert rep.passed, rep.max_residual


def test_aybe_acf_rational_n2():
    rep = run_check(get_check("AYBE-ACF"), points("AYBE-ACF", 2, sf.RATIONAL, count=10))
    assert rep.passed, rep.max_residual


def test_unit_bb_scalar_is_exact():
    reps = run_suite(SamplePlan(seed=1, count=20, Ns=(1,)), ["UNIT-BB"], threads=1)
    assert all(r.max_residual < 1e-13 for r in reps)


def test_nord_index_sets():
    assert nord_sequences(3) == [(1, 2, 3, 1), (1, 3, 2, 1)]
    assert len(nord_sequences(4)) == 6 and len(nord_sequences(5)) == 24
    assert all(sorted(s[1:-1]) == [2, 3, 4] for s in nord_sequences(4))
    assert nord_adjacent_count(4) == 12


@pytest.mark.parametrize("family", ["BB", "ACF"])
def test_nord_n3_is_the_cubic_sum(family):
    p = points("CUBSUM-" + family, 2, ELL, count=1)[0]
    z = dict(enumerate(p.zs[:3], 1))

    def two_leg(x, y):
        if family == "BB":
            return bb(p.N, p.hbar, z[x] - z[y], p.m)
        return acf(p.case, p.N, p.hbar, z[x], z[y], p.u)

    def r(x, y):
        return embed(two_leg(x, y), [x, y], 3)

    cubsum = r(1, 2) @ r(2, 3) @ r(3, 1) + r(1, 3) @ r(3, 2) @ r(2, 1)
    assert np.abs(nord_lhs(two_leg, 3).matrix - cubsum.matrix).max() < 1e-12 * np.abs(cubsum.matrix).max()


@pytest.mark.parametrize("case", [sf.RATIONAL, sf.TRIGONOMETRIC, ELL], ids=["rat", "trig", "ell"])
def test_cubic_acf_at_equal_planck_constants_is_sdybe(case):
    for p in points("SDYBE-ACF", 2, case, count=3):
        cl, cr = cubic_acf_sides(p, p.hbar, p.hbar)
        sl, sr = sdybe_acf_sides(p)
        assert np.abs(cr.matrix).max() == 0
        assert residual_norm(cl, sl - sr) < 1e-12


def test_tcubic_at_equal_planck_constants_reduces_to_gnf():
    for N in (2, 3):
        for p in points("GNF-F", N, ELL, count=2):
            lhs, _ = tcubic_sides(p, p.hbar, p.hbar)
            gl, gr = gnf_sides(p)
            assert np.abs(lhs.matrix).max() < 1e-9 * (1 + np.abs(gl.matrix).max())
            assert residual_norm(gl, gr) < 1e-9


def test_ratdef_depends_only_on_u():
    for p in points("RATDEF-F", 3, sf.RATIONAL, count=3):
        z = p.zs
        a = ratdef_lhs(p, p.hbar, p.eta, z[0], z[1], z[2])
        b = ratdef_lhs(p, z[6], z[7], z[3], z[4], z[5])
        assert residual_norm(a, b) < 1e-12


def test_twist_rel_2_literal_placement_fails_even_for_scalars():
    p = points("TWIST-REL-2", 1, ELL, count=1)[0]
    assert residual_norm(*twist_rel_2_sides(p, literal=True)) > 1e-3
    assert residual_norm(*twist_rel_2_sides(p)) < 1e-12


def test_convention_note_names_the_printed_normalization():
    res = bb_convention()
    assert res["printed"] < 1e-12
    assert min(res["hbar/N"], res["N*R"]) > 1e-3
    note = convention_note()
    assert "printed" in note and "permutations" in note


def test_suite_grid_respects_plan():
    plan = SamplePlan(seed=2, count=2, Ns=(2,), kinds=(CaseKind.RATIONAL,))
    reps = run_suite(plan, ["UNIT-ACF", "UNIT-BB", "FAY"], threads=1)
    # BB is elliptic-only and FAY is scalar: only UNIT-ACF qualifies
    assert [(r.id, r.N, r.case) for r in reps] == [("UNIT-ACF", 2, "rational")]


def test_suite_is_independent_of_thread_count():
    plan = SamplePlan(seed=5, count=3, Ns=(1, 2))
    ids = ["UNIT-ACF", "SKEW-BB", "FAY", "GNF-F"]
    one = [r.as_dict() for r in run_suite(plan, ids, threads=1)]
    four = [r.as_dict() for r in run_suite(plan, ids, threads=4)]
    assert one == four


def test_report_pass_flag_matches_tolerance():
    rep = run_check(get_check("FAYDEG-2"), points("FAYDEG-2", 1, sf.RATIONAL, count=3), tol=1e-10)
    assert rep.passed == (rep.max_residual < rep.tol)
    d = rep.as_dict()
    assert d["pass"] is rep.passed and d["tau"] is None
