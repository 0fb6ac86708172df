import json
import os

import numpy as np
import pytest
from mpmath import mp

from wkgs.identity_lab import (
    CHECK_IDS,
    CHECKS,
    _deformation_cell_ext,
    check_potentials,
    check_weight_lemma,
    run_all_checks,
    sample_cone_points,
)
from wkgs._reduce import fixed_chunks, pairwise_sum, thread_count


def test_sampler_stays_in_the_cone():
    t, r = sample_cone_points(4000, seed=11)
    assert np.all(t > 1.0)
    assert np.all(r >= 0.0)
    assert np.all(r < t - 1.0)
    s = np.sqrt((t - r) * (t + r))
    assert s.min() >= 1.1 - 1e-9
    assert s.max() <= 1e3 + 1e-6


def test_sampler_dyadic_points_are_exact_grid_points():
    t, r = sample_cone_points(500, seed=12, dyadic=True)
    q = 2.0 ** 20
    assert np.all(t * q == np.round(t * q))
    assert np.all(r * q == np.round(r * q))
    assert np.all(r >= 16 / q)
    assert np.all(r < t - 1.0)


def test_run_all_checks_small_budget_passes():
    reports = run_all_checks(samples=600, seed=7)
    assert [rep.identity_id for rep in reports] == list(CHECK_IDS)
    for rep in reports:
        assert rep.verdict == "pass", rep.to_json_line()
        assert rep.samples == 600
        assert rep.max_rel_residual <= rep.tolerance


def test_zero_samples_is_a_vacuous_pass():
    for rep in run_all_checks(samples=0, seed=7):
        assert rep.samples == 0
        assert rep.max_abs_residual == 0.0
        assert rep.max_rel_residual == 0.0
        assert rep.verdict == "pass"


def test_report_json_line_shape():
    rep = check_weight_lemma(samples=50, seed=3)
    rec = json.loads(rep.to_json_line())
    assert set(rec) == {
        "identity_id",
        "samples",
        "max_abs_residual",
        "max_rel_residual",
        "tolerance",
        "verdict",
        "seed",
    }
    assert rec["identity_id"] == CHECK_IDS[4]
    assert rec["seed"] == 3


def test_residuals_are_seed_deterministic():
    for cid, fn in CHECKS.items():
        a = fn(samples=300, seed=21)
        b = fn(samples=300, seed=21)
        assert a == b, cid


def test_residuals_do_not_depend_on_thread_count(monkeypatch):
    baseline = {}
    for threads in ("1", "3", "8"):
        monkeypatch.setenv("WKGS_THREADS", threads)
        assert thread_count() == int(threads)
        for cid, fn in CHECKS.items():
            rep = fn(samples=400, seed=5)
            if threads == "1":
                baseline[cid] = rep
            else:
                assert rep == baseline[cid], (cid, threads)


def test_tightening_tolerance_flips_the_verdict():
    rep = CHECKS[CHECK_IDS[0]](samples=200, seed=9, tol=1e-18)
    assert rep.verdict == "fail"
    assert rep.max_rel_residual > 1e-18
    # same residuals, just re-judged
    loose = CHECKS[CHECK_IDS[0]](samples=200, seed=9, tol=1e-10)
    assert loose.max_rel_residual == rep.max_rel_residual
    assert loose.verdict == "pass"


def test_extended_precision_potential_and_lemma():
    rep = check_potentials(samples=30, seed=13, precision="extended")
    assert rep.verdict == "pass"
    assert rep.max_rel_residual <= 1e-25
    rep2 = check_weight_lemma(samples=30, seed=13, precision="extended")
    assert rep2.verdict == "pass"


def test_polynomial_families_are_exact_in_extended_mode():
    # dyadic points + power-of-two step: T and Kconf go through the FD
    # stencil with no rounding at all, so the residual is bit zero
    t, r = sample_cone_points(5, seed=31, dyadic=True)
    with mp.workdps(40):
        for kind, a in (("T", 0.5), ("Kconf", 0.25), ("Kconf", 1.0)):
            wa, wr = _deformation_cell_ext(kind, a, t, r)
            assert (wa, wr) == (0.0, 0.0), (kind, a)
        for kind, a in (("Ka", 0.75), ("Ya", 0.25)):
            wa, wr = _deformation_cell_ext(kind, a, t, r)
            assert 0 < wr <= 1e-30, (kind, a)


def test_fixed_chunks_cover_range_exactly():
    for n in (0, 1, 5, 63, 64, 65, 1000):
        chunks = fixed_chunks(n)
        assert sum(b - a for a, b in chunks) == n
        flat = [k for a, b in chunks for k in range(a, b)]
        assert flat == list(range(n))
        assert len(chunks) <= 64


def test_pairwise_sum_fixed_association():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1001) * 10.0 ** rng.integers(-8, 8, 1001)
    a = pairwise_sum(x)
    b = pairwise_sum(x[::-1].copy()[::-1])  # same order, fresh buffer
    assert a == b
    assert abs(a - float(np.sum(x.astype(np.longdouble)))) <= 1e-9 * np.abs(x).sum()
    assert pairwise_sum(np.array([])) == 0.0
