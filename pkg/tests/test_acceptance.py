"""The nine acceptance criteria, checked against a full ``opcalc all`` run.

The run uses the default configuration in a subprocess with one worker;
criterion 9 repeats it with four workers and compares the CSVs byte for
byte.  Each criterion re-derives pass/fail from the recorded values and
the thresholds fixed here, not from the runner's own verdicts, and prints
one PASS/FAIL line (also shown in the terminal summary).
"""
import json
import os
import subprocess
import sys

import pytest

# criterion -> (suite, {check: (relation, threshold)}, runtime budget in s, timed part of the suite)
CRITERIA = {
    1: ("fc-matrix", {"smooth_calc_error_at_n64": ("<=", 1e-3),
                      "smooth_calc_ratio_per_doubling": ("<=", 0.6)}, 120, "smooth"),
    2: ("fc-matrix", {"holo_calc_relative_error": ("<=", 1e-2)}, 60, "holomorphic"),
    3: ("leibniz", {"closure_max_residual": ("<=", 1e-10),
                    "order_bookkeeping_mismatches": ("==", 0)}, 30, "closure"),
    4: ("leibniz", {"power_fit_order_excess": ("<=", 0.3), "exponential_bound_drift": ("<=", 0.2),
                    "beta_identity": ("<=", 1e-12)}, 60, "quantitative"),
    5: ("heisenberg", {"dz_rule_refinement_factor_N12": ("in", (3.4, 4.6)),
                       "dz_rule_refinement_factor_N16": ("in", (3.4, 4.6)),
                       "wrong_rule_gap_at_finest": (">=", 10.0)}, 300, None),
    6: ("tg-build-corpus", {"law_associativity": ("<=", 1e-10), "law_double_adjoint": ("<=", 1e-10),
                            "law_adjoint_antihom": ("<=", 1e-10), "law_module_left": ("<=", 1e-10),
                            "law_module_right": ("<=", 1e-10), "hat_leibniz_slices": ("<=", 1e-8),
                            "hat_leibniz_full": ("<=", 5e-3), "frame_trace": ("<=", 1e-15)}, 180, None),
    7: ("tg-sobolev", {"sobolev_C_drift": ("<=", 0.25), "sobolev_bound_violations": ("==", 0),
                       "dirac_mode_sum_closed_form": ("<=", 1e-10), "dirac_lemma_C2": ("<=", 1.0)}, 120, None),
    8: ("tg-theorem-a", {"dual_method_residual": ("<=", 5e-3), "f(a)_seminorm_ratio": ("<=", 1.10),
                         "controls_rejected": ("==", 5)}, 600, None),
}


def _holds(value, relation, threshold):
    if relation == "<=":
        return value <= threshold
    if relation == ">=":
        return value >= threshold
    if relation == "in":
        return threshold[0] <= value <= threshold[1]
    return value == threshold


def _run_all(out, threads):
    env = dict(os.environ, OPCALC_THREADS=str(threads))
    p = subprocess.run([sys.executable, "-m", "opcalc", "all", "--out", str(out), "--no-plots"],
                       env=env, capture_output=True, text=True, timeout=3600)
    return p.returncode, p.stdout + p.stderr


@pytest.fixture(scope="module")
def base_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("accept") / "threads1"
    code, log = _run_all(out, 1)
    assert (out / "report.json").exists(), log
    rep = json.loads((out / "report.json").read_text())
    records = {(r["suite"], r["check"]): r for r in rep["records"]}
    timings = {(suite, None): t for suite, t in rep["timings_s"].items()}
    for suite, parts in rep["part_timings_s"].items():
        timings.update({(suite, part): t for part, t in parts.items()})
    return out, code, records, timings


def _line(log, k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    log.append(line)


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, base_run, acceptance_log):
    _, _, records, timings = base_run
    suite, checks, budget, part = CRITERIA[k]
    bad = []
    for name, (rel, thr) in checks.items():
        r = records.get((suite, name))
        if r is None:
            bad.append(f"{name} missing")
        elif not _holds(r["value"], rel, thr):
            bad.append(f"{name}={r['value']:.4g} (need {rel} {thr})")
    if k == 8:
        # every negative control must fail its seminorm threshold
        for (s, name), r in records.items():
            if s == suite and name.startswith("control[") and _holds(r["value"], "<=", 1.10):
                bad.append(f"{name} passed")
    t = timings[suite, part]
    where = suite if part is None else f"{suite}/{part}"
    if t >= budget:
        bad.append(f"runtime {where} {t:.0f}s >= {budget}s")
    _line(acceptance_log, k, not bad, "; ".join(bad) or f"{len(checks)} checks, {where} {t:.1f}s < {budget}s")
    assert not bad


def test_criterion_9_determinism(base_run, tmp_path, acceptance_log):
    out1, code1, _, _ = base_run
    out4 = tmp_path / "threads4"
    code4, log = _run_all(out4, 4)
    csv1 = sorted(p.name for p in out1.glob("*.csv"))
    csv4 = sorted(p.name for p in out4.glob("*.csv"))
    diff = [n for n in csv1 if n not in csv4 or (out1 / n).read_bytes() != (out4 / n).read_bytes()]
    ok = code1 == code4 == 0 and csv1 == csv4 and bool(csv1) and not diff
    _line(acceptance_log, 9, ok, f"{len(csv1)} CSVs, 1 vs 4 workers, differing: {diff or 'none'}")
    assert ok, log


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-rA", "-s"]))
