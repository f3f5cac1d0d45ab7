"""Smoke test for the tpplab_py extension.

Install first with `pip install --no-build-isolation crates/python`, or build
with `cargo build --release -p tpplab-python`; in the latter case this script
loads target/release/libtpplab_py.so directly.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys


def load():
    try:
        import tpplab_py

        return tpplab_py
    except ImportError:
        root = pathlib.Path(__file__).resolve().parents[1]
        lib = root / "target" / "release" / "libtpplab_py.so"
        loader = importlib.machinery.ExtensionFileLoader("tpplab_py", str(lib))
        spec = importlib.util.spec_from_file_location("tpplab_py", lib, loader=loader)
        mod = importlib.util.module_from_spec(spec)
        loader.exec_module(mod)
        return mod


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    tp = load()
    assert set(tp.FAMILIES) == {"HPP", "NHPP_PL", "HAWKES_EXP", "HAWKES_2EXP", "HAWKES_PL"}

    hpp = tp.ParamSet("HPP", {"mu": 0.5})
    onsets, T = [1.0, 2.5, 7.0], 10.0
    assert close(hpp.log_likelihood(onsets, T), 3 * math.log(0.5) - 5.0)
    assert close(hpp.cumulative_intensity(onsets, T, 4.0), 2.0)

    hk = tp.ParamSet("hawkes_exp", {"mu": 0.1, "alpha": 0.5, "beta": 1.0})
    jump = hk.intensity(onsets, T, 2.5 + 1e-12) - hk.intensity(onsets, T, 2.5)
    assert hk.intensity(onsets, T, 1.0) == 0.1
    assert close(jump, 0.5, 1e-9), jump
    bf, regime = hk.branching_factor()
    assert close(bf, 0.5) and regime == "subcritical", (bf, regime)
    assert len(hk.grad_log_likelihood(onsets, T)) == 3

    try:
        tp.ParamSet("HPP", {"mu": -1.0})
    except ValueError:
        pass
    else:
        raise AssertionError("negative rate accepted")

    sims = tp.simulate(hk, [100.0] * 30, seed=3)
    assert sims == tp.simulate(hk, [100.0] * 30, seed=3)
    gaps = [g for s in sims for g in tp.rtc_gaps(hk, s, 100.0)]
    stat, p = tp.ks_exp1(gaps)
    assert p > 0.001, (stat, p)

    try:
        tp.simulate(tp.ParamSet("HAWKES_EXP", {"mu": 1.0, "alpha": 1.5, "beta": 1.0}), [1000.0], 1, max_events=500)
    except RuntimeError as e:
        assert "branching factor" in str(e)
    else:
        raise AssertionError("explosive simulation did not raise")

    sessions = [(s, 100.0) for s in sims]
    post = tp.fit(sessions, "HPP", warmup=500, draws=500, seed=1)
    n = sum(len(s) for s in sims)
    d = post["diagnostics"][0]
    assert abs(d["mean"] - (1 + n) / (1 + 3000.0)) < 4 * d["mcse_mean"], d
    assert len(post["draws"]) == 4 and len(post["draws"][0]) == 500

    mu_draws = [row[0] for chain in post["draws"] for row in chain][:400]
    ll = [[len(s) * math.log(m) - m * T_ for s, T_ in sessions] for m in mu_draws]
    loo = tp.psis_loo(ll)
    assert len(loo["pointwise"]) == len(sessions) and loo["se"] > 0

    assert tp.wasserstein([0.0, 1.0], [1.0, 2.0]) == 1.0
    assert tp.roc_auc([True, False, True, False], [0.9, 0.1, 0.8, 0.3]) == 1.0
    k = tp.ripley_k(sims[0], 100.0, [1.0, 5.0, 10.0])
    assert k == sorted(k)
    assert isinstance(tp.raw_residual(hk, sims[0], 100.0), float)

    fc = tp.forecast([hk], sims[0], 100.0, 40.0, 10.0, n_traj=100, seed=2)
    assert len(fc["counts"]) == 100 and fc["quantiles"] == sorted(fc["quantiles"])

    print(f"tpplab_py {tp.__version__}: smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
