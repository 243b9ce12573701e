"""Smoke test for the codipas_py extension.

Build and install it first, e.g. `maturin develop --release -m crates/py/Cargo.toml`
or `pip install crates/py`, then run `python python/smoke_test.py`.
"""

import math
import os
import sys

import codipas_py as cp

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIGS = os.path.join(HERE, "..", "configs")


def close(a, b, tol):
    return len(a) == len(b) and all(abs(x - y) < tol for x, y in zip(a, b))


def main():
    game = cp.Game([[5.0, 2.0], [1.0, 3.0]])
    assert game.shape == (2, 2)

    s = game.saddle()
    assert close(s.f_star, [0.4, 0.6], 1e-9), s.f_star
    assert close(s.g_star, [0.2, 0.8], 1e-9), s.g_star
    assert abs(s.value - 2.6) < 1e-9
    assert abs(game.exploitability([1 / 3, 2 / 3], [1 / 3, 2 / 3]) - 2 / 3) < 1e-12

    le = game.logit(0.05)
    assert le.converged and le.residual < 1e-9
    assert close(le.f, cp.softmax(game.payoff_vector(1, le.g), 0.05), 1e-8)

    # one CRL1 step from uniform: importance weight mu / f(a) = 0.5
    f, u = cp.learner_step("CRL1", [0.5, 0.5], [0.0, 0.0], 0, 4.0, lam=0.1, mu=0.25, epsilon=1.0)
    assert close(u, [2.0, 0.0], 1e-12), u
    # the strategy mixes toward the logit of the pre-step estimates
    assert close(f, [0.5, 0.5], 1e-12), f
    f, u = cp.learner_step("CRL1", f, u, 1, 1.0, lam=0.1, mu=0.25, epsilon=1.0)
    assert abs(sum(f) - 1.0) < 1e-12 and f[0] > 0.5, f

    try:
        cp.Game([[1.0, 2.0], [3.0]])
    except ValueError:
        pass
    else:
        raise AssertionError("ragged matrix accepted")

    exp = cp.Experiment.from_file(os.path.join(CONFIGS, "crl1_selfplay.cfg"), horizon=200, seeds=[1, 2])
    runs = exp.run(jobs=2)
    assert [r.seed for r in runs] == [1, 2]
    assert runs[0].t[-1] == 200 and len(runs[0]) == 21
    for r in runs:
        for f0, f1 in zip(r.column("f_0"), r.column("f_1")):
            assert abs(f0 + f1 - 1.0) < 1e-9
    again = exp.run(jobs=1)
    # NaN payoffs on the first row: compare reprs
    assert all(repr(a.rows) == repr(b.rows) for a, b in zip(runs, again))
    assert math.isnan(runs[0].column("payoff1")[0])

    traj = cp.integrate(game, "coupled_thm1", epsilon=0.05, t_end=200.0, stride=1000)
    assert traj.column("exploitability")[-1] < 0.1
    assert "composite_T2" in cp.SYSTEMS
    try:
        cp.integrate(game, "composite_T2", t0=0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("composite_T2 accepted t0 = 0")

    print("codipas_py smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
