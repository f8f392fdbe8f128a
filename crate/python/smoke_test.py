"""Smoke test for the gsmtl_py extension.

Build and install first:

    pip install --no-build-isolation -e crates/python
    python3 python/smoke_test.py
"""

import math

import gsmtl_py as g


def close(a, b, tol):
    return all(abs(x - y) <= tol for x, y in zip(a, b))


def main():
    # closed forms of the prox
    singles = g.GroupStructure.singletons(3)
    assert g.prox_group_norm([3.0, -0.5, 1.0], singles, 1.0) == [2.0, 0.0, 0.0]
    whole = g.GroupStructure.all_tasks(2)
    assert close(g.prox_group_norm([3.0, 4.0], whole, 1.0), [2.4, 3.2], 1e-12)
    overlap = g.GroupStructure([[0, 1], [1, 2]], 3)
    assert overlap.is_overlapping()
    assert abs(g.group_norm([1.0, 1.0, 1.0], overlap) - math.sqrt(5.0)) < 1e-8
    p = g.project_intersection([2.0, 2.0, 2.0], overlap, 1.0)
    assert math.hypot(p[0], p[1]) <= 1.0 + 1e-9 and math.hypot(p[1], p[2]) <= 1.0 + 1e-9

    # noiseless planted model is fitted to near-zero training error
    data, groups, truth = g.gen_synthetic1(seed=0, label_noise=0.0)
    assert (data.n_tasks, data.dim) == (10, 20)
    model, report = g.fit(data, groups, 1e-6, 1e-6, 3, outer_max_iter=1000, outer_tol=1e-10)
    trace = report.objective_trace
    assert all(b <= a * (1 + 1e-9) for a, b in zip(trace, trace[1:]))
    rmse = g.evaluate(model.weights(), data)
    assert rmse < 1e-3, rmse
    assert len(model.S) == 3 and len(model.S[0]) == 10
    x, _ = data.task(0)
    assert abs(model.predict(0, x[0]) - sum(w[0] * v for w, v in zip(model.weights(), x[0]))) < 1e-9

    # two-group classification keeps its planted structure under strong penalties
    cls, cgroups, _ = g.gen_two_group_classification(n_per_task=30, seed=1)
    assert cls.kind == "classification"
    model, _ = g.fit(cls, cgroups, 10.0, 10.0, 2, acceleration="momentum", inner_tol=1e-6)
    within, across = g.support_similarity(model.S, cgroups)
    assert 0.0 <= across <= 1.0 and 0.0 <= within <= 1.0

    train, val, test = data.split(seed=0)
    mu, lam, k, err = g.grid_search("GS-MTL", train, val, test, [0.01, 0.1], [0.01], [3], groups=groups)
    assert k == 3 and mu in (0.01, 0.1) and math.isfinite(err)

    try:
        g.GroupStructure([[0, 5]], 3)
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range group accepted")

    print("gsmtl_py smoke test passed")


if __name__ == "__main__":
    main()
