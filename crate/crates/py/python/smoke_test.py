"""Smoke test for the rqs extension module. Run after `maturin develop`."""

import json
import math

import rqs


def main():
    tree = rqs.Graph.regular_tree(3)
    assert tree.node_count() is None
    assert len(tree.neighbors(0)) == 3

    snap = rqs.Snapshot.simulate(tree, 0, 200, seed=7)
    assert len(snap) == 200 and snap.source == 0
    center, scores = rqs.likelihood_scores(snap)
    assert center in snap.infected and len(scores) == 200

    replay = rqs.Snapshot.from_json(snap.to_json())
    assert replay.infected == snap.infected
    assert json.loads(snap.to_json())["source"] == 0

    perfect = rqs.run_mvna(snap, k=400, r=2, p=1.0, q=1.0, seed=1)
    assert perfect["estimate"] == snap.source
    walk = rqs.run_mvad(snap, k=60, r=3, p=0.8, q=0.8, seed=2)
    assert walk["budget_used"] <= 60 and walk["estimate"] in snap.infected

    assert rqs.brute_force_rumor_centrality(4, [(0, 1), (1, 2), (1, 3)], 1) == 6
    assert rqs.choose_r_star("na", "sufficient", 200, 3, 2 / 3, 2 / 3) == 3
    assert rqs.choose_r_star("ad", "sufficient", 200, 3, 2 / 3, 2 / 3) == 4
    k = rqs.budget_threshold("na", "sufficient", 0.02, 3, 0.75, 0.6)
    assert abs(k - 1.24e4) / 1.24e4 < 0.01
    assert math.isinf(rqs.budget_threshold("ad", "sufficient", 0.02, 3, 0.5, 1 / 3))
    assert rqs.rate_functions(3, 0.5, 1 / 3)[1] == 0.0
    assert abs(sum(rqs.distance_distribution(3, 6, l) for l in range(1, 6)) - 1) < 1e-12
    lo, hi = rqs.wilson_interval(50, 100)
    assert abs(lo - 0.404) < 0.002 and abs(hi - 0.596) < 0.002

    er = rqs.Graph.erdos_renyi(500, 4.0, seed=3)
    assert er.node_count() <= 500
    rows = rqs.run_experiment(
        "regular:3", "ad", budgets=[50, 100], p=[0.8], q=[0.8], r="rstar", n=200, trials=40, seed=9
    )
    assert [row["K"] for row in rows] == [50, 100]
    for row in rows:
        assert row["error"] is None
        assert row["ci_lo"] <= row["p_hat"] <= row["ci_hi"]

    try:
        rqs.Graph.regular_tree(2)
    except ValueError:
        pass
    else:
        raise AssertionError("d=2 should be rejected")

    print("rqs smoke test passed:", rows[-1]["p_hat"])


if __name__ == "__main__":
    main()
