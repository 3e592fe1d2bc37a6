"""Smoke test for the Python extension.

Build it first, e.g. `maturin develop -m crates/python/Cargo.toml`, then run
`python python/smoke_test.py` from the repository root.
"""

import os

import morphkit

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "..", "crates", "core", "fixtures")


def fixture(name):
    return os.path.join(FIXTURES, name)


def main():
    m = morphkit.Model.load(fixture("m0.json"))
    assert m.root == "X"
    assert m.components() == ["A", "B", "C"], m.components()

    best = m.synthesize()
    assert best == [{"selection": ["A1", "B1", "C1"], "w": 2, "counts": [3, 0, 0]}], best
    assert m.quality(["A1", "B1", "C1"]) == (2, [3, 0, 0])
    assert m.synthesize(min_w=3) == []

    again = morphkit.Model.from_json(m.to_json())
    assert again.to_json() == m.to_json()

    layers = m.rank()
    assert layers[0] == ["A1*B1*C1"], layers

    groups = morphkit.Model.load(fixture("groups.json"))
    ids, profit, cost = groups.mckp(3)
    assert (ids, profit, cost) == (["A1", "B2"], 5.0, 3), (ids, profit, cost)
    assert groups.mckp(0) is None

    chosen, spent, top = morphkit.Model.load(fixture("m0_actions.json")).improve(2)
    assert chosen == ["raise-a1-c1"] and spent == 1
    assert top["w"] == 3

    sels, stage_layers, total, changes = morphkit.Model.load(fixture("plan.json")).trajectory()
    assert sels[1] == ["A2", "B1", "C1"] and total == 3 and changes == 2

    nxt = morphkit.Model.load(fixture("history.json")).forecast()
    assert ("B2", 1) in nxt.alternatives("B")

    try:
        morphkit.Model.load(fixture("broken.json"))
    except morphkit.MorphkitError:
        pass
    else:
        raise AssertionError("broken model was accepted")

    edges, total_w = morphkit.minimum_spanning_tree(
        ["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 2.0), ("a", "c", 5.0)]
    )
    assert total_w == 3.0 and len(edges) == 2
    assert morphkit.cluster(["a", "b", "c"], [("a", "b", 1.0), ("b", "c", 4.0)], 2) == [["a", "b"], ["c"]]

    assert morphkit.rank_pareto_layers(
        ["p", "q", "r"], [("x", "max"), ("y", "min")], [[2, 1], [1, 2], [2, 2]]
    ) == [["p"], ["r"], ["q"]]
    assert morphkit.solve_mckp([[("a", 1, 1.0), ("b", 2, 3.0)], [("c", 1, 2.0)]], 3) == (["b", "c"], 5.0, 3)

    code, out = morphkit.run(["synthesize", "--model", fixture("m0.json")])
    assert code == 0 and "(2; 3,0,0)" in out

    print("smoke test passed")


if __name__ == "__main__":
    main()
