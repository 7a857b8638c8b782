"""Smoke test for the apdkit extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`
or `pip install ./crates/py`, then run `python python/smoke_test.py`.
"""

import math

import apdkit


def check_five_unit_network():
    net, x = apdkit.five_unit_example()
    assert net.patterns(x) == [[1, 0, 1, 1, 0], [0, 1, 1, 0, 0], [1, 1, 1, 1, 0]]
    assert net.predict(x) == 2


def check_seven_instance_example():
    traj = apdkit.seven_instance_example()
    assert len(traj) == 7
    assert traj.distinct_pattern_counts() == [3, 3, 2]
    assert traj.region(2, [0, 1, 1, 0, 0]) == [0, 1]
    apd = apdkit.Apd(traj)
    assert (apd.num_nodes, apd.num_edges) == (8, 8)
    clusters = apd.split()
    assert sorted(clusters) == [[0, 1], [2], [3], [4, 5, 6]]


def check_entropy():
    assert apdkit.entropy([0, 1]) == 1.0
    gain = apdkit.information_gain([0, 0, 1, 1], [[0, 0], [1, 1]])
    assert math.isclose(gain, 1.0)
    try:
        apdkit.information_gain([0, 1], [[0]])
    except ValueError:
        pass
    else:
        raise AssertionError("non-partition children accepted")


def check_custom_trajectories():
    records = [
        (10, [[1, 0], [1]], 0),
        (11, [[0, 1], [1]], 1),
        (12, [[1, 0], [0]], 0),
    ]
    apd = apdkit.Apd(apdkit.Trajectories(records))
    covered = sorted(i for c in apd.split() for i in c)
    assert covered == [10, 11, 12]


def check_training_pipeline():
    data = apdkit.Dataset.synthetic(2, 50, 2, seed=3)
    net = apdkit.Network(2, [8], 2, seed=1)
    history = net.train(data, learning_rate=0.05, epochs=40, batch_size=16, seed=2)
    assert len(history) == 40 and len(history[0]) == len(data)
    accuracy, flags = net.evaluate(data)
    assert accuracy >= 0.95, accuracy
    assert len(flags) == len(data)

    events = apdkit.forgetting_events(history, data.labels)
    assert len(events) == len(data)
    assert all(l + f <= len(history) - 1 for l, f, _, _ in events)

    traj = apdkit.extract(net, data)
    assert traj.fingerprint == net.fingerprint()
    clusters = apdkit.Apd(traj).split()
    assert sorted(i for c in clusters for i in c) == data.ids


def main():
    check_five_unit_network()
    check_seven_instance_example()
    check_entropy()
    check_custom_trajectories()
    check_training_pipeline()
    print("apdkit smoke test passed")


if __name__ == "__main__":
    main()
