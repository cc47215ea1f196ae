"""Smoke test for the longrep Python extension.

Build and install first:
    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/longrep-*.whl
"""

import math

import longrep


def main():
    banana = longrep.Text("banana")
    rows = longrep.block_stats(banana, 6)
    assert rows[1] == (2, 5, 3, 2), rows
    assert longrep.max_repetition(banana) == 3
    assert longrep.power_sums(longrep.Text("aaaa"), 2, 1)[0] == (1, 16, 1)

    assert longrep.delta_correction(2, 1.0) == 1.0
    assert abs(longrep.delta_correction(3, 1.0) - 0.5 * math.log2(5)) < 1e-12
    lam = longrep.repetition_fraction_to_lambda(0.5)
    assert abs(longrep.occupancy_fraction(lam) - 0.5) < 1e-10

    points = [(m, 1.5 * m**0.4) for m in range(2, 30)]
    fit = longrep.fit(points, "power")
    assert abs(fit.exponent - 0.4) < 1e-6, fit

    text = longrep.bernoulli(50_000, 0.5, 7)
    assert len(text) == 50_000 and text.provenance == "synthetic"
    analysis = longrep.analyze(text, alphas=[2])
    order = analysis.order(2)
    assert order.failure is None, order.failure
    assert order.preference in ("power", "log_power")

    shuffled = longrep.shuffle(text, 3)
    assert sorted(str(shuffled)) == sorted(str(text))
    curve, eta = longrep.maxrep(text, points=8, k=3, seed=1)
    assert all(b[1] >= a[1] for a, b in zip(curve, curve[1:]))
    assert 0.5 < eta.eta < 2.0, eta

    raw = "*** START OF THE BOOK ***\n  Hello,\n\n world  \n*** END OF THE BOOK ***\n"
    assert str(longrep.normalize(raw.encode())) == "Hello, world"

    w = longrep.welch([1, 2, 3, 4, 5], [2, 3, 4, 5, 6])
    assert w.t_statistic == -1.0 and abs(w.degrees_of_freedom - 8.0) < 1e-12
    assert abs(w.p_value - 0.34659350708733416) < 1e-9

    try:
        longrep.bernoulli(10, 1.5, 0)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid p accepted")

    print("longrep smoke test passed:", analysis, fit, eta)


if __name__ == "__main__":
    main()
