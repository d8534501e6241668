"""Smoke test for the infokernel Python bindings.

Build and install first:

    maturin build --release -m crates/py/Cargo.toml
    pip install target/wheels/infokernel-*.whl
"""

import math

import infokernel as ik


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def kl_three_point():
    f = ik.InfoFunctional.extended_kl([1 / 3, 1 / 3, 1 / 3])
    p = ik.Problem([0.0, 1.0, 2.0], f)
    sv = p.special_values()
    close(sv["lambda_bar_upper"], math.log(3), 1e-12)
    close(sv["upsilon0_upper"], 1.0, 1e-12)

    s = p.solve(lambda_=0.5)
    close(s.info, 0.5, 1e-8)
    assert s.status == "interior"
    w = s.weights
    # Gibbs form: consecutive weight ratios equal e^beta
    close(w[1] / w[0], math.exp(s.beta), 1e-9)
    close(w[2] / w[1], math.exp(s.beta), 1e-9)

    sat = p.solve(lambda_=2.0)
    assert sat.saturated and sat.beta == math.inf

    grid = [i * math.log(3) / 10 for i in range(11)]
    curve = p.value_curve(grid)
    ups = [u for _, u, _, _ in curve]
    assert all(b >= a - 1e-12 for a, b in zip(ups, ups[1:]))
    low = p.value_curve(grid, branch="lower")
    assert all(l <= u + 1e-12 for (_, l, _, _), u in zip(low, ups))


def total_variation():
    f = ik.InfoFunctional.total_variation([0.25, 0.25, 0.5])
    p = ik.Problem([0.0, 1.0, 3.0], f)
    s = p.solve(lambda_=0.2)
    close(s.value, 1.75 + 0.3, 1e-12)
    assert s.unique is True


def channel():
    ch = ik.Channel([[1.0, 0.0], [0.0, 1.0]], [0.5, 0.5])
    s = ch.optimize(upsilon=0.9)
    close(s.beta, math.log(9), 1e-6)
    hb = -0.9 * math.log(0.9) - 0.1 * math.log(0.1)
    close(s.mutual_info, math.log(2) - hb, 1e-6)
    assert s.converged
    for row in s.kernel:
        close(sum(row), 1.0, 1e-12)

    e, i = ch.deterministic([0, 0])
    close(e, 0.5, 1e-12)
    close(i, 0.0, 1e-12)

    r = ch.separation(math.log(2) - hb)
    close(r["gap"], 0.4, 1e-6)
    assert r["best_deterministic"]["map"] in ([0, 0], [1, 1])


def errors():
    try:
        ik.Channel([[1.0, 0.0]], [0.5, 0.6])
    except ValueError:
        pass
    else:
        raise AssertionError("unnormalized input accepted")
    f = ik.InfoFunctional.extended_kl([0.5, 0.5])
    try:
        ik.Problem([0.0, 1.0], f).solve(upsilon=2.0)
    except ik.NumericalError:
        pass
    else:
        raise AssertionError("unreachable target accepted")


def asymptotics():
    close(ik.gaussian_conditional_utility(2.0, 12.0), -0.25, 1e-4)
    partial, closed = ik.series_example(1.0, 200)
    close(partial, closed, 1e-6)
    s = ik.cauchy_truncated_loss([], [0.0], [1e3, 1e4, 1e5])
    assert s["verdict"] == "DIVERGENT" and s["magnitude_ratio"] >= 50
    z = ik.zeta_tail_loss(1, [10, 100, 1000])
    assert z["values"][-1] < z["values"][0]
    assert ik.series_verdict([1.0, 1.0, 1.0]) == "CONVERGENT"


def main():
    kl_three_point()
    total_variation()
    channel()
    errors()
    asymptotics()
    print("smoke test passed")


if __name__ == "__main__":
    main()
