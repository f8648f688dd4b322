"""Quick end-to-end check of the Python bindings."""

import math

import cavity_mf_py as cm


def main():
    p = cm.EffectiveParams(delta_ph=0.5, kappa=0.5, eta=1.0)
    g1, g2 = cm.transition_points(p)
    assert g1 == 2.0 and abs(g2 - 2.0 * math.sqrt(2.0)) < 1e-12

    derived = cm.EffectiveParams.from_physical(1.0, 2.0, -4.0, 0.0, 0.0, kappa=0.5, eta=1.0)
    assert abs(derived.lambda_ - 0.125) < 1e-15 and abs(derived.g_tilde - 0.5) < 1e-15

    branches = cm.steady_branches(p.with_g_tilde(2.4))
    stable = [b for b in branches if b.stability == "stable"]
    assert len(stable) >= 2, branches
    for b in branches:
        d = cm.rhs(b.state, p.with_g_tilde(2.4))
        assert max(abs(v) for v in d.to_list()) < 1e-9

    x0 = cm.MFState(0.1, 0.0, 0.6, 0.0, 0.8)
    times, states = cm.integrate(x0, p.with_g_tilde(1.0), 20.0, n_samples=100)
    assert len(times) == len(states) and times[-1] == 20.0
    drift = max(abs(s[2] ** 2 + s[3] ** 2 + s[4] ** 2 - 1.0) for s in states)
    assert drift < 1e-8, drift

    sweep = cm.sweep(p, 0.0, 4.0, 41)
    assert len(sweep["points"]) == 41

    cycle = cm.limit_cycle(p.with_lambda(1.3).with_g_tilde(1.5), cm.MFState(0.0, 0.0, 0.8, 0.0, -0.6), 300.0, 300.0)
    assert cycle["converged"] and abs(cycle["period"] - 5.006) < 1e-2

    reports = cm.regions(p, "lambda", [0.1, 1.0, 10.0])
    widths = [r["region_ii_width"] for r in reports]
    assert widths[0] > widths[1] > widths[2] > 0.0

    a = cm.Params2D(n_rows=1, n_cols=4, g_tilde_a=0.5, delta_ph_a=0.5, delta_ph_b=0.5, kappa=0.5, eta=0.6 + 0.8j)
    h = cm.homogeneous_2d(a)
    assert abs(h["g1_star"] - 0.5) < 1e-10

    try:
        cm.EffectiveParams(kappa=-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative kappa accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
