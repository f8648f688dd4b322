use cavity_mf_py::cavity_mf_py;
use pyo3::prelude::*;

#[test]
fn module_works_from_embedded_interpreter() {
    pyo3::append_to_inittab!(cavity_mf_py);
    Python::initialize();
    Python::attach(|py| {
        py.run(
            cr#"
import cavity_mf_py as cm
p = cm.EffectiveParams(delta_ph=0.5, kappa=0.5, eta=1.0)
g1, g2 = cm.transition_points(p)
assert g1 == 2.0 and abs(g2 * g2 - 8.0) < 1e-12
kinds = sorted(b.branch for b in cm.steady_branches(p.with_g_tilde(2.4)))
assert "alpha_zero" in kinds and "theta_plus" in kinds, kinds
m = cm.jacobian(cm.MFState(0.1, 0.2, 0.3, 0.4, 0.5), p)
assert len(m) == 5 and all(len(r) == 5 for r in m)
try:
    cm.regions(p, "bogus", [1.0])
except ValueError:
    pass
else:
    raise AssertionError("bad axis accepted")
"#,
            None,
            None,
        )
        .unwrap();
    });
}
