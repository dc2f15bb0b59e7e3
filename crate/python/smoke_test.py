"""Smoke test for the qbnet extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/qbnet-*.whl
then run `python python/smoke_test.py` (or `pytest python/`).
"""

import json
import math
import tempfile
from pathlib import Path

import qbnet

KAPPA = 0.003
DRIVE = 0.01


def close(a, b, rel=1e-9, abs_tol=1e-12):
    return math.isclose(a, b, rel_tol=rel, abs_tol=abs_tol)


def staggered(topology, n):
    """Unidirectional network whose terminal battery decays more slowly."""
    base = qbnet.Network.nonreciprocal(topology, n, 0.0015, KAPPA, DRIVE)
    doc = json.loads(base.to_json())
    doc["kappa_b"] = [KAPPA] * (n - 1) + [0.002]
    return qbnet.Network.from_json(json.dumps(doc))


def test_network_construction():
    net = qbnet.Network.nonreciprocal("cascaded", 3, 0.0015, KAPPA, DRIVE)
    assert net.n_modes == 4 and net.n_batteries == 3
    assert net.reciprocity() == "nonreciprocal"
    a, f = net.drift()
    assert len(a) == 4 and f[0] == -1j * DRIVE
    # No coupling flows back towards the charger.
    assert all(abs(a[r][c]) < 1e-15 for r in range(4) for c in range(r + 1, 4))
    assert qbnet.Network.reciprocal("parallel", 2, 0.001, KAPPA, DRIVE).reciprocity() == "reciprocal"
    try:
        qbnet.Network.nonreciprocal("cascaded", 0, 0.001, KAPPA, DRIVE)
    except ValueError:
        pass
    else:
        raise AssertionError("zero batteries accepted")


def test_engines_agree_in_steady_state():
    net = qbnet.Network.nonreciprocal("cascaded", 2, qbnet.optimal_coupling("cascaded", 2, KAPPA), KAPPA, DRIVE)
    gauss = qbnet.report(net)
    closed = qbnet.report(net, engine="closed_form")
    assert gauss.engine == "gaussian" and gauss.time is None
    for g, c in zip(gauss.energy, closed.energy):
        assert close(g, c), (g, c)
    for e, w, p in zip(gauss.energy, gauss.ergotropy, gauss.passive):
        assert close(e, w + p)


def test_transient_matches_closed_form():
    net = staggered("cascaded", 2)
    state = qbnet.evolve(net, [250.0])[0]
    for mode in range(net.n_modes):
        expected = qbnet.closed_form_energy(net, mode, 250.0)
        assert close(state.occupation(mode), expected, rel=1e-8), mode


def test_thermal_bath_adds_occupation():
    net = qbnet.Network.nonreciprocal("parallel", 2, 0.001, KAPPA, DRIVE)
    vac = qbnet.steady_state(net)
    hot = qbnet.steady_state(net, qbnet.Bath.thermal(0.5))
    for mode in range(net.n_modes):
        assert close(hot.occupation(mode) - vac.occupation(mode), 0.5, rel=1e-8)
    assert all(nu >= 0.5 - 1e-12 for nu in hot.symplectic_eigenvalues())


def test_fock_oracle_on_a_weak_drive():
    net = qbnet.Network.nonreciprocal("parallel", 1, 0.0015, KAPPA, 0.001)
    fock = qbnet.report(net, 200.0, engine="fock_oracle", fock_levels=8)
    gauss = qbnet.report(net, 200.0)
    for f, g in zip(fock.energy, gauss.energy):
        assert close(f, g, rel=1e-4, abs_tol=1e-9), (f, g)


def test_parity():
    odd = qbnet.parity_report(3, 0.002, KAPPA, DRIVE)
    even = qbnet.parity_report(4, 0.002, KAPPA, DRIVE)
    assert not odd.has_zero_mode and even.has_zero_mode
    assert len(even.energies) == 5
    assert abs(even.energies[even.central_mode]) < 1e-12


def test_sweep_and_reproduce():
    net = qbnet.Network.nonreciprocal("cascaded", 2, 0.0015, KAPPA, DRIVE)
    csv, disagreements = qbnet.sweep(net, "coupling_j", [0.001, 0.002], workers=2)
    assert csv.splitlines()[0] == "point,coupling_j,observable,engine,component,value,error"
    assert not disagreements
    try:
        qbnet.sweep(net, "coupling_j", [0.002, 0.001, 0.003])
    except ValueError:
        pass
    else:
        raise AssertionError("non-monotone grid accepted")
    with tempfile.TemporaryDirectory() as d:
        paths = qbnet.reproduce("fig1", d)
        assert any(Path(p).name == "fig1.csv" for p in paths)


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"ok {t.__name__}")
    print(f"{len(tests)} passed")
