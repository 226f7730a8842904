"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test reports a PASS/FAIL line through the ``criterion`` fixture; the
lines are repeated in the terminal summary under "acceptance criteria".
"""

import filecmp
import json
from dataclasses import replace

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from weakcollapse.cli import EXAMPLES, main
from weakcollapse.collapse import collapse_rhs, convergence_exponent, integrate_trajectory
from weakcollapse.ensemble import (
    WeightStrategy,
    integrate_diagonal,
    integrate_ensemble,
    offdiagonal_closed_form,
    run_ensemble,
)
from weakcollapse.experiments import (
    QecConfig,
    RabiFeedbackConfig,
    feedback_gain_sweep,
    qec_demo_run,
    qec_scalar_rhs,
    rabi_feedback_run,
)
from weakcollapse.integrate import IntegratorParams, integrate_fixed_step
from weakcollapse.lindblad import check_collapse_identities, integrate_master, master_rhs
from weakcollapse.quantum import (
    IDENTITY_2,
    SIGMA_Z,
    ProjectorSet,
    density,
    ket,
    normalize,
    partial_trace,
    plus_state,
    purity,
    random_density,
    random_hermitian,
    random_pure_state,
    random_unitary,
)

pytestmark = pytest.mark.acceptance

RHO_60 = density(normalize([np.sqrt(0.6), np.sqrt(0.4)]))
QUBIT = ProjectorSet.computational(2)


def _rank_one(dim, rng):
    return density(random_pure_state(dim, rng))


def _rank_two(dim, rng):
    u = random_unitary(dim, rng)
    return u[:, :2] @ u[:, :2].conj().T


def _rotated_set(groups, rng, dim=4):
    u = random_unitary(dim, rng)
    return u, ProjectorSet(np.array([u[:, list(g)] @ u[:, list(g)].conj().T for g in groups]))


def test_01_purity_preservation(criterion):
    rng = np.random.default_rng(101)
    params = IntegratorParams(ds=1e-3, duration=10.0, sample_every=100)
    worst = 0.0
    for dim in (2, 3, 4, 8):
        # 25 states per dimension, each with its own random rank-1 projector
        rho0 = np.array([_rank_one(dim, rng) for _ in range(25)])
        ps = np.array([_rank_one(dim, rng) for _ in range(25)])
        rec = integrate_fixed_step(rho0, params, lambda s, r: (lambda s_, x: collapse_rhs(x, ps), None))
        worst = max(worst, float(np.max(np.abs(purity(rec.rho) - 1))))
    assert criterion(1, worst <= 1e-8, f"max |Tr rho^2 - 1| = {worst:.2e} (tol 1e-8)")


def test_02_fixed_point_consistency(criterion):
    rng = np.random.default_rng(202)
    params = IntegratorParams(ds=1e-3, duration=15.0, sample_every=1000)
    cases = {"rank-1": _rank_one(4, rng), "rank-2": _rank_two(4, rng)}
    dists = {}
    for name, p in cases.items():
        rho0 = np.array([density(random_pure_state(4, rng)), random_density(4, rng)])
        rec = integrate_trajectory(rho0, p, params=params)
        dists[name] = float(np.max(rec.distance()[-1]))
    worst = max(dists.values())
    detail = ", ".join(f"{k} {v:.2e}" for k, v in dists.items())
    assert criterion(2, worst <= 1e-9, f"||rho(15) - rho*||_F: {detail} (tol 1e-9)")


def test_03_convergence_exponent(criterion):
    rng = np.random.default_rng(303)
    p = density(ket(0, 2))
    rho0 = density(random_pure_state(2, rng))
    slopes, population = {}, {}
    for g in (0.5, 1.0, 2.0):
        params = IntegratorParams(ds=1e-3, duration=14.0 / g, sample_every=50)
        rec = integrate_trajectory(rho0, p, g=g, params=params)
        slopes[g] = convergence_exponent(rec, metric="frobenius")
        population[g] = convergence_exponent(rec, p, metric="population")
    ok = all(abs(slopes[g] / (-2 * g) - 1) <= 0.01 for g in slopes)
    detail = "; ".join(
        f"g={g}: slope {slopes[g]:.4f} vs {-2 * g} (population {population[g]:.4f})" for g in slopes
    )
    assert criterion(3, ok, detail)


def test_04_closed_form_oracle(criterion):
    rng = np.random.default_rng(404)
    params = IntegratorParams(ds=1e-3, duration=5.0, sample_every=50)
    worst_rho, worst_phase = 0.0, 0.0
    layouts = {"rank-1": [(0,), (1,), (2,), (3,)], "mixed-rank": [(0, 1), (2,), (3,)]}
    for groups in layouts.values():
        for kind in ("instantaneous-born", "uniform", "frozen-born"):
            u, s = _rotated_set(groups, rng)
            rho0 = random_density(4, rng)
            strategy = WeightStrategy(kind)
            rec = integrate_ensemble(rho0, s, strategy, params=params)
            _, d = integrate_diagonal(rec.projections[0], strategy, params)
            rebuilt = offdiagonal_closed_form(rho0, s, d)
            worst_rho = max(worst_rho, float(np.max(np.linalg.norm(rec.rho - rebuilt, axis=(-2, -1)))))
            # entries of blocks P_j rho P_k (j != k) in the eigenbasis of the set
            local = np.einsum("ai,sab,bj->sij", u.conj(), rec.rho, u)
            label = np.concatenate([[j] * len(g) for j, g in enumerate(groups)])
            cross = label[:, None] != label[None, :]
            ref = local[0][cross]
            keep = np.abs(ref) > 1e-6
            drift = np.angle(local[:, cross][:, keep] / ref[keep])
            worst_phase = max(worst_phase, float(np.max(np.abs(drift))))
    ok = worst_rho <= 1e-6 and worst_phase <= 1e-8
    assert criterion(4, ok, f"max reconstruction {worst_rho:.2e} (tol 1e-6), phase drift {worst_phase:.2e} (tol 1e-8)")


def test_05_offdiagonal_log_derivative_identity(criterion):
    rng = np.random.default_rng(505)
    ds = 1e-4
    params = IntegratorParams(ds=ds, duration=1.0, sample_every=1)
    worst = 0.0
    for groups in ([(0,), (1,), (2,), (3,)], [(0, 1), (2, 3)]):
        for kind in ("instantaneous-born", "uniform"):
            u, s = _rotated_set(groups, rng)
            rec = integrate_ensemble(random_density(4, rng), s, WeightStrategy(kind), params=params)
            local = np.einsum("ai,sab,bj->sij", u.conj(), rec.rho, u)
            label = np.concatenate([[j] * len(g) for j, g in enumerate(groups)])
            log_d = np.log(rec.projections)
            dlog_d = (log_d[2:] - log_d[:-2]) / (2 * ds)
            for a in range(4):
                for b in range(4):
                    if label[a] == label[b]:
                        continue
                    log_mag = np.log(np.abs(local[:, a, b]))
                    lhs = 2 * (log_mag[2:] - log_mag[:-2]) / (2 * ds)
                    rhs = dlog_d[:, label[a]] + dlog_d[:, label[b]]
                    worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    assert criterion(5, worst <= 1e-5, f"max log-derivative residual {worst:.2e} at ds=1e-4 (tol 1e-5)")


def test_06_frozen_born_statistics(criterion):
    params = IntegratorParams(ds=1e-2, duration=10.0)
    stats = run_ensemble(10_000, RHO_60, QUBIT, WeightStrategy.frozen_born(), params, seed=12345)
    f0 = float(stats.frequencies[0])
    ok = 0.5853 <= f0 <= 0.6147
    assert criterion(6, ok, f"outcome-0 frequency {f0:.4f} in [0.5853, 0.6147] (z = {stats.z_scores[0]:+.2f})")


def test_07_instantaneous_born_violation(criterion):
    params = IntegratorParams(ds=1e-2, duration=30.0)
    strategy = WeightStrategy.noisy(0.0)
    stats = run_ensemble(100, RHO_60, QUBIT, strategy, params, seed=7)
    f0 = float(stats.frequencies[0])
    dist = float(np.linalg.norm(stats.mean_rho[-1] - density(ket(0, 2))))
    ok = f0 == 1.0 and dist <= 1e-8
    assert criterion(7, ok, f"outcome-0 frequency {f0} (Born 0.6), ||rho(S) - |0><0|||_F = {dist:.2e} (tol 1e-8)")


def test_08_lindblad_baseline(criterion):
    params = IntegratorParams(ds=1e-3, duration=2.0, sample_every=1)
    rec = integrate_master(density(plus_state()), ls=[SIGMA_Z], params=params)
    errs = []
    for t in (0.5, 1.0, 2.0):
        i = int(np.argmin(np.abs(rec.s - t)))
        errs.append(abs(rec.rho[i, 0, 1] - 0.5 * np.exp(-2 * t)))
    rng = np.random.default_rng(808)
    trace_err = 0.0
    for dim in (2, 3, 4):
        ls = [rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)) for _ in range(3)]
        out = master_rhs(random_density(dim, rng), random_hermitian(dim, rng), ls)
        trace_err = max(trace_err, abs(np.trace(out)))
    ok = max(errs) <= 1e-8 and trace_err <= 1e-12
    assert criterion(8, ok, f"max dephasing error {max(errs):.2e} (tol 1e-8), |Tr master_rhs| {trace_err:.2e} (tol 1e-12)")


def test_09_collapse_lindblad_identities(criterion):
    rng = np.random.default_rng(909)
    worst = 0.0
    for i in range(100):
        dim = 2 + i % 7
        rep = check_collapse_identities(_rank_one(dim, rng), _rank_one(dim, rng))
        worst = max(worst, rep.pure_residual)
    p = density(ket(0, 3))
    x = random_hermitian(3, rng)
    x -= np.trace(x) / 3 * np.eye(3)
    lams = np.logspace(-4, -1, 7)
    reaction = [check_collapse_identities(p + lam * x, p).reaction for lam in lams]
    slope, _ = np.polyfit(np.log(lams), np.log(reaction), 1)
    ok = worst <= 1e-10 and abs(slope - 2) <= 0.05
    assert criterion(9, ok, f"pure-state residual {worst:.2e} (tol 1e-10), reaction-term slope {slope:.4f} (2 +/- 0.05)")


def test_10_bipartite_consistency(criterion):
    rng = np.random.default_rng(1010)
    params = IntegratorParams(ds=1e-3, duration=5.0, sample_every=100)
    worst = 0.0
    for _ in range(5):
        p_a = _rank_one(2, rng)
        rho = random_density(4, rng) if rng.random() < 0.5 else density(random_pure_state(4, rng))
        joint = integrate_trajectory(rho, np.kron(p_a, IDENTITY_2), params=params)
        reduced = integrate_trajectory(partial_trace(rho, (2, 2), 0), p_a, params=params)
        traced = np.array([partial_trace(r, (2, 2), 0) for r in joint.rho])
        worst = max(worst, float(np.max(np.linalg.norm(traced - reduced.rho, axis=(-2, -1)))))
    assert criterion(10, worst <= 1e-6, f"max ||Tr_B rho(s) - rho_A(s)||_F = {worst:.2e} (tol 1e-6)")


def test_11_qec_demo(criterion):
    results, oracle_err = {}, 0.0
    for weight in (0.7, 0.3):
        rec = qec_demo_run(QecConfig(logical_weight=weight, duration=10.0))
        sol = solve_ivp(
            lambda s, d: qec_scalar_rhs(d), (0, 10), [weight], t_eval=rec.s, method="DOP853", rtol=1e-12, atol=1e-15
        )
        oracle_err = max(oracle_err, float(np.max(np.abs(rec.logical_weight - sol.y[0]))))
        results[weight] = float(rec.logical_weight[-1])
    ok = results[0.7] >= 0.999 and results[0.3] <= 0.001 and oracle_err <= 1e-6
    detail = f"d_L: 0.7 -> {results[0.7]:.10f}, 0.3 -> {results[0.3]:.2e}; oracle deviation {oracle_err:.2e} (tol 1e-6)"
    assert criterion(11, ok, detail)


def test_12_rabi_feedback(criterion):
    base = RabiFeedbackConfig(omega=1.0, g=0.1, epsilon=0.05)
    # tuning sweep on seeds disjoint from the evaluation pairs
    sweep = feedback_gain_sweep(base, [0.01, 0.02, 0.05, 0.1, 0.2], seeds=[1000, 1001, 1002])
    gain = max(sweep, key=sweep.get)
    without, with_fb = [], []
    for seed in range(20):
        without.append(rabi_feedback_run(replace(base, gain=0.0, seed=seed)).metrics["mean_fidelity"])
        with_fb.append(rabi_feedback_run(replace(base, gain=gain, seed=seed)).metrics["mean_fidelity"])
    better = int(np.sum(np.array(with_fb) > np.array(without)))
    ok = np.mean(with_fb) > np.mean(without) and better >= 18
    detail = (
        f"gain {gain} (sweep {', '.join(f'{k}: {v:.6f}' for k, v in sweep.items())}); "
        f"mean fidelity {np.mean(with_fb):.6f} vs {np.mean(without):.6f}, improved on {better}/20"
    )
    assert criterion(12, ok, detail)


def test_13_determinism(criterion, tmp_path):
    configs = json.loads(json.dumps(EXAMPLES))
    configs["ensemble"]["ensemble_size"] = 200
    configs["noisy-ensemble"] = {
        **configs["ensemble"],
        "strategy": "noisy-instantaneous-born",
        "epsilon": 0.05,
        "ensemble_size": 16,
        "integrator": {"ds": 0.01, "duration": 2.0},
    }
    for name in ("rabi-feedback", "bell-jzjz"):
        configs[name]["feedback"]["duration"] = 5.0
    mismatched = []
    for name, cfg in configs.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(cfg))
        dirs = []
        for run, threads in enumerate(("1", "3")):
            out = tmp_path / f"{name}-{run}"
            assert main(["run", str(path), "--out-dir", str(out), "--threads", threads, "--quiet"]) == 0
            dirs.append(out)
        files = ["samples.csv", "summary.json", "config.json"]
        _, bad, errors = filecmp.cmpfiles(dirs[0], dirs[1], files, shallow=False)
        mismatched += [f"{name}/{f}" for f in bad + errors]
    ok = not mismatched
    detail = f"{len(configs)} configs re-run, byte-identical outputs" if ok else f"differences in {mismatched}"
    assert criterion(13, ok, detail)
