"""Acceptance suite: reproduces the reference coverage/connectivity numbers
at the evaluation scale and validates the protocol, oracle, and training
contracts. Run with -s to see one pass/fail line per criterion check.

Heavy sweeps (30 seeds per configuration) are shared through module-scoped
fixtures; expect the full module to take ~20-40 minutes on two cores.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np
import pytest

from uavswarm.config import ScenarioConfig
from uavswarm.engine import run_episode
from uavswarm.network import HelloMessage, decode_hello, encode_hello, gamma
from uavswarm.policies import BsCapParams, alpha
from uavswarm.qnet import QNetwork
from uavswarm.rl import (
    RewardParams,
    offline_pretrain,
    reward,
)
from uavswarm.sweep import run_sweep
from uavswarm.training import evaluate_policy, generate_offline_dataset, online_train

N_SEEDS = 30
WORKERS = 2

TABLE_SCENARIO = dict(speed_mps=20.0, sim_seconds=2000.0, seed=0)

DESK_RL = ScenarioConfig(
    map_km=2.0,
    n_uavs=10,
    speed_mps=20.0,
    sim_seconds=400.0,
    tx_range_m=400.0,
    policy="bscap",
    beta=1.5,
    reward_n=4.0,
    seed=200,
)
ONLINE_SEED = 5
EVAL_SEEDS = list(range(500, 510))


def _worker(args):
    config, seed = args
    return run_episode(replace(config, seed=seed))


def run_many(config, n_seeds=N_SEEDS):
    jobs = [(config, config.seed + i) for i in range(n_seeds)]
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        return list(pool.map(_worker, jobs))


def summarize(traces, sim_seconds):
    tc = [t.tc_s if t.tc_s is not None else sim_seconds for t in traces]
    return dict(
        coverage=float(np.mean([t.coverage_pct for t in traces])),
        tc=float(np.mean(tc)),
        tc_censored=sum(1 for t in traces if t.tc_s is None),
        fairness=float(np.mean([t.fairness for t in traces])),
        ncc=float(np.mean([t.mean_ncc for t in traces])),
        and_deg=float(np.mean([t.mean_and for t in traces])),
        tbs=float(np.mean([t.tbs_pct for t in traces])),
        giant=float(np.mean([t.mean_giant for t in traces])),
    )


class Checks:
    def __init__(self, criterion):
        self.criterion = criterion
        self.failures = []

    def within(self, name, value, center, tol):
        lo, hi = center - tol, center + tol
        ok = lo <= value <= hi
        print(f"{'PASS' if ok else 'FAIL'} {self.criterion} {name}: "
              f"{value:.3f} (want {center} +- {tol})")
        if not ok:
            self.failures.append(name)

    def true(self, name, ok, detail=""):
        print(f"{'PASS' if ok else 'FAIL'} {self.criterion} {name} {detail}")
        if not ok:
            self.failures.append(name)

    def finish(self):
        assert not self.failures, f"{self.criterion} failed: {self.failures}"


@pytest.fixture(scope="module")
def bscap30():
    cfg = ScenarioConfig(n_uavs=30, policy="bscap", beta=1.5, beta_prime=3.0, **TABLE_SCENARIO)
    return run_many(cfg)


@pytest.fixture(scope="module")
def bscap30_failures():
    out = {}
    for pct in (10.0, 30.0):
        cfg = ScenarioConfig(n_uavs=30, policy="bscap", beta=1.5, failure_pct=pct,
                             **TABLE_SCENARIO)
        out[pct] = run_many(cfg)
    return out


@pytest.fixture(scope="module")
def fig_grid():
    """Policy grid at 20 m/s over 3000 s, the Figure-style comparison scale."""
    base = dict(n_uavs=30, speed_mps=20.0, sim_seconds=3000.0, seed=0)
    grid = {}
    grid["pheromone"] = run_many(ScenarioConfig(policy="pheromone", **base))
    for beta in (0.5, 1.5, 2.5):
        grid[("bscap", beta)] = run_many(ScenarioConfig(policy="bscap", beta=beta, **base))
    for omega in (0.5, 0.3, 0.1):
        grid[("concov", omega)] = run_many(ScenarioConfig(policy="concov", omega=omega, **base))
    return {k: summarize(v, 3000.0) for k, v in grid.items()}


def test_criterion_1_table_bscap_30(bscap30):
    """BS-CAP at 30 UAVs reproduces the reference table row."""
    s = summarize(bscap30, 2000.0)
    c = Checks("C1")
    c.within("NCC", s["ncc"], 2.3, 0.5)
    c.within("AND", s["and_deg"], 3.5, 0.5)
    c.within("Tbs", s["tbs"], 80.0, 8.0)
    c.within("G", s["giant"], 26.0, 3.0)
    c.within("F", s["fairness"], 0.76, 0.06)
    c.finish()


def test_criterion_2_table_concov_30():
    """ConCov at omega=0.3 reproduces the reference table row."""
    cfg = ScenarioConfig(n_uavs=30, policy="concov", omega=0.3, sensing_period_s=5.0,
                         **TABLE_SCENARIO)
    s = summarize(run_many(cfg), 2000.0)
    c = Checks("C2")
    c.within("NCC", s["ncc"], 3.0, 0.6)
    c.within("AND", s["and_deg"], 3.4, 0.5)
    c.within("Tbs", s["tbs"], 72.0, 8.0)
    c.within("G", s["giant"], 24.0, 3.0)
    c.finish()


def test_criterion_3_table_bscap_50():
    """BS-CAP at 50 UAVs reproduces the reference table row."""
    cfg = ScenarioConfig(n_uavs=50, policy="bscap", beta=1.5, **TABLE_SCENARIO)
    s = summarize(run_many(cfg), 2000.0)
    c = Checks("C3")
    c.within("NCC", s["ncc"], 1.4, 0.4)
    c.within("AND", s["and_deg"], 4.4, 0.5)
    c.within("Tbs", s["tbs"], 94.0, 5.0)
    c.within("G", s["giant"], 48.0, 3.0)
    c.within("F", s["fairness"], 0.91, 0.05)
    c.finish()


def test_criterion_4_failure_robustness(bscap30, bscap30_failures):
    """Graceful degradation under 10% and 30% progressive node failures."""
    s0 = summarize(bscap30, 2000.0)
    s10 = summarize(bscap30_failures[10.0], 2000.0)
    s30 = summarize(bscap30_failures[30.0], 2000.0)
    c = Checks("C4")
    c.within("Tbs@0", s0["tbs"], 80.0, 8.0)
    c.within("Tbs@10", s10["tbs"], 76.0, 8.0)
    c.within("Tbs@30", s30["tbs"], 70.0, 8.0)
    c.true("Tbs monotone", s0["tbs"] >= s10["tbs"] >= s30["tbs"],
           f"({s0['tbs']:.1f} >= {s10['tbs']:.1f} >= {s30['tbs']:.1f})")
    ncc_span = max(s0["ncc"], s10["ncc"], s30["ncc"]) - min(s0["ncc"], s10["ncc"], s30["ncc"])
    and_span = max(s0["and_deg"], s10["and_deg"], s30["and_deg"]) - min(
        s0["and_deg"], s10["and_deg"], s30["and_deg"])
    c.true("NCC steady", ncc_span <= 0.3, f"(span {ncc_span:.2f})")
    c.true("AND steady", and_span <= 0.3, f"(span {and_span:.2f})")
    c.finish()


def test_criterion_5_figure_orderings(fig_grid):
    """Qualitative orderings of the figure-style comparison at 20 m/s."""
    c = Checks("C5")
    tc_pheromone = fig_grid["pheromone"]["tc"]
    others = {k: v for k, v in fig_grid.items() if k != "pheromone"}
    slowest = min(v["tc"] for v in others.values())
    c.true("(a) baseline fastest coverage", tc_pheromone < slowest,
           f"(pheromone {tc_pheromone:.0f}s vs best other {slowest:.0f}s)")
    lo, hi = fig_grid[("bscap", 0.5)], fig_grid[("bscap", 2.5)]
    c.true("(b) beta raises AND", hi["and_deg"] > lo["and_deg"],
           f"({lo['and_deg']:.2f} -> {hi['and_deg']:.2f})")
    c.true("(b) beta raises Tc", hi["tc"] > lo["tc"], f"({lo['tc']:.0f}s -> {hi['tc']:.0f}s)")
    matched = []
    for beta in (0.5, 1.5, 2.5):
        for omega in (0.5, 0.3, 0.1):
            b, v = fig_grid[("bscap", beta)], fig_grid[("concov", omega)]
            if abs(b["tc"] - v["tc"]) <= 0.1 * max(b["tc"], v["tc"]):
                matched.append((beta, omega, b["tbs"] - v["tbs"]))
    c.true("(c) matched-Tc pair exists", bool(matched), f"({len(matched)} pairs)")
    if matched:
        best = max(m[2] for m in matched)
        c.true("(c) BS-CAP Tbs lead >= 5pp", best >= 5.0,
               f"(best lead {best:.1f}pp over {matched})")
    c.finish()


class TestCriterion6DqnSuite:
    """Paper-scale DQN training is out of desk reach; this is the substitute
    property suite: gradient correctness, offline optimization progress, and
    a desk-scale end-to-end policy quality bar."""

    def test_i_gradient_check(self):
        c = Checks("C6i")
        rng = np.random.default_rng(42)

        def fd(probe, params, i, s, a, y, h):
            shifted = params.copy()
            shifted[i] += h
            probe.from_flat(shifted)
            q = probe.forward_batch(s)[np.arange(len(a)), a]
            lp = float(np.mean((q - y) ** 2))
            shifted[i] -= 2 * h
            probe.from_flat(shifted)
            q = probe.forward_batch(s)[np.arange(len(a)), a]
            lm = float(np.mean((q - y) ** 2))
            return (lp - lm) / (2 * h)

        worst = 0.0
        checked = 0
        h = 1e-5
        for m in (1, 7, 64):
            net = QNetwork.init_random(rng)
            s = rng.random((m, 22))
            a = rng.integers(0, 5, size=m)
            y = rng.normal(0, 5, size=m)
            _, grad = net.loss_and_grad(s, a, y)
            params = net.to_flat()
            probe = QNetwork.zeros()
            # pre-activations: the loss is only differentiable away from the
            # leaky-ReLU kinks, so skip coordinates whose perturbation can
            # push a pre-activation across zero
            z1 = s @ net.w1.T + net.b1
            z2 = np.where(z1 > 0, z1, 0.01 * z1) @ net.w2.T + net.b2
            margin = 50 * h
            z1_safe = np.abs(z1).min(axis=0) > margin  # per hidden-1 unit
            z2_all_safe = np.abs(z2).min() > margin
            n1 = net.w1.size + net.b1.size
            n2 = n1 + net.w2.size + net.b2.size
            for i in rng.integers(0, net.n_params, size=80):
                i = int(i)
                if i < n1:
                    j = i // 22 if i < net.w1.size else i - net.w1.size
                    if not (z1_safe[j] and z2_all_safe):
                        continue
                elif i < n2:
                    if not z2_all_safe:
                        continue
                numeric = fd(probe, params, i, s, a, y, h)
                checked += 1
                diff = abs(numeric - grad[i])
                if diff <= 1e-7:
                    continue  # below finite-difference roundoff, not a gradient error
                worst = max(worst, diff / max(abs(numeric), abs(grad[i]), 1e-8))
        c.true("gradient vs central differences", worst <= 1e-4 and checked >= 100,
               f"(worst rel err {worst:.2e} over {checked} coordinates)")
        c.finish()

    def test_ii_offline_loss_halves(self, dqn_pipeline):
        c = Checks("C6ii")
        losses = dqn_pipeline["halving_losses"]
        ratio = losses[-1] / losses[0]
        c.true("epoch-50 loss <= half of epoch-1", ratio <= 0.5,
               f"({losses[0]:.2f} -> {losses[-1]:.2f}, ratio {ratio:.3f})")
        c.finish()

    def test_iii_desk_scale_policy_quality(self, dqn_pipeline):
        c = Checks("C6iii")
        r_dqn = dqn_pipeline["reward_dqn"]
        r_rand = dqn_pipeline["reward_random"]
        margin = (r_dqn - r_rand) / abs(r_rand)
        c.true("trained beats uniform-random by >= 30%", margin >= 0.30,
               f"(dqn {r_dqn:.0f} vs random {r_rand:.0f}, margin {margin:+.1%})")
        c.true("trained Tbs >= pheromone baseline", dqn_pipeline["tbs_dqn"] >= dqn_pipeline["tbs_pheromone"],
               f"({dqn_pipeline['tbs_dqn']:.1f} vs {dqn_pipeline['tbs_pheromone']:.1f})")
        c.finish()


@pytest.fixture(scope="module")
def dqn_pipeline():
    """Deterministic desk-scale training pipeline shared by criterion 6."""
    data = generate_offline_dataset(DESK_RL, episodes=15, epsilon=0.1)[:10000]
    assert len(data) == 10000
    # (ii): the pinned 50-epoch run on the 10k dataset
    _, halving_losses = offline_pretrain(data, seed=1, epochs=50, batch_size=1024)
    # (iii): converge value magnitudes offline, then refine online
    net, _ = offline_pretrain(data, seed=1, epochs=600, batch_size=1024,
                              lr=0.02, lr_decay=0.997, target_refresh=100)
    trained, _stats = online_train(DESK_RL, net, episodes=200, seed=ONLINE_SEED)
    dqn_cfg = replace(DESK_RL, policy="dqn")
    dqn = evaluate_policy(dqn_cfg, EVAL_SEEDS, net=trained, epsilon=0.0)
    rand = evaluate_policy(dqn_cfg, EVAL_SEEDS, net=trained, epsilon=1.0)
    pher = evaluate_policy(replace(DESK_RL, policy="pheromone"), EVAL_SEEDS)
    return dict(
        halving_losses=halving_losses,
        reward_dqn=float(np.mean([t.total_reward for t in dqn])),
        reward_random=float(np.mean([t.total_reward for t in rand])),
        tbs_dqn=float(np.mean([t.tbs_pct for t in dqn])),
        tbs_pheromone=float(np.mean([t.tbs_pct for t in pher])),
    )


class TestCriterion7ProtocolAndOracles:
    def test_codec_round_trip_10k(self):
        c = Checks("C7")
        rng = np.random.default_rng(7)
        ok = True
        for _ in range(10_000):
            msg = HelloMessage(
                uav_id=int(rng.integers(128)),
                x_coarse=int(rng.integers(512)),
                y_coarse=int(rng.integers(512)),
                waypoint_index=int(rng.integers(3600)),
                patch_levels=tuple(int(v) for v in rng.integers(0, 64, size=25)),
                bs_hops=int(rng.integers(16)),
            )
            data = encode_hello(msg)
            ok = ok and len(data) == 24 and decode_hello(data) == msg
        c.true("hello codec 10^4 round trips, 24 bytes each", ok)
        c.finish()

    def test_components_oracle_200_graphs(self):
        from uavswarm.metrics import components
        from uavswarm.network import ConnectivityGraph

        c = Checks("C7")
        rng = np.random.default_rng(8)
        ok = True
        for _ in range(200):
            n = int(rng.integers(1, 11))
            adj = rng.random((n, n)) < 0.3
            adj = adj | adj.T
            np.fill_diagonal(adj, False)
            reach = adj | np.eye(n, dtype=bool)
            for _ in range(n):
                reach = reach @ reach
            comps = {tuple(np.flatnonzero(row)) for row in reach}
            expected = (len(comps), max(len(k) for k in comps))
            ok = ok and components(ConnectivityGraph(adjacency=adj)) == expected
        c.true("components match transitive-closure oracle on 200 graphs", ok)
        c.finish()

    def test_pheromone_mass_conservation(self):
        from uavswarm.grid import GridSpec
        from uavswarm.pheromone import PheromoneMap

        c = Checks("C7")
        rng = np.random.default_rng(9)
        m = PheromoneMap(GridSpec(12, 12), evaporation=0.0, diffusion=0.006, boundary="wrap")
        m.values[:] = rng.random((12, 12))
        total = m.total()
        for _ in range(1000):
            m.step()
        c.true("wrap-mode mass conserved to 1e-9 over 1000 steps",
               abs(m.total() - total) <= 1e-9 * total,
               f"(relative drift {abs(m.total() - total) / total:.2e})")
        c.finish()

    def test_branch_values_exact(self):
        c = Checks("C7")
        params = BsCapParams(beta=1.5, beta_prime=3.0)
        c.true("gamma branches", gamma(500, 1000) == 1.0
               and gamma(800, 1000) == 2.5 * (1.0 - 800.0 / 1000.0)
               and gamma(1200, 1000) == 0.0)
        c.true("alpha branches", alpha(0.0, params) == 0.0
               and alpha(2.0, params) == 1.0 and alpha(4.0, params) == 1.0 / 3.0)
        rp = RewardParams(m=3.0, n=3.0)
        c.true("reward branches", reward(0, 0, 2.5, True, rp) == 0.0
               and reward(2, 0, 1.5, False, rp) == -4.0
               and reward(0, 0, 0.5, True, rp) == -4.0)
        from uavswarm.grid import GridSpec
        from uavswarm.metrics import VisitGrid

        g = VisitGrid(GridSpec(2, 1))
        g.counts[0, 0] = 1
        c.true("fairness example", g.fairness() == 0.5)
        c.finish()


def test_criterion_8_sweep_determinism(tmp_path):
    """Two sweep executions produce byte-identical CSVs."""
    cfg_text = (
        "map_km = 2\nn_uavs = 6\nspeed_mps = 20\nsim_seconds = 120\n"
        "policy = pheromone, bscap\nfailure_pct = 0, 20\nseed = 4\n"
    )
    cfg_file = tmp_path / "sweep.cfg"
    cfg_file.write_text(cfg_text)
    from uavswarm.config import load_sweep

    configs = load_sweep(cfg_file)
    runs_a, agg_a = run_sweep(configs, n_seeds=3, out_dir=tmp_path / "a", workers=2)
    runs_b, agg_b = run_sweep(configs, n_seeds=3, out_dir=tmp_path / "b", workers=1)
    c = Checks("C8")
    c.true("runs.csv byte-identical", runs_a.read_bytes() == runs_b.read_bytes())
    c.true("aggregate.csv byte-identical", agg_a.read_bytes() == agg_b.read_bytes())
    c.finish()


@pytest.mark.skipif(
    __import__("uavswarm").BACKEND != "compiled",
    reason="wall-clock budget assumes the compiled kernel core",
)
def test_performance_budget():
    """One 3000 s episode with 50 UAVs completes in under 10 seconds."""
    import time

    cfg = ScenarioConfig(n_uavs=50, speed_mps=20.0, sim_seconds=3000.0, policy="bscap", seed=1)
    t0 = time.perf_counter()
    run_episode(cfg)
    elapsed = time.perf_counter() - t0
    print(f"PASS perf: 3000 s / 50 UAV episode in {elapsed:.2f}s"
          if elapsed < 10.0 else f"FAIL perf: {elapsed:.2f}s")
    assert elapsed < 10.0
