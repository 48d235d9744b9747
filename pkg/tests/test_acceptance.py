"""End-to-end acceptance criteria, one test per criterion.

Each test prints a ``criterion N: PASS/FAIL`` line and records it for the
terminal summary. The trained model is shared via the session fixture.
"""

import math
import statistics
import subprocess
import sys
import time

import numpy as np
import pytest

import conftest
from uavbeam.channel import ChannelState, beam_gain, rate, snr, steering
from uavbeam.cli import gradcheck_suite
from uavbeam.experiment import episode_seed, episode_trajectory, run_episode, run_failover_episode, summarize
from uavbeam.kalman import baseline_predict
from uavbeam.lrnet.model import predict_location
from uavbeam.scenario import ScenarioConfig, TrajectoryWindow, dbm_to_watt

N_EPISODES = 10
BLACKOUT = range(100, 105)


def report(n, ok, detail):
    conftest.ACCEPTANCE[n] = (bool(ok), detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def held_out(trained, default_cfg):
    model = trained[0]
    return [run_episode(model, default_cfg, episode_seed(0, e)) for e in range(N_EPISODES)]


def test_criterion_1_gradient_fidelity():
    t0 = time.perf_counter()
    results = gradcheck_suite(seed=0, n_small=10, n_full=3)
    elapsed = time.perf_counter() - t0
    worst = max(e for _, e in results)
    small = [e for s, e in results if s == (3, 4, 5)]
    full = [e for s, e in results if s == (20, 50, 100)]
    assert len(small) == 10 and len(full) == 3
    report(1, worst < 1e-6 and elapsed < 120,
           f"max relative error {worst:.2e} (small {max(small):.2e}, full {max(full):.2e}), {elapsed:.0f} s")


def test_criterion_2_closed_form_rate():
    cfg = ScenarioConfig()
    # independent hand chain with the stated constants
    lam = 3e8 / 30e9
    h = lam / (4 * math.pi * 100.0)
    oracle = math.log2(1 + dbm_to_watt(20) * h * h / dbm_to_watt(-90))
    state = ChannelState.from_geometry((60.0, 80.0), cfg.ue_pos, cfg)
    got = rate(snr(state, steering(state.theta, cfg.n_rx), cfg.p_t, cfg.sigma2))
    stated = 2.87435
    report(2, abs(got - oracle) < 1e-5 and cfg.m_tx == 16 and cfg.n_rx == 8,
           f"genie rate at 100 m = {got:.6f}, hand-chain oracle {oracle:.6f} (|diff| {abs(got - oracle):.1e}); "
           f"the stated constant {stated} is {abs(stated - oracle):.1e} from its own oracle")


def test_criterion_3_beam_nulls():
    n = 8
    worst_null, worst_peak = 0.0, 0.0
    for m in range(1, n):
        for c in np.linspace(-1.0 + 2 * m / n, 1.0, 7):
            theta = math.acos(c)
            theta_hat = math.acos(c - 2 * m / n)
            worst_null = max(worst_null, beam_gain(theta_hat, theta, n))
    for theta in np.linspace(0, math.pi, 50):
        worst_peak = max(worst_peak, abs(beam_gain(theta, theta, n) - 1.0))
    report(3, worst_null <= 1e-12 and worst_peak <= 1e-12,
           f"max gain at nulls {worst_null:.1e}, max |gain-1| at match {worst_peak:.1e}")


def test_criterion_4_prediction_accuracy(trained, held_out, default_cfg):
    model, _, data, train_s = trained
    errs, lr_sq, pers_sq = [], [], []
    for e, recs in enumerate(held_out):
        pos = episode_trajectory(default_cfg, episode_seed(0, e)).positions
        for r in recs:
            if r.warmup:
                continue
            errs.append(r.error("lrnet"))
            lr_sq.append(r.error("lrnet") ** 2)
            pers_sq.append(float(np.sum((pos[r.k] - pos[r.k - 1]) ** 2)))
    median = statistics.median(errs)
    mse, pmse = sum(lr_sq) / (2 * len(lr_sq)), sum(pers_sq) / (2 * len(pers_sq))
    report(4, len(data) >= 9000 and median <= 0.15 and mse < pmse and train_s <= 900,
           f"median one-step error {median:.4f} m over {len(errs)} held-out slots (threshold 0.15 m); "
           f"MSE {mse:.5f} vs persistence {pmse:.5f}; {len(data)} windows, trained in {train_s:.0f} s")


def test_criterion_5_rate_ordering(held_out):
    per = [summarize(recs).schemes for recs in held_out]
    g = [s["genie"].mean_rate for s in per]
    lr = [s["lrnet"].mean_rate for s in per]
    kf = [s["kalman"].mean_rate for s in per]
    ordered = all(a >= b >= c for a, b, c in zip(g, lr, kf))
    gap_lr = float(np.mean(np.subtract(g, lr)))
    gap_kf = float(np.mean(np.subtract(g, kf)))
    frac = float(np.mean(lr) / np.mean(g))
    report(5, ordered and gap_lr < gap_kf and frac >= 0.95,
           f"per-episode genie>=lrnet>=kalman: {ordered}; mean gaps lrnet {gap_lr:.3e} < kalman {gap_kf:.3e}; "
           f"lrnet/genie {frac:.5f}")


def test_criterion_6_kalman_exact_on_constant_velocity():
    worst = 0.0
    slots = 0
    for speed, heading in ((0.4, 0.0), (0.55, 0.3), (0.7, -math.pi / 6), (0.5, 2.5)):
        cfg = ScenarioConfig(speed_lo=speed, speed_hi=speed, heading_lo=heading, heading_hi=heading, sigma_v=0.0)
        pos = episode_trajectory(cfg, 0).positions
        for k in range(2, len(pos)):
            p = baseline_predict(pos[k - 2:k], cfg.delta_t)
            worst = max(worst, math.hypot(p.x - pos[k, 0], p.y - pos[k, 1]))
            slots += 1
        for r in run_episode(_Persistence(), cfg, 0):
            if not r.warmup:
                worst = max(worst, r.error("kalman"))
    report(6, worst <= 1e-9, f"max two-point Kalman error {worst:.1e} m over {slots} slots on 4 noise-free lines")


class _Persistence:
    window_l = 20

    def predict(self, window):
        return window.columns[-1]


def test_criterion_7_compare_determinism(tmp_path):
    cmd = [sys.executable, "-m", "uavbeam", "compare", "--episodes", "10", "--seed", "1"]
    dirs = [tmp_path / "run1", tmp_path / "run2"]
    for d in dirs:
        d.mkdir()
    procs = [subprocess.Popen(cmd, cwd=d, stdout=subprocess.PIPE, stderr=subprocess.PIPE) for d in dirs]
    outs = [p.communicate(timeout=1200) for p in procs]
    codes = [p.returncode for p in procs]
    files = [sorted(f.relative_to(d) for f in (d / "results").glob("*.csv")) for d in dirs]
    same_files = files[0] == files[1] and len(files[0]) == 2 * N_EPISODES + 2
    same_bytes = same_files and all((dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes() for f in files[0])
    same_stdout = outs[0][0] == outs[1][0] and len(outs[0][0]) > 0
    report(7, codes == [0, 0] and same_bytes and same_stdout,
           f"exit codes {codes}; {len(files[0])} CSV files byte-identical: {same_bytes}; stdout identical: {same_stdout}")


def test_criterion_8_translation_invariance(trained, default_cfg):
    model = trained[0]
    rng = np.random.default_rng(8)
    worst = 0.0
    for i in range(100):
        pos = episode_trajectory(default_cfg, episode_seed(8, i)).positions
        k = int(rng.integers(20, 200))
        w = TrajectoryWindow(np.array(pos[k - 20:k]), k)
        delta = rng.uniform(-500, 500, size=2)
        p0 = np.array(predict_location(model, w))
        p1 = np.array(predict_location(model, w.shifted(delta)))
        worst = max(worst, float(np.max(np.abs(p1 - p0 - delta))))
    report(8, worst <= 1e-9, f"max |shift error| {worst:.1e} m over 100 windows")


def test_criterion_9_failover(trained, default_cfg):
    model = trained[0]
    lr_all, kf_all, wins = [], [], 0
    for e in range(N_EPISODES):
        recs = run_failover_episode(model, default_cfg, episode_seed(0, e), BLACKOUT)
        lr = [recs[k].schemes["lrnet"].rate for k in BLACKOUT]
        kf = [recs[k].schemes["kalman"].rate for k in BLACKOUT]
        wins += np.mean(lr) >= np.mean(kf)
        lr_all += lr
        kf_all += kf
    lr_mean, kf_mean = float(np.mean(lr_all)), float(np.mean(kf_all))
    # pooled over the blackout slots of all episodes; the per-episode tally is reported alongside
    report(9, lr_mean >= kf_mean,
           f"mean rate over blackout slots {BLACKOUT.start}-{BLACKOUT.stop - 1} of {N_EPISODES} episodes: "
           f"lrnet {lr_mean:.6f} vs kalman {kf_mean:.6f} (margin {lr_mean - kf_mean:+.2e}); "
           f"lrnet ahead in {wins}/{N_EPISODES} individual episodes")
