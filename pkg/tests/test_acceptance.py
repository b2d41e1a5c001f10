"""End-to-end acceptance gate.

Each test prints a single summary line (visible with `pytest -s` or via the
captured output of `pytest -v`) and asserts the stated tolerance. These are
the repository's go/no-go checks; the per-module suites cover details.
"""

import time

import numpy as np
import pytest

from ssmstyler import bench, cli, dsp, losses, ssm
from ssmstyler.fusion import FusionVariant
from ssmstyler.losses import LossWeights
from ssmstyler.model import ModelConfig
from ssmstyler.training import generate_toy_corpus, train

RNG = np.random.default_rng(0)


def report(number, ok, detail):
    print(f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_criterion_1_stft_round_trip():
    start = time.monotonic()
    worst = 0.0
    for hop in (16, 32):
        config = dsp.StftConfig(fft_size=64, hop=hop)
        for length in (256, 1000, 16384):
            x = RNG.normal(size=length)
            y = dsp.istft(dsp.stft(x, config))
            worst = max(worst, np.linalg.norm(y - x) / np.linalg.norm(x))
    elapsed = time.monotonic() - start
    report(1, worst < 1e-6 and elapsed < 1.0,
           f"STFT round trip max rel err {worst:.3e} (< 1e-6), {elapsed:.2f} s (< 1 s)")


def test_criterion_2_ssm_closed_form_and_scan_equivalence():
    config = dsp.StftConfig(fft_size=16, hop=4)
    t_frames = 32
    grid = dsp.SpectralGrid(np.ones((t_frames, 9, 1), dtype=complex), config,
                            t_frames * 4)
    gates = ssm.GateParams(np.full((9, 1), 0.5), np.ones((9, 1)))
    h = ssm.ssm_scan(grid, gates).states
    expected = 2.0 - 2.0 ** (-np.arange(t_frames, dtype=np.float64))
    closed_err = float(np.max(np.abs(h.real - expected[:, None, None])))

    worst_rel = 0.0
    for t in (64, 1024, 4096):
        rng = np.random.default_rng(t)
        data = rng.normal(size=(t, 9, 2)) + 1j * rng.normal(size=(t, 9, 2))
        g = dsp.SpectralGrid(data, config, t * 4)
        gp = ssm.GateParams(rng.uniform(0.05, 0.95, (9, 2)),
                            rng.uniform(0.1, 2.0, (9, 2)))
        fast = ssm.ssm_scan(g, gp).states
        slow = ssm.scan_reference(g.data, gp)
        rel = np.abs(fast - slow) / np.maximum(np.abs(slow), 1e-12)
        worst_rel = max(worst_rel, float(rel.max()))
    report(2, closed_err < 1e-9 and worst_rel <= 1e-12,
           f"SSM closed form err {closed_err:.2e} (< 1e-9), "
           f"scan vs loop rel {worst_rel:.2e} (<= 1e-12)")


def test_criterion_3_stability_bound():
    rng = np.random.default_rng(42)
    violations = 0
    for _ in range(1000):
        alpha = rng.uniform(1e-3, 1.0 - 1e-3, (4, 1))
        beta = rng.uniform(1e-3, 3.0, (4, 1))
        m = rng.uniform(0.1, 5.0)
        t_frames = int(rng.integers(2, 50))
        raw = rng.normal(size=(t_frames, 4, 1)) + 1j * rng.normal(size=(t_frames, 4, 1))
        x = raw / np.maximum(np.abs(raw), 1e-12) * (m * rng.uniform(0, 1, raw.shape))
        h = ssm.scan_reference(x, ssm.GateParams(alpha, beta))
        if np.any(np.abs(h) > beta * m / (1.0 - alpha) + 1e-12):
            violations += 1
    report(3, violations == 0,
           f"stability bound |h| <= beta*M/(1-alpha): {violations} violations "
           f"in 1000 trials (need 0)")


def test_criterion_4_gradient_audit(capsys):
    start = time.monotonic()
    code = cli.main(["gradcheck", "--samples", "200", "--epsilon", "1e-5"])
    elapsed = time.monotonic() - start
    out = capsys.readouterr().out
    covered = all(p in out for p in ("enc.", "gate.", "attn.", "fuse.",
                                     "dec.", "phi_"))
    report(4, code == 0 and covered and elapsed < 60.0,
           f"gradient audit exit {code} (need 0), all prefixes covered: "
           f"{covered}, {elapsed:.1f} s (< 60 s)")


def test_criterion_5_loss_algebra():
    rng = np.random.default_rng(5)
    ok_bounds = True
    ok_complement = True
    for _ in range(1000):
        a = rng.normal(size=8)
        b = rng.normal(size=8)
        a /= np.linalg.norm(a)
        b /= np.linalg.norm(b)
        sl = losses.style_loss(a, b)
        ok_bounds &= 0.0 - 1e-12 <= sl <= 2.0 + 1e-12
        ok_complement &= bench.style_similarity(a, b) == 1.0 - sl
    h = np.tile(rng.normal(size=(1, 3, 2)).astype(complex), (8, 1, 1))
    smooth_zero = losses.smoothness_loss(h) == 0.0
    from ssmstyler.params import ParamStore

    p = ParamStore()
    p.add("content.weight", np.zeros((3, 8)))
    p.add("content.bias", np.zeros(3))
    ce = losses.content_loss(rng.normal(size=(10, 8)),
                             rng.integers(0, 3, size=10), p)
    ce_ok = abs(ce - np.log(3.0)) < 1e-12
    report(5, ok_bounds and ok_complement and smooth_zero and ce_ok,
           f"style bounds ok: {ok_bounds}, similarity == 1 - loss exactly: "
           f"{ok_complement}, constant smoothness == 0: {smooth_zero}, "
           f"uniform CE == ln 3: {ce_ok}")


@pytest.fixture(scope="module")
def trained_variants():
    start = time.monotonic()
    config = ModelConfig()
    corpus = generate_toy_corpus(0, 2, config)
    held_out = generate_toy_corpus(99, 8, config)
    out = {}
    for variant in FusionVariant:
        params, history = train(corpus, 25, LossWeights(), 0, variant, config)
        out[variant] = (params, history)
    return config, held_out, out, start


def test_criterion_6_toy_training_ordering(trained_variants):
    config, held_out, trained, start = trained_variants
    params, history = trained[FusionVariant.TRANSFORMER_SSM]
    ratio = history[-1].total / history[0].total
    margins = {}
    for variant in FusionVariant:
        stats = bench.evaluate_variant(trained[variant][0], held_out, variant,
                                       config)
        margins[variant] = stats["margin"]
    combined = margins[FusionVariant.TRANSFORMER_SSM]
    best = all(combined >= margins[v] for v in FusionVariant)
    elapsed = time.monotonic() - start
    report(6, ratio <= 0.1 and combined > 0.1 and best and elapsed < 300.0,
           f"loss ratio {ratio:.4f} (<= 0.1), combined margin {combined:+.4f} "
           f"(> 0.1), ablation margins "
           f"{ {v.value: round(m, 4) for v, m in margins.items()} }, "
           f"combined best: {best}, {elapsed:.0f} s (< 300 s)")


def test_criterion_7_scaling():
    start = time.monotonic()
    results = bench.run_scaling_bench([512, 1024, 2048, 4096], repeats=3)
    times = {}
    for r in results:
        times.setdefault(r.variant, {})[r.seq_len] = r.wall_time_s
    linear_ratios = {v: times[v][4096] / times[v][512]
                     for v in ("transformer_ssm", "pure_transformer", "pure_ssm")}
    quad_ratio = times[bench.QUADRATIC_REF][4096] / times[bench.QUADRATIC_REF][512]
    elapsed = time.monotonic() - start
    linear_ok = all(r <= 12.0 for r in linear_ratios.values())
    quad_ok = quad_ratio >= 4.0 * max(linear_ratios.values())
    report(7, linear_ok and quad_ok and elapsed < 120.0,
           f"8x length: linear ratios "
           f"{ {k: round(v, 2) for k, v in linear_ratios.items()} } (<= 12), "
           f"quadratic ratio {quad_ratio:.2f} "
           f"(>= 4x max linear = {4.0 * max(linear_ratios.values()):.2f}), "
           f"{elapsed:.0f} s (< 120 s)")


def test_criterion_8_determinism(tmp_path):
    flags = ["train", "--epochs", "2", "--n-per-style", "1", "--seed", "0"]
    a = tmp_path / "a.ckpt"
    b = tmp_path / "b.ckpt"
    assert cli.main(flags + ["--out", str(a)]) == 0
    assert cli.main(flags + ["--out", str(b)]) == 0
    identical = a.read_bytes() == b.read_bytes()
    from ssmstyler.params import ParamStore

    c = tmp_path / "c.ckpt"
    ParamStore.load(a).save(c)
    round_trip = a.read_bytes() == c.read_bytes()
    report(8, identical and round_trip,
           f"repeat-train checkpoints byte-identical: {identical}, "
           f"save/load/save byte-identical: {round_trip}")
