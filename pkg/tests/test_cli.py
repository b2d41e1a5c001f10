"""Command-line surface: argument plumbing, exit codes, and file outputs."""

import numpy as np
import pytest

from ssmstyler import cli, dsp
from ssmstyler.params import ParamStore


def run(argv):
    return cli.main(argv)


def test_train_epochs_zero_writes_init_checkpoint(tmp_path, capsys):
    out = tmp_path / "init.ckpt"
    assert run(["train", "--epochs", "0", "--out", str(out)]) == 0
    assert out.exists()
    assert "saved checkpoint" in capsys.readouterr().out
    assert ParamStore.load(out).total_size() == 577_812


def test_train_prints_loss_lines(tmp_path, capsys):
    out = tmp_path / "t.ckpt"
    assert run(["train", "--epochs", "1", "--n-per-style", "1",
                "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    step_lines = [l for l in lines if l.startswith("step=")]
    assert len(step_lines) == 4
    assert "content=" in step_lines[0] and "total=" in step_lines[0]


def test_train_rejects_malformed_lambdas(tmp_path, capsys):
    code = run(["train", "--epochs", "0", "--out", str(tmp_path / "x.ckpt"),
                "--lambdas", "1,2"])
    assert code == 2


def test_train_rejects_unknown_variant(tmp_path):
    code = run(["train", "--epochs", "0", "--out", str(tmp_path / "x.ckpt"),
                "--variant", "quantum"])
    assert code == 2


def test_gradcheck_bad_epsilon_is_usage_error(capsys):
    assert run(["gradcheck", "--epsilon", "1e-1"]) == 2
    assert "epsilon" in capsys.readouterr().err


def test_gradcheck_small_sample_passes(capsys):
    assert run(["gradcheck", "--samples", "8", "--epsilon", "1e-5"]) == 0
    out = capsys.readouterr().out
    assert "PASS" in out
    # every parameter family must appear in the audit
    for prefix in ("enc.", "gate.", "attn.", "fuse.", "dec.", "phi_"):
        assert prefix in out


def test_transfer_round_trip(tmp_path, capsys):
    ckpt = tmp_path / "m.ckpt"
    assert run(["train", "--epochs", "0", "--out", str(ckpt)]) == 0
    wav_in = tmp_path / "in.wav"
    rng = np.random.default_rng(0)
    dsp.write_wav(wav_in, dsp.Waveform(rng.normal(size=1600) * 0.1, 8000))
    wav_out = tmp_path / "out.wav"
    assert run(["transfer", "--ckpt", str(ckpt), "--in", str(wav_in),
                "--prompt", "a soothing whisper", "--out", str(wav_out)]) == 0
    out = capsys.readouterr().out
    assert "style similarity" in out
    back = dsp.read_wav(wav_out)
    assert back.sample_rate_hz == 8000
    assert len(back.samples) > 0


def test_transfer_missing_input_is_io_error(tmp_path, capsys):
    ckpt = tmp_path / "m.ckpt"
    run(["train", "--epochs", "0", "--out", str(ckpt)])
    code = run(["transfer", "--ckpt", str(ckpt), "--in", str(tmp_path / "no.wav"),
                "--prompt", "calm", "--out", str(tmp_path / "o.wav")])
    assert code == 2


def test_transfer_empty_prompt_is_usage_error(tmp_path):
    ckpt = tmp_path / "m.ckpt"
    run(["train", "--epochs", "0", "--out", str(ckpt)])
    wav_in = tmp_path / "in.wav"
    dsp.write_wav(wav_in, dsp.Waveform(np.zeros(1600), 8000))
    code = run(["transfer", "--ckpt", str(ckpt), "--in", str(wav_in),
                "--prompt", "!!!", "--out", str(tmp_path / "o.wav")])
    assert code == 2


def test_corrupt_checkpoint_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.ckpt"
    bad.write_text("garbage\n")
    wav_in = tmp_path / "in.wav"
    dsp.write_wav(wav_in, dsp.Waveform(np.zeros(1600), 8000))
    code = run(["transfer", "--ckpt", str(bad), "--in", str(wav_in),
                "--prompt", "calm", "--out", str(tmp_path / "o.wav")])
    assert code == 2


def test_bench_json_lines(capsys):
    assert run(["bench", "--seq-lens", "64", "128", "--repeats", "3",
                "--json"]) == 0
    import json

    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    rows = [json.loads(l) for l in lines]
    assert all("wall_time_s" in r for r in rows)


def test_ablate_with_tiny_checkpoints(tmp_path, capsys):
    paths = {}
    for variant in ("transformer_ssm", "pure_transformer", "pure_ssm"):
        p = tmp_path / f"{variant}.ckpt"
        assert run(["train", "--epochs", "0", "--out", str(p),
                    "--variant", variant]) == 0
        paths[variant] = p
    assert run(["ablate",
                "--ckpt-transformer-ssm", str(paths["transformer_ssm"]),
                "--ckpt-pure-transformer", str(paths["pure_transformer"]),
                "--ckpt-pure-ssm", str(paths["pure_ssm"]),
                "--corpus-seed", "1", "--n-per-style", "1"]) == 0
    out = capsys.readouterr().out
    assert "Transformer-SSM (Ours)" in out


def test_gen_corpus_writes_wavs_and_manifest(tmp_path, capsys):
    out_dir = tmp_path / "corpus"
    assert run(["gen-corpus", "--seed", "3", "--n-per-style", "1",
                "--out-dir", str(out_dir)]) == 0
    wavs = sorted(out_dir.glob("*.wav"))
    assert len(wavs) == 4
    manifest = (out_dir / "prompts.tsv").read_text().strip().splitlines()
    assert len(manifest) == 4
    assert all("\t" in line for line in manifest)
