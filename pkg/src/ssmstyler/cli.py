"""Command-line interface.

Subcommands: train, transfer, gradcheck, bench, ablate, gen-corpus.
Exit codes: 0 on success, 1 on numeric failure (non-finite loss, gradient
check over tolerance, degenerate embeddings), 2 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import SCAN_BACKEND, __version__
from . import bench as benchmod
from .decoder import decode_waveform, latent_from_grid
from .dsp import Waveform, read_wav, stft_multi, write_wav
from .errors import (AbortStep, CorruptCheckpoint, DegenerateEmbedding,
                     InvalidArgument, InvalidConfig, NumericConfigError,
                     SsmStylerError)
from .fusion import FusionVariant, transformer_ssm_forward
from .losses import LossWeights
from .model import ModelConfig, init_params, pipeline_losses, tensor_params, write_grads
from .params import ParamStore
from .speech import encode_speech, project_style_audio
from .textenc import embed_text, project_style_text, tokenize
from .training import (STYLE_WORDS, finite_diff_check, generate_toy_corpus,
                       generate_toy_example, train)

GRADCHECK_TOLERANCE = 1e-4
GRADCHECK_PREFIXES = ("text.", "enc.", "gate.", "attn.", "fuse.", "dec.",
                      "phi_", "content.")


def _parse_variant(name: str) -> FusionVariant:
    try:
        return FusionVariant(name)
    except ValueError:
        choices = [v.value for v in FusionVariant]
        raise InvalidArgument(f"unknown variant {name!r}; choose from {choices}")


def _parse_lambdas(text: str) -> LossWeights:
    parts = text.split(",")
    if len(parts) != 3:
        raise InvalidArgument("--lambdas expects three comma-separated numbers")
    try:
        c, s, m = (float(p) for p in parts)
    except ValueError:
        raise InvalidArgument(f"could not parse --lambdas {text!r}")
    return LossWeights(c, s, m)


def cmd_train(args) -> int:
    config = ModelConfig()
    weights = _parse_lambdas(args.lambdas)
    variant = _parse_variant(args.variant)
    corpus = generate_toy_corpus(args.corpus_seed, args.n_per_style, config)
    if args.epochs == 0:
        params = init_params(args.seed, config)
    else:
        params, _ = train(corpus, args.epochs, weights, args.seed,
                          variant, config, log=print)
    params.save(args.out)
    print(f"saved checkpoint to {args.out} ({params.total_size()} parameters, "
          f"scan backend: {SCAN_BACKEND})")
    return 0


def cmd_transfer(args) -> int:
    config = ModelConfig()
    params = ParamStore.load(args.ckpt)
    variant = _parse_variant(args.variant)
    wave = read_wav(args.input)
    tokens = tokenize(args.prompt, config.vocab)
    text = embed_text(tokens, params)
    latent = encode_speech(wave, config.conv_spec, params)
    grid = stft_multi(latent.frames, config.stft)
    styled = transformer_ssm_forward(grid, text, variant, params, config.attention)
    out_latent = latent_from_grid(styled, config.conv_spec.stride_samples)
    out_wave = decode_waveform(out_latent, config.decoder_spec, params,
                               config.sample_rate_hz)
    write_wav(args.output, out_wave)
    audio_emb = project_style_audio(out_latent, params)
    text_emb = project_style_text(text, params)
    sim = benchmod.style_similarity(audio_emb, text_emb)
    print(f"wrote {args.output} ({len(out_wave.samples)} samples at "
          f"{out_wave.sample_rate_hz} Hz)")
    print(f"style similarity to prompt: {sim:.4f}")
    return 0


def cmd_gradcheck(args) -> int:
    config = ModelConfig()
    params = init_params(args.seed, config)
    rng = np.random.default_rng(args.seed)
    example = generate_toy_example(rng, style_id=0, config=config, duration_s=0.25)
    tokens = tokenize(example.prompt, config.vocab)
    weights = LossWeights()

    def loss_fn(store: ParamStore, compute_grads: bool) -> float:
        ptensors = tensor_params(store)
        out = pipeline_losses(ptensors, example.waveform.samples, tokens,
                              example.frame_labels, config,
                              FusionVariant.TRANSFORMER_SSM, weights,
                              decoder_term_weight=1e4)
        if compute_grads:
            out.total.backward()
            write_grads(store, ptensors)
        return float(out.total.value)

    per_prefix = max(1, args.samples // len(GRADCHECK_PREFIXES))
    worst = 0.0
    for prefix in GRADCHECK_PREFIXES:
        report = finite_diff_check(loss_fn, params, args.epsilon, per_prefix,
                                   seed=args.seed, prefixes=(prefix,))
        for e in report.entries:
            print(f"{e.name}[{e.index}] analytic={e.analytic:.6e} "
                  f"numeric={e.numeric:.6e} rel_error={e.rel_error:.3e}")
        worst = max(worst, report.max_rel_error)
    ok = worst < GRADCHECK_TOLERANCE
    print(f"max relative error {worst:.3e} "
          f"({'PASS' if ok else 'FAIL'}, tolerance {GRADCHECK_TOLERANCE:g})")
    return 0 if ok else 1


def cmd_bench(args) -> int:
    seq_lens = sorted(args.seq_lens)
    results = benchmod.run_scaling_bench(seq_lens, repeats=args.repeats)
    backend = benchmod.run_backend_bench(seq_lens, repeats=args.repeats)
    if args.json:
        for r in results + backend:
            print(r.json_line())
    else:
        print(benchmod.scaling_table(results))
        print()
        print(benchmod.backend_table(backend))
    return 0


def cmd_ablate(args) -> int:
    config = ModelConfig()
    checkpoints = {
        FusionVariant.TRANSFORMER_SSM: ParamStore.load(args.ckpt_transformer_ssm),
        FusionVariant.PURE_TRANSFORMER: ParamStore.load(args.ckpt_pure_transformer),
        FusionVariant.PURE_SSM: ParamStore.load(args.ckpt_pure_ssm),
    }
    corpus = generate_toy_corpus(args.corpus_seed, args.n_per_style, config)
    results = benchmod.run_ablation(corpus, checkpoints, config)
    if args.json:
        for r in results:
            print(r.json_line())
    else:
        print(benchmod.ablation_table(results))
    return 0


def cmd_gen_corpus(args) -> int:
    config = ModelConfig()
    corpus = generate_toy_corpus(args.seed, args.n_per_style, config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = []
    for i, example in enumerate(corpus):
        name = f"example_{i:03d}_{STYLE_WORDS[example.style_id]}.wav"
        write_wav(out_dir / name, example.waveform)
        manifest.append(f"{name}\t{example.prompt}")
    (out_dir / "prompts.tsv").write_text("\n".join(manifest) + "\n")
    print(f"wrote {len(corpus)} examples and prompts.tsv to {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssmstyler",
        description="Text-driven speech style transfer with a spectral "
                    "state-space model gated by text embeddings.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train on the synthetic corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=25)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--variant", default=FusionVariant.TRANSFORMER_SSM.value)
    p.add_argument("--lambdas", default="1,1,0.01",
                   help="content,style,smoothness loss weights")
    p.add_argument("--corpus-seed", type=int, default=0)
    p.add_argument("--n-per-style", type=int, default=2)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("transfer", help="apply a text-prompted style to a WAV file")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--in", dest="input", required=True, help="input WAV (mono PCM16)")
    p.add_argument("--prompt", required=True)
    p.add_argument("--out", dest="output", required=True, help="output WAV path")
    p.add_argument("--variant", default=FusionVariant.TRANSFORMER_SSM.value)
    p.set_defaults(fn=cmd_transfer)

    p = sub.add_parser("gradcheck",
                       help="verify analytic gradients with finite differences")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=24,
                   help="total sampled parameter entries across all groups")
    p.add_argument("--epsilon", type=float, default=1e-5)
    p.set_defaults(fn=cmd_gradcheck)

    p = sub.add_parser("bench", help="forward-pass scaling benchmark")
    p.add_argument("--seq-lens", type=int, nargs="+",
                   default=[512, 1024, 2048, 4096])
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--json", action="store_true",
                   help="emit one JSON object per line instead of a table")
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("ablate", help="evaluate trained variants on held-out data")
    p.add_argument("--ckpt-transformer-ssm", required=True)
    p.add_argument("--ckpt-pure-transformer", required=True)
    p.add_argument("--ckpt-pure-ssm", required=True)
    p.add_argument("--corpus-seed", type=int, default=99)
    p.add_argument("--n-per-style", type=int, default=8)
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_ablate)

    p = sub.add_parser("gen-corpus", help="write the synthetic corpus as WAV files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-per-style", type=int, default=2)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_gen_corpus)
    return parser


USAGE_ERRORS = (InvalidArgument, InvalidConfig, CorruptCheckpoint)
NUMERIC_ERRORS = (NumericConfigError, DegenerateEmbedding, AbortStep)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 1
    except USAGE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2
    except SsmStylerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
