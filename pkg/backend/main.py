"""
InstaLab: instance-encoding attack laboratory.
Command-line entry point.

    python main.py gen --num-private 40 --shape 16x16x1 --k 4 --epochs 30 --public-pool 200 --out run/data
    python main.py attack --in run/data/dataset.ihed --out run/attack
    python main.py prng-attack --in run/data/dataset.ihed --pool run/data/public.ihed --out run/prng
    python main.py theory --theorem 4 --encoder identity --out run/theory
    python main.py eval --recovered run/attack/recovered --originals some/dir --out run/eval
    python main.py replay run/attack/MANIFEST.md

Exit codes: 0 success, 2 usage error, 1 runtime error.
"""

import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.dataset_io import read_dataset, read_images, read_truth, truth_path_for, write_dataset, write_images, write_truth
from core.errors import ConfigError, InstaLabError, PipelineStageError, RecoveryError
from core.image_io import load_image_dir, save_images
from utils import MANIFEST_NAME, get_logger, set_threads, write_manifest

log = get_logger("instalab")

DATASET_NAME = "dataset.ihed"
PUBLIC_NAME = "public.ihed"


def parse_shape(text: str) -> Tuple[int, int, int]:
    try:
        dims = tuple(int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"shape must look like HxWxC, got {text!r}")
    if len(dims) != 3 or min(dims) < 1 or dims[2] not in (1, 3):
        raise argparse.ArgumentTypeError(f"shape must be HxWxC with C in {{1, 3}}, got {text!r}")
    return dims


# --- gen ----------------------------------------------------------------------

def cmd_gen(args, argv: Sequence[str]) -> int:
    from encoder import EncoderConfig, PublicPool, encode_dataset, generate_public_pool, generate_synthetic

    cfg = EncoderConfig.create(
        k=args.k,
        epochs=args.epochs,
        sign_flip=not args.no_sign_flip,
        public_pool_size=args.public_pool,
        seed=args.seed,
        release_abs=args.release_abs,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    priv = generate_synthetic(args.num_private, args.shape, args.classes, args.seed)
    pub = generate_public_pool(args.public_pool, args.shape, args.seed) if args.public_pool else PublicPool.empty(args.shape)
    ds = encode_dataset(priv, pub, cfg)

    dataset_path = write_dataset(ds.blind(), out / DATASET_NAME)
    truth_path = write_truth(truth_path_for(dataset_path), ds.ground_truth, ds.params,
                             originals=priv.images, private_labels=priv.labels, seed=args.seed)
    outputs = {"dataset": str(dataset_path), "truth": str(truth_path)}
    if len(pub):
        outputs["public"] = str(write_images(out / PUBLIC_NAME, pub.images, kind="public"))

    write_manifest(out, "gen", argv, args.seed, {**cfg.model_dump(), "num_private": args.num_private,
                   "classes": args.classes, "shape": "x".join(map(str, args.shape))}, outputs=outputs)
    log.info(f"Wrote {len(ds)} encodings to {dataset_path}")
    return 0


# --- attack -------------------------------------------------------------------

def cmd_attack(args, argv: Sequence[str], workers: int) -> int:
    from attack_orchestrator import run_attack
    from stages.attack_config import AttackConfig, GdConfig
    from tools.reporting import flatten

    in_path = Path(args.input)
    if not in_path.exists():
        raise ConfigError(f"input dataset {in_path} does not exist")
    config = AttackConfig.create(
        clique_extra=args.M,
        baseline_only=args.baseline_only,
        box=args.box,
        set_scorer=args.set_scorer,
        reps_per_set=args.reps,
        seed=args.seed,
        workers=workers,
        gd=GdConfig.create(l1=args.l1),
    )
    ds = read_dataset(in_path)
    truth = truth_path_for(in_path)
    out = Path(args.out)
    final_state = run_attack(ds, config, out_dir=out, truth_path=truth if truth.exists() else None)

    outputs = {"baseline": str(out / "baseline"), "assignment": str(out / "assignment.csv"),
               "summary": str(out / "summary.csv")}
    if final_state.get("reconstruction") is not None:
        outputs["recovered"] = str(out / "recovered")
    if final_state.get("reports"):
        outputs["metrics"] = str(out / "metrics.csv")
    write_manifest(out, "attack", argv, args.seed, flatten(config.model_dump()),
                   inputs={"dataset": str(in_path)}, outputs=outputs)
    return 0


# --- prng-attack --------------------------------------------------------------

def cmd_prng_attack(args, argv: Sequence[str], workers: int) -> int:
    from encoder import PublicPool
    from prngattack import SeedSearchConfig, exact_reconstruct, export_secrets, search_seed
    from tools.metrics import match_reconstructions
    from tools.reporting import write_summary

    in_path = Path(args.input)
    if not in_path.exists():
        raise ConfigError(f"input dataset {in_path} does not exist")
    ds = read_dataset(in_path)
    pub = PublicPool(read_images(args.pool, kind="public")[0]) if args.pool else None
    search = SeedSearchConfig.window(args.window, args.start, workers=workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    inputs = {"dataset": str(in_path)}
    if args.pool:
        inputs["pool"] = str(args.pool)
    params = {"window": args.window, "start": args.start, "workers": workers}

    secrets = search_seed(ds, search=search)
    if secrets is None:
        write_manifest(out, "prng-attack", argv, None, params, inputs=inputs)
        raise RecoveryError(f"no seed in [{search.seed_lo}, {search.seed_hi}] reproduces the dataset")

    summary: Dict[str, object] = {"seed": secrets.seed, "verified": secrets.verified, "vacuous": secrets.vacuous}
    images = exact_reconstruct(ds, secrets, pub)
    save_images(images, out / "recovered", prefix="recovered")
    outputs = {
        "recovered": str(out / "recovered"),
        "images": str(write_images(out / "recovered.ihed", images, kind="recovered")),
        "secrets": str(export_secrets(out / "secrets.truth", ds, secrets)),
    }

    truth = truth_path_for(in_path)
    if truth.exists():
        originals = read_truth(truth).originals
        if originals is not None:
            summary["max_abs_error"] = float(np.max(np.abs(images - originals)))
            for key, value in match_reconstructions(images, originals).summary().items():
                summary[key] = value
    outputs["summary"] = str(write_summary(out / "summary.csv", summary))

    log.info(f"Recovered seed {secrets.seed}; {summary}")
    write_manifest(out, "prng-attack", argv, secrets.seed, params, inputs=inputs, outputs=outputs)
    return 0


# --- theory -------------------------------------------------------------------

def cmd_theory(args, argv: Sequence[str]) -> int:
    import theorysim as ts
    from tools.reporting import write_experiment, write_summary

    problem = ts.orthogonal_problem(args.dimension)
    encoder = ts.make_encoder(args.encoder, problem, scale=args.scale)
    learner = ts.AveragedPerceptron(ts.LearnerConfig.create(epochs=args.learner_epochs,
                                                            learning_rate=args.learning_rate, seed=args.seed))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = {"dimension": args.dimension, **encoder.describe(), "n": args.n, "trials": args.trials}
    rows: List[Dict[str, object]] = []
    summary: Dict[str, object] = {}

    if args.game == "dataset":
        adversary = ts.RandomGuessAdversary(problem, args.n) if args.adversary == "random" \
            else ts.MembershipAdversary(problem, args.n)
        est = ts.play_dataset_game(adversary, encoder, trials=args.trials, seed=args.seed)
        rows.append({**encoder.describe(), "game": "dataset", "adversary": args.adversary, **est.row()})
        summary = est.row()
        params.update(game="dataset", adversary=args.adversary)
    elif args.game == "instance":
        adversary = ts.RandomInstanceAdversary(problem) if args.adversary == "random" \
            else ts.NearestInstanceAdversary(problem)
        est = ts.play_instance_game(adversary, problem, encoder, n=args.n, trials=args.trials, seed=args.seed)
        rows.append({**encoder.describe(), "game": "instance", "adversary": args.adversary, **est.row()})
        summary = est.row()
        params.update(game="instance", adversary=args.adversary)
    elif args.theorem == 3:
        cfg = ts.Theorem3Config.create(n=args.n, trials=args.trials, seed=args.seed)
        report = ts.run_theorem3_adversary(problem, encoder, learner, cfg)
        rows = [{**encoder.describe(), **r} for r in report.rows()]
        summary = report.summary()
        params.update(theorem=3)
    elif args.theorem == 4:
        cfg = ts.Theorem4Config.create(n=args.n, gamma=args.gamma, trials=args.trials,
                                       target_error=args.target_error, seed=args.seed)
        report = ts.run_theorem4_adversary(problem, encoder, learner, cfg)
        rows = [report.row()]
        summary = report.row()
        params.update(theorem=4, gamma=args.gamma, target_error=args.target_error)
    else:
        cfg = ts.Theorem5Config.create(m=args.n, tau=args.tau, trials=args.trials,
                                       target_error=args.target_error, seed=args.seed)
        report = ts.run_theorem5_dichotomy(problem, encoder, learner, cfg)
        rows = [report.row()]
        summary = report.row()
        params.update(theorem=5, tau=args.tau, target_error=args.target_error)

    outputs = {
        "report": str(write_experiment(out / "theory.csv", rows)),
        "summary": str(write_summary(out / "summary.csv", summary)),
    }
    write_manifest(out, "theory", argv, args.seed, params, outputs=outputs)
    return 0


# --- eval ---------------------------------------------------------------------

def cmd_eval(args, argv: Sequence[str]) -> int:
    from tools.metrics import match_reconstructions
    from tools.reporting import write_metric_reports, write_summary

    recovered, _ = load_image_dir(args.recovered)
    originals, names = load_image_dir(args.originals)
    report = match_reconstructions(recovered, originals)
    out = Path(args.out)
    outputs = {
        "metrics": str(write_metric_reports(out / "metrics.csv", {"recovered": report})),
        "summary": str(write_summary(out / "summary.csv", report.summary())),
    }
    log.info(f"Matched {len(recovered)} reconstructions: {report.summary()}")
    write_manifest(out, "eval", argv, None, {"originals_count": len(names)},
                   inputs={"recovered": str(args.recovered), "originals": str(args.originals)}, outputs=outputs)
    return 0


# --- replay -------------------------------------------------------------------

def cmd_replay(args) -> int:
    from tools.parsing_tools import parse_manifest

    path = Path(args.manifest)
    if path.is_dir():
        path = path / MANIFEST_NAME
    manifest = parse_manifest(path)
    if manifest is None:
        raise ConfigError(f"cannot read a run manifest at {path}")
    if manifest.subcommand == "replay" or not manifest.argv:
        raise ConfigError(f"manifest at {path} holds no replayable command")
    log.info(f"Replaying {manifest.subcommand} from {path}")
    return main(manifest.argv)


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: hardware count)")

    parser = argparse.ArgumentParser(prog="instalab", description="Instance-encoding attack laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", parents=[common], help="generate and encode a synthetic dataset")
    gen.add_argument("--num-private", type=int, default=40)
    gen.add_argument("--classes", type=int, default=10)
    gen.add_argument("--shape", type=parse_shape, default=(16, 16, 1), help="HxWxC")
    gen.add_argument("--k", type=int, default=4)
    gen.add_argument("--epochs", type=int, default=30, help="encoding epochs N")
    gen.add_argument("--no-sign-flip", action="store_true")
    gen.add_argument("--release-abs", action="store_true", help="release abs(e) instead of the masked encoding")
    gen.add_argument("--public-pool", type=int, default=200)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True)

    attack = sub.add_parser("attack", parents=[common], help="run the reconstruction pipeline")
    attack.add_argument("--in", dest="input", required=True)
    attack.add_argument("--out", required=True)
    attack.add_argument("--M", type=int, default=None, help="clique growth size (default N/4)")
    attack.add_argument("--baseline-only", action="store_true")
    attack.add_argument("--l1", action="store_true")
    attack.add_argument("--box", choices=["unit", "signed"], default="unit")
    attack.add_argument("--set-scorer", choices=["template", "mean_weight"], default="template")
    attack.add_argument("--reps", type=int, default=4)
    attack.add_argument("--seed", type=int, default=0)

    prng = sub.add_parser("prng-attack", parents=[common], help="recover the encoder seed and invert exactly")
    prng.add_argument("--in", dest="input", required=True)
    prng.add_argument("--out", required=True)
    prng.add_argument("--window", type=int, default=20, help="search 2**window seeds")
    prng.add_argument("--start", type=int, default=0)
    prng.add_argument("--pool", default=None, help="public pool file written by gen")

    theory = sub.add_parser("theory", parents=[common], help="distinguishing-game simulations")
    which = theory.add_mutually_exclusive_group(required=True)
    which.add_argument("--theorem", type=int, choices=[3, 4, 5])
    which.add_argument("--game", choices=["dataset", "instance"])
    theory.add_argument("--encoder", choices=["identity", "noise", "label", "null"], default="identity")
    theory.add_argument("--scale", type=float, default=1.0, help="noise encoder scale")
    theory.add_argument("--adversary", choices=["oracle", "random"], default="oracle")
    theory.add_argument("--dimension", type=int, default=32)
    theory.add_argument("--n", type=int, default=200, help="dataset size")
    theory.add_argument("--trials", type=int, default=2000)
    theory.add_argument("--gamma", type=float, default=0.25)
    theory.add_argument("--tau", type=float, default=0.1)
    theory.add_argument("--target-error", type=float, default=None)
    theory.add_argument("--learner-epochs", type=int, default=10)
    theory.add_argument("--learning-rate", type=float, default=1.0)
    theory.add_argument("--seed", type=int, default=0)
    theory.add_argument("--out", required=True)

    ev = sub.add_parser("eval", parents=[common], help="score reconstructions against originals")
    ev.add_argument("--recovered", required=True)
    ev.add_argument("--originals", required=True)
    ev.add_argument("--out", required=True)

    replay = sub.add_parser("replay", parents=[common], help="re-run the command stored in a manifest")
    replay.add_argument("manifest")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    workers = set_threads(args.threads)

    try:
        if args.command == "gen":
            return cmd_gen(args, argv)
        if args.command == "attack":
            return cmd_attack(args, argv, workers)
        if args.command == "prng-attack":
            return cmd_prng_attack(args, argv, workers)
        if args.command == "theory":
            return cmd_theory(args, argv)
        if args.command == "eval":
            return cmd_eval(args, argv)
        return cmd_replay(args)
    except ConfigError as e:
        parser.print_usage(sys.stderr)
        log.error(f"{args.command}: {e}")
        return 2
    except PipelineStageError as e:
        log.error(f"{args.command}: pipeline stage '{e.stage}' failed: {e.cause}")
        return 1
    except InstaLabError as e:
        log.error(f"{args.command}: {type(e).__name__}: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
