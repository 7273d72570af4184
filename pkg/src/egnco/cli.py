"""Command-line surface: dataset generation, training, evaluation,
fine-tuned evaluation, greedy baselines, exact-oracle annotation, and
training-dynamics export.

All randomness flows from explicit --seed flags; re-running a command with
the same arguments reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from typing import List, Optional, Sequence, Tuple

from .generators import RB_PRESETS, RbParams, RrgParams, gen_er, gen_rb, gen_rrg
from .gin import FeatureInit, GinConfig, default_config
from .graph import Graph
from .harness import (
    EvalInstance,
    PROTOCOL_TRIALS,
    evaluate,
    format_summary,
    run_baseline,
    write_csv,
)
from .heuristics import dga_mis, greedy_mvc, toenshoff_greedy_mc
from .io import (
    ManifestEntry,
    load_checkpoint,
    load_graph,
    load_manifest,
    save_checkpoint,
    save_graph,
    save_manifest,
)
from .problems import exact_optimum, problem
from .training import TrainConfig, TrainInstance, train_egn, train_meta_egn

FEATURE_CHOICES = ("seed", "dga", "rga")
_SCHEME = {
    "seed": "single_node_seed",
    "dga": "greedy_dga",
    "rga": "greedy_rga",
}


def _split_counts(total: int, ratio: str) -> Tuple[int, int, int]:
    parts = [int(p) for p in ratio.split(":")]
    if len(parts) != 3 or min(parts) < 0 or sum(parts) == 0:
        raise ValueError(f"bad split ratio {ratio!r}, expected like 8:1:1")
    denom = sum(parts)
    n_train = total * parts[0] // denom
    n_val = total * parts[1] // denom
    return n_train, n_val, total - n_train - n_val


def cmd_generate(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    graphs: List[Graph] = []
    for i in range(args.count):
        seed = args.seed + i
        if args.family == "rrg":
            graphs.append(gen_rrg(RrgParams(n=args.n, d=args.degree, seed=seed)))
        elif args.family == "er":
            graphs.append(gen_er(args.n, args.p, seed=seed))
        else:
            if args.preset:
                groups, group_size = RB_PRESETS[args.preset]
            else:
                groups, group_size = args.groups, args.group_size
            graphs.append(
                gen_rb(RbParams(groups=groups, group_size=group_size,
                                rho=args.rho, seed=seed))
            )
    n_train, n_val, n_test = _split_counts(args.count, args.split_ratio)
    entries = []
    for i, g in enumerate(graphs):
        name = f"{args.family}_{i:04d}.graph"
        save_graph(g, os.path.join(args.out, name))
        split = "train" if i < n_train else ("val" if i < n_train + n_val else "test")
        ref = None
        kind = None
        if args.bound_ref and args.family == "rb":
            groups = RB_PRESETS[args.preset][0] if args.preset else args.groups
            if args.bound_ref == "mis":
                ref = float(groups)
            else:  # mvc
                ref = float(g.n - groups)
            kind = "bound"
        entries.append(ManifestEntry(name, split, ref, kind))
    save_manifest(entries, os.path.join(args.out, "manifest.txt"))
    print(f"wrote {len(graphs)} instances to {args.out}")
    return 0


def _load_dataset(directory: str):
    manifest = os.path.join(directory, "manifest.txt")
    entries = load_manifest(manifest)
    loaded = []
    for e in entries:
        g = load_graph(os.path.join(directory, e.filename))
        loaded.append((e, g))
    return loaded


def cmd_oracle(args) -> int:
    spec = problem(args.problem)
    loaded = _load_dataset(args.dataset)
    new_entries = []
    annotated = 0
    skipped = 0
    for e, g in loaded:
        if g.n <= 26:
            value, _ = exact_optimum(spec, g)
            new_entries.append(ManifestEntry(e.filename, e.split, float(value), "exact"))
            annotated += 1
        else:
            new_entries.append(e)
            skipped += 1
    save_manifest(new_entries, os.path.join(args.dataset, "manifest.txt"))
    print(f"annotated {annotated} instances with exact optima"
          + (f", skipped {skipped} larger than 26 nodes" if skipped else ""))
    return 0


def _train_feature(g: Graph, feature: str, kind: str) -> Optional[FeatureInit]:
    if feature == "seed":
        return None  # fresh random seed node per visit
    if feature == "constant":
        return FeatureInit.constant()
    if feature == "rga":
        raise ValueError("training uses deterministic features; choose seed or dga")
    greedy = {"mis": dga_mis, "mvc": greedy_mvc, "mc": toenshoff_greedy_mc}[kind]
    return FeatureInit.greedy_solution(greedy(g))


def _gin_config(args, kind: str) -> GinConfig:
    kwargs = dict(hidden_dim=args.hidden_dim, mlp_depth=args.mlp_depth)
    if args.layers is not None:
        return GinConfig(layers=args.layers, **kwargs)
    return default_config(kind, **kwargs)


def _write_dynamics(history, path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["iteration", "train_loss_pre_adapt", "train_loss_post_adapt",
             "val_loss", "val_apr"]
        )
        for row in history:
            writer.writerow([
                row.iteration,
                f"{row.train_loss_pre_adapt:.17g}",
                f"{row.train_loss_post_adapt:.17g}",
                "" if row.val_loss is None else f"{row.val_loss:.17g}",
                "" if row.val_apr is None else f"{row.val_apr:.17g}",
            ])


def _run_training(args) -> Tuple:
    spec = problem(args.problem, args.beta)
    loaded = _load_dataset(args.dataset)
    train_inst = [
        TrainInstance(g, _train_feature(g, args.feature, spec.kind), e.reference)
        for e, g in loaded if e.split == "train"
    ]
    val_inst = [
        TrainInstance(g, _train_feature(g, args.feature, spec.kind), e.reference)
        for e, g in loaded if e.split == "val"
    ]
    cfg = TrainConfig(
        max_iters=args.iters,
        inner_lr=args.alpha,
        outer_lr=args.lr,
        batch_size=args.batch_size,
        optimizer=args.optimizer,
        meta_mode=args.meta_mode,
        eval_every=args.eval_every,
        seed=args.seed,
    )
    trainer = train_meta_egn if args.method == "meta-egn" else train_egn
    state = trainer(
        train_inst, spec, cfg, gin_config=_gin_config(args, spec.kind), val=val_inst
    )
    return state, spec


def cmd_train(args) -> int:
    state, _ = _run_training(args)
    save_checkpoint(state.best_params, args.out)
    print(f"trained {args.method} for {state.iteration} steps -> {args.out}")
    if args.dynamics:
        _write_dynamics(state.history, args.dynamics)
        print(f"dynamics -> {args.dynamics}")
    return 0


def cmd_dynamics(args) -> int:
    state, _ = _run_training(args)
    _write_dynamics(state.history, args.csv)
    print(f"dynamics -> {args.csv}")
    return 0


def _eval_instances(args) -> List[EvalInstance]:
    loaded = _load_dataset(args.dataset)
    wanted = args.split
    out = [
        EvalInstance(e.filename, g, e.reference, e.ref_kind)
        for e, g in loaded if wanted == "all" or e.split == wanted
    ]
    if not out:
        raise ValueError(f"no instances with split {wanted!r} in {args.dataset}")
    return out


def cmd_evaluate(args) -> int:
    spec = problem(args.problem, args.beta)
    params = load_checkpoint(args.model)
    instances = _eval_instances(args)
    records = evaluate(
        params,
        instances,
        spec,
        args.protocol,
        feature_scheme=_SCHEME[args.feature],
        seed=args.seed,
        alpha=args.alpha,
        finetune_steps=args.finetune_steps,
        fallback=not args.no_fallback,
        method=args.method_name,
        require_reference=not args.allow_missing_ref,
    )
    write_csv(records, args.csv)
    print(f"{args.protocol}: {format_summary(records)} -> {args.csv}")
    return 0


def cmd_finetune(args) -> int:
    args.protocol = "finetune"
    return cmd_evaluate(args)


def cmd_baseline(args) -> int:
    spec = problem(args.problem, args.beta)
    instances = _eval_instances(args)
    records = run_baseline(instances, spec, args.method, seed=args.seed)
    write_csv(records, args.csv)
    print(f"baseline {args.method}: {format_summary(records)} -> {args.csv}")
    return 0


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--problem", required=True, choices=("mc", "mvc", "mis"))
    p.add_argument("--method", default="meta-egn", choices=("egn", "meta-egn"))
    p.add_argument("--feature", default="seed", choices=("seed", "dga", "constant"))
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=None, help="outer learning rate")
    p.add_argument("--alpha", type=float, default=5e-5, help="inner learning rate")
    p.add_argument("--beta", type=float, default=None, help="penalty coefficient")
    p.add_argument("--optimizer", default="adam", choices=("adam", "sgd"))
    p.add_argument("--meta-mode", default="exact", choices=("exact", "first_order"))
    p.add_argument("--eval-every", type=int, default=50)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--hidden-dim", type=int, default=64)
    p.add_argument("--mlp-depth", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)


def _add_eval_args(p: argparse.ArgumentParser, with_protocol: bool) -> None:
    p.add_argument("--model", required=True, help="checkpoint file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--problem", required=True, choices=("mc", "mvc", "mis"))
    p.add_argument("--split", default="test", choices=("train", "val", "test", "all"))
    if with_protocol:
        p.add_argument(
            "--protocol", default="accurate", choices=tuple(PROTOCOL_TRIALS)
        )
    p.add_argument("--feature", default="seed", choices=FEATURE_CHOICES)
    p.add_argument("--csv", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=5e-5)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--finetune-steps", type=int, default=1)
    p.add_argument("--no-fallback", action="store_true",
                   help="report the raw model solution even when its greedy "
                        "feature input scores better")
    p.add_argument("--allow-missing-ref", action="store_true",
                   help="leave ApR blank instead of failing when an instance "
                        "has no reference optimum")
    p.add_argument("--method-name", default="model",
                   help="method label written to the CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="egnco",
        description="Neural combinatorial optimization via penalty relaxation "
                    "and rounding, with meta-trained fine-tuning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset")
    p.add_argument("--family", required=True, choices=("rb", "rrg", "er"))
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-ratio", default="8:1:1")
    p.add_argument("--n", type=int, default=100, help="nodes (rrg/er)")
    p.add_argument("--degree", type=int, default=3, help="degree (rrg)")
    p.add_argument("--p", type=float, default=0.3, help="edge probability (er)")
    p.add_argument("--groups", type=int, default=20, help="cliques (rb)")
    p.add_argument("--group-size", type=int, default=10, help="clique size (rb)")
    p.add_argument("--rho", type=float, default=0.25, help="rb tightness")
    p.add_argument("--preset", choices=tuple(RB_PRESETS),
                   help="named rb sizing (overrides --groups/--group-size)")
    p.add_argument("--bound-ref", choices=("mis", "mvc"),
                   help="write rb construction bounds as references")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("oracle", help="annotate small instances with exact optima")
    p.add_argument("--dataset", required=True)
    p.add_argument("--problem", required=True, choices=("mc", "mvc", "mis"))
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("train", help="train EGN or Meta-EGN")
    _add_train_args(p)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--dynamics", default=None, help="optional dynamics CSV")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("dynamics", help="train and export the dynamics CSV")
    _add_train_args(p)
    p.add_argument("--csv", required=True)
    p.set_defaults(func=cmd_dynamics)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint")
    _add_eval_args(p, with_protocol=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("finetune", help="evaluate with one-step fine-tuning")
    _add_eval_args(p, with_protocol=False)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("baseline", help="run a greedy baseline")
    p.add_argument("--dataset", required=True)
    p.add_argument("--problem", required=True, choices=("mc", "mvc", "mis"))
    p.add_argument("--method", required=True,
                   choices=("rga", "dga", "greedy", "toenshoff"))
    p.add_argument("--split", default="test", choices=("train", "val", "test", "all"))
    p.add_argument("--csv", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=float, default=None)
    p.set_defaults(func=cmd_baseline)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
