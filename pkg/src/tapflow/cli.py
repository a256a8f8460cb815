"""Command-line frontend: generate, oracle-check, train, eval, parse, serve,
catalog-validate."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dataset as ds
from .catalog import (
    Catalog,
    builtin_demo_catalog,
    catalog_to_dict,
    load_catalog,
    save_catalog,
)
from .engine import oracle_actions, validate_wast
from .errors import ExhaustedSearchError, TapflowError
from .genflow import GenConfig, generate_workflow
from .grammar import builtin_wpg
from .nlgen import TEMPLATE_VERSION, fuse_descriptions
from .parsing import (
    BaselineScorer,
    BaselineScorerModel,
    ParserBundle,
    TrainConfig,
    UniformScorer,
    beam_search,
    evaluate,
    tokenize,
    train_scorer,
)
from .surface import actions_to_text, to_formal_expression

log = logging.getLogger("tapflow")


def _load_catalog_arg(args) -> Catalog:
    mode = getattr(args, "chain_mode", "strict")
    if args.catalog is None:
        return builtin_demo_catalog(mode)
    return load_catalog(args.catalog, mode)


def _add_catalog_flags(p: argparse.ArgumentParser):
    p.add_argument("--catalog", help="catalog JSON file (default: built-in demo catalog)")
    p.add_argument(
        "--chain-mode",
        dest="chain_mode",
        choices=["strict", "kinds"],
        default="strict",
        help="chain licensing: explicit rules only, or data-kind fallback",
    )


def make_records(
    catalog: Catalog,
    count: int,
    base_config: GenConfig,
    id_prefix: str = "wf",
    start_index: int = 0,
) -> list[ds.Example]:
    """Generate records with drafts; exhausted seeds are skipped and logged."""
    grammar = builtin_wpg()
    records: list[ds.Example] = []
    attempt = 0
    while len(records) < count and attempt < max(1, count) * 4:
        seed = base_config.seed + start_index + attempt
        attempt += 1
        config = GenConfig(
            seed=seed,
            max_depth=base_config.max_depth,
            max_branch=base_config.max_branch,
            p_extend=base_config.p_extend,
            p_split=base_config.p_split,
        )
        try:
            w = generate_workflow(catalog, config, grammar)
        except ExhaustedSearchError as exc:
            log.warning("seed %d skipped: %s", seed, exc)
            continue
        actions = oracle_actions(w)
        records.append(
            ds.make_example(
                f"{id_prefix}-{base_config.seed}-{start_index + attempt - 1:05d}",
                w,
                fuse_descriptions(w, catalog),
                actions,
                catalog,
                provenance={
                    "gen": config.to_dict(),
                    "chain_mode": catalog.chain_mode.value,
                    "templates": TEMPLATE_VERSION,
                    "depth": ds.formal_pattern_depth(to_formal_expression(w)),
                },
            )
        )
    if len(records) < count:
        raise ExhaustedSearchError(
            f"only generated {len(records)} of {count} requested records"
        )
    return records


def cmd_generate(args) -> int:
    catalog = _load_catalog_arg(args)
    config = GenConfig(
        seed=args.seed,
        max_depth=args.max_depth,
        max_branch=args.max_branch,
        p_extend=args.p_extend,
        p_split=args.p_split,
    )
    records = make_records(catalog, args.count, config)
    ds.emit_records(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def cmd_oracle_check(args) -> int:
    catalog = _load_catalog_arg(args)
    grammar = builtin_wpg()
    failures = 0
    examples = ds.load_records(args.dataset)
    for e in examples:
        try:
            w = e.replay_wast(catalog, grammar)
            violations = validate_wast(w, catalog)
            if violations:
                raise TapflowError("; ".join(violations))
            rendered = to_formal_expression(w)
            if rendered != e.formal:
                raise TapflowError(f"serializes to {rendered!r}")
            recovered = actions_to_text(oracle_actions(w))
            if list(recovered) != list(e.actions):
                raise TapflowError("oracle sequence differs from stored actions")
            print(f"OK   {e.id} ({len(e.actions)} actions)")
        except TapflowError as exc:
            failures += 1
            print(f"FAIL {e.id}: {exc}")
    print(f"{len(examples) - failures}/{len(examples)} records consistent")
    return 1 if failures else 0


def _auto_split(examples, args):
    if all(e.split is ds.Split.UNASSIGNED for e in examples) and args.auto_split:
        ratios = tuple(float(x) for x in args.auto_split.split(","))
        if len(ratios) != 3:
            raise TapflowError("--auto-split wants three comma-separated ratios")
        return ds.split_dataset(examples, ratios, args.split_seed)
    return examples


def _add_split_flags(p):
    p.add_argument("--auto-split", default="0.8,0.1,0.1",
                   help="train/dev/test ratios applied when records are unassigned")
    p.add_argument("--split-seed", type=int, default=13)
    p.add_argument("--exclude-labels", default="",
                   help="comma list of usefulness labels to drop, e.g. C")


def _filter_labels(examples, args):
    drop = {s.strip() for s in args.exclude_labels.split(",") if s.strip()}
    return [e for e in examples if e.label.value not in drop]


def cmd_train(args) -> int:
    catalog = _load_catalog_arg(args)
    examples = ds.load_records(args.dataset, catalog)
    examples = _filter_labels(_auto_split(examples, args), args)
    train = [e for e in examples if e.split is ds.Split.TRAIN]
    dev = [e for e in examples if e.split is ds.Split.DEV]
    if not train:
        print("error: no training examples", file=sys.stderr)
        return 2
    config = TrainConfig(
        learning_rate=args.lr, epochs=args.epochs, l2=args.l2, seed=args.seed
    )
    model = train_scorer(train, dev, config, builtin_wpg(), catalog, verbose=args.verbose)
    model.save(args.out)
    last_dev = model.dev_history[-1] if model.dev_history else float("nan")
    print(
        f"trained on {len(train)} examples ({args.epochs} epochs); "
        f"final train_ll={model.train_history[-1]:.4f} dev_ll={last_dev:.4f}; "
        f"model -> {args.out}"
    )
    return 0


def _bundle_from_args(args, catalog) -> ParserBundle:
    bundle = ParserBundle(
        grammar=builtin_wpg(),
        catalog=catalog,
        beam_width=args.beam_width,
        allow_synthetic=getattr(args, "allow_synthetic", False),
    )
    scorer_name = getattr(args, "scorer", "model")
    if scorer_name == "oracle":
        bundle.oracle = True
    elif scorer_name == "uniform":
        bundle.scorer = UniformScorer()
    else:
        if not args.model:
            raise TapflowError("--model is required unless --scorer uniform|oracle")
        bundle.scorer = BaselineScorer(BaselineScorerModel.load(args.model), catalog)
    return bundle


def cmd_eval(args) -> int:
    catalog = _load_catalog_arg(args)
    examples = ds.load_records(args.dataset, catalog)
    examples = _filter_labels(_auto_split(examples, args), args)
    wanted = ds.Split(args.split)
    subset = [e for e in examples if e.split is wanted]
    bundle = _bundle_from_args(args, catalog)
    metrics = evaluate(subset, bundle)
    text = json.dumps(metrics.to_dict(), indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    return 0


def cmd_parse(args) -> int:
    catalog = _load_catalog_arg(args)
    if args.scorer == "uniform":
        scorer = UniformScorer()
    else:
        if not args.model:
            raise TapflowError("--model is required unless --scorer uniform")
        scorer = BaselineScorer(BaselineScorerModel.load(args.model), catalog)
    results = beam_search(
        tokenize(args.text), builtin_wpg(), catalog, scorer, args.beam_width
    )
    w, score = results[0]
    print(to_formal_expression(w))
    for line in actions_to_text(oracle_actions(w)):
        print(line)
    print(f"# log_score={score:.4f}", file=sys.stderr)
    return 0


def cmd_serve(args) -> int:
    from .service import AnnotationService

    catalog = _load_catalog_arg(args)
    scorer = None
    if args.model:
        scorer = BaselineScorer(BaselineScorerModel.load(args.model), catalog)
    service = AnnotationService(
        args.dataset, catalog, scorer=scorer, ui_dir=args.ui_dir,
        beam_width=args.beam_width,
    )
    try:
        print(f"serving on http://127.0.0.1:{args.port}/ (ctrl-c to stop)")
        service.serve_forever(args.port)
    finally:
        service.close()
    return 0


def cmd_catalog_validate(args) -> int:
    try:
        catalog = _load_catalog_arg(args)
    except TapflowError as exc:
        print(f"invalid catalog: {exc}", file=sys.stderr)
        return 1
    n_fn = len(catalog.functions())
    n_trig = len(catalog.trigger_functions())
    print(
        f"catalog ok: {len(catalog.channels)} channels, {n_fn} functions "
        f"({n_trig} trigger-capable), {len(catalog.chain_rules)} chain rules"
    )
    if args.dump:
        print(json.dumps(catalog_to_dict(catalog), indent=2))
    return 0


def cmd_catalog_export(args) -> int:
    save_catalog(builtin_demo_catalog(), args.out)
    print(f"wrote demo catalog to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tapflow", description=__doc__)
    p.add_argument("--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a dataset of random workflows")
    _add_catalog_flags(g)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--max-depth", type=int, default=3)
    g.add_argument("--max-branch", type=int, default=3)
    g.add_argument("--p-extend", type=float, default=0.5)
    g.add_argument("--p-split", type=float, default=0.5)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    oc = sub.add_parser("oracle-check", help="verify replay/serialization consistency")
    _add_catalog_flags(oc)
    oc.add_argument("--dataset", required=True)
    oc.set_defaults(func=cmd_oracle_check)

    tr = sub.add_parser("train", help="train the baseline scorer")
    _add_catalog_flags(tr)
    _add_split_flags(tr)
    tr.add_argument("--dataset", required=True)
    tr.add_argument("--out", required=True)
    tr.add_argument("--lr", type=float, default=0.5)
    tr.add_argument("--epochs", type=int, default=200)
    tr.add_argument("--l2", type=float, default=1e-4)
    tr.add_argument("--seed", type=int, default=0)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a parser on a split")
    _add_catalog_flags(ev)
    _add_split_flags(ev)
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--model")
    ev.add_argument("--scorer", choices=["model", "uniform", "oracle"], default="model")
    ev.add_argument("--split", choices=["train", "dev", "test"], default="test")
    ev.add_argument("--beam-width", type=int, default=5)
    ev.add_argument("--allow-synthetic", action="store_true",
                    help="evaluate on unreviewed (template) descriptions")
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_eval)

    pa = sub.add_parser("parse", help="parse one utterance to a formal expression")
    _add_catalog_flags(pa)
    pa.add_argument("--model")
    pa.add_argument("--scorer", choices=["model", "uniform"], default="model")
    pa.add_argument("--beam-width", type=int, default=5)
    pa.add_argument("--text", required=True)
    pa.set_defaults(func=cmd_parse)

    sv = sub.add_parser("serve", help="run the annotation HTTP service")
    _add_catalog_flags(sv)
    sv.add_argument("--dataset", required=True)
    sv.add_argument("--port", type=int, default=8765)
    sv.add_argument("--model")
    sv.add_argument("--beam-width", type=int, default=5)
    sv.add_argument("--ui-dir", help="directory of built UI assets to serve at /")
    sv.set_defaults(func=cmd_serve)

    cv = sub.add_parser("catalog-validate", help="validate a catalog file")
    _add_catalog_flags(cv)
    cv.add_argument("--dump", action="store_true")
    cv.set_defaults(func=cmd_catalog_validate)

    ce = sub.add_parser("catalog-export", help="write the built-in demo catalog")
    ce.add_argument("--out", required=True)
    ce.set_defaults(func=cmd_catalog_export)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except TapflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
