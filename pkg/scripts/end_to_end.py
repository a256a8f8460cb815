#!/usr/bin/env python3
"""Full pipeline demo: generate a dataset, split, train the baseline scorer,
evaluate on the held-out split, and parse one utterance.

Writes everything under ./runs/e2e/ (dataset, model, metrics).
"""

import argparse
import json
from pathlib import Path

from tapflow.catalog import builtin_demo_catalog
from tapflow.cli import make_records
from tapflow.dataset import Split, emit_records, split_dataset
from tapflow.engine import oracle_actions
from tapflow.genflow import GenConfig
from tapflow.grammar import builtin_wpg
from tapflow.parsing import (
    BaselineScorer,
    ParserBundle,
    TrainConfig,
    beam_search,
    evaluate,
    tokenize,
    train_scorer,
)
from tapflow.surface import to_formal_expression


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--seed", type=int, default=101)
    ap.add_argument("--epochs", type=int, default=300)
    ap.add_argument("--out-dir", default="runs/e2e")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalog = builtin_demo_catalog()
    grammar = builtin_wpg()

    records = make_records(catalog, args.count, GenConfig(seed=args.seed))
    records = split_dataset(records, (0.8, 0.1, 0.1), seed=13)
    emit_records(records, out / "dataset.jsonl")
    train = [e for e in records if e.split is Split.TRAIN]
    dev = [e for e in records if e.split is Split.DEV]
    test = [e for e in records if e.split is Split.TEST]
    print(f"dataset: {len(train)} train / {len(dev)} dev / {len(test)} test")

    model = train_scorer(
        train, dev, TrainConfig(learning_rate=0.5, epochs=args.epochs, l2=1e-5),
        grammar, catalog,
    )
    model.save(out / "model.json")
    print(f"train_ll={model.train_history[-1]:.4f} dev_ll={model.dev_history[-1]:.4f}")

    scorer = BaselineScorer(model, catalog)
    metrics = evaluate(
        test, ParserBundle(grammar, catalog, scorer=scorer, beam_width=5,
                           allow_synthetic=True)
    )
    (out / "metrics.json").write_text(json.dumps(metrics.to_dict(), indent=2))
    print(json.dumps(metrics.to_dict(), indent=2))

    utterance = test[0].nl
    print(f"\nparse demo: {utterance!r}")
    top, score = beam_search(tokenize(utterance), grammar, catalog, scorer, 5)[0]
    print(f"  -> {to_formal_expression(top)}  (log_score={score:.3f})")
    for a in oracle_actions(top):
        print(f"     {a.text}")


if __name__ == "__main__":
    main()
