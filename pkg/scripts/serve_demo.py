#!/usr/bin/env python3
"""Spin up the annotation service on a fresh demo dataset.

Generates a few workflows, optionally trains a quick model for the parse
preview, and serves the UI (if built) at http://127.0.0.1:<port>/.
"""

import argparse
from pathlib import Path

from tapflow.catalog import builtin_demo_catalog
from tapflow.cli import make_records
from tapflow.dataset import Split, emit_records, split_dataset
from tapflow.genflow import GenConfig
from tapflow.grammar import builtin_wpg
from tapflow.parsing import BaselineScorer, TrainConfig, train_scorer
from tapflow.service import AnnotationService


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=20)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--port", type=int, default=8765)
    ap.add_argument("--out-dir", default="runs/annotate")
    ap.add_argument("--no-model", action="store_true",
                    help="skip training; parse preview uses the uniform scorer")
    ap.add_argument("--ui-dir", default="frontend/dist")
    args = ap.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalog = builtin_demo_catalog()
    dataset = out / "tasks.jsonl"
    if not dataset.exists():
        emit_records(make_records(catalog, args.count, GenConfig(seed=args.seed)), dataset)
        print(f"wrote {args.count} tasks to {dataset}")

    scorer = None
    if not args.no_model:
        records = split_dataset(
            make_records(catalog, 400, GenConfig(seed=args.seed + 1)),
            (0.9, 0.1, 0.0), seed=13,
        )
        train = [e for e in records if e.split is Split.TRAIN]
        dev = [e for e in records if e.split is Split.DEV]
        model = train_scorer(
            train, dev, TrainConfig(learning_rate=0.5, epochs=300, l2=1e-5),
            builtin_wpg(), catalog,
        )
        scorer = BaselineScorer(model, catalog)
        print(f"trained preview model (dev_ll={model.dev_history[-1]:.4f})")

    ui = Path(args.ui_dir)
    service = AnnotationService(
        dataset, catalog, scorer=scorer, ui_dir=ui if ui.is_dir() else None
    )
    try:
        print(f"serving on http://127.0.0.1:{args.port}/ (ctrl-c to stop)")
        service.serve_forever(args.port)
    finally:
        service.close()


if __name__ == "__main__":
    main()
