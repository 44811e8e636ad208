#!/usr/bin/env python3
"""End-to-end demo on a generated toy dataset, fully offline.

Builds a small triplet dataset (some records below the coherence-gate
threshold, some above), runs `evaluate` with the stub provider, and leaves the
report, prediction dump, audit log, and response cache in --workdir for
inspection:

    python scripts/demo_stub_pipeline.py --workdir /tmp/oocd-demo
"""

import argparse
import json
import pathlib
import subprocess
import sys

SUBJECTS = ["a marathon", "the harbor", "a protest", "the election", "a rescue",
            "the match", "a storm", "the launch"]


def build_dataset(path: pathlib.Path, n: int) -> None:
    records = []
    for i in range(n):
        subject = SUBJECTS[i % len(SUBJECTS)]
        ooc = i % 2 == 1
        caption1 = f"Photo taken during {subject} downtown on a busy afternoon, item {i}."
        if ooc:
            caption2 = f"Officials deny any link to {SUBJECTS[(i + 3) % len(SUBJECTS)]}, item {i}."
        else:
            caption2 = f"Another view of {subject} downtown that same afternoon, item {i}."
        records.append({
            "id": f"demo-{i:04d}",
            "image_path": f"images/{i}.jpg",
            "caption1": caption1,
            "caption2": caption2,
            "iou_score": 0.12 if i % 7 == 6 else 0.85,
            "label": 1 if ooc else 0,
        })
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n", encoding="utf-8")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--workdir", type=pathlib.Path, default=pathlib.Path("demo-run"))
    parser.add_argument("--n", type=int, default=40)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    args.workdir.mkdir(parents=True, exist_ok=True)
    dataset = args.workdir / "dataset.jsonl"
    build_dataset(dataset, args.n)

    command = [
        sys.executable, "-m", "oocd.cli", "evaluate",
        "--dataset", str(dataset),
        "--provider", "stub",
        "--seed", str(args.seed),
        "--cache-dir", str(args.workdir / "cache"),
        "--report", str(args.workdir / "report.json"),
        "--dump", str(args.workdir / "predictions.jsonl"),
        "--audit-log", str(args.workdir / "audit.jsonl"),
        "--format", "markdown",
    ]
    print("+", " ".join(command))
    subprocess.run(command, check=True)
    print(f"\nartifacts in {args.workdir}/: dataset.jsonl report.json "
          "predictions.jsonl audit.jsonl cache/")


if __name__ == "__main__":
    main()
