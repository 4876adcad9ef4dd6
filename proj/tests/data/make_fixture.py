# Copyright 2026 The recross Authors
# SPDX-License-Identifier: Apache-2.0
"""Regenerates the small JSON Lines fixture used by the CLI and acceptance tests."""

import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent

SUBJECTS = ["river", "mountain", "castle", "forest", "harbor", "desert", "library", "garden"]
VERBS = ["borders", "overlooks", "hides", "feeds", "shelters", "faces"]
UPSTREAM = {
    "qa_geo": "where is the {s} that {v} the {o} ?",
    "qa_hist": "who built the {s} that {v} the {o} ?",
    "nli_pairs": "premise : the {s} {v} the {o} . hypothesis : the {o} is near",
    "summ_news": "summarize : reports say the {s} {v} the {o} today",
}
TARGETS = {
    "target_yesno": "is it true that the {s} {v} the {o} ?",
    "target_which": "which place {v} the {o} , the {s} or another ?",
    "target_fill": "the {s} {v} the ___ .",
}


def sentence(rng, template):
    s, o = rng.sample(SUBJECTS, 2)
    return template.format(s=s, v=rng.choice(VERBS), o=o), s, o


def main():
    rng = random.Random(20261016)
    upstream, queries, evals = [], [], []
    for task, template in UPSTREAM.items():
        for i in range(20):
            text, s, o = sentence(rng, template)
            upstream.append({"id": f"{task}-{i:03d}", "task": task, "input": text, "output": o if i % 2 else s})
    for task, template in TARGETS.items():
        for i in range(30):
            text, _, _ = sentence(rng, template)
            queries.append({"id": f"{task}-q{i:03d}", "task": task, "input": text, "output": ""})
        for i in range(8):
            text, s, o = sentence(rng, template)
            evals.append({"id": f"{task}-e{i:03d}", "task": task, "input": text, "output": o})
    for name, rows in (("upstream.jsonl", upstream), ("queries.jsonl", queries), ("eval.jsonl", evals)):
        with open(HERE / name, "w", encoding="utf-8") as f:
            for row in rows:
                f.write(json.dumps(row) + "\n")


if __name__ == "__main__":
    main()
