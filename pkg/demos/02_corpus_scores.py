"""
Scoring a corpus
================

Structural scores depend on the corpus they are computed in; logical scores do not.
"""
import json
from pathlib import Path

import numpy as np

from cirs.scorer import CorpusStats, score_corpus

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
records = [json.loads(line) for line in (DATA / "tiers.jsonl").read_text().splitlines()]

result = score_corpus(records)
print(len(result.scored), "scored,", len(result.rejected), "rejected")
print(json.dumps(result.stats.to_dict(), indent=1))

# flat arithmetic, single loop or branch, nested multi-function programs
for tier in (1, 2, 3):
    scores = [s.score for rec, s in result.scored if rec["tier"] == tier]
    print(f"tier {tier}: mean {np.mean(scores):.3f}  min {min(scores):.3f}  max {max(scores):.3f}")

# one record, scored inside the corpus and then against frozen stats from a tiny corpus
rec, inside = result.scored[0]
tiny = score_corpus([{"id": "a", "code": "x = 1"}, {"id": "b", "code": "y = [i for i in range(9)]"}]).stats
frozen = score_corpus([rec], stats=CorpusStats.from_dict(tiny.to_dict())).scored[0][1]
print("in corpus", inside.structural, "frozen", frozen.structural, "logical", inside.logical, frozen.logical)

# the scored JSONL line that `cirs score` writes
print(result.scored_lines()[0])
