"""
Synthesis loop with a scripted client
=====================================

Templates from three seed problems, a mock completion stream, syntax gate and dedupe.
"""
import json
from pathlib import Path

from cirs.synth import MockClient, build_template, load_seed_pool, synthesize_corpus

DATA = Path(__file__).resolve().parent.parent / "tests" / "data"
pool = load_seed_pool(json.loads(line) for line in (DATA / "seed_pool.jsonl").read_text().splitlines())

# the prompt sent for one round
print(build_template(pool, seed=1).render())
print()


def reply(question, code):
    # the prompt ends inside an open <question> tag, so replies continue from there
    return f"{question}\n</question>\n<solution>\n{code}\n</solution>"


script = [
    reply("A farmer has 12 cows and buys 5 more. How many cows?", "cows = 12\ncows += 5\nanswer = cows"),
    reply("Half of 30 apples are eaten. How many remain?", "answer = 30 -"),            # invalid
    reply("A farmer has 12 cows and buys 5 more. How many cows?", "answer = 12 + 5"),   # same question
    "Sorry, I can only write one problem at a time.",                                    # no pair
    reply("Sum 1..4?", "total = 0\nfor i in range(1, 5):\n    total += i\nanswer = total"),
    reply("Natalia sold 48 clips...", pool[0].solution),                                 # seed leak
    reply("Each of 3 bags holds 7 marbles. Total?", "answer = 3 * 7"),
]
result = synthesize_corpus(pool, target=3, client=MockClient(script), seed=0, clock=lambda: "2000-01-01T00:00:00Z")
for s in result.samples:
    print(f"{s.status:20s} {s.question[:50]}")
print(json.dumps(result.manifest, indent=1))
