"""Synthetic buggy/fixed testbed used by the demos and the end-to-end check.

Twenty small Java methods are generated from templates; each gets a fixed
(control) and a buggy (treatment) variant differing by one mutated operator.
Next-token probabilities are simulated so that longer methods are predicted
worse (a length confounder) while the bug itself has only a small effect.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .covariates import lex_java
from .ingest import PredictionRecord, Testbed, dump_prediction_log
from .taxonomy import Taxonomy, default_taxonomy, map_sequence

_TEMPLATES = [
    """public int {name}(int[] values) {{
    int total = 0;
    for (int i = 0; i < values.length; i++) {{
        total += values[i] * {k};
    }}
    return total;
}}""",
    """public boolean {name}(String text) {{
    if (text == null || text.length() < {k}) {{
        return false;
    }}
    return text.startsWith("{word}");
}}""",
    """public int {name}(int a, int b) {{
    int best = a;
    if (b > best) {{
        best = b;
    }}
    return best + {k};
}}""",
    """public String {name}(List<String> items) {{
    StringBuilder sb = new StringBuilder();
    for (String item : items) {{
        if (item != null) {{
            sb.append(item).append(",");
        }}
    }}
    return sb.toString();
}}""",
    """public double {name}(double[] xs) {{
    double sum = 0;
    int count = 0;
    while (count < xs.length) {{
        sum += xs[count];
        count++;
    }}
    return count == 0 ? 0 : sum / count;
}}""",
    """private static int {name}(int n) {{
    try {{
        int result = n / {k};
        return result;
    }} catch (ArithmeticException e) {{
        LOG.warn("{word}", e);
        return -1;
    }}
}}""",
    """public int {name}(Map<String, Integer> counts, String key) {{
    Integer value = counts.get(key);
    if (value != null && value > {k}) {{
        return value;
    }}
    return 0;
}}""",
    """public void {name}(List<Integer> xs) {{
    xs.removeIf(x -> x < {k});
    xs.sort((a, b) -> a - b);
}}""",
    """public int {name}(int code) {{
    switch (code) {{
        case {k}:
            return 1;
        case 0:
            return 2;
        default:
            return -1;
    }}
}}""",
    """protected long {name}(long seed) {{
    long x = seed;
    for (int round = 0; round < {k}; round++) {{
        x = x * 31 + round;
        if (x > 1000000) {{
            x = x % 1000;
        }}
    }}
    return x;
}}""",
]

_NAMES = ["compute", "check", "pick", "join", "average", "divide", "lookup", "prune", "decode", "mix"]
_WORDS = ["abc", "key", "value", "item", "node"]

# operator mutations applied to the first occurrence found
_MUTATIONS = [
    (" < ", " <= "),
    (" > ", " >= "),
    (" != ", " == "),
    (" + ", " - "),
    (" == ", " != "),
    (" * ", " / "),
    ("return -1;", "return 1;"),
]

# baseline logit of the ground-truth token per category
_CATEGORY_LOGIT = {
    "blocks": 2.4,
    "exceptions": 1.6,
    "oop": 1.2,
    "tests": 0.5,
    "declarations": 1.9,
    "conditionals": 1.4,
    "loops": 1.5,
    "operators": 0.9,
    "datatype": 1.3,
    "extraTokens": 1.7,
}
_UNMAPPED_LOGIT = -0.4


def _mutate(source: str) -> str:
    for old, new in _MUTATIONS:
        if old in source:
            return source.replace(old, new, 1)
    raise ValueError("no mutable operator in template")


def _surface_tokens(source: str) -> list[str]:
    return [t.text for t in lex_java(source) if t.kind != "comment"]


def _ntp(tokens, taxonomy: Taxonomy, rng, buggy: bool, bug_effect: float) -> list[float]:
    cats = map_sequence(taxonomy, tokens)
    length_penalty = 0.012 * len(tokens)
    probs = []
    for cat in cats:
        logit = _CATEGORY_LOGIT.get(cat, _UNMAPPED_LOGIT) - length_penalty
        if buggy:
            logit -= bug_effect
        logit += rng.normal(0, 0.1)
        probs.append(round(1.0 / (1.0 + math.exp(-logit)), 6))
    return probs


def make_toy_testbed(seed: int = 0, n_pairs: int = 20, bug_effect: float = 0.02) -> Testbed:
    taxonomy = default_taxonomy()
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_pairs):
        template = _TEMPLATES[i % len(_TEMPLATES)]
        fixed = template.format(
            name=f"{_NAMES[i % len(_NAMES)]}{i}", k=int(rng.integers(1, 9)), word=_WORDS[i % len(_WORDS)]
        )
        if i >= len(_TEMPLATES):
            # second pass: pad with a logging line so method length varies
            fixed = fixed.replace("{\n", "{\n    LOG.debug(\"enter\");\n", 1)
        buggy = _mutate(fixed)
        pair_id = f"m{i:02d}"
        for arm, source in (("control", fixed), ("treatment", buggy)):
            tokens = _surface_tokens(source)
            ntp = _ntp(tokens, taxonomy, rng, arm == "treatment", bug_effect)
            suffix = "fixed" if arm == "control" else "buggy"
            records.append(
                PredictionRecord(f"{pair_id}-{suffix}", pair_id, tuple(tokens), tuple(ntp), arm=arm, source=source)
            )
    return Testbed(tuple(records), "binary", "toy-buggy")


def make_clone_testbed(seed: int = 0, n_pairs: int = 24, dose_effect: float = 0.01) -> Testbed:
    """Clone pairs: the second sibling renames identifiers, so its edit distance varies.

    The sibling's NTP logits drop by ``dose_effect`` per renamed character; no
    ``dose`` is stored, it is derived from the sources by edit distance.
    """
    taxonomy = default_taxonomy()
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n_pairs):
        template = _TEMPLATES[i % len(_TEMPLATES)]
        name = f"{_NAMES[i % len(_NAMES)]}{i}"
        k = int(rng.integers(1, 9))
        original = template.format(name=name, k=k, word=_WORDS[i % len(_WORDS)])
        suffix = "X" * int(rng.integers(0, 12))
        clone = template.format(name=name + suffix, k=k, word=_WORDS[(i + 1) % len(_WORDS)])
        pair_id = f"c{i:02d}"
        for tag, source, shift in (("a", original, 0.0), ("b", clone, dose_effect * len(suffix))):
            tokens = _surface_tokens(source)
            ntp = _ntp(tokens, taxonomy, rng, True, shift)
            records.append(PredictionRecord(f"{pair_id}-{tag}", pair_id, tuple(tokens), tuple(ntp), source=source))
    return Testbed(tuple(records), "continuous", "toy-clones")


TOY_SCM = {"treatment": "buggy", "outcome": "cross_entropy", "covariates": ["subwords", "mccabe"]}


def write_toy_files(directory) -> tuple[str, str]:
    """Write ``toy_testbed.jsonl`` and ``toy_scm.json`` into ``directory``."""
    import os

    os.makedirs(directory, exist_ok=True)
    testbed_path = os.path.join(directory, "toy_testbed.jsonl")
    scm_path = os.path.join(directory, "toy_scm.json")
    with open(testbed_path, "w", encoding="utf-8") as fh:
        fh.write(dump_prediction_log(make_toy_testbed()))
    with open(scm_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(TOY_SCM, indent=2) + "\n")
    return testbed_path, scm_path
