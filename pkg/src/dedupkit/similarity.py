"""String similarity functions.

Every function maps two strings to a float in ``[0, 1]`` where 1 means an
exact match. Inputs are compared code point by code point; no case folding
or trimming happens here (that belongs to ingestion).
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping

from .errors import ParamError

Scorer = Callable[[str, str], float]


@dataclass(frozen=True)
class SmithWatermanParams:
    match_score: int = 1
    mismatch_penalty: int = -1
    gap_penalty: int = -1

    def __post_init__(self):
        for name in ("match_score", "mismatch_penalty", "gap_penalty"):
            if isinstance(getattr(self, name), bool) or not isinstance(getattr(self, name), int):
                raise ParamError(f"{name} must be an integer")
        if self.match_score <= 0:
            raise ParamError("match_score must be positive")
        if self.mismatch_penalty > 0 or self.gap_penalty > 0:
            raise ParamError("mismatch_penalty and gap_penalty must be <= 0")


def jaro(a: str, b: str) -> float:
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if not la or not lb:
        return 0.0
    # canonical argument order makes symmetry hold bit for bit
    if (la, a) > (lb, b):
        a, b, la, lb = b, a, lb, la
    window = max(max(la, lb) // 2 - 1, 0)
    b_used = [False] * lb
    a_seq = []
    for i, ch in enumerate(a):
        for j in range(max(0, i - window), min(lb, i + window + 1)):
            if not b_used[j] and b[j] == ch:
                b_used[j] = True
                a_seq.append(ch)
                break
    m = len(a_seq)
    if m == 0:
        return 0.0
    b_seq = [b[j] for j in range(lb) if b_used[j]]
    half_transpositions = sum(x != y for x, y in zip(a_seq, b_seq)) / 2
    return (m / la + m / lb + (m - half_transpositions) / m) / 3


def _check_prefix(prefix_weight: float, max_prefix: int) -> None:
    if not 0.0 <= prefix_weight <= 0.25:
        raise ParamError(f"prefix_weight must lie in [0, 0.25], got {prefix_weight}")
    if max_prefix < 0 or prefix_weight * max_prefix > 1.0:
        raise ParamError(f"max_prefix {max_prefix} incompatible with prefix_weight {prefix_weight}")


def jaro_winkler(a: str, b: str, prefix_weight: float = 0.1, max_prefix: int = 4) -> float:
    """Jaro score boosted by the length of the common prefix (capped)."""
    _check_prefix(prefix_weight, max_prefix)
    j = jaro(a, b)
    prefix = 0
    for x, y in zip(a, b):
        if x != y or prefix == max_prefix:
            break
        prefix += 1
    return min(1.0, j + prefix * prefix_weight * (1.0 - j))


def _padded_grams(s: str, n: int) -> Counter:
    # None cannot be a character, so it is a safe padding sentinel.
    padded = (None,) * (n - 1) + tuple(s)
    return Counter(padded[i:i + n] for i in range(len(s)))


def ngram(a: str, b: str, n: int = 2) -> float:
    """Dice coefficient over left-padded character n-gram multisets."""
    if n not in (2, 3, 4):
        raise ParamError(f"n must be 2, 3 or 4, got {n}")
    if a == b:
        return 1.0
    ga, gb = _padded_grams(a, n), _padded_grams(b, n)
    total = len(a) + len(b)  # one gram per character after padding
    return 2.0 * sum((ga & gb).values()) / total


def smith_waterman(a: str, b: str, params: SmithWatermanParams | None = None) -> float:
    """Best local alignment score divided by its attainable maximum."""
    p = params or SmithWatermanParams()
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if not la or not lb:
        return 0.0
    match, mismatch, gap = p.match_score, p.mismatch_penalty, p.gap_penalty
    prev = [0] * (lb + 1)
    best = 0
    for ca in a:
        cur = [0] * (lb + 1)
        for j in range(1, lb + 1):
            v = prev[j - 1] + (match if ca == b[j - 1] else mismatch)
            up = prev[j] + gap
            if up > v:
                v = up
            left = cur[j - 1] + gap
            if left > v:
                v = left
            if v > 0:
                cur[j] = v
                if v > best:
                    best = v
        prev = cur
    return best / (match * min(la, lb))


def levenshtein_distance(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def osa_distance(a: str, b: str) -> int:
    """Optimal string alignment (restricted Damerau-Levenshtein) distance."""
    lb = len(b)
    before = None
    prev = list(range(lb + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            d = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
            if i > 1 and j > 1 and ca == b[j - 2] and a[i - 2] == cb and ca != cb:
                d = min(d, before[j - 2] + 1)
            cur.append(d)
        before, prev = prev, cur
    return prev[-1]


def _normalised(distance: int, a: str, b: str) -> float:
    longest = max(len(a), len(b))
    return 1.0 if longest == 0 else 1.0 - distance / longest


def levenshtein(a: str, b: str) -> float:
    if a == b:
        return 1.0
    return _normalised(levenshtein_distance(a, b), a, b)


def damerau_levenshtein(a: str, b: str) -> float:
    if a == b:
        return 1.0
    return _normalised(osa_distance(a, b), a, b)


def longest_common_substring_length(a: str, b: str) -> int:
    best = 0
    prev = [0] * (len(b) + 1)
    for ca in a:
        cur = [0] * (len(b) + 1)
        for j, cb in enumerate(b, 1):
            if ca == cb:
                v = cur[j] = prev[j - 1] + 1
                if v > best:
                    best = v
        prev = cur
    return best


def longest_common_substring(a: str, b: str) -> float:
    if a == b:
        return 1.0
    return longest_common_substring_length(a, b) / max(len(a), len(b))


def binary(a: str, b: str) -> float:
    return 1.0 if a == b else 0.0


ATOMIC_METRICS: dict[str, Callable[..., float]] = {
    "jaro": jaro,
    "jaro_winkler": jaro_winkler,
    "ngram": ngram,
    "smith_waterman": smith_waterman,
    "levenshtein": levenshtein,
    "damerau_levenshtein": damerau_levenshtein,
    "longest_common_substring": longest_common_substring,
    "binary": binary,
}


@lru_cache(maxsize=1 << 18)
def _cached_token_score(inner: str, params_key: tuple, u: str, v: str) -> float:
    return make_scorer(inner, dict(params_key))(u, v)


@lru_cache(maxsize=None)
def _validate_inner(inner: str, params_key: tuple) -> None:
    make_scorer(inner, dict(params_key))


def monge_elkan(
    a: str,
    b: str,
    inner: str = "levenshtein",
    inner_params: Mapping | None = None,
) -> float:
    """Symmetrised Monge-Elkan over whitespace tokens.

    Each token of one string is paired with its best-scoring token of the
    other under ``inner``; the two directed means are averaged.
    """
    if inner not in ATOMIC_METRICS:
        raise ParamError(f"unknown inner metric {inner!r}")
    key = tuple(sorted((inner_params or {}).items()))
    _validate_inner(inner, key)
    ta, tb = a.split(), b.split()
    if not ta and not tb:
        return 1.0
    if not ta or not tb:
        return 0.0
    grid = [[_cached_token_score(inner, key, u, v) for v in tb] for u in ta]
    forward = sum(max(row) for row in grid) / len(ta)
    backward = sum(max(col) for col in zip(*grid)) / len(tb)
    return (forward + backward) / 2


METRIC_NAMES = tuple(ATOMIC_METRICS) + ("monge_elkan",)


def make_scorer(metric: str, params: Mapping | None = None) -> Scorer:
    """Resolve a metric name and its parameters into a two-argument scorer.

    Parameters are validated here, once, so the returned callable can be
    applied to many pairs cheaply.
    """
    params = dict(params or {})
    try:
        if metric == "jaro_winkler":
            pw = params.pop("prefix_weight", 0.1)
            mp = params.pop("max_prefix", 4)
            _check_prefix(pw, mp)
            scorer = lambda a, b: jaro_winkler(a, b, pw, mp)  # noqa: E731
        elif metric == "ngram":
            n = params.pop("n", 2)
            if n not in (2, 3, 4):
                raise ParamError(f"n must be 2, 3 or 4, got {n}")
            scorer = lambda a, b: ngram(a, b, n)  # noqa: E731
        elif metric == "smith_waterman":
            sw = SmithWatermanParams(**params)
            params = {}
            scorer = lambda a, b: smith_waterman(a, b, sw)  # noqa: E731
        elif metric == "monge_elkan":
            inner = params.pop("inner", "levenshtein")
            inner_params = params.pop("inner_params", {})
            if inner not in ATOMIC_METRICS:
                raise ParamError(f"unknown inner metric {inner!r}")
            make_scorer(inner, inner_params)
            scorer = lambda a, b: monge_elkan(a, b, inner, inner_params)  # noqa: E731
        elif metric in ATOMIC_METRICS:
            scorer = ATOMIC_METRICS[metric]
        else:
            raise ParamError(f"unknown metric {metric!r}")
    except TypeError as exc:
        raise ParamError(str(exc)) from exc
    if params:
        raise ParamError(f"unexpected parameters for {metric}: {sorted(params)}")
    return scorer


def similarity(metric: str, a: str, b: str, params: Mapping | None = None) -> float:
    return make_scorer(metric, params)(a, b)
