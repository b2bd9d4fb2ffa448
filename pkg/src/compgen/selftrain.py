"""Threshold-gated self-training over external generator and scorer services.

Each iteration asks for a retrain on the current labeled set, generates
pseudo-responses for the remaining unlabeled inputs, scores them, and moves
every input whose response scores at or above the threshold into the labeled
set.  State is persisted per iteration so an interrupted run resumes where it
stopped.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

from compgen.corpus import atomic_write_text, read_jsonl, write_json, write_jsonl

__all__ = [
    "SelfTrainConfig",
    "LabeledPair",
    "UnlabeledItem",
    "Candidate",
    "IterationStats",
    "GeneratorClient",
    "ScorerClient",
    "HttpGenerator",
    "HttpScorer",
    "MockGenerator",
    "OracleScorer",
    "SelfTrainError",
    "GeneratorUnavailable",
    "ScorerUnavailable",
    "MisalignedResponse",
    "RetrainTimeout",
    "generate_pseudo",
    "select",
    "run_self_training",
    "load_state",
    "audit_report",
    "format_report",
]

log = logging.getLogger(__name__)


class SelfTrainError(RuntimeError):
    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)


class GeneratorUnavailable(SelfTrainError):
    pass


class ScorerUnavailable(SelfTrainError):
    pass


class MisalignedResponse(SelfTrainError):
    def __init__(self, expected: int, got: int):
        self.expected, self.got = expected, got
        super().__init__(f"expected {expected} outputs, got {got}")


class RetrainTimeout(SelfTrainError):
    pass


@dataclass
class SelfTrainConfig:
    iterations: int = 3
    score_threshold: float = 0.99
    generator_url: str | None = None
    scorer_url: str | None = None
    batch_size: int = 64
    parallelism: int = 4
    seed: int = 0
    vanilla: bool = False
    retrain_timeout: float = 0.0  # seconds to wait for a new generator version; 0 = don't wait
    poll_interval: float = 5.0

    def __post_init__(self):
        if not 0 < self.score_threshold <= 1:
            raise ValueError("score_threshold must be in (0, 1]")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.batch_size < 1 or self.parallelism < 1:
            raise ValueError("batch_size and parallelism must be >= 1")

    def fingerprint(self) -> dict:
        """Settings that must match when resuming a run."""
        return {"score_threshold": self.score_threshold, "seed": self.seed, "vanilla": self.vanilla}


@dataclass(frozen=True)
class LabeledPair:
    id: str
    input: str
    response: str
    origin: str = "gold"
    iteration: int = 0
    score: float | None = None


@dataclass(frozen=True)
class UnlabeledItem:
    id: str
    input: str


@dataclass(frozen=True)
class Candidate:
    id: str
    input: str
    candidate: str
    score: float | None = None


@dataclass
class IterationStats:
    iteration: int
    candidates: int
    accepted: int
    rejected: int
    acceptance_rate: float
    labeled_size: int
    unlabeled_size: int
    generator_version: str = ""


# --------------------------------------------------------------------------
# clients


class GeneratorClient(Protocol):
    def generate(self, inputs: Sequence[str]) -> list[str]: ...

    def version(self) -> str: ...

    def request_retrain(self, request: dict) -> None: ...


class ScorerClient(Protocol):
    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]: ...


class _HttpClient:
    def __init__(self, url: str, timeout: float = 60.0, max_retries: int = 5,
                 backoff: float = 0.5, max_backoff: float = 30.0, session: requests.Session | None = None):
        self.url = url
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.max_backoff = max_backoff
        self.session = session or requests.Session()

    unavailable: type[SelfTrainError] = SelfTrainError

    def _post(self, body: dict) -> dict:
        last: Exception | None = None
        for attempt in range(self.max_retries + 1):
            if attempt:
                time.sleep(min(self.max_backoff, self.backoff * 2 ** (attempt - 1)))
            try:
                resp = self.session.post(self.url, json=body, timeout=self.timeout)
                if resp.status_code >= 500 or resp.status_code == 429:
                    last = requests.HTTPError(f"HTTP {resp.status_code}")
                    continue
                resp.raise_for_status()
                return resp.json()
            except (requests.ConnectionError, requests.Timeout) as e:
                last = e
            except (requests.HTTPError, ValueError) as e:
                raise self.unavailable(f"{self.url}: {e}") from e
        raise self.unavailable(f"{self.url}: gave up after {self.max_retries + 1} attempts: {last}")


class HttpGenerator(_HttpClient):
    """``POST {"inputs": [...]}`` -> ``{"outputs": [...], "version": str}``."""

    unavailable = GeneratorUnavailable

    def __init__(self, url: str, retrain_url: str | None = None, **kw):
        super().__init__(url, **kw)
        self.retrain_url = retrain_url
        self.last_version = ""

    def generate(self, inputs: Sequence[str]) -> list[str]:
        data = self._post({"inputs": list(inputs)})
        outputs = data.get("outputs")
        if not isinstance(outputs, list):
            raise GeneratorUnavailable(f"{self.url}: response has no 'outputs' list")
        self.last_version = str(data.get("version", ""))
        return [str(o) for o in outputs]

    def version(self) -> str:
        self.generate([])
        return self.last_version

    def request_retrain(self, request: dict) -> None:
        # The request file on disk is the contract; posting it is a convenience.
        if self.retrain_url:
            self.session.post(self.retrain_url, json=request, timeout=self.timeout)


class HttpScorer(_HttpClient):
    """``POST {"pairs": [{"source", "candidate"}, ...]}`` -> ``{"scores": [...]}``."""

    unavailable = ScorerUnavailable

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        data = self._post({"pairs": [{"source": s, "candidate": c} for s, c in pairs]})
        scores = data.get("scores")
        if not isinstance(scores, list):
            raise ScorerUnavailable(f"{self.url}: response has no 'scores' list")
        return [float(s) for s in scores]


def _corrupt(text: str, rng: random.Random) -> str:
    digits = [i for i, ch in enumerate(text) if ch.isdigit()]
    if digits and rng.random() < 0.5:
        i = rng.choice(digits)
        return text[:i] + rng.choice([d for d in "0123456789" if d != text[i]]) + text[i + 1:]
    words = [i for i, tok in enumerate(text.split()) if "[" not in tok and "]" not in tok]
    toks = text.split()
    if len(words) > 1 and rng.random() < 0.5:
        del toks[rng.choice(words)]
    elif words:
        i = rng.choice(words)
        toks.insert(i, toks[i])
    else:
        toks.append("uh")
    out = " ".join(toks)
    return out if out != text else out + " uh"


class MockGenerator:
    """Returns the gold response, corrupted with probability ``corruption_rate``.

    Corruption is a pure function of (seed, model version, input), so reruns
    and resumed runs see identical outputs.  A retrain request bumps the
    version to ``mock-<iteration>``.
    """

    def __init__(self, gold: dict[str, str], corruption_rate: float = 0.3, seed: int = 0):
        self.gold = gold
        self.corruption_rate = corruption_rate
        self.seed = seed
        self._version = "mock-0"

    def version(self) -> str:
        return self._version

    def request_retrain(self, request: dict) -> None:
        self._version = f"mock-{request['iteration']}"

    def is_corrupted(self, text: str, output: str) -> bool:
        return output != self.gold.get(text)

    def generate(self, inputs: Sequence[str]) -> list[str]:
        out = []
        for text in inputs:
            gold = self.gold.get(text, text)
            rng = random.Random(f"{self.seed}|{self._version}|{text}")
            out.append(_corrupt(gold, rng) if rng.random() < self.corruption_rate else gold)
        return out


class OracleScorer:
    """1.0 when the candidate equals the held-out gold response, else 0.0."""

    def __init__(self, gold: dict[str, str]):
        self.gold = gold

    def score(self, pairs: Sequence[tuple[str, str]]) -> list[float]:
        return [1.0 if self.gold.get(s) == c else 0.0 for s, c in pairs]


# --------------------------------------------------------------------------
# generation and selection


def _batches(items: Sequence, size: int) -> list[Sequence]:
    return [items[i:i + size] for i in range(0, len(items), size)]


def _call_batched(fn, items: Sequence, batch_size: int, parallelism: int) -> list:
    batches = _batches(items, batch_size)
    if parallelism <= 1 or len(batches) <= 1:
        results = [fn(b) for b in batches]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            results = list(pool.map(fn, batches))
    out = []
    for batch, res in zip(batches, results):
        if len(res) != len(batch):
            raise MisalignedResponse(len(batch), len(res))
        out.extend(res)
    return out


def generate_pseudo(
    batch: Sequence[UnlabeledItem],
    client: GeneratorClient,
    batch_size: int = 64,
    parallelism: int = 1,
) -> list[Candidate]:
    """One candidate per input, aligned by position."""
    if not batch:
        return []
    outputs = _call_batched(client.generate, [it.input for it in batch], batch_size, parallelism)
    return [Candidate(it.id, it.input, out) for it, out in zip(batch, outputs)]


def _clamp(score: float) -> float:
    if not 0.0 <= score <= 1.0:
        log.warning("scorer returned %r outside [0, 1]; clamping", score)
        return min(1.0, max(0.0, score))
    return score


def select(
    candidates: Sequence[Candidate],
    scorer: ScorerClient,
    threshold: float = 0.99,
    batch_size: int = 64,
    parallelism: int = 1,
) -> tuple[list[Candidate], list[Candidate]]:
    """Partition candidates into (score >= threshold, the rest); both carry scores."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    if not candidates:
        return [], []
    pairs = [(c.input, c.candidate) for c in candidates]
    scores = _call_batched(scorer.score, pairs, batch_size, parallelism)
    accepted, rejected = [], []
    for c, s in zip(candidates, scores):
        scored = Candidate(c.id, c.input, c.candidate, _clamp(float(s)))
        (accepted if scored.score >= threshold else rejected).append(scored)
    return accepted, rejected


# --------------------------------------------------------------------------
# orchestration


def _digest(rows: Sequence) -> str:
    h = hashlib.sha256()
    for r in rows:
        h.update(json.dumps(asdict(r), sort_keys=True).encode())
        h.update(b"\n")
    return h.hexdigest()


def _iter_dir(state_dir: Path, k: int) -> Path:
    return state_dir / f"iter_{k}"


def load_state(state_dir: str | os.PathLike) -> list[tuple[IterationStats, list[Candidate]]]:
    """Completed iterations (those whose ``stats.json`` exists), in order."""
    state_dir = Path(state_dir)
    done = []
    k = 1
    while (_iter_dir(state_dir, k) / "stats.json").exists():
        d = _iter_dir(state_dir, k)
        stats = IterationStats(**json.loads((d / "stats.json").read_text()))
        accepted = [Candidate(**row) for row in read_jsonl(d / "accepted.jsonl")]
        done.append((stats, accepted))
        k += 1
    return done


def _apply(S: list[LabeledPair], U: list[UnlabeledItem], accepted: Sequence[Candidate], k: int):
    taken = {c.id for c in accepted}
    S = S + [LabeledPair(c.id, c.input, c.candidate, "pseudo", k, c.score) for c in accepted]
    U = [u for u in U if u.id not in taken]
    return S, U


def _wait_for_version(generator: GeneratorClient, previous: str, config: SelfTrainConfig, k: int) -> str:
    version = generator.version()
    if config.retrain_timeout <= 0:
        return version
    deadline = time.monotonic() + config.retrain_timeout
    while version == previous:
        if time.monotonic() > deadline:
            raise RetrainTimeout(f"generator still at version {previous!r}", k)
        time.sleep(config.poll_interval)
        version = generator.version()
    return version


def run_self_training(
    S: Sequence[LabeledPair],
    U: Sequence[UnlabeledItem],
    config: SelfTrainConfig,
    generator: GeneratorClient,
    scorer: ScorerClient,
    state_dir: str | os.PathLike,
    on_iteration: Callable[[IterationStats], None] | None = None,
) -> tuple[list[LabeledPair], list[IterationStats]]:
    """Run (or resume) self-training; returns the final labeled set and per-iteration stats.

    ``on_iteration`` is called after each iteration's state is persisted.
    """
    state_dir = Path(state_dir)
    state_dir.mkdir(parents=True, exist_ok=True)
    S, U = list(S), list(U)
    if {s.input for s in S} & {u.input for u in U}:
        raise ValueError("labeled and unlabeled inputs overlap")

    manifest = {"config": config.fingerprint(), "labeled_digest": _digest(S), "unlabeled_digest": _digest(U)}
    manifest_path = state_dir / "manifest.json"
    if manifest_path.exists():
        previous = json.loads(manifest_path.read_text())
        if previous != manifest:
            raise SelfTrainError(f"state directory {state_dir} belongs to a different run")
    else:
        write_json(manifest_path, manifest)

    history: list[IterationStats] = []
    for stats, accepted in load_state(state_dir):
        S, U = _apply(S, U, accepted, stats.iteration)
        history.append(stats)
    if history and (history[-1].accepted == 0 or not U):
        return S, history

    for k in range(len(history) + 1, config.iterations + 1):
        d = _iter_dir(state_dir, k)
        d.mkdir(parents=True, exist_ok=True)
        write_jsonl(d / "labeled.jsonl", (asdict(p) for p in S))
        request = {
            "iteration": k,
            "labeled_path": f"{d.name}/labeled.jsonl",  # relative to the state directory
            "labeled_size": len(S),
            "seed": config.seed,
            "score_threshold": config.score_threshold,
        }
        write_json(d / "retrain.request.json", request)
        try:
            previous = generator.version()
            generator.request_retrain(request)
            version = _wait_for_version(generator, previous, config, k)

            order = list(U)
            random.Random(f"{config.seed}:{k}").shuffle(order)
            candidates = generate_pseudo(order, generator, config.batch_size, config.parallelism)
            accepted, rejected = select(
                candidates, scorer, config.score_threshold, config.batch_size, config.parallelism
            )
        except SelfTrainError as e:
            atomic_write_text(d / "error.txt", f"{type(e).__name__}: {e}\n")
            if e.iteration is None:
                e.iteration = k
                e.args = (f"iteration {k}: {e}",)
            raise
        except Exception as e:
            atomic_write_text(d / "error.txt", f"{type(e).__name__}: {e}\n")
            raise SelfTrainError(str(e), k) from e

        if config.vanilla:
            # parity sampling: as many inputs as the scorer would have kept, drawn at random
            pool = accepted + rejected
            chosen = set(random.Random(f"{config.seed}:vanilla:{k}").sample(range(len(pool)), len(accepted)))
            accepted = [c for i, c in enumerate(pool) if i in chosen]
            rejected = [c for i, c in enumerate(pool) if i not in chosen]

        S, U = _apply(S, U, accepted, k)
        stats = IterationStats(
            iteration=k,
            candidates=len(candidates),
            accepted=len(accepted),
            rejected=len(rejected),
            acceptance_rate=len(accepted) / len(candidates) if candidates else 0.0,
            labeled_size=len(S),
            unlabeled_size=len(U),
            generator_version=version,
        )
        write_jsonl(d / "accepted.jsonl", (asdict(c) for c in accepted))
        write_jsonl(d / "rejected.jsonl", (asdict(c) for c in rejected))
        error = d / "error.txt"
        if error.exists():
            error.unlink()
        write_json(d / "stats.json", asdict(stats))  # written last: marks the iteration complete
        history.append(stats)
        if on_iteration is not None:
            on_iteration(stats)
        if stats.accepted == 0 or not U:
            break
    return S, history


# --------------------------------------------------------------------------
# reporting


def audit_report(stats: Sequence[IterationStats], rejected_samples: Sequence[Candidate] = (), max_samples: int = 20) -> dict:
    """Per-iteration counts plus a check that additions do not grow."""
    if not stats:
        raise ValueError("no iteration stats")
    additions = [s.accepted for s in stats]
    if len(additions) < 2:
        non_increasing = None
    else:
        non_increasing = all(b <= a for a, b in zip(additions, additions[1:]))
    return {
        "iterations": [asdict(s) for s in stats],
        "additions": additions,
        "total_added": sum(additions),
        "additions_non_increasing": non_increasing,
        "trend_check": "n/a" if non_increasing is None else ("pass" if non_increasing else "fail"),
        "rejected_samples": [asdict(c) for c in list(rejected_samples)[:max_samples]],
    }


def format_report(report: dict) -> str:
    lines = [f"{'iter':>4} {'candidates':>10} {'accepted':>8} {'rejected':>8} {'rate':>6} {'labeled':>8}"]
    for it in report["iterations"]:
        lines.append(
            f"{it['iteration']:>4} {it['candidates']:>10} {it['accepted']:>8} {it['rejected']:>8} "
            f"{it['acceptance_rate']:>6.3f} {it['labeled_size']:>8}"
        )
    lines.append(f"additions non-increasing: {report['trend_check']}")
    return "\n".join(lines)
