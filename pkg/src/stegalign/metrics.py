"""Evaluation: capacity, diversity, divergence, and a frequency detector.

The divergence pair (total variation, KL) plus the chi-square detector
stand in for embedding-based similarity scores and neural steganalysis,
which need models far beyond this package's scope; reports always label
them as such. Perplexity is computed under the built-in n-gram model
and the judge is named in the report.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .corpus import FreqTable, NGramModel
from .numerics import det_log
from .pipeline import GenerationRecord


@dataclass
class EvalReport:
    """Metric bundle for one generated corpus vs a target corpus."""

    distinct_n: dict[int, float]
    tv_distance: float
    kl_divergence: float
    chi2_stat: float
    chi2_p: float
    ppl_builtin: float | None = None
    ppl_judge: str = "builtin-ngram"
    entropy_per_token: float | None = None
    embedding_rate: float | None = None
    divergence_note: str = (
        "tv/kl/chi2 computed on unigram tables; not an embedding-based score"
    )

    def to_json(self) -> str:
        payload = {k: v for k, v in self.__dict__.items() if v is not None}
        payload["distinct_n"] = {str(k): v for k, v in self.distinct_n.items()}
        return json.dumps(payload, indent=2, sort_keys=True)

    def to_table(self) -> str:
        rows: list[tuple[str, str]] = []
        for n, val in sorted(self.distinct_n.items()):
            rows.append((f"distinct_{n}", f"{val:.4f}"))
        rows.append(("tv_distance", f"{self.tv_distance:.6f}"))
        rows.append(("kl_divergence", f"{self.kl_divergence:.6f}"))
        rows.append(("chi2_stat", f"{self.chi2_stat:.3f}"))
        rows.append(("chi2_p", f"{self.chi2_p:.4g}"))
        if self.ppl_builtin is not None:
            rows.append((f"ppl[{self.ppl_judge}]", f"{self.ppl_builtin:.4f}"))
        if self.entropy_per_token is not None:
            rows.append(("entropy_per_token", f"{self.entropy_per_token:.4f}"))
        if self.embedding_rate is not None:
            rows.append(("embedding_rate", f"{self.embedding_rate:.4f}"))
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {val}" for name, val in rows)


def entropy_per_token(records: Iterable[GenerationRecord] | GenerationRecord) -> float:
    """Mean per-step entropy (bits) logged during generation."""
    if isinstance(records, GenerationRecord):
        records = [records]
    values = [e for rec in records for e in rec.entropies]
    if not values:
        raise ValueError("no generation steps recorded")
    return float(np.mean(values))


def embedding_rate(record: GenerationRecord) -> float:
    """Embedded bits per generated token."""
    if record.token_count == 0:
        raise ValueError("record has no tokens")
    return record.total_bits / record.token_count


def distinct_n(token_streams: Sequence[Sequence[int]], n: int) -> float:
    """Unique n-grams over total n-grams, pooled across streams."""
    total = 0
    seen: set = set()
    for stream in token_streams:
        for i in range(len(stream) - n + 1):
            seen.add(tuple(stream[i : i + n]))
            total += 1
    if total == 0:
        raise ValueError(f"streams contain no {n}-grams")
    return len(seen) / total


def divergences(
    generated: FreqTable, target: FreqTable, vocab_size: int
) -> tuple[float, float]:
    """(total variation, KL in nats) between empirical distributions.

    TV uses the raw empirical frequencies. KL floors zeros at
    1 / (total + |V|) on each side so it stays finite.
    """
    if generated.order != target.order:
        raise ValueError("frequency tables have different orders")
    keys = set(generated.counts) | set(target.counts)
    eps_p = Fraction(1, generated.total + vocab_size)
    eps_q = Fraction(1, target.total + vocab_size)
    tv = 0.0
    kl = 0.0
    for key in keys:
        p = generated.frequency(key)
        q = target.frequency(key)
        tv += abs(float(p) - float(q))
        pf = float(max(p, eps_p))
        qf = float(max(q, eps_q))
        kl += pf * (det_log(pf) - det_log(qf))
    return 0.5 * tv, kl


def chi_square_detector(
    sample: FreqTable, reference: FreqTable
) -> tuple[float, float]:
    """Pearson goodness-of-fit of sample counts against reference.

    A cheap frequency-level detector: low p flags the sample as not
    drawn from the reference distribution. Requires sample totals of at
    least five per reference support cell for the chi-square
    approximation to hold.
    """
    if sample.order != reference.order:
        raise ValueError("tables have different orders")
    if reference.total == 0:
        raise ValueError("reference table is empty")
    keys = sorted(
        set(sample.counts) | set(reference.counts),
        key=lambda k: k if isinstance(k, tuple) else (k,),
    )
    if sample.total < 5 * len(keys):
        raise ValueError(
            f"sample total {sample.total} under 5x support size {len(keys)}"
        )
    ref = np.array([float(reference.frequency(k)) for k in keys])
    floor = 1.0 / (reference.total + len(keys))
    ref = np.maximum(ref, floor)
    ref /= ref.sum()
    observed = np.array([sample.count(k) for k in keys], dtype=np.float64)
    expected = ref * sample.total
    stat = float(((observed - expected) ** 2 / expected).sum())
    dof = len(keys) - 1
    if dof == 0:
        return 0.0, 1.0
    return stat, float(_scipy_stats.chi2.sf(stat, dof))


def log_ratio_bound_holds(delta: float, p: float, q: float) -> bool:
    """Check |ln(1 + (q-p)/p)| <= (1 - 2*delta)/delta.

    Preconditions: delta <= p, q <= 1 - delta and |p - q| >= delta.
    The bound caps the per-symbol log distortion a bounded sampling
    perturbation can introduce; the property suite sweeps it over a
    grid and it must hold everywhere.
    """
    if not (0 < delta <= p <= 1 - delta and delta <= q <= 1 - delta):
        raise ValueError("need delta <= p, q <= 1 - delta")
    if abs(p - q) < delta:
        raise ValueError("need |p - q| >= delta")
    lhs = abs(math.log1p((q - p) / p))
    rhs = (1 - 2 * delta) / delta
    return lhs <= rhs


def perplexity(model: NGramModel, token_streams: Sequence[Sequence[int]]) -> float:
    """exp of the mean negative log-likelihood under the built-in model."""
    log_sum = 0.0
    count = 0
    tail = model.order - 1
    for stream in token_streams:
        for i in range(len(stream)):
            ctx = stream[max(0, i - tail) : i]
            log_sum += det_log(float(model.prob(ctx, stream[i])))
            count += 1
    if count == 0:
        raise ValueError("no tokens to score")
    return float(np.exp(-log_sum / count))


def build_report(
    generated_streams: Sequence[Sequence[int]],
    target_table: FreqTable,
    vocab_size: int,
    *,
    model: NGramModel | None = None,
    records: Sequence[GenerationRecord] | None = None,
    distinct_orders: Sequence[int] = (1, 2, 3),
) -> EvalReport:
    from .corpus import count_frequencies

    gen_table = count_frequencies(generated_streams, 1, target_table.vocab_hash)
    tv, kl = divergences(gen_table, target_table, vocab_size)
    stat, pval = chi_square_detector(gen_table, target_table)
    distinct = {}
    for n in distinct_orders:
        if any(len(s) >= n for s in generated_streams):
            distinct[n] = distinct_n(generated_streams, n)
    report = EvalReport(
        distinct_n=distinct,
        tv_distance=tv,
        kl_divergence=kl,
        chi2_stat=stat,
        chi2_p=pval,
    )
    if model is not None:
        report.ppl_builtin = perplexity(model, generated_streams)
    if records:
        report.entropy_per_token = entropy_per_token(records)
        rates = [embedding_rate(r) for r in records if r.token_count]
        if rates:
            report.embedding_rate = float(np.mean(rates))
    return report
