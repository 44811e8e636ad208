"""Caption-pair feature extraction: render, call (or replay), parse, cache.

Cache hits never touch the network. Misses send the rendered prompt, record
the raw reply, and parse it; replies that disobey the list format are retried
up to ``max_retries`` times (the request is identical — retries target
transient provider nondeterminism), after which the failure policy decides:
``fail`` raises, ``impute`` substitutes the midpoint vector and flags the row.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .audit import AuditLog
from .cache import PARSE_OK, ResponseCache, cache_key
from .errors import ComponentOutOfRange, ExtractionFailed, MalformedVector, OocdError
from .prompting import IMPUTED_VECTOR, GptFeatureVector, parse_feature_vector, render_prompt

POLICY_FAIL = "fail"
POLICY_IMPUTE = "impute"
FAILURE_POLICIES = (POLICY_FAIL, POLICY_IMPUTE)


@dataclass(frozen=True)
class ExtractionResult:
    vector: GptFeatureVector
    raw_response: str
    from_cache: bool
    imputed: bool
    attempts: int


def _apply_failure_policy(
    policy: str,
    record_id: str | None,
    raw: str,
    last_error: Exception,
    from_cache: bool,
    attempts: int,
    audit: AuditLog | None,
) -> ExtractionResult:
    if policy == POLICY_IMPUTE:
        if audit is not None:
            audit.emit("imputed", record_id=record_id, reason=str(last_error))
        return ExtractionResult(
            vector=IMPUTED_VECTOR,
            raw_response=raw,
            from_cache=from_cache,
            imputed=True,
            attempts=attempts,
        )
    raise ExtractionFailed(record_id or "<unknown>", last_error)


def extract_features(
    caption1: str,
    caption2: str,
    provider,
    cache: ResponseCache,
    *,
    max_retries: int = 3,
    failure_policy: str = POLICY_FAIL,
    audit: AuditLog | None = None,
    record_id: str | None = None,
) -> ExtractionResult:
    if failure_policy not in FAILURE_POLICIES:
        raise ValueError(f"failure_policy must be one of {FAILURE_POLICIES}")

    prompt = render_prompt(caption1, caption2)
    key = cache_key(provider.model_id, provider.temperature, prompt)

    entry = cache.get(key)
    if entry is not None:
        if audit is not None:
            audit.emit("cache_hit", record_id=record_id, key=key, parse_status=entry.parse_status)
        if entry.parse_status == PARSE_OK:
            return ExtractionResult(
                vector=parse_feature_vector(entry.raw_response),
                raw_response=entry.raw_response,
                from_cache=True,
                imputed=False,
                attempts=0,
            )
        return _apply_failure_policy(
            failure_policy,
            record_id,
            entry.raw_response,
            MalformedVector("cached response is malformed"),
            from_cache=True,
            attempts=0,
            audit=audit,
        )

    attempts = max_retries + 1
    raw = ""
    last_error: Exception = MalformedVector("provider never called")
    for attempt in range(1, attempts + 1):
        if audit is not None:
            audit.emit(
                "provider_call",
                record_id=record_id,
                model_id=provider.model_id,
                attempt=attempt,
                key=key,
            )
        raw = provider.complete(prompt)
        try:
            vector = parse_feature_vector(raw)
        except (MalformedVector, ComponentOutOfRange) as exc:
            last_error = exc
            continue
        cache.put(cache.make_entry(provider.model_id, provider.temperature, prompt, raw,
                                   vector.as_tuple()))
        return ExtractionResult(
            vector=vector,
            raw_response=raw,
            from_cache=False,
            imputed=False,
            attempts=attempt,
        )

    # Every attempt came back unparseable: record the last reply, then decide.
    cache.put(cache.make_entry(provider.model_id, provider.temperature, prompt, raw, None))
    return _apply_failure_policy(
        failure_policy, record_id, raw, last_error,
        from_cache=False, attempts=attempts, audit=audit,
    )


def extract_for_records(
    records,
    provider,
    cache: ResponseCache,
    *,
    concurrency: int = 1,
    max_retries: int = 3,
    failure_policy: str = POLICY_FAIL,
    audit: AuditLog | None = None,
) -> dict[str, ExtractionResult]:
    """Extract vectors for many records; results join back by record id.

    Up to ``concurrency`` provider requests run in flight. Any worker error is
    re-raised with its record id attached, in dataset order.
    """
    records = list(records)
    if concurrency < 1:
        raise ValueError("concurrency must be >= 1")

    def work(record) -> ExtractionResult:
        return extract_features(
            record.caption1,
            record.caption2,
            provider,
            cache,
            max_retries=max_retries,
            failure_policy=failure_policy,
            audit=audit,
            record_id=record.id,
        )

    results: dict[str, ExtractionResult] = {}
    failures: dict[str, Exception] = {}
    if concurrency == 1:
        for record in records:
            try:
                results[record.id] = work(record)
            except OocdError as exc:
                failures[record.id] = exc
                break
    else:
        with ThreadPoolExecutor(max_workers=concurrency) as pool:
            futures = {record.id: pool.submit(work, record) for record in records}
            for record in records:
                try:
                    results[record.id] = futures[record.id].result()
                except OocdError as exc:
                    failures[record.id] = exc

    if failures:
        record_id, exc = next(iter(failures.items()))
        if isinstance(exc, ExtractionFailed):
            raise exc
        raise ExtractionFailed(record_id, exc) from exc
    return results
