"""Manager control actions: the glue between the wire protocol, the
staleness policy, the aggregator, and the registry."""

from __future__ import annotations

from ..aggregation import LATEST_ONLY, StalenessPolicy, WeightedParams, fedavg, filter_stale
from ..errors import ContributionNotPendingError, InvalidArgumentsError, StaleBaseError
from ..registry import Contribution, ModelVersionRecord, Registry, VersionId


def perform_merge(registry: Registry, name: str, base: VersionId,
                  contribution_ids: list[str] | None,
                  policy: StalenessPolicy) -> tuple[ModelVersionRecord, list[str], list[str]]:
    """Aggregate selected pending contributions into a new head version.

    When ``contribution_ids`` is omitted, all fresh pending contributions
    (base equal to the head) are merged.  Under ``latest_only`` the stale
    pending remainder is marked ignored; under ``rebranch_old`` it is left
    pending for a later branch from its base.
    """
    status = registry.get_status(name)
    if base != status.head:
        raise StaleBaseError(f"merge base {base} is not the head {status.head}")
    fresh, stale = filter_stale(list(status.pending), status.head, policy)
    if contribution_ids is None:
        selected: list[Contribution] = fresh
    else:
        by_id = {c.id: c for c in status.pending}
        selected = []
        for cid in contribution_ids:
            if cid not in by_id:
                raise ContributionNotPendingError(f"contribution {cid!r} is not pending")
            selected.append(by_id[cid])
    if not selected:
        raise InvalidArgumentsError("merge selects no contributions")

    inputs = [
        WeightedParams(registry.contribution_params(name, c.id), c.sample_count)
        for c in selected
    ]
    merged_params = fedavg(inputs)
    record = registry.record_merge(name, base, merged_params, [c.id for c in selected])

    ignored: list[str] = []
    if policy.mode == LATEST_ONLY:
        merged_ids = set(record.merged_contributions)
        leftover = [c.id for c in stale if c.id not in merged_ids]
        if leftover:
            registry.mark_ignored(name, leftover)
            ignored = sorted(leftover)
    return record, sorted(record.merged_contributions), ignored
