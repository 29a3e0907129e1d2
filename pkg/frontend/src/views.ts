// Pure view-model builders and HTML renderers. Everything here derives from
// hub GET payloads alone, so a re-render after any poll is always consistent
// with the registry.

import type {
  ContributionView,
  DagEdge,
  DagNode,
  DagView,
  InfoResponse,
  PullRequestView,
  Role,
  SparklinePoint,
  StatusResponse,
  VersionRecordView,
} from './types.js';

export function parseVersion(text: string): [number, number, number] {
  const parts = text.split('.').map(Number);
  if (parts.length !== 3 || parts.some((p) => !Number.isInteger(p) || p < 0)) {
    throw new Error(`bad version string: ${text}`);
  }
  return parts as [number, number, number];
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

// -- DAG -------------------------------------------------------------------------

export function buildDagView(status: StatusResponse): DagView {
  const nodes: DagNode[] = status.history.map((record) => {
    const [, minor, micro] = parseVersion(record.version);
    return {
      version: record.version,
      annotation: record.annotation,
      isHead: record.version === status.head,
      column: minor,
      row: micro,
      mergedContributions: record.merged_contributions,
    };
  });

  const known = new Set(nodes.map((n) => n.version));
  const edges: DagEdge[] = [];
  const seen = new Set<string>();
  for (const record of status.history) {
    for (const [parentModel, parentVersion] of record.parents) {
      if (parentModel === status.name) {
        if (!seen.has(parentVersion) || !known.has(parentVersion)) {
          throw new Error(`history is not replay-ordered at ${record.version}`);
        }
        edges.push({ from: parentVersion, to: record.version, external: false });
      } else {
        edges.push({
          from: `${parentModel}@${parentVersion}`,
          to: record.version,
          external: true,
        });
      }
    }
    seen.add(record.version);
  }
  return { model: status.name, head: status.head, nodes, edges };
}

const CELL = 72;
const RADIUS = 14;

function nodeCenter(node: DagNode): [number, number] {
  return [40 + node.column * CELL, 40 + node.row * CELL];
}

export function renderDag(dag: DagView): string {
  const byVersion = new Map(dag.nodes.map((n) => [n.version, n]));
  const width = 80 + CELL * Math.max(...dag.nodes.map((n) => n.column), 0);
  const height = 96 + CELL * Math.max(...dag.nodes.map((n) => n.row), 0);

  const parts: string[] = [];
  for (const edge of dag.edges) {
    const to = byVersion.get(edge.to);
    if (!to) continue;
    const [x2, y2] = nodeCenter(to);
    if (edge.external) {
      parts.push(
        `<line class="edge external" x1="${x2 - CELL * 0.6}" y1="${y2 - CELL * 0.6}" ` +
        `x2="${x2}" y2="${y2}" stroke-dasharray="4 3"></line>`,
        `<text class="external-label" x="${x2 - CELL * 0.6}" y="${y2 - CELL * 0.66}">` +
        `${escapeHtml(edge.from)}</text>`,
      );
    } else {
      const from = byVersion.get(edge.from)!;
      const [x1, y1] = nodeCenter(from);
      parts.push(`<line class="edge" x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}"></line>`);
    }
  }
  for (const node of dag.nodes) {
    const [x, y] = nodeCenter(node);
    const classes = `node ${node.annotation}${node.isHead ? ' head' : ''}`;
    parts.push(
      `<g class="${classes}" data-version="${node.version}">` +
      `<circle cx="${x}" cy="${y}" r="${RADIUS}"></circle>` +
      `<text class="version" x="${x}" y="${y + RADIUS + 14}">${node.version}</text>` +
      `<text class="annotation" x="${x}" y="${y + RADIUS + 28}">${node.annotation}</text>` +
      `</g>`,
    );
  }
  return (
    `<svg class="dag" viewBox="0 0 ${width} ${height}" role="img" ` +
    `aria-label="version graph of ${escapeHtml(dag.model)}">${parts.join('')}</svg>`
  );
}

// -- pull requests ------------------------------------------------------------------

export function buildPullRequests(status: StatusResponse): PullRequestView[] {
  return status.pending.map((c: ContributionView) => ({
    id: c.id,
    participant: c.participant_id,
    baseVersion: c.base_version,
    sampleCount: c.sample_count,
    trainAccuracy: c.metrics.train_accuracy,
    trainLoss: c.metrics.train_loss,
    stale: c.base_version !== status.head,
  }));
}

export function renderPullRequests(prs: PullRequestView[], role: Role): string {
  if (prs.length === 0) {
    return '<p class="empty">No pending pull requests.</p>';
  }
  const rows = prs.map((pr) => {
    const checkbox = role === 'manager'
      ? `<input type="checkbox" class="pr-select" value="${escapeHtml(pr.id)}">`
      : '';
    return (
      `<tr class="${pr.stale ? 'stale' : 'fresh'}" data-id="${escapeHtml(pr.id)}">` +
      `<td>${checkbox}</td>` +
      `<td>${escapeHtml(pr.id)}</td>` +
      `<td>${escapeHtml(pr.participant)}</td>` +
      `<td>${pr.baseVersion}${pr.stale ? ' <span class="stale-flag">stale</span>' : ''}</td>` +
      `<td>${pr.sampleCount}</td>` +
      `<td>${pr.trainAccuracy.toFixed(4)}</td>` +
      `<td>${pr.trainLoss.toFixed(4)}</td>` +
      `</tr>`
    );
  });
  const controls = role === 'manager'
    ? '<div class="pr-actions">' +
      '<button data-action="merge">Merge selected</button>' +
      '<button data-action="ignore">Ignore selected</button>' +
      '<button data-action="branch-stale">Branch from stale base</button>' +
      '<label>policy <select id="staleness-policy">' +
      '<option value="latest_only">latest_only</option>' +
      '<option value="rebranch_old">rebranch_old</option>' +
      '</select></label>' +
      '</div>'
    : '';
  return (
    '<table class="pull-requests"><thead><tr>' +
    '<th></th><th>id</th><th>participant</th><th>base</th>' +
    '<th>samples</th><th>train acc</th><th>train loss</th>' +
    `</tr></thead><tbody>${rows.join('')}</tbody></table>${controls}`
  );
}

// -- model list ------------------------------------------------------------------------

export function renderModelList(infos: InfoResponse[], selected: string | null): string {
  if (infos.length === 0) {
    return '<p class="empty">No models published yet.</p>';
  }
  const rows = infos.map((info) => (
    `<tr class="${info.name === selected ? 'selected' : ''}" data-model="${escapeHtml(info.name)}">` +
    `<td class="model-name">${escapeHtml(info.name)}</td>` +
    `<td>${info.head}</td>` +
    `<td>${info.classes}</td>` +
    `<td>${info.versions.length}</td>` +
    `</tr>`
  ));
  return (
    '<table class="model-list"><thead><tr>' +
    '<th>model</th><th>head</th><th>classes</th><th>versions</th>' +
    `</tr></thead><tbody>${rows.join('')}</tbody></table>`
  );
}

// -- accuracy sparkline -------------------------------------------------------------------

// The hub stores per-contribution train metrics; each merge's mean train
// accuracy over its merged contributions gives one point per round.
export function buildSparkline(status: StatusResponse): SparklinePoint[] {
  const metricsById = new Map(status.contributions.map((c) => [c.id, c.metrics]));
  const points: SparklinePoint[] = [];
  for (const record of status.history) {
    if (record.annotation !== 'merged' || record.merged_contributions.length === 0) {
      continue;
    }
    const values = record.merged_contributions
      .map((id) => metricsById.get(id))
      .filter((m): m is NonNullable<typeof m> => m !== undefined)
      .map((m) => m.train_accuracy);
    if (values.length === 0) continue;
    const [, minor] = parseVersion(record.version);
    points.push({
      round: minor,
      accuracy: values.reduce((a, b) => a + b, 0) / values.length,
    });
  }
  return points;
}

export function renderSparkline(points: SparklinePoint[]): string {
  if (points.length === 0) {
    return '<p class="empty">No merged rounds yet.</p>';
  }
  const width = 240;
  const height = 48;
  const maxRound = Math.max(...points.map((p) => p.round));
  const coords = points.map((p) => {
    const x = maxRound <= 1 ? width : (p.round / maxRound) * (width - 8) + 4;
    const y = height - 4 - p.accuracy * (height - 8);
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  });
  return (
    `<svg class="sparkline" viewBox="0 0 ${width} ${height}">` +
    `<polyline fill="none" points="${coords.join(' ')}"></polyline>` +
    `</svg>`
  );
}

export function renderBanner(kind: 'error' | 'conflict' | 'info', message: string): string {
  return `<div class="banner ${kind}">${escapeHtml(message)}</div>`;
}

export function renderNotFound(name: string): string {
  return `<div class="not-found">Model ${escapeHtml(name)} was not found on this hub.</div>`;
}
