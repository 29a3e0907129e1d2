import { describe, expect, it } from 'vitest';

import { Dashboard } from '../src/app.js';
import { DEFAULT_CONFIG } from '../src/config.js';
import type { DashboardConfig } from '../src/types.js';
import {
  buildDagView,
  buildPullRequests,
  buildSparkline,
  renderDag,
  renderModelList,
  renderPullRequests,
} from '../src/views.js';
import { FIXTURE, FakeHub } from './fixture.js';

const asConfig = (role: 'manager' | 'participant'): DashboardConfig => ({
  ...DEFAULT_CONFIG,
  role,
});

describe('dag view', () => {
  it('renders one node per history record with annotations', () => {
    for (const name of ['fashion-mnist', 'caltech-birds'] as const) {
      const status = JSON.parse(JSON.stringify(FIXTURE.status[name]));
      const dag = buildDagView(status);
      expect(dag.nodes.length).toBe(status.history.length);

      const html = renderDag(dag);
      expect(html.match(/<g class="node/g)?.length).toBe(status.history.length);
      for (const record of status.history) {
        expect(html).toContain(`data-version="${record.version}"`);
        expect(html).toContain(record.annotation);
      }
    }
  });

  it('highlights the head and lays nodes out by round and merge index', () => {
    const status = JSON.parse(JSON.stringify(FIXTURE.status['fashion-mnist']));
    const dag = buildDagView(status);
    const head = dag.nodes.find((n) => n.isHead);
    expect(head?.version).toBe(status.head);
    const v111 = dag.nodes.find((n) => n.version === '1.1.1')!;
    expect([v111.column, v111.row]).toEqual([1, 1]);
    expect(renderDag(dag)).toContain('node merged head');
  });

  it('draws the feature fork as a cross-model link', () => {
    const status = JSON.parse(JSON.stringify(FIXTURE.status['caltech-birds']));
    const dag = buildDagView(status);
    const external = dag.edges.filter((e) => e.external);
    expect(external).toEqual([
      { from: 'fashion-mnist@1.2.1', to: '1.0.0', external: true },
    ]);
    const root = dag.nodes.find((n) => n.version === '1.0.0');
    expect(root?.annotation).toBe('forked_feature');
    expect(renderDag(dag)).toContain('fashion-mnist@1.2.1');
  });

  it('rejects a history with forward parent references', () => {
    const status = JSON.parse(JSON.stringify(FIXTURE.status['fashion-mnist']));
    status.history.reverse();
    expect(() => buildDagView(status)).toThrow(/replay-ordered/);
  });
});

describe('pull requests', () => {
  it('flags the stale contribution against the live head', () => {
    const status = JSON.parse(JSON.stringify(FIXTURE.status['caltech-birds']));
    const prs = buildPullRequests(status);
    expect(prs.length).toBe(3);
    const stale = prs.filter((pr) => pr.stale);
    expect(stale.length).toBe(1);
    expect(stale[0].participant).toBe('cara');
    expect(stale[0].baseVersion).toBe('1.0.0');

    const html = renderPullRequests(prs, 'manager');
    expect(html.match(/stale-flag/g)?.length).toBe(1);
    expect(html).toContain('data-action="merge"');
  });

  it('shows no control buttons to a participant key', () => {
    const status = JSON.parse(JSON.stringify(FIXTURE.status['caltech-birds']));
    const html = renderPullRequests(buildPullRequests(status), 'participant');
    expect(html).not.toContain('<button');
    expect(html).not.toContain('data-action');
    expect(html).not.toContain('pr-select');
  });
});

describe('model list and sparkline', () => {
  it('lists models with head in major.minor.micro form and class counts', () => {
    const infos = [
      JSON.parse(JSON.stringify(FIXTURE.info['fashion-mnist'])),
      JSON.parse(JSON.stringify(FIXTURE.info['caltech-birds'])),
    ];
    const html = renderModelList(infos, 'fashion-mnist');
    expect(html).toContain('<td>1.2.1</td>');
    expect(html).toContain('<td>200</td>');
    expect(html).toContain('class="selected"');
    expect(renderModelList([], null)).toContain('No models published');
  });

  it('derives one accuracy point per merged round from stored metrics', () => {
    const status = JSON.parse(JSON.stringify(FIXTURE.status['fashion-mnist']));
    const points = buildSparkline(status);
    expect(points.map((p) => p.round)).toEqual([1, 2]);
    expect(points[0].accuracy).toBeCloseTo((0.61 + 0.64) / 2, 10);
    expect(points[1].accuracy).toBeCloseTo((0.72 + 0.7) / 2, 10);
  });
});

describe('dashboard controller', () => {
  it('merging fresh pull requests advances the displayed head', async () => {
    const hub = new FakeHub();
    const dashboard = new Dashboard(hub, asConfig('manager'));
    await dashboard.select('caltech-birds');
    expect(dashboard.state.dag?.head).toBe('1.1.0');

    const fresh = dashboard.state.pullRequests.filter((pr) => !pr.stale);
    expect(fresh.length).toBe(2);
    await dashboard.merge(fresh.map((pr) => pr.id), 'rebranch_old');

    expect(dashboard.state.dag?.head).toBe('1.1.1');
    expect(dashboard.state.dag?.nodes.length).toBe(3);
    expect(dashboard.state.pullRequests.map((pr) => pr.participant)).toEqual(['cara']);
    const html = dashboard.renderAll();
    expect(html.dag).toContain('data-version="1.1.1"');
    expect(html.models).toContain('<td>1.1.1</td>');
  });

  it('latest_only merge drops the stale pull request from the pending list', async () => {
    const hub = new FakeHub();
    const dashboard = new Dashboard(hub, asConfig('manager'));
    await dashboard.select('caltech-birds');
    const fresh = dashboard.state.pullRequests.filter((pr) => !pr.stale);
    await dashboard.merge(fresh.map((pr) => pr.id), 'latest_only');
    expect(dashboard.state.pullRequests).toEqual([]);
  });

  it('a participant session never emits a control request', async () => {
    const hub = new FakeHub();
    const dashboard = new Dashboard(hub, asConfig('participant'));
    await dashboard.select('caltech-birds');
    await expect(dashboard.merge(['caltech-birds:c000002'], 'latest_only'))
      .rejects.toThrow(/manager role/);
    await expect(dashboard.ignore(['caltech-birds:c000002']))
      .rejects.toThrow(/manager role/);
    expect(hub.controlCalls).toBe(0);
    expect(dashboard.renderAll().pullRequests).not.toContain('<button');
  });

  it('surfaces a stale_base conflict as an inline banner and refreshes', async () => {
    const hub = new FakeHub();
    const dashboard = new Dashboard(hub, asConfig('manager'));
    await dashboard.select('caltech-birds');
    const fresh = dashboard.state.pullRequests.filter((pr) => !pr.stale);

    // the head moves underneath the review
    await hub.branch('caltech-birds', '1.1.0');
    await dashboard.merge(fresh.map((pr) => pr.id), 'rebranch_old');
    expect(dashboard.state.banner?.kind).toBe('conflict');
    expect(dashboard.renderAll().banner).toContain('refresh and retry');
    // the refresh that followed shows the moved head
    expect(dashboard.state.dag?.head).toBe('1.2.0');
  });

  it('unknown models render a not-found page', async () => {
    const hub = new FakeHub();
    const dashboard = new Dashboard(hub, asConfig('manager'));
    await dashboard.select('gone');
    expect(dashboard.state.notFound).toBe('gone');
    expect(dashboard.renderAll().dag).toContain('not found');
  });
});
