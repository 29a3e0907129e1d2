// The dashboard controller and (at the bottom) its DOM glue. The controller
// holds no registry state of its own: every poll rebuilds the views from
// fresh GET responses, and overlapping poll results are resolved by a
// monotonically increasing refresh sequence (last write wins).

import { HubApi, HubApiError, HttpHubApi } from './api.js';
import { DEFAULT_CONFIG, loadConfig, saveConfig } from './config.js';
import type {
  DagView,
  DashboardConfig,
  InfoResponse,
  PullRequestView,
  SparklinePoint,
  StalenessPolicy,
} from './types.js';
import {
  buildDagView,
  buildPullRequests,
  buildSparkline,
  renderBanner,
  renderDag,
  renderModelList,
  renderNotFound,
  renderPullRequests,
  renderSparkline,
} from './views.js';

export interface DashboardState {
  models: InfoResponse[];
  selected: string | null;
  dag: DagView | null;
  pullRequests: PullRequestView[];
  sparkline: SparklinePoint[];
  banner: { kind: 'error' | 'conflict' | 'info'; message: string } | null;
  notFound: string | null;
  refreshSeq: number;
}

export class Dashboard {
  state: DashboardState = {
    models: [],
    selected: null,
    dag: null,
    pullRequests: [],
    sparkline: [],
    banner: null,
    notFound: null,
    refreshSeq: 0,
  };

  constructor(private api: HubApi, private config: DashboardConfig) {}

  get role() {
    return this.config.role;
  }

  async refresh(): Promise<DashboardState> {
    const seq = ++this.state.refreshSeq;
    try {
      const names = await this.api.listModels();
      const models = await Promise.all(names.map((n) => this.api.getInformation(n)));
      let dag: DagView | null = null;
      let pullRequests: PullRequestView[] = [];
      let sparkline: SparklinePoint[] = [];
      let notFound: string | null = null;
      if (this.state.selected !== null) {
        try {
          const status = await this.api.getStatus(this.state.selected);
          dag = buildDagView(status);
          pullRequests = buildPullRequests(status);
          sparkline = buildSparkline(status);
        } catch (error) {
          if (error instanceof HubApiError && error.status === 404) {
            notFound = this.state.selected;
          } else {
            throw error;
          }
        }
      }
      if (seq === this.state.refreshSeq) {
        // stale poll responses lose to newer ones
        this.state = { ...this.state, models, dag, pullRequests, sparkline, notFound };
      }
    } catch (error) {
      if (seq === this.state.refreshSeq) {
        this.state.banner = {
          kind: 'error',
          message: error instanceof HubApiError && error.status === 401
            ? 'Authentication failed: check the API key in the settings.'
            : `Hub unreachable: ${String(error)}`,
        };
      }
    }
    return this.state;
  }

  async select(name: string | null): Promise<DashboardState> {
    this.state.selected = name;
    this.state.banner = null;
    return this.refresh();
  }

  private requireManager(): void {
    // role fidelity: with a participant key no control request is ever sent
    if (this.config.role !== 'manager') {
      throw new Error('manager role required for control actions');
    }
  }

  async merge(contributionIds: string[], policy: StalenessPolicy): Promise<void> {
    this.requireManager();
    const model = this.state.selected;
    if (!model || !this.state.dag) throw new Error('no model selected');
    try {
      await this.api.merge(model, this.state.dag.head, contributionIds, policy);
      this.state.banner = null;
    } catch (error) {
      if (error instanceof HubApiError && error.code === 'stale_base') {
        this.state.banner = {
          kind: 'conflict',
          message: 'The head moved while you were reviewing; refresh and retry the merge.',
        };
        return;
      }
      throw error;
    } finally {
      await this.refresh();
    }
  }

  async ignore(contributionIds: string[]): Promise<void> {
    this.requireManager();
    const model = this.state.selected;
    if (!model) throw new Error('no model selected');
    await this.api.ignore(model, contributionIds);
    await this.refresh();
  }

  async branchFrom(baseVersion: string): Promise<void> {
    this.requireManager();
    const model = this.state.selected;
    if (!model) throw new Error('no model selected');
    await this.api.branch(model, baseVersion);
    await this.refresh();
  }

  async forkFeature(newName: string, newClasses: number, headSeed: number): Promise<void> {
    this.requireManager();
    const model = this.state.selected;
    if (!model || !this.state.dag) throw new Error('no model selected');
    await this.api.forkFeature(model, this.state.dag.head, newName, newClasses, headSeed);
    await this.refresh();
  }

  renderAll(): { models: string; dag: string; pullRequests: string; sparkline: string;
                 banner: string } {
    const state = this.state;
    return {
      models: renderModelList(state.models, state.selected),
      dag: state.notFound !== null
        ? renderNotFound(state.notFound)
        : state.dag
          ? renderDag(state.dag)
          : '<p class="empty">Select a model to inspect its version graph.</p>',
      pullRequests: renderPullRequests(state.pullRequests, this.config.role),
      sparkline: renderSparkline(state.sparkline),
      banner: state.banner ? renderBanner(state.banner.kind, state.banner.message) : '',
    };
  }
}

// -- DOM glue (no-op under tests, which import the controller directly) ------------

function mount(): void {
  const config = loadConfig();
  const api = new HttpHubApi(config.hubUrl, config.apiKey);
  const dashboard = new Dashboard(api, config);

  const panels = {
    banner: document.getElementById('banner')!,
    models: document.getElementById('models')!,
    dag: document.getElementById('dag')!,
    pullRequests: document.getElementById('pull-requests')!,
    sparkline: document.getElementById('sparkline')!,
  };

  const redraw = () => {
    const html = dashboard.renderAll();
    panels.banner.innerHTML = html.banner;
    panels.models.innerHTML = html.models;
    panels.dag.innerHTML = html.dag;
    panels.pullRequests.innerHTML = html.pullRequests;
    panels.sparkline.innerHTML = html.sparkline;
  };

  const selectedIds = (): string[] =>
    Array.from(document.querySelectorAll<HTMLInputElement>('.pr-select:checked'))
      .map((el) => el.value);

  const policy = (): StalenessPolicy => {
    const select = document.getElementById('staleness-policy') as HTMLSelectElement | null;
    return (select?.value as StalenessPolicy) ?? 'latest_only';
  };

  panels.models.addEventListener('click', (event) => {
    const row = (event.target as HTMLElement).closest('tr[data-model]');
    if (row) void dashboard.select(row.getAttribute('data-model')).then(redraw);
  });

  panels.pullRequests.addEventListener('click', (event) => {
    const button = (event.target as HTMLElement).closest('button[data-action]');
    if (!button) return;
    const action = button.getAttribute('data-action');
    const run = async () => {
      if (action === 'merge') await dashboard.merge(selectedIds(), policy());
      else if (action === 'ignore') await dashboard.ignore(selectedIds());
      else if (action === 'branch-stale') {
        const stale = dashboard.state.pullRequests.find((pr) => pr.stale);
        if (stale) await dashboard.branchFrom(stale.baseVersion);
      }
    };
    void run().then(redraw).catch((error) => {
      panels.banner.innerHTML = renderBanner('error', String(error));
    });
  });

  const settings = document.getElementById('settings-form') as HTMLFormElement | null;
  if (settings) {
    (settings.elements.namedItem('hubUrl') as HTMLInputElement).value = config.hubUrl;
    (settings.elements.namedItem('apiKey') as HTMLInputElement).value = config.apiKey;
    (settings.elements.namedItem('role') as HTMLSelectElement).value = config.role;
    settings.addEventListener('submit', (event) => {
      event.preventDefault();
      const data = new FormData(settings);
      saveConfig({
        ...DEFAULT_CONFIG,
        hubUrl: String(data.get('hubUrl') ?? DEFAULT_CONFIG.hubUrl),
        apiKey: String(data.get('apiKey') ?? ''),
        role: data.get('role') === 'manager' ? 'manager' : 'participant',
        pollIntervalMs: config.pollIntervalMs,
      });
      location.reload();
    });
  }

  void dashboard.refresh().then(redraw);
  setInterval(() => void dashboard.refresh().then(redraw), config.pollIntervalMs);
}

if (typeof document !== 'undefined' && document.getElementById('models')) {
  mount();
}
