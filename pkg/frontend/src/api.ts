import type {
  ControlResponse,
  InfoResponse,
  ModelListResponse,
  StalenessPolicy,
  StatusResponse,
} from './types.js';

export class HubApiError extends Error {
  constructor(public status: number, public code: string) {
    super(`hub returned ${status}: ${code}`);
  }
}

// Everything the dashboard can do against a hub; the HTTP client below is the
// production implementation, tests substitute an in-memory one.
export interface HubApi {
  listModels(): Promise<string[]>;
  getInformation(name: string): Promise<InfoResponse>;
  getStatus(name: string): Promise<StatusResponse>;
  merge(name: string, baseVersion: string, contributionIds: string[],
        policy: StalenessPolicy): Promise<ControlResponse>;
  ignore(name: string, contributionIds: string[]): Promise<ControlResponse>;
  branch(name: string, baseVersion: string): Promise<ControlResponse>;
  forkFeature(name: string, baseVersion: string, newName: string,
              newClasses: number, headSeed: number): Promise<ControlResponse>;
}

export class HttpHubApi implements HubApi {
  constructor(private baseUrl: string, private apiKey: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl.replace(/\/$/, '')}/api/v1${path}`, {
      method,
      headers: {
        'X-API-Key': this.apiKey,
        ...(body === undefined ? {} : { 'Content-Type': 'application/json' }),
      },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let code = 'internal_error';
      try {
        code = (await response.json()).error ?? code;
      } catch {
        // non-JSON error body; keep the generic code
      }
      throw new HubApiError(response.status, code);
    }
    return response.json() as Promise<T>;
  }

  async listModels(): Promise<string[]> {
    const body = await this.request<ModelListResponse>('GET', '/models');
    return body.models;
  }

  getInformation(name: string): Promise<InfoResponse> {
    return this.request('GET', `/models/${encodeURIComponent(name)}/info`);
  }

  getStatus(name: string): Promise<StatusResponse> {
    return this.request('GET', `/models/${encodeURIComponent(name)}/status`);
  }

  private control(name: string, body: Record<string, unknown>): Promise<ControlResponse> {
    return this.request('POST', `/models/${encodeURIComponent(name)}/control`, body);
  }

  merge(name: string, baseVersion: string, contributionIds: string[],
        policy: StalenessPolicy): Promise<ControlResponse> {
    return this.control(name, {
      action: 'merge',
      base_version: baseVersion,
      contribution_ids: contributionIds,
      staleness_policy: policy,
    });
  }

  ignore(name: string, contributionIds: string[]): Promise<ControlResponse> {
    return this.control(name, { action: 'ignore', contribution_ids: contributionIds });
  }

  branch(name: string, baseVersion: string): Promise<ControlResponse> {
    return this.control(name, { action: 'branch', base_version: baseVersion });
  }

  forkFeature(name: string, baseVersion: string, newName: string,
              newClasses: number, headSeed: number): Promise<ControlResponse> {
    return this.control(name, {
      action: 'fork_feature',
      base_version: baseVersion,
      new_name: newName,
      new_classes: newClasses,
      head_seed: headSeed,
    });
  }
}
