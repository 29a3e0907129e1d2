// Hub fixture captured from a real hub run: two models where
// caltech-birds was feature-forked from fashion-mnist, with three pending
// pull requests on caltech-birds (cara's is stale). FakeHub applies the
// hub's merge/ignore/branch semantics to this data in memory.

import type {
  ControlResponse,
  InfoResponse,
  StalenessPolicy,
  StatusResponse,
} from '../src/types.js';
import { HubApi, HubApiError } from '../src/api.js';

export const FIXTURE = {
  "models": {
    "models": [
      "caltech-birds",
      "fashion-mnist"
    ]
  },
  "info": {
    "fashion-mnist": {
      "name": "fashion-mnist",
      "head": "1.2.1",
      "versions": [
        "1.0.0",
        "1.1.0",
        "1.1.1",
        "1.2.0",
        "1.2.1"
      ],
      "classes": 10
    },
    "caltech-birds": {
      "name": "caltech-birds",
      "head": "1.1.0",
      "versions": [
        "1.0.0",
        "1.1.0"
      ],
      "classes": 200
    }
  },
  "status": {
    "fashion-mnist": {
      "name": "fashion-mnist",
      "head": "1.2.1",
      "pending": [],
      "contributions": [
        {
          "id": "fashion-mnist:c000001",
          "participant_id": "alice",
          "base_version": "1.1.0",
          "sample_count": 6400,
          "metrics": {
            "train_accuracy": 0.61,
            "train_loss": 1.19
          },
          "status": "merged"
        },
        {
          "id": "fashion-mnist:c000002",
          "participant_id": "bob",
          "base_version": "1.1.0",
          "sample_count": 6400,
          "metrics": {
            "train_accuracy": 0.64,
            "train_loss": 1.16
          },
          "status": "merged"
        },
        {
          "id": "fashion-mnist:c000003",
          "participant_id": "alice",
          "base_version": "1.2.0",
          "sample_count": 6400,
          "metrics": {
            "train_accuracy": 0.72,
            "train_loss": 1.08
          },
          "status": "merged"
        },
        {
          "id": "fashion-mnist:c000004",
          "participant_id": "bob",
          "base_version": "1.2.0",
          "sample_count": 6400,
          "metrics": {
            "train_accuracy": 0.7,
            "train_loss": 1.1
          },
          "status": "merged"
        }
      ],
      "history": [
        {
          "model_name": "fashion-mnist",
          "version": "1.0.0",
          "annotation": "created",
          "parents": [],
          "created_at": "2026-08-10T21:42:20.308034Z",
          "arch_ref": "b03278710363f03d5db579aced70b794d2176fd20e9db24be4bfc9831ec7ea54",
          "params_ref": "92c844e5aedfac54ef176b746db978cd4ea3255c782733f87e57e1e0fe53ca3e",
          "merged_contributions": []
        },
        {
          "model_name": "fashion-mnist",
          "version": "1.1.0",
          "annotation": "branched",
          "parents": [
            [
              "fashion-mnist",
              "1.0.0"
            ]
          ],
          "created_at": "2026-08-10T21:42:20.315313Z",
          "arch_ref": "b03278710363f03d5db579aced70b794d2176fd20e9db24be4bfc9831ec7ea54",
          "params_ref": "92c844e5aedfac54ef176b746db978cd4ea3255c782733f87e57e1e0fe53ca3e",
          "merged_contributions": []
        },
        {
          "model_name": "fashion-mnist",
          "version": "1.1.1",
          "annotation": "merged",
          "parents": [
            [
              "fashion-mnist",
              "1.1.0"
            ]
          ],
          "created_at": "2026-08-10T21:42:20.340423Z",
          "arch_ref": "b03278710363f03d5db579aced70b794d2176fd20e9db24be4bfc9831ec7ea54",
          "params_ref": "845407ec0706dfe82018d0704ac04bbdcd3b9663cb476d1304e2440678a6ea03",
          "merged_contributions": [
            "fashion-mnist:c000001",
            "fashion-mnist:c000002"
          ]
        },
        {
          "model_name": "fashion-mnist",
          "version": "1.2.0",
          "annotation": "branched",
          "parents": [
            [
              "fashion-mnist",
              "1.1.1"
            ]
          ],
          "created_at": "2026-08-10T21:42:20.346011Z",
          "arch_ref": "b03278710363f03d5db579aced70b794d2176fd20e9db24be4bfc9831ec7ea54",
          "params_ref": "845407ec0706dfe82018d0704ac04bbdcd3b9663cb476d1304e2440678a6ea03",
          "merged_contributions": []
        },
        {
          "model_name": "fashion-mnist",
          "version": "1.2.1",
          "annotation": "merged",
          "parents": [
            [
              "fashion-mnist",
              "1.2.0"
            ]
          ],
          "created_at": "2026-08-10T21:42:20.377911Z",
          "arch_ref": "b03278710363f03d5db579aced70b794d2176fd20e9db24be4bfc9831ec7ea54",
          "params_ref": "88a96fb321e8802a5513eeffc5f94ab22e082eac183cbd6642fea3989ff9472b",
          "merged_contributions": [
            "fashion-mnist:c000003",
            "fashion-mnist:c000004"
          ]
        }
      ]
    },
    "caltech-birds": {
      "name": "caltech-birds",
      "head": "1.1.0",
      "pending": [
        {
          "id": "caltech-birds:c000001",
          "participant_id": "cara",
          "base_version": "1.0.0",
          "sample_count": 3200,
          "metrics": {
            "train_accuracy": 0.31,
            "train_loss": 2.9
          },
          "status": "pending"
        },
        {
          "id": "caltech-birds:c000002",
          "participant_id": "alice",
          "base_version": "1.1.0",
          "sample_count": 3200,
          "metrics": {
            "train_accuracy": 0.42,
            "train_loss": 2.78
          },
          "status": "pending"
        },
        {
          "id": "caltech-birds:c000003",
          "participant_id": "bob",
          "base_version": "1.1.0",
          "sample_count": 3200,
          "metrics": {
            "train_accuracy": 0.39,
            "train_loss": 2.81
          },
          "status": "pending"
        }
      ],
      "contributions": [
        {
          "id": "caltech-birds:c000001",
          "participant_id": "cara",
          "base_version": "1.0.0",
          "sample_count": 3200,
          "metrics": {
            "train_accuracy": 0.31,
            "train_loss": 2.9
          },
          "status": "pending"
        },
        {
          "id": "caltech-birds:c000002",
          "participant_id": "alice",
          "base_version": "1.1.0",
          "sample_count": 3200,
          "metrics": {
            "train_accuracy": 0.42,
            "train_loss": 2.78
          },
          "status": "pending"
        },
        {
          "id": "caltech-birds:c000003",
          "participant_id": "bob",
          "base_version": "1.1.0",
          "sample_count": 3200,
          "metrics": {
            "train_accuracy": 0.39,
            "train_loss": 2.81
          },
          "status": "pending"
        }
      ],
      "history": [
        {
          "model_name": "caltech-birds",
          "version": "1.0.0",
          "annotation": "forked_feature",
          "parents": [
            [
              "fashion-mnist",
              "1.2.1"
            ]
          ],
          "created_at": "2026-08-10T21:42:20.386423Z",
          "arch_ref": "3c7dbf61a81c7478b77066705a532ce4292ce5b4ee611d2d0adbc9cad84466e9",
          "params_ref": "1a0f9482def81cde6be60e7f85c91592bf62da23e3009ace2624cc0f187f31b4",
          "merged_contributions": []
        },
        {
          "model_name": "caltech-birds",
          "version": "1.1.0",
          "annotation": "branched",
          "parents": [
            [
              "caltech-birds",
              "1.0.0"
            ]
          ],
          "created_at": "2026-08-10T21:42:20.402210Z",
          "arch_ref": "3c7dbf61a81c7478b77066705a532ce4292ce5b4ee611d2d0adbc9cad84466e9",
          "params_ref": "1a0f9482def81cde6be60e7f85c91592bf62da23e3009ace2624cc0f187f31b4",
          "merged_contributions": []
        }
      ]
    }
  }
};

export class FakeHub implements HubApi {
  statuses: Map<string, StatusResponse>;
  infos: Map<string, InfoResponse>;
  controlCalls = 0;

  constructor() {
    this.statuses = new Map(Object.entries(JSON.parse(JSON.stringify(FIXTURE.status))));
    this.infos = new Map(Object.entries(JSON.parse(JSON.stringify(FIXTURE.info))));
  }

  async listModels(): Promise<string[]> {
    return [...this.statuses.keys()].sort();
  }

  async getInformation(name: string): Promise<InfoResponse> {
    const info = this.infos.get(name);
    if (!info) throw new HubApiError(404, 'model_not_found');
    return JSON.parse(JSON.stringify(info));
  }

  async getStatus(name: string): Promise<StatusResponse> {
    const status = this.statuses.get(name);
    if (!status) throw new HubApiError(404, 'model_not_found');
    return JSON.parse(JSON.stringify(status));
  }

  private parse(v: string): [number, number, number] {
    return v.split('.').map(Number) as [number, number, number];
  }

  private bumpInfo(name: string): void {
    const status = this.statuses.get(name)!;
    const info = this.infos.get(name)!;
    info.head = status.head;
    info.versions = status.history.map((r) => r.version);
  }

  async merge(name: string, baseVersion: string, ids: string[],
              policy: StalenessPolicy): Promise<ControlResponse> {
    this.controlCalls += 1;
    const status = this.statuses.get(name);
    if (!status) throw new HubApiError(404, 'model_not_found');
    if (baseVersion !== status.head) throw new HubApiError(409, 'stale_base');
    for (const id of ids) {
      const c = status.contributions.find((x) => x.id === id);
      if (!c || c.status !== 'pending') throw new HubApiError(409, 'contribution_not_pending');
    }
    const [major, minor, micro] = this.parse(status.head);
    const head = `${major}.${minor}.${micro + 1}`;
    status.history.push({
      model_name: name, version: head, annotation: 'merged',
      parents: [[name, status.head]], created_at: new Date().toISOString(),
      arch_ref: 'fake', params_ref: 'fake', merged_contributions: [...ids].sort(),
    });
    for (const c of status.contributions) {
      if (ids.includes(c.id)) c.status = 'merged';
      else if (policy === 'latest_only' && c.status === 'pending'
               && c.base_version !== status.head) c.status = 'ignored';
    }
    status.head = head;
    status.pending = status.contributions.filter((c) => c.status === 'pending');
    this.bumpInfo(name);
    return { action: 'merge', head };
  }

  async ignore(name: string, ids: string[]): Promise<ControlResponse> {
    this.controlCalls += 1;
    const status = this.statuses.get(name)!;
    for (const c of status.contributions) {
      if (ids.includes(c.id)) c.status = 'ignored';
    }
    status.pending = status.contributions.filter((c) => c.status === 'pending');
    return { action: 'ignore', head: status.head, ignored: [...ids].sort() };
  }

  async branch(name: string, baseVersion: string): Promise<ControlResponse> {
    this.controlCalls += 1;
    const status = this.statuses.get(name)!;
    const [major] = this.parse(baseVersion);
    const maxMinor = Math.max(...status.history.map((r) => this.parse(r.version)[1]));
    const head = `${major}.${maxMinor + 1}.0`;
    status.history.push({
      model_name: name, version: head, annotation: 'branched',
      parents: [[name, baseVersion]], created_at: new Date().toISOString(),
      arch_ref: 'fake', params_ref: 'fake', merged_contributions: [],
    });
    status.head = head;
    this.bumpInfo(name);
    return { action: 'branch', head };
  }

  async forkFeature(): Promise<ControlResponse> {
    this.controlCalls += 1;
    throw new HubApiError(422, 'invalid_arguments');
  }
}
