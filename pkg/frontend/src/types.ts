// Wire payload types for the hub HTTP API (prefix /api/v1).

export interface ModelListResponse {
  models: string[];
}

export interface InfoResponse {
  name: string;
  head: string;
  versions: string[];
  classes: number;
}

export interface Metrics {
  train_accuracy: number;
  train_loss: number;
}

export interface ContributionView {
  id: string;
  participant_id: string;
  base_version: string;
  sample_count: number;
  metrics: Metrics;
  status: 'pending' | 'merged' | 'ignored';
}

export interface VersionRecordView {
  model_name: string;
  version: string;
  annotation: 'created' | 'merged' | 'branched' | 'forked_all' | 'forked_feature';
  parents: [string, string][];
  created_at: string;
  arch_ref: string;
  params_ref: string;
  merged_contributions: string[];
}

export interface StatusResponse {
  name: string;
  head: string;
  pending: ContributionView[];
  contributions: ContributionView[];
  history: VersionRecordView[];
}

export interface ControlResponse {
  action: string;
  head: string;
  merged?: string[];
  ignored?: string[];
}

export type Role = 'manager' | 'participant';

export type StalenessPolicy = 'latest_only' | 'rebranch_old';

export interface DashboardConfig {
  hubUrl: string;
  apiKey: string;
  role: Role;
  pollIntervalMs: number;
}

// -- derived view models -------------------------------------------------------

export interface DagNode {
  version: string;
  annotation: VersionRecordView['annotation'];
  isHead: boolean;
  column: number; // minor: the federated round line
  row: number;    // micro: merges within the round
  mergedContributions: string[];
}

export interface DagEdge {
  from: string;        // parent version (or "model@version" for cross-model)
  to: string;
  external: boolean;   // parent lives in another model (fork lineage)
}

export interface DagView {
  model: string;
  head: string;
  nodes: DagNode[];
  edges: DagEdge[];
}

export interface PullRequestView {
  id: string;
  participant: string;
  baseVersion: string;
  sampleCount: number;
  trainAccuracy: number;
  trainLoss: number;
  stale: boolean; // base differs from the live head at build time
}

export interface SparklinePoint {
  round: number;
  accuracy: number;
}
