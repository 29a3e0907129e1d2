import type { DashboardConfig, Role } from './types.js';

const STORAGE_KEY = 'fedhub-dashboard-config';

export const DEFAULT_CONFIG: DashboardConfig = {
  hubUrl: 'http://127.0.0.1:8377',
  apiKey: '',
  role: 'participant',
  pollIntervalMs: 2000,
};

export function loadConfig(storage: Pick<Storage, 'getItem'> = localStorage): DashboardConfig {
  const raw = storage.getItem(STORAGE_KEY);
  if (!raw) return { ...DEFAULT_CONFIG };
  try {
    const parsed = JSON.parse(raw);
    const role: Role = parsed.role === 'manager' ? 'manager' : 'participant';
    return {
      hubUrl: typeof parsed.hubUrl === 'string' ? parsed.hubUrl : DEFAULT_CONFIG.hubUrl,
      apiKey: typeof parsed.apiKey === 'string' ? parsed.apiKey : '',
      role,
      pollIntervalMs: Number.isFinite(parsed.pollIntervalMs) && parsed.pollIntervalMs >= 250
        ? parsed.pollIntervalMs
        : DEFAULT_CONFIG.pollIntervalMs,
    };
  } catch {
    return { ...DEFAULT_CONFIG };
  }
}

export function saveConfig(config: DashboardConfig,
                           storage: Pick<Storage, 'setItem'> = localStorage): void {
  storage.setItem(STORAGE_KEY, JSON.stringify(config));
}
