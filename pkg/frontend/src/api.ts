import type { EllipsoidDoc, Pose, RunState, Scene, SessionCounts } from './types.js';

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, init);
  const body = await res.json().catch(() => ({}));
  if (!res.ok) {
    throw new ApiError(res.status, (body as { error?: string }).error ?? `HTTP ${res.status}`);
  }
  return body as T;
}

const post = (payload: unknown): RequestInit => ({
  method: 'POST',
  headers: { 'Content-Type': 'application/json' },
  body: JSON.stringify(payload),
});

export const getScene = () => request<Scene>('/api/scene');

export const getCandidate = async (): Promise<Pose> => {
  const body = await request<{ candidate: number[] }>('/api/candidate');
  return body.candidate as Pose;
};

export const postLabel = (accepted: boolean) =>
  request<SessionCounts>('/api/label', post({ accepted }));

export const getDatasetCsv = async (): Promise<string> => {
  const res = await fetch('/api/dataset');
  if (!res.ok) throw new ApiError(res.status, 'dataset download failed');
  return res.text();
};

export const postEllipsoid = (alpha: number) =>
  request<EllipsoidDoc>('/api/ellipsoid', post({ alpha }));

export const postSolve = (method: 'ets' | 'point', initialState: number[]) =>
  request<{ run_id: string }>('/api/solve', post({ method, initial_state: initialState }));

export const getRun = (runId: string) => request<RunState>(`/api/run/${runId}`);

/** Poll a run id until it leaves the running state. */
export async function pollRun(
  runId: string,
  opts: { intervalMs?: number; timeoutMs?: number; fetchRun?: typeof getRun } = {},
): Promise<RunState> {
  const { intervalMs = 250, timeoutMs = 120_000, fetchRun = getRun } = opts;
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const state = await fetchRun(runId);
    if (state.status !== 'running') return state;
    if (Date.now() > deadline) throw new Error(`run ${runId} timed out`);
    await new Promise((resolve) => setTimeout(resolve, intervalMs));
  }
}
