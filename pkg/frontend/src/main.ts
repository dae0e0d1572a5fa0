import { ApiError, getCandidate, getDatasetCsv, getRun, getScene, pollRun, postEllipsoid, postLabel, postSolve } from './api.js';
import { drawCostChart, drawScene } from './draw.js';
import { canFetchCandidate, replayDatasetCsv, withCandidate, withEllipsoid, withLabel, withRunResult } from './state.js';
import { initialView } from './types.js';
import type { Scene, SessionView } from './types.js';

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el as T;
};

let scene: Scene;
let view: SessionView = initialView();
let busy = false;

const sceneCanvas = $<HTMLCanvasElement>('scene');
const chartCanvas = $<HTMLCanvasElement>('chart');

function render(): void {
  drawScene(sceneCanvas.getContext('2d')!, scene, view);
  drawCostChart(chartCanvas.getContext('2d')!, view.costHistory);
  $('accepted-count').textContent = String(view.counts.accepted);
  $('rejected-count').textContent = String(view.counts.rejected);
  $('message').textContent = view.message;
}

function update(next: SessionView): void {
  view = next;
  render();
}

/** Serialize mutations: one in-flight request at a time. */
async function act(fn: () => Promise<void>): Promise<void> {
  if (busy) return;
  busy = true;
  try {
    await fn();
  } catch (err) {
    if (err instanceof ApiError && err.status === 409) {
      // resynchronize with the server's view of the session
      const replay = replayDatasetCsv(await getDatasetCsv());
      update({ ...view, ...replay, message: `out of sync (${err.message}); resynced` });
    } else {
      update({ ...view, message: `error: ${(err as Error).message}` });
    }
  } finally {
    busy = false;
  }
}

const fetchCandidate = () =>
  act(async () => {
    if (!canFetchCandidate(view)) {
      update({ ...view, message: 'label the pending candidate first' });
      return;
    }
    update(withCandidate(view, await getCandidate()));
  });

const submitLabel = (accepted: boolean) =>
  act(async () => {
    if (view.pending === null) {
      update({ ...view, message: 'no pending candidate' });
      return;
    }
    const counts = await postLabel(accepted);
    update(withLabel(view, accepted, counts));
  });

const synthesize = () =>
  act(async () => {
    const alpha = Number($<HTMLInputElement>('alpha').value);
    update(withEllipsoid(view, await postEllipsoid(alpha)));
  });

const solve = () =>
  act(async () => {
    const method = $<HTMLSelectElement>('method').value as 'ets' | 'point';
    const x0 = ($<HTMLInputElement>('x0').value.split(',').map(Number));
    if (x0.length !== 4 || x0.some(Number.isNaN)) {
      update({ ...view, message: 'initial state must be four numbers' });
      return;
    }
    update({ ...view, message: `${method} solve running...` });
    const { run_id } = await postSolve(method, x0);
    const state = await pollRun(run_id, { fetchRun: getRun });
    if (state.status === 'failed') {
      update({ ...view, message: `solve failed: ${state.error}` });
      return;
    }
    if (state.status === 'done') {
      const r = state.report;
      const dM = r.terminal_mahalanobis;
      update(withRunResult(
        view,
        r.trajectory.states,
        r.comparison_history ?? r.cost_history,
        `${r.method}: ${r.iterations} iterations, cost ${r.final_cost.toFixed(4)}`
        + (dM !== undefined ? `, terminal d_M ${dM.toFixed(3)}` : '')
        + (r.converged ? '' : ' (not converged)'),
      ));
    }
  });

async function init(): Promise<void> {
  scene = await getScene();
  const replay = replayDatasetCsv(await getDatasetCsv());
  view = { ...view, ...replay };
  render();

  $('fetch').onclick = fetchCandidate;
  $('accept').onclick = () => void submitLabel(true);
  $('reject').onclick = () => void submitLabel(false);
  $('synthesize').onclick = synthesize;
  $('solve').onclick = solve;
  $('download').onclick = () => {
    window.open('/api/dataset', '_blank');
  };
  document.addEventListener('keydown', (ev) => {
    if (ev.target instanceof HTMLInputElement) return;
    if (ev.key === 'a' || ev.key === 'A') void submitLabel(true);
    if (ev.key === 'r' || ev.key === 'R') void submitLabel(false);
    if (ev.key === 'n' || ev.key === 'N') void fetchCandidate();
  });
}

void init();
