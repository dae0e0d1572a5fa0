import { carFootprint, contentBounds, ellipseSlicePoints, fitViewport, toCanvas } from './geometry.js';
import type { Point } from './geometry.js';
import type { Scene, SessionView } from './types.js';

/**
 * Renders the whole scene view; a pure function of (scene, view) so the
 * same data always draws the same picture.
 */
export function drawScene(
  ctx: CanvasRenderingContext2D,
  scene: Scene,
  view: SessionView,
): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);

  const extras: Point[] = [];
  if (view.pending) extras.push([view.pending[0], view.pending[1]]);
  for (const p of view.acceptedPoints) extras.push([p[0], p[1]]);
  if (view.trajectory) for (const s of view.trajectory) extras.push([s[0], s[1]]);
  const vp = fitViewport(contentBounds(scene, extras), width, height);

  const polyline = (pts: Point[], close = false) => {
    ctx.beginPath();
    pts.forEach((p, i) => {
      const [x, y] = toCanvas(p, vp);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    if (close) ctx.closePath();
  };

  // parking area (dashed) and target marker
  const [xmin, ymin, xmax, ymax] = scene.parking_area;
  ctx.setLineDash([6, 4]);
  ctx.strokeStyle = '#888';
  ctx.lineWidth = 1.5;
  polyline([[xmin, ymin], [xmax, ymin], [xmax, ymax], [xmin, ymax]], true);
  ctx.stroke();
  ctx.setLineDash([]);

  const origin = toCanvas([0, 0], vp);
  ctx.strokeStyle = '#bbb';
  ctx.beginPath();
  ctx.moveTo(origin[0] - 6, origin[1]);
  ctx.lineTo(origin[0] + 6, origin[1]);
  ctx.moveTo(origin[0], origin[1] - 6);
  ctx.lineTo(origin[0], origin[1] + 6);
  ctx.stroke();

  // accepted samples
  ctx.fillStyle = '#2a7';
  for (const p of view.acceptedPoints) {
    const [x, y] = toCanvas([p[0], p[1]], vp);
    ctx.beginPath();
    ctx.arc(x, y, 2.5, 0, 2 * Math.PI);
    ctx.fill();
  }

  // target-set slice through px-py at the center's heading and speed
  if (view.ellipsoid) {
    ctx.strokeStyle = '#d80';
    ctx.lineWidth = 2;
    polyline(ellipseSlicePoints(view.ellipsoid), true);
    ctx.stroke();
  }

  // latest solved trajectory
  if (view.trajectory) {
    ctx.strokeStyle = '#06c';
    ctx.lineWidth = 2;
    polyline(view.trajectory.map((s) => [s[0], s[1]] as Point));
    ctx.stroke();
    const last = view.trajectory[view.trajectory.length - 1];
    const [x, y] = toCanvas([last[0], last[1]], vp);
    ctx.fillStyle = '#06c';
    ctx.beginPath();
    ctx.arc(x, y, 4, 0, 2 * Math.PI);
    ctx.fill();
  }

  // pending candidate footprint (solid)
  if (view.pending) {
    ctx.strokeStyle = '#c22';
    ctx.lineWidth = 2;
    polyline(carFootprint(view.pending, scene), true);
    ctx.stroke();
    const [hx, hy] = toCanvas([view.pending[0], view.pending[1]], vp);
    ctx.fillStyle = '#c22';
    ctx.beginPath();
    ctx.arc(hx, hy, 3, 0, 2 * Math.PI);
    ctx.fill();
  }
}

/** Iteration-vs-cost chart for the latest solve. */
export function drawCostChart(ctx: CanvasRenderingContext2D, history: number[] | null): void {
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  if (!history || history.length < 2) return;
  const margin = 28;
  const maxCost = Math.max(...history);
  const minCost = Math.min(...history);
  const span = Math.max(maxCost - minCost, 1e-12);
  const px = (i: number) => margin + ((width - 2 * margin) * i) / (history.length - 1);
  const py = (c: number) => height - margin - ((height - 2 * margin) * (c - minCost)) / span;

  ctx.strokeStyle = '#999';
  ctx.beginPath();
  ctx.moveTo(margin, margin);
  ctx.lineTo(margin, height - margin);
  ctx.lineTo(width - margin, height - margin);
  ctx.stroke();

  ctx.strokeStyle = '#06c';
  ctx.lineWidth = 2;
  ctx.beginPath();
  history.forEach((c, i) => {
    if (i === 0) ctx.moveTo(px(i), py(c));
    else ctx.lineTo(px(i), py(c));
  });
  ctx.stroke();

  ctx.fillStyle = '#333';
  ctx.font = '11px sans-serif';
  ctx.fillText(maxCost.toPrecision(4), 4, margin + 4);
  ctx.fillText(minCost.toPrecision(4), 4, height - margin);
  ctx.fillText(`iteration (${history.length - 1})`, width / 2 - 30, height - 8);
}
