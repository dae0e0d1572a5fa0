import type { EllipsoidDoc, Pose, Scene } from './types.js';

export type Point = [number, number];

/**
 * Car footprint polygon for a pose. (px, py) is the rear axle; the body
 * spans rear_overhang behind it and car_length ahead of that, car_width
 * across, rotated by the heading.
 */
export function carFootprint(pose: Pose, scene: Scene): Point[] {
  const [px, py, theta] = pose;
  const cos = Math.cos(theta);
  const sin = Math.sin(theta);
  const back = -scene.rear_overhang;
  const front = back + scene.car_length;
  const half = scene.car_width / 2;
  const corners: Point[] = [
    [back, -half],
    [front, -half],
    [front, half],
    [back, half],
  ];
  return corners.map(([x, y]) => [
    px + x * cos - y * sin,
    py + x * sin + y * cos,
  ]);
}

/** Gauss-Jordan inverse for the small matrices we get from the server. */
export function invertMatrix(m: number[][]): number[][] {
  const n = m.length;
  const a = m.map((row, i) => [
    ...row,
    ...Array.from({ length: n }, (_, j) => (i === j ? 1 : 0)),
  ]);
  for (let col = 0; col < n; col++) {
    let pivot = col;
    for (let r = col + 1; r < n; r++) {
      if (Math.abs(a[r][col]) > Math.abs(a[pivot][col])) pivot = r;
    }
    if (Math.abs(a[pivot][col]) < 1e-300) {
      throw new Error('matrix is singular');
    }
    [a[col], a[pivot]] = [a[pivot], a[col]];
    const scale = a[col][col];
    for (let j = 0; j < 2 * n; j++) a[col][j] /= scale;
    for (let r = 0; r < n; r++) {
      if (r === col) continue;
      const f = a[r][col];
      for (let j = 0; j < 2 * n; j++) a[r][j] -= f * a[col][j];
    }
  }
  return a.map((row) => row.slice(n));
}

/** Eigen-decomposition of a symmetric 2x2 matrix, closed form. */
export function eigSym2(m: number[][]): { values: [number, number]; vectors: [Point, Point] } {
  const [[a, b], [, c]] = m;
  const tr = a + c;
  const det = a * c - b * b;
  const disc = Math.sqrt(Math.max(tr * tr / 4 - det, 0));
  const l1 = tr / 2 + disc;
  const l2 = tr / 2 - disc;
  let v1: Point;
  if (Math.abs(b) > 1e-12) {
    v1 = [l1 - c, b];
  } else {
    v1 = a >= c ? [1, 0] : [0, 1];
  }
  const norm = Math.hypot(v1[0], v1[1]);
  v1 = [v1[0] / norm, v1[1] / norm];
  const v2: Point = [-v1[1], v1[0]];
  return { values: [l1, l2], vectors: [v1, v2] };
}

/**
 * Boundary of the px-py slice of the 4-D target set, taken at the center's
 * heading and speed: ((p - o)' [Sigma^-1]_pp (p - o) = r^2.
 */
export function ellipseSlicePoints(doc: EllipsoidDoc, segments = 64): Point[] {
  const inv = invertMatrix(doc.sigma);
  const block = [
    [inv[0][0], inv[0][1]],
    [inv[1][0], inv[1][1]],
  ];
  const { values, vectors } = eigSym2(block);
  const [ox, oy] = doc.center;
  const pts: Point[] = [];
  for (let i = 0; i <= segments; i++) {
    const phi = (2 * Math.PI * i) / segments;
    const c1 = (doc.radius / Math.sqrt(values[0])) * Math.cos(phi);
    const c2 = (doc.radius / Math.sqrt(values[1])) * Math.sin(phi);
    pts.push([
      ox + c1 * vectors[0][0] + c2 * vectors[1][0],
      oy + c1 * vectors[0][1] + c2 * vectors[1][1],
    ]);
  }
  return pts;
}

export interface Viewport {
  scale: number;
  offsetX: number;
  offsetY: number;
}

/** Fit a world window (y up) into a canvas (y down), preserving aspect. */
export function fitViewport(
  bounds: { xmin: number; ymin: number; xmax: number; ymax: number },
  width: number,
  height: number,
  marginPx = 20,
): Viewport {
  const spanX = Math.max(bounds.xmax - bounds.xmin, 1e-6);
  const spanY = Math.max(bounds.ymax - bounds.ymin, 1e-6);
  const scale = Math.min((width - 2 * marginPx) / spanX, (height - 2 * marginPx) / spanY);
  const cx = (bounds.xmin + bounds.xmax) / 2;
  const cy = (bounds.ymin + bounds.ymax) / 2;
  return {
    scale,
    offsetX: width / 2 - cx * scale,
    offsetY: height / 2 + cy * scale,
  };
}

export function toCanvas(p: Point, vp: Viewport): Point {
  return [p[0] * vp.scale + vp.offsetX, -p[1] * vp.scale + vp.offsetY];
}

/** World window covering the scene plus everything currently drawn. */
export function contentBounds(scene: Scene, extraPoints: Point[]): {
  xmin: number;
  ymin: number;
  xmax: number;
  ymax: number;
} {
  const [xmin, ymin, xmax, ymax] = scene.parking_area;
  let bounds = { xmin, ymin, xmax, ymax };
  const pad = scene.car_length;
  for (const [x, y] of extraPoints) {
    bounds = {
      xmin: Math.min(bounds.xmin, x),
      ymin: Math.min(bounds.ymin, y),
      xmax: Math.max(bounds.xmax, x),
      ymax: Math.max(bounds.ymax, y),
    };
  }
  return {
    xmin: bounds.xmin - pad,
    ymin: bounds.ymin - pad,
    xmax: bounds.xmax + pad,
    ymax: bounds.ymax + pad,
  };
}
