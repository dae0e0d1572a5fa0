import type { EllipsoidDoc, Pose, SessionCounts, SessionView } from './types.js';

/**
 * Session view transitions. Counts and points always come from server
 * responses; the reducer never invents them, so replaying the server's
 * dataset reproduces the view exactly.
 */

export function withCandidate(view: SessionView, pose: Pose): SessionView {
  return { ...view, pending: pose, message: 'accept (A) or reject (R)?' };
}

export function withLabel(
  view: SessionView,
  accepted: boolean,
  counts: SessionCounts,
): SessionView {
  if (view.pending === null) {
    return { ...view, counts, message: 'out of sync; counts refreshed' };
  }
  return {
    ...view,
    counts,
    acceptedPoints: accepted
      ? [...view.acceptedPoints, view.pending]
      : view.acceptedPoints,
    pending: null,
    message: accepted ? 'accepted' : 'rejected',
  };
}

export function withEllipsoid(view: SessionView, doc: EllipsoidDoc): SessionView {
  return { ...view, ellipsoid: doc, message: `target set synthesized, r=${doc.radius.toFixed(3)}` };
}

export function withRunResult(
  view: SessionView,
  trajectory: number[][],
  costHistory: number[],
  message: string,
): SessionView {
  return { ...view, trajectory, costHistory, message };
}

export function canFetchCandidate(view: SessionView): boolean {
  return view.pending === null;
}

/** Rebuild the accepted scatter and counts from a dataset CSV export. */
export function replayDatasetCsv(text: string): {
  counts: SessionCounts;
  acceptedPoints: Pose[];
} {
  const lines = text.trim().split('\n');
  if (lines[0] !== 'px,py,theta,v,accepted,timestamp') {
    throw new Error('unexpected dataset header');
  }
  const counts = { accepted: 0, rejected: 0 };
  const acceptedPoints: Pose[] = [];
  for (const line of lines.slice(1)) {
    if (!line) continue;
    const cells = line.split(',');
    const pose = cells.slice(0, 4).map(Number) as Pose;
    if (cells[4] === '1') {
      counts.accepted += 1;
      acceptedPoints.push(pose);
    } else {
      counts.rejected += 1;
    }
  }
  return { counts, acceptedPoints };
}
