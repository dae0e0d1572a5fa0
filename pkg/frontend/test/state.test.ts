import { describe, expect, it } from 'vitest';

import { canFetchCandidate, replayDatasetCsv, withCandidate, withEllipsoid, withLabel } from '../src/state.js';
import { initialView } from '../src/types.js';
import type { Pose } from '../src/types.js';

const pose: Pose = [0.1, -0.2, 0.05, 0.0];

describe('label transitions', () => {
  it('accept increments the count and plots the point', () => {
    let view = withCandidate(initialView(), pose);
    view = withLabel(view, true, { accepted: 1, rejected: 0 });
    expect(view.counts).toEqual({ accepted: 1, rejected: 0 });
    expect(view.acceptedPoints).toEqual([pose]);
    expect(view.pending).toBeNull();
  });

  it('reject increments the count without plotting', () => {
    let view = withCandidate(initialView(), pose);
    view = withLabel(view, false, { accepted: 0, rejected: 1 });
    expect(view.counts).toEqual({ accepted: 0, rejected: 1 });
    expect(view.acceptedPoints).toEqual([]);
  });

  it('counts always come from the server response', () => {
    let view = withCandidate(initialView(), pose);
    view = withLabel(view, true, { accepted: 7, rejected: 3 });
    expect(view.counts).toEqual({ accepted: 7, rejected: 3 });
  });

  it('blocks fetching while a candidate is pending', () => {
    const view = withCandidate(initialView(), pose);
    expect(canFetchCandidate(view)).toBe(false);
    const labeled = withLabel(view, true, { accepted: 1, rejected: 0 });
    expect(canFetchCandidate(labeled)).toBe(true);
  });
});

describe('dataset replay', () => {
  const csv = [
    'px,py,theta,v,accepted,timestamp',
    '0.1,0.2,0.0,0.0,1,100.0',
    '-0.3,0.1,0.2,0.001,0,101.0',
    '0.05,-0.1,-0.1,0.0,1,102.0',
  ].join('\n');

  it('rebuilds counts and scatter from the export', () => {
    const replay = replayDatasetCsv(csv);
    expect(replay.counts).toEqual({ accepted: 2, rejected: 1 });
    expect(replay.acceptedPoints).toEqual([
      [0.1, 0.2, 0.0, 0.0],
      [0.05, -0.1, -0.1, 0.0],
    ]);
  });

  it('matches a reducer-accumulated session (UI never fabricates state)', () => {
    const poses: Array<[Pose, boolean]> = [
      [[0.1, 0.2, 0.0, 0.0], true],
      [[-0.3, 0.1, 0.2, 0.001], false],
      [[0.05, -0.1, -0.1, 0.0], true],
    ];
    let view = initialView();
    let accepted = 0;
    let rejected = 0;
    for (const [p, ok] of poses) {
      view = withCandidate(view, p);
      if (ok) accepted += 1;
      else rejected += 1;
      view = withLabel(view, ok, { accepted, rejected });
    }
    const replay = replayDatasetCsv(csv);
    expect(view.counts).toEqual(replay.counts);
    expect(view.acceptedPoints).toEqual(replay.acceptedPoints);
  });

  it('rejects an unexpected header', () => {
    expect(() => replayDatasetCsv('a,b\n1,2')).toThrow(/header/);
  });
});

describe('ellipsoid view', () => {
  it('stores the synthesized document for drawing', () => {
    const doc = { center: [0, 0, 0, 0], sigma: [[1]], radius: 3.64 };
    const view = withEllipsoid(initialView(), doc);
    expect(view.ellipsoid).toBe(doc);
    expect(view.message).toContain('3.640');
  });
});
